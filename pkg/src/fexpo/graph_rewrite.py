"""Constructive rewrites of weighted-graph functionals.

Each rewrite maps a functional family, tracked only through ``(alpha, G,
T-set)``, to a finite family of new ones. The random weight families are not
evaluated; each produced item carries a short provenance string instead.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Iterable, Iterator, Mapping

from . import exponent_calc as ec
from . import graph_core as gc
from .errors import (
    AssumptionViolated,
    ComponentHasNoWeight,
    TaxonomyMismatch,
    TSetInvalid,
    ValidationError,
    WeightUnderflow,
)
from .graph_core import Taxonomy, WeightedGraph

TWO_H_MINUS_3_2 = ec.affine(Fraction(-3, 2), 2)
TWO_H_MINUS_1_2 = ec.affine(Fraction(-1, 2), 2)


@dataclass(frozen=True)
class GraphSumSpec:
    alpha: ec.Expr
    graph: WeightedGraph
    t_set: frozenset = frozenset()
    taxonomy: Taxonomy = Taxonomy.FIRST
    multiplicity: int = field(default=1, compare=False)
    provenance: str = field(default="", compare=False)

    def __post_init__(self):
        object.__setattr__(self, "alpha", ec.as_expr(self.alpha))
        object.__setattr__(self, "t_set", frozenset(frozenset(t) for t in self.t_set))
        if self.taxonomy is Taxonomy.FIRST:
            if self.t_set:
                raise TSetInvalid("the first taxonomy carries no T-set")
        else:
            if not gc.satisfies_assumption_graph(self.graph):
                raise AssumptionViolated("graph violates the structural assumption")
            ec.validate_t_set(self.graph, self.t_set)

    def exponent(self) -> ec.Expr:
        if self.taxonomy is Taxonomy.FIRST:
            return ec.first_exponent(self.alpha, self.graph)
        return ec.second_exponent(self.alpha, self.graph, self.t_set)


@dataclass(frozen=True)
class RewriteFamily:
    items: tuple[GraphSumSpec, ...]
    max_exponent: ec.Expr
    predicted: ec.Expr
    case_tag: str

    def law_holds(self) -> bool:
        return self.max_exponent.equals(self.predicted)


def _family_max(items: Iterable[GraphSumSpec]) -> ec.Expr:
    return ec.simplify(ec.Max(tuple(it.exponent() for it in items)))


def _fresh(g: WeightedGraph) -> int:
    return max(g.vertices) + 1


def _attach(c: WeightedGraph, v: int, fresh: int) -> WeightedGraph:
    """``[[v, fresh]]_1 (c v C0)`` with ``C0`` the fresh singleton of weight 2."""
    return gc.join(gc.vee([c, gc.singleton(fresh, 2)]), v, fresh, 1)


def _replace(g: WeightedGraph, old: WeightedGraph, new: WeightedGraph) -> WeightedGraph:
    others = [c for c in gc.components(g) if c.id != old.id]
    return gc.vee([new] + others)


def du_rewrite_first(spec: GraphSumSpec) -> RewriteFamily:
    """Directional-derivative rewrite under the first exponent."""
    if spec.taxonomy is not Taxonomy.FIRST:
        raise TaxonomyMismatch("du_rewrite_first needs a first-taxonomy GraphSumSpec")
    g = spec.graph
    m1 = _fresh(g)
    items = [GraphSumSpec(spec.alpha + TWO_H_MINUS_3_2, gc.vee([g, gc.singleton(m1, 1)]),
                          provenance="derivative of weight")]
    for v, w in g.q.items():
        if w == 0:
            continue
        cv = gc.component_of(g, v)
        items.append(GraphSumSpec(spec.alpha + TWO_H_MINUS_1_2, _replace(g, cv, _attach(cv, v, m1)),
                                  multiplicity=w, provenance=f"derivative of I_q at vertex {v}"))
    has_pe1 = any(gc.classify(c).tag is gc.Tag.C2plus_posEven_max1 for c in gc.components(g))
    e = spec.exponent()
    predicted = e if has_pe1 else e + TWO_H_MINUS_3_2
    return RewriteFamily(tuple(items), _family_max(items), predicted, "B" if has_pe1 else "A")


def du_rewrite_second(spec: GraphSumSpec) -> RewriteFamily:
    """Directional-derivative rewrite under the second exponent."""
    if spec.taxonomy is not Taxonomy.SECOND:
        raise TaxonomyMismatch("du_rewrite_second needs a second-taxonomy GraphSumSpec")
    g, ts = spec.graph, spec.t_set
    m1 = _fresh(g)
    alpha1 = spec.alpha + TWO_H_MINUS_1_2

    def item(graph, t_set, prov):
        return GraphSumSpec(alpha1, graph, t_set, Taxonomy.SECOND, provenance=prov)

    items = [GraphSumSpec(spec.alpha + TWO_H_MINUS_3_2, gc.vee([g, gc.singleton(m1, 1)]), ts,
                          Taxonomy.SECOND, provenance="derivative of weight")]
    ii_sizes = []
    for c in gc.components(g):
        st = gc.stats(c)
        if st.s == 1:
            (v,) = [u for u, w in c.q.items() if w == 1]
            items.append(item(_replace(g, c, _attach(c, v, m1)), ts, f"s=1 component at vertex {v}"))
        elif st.s == 2 and st.q_bar == 2:
            if st.I == 1:
                ends = (c.vertices[0], c.vertices[0])
                new_ts = ts
                ii_sizes.append(1)
            else:
                ends = gc.path_ends(c)
                new_ts = ts - {c.id} if c.id in ts else ts
                if c.id in ts:
                    ii_sizes.append(st.I)
            for k, v in enumerate(ends, 1):
                items.append(item(_replace(g, c, _attach(c, v, m1)), new_ts,
                                  f"two-weight component, end {k} (vertex {v})"))
    e2 = spec.exponent()
    if ii_sizes:
        predicted = e2 + ec.delta_H(min(ii_sizes))
        tag = "B"
    else:
        predicted = e2 + TWO_H_MINUS_3_2
        tag = "A"
    return RewriteFamily(tuple(items), _family_max(items), predicted, tag)


def derivative_norm_graph(spec: GraphSumSpec, lam: Mapping[int, int]) -> GraphSumSpec:
    """Doubled graph describing the squared norm of a higher derivative.

    ``lam[v]`` derivatives act on the multiple integral at ``v``; the two copies
    are glued by ``lam[v]`` edges between ``v`` and its shifted twin.
    """
    g = spec.graph
    for v, l in lam.items():
        if v not in g.q:
            raise ValidationError(f"lambda references missing vertex {v}")
        if l < 0 or l > g.q[v]:
            raise WeightUnderflow(f"lambda({v})={l} exceeds q({v})={g.q[v]}")
    k = max(g.vertices) - min(g.vertices) + 1
    parts, t_new = [], set()
    for c in gc.components(g):
        twin = gc.shift(c, k)
        tau = {(v, v + k): lam.get(v, 0) for v in c.vertices if lam.get(v, 0)}
        parts.append(gc.edge_augment(gc.vee([c, twin]), tau) if tau else gc.vee([c, twin]))
        if not tau and c.id in spec.t_set:
            t_new |= {c.id, twin.id}
    return GraphSumSpec(2 * spec.alpha, gc.vee(parts), frozenset(t_new), spec.taxonomy,
                        provenance=f"norm of derivative with lambda={dict(sorted(lam.items()))}")


def derivative_norm_law(spec: GraphSumSpec, lam: Mapping[int, int]) -> bool:
    out = derivative_norm_graph(spec, lam)
    return out.exponent().le(2 * spec.exponent())


# -- chaos products ----------------------------------------------------------

@dataclass(frozen=True)
class ContractionTerm:
    pi: dict
    constant: int
    residual_orders: dict

    def pi_bar(self) -> int:
        return sum(self.pi.values())


def _contractions(vertices: list[int], cap: dict[int, int]) -> Iterator[dict]:
    pairs = list(combinations(vertices, 2))

    def rec(i: int, cur: dict, left: dict):
        if i == len(pairs):
            yield dict(cur)
            return
        a, b = pairs[i]
        for r in range(min(left[a], left[b]) + 1):
            if r:
                cur[(a, b)] = r
            left[a] -= r
            left[b] -= r
            yield from rec(i + 1, cur, left)
            left[a] += r
            left[b] += r
            cur.pop((a, b), None)

    yield from rec(0, {}, dict(cap))


def chaos_product_expand(q_weights: Mapping[int, int]) -> list[ContractionTerm]:
    """All contraction patterns of ``prod_v I_{q_v}(f_v^{(x) q_v})``.

    The constant counts the slot matchings realising a pattern ``pi``:
    ``prod_v q_v! / ((q_v - pi_v)! prod_e pi_e!)``.
    """
    if not q_weights:
        raise ValidationError("at least one vertex is required")
    vs = sorted(q_weights)
    out = []
    for pi in _contractions(vs, dict(q_weights)):
        used = {v: 0 for v in vs}
        for (a, b), r in pi.items():
            used[a] += r
            used[b] += r
        num = math.prod(math.factorial(q_weights[v]) for v in vs)
        den = math.prod(math.factorial(q_weights[v] - used[v]) for v in vs)
        den *= math.prod(math.factorial(r) for r in pi.values())
        out.append(ContractionTerm(pi, num // den, {v: q_weights[v] - used[v] for v in vs}))
    return out


def contraction_expectation(q_weights: Mapping[int, int], gram) -> float:
    """Expectation of the product via the contraction expansion.

    Only fully contracted terms survive, since multiple integrals of positive
    order are centred. ``gram`` is indexed by position in ``sorted(q_weights)``.
    """
    vs = sorted(q_weights)
    pos = {v: i for i, v in enumerate(vs)}
    total = 0.0
    for term in chaos_product_expand(q_weights):
        if any(term.residual_orders.values()):
            continue
        val = float(term.constant)
        for (a, b), r in term.pi.items():
            val *= float(gram[pos[a]][pos[b]]) ** r
        total += val
    return total


# -- integration by parts -----------------------------------------------------

def _pair_maps(vertices: list[int], cap: dict[int, int]) -> Iterator[dict]:
    for pi in _contractions(vertices, cap):
        yield {gc.pair(a, b): r for (a, b), r in pi.items()}


def _distributions(sources: list[int], need: dict[int, int], targets: list[int],
                   cap: dict[int, int]) -> Iterator[dict]:
    """Maps ``i(v, t)`` with row sums ``need[v]``; target 0 is unbounded."""
    slots = [0] + targets

    def compositions(total: int, k: int) -> Iterator[tuple[int, ...]]:
        if k == 1:
            yield (total,)
            return
        for first in range(total + 1):
            for rest in compositions(total - first, k - 1):
                yield (first,) + rest

    def rec(idx: int, cur: dict, left: dict):
        if idx == len(sources):
            yield dict(cur)
            return
        v = sources[idx]
        for comp in compositions(need[v], len(slots)):
            if any(comp[j + 1] > left[t] for j, t in enumerate(targets)):
                continue
            for j, t in enumerate(targets):
                left[t] -= comp[j + 1]
            row = {(v, t): x for t, x in zip(slots, comp) if x}
            cur.update(row)
            yield from rec(idx + 1, cur, left)
            for key in row:
                del cur[key]
            for j, t in enumerate(targets):
                left[t] += comp[j + 1]

    yield from rec(0, {}, dict(cap))


def ibp_reduce(spec: GraphSumSpec, target: Iterable[int]) -> list[GraphSumSpec]:
    """Duality step removing all vertex weight from one component.

    For each contraction ``pi`` inside the target component and each way ``i``
    of sending the remaining weight to the weight family (slot 0) or to
    vertices of other weighted components, the new component is
    ``[[tau]](<sigma>([[pi]] C1) v (v C_B))`` and alpha drops by ``i_0``.
    """
    if spec.taxonomy is not Taxonomy.FIRST:
        raise TaxonomyMismatch("ibp_reduce works with the first exponent")
    g = spec.graph
    tid = frozenset(target)
    comps = gc.components(g)
    try:
        c1 = next(c for c in comps if c.id == tid)
    except StopIteration:
        raise ValidationError(f"{sorted(tid)} is not a component") from None
    if gc.stats(c1).q_bar == 0:
        raise ComponentHasNoWeight(f"component {sorted(tid)} has no vertex weight")
    weighted = [c for c in comps if c.id != tid and gc.stats(c).q_bar > 0]
    others_q = {v: w for c in weighted for v, w in c.q.items() if w > 0}
    v1 = list(c1.vertices)
    q1 = c1.q
    out = []
    for pi in _pair_maps(v1, q1):
        c_pi = gc.edge_augment(c1, pi)
        need = c_pi.q
        for i in _distributions(v1, need, sorted(others_q), others_q):
            sigma = {v: -x for (v, t), x in i.items() if t == 0}
            i0 = -sum(sigma.values())
            hit = {t for (v, t) in i if t != 0}
            bound = [c for c in weighted if c.id & hit]
            core = gc.vee([gc.vertex_contract(c_pi, sigma)] + bound)
            tau = {gc.pair(v, t): x for (v, t), x in i.items() if t != 0}
            new_c = gc.edge_augment(core, tau)
            rest = [c for c in comps if c.id != tid and c not in bound]
            out.append(GraphSumSpec(spec.alpha - i0, gc.vee([new_c] + rest),
                                    provenance=f"pi={pi} i={i}"))
    return out


def ibp_reduce_fully(spec: GraphSumSpec, limit: int = 100_000) -> list[GraphSumSpec]:
    """Apply ``ibp_reduce`` until no weighted component remains."""
    done, todo = [], [spec]
    while todo:
        cur = todo.pop()
        weighted = [c for c in gc.components(cur.graph) if gc.stats(c).q_bar > 0]
        if not weighted:
            done.append(cur)
            continue
        todo.extend(ibp_reduce(cur, weighted[0].id))
        if len(done) + len(todo) > limit:
            raise ValidationError("reduction tree exceeds the configured limit")
    return done


def total_weight(g: WeightedGraph) -> int:
    return sum(g.q.values())
