"""Edge- and vertex-weighted graphs with integer labels.

A graph ``G = (V, theta, q)`` carries a nonnegative integer weight ``q(v)`` on
each vertex and a symmetric nonnegative integer weight ``theta([v, v'])`` on
each unordered pair of distinct vertices. Only positive edge weights are
stored. Graphs are immutable; every operation returns a new graph.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping

from .errors import (
    ComponentRequired,
    DisjointnessViolated,
    GraphSyntaxError,
    ValidationError,
    WeightUnderflow,
)

Pair = tuple[int, int]


def pair(u: int, v: int) -> Pair:
    """Canonical key of the unordered pair ``[u, v]``."""
    if u == v:
        raise ValidationError(f"self-loop on vertex {u}")
    return (u, v) if u < v else (v, u)


class WeightedGraph:
    """Immutable weighted graph; equality and hashing are by value."""

    __slots__ = ("_q", "_theta", "_hash")

    def __init__(self, q: Mapping[int, int], theta: Mapping[Pair, int] | None = None):
        if not q:
            raise ValidationError("vertex set must be nonempty")
        qd: dict[int, int] = {}
        for v, w in q.items():
            if not isinstance(v, int) or isinstance(v, bool):
                raise ValidationError(f"vertex label {v!r} is not an integer")
            if int(w) != w or w < 0:
                raise ValidationError(f"vertex weight q({v})={w} must be a nonnegative integer")
            qd[v] = int(w)
        td: dict[Pair, int] = {}
        for (u, v), w in (theta or {}).items():
            key = pair(u, v)
            if u not in qd or v not in qd:
                raise ValidationError(f"edge {key} references a missing vertex")
            if int(w) != w or w < 0:
                raise ValidationError(f"edge weight theta{key}={w} must be a nonnegative integer")
            if w:
                td[key] = td.get(key, 0) + int(w)
        self._q = tuple(sorted(qd.items()))
        self._theta = tuple(sorted(td.items()))
        self._hash = hash((self._q, self._theta))

    # -- accessors -------------------------------------------------------
    @property
    def vertices(self) -> tuple[int, ...]:
        return tuple(v for v, _ in self._q)

    @property
    def q(self) -> dict[int, int]:
        return dict(self._q)

    @property
    def theta(self) -> dict[Pair, int]:
        return dict(self._theta)

    def weight(self, v: int) -> int:
        return dict(self._q)[v]

    def edge(self, u: int, v: int) -> int:
        return dict(self._theta).get(pair(u, v), 0)

    def __len__(self) -> int:
        return len(self._q)

    def __iter__(self) -> Iterator[int]:
        return iter(self.vertices)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, WeightedGraph):
            return NotImplemented
        return self._q == other._q and self._theta == other._theta

    def __hash__(self) -> int:
        return self._hash

    def __repr__(self) -> str:
        q = ", ".join(f"{v}:{w}" for v, w in self._q)
        t = ", ".join(f"{a}-{b}:{w}" for (a, b), w in self._theta)
        return f"WeightedGraph(q={{{q}}}, theta={{{t}}})"

    @property
    def id(self) -> frozenset[int]:
        """Vertex set; identifies a component inside a larger graph."""
        return frozenset(self.vertices)

    def restrict(self, vertices: Iterable[int]) -> "WeightedGraph":
        vs = set(vertices)
        q = {v: w for v, w in self._q if v in vs}
        theta = {e: w for e, w in self._theta if e[0] in vs and e[1] in vs}
        return WeightedGraph(q, theta)

    def neighbours(self, v: int) -> list[int]:
        out = []
        for (a, b), _ in self._theta:
            if a == v:
                out.append(b)
            elif b == v:
                out.append(a)
        return out


def singleton(label: int, q: int = 0) -> WeightedGraph:
    return WeightedGraph({label: q})


def path_graph(labels: list[int], end_weights: bool = True) -> WeightedGraph:
    """Simple path ``v1 - v2 - ... - vm`` with theta 1; ends carry q=1 if requested."""
    q = {v: 0 for v in labels}
    if end_weights:
        q[labels[0]] = 1
        q[labels[-1]] = 1
    theta = {pair(a, b): 1 for a, b in zip(labels, labels[1:])}
    return WeightedGraph(q, theta)


def cycle_graph(labels: list[int]) -> WeightedGraph:
    """Cycle graph on the given labels (two vertices joined by theta 2 when m=2)."""
    if len(labels) == 2:
        return WeightedGraph({v: 0 for v in labels}, {pair(*labels): 2})
    theta = {pair(a, b): 1 for a, b in zip(labels, labels[1:] + labels[:1])}
    return WeightedGraph({v: 0 for v in labels}, theta)


# -- structure -------------------------------------------------------------

def components(g: WeightedGraph) -> list[WeightedGraph]:
    """Connected components induced by the positive-weight edges, ordered by min label."""
    parent = {v: v for v in g.vertices}

    def find(v: int) -> int:
        while parent[v] != v:
            parent[v] = parent[parent[v]]
            v = parent[v]
        return v

    for a, b in g.theta:
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)
    groups: dict[int, list[int]] = {}
    for v in g.vertices:
        groups.setdefault(find(v), []).append(v)
    return [g.restrict(vs) for _, vs in sorted(groups.items())]


def is_connected(g: WeightedGraph) -> bool:
    return len(components(g)) == 1


@dataclass(frozen=True)
class ComponentStats:
    I: int
    theta_bar: int
    q_bar: int
    s: int


def stats(c: WeightedGraph) -> ComponentStats:
    if not is_connected(c):
        raise ComponentRequired("stats requires a connected graph")
    I = len(c)
    theta_bar = sum(c.theta.values())
    q_bar = sum(c.q.values())
    return ComponentStats(I, theta_bar, q_bar, 2 * (theta_bar - (I - 1)) + q_bar)


def vee(gs: Iterable[WeightedGraph]) -> WeightedGraph:
    """Disjoint union; cross-family edge weights are zero."""
    q: dict[int, int] = {}
    theta: dict[Pair, int] = {}
    for g in gs:
        for v, w in g.q.items():
            if v in q:
                raise DisjointnessViolated(f"vertex {v} appears in more than one graph")
            q[v] = w
        theta.update(g.theta)
    return WeightedGraph(q, theta)


def shift(g: WeightedGraph, k: int) -> WeightedGraph:
    return WeightedGraph(
        {v + k: w for v, w in g.q.items()},
        {(a + k, b + k): w for (a, b), w in g.theta.items()},
    )


def vertex_contract(g: WeightedGraph, sigma: Mapping[int, int]) -> WeightedGraph:
    """Apply ``q(v) -> q(v) + sigma(v)`` with ``sigma <= 0``."""
    q = g.q
    for v, d in sigma.items():
        if v not in q:
            raise ValidationError(f"sigma references missing vertex {v}")
        if d > 0:
            raise ValidationError(f"sigma({v})={d} must be nonpositive")
        if q[v] + d < 0:
            raise WeightUnderflow(f"q({v})={q[v]} cannot absorb sigma={d}")
        q[v] += d
    return WeightedGraph(q, g.theta)


def edge_augment(g: WeightedGraph, tau: Mapping[Pair, int]) -> WeightedGraph:
    """Apply ``theta += tau`` and ``q(v) -= sum_{v'} tau([v, v'])``."""
    q = g.q
    theta = g.theta
    for (a, b), t in tau.items():
        key = pair(a, b)
        if a not in q or b not in q:
            raise ValidationError(f"tau references missing pair {key}")
        if t < 0:
            raise ValidationError(f"tau{key}={t} must be nonnegative")
        if not t:
            continue
        theta[key] = theta.get(key, 0) + t
        q[a] -= t
        q[b] -= t
    for v, w in q.items():
        if w < 0:
            raise WeightUnderflow(f"vertex {v} weight would become {w}")
    return WeightedGraph(q, theta)


def join(g: WeightedGraph, u: int, v: int, t: int = 1) -> WeightedGraph:
    """Shorthand for ``edge_augment(g, {[u, v]: t})``."""
    return edge_augment(g, {pair(u, v): t})


# -- shapes and taxonomy ---------------------------------------------------

def path_order(c: WeightedGraph) -> list[int] | None:
    """Vertex order ``v1..vm`` if ``c`` is a simple path with unit edges, else None."""
    theta = c.theta
    m = len(c)
    if m < 2 or len(theta) != m - 1 or any(w != 1 for w in theta.values()):
        return None
    deg = {v: len(c.neighbours(v)) for v in c.vertices}
    ends = sorted(v for v, d in deg.items() if d == 1)
    if len(ends) != 2 or any(d > 2 for d in deg.values()):
        return None
    order = [ends[0]]
    prev = None
    while len(order) < m:
        nxt = [w for w in c.neighbours(order[-1]) if w != prev]
        if len(nxt) != 1:
            return None
        prev = order[-1]
        order.append(nxt[0])
    return order


def is_cycle_graph(c: WeightedGraph) -> bool:
    if any(c.q.values()):
        return False
    theta = c.theta
    m = len(c)
    if m == 2:
        return list(theta.values()) == [2]
    if m < 3 or len(theta) != m or any(w != 1 for w in theta.values()):
        return False
    if any(len(c.neighbours(v)) != 2 for v in c.vertices):
        return False
    return is_connected(c)


def is_path_weighted_ends(c: WeightedGraph) -> bool:
    order = path_order(c)
    if order is None:
        return False
    q = c.q
    return q[order[0]] == 1 and q[order[-1]] == 1 and all(q[v] == 0 for v in order[1:-1])


def path_ends(c: WeightedGraph) -> tuple[int, int]:
    order = path_order(c)
    if order is None:
        raise ValidationError("component is not a path graph")
    return order[0], order[-1]


class Taxonomy(enum.Enum):
    FIRST = "first"
    SECOND = "second"


class Tag(enum.Enum):
    C0 = "C0"
    C1 = "C1"
    C2_zero = "C2_zero"
    C2_two_I1 = "C2_two_I1"
    C2_two_I2plus = "C2_two_I2plus"
    C2plus_odd = "C2plus_odd"
    C2plus_posEven_max0 = "C2plus_posEven_max0"
    C2plus_posEven_max1 = "C2plus_posEven_max1"
    C2plus_posEven_max2 = "C2plus_posEven_max2"
    General = "General"


@dataclass(frozen=True)
class ComponentClass:
    tag: Tag
    is_cycle: bool
    is_path_weighted_ends: bool


def _first_tag(c: WeightedGraph, st: ComponentStats) -> Tag:
    if st.s == 0:
        return Tag.C0
    if st.s == 1:
        return Tag.C1
    if st.q_bar == 0:
        return Tag.C2_zero
    if st.q_bar % 2:
        return Tag.C2plus_odd
    excess = max(c.q.values()) - st.q_bar // 2
    if excess <= 0:
        return Tag.C2plus_posEven_max0
    if excess == 1:
        return Tag.C2plus_posEven_max1
    return Tag.C2plus_posEven_max2


def classify(c: WeightedGraph, taxonomy: Taxonomy = Taxonomy.FIRST) -> ComponentClass:
    st = stats(c)
    cyc = is_cycle_graph(c)
    pwe = is_path_weighted_ends(c)
    if taxonomy is Taxonomy.FIRST:
        return ComponentClass(_first_tag(c, st), cyc, pwe)
    if not satisfies_assumption_connected(c):
        tag = Tag.General
    elif st.s == 0:
        tag = Tag.C0
    elif st.s == 1:
        tag = Tag.C1
    elif st.q_bar == 0:
        tag = Tag.C2_zero
    elif st.I == 1:
        tag = Tag.C2_two_I1
    else:
        tag = Tag.C2_two_I2plus
    return ComponentClass(tag, cyc, pwe)


def satisfies_assumption_connected(c: WeightedGraph) -> bool:
    st = stats(c)
    if st.s > 2:
        return False
    if st.s == 2 and st.I >= 2:
        if st.q_bar == 0:
            return is_cycle_graph(c)
        if st.q_bar == 2:
            return is_path_weighted_ends(c)
    return True


def satisfies_assumption_graph(g: WeightedGraph) -> bool:
    return all(satisfies_assumption_connected(c) for c in components(g))


def component_of(g: WeightedGraph, v: int) -> WeightedGraph:
    for c in components(g):
        if v in c.id:
            return c
    raise ValidationError(f"vertex {v} not in graph")


# -- text format -----------------------------------------------------------

def parse_graph(text: str) -> WeightedGraph:
    """Parse the line-oriented graph format (``v <label> <q>`` / ``e <a> <b> <theta>``)."""
    q: dict[int, int] = {}
    theta: dict[Pair, int] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        try:
            nums = [int(x) for x in parts[1:]]
        except ValueError:
            raise GraphSyntaxError(f"line {lineno}: non-integer field in {raw!r}") from None
        if parts[0] == "v" and len(nums) == 2:
            v, w = nums
            if v in q:
                raise GraphSyntaxError(f"line {lineno}: duplicate vertex {v}")
            if w < 0:
                raise GraphSyntaxError(f"line {lineno}: negative weight")
            q[v] = w
        elif parts[0] == "e" and len(nums) == 3:
            a, b, w = nums
            if a == b:
                raise GraphSyntaxError(f"line {lineno}: self-loop on {a}")
            key = pair(a, b)
            if key in theta:
                raise GraphSyntaxError(f"line {lineno}: duplicate edge {key}")
            if w < 0:
                raise GraphSyntaxError(f"line {lineno}: negative weight")
            theta[key] = w
        else:
            raise GraphSyntaxError(f"line {lineno}: cannot parse {raw!r}")
    for a, b in theta:
        if a not in q or b not in q:
            raise GraphSyntaxError(f"edge ({a}, {b}) references an undeclared vertex")
    if not q:
        raise GraphSyntaxError("no vertices declared")
    return WeightedGraph(q, theta)


def format_graph(g: WeightedGraph) -> str:
    lines = [f"v {v} {w}" for v, w in g.q.items()]
    lines += [f"e {a} {b} {w}" for (a, b), w in g.theta.items()]
    return "\n".join(lines) + "\n"
