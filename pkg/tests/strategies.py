"""Random graph builders shared by the hypothesis properties and the acceptance suite.

Each builder takes ``pick(lo, hi)`` returning an integer in ``[lo, hi]`` so the
same code runs under hypothesis (``draw``) and under a seeded numpy generator.
"""

from __future__ import annotations

from typing import Callable

import numpy as np
from hypothesis import strategies as st

from fexpo import graph_core as gc

Pick = Callable[[int, int], int]


def build_graph(pick: Pick, max_vertices: int = 4, max_q: int = 3, max_theta: int = 2) -> gc.WeightedGraph:
    """Arbitrary graph on labels ``1..k``; edges appear with probability about 1/2."""
    k = pick(1, max_vertices)
    q = {v: pick(0, max_q) for v in range(1, k + 1)}
    theta = {}
    for a in range(1, k + 1):
        for b in range(a + 1, k + 1):
            if pick(0, 1):
                theta[(a, b)] = pick(1, max_theta)
    return gc.WeightedGraph(q, theta)


def _block(pick: Pick, start: int) -> tuple[gc.WeightedGraph, bool]:
    """One component allowed by the structural assumption; flag marks weighted-end paths."""
    kind = pick(0, 5)
    if kind == 0:                       # singleton with q in {0, 1, 2}
        return gc.singleton(start, pick(0, 2)), False
    if kind == 1:                       # path with weighted ends
        m = pick(2, 4)
        return gc.path_graph(list(range(start, start + m))), True
    if kind == 2:                       # cycle graph
        m = pick(2, 4)
        return gc.cycle_graph(list(range(start, start + m))), False
    # trees with total weight at most one: s in {0, 1}
    m = pick(2, 4)
    labels = list(range(start, start + m))
    theta = {}
    for i, v in enumerate(labels[1:], 1):
        theta[(labels[pick(0, i - 1)], v)] = 1
    q = {v: 0 for v in labels}
    if kind >= 4:
        q[labels[pick(0, m - 1)]] = 1
    return gc.WeightedGraph(q, theta), False


def build_assumption_graph(pick: Pick, max_components: int = 3):
    """Graph satisfying the structural assumption plus a random T-set."""
    parts, t_set, start = [], [], 1
    for _ in range(pick(1, max_components)):
        c, is_path = _block(pick, start)
        start += len(c)
        parts.append(c)
        if is_path and pick(0, 1):
            t_set.append(c.id)
    return gc.vee(parts), frozenset(t_set)


def build_lambda(pick: Pick, g: gc.WeightedGraph) -> dict[int, int]:
    return {v: pick(0, w) for v, w in g.q.items() if w}


def rng_pick(rng: np.random.Generator) -> Pick:
    return lambda lo, hi: int(rng.integers(lo, hi + 1))


@st.composite
def graphs(draw, max_vertices: int = 4, max_q: int = 3, max_theta: int = 2):
    return build_graph(lambda lo, hi: draw(st.integers(lo, hi)), max_vertices, max_q, max_theta)


@st.composite
def assumption_graphs(draw, max_components: int = 3):
    return build_assumption_graph(lambda lo, hi: draw(st.integers(lo, hi)), max_components)


@st.composite
def graphs_with_lambda(draw, second: bool = False):
    pick = lambda lo, hi: draw(st.integers(lo, hi))  # noqa: E731
    if second:
        g, ts = build_assumption_graph(pick)
    else:
        g, ts = build_graph(pick), frozenset()
    return g, ts, build_lambda(pick, g)
