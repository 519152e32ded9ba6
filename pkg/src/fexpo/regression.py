"""Reference table of exponents for the functionals of the quadratic-variation expansion."""

from __future__ import annotations

from dataclasses import dataclass

from . import exponent_calc as ec
from . import graph_core as gc
from .graph_rewrite import GraphSumSpec, du_rewrite_first


def _path(q1: int, q2: int, theta: int = 1) -> gc.WeightedGraph:
    return gc.WeightedGraph({1: q1, 2: q2}, {(1, 2): theta})


GRAPHS: dict[str, gc.WeightedGraph] = {
    "M2_1": _path(1, 1),
    "M2_2": gc.vee([gc.singleton(1, 2), gc.singleton(2, 1)]),
    "M2_3": gc.vee([gc.singleton(1, 1), gc.singleton(2, 1)]),
    "M2_4": _path(0, 1),
    "M2_1_1": _path(0, 0, theta=2),
    "M3_1": gc.vee([_path(1, 1), gc.singleton(3, 1)]),
    "M3_2": gc.WeightedGraph({1: 0, 2: 1, 3: 1}, {(1, 2): 1, (1, 3): 1}),
    "M3_3": gc.vee([gc.singleton(1, 2), gc.singleton(2, 1), gc.singleton(3, 1)]),
    "M3_5": gc.vee([gc.singleton(1, 2), gc.WeightedGraph({2: 0, 3: 1}, {(2, 3): 1})]),
    "N1_1": gc.singleton(1, 1),
    "N1_2": gc.singleton(1, 0),
    "S3": gc.singleton(1, 3),
}


@dataclass(frozen=True)
class RegressionCase:
    name: str
    kind: str          # "first", "second" or "du_max"
    alpha: str
    graph: str
    expected: str
    t_set: tuple[tuple[int, ...], ...] = ()

    def compute(self) -> ec.Expr:
        g = GRAPHS[self.graph]
        if self.kind == "first":
            return ec.first_exponent(self.alpha, g)
        if self.kind == "second":
            return ec.second_exponent(self.alpha, g, [frozenset(t) for t in self.t_set])
        if self.kind == "du_max":
            return du_rewrite_first(GraphSumSpec(ec.parse_expr(self.alpha), g)).max_exponent
        raise ValueError(f"unknown kind {self.kind!r}")


TABLE: tuple[RegressionCase, ...] = (
    RegressionCase("M2_1", "first", "4H-1", "M2_1", "0"),
    RegressionCase("M2_2", "first", "4H-2", "M2_2", "2H-3/2"),
    RegressionCase("M2_3", "first", "4H-3", "M2_3", "4H-3"),
    RegressionCase("M2_4", "first", "4H-2", "M2_4", "4H-3"),
    RegressionCase("M2_1_1", "first", "4H-1", "M2_1_1", "0"),
    RegressionCase("M2_2_1", "first", "4H-3", "M2_3", "4H-3"),
    RegressionCase("M2_2_3", "first", "4H-2", "M2_4", "4H-3"),
    RegressionCase("M2_1_T", "second", "4H-1", "M2_1", "max(-1/2, 4H-3)", ((1, 2),)),
    RegressionCase("M3_1", "first", "6H-5/2", "M3_1", "2H-3/2"),
    RegressionCase("M3_2", "first", "6H-3/2", "M3_2", "2H-3/2"),
    RegressionCase("M3_2_T", "second", "6H-3/2", "M3_2", "max(-1/2, 6H-9/2)"),
    RegressionCase("M3_3", "first", "6H-7/2", "M3_3", "4H-3"),
    RegressionCase("M3_5", "first", "6H-5/2", "M3_5", "4H-3"),
    RegressionCase("M3_1_T", "second", "6H-5/2", "M3_1", "max(2H-2, 6H-9/2)", ((1, 2),)),
    RegressionCase("N1_1", "first", "0", "N1_1", "0"),
    RegressionCase("N1_2", "first", "-1", "N1_2", "0"),
    RegressionCase("N1_1_shift", "first", "2H-3/2", "N1_1", "2H-3/2"),
    RegressionCase("S3", "first", "1", "S3", "3/2-3H"),
    RegressionCase("N1_1_du", "du_max", "0", "N1_1", "2H-3/2"),
    RegressionCase("M3_1_du", "du_max", "6H-5/2", "M3_1", "4H-3"),
)


@dataclass(frozen=True)
class RegressionResult:
    case: RegressionCase
    computed: str
    ok: bool


def run_regression(table=TABLE) -> list[RegressionResult]:
    out = []
    for case in table:
        got = case.compute()
        out.append(RegressionResult(case, got.canonical().render(),
                                    got.equals(ec.parse_expr(case.expected))))
    return out
