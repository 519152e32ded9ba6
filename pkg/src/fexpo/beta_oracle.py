"""Numerical oracles: fGn correlations, deterministic graph sums, Gaussian moments."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, Mapping, Sequence

import numpy as np
from scipy.linalg import toeplitz
from scipy.special import binom, zeta

from . import graph_core as gc
from .errors import (
    DegreeTooLarge,
    IndexOutOfRange,
    NonPositiveValue,
    TolUnachievable,
    TooLarge,
    ValidationError,
)
from .exponent_calc import check_hurst

DENSE_CAP = 4096
EXHAUSTIVE_BUDGET = 2e9
C_H2_MAX_CUTOFF = 1 << 24
RHO_SERIES_TERMS = 30       # x^2 <= 1/4, so 4^-30 is below double precision


def rho_H(k, H: float):
    """``rho_H(k) = (|k+1|^{2H} + |k-1|^{2H} - 2|k|^{2H}) / 2``.

    For ``|k| >= 2`` the second difference is summed as the binomial series
    ``k^{2H} sum_m C(2H, 2m) k^{-2m}``, whose terms are all positive, so there is
    no cancellation at large lags.
    """
    k = np.abs(np.asarray(k, dtype=float))
    h2 = 2.0 * H
    out = np.empty_like(k)
    small = k < 2
    ks = k[small]
    out[small] = 0.5 * (np.abs(ks + 1) ** h2 + np.abs(ks - 1) ** h2 - 2 * ks ** h2)
    kl = k[~small]
    x2 = 1.0 / (kl * kl)
    coef = binom(h2, 2 * np.arange(1, RHO_SERIES_TERMS + 1))
    acc = np.zeros_like(kl)
    for c in coef[::-1]:
        acc = (acc + c) * x2
    out[~small] = kl ** h2 * acc
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class CH2Result:
    value: float
    half_width: float
    cutoff: int


def c_H_squared_certified(H: float, tol: float = 1e-10) -> CH2Result:
    """``sum_k rho_H(k)^2`` with a certified error bound.

    The lags ``|k| < K`` are summed directly. For the tail, the second
    difference obeys ``a k^p <= rho(k) <= a k^p + a p(p-1)/12 (k-1)^{p-2}`` with
    ``a = H(2H-1)`` and ``p = 2H-2``, so the tail equals ``a^2 zeta(-2p, K)`` plus a
    nonnegative remainder bounded by a Hurwitz zeta value.
    """
    H = check_hurst(H)
    if tol <= 0:
        raise ValidationError("tol must be positive")
    a = H * (2 * H - 1)
    p = 2 * H - 2
    d = a * p * (p - 1) / 12.0
    K = 64
    while True:
        rem = 2 * (2 * a * d + d * d) * zeta(2 - 2 * p, K - 1)
        roundoff = 1e-15 * K
        if rem / 2 + roundoff <= tol:
            break
        K *= 2
        if K > C_H2_MAX_CUTOFF:
            raise TolUnachievable(f"cannot reach tol={tol} at H={H}")
    ks = np.arange(1, K)
    head = 1.0 + 2.0 * math.fsum(rho_H(ks, H) ** 2)
    lead = 2 * a * a * zeta(-2 * p, K)
    return CH2Result(float(head + lead + rem / 2), float(rem / 2 + roundoff), K)


def c_H_squared(H: float, tol: float = 1e-10) -> float:
    return c_H_squared_certified(H, tol).value


def beta_n(j1: int, j2: int, n: int, H: float, T: float = 1.0) -> float:
    """Covariance of the fBm increments over cells ``j1`` and ``j2`` of ``[0, T]``."""
    if not (1 <= j1 <= n and 1 <= j2 <= n):
        raise IndexOutOfRange(f"indices ({j1}, {j2}) outside 1..{n}")
    return (T / n) ** (2 * H) * rho_H(j1 - j2, H)


def beta_row(n: int, H: float, T: float = 1.0) -> np.ndarray:
    """First row ``beta_n(1, 1+d)`` for ``d = 0..n-1``."""
    return (T / n) ** (2 * H) * rho_H(np.arange(n), H)


def beta_matrix(n: int, H: float, T: float = 1.0) -> np.ndarray:
    if n > 2 * DENSE_CAP:
        raise TooLarge(f"dense beta matrix of size {n} exceeds cap")
    return toeplitz(beta_row(n, H, T))


def cycle_sum(n: int, k: int, H: float, T: float = 1.0) -> float:
    """``trace(R^k)`` with ``R_{ij} = beta_n(i, j)``."""
    if k < 2:
        raise ValidationError("cycle length must be at least 2")
    r = beta_row(n, H, T)
    if k == 2:
        w = np.arange(n, 0, -1, dtype=float)
        w[1:] *= 2
        return float(np.dot(w, r * r))
    if n > DENSE_CAP:
        raise TooLarge(f"dense cycle sum needs n <= {DENSE_CAP}")
    R = toeplitz(r)
    P = R
    for _ in range(k - 2):
        P = P @ R
    return float(np.sum(P * R))


def _tree_sum(g: gc.WeightedGraph, n: int, H: float, T: float) -> float:
    """Sum over a tree by leaf-to-root elimination with Toeplitz matvecs."""
    r = beta_row(n, H, T)
    R = toeplitz(r)
    root = g.vertices[0]
    order, parent = [root], {root: None}
    for v in order:
        for w in g.neighbours(v):
            if w not in parent:
                parent[w] = v
                order.append(w)
    msg = {v: np.ones(n) for v in g.vertices}
    for v in reversed(order[1:]):
        p = parent[v]
        msg[p] = msg[p] * ((R ** g.edge(v, p)) @ msg[v])
    return float(msg[root].sum())


def _cycle_order(c: gc.WeightedGraph) -> list[int] | None:
    if len(c) < 3 or len(c.theta) != len(c):
        return None
    if any(len(c.neighbours(v)) != 2 for v in c.vertices):
        return None
    order, prev = [c.vertices[0]], None
    while len(order) < len(c):
        nxt = [w for w in c.neighbours(order[-1]) if w != prev]
        prev = order[-1]
        order.append(nxt[0] if nxt[0] not in order else nxt[-1])
    return order


def _component_sum(c: gc.WeightedGraph, n: int, H: float, T: float, budget: float) -> float:
    I = len(c)
    if I == 1:
        return float(n)
    th = c.theta
    if len(th) == I - 1:
        return _tree_sum(c, n, H, T)
    order = _cycle_order(c)
    if order is not None and n <= DENSE_CAP:
        R = toeplitz(beta_row(n, H, T))
        mats = [R ** c.edge(a, b) for a, b in zip(order, order[1:] + order[:1])]
        P = mats[0]
        for M in mats[1:-1]:
            P = P @ M
        return float(np.sum(P * mats[-1].T))
    if float(n) ** I > budget or I > 4:
        raise TooLarge(f"exhaustive sum over {n}^{I} index tuples exceeds budget")
    R = toeplitz(beta_row(n, H, T))
    letters = "abcd"[:I]
    idx = {v: letters[i] for i, v in enumerate(c.vertices)}
    ops, subs = [], []
    for (a, b), w in th.items():
        ops.append(R ** w)
        subs.append(idx[a] + idx[b])
    return float(np.einsum(",".join(subs) + "->", *ops, optimize=True))


def graph_beta_sum(g: gc.WeightedGraph, n: int, H: float, T: float = 1.0,
                   budget: float = EXHAUSTIVE_BUDGET) -> float:
    """``sum_{j in [n]^V} prod beta_n(j_v, j_v')^{theta}`` for a graph with ``q = 0``."""
    if any(g.q.values()):
        raise ValidationError("graph_beta_sum needs all vertex weights to be zero")
    return math.prod(_component_sum(c, n, H, T, budget) for c in gc.components(g))


@dataclass(frozen=True)
class SlopeFit:
    n_grid: tuple[int, ...]
    values: tuple[float, ...]
    slope: float
    intercept: float
    r_squared: float
    dropped: int = 0


def _ls(x: np.ndarray, y: np.ndarray) -> tuple[float, float, float]:
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid ** 2)) / ss_tot if ss_tot > 0 else 1.0
    return float(slope), float(intercept), r2


def fit_order(n_grid: Sequence[int], values: Sequence[float], r2_threshold: float = 0.999) -> SlopeFit:
    """Least-squares slope of ``log|value|`` against ``log n``.

    When the fit is poor the two smallest n are discarded once, treating them
    as pre-asymptotic.
    """
    n = np.asarray(n_grid, dtype=float)
    v = np.asarray(values, dtype=float)
    if len(n) < 4 or len(n) != len(v):
        raise ValidationError("need at least four (n, value) pairs")
    if np.any(np.diff(n) <= 0):
        raise ValidationError("n_grid must be strictly increasing")
    if np.any(v <= 0):
        raise NonPositiveValue("values must be positive for a log-log fit")
    x, y = np.log(n), np.log(v)
    slope, intercept, r2 = _ls(x, y)
    dropped = 0
    if r2 < r2_threshold:
        slope, intercept, r2 = _ls(x[2:], y[2:])
        dropped = 2
    return SlopeFit(tuple(int(a) for a in n_grid), tuple(float(b) for b in values),
                    slope, intercept, r2, dropped)


# -- Gaussian moments -------------------------------------------------------

def _pairings(slots: list[int], owner: list[int]) -> Iterator[list[tuple[int, int]]]:
    if not slots:
        yield []
        return
    first, rest = slots[0], slots[1:]
    for i, s in enumerate(rest):
        if owner[s] == owner[first]:
            continue
        for tail in _pairings(rest[:i] + rest[i + 1:], owner):
            yield [(first, s)] + tail


def gaussian_moment_oracle(q: Mapping[int, int] | Sequence[int], gram) -> float:
    """``E[prod_v I_{q_v}(f_v^{(x) q_v})]`` by explicit Wick pairing enumeration.

    Each multiple integral contributes ``q_v`` slots; pairings that join two
    slots of the same integral are excluded. ``gram[a][b] = <f_a, f_b>`` with
    vertices indexed by position.
    """
    orders = list(q.values()) if isinstance(q, Mapping) else list(q)
    if isinstance(q, Mapping):
        orders = [q[k] for k in sorted(q)]
    total = sum(orders)
    if total > 12:
        raise DegreeTooLarge(f"total degree {total} exceeds 12")
    if total % 2:
        return 0.0
    owner = [v for v, d in enumerate(orders) for _ in range(d)]
    G = np.asarray(gram, dtype=float)
    acc = 0.0
    for pairing in _pairings(list(range(total)), owner):
        prod = 1.0
        for a, b in pairing:
            prod *= G[owner[a], owner[b]]
        acc += prod
    return acc
