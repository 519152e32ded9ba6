import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import zeta

from fexpo import beta_oracle as bo
from fexpo import graph_core as gc
from fexpo.errors import (
    DegreeTooLarge,
    IndexOutOfRange,
    NonPositiveValue,
    TooLarge,
    ValidationError,
)

hs = st.floats(0.51, 0.74)


def test_rho_basic_values():
    assert bo.rho_H(0, 0.6) == 1.0
    assert bo.rho_H(1, 0.6) == pytest.approx(2 ** 1.2 / 2 - 1)
    ks = np.arange(-5, 6)
    assert np.allclose(bo.rho_H(ks, 0.7), bo.rho_H(-ks, 0.7))


@given(hs, st.integers(2, 10 ** 7))
def test_rho_large_lag_bounds(H, k):
    a, p = H * (2 * H - 1), 2 * H - 2
    d = a * p * (p - 1) / 12
    r = bo.rho_H(k, H)
    assert a * k ** p * (1 - 1e-12) <= r <= (a * k ** p + d * (k - 1) ** (p - 2)) * (1 + 1e-12)


def test_rho_matches_direct_formula_at_moderate_lags():
    k = np.arange(2, 200, dtype=float)
    H = 0.65
    direct = 0.5 * ((k + 1) ** (2 * H) + (k - 1) ** (2 * H) - 2 * k ** (2 * H))
    assert np.allclose(bo.rho_H(k, H), direct, rtol=1e-9)


@pytest.mark.parametrize("H, ref", [(0.55, 1.015826), (0.6, 1.0821308), (0.7, 1.92863)])
def test_c_h_squared_reference_values(H, ref):
    assert bo.c_H_squared(H) == pytest.approx(ref, abs=2e-6)


@pytest.mark.parametrize("H", [0.55, 0.6, 0.7])
def test_c_h_squared_against_long_direct_sum(H):
    # independent estimate: long direct sum plus the leading tail term only
    K = 2_000_000
    a, p = H * (2 * H - 1), 2 * H - 2
    k = np.arange(1, K, dtype=float)
    direct = 0.5 * ((k + 1) ** (2 * H) + (k - 1) ** (2 * H) - 2 * k ** (2 * H))
    direct[k > 100] = bo.rho_H(k[k > 100], H)
    approx = 1 + 2 * math.fsum(direct ** 2) + 2 * a * a * zeta(-2 * p, K)
    res = bo.c_H_squared_certified(H, 1e-8)
    assert res.half_width <= 1e-8
    assert abs(res.value - approx) < 1e-7


def test_c_h_squared_rejects_bad_tol():
    with pytest.raises(ValidationError):
        bo.c_H_squared_certified(0.6, 0)


def test_beta_entries_and_errors():
    n, H = 8, 0.6
    M = bo.beta_matrix(n, H)
    assert M[2, 5] == pytest.approx(bo.beta_n(3, 6, n, H))
    with pytest.raises(IndexOutOfRange):
        bo.beta_n(0, 1, n, H)
    with pytest.raises(IndexOutOfRange):
        bo.beta_n(1, 9, n, H)


@given(hs, st.integers(1, 64), st.floats(0.5, 3.0))
def test_beta_sum_is_variance_of_endpoint(H, n, T):
    # sum of all increment covariances = Var(B_T) = T^{2H}
    assert bo.beta_matrix(n, H, T).sum() == pytest.approx(T ** (2 * H), rel=1e-10)


@pytest.mark.parametrize("k", [2, 3, 4])
def test_cycle_sum_matches_trace(k):
    R = bo.beta_matrix(40, 0.62)
    assert bo.cycle_sum(40, k, 0.62) == pytest.approx(np.trace(np.linalg.matrix_power(R, k)), rel=1e-12)


def test_cycle_sum_guards():
    with pytest.raises(ValidationError):
        bo.cycle_sum(10, 1, 0.6)
    with pytest.raises(TooLarge):
        bo.cycle_sum(bo.DENSE_CAP + 1, 3, 0.6)


def _brute(g, n, H):
    R = bo.beta_matrix(n, H)
    vs = g.vertices
    total = 0.0
    for j in itertools.product(range(n), repeat=len(vs)):
        idx = dict(zip(vs, j))
        total += math.prod(R[idx[a], idx[b]] ** w for (a, b), w in g.theta.items())
    return total


@pytest.mark.parametrize("g", [
    gc.WeightedGraph({1: 0, 2: 0}, {(1, 2): 1}),
    gc.WeightedGraph({1: 0, 2: 0, 3: 0}, {(1, 2): 2, (2, 3): 1}),
    gc.WeightedGraph({1: 0, 2: 0, 3: 0, 4: 0}, {(1, 2): 1, (1, 3): 1, (1, 4): 3}),
    gc.cycle_graph([1, 2, 3]),
    gc.WeightedGraph({1: 0, 2: 0, 3: 0}, {(1, 2): 2, (2, 3): 1, (1, 3): 1}),
    gc.WeightedGraph({1: 0, 2: 0, 3: 0}, {(1, 2): 1, (2, 3): 1, (1, 3): 1, }),
    gc.vee([gc.singleton(1), gc.WeightedGraph({2: 0, 3: 0}, {(2, 3): 2})]),
])
def test_graph_beta_sum_against_brute_force(g):
    assert bo.graph_beta_sum(g, 7, 0.66) == pytest.approx(_brute(g, 7, 0.66), rel=1e-11)


def test_graph_beta_sum_dense_general():
    g = gc.WeightedGraph({1: 0, 2: 0, 3: 0, 4: 0},
                         {(1, 2): 1, (2, 3): 1, (3, 4): 1, (1, 4): 1, (1, 3): 1})
    assert bo.graph_beta_sum(g, 5, 0.6) == pytest.approx(_brute(g, 5, 0.6), rel=1e-11)
    with pytest.raises(TooLarge):
        bo.graph_beta_sum(g, 10 ** 4, 0.6)


def test_graph_beta_sum_needs_zero_weights():
    with pytest.raises(ValidationError):
        bo.graph_beta_sum(gc.singleton(1, 1), 4, 0.6)


def test_fit_order_exact_power_law():
    n = [64, 128, 256, 512]
    fit = bo.fit_order(n, [3.0 * m ** -1.4 for m in n])
    assert fit.slope == pytest.approx(-1.4) and fit.r_squared == pytest.approx(1.0)
    assert fit.dropped == 0


def test_fit_order_drops_preasymptotic_points():
    n = [8, 16, 64, 128, 256, 512]
    vals = [m ** -1.0 * (1 + 40 / m ** 2) for m in n]
    fit = bo.fit_order(n, vals)
    assert fit.dropped == 2
    assert fit.slope == pytest.approx(-1.0, abs=0.01)


def test_fit_order_errors():
    with pytest.raises(ValidationError):
        bo.fit_order([1, 2, 3], [1, 2, 3])
    with pytest.raises(NonPositiveValue):
        bo.fit_order([1, 2, 3, 4], [1, -2, 3, 4])
    with pytest.raises(ValidationError):
        bo.fit_order([1, 3, 2, 4], [1, 2, 3, 4])


def test_tree_slopes_small_grid():
    n = [128, 256, 512, 1024]
    path3 = gc.path_graph([1, 2, 3], end_weights=False)
    fit = bo.fit_order(n, [bo.graph_beta_sum(path3, m, 0.6) for m in n])
    assert fit.slope == pytest.approx(-1.0, abs=0.1)


def test_gaussian_moment_oracle_simple():
    gram = np.array([[2.0, 0.5], [0.5, 1.0]])
    assert bo.gaussian_moment_oracle([1, 1], gram) == pytest.approx(0.5)
    assert bo.gaussian_moment_oracle([2], gram[:1, :1]) == 0.0
    # E[I_2(f^2) I_2(g^2)] = 2 <f,g>^2
    assert bo.gaussian_moment_oracle([2, 2], gram) == pytest.approx(0.5)
    assert bo.gaussian_moment_oracle([1, 2], gram) == 0.0
    with pytest.raises(DegreeTooLarge):
        bo.gaussian_moment_oracle([4, 4, 4, 2], np.eye(4))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_gaussian_moment_oracle_vs_monte_carlo(seed):
    # pairing enumeration vs a direct sample mean of Hermite products
    rng = np.random.default_rng(seed)
    q = [1, 1, 2]
    A = rng.standard_normal((3, 3))
    gram = A @ A.T
    X = rng.standard_normal((200_000, 3)) @ A.T
    nrm = np.sqrt(np.diag(gram))
    U = X / nrm
    he = [U[:, 0], U[:, 1], U[:, 2] ** 2 - 1]
    prod = nrm[0] * nrm[1] * nrm[2] ** 2 * he[0] * he[1] * he[2]
    se = prod.std() / math.sqrt(prod.size)
    assert abs(prod.mean() - bo.gaussian_moment_oracle(q, gram)) < 5 * se
