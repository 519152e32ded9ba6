"""Expansion density of the rescaled quadratic variation and its random symbols."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Optional

import numpy as np
from numpy.polynomial import hermite_e
from scipy import integrate
from scipy.stats import norm

from .beta_oracle import c_H_squared
from .errors import KernelMissing, QuadratureFailure, ValidationError
from .exponent_calc import check_hurst
from .fbm_engine import FouRun, simulate_fou_qv

QUAD_TOL = 1e-11


@dataclass(frozen=True)
class SymbolPolynomial:
    """Coefficients ``c_k`` of ``sum_k c_k [iz]^k`` with estimator variances."""

    coefficients: Mapping[int, float]
    variances: Mapping[int, float] = field(default_factory=dict)

    def coefficient(self, k: int) -> float:
        return float(self.coefficients.get(k, 0.0))

    def stderr(self, k: int) -> float:
        return math.sqrt(self.variances.get(k, 0.0))


@dataclass(frozen=True)
class ExpansionDensity:
    g_inf: float
    r_n: float
    symbol: SymbolPolynomial

    def __post_init__(self):
        if not self.g_inf > 0:
            raise ValidationError("g_inf must be positive")


def gaussian_model(g_inf: float) -> ExpansionDensity:
    return ExpansionDensity(g_inf, 0.0, SymbolPolynomial({}))


# -- constants and kernels -------------------------------------------------------

def g_infinity_fou(sigma: float, T: float, H: float) -> float:
    return 2.0 * c_H_squared(H) * sigma ** 4 * T ** (4 * H)


def g_infinity_general(x_fine: np.ndarray, v1: Callable, T: float, H: float) -> np.ndarray:
    """``2 c_H^2 T^{4H-1} int_0^T V1(X_t)^4 dt`` by the trapezoid rule."""
    x = np.asarray(x_fine, dtype=float)
    t = np.linspace(0.0, T, x.shape[-1])
    return 2.0 * c_H_squared(H) * T ** (4 * H - 1) * np.trapezoid(v1(x) ** 4, t, axis=-1)


def rho_tau(s, tau: float, H: float, T: float):
    """``alpha_H T |s - tau|^{2H-2}``."""
    return H * (2 * H - 1) * T * np.abs(np.asarray(s, dtype=float) - tau) ** (2 * H - 2)


def _quad(f, lo, hi, **kw) -> float:
    val, err = integrate.quad(f, lo, hi, epsabs=QUAD_TOL, epsrel=QUAD_TOL, limit=200, **kw)
    if not np.isfinite(val) or err > 1e-7 * max(1.0, abs(val)):
        raise QuadratureFailure(f"quadrature error estimate {err:.2e} too large")
    return val


def _singular_integral(g: Callable, tau: float, H: float, nodes: Optional[int] = None) -> float:
    """``int_0^tau g(u) u^{2H-2} du`` via ``u = w^{1/(2H-1)}`` (bounded integrand)."""
    if tau <= 0:
        return 0.0
    p = 2 * H - 1
    top = tau ** p

    def f(w):
        return g(np.asarray(w) ** (1.0 / p)) / p

    if nodes:
        x, wts = np.polynomial.legendre.leggauss(nodes)
        w = 0.5 * top * (x + 1.0)
        return float(0.5 * top * np.dot(wts, f(w)))
    return _quad(f, 0.0, top)


def d_dot_fou(tau: float, b: float, sigma: float, H: float, T: float,
              quad_nodes: Optional[int] = None) -> float:
    """``sigma alpha_H T int_0^tau e^{-bu} u^{2H-2} du``, the fOU kernel on the diagonal."""
    H = check_hurst(H)
    if tau < 0:
        raise ValidationError("tau must be nonnegative")
    aH = H * (2 * H - 1)
    return sigma * aH * T * _singular_integral(lambda u: np.exp(-b * u), tau, H, quad_nodes)


def d_dot_fou_general(tau: float, t: float, b: float, sigma: float, H: float, T: float) -> float:
    """``int_0^t D_s X_t rho_tau(s) ds`` for the fOU process."""
    if t <= 0:
        return 0.0
    aH = H * (2 * H - 1)

    def f(s):
        return np.exp(-b * (t - s)) * abs(s - tau) ** (2 * H - 2)

    if 0 < tau < t:
        # split at the singular point and remove it with the power substitution
        g_left = _singular_integral(lambda u: np.exp(-b * (t - tau + u)), tau, H)
        g_right = _singular_integral(lambda u: np.exp(-b * (t - tau - u)), t - tau, H)
        return sigma * aH * T * (g_left + g_right)
    if tau >= t:
        # |s - tau| = tau - s on [0, t]; singular only when tau == t
        if tau == t:
            return sigma * aH * T * _singular_integral(lambda u: np.exp(-b * u), t, H)
        return sigma * aH * T * _quad(f, 0.0, t)
    return sigma * aH * T * _singular_integral(lambda u: np.exp(-b * (t - u)), t, H)


def _d_dot_fou_integral(b: float, sigma: float, H: float, T: float) -> float:
    """``int_0^T d_dot(tau, tau) dtau = sigma alpha_H T int_0^T (T-u) e^{-bu} u^{2H-2} du``."""
    aH = H * (2 * H - 1)
    return sigma * aH * T * _singular_integral(lambda u: (T - u) * np.exp(-b * u), T, H)


def fou_second_moment(tau: float, b: float, sigma: float, x0: float, H: float) -> float:
    """``E[X_tau^2]`` from the Wiener-integral representation of the fOU process."""
    aH = H * (2 * H - 1)

    def g(w):
        w = np.asarray(w, dtype=float)
        if b == 0:
            return 2.0 * (tau - w)
        return np.exp(-b * w) * (-np.expm1(-2 * b * (tau - w))) / b

    return x0 ** 2 * math.exp(-2 * b * tau) + sigma ** 2 * aH * _singular_integral(g, tau, H)


def fou_symbol_coefficient_exact(b: float, sigma: float, x0: float, H: float, T: float) -> SymbolPolynomial:
    """Degree-1 coefficient ``int_0^T (-2 b sigma d_dot(tau,tau) + T b^2 E[X_tau^2]) dtau``."""
    H = check_hurst(H)
    drift = -2 * b * sigma * _d_dot_fou_integral(b, sigma, H, T)
    if b == 0:
        return SymbolPolynomial({1: 0.0}, {1: 0.0})
    m2 = _quad(lambda tau: fou_second_moment(tau, b, sigma, x0, H), 0.0, T)
    return SymbolPolynomial({1: drift + T * b * b * m2}, {1: 0.0})


def fou_symbol_from_run(run: FouRun, b: float, sigma: float, H: float, T: float) -> SymbolPolynomial:
    drift = -2 * b * sigma * _d_dot_fou_integral(b, sigma, H, T)
    vals = T * b * b * run.int_x2
    return SymbolPolynomial({1: drift + float(vals.mean())}, {1: float(vals.var(ddof=1) / vals.size)})


def fou_symbol_coefficient_mc(b: float, sigma: float, x0: float, H: float, T: float,
                              n_paths: int, seed: int, n: int = 256, substeps: int = 8,
                              method: str = "auto") -> SymbolPolynomial:
    """Monte Carlo version: exact drift term plus a sample mean of ``T b^2 int X^2``."""
    run = simulate_fou_qv(H, b, sigma, x0, T, n, n_paths, substeps, seed, method)
    return fou_symbol_from_run(run, b, sigma, H, T)


# -- general symbols ------------------------------------------------------------

@dataclass(frozen=True)
class KernelField:
    d_dot: Callable[[float, float], float]
    d_ddot: Optional[Callable[[float, float], float]] = None


@dataclass(frozen=True)
class SymbolCoefficients:
    """Coefficient functions of ``x``; ``a = V1^2`` and ``g = 2 c_H^2 T^{4H-1} V1^4``."""

    a: Optional[Callable] = None
    da: Optional[Callable] = None
    d2a: Optional[Callable] = None
    dg: Optional[Callable] = None
    v21: Optional[Callable] = None
    v22: Optional[Callable] = None
    v21_1: Optional[Callable] = None


def coefficients_from_sde(v1, dv1, d2v1, v2, dv2, T: float, H: float) -> SymbolCoefficients:
    """Builds the coefficient functions from ``V1, V1', V1'', V2, V2'``."""
    k = 2.0 * c_H_squared(H) * T ** (4 * H - 1)
    return SymbolCoefficients(
        a=lambda x: v1(x) ** 2,
        da=lambda x: 2 * v1(x) * dv1(x),
        d2a=lambda x: 2 * (dv1(x) ** 2 + v1(x) * d2v1(x)),
        dg=lambda x: 4 * k * v1(x) ** 3 * dv1(x),
        v21=lambda x: v2(x) * v1(x),
        v22=lambda x: v2(x) ** 2,
        v21_1=lambda x: dv2(x) * v1(x) + v2(x) * dv1(x),
    )


def _kernel_matrix(f: Callable, t: np.ndarray) -> np.ndarray:
    """``K[i, j] = f(t_i, t_j)``; tries a broadcast call before looping."""
    try:
        K = np.asarray(f(t[:, None], t[None, :]), dtype=float)
        if K.shape == (t.size, t.size):
            return K
    except (TypeError, ValueError):
        pass
    return np.array([[f(tau, s) for s in t] for tau in t], dtype=float)


def general_symbols_evaluate(times, x_path, kernels: KernelField, coeffs: SymbolCoefficients,
                             T: float, H: float) -> tuple[SymbolPolynomial, dict]:
    """Evaluate the degree-5, 3, 3, 1 symbol coefficients along one path.

    Integrals use the trapezoid rule on the supplied grid. Returns the summed
    polynomial and the four named parts.
    """
    missing = [name for name in ("a", "da", "d2a", "dg", "v21", "v22", "v21_1")
               if getattr(coeffs, name) is None]
    if kernels is None or kernels.d_dot is None:
        missing.append("d_dot")
    if missing:
        raise KernelMissing(f"missing coefficient functions: {', '.join(missing)}")
    t = np.asarray(times, dtype=float)
    x = np.asarray(x_path, dtype=float)
    if t.shape != x.shape:
        raise ValidationError("times and path must have the same shape")
    c2 = c_H_squared(H)
    a, da, d2a, dg = coeffs.a(x), coeffs.da(x), coeffs.d2a(x), coeffs.dg(x)
    a, da, d2a, dg = (np.broadcast_to(np.asarray(v, dtype=float), t.shape) for v in (a, da, d2a, dg))
    v21 = np.broadcast_to(np.asarray(coeffs.v21(x), dtype=float), t.shape)
    v22 = np.broadcast_to(np.asarray(coeffs.v22(x), dtype=float), t.shape)
    v21_1 = np.broadcast_to(np.asarray(coeffs.v21_1(x), dtype=float), t.shape)
    D1 = _kernel_matrix(kernels.d_dot, t)           # D1[i, j] = d_dot(tau_i, t_j)
    D2 = _kernel_matrix(kernels.d_ddot, t) if kernels.d_ddot else np.zeros_like(D1)
    d1_diag, d2_diag = np.diag(D1), np.diag(D2)

    def integ(y, axis=-1):
        return np.trapezoid(y, t, axis=axis)

    gd = integ(dg[None, :] * D1)                    # int g'(X_t) d_dot(tau, t) dt
    s3_1 = integ(gd ** 2 * a) / (4 * T)
    inner_a = integ((d2a[None, :] * D1 ** 2 + da[None, :] * D2) * a[None, :])
    inner_b = integ(da[None, :] * D1 * a[None, :])
    inner_c = integ((da[None, :] * D1) ** 2)
    s3_2 = 2 * T ** (4 * H - 2) * c2 * (integ(inner_a * a) + integ(inner_b * da * d1_diag)
                                         + integ(inner_c * a))
    s1_1 = integ(gd * (0.5 / T * da * d1_diag + v21))
    s1_2 = integ((d2a * d1_diag ** 2 + da * d2_diag) / T + 2 * v21_1 * d1_diag + T * v22)
    parts = {"S3_1": float(s3_1), "S3_2": float(s3_2), "S1_1": float(s1_1), "S1_2": float(s1_2)}
    poly = SymbolPolynomial({5: parts["S3_1"], 3: parts["S3_2"] + parts["S1_1"], 1: parts["S1_2"]})
    return poly, parts


# -- density and distances -------------------------------------------------------

def _correction_terms(d: ExpansionDensity):
    return [(k, c) for k, c in sorted(d.symbol.coefficients.items()) if k >= 1 and c != 0]


def expansion_density(d: ExpansionDensity, z):
    """``phi(z; 0, G) (1 + r_n sum_k c_k He_k(z / sqrt G) / G^{k/2})``."""
    zz = np.asarray(z, dtype=float)
    sg = math.sqrt(d.g_inf)
    u = zz / sg
    base = norm.pdf(u) / sg
    corr = np.zeros_like(u)
    for k, c in _correction_terms(d):
        e = np.zeros(k + 1)
        e[k] = 1.0
        corr = corr + c * hermite_e.hermeval(u, e) / d.g_inf ** (k / 2)
    out = base * (1.0 + d.r_n * corr)
    return float(out) if out.ndim == 0 else out


def expansion_cdf(d: ExpansionDensity, z):
    """Closed-form CDF: ``int He_k(u) phi(u) du = -He_{k-1}(u) phi(u)``."""
    zz = np.asarray(z, dtype=float)
    u = zz / math.sqrt(d.g_inf)
    out = norm.cdf(u)
    for k, c in _correction_terms(d):
        e = np.zeros(k)
        e[k - 1] = 1.0
        out = out - d.r_n * c / d.g_inf ** (k / 2) * hermite_e.hermeval(u, e) * norm.pdf(u)
    return float(out) if np.ndim(out) == 0 else out


def kolmogorov_distance(samples, d: ExpansionDensity) -> float:
    x = np.sort(np.asarray(samples, dtype=float))
    N = x.size
    if N < 1000:
        raise ValidationError("kolmogorov_distance needs at least 1000 samples")
    F = expansion_cdf(d, x)
    i = np.arange(1, N + 1)
    return float(max(np.max(i / N - F), np.max(F - (i - 1) / N)))


@dataclass(frozen=True)
class DistanceComparison:
    d_expansion: float
    d_gaussian: float
    diff_ci: tuple[float, float]

    @property
    def improved(self) -> bool:
        """Expansion strictly closer, with the bootstrap interval excluding zero."""
        return self.d_expansion < self.d_gaussian and self.diff_ci[0] > 0


def compare_distances(samples, expansion: ExpansionDensity, gaussian: ExpansionDensity,
                      n_boot: int = 200, seed: int = 0, level: float = 0.95) -> DistanceComparison:
    """Both Kolmogorov distances and a percentile bootstrap interval of their difference."""
    x = np.asarray(samples, dtype=float)
    d_e = kolmogorov_distance(x, expansion)
    d_g = kolmogorov_distance(x, gaussian)
    rng = np.random.default_rng(seed)
    diffs = np.empty(n_boot)
    for r in range(n_boot):
        xb = x[rng.integers(0, x.size, x.size)]
        diffs[r] = kolmogorov_distance(xb, gaussian) - kolmogorov_distance(xb, expansion)
    lo, hi = np.quantile(diffs, [(1 - level) / 2, (1 + level) / 2])
    return DistanceComparison(d_e, d_g, (float(lo), float(hi)))


def fou_expansion(b: float, sigma: float, x0: float, H: float, T: float, n: int,
                  symbol: Optional[SymbolPolynomial] = None) -> ExpansionDensity:
    sym = symbol or fou_symbol_coefficient_exact(b, sigma, x0, H, T)
    return ExpansionDensity(g_infinity_fou(sigma, T, H), n ** (2 * H - 1.5), sym)
