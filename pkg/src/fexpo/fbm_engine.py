"""Fractional Brownian motion sampling, fOU / Young-SDE solvers, quadratic variation."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Optional

import numpy as np
from scipy.linalg import toeplitz
from scipy.signal import lfilter

from .beta_oracle import rho_H
from .errors import (
    CirculantEmbeddingFailure,
    LengthMismatch,
    ResolutionMismatch,
    TooLarge,
    ValidationError,
)
from .exponent_calc import check_hurst

CHOLESKY_CAP = 8192
AUTO_CHOLESKY_MAX = 2048
DEFAULT_SUBSTEPS = 8
SEED_MASK = (1 << 64) - 1


@dataclass(frozen=True)
class FbmPath:
    H: float
    T: float
    N: int
    values: np.ndarray

    @property
    def times(self) -> np.ndarray:
        return np.linspace(0.0, self.T, self.N + 1)


def fbm_covariance(s, t, H: float):
    s = np.asarray(s, dtype=float)
    t = np.asarray(t, dtype=float)
    h2 = 2 * H
    out = 0.5 * (np.abs(t) ** h2 + np.abs(s) ** h2 - np.abs(t - s) ** h2)
    return float(out) if out.ndim == 0 else out


def path_rng(seed: int, index: int) -> np.random.Generator:
    """Counter-based stream for one path: Philox keyed by ``(index, seed)``."""
    key = ((int(index) & SEED_MASK) << 64) | (int(seed) & SEED_MASK)
    return np.random.Generator(np.random.Philox(key=key))


def increment_autocov(N: int, H: float, T: float) -> np.ndarray:
    """Autocovariance of the grid increments at lags ``0..N``."""
    return (T / N) ** (2 * H) * rho_H(np.arange(N + 1), H)


@lru_cache(maxsize=16)
def _cholesky_factor(N: int, H: float, T: float) -> np.ndarray:
    if N > CHOLESKY_CAP:
        raise TooLarge(f"Cholesky sampler capped at N={CHOLESKY_CAP}")
    return np.linalg.cholesky(toeplitz(increment_autocov(N, H, T)[:N]))


@lru_cache(maxsize=16)
def _circulant_sqrt_eigs(N: int, H: float, T: float) -> np.ndarray:
    g = increment_autocov(N, H, T)
    row = np.concatenate([g, g[-2:0:-1]])
    lam = np.fft.fft(row).real
    if lam.min() < -1e-10 * lam.max():
        raise CirculantEmbeddingFailure(f"negative circulant eigenvalue {lam.min():.3e}")
    return np.sqrt(np.clip(lam, 0.0, None) / row.size)


def resolve_method(method: str, N: int) -> str:
    method = method.lower()
    if method not in ("auto", "cholesky", "circulant"):
        raise ValidationError(f"unknown sampler {method!r}")
    if method == "auto":
        return "cholesky" if N <= AUTO_CHOLESKY_MAX else "circulant"
    return method


def sample_fbm_paths(n_paths: int, N: int, H: float, T: float = 1.0, seed: int = 0,
                     method: str = "auto", start: int = 0) -> np.ndarray:
    """Array of shape ``(n_paths, N+1)``; row ``r`` uses the stream of path ``start+r``.

    A path does not depend on how the batch is split, up to the rounding of
    the matrix product.
    """
    H = check_hurst(H)
    if N < 1:
        raise ValidationError("N must be positive")
    m = resolve_method(method, N)
    if m == "circulant":
        try:
            sq = _circulant_sqrt_eigs(N, H, T)
        except CirculantEmbeddingFailure:
            if method.lower() != "auto":
                raise
            m = "cholesky"
    out = np.zeros((n_paths, N + 1))
    if m == "cholesky":
        L = _cholesky_factor(N, H, T)
        Z = np.empty((n_paths, N))
        for r in range(n_paths):
            Z[r] = path_rng(seed, start + r).standard_normal(N)
        incr = Z @ L.T
    else:
        M = sq.size
        Z = np.empty((n_paths, M), dtype=complex)
        for r in range(n_paths):
            z = path_rng(seed, start + r).standard_normal(2 * M)
            Z[r].real = z[:M]
            Z[r].imag = z[M:]
        incr = np.fft.fft(sq * Z, axis=1).real[:, :N]
    np.cumsum(incr, axis=1, out=out[:, 1:])
    return out


def sample_fbm(N: int, H: float, T: float = 1.0, seed: int = 0, method: str = "auto",
               path_index: int = 0) -> FbmPath:
    values = sample_fbm_paths(1, N, H, T, seed, method, start=path_index)[0]
    return FbmPath(H, T, N, values)


# -- solvers -----------------------------------------------------------------

def _fine_grid(values: np.ndarray, substeps: int, n: Optional[int]) -> int:
    N = values.shape[-1] - 1
    if substeps < 1:
        raise ValidationError("substeps must be at least 1")
    if N % substeps or (n is not None and N != n * substeps):
        raise ResolutionMismatch(f"path resolution {N} does not match n*substeps")
    return N


def solve_fou(path, b: float, sigma: float, x0: float, substeps: int = DEFAULT_SUBSTEPS,
              T: Optional[float] = None, n: Optional[int] = None) -> np.ndarray:
    """fOU values on the observation grid.

    Uses ``X_t = x0 e^{-bt} + sigma (B_t - b int_0^t e^{-b(t-s)} B_s ds)`` with the
    Riemann integral accumulated by the trapezoid rule on the fine grid.
    ``path`` is an ``FbmPath`` or an array whose last axis is the fine grid.
    """
    if isinstance(path, FbmPath):
        values, T = path.values, path.T
    else:
        values = np.asarray(path, dtype=float)
        if T is None:
            raise ValidationError("T is required when passing a raw array")
    if b < 0 or sigma < 0:
        raise ValidationError("b and sigma must be nonnegative")
    N = _fine_grid(values, substeps, n)
    h = T / N
    a = np.exp(-b * h)
    u = np.zeros_like(values)
    u[..., 1:] = 0.5 * h * (a * values[..., :-1] + values[..., 1:])
    J = lfilter([1.0], [1.0, -a], u, axis=-1)
    t = np.linspace(0.0, T, N + 1)
    X = x0 * np.exp(-b * t) + sigma * (values - b * J)
    return X[..., ::substeps]


@dataclass(frozen=True)
class SdeCoefficients:
    """``dX = V2(X) dt + V1(X) dB``; derivatives are optional extras."""

    v1: Callable
    v2: Callable
    x0: float
    dv1: Optional[Callable] = None
    d2v1: Optional[Callable] = None
    dv2: Optional[Callable] = None


def solve_sde_young(path, coeffs: SdeCoefficients, substeps: int = DEFAULT_SUBSTEPS,
                    T: Optional[float] = None, n: Optional[int] = None,
                    fine: bool = False) -> np.ndarray:
    """First-order Euler scheme on the fine grid (demonstrator, no exactness claim)."""
    if isinstance(path, FbmPath):
        values, T = path.values, path.T
    else:
        values = np.asarray(path, dtype=float)
        if T is None:
            raise ValidationError("T is required when passing a raw array")
    N = _fine_grid(values, substeps, n)
    h = T / N
    dB = np.diff(values, axis=-1)
    X = np.empty_like(values)
    X[..., 0] = coeffs.x0
    for k in range(N):
        x = X[..., k]
        X[..., k + 1] = x + coeffs.v2(x) * h + coeffs.v1(x) * dB[..., k]
    return X if fine else X[..., ::substeps]


# -- quadratic variation -------------------------------------------------------

@dataclass(frozen=True)
class QvReport:
    n: int
    v_n: float
    v_inf: float
    z_n: float
    r_n: float


def r_n(n: int, H: float) -> float:
    return n ** (2 * H - 1.5)


def qv_values(x_grid: np.ndarray, H: float) -> np.ndarray:
    """``n^{2H-1} sum_j (Delta_j X)^2`` along the last axis."""
    x = np.asarray(x_grid, dtype=float)
    n = x.shape[-1] - 1
    return n ** (2 * H - 1) * np.sum(np.diff(x, axis=-1) ** 2, axis=-1)


def quadratic_variation(x_grid, n: int, H: float, v_inf: float) -> QvReport:
    x = np.asarray(x_grid, dtype=float)
    if x.ndim != 1 or x.size != n + 1:
        raise LengthMismatch(f"expected {n + 1} grid values, got shape {x.shape}")
    v = float(qv_values(x, H))
    return QvReport(n, v, v_inf, float(np.sqrt(n) * (v - v_inf)), r_n(n, H))


def v_inf_fou(sigma: float, T: float, H: float) -> float:
    return sigma ** 2 * T ** (2 * H)


def v_inf_general(x_fine: np.ndarray, v1: Callable, T: float, H: float) -> np.ndarray:
    """``T^{2H-1} int_0^T V1(X_t)^2 dt`` by the trapezoid rule."""
    x = np.asarray(x_fine, dtype=float)
    t = np.linspace(0.0, T, x.shape[-1])
    return T ** (2 * H - 1) * np.trapezoid(v1(x) ** 2, t, axis=-1)


def thread_count(requested: Optional[int] = None) -> int:
    env = os.environ.get("FEXPO_THREADS")
    if env:
        return max(1, int(env))
    if requested:
        return max(1, int(requested))
    return os.cpu_count() or 1


@dataclass(frozen=True)
class FouRun:
    v_n: np.ndarray
    z_n: np.ndarray
    int_x2: np.ndarray
    v_inf: float
    r_n: float


def simulate_fou_qv(H: float, b: float, sigma: float, x0: float, T: float, n: int,
                    paths: int, substeps: int = DEFAULT_SUBSTEPS, seed: int = 0,
                    method: str = "auto", threads: Optional[int] = None,
                    chunk: int = 4096) -> FouRun:
    """Monte Carlo of ``V_n`` and ``Z_n`` for the fOU process.

    Also returns ``int_0^T X_t^2 dt`` per path (trapezoid on the fine grid),
    which feeds the Monte Carlo symbol coefficient.
    """
    H = check_hurst(H)
    N = n * substeps
    v_inf = v_inf_fou(sigma, T, H)
    starts = list(range(0, paths, chunk))

    def work(start: int):
        cnt = min(chunk, paths - start)
        B = sample_fbm_paths(cnt, N, H, T, seed, method, start=start)
        Xf = solve_fou(B, b, sigma, x0, substeps=1, T=T)
        X = Xf[:, ::substeps]
        v = qv_values(X, H)
        ix2 = np.trapezoid(Xf ** 2, dx=T / N, axis=1)
        return v, ix2

    workers = thread_count(threads)
    if workers > 1 and len(starts) > 1:
        with ThreadPoolExecutor(workers) as ex:
            results = list(ex.map(work, starts))
    else:
        results = [work(s) for s in starts]
    v = np.concatenate([r[0] for r in results])
    ix2 = np.concatenate([r[1] for r in results])
    return FouRun(v, np.sqrt(n) * (v - v_inf), ix2, v_inf, r_n(n, H))
