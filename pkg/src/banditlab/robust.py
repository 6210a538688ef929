"""Catoni's robust mean estimator, the soft-clip influence function, and the
confidence-width parameters used by the block and per-round gap estimates.

Bisection (not Newton) finds the root: the influence derivative can be tiny
far from the root, while bisection is unconditionally convergent inside the
bracket [min X - 3/alpha, max X + 3/alpha], whose validity is asserted at
runtime. All logs are natural logs.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import BadBounds, EmptySamples

F_TOL = 1e-12          # |f(z)| <= F_TOL * n terminates
WIDTH_TOL = 1e-12      # bracket width terminating bisection
BRACKET_PAD = 3.0      # padding 3/alpha, from the logarithmic growth of psi

try:
    from numba import njit

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    _HAVE_NUMBA = False

    def njit(*args, **kwargs):
        def wrap(f):
            return f

        return wrap if not (args and callable(args[0])) else args[0]


def psi(y):
    """Soft-clipped influence: ln(1 + y + y^2/2) for y >= 0, odd extension."""
    y = np.asarray(y, dtype=float)
    out = np.where(y >= 0, np.log1p(y + 0.5 * y * y), -np.log1p(-y + 0.5 * y * y))
    return float(out) if out.ndim == 0 else out


def clip(v: float, lo: float = -1.0, hi: float = 1.0) -> float:
    if lo > hi:
        raise BadBounds(f"lo={lo} > hi={hi}")
    return min(max(v, lo), hi)


@njit(cache=True)
def _weighted_root(values, counts, alpha, lo, hi, n):  # pragma: no cover - jitted
    """Bisection root of sum_i c_i * psi(alpha*(v_i - z)) on [lo, hi]."""
    for _ in range(200):
        z = 0.5 * (lo + hi)
        f = 0.0
        for i in range(values.shape[0]):
            y = alpha * (values[i] - z)
            if y >= 0.0:
                f += counts[i] * math.log1p(y + 0.5 * y * y)
            else:
                f -= counts[i] * math.log1p(-y + 0.5 * y * y)
        if abs(f) <= 1e-12 * n:
            return z
        if f > 0.0:
            lo = z
        else:
            hi = z
        if hi - lo <= 1e-12:
            break
    return 0.5 * (lo + hi)


def _weighted_root_py(values, counts, alpha, lo, hi, n):
    for _ in range(200):
        z = 0.5 * (lo + hi)
        y = alpha * (values - z)
        f = float(np.sum(counts * np.where(y >= 0, np.log1p(y + 0.5 * y * y),
                                           -np.log1p(-y + 0.5 * y * y))))
        if abs(f) <= F_TOL * n:
            return z
        if f > 0.0:
            lo = z
        else:
            hi = z
        if hi - lo <= WIDTH_TOL:
            break
    return 0.5 * (lo + hi)


def catoni_estimate_weighted(values, counts, alpha: float) -> float:
    """Catoni root for samples given as (value, multiplicity) pairs."""
    values = np.ascontiguousarray(values, dtype=float)
    counts = np.ascontiguousarray(counts, dtype=float)
    n = float(counts.sum())
    if values.size == 0 or n <= 0:
        raise EmptySamples("catoni estimator needs at least one sample")
    if alpha <= 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    lo = float(values.min()) - BRACKET_PAD / alpha
    hi = float(values.max()) + BRACKET_PAD / alpha
    # Root bracketing must hold: f(lo) > 0 > f(hi).
    ylo = alpha * (values - lo)
    yhi = alpha * (values - hi)
    flo = float(np.sum(counts * np.log1p(ylo + 0.5 * ylo * ylo)))
    fhi = float(np.sum(counts * -np.log1p(-yhi + 0.5 * yhi * yhi)))
    assert flo > 0.0 > fhi, "catoni bracket failed to straddle the root"
    if _HAVE_NUMBA:
        return float(_weighted_root(values, counts, alpha, lo, hi, n))
    return float(_weighted_root_py(values, counts, alpha, lo, hi, n))


def catoni_estimate(samples, alpha: float) -> float:
    """The unique root z of f(z) = sum_i psi(alpha * (X_i - z)).

    f is strictly decreasing in z, so bisection on the padded bracket
    converges; terminates at |f(z)| <= 1e-12 n or width <= 1e-12.
    """
    samples = np.asarray(samples, dtype=float)
    if samples.size == 0:
        raise EmptySamples("catoni estimator needs at least one sample")
    return catoni_estimate_weighted(samples, np.ones_like(samples), alpha)


def alpha_block(m: int, norm_sq: float, n_arms: int, delta: float) -> float:
    """Confidence-width parameter for the end-of-block robust estimate."""
    if m < 0 or norm_sq < 0:
        raise ValueError("m and norm_sq must be nonnegative")
    if not (0 < delta <= 0.1):
        raise ValueError(f"delta must be in (0, 0.1], got {delta}")
    n = 2.0**m
    return math.sqrt(4.0 * math.log(n * n_arms / delta) / (n * norm_sq + n))


def alpha_phase2(t: int, t0: int, cum_norm_sq: float, n_arms: int, delta: float) -> float:
    """Confidence-width parameter for the running exploitation-phase estimate."""
    if not t > t0 >= 1:
        raise ValueError(f"need t > t0 >= 1, got t={t}, t0={t0}")
    if cum_norm_sq < 0:
        raise ValueError("cum_norm_sq must be nonnegative")
    return math.sqrt(4.0 * math.log(t * n_arms / delta) / (t - t0 + cum_norm_sq))
