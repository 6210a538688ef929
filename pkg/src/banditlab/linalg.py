"""Small dense symmetric-PSD linear algebra for design matrices.

No explicit matrix inverse anywhere: every ||x||^2 w.r.t. an inverse design
matrix goes through factor-and-solve, which stays stable for the
near-singular block designs that show up at d <= 32.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import NotPD, SingularDirection

SYM_TOL = 1e-12
PSD_TOL = 1e-10
RANGE_TOL = 1e-10


@dataclass(frozen=True)
class DesignMatrix:
    """Symmetrized d x d PSD matrix (eigenvalues >= -1e-10 up to noise)."""

    mat: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.mat, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"expected square matrix, got shape {m.shape}")
        if np.max(np.abs(m - m.T), initial=0.0) > SYM_TOL * max(1.0, np.abs(m).max()):
            raise ValueError("matrix is not symmetric within tolerance")
        m = 0.5 * (m + m.T)
        scale = max(1.0, float(np.abs(m).max()))
        if np.linalg.eigvalsh(m).min() < -PSD_TOL * scale:
            raise ValueError("matrix has eigenvalue below -1e-10: not PSD")
        m.setflags(write=False)
        object.__setattr__(self, "mat", m)

    @property
    def d(self) -> int:
        return self.mat.shape[0]


def gram(weights, action_set, ridge: float = 0.0) -> DesignMatrix:
    """Weighted sum of arm outer products sum_x w_x x x^T (+ ridge * I)."""
    w = np.asarray(weights, dtype=float)
    if np.any(~np.isfinite(w)) or np.any(w < 0):
        raise ValueError("weights must be finite and nonnegative")
    a = action_set.actions
    m = (a.T * w) @ a
    m = 0.5 * (m + m.T)
    if ridge:
        m = m + ridge * np.eye(action_set.d)
    return DesignMatrix(m)


def _as_array(m) -> np.ndarray:
    return m.mat if isinstance(m, DesignMatrix) else np.asarray(m, dtype=float)


def _eig_solve_quad(m: np.ndarray, x: np.ndarray) -> float:
    """Pseudo-inverse quadratic form; rejects x outside range(m)."""
    vals, vecs = np.linalg.eigh(m)
    scale = max(vals.max(), 0.0)
    keep = vals > RANGE_TOL * max(scale, 1.0)
    coords = vecs.T @ x
    outside = coords[~keep]
    xnorm = np.linalg.norm(x)
    if np.linalg.norm(outside) > RANGE_TOL * max(xnorm, 1.0):
        raise SingularDirection(
            "vector has a component outside range of the design matrix"
        )
    return float(np.sum(coords[keep] ** 2 / vals[keep]))


def quad_norm(x, m) -> float:
    """Squared quadratic norm x^T M^{-1} x via Cholesky solve (no inverse)."""
    x = np.asarray(x, dtype=float)
    mm = _as_array(m)
    try:
        c = scipy.linalg.cho_factor(mm, check_finite=False)
        v = scipy.linalg.cho_solve(c, x, check_finite=False)
        return float(max(x @ v, 0.0))
    except (scipy.linalg.LinAlgError, np.linalg.LinAlgError, ValueError):
        return _eig_solve_quad(mm, x)


def inv_quad_matrix(m, a: np.ndarray) -> np.ndarray:
    """A M^{-1} A^T for row-stacked vectors A; one factorization for all rows."""
    mm = _as_array(m)
    a = np.asarray(a, dtype=float)
    try:
        c = scipy.linalg.cho_factor(mm, check_finite=False)
        v = scipy.linalg.cho_solve(c, a.T, check_finite=False)
        return a @ v
    except (scipy.linalg.LinAlgError, np.linalg.LinAlgError, ValueError) as exc:
        raise SingularDirection(f"design matrix not factorizable: {exc}") from exc


def log_det(m) -> float:
    """log det of a PD matrix via Cholesky; raises NotPD otherwise."""
    mm = _as_array(m)
    try:
        c = np.linalg.cholesky(mm)
    except np.linalg.LinAlgError as exc:
        raise NotPD("matrix is not positive definite") from exc
    return float(2.0 * np.sum(np.log(np.diag(c))))
