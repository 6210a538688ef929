"""Domain types shared by every module, plus regret accounting.

Arms are referenced by stable integer index into the ordered ActionSet; all
per-arm maps are index-keyed. Core types are immutable after construction
(arrays are marked read-only) and safe to share across threads.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from .errors import (
    DuplicateArm,
    LengthMismatch,
    MeanOutOfRange,
    NonUniqueOptimum,
    NormViolation,
    RankDeficient,
)

ABS_TOL = 1e-9          # generic floating-point comparisons
OPTIMUM_TOL = 1e-12     # uniqueness of the optimal arm (gates instance validity)
NORM_TOL = 1e-12        # slack on the unit-ball check


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class ActionSet:
    """Finite arm set X subset of the unit ball, spanning R^d."""

    actions: np.ndarray  # shape (n_arms, d), rows are arms
    d: int

    @property
    def n_arms(self) -> int:
        return self.actions.shape[0]

    def __iter__(self) -> Iterator[np.ndarray]:
        return iter(self.actions)

    def __getitem__(self, i: int) -> np.ndarray:
        return self.actions[i]


def validate_action_set(actions: Sequence[Sequence[float]] | np.ndarray) -> ActionSet:
    """Validate and freeze an arm set.

    Raises NormViolation, RankDeficient, or DuplicateArm. Rank is computed
    via a pivoted QR decomposition of the stacked action matrix.
    """
    mat = np.atleast_2d(np.asarray(actions, dtype=float))
    if mat.ndim != 2 or mat.size == 0:
        raise RankDeficient("action set must be a nonempty list of equal-length vectors")
    n, d = mat.shape
    if n < 2:
        raise RankDeficient(f"need at least 2 arms, got {n}")
    norms = np.linalg.norm(mat, axis=1)
    bad = np.nonzero(norms > 1.0 + NORM_TOL)[0]
    if bad.size:
        raise NormViolation(f"arm {bad[0]} has norm {norms[bad[0]]:.6g} > 1")
    for i in range(n):
        for j in range(i + 1, n):
            if np.array_equal(mat[i], mat[j]):
                raise DuplicateArm(f"arms {i} and {j} are identical")
    from scipy.linalg import qr

    r = qr(mat.T, mode="r", pivoting=True)[0]
    diag = np.abs(np.diag(r))
    rank = int(np.sum(diag > max(n, d) * np.finfo(float).eps * (diag[0] if diag.size else 1.0)))
    if rank < d:
        raise RankDeficient(f"actions span a rank-{rank} subspace of R^{d}")
    return ActionSet(actions=_readonly(mat), d=d)


@dataclass(frozen=True)
class BanditInstance:
    """Fixed loss vector theta with derived per-arm gaps."""

    action_set: ActionSet
    theta: np.ndarray
    gaps: np.ndarray
    optimal_index: int
    delta_min: float

    @property
    def means(self) -> np.ndarray:
        return self.action_set.actions @ self.theta


def make_instance(action_set: ActionSet, theta: Sequence[float] | np.ndarray) -> BanditInstance:
    """Build an instance, deriving gaps and the unique optimal arm."""
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (action_set.d,):
        raise MeanOutOfRange(f"theta must have shape ({action_set.d},)")
    means = action_set.actions @ theta
    if np.any(np.abs(means) > 1.0 + ABS_TOL):
        worst = int(np.argmax(np.abs(means)))
        raise MeanOutOfRange(f"|<x,theta>| = {abs(means[worst]):.6g} > 1 for arm {worst}")
    order = np.argsort(means)
    best = int(order[0])
    if means[order[1]] - means[best] <= OPTIMUM_TOL:
        raise NonUniqueOptimum(
            f"arms {best} and {int(order[1])} tie at mean {means[best]:.12g}"
        )
    gaps = means - means[best]
    gaps[best] = 0.0
    delta_min = float(np.min(gaps[gaps > 0]))
    return BanditInstance(
        action_set=action_set,
        theta=_readonly(theta),
        gaps=_readonly(gaps),
        optimal_index=best,
        delta_min=delta_min,
    )


@dataclass(frozen=True)
class ArmDistribution:
    """Element of the probability simplex over the arm set."""

    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if np.any(w < -ABS_TOL):
            raise ValueError(f"negative weight {w.min():.3g}")
        s = w.sum()
        if abs(s - 1.0) > ABS_TOL:
            raise ValueError(f"weights sum to {s!r}, not 1")
        w = np.clip(w, 0.0, None)
        object.__setattr__(self, "weights", _readonly(w / w.sum()))

    def sample(self, u: float) -> int:
        """Inverse-CDF draw from a single uniform u in [0, 1)."""
        return int(np.searchsorted(np.cumsum(self.weights), u, side="right"))


@dataclass
class RoundRecord:
    """One simulated round. y is the observed loss in [-1, 1]."""

    t: int
    arm_index: int
    y: float
    phase_tag: str
    block: int
    inst_regret: float
    estimators: np.ndarray | None = None


@dataclass
class Trace:
    """Columnar per-round log with cumulative regret series.

    pseudo_cum is the prefix sum of the pulled arms' gaps; adv_cum is the
    running max over fixed comparators of cumulative loss differences
    (defined whenever the loss sequence is simulator-side known).
    """

    t: np.ndarray
    arm: np.ndarray
    y: np.ndarray
    phase: list[str]
    block: np.ndarray
    pseudo_cum: np.ndarray
    adv_cum: np.ndarray

    def __len__(self) -> int:
        return len(self.t)

    def records(self) -> Iterator[RoundRecord]:
        inst = np.diff(self.pseudo_cum, prepend=0.0)
        for i in range(len(self.t)):
            yield RoundRecord(
                t=int(self.t[i]),
                arm_index=int(self.arm[i]),
                y=float(self.y[i]),
                phase_tag=self.phase[i],
                block=int(self.block[i]),
                inst_regret=float(inst[i]),
            )


def pseudo_regret(arms: Sequence[int] | np.ndarray, instance: BanditInstance) -> np.ndarray:
    """Prefix sums of the pulled arms' sub-optimality gaps."""
    arms = np.asarray(arms, dtype=int)
    if arms.size and (arms.min() < 0 or arms.max() >= instance.action_set.n_arms):
        raise IndexError("arm index out of range for instance")
    return np.cumsum(instance.gaps[arms]) if arms.size else np.zeros(0)


def adversarial_regret(
    arms: Sequence[int] | np.ndarray,
    loss_vectors: np.ndarray,
    action_set: ActionSet,
) -> float:
    """max over comparators x of sum_t <x_t - x, ell_t>."""
    arms = np.asarray(arms, dtype=int)
    loss_vectors = np.asarray(loss_vectors, dtype=float)
    if loss_vectors.shape != (arms.size, action_set.d):
        raise LengthMismatch(
            f"need {arms.size} loss vectors of dim {action_set.d}, got {loss_vectors.shape}"
        )
    if arms.size == 0:
        return 0.0
    # per-round mean loss of every arm: (T, n_arms)
    arm_losses = loss_vectors @ action_set.actions.T
    learner = arm_losses[np.arange(arms.size), arms].sum()
    return float(learner - arm_losses.sum(axis=0).min())


def adversarial_regret_series(
    arms: np.ndarray, loss_vectors: np.ndarray, action_set: ActionSet
) -> np.ndarray:
    """Running max-over-comparators regret after each round."""
    arms = np.asarray(arms, dtype=int)
    arm_losses = loss_vectors @ action_set.actions.T
    learner = np.cumsum(arm_losses[np.arange(arms.size), arms])
    comparators = np.cumsum(arm_losses, axis=0)
    return learner - comparators.min(axis=1)


class RngStream:
    """Counter-based splittable random stream (Philox keyed by a path).

    Identical seed and identical draw sequence give identical outputs.
    child(*tags) derives an independent stream whose key is a hash of the
    (seed, path) tuple, so each (trial, purpose) stream is addressable
    without sharing state; parallel sweeps are bit-reproducible.
    """

    __slots__ = ("seed", "path", "_gen")

    def __init__(self, seed: int, path: tuple = ()):
        self.seed = int(seed)
        self.path = tuple(path)
        self._gen: np.random.Generator | None = None

    def child(self, *tags) -> "RngStream":
        return RngStream(self.seed, self.path + tags)

    @property
    def generator(self) -> np.random.Generator:
        if self._gen is None:
            material = repr((self.seed, self.path)).encode()
            key = np.frombuffer(hashlib.sha256(material).digest()[:16], dtype=np.uint64)
            self._gen = np.random.Generator(np.random.Philox(key=key))
        return self._gen

    def uniform(self, low: float = 0.0, high: float = 1.0, size=None):
        return self.generator.uniform(low, high, size)

    def integers(self, low: int, high: int | None = None, size=None):
        return self.generator.integers(low, high, size)
