"""The optimization layer: exploration designs, the per-round variance-budget
program over the simplex, and the instance allocation constant.

The per-round program minimizes sum_x p_x * gap_x subject to
||x||^2_{S(p)^-1} <= t*gap_x^2/beta + 4d for every arm. A constructive
two-stage procedure (entropy-style log-det surrogate + exploration mixture)
always produces a feasible point with a certified objective bound; an SLSQP
polish from that point recovers the actual minimizer, which is what the
sampling algorithms use. The constructive point doubles as the fallback when
the polish fails feasibility re-verification.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.optimize

from .core import ActionSet, ArmDistribution, BanditInstance
from .errors import EmptySubset, NonFiniteGaps, NonOrthonormal, Unbounded
from .linalg import DesignMatrix, gram, inv_quad_matrix, log_det, quad_norm

BETA_BASE = 2.0**15           # leading factor of the confidence weight
FEAS_RTOL = 1e-6              # relative constraint tolerance for solutions
EXPLORATION_BOUND_SLACK = 1e-3  # allowed slack above 2d in the design bound


def beta_t(t: int, n_arms: int, delta: float, scale: float = 1.0) -> float:
    """Confidence weight c_beta * ln(t * n_arms / delta), c_beta = scale * 2^15."""
    if t < 1:
        raise ValueError(f"t must be >= 1, got {t}")
    if not (0 < delta <= 0.1):
        raise ValueError(f"delta must be in (0, 0.1], got {delta}")
    if scale <= 0:
        raise ValueError(f"scale must be positive, got {scale}")
    return scale * BETA_BASE * math.log(t * n_arms / delta)


@dataclass(frozen=True)
class DesignWeights:
    """Unnormalized per-arm pull weights N_x >= 0."""

    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if np.any(w < 0) or np.any(~np.isfinite(w)):
            raise ValueError("design weights must be finite and nonnegative")
        object.__setattr__(self, "weights", w)


@dataclass(frozen=True)
class OpSolution:
    p: ArmDistribution
    objective: float
    max_violation: float      # max relative constraint excess (<= FEAS_RTOL)
    iterations: int
    beta: float


@dataclass
class OpConfig:
    """Stop criteria for the constructive stage (exposed as config)."""

    max_iters: int = 5000
    gap_tol: float = 1e-7
    polish: bool = True


def exploration_design(
    g_indices, action_set: ActionSet, kappa: float, max_iters: int = 4000
) -> ArmDistribution:
    """Mixture kappa*uniform(X) + (1-kappa)*q with q supported on the subset,
    guaranteeing max over the subset of ||x||^2_{S^-1} <= 2d + 1e-3.

    q is the D-optimal-style allocation over the subset computed by
    Frank-Wolfe on the mixed design matrix; the kappa-mixture supplies full
    rank, so the quadratic norms are always defined.
    """
    g_indices = np.asarray(sorted(set(int(i) for i in g_indices)), dtype=int)
    if g_indices.size == 0:
        raise EmptySubset("exploration design needs a nonempty arm subset")
    if not (0 < kappa <= 0.5):
        raise ValueError(f"kappa must be in (0, 1/2], got {kappa}")
    n, d = action_set.n_arms, action_set.d
    uniform = np.full(n, 1.0 / n)
    sub = action_set.actions[g_indices]
    target = 2.0 * d

    q = np.full(g_indices.size, 1.0 / g_indices.size)

    def mixture(qg):
        w = kappa * uniform
        w_full = w.copy()
        w_full[g_indices] += (1.0 - kappa) * qg
        return w_full

    def norms(qg):
        m = gram(mixture(qg), action_set)
        return np.array([quad_norm(x, m) for x in sub]), m

    ns, m = norms(q)
    it = 0
    while it < max_iters and ns.max() > target:
        j = int(np.argmax(ns))
        e = np.zeros_like(q)
        e[j] = 1.0

        def objective(gamma):
            m2 = gram(mixture((1 - gamma) * q + gamma * e), action_set)
            return -log_det(m2)

        res = scipy.optimize.minimize_scalar(
            objective, bounds=(0.0, 0.999), method="bounded",
            options={"xatol": 1e-6},
        )
        step = float(res.x)
        if step <= 1e-12:
            break
        q = (1 - step) * q + step * e
        ns, m = norms(q)
        it += 1

    if ns.max() > target + EXPLORATION_BOUND_SLACK:
        raise Unbounded(
            f"exploration design failed its 2d bound: max norm {ns.max():.4f} > {target}"
        )
    return ArmDistribution(mixture(q))


def _constructive_point(
    t: int, gaps: np.ndarray, action_set: ActionSet, beta: float, cfg: OpConfig
) -> tuple[np.ndarray, int]:
    """Feasible point: Frank-Wolfe on the log-det surrogate, then a half-half
    mixture with the exploration design over the small-gap set."""
    n, d = action_set.n_arms, action_set.d
    xi = math.sqrt(t) / beta
    p = np.full(n, 1.0 / n)
    m = gram(p, action_set)
    base = np.sum(p * gaps)
    it = 0
    while it < cfg.max_iters:
        w = inv_quad_matrix(m, action_set.actions)
        qn = np.diag(w)
        grad = gaps - (2.0 / xi) * qn
        j = int(np.argmin(grad))
        # FW gap via the trace identity: <grad, p> = <gaps, p> - 2d/xi
        fw_gap = float(np.sum(p * gaps) - 2.0 * d / xi - grad[j])
        if fw_gap <= cfg.gap_tol * d / xi:
            break
        qj = qn[j]
        ldet = log_det(m)
        a = float(np.sum(p * gaps))
        b = gaps[j]

        def f1d(g):
            # log det((1-g) S + g x x^T) = d log(1-g) + log det S + log(1 + g/(1-g) q)
            return (1 - g) * a + g * b - (2.0 / xi) * (
                d * math.log1p(-g) + ldet + math.log1p(g / (1 - g) * qj)
            )

        res = scipy.optimize.minimize_scalar(
            f1d, bounds=(0.0, 0.999), method="bounded", options={"xatol": 1e-9}
        )
        step = float(res.x)
        if step <= 1e-14:
            break
        p = (1 - step) * p
        p[j] += step
        m = gram(p, action_set)
        it += 1

    kappa = min(0.5, 1.0 / math.sqrt(t)) if t > 4 else 0.5
    g_set = np.nonzero(gaps <= 1.0 / math.sqrt(t))[0]
    if g_set.size == 0:
        g_set = np.array([int(np.argmin(gaps))])
    q_mix = exploration_design(g_set, action_set, kappa)
    return 0.5 * p + 0.5 * q_mix.weights, it


def op_feasibility_check(
    p, t: int, gap_estimates, beta: float, action_set: ActionSet
) -> dict:
    """Per-arm slack report for the variance-budget constraints."""
    weights = p.weights if isinstance(p, ArmDistribution) else np.asarray(p, float)
    gaps = np.asarray(gap_estimates, dtype=float)
    bounds = t * gaps**2 / beta + 4.0 * action_set.d
    m = gram(weights, action_set)
    slacks = np.empty(action_set.n_arms)
    for i, x in enumerate(action_set):
        try:
            slacks[i] = bounds[i] - quad_norm(x, m)
        except Exception:
            slacks[i] = -np.inf
    rel_violation = float(np.max(-slacks / bounds))
    return {
        "slacks": slacks,
        "bounds": bounds,
        "max_relative_violation": rel_violation,
        "feasible": bool(rel_violation <= FEAS_RTOL),
    }


def _polish(p0, gaps, action_set, bounds):
    """SLSQP refinement of the linear objective under the convex norm caps."""
    n = action_set.n_arms
    actions = action_set.actions
    cache: dict[bytes, tuple[np.ndarray, np.ndarray]] = {}

    def norms_and_jac(p):
        key = p.tobytes()
        if key not in cache:
            cache.clear()
            try:
                w = inv_quad_matrix(gram(np.clip(p, 0, None), action_set), actions)
                cache[key] = (np.diag(w).copy(), w**2)
            except Exception:
                cache[key] = (np.full(n, 1e12), np.zeros((n, n)))
        return cache[key]

    cons = [
        {"type": "eq", "fun": lambda p: p.sum() - 1.0, "jac": lambda p: np.ones(n)},
        {
            "type": "ineq",
            "fun": lambda p: (bounds - norms_and_jac(p)[0]) / bounds,
            "jac": lambda p: norms_and_jac(p)[1] / bounds[:, None],
        },
    ]
    res = scipy.optimize.minimize(
        lambda p: float(p @ gaps),
        p0,
        jac=lambda p: gaps,
        method="SLSQP",
        bounds=[(0.0, 1.0)] * n,
        constraints=cons,
        options={"maxiter": 200, "ftol": 1e-12},
    )
    p = np.clip(res.x, 0.0, None)
    s = p.sum()
    return p / s if s > 0 else p0


def solve_op(
    t: int,
    gap_estimates,
    action_set: ActionSet,
    beta: float,
    tol: float = 1e-7,
    config: OpConfig | None = None,
) -> OpSolution:
    """Minimize sum_x p_x gap_x over the simplex under the variance budget
    ||x||^2_{S(p)^-1} <= t gap_x^2 / beta + 4d for every arm."""
    gaps = np.asarray(gap_estimates, dtype=float)
    if np.any(~np.isfinite(gaps)) or np.any(gaps < 0):
        raise NonFiniteGaps(f"gap estimates must be finite and nonnegative: {gaps}")
    cfg = config or OpConfig(gap_tol=tol)
    n, d = action_set.n_arms, action_set.d
    bounds = t * gaps**2 / beta + 4.0 * d

    p_cons, iters = _constructive_point(t, gaps, action_set, beta, cfg)
    candidates = [p_cons]
    if cfg.polish:
        candidates.append(_polish(p_cons, gaps, action_set, bounds))

    best, best_obj, best_report = None, np.inf, None
    for p in candidates:
        report = op_feasibility_check(p, t, gaps, beta, action_set)
        obj = float(p @ gaps)
        if report["feasible"] and obj < best_obj:
            best, best_obj, best_report = p, obj, report

    if best is None:
        # repeated halving toward the always-feasible full-set exploration mix
        kappa = min(0.5, 1.0 / math.sqrt(t)) if t > 4 else 0.5
        q = exploration_design(range(n), action_set, kappa).weights
        p = p_cons
        for _ in range(64):
            p = 0.5 * p + 0.5 * q
            report = op_feasibility_check(p, t, gaps, beta, action_set)
            if report["feasible"]:
                best, best_obj, best_report = p, float(p @ gaps), report
                break
        else:
            raise Unbounded("no feasible point found for the variance-budget program")

    return OpSolution(
        p=ArmDistribution(best),
        objective=best_obj,
        max_violation=best_report["max_relative_violation"],
        iterations=iters,
        beta=beta,
    )


def orthonormal_oracle(gaps) -> float:
    """Closed-form allocation value for orthonormal arms: sum over suboptimal
    arms of 2/gap (the constraint diagonalizes to 1/N_x <= gap_x^2/2)."""
    gaps = np.asarray(gaps, dtype=float)
    zeros = np.sum(gaps == 0.0)
    if zeros != 1 or np.any(gaps < 0):
        raise NonOrthonormal(
            "need exactly one zero gap and positive gaps elsewhere"
        )
    return float(np.sum(2.0 / gaps[gaps > 0]))


N_STAR_CAP = 1e9  # N_{x*} <= cap / delta_min^2: the infimum may push it unbounded


def _allocation_construction(instance: BanditInstance) -> np.ndarray:
    """Feasible start from grouped exploration designs (value <= 48d/delta_min)."""
    xs = instance.action_set
    d = xs.d
    gaps = instance.gaps
    dmin = instance.delta_min
    ratios = np.zeros_like(gaps)
    sub = gaps > 0
    ratios[sub] = gaps[sub] ** 2 / dmin**2
    group_of = np.zeros(len(gaps), dtype=int)
    group_of[sub] = np.floor(np.log2(np.maximum(ratios[sub], 1.0))).astype(int) + 1
    n_top = max(int(group_of.max()), 1)
    kappa = min(0.5, 1.0 / (xs.n_arms * n_top * 2.0**n_top))
    counts = np.zeros(xs.n_arms)
    for i in range(1, n_top + 1):
        members = np.nonzero(group_of == i)[0]
        if members.size == 0:
            continue
        q = exploration_design(members, xs, kappa).weights
        counts += 4.0 * d * q / (2.0 ** (i - 1) * dmin**2)
    counts[instance.optimal_index] += min(N_STAR_CAP / dmin**2, 1e12) * 1e-3
    return counts


def _project_feasible(counts: np.ndarray, instance: BanditInstance) -> np.ndarray:
    """Scale counts up so every constraint holds with slack 0 for the worst arm."""
    xs = instance.action_set
    gaps = instance.gaps
    m = (xs.actions.T * counts) @ xs.actions
    worst = 0.0
    for i, x in enumerate(xs):
        if gaps[i] <= 0:
            continue
        worst = max(worst, quad_norm(x, m) / (gaps[i] ** 2 / 2.0))
    return counts * worst if worst > 1.0 else counts


def instance_constant_c(
    instance: BanditInstance, tol: float = 0.02, n_starts: int = 5, seed: int = 0
) -> tuple[float, DesignWeights]:
    """Approximately optimal allocation value for distinguishing the instance.

    Penalty method over log-parameterized counts with an increasing penalty
    schedule, multi-start around the grouped construction, then a
    feasibility projection. The optimal arm's count is a free variable with
    zero cost, capped at 1e9/delta_min^2.
    """
    xs = instance.action_set
    gaps = instance.gaps
    star = instance.optimal_index
    actions = xs.actions
    cost = gaps.copy()
    targets = gaps**2 / 2.0
    sub = np.nonzero(gaps > 0)[0]
    cap = math.log(N_STAR_CAP / instance.delta_min**2)

    def penalized(u, lam):
        counts = np.exp(u)
        m = (actions.T * counts) @ actions
        try:
            cross = inv_quad_matrix(m, actions)
        except Exception:
            return 1e18, np.zeros_like(u)
        qn = np.diag(cross)[sub]
        viol = np.clip(qn - targets[sub], 0.0, None)
        f = float(counts @ cost + lam * np.sum(viol**2))
        # d qn_i / d counts_y = -(x_i^T M^-1 x_y)^2
        jac_counts = cost - 2.0 * lam * (viol @ (cross[sub, :] ** 2))
        return f, jac_counts * counts

    rng = np.random.default_rng(seed)
    base = np.maximum(_allocation_construction(instance), 1e-8)
    best_val, best_counts = np.inf, None
    for s in range(n_starts):
        start = base if s == 0 else base * rng.lognormal(0.0, 0.7, size=base.size)
        u = np.log(start)
        for lam in (1e2, 1e4, 1e6, 1e8, 1e10):
            res = scipy.optimize.minimize(
                penalized,
                u,
                args=(lam,),
                jac=True,
                method="L-BFGS-B",
                bounds=[(math.log(1e-10), cap)] * u.size,
                options={"maxiter": 400},
            )
            u = res.x
        counts = _project_feasible(np.exp(u), instance)
        val = float(counts @ cost)
        if val < best_val:
            best_val, best_counts = val, counts
    if best_counts is None or not np.isfinite(best_val):
        raise Unbounded("allocation optimization failed on a valid instance")
    return best_val, DesignWeights(best_counts)
