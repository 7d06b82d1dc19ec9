"""Top Lyapunov exponent of i.i.d. matrix products: seeded Monte-Carlo
estimates, exact small-n expectations of log ||product||, and the spectral
lower bound (1/d) log(1 / r_spec).

All logarithms are natural.  Matrix norms are operator norms induced by the
Euclidean norm.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import BudgetExceededError
from .group_algebra import ProbMeasure, convolve

EXACT_POWER_CAP = 8
EXACT_SUPPORT_BUDGET = 200_000


@dataclass(frozen=True)
class MatrixMeasure:
    """Finite-support measure on invertible real d x d matrices."""

    matrices: np.ndarray  # (k, d, d)
    weights: np.ndarray  # (k,)

    def __post_init__(self):
        mats = np.asarray(self.matrices, dtype=float)
        w = np.asarray(self.weights, dtype=float)
        if mats.ndim != 3 or mats.shape[1] != mats.shape[2] or mats.shape[0] == 0:
            raise ValueError("matrices must have shape (k, d, d) with k >= 1")
        if w.shape != (mats.shape[0],) or np.any(w <= 0.0):
            raise ValueError("weights must be positive, one per matrix")
        if abs(math.fsum(w.tolist()) - 1.0) > 1e-12:
            raise ValueError("weights must sum to 1")
        dets = np.linalg.det(mats)
        if np.any(np.abs(dets) < 1e-12):
            bad = int(np.argmin(np.abs(dets)))
            raise ValueError(f"matrix {bad} is singular (det {dets[bad]:.2e})")
        mats.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "matrices", mats)
        object.__setattr__(self, "weights", w)

    @property
    def dim(self) -> int:
        return int(self.matrices.shape[1])

    @classmethod
    def from_group_measure(cls, mu: ProbMeasure) -> "MatrixMeasure":
        if mu.family[0] != "matz":
            raise ValueError("only integer-matrix measures convert to MatrixMeasure")
        mats = np.array([g.entries for g in mu.elements()], dtype=float)
        return cls(mats, np.array([w for _g, w in mu.items()]))


def sanov_matrix_measure() -> MatrixMeasure:
    """Uniform measure on (1 2; 0 1), (1 0; 2 1) and their inverses."""
    a = np.array([[1.0, 2.0], [0.0, 1.0]])
    b = np.array([[1.0, 0.0], [2.0, 1.0]])
    mats = np.stack([a, np.linalg.inv(a), b, np.linalg.inv(b)])
    return MatrixMeasure(np.rint(mats), np.full(4, 0.25))


@dataclass(frozen=True)
class LyapunovEstimate:
    """Monte-Carlo estimate of the top Lyapunov exponent with a 95 percent
    confidence half-width across independent trials.

    `exact_subadditive`, when present, holds the exact values of
    (1/n) E[log ||product of n factors||] for small n; these dominate the
    limit from above.
    """

    point_estimate: float
    ci_half_width: float
    n_steps: int
    n_trials: int
    seed: int
    exact_subadditive: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.ci_half_width < 0.0:
            raise ValueError("confidence half-width must be non-negative")
        if self.n_steps < 1 or self.n_trials < 1:
            raise ValueError("need at least one step and one trial")

    def to_json_dict(self) -> dict:
        return {
            "point_estimate": self.point_estimate,
            "ci_half_width": self.ci_half_width,
            "n_steps": self.n_steps,
            "n_trials": self.n_trials,
            "seed": self.seed,
            "exact_subadditive": (
                list(self.exact_subadditive)
                if self.exact_subadditive is not None
                else None
            ),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), sort_keys=True)


def _operator_norm(mat: np.ndarray) -> float:
    return float(np.linalg.norm(mat, 2))


def _trial_growth(measure: MatrixMeasure, n_steps: int, rng: np.random.Generator) -> float:
    """(1/n) log ||X_n ... X_1|| with per-step renormalization.

    The running product is rescaled by frobenius/sqrt(d) each step (exactly 1
    for orthogonal factors) and the log corrections accumulate, so the value
    equals the unnormalized one without overflow.
    """
    mats = measure.matrices
    d = measure.dim
    sqrt_d = math.sqrt(d)
    idx = rng.choice(mats.shape[0], size=n_steps, p=measure.weights)
    prod = np.eye(d)
    log_acc = 0.0
    for i in idx:
        prod = mats[i] @ prod
        scale = math.sqrt(float(np.sum(prod * prod))) / sqrt_d
        prod /= scale
        log_acc += math.log(scale)
    return (log_acc + math.log(_operator_norm(prod))) / n_steps


def estimate_lyapunov(
    measure: MatrixMeasure | ProbMeasure,
    n_steps: int,
    n_trials: int,
    seed: int,
) -> LyapunovEstimate:
    """Monte-Carlo mean of the per-step log growth across independent trials.

    Each trial draws its factor sequence from a substream keyed by
    (seed, trial index), so results are bitwise reproducible and independent
    of evaluation order.
    """
    if isinstance(measure, ProbMeasure):
        measure = MatrixMeasure.from_group_measure(measure)
    if n_steps < 1 or n_trials < 1:
        raise ValueError("need n_steps >= 1 and n_trials >= 1")
    vals = np.empty(n_trials)
    for t in range(n_trials):
        rng = np.random.default_rng(np.random.SeedSequence([int(seed), t]))
        vals[t] = _trial_growth(measure, n_steps, rng)
    point = float(np.mean(vals))
    if n_trials > 1:
        ci = 1.96 * float(np.std(vals, ddof=1)) / math.sqrt(n_trials)
    else:
        ci = 0.0
    return LyapunovEstimate(
        point_estimate=point,
        ci_half_width=ci,
        n_steps=n_steps,
        n_trials=n_trials,
        seed=int(seed),
    )


def exact_u_n(
    mu: ProbMeasure, n_max: int, budget: int = EXACT_SUPPORT_BUDGET
) -> list[float]:
    """Exact expectations u_n = E[log ||g||] under the n-fold convolution
    power, for n = 1 .. n_max (n_max capped at 8).

    Convolution collapses equal products, which keeps free-group supports
    polynomial; the budget guards everything else.
    """
    if mu.family[0] != "matz":
        raise ValueError("exact expectations need integer-matrix elements")
    if not 1 <= n_max <= EXACT_POWER_CAP:
        raise ValueError(f"n_max must be in 1..{EXACT_POWER_CAP}")
    out = []
    power = mu
    work = 0
    for _n in range(1, n_max + 1):
        work += power.support_size * mu.support_size
        if work > budget:
            raise BudgetExceededError(
                f"support expansion exceeded budget {budget}"
            )
        total = math.fsum(
            w * math.log(_operator_norm(np.array(g.entries, dtype=float)))
            for g, w in power.items()
        )
        out.append(total)
        if _n < n_max:
            power = convolve(power, mu)
    return out


def sanov_group_measure() -> ProbMeasure:
    from .walk_models import sanov_generators

    return ProbMeasure.uniform(sanov_generators())


def furstenberg_bound(r_spec: float, d: int) -> float:
    """(1/d) log(1 / r_spec): the growth guaranteed by a spectral radius
    strictly below one for the averaging operator on L2 of the ambient
    vector space."""
    if not 0.0 < r_spec <= 1.0:
        raise ValueError(f"r_spec must lie in (0, 1], got {r_spec}")
    if d < 1:
        raise ValueError("dimension must be >= 1")
    return math.log(1.0 / r_spec) / d


__all__ = [
    "LyapunovEstimate",
    "MatrixMeasure",
    "estimate_lyapunov",
    "exact_u_n",
    "furstenberg_bound",
    "sanov_group_measure",
    "sanov_matrix_measure",
]
