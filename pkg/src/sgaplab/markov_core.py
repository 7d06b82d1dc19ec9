"""Finite reversible Markov chains: weighted state spaces, detailed balance,
the Markov operator, and spectral quantities on the orthogonal complement of
the constants.

All spectral work happens on the symmetrized kernel D^(1/2) P D^(-1/2) with
D = diag(m), which is symmetric exactly when the chain is reversible.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp

from .errors import ConvergenceError, DisconnectedChainError, NotReversibleError

ROW_SUM_TOL = 1e-12
REVERSIBILITY_TOL = 1e-12
DENSE_LIMIT = 512
ITER_RESIDUAL_TOL = 1e-10
ITER_MAX = 100_000


class WeightedChain:
    """State space with positive weights m and a sparse (sub)stochastic kernel.

    `transitions` is a sparse list of (i, j, p) with p > 0; rows must sum to 1
    (stochastic) or at most 1 (substochastic) within 1e-12.  Instances are
    immutable; detailed balance is a checked property, not a constructor
    requirement, so defective chains can still be diagnosed.
    """

    def __init__(
        self,
        states: Sequence[str],
        measure: Sequence[float],
        transitions: Iterable[tuple[int, int, float]],
        row_mode: str = "stochastic",
    ):
        if row_mode not in ("stochastic", "substochastic"):
            raise ValueError(f"unknown row_mode {row_mode!r}")
        self.states = tuple(str(s) for s in states)
        n = len(self.states)
        if n == 0:
            raise ValueError("chain needs at least one state")
        m = np.asarray(measure, dtype=float)
        if m.shape != (n,) or np.any(m <= 0.0):
            raise ValueError("measure must assign a positive weight to every state")
        trans = [(int(i), int(j), float(p)) for i, j, p in transitions]
        src = np.array([t[0] for t in trans], dtype=np.int64)
        dst = np.array([t[1] for t in trans], dtype=np.int64)
        prob = np.array([t[2] for t in trans], dtype=float)
        if trans:
            if src.min() < 0 or src.max() >= n or dst.min() < 0 or dst.max() >= n:
                raise ValueError("transition index out of range")
        if np.any(prob <= 0.0):
            raise ValueError("transition probabilities must be positive")
        if len(set(zip(src.tolist(), dst.tolist()))) != len(trans):
            raise ValueError("duplicate (i, j) transition")
        row_sum = np.zeros(n)
        np.add.at(row_sum, src, prob)
        if row_mode == "stochastic":
            if np.any(np.abs(row_sum - 1.0) > ROW_SUM_TOL):
                bad = int(np.argmax(np.abs(row_sum - 1.0)))
                raise ValueError(
                    f"row {self.states[bad]!r} sums to {row_sum[bad]!r}, not 1"
                )
        else:
            if np.any(row_sum > 1.0 + ROW_SUM_TOL):
                bad = int(np.argmax(row_sum))
                raise ValueError(
                    f"row {self.states[bad]!r} sums to {row_sum[bad]!r} > 1"
                )
        for a in (m, src, dst, prob):
            a.setflags(write=False)
        self.measure = m
        self.src = src
        self.dst = dst
        self.prob = prob
        self.row_mode = row_mode

    @property
    def n(self) -> int:
        return len(self.states)

    @cached_property
    def kernel(self) -> sp.csr_matrix:
        return sp.csr_matrix(
            (self.prob, (self.src, self.dst)), shape=(self.n, self.n)
        )

    @cached_property
    def symmetrized(self) -> sp.csr_matrix:
        """D^(1/2) P D^(-1/2); symmetrized explicitly to kill float dust."""
        scale = np.sqrt(self.measure[self.src] / self.measure[self.dst])
        s = sp.csr_matrix(
            (self.prob * scale, (self.src, self.dst)), shape=(self.n, self.n)
        )
        return (s + s.T) * 0.5

    def __repr__(self) -> str:
        return (
            f"WeightedChain(n={self.n}, nnz={self.prob.size}, "
            f"row_mode={self.row_mode!r})"
        )


@dataclass(frozen=True)
class SpectralReport:
    """Eigenvalue/norm estimate with convergence diagnostics.

    For sup-type quantities (operator norms) `certified_lower` is a Rayleigh
    quotient and therefore a true lower bound on the target.  For the gap
    lambda_1 the estimate itself approaches from above and `certified_lower`
    is the Weyl interval endpoint estimate - residual.
    """

    estimate: float
    certified_lower: float
    iterations: int
    residual: float
    method: str

    def __post_init__(self):
        if self.residual < 0.0:
            raise ValueError("residual must be non-negative")
        if self.certified_lower > self.estimate + self.residual:
            raise ValueError("certified_lower exceeds estimate + residual")
        if self.method not in ("dense", "power_deflated", "lanczos"):
            raise ValueError(f"unknown method {self.method!r}")

    def to_json_dict(self) -> dict:
        return {
            "estimate": self.estimate,
            "certified_lower": self.certified_lower,
            "iterations": self.iterations,
            "residual": self.residual,
            "method": self.method,
        }


# ---------------------------------------------------------------------------
# diagnostics and basic operator actions
# ---------------------------------------------------------------------------

def check_detailed_balance(chain: WeightedChain) -> float:
    """Max |m(i) p_ij - m(j) p_ji| over all stored pairs (0 means reversible)."""
    flow: dict[tuple[int, int], float] = {}
    m = chain.measure
    for i, j, p in zip(chain.src.tolist(), chain.dst.tolist(), chain.prob.tolist()):
        flow[(i, j)] = m[i] * p
    worst = 0.0
    for (i, j), f in flow.items():
        if i == j:
            continue
        worst = max(worst, abs(f - flow.get((j, i), 0.0)))
    return worst


def require_reversible(chain: WeightedChain, tol: float = REVERSIBILITY_TOL) -> None:
    v = check_detailed_balance(chain)
    if v > tol:
        raise NotReversibleError(
            f"detailed balance violated by {v:.3e} (tolerance {tol:.0e})"
        )


def apply_markov(chain: WeightedChain, f: Sequence[float]) -> np.ndarray:
    """(Mf)(i) = sum_j p_ij f(j)."""
    vec = np.asarray(f, dtype=float)
    if vec.shape != (chain.n,):
        raise ValueError(f"vector has shape {vec.shape}, chain has {chain.n} states")
    return chain.kernel @ vec


def m_inner(chain: WeightedChain, f, g) -> float:
    f = np.asarray(f, dtype=float)
    g = np.asarray(g, dtype=float)
    return float(np.sum(chain.measure * f * g))


def dirichlet_form(chain: WeightedChain, f) -> float:
    """<Delta f, f> computed as (1/2) sum |f(j) - f(i)|^2 m(i) p_ij."""
    f = np.asarray(f, dtype=float)
    diff = f[chain.dst] - f[chain.src]
    return 0.5 * float(np.sum(chain.measure[chain.src] * chain.prob * diff * diff))


def disconnected_pair(chain: WeightedChain) -> tuple[str, str] | None:
    """A pair of states in different components, or None if irreducible."""
    n = chain.n
    adj: list[list[int]] = [[] for _ in range(n)]
    for i, j in zip(chain.src.tolist(), chain.dst.tolist()):
        adj[i].append(j)
        adj[j].append(i)
    seen = np.zeros(n, dtype=bool)
    stack = [0]
    seen[0] = True
    while stack:
        v = stack.pop()
        for w in adj[v]:
            if not seen[w]:
                seen[w] = True
                stack.append(w)
    if seen.all():
        return None
    out = int(np.argmin(seen))
    return chain.states[0], chain.states[out]


def _require_connected(chain: WeightedChain) -> None:
    pair = disconnected_pair(chain)
    if pair is not None:
        raise DisconnectedChainError(
            f"chain is disconnected: no path between {pair[0]!r} and {pair[1]!r}"
        )


# ---------------------------------------------------------------------------
# spectra
# ---------------------------------------------------------------------------

def chain_spectrum(chain: WeightedChain) -> tuple[np.ndarray, np.ndarray]:
    """Dense spectrum of the Markov operator in the m-weighted inner product.

    Returns eigenvalues in descending order and eigenvectors (columns) mapped
    back to plain function coordinates, m-orthonormal.
    """
    require_reversible(chain)
    s = chain.symmetrized.toarray()
    theta, vecs = np.linalg.eigh(s)
    order = np.argsort(theta)[::-1]
    theta = theta[order]
    vecs = vecs[:, order]
    funcs = vecs / np.sqrt(chain.measure)[:, None]
    return theta, funcs


def _deterministic_start(n: int, exclude_unit: np.ndarray) -> np.ndarray:
    """Fixed start vector with a component in every eigenspace orthogonal to
    `exclude_unit` (generic enough in practice, and reproducible)."""
    v = np.cos(np.arange(1, n + 1) * 0.7) + 0.1
    v -= (exclude_unit @ v) * exclude_unit
    nrm = np.linalg.norm(v)
    if nrm < 1e-12:
        v = np.zeros(n)
        v[0], v[-1] = 1.0, -1.0
        v -= (exclude_unit @ v) * exclude_unit
        nrm = np.linalg.norm(v)
    return v / nrm


def _power_second_largest(
    s: sp.csr_matrix, unit: np.ndarray
) -> tuple[float, np.ndarray, int, float]:
    """Largest eigenvalue of S on the complement of `unit`, for S with
    spectrum in [-1, 1]: power iteration on (S + I)/2 with the unit direction
    projected away every step."""
    n = s.shape[0]
    v = _deterministic_start(n, unit)
    theta = 0.0
    res = math.inf
    for it in range(1, ITER_MAX + 1):
        w = 0.5 * (s @ v + v)
        w -= (unit @ w) * unit
        nrm = np.linalg.norm(w)
        if nrm == 0.0:
            return 0.0, v, it, 0.0
        v = w / nrm
        sv = s @ v
        theta = float(v @ sv)
        res = float(np.linalg.norm(sv - theta * v))
        if res <= ITER_RESIDUAL_TOL:
            return theta, v, it, res
    return theta, v, ITER_MAX, res


def _power_max_abs(
    s: sp.csr_matrix, unit: np.ndarray
) -> tuple[float, np.ndarray, int, float]:
    """max |eigenvalue| of S on the complement of `unit`: power iteration on
    S^2, which is blind to the sign ambiguity of bipartite spectra."""
    n = s.shape[0]
    v = _deterministic_start(n, unit)
    est = 0.0
    res = math.inf
    for it in range(1, ITER_MAX + 1):
        w = s @ (s @ v)
        w -= (unit @ w) * unit
        nrm = np.linalg.norm(w)
        if nrm == 0.0:
            return 0.0, v, it, 0.0
        v = w / nrm
        ssv = s @ (s @ v)
        lam2 = float(v @ ssv)
        est = math.sqrt(max(lam2, 0.0))
        res = float(np.linalg.norm(ssv - lam2 * v))
        if res <= ITER_RESIDUAL_TOL:
            return est, v, it, res
    return est, v, ITER_MAX, res


def lambda1(chain: WeightedChain) -> SpectralReport:
    """Smallest non-zero eigenvalue of the Laplacian I - M on the m-orthogonal
    complement of constants.  Dense solve up to 512 states, deflated power
    iteration beyond."""
    if chain.row_mode != "stochastic":
        raise ValueError("lambda1 needs a stochastic chain")
    _require_connected(chain)
    require_reversible(chain)
    if chain.n == 1:
        raise ValueError("lambda1 is undefined for a single-state chain")
    if chain.n <= DENSE_LIMIT:
        theta, funcs = chain_spectrum(chain)
        lam = 1.0 - float(theta[1])
        f = funcs[:, 1]
        rq = dirichlet_form(chain, f) / m_inner(chain, f, f)
        return SpectralReport(
            estimate=lam,
            certified_lower=min(lam, rq),
            iterations=1,
            residual=0.0,
            method="dense",
        )
    unit = np.sqrt(chain.measure)
    unit /= np.linalg.norm(unit)
    theta, _v, its, res = _power_second_largest(chain.symmetrized, unit)
    lam = 1.0 - theta
    return SpectralReport(
        estimate=lam,
        certified_lower=max(0.0, lam - res),
        iterations=its,
        residual=res,
        method="power_deflated",
    )


def operator_norm_l20(chain: WeightedChain) -> SpectralReport:
    """Norm of the Markov operator restricted to the m-orthogonal complement
    of the constants (max |eigenvalue| there, by self-adjointness)."""
    if chain.row_mode != "stochastic":
        raise ValueError("operator_norm_l20 needs a stochastic chain")
    _require_connected(chain)
    require_reversible(chain)
    if chain.n == 1:
        raise ValueError("the complement of constants is trivial for one state")
    if chain.n <= DENSE_LIMIT:
        theta, _ = chain_spectrum(chain)
        norm = max(abs(float(theta[1])), abs(float(theta[-1])))
        return SpectralReport(
            estimate=norm,
            certified_lower=norm,
            iterations=1,
            residual=0.0,
            method="dense",
        )
    unit = np.sqrt(chain.measure)
    unit /= np.linalg.norm(unit)
    est, v, its, res = _power_max_abs(chain.symmetrized, unit)
    certified = float(np.linalg.norm(chain.symmetrized @ v))
    return SpectralReport(
        estimate=est,
        certified_lower=min(certified, est + res),
        iterations=its,
        residual=res,
        method="power_deflated",
    )


def require_converged(report: SpectralReport) -> SpectralReport:
    if report.iterations >= ITER_MAX and report.residual > ITER_RESIDUAL_TOL:
        raise ConvergenceError(
            f"solver hit {ITER_MAX} iterations with residual {report.residual:.2e}"
        )
    return report


# ---------------------------------------------------------------------------
# wire format
# ---------------------------------------------------------------------------

def chain_to_json_dict(chain: WeightedChain) -> dict:
    return {
        "states": list(chain.states),
        "measure": [float(x) for x in chain.measure],
        "transitions": [
            [int(i), int(j), float(p)]
            for i, j, p in zip(chain.src, chain.dst, chain.prob)
        ],
        "row_mode": chain.row_mode,
    }


def chain_to_json(chain: WeightedChain) -> str:
    return json.dumps(chain_to_json_dict(chain), sort_keys=True)


def chain_from_json_dict(data: dict) -> WeightedChain:
    return WeightedChain(
        states=data["states"],
        measure=data["measure"],
        transitions=[tuple(t) for t in data["transitions"]],
        row_mode=data.get("row_mode", "stochastic"),
    )


def chain_from_json(text: str) -> WeightedChain:
    return chain_from_json_dict(json.loads(text))
