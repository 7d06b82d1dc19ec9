"""Cheeger constants of reversible chains, exact and by eigenvector sweep,
plus the area / co-area identities behind the isoperimetric bound.

The constant used throughout is
    h = inf_S  mu~(S x S^c) / (m(S) m(S^c)),
with m normalized to a probability measure first and
mu~(i, j) = m(i) p_ij.  The two-sided bound is h^2 / 8 <= lambda_1 <= 2 h.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import BudgetExceededError
from .markov_core import (
    WeightedChain,
    chain_spectrum,
    lambda1,
    require_reversible,
    _require_connected,
)

EXACT_ENUMERATION_LIMIT = 22
RECOMPUTE_TOL = 1e-12


@dataclass(frozen=True)
class CutReport:
    """A cut value h with the subset that achieves it."""

    h: float
    argmin_subset: tuple[int, ...]
    method: str
    subset_count_examined: int

    def __post_init__(self):
        if not self.argmin_subset:
            raise ValueError("argmin subset must be non-empty")
        if self.method not in ("exact_enumeration", "fiedler_sweep"):
            raise ValueError(f"unknown method {self.method!r}")

    def to_json_dict(self) -> dict:
        return {
            "h": self.h,
            "argmin_subset": list(self.argmin_subset),
            "method": self.method,
            "subset_count_examined": self.subset_count_examined,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), sort_keys=True)


def _normalized_measure(chain: WeightedChain) -> np.ndarray:
    m = chain.measure
    return m / math.fsum(m.tolist())


def _cut_edges(chain: WeightedChain, m_hat: np.ndarray):
    """Off-diagonal mu~ weights as (src, dst, weight) arrays."""
    keep = chain.src != chain.dst
    src = chain.src[keep]
    dst = chain.dst[keep]
    w = m_hat[src] * chain.prob[keep]
    return src, dst, w


def cut_ratio(chain: WeightedChain, subset) -> float:
    """h evaluated at one subset (with m normalized), for audits and sweeps."""
    m_hat = _normalized_measure(chain)
    mask = np.zeros(chain.n, dtype=bool)
    mask[list(subset)] = True
    if mask.all() or not mask.any():
        raise ValueError("subset must be proper and non-empty")
    src, dst, w = _cut_edges(chain, m_hat)
    cross = float(np.sum(w[mask[src] & ~mask[dst]]))
    ms = float(np.sum(m_hat[mask]))
    return cross / (ms * (1.0 - ms))


def _mask_to_subset(mask: int, n: int) -> tuple[int, ...]:
    return tuple(i for i in range(n) if (mask >> i) & 1)


def cheeger_exact(chain: WeightedChain) -> CutReport:
    """Exact Cheeger constant by enumeration of all proper non-empty subsets.

    Capped at 22 states (2^22 subsets); ties break toward the
    lexicographically smallest index set.
    """
    require_reversible(chain)
    _require_connected(chain)
    n = chain.n
    if n < 2:
        raise ValueError("need at least two states to cut")
    if n > EXACT_ENUMERATION_LIMIT:
        raise BudgetExceededError(
            f"{n} states exceeds the exact enumeration cap of "
            f"{EXACT_ENUMERATION_LIMIT}; use cheeger_sweep"
        )
    m_hat = _normalized_measure(chain)
    size = 1 << n

    # m(S) for every bitmask, one vectorized pass per lowest set bit; high
    # bits first so each mask's remainder is already filled in.
    msum = np.zeros(size)
    for b in range(n - 1, -1, -1):
        block = np.arange(0, size, 1 << (b + 1), dtype=np.int64)
        msum[block | (1 << b)] = msum[block] + m_hat[b]

    src, dst, w = _cut_edges(chain, m_hat)
    masks = np.arange(size, dtype=np.int64)
    cut = np.zeros(size)
    for i, j, weight in zip(src.tolist(), dst.tolist(), w.tolist()):
        inside_i = (masks >> i) & 1
        inside_j = (masks >> j) & 1
        cut += weight * (inside_i & (1 - inside_j))

    ratios = np.full(size, np.inf)
    proper = (masks != 0) & (masks != size - 1)
    denom = msum * (1.0 - msum)
    ratios[proper] = cut[proper] / denom[proper]
    h = float(ratios.min())
    minimizers = np.nonzero(ratios == h)[0]
    best = min(_mask_to_subset(int(mk), n) for mk in minimizers)

    recomputed = cut_ratio(chain, best)
    if abs(recomputed - h) > RECOMPUTE_TOL:
        raise AssertionError(
            f"cut recomputation drifted: {recomputed!r} vs {h!r}"
        )
    return CutReport(
        h=h,
        argmin_subset=best,
        method="exact_enumeration",
        subset_count_examined=size - 2,
    )


def cheeger_sweep(chain: WeightedChain) -> CutReport:
    """Upper bound on h from threshold cuts along the sorted second
    eigenvector of the Markov operator."""
    require_reversible(chain)
    _require_connected(chain)
    n = chain.n
    if n < 2:
        raise ValueError("need at least two states to cut")
    _theta, funcs = chain_spectrum(chain)
    f = funcs[:, 1]
    order = np.lexsort((np.arange(n), -f))
    best_h = math.inf
    best_subset: tuple[int, ...] = ()
    for k in range(1, n):
        subset = tuple(sorted(int(i) for i in order[:k]))
        h = cut_ratio(chain, subset)
        if h < best_h:
            best_h = h
            best_subset = subset
    return CutReport(
        h=float(best_h),
        argmin_subset=best_subset,
        method="fiedler_sweep",
        subset_count_examined=n - 1,
    )


def verify_cheeger(chain: WeightedChain) -> tuple[float, float, float, float]:
    """(h, lambda_1, h^2/8, 2h) with h from exact enumeration."""
    h = cheeger_exact(chain).h
    lam = lambda1(chain).estimate
    return h, lam, h * h / 8.0, 2.0 * h


def area_coarea_check(chain: WeightedChain, u) -> tuple[float, float, float, float]:
    """Both sides of the area and co-area identities for a non-negative u.

    Level sets use the strict convention S_t = {x : u(x) > t}; the integrals
    are exact finite sums over the distinct values of u.  Returns
    (area_lhs, area_rhs, coarea_lhs, coarea_rhs).
    """
    u = np.asarray(u, dtype=float)
    if u.shape != (chain.n,):
        raise ValueError(f"u has shape {u.shape}, chain has {chain.n} states")
    if np.any(u < 0.0):
        raise ValueError("u must be non-negative")
    m = chain.measure
    src, dst, w = _cut_edges(chain, m)

    area_lhs = math.fsum((u * m).tolist())
    coarea_lhs = 0.5 * math.fsum((np.abs(u[dst] - u[src]) * w).tolist())

    levels = np.unique(np.concatenate(([0.0], u)))
    area_terms = []
    coarea_terms = []
    for t, t_next in zip(levels[:-1], levels[1:]):
        gap = t_next - t
        in_s = u > t
        area_terms.append(gap * math.fsum(m[in_s].tolist()))
        crossing = in_s[src] & ~in_s[dst]
        coarea_terms.append(gap * math.fsum(w[crossing].tolist()))
    area_rhs = math.fsum(area_terms)
    coarea_rhs = math.fsum(coarea_terms)
    return area_lhs, area_rhs, coarea_lhs, coarea_rhs
