"""Norm machinery beyond a single chain: finite-section compressions of
operators on infinite graphs, the radial Rayleigh quotient on regular trees,
the tensor-power norm inequality, and the expander eigenvalue bound.

Compressions restrict the averaging operator to vertices within a graph
distance of the basepoint, so every value is a certified lower bound on the
full operator norm and is non-decreasing in the radius.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .group_algebra import ProbMeasure
from .markov_core import WeightedChain, lambda1, operator_norm_l20
from .walk_models import LabeledGraph

DENSE_NORM_LIMIT = 400
TENSOR_DIM_CAP = 4096
UNITARY_TOL = 1e-10


# ---------------------------------------------------------------------------
# compressions
# ---------------------------------------------------------------------------

def _measure_gen_weights(graph: LabeledGraph, mu: ProbMeasure) -> np.ndarray:
    """Per-generator weights of mu, requiring supp(mu) to sit inside the
    graph's generator list."""
    weights = np.zeros(graph.n_generators)
    for g, w in mu.items():
        hits = [k for k, gen in enumerate(graph.generators) if gen == g]
        if not hits:
            raise ValueError(
                "graph does not carry the action of the measure support; "
                f"unmatched element {g!r}"
            )
        # duplicated generator labels (involutions listed twice) share the mass
        share = w / len(hits)
        for k in hits:
            weights[k] += share
    return weights


def compressed_operator(
    graph: LabeledGraph, mu: ProbMeasure, radius: int
) -> sp.csr_matrix:
    """Matrix of the averaging operator compressed to the ball of the given
    graph-distance radius around the basepoint."""
    if radius < 0:
        raise ValueError("radius must be >= 0")
    dist = graph.distances_from_basepoint
    if dist[graph.basepoint] != 0:
        raise ValueError("graph has no usable basepoint")
    reach = int(dist.max())
    if radius > reach:
        raise ValueError(
            f"radius {radius} exceeds the generated graph (max distance {reach})"
        )
    keep = (dist >= 0) & (dist <= radius)
    new_index = -np.ones(graph.n_vertices, dtype=np.int64)
    new_index[keep] = np.arange(int(keep.sum()))
    w = _measure_gen_weights(graph, mu)
    esrc, edst, egen = graph.edge_src, graph.edge_dst, graph.edge_gen
    inside = keep[esrc] & keep[edst]
    wvals = w[egen[inside]]
    nonzero = wvals > 0.0
    rows = new_index[edst[inside]][nonzero]
    cols = new_index[esrc[inside]][nonzero]
    n_sub = int(keep.sum())
    return sp.csr_matrix(
        (wvals[nonzero], (rows, cols)), shape=(n_sub, n_sub)
    )


def _sparse_norm(a: sp.csr_matrix) -> float:
    n = a.shape[0]
    if n == 0:
        raise ValueError("empty compression")
    if n <= DENSE_NORM_LIMIT:
        if a.nnz == 0:
            return 0.0
        return float(np.linalg.norm(a.toarray(), 2))
    v0 = np.ones(n) / math.sqrt(n)
    symmetric = (a != a.T).nnz == 0
    if symmetric:
        ends = spla.eigsh(a, k=2, which="BE", v0=v0, return_eigenvectors=False)
        return float(np.max(np.abs(ends)))
    sigma = spla.svds(a, k=1, v0=v0, return_singular_vectors=False, maxiter=10_000)
    return float(sigma[0])


def compressed_norm(graph: LabeledGraph, mu: ProbMeasure, radius: int) -> float:
    """Norm of the ball compression; a certified lower bound on the norm of
    the averaging operator on the whole (possibly infinite) graph."""
    return _sparse_norm(compressed_operator(graph, mu, radius))


@dataclass(frozen=True)
class CompressionLadder:
    """Compressed norms along increasing radii, optionally checked against a
    known limiting value (`limit_claim`, with a short source tag)."""

    radii: tuple[int, ...]
    norms: tuple[float, ...]
    limit_claim: float | None = None
    claim_tag: str | None = None

    def __post_init__(self):
        if len(self.radii) != len(self.norms) or not self.radii:
            raise ValueError("radii and norms must be non-empty and equal length")
        if any(b <= a for a, b in zip(self.radii, self.radii[1:])):
            raise ValueError("radii must be strictly increasing")
        for a, b in zip(self.norms, self.norms[1:]):
            if b < a - 1e-12:
                raise ValueError("norms must be non-decreasing along nested radii")
        if self.limit_claim is not None:
            if any(x > self.limit_claim + 1e-9 for x in self.norms):
                raise ValueError("a compressed norm exceeds the claimed limit")

    @property
    def supremum(self) -> float:
        return max(self.norms)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["radius", "norm"])
        for r, x in zip(self.radii, self.norms):
            writer.writerow([r, repr(x)])
        return buf.getvalue()


def compression_ladder(
    graph: LabeledGraph,
    mu: ProbMeasure,
    radii: Sequence[int],
    limit_claim: float | None = None,
    claim_tag: str | None = None,
) -> CompressionLadder:
    norms = tuple(compressed_norm(graph, mu, r) for r in radii)
    return CompressionLadder(tuple(int(r) for r in radii), norms, limit_claim, claim_tag)


# ---------------------------------------------------------------------------
# radial Rayleigh quotients on the d-regular tree
# ---------------------------------------------------------------------------

def radial_rayleigh(d: int, lam: float, depth: int) -> float:
    """Rayleigh quotient of the radial vector f(v) = (lam / sqrt(d-1))^|v|
    truncated at the given depth, against the tree averaging operator.

    As lam -> 1 and depth -> infinity the quotient tends to 2 sqrt(d-1) / d,
    which is the norm of the operator.
    """
    if d < 3:
        raise ValueError("degree must be >= 3")
    if depth < 1:
        raise ValueError("depth must be >= 1")
    if not 0.0 < lam < 1.0:
        raise ValueError(f"lam must lie in (0, 1), got {lam}")
    root = math.sqrt(d - 1.0)
    lam2 = lam * lam
    geo = (1.0 - lam2**depth) / (1.0 - lam2)  # sum_{m=0}^{depth-1} lam^(2m)
    num = (2.0 * lam / root) * geo
    den = 1.0 + (d / (d - 1.0)) * lam2 * geo
    return num / den


# ---------------------------------------------------------------------------
# tensor powers
# ---------------------------------------------------------------------------

def _check_unitary(u: np.ndarray) -> None:
    d = u.shape[0]
    if u.shape != (d, d):
        raise ValueError("representation matrices must be square")
    err = np.max(np.abs(u.conj().T @ u - np.eye(d)))
    if err > UNITARY_TOL:
        raise ValueError(f"matrix is not unitary (deviation {err:.2e})")


def tensor_power_check(
    rep: Sequence[np.ndarray], mu: ProbMeasure, k: int
) -> tuple[float, float]:
    """(lhs, rhs) with lhs = ||sum mu(g) U_g|| and
    rhs = ||sum mu(g) (U_g (x) conj(U_g))^(x k)||^(1/2k).

    For a genuine unitary representation lhs <= rhs always holds; callers
    assert it with a small tolerance.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    mats = [np.asarray(u, dtype=complex) for u in rep]
    if len(mats) != mu.support_size:
        raise ValueError("need exactly one unitary per support element")
    for u in mats:
        _check_unitary(u)
    d = mats[0].shape[0]
    if any(u.shape != (d, d) for u in mats):
        raise ValueError("representation matrices must share one dimension")
    if d ** (2 * k) > TENSOR_DIM_CAP:
        raise ValueError(
            f"tensor power dimension {d ** (2 * k)} exceeds cap {TENSOR_DIM_CAP}"
        )
    weights = [w for _g, w in mu.items()]
    lhs_mat = sum(w * u for w, u in zip(weights, mats))
    lhs = float(np.linalg.norm(lhs_mat, 2))
    rhs_mat = None
    for w, u in zip(weights, mats):
        block = np.kron(u, u.conj())
        power = block
        for _ in range(k - 1):
            power = np.kron(power, block)
        rhs_mat = w * power if rhs_mat is None else rhs_mat + w * power
    rhs = float(np.linalg.norm(rhs_mat, 2)) ** (1.0 / (2 * k))
    return lhs, rhs


# ---------------------------------------------------------------------------
# expander bound
# ---------------------------------------------------------------------------

def expander_bound_check(chain: WeightedChain) -> tuple[float, float]:
    """(lambda_1, (1 - ||M restricted to mean-zero||)^2 / 2) for the simple
    walk on a finite vertex-transitive graph; the gap always dominates the
    bound."""
    lam = lambda1(chain).estimate
    norm0 = operator_norm_l20(chain).estimate
    return lam, 0.5 * (1.0 - norm0) ** 2


__all__ = [
    "CompressionLadder",
    "compressed_norm",
    "compressed_operator",
    "compression_ladder",
    "expander_bound_check",
    "radial_rayleigh",
    "tensor_power_check",
]
