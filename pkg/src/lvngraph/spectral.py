"""Connectivity metrics: Laplacian spectra, effective resistance, walk-count deltas."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .augment import AugmentedGraph, EdgeMode, lvn_augment
from .centrality import CentralityScores, select_central
from .graph import Graph, NodeSubset, connected_components, symmetrize


class NumericalError(RuntimeError):
    """Raised when an iterative numerical routine fails to converge."""


class DisconnectedPairError(ValueError):
    """Raised when a resistance is requested across different components."""


@dataclass(frozen=True)
class LaplacianSpectrum:
    """Full eigendecomposition of a graph Laplacian.

    Eigenvalues are ascending; eigenvectors are the matching orthonormal
    columns. Eigenvalues below ``zero_tol`` span the per-component constant
    functions.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    zero_tol: float

    @property
    def num_components(self) -> int:
        return int(np.count_nonzero(self.eigenvalues < self.zero_tol))


@dataclass(frozen=True)
class ResistanceReport:
    """Total pairwise resistance over a node subset; cross-component pairs are excluded."""

    subset: NodeSubset
    total: float
    pair_values: np.ndarray | None
    cross_component_pairs: int


@dataclass(frozen=True)
class SweepCurve:
    """Subset total resistance as a function of the number of cloned centrals."""

    ns_values: np.ndarray
    totals: np.ndarray
    baseline: float
    errors: tuple[str | None, ...]


@dataclass(frozen=True)
class PathDeltaCurve:
    """Walk-count gain of an augmented graph over the original, per walk length."""

    r_values: np.ndarray
    deltas: np.ndarray

    def __post_init__(self):
        r = np.asarray(self.r_values, dtype=np.int64)
        d = np.asarray(self.deltas, dtype=np.float64)
        object.__setattr__(self, "r_values", r)
        object.__setattr__(self, "deltas", d)
        if len(r) != len(d) or len(r) == 0 or r[0] != 1 or np.any(np.diff(r) <= 0):
            raise ValueError("r_values must strictly increase starting at 1, matching deltas")


def _offdiag_norm(a: np.ndarray) -> float:
    # Direct off-diagonal Frobenius norm; the sum-of-squares difference form
    # cancels catastrophically near convergence.
    b = a.copy()
    np.fill_diagonal(b, 0.0)
    return float(np.linalg.norm(b))


def _jacobi_eigh(a: np.ndarray, max_sweeps: int) -> tuple[np.ndarray, np.ndarray]:
    # Cyclic-by-row Jacobi rotations; rows/columns updated with vector ops.
    n = a.shape[0]
    a = a.copy()
    v = np.eye(n)
    if n == 1:
        return np.array([a[0, 0]]), v
    scale = max(1.0, float(np.linalg.norm(a)))
    for _ in range(max_sweeps):
        off = _offdiag_norm(a)
        if off <= 1e-13 * scale:
            return np.diag(a).copy(), v
        skip = off * 1e-16
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) <= skip:
                    continue
                app, aqq = a[p, p], a[q, q]
                theta = (aqq - app) / (2.0 * apq)
                t = np.sign(theta) / (abs(theta) + np.hypot(theta, 1.0)) if theta != 0 else 1.0
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                tau = s / (1.0 + c)
                col_p = a[:, p].copy()
                col_q = a[:, q].copy()
                a[:, p] = col_p - s * (col_q + tau * col_p)
                a[:, q] = col_q + s * (col_p - tau * col_q)
                a[p, :] = a[:, p]
                a[q, :] = a[:, q]
                a[p, p] = app - t * apq
                a[q, q] = aqq + t * apq
                a[p, q] = a[q, p] = 0.0
                vec_p = v[:, p].copy()
                vec_q = v[:, q].copy()
                v[:, p] = vec_p - s * (vec_q + tau * vec_p)
                v[:, q] = vec_q + s * (vec_p - tau * vec_q)
    off = _offdiag_norm(a)
    if off <= 1e-10 * scale:
        return np.diag(a).copy(), v
    raise NumericalError(f"rotation sweeps did not converge (off-diagonal norm {off:.3e})")


def laplacian_matrix(g: Graph) -> np.ndarray:
    a = np.zeros((g.num_nodes, g.num_nodes))
    pairs = g.arcs()
    if len(pairs):
        a[pairs[:, 0], pairs[:, 1]] = 1.0
    return np.diag(a.sum(axis=1)) - a


def laplacian_eigendecomposition(g: Graph, max_sweeps: int = 60) -> LaplacianSpectrum:
    """Dense symmetric eigendecomposition of L = D - A via cyclic rotations.

    The input must be undirected (symmetrize first). The count of eigenvalues
    below the relative zero tolerance is cross-checked against the number of
    connected components.
    """
    if g.directed:
        raise ValueError("eigendecomposition expects an undirected graph; symmetrize first")
    lap = laplacian_matrix(g)
    values, vectors = _jacobi_eigh(lap, max_sweeps=max_sweeps)
    order = np.argsort(values, kind="stable")
    values = values[order]
    vectors = vectors[:, order]
    zero_tol = 1e-9 * max(1.0, float(values[-1]))
    num_null = int(np.count_nonzero(values < zero_tol))
    num_comp = int(connected_components(g).max()) + 1
    if num_null != num_comp:
        raise NumericalError(
            f"null-space dimension {num_null} disagrees with component count {num_comp}"
        )
    return LaplacianSpectrum(values, vectors, zero_tol)


def effective_resistance(spec: LaplacianSpectrum, u: int, v: int) -> float:
    """Resistance distance between two nodes from the pseudoinverse expansion."""
    if u == v:
        raise ValueError("effective resistance needs two distinct nodes")
    null = spec.eigenvalues < spec.zero_tol
    diff_null = spec.eigenvectors[u, null] - spec.eigenvectors[v, null]
    if np.any(np.abs(diff_null) > 1e-6):
        raise DisconnectedPairError(f"nodes {u} and {v} lie in different components")
    diff = spec.eigenvectors[u, ~null] - spec.eigenvectors[v, ~null]
    return float(np.sum(diff * diff / spec.eigenvalues[~null]))


def total_resistance_subset(
    g: Graph, subset: NodeSubset, keep_pairs: bool = False
) -> ResistanceReport:
    """Sum of pairwise resistances over unordered same-component subset pairs."""
    h = symmetrize(g) if g.directed else g
    subset.validate_for(h)
    members = subset.members
    if len(members) < 2:
        return ResistanceReport(subset, 0.0, None, 0)
    spec = laplacian_eigendecomposition(h)
    comp = connected_components(h)[members]
    live = spec.eigenvalues >= spec.zero_tol
    basis = spec.eigenvectors[np.ix_(members, live)]
    gram = (basis / spec.eigenvalues[live]) @ basis.T
    diag = np.diag(gram)
    pair_r = diag[:, None] + diag[None, :] - 2.0 * gram
    same = comp[:, None] == comp[None, :]
    upper = np.triu(np.ones_like(same, dtype=bool), k=1)
    total = float(np.sum(pair_r[same & upper]))
    cross = int(np.count_nonzero(~same & upper))
    pair_values = None
    if keep_pairs:
        pair_values = np.where(same, pair_r, np.nan)
        np.fill_diagonal(pair_values, 0.0)
    return ResistanceReport(subset, total, pair_values, cross)


def resistance_sweep(
    g: Graph,
    scores: CentralityScores,
    ns_values,
    n_c: int,
    mode: EdgeMode,
) -> SweepCurve:
    """Subset totals for a range of clone-group counts against the raw baseline.

    One centrality ranking is computed for the largest requested count and
    truncated for the smaller ones. The probe subset is fixed to the
    complement of that largest central set, so totals are comparable across
    the sweep; directed augmentations are symmetrized before measuring.
    """
    ns_values = np.asarray(sorted(int(x) for x in ns_values), dtype=np.int64)
    if len(ns_values) == 0 or ns_values[0] < 1:
        raise ValueError("ns_values must be positive")
    max_ns = int(ns_values[-1])
    if max_ns > g.num_nodes:
        raise ValueError("largest n_s exceeds the node count")
    ranking = select_central(scores, g, max_ns)
    central_mask = np.zeros(g.num_nodes, dtype=bool)
    central_mask[ranking.members] = True
    probe = NodeSubset(np.flatnonzero(~central_mask), complement_of="central")
    baseline = total_resistance_subset(g, probe).total
    totals = np.full(len(ns_values), np.nan)
    errors: list[str | None] = [None] * len(ns_values)
    for i, n_s in enumerate(ns_values):
        try:
            aug = lvn_augment(g, ranking.truncated(int(n_s)), n_c, mode)
            mapped = NodeSubset(np.sort(aug.old_to_new[probe.members]), complement_of="central")
            totals[i] = total_resistance_subset(aug.graph, mapped).total
        except (ValueError, NumericalError) as exc:
            errors[i] = str(exc)
    return SweepCurve(ns_values, totals, baseline, tuple(errors))


def adjacency_csr(g: Graph) -> sp.csr_matrix:
    """0/1 adjacency with A[i, j] = 1 for each stored arc i -> j."""
    pairs = g.arcs()
    data = np.ones(len(pairs))
    return sp.csr_matrix((data, (pairs[:, 0], pairs[:, 1])), shape=(g.num_nodes, g.num_nodes))


def path_count_delta(
    g_raw: Graph, g_aug: AugmentedGraph, subset: NodeSubset, r_max: int
) -> PathDeltaCurve:
    """Walk-count change between subset pairs, per walk length 1..r_max.

    Counts ordered pairs including the diagonal. Walk counts are accumulated
    through repeated matrix-vector products against the subset indicator, so
    adjacency powers are never materialized; counts beyond 2**53 trigger a
    float-precision warning.
    """
    if r_max < 1:
        raise ValueError("r_max must be at least 1")
    subset.validate_for(g_raw)
    mapped = g_aug.old_to_new[subset.members]
    if np.any(mapped < 0):
        raise ValueError("subset contains a removed central node")
    a_raw = adjacency_csr(g_raw)
    a_aug = adjacency_csr(g_aug.graph)
    ind_raw = np.zeros(g_raw.num_nodes)
    ind_raw[subset.members] = 1.0
    ind_aug = np.zeros(g_aug.graph.num_nodes)
    ind_aug[mapped] = 1.0
    deltas = np.zeros(r_max)
    y_raw, y_aug = ind_raw, ind_aug
    for r in range(1, r_max + 1):
        y_raw = a_raw @ y_raw
        y_aug = a_aug @ y_aug
        sum_raw = float(ind_raw @ y_raw)
        sum_aug = float(ind_aug @ y_aug)
        if max(sum_raw, sum_aug) > 2.0**53:
            warnings.warn(f"walk counts exceed 2**53 at r={r}; totals may lose precision")
        deltas[r - 1] = sum_aug - sum_raw
    return PathDeltaCurve(np.arange(1, r_max + 1), deltas)
