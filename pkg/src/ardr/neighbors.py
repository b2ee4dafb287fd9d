"""Exact k-NN graphs, graph geodesics, LLE reconstruction weights and the
spectral (Laplacian Eigenmaps) initializer."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components, dijkstra

from .linalg import as_data_matrix, as_sym_matrix, fix_signs, sq_dist_matrix, sym_eigh

DEFAULT_K = 15
DEFAULT_REG = 1e-3


class DisconnectedGraphError(ValueError):
    pass


@dataclass(frozen=True)
class NeighborGraph:
    """Directed k-NN graph: row ``i`` lists the ``k`` nearest neighbors of point ``i``.

    ``dists`` holds input-metric distances (Euclidean, not squared, for the
    ``euclidean_sq`` metric), sorted ascending per row.
    """

    indices: np.ndarray
    dists: np.ndarray
    metric: str = "euclidean_sq"

    @property
    def n(self) -> int:
        return self.indices.shape[0]

    @property
    def k(self) -> int:
        return self.indices.shape[1]

    def adjacency(self, symmetric=True) -> csr_matrix:
        """Sparse distance-weighted adjacency; symmetric = union of directed edges."""
        rows = np.repeat(np.arange(self.n), self.k)
        cols = self.indices.ravel()
        vals = self.dists.ravel()
        A = csr_matrix((vals, (rows, cols)), shape=(self.n, self.n))
        if symmetric:
            A = A.maximum(A.T).tocsr()
        return A

    def edge_mask(self, symmetric=True) -> np.ndarray:
        """Dense boolean support of the graph."""
        mask = np.zeros((self.n, self.n), dtype=bool)
        mask[np.repeat(np.arange(self.n), self.k), self.indices.ravel()] = True
        if symmetric:
            mask |= mask.T
        return mask


def knn_graph(X, k=DEFAULT_K, metric="euclidean_sq") -> NeighborGraph:
    """Exact k nearest neighbors by brute force; ties go to the lower index."""
    X = as_data_matrix(X)
    n = X.shape[0]
    if not 1 <= k < n:
        raise ValueError(f"k must satisfy 1 <= k < n={n}, got k={k}")
    D = sq_dist_matrix(X, metric)
    np.fill_diagonal(D, np.inf)
    order = np.argsort(D, axis=1, kind="stable")[:, :k]
    d = np.take_along_axis(D, order, axis=1)
    if metric == "euclidean_sq":
        d = np.sqrt(d)
    return NeighborGraph(order.astype(np.int64), d, metric)


def _component_report(adj) -> None:
    ncomp, labels = connected_components(adj, directed=False)
    if ncomp > 1:
        a = int(np.flatnonzero(labels == 0)[0])
        b = int(np.flatnonzero(labels == 1)[0])
        raise DisconnectedGraphError(
            f"graph has {ncomp} connected components; e.g. point {a} "
            f"(component 0) cannot reach point {b} (component 1)"
        )


def geodesic_dists(g: NeighborGraph):
    """All-pairs shortest paths over the union-symmetrized k-NN graph.

    Returns ``(dist, dist_sq)``: geodesic distances and their squares (the
    latter is what classical MDS consumes).
    """
    adj = g.adjacency(symmetric=True)
    _component_report(adj)
    dist = dijkstra(adj, directed=False)
    dist = 0.5 * (dist + dist.T)
    np.fill_diagonal(dist, 0.0)
    return dist, dist * dist


@dataclass(frozen=True)
class WeightMatrix:
    """Row-sparse LLE weights: row ``i`` has weights ``weights[i]`` on ``indices[i]``."""

    indices: np.ndarray
    weights: np.ndarray

    @property
    def n(self) -> int:
        return self.indices.shape[0]

    def dense(self) -> np.ndarray:
        W = np.zeros((self.n, self.n))
        rows = np.repeat(np.arange(self.n), self.indices.shape[1])
        np.add.at(W, (rows, self.indices.ravel()), self.weights.ravel())
        return W


def _local_gram(X, K, i, nbrs):
    if K is None:
        Z = X[nbrs] - X[i]
        return Z @ Z.T
    # feature-space differences phi(x_j) - phi(x_i) expressed through K
    kii = K[i, i]
    kin = K[i, nbrs]
    return kii - kin[:, None] - kin[None, :] + K[np.ix_(nbrs, nbrs)]


def lle_weights(X, g: NeighborGraph, reg=DEFAULT_REG, kernel=None) -> WeightMatrix:
    """Constrained least-squares reconstruction weights.

    Row ``i`` minimizes ``||x_i - sum_j w_ij x_j||^2`` over the neighbors of
    ``i`` subject to ``sum_j w_ij = 1``. A Tikhonov term
    ``reg * trace(G_i) * I`` is added to every local Gram system ``G_i``.
    Passing an ``(n, n)`` ``kernel`` matrix solves the kernelized problem
    ``Tr((I - W) K (I - W)^T)`` instead of using Euclidean coordinates.
    """
    if reg < 0:
        raise ValueError("reg must be non-negative")
    X = as_data_matrix(X)
    K = None if kernel is None else as_sym_matrix(kernel, "kernel", tol=1e-8)
    n, k = g.indices.shape
    if X.shape[0] != n:
        raise ValueError("graph does not match X")
    W = np.empty((n, k))
    ones = np.ones(k)
    for i in range(n):
        nbrs = g.indices[i]
        Gl = _local_gram(X, K, i, nbrs)
        if reg > 0:
            tr = np.trace(Gl)
            Gl = Gl + (reg * tr if tr > 0 else reg) * np.eye(k)
        elif np.linalg.cond(Gl) > 1e12:
            raise np.linalg.LinAlgError(
                f"local Gram system of point {i} is singular; use reg > 0"
            )
        w = np.linalg.solve(Gl, ones)
        W[i] = w / w.sum()
    return WeightMatrix(g.indices.copy(), W)


def affinity_weights(K) -> np.ndarray:
    """Row-normalized affinities ``w_ij = K_ij / sum_l K_il`` with zero diagonal.

    Dense ``(n, n)``; rows sum to 1 like LLE weights, but the weights are the
    input-kernel values on the graph instead of reconstruction coefficients.
    """
    A = np.array(as_sym_matrix(K, "K", tol=1e-10), copy=True)
    np.fill_diagonal(A, 0.0)
    if np.any(A < 0):
        raise ValueError("affinities must be non-negative")
    rs = A.sum(axis=1)
    if np.any(rs <= 0):
        raise ValueError(f"point {int(np.argmin(rs))} has no positive affinity")
    return A / rs[:, None]


def m_matrix(W) -> np.ndarray:
    """``M = (I - W)^T (I - W)``."""
    Wd = W.dense() if isinstance(W, WeightMatrix) else np.asarray(W, dtype=np.float64)
    A = np.eye(Wd.shape[0]) - Wd
    M = A.T @ A
    return 0.5 * (M + M.T)


def laplacian_eigenmaps_init(K, d=2, seed=0, scale=10.0) -> np.ndarray:
    """Spectral initialization from the symmetric-normalized graph Laplacian.

    Uses the ``d`` eigenvectors with the smallest nonzero eigenvalues of
    ``I - D^{-1/2} K D^{-1/2}``, sign-fixed (first nonzero entry positive)
    and rescaled so each column has max-abs ``scale``. The dense solve is
    deterministic; ``seed`` is accepted for interface symmetry with the
    random initializers.
    """
    del seed
    K = as_sym_matrix(K, "K", tol=1e-10)
    if np.any(K < 0):
        raise ValueError("affinity matrix must be non-negative")
    n = K.shape[0]
    if d + 1 > n:
        raise ValueError(f"need d + 1 <= n, got d={d}, n={n}")
    A = K.copy()
    np.fill_diagonal(A, 0.0)
    _component_report(csr_matrix(A))
    deg = A.sum(axis=1)
    inv_sqrt = 1.0 / np.sqrt(deg)
    L = np.eye(n) - inv_sqrt[:, None] * A * inv_sqrt[None, :]
    pairs = sym_eigh(0.5 * (L + L.T), count=d + 1, end="smallest")
    V = fix_signs(pairs.vectors[:, 1 : d + 1])
    return V * (scale / np.max(np.abs(V), axis=0))
