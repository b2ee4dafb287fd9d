"""Input-space affinities and the output-space kernel with its derivative."""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .linalg import as_data_matrix, sq_dist_matrix, sym_eigh
from .neighbors import NeighborGraph

CALIBRATION_ITERS = 64
CALIBRATION_TOL = 1e-5


@dataclass(frozen=True)
class OutputKernel:
    """Similarity in the embedding as a function of squared distance ``u``.

    ``cauchy`` is ``1 / (1 + u)``. ``linear`` stands for the plain inner
    product and is handled at the Gram-matrix level by the schemes.
    """

    kind: str = "cauchy"

    def __post_init__(self):
        if self.kind not in ("cauchy", "linear"):
            raise ValueError(f"unknown output kernel {self.kind!r}")


CAUCHY = OutputKernel("cauchy")
LINEAR = OutputKernel("linear")


@dataclass(frozen=True)
class InputKernelSpec:
    kind: str = "rbf_local"
    sigma: float = 1.0
    symmetrize: str = "fuzzy_union"

    def __post_init__(self):
        if self.kind not in ("linear", "rbf_fixed", "rbf_local"):
            raise ValueError(f"unknown input kernel {self.kind!r}")
        if self.symmetrize not in ("none", "fuzzy_union", "average"):
            raise ValueError(f"unknown symmetrization {self.symmetrize!r}")
        if self.kind == "rbf_fixed" and not self.sigma > 0:
            raise ValueError("rbf_fixed needs sigma > 0")


def output_kernel(k: OutputKernel, u):
    if k.kind != "cauchy":
        raise ValueError("the linear kernel is evaluated on Gram matrices, not distances")
    u = np.asarray(u, dtype=np.float64)
    if np.any(u < 0):
        raise ValueError("squared distances must be non-negative")
    return 1.0 / (1.0 + u)


def output_kernel_deriv(k: OutputKernel, u):
    """``d k_y / d u``; for the Cauchy kernel this is ``-k_y(u)**2``."""
    if k.kind != "cauchy":
        raise ValueError("the linear kernel has a constant derivative; handled by the schemes")
    ky = output_kernel(k, u)
    return -ky * ky


class LocalScales(NamedTuple):
    rho: np.ndarray
    sigma: np.ndarray
    residual: np.ndarray
    hit_bound: np.ndarray


def calibrate_local_scales(dists, n_iter=CALIBRATION_ITERS) -> LocalScales:
    """Smoothed k-NN calibration of per-point offsets and bandwidths.

    For each row of neighbor distances, ``rho`` is the smallest positive
    distance and ``sigma`` is bisected inside
    ``[1e-3, 1e3] * mean(dists)`` so that
    ``sum_j exp(-max(0, d_j - rho) / sigma) = log2(k)``.
    """
    dists = np.asarray(dists, dtype=np.float64)
    n, k = dists.shape
    target = np.log2(k)
    pos = np.where(dists > 0, dists, np.inf)
    rho = pos.min(axis=1)
    bad = ~np.isfinite(rho)
    if np.any(bad):
        i = int(np.flatnonzero(bad)[0])
        raise ValueError(
            f"point {i} coincides with all of its neighbors; local scale is undefined"
        )
    shifted = np.maximum(dists - rho[:, None], 0.0)
    mean_d = float(dists.mean())
    lo = np.full(n, 1e-3 * mean_d)
    hi = np.full(n, 1e3 * mean_d)

    def psum(sig):
        return np.exp(-shifted / sig[:, None]).sum(axis=1)

    done = np.zeros(n, dtype=bool)
    sigma = 0.5 * (lo + hi)
    for _ in range(n_iter):
        mid = 0.5 * (lo + hi)
        sigma = np.where(done, sigma, mid)
        s = psum(sigma)
        done |= np.abs(s - target) < CALIBRATION_TOL
        too_big = (s > target) & ~done
        too_small = (s < target) & ~done
        hi = np.where(too_big, sigma, hi)
        lo = np.where(too_small, sigma, lo)
    resid = np.abs(psum(sigma) - target)
    # bisection only fails to reach the target when it lies outside the bracket
    return LocalScales(rho, sigma, resid, resid > 1e-3)


def fuzzy_union(A):
    A = np.asarray(A, dtype=np.float64)
    return A + A.T - A * A.T


def symmetrize(A, how):
    if how == "none":
        return np.asarray(A, dtype=np.float64)
    if how == "fuzzy_union":
        return fuzzy_union(A)
    if how == "average":
        return 0.5 * (A + A.T)
    raise ValueError(f"unknown symmetrization {how!r}")


def directed_local_affinities(g: NeighborGraph) -> np.ndarray:
    """Dense ``a_ij = exp(-max(0, d_ij - rho_i) / sigma_i)`` on the k-NN support."""
    cal = calibrate_local_scales(g.dists)
    vals = np.exp(-np.maximum(g.dists - cal.rho[:, None], 0.0) / cal.sigma[:, None])
    A = np.zeros((g.n, g.n))
    A[np.repeat(np.arange(g.n), g.k), g.indices.ravel()] = vals.ravel()
    return A


def input_kernel_matrix(X, g: NeighborGraph | None, spec: InputKernelSpec) -> np.ndarray:
    """Input similarity matrix ``K_X`` for the requested kernel.

    ``rbf_local`` is supported on the k-NN graph ``g`` only; ``rbf_fixed``
    (``exp(-||x_i - x_j||^2 / (2 sigma^2))``) and ``linear`` are dense.
    Symmetrization is applied last.
    """
    X = as_data_matrix(X)
    if spec.kind == "linear":
        A = X @ X.T
    elif spec.kind == "rbf_fixed":
        A = np.exp(-sq_dist_matrix(X, "euclidean_sq") / (2.0 * spec.sigma**2))
    else:
        if g is None:
            raise ValueError("rbf_local needs a neighbor graph")
        if g.n != X.shape[0]:
            raise ValueError("graph does not match X")
        A = directed_local_affinities(g)
    return symmetrize(A, spec.symmetrize)


def psd_diagnostic(K) -> float:
    """Smallest eigenvalue divided by the Frobenius norm."""
    K = np.asarray(K, dtype=np.float64)
    lam = sym_eigh(K, count=1, end="smallest").values[0]
    return float(lam / np.linalg.norm(K))
