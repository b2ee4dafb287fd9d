"""Losses and analytic gradients for every embedding objective.

Each gradient can be written in attraction/repulsion form

    grad_i = -c * sum_j l_ij * delta_ij * (y_i - y_j)

where ``l_ij`` is a per-pair scalar (attraction minus repulsion),
``delta_ij = d k_y / d u`` evaluated at ``u = ||y_i - y_j||^2``, and ``c``
absorbs the chain-rule factor ``d u / d y_i = 2 (y_i - y_j)`` together with
the double counting of ordered pairs. The schemes below expose all three
pieces so the decomposition can be checked term by term.
"""

from __future__ import annotations

import numpy as np

from .kernels import CAUCHY, LINEAR, OutputKernel, output_kernel, output_kernel_deriv
from .linalg import as_data_matrix, as_sym_matrix, double_center
from .neighbors import WeightMatrix, m_matrix

UMAP_EPS = 1e-3


def pair_field(S, Y) -> np.ndarray:
    """``out_i = sum_j S_ij (y_i - y_j)``."""
    return S.sum(axis=1)[:, None] * Y - S @ Y


def ardr_gradient(l, delta, Y, c) -> np.ndarray:
    """Assemble ``-c * sum_j l_ij delta_ij (y_i - y_j)``."""
    return -c * pair_field(l * delta, Y)


def sqdist(Y) -> np.ndarray:
    Y = np.asarray(Y, dtype=np.float64)
    U = np.zeros((Y.shape[0], Y.shape[0]))
    for col in Y.T:
        diff = col[:, None] - col[None, :]
        U += diff * diff
    return U


def _check_pair(T, Y, what="target"):
    Y = as_data_matrix(Y, "Y")
    T = np.asarray(T, dtype=np.float64)
    if T.shape != (Y.shape[0], Y.shape[0]):
        raise ValueError(f"{what} of shape {T.shape} does not match Y with {Y.shape[0]} rows")
    return T, Y


def _require_cauchy(k: OutputKernel):
    if k.kind != "cauchy":
        raise ValueError("this objective needs the Cauchy output kernel; use pca_loss for linear")


# --- PCA / classical MDS / Isomap -----------------------------------------


def pca_residual(GX_c, Y) -> np.ndarray:
    """``C (G_X - G_Y) C`` given the double-centered target ``GX_c``."""
    GX_c, Y = _check_pair(GX_c, Y)
    Yc = Y - Y.mean(axis=0)
    return GX_c - Yc @ Yc.T


def pca_loss(GX_c, Y) -> float:
    R = pca_residual(GX_c, Y)
    return float(np.sum(R * R))


def pca_gradient(GX_c, Y) -> np.ndarray:
    """Matrix form ``-4 C (G_X - G_Y) C Y``."""
    R = pca_residual(GX_c, Y)
    return -4.0 * (R @ np.asarray(Y, dtype=np.float64))


def pca_gradient_pairwise(GX_c, Y) -> np.ndarray:
    """The same gradient as ``4 sum_j L_ij (y_i - y_j)`` with ``L = C (G_X - G_Y) C``.

    Evaluated as an explicit loop over pairs so it shares no matrix product
    with :func:`pca_gradient`.
    """
    L = pca_residual(GX_c, Y)
    Y = np.asarray(Y, dtype=np.float64)
    out = np.zeros_like(Y)
    for i in range(Y.shape[0]):
        out[i] = 4.0 * np.sum(L[i][:, None] * (Y[i] - Y), axis=0)
    return out


def cmds_target(D) -> np.ndarray:
    """``-1/2 C D C`` for a matrix of squared dissimilarities."""
    D = as_sym_matrix(D, "D", tol=1e-10)
    if np.any(np.abs(np.diag(D)) > 0):
        raise ValueError("squared dissimilarity matrix must have a zero diagonal")
    return -0.5 * double_center(D)


# --- DK-PCA ----------------------------------------------------------------


def dkpca_residual(KX_c, Y, k: OutputKernel = CAUCHY) -> np.ndarray:
    _require_cauchy(k)
    KX_c, Y = _check_pair(KX_c, Y)
    return KX_c - double_center(output_kernel(k, sqdist(Y)))


def dkpca_loss(KX_c, Y, k: OutputKernel = CAUCHY) -> float:
    """``||K_X - C K_Y C||_F^2`` with ``K_X`` already double-centered."""
    R = dkpca_residual(KX_c, Y, k)
    return float(np.sum(R * R))


def dkpca_gradient(KX_c, Y, k: OutputKernel = CAUCHY) -> np.ndarray:
    R = dkpca_residual(KX_c, Y, k)
    Y = np.asarray(Y, dtype=np.float64)
    return ardr_gradient(R, output_kernel_deriv(k, sqdist(Y)), Y, 8.0)


# --- DK-LLE ----------------------------------------------------------------


def _dense_w(W) -> np.ndarray:
    if isinstance(W, WeightMatrix):
        return W.dense()
    return np.asarray(W, dtype=np.float64)


def dklle_loss(M, Y, k: OutputKernel = CAUCHY) -> float:
    """``Tr(M K_Y) + (1/n) sum_{i,j} k_y(||y_i - y_j||^2)`` with raw ``K_Y``."""
    _require_cauchy(k)
    M, Y = _check_pair(M, Y, "M")
    K = output_kernel(k, sqdist(Y))
    return float(np.sum(M * K) + K.sum() / Y.shape[0])


def dklle_scalars(W) -> tuple[np.ndarray, np.ndarray]:
    """Attraction ``w_ij + w_ji`` and repulsion ``[W^T W]_ij + 1/n`` with zero diagonal."""
    Wd = _dense_w(W)
    n = Wd.shape[0]
    attract = Wd + Wd.T
    repel = Wd.T @ Wd + 1.0 / n
    np.fill_diagonal(attract, 0.0)
    np.fill_diagonal(repel, 0.0)
    return attract, repel


def dklle_gradient(W, Y, k: OutputKernel = CAUCHY) -> np.ndarray:
    """``-4 sum_j (w_ij + w_ji - v_ij - 1/n) delta_ij (y_i - y_j)``."""
    _require_cauchy(k)
    attract, repel = dklle_scalars(W)
    _, Y = _check_pair(attract, Y, "W")
    return ardr_gradient(attract - repel, output_kernel_deriv(k, sqdist(Y)), Y, 4.0)


# --- UMAP (intended, full batch) ------------------------------------------


def _umap_terms(KX, Y, k, eps):
    _require_cauchy(k)
    KX, Y = _check_pair(KX, Y, "KX")
    if np.any(KX < 0) or np.any(KX > 1):
        raise ValueError("KX entries must lie in [0, 1]")
    ky = output_kernel(k, sqdist(Y))
    off = ~np.eye(Y.shape[0], dtype=bool)
    return KX, Y, ky, np.maximum(1.0 - ky, eps), off


def umap_intended_loss(KX, Y, k: OutputKernel = CAUCHY, eps=UMAP_EPS) -> float:
    """Cross entropy ``sum_{i != j} -k_x log k_y - (1 - k_x) log(max(1 - k_y, eps))``."""
    KX, Y, ky, rep, off = _umap_terms(KX, Y, k, eps)
    terms = -KX * np.log(ky) - (1.0 - KX) * np.log(rep)
    return float(np.sum(terms[off]))


def umap_intended_gradient(KX, Y, k: OutputKernel = CAUCHY, eps=UMAP_EPS) -> np.ndarray:
    """Full-batch attraction ``k_x / k_y`` and repulsion ``(1 - k_x) / (1 - k_y)`` field."""
    KX, Y, ky, rep, off = _umap_terms(KX, Y, k, eps)
    l = KX / ky - (1.0 - KX) / rep
    l = np.where(off, 0.5 * (l + l.T), 0.0)
    return ardr_gradient(l, -ky * ky, Y, 4.0)


# --- scheme objects --------------------------------------------------------


class GradientScheme:
    """A named objective with loss, gradient and its pairwise decomposition."""

    name = "abstract"
    constant = 1.0
    output_kernel = CAUCHY

    def loss(self, Y) -> float:
        raise NotImplementedError

    def gradient(self, Y) -> np.ndarray:
        raise NotImplementedError

    def pair_scalars(self, Y) -> np.ndarray:
        raise NotImplementedError

    def delta(self, Y):
        return output_kernel_deriv(self.output_kernel, sqdist(Y))

    def pairwise_gradient(self, Y) -> np.ndarray:
        Y = np.asarray(Y, dtype=np.float64)
        return ardr_gradient(self.pair_scalars(Y), self.delta(Y), Y, self.constant)


class PCAScheme(GradientScheme):
    """PCA, classical MDS and Isomap share this scheme; only the target differs.

    With a linear output kernel ``C G_Y C = -1/2 C D_Y C``, so ``delta`` is the
    constant ``-1/2`` and ``c = 8`` reproduces the factor 4 of the pairwise form.
    """

    constant = 8.0
    output_kernel = LINEAR

    def __init__(self, target, name="pca"):
        self.target = as_sym_matrix(target, "target", tol=1e-8)
        self.name = name

    def loss(self, Y):
        return pca_loss(self.target, Y)

    def gradient(self, Y):
        return pca_gradient(self.target, Y)

    def pair_scalars(self, Y):
        return pca_residual(self.target, Y)

    def delta(self, Y):
        return -0.5


class DKPCAScheme(GradientScheme):
    name = "dkpca"
    constant = 8.0

    def __init__(self, KX_c):
        self.target = as_sym_matrix(KX_c, "KX_c", tol=1e-8)

    def loss(self, Y):
        return dkpca_loss(self.target, Y)

    def gradient(self, Y):
        return dkpca_gradient(self.target, Y)

    def pair_scalars(self, Y):
        return dkpca_residual(self.target, Y)


class DKLLEScheme(GradientScheme):
    name = "dklle"
    constant = 4.0

    def __init__(self, W):
        self.W = _dense_w(W)
        self.M = m_matrix(self.W)
        self.attract, self.repel = dklle_scalars(self.W)
        self._l = self.attract - self.repel

    def loss(self, Y):
        return dklle_loss(self.M, Y)

    def gradient(self, Y):
        Y = np.asarray(Y, dtype=np.float64)
        return ardr_gradient(self._l, self.delta(Y), Y, self.constant)

    def pair_scalars(self, Y):
        return self._l


class UMAPIntendedScheme(GradientScheme):
    name = "umap_intended"
    constant = 4.0

    def __init__(self, KX, eps=UMAP_EPS):
        self.target = as_sym_matrix(KX, "KX", tol=1e-10)
        self.eps = eps

    def loss(self, Y):
        return umap_intended_loss(self.target, Y, eps=self.eps)

    def gradient(self, Y):
        return umap_intended_gradient(self.target, Y, eps=self.eps)

    def pair_scalars(self, Y):
        KX, Y, ky, rep, off = _umap_terms(self.target, Y, CAUCHY, self.eps)
        l = KX / ky - (1.0 - KX) / rep
        return np.where(off, 0.5 * (l + l.T), 0.0)
