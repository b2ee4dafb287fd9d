"""Dense matrix primitives shared by every embedding method.

Matrices are plain ``numpy.ndarray`` objects. Data matrices are ``n x m``
float arrays (inputs ``X``, embeddings ``Y``); square symmetric matrices
hold Gram, kernel and distance matrices.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

SYMMETRY_TOL = 1e-12


class EigenPairs(NamedTuple):
    """Eigenvalues with matching orthonormal eigenvector columns."""

    values: np.ndarray
    vectors: np.ndarray


class EigenConvergenceError(RuntimeError):
    pass


def as_data_matrix(X, name="X") -> np.ndarray:
    """Validate and return ``X`` as a finite 2-D float array."""
    A = np.asarray(X, dtype=np.float64)
    if A.ndim == 1:
        A = A[:, None]
    if A.ndim != 2 or A.shape[0] < 1 or A.shape[1] < 1:
        raise ValueError(f"{name} must be a non-empty 2-D matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError(f"{name} contains non-finite entries")
    return A


def as_sym_matrix(A, name="A", tol=SYMMETRY_TOL) -> np.ndarray:
    """Validate and return ``A`` as a square symmetric float array."""
    S = np.asarray(A, dtype=np.float64)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise ValueError(f"{name} must be square, got shape {S.shape}")
    if not np.all(np.isfinite(S)):
        raise ValueError(f"{name} contains non-finite entries")
    if S.size and np.max(np.abs(S - S.T)) > tol * max(1.0, np.max(np.abs(S))):
        raise ValueError(f"{name} is not symmetric")
    return S


def center_rows(X) -> np.ndarray:
    """Subtract the column means, i.e. compute ``C @ X`` without forming C."""
    X = as_data_matrix(X)
    return X - X.mean(axis=0, keepdims=True)


def gram(X) -> np.ndarray:
    """Inner-product matrix ``X @ X.T``."""
    X = as_data_matrix(X)
    G = X @ X.T
    return 0.5 * (G + G.T)


def sq_dist_matrix(X, metric="euclidean_sq") -> np.ndarray:
    """Pairwise dissimilarities between the rows of ``X``.

    ``euclidean_sq`` gives squared Euclidean distances, ``l1`` gives
    (unsquared) Manhattan distances. The diagonal is exactly zero.
    """
    X = as_data_matrix(X)
    if metric == "euclidean_sq":
        # exact differences when they fit in memory; expansion otherwise
        if X.shape[0] ** 2 * X.shape[1] <= 2e7:
            diff = X[:, None, :] - X[None, :, :]
            D = np.einsum("ijk,ijk->ij", diff, diff)
        else:
            sq = np.einsum("ij,ij->i", X, X)
            D = sq[:, None] + sq[None, :] - 2.0 * (X @ X.T)
            np.maximum(D, 0.0, out=D)
    elif metric == "l1":
        D = np.zeros((X.shape[0], X.shape[0]))
        for col in X.T:
            D += np.abs(col[:, None] - col[None, :])
    else:
        raise ValueError(f"unknown metric {metric!r}")
    D = 0.5 * (D + D.T)
    np.fill_diagonal(D, 0.0)
    return D


def double_center(A) -> np.ndarray:
    """``C @ A @ C`` with ``C = I - J/n``, computed by mean subtraction."""
    A = np.asarray(A, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {A.shape}")
    B = A - A.mean(axis=0, keepdims=True)
    B = B - B.mean(axis=1, keepdims=True)
    return B


def frob_inner(A, B) -> float:
    """Frobenius inner product ``sum_ij A_ij B_ij``."""
    A = np.asarray(A, dtype=np.float64)
    B = np.asarray(B, dtype=np.float64)
    if A.shape != B.shape:
        raise ValueError(f"shape mismatch: {A.shape} vs {B.shape}")
    return float(np.sum(A * B))


def _off_norm(A):
    # summed directly; ||A||^2 - ||diag||^2 cancels catastrophically near convergence
    return float(np.sqrt(2.0 * np.sum(np.triu(A, 1) ** 2)))


def _jacobi_eigh(A, max_sweeps=100, rel_tol=1e-10):
    """Cyclic Jacobi eigendecomposition of a symmetric matrix.

    Returns ascending eigenvalues and the matching eigenvector columns.
    """
    A = np.array(A, dtype=np.float64, copy=True)
    n = A.shape[0]
    V = np.eye(n)
    scale = np.linalg.norm(A)
    if n == 1 or scale == 0.0:
        return np.diag(A).copy(), V
    target = rel_tol * scale
    off = _off_norm(A)
    for _ in range(max_sweeps):
        if off <= target:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if abs(apq) <= 1e-18 * scale:
                    A[p, q] = A[q, p] = 0.0
                    continue
                theta = (A[q, q] - A[p, p]) / (2.0 * apq)
                if abs(theta) > 1e150:
                    t = 0.5 / theta  # theta^2 would overflow
                else:
                    t = np.copysign(1.0, theta) / (abs(theta) + np.sqrt(theta * theta + 1.0))
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                ap = A[:, p].copy()
                aq = A[:, q].copy()
                A[:, p] = c * ap - s * aq
                A[:, q] = s * ap + c * aq
                ap = A[p, :].copy()
                aq = A[q, :].copy()
                A[p, :] = c * ap - s * aq
                A[q, :] = s * ap + c * aq
                A[p, q] = A[q, p] = 0.0
                vp = V[:, p].copy()
                vq = V[:, q].copy()
                V[:, p] = c * vp - s * vq
                V[:, q] = s * vp + c * vq
        off = _off_norm(A)
    if off > target:
        raise EigenConvergenceError(
            f"Jacobi did not converge after {max_sweeps} sweeps: "
            f"off-diagonal norm {off:.3e} > {target:.3e}"
        )
    w = np.diag(A).copy()
    order = np.argsort(w, kind="stable")
    return w[order], V[:, order]


def sym_eigh(A, count=None, end="largest", method="lapack") -> EigenPairs:
    """Eigenpairs of a symmetric matrix from one end of the spectrum.

    Parameters
    ----------
    A : (n, n) array
        Symmetric matrix.
    count : int, optional
        Number of eigenpairs to return (default: all).
    end : {"largest", "smallest"}
        Which end of the spectrum; values are sorted descending for
        ``largest`` and ascending for ``smallest``.
    method : {"lapack", "jacobi"}
        ``lapack`` calls ``numpy.linalg.eigh``; ``jacobi`` runs cyclic Jacobi
        rotations (100 sweeps, off-diagonal tolerance ``1e-10 * ||A||_F``).
    """
    A = as_sym_matrix(A, tol=1e-10)
    n = A.shape[0]
    if count is None:
        count = n
    if not 0 <= count <= n:
        raise ValueError(f"count must lie in [0, {n}], got {count}")
    if end not in ("largest", "smallest"):
        raise ValueError(f"end must be 'largest' or 'smallest', got {end!r}")
    A = 0.5 * (A + A.T)
    if method == "lapack":
        w, V = np.linalg.eigh(A)
    elif method == "jacobi":
        w, V = _jacobi_eigh(A)
    else:
        raise ValueError(f"unknown eigensolver {method!r}")
    if end == "largest":
        w, V = w[::-1], V[:, ::-1]
    w = np.ascontiguousarray(w[:count])
    V = np.ascontiguousarray(V[:, :count])
    resid = np.linalg.norm(A @ V - V * w) if count else 0.0
    if resid > 1e-6 * max(np.linalg.norm(A), 1e-300):
        raise EigenConvergenceError(f"eigen residual {resid:.3e} exceeds tolerance")
    return EigenPairs(w, V)


def fix_signs(V) -> np.ndarray:
    """Flip columns so that the first entry of non-negligible size is positive."""
    V = np.array(V, dtype=np.float64, copy=True)
    for j in range(V.shape[1]):
        col = V[:, j]
        big = np.flatnonzero(np.abs(col) > 1e-10 * max(np.max(np.abs(col)), 1e-300))
        if big.size and col[big[0]] < 0:
            V[:, j] = -col
    return V


def procrustes_align(Y, Yref) -> np.ndarray:
    """Return ``Y @ O`` for the orthogonal ``O`` closest to ``Yref``."""
    Y = as_data_matrix(Y, "Y")
    Yref = as_data_matrix(Yref, "Yref")
    if Y.shape != Yref.shape:
        raise ValueError(f"shape mismatch: {Y.shape} vs {Yref.shape}")
    U, _, Vt = np.linalg.svd(Y.T @ Yref)
    return Y @ (U @ Vt)


def procrustes_residual(Y, Yref) -> float:
    """Relative misfit ``min_O ||Y O - Yref||_F / ||Yref||_F`` over orthogonal O."""
    aligned = procrustes_align(Y, Yref)
    ref = np.linalg.norm(Yref)
    if ref == 0.0:
        return float(np.linalg.norm(aligned))
    return float(np.linalg.norm(aligned - Yref) / ref)
