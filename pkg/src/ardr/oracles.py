"""Direct eigensolver embeddings and a finite-difference gradient, used as ground truth."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import as_data_matrix, as_sym_matrix, double_center, fix_signs, gram, sym_eigh
from .objectives import cmds_target


@dataclass
class OracleEmbedding:
    embedding: np.ndarray
    spectrum: np.ndarray
    method: str
    rank_deficient: bool = False


def _top_scaled(B, d, method):
    n = B.shape[0]
    if not 1 <= d <= n:
        raise ValueError(f"d must lie in [1, {n}], got {d}")
    pairs = sym_eigh(B, count=d, end="largest")
    lam = pairs.values
    V = fix_signs(pairs.vectors)
    scale = max(np.linalg.norm(B), 1e-300)
    keep = lam > 1e-10 * scale
    Y = V * np.sqrt(np.where(keep, lam, 0.0))
    Y[:, ~keep] = 0.0
    return OracleEmbedding(Y, lam, method, bool(np.any(~keep)))


def pca_oracle(X, d) -> OracleEmbedding:
    """Top-``d`` principal component scores ``U_X Sigma_X`` of ``C X``.

    Columns beyond the numerical rank are zero and ``rank_deficient`` is set.
    """
    X = as_data_matrix(X)
    if d > min(X.shape):
        raise ValueError(f"d={d} exceeds min(n, D)={min(X.shape)}")
    return _top_scaled(double_center(gram(X)), d, "pca")


def cmds_oracle(Dsq, d) -> OracleEmbedding:
    """Classical MDS: top eigenpairs of ``-1/2 C D C``, scaled by ``sqrt(max(lam, 0))``.

    The constant vector always carries eigenvalue 0, so "all-negative" means
    no eigenvalue is positive while the target itself is nonzero.
    """
    B = cmds_target(Dsq)
    scale = np.linalg.norm(B)
    lam_max = sym_eigh(B, count=1, end="largest").values[0]
    if scale > 0 and lam_max <= 1e-10 * scale:
        raise ValueError("classical MDS target has no positive eigenvalue")
    return _top_scaled(B, d, "cmds")


def lle_oracle(M, d) -> OracleEmbedding:
    """Bottom non-null eigenvectors of ``M``, scaled so that ``Y^T Y / n = I``."""
    M = as_sym_matrix(M, "M", tol=1e-8)
    n = M.shape[0]
    pairs = sym_eigh(M, end="smallest")
    null = pairs.values <= 1e-8 * np.linalg.norm(M)
    idx = np.flatnonzero(~null)[:d]
    if idx.size < d:
        raise ValueError(
            f"M has only {idx.size} eigenvalues above the null threshold; need {d}"
        )
    V = pairs.vectors[:, idx]
    # exact eigenvectors are orthogonal to the constant null vector; remove
    # the round-off leakage and re-orthonormalize within the same span
    if np.any(null):
        V = np.linalg.qr(V - V.mean(axis=0))[0]
    V = fix_signs(V)
    return OracleEmbedding(np.sqrt(n) * V, pairs.values[idx], "lle")


def finite_diff_grad(loss, Y, h=1e-5) -> np.ndarray:
    """Central differences ``(loss(Y + h e) - loss(Y - h e)) / 2h`` per coordinate."""
    if not h > 0:
        raise ValueError("h must be positive")
    Y = np.array(Y, dtype=np.float64, copy=True)
    G = np.empty_like(Y)
    for idx in np.ndindex(Y.shape):
        orig = Y[idx]
        Y[idx] = orig + h
        fp = loss(Y)
        Y[idx] = orig - h
        fm = loss(Y)
        Y[idx] = orig
        if not (np.isfinite(fp) and np.isfinite(fm)):
            raise FloatingPointError(f"non-finite loss when probing coordinate {idx}")
        G[idx] = (fp - fm) / (2.0 * h)
    return G
