"""Optimizers: full-batch gradient descent, UMAP's sampled optimizer, and the
low-rank approximate PCA gradient."""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numba
import numpy as np

from .linalg import as_data_matrix, as_sym_matrix, frob_inner, sym_eigh
from .neighbors import NeighborGraph, laplacian_eigenmaps_init
from .objectives import UMAP_EPS, GradientScheme, UMAPIntendedScheme

CLIP = 4.0


class NonFiniteError(FloatingPointError):
    pass


@dataclass
class RunConfig:
    seed: int = 0
    epochs: int = 500
    learning_rate: float = 1e-3
    lr_decay: str = "linear_to_zero"
    init: str = "random_gaussian"
    init_scale: float = 1e-2
    negative_samples: int = 5
    record_every: int = 1
    clip: float = CLIP
    eps: float = UMAP_EPS

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be > 0")
        if self.lr_decay not in ("none", "linear_to_zero"):
            raise ValueError(f"unknown lr_decay {self.lr_decay!r}")
        if self.init not in ("random_gaussian", "laplacian_eigenmaps", "provided"):
            raise ValueError(f"unknown init {self.init!r}")
        if self.negative_samples < 1:
            raise ValueError("negative_samples must be >= 1")
        if self.record_every < 1:
            raise ValueError("record_every must be >= 1")

    def lr_at(self, epoch: int) -> float:
        """Step size for 1-based ``epoch``."""
        if self.lr_decay == "none":
            return self.learning_rate
        return self.learning_rate * (1.0 - (epoch - 1) / self.epochs)


@dataclass
class RunResult:
    embedding: np.ndarray
    loss_curve: list = field(default_factory=list)
    grad_norm_curve: list = field(default_factory=list)
    wall_time: float = 0.0
    probe_curves: dict = field(default_factory=dict)


def initial_embedding(cfg: RunConfig, n, d, affinity=None, provided=None) -> np.ndarray:
    if cfg.init == "provided":
        if provided is None:
            raise ValueError("init='provided' needs an embedding")
        return as_data_matrix(provided, "Y0").copy()
    if cfg.init == "laplacian_eigenmaps":
        if affinity is None:
            raise ValueError("laplacian_eigenmaps init needs an affinity matrix")
        return laplacian_eigenmaps_init(affinity, d, cfg.seed)
    rng = np.random.default_rng(cfg.seed)
    return cfg.init_scale * rng.standard_normal((n, d))


def _finite_or_raise(value, epoch, what):
    if not np.all(np.isfinite(value)):
        raise NonFiniteError(f"non-finite {what} at epoch {epoch}")


def _record_probes(extra, Y, epoch, curves):
    for name, p in extra.items():
        v = p.loss(Y)
        _finite_or_raise(v, epoch, f"{name} loss")
        curves[name].append((epoch, v))


def descend(scheme: GradientScheme, Y0, cfg: RunConfig, loss_probe: GradientScheme | None = None,
            extra_probes: dict | None = None):
    """Synchronous full-batch gradient descent ``Y <- Y - lr_t * grad(Y)``.

    The loss curve records ``loss_probe`` (the scheme itself when unset) at
    epoch 0 and every ``record_every`` epochs, always including the last.
    The gradient-norm curve records ``||grad(Y_t)||_F`` at the same epochs.
    ``extra_probes`` maps names to schemes whose losses are tracked at the
    same epochs into ``RunResult.probe_curves``.
    """
    probe = loss_probe or scheme
    extra = dict(extra_probes or {})
    Y = as_data_matrix(Y0, "Y0").copy()
    start = time.perf_counter()
    losses, gnorms = [], []
    curves = {name: [] for name in extra}
    for epoch in range(cfg.epochs + 1):
        grad = scheme.gradient(Y)
        _finite_or_raise(grad, epoch, "gradient")
        if epoch % cfg.record_every == 0 or epoch == cfg.epochs:
            loss = probe.loss(Y)
            _finite_or_raise(loss, epoch, "loss")
            losses.append((epoch, loss))
            gnorms.append((epoch, float(np.linalg.norm(grad))))
            _record_probes(extra, Y, epoch, curves)
        if epoch == cfg.epochs:
            break
        Y = Y - cfg.lr_at(epoch + 1) * grad
    return RunResult(Y, losses, gnorms, time.perf_counter() - start, curves)


# --- UMAP's effective optimizer ------------------------------------------


@numba.njit(cache=True, fastmath=False)
def _clip(v, c):
    if v > c:
        return c
    if v < -c:
        return -c
    return v


@numba.njit(cache=True, fastmath=False)
def _sampled_epoch(Y, heads, tails, negatives, lr, clip, eps):
    """Apply attraction/repulsion samples in place, one fired edge at a time.

    Attraction along (i, j) uses ``(k_x / k_y) * delta`` with the ``k_x``
    factor realized by the sampling rate; repulsion uses
    ``(1 / max(1 - k_y, eps)) * delta``. Both carry the chain factor 2.
    """
    dim = Y.shape[1]
    n_neg = negatives.shape[1]
    for e in range(heads.shape[0]):
        i = heads[e]
        j = tails[e]
        u = 0.0
        for d in range(dim):
            diff = Y[i, d] - Y[j, d]
            u += diff * diff
        ky = 1.0 / (1.0 + u)
        coef = -2.0 * ky
        for d in range(dim):
            g = _clip(coef * (Y[i, d] - Y[j, d]), clip)
            Y[i, d] += lr * g
            Y[j, d] -= lr * g
        for s in range(n_neg):
            m = negatives[e, s]
            if m == i:
                continue
            u = 0.0
            for d in range(dim):
                diff = Y[i, d] - Y[m, d]
                u += diff * diff
            if u <= 0.0:
                continue
            ky = 1.0 / (1.0 + u)
            rep = 1.0 - ky
            if rep < eps:
                rep = eps
            coef = 2.0 * ky * ky / rep
            for d in range(dim):
                Y[i, d] += lr * _clip(coef * (Y[i, d] - Y[m, d]), clip)


def edge_schedule(weights, epochs) -> np.ndarray:
    """Boolean ``(epochs, n_edges)`` firing table.

    An edge with relative weight ``r = w / max(w)`` fires at epoch ``t``
    (1-based) exactly when ``ceil(t r) > ceil((t - 1) r)``, giving
    ``ceil(epochs * r)`` evenly spaced firings.
    """
    r = np.asarray(weights, dtype=np.float64) / np.max(weights)
    t = np.arange(epochs + 1, dtype=np.float64)[:, None]
    c = np.ceil(t * r[None, :])
    return c[1:] > c[:-1]


def graph_edges(KX, g: NeighborGraph | None = None):
    """Directed edges ``(i, j)`` with ``KX[i, j] > 0``, in row-major order."""
    KX = np.asarray(KX, dtype=np.float64)
    heads, tails = np.nonzero(KX)
    keep = heads != tails
    heads, tails = heads[keep], tails[keep]
    if heads.size == 0:
        raise ValueError("affinity matrix has no edges")
    if g is not None:
        support = g.edge_mask(symmetric=True)
        if not np.all(support[heads, tails]):
            raise ValueError("KX has entries outside the symmetrized k-NN support")
    return heads.astype(np.int64), tails.astype(np.int64), KX[heads, tails]


def umap_effective_optimize(KX, g: NeighborGraph | None, Y0, cfg: RunConfig,
                            loss_probe: GradientScheme | None = None,
                            extra_probes: dict | None = None) -> RunResult:
    """UMAP's sampled, asynchronous optimizer.

    Each directed edge fires ``ceil(epochs * w / max(w))`` times; every firing
    pulls both endpoints together and pushes the head away from
    ``cfg.negative_samples`` uniformly drawn points. Per-coordinate moves
    are clipped to ``cfg.clip``. The loss curve records ``loss_probe``
    (default: the full-batch cross entropy over ``KX``); ``extra_probes``
    behaves as in :func:`descend`.
    """
    heads, tails, w = graph_edges(KX, g)
    probe = loss_probe or UMAPIntendedScheme(as_sym_matrix(KX, "KX", tol=1e-10), cfg.eps)
    Y = np.ascontiguousarray(as_data_matrix(Y0, "Y0").copy())
    n = Y.shape[0]
    rng = np.random.default_rng(cfg.seed)
    schedule = edge_schedule(w, cfg.epochs)
    start = time.perf_counter()
    extra = dict(extra_probes or {})
    curves = {name: [] for name in extra}
    losses = [(0, probe.loss(Y))]
    gnorms = [(0, float(np.linalg.norm(probe.gradient(Y))))]
    _record_probes(extra, Y, 0, curves)
    for epoch in range(1, cfg.epochs + 1):
        fired = np.flatnonzero(schedule[epoch - 1])
        negatives = rng.integers(0, n, size=(fired.size, cfg.negative_samples))
        _sampled_epoch(Y, heads[fired], tails[fired], negatives,
                       cfg.lr_at(epoch), cfg.clip, cfg.eps)
        _finite_or_raise(Y, epoch, "embedding")
        if epoch % cfg.record_every == 0 or epoch == cfg.epochs:
            losses.append((epoch, probe.loss(Y)))
            gnorms.append((epoch, float(np.linalg.norm(probe.gradient(Y)))))
            _record_probes(extra, Y, epoch, curves)
    return RunResult(Y, losses, gnorms, time.perf_counter() - start, curves)


# --- Low-rank approximate PCA gradient -----------------------------------


@dataclass
class LowRankGradient:
    gradient: np.ndarray
    exact_gradient: np.ndarray
    alignment: float
    condition_holds: bool
    approx_error: float
    tail_error: float


def _centered_residual_times(G, GY, Y):
    R = G - GY
    R = R - R.mean(axis=0, keepdims=True)
    R = R - R.mean(axis=1, keepdims=True)
    return -4.0 * (R @ Y)


def lowrank_pca_gradient(GX, Y, rank, perturb=0.1, seed=0) -> LowRankGradient:
    """PCA gradient computed from a perturbed rank-``rank`` approximation of ``GX``.

    The approximation is ``G' = GX^rank + s Z`` with ``Z`` a seeded random
    symmetric unit-Frobenius matrix and ``s >= 0`` chosen so that
    ``||GX - G'||_F^2 = (1 + perturb) ||GX - GX^rank||_F^2``. Returns both
    gradients, their Frobenius inner product, and whether
    ``||GX - GY||_F^2 >= (1 + perturb) (lam_1 / lam_rank) ||GX - GX^rank||_F^2``.
    """
    GX = as_sym_matrix(GX, "GX", tol=1e-10)
    Y = as_data_matrix(Y, "Y")
    n = GX.shape[0]
    if not 1 <= rank <= n:
        raise ValueError(f"rank must lie in [1, {n}], got {rank}")
    if perturb < 0:
        raise ValueError("perturb must be non-negative")
    pairs = sym_eigh(GX, end="largest")
    lam, V = pairs.values, pairs.vectors
    if rank == n:
        G_rank = GX
    else:
        G_rank = (V[:, :rank] * lam[:rank]) @ V[:, :rank].T
    T = GX - G_rank
    tail = float(np.sum(T * T))
    rng = np.random.default_rng(seed)
    Z = rng.standard_normal((n, n))
    Z = Z + Z.T
    Z /= np.linalg.norm(Z)
    tz = frob_inner(T, Z)
    s = tz + np.sqrt(tz * tz + perturb * tail)
    G_approx = G_rank + s * Z if s > 0 else G_rank
    GY = Y @ Y.T
    grad = _centered_residual_times(GX, GY, Y)
    grad_approx = _centered_residual_times(G_approx, GY, Y)
    lhs = float(np.sum((GX - GY) ** 2))
    if tail == 0.0:
        holds = True
    else:
        holds = bool(lam[rank - 1] > 0 and lhs >= (1 + perturb) * lam[0] / lam[rank - 1] * tail)
    return LowRankGradient(grad_approx, grad, frob_inner(grad, grad_approx), holds,
                           float(np.sum((GX - G_approx) ** 2)), tail)
