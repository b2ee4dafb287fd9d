import numpy as np
import pytest
from hypothesis import given, strategies as st

from ardr.kernels import LINEAR, InputKernelSpec, input_kernel_matrix
from ardr.linalg import center_rows, double_center, gram, sq_dist_matrix
from ardr.neighbors import knn_graph, lle_weights, m_matrix
from ardr.objectives import (DKLLEScheme, DKPCAScheme, PCAScheme, UMAPIntendedScheme, cmds_target,
                             dklle_gradient, dklle_loss, dklle_scalars, dkpca_gradient, dkpca_loss,
                             pca_gradient, pca_gradient_pairwise, pca_loss, umap_intended_gradient,
                             umap_intended_loss)
from ardr.oracles import finite_diff_grad, pca_oracle


def rel_err(a, b):
    return np.linalg.norm(a - b) / max(np.linalg.norm(b), 1e-300)


def fd(loss, Y):
    return finite_diff_grad(loss, Y, h=1e-5 * max(1.0, np.abs(Y).max()))


def setup_dklle(seed, n=10, k=3):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, 3))
    W = lle_weights(X, knn_graph(X, k))
    return W, m_matrix(W), rng.normal(size=(n, 2))


def setup_umap(seed, n=10):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, 3))
    KX = input_kernel_matrix(X, knn_graph(X, 4), InputKernelSpec())
    return KX, rng.normal(size=(n, 2))


# --- PCA ---------------------------------------------------------------------------

def test_pca_loss_examples():
    X = np.random.default_rng(0).normal(size=(8, 3))
    T = double_center(gram(X))
    assert pca_loss(T, center_rows(X)) == pytest.approx(0.0, abs=1e-20)
    assert pca_loss(T, np.zeros((8, 2))) == pytest.approx(np.sum(T * T))
    with pytest.raises(ValueError):
        pca_loss(T, np.zeros((7, 2)))


def test_pca_loss_at_oracle_is_tail_energy():
    X = np.random.default_rng(1).normal(size=(20, 5))
    T = double_center(gram(X))
    lam = np.sort(np.linalg.eigvalsh(T))[::-1]
    Y = pca_oracle(X, 2).embedding
    assert pca_loss(T, Y) == pytest.approx(np.sum(lam[2:] ** 2), rel=1e-9)


def test_pca_gradient_vanishes_at_oracle():
    X = np.random.default_rng(2).normal(size=(30, 6))
    T = double_center(gram(X))
    Y = pca_oracle(X, 2).embedding
    assert np.linalg.norm(pca_gradient(T, Y)) <= 1e-6 * np.linalg.norm(gram(X))


def test_pca_pairwise_matches_matrix_form():
    rng = np.random.default_rng(3)
    for _ in range(20):
        X = rng.normal(size=(15, 4))
        Y = rng.normal(size=(15, 2))
        T = double_center(gram(X))
        np.testing.assert_allclose(pca_gradient_pairwise(T, Y), pca_gradient(T, Y), atol=1e-10)


@pytest.mark.parametrize("seed", range(5))
def test_pca_gradient_finite_difference(seed):
    rng = np.random.default_rng(seed)
    T = double_center(gram(rng.normal(size=(10, 4))))
    Y = rng.normal(size=(10, 2))
    assert rel_err(pca_gradient(T, Y), fd(lambda Z: pca_loss(T, Z), Y)) <= 1e-5


# --- cMDS target --------------------------------------------------------------------------

def test_cmds_target_examples():
    X = np.random.default_rng(4).normal(size=(9, 3))
    np.testing.assert_allclose(cmds_target(sq_dist_matrix(X)), double_center(gram(X)), atol=1e-8)
    np.testing.assert_array_equal(cmds_target(np.zeros((3, 3))), 0.0)
    with pytest.raises(ValueError):
        cmds_target(np.ones((3, 3)))


def test_cmds_target_l1_four_points():
    P = np.array([[0, 0], [1, 0], [0, 2], [3, 1]], dtype=float)
    D = sq_dist_matrix(P, "l1")
    # hand-built -1/2 C D^2 C for L1 distances [[0,1,2,4],[1,0,3,3],[2,3,0,4],[4,3,4,0]]
    expected = np.array([
        [1.8125, 1.0625, 0.8125, -3.6875],
        [1.0625, 1.3125, -1.9375, -0.4375],
        [0.8125, -1.9375, 3.8125, -2.6875],
        [-3.6875, -0.4375, -2.6875, 6.8125],
    ])
    np.testing.assert_allclose(cmds_target(D * D), expected, atol=1e-12)


# --- DK-PCA ---------------------------------------------------------------------------------

def test_dkpca_two_point_closed_form():
    a = 0.2
    KXc = a * np.array([[1.0, -1.0], [-1.0, 1.0]])
    Y = np.array([[0.3, -0.1], [-0.4, 0.5]])
    u = np.sum((Y[0] - Y[1]) ** 2)
    k = 1 / (1 + u)
    # C K_Y C = (1 - k)/2 [[1,-1],[-1,1]]
    assert dkpca_loss(KXc, Y) == pytest.approx(4 * (a - (1 - k) / 2) ** 2, rel=1e-12)
    g0 = 8 * (a - (1 - k) / 2) * (-k * k) * (Y[0] - Y[1])
    G = dkpca_gradient(KXc, Y)
    np.testing.assert_allclose(G[0], g0, rtol=1e-12)
    np.testing.assert_allclose(G[1], -g0, rtol=1e-12)


def test_dkpca_zero_at_matching_kernel():
    Y = np.array([[0.0, 0.0], [1.0, 1.0], [2.0, -1.0]])
    KY = 1 / (1 + sq_dist_matrix(Y))
    assert dkpca_loss(double_center(KY), Y) == pytest.approx(0.0, abs=1e-28)


def test_dkpca_rotation_invariance_and_coincident():
    rng = np.random.default_rng(5)
    KXc = double_center(np.exp(-sq_dist_matrix(rng.normal(size=(7, 3)))))
    Y = rng.normal(size=(7, 2))
    th = 0.7
    R = np.array([[np.cos(th), -np.sin(th)], [np.sin(th), np.cos(th)]])
    assert dkpca_loss(KXc, Y @ R) == pytest.approx(dkpca_loss(KXc, Y), abs=1e-10)
    np.testing.assert_array_equal(dkpca_gradient(KXc, np.ones((7, 2))), 0.0)
    with pytest.raises(ValueError):
        dkpca_loss(KXc, Y, LINEAR)


@pytest.mark.parametrize("seed", range(5))
def test_dkpca_finite_difference(seed):
    rng = np.random.default_rng(seed)
    KXc = double_center(np.exp(-sq_dist_matrix(rng.normal(size=(10, 3))) / 2))
    Y = rng.normal(size=(10, 2))
    G = dkpca_gradient(KXc, Y)
    assert rel_err(G, fd(lambda Z: dkpca_loss(KXc, Z), Y)) <= 1e-5
    assert np.all(np.abs(G.sum(axis=0)) <= 1e-9 * np.linalg.norm(G))


# --- DK-LLE -----------------------------------------------------------------------------------

def test_dklle_coincident_and_spread_limits():
    W, M, _ = setup_dklle(0)
    n = M.shape[0]
    assert dklle_loss(M, np.zeros((n, 2))) == pytest.approx(n, abs=1e-10)
    # far apart, K_Y -> I: Tr(M) from the first term and n / n from the second
    Y = np.random.default_rng(1).normal(size=(n, 2)) * 1e8
    assert dklle_loss(M, Y) == pytest.approx(np.trace(M) + 1.0, rel=1e-6)


def test_dklle_loss_double_loop():
    W, M, Y = setup_dklle(2, n=8)
    n = 8
    total = 0.0
    for i in range(n):
        for j in range(n):
            k = 1.0 / (1.0 + np.sum((Y[i] - Y[j]) ** 2))
            total += M[i, j] * k + k / n
    assert dklle_loss(M, Y) == pytest.approx(total, abs=1e-12)


def test_dklle_zero_weights_pure_repulsion():
    n = 6
    att, rep = dklle_scalars(np.zeros((n, n)))
    off = ~np.eye(n, dtype=bool)
    np.testing.assert_array_equal(att, 0.0)
    np.testing.assert_allclose((att - rep)[off], -1.0 / n)


def test_dklle_scalar_decomposition():
    W, _, _ = setup_dklle(3)
    Wd = W.dense()
    att, rep = dklle_scalars(W)
    off = ~np.eye(Wd.shape[0], dtype=bool)
    np.testing.assert_allclose(att[off], (Wd + Wd.T)[off])
    np.testing.assert_allclose(rep[off], (Wd.T @ Wd + 1.0 / Wd.shape[0])[off])


@pytest.mark.parametrize("seed", range(5))
def test_dklle_finite_difference(seed):
    W, M, Y = setup_dklle(seed)
    G = dklle_gradient(W, Y)
    assert rel_err(G, fd(lambda Z: dklle_loss(M, Z), Y)) <= 1e-5
    assert np.all(np.abs(G.sum(axis=0)) <= 1e-9 * np.linalg.norm(G))


def test_dklle_dense_matrix_calculus():
    W, M, Y = setup_dklle(9, n=8)
    n = 8
    # d/dY of sum_ij A_ij k(||y_i - y_j||^2) with A = M + J/n, via the full 4-index chain rule
    A = M + 1.0 / n
    diff = Y[:, None, :] - Y[None, :, :]
    K = 1 / (1 + (diff**2).sum(-1))
    dK_dYi = -2 * (K**2)[:, :, None] * diff  # derivative of K_ij with respect to y_i
    G = np.zeros_like(Y)
    for a in range(n):
        for b in range(n):
            if a == b:
                continue
            G[a] += A[a, b] * dK_dYi[a, b]
            G[b] += A[a, b] * (-dK_dYi[a, b])
    np.testing.assert_allclose(dklle_gradient(W, Y), G, atol=1e-10)


# --- UMAP intended ------------------------------------------------------------------------------

def test_umap_single_pair_terms():
    Y = np.array([[0.0, 0.0], [1.0, 0.0]])
    ky = 0.5
    g_att = umap_intended_gradient(np.array([[0.0, 1.0], [1.0, 0.0]]), Y)
    # pure attraction: -4 * (1/ky) * (-ky^2) * (y0 - y1) pulls y0 toward y1
    np.testing.assert_allclose(g_att[0], 4 * ky * (Y[0] - Y[1]))
    g_rep = umap_intended_gradient(np.zeros((2, 2)), Y)
    np.testing.assert_allclose(g_rep[0], -4 * ky**2 / (1 - ky) * (Y[0] - Y[1]))


def test_umap_coincident_points_guarded():
    Y = np.zeros((3, 2))
    KX = np.full((3, 3), 0.5)
    assert np.isfinite(umap_intended_loss(KX, Y))
    assert np.all(np.isfinite(umap_intended_gradient(KX, Y)))


def test_umap_rejects_out_of_range():
    with pytest.raises(ValueError):
        umap_intended_loss(np.full((2, 2), 1.5), np.zeros((2, 2)))


@pytest.mark.parametrize("seed", range(5))
def test_umap_finite_difference(seed):
    KX, Y = setup_umap(seed)
    G = umap_intended_gradient(KX, Y)
    assert rel_err(G, fd(lambda Z: umap_intended_loss(KX, Z), Y)) <= 1e-5


# --- scheme objects ----------------------------------------------------------------------------------

def _schemes(seed):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(12, 3))
    W = lle_weights(X, knn_graph(X, 4))
    KX = input_kernel_matrix(X, knn_graph(X, 4), InputKernelSpec())
    return [
        PCAScheme(double_center(gram(X))),
        DKPCAScheme(double_center(np.exp(-sq_dist_matrix(X) / 2))),
        DKLLEScheme(W),
        UMAPIntendedScheme(KX),
    ], rng.normal(size=(12, 2))


@given(st.integers(0, 10_000))
def test_schemes_pairwise_form_and_translation(seed):
    schemes, Y = _schemes(seed)
    for s in schemes:
        G = s.gradient(Y)
        np.testing.assert_allclose(s.pairwise_gradient(Y), G, atol=1e-10 * max(1, np.linalg.norm(G)))
        assert np.all(np.abs(G.sum(axis=0)) <= 1e-9 * max(np.linalg.norm(G), 1e-12))
        assert np.isfinite(s.loss(Y))
