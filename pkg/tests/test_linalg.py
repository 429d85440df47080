import math

import numpy as np
import pytest

from quadround import (GaussianSampler, NotPositiveDefinite, SymMatrix,
                       cholesky, frobenius_inner, inverse_spd, outer,
                       sqrt_psd, sym_eigen)


def test_symmatrix_symmetrizes_and_validates():
    m = SymMatrix([[1.0, 2.0], [0.0, 3.0]])
    assert np.array_equal(m.mat, m.mat.T)
    assert m.mat[0, 1] == 1.0
    with pytest.raises(ValueError):
        SymMatrix([[1.0, 2.0]])
    with pytest.raises(ValueError):
        SymMatrix([[np.nan]])
    with pytest.raises(ValueError):
        SymMatrix(np.zeros((0, 0)))


def test_frobenius_inner_examples():
    assert frobenius_inner(np.eye(2), np.eye(2)) == 2.0
    # <I, X> = trace(X) = 1 for a unit-trace matrix
    X = np.array([[0.3, 0.1], [0.1, 0.7]])
    assert frobenius_inner(np.eye(2), X) == pytest.approx(1.0, abs=1e-15)
    assert frobenius_inner(np.diag([1.0, 2.0]), np.diag([3.0, 4.0])) == 11.0
    assert frobenius_inner(SymMatrix(np.eye(2)), np.eye(2)) == 2.0
    with pytest.raises(ValueError):
        frobenius_inner(np.eye(2), np.eye(3))


def test_frobenius_inner_is_quadratic_form_bridge():
    # <A, x (x) x> equals x' A x
    sampler = GaussianSampler(11)
    for i in range(50):
        n = 2 + i % 5
        A = SymMatrix(sampler.normals((n, n)))
        x = sampler.normals((n,))
        assert frobenius_inner(A, outer(x)) == pytest.approx(
            float(x @ A.mat @ x), rel=1e-12, abs=1e-12)


def test_sym_eigen_examples():
    w, v = sym_eigen(np.diag([3.0, 1.0]))
    assert np.allclose(w, [1.0, 3.0])
    assert np.allclose(np.abs(v), np.eye(2)[:, ::-1])

    w, v = sym_eigen(np.eye(4))
    assert np.allclose(w, 1.0)
    assert np.allclose(v.T @ v, np.eye(4), atol=1e-12)

    # characteristic polynomial by hand: lambda^2 - 4 lambda + 3
    w, v = sym_eigen(np.array([[2.0, 1.0], [1.0, 2.0]]))
    assert np.allclose(w, [1.0, 3.0], atol=1e-12)
    assert np.allclose(np.abs(v[:, 0]), [1 / math.sqrt(2)] * 2, atol=1e-12)
    assert np.allclose(np.abs(v[:, 1]), [1 / math.sqrt(2)] * 2, atol=1e-12)

    with pytest.raises(ValueError):
        sym_eigen(np.eye(2), tol=0.0)


def test_sym_eigen_reconstructs_random():
    sampler = GaussianSampler(12)
    for i in range(30):
        n = 2 + i % 6
        A = SymMatrix(sampler.normals((n, n)))
        w, v = sym_eigen(A)
        assert np.all(np.diff(w) >= 0)
        resid = np.linalg.norm((v * w) @ v.T - A.mat)
        assert resid <= 1e-9 * max(1.0, np.linalg.norm(A.mat))


def test_cholesky_examples():
    L = cholesky(np.diag([4.0, 9.0]))
    assert np.allclose(L, np.diag([2.0, 3.0]))
    assert np.allclose(cholesky(np.eye(3)), np.eye(3))
    with pytest.raises(NotPositiveDefinite):
        cholesky(np.array([[1.0, 2.0], [2.0, 1.0]]))  # determinant -3


def test_cholesky_agrees_with_spectrum():
    # cholesky succeeds exactly when the smallest eigenvalue is positive
    sampler = GaussianSampler(13)
    seen_pd = seen_indef = False
    for i in range(60):
        n = 2 + i % 4
        A = SymMatrix(sampler.normals((n, n)) + (i % 3) * np.eye(n))
        w, _ = sym_eigen(A)
        try:
            cholesky(A)
            ok = True
            seen_pd = True
        except NotPositiveDefinite:
            ok = False
            seen_indef = True
        assert ok == (w[0] > 0)
    assert seen_pd and seen_indef


def test_sqrt_psd_examples():
    T = sqrt_psd(np.diag([4.0, 9.0]))
    assert np.allclose(T.mat, np.diag([2.0, 3.0]))

    x = np.array([0.6, 0.8])  # unit vector, rank-1 projector is idempotent
    P = outer(x)
    assert np.allclose(sqrt_psd(P).mat, P.mat, atol=1e-12)

    A = np.array([[2.0, 1.0], [1.0, 2.0]])
    T = sqrt_psd(A)
    w, _ = sym_eigen(T)
    assert np.allclose(w, [1.0, math.sqrt(3.0)], atol=1e-12)
    assert np.linalg.norm(T.mat @ T.mat - A) <= 1e-9

    with pytest.raises(NotPositiveDefinite):
        sqrt_psd(np.diag([1.0, -0.5]))


def test_sqrt_psd_roundtrip_random_spd():
    sampler = GaussianSampler(14)
    for i in range(50):
        n = 2 + i % 6
        G = sampler.normals((n, n))
        A = SymMatrix(G @ G.T + 1e-6 * np.eye(n))
        T = sqrt_psd(A)
        assert np.linalg.norm(T.mat @ T.mat - A.mat) <= 1e-9 * max(
            1.0, np.linalg.norm(A.mat))
        w, _ = sym_eigen(A)
        assert w[0] > 0


def test_inverse_spd():
    assert np.allclose(inverse_spd(np.diag([2.0, 4.0])).mat, np.diag([0.5, 0.25]))
    assert np.allclose(inverse_spd(np.eye(3)).mat, np.eye(3))
    sampler = GaussianSampler(15)
    G = sampler.normals((3, 3))
    A = SymMatrix(G @ G.T + 0.1 * np.eye(3))
    inv = inverse_spd(A)
    assert np.linalg.norm(A.mat @ inv.mat - np.eye(3)) <= 1e-9
    with pytest.raises(NotPositiveDefinite):
        inverse_spd(np.array([[1.0, 2.0], [2.0, 1.0]]))


def test_outer_examples():
    assert np.array_equal(outer([1.0, 0.0]).mat, np.diag([1.0, 0.0]))
    assert np.array_equal(outer(np.zeros(3)).mat, np.zeros((3, 3)))
    assert np.array_equal(outer([1.0, 2.0]).mat, np.array([[1.0, 2.0], [2.0, 4.0]]))
    v = np.array([1.0, 2.0, 3.0])
    assert np.trace(outer(v).mat) == pytest.approx(float(v @ v))
