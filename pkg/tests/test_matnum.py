import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from dslab.errors import DimOutOfRange, ModulusTie, NotOrthonormal, Singular
from dslab.matnum import (RngStream, eig_by_modulus_batch, eigen_by_modulus, gram_det,
                          haar_orthogonal, haar_orthogonal_batch, haar_unitary,
                          haar_unitary_batch, svd_singular_values)


def gaussian_unit_vectors(n, d, gen, complex_=True):
    """Independent oracle: normalised Gaussian vectors are uniform on the sphere."""
    z = gen.standard_normal((n, d))
    if complex_:
        z = z + 1j * gen.standard_normal((n, d))
    return z / np.linalg.norm(z, axis=1, keepdims=True)


def quadratic_eigs(M):
    tr, det = np.trace(M), np.linalg.det(M)
    sq = np.sqrt(tr * tr - 4 * det + 0j)
    return np.array([(tr + sq) / 2, (tr - sq) / 2])


# --- RngStream ---------------------------------------------------------------

def test_rng_stream_reproducible_and_independent():
    a = RngStream(7, 0).generator().standard_normal(5)
    b = RngStream(7, 0).generator().standard_normal(5)
    c = RngStream(7, 1).generator().standard_normal(5)
    np.testing.assert_array_equal(a, b)
    assert not np.allclose(a, c)
    s1 = RngStream(7).substream(3).random(4)
    s2 = RngStream(7).substream(3).random(4)
    np.testing.assert_array_equal(s1, s2)


# --- Haar sampling -------------------------------------------------------------

@pytest.mark.parametrize("d", range(2, 9))
def test_haar_unitary_is_unitary(d):
    U = haar_unitary_batch(50, d, RngStream(d))
    err = np.linalg.norm(U @ np.conj(np.swapaxes(U, 1, 2)) - np.eye(d), axis=(1, 2))
    assert err.max() <= 1e-12


@pytest.mark.parametrize("d", [1, 9])
def test_dimension_range(d):
    with pytest.raises(DimOutOfRange):
        haar_unitary(d, 0)
    with pytest.raises(DimOutOfRange):
        haar_orthogonal(d, 0)


def test_haar_unitary_first_entry_mean_d3():
    n = 100_000
    U = haar_unitary_batch(n, 3, RngStream(11))
    s = np.abs(U[:, 0, 0]) ** 2
    ref = np.abs(gaussian_unit_vectors(n, 3, np.random.default_rng(12))[:, 0]) ** 2
    se = np.hypot(s.std(), ref.std()) / np.sqrt(n)
    assert abs(s.mean() - 1 / 3) < 3 * s.std() / np.sqrt(n)
    assert abs(s.mean() - ref.mean()) < 3 * se


def test_haar_unitary_first_entry_uniform_d2():
    U = haar_unitary_batch(100_000, 2, RngStream(13))
    s = np.abs(U[:, 0, 0]) ** 2
    assert stats.kstest(s, "uniform").statistic < 0.01


def test_haar_orthogonal_cosets():
    O = haar_orthogonal_batch(1000, 2, RngStream(1), det=1)
    # every SO(2) element is a rotation [[c, -s], [s, c]]
    assert np.allclose(O[:, 0, 0], O[:, 1, 1], atol=1e-12)
    assert np.allclose(O[:, 0, 1], -O[:, 1, 0], atol=1e-12)
    theta = np.mod(np.arctan2(O[:, 1, 0], O[:, 0, 0]), 2 * np.pi) / (2 * np.pi)
    assert stats.kstest(theta, "uniform").pvalue > 1e-3
    Om = haar_orthogonal_batch(1000, 2, RngStream(2), det=-1)
    assert np.allclose(np.linalg.det(Om), -1.0, atol=1e-12)
    for O3 in (haar_orthogonal_batch(200, 5, 3), haar_orthogonal_batch(200, 5, 3, det=None)):
        assert np.allclose(O3 @ np.swapaxes(O3, 1, 2), np.eye(5), atol=1e-12)


def test_haar_orthogonal_entry_mean_d3():
    n = 100_000
    O = haar_orthogonal_batch(n, 3, RngStream(5))
    s = O[:, 0, 0] ** 2
    ref = gaussian_unit_vectors(n, 3, np.random.default_rng(6), complex_=False)[:, 0] ** 2
    se = np.hypot(s.std(), ref.std()) / np.sqrt(n)
    assert abs(s.mean() - ref.mean()) < 3 * se
    assert abs(s.mean() - 1 / 3) < 3 * s.std() / np.sqrt(n)


def test_haar_left_invariance():
    n = 100_000
    V = haar_unitary(3, 99)
    U1 = haar_unitary_batch(n, 3, RngStream(1))
    U2 = haar_unitary_batch(n, 3, RngStream(2))
    a = np.abs((V @ U1)[:, 0, 0]) ** 2
    b = np.abs(U2[:, 0, 0]) ** 2
    assert stats.ks_2samp(a, b).statistic < 0.02


# --- eigen_by_modulus ------------------------------------------------------------

def test_eigen_diagonal():
    es = eigen_by_modulus(np.diag([2.0, 1.0]))
    np.testing.assert_allclose(es.values, [2, 1], atol=1e-14)
    np.testing.assert_allclose(np.abs(es.vectors), np.eye(2), atol=1e-12)


def test_eigen_tie():
    with pytest.raises(ModulusTie):
        eigen_by_modulus(np.array([[0.0, 1.0], [1.0, 0.0]]))


def test_eigen_singular():
    with pytest.raises(Singular):
        eigen_by_modulus(np.array([[1.0, 2.0], [2.0, 4.0]]))


def test_eigen_against_quadratic_formula():
    A = np.diag([2.0, 0.5])
    gen = RngStream(3)
    for U in haar_unitary_batch(50, 2, gen):
        M = U @ A
        es = eigen_by_modulus(M)
        ref = quadratic_eigs(M)
        ref = ref[np.argsort(-np.abs(ref))]
        assert np.max(np.abs(es.values - ref)) < 1e-8
        assert np.all(es.residuals <= 1e-8 * np.linalg.norm(M))


@pytest.mark.parametrize("d", range(2, 9))
def test_eigen_system_invariants(d):
    gen = np.random.default_rng(d)
    A = gen.standard_normal((d, d)) + 1j * gen.standard_normal((d, d))
    es = eigen_by_modulus(A)
    m = es.moduli
    assert np.all(m[:-1] > m[1:])
    np.testing.assert_allclose(np.linalg.norm(es.vectors, axis=0), 1.0, atol=1e-12)
    lead = es.vectors[np.argmax(np.abs(es.vectors), axis=0), np.arange(d)]
    assert np.all(np.abs(lead.imag) < 1e-12) and np.all(lead.real > 0)
    ref = np.linalg.eigvals(A)
    np.testing.assert_allclose(np.sort(np.abs(ref))[::-1], m, rtol=1e-9)


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 6), st.integers(0, 2 ** 32 - 1))
def test_eigen_similarity_invariance(d, seed):
    gen = np.random.default_rng(seed)
    A = gen.standard_normal((d, d)) + 1j * gen.standard_normal((d, d))
    W = np.eye(d) + 0.3 * (gen.standard_normal((d, d)) + 1j * gen.standard_normal((d, d)))
    try:
        e1 = eigen_by_modulus(A).values
        e2 = eigen_by_modulus(W @ A @ np.linalg.inv(W)).values
    except ModulusTie:
        return
    assert np.max(np.abs(e1 - e2)) < 1e-8 * max(1.0, np.abs(e1).max())


def test_batch_matches_single():
    M = haar_unitary_batch(20, 4, RngStream(4)) @ np.diag([4.0, 2.0, 1.0, 0.5])
    vals, vecs, ok = eig_by_modulus_batch(M)
    assert ok.all()
    for i in range(20):
        es = eigen_by_modulus(M[i])
        np.testing.assert_allclose(vals[i], es.values, atol=1e-9)
        np.testing.assert_allclose(vecs[i], es.vectors, atol=1e-7)


def test_svd_reduction_of_top_modulus():
    n = 100_000
    gen = np.random.default_rng(8)
    A = gen.standard_normal((3, 3)) + 1j * gen.standard_normal((3, 3))
    S = np.diag(svd_singular_values(A))
    v1, _, _ = eig_by_modulus_batch(haar_unitary_batch(n, 3, RngStream(1)) @ A)
    v2, _, _ = eig_by_modulus_batch(haar_unitary_batch(n, 3, RngStream(2)) @ S)
    assert stats.ks_2samp(np.abs(v1[:, 0]), np.abs(v2[:, 0])).statistic < 0.02


# --- SVD and Gram determinants -------------------------------------------------

def test_svd_examples():
    np.testing.assert_allclose(svd_singular_values(np.diag([3.0, 2.0, 1.0])), [3, 2, 1])
    np.testing.assert_allclose(svd_singular_values(haar_unitary(4, 1)), np.ones(4), atol=1e-12)
    phi = (1 + np.sqrt(5)) / 2
    # eigenvalues of A^T A = [[1, 1], [1, 2]] by the quadratic formula
    lam = np.array([(3 + np.sqrt(5)) / 2, (3 - np.sqrt(5)) / 2])
    sv = svd_singular_values(np.array([[1.0, 1.0], [0.0, 1.0]]))
    np.testing.assert_allclose(sv, np.sqrt(lam), rtol=1e-12)
    np.testing.assert_allclose(sv, [phi, 1 / phi], rtol=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 8), st.integers(0, 2 ** 32 - 1))
def test_svd_product_is_abs_det(d, seed):
    gen = np.random.default_rng(seed)
    A = gen.standard_normal((d, d)) + 1j * gen.standard_normal((d, d))
    assert np.prod(svd_singular_values(A)) == pytest.approx(abs(np.linalg.det(A)), rel=1e-10)


def test_gram_det_examples():
    a = np.array([3.0, 2.0, 0.5, 0.25])
    A = np.diag(a)
    for k in range(1, 5):
        assert gram_det(A, np.eye(4)[:, :k]) == pytest.approx(np.prod(a[:k]), rel=1e-14)
    u = np.array([1.0, 1.0]) / np.sqrt(2)
    # direct ||A u|| for A = diag(2, 0.5)
    direct = np.linalg.norm(np.diag([2.0, 0.5]) @ u)
    assert gram_det(np.diag([2.0, 0.5]), u) == pytest.approx(direct, rel=1e-14)
    assert direct == pytest.approx(np.sqrt(2.125), rel=1e-14)


@pytest.mark.parametrize("d", [2, 3, 5])
def test_gram_det_full_rank_is_abs_det(d):
    gen = np.random.default_rng(d)
    A = gen.standard_normal((d, d)) + 1j * gen.standard_normal((d, d))
    U = haar_unitary(d, d)
    assert gram_det(A, U) == pytest.approx(abs(np.linalg.det(A)), rel=1e-12)


def test_gram_det_rejects_non_orthonormal():
    with pytest.raises(NotOrthonormal):
        gram_det(np.eye(3), np.ones((3, 2)))
