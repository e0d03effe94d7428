"""Small dense linear algebra: seeded Haar sampling, modulus-ordered
eigensystems, singular values and Gram determinants.

Everything here works on matrices of size ``2 <= d <= 8``.  Single-matrix
routines (``eigen_by_modulus``) are written out in full; the ``*_batch``
variants are vectorised over a leading axis for Monte Carlo loops.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (DimOutOfRange, ModulusTie, NoConvergence, NotOrthonormal,
                     Singular)

__all__ = [
    "RngStream", "as_generator", "EigenSystem",
    "haar_unitary", "haar_orthogonal", "haar_unitary_batch", "haar_orthogonal_batch",
    "eigen_by_modulus", "eig_by_modulus_batch", "canonical_phase",
    "svd_singular_values", "gram_det", "gram_det_batch",
]

D_MIN, D_MAX = 2, 8
TIE_TOL = 1e-9


@dataclass(frozen=True)
class RngStream:
    """Reproducible random stream labelled by ``(seed, stream_index)``.

    The stream is a value: ``generator()`` always restarts the same
    sequence, and ``substream(j)`` gives the ``j``-th independent child.
    Backed by the counter-based Philox bit generator.
    """
    seed: int
    stream_index: int = 0

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.stream_index,))
        return np.random.Generator(np.random.Philox(ss))

    def substream(self, j: int) -> np.random.Generator:
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.stream_index, j))
        return np.random.Generator(np.random.Philox(ss))


def as_generator(rng) -> np.random.Generator:
    """Coerce ``RngStream``, ``Generator``, int seed or None to a Generator."""
    if isinstance(rng, RngStream):
        return rng.generator()
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


def _check_dim(d):
    if not (D_MIN <= int(d) <= D_MAX):
        raise DimOutOfRange(f"dimension {d} outside [{D_MIN}, {D_MAX}]")


# --------------------------------------------------------------------------
# Haar sampling

def haar_unitary_batch(n: int, d: int, rng) -> np.ndarray:
    """``n`` Haar-distributed unitaries, shape ``(n, d, d)``.

    QR of a complex Ginibre matrix with the phases of ``diag(R)`` moved
    into ``Q`` so that the factorisation is unique.
    """
    _check_dim(d)
    gen = as_generator(rng)
    z = (gen.standard_normal((n, d, d)) + 1j * gen.standard_normal((n, d, d))) / np.sqrt(2.0)
    q, r = np.linalg.qr(z)
    diag = np.diagonal(r, axis1=-2, axis2=-1)
    ph = diag / np.abs(diag)
    return q * ph[:, None, :]


def haar_orthogonal_batch(n: int, d: int, rng, det: int | None = 1) -> np.ndarray:
    """``n`` Haar orthogonal matrices.

    ``det=1`` gives SO(d), ``det=-1`` the other coset, ``None`` all of O(d).
    The coset is selected by flipping the first column.
    """
    _check_dim(d)
    gen = as_generator(rng)
    z = gen.standard_normal((n, d, d))
    q, r = np.linalg.qr(z)
    s = np.sign(np.diagonal(r, axis1=-2, axis2=-1))
    s[s == 0] = 1.0
    q = q * s[:, None, :]
    if det is not None:
        if det not in (1, -1):
            raise ValueError("det must be 1, -1 or None")
        flip = np.sign(np.linalg.det(q)) != det
        q[flip, :, 0] *= -1.0
    return q


def haar_unitary(d: int, rng) -> np.ndarray:
    return haar_unitary_batch(1, d, rng)[0]


def haar_orthogonal(d: int, rng, det: int | None = 1) -> np.ndarray:
    return haar_orthogonal_batch(1, d, rng, det=det)[0]


# --------------------------------------------------------------------------
# Eigenvalues ordered by modulus

@dataclass(frozen=True)
class EigenSystem:
    values: np.ndarray     # (d,) complex, strictly descending modulus
    vectors: np.ndarray    # (d, d) complex, column i is the unit eigenvector of values[i]
    residuals: np.ndarray  # (d,) ||A v - lambda v||

    @property
    def moduli(self) -> np.ndarray:
        return np.abs(self.values)


def canonical_phase(v: np.ndarray, axis: int = -2) -> np.ndarray:
    """Normalise vectors along ``axis`` and rotate the phase so that the
    largest-modulus component is real and positive."""
    v = v / np.linalg.norm(v, axis=axis, keepdims=True)
    idx = np.argmax(np.abs(v), axis=axis)
    lead = np.take_along_axis(v, np.expand_dims(idx, axis), axis=axis)
    return v * (np.abs(lead) / lead)


def _householder_hessenberg(A):
    H = np.array(A, dtype=complex)
    n = H.shape[0]
    for k in range(n - 2):
        x = H[k + 1:, k].copy()
        nx = np.linalg.norm(x)
        if nx == 0.0:
            continue
        alpha = -nx * (x[0] / abs(x[0]) if x[0] != 0 else 1.0)
        v = x
        v[0] -= alpha
        nv = np.linalg.norm(v)
        if nv == 0.0:
            continue
        v /= nv
        H[k + 1:, :] -= 2.0 * np.outer(v, v.conj() @ H[k + 1:, :])
        H[:, k + 1:] -= 2.0 * np.outer(H[:, k + 1:] @ v, v.conj())
        H[k + 2:, k] = 0.0
    return H


def _givens(x, y):
    r = np.hypot(abs(x), abs(y))
    if r == 0.0:
        return 1.0, 0.0
    if x == 0:
        return 0.0, 1.0 + 0j
    c = abs(x) / r
    s = (x / abs(x)) * np.conj(y) / r
    return c, s


def _wilkinson(a, b, c, d):
    half = 0.5 * (a - d)
    disc = np.sqrt(half * half + b * c)
    m1 = d - b * c / (half + disc) if (half + disc) != 0 else d
    m2 = d - b * c / (half - disc) if (half - disc) != 0 else d
    return m1 if abs(m1 - d) <= abs(m2 - d) else m2


def _hessenberg_qr_eigvals(A, max_iter_per_eig=60):
    """Eigenvalues of a complex matrix by Hessenberg reduction followed by
    explicitly shifted QR sweeps with Wilkinson shifts and deflation."""
    H = _householder_hessenberg(A)
    n = H.shape[0]
    eps = np.finfo(float).eps
    scale = max(np.linalg.norm(H), np.finfo(float).tiny)
    hi = n - 1
    its = 0
    while hi > 0:
        lo = hi
        while lo > 0:
            sub = abs(H[lo, lo - 1])
            if sub <= eps * (abs(H[lo, lo]) + abs(H[lo - 1, lo - 1])) or sub <= eps * eps * scale:
                H[lo, lo - 1] = 0.0
                break
            lo -= 1
        if lo == hi:
            hi -= 1
            its = 0
            continue
        its += 1
        if its > max_iter_per_eig:
            raise NoConvergence("shifted QR iteration budget exhausted")
        if its % 11 == 0:
            mu = H[hi, hi] + 0.75 * abs(H[hi, hi - 1]) * np.exp(1j * its)
        else:
            mu = _wilkinson(H[hi - 1, hi - 1], H[hi - 1, hi], H[hi, hi - 1], H[hi, hi])
        W = H[lo:hi + 1, lo:hi + 1]
        m = W.shape[0]
        W -= mu * np.eye(m)
        rots = []
        for k in range(m - 1):
            c, s = _givens(W[k, k], W[k + 1, k])
            G = np.array([[c, s], [-np.conj(s), c]])
            W[k:k + 2, k:] = G @ W[k:k + 2, k:]
            rots.append(G)
        for k, G in enumerate(rots):
            W[:k + 2, k:k + 2] = W[:k + 2, k:k + 2] @ G.conj().T
        W += mu * np.eye(m)
    return np.diag(H).copy()


def _inverse_iteration(A, lam, steps=3):
    n = A.shape[0]
    gen = np.random.default_rng(12345)
    x = gen.standard_normal(n) + 1j * gen.standard_normal(n)
    x /= np.linalg.norm(x)
    shift = lam
    M = A - shift * np.eye(n)
    for _ in range(steps):
        try:
            y = np.linalg.solve(M, x)
        except np.linalg.LinAlgError:
            shift = lam + 1e-13 * max(1.0, abs(lam))
            M = A - shift * np.eye(n)
            y = np.linalg.solve(M, x)
        x = y / np.linalg.norm(y)
    return x


def eigen_by_modulus(A, tie_tol: float = TIE_TOL) -> EigenSystem:
    """Eigenvalues of ``A`` in strictly descending modulus with unit,
    phase-canonical eigenvectors.

    Raises ``ModulusTie`` if two moduli differ by less than
    ``tie_tol * ||A||_F``, ``Singular`` for (numerically) singular input
    and ``NoConvergence`` if the QR sweeps stall.
    """
    A = np.asarray(A, dtype=complex)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("A must be square")
    d = A.shape[0]
    _check_dim(d)
    if not np.all(np.isfinite(A)):
        raise ValueError("A has non-finite entries")
    fro = np.linalg.norm(A)
    if abs(np.linalg.det(A)) <= 1e-12 * fro ** d:
        raise Singular("matrix is numerically singular")

    vals = _hessenberg_qr_eigvals(A)
    order = np.argsort(-np.abs(vals), kind="stable")
    vals = vals[order]
    mods = np.abs(vals)
    if np.any(mods[:-1] - mods[1:] < tie_tol * fro):
        raise ModulusTie(f"eigenvalue moduli {mods} are not strictly separated")

    vecs = np.empty((d, d), dtype=complex)
    for i, lam in enumerate(vals):
        vecs[:, i] = _inverse_iteration(A, lam)
    vecs = canonical_phase(vecs, axis=0)
    res = np.linalg.norm(A @ vecs - vecs * vals[None, :], axis=0)
    if np.any(res > 1e-8 * fro):
        raise NoConvergence(f"eigenvector residuals too large: {res}")
    return EigenSystem(values=vals, vectors=vecs, residuals=res)


def eig_by_modulus_batch(M: np.ndarray, tie_tol: float = TIE_TOL):
    """Vectorised counterpart of :func:`eigen_by_modulus` (LAPACK backed).

    Returns
    -------
    values : (n, d) complex, descending modulus
    vectors : (n, d, d) complex, column ``i`` belongs to ``values[:, i]``
    ok : (n,) bool, False where two moduli tie within ``tie_tol * ||M||_F``
    """
    vals, vecs = np.linalg.eig(M)
    order = np.argsort(-np.abs(vals), axis=-1, kind="stable")
    vals = np.take_along_axis(vals, order, axis=-1)
    vecs = np.take_along_axis(vecs, order[:, None, :], axis=-1)
    vecs = canonical_phase(vecs, axis=-2)
    mods = np.abs(vals)
    fro = np.linalg.norm(M, axis=(-2, -1))
    gaps = mods[:, :-1] - mods[:, 1:]
    ok = np.all(gaps >= tie_tol * fro[:, None], axis=-1)
    return vals, vecs, ok


# --------------------------------------------------------------------------
# Singular values and volumes

def svd_singular_values(A) -> np.ndarray:
    """Singular values of ``A`` in descending order."""
    A = np.asarray(A)
    if not np.all(np.isfinite(A)):
        raise ValueError("A has non-finite entries")
    try:
        return np.linalg.svd(A, compute_uv=False)
    except np.linalg.LinAlgError as exc:
        raise NoConvergence(str(exc)) from exc


def gram_det(A, Uk, atol: float = 1e-10) -> float:
    """k-volume expansion of ``A`` on the span of the orthonormal columns
    of ``Uk``: ``sqrt(det((A Uk)^* (A Uk)))``."""
    A = np.asarray(A)
    Uk = np.asarray(Uk)
    if Uk.ndim == 1:
        Uk = Uk[:, None]
    k = Uk.shape[1]
    if np.max(np.abs(Uk.conj().T @ Uk - np.eye(k))) > atol:
        raise NotOrthonormal("columns of Uk are not orthonormal")
    return float(gram_det_batch(A[None], Uk[None])[0])


def gram_det_batch(A: np.ndarray, Uk: np.ndarray) -> np.ndarray:
    """Batched :func:`gram_det` without the orthonormality check.

    ``A`` is ``(n, d, d)`` or ``(d, d)``; ``Uk`` is ``(n, d, k)``.
    """
    M = A @ Uk
    G = np.conj(np.swapaxes(M, -1, -2)) @ M
    det = np.real(np.linalg.det(G))
    return np.sqrt(np.maximum(det, 0.0))
