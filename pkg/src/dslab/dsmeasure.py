"""Coset-averaging measures: permutation weights on flags of eigenvectors,
their projection to complex projective space, the GL(2, R) construction
on the projective line, and the torus closed forms behind the weights.

Permutation convention
----------------------
A permutation ``sigma`` is a tuple of 0-based images; ``sigma[k]`` is the
*position* in the flag occupied by the eigenvector ``v_k`` (eigenvalues
indexed by descending modulus).  With this convention the weight of the
flag is ``prod_k |lambda_k|^(2(d-1-sigma[k]))`` normalised over all
permutations, and the first line of that flag is ``v_k`` with
``sigma[k] == 0``.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .errors import NotDescending, Parabolic, Singular
from .matnum import TIE_TOL, canonical_phase, eigen_by_modulus

__all__ = [
    "Flag", "AtomicMeasure", "PermWeights",
    "permutations", "ds_perm_weights", "perm_weight_matrix", "ds_measure_flag",
    "ds_projected_cp_weights", "projected_weight_matrix", "ds_measure_gl2r",
    "torus_closed_form", "torus_integrand", "exponent_bijection_check",
    "flag_vectors", "line_angle",
]

MERGE_TOL = 1e-9
# exp() of exponents beyond this overflows/underflows doubles
_LINEAR_SAFE = 600.0


def permutations(d: int) -> list[tuple[int, ...]]:
    """All permutations of ``range(d)``, identity first."""
    return list(itertools.permutations(range(d)))


def _check_moduli(moduli):
    m = np.asarray(moduli, dtype=float)
    if m.ndim != 1 or m.size < 1:
        raise ValueError("moduli must be a 1-D sequence")
    if np.any(~np.isfinite(m)) or np.any(m <= 0):
        raise NotDescending("moduli must be positive and finite")
    if np.any(np.diff(m) >= 0):
        raise NotDescending(f"moduli {m} are not strictly descending")
    return m


def _log_terms(logm: np.ndarray, perms) -> np.ndarray:
    """log of prod_k m_k^(2(d-1-sigma[k])) for every sigma; last axis = perms."""
    d = logm.shape[-1]
    expo = 2.0 * (d - 1 - np.asarray(perms, dtype=float))  # (P, d)
    return logm @ expo.T


@dataclass(frozen=True)
class PermWeights:
    d: int
    weights: dict

    def __post_init__(self):
        w = np.fromiter(self.weights.values(), dtype=float)
        if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12:
            raise ValueError("permutation weights must be a probability vector")

    def __getitem__(self, sigma):
        return self.weights[tuple(sigma)]

    def as_array(self) -> np.ndarray:
        return np.array([self.weights[s] for s in permutations(self.d)])


def ds_perm_weights(moduli) -> PermWeights:
    """Weights ``p_sigma`` for the d! eigen-flags.

    Computed directly when the exponents are moderate (this keeps simple
    inputs such as ``(2, 1)`` exact) and in log space otherwise.
    """
    m = _check_moduli(moduli)
    d = m.size
    perms = permutations(d)
    logt = _log_terms(np.log(m), perms)
    if np.max(np.abs(logt)) < _LINEAR_SAFE:
        expo = 2 * (d - 1 - np.asarray(perms))
        terms = np.prod(m[None, :] ** expo, axis=1)
        w = terms / terms.sum()
    else:
        w = np.exp(logt - logsumexp(logt))
    w = w / w.sum()
    return PermWeights(d, dict(zip(perms, w.tolist())))


def perm_weight_matrix(moduli: np.ndarray, perms=None) -> np.ndarray:
    """Batched permutation weights, ``(n, d) -> (n, d!)``.  No checks."""
    moduli = np.asarray(moduli, dtype=float)
    d = moduli.shape[-1]
    perms = permutations(d) if perms is None else perms
    logt = _log_terms(np.log(moduli), perms)
    return np.exp(logt - logsumexp(logt, axis=-1, keepdims=True))


def projected_weight_matrix(moduli: np.ndarray) -> np.ndarray:
    """Batched projective weights, ``(n, d) -> (n, d)``.  No checks."""
    moduli = np.asarray(moduli, dtype=float)
    d = moduli.shape[-1]
    perms = np.asarray(permutations(d))
    w = perm_weight_matrix(moduli, perms)
    first = (perms == 0)  # (P, d): eigenvector k leads the flag
    return w @ first


def ds_projected_cp_weights(moduli) -> np.ndarray:
    """Weights ``p_i`` of the eigen-directions ``v_i`` on CP^(d-1)."""
    m = _check_moduli(moduli)
    pw = ds_perm_weights(m)
    p = np.zeros(m.size)
    for sigma, w in pw.weights.items():
        p[sigma.index(0)] += w
    return p


# --------------------------------------------------------------------------
# Flags and atomic measures

def flag_vectors(eigvecs: np.ndarray, sigma) -> np.ndarray:
    """Columns ordered as the flag for ``sigma``: position ``sigma[k]``
    holds ``eigvecs[:, k]``."""
    sigma = np.asarray(sigma)
    inv = np.argsort(sigma)
    return eigvecs[..., inv]


@dataclass(frozen=True, eq=False)
class Flag:
    """Complete flag ``<w1> c <w1, w2> c ...`` spanned by ordered vectors."""
    vectors: np.ndarray  # (d, d) columns w_1..w_d

    def __post_init__(self):
        v = canonical_phase(np.asarray(self.vectors, dtype=complex), axis=0)
        object.__setattr__(self, "vectors", v)
        gram = v.conj().T @ v
        if abs(np.linalg.det(gram)) <= 1e-10:
            raise ValueError("flag vectors are not linearly independent")

    @property
    def dim(self) -> int:
        return self.vectors.shape[0]

    def frame(self) -> np.ndarray:
        """Orthonormal frame adapted to the flag (Gram-Schmidt), with the
        same phase convention as the vectors."""
        q, _ = np.linalg.qr(self.vectors)
        return canonical_phase(q, axis=0)

    def distance(self, other: "Flag") -> float:
        """Max over k of the projective (sine) distance between the k-th
        subspaces of the two flags."""
        a, b = self.frame(), other.frame()
        dist = 0.0
        for k in range(1, self.dim):
            P = a[:, :k] @ a[:, :k].conj().T
            Q = b[:, :k] @ b[:, :k].conj().T
            dist = max(dist, np.linalg.norm(P - Q, 2))
        return float(dist)

    def act(self, A) -> "Flag":
        return Flag(np.asarray(A) @ self.vectors)


def _point_distance(x, y) -> float:
    if isinstance(x, Flag):
        return x.distance(y)
    if np.ndim(x) == 0:
        # angles on RP^1 = R / pi Z
        diff = (float(x) - float(y)) % math.pi
        return min(diff, math.pi - diff)
    x, y = np.asarray(x), np.asarray(y)
    return float(np.sqrt(max(0.0, 1.0 - abs(np.vdot(x, y)) ** 2)))


@dataclass
class AtomicMeasure:
    """Finite weighted set of points (flags, unit vectors or RP^1 angles)."""
    atoms: list
    weights: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=float)
        if len(self.atoms) != self.weights.size:
            raise ValueError("atoms and weights differ in length")
        if np.any(self.weights < 0) or abs(self.weights.sum() - 1.0) > 1e-12:
            raise ValueError("weights must be a probability vector")

    def __len__(self):
        return len(self.atoms)

    def merged(self, tol: float = MERGE_TOL) -> "AtomicMeasure":
        atoms, weights = [], []
        for a, w in zip(self.atoms, self.weights):
            for i, b in enumerate(atoms):
                if _point_distance(a, b) <= tol:
                    weights[i] += w
                    break
            else:
                atoms.append(a)
                weights.append(w)
        return AtomicMeasure(atoms, np.array(weights), dict(self.meta))

    def integrate(self, h) -> float:
        return float(sum(w * h(a) for a, w in zip(self.atoms, self.weights)))


def ds_measure_flag(A, tie_tol: float = TIE_TOL) -> AtomicMeasure:
    """The d!-atom coset-averaging measure of ``A`` on the flag variety."""
    es = eigen_by_modulus(A, tie_tol=tie_tol)
    pw = ds_perm_weights(es.moduli)
    atoms, weights = [], []
    for sigma, w in pw.weights.items():
        atoms.append(Flag(flag_vectors(es.vectors, sigma)))
        weights.append(w)
    return AtomicMeasure(atoms, np.array(weights),
                         {"perms": list(pw.weights), "eigenvalues": es.values})


# --------------------------------------------------------------------------
# GL(2, R) acting on RP^1

def line_angle(v) -> float:
    """Angle in [-pi/2, pi/2) of the real line spanned by ``v``."""
    v = np.real_if_close(np.asarray(v))
    w = (math.atan2(float(np.real(v[1])), float(np.real(v[0]))) + math.pi / 2) % math.pi
    return w - math.pi / 2


def _real_eig_2x2(A):
    tr = A[0, 0] + A[1, 1]
    det = A[0, 0] * A[1, 1] - A[0, 1] * A[1, 0]
    disc = tr * tr - 4 * det
    sq = math.sqrt(max(disc, 0.0))
    # stable quadratic roots
    q = -0.5 * (-tr - math.copysign(sq, tr)) if tr != 0 else 0.5 * sq
    if q != 0:
        l1, l2 = q, det / q
    else:
        l1, l2 = sq / 2, -sq / 2
    lams = sorted([l1, l2], key=lambda x: -abs(x))
    vecs = []
    for lam in lams:
        a, b, c, d = A[0, 0] - lam, A[0, 1], A[1, 0], A[1, 1] - lam
        # pick the better-conditioned row of (A - lam I)
        if abs(a) + abs(b) >= abs(c) + abs(d):
            v = np.array([-b, a]) if (a, b) != (0, 0) else np.array([1.0, 0.0])
        else:
            v = np.array([d, -c])
        vecs.append(v / np.linalg.norm(v))
    return lams, vecs


def ds_measure_gl2r(A):
    """Coset-averaging measure of a real 2x2 matrix on RP^1 (angle coordinate).

    * ``det > 0``, real eigenvalues: Dirac mass at the dominant eigenline.
    * ``det > 0``, complex eigenvalues: the absolutely continuous invariant
      measure, returned as :class:`dslab.gl2r.AcipDescriptor`.
    * ``det < 0``: both eigenlines, weighted by ``|lambda_i| / (|l_1| + |l_2|)``.
    """
    from . import gl2r

    A = np.asarray(A, dtype=float)
    kind = gl2r.classify(A)
    det = float(np.linalg.det(A))
    if det > 0 and kind == gl2r.ELLIPTIC:
        return gl2r.acip_of_matrix(A)
    if kind == gl2r.PARABOLIC:
        raise Parabolic("parabolic matrix: no averaging measure is assigned")
    lams, vecs = _real_eig_2x2(A)
    angles = [line_angle(v) for v in vecs]
    if det > 0:
        return AtomicMeasure([angles[0]], np.array([1.0]), {"eigenvalues": lams})
    m = np.abs(lams)
    w = m / m.sum()
    return AtomicMeasure(angles, w, {"eigenvalues": lams})


# --------------------------------------------------------------------------
# Torus integrals

def _perm_sum(m: np.ndarray) -> float:
    d = m.size
    return float(sum(np.prod(m ** (2 * np.arange(1, d + 1)[list(s)] - 2))
                     for s in permutations(d)))


def torus_closed_form(moduli, sigma) -> float:
    """Mean over independent uniform eigenvalue phases of
    ``prod_{j<i} |1 - mu_i / mu_j|^2`` for the flag ordering ``sigma``.

    Here ``mu_j`` is the eigenvalue at flag position ``j``.  The value is
    ``S / prod_k m_k^(2(d-1-sigma[k]))`` with ``S = sum_tau prod_k
    m_k^(2 tau(k) - 2)``, so it is inversely proportional to the
    permutation weight.
    """
    m = _check_moduli(moduli)
    d = m.size
    sigma = tuple(sigma)
    if sorted(sigma) != list(range(d)):
        raise ValueError("sigma is not a permutation of range(d)")
    denom = np.prod(m ** (2 * (d - 1 - np.asarray(sigma))))
    return _perm_sum(m) / float(denom)


def torus_integrand(moduli, sigma, phases: np.ndarray) -> np.ndarray:
    """The integrand of :func:`torus_closed_form` at phases ``(n, d)``."""
    m = np.asarray(moduli, dtype=float)
    lam = m[None, :] * np.exp(1j * np.asarray(phases))
    mu = flag_vectors(lam, sigma)
    d = m.size
    out = np.ones(mu.shape[0])
    for j in range(d):
        for i in range(j + 1, d):
            out *= np.abs(1.0 - mu[:, i] / mu[:, j]) ** 2
    return out


def exponent_bijection_check(moduli, rtol: float = 1e-10) -> bool:
    """Check that reversing exponents leaves the permutation sum unchanged:
    sum_s prod_j m_j^(2 s(j) - 2) == sum_s prod_j m_j^(2 (d - s(j)))."""
    m = np.asarray(moduli, dtype=float)
    d = m.size
    one_based = np.arange(1, d + 1)
    lhs = sum(np.prod(m ** (2 * one_based[list(s)] - 2)) for s in permutations(d))
    rhs = sum(np.prod(m ** (2 * (d - one_based[list(s)]))) for s in permutations(d))
    return bool(abs(lhs - rhs) <= rtol * max(abs(lhs), abs(rhs)))
