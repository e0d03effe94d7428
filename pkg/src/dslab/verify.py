"""Monte Carlo checks of the coset averaging property and of the
random-versus-deterministic exponent inequalities.

Sampling is split into fixed-size chunks; chunk ``j`` always draws from
``RngStream.substream(j)``.  Workers only decide which thread evaluates a
chunk, and partial results are concatenated in chunk order, so a report
does not depend on the worker count.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .dsmeasure import flag_vectors, permutations, perm_weight_matrix, projected_weight_matrix
from .errors import ModulusTie, ScalarInput, Singular
from .matnum import (TIE_TOL, RngStream, canonical_phase, eig_by_modulus_batch,
                     gram_det_batch, haar_orthogonal_batch, haar_unitary_batch)

__all__ = [
    "MCReport", "TestStatistic", "weighted_ecdf", "weighted_ks", "run_chunks",
    "verify_ds_property_cp", "verify_ds_property_flag", "verify_fubini",
    "estimate_inequality", "random_exponent_sphere", "default_flag_statistics",
    "uniform_cp_cdf", "CHUNK",
]

CHUNK = 1 << 16
MAX_SKIP_RATE = 0.01


@dataclass
class MCReport:
    n_samples: int
    n_skipped_ties: int
    estimate: float
    std_error: float
    passed: bool
    tolerance_used: float
    ks_distance: float | None = None
    name: str = ""
    extras: dict = field(default_factory=dict)

    @property
    def valid(self) -> bool:
        return self.n_skipped_ties < MAX_SKIP_RATE * max(self.n_samples, 1)

    def as_dict(self) -> dict:
        out = {
            "name": self.name,
            "n_samples": self.n_samples,
            "n_skipped_ties": self.n_skipped_ties,
            "estimate": self.estimate,
            "std_error": self.std_error,
            "ks_distance": self.ks_distance,
            "pass": self.passed,
            "valid": self.valid,
            "tolerance_used": self.tolerance_used,
        }
        out.update(self.extras)
        return out


@dataclass(frozen=True)
class TestStatistic:
    """A bounded test function, vectorised over a batch of points.

    ``on="line"`` evaluators receive unit vectors ``(n, d)``; ``on="flag"``
    evaluators receive orthonormal frames ``(n, d, d)`` whose first ``k``
    columns span the ``k``-th subspace of the flag.
    """
    name: str
    evaluator: Callable[[np.ndarray], np.ndarray]
    reference_cdf: Callable[[np.ndarray], np.ndarray] | None = None
    on: str = "flag"
    __test__ = False  # not a pytest class

    def __call__(self, x) -> np.ndarray:
        y = np.asarray(self.evaluator(x), dtype=float)
        if np.any(~np.isfinite(y)) or np.any(np.abs(y) >= 1e6):
            raise ValueError(f"statistic {self.name} is not bounded on its sample")
        return y


def uniform_cp_cdf(d: int):
    """CDF of ``|<v, e_1>|^2`` for ``v`` uniform on CP^(d-1): Beta(1, d-1)."""
    return lambda s: 1.0 - (1.0 - np.clip(s, 0.0, 1.0)) ** (d - 1)


def default_flag_statistics(d: int) -> list[TestStatistic]:
    """Three joint statistics of the first two flag lines (d >= 2)."""
    def h12(F):
        return np.abs(F[:, 0, 0]) ** 2 * np.abs(F[:, 1, 1]) ** 2

    def h_cross(F):
        return np.abs(F[:, d - 1, 0]) ** 2 * np.abs(F[:, 0, 1]) ** 2

    def h_plane(F):
        # |<e_1, P_2 e_1>| with P_2 the projector onto the 2-plane of the flag
        return np.abs(F[:, 0, 0]) ** 2 + np.abs(F[:, 0, 1]) ** 2

    return [TestStatistic("|w1.e1|^2 |w2.e2|^2", h12),
            TestStatistic(f"|w1.e{d}|^2 |w2.e1|^2", h_cross),
            TestStatistic("||P_2 e1||^2", h_plane)]


# --------------------------------------------------------------------------
# weighted empirical distributions

def weighted_ecdf(x, w=None):
    """Sorted support points and right-continuous cumulative weights."""
    x = np.asarray(x, dtype=float).ravel()
    w = np.ones_like(x) if w is None else np.asarray(w, dtype=float).ravel()
    order = np.argsort(x, kind="stable")
    xs, ws = x[order], w[order]
    cw = np.cumsum(ws)
    return xs, cw / cw[-1]


def weighted_ks(x, w, cdf) -> float:
    """Sup distance between a weighted empirical CDF and an analytic CDF."""
    xs, cw = weighted_ecdf(x, w)
    F = cdf(xs)
    before = np.concatenate([[0.0], cw[:-1]])
    return float(max(np.max(np.abs(cw - F)), np.max(np.abs(before - F))))


def _as_stream(rng) -> RngStream:
    if isinstance(rng, RngStream):
        return rng
    if isinstance(rng, np.random.Generator):
        return RngStream(int(rng.integers(2 ** 63)))
    return RngStream(0 if rng is None else int(rng))


def run_chunks(fn, n: int, rng, workers: int = 1, chunk: int = CHUNK,
               max_extra: int = 64) -> dict:
    """Evaluate ``fn(m, generator) -> dict`` over chunks until ``n``
    accepted samples are collected.

    Every array in the returned dict has accepted samples on axis 0;
    ``"skipped"`` (optional) counts rejected draws.  Arrays are concatenated
    in chunk order and trimmed to exactly ``n`` rows.
    """
    stream = _as_stream(rng)
    n_chunks = max(1, math.ceil(n / chunk))
    sizes = [min(chunk, n - j * chunk) for j in range(n_chunks)]

    def job(j):
        return fn(sizes[j] if j < n_chunks else chunk, stream.substream(j))

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(job, range(n_chunks)))
    else:
        parts = [job(j) for j in range(n_chunks)]

    def accepted(ps):
        key = next(k for k in ps[0] if k != "skipped")
        return sum(len(p[key]) for p in ps)

    j = n_chunks
    while accepted(parts) < n:
        if j - n_chunks >= max_extra:
            raise RuntimeError("too many rejected samples while topping up")
        parts.append(job(j))
        j += 1
    out = {"skipped": sum(int(p.get("skipped", 0)) for p in parts)}
    for key in parts[0]:
        if key == "skipped":
            continue
        out[key] = np.concatenate([p[key] for p in parts])[:n]
    return out


def _mean_se(y):
    y = np.asarray(y, dtype=float)
    se = float(y.std(ddof=1) / math.sqrt(y.size)) if y.size > 1 else 0.0
    return float(y.mean()), se


def _check_input(A):
    A = np.asarray(A)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("A must be square")
    d = A.shape[0]
    if abs(np.linalg.det(A)) <= 1e-12 * np.linalg.norm(A) ** d:
        raise Singular("matrix is numerically singular")
    return A, d


def _is_scalar(A) -> bool:
    c = np.trace(A) / A.shape[0]
    return bool(np.linalg.norm(A - c * np.eye(A.shape[0])) <= 1e-12 * np.linalg.norm(A))


# --------------------------------------------------------------------------
# the averaging property

def verify_ds_property_cp(A, n: int, rng, workers: int = 1,
                          tie_tol: float = TIE_TOL) -> MCReport:
    """Average the projected measures of ``U A`` over Haar ``U`` and compare
    the law of ``s = |<v, e_1>|^2`` with its uniform-measure law
    ``Beta(1, d - 1)`` by a weighted Kolmogorov-Smirnov distance."""
    A, d = _check_input(A)
    A = A.astype(complex)
    if _is_scalar(A):
        raise ModulusTie("scalar matrix: every eigenvalue modulus ties")

    def chunk(m, gen):
        U = haar_unitary_batch(m, d, gen)
        vals, vecs, ok = eig_by_modulus_batch(U @ A, tie_tol)
        vals, vecs = vals[ok], vecs[ok]
        p = projected_weight_matrix(np.abs(vals))
        s = np.abs(vecs[:, 0, :]) ** 2
        return {"p": p, "s": s, "skipped": int((~ok).sum())}

    r = run_chunks(chunk, n, rng, workers)
    p, s = r["p"], r["s"]
    y = np.sum(p * s, axis=1)
    est, se = _mean_se(y)
    ks = weighted_ks(s, p, uniform_cp_cdf(d))
    tol = max(0.01, 3.0 / math.sqrt(n))
    return MCReport(n, r["skipped"], est, se, ks < tol, tol, ks,
                    name="ds_property_cp",
                    extras={"expected_mean": 1.0 / d, "d": d})


def _flag_frames(vecs, sigma):
    q, _ = np.linalg.qr(flag_vectors(vecs, sigma))
    return canonical_phase(q, axis=-2)


def verify_ds_property_flag(A, n: int, stats=None, rng=0, workers: int = 1,
                            tie_tol: float = TIE_TOL) -> list[MCReport]:
    """Compare Haar averages of the flag measures of ``U A`` with flags of
    an independent Haar unitary, one two-sample mean test per statistic."""
    A, d = _check_input(A)
    A = A.astype(complex)
    stats = default_flag_statistics(d) if stats is None else list(stats)
    perms = permutations(d)

    def chunk(m, gen):
        U = haar_unitary_batch(m, d, gen)
        vals, vecs, ok = eig_by_modulus_batch(U @ A, tie_tol)
        vals, vecs = vals[ok], vecs[ok]
        w = perm_weight_matrix(np.abs(vals), perms)
        acc = np.zeros((len(stats), vals.shape[0]))
        for si, sigma in enumerate(perms):
            F = _flag_frames(vecs, sigma)
            for hi, h in enumerate(stats):
                acc[hi] += w[:, si] * h(F)
        V = canonical_phase(haar_unitary_batch(m, d, gen), axis=-2)
        ref = np.stack([h(V) for h in stats])
        return {"y": acc.T, "ref": ref.T[:vals.shape[0]],
                "skipped": int((~ok).sum())}

    r = run_chunks(chunk, n, rng, workers)
    reports = []
    for hi, h in enumerate(stats):
        lhs, se_l = _mean_se(r["y"][:, hi])
        rhs, se_r = _mean_se(r["ref"][:, hi])
        delta = lhs - rhs
        se = math.hypot(se_l, se_r)
        tol = 3.0 * se
        ok = abs(delta) <= max(tol, 1e-12)
        reports.append(MCReport(n, r["skipped"], delta, se, ok, tol,
                                name=f"ds_property_flag[{h.name}]",
                                extras={"lhs": lhs, "rhs": rhs}))
    return reports


def verify_fubini(A, h: TestStatistic, n: int, rng, workers: int = 1,
                  reference_value: float | None = None,
                  tie_tol: float = TIE_TOL) -> MCReport:
    """Both sides of: Haar mean of ``integral h dm_{UA}`` equals
    ``integral h dmu``, with ``h`` a function on CP^(d-1)."""
    A, d = _check_input(A)
    A = A.astype(complex)

    def chunk(m, gen):
        U = haar_unitary_batch(m, d, gen)
        vals, vecs, ok = eig_by_modulus_batch(U @ A, tie_tol)
        vals, vecs = vals[ok], vecs[ok]
        p = projected_weight_matrix(np.abs(vals))
        lhs = np.zeros(vals.shape[0])
        for i in range(d):
            lhs += p[:, i] * h(vecs[:, :, i])
        z = gen.standard_normal((m, d)) + 1j * gen.standard_normal((m, d))
        z /= np.linalg.norm(z, axis=1, keepdims=True)
        return {"lhs": lhs, "rhs": h(z)[:vals.shape[0]], "skipped": int((~ok).sum())}

    r = run_chunks(chunk, n, rng, workers)
    lhs, se_l = _mean_se(r["lhs"])
    if reference_value is None:
        rhs, se_r = _mean_se(r["rhs"])
    else:
        rhs, se_r = float(reference_value), 0.0
    se = math.hypot(se_l, se_r)
    delta = lhs - rhs
    tol = 3.0 * se
    return MCReport(n, r["skipped"], delta, se, abs(delta) <= max(tol, 1e-12), tol,
                    name=f"fubini[{h.name}]", extras={"lhs": lhs, "rhs": rhs})


# --------------------------------------------------------------------------
# exponent inequalities

_F = {"id": lambda x: x, "log": np.log}


def estimate_inequality(A, field: str, k: int, f: str, n: int, rng,
                        workers: int = 1) -> MCReport:
    """Haar means of ``f(prod_{i<=k} |lambda_i(U A)|)`` (lhs) and of
    ``f(vol_k(A | span U[:, :k]))`` (rhs), paired over the same ``U``.

    ``field`` is ``"complex"`` (U(d)) or ``"real"`` (SO(d)).  The report's
    estimate is the gap ``lhs - rhs``; ``extras`` carries the
    ``1 / C(d, k)``-scaled gap as well.
    """
    A, d = _check_input(A)
    if not 1 <= k <= d:
        raise ValueError("k must lie in [1, d]")
    if _is_scalar(A):
        raise ScalarInput("A is a scalar multiple of the identity")
    if f not in _F:
        raise ValueError("f must be 'id' or 'log'")
    fn = _F[f]
    if field == "complex":
        sampler = lambda m, gen: haar_unitary_batch(m, d, gen)
        A = A.astype(complex)
    elif field == "real":
        if np.iscomplexobj(A) and np.any(np.imag(A) != 0):
            raise ValueError("real field requires a real matrix")
        A = np.real(A).astype(float)
        sampler = lambda m, gen: haar_orthogonal_batch(m, d, gen, det=1)
    else:
        raise ValueError("field must be 'complex' or 'real'")
    inv_binom = 1.0 / math.comb(d, k)

    def chunk(m, gen):
        U = sampler(m, gen)
        mods = -np.sort(-np.abs(np.linalg.eigvals(U @ A)), axis=-1)
        lhs = fn(np.prod(mods[:, :k], axis=-1))
        rhs = fn(gram_det_batch(A, U[:, :, :k]))
        return {"lhs": lhs, "rhs": rhs}

    r = run_chunks(chunk, n, rng, workers)
    lhs_s, rhs_s = r["lhs"], r["rhs"]
    gap, se = _mean_se(lhs_s - rhs_s)
    bgap, bse = _mean_se(lhs_s - inv_binom * rhs_s)
    lhs, se_l = _mean_se(lhs_s)
    rhs, se_r = _mean_se(rhs_s)
    pointwise = float(np.max(np.abs(lhs_s - rhs_s)))
    if f == "id":
        c_impl = lhs / rhs if rhs != 0 else math.inf
    else:
        c_impl = math.exp(lhs - rhs)
    # floor for k = d, where both sides agree sample by sample up to rounding
    floor = 1e-12 * max(1.0, abs(lhs))
    return MCReport(n, 0, gap, se, gap >= -max(3.0 * se, floor), 3.0 * se,
                    name=f"inequality[{field},d={d},k={k},f={f}]",
                    extras={"lhs": lhs, "rhs": rhs, "se_lhs": se_l, "se_rhs": se_r,
                            "gap": gap, "bound_constant": inv_binom,
                            "bound_gap": bgap, "bound_se": bse,
                            "bound_pass": bgap >= -max(3.0 * bse, floor),
                            "max_pointwise_gap": pointwise, "c_implied": c_impl})


def random_exponent_sphere(A, n: int, rng, workers: int = 1,
                           normalize: bool = True) -> MCReport:
    """Mean of ``log ||A v||`` over uniform unit vectors ``v``.

    With ``normalize`` (default) ``A`` is first scaled to ``|det A| = 1``,
    the setting in which the mean is nonnegative.  Passes when the mean is
    not significantly negative, and, for matrices whose singular values
    are all 1, when it is zero within 3 SE.
    """
    A, d = _check_input(A)
    A = np.real_if_close(A).astype(float)
    if normalize:
        A = A / abs(np.linalg.det(A)) ** (1.0 / d)

    def chunk(m, gen):
        v = gen.standard_normal((m, d))
        v /= np.linalg.norm(v, axis=1, keepdims=True)
        return {"y": np.log(np.linalg.norm(v @ A.T, axis=1))}

    r = run_chunks(chunk, n, rng, workers)
    est, se = _mean_se(r["y"])
    isometry = bool(np.allclose(np.linalg.svd(A, compute_uv=False), 1.0, atol=1e-12))
    tol = 3.0 * se
    if isometry:
        ok = abs(est) <= max(tol, 1e-12)
    else:
        ok = est >= -tol
    return MCReport(n, 0, est, se, ok, tol, name="random_exponent_sphere",
                    extras={"isometry": isometry, "strictly_positive": est > tol})
