"""GL(2, R) acting on the real projective line.

Coordinates
-----------
A line ``R (cos w, sin w)`` has angle ``w`` in ``[-pi/2, pi/2)`` and
anti-slope ``s = x / y = cot w``.  Matrices act on ``s`` by Moebius maps,
and the Cayley transform ``C(s) = (s - i) / (s + i)`` sends ``s = cot w`` to
``z = exp(-2 i w)`` on the unit circle.  Uniform measure in ``w`` therefore
corresponds to uniform measure on the circle, and rotation ``R_theta`` of
the plane corresponds to multiplication by ``exp(-2 i theta)`` on the circle.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from .density import DensityTable
from .errors import BadParameter, NegDetInput, NoConvergence, OutOfSupport, Singular
from .matnum import RngStream
from .verify import MCReport, _as_stream, run_chunks, weighted_ks

__all__ = [
    "ELLIPTIC", "PARABOLIC", "HYPERBOLIC", "classify", "rotation",
    "ProjPoint", "mobius", "mobius_act", "cayley", "cayley_inv", "CAYLEY",
    "BlaschkeFactor", "BlaschkeProduct", "blaschke_from_matrix", "cayley_blaschke",
    "physical_fixed_point", "AcipDescriptor", "acip_of_matrix", "poisson_kernel",
    "cauchy_density", "theta_average_pushforward",
    "negdet_trace_cdf", "negdet_rho_cdf", "negdet_rho_density", "negdet_rho_support",
    "spectral_radius_2x2", "verify_ds_gl2r_negdet", "verify_ds_gl2r_posdet",
    "rho_norm_equality",
]

ELLIPTIC, PARABOLIC, HYPERBOLIC = "elliptic", "parabolic", "hyperbolic"
PARABOLIC_TOL = 1e-10


def rotation(theta) -> np.ndarray:
    """``R_theta``; vectorised over ``theta`` (returns ``(..., 2, 2)``)."""
    c, s = np.cos(theta), np.sin(theta)
    return np.stack([np.stack([c, -s], -1), np.stack([s, c], -1)], -2)


def classify(B) -> str:
    """Elliptic / parabolic / hyperbolic type of a real invertible 2x2 matrix
    after scaling to ``|det| = 1``."""
    B = np.asarray(B, dtype=float)
    det = float(np.linalg.det(B))
    if abs(det) <= 1e-14 * max(np.linalg.norm(B) ** 2, 1e-300):
        raise Singular("matrix is singular")
    if det < 0:
        return HYPERBOLIC
    t = abs(np.trace(B)) / math.sqrt(det)
    if abs(t - 2.0) <= PARABOLIC_TOL:
        return PARABOLIC
    return ELLIPTIC if t < 2.0 else HYPERBOLIC


# --------------------------------------------------------------------------
# projective line

@dataclass(frozen=True)
class ProjPoint:
    """A point of RP^1 stored by its angle in ``[-pi/2, pi/2)``."""
    angle: float

    def __post_init__(self):
        w = (float(self.angle) + math.pi / 2) % math.pi - math.pi / 2
        object.__setattr__(self, "angle", w)

    @classmethod
    def from_vector(cls, v) -> "ProjPoint":
        return cls(math.atan2(float(v[1]), float(v[0])))

    @classmethod
    def from_antislope(cls, s: float) -> "ProjPoint":
        if math.isinf(s):
            return cls(0.0)
        return cls(math.atan2(1.0, s))

    @property
    def antislope(self) -> float:
        s = math.sin(self.angle)
        if s == 0.0:
            return math.inf
        return math.cos(self.angle) / s

    @property
    def vector(self) -> np.ndarray:
        return np.array([math.cos(self.angle), math.sin(self.angle)])


def mobius(M, z):
    """Moebius map of the 2x2 matrix ``M`` on the Riemann sphere
    (``inf`` handled exactly, scalar input only)."""
    a, b, c, d = M[0][0], M[0][1], M[1][0], M[1][1]
    if isinstance(z, (float, complex)) and np.isinf(abs(z)):
        return a / c if c != 0 else math.inf
    den = c * z + d
    if den == 0:
        return math.inf
    return (a * z + b) / den


def mobius_act(B, p: ProjPoint) -> ProjPoint:
    """Projective action of ``B`` on a line."""
    return ProjPoint.from_vector(np.asarray(B, dtype=float) @ p.vector)


def cauchy_density(s):
    """SO(2)-invariant density in the anti-slope coordinate."""
    return 1.0 / (math.pi * (1.0 + np.asarray(s) ** 2))


CAYLEY = np.array([[1.0, -1j], [1.0, 1j]])
_CAYLEY_INV = np.array([[1j, 1j], [-1.0, 1.0]])  # proportional to CAYLEY^-1


def cayley(s):
    """``C(s) = (s - i) / (s + i)``; ``inf`` maps to 1."""
    if np.isscalar(s) and np.isinf(abs(s)):
        return 1.0 + 0j
    s = np.asarray(s, dtype=complex)
    return (s - 1j) / (s + 1j)


def cayley_inv(z):
    """Inverse Cayley transform ``i (1 + z) / (1 - z)``; 1 maps to ``inf``."""
    if np.isscalar(z) and z == 1:
        return math.inf
    z = np.asarray(z, dtype=complex)
    return 1j * (1.0 + z) / (1.0 - z)


# --------------------------------------------------------------------------
# Blaschke factors and products

@dataclass(frozen=True)
class BlaschkeFactor:
    """``z -> exp(i theta) (z - c) / (1 - conj(c) z)`` with ``|c| < 1``."""
    theta: float
    c: complex

    def __post_init__(self):
        if not abs(self.c) < 1.0:
            raise BadParameter("Blaschke factor needs |c| < 1")
        object.__setattr__(self, "theta", float(self.theta) % (2 * math.pi))
        object.__setattr__(self, "c", complex(self.c))

    def __call__(self, z):
        return np.exp(1j * self.theta) * (z - self.c) / (1.0 - np.conj(self.c) * z)

    def derivative(self, z):
        c = self.c
        return np.exp(1j * self.theta) * (1.0 - abs(c) ** 2) / (1.0 - np.conj(c) * z) ** 2

    def rotated(self, phi: float) -> "BlaschkeFactor":
        return BlaschkeFactor(self.theta + phi, self.c)

    def as_product(self) -> "BlaschkeProduct":
        return BlaschkeProduct(self.theta, (self.c,))

    def fixed_points(self):
        """Both roots of ``conj(c) z^2 + (e^{i theta} - 1) z - e^{i theta} c = 0``."""
        e = np.exp(1j * self.theta)
        cb = np.conj(self.c)
        if abs(cb) < 1e-300:
            if abs(e - 1) < 1e-300:
                raise BadParameter("identity map: every point is fixed")
            return (0j, complex(np.inf))
        roots = np.roots([cb, e - 1.0, -e * self.c])
        return tuple(complex(r) for r in roots)


@dataclass(frozen=True)
class BlaschkeProduct:
    """``z -> exp(i theta) prod_k (z - a_k) / (1 - conj(a_k) z)``."""
    theta: float
    zeros: tuple

    def __post_init__(self):
        zs = tuple(complex(a) for a in self.zeros)
        if not zs or any(abs(a) >= 1 for a in zs):
            raise BadParameter("Blaschke product needs zeros inside the unit disk")
        object.__setattr__(self, "zeros", zs)
        object.__setattr__(self, "theta", float(self.theta) % (2 * math.pi))

    @property
    def degree(self) -> int:
        return len(self.zeros)

    def __call__(self, z):
        out = np.exp(1j * self.theta) * np.ones_like(np.asarray(z, dtype=complex))
        for a in self.zeros:
            out = out * (z - a) / (1.0 - np.conj(a) * z)
        return out

    def rotated(self, phi: float) -> "BlaschkeProduct":
        return BlaschkeProduct(self.theta + phi, self.zeros)


def blaschke_from_matrix(B) -> BlaschkeFactor:
    """Disk automorphism conjugate, via the Cayley transform, to the
    projective action of ``B`` (``det B > 0``)."""
    B = np.asarray(B, dtype=float)
    det = float(np.linalg.det(B))
    if det <= 0:
        raise BadParameter("need det B > 0 to preserve the upper half plane")
    M = CAYLEY @ (B / math.sqrt(det)) @ _CAYLEY_INV
    theta = float(np.angle(M[0, 0] / M[1, 1]))
    c = -M[0, 1] / M[0, 0]
    return BlaschkeFactor(theta, c)


def cayley_blaschke(a: float, theta: float) -> BlaschkeFactor:
    """Blaschke factor conjugate to ``R_theta diag(a, 1/a)`` on RP^1.

    ``c = -tanh(log a)``.  The rotation phase on the circle is
    ``-2 theta`` because the circle double covers the projective line.
    """
    if not (a > 0) or a == 1.0:
        raise BadParameter("a must be positive and different from 1")
    return BlaschkeFactor(-2.0 * theta, -math.tanh(math.log(a)))


def physical_fixed_point(b, n_iter: int = 10_000, tol: float = 1e-12) -> complex:
    """Fixed point ``alpha`` in the closed disk carrying the physical measure.

    Degree 1: the root of the fixed-point quadratic that lies inside the
    disk, or the attracting one when both lie on the circle.  Higher
    degree: the limit of the orbit of 0.
    """
    if n_iter < 1:
        raise ValueError("n_iter must be >= 1")
    if isinstance(b, BlaschkeFactor):
        if abs(b.c) == 0.0:
            return 0j
        r1, r2 = b.fixed_points()
        cand = sorted((r1, r2), key=abs)
        inner = cand[0]
        if abs(inner) < 1.0 - 1e-9:
            return inner
        # both on the circle (hyperbolic or parabolic): pick the attracting one
        on = [r / abs(r) for r in (r1, r2)]
        return min(on, key=lambda r: abs(b.derivative(r)))
    z = 0j
    for _ in range(n_iter):
        zn = complex(b(z))
        if abs(zn - z) < tol:
            return zn
        z = zn
    raise NoConvergence("orbit of 0 did not settle")


def poisson_kernel(alpha, z):
    """``(1 - |alpha|^2) / |z - alpha|^2`` (density against normalised arc length)."""
    return (1.0 - abs(alpha) ** 2) / np.abs(np.asarray(z) - alpha) ** 2


@dataclass(frozen=True)
class AcipDescriptor:
    """Invariant measure with density ``P(alpha, .)`` on the circle.

    On RP^1 (angle coordinate) it is the same density evaluated at
    ``exp(-2 i w)``, against normalised angle measure ``dw / pi``.
    """
    alpha: complex
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if abs(self.alpha) > 1.0 + 1e-12:
            raise BadParameter("alpha must lie in the closed unit disk")

    def density_circle(self, z):
        return poisson_kernel(self.alpha, z)

    def density_angle(self, w):
        """Density in ``w`` with respect to ``dw / pi`` on ``[-pi/2, pi/2)``."""
        return poisson_kernel(self.alpha, np.exp(-2j * np.asarray(w)))

    def _preimage_arg(self, z):
        # the automorphism w -> (w + alpha) / (1 + conj(alpha) w) pushes
        # uniform measure to this one; measure = preimage arc length
        a = self.alpha
        return np.angle((z - a) / (1.0 - np.conj(a) * z))

    def cdf_angle(self, w):
        """Mass of ``[-pi/2, w)`` in the angle coordinate."""
        w = np.asarray(w, dtype=float)
        # w runs up from -pi/2 while z = exp(-2iw) runs clockwise from -1
        start = self._preimage_arg(-1.0 + 0j)
        cur = self._preimage_arg(np.exp(-2j * w))
        out = np.mod(start - cur, 2 * math.pi) / (2 * math.pi)
        # the arg cut sits at both ends of the interval
        out = np.where(w <= -math.pi / 2, 0.0, out)
        return np.where(w >= math.pi / 2, 1.0, out)


def acip_of_matrix(A) -> AcipDescriptor:
    """Invariant measure of an elliptic ``A`` with ``det A > 0``."""
    b = blaschke_from_matrix(A)
    r1, r2 = b.fixed_points() if abs(b.c) > 0 else (0j, complex(np.inf))
    alpha = min((r1, r2), key=abs)
    return AcipDescriptor(alpha, {"blaschke": b})


# --------------------------------------------------------------------------
# theta averages of pushforwards

def theta_average_pushforward(B, n_iter: int = 20, grid_size: int = 100_000,
                              theta_samples: int = 1000, bins: int = 100) -> DensityTable:
    """Average over ``theta`` of the pushforward of uniform measure on the
    circle under ``(exp(i theta) B)^n``.

    Grid point ``j`` uses the rotated phases ``2 pi (k + u_j) / T``,
    ``k = 0..T-1``, with Kronecker offsets ``u_j``; the resulting rank-1
    lattice in (point, phase) avoids aliasing of the Dirac-like
    pushforwards of hyperbolic members.  The returned density is in the
    coordinate ``arg(z) / 2 pi``.
    """
    if isinstance(B, BlaschkeFactor):
        B = B.as_product()
    z0 = np.exp(2j * math.pi * (np.arange(grid_size) + 0.5) / grid_size)
    if n_iter == 0:
        ang = np.mod(np.angle(z0) / (2 * math.pi), 1.0)
        return DensityTable.from_samples(ang, bins)
    offsets = np.mod(np.arange(grid_size) * 0.6180339887498949, 1.0)
    counts = np.zeros(bins)
    base = np.exp(2j * math.pi * offsets / theta_samples)
    num, den, acc = (np.empty_like(z0) for _ in range(3))
    for k in range(theta_samples):
        phase = base * np.exp(1j * (B.theta + 2 * math.pi * k / theta_samples))
        z = z0.copy()
        for _ in range(n_iter):
            np.copyto(acc, phase)
            for a in B.zeros:
                np.subtract(z, a, out=num)
                np.multiply(z, -np.conj(a), out=den)
                den += 1.0
                num /= den
                acc *= num
            z, acc = acc, z
        ang = np.mod(np.angle(z) / (2 * math.pi), 1.0)
        idx = np.minimum((ang * bins).astype(np.int64), bins - 1)
        counts += np.bincount(idx, minlength=bins)
    return DensityTable.from_counts(counts)


# --------------------------------------------------------------------------
# negative determinant: R_theta diag(a, -1/a)

def _check_a(a):
    if not 0.0 < a < 1.0:
        raise BadParameter("a must lie in (0, 1)")


def negdet_trace_cdf(a: float, t, paper_form: bool = False):
    """CDF of the trace ``(a - 1/a) cos(theta)`` of ``R_theta diag(a, -1/a)``.

    ``paper_form=True`` returns ``arccos(t / (1/a - a)) / pi``, the
    complementary (decreasing) expression.
    """
    _check_a(a)
    t = np.asarray(t, dtype=float)
    span = 1.0 / a - a
    if np.any(np.abs(t) > span * (1 + 1e-12)):
        raise OutOfSupport(f"|t| must not exceed {span}")
    x = np.clip(t / span, -1.0, 1.0)
    g = np.arccos(x) / math.pi
    return g if paper_form else 1.0 - g


def negdet_rho_support(a: float) -> tuple[float, float]:
    _check_a(a)
    return 1.0, 1.0 / a


def negdet_rho_cdf(a: float, rho, paper_form: bool = False):
    """CDF of the spectral radius of ``R_theta diag(a, -1/a)``, theta uniform.

    ``paper_form=True`` returns ``(2/pi) arccos((1 - rho^2) / ((1/a - a) rho))``,
    which exceeds the CDF by exactly 1.
    """
    _check_a(a)
    rho = np.asarray(rho, dtype=float)
    if np.any(rho < 1.0 - 1e-12) or np.any(rho > 1.0 / a + 1e-12):
        raise OutOfSupport("rho outside [1, 1/a]")
    u = np.clip((rho - 1.0 / rho) / (1.0 / a - a), -1.0, 1.0)
    if paper_form:
        return (2.0 / math.pi) * np.arccos(-u)
    return 1.0 - (2.0 / math.pi) * np.arccos(u)


def negdet_rho_density(a: float, rho):
    """Density of the same spectral radius on the open interval ``(1, 1/a)``."""
    _check_a(a)
    rho = np.asarray(rho, dtype=float)
    if np.any(rho <= 1.0) or np.any(rho >= 1.0 / a):
        raise OutOfSupport("rho outside (1, 1/a)")
    r2 = rho * rho
    return (2.0 / math.pi) * (r2 + 1.0) / (rho * np.sqrt((a ** -2 - r2) * (r2 - a * a)))


def negdet_rho_mass(a: float) -> float:
    """Integral of :func:`negdet_rho_density` over its support.

    Substituting ``rho = 1 + (1/a - 1) sin^2(u)`` removes both endpoint
    singularities of the integrand.
    """
    lo, hi = negdet_rho_support(a)

    def g(u):
        rho = lo + (hi - lo) * math.sin(u) ** 2
        jac = (hi - lo) * math.sin(2 * u)
        return float(negdet_rho_density(a, rho)) * jac

    val, _ = integrate.quad(g, 0.0, math.pi / 2, epsabs=1e-12, epsrel=1e-12, limit=200)
    return val


def spectral_radius_2x2(M: np.ndarray) -> np.ndarray:
    """Spectral radius of real 2x2 matrices ``(..., 2, 2)`` in closed form."""
    t = M[..., 0, 0] + M[..., 1, 1]
    det = M[..., 0, 0] * M[..., 1, 1] - M[..., 0, 1] * M[..., 1, 0]
    disc = t * t - 4.0 * det
    sq = np.sqrt(np.abs(disc))
    real = 0.5 * (np.abs(t) + sq)
    cplx = np.sqrt(np.abs(det))
    return np.where(disc >= 0, real, cplx)


def _negdet_eigs(theta, a):
    """Eigenvalues (descending modulus) and eigen-angles of R_theta diag(a, -1/a)."""
    A = np.diag([a, -1.0 / a])
    M = rotation(theta) @ A
    t = M[..., 0, 0] + M[..., 1, 1]
    sq = np.sqrt(t * t + 4.0)
    big = np.where(t >= 0, 0.5 * (t + sq), 0.5 * (t - sq))
    small = -1.0 / big
    out = []
    for lam in (big, small):
        # (A - lam) v = 0 using the first row, second row as a fallback
        r0 = np.stack([-M[..., 0, 1], M[..., 0, 0] - lam], -1)
        r1 = np.stack([M[..., 1, 1] - lam, -M[..., 1, 0]], -1)
        use0 = np.linalg.norm(r0, axis=-1) >= np.linalg.norm(r1, axis=-1)
        v = np.where(use0[..., None], r0, r1)
        ang = np.mod(np.arctan2(v[..., 1], v[..., 0]) + math.pi / 2, math.pi) - math.pi / 2
        out.append(ang)
    return big, small, out[0], out[1]


def verify_ds_gl2r_negdet(a: float, n: int, rng, weighted: bool = True,
                          workers: int = 1) -> MCReport:
    """Haar average over theta of the two-atom measures of
    ``R_theta diag(a, -1/a)`` against uniform measure on RP^1.

    ``weighted=False`` gives both eigenlines mass 1/2 (a control that
    should fail).
    """
    _check_a(a)

    def chunk(m, gen):
        theta = gen.uniform(0.0, 2 * math.pi, m)
        l1, l2, w1, w2 = _negdet_eigs(theta, a)
        m1, m2 = np.abs(l1), np.abs(l2)
        if weighted:
            p1 = m1 / (m1 + m2)
        else:
            p1 = np.full(m, 0.5)
        return {"ang": np.stack([w1, w2], 1), "p": np.stack([p1, 1 - p1], 1)}

    r = run_chunks(chunk, n, rng, workers)
    u = (r["ang"] + math.pi / 2) / math.pi
    ks = weighted_ks(u, r["p"], lambda x: np.clip(x, 0.0, 1.0))
    tol = max(0.01, 3.0 / math.sqrt(n))
    wsum = r["p"].sum(axis=1)
    y = np.sum(r["p"] * u, axis=1)
    est = float(y.mean())
    se = float(y.std(ddof=1) / math.sqrt(n))
    return MCReport(n, 0, est, se, ks < tol, tol, ks,
                    name="ds_gl2r_negdet" + ("" if weighted else "[unweighted]"),
                    extras={"a": a, "max_weight_sum_error": float(np.max(np.abs(wsum - 1)))})


def verify_ds_gl2r_posdet(a: float, n: int, rng, grid: int = 2001) -> MCReport:
    """Haar average over theta of the measures of ``R_theta diag(a, 1/a)``
    (Dirac at the dominant eigenline, or the acip) against uniform measure.

    The estimate is the sup distance between the averaged CDF, on a grid of
    angles, and the uniform CDF.
    """
    if not (a > 0) or a == 1.0:
        raise BadParameter("a must be positive and different from 1")
    wgrid = np.linspace(-math.pi / 2, math.pi / 2, grid)
    gen = _as_stream(rng).generator()
    theta = gen.uniform(0.0, 2 * math.pi, n)
    M = rotation(theta) @ np.diag([a, 1.0 / a])
    acc = np.zeros(grid)
    n_ell = 0
    for i in range(n):
        meas = _posdet_measure(M[i])
        if isinstance(meas, AcipDescriptor):
            acc += meas.cdf_angle(wgrid)
            n_ell += 1
        else:
            acc += wgrid > meas
    ks = float(np.max(np.abs(acc / n - (wgrid + math.pi / 2) / math.pi)))
    tol = max(0.01, 3.0 / math.sqrt(n))
    return MCReport(n, 0, ks, 0.0, ks < tol, tol, ks, name="ds_gl2r_posdet",
                    extras={"a": a, "elliptic_fraction": n_ell / n})


def _posdet_measure(M):
    from .dsmeasure import ds_measure_gl2r
    meas = ds_measure_gl2r(M)
    if isinstance(meas, AcipDescriptor):
        return meas
    return float(meas.atoms[0])


def rho_norm_equality(A, f: str = "log", theta_samples: int = 10_000,
                      v_samples: int = 10_000, tol: float = 1e-3,
                      allow_negdet: bool = False) -> MCReport:
    """Midpoint-rule means of ``f(rho(R_theta A))`` over theta and of
    ``f(||A v||)`` over the unit circle.

    For ``det A > 0`` passes iff the two agree within ``tol``.  With
    ``allow_negdet`` a negative-determinant ``A`` is accepted and passes iff
    ``lhs >= rhs - tol``.
    """
    A = np.asarray(A, dtype=float)
    det = float(np.linalg.det(A))
    if det == 0:
        raise Singular("matrix is singular")
    if det < 0 and not allow_negdet:
        raise NegDetInput("only an inequality is available for det < 0")
    fn = {"id": lambda x: x, "log": np.log}[f]
    th = 2 * math.pi * (np.arange(theta_samples) + 0.5) / theta_samples
    lhs = float(np.mean(fn(spectral_radius_2x2(rotation(th) @ A))))
    t = 2 * math.pi * (np.arange(v_samples) + 0.5) / v_samples
    v = np.stack([np.cos(t), np.sin(t)], 1)
    rhs = float(np.mean(fn(np.linalg.norm(v @ A.T, axis=1))))
    gap = lhs - rhs
    ok = abs(gap) < tol if det > 0 else gap >= -tol
    return MCReport(theta_samples, 0, gap, 0.0, ok, tol, name=f"rho_norm_equality[{f}]",
                    extras={"lhs": lhs, "rhs": rhs, "det_sign": int(np.sign(det))})
