"""The Arnold family ``f(x) = x + c + eps sin(2 pi x) mod 1``.

Everything is vectorised over ``x`` and ``c`` where that is cheap; the lift
``F`` is used throughout so rotation numbers and periodic orbits keep their
integer winding ``p``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from math import gcd

import numpy as np
from scipy import optimize

from .density import DensityTable
from .errors import BadParameter, DerivativeVanishing, NoConvergence, NoRoot
from .matnum import as_generator

__all__ = [
    "EPS_MAX", "CircleMap", "Tongue", "RotationCurve", "Classification",
    "rotation_number", "rotation_numbers", "orbit_jet", "newton_periodic",
    "tongue_interval", "tongues_up_to", "trace_rotation_curve",
    "hyperbolic_density", "classify_parameter", "classify_parameters",
    "elliptic_leftover", "ObstructionReport", "obstruction_check",
]

EPS_MAX = 1.0 / (2.0 * math.pi)
TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class CircleMap:
    """``f(x) = x + c + eps sin(2 pi x)``.  ``eps = 0`` (rigid rotation) is
    accepted as a degenerate case."""
    c: float
    eps: float

    def __post_init__(self):
        if not 0.0 <= self.eps <= EPS_MAX:
            raise BadParameter(f"eps must lie in [0, 1/(2 pi)], got {self.eps}")

    def lift(self, x):
        return x + self.c + self.eps * np.sin(TWO_PI * x)

    def __call__(self, x):
        return np.mod(self.lift(x), 1.0)

    def derivative(self, x):
        return 1.0 + TWO_PI * self.eps * np.cos(TWO_PI * x)

    def second_derivative(self, x):
        return -TWO_PI ** 2 * self.eps * np.sin(TWO_PI * x)


def orbit_jet(x, c, eps: float, q: int, second: bool = False) -> dict:
    """Iterate the lift ``q`` times from ``x`` at parameter ``c``.

    Returns ``xq`` (lift of the q-th iterate), ``mult`` (product of ``f'``
    along the orbit, i.e. ``dF^q/dx``), ``dc`` (``dF^q/dc`` from
    ``d_{n+1} = f'(x_n) d_n + 1``) and, with ``second=True``, the partial
    derivatives ``mult_x`` and ``mult_c`` of ``mult``.
    """
    x = np.asarray(x, dtype=float)
    c = np.asarray(c, dtype=float)
    xn = x + 0.0 * c
    mult = np.ones_like(xn)
    dc = np.zeros_like(xn)
    if second:
        dx = np.ones_like(xn)   # dx_n / dx_0
        s_x = np.zeros_like(xn)  # sum f''/f' * dx_n/dx_0
        s_c = np.zeros_like(xn)  # sum f''/f' * dx_n/dc
    for _ in range(q):
        arg = TWO_PI * xn
        fp = 1.0 + TWO_PI * eps * np.cos(arg)
        if second:
            ratio = -TWO_PI ** 2 * eps * np.sin(arg) / fp
            s_x += ratio * dx
            s_c += ratio * dc
            dx = dx * fp
        dc = fp * dc + 1.0
        mult = mult * fp
        xn = xn + c + eps * np.sin(arg)
    out = {"xq": xn, "mult": mult, "dc": dc}
    if second:
        out["mult_x"] = mult * s_x
        out["mult_c"] = mult * s_c
    return out


# --------------------------------------------------------------------------
# rotation numbers

def rotation_number(m: CircleMap, n_iter: int = 100_000, x0: float = 0.0) -> float:
    """``(F^n(x0) - x0) / n``."""
    if n_iter < 1000:
        raise ValueError("n_iter must be at least 1000")
    return float(rotation_numbers(m.eps, np.array([m.c]), n_iter, x0)[0])


def rotation_numbers(eps: float, cs, n_iter: int = 100_000, x0: float = 0.0) -> np.ndarray:
    """Rotation numbers for an array of parameters at fixed ``eps``.

    The orbit is kept in ``[0, 1)`` and the integer parts are counted
    separately, so no precision is lost over long runs.
    """
    CircleMap(0.0, eps)
    cs = np.asarray(cs, dtype=float)
    x = np.full(cs.shape, float(x0) % 1.0)
    wind = np.zeros(cs.shape)
    for _ in range(n_iter):
        y = x + cs + eps * np.sin(TWO_PI * x)
        k = np.floor(y)
        wind += k
        x = y - k
    return (wind + x - (float(x0) % 1.0)) / n_iter


# --------------------------------------------------------------------------
# periodic orbits and tongues

def _check_pq(p: int, q: int):
    if q < 1 or gcd(p, q) != 1:
        raise BadParameter(f"need q >= 1 and gcd(p, q) = 1, got {p}/{q}")


def newton_periodic(m: CircleMap, p: int, q: int, x_init: float,
                    max_iter: int = 50, tol: float = 1e-12) -> float:
    """Damped Newton for ``G(x) = F^q(x) - x - p = 0``."""
    _check_pq(p, q)
    x = float(x_init)

    def G(x):
        j = orbit_jet(x, m.c, m.eps, q)
        return float(j["xq"] - x - p), float(j["mult"] - 1.0)

    g, dg = G(x)
    for _ in range(max_iter):
        if abs(g) < tol:
            return x
        if abs(dg) < 1e-14:
            raise DerivativeVanishing("G'(x) vanishes (saddle-node)")
        step = -g / dg
        for _ in range(40):
            gn, dgn = G(x + step)
            if abs(gn) < abs(g):
                break
            step *= 0.5
        else:
            raise NoRoot(f"no {p}/{q}-periodic point found near {x_init}")
        x, g, dg = x + step, gn, dgn
    if abs(g) < tol:
        return x
    raise NoRoot(f"Newton did not converge for {p}/{q}")


@dataclass(frozen=True)
class Tongue:
    """Parameter interval ``[c_lo, c_hi]`` (on the lift, so ``c_lo`` may be
    negative) where the rotation number is ``p/q``."""
    p: int
    q: int
    c_lo: float
    c_hi: float
    eps: float
    x_lo: float = float("nan")
    x_hi: float = float("nan")

    @property
    def measure(self) -> float:
        return self.c_hi - self.c_lo

    def pieces(self) -> list[tuple[float, float]]:
        """The interval reduced mod 1 as sub-intervals of ``[0, 1]``."""
        lo, hi = self.c_lo, self.c_hi
        k = math.floor(lo)
        lo, hi = lo - k, hi - k
        if hi <= 1.0:
            return [(lo, hi)]
        return [(0.0, hi - 1.0), (lo, 1.0)]

    def contains(self, c) -> np.ndarray:
        c = np.mod(np.asarray(c, dtype=float), 1.0)
        out = np.zeros(c.shape, dtype=bool)
        for lo, hi in self.pieces():
            out |= (c >= lo) & (c <= hi)
        return out


def _extreme_G(c, eps, p, q, xs, which):
    g = orbit_jet(xs, c, eps, q)["xq"] - xs - p
    i = np.argmax(g) if which == "max" else np.argmin(g)
    return float(g[i]), float(xs[i])


def _saddle_node(eps, p, q, x, c, tol=1e-10, max_iter=50):
    """Newton on ``{F^q(x) - x - p = 0, mult(x) - 1 = 0}`` in ``(x, c)``."""
    for _ in range(max_iter):
        j = orbit_jet(x, c, eps, q, second=True)
        r = np.array([float(j["xq"] - x - p), float(j["mult"] - 1.0)])
        if np.max(np.abs(r)) < tol:
            return x, c, r
        J = np.array([[float(j["mult"] - 1.0), float(j["dc"])],
                      [float(j["mult_x"]), float(j["mult_c"])]])
        try:
            dx, dcc = np.linalg.solve(J, -r)
        except np.linalg.LinAlgError:
            break
        x, c = x + dx, c + dcc
    j = orbit_jet(x, c, eps, q)
    r = np.array([float(j["xq"] - x - p), float(j["mult"] - 1.0)])
    if np.max(np.abs(r)) < tol:
        return x, c, r
    raise NoConvergence(f"saddle-node Newton failed for {p}/{q}")


def tongue_interval(eps: float, p: int, q: int, grid: int = 4001) -> Tongue:
    """Boundaries of the ``p/q`` tongue.

    ``max_x G`` and ``min_x G`` are increasing in ``c``, so each boundary is
    the unique root of one of them; a bracketing solve on an ``x`` grid is
    polished by Newton on the saddle-node system.
    """
    _check_pq(p, q)
    if not 0.0 < eps < EPS_MAX:
        raise BadParameter("eps must lie in (0, 1/(2 pi))")
    if q > 12:
        raise BadParameter("q must not exceed 12")
    xs = (np.arange(grid) + 0.5) / grid
    a, b = p / q - eps - 0.01, p / q + eps + 0.01
    ends = {}
    for which in ("max", "min"):
        fn = lambda c: _extreme_G(c, eps, p, q, xs, which)[0]
        c0 = optimize.brentq(fn, a, b, xtol=1e-15, maxiter=200)
        x0 = _extreme_G(c0, eps, p, q, xs, which)[1]
        x1, c1, _ = _saddle_node(eps, p, q, x0, c0)
        ends[which] = (float(x1), float(c1))
    (x_lo, c_lo), (x_hi, c_hi) = ends["max"], ends["min"]
    return Tongue(p, q, c_lo, c_hi, eps, x_lo % 1.0, x_hi % 1.0)


def tongues_up_to(eps: float, q_max: int) -> list[Tongue]:
    """All tongues ``p/q`` with ``0 <= p < q <= q_max`` coprime."""
    return [tongue_interval(eps, p, q) for q in range(1, q_max + 1)
            for p in range(q) if gcd(p, q) == 1]


# --------------------------------------------------------------------------
# rotation curves

@dataclass
class RotationCurve:
    """Samples ``(x, c(x))`` with ``x`` a ``p/q``-periodic point of
    ``f_{c(x)}``, plus ``dc/dx`` and stability (``True`` = attracting)."""
    p: int
    q: int
    eps: float
    x: np.ndarray
    c: np.ndarray
    dcdx: np.ndarray
    attracting: np.ndarray
    residual: np.ndarray
    failed: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=bool))

    @property
    def stability(self) -> np.ndarray:
        return np.where(self.attracting, "attracting", "repelling")


def trace_rotation_curve(eps: float, p: int, q: int, x_grid_size: int = 20_000,
                         tongue: Tongue | None = None, tol: float = 1e-12) -> RotationCurve:
    """Solve ``F^q_c(x) = x + p`` for ``c`` at every grid point ``x``.

    ``F^q_c(x)`` is strictly increasing in ``c`` and every solution lies in
    the tongue, so each ``x`` has exactly one ``c``; it is found by Newton
    in ``c`` safeguarded by bisection inside the tongue bracket.
    """
    t = tongue if tongue is not None else tongue_interval(eps, p, q)
    x = (np.arange(x_grid_size) + 0.5) / x_grid_size
    pad = 1e-9
    lo = np.full_like(x, t.c_lo - pad)
    hi = np.full_like(x, t.c_hi + pad)
    c = 0.5 * (lo + hi)
    for _ in range(100):
        j = orbit_jet(x, c, eps, q)
        g = j["xq"] - x - p
        lo = np.where(g < 0, c, lo)
        hi = np.where(g > 0, c, hi)
        cn = c - g / j["dc"]
        bad = (cn <= lo) | (cn >= hi)
        c = np.where(bad, 0.5 * (lo + hi), cn)
        if np.max(np.abs(g)) < tol:
            break
    j = orbit_jet(x, c, eps, q)
    res = np.abs(j["xq"] - x - p)
    failed = res > 1e-10
    if failed.mean() > 0.01:
        raise NoConvergence(f"rotation curve {p}/{q}: {failed.sum()} points failed")
    dcdx = -(j["mult"] - 1.0) / j["dc"]
    return RotationCurve(p, q, eps, x, c, dcdx, j["mult"] < 1.0, res, failed)


def hyperbolic_density(curves, bins: int = 100) -> DensityTable:
    """Binned density ``sum over curves of (1/q) |dc/dx|``.

    Each curve is integrated by the midpoint rule on its own grid; both the
    attracting and the repelling orbit measures are included, so the total
    mass is ``2 * sum of tongue measures``.
    """
    if not curves:
        raise ValueError("need at least one rotation curve")
    mass = np.zeros(bins)
    for cv in curves:
        w = np.where(cv.failed, 0.0, np.abs(cv.dcdx)) / (cv.q * cv.x.size)
        idx = np.minimum((cv.x * bins).astype(np.int64), bins - 1)
        mass += np.bincount(idx, weights=w, minlength=bins)
    return DensityTable(mass * bins)


# --------------------------------------------------------------------------
# classification and elliptic measures

@dataclass(frozen=True)
class Classification:
    kind: str  # "hyperbolic" or "elliptic"
    p: int = 0
    q: int = 0

    @property
    def hyperbolic(self) -> bool:
        return self.kind == "hyperbolic"


def _detect_period(x, cs, eps, q_max, tol):
    """Smallest ``q <= q_max`` with ``F^q(x) - x`` within ``tol`` of an
    integer; 0 when none.  Returns ``(q, p mod q)``."""
    qs = np.zeros(x.shape, dtype=np.int64)
    ps = np.zeros(x.shape, dtype=np.int64)
    y = x.copy()
    for q in range(1, q_max + 1):
        y = y + cs + eps * np.sin(TWO_PI * y)
        d = y - x
        k = np.rint(d)
        hit = (qs == 0) & (np.abs(d - k) < tol)
        qs[hit] = q
        ps[hit] = np.mod(k[hit].astype(np.int64), q)
    return qs, ps


def classify_parameters(eps: float, cs, q_max: int = 12, n_transient: int = 10_000,
                        tol: float = 1e-9, x0: float = 0.0):
    """Vectorised :func:`classify_parameter`; returns ``(q, p, x)`` arrays with
    ``q = 0`` meaning elliptic and ``x`` the orbit position after the
    transient."""
    if q_max > 12:
        raise BadParameter("q_max must not exceed 12")
    CircleMap(0.0, eps)
    cs = np.asarray(cs, dtype=float)
    x = np.full(cs.shape, float(x0))
    for _ in range(n_transient):
        x = np.mod(x + cs + eps * np.sin(TWO_PI * x), 1.0)
    qs, ps = _detect_period(x, cs, eps, q_max, tol)
    return qs, ps, x


def classify_parameter(eps: float, c: float, q_max: int = 12, n_transient: int = 10_000,
                       tol: float = 1e-9) -> Classification:
    """Hyperbolic ``(p, q)`` when the orbit of 0 settles on a ``q``-cycle,
    ``q <= q_max``, after the transient; elliptic otherwise."""
    qs, ps, _ = classify_parameters(eps, np.array([c]), q_max, n_transient, tol)
    if qs[0] == 0:
        return Classification("elliptic")
    return Classification("hyperbolic", int(ps[0]), int(qs[0]))


def elliptic_leftover(eps: float, n_params: int = 10_000, n_iter: int = 100_000,
                      bins: int = 100, rng=0, q_max: int = 12,
                      n_transient: int = 10_000, tol: float = 1e-9) -> DensityTable:
    """``1 - (aggregate of elliptic invariant densities)``.

    Parameters are drawn uniformly from ``[0, 1)``; each elliptic one
    contributes the orbit histogram of ``n_iter`` iterates normalised to
    mass ``1 / n_params``.  The aggregate therefore has mass equal to the
    elliptic fraction and the result has mass ``1 - fraction``.
    """
    gen = as_generator(rng)
    cs = gen.uniform(0.0, 1.0, n_params)
    qs, _, x = classify_parameters(eps, cs, q_max, n_transient, tol)
    ell = qs == 0
    ce, x = cs[ell], x[ell]
    counts = np.zeros(bins)
    for _ in range(n_iter):
        x = x + ce + eps * np.sin(TWO_PI * x)
        x -= np.floor(x)
        counts += np.bincount(np.minimum((x * bins).astype(np.int64), bins - 1),
                              minlength=bins)
    agg = counts * bins / (n_iter * n_params)
    return DensityTable(1.0 - agg)


@dataclass
class ObstructionReport:
    H: DensityTable
    E: DensityTable
    violation_bins: list
    margin: np.ndarray
    tongues: list
    curves: list

    @property
    def violated(self) -> bool:
        return len(self.violation_bins) > 0

    @property
    def elliptic_fraction(self) -> float:
        return 1.0 - self.E.total_mass


def obstruction_check(eps: float = 0.05, q_max: int = 3, bins: int = 100, rng=0,
                      n_params: int = 10_000, n_iter: int = 100_000,
                      x_grid_size: int = 20_000, leftover: DensityTable | None = None
                      ) -> ObstructionReport:
    """Compare the hyperbolic density ``H`` (tongues with ``q <= q_max``)
    with the elliptic leftover ``E`` bin by bin.  Bins with ``H < E`` are
    reported with margin ``E - H``."""
    tongues = tongues_up_to(eps, q_max)
    curves = [trace_rotation_curve(eps, t.p, t.q, x_grid_size, tongue=t) for t in tongues]
    H = hyperbolic_density(curves, bins)
    E = leftover if leftover is not None else elliptic_leftover(
        eps, n_params, n_iter, bins, rng)
    gap = E.values - H.values
    viol = [int(i) for i in np.nonzero(gap > 0)[0]]
    return ObstructionReport(H, E, viol, gap[viol], tongues, curves)
