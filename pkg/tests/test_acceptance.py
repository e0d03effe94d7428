"""Acceptance suite at full budget.

Each test records its outcome through the ``record`` fixture; the terminal
summary prints one pass/fail line per criterion.  Runtime is a few minutes
on one core.
"""
import math
import time

import numpy as np
import pytest

from dslab import arnold, gl2r
from dslab.dsmeasure import (ds_perm_weights, exponent_bijection_check, permutations,
                             torus_closed_form, torus_integrand)
from dslab.matnum import RngStream, haar_orthogonal
from dslab.verify import (estimate_inequality, random_exponent_sphere,
                          verify_ds_property_cp, verify_ds_property_flag)

N = 1_000_000
EPS = 0.05


# 1 -------------------------------------------------------------------------

def test_c01_dim2_weights(record):
    w = ds_perm_weights([2.0, 1.0])
    best = min(_timed(lambda: ds_perm_weights([2.0, 1.0]))[1] for _ in range(20))
    ok = w[(0, 1)] == 0.8 and w[(1, 0)] == 0.2 and best < 1e-3
    record(1, ok, f"weights ({w[(0, 1)]!r}, {w[(1, 0)]!r}), {best * 1e6:.0f} us")
    assert ok


def _timed(fn):
    t = time.perf_counter()
    out = fn()
    return out, time.perf_counter() - t


# 2 -------------------------------------------------------------------------

def test_c02_cp_dim2(record):
    r, dt = _timed(lambda: verify_ds_property_cp(np.diag([2.0, 0.5]), N, RngStream(2)))
    ok = r.passed and r.valid and r.ks_distance < 0.01 and dt < 60
    record(2, ok, f"weighted KS {r.ks_distance:.2e}, {dt:.1f} s")
    assert ok


# 3 -------------------------------------------------------------------------

def test_c03_flags_dim3(record):
    reps, dt = _timed(lambda: verify_ds_property_flag(np.diag([4.0, 2.0, 1.0]), N,
                                                      rng=RngStream(3)))
    ok = len(reps) == 3 and all(r.passed and r.valid for r in reps) and dt < 300
    z = ", ".join(f"{r.estimate / r.std_error:+.2f}" for r in reps)
    record(3, ok, f"z-scores {z}, {dt:.1f} s")
    assert ok


# 4 -------------------------------------------------------------------------

def test_c04_torus_dim2_exact(record):
    a, b = torus_closed_form([2.0, 1.0], (0, 1)), torus_closed_form([2.0, 1.0], (1, 0))
    ok = a == 1.25 and b == 5.0
    record(4, ok, f"d=2 values {a!r}, {b!r}")
    assert ok


@pytest.mark.parametrize("sigma", permutations(3))
def test_c04_torus_dim3_monte_carlo(sigma, record):
    m = [2.0, 1.0, 0.5]
    ph = np.random.default_rng(4 + sum(10 ** i * s for i, s in enumerate(sigma))).uniform(
        0, 2 * np.pi, (N, 3))
    y = torus_integrand(m, sigma, ph)
    se = y.std() / math.sqrt(N)
    z = (y.mean() - torus_closed_form(m, sigma)) / se
    ok = abs(z) < 3
    record(4, ok, f"sigma {''.join(map(str, sigma))} z {z:+.2f}")
    assert ok


# 5 -------------------------------------------------------------------------

def test_c05_exponent_bijection(record):
    gen = np.random.default_rng(5)
    results = [exponent_bijection_check(gen.uniform(0.1, 10.0, 2 + i % 3), rtol=1e-10)
               for i in range(100)]
    ok = all(results)
    record(5, ok, f"{sum(results)}/100 vectors")
    assert ok


# 6 -------------------------------------------------------------------------

CASES_6 = [(d, k) for d in (2, 3) for k in range(1, d + 1)]


@pytest.mark.parametrize("d, k", CASES_6)
def test_c06_complex_inequality(d, k, record):
    A = np.diag([4.0, 2.0, 1.0][:d]) if d == 3 else np.diag([2.0, 0.5])
    r = estimate_inequality(A, "complex", k, "log", N, RngStream(60 + 10 * d + k))
    if k == d:
        ok = r.passed and r.extras["max_pointwise_gap"] < 1e-12
        record(6, ok, f"d={d} k=d pointwise {r.extras['max_pointwise_gap']:.1e}")
    else:
        ok = r.passed
        record(6, ok, f"d={d} k={k} gap {r.estimate:.4f} (SE {r.std_error:.1e})")
    assert ok


# 7 -------------------------------------------------------------------------

@pytest.mark.parametrize("k", [1, 2])
def test_c07_real_inequality(k, record):
    r = estimate_inequality(np.diag([4.0, 2.0, 1.0]), "real", k, "log", N, RngStream(70 + k))
    e = r.extras
    ok = bool(e["bound_pass"])
    record(7, ok, f"k={k} bound gap {e['bound_gap']:.4f}, unscaled gap {r.estimate:.4f} "
                  f"({'>=' if r.passed else '<'} -3 SE)")
    assert ok


# 8 -------------------------------------------------------------------------

def test_c08_negdet_rho_cdf(record):
    a = 0.5
    theta = np.random.default_rng(8).uniform(0, 2 * np.pi, N)
    M = gl2r.rotation(theta) @ np.diag([a, -1 / a])
    rho = np.sort(np.max(np.abs(np.linalg.eigvals(M)), axis=1))
    F = gl2r.negdet_rho_cdf(a, np.clip(rho, 1.0, 1.0 / a))
    i = np.arange(1, N + 1)
    sup = float(max(np.max(i / N - F), np.max(F - (i - 1) / N)))
    ok = sup < 0.005
    record(8, ok, f"rho CDF sup distance {sup:.1e}")
    assert ok


def test_c08_negdet_weighted_angles(record):
    r = gl2r.verify_ds_gl2r_negdet(0.5, N, RngStream(81))
    c = gl2r.verify_ds_gl2r_negdet(0.5, N, RngStream(81), weighted=False)
    ok = r.passed and r.ks_distance < 0.01 and not c.passed
    record(8, ok, f"weighted KS {r.ks_distance:.1e}, unweighted control KS {c.ks_distance:.3f}")
    assert ok


# 9 -------------------------------------------------------------------------

@pytest.mark.parametrize("f", ["id", "log"])
def test_c09_rho_norm_equality(f, record):
    r = gl2r.rho_norm_equality(np.diag([2.0, 0.5]), f, theta_samples=10_000, v_samples=10_000)
    lhs, rhs = r.extras["lhs"], r.extras["rhs"]
    ok = abs(lhs - rhs) < 1e-3
    record(9, ok, f"f={f} lhs {lhs:.7f} rhs {rhs:.7f}")
    assert ok


# 10 ------------------------------------------------------------------------

@pytest.mark.parametrize("label", ["degree 1", "degree 2"])
def test_c10_theta_average(label, record):
    if label == "degree 1":
        B = gl2r.cayley_blaschke(2.0, 0.0)
    else:
        B = gl2r.BlaschkeProduct(0.0, (0.0, 0.4))
    dt = gl2r.theta_average_pushforward(B, n_iter=20, grid_size=100_000,
                                        theta_samples=1000, bins=100)
    dev = dt.sup_deviation()
    ok = dev < 0.05
    record(10, ok, f"{label} sup deviation {dev:.1e}")
    assert ok


# 11-13 ---------------------------------------------------------------------

@pytest.fixture(scope="module")
def arnold_sweep():
    t0 = time.perf_counter()
    tongues = arnold.tongues_up_to(EPS, 3)
    curves = [arnold.trace_rotation_curve(EPS, t.p, t.q, 20_000, tongue=t) for t in tongues]
    leftover = arnold.elliptic_leftover(EPS, n_params=10_000, n_iter=100_000, rng=11)
    report = arnold.obstruction_check(EPS, q_max=3, leftover=leftover)
    return tongues, curves, leftover, report, time.perf_counter() - t0


def test_c11_arnold_tongues(arnold_sweep, record):
    tongues, _, leftover, _, elapsed = arnold_sweep
    by = {(t.p, t.q): t for t in tongues}
    m01 = by[(0, 1)].measure
    half = by[(1, 2)]
    per3 = by[(1, 3)].measure + by[(2, 3)].measure
    frac = 1 - leftover.total_mass
    checks = [abs(m01 - 0.1) <= 1e-6,
              abs(half.c_lo - 0.4961) <= 5e-4 and abs(half.c_hi - 0.5039) <= 5e-4,
              abs(per3 - 0.00214) <= 0.1 * 0.00214,
              abs(frac - 0.88) <= 0.02,
              elapsed < 600]
    ok = all(checks)
    record(11, ok, f"mu(0/1) {m01:.7f}, 1/2 tongue [{half.c_lo:.5f}, {half.c_hi:.5f}], "
                   f"period 3 {per3:.5f}, elliptic {frac:.3f}, sweep {elapsed:.0f} s")
    assert ok


def test_c12_mass_identity(arnold_sweep, record):
    tongues, curves, *_ = arnold_sweep
    errs = []
    for t, cv in zip(tongues, curves):
        mass = arnold.hyperbolic_density([cv]).total_mass
        errs.append(abs(mass / (2 * t.measure) - 1))
    ok = max(errs) < 0.01
    record(12, ok, f"{len(errs)} tongues, worst relative error {max(errs):.1e}")
    assert ok


def test_c13_obstruction(arnold_sweep, record):
    report = arnold_sweep[3]
    ok = report.violated
    record(13, ok, f"{len(report.violation_bins)} bins with H < E, "
                   f"largest margin {max(report.margin, default=0.0):.3f}")
    assert ok


# 14 ------------------------------------------------------------------------

def test_c14_random_exponent(record):
    gen = np.random.default_rng(14)
    random_ok = []
    for i in range(20):
        d = 2 + i % 3
        r = random_exponent_sphere(gen.standard_normal((d, d)), 100_000, RngStream(140 + i))
        random_ok.append(r.estimate >= -3 * r.std_error)
    o = random_exponent_sphere(haar_orthogonal(3, 14), 100_000, RngStream(160))
    p = random_exponent_sphere(np.diag([2.0, 0.5]), N, RngStream(161))
    orth_ok = abs(o.estimate) <= 3 * o.std_error or abs(o.estimate) < 1e-12
    pos_ok = p.estimate > 3 * p.std_error
    ok = all(random_ok) and orth_ok and pos_ok
    record(14, ok, f"{sum(random_ok)}/20 random >= -3 SE, orthogonal {o.estimate:.1e}, "
                   f"diag(2, 0.5) {p.estimate:.4f} (SE {p.std_error:.1e})")
    assert ok
