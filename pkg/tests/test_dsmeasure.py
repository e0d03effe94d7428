import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dslab import gl2r
from dslab.dsmeasure import (AtomicMeasure, Flag, ds_measure_flag, ds_measure_gl2r,
                             ds_perm_weights, ds_projected_cp_weights,
                             exponent_bijection_check, permutations, torus_closed_form,
                             torus_integrand)
from dslab.errors import ModulusTie, NotDescending, Parabolic
from dslab.matnum import haar_unitary

descending = st.lists(st.floats(0.05, 20.0), min_size=2, max_size=5, unique=True).map(
    lambda xs: sorted(xs, reverse=True)).filter(
    lambda xs: all(a - b > 1e-3 for a, b in zip(xs, xs[1:])))


def brute_weights(m):
    """Direct formula with 1-based positions, summed in reverse order."""
    d = len(m)
    terms = {}
    for s in itertools.permutations(range(1, d + 1)):
        terms[s] = math.prod(m[k] ** (2 * (d - s[k])) for k in range(d))
    tot = sum(sorted(terms.values(), reverse=True))
    return {tuple(x - 1 for x in s): t / tot for s, t in terms.items()}


# --- permutation weights -----------------------------------------------------

def test_dim2_weights_exact():
    w = ds_perm_weights([2.0, 1.0])
    assert w[(0, 1)] == 0.8
    assert w[(1, 0)] == 0.2


def test_dim3_weights_brute_force():
    m = [2.0, 1.0, 0.5]
    w = ds_perm_weights(m)
    ref = brute_weights(m)
    for s in permutations(3):
        assert w[s] == pytest.approx(ref[s], rel=1e-12)
    assert max(w.weights, key=w.weights.get) == (0, 1, 2)


@settings(max_examples=50, deadline=None)
@given(descending, st.floats(1e-3, 1e3))
def test_weights_scale_invariant(m, c):
    a = ds_perm_weights(m).as_array()
    b = ds_perm_weights([c * x for x in m]).as_array()
    np.testing.assert_allclose(a, b, atol=1e-12)
    assert a.sum() == pytest.approx(1.0, abs=1e-12) and np.all(a >= 0)
    assert np.argmax(a) == 0  # identity is listed first


def test_weights_large_ratio_stable():
    w = ds_perm_weights([1e200, 1.0, 1e-200]).as_array()
    assert np.all(np.isfinite(w)) and w[0] == pytest.approx(1.0)


def test_not_descending():
    with pytest.raises(NotDescending):
        ds_perm_weights([1.0, 2.0])
    with pytest.raises(NotDescending):
        ds_projected_cp_weights([1.0, 1.0])


def test_projected_weights():
    np.testing.assert_allclose(ds_projected_cp_weights([2.0, 1.0]), [0.8, 0.2], atol=1e-15)
    m = [2.0, 1.0, 0.5]
    p = ds_projected_cp_weights(m)
    # marginal of the brute-force weights over the eigenvector at position 0
    ref = np.zeros(3)
    for s, w in brute_weights(m).items():
        ref[s.index(0)] += w
    np.testing.assert_allclose(p, ref, rtol=1e-12)
    assert np.all(np.diff(p) <= 0)


def test_projected_weights_equal_modulus_limit():
    p = ds_projected_cp_weights([1.0 + 2e-9, 1.0 + 1e-9, 1.0])
    np.testing.assert_allclose(p, 1 / 3, atol=1e-7)


# --- flag measures ------------------------------------------------------------

def test_flag_measure_dim2():
    mu = ds_measure_flag(np.diag([2.0, 1.0]))
    assert len(mu) == 2
    e1 = Flag(np.eye(2))
    e2 = Flag(np.eye(2)[:, ::-1])
    w = {round(e1.distance(a), 9): wt for a, wt in zip(mu.atoms, mu.weights)}
    assert w[0.0] == pytest.approx(0.8)
    assert mu.atoms[1].distance(e2) < 1e-12


def test_flag_measure_dim3_invariant():
    A = haar_unitary(3, 1) @ np.diag([4.0, 2.0, 1.0]) @ haar_unitary(3, 2)
    mu = ds_measure_flag(A)
    assert len(mu) == 6 and mu.weights.sum() == pytest.approx(1.0, abs=1e-12)
    for atom in mu.atoms:
        assert atom.act(A).distance(atom) < 1e-8
    assert len(mu.merged()) == 6


def test_flag_projection_matches_projected_weights():
    A = haar_unitary(4, 5) @ np.diag([3.0, 2.0, 1.0, 0.5])
    mu = ds_measure_flag(A)
    es_vecs = [mu.atoms[0].vectors[:, 0]]  # dominant line
    p = ds_projected_cp_weights(np.abs(mu.meta["eigenvalues"]))
    lines = {}
    for atom, w in zip(mu.atoms, mu.weights):
        v = atom.vectors[:, 0]
        key = next((i for i, u in enumerate(es_vecs) if abs(abs(np.vdot(u, v)) - 1) < 1e-9),
                   None)
        if key is None:
            es_vecs.append(v)
            key = len(es_vecs) - 1
        lines[key] = lines.get(key, 0.0) + w
    assert sorted(lines.values(), reverse=True) == pytest.approx(sorted(p, reverse=True),
                                                                 abs=1e-12)


def test_flag_measure_tie_propagates():
    with pytest.raises(ModulusTie):
        ds_measure_flag(np.eye(3))


def test_atomic_measure_validation():
    with pytest.raises(ValueError):
        AtomicMeasure([0.0, 1.0], [0.5, 0.6])
    m = AtomicMeasure([0.1, 0.1 + 1e-12, 1.0], [0.2, 0.3, 0.5]).merged()
    assert len(m) == 2 and m.weights[0] == pytest.approx(0.5)


# --- GL(2, R) -------------------------------------------------------------

def test_gl2r_negative_determinant_weights():
    mu = ds_measure_gl2r(np.diag([2.0, -0.5]))
    got = dict(zip([round(a, 12) for a in mu.atoms], mu.weights))
    assert got[0.0] == pytest.approx(0.8)
    assert got[round(-math.pi / 2, 12)] == pytest.approx(0.2)


def test_gl2r_hyperbolic_single_atom():
    mu = ds_measure_gl2r(np.array([[2.0, 0.0], [0.0, 0.5]]))
    assert len(mu) == 1 and mu.atoms[0] == pytest.approx(0.0, abs=1e-15)


def test_gl2r_rotation_gives_uniform_acip():
    acip = ds_measure_gl2r(gl2r.rotation(0.7))
    assert isinstance(acip, gl2r.AcipDescriptor)
    w = np.linspace(-1.5, 1.5, 11)
    np.testing.assert_allclose(acip.density_angle(w), 1.0, atol=1e-12)


def test_gl2r_parabolic():
    with pytest.raises(Parabolic):
        ds_measure_gl2r(np.array([[1.0, 1.0], [0.0, 1.0]]))


@settings(max_examples=40, deadline=None)
@given(st.floats(-3, 3), st.floats(0.2, 5), st.floats(0.2, 5))
def test_gl2r_negdet_weight_sum_and_det(theta, a, b):
    A = gl2r.rotation(theta) @ np.diag([a, -b])
    mu = ds_measure_gl2r(A)
    lam = mu.meta["eigenvalues"]
    assert mu.weights.sum() == pytest.approx(1.0, abs=1e-12)
    assert abs(lam[0] * lam[1]) == pytest.approx(abs(np.linalg.det(A)), rel=1e-10)


# --- torus closed forms -----------------------------------------------------

def test_torus_dim2_values():
    assert torus_closed_form([2.0, 1.0], (0, 1)) == 1.25
    assert torus_closed_form([2.0, 1.0], (1, 0)) == 5.0


@pytest.mark.parametrize("sigma", permutations(3))
def test_torus_dim3_monte_carlo(sigma):
    m = [2.0, 1.0, 0.5]
    n = 200_000
    ph = np.random.default_rng(int("".join(map(str, sigma)))).uniform(0, 2 * np.pi, (n, 3))
    y = torus_integrand(m, sigma, ph)
    assert abs(y.mean() - torus_closed_form(m, sigma)) < 3 * y.std() / np.sqrt(n)


@settings(max_examples=30, deadline=None)
@given(descending)
def test_torus_times_weight_is_constant(m):
    d = len(m)
    w = ds_perm_weights(m)
    prods = [torus_closed_form(m, s) * w[s] for s in permutations(d)]
    np.testing.assert_allclose(prods, prods[0], rtol=1e-10)


def test_exponent_bijection_examples():
    assert exponent_bijection_check([2.0, 1.0])
    assert exponent_bijection_check([8.0, 4.0, 2.0, 1.0])
    # hand enumeration at d=2: terms 1 and 4
    m = np.array([2.0, 1.0])
    lhs = sum(np.prod(m ** (2 * np.array(s) - 2)) for s in [(1, 2), (2, 1)])
    assert lhs == 5.0


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(0.1, 10.0), min_size=2, max_size=5))
def test_exponent_bijection_always_true(m):
    assert exponent_bijection_check(m)
