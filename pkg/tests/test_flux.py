import math

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from eave.flux import (
    EdgeData,
    NonpositiveDiffusion,
    batch_edge_coefficients,
    bernoulli,
    edge_average_coefficients,
    edge_coefficients,
    edge_flux,
    edge_potential,
    harmonic_average,
)

mpmath.mp.dps = 50


def bern_mp(z):
    z = mpmath.mpf(z)
    if z == 0:
        return mpmath.mpf(1)
    return z / mpmath.expm1(z)


@pytest.mark.parametrize("z", [0.0, 1e-12, -1e-12, 1e-8, -1e-8, 9.9e-5, -9.9e-5, 1e-4, 0.5, -3, 1, 20, -20, 100, -100, 699, 701, -700])
def test_bernoulli_matches_extended_precision(z):
    ref = float(bern_mp(z))
    assert bernoulli(z) == pytest.approx(ref, rel=1e-14, abs=0.0)


def test_bernoulli_special_values():
    assert bernoulli(0.0) == 1.0
    assert bernoulli(1.0) == pytest.approx(1.0 / (math.e - 1.0), rel=1e-15)
    assert isinstance(bernoulli(0.3), float)
    assert bernoulli(np.array([0.0, 1.0])).shape == (2,)


def test_bernoulli_huge_arguments_do_not_overflow():
    with np.errstate(all="raise"):
        v = bernoulli(np.array([1e5, 1e15, -1e5, -1e15, 710.0]))
    assert np.all(np.isfinite(v))
    assert v[0] == 0.0 and v[1] == 0.0
    assert v[2] == pytest.approx(1e5) and v[3] == pytest.approx(1e15)


@pytest.mark.parametrize("z", [0.1, 5.0, 50.0])
def test_bernoulli_reflection_identity(z):
    assert bernoulli(-z) == pytest.approx(math.exp(z) * bernoulli(z), rel=1e-13)


@given(st.floats(-700, 700, allow_nan=False))
def test_bernoulli_positive_and_difference_identity(z):
    b_plus, b_minus = bernoulli(z), bernoulli(-z)
    assert b_plus > 0.0 and b_minus > 0.0
    assert b_minus - b_plus == pytest.approx(z, rel=1e-13, abs=1e-13)


def test_edge_coefficients_reference_values():
    e = EdgeData((0.0, 0.0), (0.0, 1.0), 1.0, (0.0, -1.0))
    c = edge_coefficients(e)
    assert c.c_ij == pytest.approx(1.0 / (math.e - 1.0), rel=1e-14)
    assert c.c_ji == pytest.approx(math.e / (math.e - 1.0), rel=1e-14)
    psi = edge_potential(e)
    assert psi(e.xj) - psi(e.xi) == pytest.approx(-1.0)


def test_edge_coefficients_pure_diffusion():
    c = edge_coefficients(EdgeData((0.0, 0.0), (0.3, 0.4), 2.5, (0.0, 0.0)))
    assert c.c_ij == c.c_ji == 2.5
    assert harmonic_average(EdgeData((0.0, 0.0), (0.3, 0.4), 2.5, (0.0, 0.0))) == 2.5


def test_harmonic_average_against_quadrature():
    e = EdgeData((0.0, 0.0), (1.0, 0.0), 1.0, (1.0, 0.0))
    # (int_0^1 e^{t} dt)^{-1} = 1/(e-1) = B(1)
    assert harmonic_average(e) == pytest.approx(1.0 / (math.e - 1.0), rel=1e-14)
    e = EdgeData((0.2, 0.1), (0.7, 0.4), 0.3, (1.3, -0.4))
    psi = edge_potential(e)
    t = np.linspace(0.0, 1.0, 20001)
    x = np.asarray(e.xi) + t[:, None] * e.tangent
    vals = np.array([math.exp(psi(p)) / e.alpha for p in x])
    # composite Simpson
    integ = (vals[0] + vals[-1] + 4 * vals[1:-1:2].sum() + 2 * vals[2:-1:2].sum()) / (3 * (len(t) - 1))
    assert harmonic_average(e) == pytest.approx(1.0 / integ, rel=1e-10)


@given(
    st.floats(-5, 5), st.floats(-5, 5), st.floats(0.05, 3.0),
    st.floats(-3, 3), st.floats(-3, 3), st.floats(-30, 30),
)
def test_gauge_invariance_under_potential_shift(bx, by, alpha, tx, ty, shift):
    if abs(tx) + abs(ty) < 1e-3:
        tx = 1.0
    e = EdgeData((0.1, 0.2), (0.1 + tx, 0.2 + ty), alpha, (bx, by))
    c = edge_coefficients(e)
    ui, uj = 0.7, -1.3
    f0 = edge_flux(e, ui, uj)
    f1 = edge_flux(e, ui, uj, edge_potential(e, shift))
    assert f1 == pytest.approx(f0, rel=1e-12, abs=1e-12 * (c.c_ij + c.c_ji))
    assert f0 == pytest.approx(c.c_ij * uj - c.c_ji * ui, rel=1e-12, abs=1e-12 * (c.c_ij + c.c_ji))


def test_shift_by_ten_leaves_coefficients_unchanged():
    e = EdgeData((0.0, 0.0), (0.5, 0.25), 0.1, (1.0, 2.0))
    c = edge_coefficients(e)
    for u in ((1.0, 0.0), (0.0, 1.0)):
        f0 = edge_flux(e, *u)
        f1 = edge_flux(e, *u, psi=edge_potential(e, 10.0))
        assert f1 == pytest.approx(f0, rel=1e-12)
    assert edge_flux(e, 0.0, 1.0) == pytest.approx(c.c_ij, rel=1e-12)
    assert edge_flux(e, 1.0, 0.0) == pytest.approx(-c.c_ji, rel=1e-12)


@given(st.floats(1e-12, 1e3), st.floats(0, 1e3), st.floats(0, 2 * math.pi), st.floats(1e-6, 1.0), st.floats(0, 2 * math.pi))
def test_coefficients_finite_over_parameter_box(alpha, bmag, bang, length, eang):
    xi = np.array([[0.3, 0.3]])
    xj = xi + length * np.array([[math.cos(eang), math.sin(eang)]])
    beta = bmag * np.array([math.cos(bang), math.sin(bang)])
    a = lambda x: np.full(len(x), alpha)
    b = lambda x: np.tile(beta, (len(x), 1))
    cij, cji = batch_edge_coefficients(a, b, xi, xj)
    assert np.all(np.isfinite(cij)) and np.all(np.isfinite(cji))
    assert np.all(cij >= 0.0) and np.all(cji >= 0.0)


def test_extreme_peclet_unit_edges():
    a = lambda x: np.full(len(x), 1e-6)
    b = lambda x: np.tile([0.0, -1.0], (len(x), 1))
    xi = np.array([[0.0, 0.0], [0.0, 1.0], [0.0, 0.0]])
    xj = np.array([[0.0, 1.0], [0.0, 0.0], [1.0, 0.0]])
    cij, cji = batch_edge_coefficients(a, b, xi, xj)
    assert np.all(np.isfinite(cij)) and np.all(np.isfinite(cji))
    assert np.all(cij + cji > 0.0)
    # upwind coefficient carries the full convective flux |beta . tau| = 1
    assert cji[0] == pytest.approx(1.0) and cij[1] == pytest.approx(1.0)


def test_batch_matches_scalar(rng):
    a = lambda x: 1.0 + x[:, 0] ** 2
    b = lambda x: np.stack([np.sin(x[:, 1]), x[:, 0] - 2.0], 1)
    xi, xj = rng.uniform(size=(20, 2)), rng.uniform(size=(20, 2))
    for rule in ("average", "midpoint"):
        cij, cji = batch_edge_coefficients(a, b, xi, xj, rule)
        for k in range(20):
            c = edge_coefficients(edge_average_coefficients(a, b, xi[k], xj[k], rule))
            assert cij[k] == pytest.approx(c.c_ij, rel=1e-14)
            assert cji[k] == pytest.approx(c.c_ji, rel=1e-14)


def test_edge_average_rule():
    a = lambda x: x[:, 0] + 1.0
    b = lambda x: np.tile([2.0, -1.0], (len(x), 1))
    e = edge_average_coefficients(a, b, (0.0, 0.0), (1.0, 0.0))
    assert e.alpha == 1.5 and e.beta == (2.0, -1.0)
    with pytest.raises(NonpositiveDiffusion):
        edge_average_coefficients(lambda x: x[:, 0] - 5.0, b, (0.0, 0.0), (1.0, 0.0))
    with pytest.raises(ValueError):
        batch_edge_coefficients(a, b, np.zeros((1, 2)), np.ones((1, 2)), rule="simpson")


def test_edge_data_validation():
    with pytest.raises(NonpositiveDiffusion):
        EdgeData((0, 0), (1, 0), 0.0, (0, 0))
    with pytest.raises(ValueError):
        EdgeData((0, 0), (0, 0), 1.0, (0, 0))
