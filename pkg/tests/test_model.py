import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from squid_tip import model
from squid_tip.errors import ParameterError

from oracles import brute_force_extrema

# frozen with 30-digit mpmath: 2 pi L Ic / phi0 and the root of U'(x) = 0 near 0.65
BETA_REF = 1.17895145315614287851
X_RIGHT_REF = 0.655560539051671639
BARRIER_REF_J = 4.69533323029017474e-23


def test_constants():
    c = model.Constants()
    assert c.h == 2 * math.pi * c.hbar
    assert c.phi0 > 0
    with pytest.raises(ParameterError):
        model.Constants(hbar=-1.0)


def test_beta_L_reference(reference):
    # direct arithmetic: 2 * pi * 97e-12 * 4e-6 / 2.067834e-15
    assert model.beta_L(reference) == pytest.approx(2 * math.pi * 3.88e-16 / 2.067834e-15, rel=1e-14)
    assert model.beta_L(reference) == pytest.approx(BETA_REF, rel=1e-13)
    assert model.beta_L(reference) == pytest.approx(1.179, rel=1e-3)


def test_beta_L_limits(reference):
    tiny = model.SquidParams(L=1e-30, C=reference.C, Ic=reference.Ic)
    assert model.beta_L(tiny) < 1e-17
    double = model.SquidParams(L=reference.L, C=reference.C, Ic=2 * reference.Ic)
    assert model.beta_L(double) == pytest.approx(2 * model.beta_L(reference), rel=1e-15)


@pytest.mark.parametrize("field", ["L", "C", "Ic"])
@pytest.mark.parametrize("value", [0.0, -1e-12, float("nan"), float("inf")])
def test_invalid_params(reference, field, value):
    bad = model.SquidParams(**{**reference.__dict__, field: value})
    with pytest.raises(ParameterError):
        bad.validate()


def test_single_well_rejected(reference):
    with pytest.raises(ParameterError, match="double well"):
        model.SquidParams(L=reference.L, C=reference.C, Ic=2e-6).validate()


def test_potential_barrier_top(reference):
    phi0 = model.PHI0
    u = model.potential(reference, 0.0, phi0 / 2)
    assert u == pytest.approx(reference.Ic * phi0 / (2 * math.pi), rel=1e-14)


def test_potential_rejects_eps(reference):
    with pytest.raises(ParameterError):
        model.potential(reference, 0.5, 0.0)
    with pytest.raises(ParameterError):
        model.potential(reference, -0.01, 0.0)


@settings(max_examples=50, deadline=None)
@given(eps=st.floats(0.0, 0.49))
def test_potential_symmetry(reference, eps):
    rng = np.random.default_rng(7)
    d = rng.uniform(-0.6, 0.6, 1000) * model.PHI0
    up = model.potential(reference, eps, model.PHI0 / 2 + d)
    dn = model.potential(reference, eps, model.PHI0 / 2 - d)
    scale = reference.Ic * model.PHI0
    assert np.max(np.abs(up - dn)) <= 1e-14 * scale


def test_extrema_against_brute_force(reference, scaled):
    phi0 = model.PHI0
    u = lambda p: model.potential(reference, 0.0, p)
    mins, maxs = brute_force_extrema(u, 0.0, phi0, n=20001)
    mins = sorted(m / phi0 for m in mins)
    assert len(mins) == 2 and len(maxs) == 1
    geo = model.well_geometry(scaled)
    assert geo.x_left == pytest.approx(mins[0], abs=1e-8)
    assert geo.x_right == pytest.approx(mins[1], abs=1e-8)
    assert geo.x_right == pytest.approx(X_RIGHT_REF, abs=1e-8)
    assert geo.x_left < 0.5 < geo.x_right
    barrier_brute = u(phi0 / 2) - u(mins[1] * phi0)
    assert geo.barrier_height * scaled.energy_unit == pytest.approx(barrier_brute, rel=1e-9)
    assert barrier_brute == pytest.approx(BARRIER_REF_J, rel=1e-9)


def test_scaled_potential_matches_si(reference, scaled):
    phi = np.linspace(-0.2, 1.2, 101)
    si = model.potential(reference, 0.013, phi * model.PHI0)
    assert np.allclose(scaled.potential(phi, 0.013) * scaled.energy_unit, si, rtol=1e-12,
                       atol=1e-12 * np.abs(si).max())


@pytest.mark.parametrize("eps", [0.0, 0.005, 0.01, 0.02])
def test_double_well_sign_changes(scaled, eps):
    x = np.linspace(1e-6, 1 - 1e-6, 200_001)
    du = np.diff(scaled.potential(x, eps))
    changes = np.nonzero(np.diff(np.sign(du)))[0]
    kinds = [("max" if du[i] > 0 else "min") for i in changes]
    assert kinds == ["min", "max", "min"]


def test_barrier_decreases_with_eps(scaled):
    heights = [model.well_geometry(scaled, e).barrier_height for e in np.linspace(0, 0.1, 11)]
    assert np.all(np.diff(heights) < 0)
    x = np.linspace(0.01, 0.99, 7)
    mags = [np.abs((1 - e) * scaled.beta_L * np.cos(2 * np.pi * x)) for e in (0.0, 0.01, 0.02)]
    assert np.all(mags[0] > mags[1]) and np.all(mags[1] > mags[2])


def test_nondimensionalize_reference(reference):
    s = model.nondimensionalize(reference)
    assert s.beta_L == pytest.approx(BETA_REF, rel=1e-13)
    assert s.f_x == 0.5
    assert s.time_unit == pytest.approx(model.HBAR / s.energy_unit, rel=1e-15)


@settings(max_examples=100, deadline=None)
@given(L=st.floats(50e-12, 500e-12), C=st.floats(1e-15, 500e-15),
       beta=st.floats(1.01, 5.0), fx=st.floats(0.3, 0.7))
def test_round_trip(L, C, beta, fx):
    Ic = beta * model.PHI0 / (2 * math.pi * L)
    p = model.SquidParams(L=L, C=C, Ic=Ic, phi_x=fx * model.PHI0)
    back = model.nondimensionalize(p).to_si()
    for name in ("L", "C", "Ic", "phi_x"):
        assert getattr(back, name) == pytest.approx(getattr(p, name), rel=1e-12)
