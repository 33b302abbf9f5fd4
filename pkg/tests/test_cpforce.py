import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from mirrorcp.cpforce import (
    ForceBreakdown,
    cp_force_dispersive,
    cp_force_far_asymptote,
    cp_force_gradient,
    cp_force_high_temperature_asymptote,
    cp_force_near_asymptote,
    cp_force_quadrature_oracle,
    cp_force_retarded,
    cp_force_thermal_dispersive,
    cp_force_thermal_retarded,
    cp_force_thermal_total,
    cp_force_total,
    dispersive_bracket,
    static_polarizability,
)
from mirrorcp.errors import DomainError, PoleError
from mirrorcp.params import AtomParams, ThermalConfig

P = AtomParams()

# Vacuum totals at q = m = Omega = 1, frozen from the imaginary-frequency
# oracle in tests/oracles.py (30-digit mpmath).
PINNED = {
    0.3: -3.232049542396134,
    1.0: -0.01958049377307635,
    3.0: -1.3044187147568482e-4,
    10.0: -3.7114978775976484e-07,
}


@pytest.mark.parametrize("z,value", sorted(PINNED.items()))
def test_regression_pins(z, value):
    assert cp_force_total(z, P).total == pytest.approx(value, rel=1e-12)


@pytest.mark.parametrize("z", [0.01, 0.05, 0.3, 1.0, 2.7, 10.0, 40.0])
def test_total_against_imaginary_frequency_oracle(z):
    ref = oracles.vacuum_force_imaginary_frequency(z)
    assert cp_force_total(z, P).total == pytest.approx(ref, rel=1e-9)


@pytest.mark.parametrize("q,m,Omega", [(2.0, 3.0, 1.0), (1.0, 1.0, 2.5), (0.5, 0.2, 0.3)])
def test_parameter_dependence_against_oracle(q, m, Omega):
    p = AtomParams(q=q, m=m, Omega=Omega)
    for z in (0.4, 3.0):
        ref = oracles.vacuum_force_imaginary_frequency(z, q, m, Omega)
        assert cp_force_total(z, p).total == pytest.approx(ref, rel=1e-9)


@given(st.floats(0.01, 50.0), st.floats(0.2, 5.0))
@settings(max_examples=50, deadline=None)
def test_dimensionless_scaling(w, Omega):
    """``F(z) = (q**2 Omega**3 / m) Fhat(Omega z)``."""
    p = AtomParams(q=1.3, m=0.7, Omega=Omega)
    lhs = cp_force_total(w / Omega, p).total
    rhs = p.q**2 * Omega**3 / p.m * cp_force_total(w, P).total
    assert lhs == pytest.approx(rhs, rel=1e-10)


def test_standard_bracket_is_the_total():
    z = np.geomspace(0.05, 80, 40)
    tot = np.array([b.total for b in cp_force_total(z, P)])
    std = cp_force_dispersive(z, P, convention="standard")
    np.testing.assert_allclose(std, tot, rtol=1e-8, atol=0)


def test_retarded_piece_is_third_derivative():
    # F1 = q^2/(4 pi m Omega) d^3/dR^3 [cos(Omega R)/R], R = 2z
    import mpmath as mp

    for z in (0.3, 2.0):
        ref = mp.diff(lambda R: mp.cos(R) / R, 2 * z, 3) / (4 * mp.pi)
        assert cp_force_retarded(z, P) == pytest.approx(float(ref), rel=1e-12)


def test_bracket_limits():
    assert dispersive_bracket(1e4, "standard") == pytest.approx(24 / 2e4, rel=1e-4)
    with pytest.raises(ValueError):
        dispersive_bracket(1.0, "other")


class TestAsymptotes:
    @pytest.mark.parametrize("z", [1e-3, 3e-3, 1e-2])
    def test_near(self, z):
        r = cp_force_total(z, P).total / cp_force_near_asymptote(z, P)
        assert abs(r - 1) < 5e-2

    @pytest.mark.parametrize("z", [50.0, 100.0, 300.0])
    def test_far(self, z):
        r = cp_force_total(z, P).total / cp_force_far_asymptote(z, P)
        assert abs(r - 1) < 5e-2

    def test_far_value(self):
        assert cp_force_far_asymptote(100.0, P) == pytest.approx(-3.7995443865876666e-12, rel=1e-12)

    def test_near_corrections_shrink(self):
        errs = [abs(cp_force_total(z, P).total / cp_force_near_asymptote(z, P) - 1) for z in (1e-2, 1e-3, 1e-4)]
        assert errs[0] > errs[1] > errs[2]


def test_attractive_everywhere():
    z = np.geomspace(1e-3, 1e3, 200)
    assert all(b.total < 0 for b in cp_force_total(z, P))


class TestQuadratureOracle:
    @pytest.mark.parametrize("z", [0.3, 1.0, 3.0])
    def test_long_time(self, z):
        o = cp_force_quadrature_oracle(z, math.inf, P)
        b = cp_force_total(z, P)
        assert o.total == pytest.approx(b.total, rel=1e-9)
        assert o.f_cp1 == pytest.approx(b.f_cp1, rel=1e-12)

    def test_before_light_bounce(self):
        o = cp_force_quadrature_oracle(1.0, 1.5, P)
        assert o.f_cp1 == 0.0
        assert math.isfinite(o.f_cp2)

    def test_pole_time_rejected(self):
        with pytest.raises(PoleError):
            cp_force_quadrature_oracle(1.0, 2.0, P)

    def test_negative_time(self):
        with pytest.raises(DomainError):
            cp_force_quadrature_oracle(1.0, -1.0, P)


class TestThermal:
    def test_vacuum_reduction_exact(self):
        for z in (0.3, 1.0, 7.0):
            b = cp_force_thermal_total(z, P, ThermalConfig())
            v = cp_force_total(z, P)
            assert b.total == v.total
            assert cp_force_thermal_retarded(z, P, math.inf) == cp_force_retarded(z, P)
            assert cp_force_thermal_dispersive(z, P, math.inf) == cp_force_dispersive(z, P)

    def test_low_temperature_approaches_vacuum(self):
        for z in (0.3, 3.0):
            d = cp_force_thermal_dispersive(z, P, 400.0)
            assert d == pytest.approx(cp_force_dispersive(z, P), rel=1e-5, abs=1e-9 * abs(cp_force_total(z, P).total))

    @pytest.mark.parametrize("beta,z", [(0.5, 1.0), (2.0, 0.3), (7.0, 3.0)])
    def test_equilibrium_against_matsubara(self, beta, z):
        b = cp_force_thermal_total(z, P, ThermalConfig(beta=beta, beta_bar=beta))
        assert b.total == pytest.approx(oracles.equilibrium_force_matsubara(z, beta), rel=1e-9)

    @pytest.mark.parametrize("beta,z", [(2.0, 1.0), (0.7, 0.3)])
    def test_field_only_against_real_axis_quadrature(self, beta, z):
        th = ThermalConfig(beta=beta)
        o = cp_force_quadrature_oracle(z, math.inf, P, th)
        assert cp_force_thermal_dispersive(z, P, beta) == pytest.approx(o.f_cp2, rel=1e-8)

    def test_oscillator_temperature_scales_retarded_piece(self):
        b = cp_force_thermal_total(2.0, P, ThermalConfig(beta_bar=1.0))
        f1 = cp_force_retarded(2.0, P)
        assert b.f_thermal_osc == pytest.approx((1 / math.tanh(0.5) - 1) * f1, rel=1e-14)
        assert b.f_thermal_field == 0.0

    def test_high_temperature_equilibrium(self):
        beta, z = 0.01, 50.0
        b = cp_force_thermal_total(z, P, ThermalConfig(beta=beta, beta_bar=beta))
        ref = cp_force_high_temperature_asymptote(z, P, beta)
        assert b.total == pytest.approx(ref, rel=1e-3)

    def test_array_input(self):
        out = cp_force_thermal_dispersive(np.array([0.5, 1.0]), P, 2.0)
        assert out.shape == (2,)


class TestGradient:
    @staticmethod
    def _fd(z, p, th):
        def F(x):
            return cp_force_thermal_total(x, p, th).total

        h = 1e-3 * z
        d1 = (F(z + h) - F(z - h)) / (2 * h)
        d2 = (F(z + h / 2) - F(z - h / 2)) / h
        return (4 * d2 - d1) / 3

    @pytest.mark.parametrize("z", [0.3, 1.0, 3.0])
    @pytest.mark.parametrize("th", [ThermalConfig(), ThermalConfig(beta=2.0, beta_bar=1.0)])
    def test_against_finite_differences(self, z, th):
        assert cp_force_gradient(z, P, th) == pytest.approx(self._fd(z, P, th), rel=1e-7)

    def test_near_field(self):
        z = 1e-3
        assert cp_force_gradient(z, P) == pytest.approx(12 / (32 * math.pi * z**5), rel=1e-2)


def test_breakdown_record():
    b = ForceBreakdown(1.0, 1.0, 2.0, 3.0, 4.0)
    assert b.total == 10.0
    assert b.as_dict()["total"] == 10.0


@pytest.mark.parametrize("bad", [0.0, -1.0, math.inf, math.nan])
def test_domain(bad):
    with pytest.raises(DomainError):
        cp_force_total(bad, P)
    with pytest.raises(DomainError):
        cp_force_gradient(bad, P)


def test_polarizability():
    assert static_polarizability(AtomParams(q=2, m=2, Omega=2)) == pytest.approx(1 / (8 * math.pi))
