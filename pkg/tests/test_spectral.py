import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import quad

from fermichain.errors import EmptySupport, ExtrapolationError, NonzeroChemicalPotential, Unsupported
from fermichain.spectral import (
    SpectralDensity,
    ThermalParameters,
    fermi_dirac,
    reflect,
    thermalized_density,
    thermofield_split,
)

BETAS = [0.0, 0.01, 0.1, 1.0, 10.0, 100.0, math.inf]


def mass(J):
    return sum(quad(lambda w: float(J(w)), a, b, epsabs=1e-14, epsrel=1e-13, limit=200)[0] for a, b in J.intervals)


class TestFermiDirac:
    def test_symmetry_point(self):
        for beta in [0.1, 1.0, 37.0]:
            assert fermi_dirac(0.3, ThermalParameters(beta, 0.3)) == 0.5

    def test_infinite_temperature(self):
        w = np.linspace(-5, 5, 11)
        assert np.all(fermi_dirac(w, ThermalParameters(0.0, 1.0)) == 0.5)

    def test_zero_temperature_step(self):
        p = ThermalParameters(math.inf, 0.2)
        assert fermi_dirac(-1.0, p) == 1.0
        assert fermi_dirac(1.0, p) == 0.0

    def test_overflow_safe(self):
        with np.errstate(over="raise"):
            v = fermi_dirac(np.array([-1e6, 1e6]), ThermalParameters(1e4, 0.0))
        assert v[0] == 1.0 and v[1] == 0.0

    @given(st.floats(0.01, 1e3), st.floats(-2, 2))
    def test_monotone(self, beta, mu):
        w = np.linspace(-3, 3, 401)
        f = fermi_dirac(w, ThermalParameters(beta, mu))
        assert np.all(np.diff(f) <= 1e-15)


class TestDensities:
    def test_constant_and_newns_values(self):
        J = SpectralDensity.constant(0.1)
        assert J(0.3) == 0.1 and J(1.5) == 0.0
        N = SpectralDensity.newns(0.5)
        assert N(1.0) == pytest.approx(0.25)
        assert N(0.0) == 0.0 and N(2.5) == 0.0

    def test_empty_support(self):
        with pytest.raises(EmptySupport):
            SpectralDensity.constant(0.1, (1.0, 1.0))

    def test_tabulated(self):
        w = np.linspace(0, 2, 21)
        J = SpectralDensity.tabulated(w, np.sin(np.pi * w / 2) ** 2)
        assert J(1.0) == pytest.approx(1.0)
        assert np.all(J(np.linspace(0, 2, 1001)) >= 0)
        with pytest.raises(ExtrapolationError):
            J(2.5)

    def test_config_round_trip(self):
        for J in [SpectralDensity.constant(0.4, (0, 2)), SpectralDensity.newns(0.5)]:
            K = SpectralDensity.from_config(J.to_config())
            w = np.linspace(-0.5, 2.5, 31)
            np.testing.assert_array_equal(J(w), K(w))


class TestThermalized:
    J = SpectralDensity.constant(0.4, (0.0, 2.0))

    def test_beta_zero(self):
        w = np.linspace(-2, 2, 41)
        Jb = thermalized_density(self.J, ThermalParameters(0.0))
        np.testing.assert_allclose(Jb(w), 0.5 * self.J(np.abs(w)), atol=1e-15)

    def test_beta_infinite(self):
        Jb = thermalized_density(self.J, ThermalParameters(math.inf))
        assert Jb(0.7) == pytest.approx(0.4) and Jb(-0.7) == 0.0

    @pytest.mark.parametrize("beta", BETAS)
    def test_pointwise_sum_and_positivity(self, beta):
        Jb = thermalized_density(self.J, ThermalParameters(beta))
        w = np.linspace(0.001, 2, 300)
        np.testing.assert_allclose(Jb(w) + Jb(-w), self.J(w), atol=1e-14)
        assert np.all(Jb(np.linspace(-2, 2, 1001)) >= 0)
        assert Jb.support == (-2.0, 2.0)

    def test_rejects_chemical_potential(self):
        with pytest.raises(NonzeroChemicalPotential):
            thermalized_density(self.J, ThermalParameters(1.0, 0.1))

    def test_rejects_bosons(self):
        with pytest.raises(Unsupported):
            thermalized_density(self.J, ThermalParameters(1.0), statistics="boson")


class TestThermofield:
    J = SpectralDensity.newns(0.5)

    def test_zero_temperature(self):
        J1, J2 = thermofield_split(self.J, ThermalParameters(math.inf, 0.0))
        w = np.linspace(0, 2, 51)
        np.testing.assert_allclose(J1(w), self.J(w), atol=1e-15)
        assert np.all(J2(w) == 0)

    def test_infinite_temperature(self):
        J1, J2 = thermofield_split(self.J, ThermalParameters(0.0, 0.3))
        w = np.linspace(0, 2, 51)
        np.testing.assert_allclose(J1(w), 0.5 * self.J(w), atol=1e-15)
        np.testing.assert_allclose(J2(w), 0.5 * self.J(w), atol=1e-15)

    @pytest.mark.parametrize("beta", [0.01, 1.0, 10.0, 100.0])
    def test_matches_thermalized_branches(self, beta):
        p = ThermalParameters(beta, 0.0)
        J1, J2 = thermofield_split(self.J, p)
        Jb = thermalized_density(self.J, p)
        w = np.linspace(0, 2, 400)
        np.testing.assert_allclose(J1(w), Jb(w), atol=1e-12)
        np.testing.assert_allclose(J2(w), Jb(-w), atol=1e-12)
        np.testing.assert_allclose(reflect(J2)(-w), J2(w), atol=0)

    @pytest.mark.parametrize("beta,mu", [(0.5, 0.0), (3.0, 0.7), (20.0, 1.2)])
    def test_mass_conservation(self, beta, mu):
        J1, J2 = thermofield_split(self.J, ThermalParameters(beta, mu))
        assert mass(J1) + mass(J2) == pytest.approx(mass(self.J), abs=1e-10)
