import itertools

import numpy as np
import pytest

from conftest import fock_annihilators, fock_hamiltonian, parity_operator
from fermichain.chainmap import ChainParameters, chain_coefficients, chain_hamiltonian_params
from fermichain.errors import NonAdjacentTerm
from fermichain.oracle import bdg_hamiltonian, quadratic_form
from fermichain.fermionchain import (
    NUMBER,
    SIGMA_MINUS,
    SIGMA_PLUS,
    SIGMA_Z,
    FermionHamiltonianSpec,
    build_dimer,
    build_modified_rlm,
    build_quantum_dot,
    build_rlm,
    jordan_wigner_hamiltonian,
    jordan_wigner_observable,
)
from fermichain.spectral import SpectralDensity, ThermalParameters, reflect, thermalized_density, thermofield_split


def kron(*ms):
    out = np.ones((1, 1))
    for m in ms:
        out = np.kron(out, m)
    return out


def chain(J, n):
    return chain_hamiltonian_params(chain_coefficients(J, n))


FLAT = SpectralDensity.constant(0.1)
POS = SpectralDensity.constant(0.4, (0.0, 2.0))
NEWNS = SpectralDensity.newns(0.5)


def builders():
    tf1, tf2 = thermofield_split(POS, ThermalParameters(2.0))
    return {
        "rlm": build_rlm(0.3, chain(FLAT, 5)),
        "rlm_bare": build_rlm(-0.2, None),
        "modified_rlm": build_modified_rlm(0.3, chain(POS, 5)),
        "modified_rlm_thermalized": build_modified_rlm(0.3, chain(thermalized_density(POS, ThermalParameters(1.0)), 6)),
        "modified_rlm_thermofield": build_modified_rlm(0.3, chain(tf1, 3), chain(reflect(tf2), 3)),
        "quantum_dot": build_quantum_dot(0.2, 0.6, 0.1, chain(FLAT, 5)),
        "dimer": build_dimer(0.6, 0.01, 0.1, 0.0, chain(NEWNS, 3), chain(NEWNS, 3)),
        "dimer_U2": build_dimer(0.6, 0.01, 0.1, 2.0, chain(NEWNS, 3), chain(NEWNS, 3)),
    }


class TestJordanWigner:
    def test_number_term(self):
        spec = FermionHamiltonianSpec(["a"])
        spec.add("number", [0], 0.7)
        H = jordan_wigner_hamiltonian(spec)
        np.testing.assert_array_equal(H.to_dense(), 0.7 * SIGMA_PLUS @ SIGMA_MINUS)

    def test_hopping_term(self):
        spec = FermionHamiltonianSpec(["a", "b"])
        spec.add("hopping", [0, 1], 1.0)
        H = jordan_wigner_hamiltonian(spec).to_dense()
        expect = -(kron(SIGMA_PLUS, SIGMA_MINUS) + kron(SIGMA_MINUS, SIGMA_PLUS))
        np.testing.assert_array_equal(H, expect)
        np.testing.assert_allclose(H, fock_hamiltonian(spec), atol=0)

    def test_pairing_three_modes(self):
        spec = FermionHamiltonianSpec(["a", "b", "c"])
        spec.add("pairing", [1, 2], 0.8 - 0.3j)
        H = jordan_wigner_hamiltonian(spec).to_dense()
        assert np.abs(H - fock_hamiltonian(spec)).max() < 1e-15
        c = 0.8 - 0.3j
        expect = -kron(np.eye(2), c * kron(SIGMA_PLUS, SIGMA_PLUS) + np.conj(c) * kron(SIGMA_MINUS, SIGMA_MINUS))
        np.testing.assert_allclose(H, expect, atol=0)

    def test_reordered_terms(self):
        spec = FermionHamiltonianSpec(["a", "b"])
        spec.add("hopping", [1, 0], 0.5j)
        spec.add("pairing", [1, 0], 0.25)
        assert np.abs(jordan_wigner_hamiltonian(spec).to_dense() - fock_hamiltonian(spec)).max() < 1e-15

    def test_non_adjacent_rejected(self):
        spec = FermionHamiltonianSpec(["a", "b", "c"])
        spec.add("hopping", [0, 2], 1.0)
        with pytest.raises(NonAdjacentTerm):
            jordan_wigner_hamiltonian(spec)

    def test_hermitian_terms(self):
        H = jordan_wigner_hamiltonian(builders()["modified_rlm_thermofield"])
        for _, m in H.one_site_terms + H.two_site_terms:
            assert np.abs(m - m.conj().T).max() <= 1e-12


class TestObservables:
    def test_number(self):
        mpo = jordan_wigner_observable([("n", 0)], 1)
        assert mpo.bond_dims == []
        np.testing.assert_array_equal(mpo.to_dense(), NUMBER)

    def test_string(self):
        mpo = jordan_wigner_observable([("cdag", 0), ("c", 2)], 3)
        assert mpo.bond_dims == [1, 1]
        np.testing.assert_allclose(mpo.to_dense(), -kron(SIGMA_PLUS, SIGMA_Z, SIGMA_MINUS), atol=0)

    def test_matches_fock_operators(self, rng):
        n = 4
        f = fock_annihilators(n)
        for i, j in itertools.product(range(n), repeat=2):
            mpo = jordan_wigner_observable([("cdag", i), ("c", j)], n)
            np.testing.assert_allclose(mpo.to_dense(), f[i].T @ f[j], atol=1e-15)
        mpo = jordan_wigner_observable([("cdag", 0), ("cdag", 3), ("c", 1)], n)
        np.testing.assert_allclose(mpo.to_dense(), f[0].T @ f[3].T @ f[1], atol=1e-15)

    def test_current(self):
        g = 0.1
        mpo = jordan_wigner_observable([(g / 2j, [("cdag", 1), ("c", 2)]), (-g / 2j, [("cdag", 2), ("c", 1)])], 4)
        local = (g / 2j) * (-kron(SIGMA_PLUS, SIGMA_MINUS) + kron(SIGMA_MINUS, SIGMA_PLUS))
        np.testing.assert_allclose(mpo.to_dense(), kron(np.eye(2), local, np.eye(2)), atol=1e-15)
        assert mpo.bond_dims == [1, 2, 1]

    def test_tls_excluded_from_string(self):
        f = fock_annihilators(3, tls_site=0)
        mpo = jordan_wigner_observable([("cdag", 1), ("c", 2)], 3, tls_site=0)
        np.testing.assert_allclose(mpo.to_dense(), f[1].T @ f[2], atol=1e-15)


class TestBuilders:
    @pytest.mark.parametrize("name", list(builders()))
    def test_fock_equivalence(self, name):
        spec = builders()[name]
        assert spec.n_sites <= 8
        Hs = jordan_wigner_hamiltonian(spec).to_dense()
        Hf = fock_hamiltonian(spec)
        # the Fock basis is ordered like the spin basis, so the matrices coincide
        assert np.abs(Hs - Hf).max() < 1e-12
        np.testing.assert_allclose(np.linalg.eigvalsh(Hs), np.linalg.eigvalsh(Hf), atol=1e-10)

    @pytest.mark.parametrize("name", list(builders()))
    def test_parity_conserved(self, name):
        spec = builders()[name]
        H = fock_hamiltonian(spec)
        P = parity_operator(spec.n_sites, spec.tls_site)
        assert np.abs(H @ P - P @ H).max() <= 1e-12

    @pytest.mark.parametrize("name", ["rlm", "dimer", "modified_rlm"])
    def test_subset_sums(self, name):
        spec = {
            "rlm": build_rlm(0.3, chain(FLAT, 4)),
            "dimer": build_dimer(0.6, 0.01, 0.1, 0.0, chain(NEWNS, 2), chain(NEWNS, 2)),
            "modified_rlm": build_modified_rlm(0.3, chain(POS, 4)),
        }[name]
        A, B = quadratic_form(spec)
        m = A.shape[0]
        # normal-mode energies of the BdG problem; ground energy shifts by (tr A - sum eps)/2
        eps = np.linalg.eigvalsh(bdg_hamiltonian(A, B))[m:]
        e0 = 0.5 * (np.trace(A).real - eps.sum())
        sums = sorted(e0 + sum(s) for r in range(m + 1) for s in itertools.combinations(eps, r))
        spectrum = np.linalg.eigvalsh(jordan_wigner_hamiltonian(spec).to_dense())
        np.testing.assert_allclose(spectrum, sums, atol=1e-10)

    def test_rlm_example(self):
        spec = build_rlm(0.0, chain(FLAT, 2))
        assert spec.site_order == ["d", "b0", "b1"]
        A, _ = quadratic_form(spec)
        np.testing.assert_allclose(np.diag(A).real, 0.0, atol=1e-14)
        assert A[0, 1].real == pytest.approx(0.25231, abs=1e-5)
        assert A[1, 2].real == pytest.approx(0.57735, abs=1e-5)

    def test_rlm_without_chain(self):
        spec = build_rlm(-0.2, None)
        np.testing.assert_allclose(jordan_wigner_hamiltonian(spec).to_dense(), -0.2 * NUMBER)

    def test_rlm_ground_state_half_filled(self):
        spec = build_rlm(0.0, chain(FLAT, 5))
        H = jordan_wigner_hamiltonian(spec).to_dense()
        e, v = np.linalg.eigh(H)
        ground = v[:, np.abs(e - e[0]) < 1e-10]
        n0 = jordan_wigner_observable([("n", 0)], spec.n_sites).to_dense()
        # the two degenerate ground states have occupations summing to one
        occ = np.trace(ground.conj().T @ n0 @ ground).real / ground.shape[1]
        assert occ == pytest.approx(0.5, abs=1e-10)

    def test_modified_rlm_decoupled(self):
        spec = build_modified_rlm(0.3, ChainParameters(np.array([0.5, 1.0]), np.array([0.3]), 0.0))
        H = jordan_wigner_hamiltonian(spec).to_dense()
        n0 = jordan_wigner_observable([("n", 0)], 3).to_dense()
        assert np.abs(H @ n0 - n0 @ H).max() < 1e-15

    def test_modified_rlm_terms(self):
        spec = build_modified_rlm(0.3, chain(POS, 2))
        kinds = [(t.kind, t.sites) for t in spec.terms]
        assert ("hopping", (0, 1)) in kinds and ("pairing", (0, 1)) in kinds
        eta = [t.coeff for t in spec.terms if t.sites == (0, 1)]
        assert eta[0] == eta[1] > 0

    def test_quantum_dot_decoupled_tls(self):
        spec = build_quantum_dot(0.2, 0.0, 0.0, chain(FLAT, 3))
        H = jordan_wigner_hamiltonian(spec).to_dense()
        Z = kron(np.diag([1.0, -1.0]), np.eye(2**4))
        assert np.abs(H @ Z - Z @ H).max() < 1e-15
        assert spec.site_order[:2] == ["tls", "d"]

    def test_dimer_layout_and_interaction(self):
        spec = build_dimer(0.6, 0.01, 0.1, 4.0, chain(NEWNS, 2), chain(NEWNS, 3))
        assert spec.site_order == ["L1", "L0", "dL", "dR", "R0", "R1", "R2"]
        only = build_dimer(0.0, 0.0, 0.0, 4.0, None, None)
        e = np.linalg.eigvalsh(jordan_wigner_hamiltonian(only).to_dense())
        np.testing.assert_allclose(e, [0, 0, 0, 4.0], atol=1e-15)

    def test_dimer_independent_halves(self):
        left, right = chain(NEWNS, 2), chain(NEWNS, 2)
        spec = build_dimer(0.6, 0.01, 0.0, 0.0, left, right)
        e = np.linalg.eigvalsh(jordan_wigner_hamiltonian(spec).to_dense())
        a = np.linalg.eigvalsh(jordan_wigner_hamiltonian(build_rlm(0.605, left)).to_dense())
        b = np.linalg.eigvalsh(jordan_wigner_hamiltonian(build_rlm(0.595, right)).to_dense())
        np.testing.assert_allclose(e, np.sort(np.add.outer(a, b).ravel()), atol=1e-12)


def test_fock_helper_obeys_car():
    f = fock_annihilators(4, tls_site=1)
    modes = [0, 2, 3]
    for i, j in itertools.product(modes, repeat=2):
        assert np.abs(f[i] @ f[j] + f[j] @ f[i]).max() == 0
        anti = f[i] @ f[j].T + f[j].T @ f[i]
        np.testing.assert_array_equal(anti, np.eye(16) * (i == j))
