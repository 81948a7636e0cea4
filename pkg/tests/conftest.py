"""Shared helpers: dense Fock-space operators built by explicit sign counting.

These helpers never call the package's Jordan-Wigner code; they construct the
fermionic ladder operators directly on occupation-number basis states, with
site 0 as the most significant tensor factor.
"""

from __future__ import annotations

import numpy as np
import pytest

from fermichain.fermionchain import FermionHamiltonianSpec


def fock_annihilators(n_sites: int, tls_site: int | None = None) -> list[np.ndarray | None]:
    """Dense ``f_k`` on ``2**n_sites`` states; the TLS site gets ``None``.

    ``f_k |n> = (-1)^(sum_{l<k, l fermionic} (1 + n_l)) |n - e_k>`` for
    ``n_k = 1``. The extra ``(-1)`` per preceding mode is a gauge choice that
    makes nearest-neighbour hopping ``f_n^+ f_{n+1}`` equal to
    ``-sigma^+ sigma^-``; it leaves the anticommutation relations intact.
    """
    dim = 2**n_sites
    ops: list[np.ndarray | None] = []
    for k in range(n_sites):
        if k == tls_site:
            ops.append(None)
            continue
        f = np.zeros((dim, dim))
        for state in range(dim):
            bits = [(state >> (n_sites - 1 - l)) & 1 for l in range(n_sites)]
            if not bits[k]:
                continue
            sign = (-1) ** sum(1 + bits[l] for l in range(k) if l != tls_site)
            target = state - (1 << (n_sites - 1 - k))
            f[target, state] = sign
        ops.append(f)
    return ops


def tls_operator(a: np.ndarray, n_sites: int, site: int) -> np.ndarray:
    mats = [np.eye(2)] * n_sites
    mats = mats[:site] + [np.asarray(a)] + mats[site + 1 :]
    out = np.ones((1, 1))
    for m in mats:
        out = np.kron(out, m)
    return out


def fock_hamiltonian(spec: FermionHamiltonianSpec) -> np.ndarray:
    """Dense many-body Hamiltonian of a model spec in the Fock basis."""
    n = spec.n_sites
    f = fock_annihilators(n, spec.tls_site)
    dim = 2**n
    H = np.zeros((dim, dim), dtype=complex)
    for t in spec.terms:
        c = t.coeff
        if t.kind == "number":
            k = t.sites[0]
            H += c * f[k].T @ f[k]
        elif t.kind == "hopping":
            i, j = t.sites
            m = c * f[i].T @ f[j]
            H += m + m.conj().T
        elif t.kind == "pairing":
            i, j = t.sites
            m = c * f[i].T @ f[j].T
            H += m + m.conj().T
        elif t.kind == "density_density":
            i, j = t.sites
            H += c * (f[i].T @ f[i]) @ (f[j].T @ f[j])
        elif t.kind == "tls_field":
            H += tls_operator(c, n, t.sites[0])
        elif t.kind == "tls_density":
            a, b = t.sites
            j = b if a == spec.tls_site else a
            H += tls_operator(c, n, spec.tls_site) @ (f[j].T @ f[j])
        else:
            raise ValueError(t.kind)
    return H


def parity_operator(n_sites: int, tls_site: int | None = None) -> np.ndarray:
    z = [np.eye(2) if k == tls_site else np.diag([1.0, -1.0]) for k in range(n_sites)]
    out = np.ones((1, 1))
    for m in z:
        out = np.kron(out, m)
    return out


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


# one line per acceptance criterion, filled by test_acceptance and echoed after the run
ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])
