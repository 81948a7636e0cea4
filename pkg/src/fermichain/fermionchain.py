"""Fermionic model Hamiltonians and their Jordan-Wigner spin-chain images.

Local spin basis: index 0 is the empty mode, index 1 the occupied mode, so
that ``SIGMA_PLUS`` creates a fermion and ``SIGMA_PLUS @ SIGMA_MINUS`` is the
number operator. ``SIGMA_Z`` is +1 on the occupied state; with this choice the
Jordan-Wigner map

    f_k -> (prod_{l<k} SIGMA_Z_l) SIGMA_MINUS_k

turns a nearest-neighbour hopping ``f_n^+ f_{n+1}`` into
``-SIGMA_PLUS_n SIGMA_MINUS_{n+1}``.

A two-level system (TLS) that is not a fermion may occupy one site of the
ordering; it is skipped by every parity string.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from numpy.typing import NDArray

from .chainmap import ChainParameters
from .errors import NonAdjacentTerm

__all__ = [
    "SIGMA_PLUS",
    "SIGMA_MINUS",
    "SIGMA_Z",
    "NUMBER",
    "IDENTITY",
    "PAULI_Z",
    "Term",
    "FermionHamiltonianSpec",
    "SpinChainHamiltonian",
    "jordan_wigner_hamiltonian",
    "jordan_wigner_observable",
    "build_rlm",
    "build_modified_rlm",
    "build_quantum_dot",
    "build_dimer",
]

SIGMA_PLUS = np.array([[0.0, 0.0], [1.0, 0.0]])
SIGMA_MINUS = SIGMA_PLUS.T.copy()
SIGMA_Z = np.diag([-1.0, 1.0])
NUMBER = SIGMA_PLUS @ SIGMA_MINUS
IDENTITY = np.eye(2)
# Pauli z of the TLS, in its own |0>, |1> basis
PAULI_Z = np.diag([1.0, -1.0])

_FERMION_KINDS = ("number", "hopping", "pairing", "density_density")
_TLS_KINDS = ("tls_field", "tls_density")


@dataclass(frozen=True)
class Term:
    """One Hamiltonian term; hermitian conjugates of hopping/pairing are implicit.

    kinds and meaning (``i < j`` in the site ordering)::

        number           c   * n_i
        hopping          c   * f_i^+ f_j   + h.c.
        pairing          c   * f_i^+ f_j^+ + h.c.
        density_density  c   * n_i n_j
        tls_field        A   acting on the TLS        (coeff is a 2x2 matrix)
        tls_density      A (x) n_j, TLS next to j     (coeff is a 2x2 matrix)
    """

    kind: str
    sites: tuple[int, ...]
    coeff: complex | NDArray


@dataclass
class FermionHamiltonianSpec:
    site_order: list[str]
    terms: list[Term] = field(default_factory=list)
    tls_site: int | None = None

    @property
    def n_sites(self) -> int:
        return len(self.site_order)

    def index(self, label: str) -> int:
        return self.site_order.index(label)

    def add(self, kind: str, sites: Sequence[int], coeff) -> None:
        sites = tuple(int(s) for s in sites)
        if kind not in _FERMION_KINDS + _TLS_KINDS:
            raise ValueError(f"unknown term kind {kind!r}")
        if kind in ("hopping", "pairing", "density_density") and sites[0] > sites[1]:
            # reorder so that the first index is leftmost
            i, j = sites[1], sites[0]
            if kind == "hopping":
                coeff = np.conj(coeff)
            elif kind == "pairing":
                coeff = -coeff
            sites = (i, j)
        for s in sites:
            if not 0 <= s < self.n_sites:
                raise IndexError(f"site {s} out of range")
        self.terms.append(Term(kind, sites, coeff))

    @property
    def fermion_sites(self) -> list[int]:
        return [i for i in range(self.n_sites) if i != self.tls_site]


@dataclass
class SpinChainHamiltonian:
    """Nearest-neighbour spin-1/2 Hamiltonian.

    ``two_site_terms`` hold 4x4 matrices acting on ``(site, site + 1)`` with
    the left site as the slower index.
    """

    n_sites: int
    one_site_terms: list[tuple[int, NDArray]] = field(default_factory=list)
    two_site_terms: list[tuple[int, NDArray]] = field(default_factory=list)

    def __post_init__(self):
        for s, m in self.one_site_terms:
            _check_hermitian(m, (2, 2))
            if not 0 <= s < self.n_sites:
                raise IndexError(f"site {s} out of range")
        for s, m in self.two_site_terms:
            _check_hermitian(m, (4, 4))
            if not 0 <= s < self.n_sites - 1:
                raise IndexError(f"bond {s} out of range")

    @property
    def dtype(self):
        mats = [m for _, m in self.one_site_terms + self.two_site_terms]
        return np.result_type(float, *mats) if mats else np.dtype(float)

    def bond_terms(self) -> list[NDArray]:
        """Hamiltonian as a list of 4x4 bond operators, one per bond.

        One-site terms are split evenly between their neighbouring bonds.
        """
        n = self.n_sites
        if n < 2:
            raise ValueError("bond decomposition needs at least two sites")
        dtype = self.dtype
        bonds = [np.zeros((4, 4), dtype=dtype) for _ in range(n - 1)]
        for s, m in self.two_site_terms:
            bonds[s] = bonds[s] + m
        for s, m in self.one_site_terms:
            if s == 0:
                bonds[0] = bonds[0] + np.kron(m, IDENTITY)
            elif s == n - 1:
                bonds[-1] = bonds[-1] + np.kron(IDENTITY, m)
            else:
                bonds[s - 1] = bonds[s - 1] + 0.5 * np.kron(IDENTITY, m)
                bonds[s] = bonds[s] + 0.5 * np.kron(m, IDENTITY)
        return bonds

    def to_dense(self) -> NDArray:
        """Full ``2^n x 2^n`` matrix; site 0 is the slowest index."""
        n = self.n_sites
        dim = 2**n
        out = np.zeros((dim, dim), dtype=self.dtype)
        for s, m in self.one_site_terms:
            out += np.kron(np.kron(np.eye(2**s), m), np.eye(2 ** (n - s - 1)))
        for s, m in self.two_site_terms:
            out += np.kron(np.kron(np.eye(2**s), m), np.eye(2 ** (n - s - 2)))
        return out


def _check_hermitian(m: NDArray, shape) -> None:
    m = np.asarray(m)
    if m.shape != shape:
        raise ValueError(f"expected a {shape} matrix, got {m.shape}")
    if not np.allclose(m, m.conj().T, atol=1e-12, rtol=0):
        raise ValueError("term matrix is not Hermitian")


def _adjacent(spec: FermionHamiltonianSpec, i: int, j: int) -> bool:
    return j == i + 1


def jordan_wigner_hamiltonian(spec: FermionHamiltonianSpec) -> SpinChainHamiltonian:
    """Map a nearest-neighbour fermionic Hamiltonian to a spin chain.

    Raises
    ------
    NonAdjacentTerm
        for any two-body term whose sites are not neighbours in the site
        ordering (such terms would carry a parity string).
    """
    H = SpinChainHamiltonian(spec.n_sites)
    tls = spec.tls_site
    for term in spec.terms:
        k, s, c = term.kind, term.sites, term.coeff
        if k in _FERMION_KINDS and tls is not None and tls in s:
            raise ValueError(f"{k} term acts on the TLS site")
        if k == "number":
            H.one_site_terms.append((s[0], np.real_if_close(c * NUMBER)))
        elif k == "tls_field":
            if s[0] != tls:
                raise ValueError("tls_field must act on the TLS site")
            H.one_site_terms.append((s[0], np.asarray(c)))
        elif k in ("hopping", "pairing", "density_density"):
            i, j = s
            if not _adjacent(spec, i, j):
                raise NonAdjacentTerm(f"{k} term between non-adjacent sites {i} and {j}")
            if k == "hopping":
                m = -(c * np.kron(SIGMA_PLUS, SIGMA_MINUS) + np.conj(c) * np.kron(SIGMA_MINUS, SIGMA_PLUS))
            elif k == "pairing":
                m = -(c * np.kron(SIGMA_PLUS, SIGMA_PLUS) + np.conj(c) * np.kron(SIGMA_MINUS, SIGMA_MINUS))
            else:
                m = c * np.kron(NUMBER, NUMBER)
            H.two_site_terms.append((i, np.real_if_close(m)))
        elif k == "tls_density":
            a, b = s
            if tls not in s:
                raise ValueError("tls_density must involve the TLS site")
            j = b if a == tls else a
            if abs(j - tls) != 1:
                raise NonAdjacentTerm("TLS coupling to a non-adjacent fermion")
            A = np.asarray(c)
            m = np.kron(A, NUMBER) if tls < j else np.kron(NUMBER, A)
            H.two_site_terms.append((min(tls, j), m))
        else:  # pragma: no cover - guarded by FermionHamiltonianSpec.add
            raise ValueError(k)
    H.__post_init__()
    return H


def _ladder_product(ops, n_sites, tls_site=None):
    """Site-wise local matrices of a product of fermionic ladder operators."""
    local = [np.eye(2, dtype=complex) for _ in range(n_sites)]
    for name, m in ops:
        if m == tls_site:
            raise ValueError("ladder operators cannot act on the TLS site")
        op = {"cdag": SIGMA_PLUS, "c": SIGMA_MINUS, "n": NUMBER}[name]
        for k in range(n_sites):
            if k < m and name != "n" and k != tls_site:
                local[k] = local[k] @ SIGMA_Z
            elif k == m:
                local[k] = local[k] @ op
    return local


def jordan_wigner_observable(terms, n_sites: int, tls_site: int | None = None):
    """MPO of a polynomial in fermionic ladder operators.

    Parameters
    ----------
    terms : sequence of ``(coeff, [(name, mode), ...])``
        each entry is ``coeff`` times the ordered product of ladder operators;
        ``name`` is ``"cdag"``, ``"c"`` or ``"n"``. A bare product may be
        passed as ``[(name, mode), ...]``.
    n_sites : total number of sites including an optional TLS.
    tls_site : site excluded from parity strings.

    Each monomial maps to a product operator with explicit sigma-z strings;
    the sum has bond dimension at most the number of monomials and is
    compressed exactly.
    """
    from .tensor import TensorTrain, mpo_sum

    if terms and isinstance(terms[0], tuple) and isinstance(terms[0][0], str):
        terms = [(1.0, terms)]
    total = None
    for coeff, ops in terms:
        local = _ladder_product(ops, n_sites, tls_site)
        local[0] = coeff * local[0]
        mpo = TensorTrain.product_operator(local)
        total = mpo if total is None else mpo_sum(total, mpo)
    if total is None:
        raise ValueError("empty observable")
    if len(terms) > 1:
        total = total.compressed(epsilon=1e-14)
    return total


# -- model builders --------------------------------------------------------


def _append_chain(spec, sites, chain: ChainParameters):
    """Number and hopping terms along ``sites`` (ordered from the system outwards)."""
    for s, e in zip(sites, chain.site_energies):
        spec.add("number", [s], float(e))
    for a, b, t in zip(sites[:-1], sites[1:], chain.hoppings):
        spec.add("hopping", [a, b], float(t))


def _chain_length(chain: ChainParameters | None) -> int:
    return 0 if chain is None else len(chain.site_energies)


def build_rlm(E_imp: float, chain: ChainParameters | None) -> FermionHamiltonianSpec:
    """Resonant level model ``[d, b0, b1, ...]`` with hopping coupling eta."""
    n = _chain_length(chain)
    spec = FermionHamiltonianSpec(["d"] + [f"b{k}" for k in range(n)])
    spec.add("number", [0], float(E_imp))
    if n:
        spec.add("hopping", [0, 1], float(chain.system_coupling))
        _append_chain(spec, list(range(1, n + 1)), chain)
    return spec


def _factorized_coupling(spec, d, b, eta):
    """``eta (d^+ - d)(b + b^+)`` expanded into hopping and pairing terms."""
    # (d^+ - d)(b + b^+) = (d^+ b + b^+ d) + (d^+ b^+ + b d)
    spec.add("hopping", [d, b], eta)
    spec.add("pairing", [d, b], eta)


def build_modified_rlm(
    E_imp: float,
    chain: ChainParameters | None,
    second_chain: ChainParameters | None = None,
) -> FermionHamiltonianSpec:
    """Impurity with factorised coupling ``(d^+ - d) sum (b_0 + b_0^+)``.

    ``second_chain`` (the hole bath of the thermofield transform) is attached
    on the left, reversed, giving ``[e_{M-1}, ..., e_0, d, b_0, ...]``.
    """
    n = _chain_length(chain)
    m = _chain_length(second_chain)
    labels = [f"e{k}" for k in reversed(range(m))] + ["d"] + [f"b{k}" for k in range(n)]
    spec = FermionHamiltonianSpec(labels)
    d = m
    spec.add("number", [d], float(E_imp))
    if n:
        _factorized_coupling(spec, d, d + 1, float(chain.system_coupling))
        _append_chain(spec, list(range(d + 1, d + 1 + n)), chain)
    if m:
        _factorized_coupling(spec, d, d - 1, float(second_chain.system_coupling))
        _append_chain(spec, list(range(d - 1, -1, -1)), second_chain)
    return spec


def build_quantum_dot(
    delta: float, v: float, E_imp: float, chain: ChainParameters | None
) -> FermionHamiltonianSpec:
    """TLS dephased by an impurity level: ``[tls, d, b0, ...]``.

    ``H_sys = (delta/2) Z + (v/2) Z n_d + E_imp n_d``; impurity and chain as in
    the resonant level model.
    """
    n = _chain_length(chain)
    spec = FermionHamiltonianSpec(["tls", "d"] + [f"b{k}" for k in range(n)], tls_site=0)
    spec.add("tls_field", [0], 0.5 * delta * PAULI_Z)
    spec.add("tls_density", [0, 1], 0.5 * v * PAULI_Z)
    spec.add("number", [1], float(E_imp))
    if n:
        spec.add("hopping", [1, 2], float(chain.system_coupling))
        _append_chain(spec, list(range(2, n + 2)), chain)
    return spec


def build_dimer(
    h: float,
    detuning: float,
    g: float,
    U: float,
    left: ChainParameters | None,
    right: ChainParameters | None,
) -> FermionHamiltonianSpec:
    """Two coupled dots between two baths: ``[bL_{N-1} .. bL_0, dL, dR, bR_0 ..]``."""
    nl, nr = _chain_length(left), _chain_length(right)
    labels = [f"L{k}" for k in reversed(range(nl))] + ["dL", "dR"] + [f"R{k}" for k in range(nr)]
    spec = FermionHamiltonianSpec(labels)
    dl, dr = nl, nl + 1
    spec.add("number", [dl], h + 0.5 * detuning)
    spec.add("number", [dr], h - 0.5 * detuning)
    spec.add("hopping", [dl, dr], -0.5 * g)
    if U:
        spec.add("density_density", [dl, dr], float(U))
    if nl:
        spec.add("hopping", [dl - 1, dl], float(left.system_coupling))
        _append_chain(spec, list(range(dl - 1, -1, -1)), left)
    if nr:
        spec.add("hopping", [dr, dr + 1], float(right.system_coupling))
        _append_chain(spec, list(range(dr + 1, dr + 1 + nr)), right)
    return spec
