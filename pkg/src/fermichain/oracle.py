"""Free-fermion exact diagonalisation used as reference for quadratic models.

Conventions
-----------
A quadratic Hamiltonian is ``H = sum_kl A_kl f_k^+ f_l + 1/2 sum_kl (B_kl
f_k^+ f_l^+ + h.c.)`` with ``A`` Hermitian and ``B`` antisymmetric. Without
pairing (``B = 0``) ``A`` is the single-particle Hamiltonian ``h``.

The correlation matrix is ``C_kl = <f_k^+ f_l>``. Ladder operators evolve as
``f(t) = exp(-i h t) f(0)``, hence ``C(t) = exp(i h^T t) C exp(-i h^T t)``.
With pairing, the Nambu vector ``Psi = (f, f^+)`` obeys ``Psi(t) = W Psi(0)``
with ``W = exp(-i K t)`` and ``K = [[A, B], [-B^*, -A^*]]``; its correlation
``G_ij = <Psi_i Psi_j^+>`` evolves as ``G(t) = W G W^+``.
"""

from __future__ import annotations

import math
import warnings
from typing import Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.integrate import quad

from .errors import DegenerateFermiLevel
from .fermionchain import FermionHamiltonianSpec
from .spectral import SpectralDensity, ThermalParameters, fermi_dirac, thermalized_density

__all__ = [
    "linear_discretize",
    "star_hamiltonian",
    "quadratic_form",
    "ground_correlation",
    "thermal_correlation",
    "evolve_correlation",
    "correlation_series",
    "bdg_hamiltonian",
    "nambu_correlation",
    "nambu_series",
    "ladder_propagator",
    "dephasing_coherence",
    "thermal_equivalence_check",
]

_DEGENERACY_TOL = 1e-12


def _hermitian(h: ArrayLike) -> NDArray:
    h = np.asarray(h)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise ValueError("single-particle Hamiltonian must be square")
    if not np.allclose(h, h.conj().T, atol=1e-12, rtol=0):
        raise ValueError("single-particle Hamiltonian is not Hermitian")
    return h


def linear_discretize(J: SpectralDensity, n_ed: int) -> tuple[NDArray, NDArray]:
    """Equal-width bins over the support of ``J``.

    Returns the bin midpoints and the couplings ``sqrt(int_bin J / pi)``, so
    that the total squared coupling equals the bath mass.
    """
    n_ed = int(n_ed)
    if n_ed < 2:
        raise ValueError("N_ED must be >= 2")
    lo, hi = J.support
    edges = np.linspace(lo, hi, n_ed + 1)
    energies = 0.5 * (edges[1:] + edges[:-1])
    bps = [b for b in J.breakpoints]
    masses = np.empty(n_ed)
    for k in range(n_ed):
        a, b = edges[k], edges[k + 1]
        inner = [p for p in bps if a < p < b]
        val, _ = quad(lambda w: float(J(w)), a, b, points=inner or None, epsabs=1e-14, epsrel=1e-12, limit=200)
        masses[k] = max(val, 0.0)
    return energies, np.sqrt(masses / math.pi)


def star_hamiltonian(system: ArrayLike, energies: ArrayLike, couplings: ArrayLike, attach: int = 0) -> NDArray:
    """Single-particle matrix of a system block coupled to a star of bath modes.

    The bath modes follow the system modes; each couples to system mode
    ``attach`` with the given hopping amplitude.
    """
    s = np.atleast_2d(np.asarray(system, dtype=complex))
    e = np.asarray(energies, dtype=float)
    g = np.asarray(couplings, dtype=float)
    m = s.shape[0]
    h = np.zeros((m + e.size, m + e.size), dtype=complex)
    h[:m, :m] = s
    h[m:, m:] = np.diag(e)
    h[attach, m:] = g
    h[m:, attach] = g
    return h


def quadratic_form(spec: FermionHamiltonianSpec) -> tuple[NDArray, NDArray]:
    """``(A, B)`` of a model without interactions or TLS, in site order."""
    if spec.tls_site is not None:
        raise ValueError("quadratic form is defined for purely fermionic models")
    n = spec.n_sites
    A = np.zeros((n, n), dtype=complex)
    B = np.zeros((n, n), dtype=complex)
    for t in spec.terms:
        if t.kind == "number":
            A[t.sites[0], t.sites[0]] += t.coeff
        elif t.kind == "hopping":
            i, j = t.sites
            A[i, j] += t.coeff
            A[j, i] += np.conj(t.coeff)
        elif t.kind == "pairing":
            i, j = t.sites
            B[i, j] += t.coeff
            B[j, i] -= t.coeff
        elif t.coeff != 0:
            raise ValueError(f"{t.kind} term is not quadratic")
    return A, B


def _occupied(energies, p: ThermalParameters):
    f = np.asarray(fermi_dirac(energies, p), dtype=float)
    if p.zero_temperature:
        near = np.abs(energies - p.mu) <= _DEGENERACY_TOL
        if np.any(near):
            warnings.warn(
                f"{int(near.sum())} single-particle level(s) at the Fermi energy; occupation set to 1/2",
                DegenerateFermiLevel,
                stacklevel=3,
            )
            f = np.where(near, 0.5, f)
    return f


def thermal_correlation(h: ArrayLike, p: ThermalParameters) -> NDArray:
    """Gibbs-state correlation ``C = (V f(Lambda) V^+)^T``."""
    h = _hermitian(h)
    lam, v = np.linalg.eigh(h)
    f = _occupied(lam, p)
    return ((v * f) @ v.conj().T).T


def ground_correlation(h: ArrayLike, mu: float = 0.0) -> NDArray:
    """Ground-state correlation: all levels below ``mu`` filled.

    Levels within 1e-12 of ``mu`` get occupation 1/2 and trigger a
    :class:`DegenerateFermiLevel` warning.
    """
    return thermal_correlation(h, ThermalParameters(math.inf, mu))


def _propagator(h: NDArray, t: float) -> NDArray:
    lam, v = np.linalg.eigh(h)
    return (v * np.exp(-1j * lam * t)) @ v.conj().T


def evolve_correlation(C: ArrayLike, h: ArrayLike, t: float) -> NDArray:
    """``C(t) = exp(i h^T t) C exp(-i h^T t)``."""
    h = _hermitian(h)
    w = _propagator(h, t)
    return w.conj() @ np.asarray(C) @ w.T


def correlation_series(C: ArrayLike, h: ArrayLike, times: ArrayLike, pairs: Sequence[tuple[int, int]]) -> NDArray:
    """Entries ``C_kl(t)`` for each ``(k, l)`` in ``pairs``; shape ``(len(times), len(pairs))``."""
    h = _hermitian(h)
    C = np.asarray(C)
    lam, v = np.linalg.eigh(h)
    rows = sorted({k for pair in pairs for k in pair})
    times = np.atleast_1d(np.asarray(times, dtype=float))
    out = np.empty((times.size, len(pairs)), dtype=complex)
    for n, t in enumerate(times):
        w = {k: (v[k] * np.exp(-1j * lam * t)) @ v.conj().T for k in rows}
        for m, (k, l) in enumerate(pairs):
            out[n, m] = w[k].conj() @ C @ w[l]
    return out


def bdg_hamiltonian(A: ArrayLike, B: ArrayLike) -> NDArray:
    """Nambu generator ``K = [[A, B], [-B^*, -A^*]]``."""
    A = _hermitian(A)
    B = np.asarray(B)
    if not np.allclose(B, -B.T, atol=1e-12, rtol=0):
        raise ValueError("pairing matrix must be antisymmetric")
    return np.block([[A, B], [-B.conj(), -A.conj()]])


def nambu_correlation(C: ArrayLike, F: ArrayLike | None = None) -> NDArray:
    """``G = <Psi Psi^+>`` from ``C_kl = <f_k^+ f_l>`` and ``F_kl = <f_k f_l>``."""
    C = np.asarray(C, dtype=complex)
    m = C.shape[0]
    F = np.zeros((m, m), dtype=complex) if F is None else np.asarray(F, dtype=complex)
    # <f_k f_l^+> = delta_kl - C_lk ; <f_k^+ f_l^+> = conj(<f_l f_k>)
    return np.block([[np.eye(m) - C.T, F], [F.conj().T, C]])


def nambu_series(G: ArrayLike, K: ArrayLike, times: ArrayLike, pairs: Sequence[tuple[int, int]]) -> NDArray:
    """Entries of ``G(t) = W G W^+`` for the Nambu indices in ``pairs``."""
    K = _hermitian(K)
    G = np.asarray(G)
    lam, v = np.linalg.eigh(K)
    rows = sorted({k for pair in pairs for k in pair})
    times = np.atleast_1d(np.asarray(times, dtype=float))
    out = np.empty((times.size, len(pairs)), dtype=complex)
    for n, t in enumerate(times):
        w = {k: (v[k] * np.exp(-1j * lam * t)) @ v.conj().T for k in rows}
        for m, (i, j) in enumerate(pairs):
            out[n, m] = w[i] @ G @ w[j].conj()
    return out


def ladder_propagator(A: ArrayLike, t: float, B: ArrayLike | None = None) -> tuple[NDArray, NDArray]:
    """Coefficients of ``f_m(t) = sum_l alpha_ml f_l + beta_ml f_l^+``.

    Returns the matrices ``(alpha, beta)``; ``beta`` vanishes without pairing.
    """
    A = _hermitian(A)
    m = A.shape[0]
    if B is None:
        return _propagator(A, t), np.zeros((m, m), dtype=complex)
    w = _propagator(bdg_hamiltonian(A, B), t)
    return w[:m, :m], w[:m, m:]


def dephasing_coherence(C0: ArrayLike, H0: ArrayLike, H1: ArrayLike, t: float) -> float:
    """Coherence ``|det(1 - C^T + C^T exp(i H1 t) exp(-i H0 t))|`` of a dephased qubit.

    ``C0`` is the correlation of the initial Gaussian state and ``H0``, ``H1``
    are the single-particle Hamiltonians conditioned on the two qubit states.
    The value equals ``2 |rho_01(t)|`` for a qubit started in ``|+>``.
    """
    n = np.asarray(C0).T
    u = _propagator(_hermitian(H1), -t) @ _propagator(_hermitian(H0), t)
    m = np.eye(n.shape[0]) - n + n @ u
    return float(abs(np.linalg.det(m)))


def thermal_equivalence_check(J: SpectralDensity, beta: float, t_grid: ArrayLike) -> float:
    """Largest deviation between two evaluations of the bath correlation function.

    (i) ``(1/pi) int J_beta(w) exp(-i w t) dw`` over ``[-wmax, wmax]`` with
    adaptive oscillatory quadrature, and (ii) ``(1/pi) int_0^wmax J(w) [(1 -
    n(w)) exp(-i w t) + n(w) exp(i w t)] dw`` with composite Gauss-Legendre.
    """
    p = ThermalParameters(beta, 0.0)
    Jb = thermalized_density(J, p)
    lo, hi = J.support
    pieces = Jb.intervals

    def route_i(t):
        re = im = 0.0
        for a, b in pieces:
            f = lambda w: float(Jb(w))
            kw = dict(epsabs=1e-13, epsrel=1e-12, limit=400)
            if t == 0:
                re += quad(f, a, b, **kw)[0]
            else:
                re += quad(f, a, b, weight="cos", wvar=t, **kw)[0]
                im -= quad(f, a, b, weight="sin", wvar=t, **kw)[0]
        return complex(re, im) / math.pi

    # composite Gauss-Legendre, 64 panels of 40 nodes on each smooth piece
    x, w = np.polynomial.legendre.leggauss(40)
    nodes, weights = [], []
    for a, b in J.intervals:
        edges = np.linspace(a, b, 65)
        for e0, e1 in zip(edges[:-1], edges[1:]):
            nodes.append(0.5 * (e1 - e0) * x + 0.5 * (e1 + e0))
            weights.append(0.5 * (e1 - e0) * w)
    nodes = np.concatenate(nodes)
    weights = np.concatenate(weights) * J(nodes)
    nbar = np.asarray(fermi_dirac(nodes, p))

    def route_ii(t):
        val = np.sum(weights * ((1 - nbar) * np.exp(-1j * nodes * t) + nbar * np.exp(1j * nodes * t)))
        return complex(val) / math.pi

    ts = np.atleast_1d(np.asarray(t_grid, dtype=float))
    return float(max(abs(route_i(t) - route_ii(t)) for t in ts))
