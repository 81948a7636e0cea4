"""Two-site DMRG on nearest-neighbour spin-chain Hamiltonians."""

from __future__ import annotations

import math
import warnings
from typing import NamedTuple, Sequence

import numpy as np
import scipy.sparse.linalg as sla
from numpy.typing import NDArray

from ..errors import NoConvergenceWarning
from ..fermionchain import IDENTITY, SpinChainHamiltonian
from .core import TensorTrain, TruncationPolicy, truncated_svd

__all__ = ["hamiltonian_mpo", "DMRGResult", "dmrg_ground_state"]

_DENSE_LIMIT = 512
_CONVERGENCE_TOL = 1e-10


def hamiltonian_mpo(H: SpinChainHamiltonian) -> TensorTrain:
    """Exact MPO of a nearest-neighbour Hamiltonian.

    Bond ``i`` carries dimension ``2 + r_i`` where ``r_i`` is the operator
    Schmidt rank of the two-site term on ``(i, i+1)``.
    """
    n = H.n_sites
    d = 2
    onsite = [np.zeros((d, d), dtype=complex) for _ in range(n)]
    for s, m in H.one_site_terms:
        onsite[s] = onsite[s] + m
    pair = [np.zeros((d * d, d * d), dtype=complex) for _ in range(n - 1)]
    for s, m in H.two_site_terms:
        pair[s] = pair[s] + m

    left_ops, right_ops = [], []
    for m in pair:
        # m[(o1 o2), (i1 i2)] -> [(o1 i1), (o2 i2)]
        t = m.reshape(d, d, d, d).transpose(0, 2, 1, 3).reshape(d * d, d * d)
        u, s, vh = np.linalg.svd(t)
        r = int(np.sum(s > 1e-14 * max(s[0], 1e-300)))
        left_ops.append([(u[:, k] * s[k]).reshape(d, d) for k in range(r)])
        right_ops.append([vh[k].reshape(d, d) for k in range(r)])

    dims = [1] + [2 + len(a) for a in left_ops] + [1]
    tensors = []
    for j in range(n):
        dl, dr = dims[j], dims[j + 1]
        w = np.zeros((dl, d, d, dr), dtype=complex)
        first, last = j == 0, j == n - 1
        # row/column indices of the "empty" and "complete" automaton states
        r0 = 0
        rl = 0 if first else dl - 1
        c0 = 0
        cl = 0 if last else dr - 1
        if not last:
            w[r0, :, :, c0] = IDENTITY
            for k, a in enumerate(left_ops[j]):
                w[r0, :, :, 1 + k] = a
        if not first:
            w[rl, :, :, cl] = IDENTITY
            for k, b in enumerate(right_ops[j - 1]):
                w[1 + k, :, :, cl] = b
        w[r0, :, :, cl] += onsite[j]
        tensors.append(w.reshape(dl, d * d, dr))
    return TensorTrain(tensors, "operator", d)


class DMRGResult(NamedTuple):
    state: TensorTrain
    energy: float
    sweep_energies: list[float]
    converged: bool


def _extend_left(L, a, w):
    # L[a, w, b] conj(A)[a, p, c] W[w, p, q, v] A[b, q, d] -> [c, v, d]
    t = np.tensordot(L, a.conj(), axes=(0, 0))  # w b p c
    t = np.tensordot(t, w, axes=([0, 2], [0, 1]))  # b c q v
    t = np.tensordot(t, a, axes=([0, 2], [0, 1]))  # c v d
    return t


def _extend_right(R, b, w):
    # conj(B)[a, p, c] W[w, p, q, v] B[b, q, d] R[c, v, d] -> [a, w, b]
    t = np.tensordot(b, R, axes=(2, 2))  # b q c v
    t = np.tensordot(w, t, axes=([2, 3], [1, 3]))  # w p v... -> w p b c
    t = np.tensordot(b.conj(), t, axes=([1, 2], [1, 3]))  # a w b
    return t


def _matvec(L, W1, W2, R, shape):
    def mv(x):
        th = x.reshape(shape)
        t = np.tensordot(L, th, axes=(2, 0))  # a w q r d
        t = np.tensordot(t, W1, axes=([1, 2], [0, 2]))  # a r d p u
        t = np.tensordot(t, W2, axes=([4, 1], [0, 2]))  # a d p s v
        t = np.tensordot(t, R, axes=([1, 4], [2, 1]))  # a p s c
        return t.reshape(-1)

    return mv


def _local_ground(L, W1, W2, R, theta):
    shape = theta.shape
    dim = theta.size
    mv = _matvec(L, W1, W2, R, shape)
    if dim <= _DENSE_LIMIT:
        h = np.einsum("awb,wpqu,usrv,cvd->apscbqrd", L, W1, W2, R, optimize=True).reshape(dim, dim)
        h = 0.5 * (h + h.conj().T)
        e, v = np.linalg.eigh(h)
        return float(e[0]), v[:, 0].reshape(shape)
    op = sla.LinearOperator((dim, dim), matvec=mv, dtype=complex)
    v0 = theta.reshape(-1)
    try:
        e, v = sla.eigsh(op, k=1, which="SA", v0=v0, tol=1e-12, maxiter=200)
    except sla.ArpackNoConvergence as err:
        if len(err.eigenvalues) == 0:
            raise
        e, v = err.eigenvalues, err.eigenvectors
    return float(e[0]), v[:, 0].reshape(shape)


def dmrg_ground_state(
    H: SpinChainHamiltonian,
    sweeps: int = 10,
    policy: TruncationPolicy | None = None,
    initial: TensorTrain | Sequence[int] | None = None,
) -> DMRGResult:
    """Variational two-site DMRG ground state.

    Parameters
    ----------
    H : nearest-neighbour Hamiltonian.
    sweeps : number of full (left-right-left) sweeps.
    policy : truncation of the two-site tensors.
    initial : starting state or site occupations; defaults to the
        alternating product state ``|0101...>``. The sweeps never leave the
        particle-number sector of a number-conserving ``H``.

    A :class:`NoConvergenceWarning` is issued when the energy of the last
    sweep differs from the previous one by more than 1e-10.
    """
    policy = policy or TruncationPolicy(1e-10)
    n = H.n_sites
    if initial is None:
        initial = [k % 2 for k in range(n)]
    if isinstance(initial, TensorTrain):
        psi = initial.copy()
    else:
        psi = TensorTrain.basis_state(list(initial))
    if psi.n_sites != n:
        raise ValueError("initial state does not match the Hamiltonian")
    psi.tensors = [t.astype(complex) for t in psi.tensors]
    mpo = hamiltonian_mpo(H)
    W = [mpo.local_matrices(j) for j in range(n)]

    if n == 1:
        h = W[0][0, :, :, 0]
        e, v = np.linalg.eigh(h)
        psi = TensorTrain([v[:, 0].reshape(1, 2, 1).astype(complex)], "state", 2, center=0)
        return DMRGResult(psi, float(e[0]), [float(e[0])], True)

    psi.center = None
    psi.canonicalize(0)
    psi.scale(1.0 / psi.norm())
    one = np.ones((1, 1, 1), dtype=complex)
    Ls: list[NDArray | None] = [None] * (n + 1)
    Rs: list[NDArray | None] = [None] * (n + 1)
    Ls[0] = one
    Rs[n - 1] = one
    for j in range(n - 1, 0, -1):
        Rs[j - 1] = _extend_right(Rs[j], psi.tensors[j], W[j])

    def optimize(j, rightward):
        a, b = psi.tensors[j], psi.tensors[j + 1]
        theta = np.tensordot(a, b, axes=(2, 0))
        e, theta = _local_ground(Ls[j], W[j], W[j + 1], Rs[j + 1], theta)
        dl, p, q, dr = theta.shape
        u, s, vh, _, _ = truncated_svd(theta.reshape(dl * p, q * dr), policy)
        s = s / np.linalg.norm(s)
        if rightward:
            psi.tensors[j] = u.reshape(dl, p, -1)
            psi.tensors[j + 1] = (s[:, None] * vh).reshape(-1, q, dr)
            psi.center = j + 1
            Ls[j + 1] = _extend_left(Ls[j], psi.tensors[j], W[j])
        else:
            psi.tensors[j] = (u * s[None, :]).reshape(dl, p, -1)
            psi.tensors[j + 1] = vh.reshape(-1, q, dr)
            psi.center = j
            Rs[j] = _extend_right(Rs[j + 1], psi.tensors[j + 1], W[j + 1])
        return e

    energies: list[float] = []
    for _ in range(max(1, sweeps)):
        for j in range(n - 1):
            e = optimize(j, True)
        for j in range(n - 2, -1, -1):
            e = optimize(j, False)
        energies.append(e)
    converged = len(energies) > 1 and abs(energies[-1] - energies[-2]) <= _CONVERGENCE_TOL
    if not converged:
        delta = abs(energies[-1] - energies[-2]) if len(energies) > 1 else math.nan
        warnings.warn(f"DMRG energy changed by {delta:.3e} in the last sweep", NoConvergenceWarning, stacklevel=2)
    return DMRGResult(psi, energies[-1], energies, converged)
