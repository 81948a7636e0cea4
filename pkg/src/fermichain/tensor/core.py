"""Tensor trains (MPS and MPO), canonical forms and SVD truncation."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numpy.typing import NDArray

from ..errors import SiteMismatch

__all__ = [
    "TruncationPolicy",
    "TensorTrain",
    "truncated_svd",
    "compress",
    "mpo_sum",
    "mpo_product",
    "mpo_dagger",
    "expectation",
]


@dataclass(frozen=True)
class TruncationPolicy:
    """Relative discarded-weight threshold ``epsilon`` and rank cap ``xi``.

    The discarded weight of one truncation is the sum of the squared
    singular values that are dropped, divided by the total sum of squares.
    """

    epsilon: float = 1e-8
    xi: int | float = math.inf

    def __post_init__(self):
        if not 0 <= self.epsilon < 1:
            raise ValueError(f"epsilon must lie in [0, 1), got {self.epsilon}")
        if not self.xi >= 1:
            raise ValueError(f"xi must be >= 1, got {self.xi}")

    def to_config(self) -> dict:
        return {"epsilon": self.epsilon, "xi": "inf" if math.isinf(self.xi) else int(self.xi)}


def _svd(m: NDArray):
    try:
        return np.linalg.svd(m, full_matrices=False)
    except np.linalg.LinAlgError:
        # gesdd occasionally fails to converge; gesvd is slower but robust
        import scipy.linalg

        return scipy.linalg.svd(m, full_matrices=False, lapack_driver="gesvd")


def truncated_svd(m: NDArray, policy: TruncationPolicy):
    """SVD of ``m`` truncated under ``policy``.

    Returns ``(u, s, vh, discarded, capped)`` where ``discarded`` is the
    relative discarded weight and ``capped`` tells whether the rank cap
    removed weight that ``epsilon`` alone would have kept.
    """
    u, s, vh = _svd(m)
    s2 = s * s
    total = s2.sum()
    if total == 0.0:
        return u[:, :1], s[:1], vh[:1], 0.0, False
    # tail[k] = weight discarded when keeping k values
    tail = np.concatenate([np.cumsum(s2[::-1])[::-1], [0.0]]) / total
    keep = int(np.argmax(tail <= policy.epsilon))
    keep = max(keep, 1)
    capped = keep > policy.xi
    if capped:
        keep = int(policy.xi)
    return u[:, :keep], s[:keep], vh[:keep], float(tail[keep]), capped


class TensorTrain:
    """Matrix product state (``kind="state"``) or operator (``kind="operator"``).

    Site tensors have shape ``(D_left, p, D_right)`` with ``p = d`` for states
    and ``p = d*d`` for operators; an operator's local matrix ``M[out, in]``
    is stored at ``p = out * d + in``.
    """

    def __init__(self, tensors: Sequence[NDArray], kind: str = "state", local_dim: int = 2, center: int | None = None):
        if kind not in ("state", "operator"):
            raise ValueError(f"unknown kind {kind!r}")
        self.kind = kind
        self.local_dim = int(local_dim)
        self.tensors = [np.asarray(t) for t in tensors]
        self.center = center
        self._validate()

    def _validate(self):
        if not self.tensors:
            raise ValueError("a tensor train needs at least one site")
        p = self.phys_dim
        for i, t in enumerate(self.tensors):
            if t.ndim != 3 or t.shape[1] != p:
                raise ValueError(f"site {i}: expected shape (Dl, {p}, Dr), got {t.shape}")
        for a, b in zip(self.tensors[:-1], self.tensors[1:]):
            if a.shape[2] != b.shape[0]:
                raise ValueError("inconsistent bond dimensions")
        if self.tensors[0].shape[0] != 1 or self.tensors[-1].shape[2] != 1:
            raise ValueError("boundary bonds must have dimension 1")

    # -- construction ----------------------------------------------------

    @classmethod
    def product_state(cls, vectors: Sequence[NDArray]) -> "TensorTrain":
        vs = [np.asarray(v, dtype=complex) for v in vectors]
        return cls([v.reshape(1, -1, 1) for v in vs], "state", vs[0].size)

    @classmethod
    def basis_state(cls, occupations: Sequence[int], d: int = 2) -> "TensorTrain":
        return cls.product_state([np.eye(d)[k] for k in occupations])

    @classmethod
    def product_operator(cls, matrices: Sequence[NDArray]) -> "TensorTrain":
        ms = [np.asarray(m, dtype=complex) for m in matrices]
        d = ms[0].shape[0]
        return cls([m.reshape(1, d * d, 1) for m in ms], "operator", d)

    @classmethod
    def identity(cls, n_sites: int, d: int = 2) -> "TensorTrain":
        return cls.product_operator([np.eye(d)] * n_sites)

    @classmethod
    def from_dense(cls, x: NDArray, n_sites: int, d: int = 2, kind: str = "state", policy: TruncationPolicy | None = None):
        """Exact (or policy-truncated) tensor train of a dense vector or matrix."""
        policy = policy or TruncationPolicy(0.0)
        x = np.asarray(x, dtype=complex)
        if kind == "operator":
            x = x.reshape([d] * (2 * n_sites))
            perm = [k for i in range(n_sites) for k in (i, n_sites + i)]
            x = x.transpose(perm)
            p = d * d
        else:
            p = d
        rest = x.reshape(1, -1)
        tensors = []
        for _ in range(n_sites - 1):
            dl = rest.shape[0]
            u, s, vh, _, _ = truncated_svd(rest.reshape(dl * p, -1), policy)
            tensors.append(u.reshape(dl, p, -1))
            rest = s[:, None] * vh
        tensors.append(rest.reshape(rest.shape[0], p, 1))
        return cls(tensors, kind, d, center=n_sites - 1)

    def copy(self) -> "TensorTrain":
        return TensorTrain([t.copy() for t in self.tensors], self.kind, self.local_dim, self.center)

    # -- properties ------------------------------------------------------

    @property
    def n_sites(self) -> int:
        return len(self.tensors)

    def __len__(self):
        return len(self.tensors)

    @property
    def phys_dim(self) -> int:
        return self.local_dim if self.kind == "state" else self.local_dim**2

    @property
    def bond_dims(self) -> list[int]:
        return [t.shape[2] for t in self.tensors[:-1]]

    @property
    def max_bond(self) -> int:
        return max(self.bond_dims, default=1)

    @property
    def n_params(self) -> int:
        return int(sum(t.size for t in self.tensors))

    def to_dense(self) -> NDArray:
        out = self.tensors[0]
        for t in self.tensors[1:]:
            out = np.tensordot(out, t, axes=(out.ndim - 1, 0))
        out = out.reshape(out.shape[1:-1])
        if self.kind == "state":
            return out.reshape(-1)
        n, d = self.n_sites, self.local_dim
        out = out.reshape([d] * (2 * n))
        perm = [2 * i for i in range(n)] + [2 * i + 1 for i in range(n)]
        return out.transpose(perm).reshape(d**n, d**n)

    # -- canonical forms -------------------------------------------------

    def _move_right(self, i: int) -> None:
        t = self.tensors[i]
        dl, p, dr = t.shape
        q, r = np.linalg.qr(t.reshape(dl * p, dr))
        self.tensors[i] = q.reshape(dl, p, -1)
        self.tensors[i + 1] = np.tensordot(r, self.tensors[i + 1], axes=(1, 0))

    def _move_left(self, i: int) -> None:
        t = self.tensors[i]
        dl, p, dr = t.shape
        q, r = np.linalg.qr(t.reshape(dl, p * dr).T)
        self.tensors[i] = q.T.reshape(-1, p, dr)
        self.tensors[i - 1] = np.tensordot(self.tensors[i - 1], r.T, axes=(2, 0))

    def canonicalize(self, center: int) -> "TensorTrain":
        """Bring into mixed-canonical form around ``center`` (in place)."""
        n = self.n_sites
        if not 0 <= center < n:
            raise IndexError(center)
        if self.center is None:
            lo, hi = 0, n - 1
        else:
            lo = hi = self.center
        for i in range(lo, center):
            self._move_right(i)
        for i in range(hi, center, -1):
            self._move_left(i)
        self.center = center
        return self

    def move_center(self, target: int) -> None:
        if self.center is None:
            self.canonicalize(target)
            return
        while self.center < target:
            self._move_right(self.center)
            self.center += 1
        while self.center > target:
            self._move_left(self.center)
            self.center -= 1

    # -- algebra ---------------------------------------------------------

    def norm(self) -> float:
        """2-norm of a state, Frobenius norm of an operator."""
        if self.center is not None:
            return float(np.linalg.norm(self.tensors[self.center]))
        return math.sqrt(max(self.inner(self).real, 0.0))

    def inner(self, other: "TensorTrain") -> complex:
        """``<self|other>`` (Hilbert-Schmidt product for operators)."""
        if self.n_sites != other.n_sites or self.phys_dim != other.phys_dim:
            raise SiteMismatch("tensor trains differ in sites or local dimension")
        env = np.ones((1, 1), dtype=complex)
        for a, b in zip(self.tensors, other.tensors):
            env = np.einsum("ab,apc,bpd->cd", env, a.conj(), b, optimize=True)
        return complex(env[0, 0])

    def trace(self) -> complex:
        if self.kind != "operator":
            raise ValueError("trace is defined for operators only")
        d = self.local_dim
        idx = np.arange(d) * (d + 1)
        env = np.ones((1,), dtype=complex)
        for t in self.tensors:
            env = env @ t[:, idx, :].sum(axis=1)
        return complex(env[0])

    def scale(self, c: complex) -> "TensorTrain":
        """Multiply by a scalar in place (absorbed at the center if any)."""
        i = self.center if self.center is not None else 0
        self.tensors[i] = self.tensors[i] * c
        return self

    def __mul__(self, c):
        return self.copy().scale(c)

    __rmul__ = __mul__

    def __add__(self, other):
        return mpo_sum(self, other)

    def compressed(self, epsilon: float = 1e-12, xi: int | float = math.inf) -> "TensorTrain":
        return compress(self, TruncationPolicy(epsilon, xi))[0]

    def local_matrices(self, i: int) -> NDArray:
        """Operator site tensor as ``(Dl, d_out, d_in, Dr)``."""
        d = self.local_dim
        t = self.tensors[i]
        return t.reshape(t.shape[0], d, d, t.shape[2])

    def __repr__(self):
        return f"TensorTrain(kind={self.kind!r}, n_sites={self.n_sites}, bond_dims={self.bond_dims})"


def compress(t: TensorTrain, policy: TruncationPolicy) -> tuple[TensorTrain, float]:
    """SVD-compress a tensor train.

    The train is brought into right-canonical form and truncated in a left
    to right sweep. Returns the compressed copy (center on the last site) and
    the accumulated relative discarded weight.
    """
    out = t.copy()
    out.canonicalize(0)
    discarded = 0.0
    for i in range(out.n_sites - 1):
        a = out.tensors[i]
        dl, p, dr = a.shape
        u, s, vh, w, _ = truncated_svd(a.reshape(dl * p, dr), policy)
        discarded += w
        out.tensors[i] = u.reshape(dl, p, -1)
        out.tensors[i + 1] = np.tensordot(s[:, None] * vh, out.tensors[i + 1], axes=(1, 0))
    out.center = out.n_sites - 1
    return out, discarded


def mpo_sum(a: TensorTrain, b: TensorTrain) -> TensorTrain:
    """Direct sum of two trains of equal kind; bond dimensions add."""
    if a.n_sites != b.n_sites or a.phys_dim != b.phys_dim or a.kind != b.kind:
        raise SiteMismatch("cannot add tensor trains of different shape")
    n = a.n_sites
    if n == 1:
        return TensorTrain([a.tensors[0] + b.tensors[0]], a.kind, a.local_dim)
    tensors = []
    for i, (x, y) in enumerate(zip(a.tensors, b.tensors)):
        dtype = np.result_type(x, y)
        if i == 0:
            t = np.concatenate([x, y], axis=2).astype(dtype)
        elif i == n - 1:
            t = np.concatenate([x, y], axis=0).astype(dtype)
        else:
            t = np.zeros((x.shape[0] + y.shape[0], x.shape[1], x.shape[2] + y.shape[2]), dtype=dtype)
            t[: x.shape[0], :, : x.shape[2]] = x
            t[x.shape[0] :, :, x.shape[2] :] = y
        tensors.append(t)
    return TensorTrain(tensors, a.kind, a.local_dim)


def mpo_product(a: TensorTrain, b: TensorTrain) -> TensorTrain:
    """Operator product ``a @ b`` (or ``a|b>`` for a state ``b``); bond dimensions multiply."""
    if a.kind != "operator" or a.n_sites != b.n_sites or a.local_dim != b.local_dim:
        raise SiteMismatch("operator product needs matching operator trains")
    d = a.local_dim
    tensors = []
    for i in range(a.n_sites):
        wa = a.local_matrices(i)
        if b.kind == "operator":
            wb = b.local_matrices(i)
            t = np.einsum("aijb,cjkd->acikbd", wa, wb)
            t = t.reshape(wa.shape[0] * wb.shape[0], d * d, wa.shape[3] * wb.shape[3])
        else:
            vb = b.tensors[i]
            t = np.einsum("aijb,cjd->acibd", wa, vb)
            t = t.reshape(wa.shape[0] * vb.shape[0], d, wa.shape[3] * vb.shape[2])
        tensors.append(t)
    return TensorTrain(tensors, b.kind, d)


def mpo_dagger(a: TensorTrain) -> TensorTrain:
    """Hermitian conjugate of an operator train."""
    if a.kind != "operator":
        raise ValueError("dagger is defined for operators only")
    d = a.local_dim
    tensors = []
    for i in range(a.n_sites):
        w = a.local_matrices(i).conj().transpose(0, 2, 1, 3)
        tensors.append(w.reshape(w.shape[0], d * d, w.shape[3]))
    return TensorTrain(tensors, "operator", d)


def expectation(state: TensorTrain, obs: TensorTrain) -> complex:
    """``<psi|O|psi>/<psi|psi>`` for a state, ``tr(rho O)/tr(rho)`` for an operator.

    The contraction is exact.
    """
    if obs.kind != "operator":
        raise ValueError("observable must be an operator train")
    if state.n_sites != obs.n_sites or state.local_dim != obs.local_dim:
        raise SiteMismatch(
            f"state has {state.n_sites} sites of dimension {state.local_dim}, "
            f"observable has {obs.n_sites} of dimension {obs.local_dim}"
        )
    if state.kind == "state":
        env = np.ones((1, 1, 1), dtype=complex)
        for psi, w in zip(state.tensors, (obs.local_matrices(i) for i in range(obs.n_sites))):
            env = np.einsum("awb,apc,wpqv,bqd->cvd", env, psi.conj(), w, psi, optimize=True)
        return complex(env[0, 0, 0]) / state.inner(state)
    # tr(rho O) = sum rho[a,b] O[b,a]
    env = np.ones((1, 1), dtype=complex)
    for i in range(state.n_sites):
        r = state.local_matrices(i)
        w = obs.local_matrices(i)
        env = np.einsum("ab,aijc,bjid->cd", env, r, w, optimize=True)
    return complex(env[0, 0]) / state.trace()
