"""Exact MPOs of time-evolved fermionic ladder operators under quadratic Hamiltonians."""

from __future__ import annotations

import numpy as np
from numpy.typing import ArrayLike

from ..fermionchain import IDENTITY, SIGMA_MINUS, SIGMA_PLUS, SIGMA_Z
from .core import TensorTrain

__all__ = ["gaussian_heisenberg_mpo"]


def gaussian_heisenberg_mpo(alpha: ArrayLike, beta: ArrayLike) -> TensorTrain:
    """MPO of ``g = sum_l alpha_l f_l + beta_l f_l^+`` with bond dimension 2.

    ``alpha`` and ``beta`` are the coefficients of one evolved mode
    ``f_m(t)`` in terms of the ladder operators at time zero (one row of the
    single-particle propagator). With the string convention
    ``f_l = Z_1 ... Z_{l-1} sigma^-_l`` the site blocks are::

        [G_1, Z_1],   [[1, 0], [G_l, Z_l]],   [[1], [G_n]]

    where ``G_l = alpha_l sigma^- + beta_l sigma^+``.
    """
    a = np.asarray(alpha, dtype=complex).ravel()
    b = np.asarray(beta, dtype=complex).ravel()
    if a.shape != b.shape:
        raise ValueError("alpha and beta must have equal length")
    n = a.size
    G = [a[l] * SIGMA_MINUS + b[l] * SIGMA_PLUS for l in range(n)]
    if n == 1:
        return TensorTrain.product_operator([G[0]])
    tensors = []
    for l in range(n):
        if l == 0:
            w = np.zeros((1, 2, 2, 2), dtype=complex)
            w[0, :, :, 0] = G[0]
            w[0, :, :, 1] = SIGMA_Z
        elif l == n - 1:
            w = np.zeros((2, 2, 2, 1), dtype=complex)
            w[0, :, :, 0] = IDENTITY
            w[1, :, :, 0] = G[l]
        else:
            w = np.zeros((2, 2, 2, 2), dtype=complex)
            w[0, :, :, 0] = IDENTITY
            w[1, :, :, 0] = G[l]
            w[1, :, :, 1] = SIGMA_Z
        tensors.append(w.reshape(w.shape[0], 4, w.shape[3]))
    return TensorTrain(tensors, "operator", 2)
