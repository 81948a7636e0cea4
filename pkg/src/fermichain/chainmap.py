"""Chain mapping of a spectral density via monic orthogonal polynomials.

The bath measure ``dmu(x) = h(x)^2 dx`` with ``h(x)^2 = g J(g x) / pi`` is
discretised by composite Gauss-Legendre quadrature and its three-term
recurrence coefficients are obtained by Lanczos tridiagonalisation of the
node matrix. The coefficients define a semi-infinite tight-binding chain:

    H_chain = g sum_n (alpha_n b_n^+ b_n + sqrt(beta_{n+1}) (b_n^+ b_{n+1} + h.c.))
    H_int   = eta (L^+ b_0 + b_0^+ L),      eta = sqrt(mu([lo, hi]))
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any, NamedTuple

import numpy as np
from numpy.typing import NDArray

from .errors import EmptyMass, NegativeDensity, OversamplingError, RecurrenceBreakdown
from .spectral import SpectralDensity

__all__ = [
    "DiscretizedMeasure",
    "ChainCoefficients",
    "ChainParameters",
    "discretize_measure",
    "recurrence_coefficients",
    "chain_hamiltonian_params",
    "chain_coefficients",
    "DEFAULT_PANELS",
    "DEFAULT_NODES_PER_PANEL",
]

DEFAULT_PANELS = 64
DEFAULT_NODES_PER_PANEL = 32


@dataclass(frozen=True)
class DiscretizedMeasure:
    """Point masses ``weights`` at frequencies ``nodes`` (in units of x = w/g)."""

    nodes: NDArray
    weights: NDArray
    g: float = 1.0
    density: dict | None = None

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        weights = np.asarray(self.weights, dtype=float)
        if nodes.ndim != 1 or nodes.shape != weights.shape:
            raise ValueError("nodes and weights must be 1d arrays of equal length")
        if nodes.size > 1 and np.any(np.diff(nodes) <= 0):
            raise ValueError("nodes must be strictly increasing")
        if np.any(weights < 0):
            raise NegativeDensity("measure weights must be nonnegative")
        if not np.any(weights > 0):
            raise EmptyMass("measure has zero total mass")
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)

    @property
    def mass(self) -> float:
        return float(self.weights.sum())

    def __len__(self):
        return self.nodes.size

    def moments(self, k: int) -> NDArray:
        """Raw moments ``sum_i w_i x_i^j`` for ``j < k``."""
        return np.array([np.dot(self.weights, self.nodes**j) for j in range(k)])


@dataclass(frozen=True)
class ChainCoefficients:
    eta: float
    alphas: NDArray
    betas: NDArray
    g_scale: float = 1.0
    density: dict | None = field(default=None, compare=False)

    def __post_init__(self):
        alphas = np.asarray(self.alphas, dtype=float)
        betas = np.asarray(self.betas, dtype=float)
        if alphas.size < 1:
            raise ValueError("at least one alpha is required")
        if betas.size != alphas.size - 1:
            raise ValueError("len(betas) must equal len(alphas) - 1")
        if np.any(betas <= 0):
            raise ValueError("betas must be positive")
        if self.eta < 0 or self.g_scale < 0:
            raise ValueError("eta and g_scale must be nonnegative")
        object.__setattr__(self, "alphas", alphas)
        object.__setattr__(self, "betas", betas)

    @property
    def n(self) -> int:
        return self.alphas.size

    def to_dict(self) -> dict[str, Any]:
        return {
            "eta": float(self.eta),
            "alphas": self.alphas.tolist(),
            "betas": self.betas.tolist(),
            "g": float(self.g_scale),
            "density": self.density,
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_dict(cls, d: dict) -> "ChainCoefficients":
        return cls(d["eta"], d["alphas"], d["betas"], d.get("g", 1.0), d.get("density"))

    @classmethod
    def from_json(cls, s: str) -> "ChainCoefficients":
        return cls.from_dict(json.loads(s))

    def truncated(self, n: int) -> "ChainCoefficients":
        return ChainCoefficients(self.eta, self.alphas[:n], self.betas[: n - 1], self.g_scale, self.density)


class ChainParameters(NamedTuple):
    site_energies: NDArray
    hoppings: NDArray
    system_coupling: float


def _panel_split(intervals, n_panels):
    lengths = np.array([b - a for a, b in intervals])
    raw = n_panels * lengths / lengths.sum()
    counts = np.maximum(1, np.floor(raw).astype(int))
    # hand out the remainder to the largest fractional parts
    for i in np.argsort(counts - raw)[: max(0, n_panels - counts.sum())]:
        counts[i] += 1
    return counts


def discretize_measure(
    J: SpectralDensity,
    quadrature_points: int = DEFAULT_PANELS * DEFAULT_NODES_PER_PANEL,
    g: float = 1.0,
    nodes_per_panel: int = DEFAULT_NODES_PER_PANEL,
) -> DiscretizedMeasure:
    """Composite Gauss-Legendre discretisation of ``h(x)^2 dx``.

    Each smooth piece ``[a, b]`` of the support is parametrised as
    ``x = a + (b - a)(1 - cos t)/2`` and ``t in [0, pi]`` is split into equal
    Gauss-Legendre panels. The cosine map clusters nodes at the band edges,
    which restores spectral convergence for square-root edge behaviour such
    as the Newns band.
    """
    if g <= 0:
        raise ValueError("dispersion slope g must be positive")
    m = int(nodes_per_panel)
    intervals = [(a / g, b / g) for a, b in J.intervals]
    n_panels = max(len(intervals), math.ceil(quadrature_points / m))
    counts = _panel_split(intervals, n_panels)
    gl_x, gl_w = np.polynomial.legendre.leggauss(m)

    nodes, weights = [], []
    for (a, b), k in zip(intervals, counts):
        edges = np.linspace(0.0, math.pi, k + 1)
        mid = 0.5 * (edges[1:] + edges[:-1])[:, None]
        half = 0.5 * (edges[1:] - edges[:-1])[:, None]
        t = (mid + half * gl_x[None, :]).ravel()
        wt = (half * gl_w[None, :]).ravel()
        x = a + 0.5 * (b - a) * (1.0 - np.cos(t))
        jac = 0.5 * (b - a) * np.sin(t)
        nodes.append(x)
        weights.append(wt * jac)
    x = np.concatenate(nodes)
    w = np.concatenate(weights)

    jv = np.asarray(J(g * x), dtype=float)
    if np.any(jv < 0) or np.any(~np.isfinite(jv)):
        raise NegativeDensity(f"{J.family} density is negative or non-finite on the grid")
    w = w * g * jv / math.pi
    if not np.any(w > 0):
        raise EmptyMass(f"{J.family} density has zero mass on {J.support}")
    return DiscretizedMeasure(x, w, g, J.to_config())


def recurrence_coefficients(measure: DiscretizedMeasure, n: int) -> ChainCoefficients:
    """First ``n`` monic recurrence coefficients of a discrete measure.

    Lanczos on ``diag(nodes)`` started from ``sqrt(weights)``, with full
    reorthogonalisation. Returns ``alphas[0:n]`` and ``betas[1:n]``.

    Raises
    ------
    OversamplingError
        if ``n`` exceeds half the number of quadrature nodes.
    RecurrenceBreakdown
        if a beta is nonpositive or numerically zero; carries the index and
        the valid prefix.
    """
    n = int(n)
    if n < 1:
        raise ValueError("chain length must be >= 1")
    if 2 * n > len(measure):
        raise OversamplingError(
            f"chain length {n} needs at least {2 * n} quadrature points, have {len(measure)}"
        )
    x = measure.nodes
    mass = measure.mass
    eta = math.sqrt(mass)
    scale = max(1.0, float(np.max(np.abs(x))))

    Q = np.zeros((n, x.size))
    alphas = np.zeros(n)
    betas = np.zeros(max(n - 1, 0))
    q = np.sqrt(measure.weights) / eta
    q_prev = np.zeros_like(q)
    b_prev = 0.0
    for k in range(n):
        Q[k] = q
        xq = x * q
        alphas[k] = np.dot(q, xq)
        if k == n - 1:
            break
        r = xq - alphas[k] * q - b_prev * q_prev
        for _ in range(2):
            r -= Q[: k + 1].T @ (Q[: k + 1] @ r)
        b = float(np.linalg.norm(r))
        if not b > 1e-13 * scale:
            partial = ChainCoefficients(eta, alphas[: k + 1], betas[:k], measure.g, measure.density)
            raise RecurrenceBreakdown(
                f"recurrence breakdown at beta index {k + 1} (|r| = {b:.3e})", k + 1, partial
            )
        betas[k] = b * b
        q_prev, q, b_prev = q, r / b, b
    return ChainCoefficients(eta, alphas, betas, measure.g, measure.density)


def chain_hamiltonian_params(coeffs: ChainCoefficients) -> ChainParameters:
    """Site energies, nearest-neighbour hoppings and system coupling of the chain."""
    g = coeffs.g_scale
    return ChainParameters(g * coeffs.alphas, g * np.sqrt(coeffs.betas), float(coeffs.eta))


def _drift(a: ChainCoefficients, b: ChainCoefficients, scale: float) -> float:
    da = np.abs(a.alphas - b.alphas) / np.maximum(np.abs(a.alphas), scale)
    db = np.abs(a.betas - b.betas) / a.betas
    de = abs(a.eta - b.eta) / max(a.eta, 1e-300)
    return float(max(da.max(initial=0.0), db.max(initial=0.0), de))


def chain_coefficients(
    J: SpectralDensity,
    n: int,
    g: float = 1.0,
    quadrature_points: int | None = None,
    tol: float = 1e-10,
    max_points: int = 2**17,
) -> ChainCoefficients:
    """Chain coefficients with the quadrature grid doubled until converged.

    The grid starts at ``quadrature_points`` (default 64 x 32 nodes, at least
    four nodes per requested coefficient) and doubles until the relative
    drift of every coefficient falls below ``tol`` or ``max_points`` is hit.
    """
    pts = quadrature_points or DEFAULT_PANELS * DEFAULT_NODES_PER_PANEL
    pts = max(pts, 4 * n)
    scale = 0.5 * (J.support[1] - J.support[0]) / g
    prev = recurrence_coefficients(discretize_measure(J, pts, g), n)
    while pts < max_points:
        pts *= 2
        cur = recurrence_coefficients(discretize_measure(J, pts, g), n)
        if _drift(prev, cur, scale) < tol:
            return cur
        prev = cur
    return prev
