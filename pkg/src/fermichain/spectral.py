"""Spectral densities of fermionic environments and their finite-temperature transforms.

Energies are measured in units of the half bandwidth, with hbar = k_B = 1.
A spectral density is a nonnegative function on a compact frequency interval;
it is evaluated vectorised and vanishes outside its support.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.interpolate import PchipInterpolator
from scipy.special import expit

from .errors import EmptySupport, ExtrapolationError, NonzeroChemicalPotential, Unsupported

__all__ = [
    "SpectralDensity",
    "ThermalParameters",
    "fermi_dirac",
    "thermalized_density",
    "thermofield_split",
    "reflect",
]


@dataclass(frozen=True)
class ThermalParameters:
    """Inverse temperature and chemical potential of a bath.

    ``beta = math.inf`` is the zero-temperature sentinel and is treated exactly.
    """

    beta: float = math.inf
    mu: float = 0.0

    def __post_init__(self):
        if not self.beta >= 0:
            raise ValueError(f"beta must be >= 0, got {self.beta}")

    @property
    def zero_temperature(self) -> bool:
        return math.isinf(self.beta)

    def to_config(self) -> dict:
        return {"beta": "inf" if self.zero_temperature else self.beta, "mu": self.mu}

    @classmethod
    def from_config(cls, cfg: dict) -> "ThermalParameters":
        beta = cfg.get("beta", math.inf)
        return cls(beta=float(beta), mu=float(cfg.get("mu", 0.0)))


def fermi_dirac(omega: ArrayLike, p: ThermalParameters) -> NDArray | float:
    """Occupation ``1/(exp(beta (omega - mu)) + 1)``, overflow safe.

    At zero temperature this is a step function that takes the value 1/2
    exactly at the chemical potential.
    """
    x = np.asarray(omega, dtype=float) - p.mu
    if p.zero_temperature:
        out = np.where(x < 0, 1.0, np.where(x > 0, 0.0, 0.5))
    elif p.beta == 0:
        out = np.full_like(x, 0.5)
    else:
        out = expit(-p.beta * x)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class SpectralDensity:
    """A spectral density J(omega) with compact support.

    Use the constructors :meth:`constant`, :meth:`newns`, :meth:`tabulated`
    or :meth:`from_config` rather than instantiating directly.

    ``breakpoints`` lists interior frequencies where J or one of its
    derivatives is not smooth; quadrature panels are split there.
    """

    family: str
    support: tuple[float, float]
    params: dict[str, Any]
    func: Callable[[NDArray], NDArray] = field(repr=False, compare=False)
    breakpoints: tuple[float, ...] = ()

    def __post_init__(self):
        lo, hi = self.support
        if not lo < hi:
            raise EmptySupport(f"empty support [{lo}, {hi}]")

    def __call__(self, omega: ArrayLike) -> NDArray | float:
        w = np.asarray(omega, dtype=float)
        lo, hi = self.support
        inside = (w >= lo) & (w <= hi)
        if self.family == "tabulated" and not np.all(inside):
            raise ExtrapolationError("tabulated density evaluated outside its table")
        out = np.zeros_like(w)
        if np.any(inside):
            out[inside] = self.func(w[inside])
        return float(out) if out.ndim == 0 else out

    @property
    def intervals(self) -> list[tuple[float, float]]:
        """Support split at the breakpoints into smooth pieces."""
        lo, hi = self.support
        pts = [lo] + sorted(b for b in set(self.breakpoints) if lo < b < hi) + [hi]
        return list(zip(pts[:-1], pts[1:]))

    def to_config(self) -> dict:
        cfg = {"family": self.family}
        cfg.update(self.params)
        if self.family in ("constant", "newns"):
            cfg["support"] = list(self.support)
        return cfg

    # -- constructors ----------------------------------------------------

    @classmethod
    def constant(cls, gamma: float, support=(-1.0, 1.0)) -> "SpectralDensity":
        gamma = float(gamma)
        return cls(
            "constant",
            (float(support[0]), float(support[1])),
            {"gamma": gamma},
            lambda w: np.full_like(w, gamma),
        )

    @classmethod
    def newns(cls, gamma: float, support=(0.0, 2.0)) -> "SpectralDensity":
        """Semicircular band ``(gamma/2) sqrt(1 - ((w - c)/r)^2)`` over ``support``."""
        gamma = float(gamma)
        lo, hi = float(support[0]), float(support[1])
        c, r = 0.5 * (lo + hi), 0.5 * (hi - lo)

        def f(w):
            x = (w - c) / r
            return 0.5 * gamma * np.sqrt(np.clip(1.0 - x * x, 0.0, None))

        return cls("newns", (lo, hi), {"gamma": gamma}, f)

    @classmethod
    def tabulated(cls, omegas: ArrayLike, values: ArrayLike) -> "SpectralDensity":
        """Monotone cubic interpolation of sampled values; no extrapolation."""
        w = np.asarray(omegas, dtype=float)
        v = np.asarray(values, dtype=float)
        if w.ndim != 1 or w.shape != v.shape or w.size < 2:
            raise ValueError("tabulated density needs matching 1d arrays of length >= 2")
        if np.any(np.diff(w) <= 0):
            raise ValueError("tabulated frequencies must be strictly increasing")
        interp = PchipInterpolator(w, v, extrapolate=False)
        return cls(
            "tabulated",
            (float(w[0]), float(w[-1])),
            {"omegas": w.tolist(), "values": v.tolist()},
            lambda x: interp(x),
        )

    @classmethod
    def from_config(cls, cfg: dict) -> "SpectralDensity":
        family = cfg.get("family")
        if family == "constant":
            return cls.constant(cfg["gamma"], tuple(cfg.get("support", (-1.0, 1.0))))
        if family == "newns":
            return cls.newns(cfg["gamma"], tuple(cfg.get("support", (0.0, 2.0))))
        if family == "tabulated":
            return cls.tabulated(cfg["omegas"], cfg["values"])
        raise ValueError(f"unknown spectral density family {family!r}")


def _check_positive_support(J: SpectralDensity) -> None:
    if J.support[0] < 0:
        raise ValueError(
            f"thermal transforms need a density supported on [0, wmax], got {J.support}"
        )


def thermalized_density(
    J: SpectralDensity, p: ThermalParameters, statistics: str = "fermion"
) -> SpectralDensity:
    """Temperature-weighted extension of J to negative frequencies.

    ``J_beta(w) = J(|w|) / 2 * (tanh(beta w / 2) + 1)`` on ``[-wmax, wmax]``.
    Vacuum dynamics under J_beta reproduce thermal dynamics under J, provided
    the coupling factorises and the chemical potential vanishes.
    """
    if statistics != "fermion":
        raise Unsupported("only the fermionic thermalized density is implemented")
    if p.mu != 0:
        raise NonzeroChemicalPotential(
            "the thermalized density requires mu = 0 (factorised coupling and "
            "vanishing chemical potential)"
        )
    _check_positive_support(J)
    lo, hi = J.support

    def f(w):
        # (tanh(x/2) + 1)/2 == expit(x)
        return J(np.abs(w)) * fermi_dirac(-w, p)

    bps = {0.0} | {-b for b in J.breakpoints} | set(J.breakpoints)
    if lo > 0:
        bps |= {-lo, lo}
    return SpectralDensity(
        "thermalized",
        (-hi, hi),
        {"base": J.to_config(), **p.to_config()},
        f,
        tuple(sorted(bps)),
    )


def thermofield_split(
    J: SpectralDensity, p: ThermalParameters
) -> tuple[SpectralDensity, SpectralDensity]:
    """Split J into the particle and hole baths of the thermofield transform.

    Returns ``(J1, J2)`` with ``J1 = J (1 - n)`` and ``J2 = J n`` on the
    support of J, where ``n`` is the Fermi-Dirac occupation. The hole bath
    carries energies ``-w``; use :func:`reflect` on J2 to obtain it as a
    density over its physical (negative) frequencies.
    """
    _check_positive_support(J)

    def u2(w):
        return 1.0 - fermi_dirac(w, p)

    def v2(w):
        return fermi_dirac(w, p)

    cfg = {"base": J.to_config(), **p.to_config()}
    J1 = SpectralDensity("thermofield_particle", J.support, cfg, lambda w: J(w) * u2(w), J.breakpoints)
    J2 = SpectralDensity("thermofield_hole", J.support, cfg, lambda w: J(w) * v2(w), J.breakpoints)
    return J1, J2


def reflect(J: SpectralDensity) -> SpectralDensity:
    """Density ``w -> J(-w)`` on the mirrored support."""
    lo, hi = J.support
    return SpectralDensity(
        "reflected",
        (-hi, -lo),
        {"base": J.to_config()},
        lambda w: J(-w),
        tuple(sorted(-b for b in J.breakpoints)),
    )
