"""Config-driven experiments: model assembly, state preparation, evolution and references.

A configuration is a single JSON document with the blocks ``model``,
``discretization``, ``evolution``, ``preparation`` and ``outputs``; see
``configs/`` for complete examples and :data:`DEFAULTS` for every default.
"""

from __future__ import annotations

import copy
import csv
import json
import math
import platform
import time
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Sequence

import numpy as np
import scipy
from numpy.typing import NDArray

from . import __version__
from .chainmap import ChainParameters, chain_coefficients, chain_hamiltonian_params
from .errors import ConfigInvalid, DegenerateFermiLevel, EmptyMass, Unsupported
from .fermionchain import (
    FermionHamiltonianSpec,
    NUMBER,
    SpinChainHamiltonian,
    build_dimer,
    build_modified_rlm,
    build_quantum_dot,
    build_rlm,
    jordan_wigner_hamiltonian,
    jordan_wigner_observable,
)
from .oracle import (
    bdg_hamiltonian,
    correlation_series,
    dephasing_coherence,
    ground_correlation,
    linear_discretize,
    nambu_correlation,
    nambu_series,
    quadratic_form,
    star_hamiltonian,
)
from .spectral import SpectralDensity, ThermalParameters, fermi_dirac, reflect, thermalized_density, thermofield_split
from .tensor import (
    TensorTrain,
    TrotterScheme,
    TruncationPolicy,
    compress,
    dmrg_ground_state,
    expectation,
    tebd_evolve,
)

__all__ = [
    "DEFAULTS",
    "MODELS",
    "METHOD_ALIASES",
    "load_config",
    "validate_config",
    "RunArtifacts",
    "run",
    "compare_methods",
    "prepare_ground_state",
    "thermal_chain_operator",
]

MODELS = ("rlm", "modified_rlm", "quantum_dot", "dimer")
THERMAL_METHODS = ("none", "thermalized", "thermofield", "mpo")
METHOD_ALIASES = {"tt": "thermalized", "tf": "thermofield", "mpo": "mpo"}

MODEL_DEFAULTS = {
    "rlm": {
        "E_imp_initial": 0.0,
        "E_imp": -0.2,
        "spectral_density": {"family": "constant", "gamma": 0.1, "support": [-1.0, 1.0]},
        "thermal": {"beta": "inf", "mu": 0.0},
    },
    "modified_rlm": {
        "E_imp": 0.3,
        "initial_occupation": 1,
        "spectral_density": {"family": "constant", "gamma": 0.4, "support": [0.0, 2.0]},
        "thermal": {"beta": 1.0, "mu": 0.0},
    },
    "quantum_dot": {
        "delta": 0.2,
        "v": 0.2,
        "E_imp": 0.0,
        "spectral_density": {"family": "constant", "gamma": 0.1, "support": [-1.0, 1.0]},
        "thermal": {"beta": "inf", "mu": 0.0},
    },
    "dimer": {
        "h": 0.6,
        "detuning": 0.01,
        "g": 0.1,
        "U": 0.0,
        "spectral_density": {"family": "newns", "gamma": 0.5, "support": [0.0, 2.0]},
        "thermal": {"beta": 1.0, "mu": 0.0},
    },
}

MODEL_OBSERVABLES = {
    "rlm": ("occupation",),
    "modified_rlm": ("occupation",),
    "quantum_dot": ("coherence",),
    "dimer": ("n_left", "n_right", "current"),
}

DEFAULTS = {
    "name": "experiment",
    "discretization": {
        "chain_length": 10,
        "quadrature_points": None,
        "thermal_method": "none",
        "split_ratio": 0.5,
    },
    "evolution": {
        "dt": 0.1,
        "order": 4,
        "t_max": 10.0,
        "epsilon": 1e-8,
        "xi": 64,
        "xi_operator": None,
        "picture": "schroedinger",
        "strict": True,
        "record_every": 1,
    },
    "preparation": {
        "dmrg_sweeps": 10,
        "epsilon": 1e-8,
        "xi": 64,
        "imaginary_dt": None,
        "imaginary_order": None,
        "imaginary_epsilon": None,
        "imaginary_xi": None,
    },
    "outputs": {
        "observables": None,
        "reference": False,
        "n_ed": 200,
    },
}

_BLOCKS = ("name", "model", "discretization", "evolution", "preparation", "outputs")


# -- configuration -----------------------------------------------------------


def load_config(path: str | Path) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as err:
        raise ConfigInvalid(f"{path}: not valid JSON ({err})", "json") from err


def _merge(defaults: dict, given: dict, where: str) -> dict:
    unknown = set(given) - set(defaults)
    if unknown:
        raise ConfigInvalid(f"unknown keys in {where}: {sorted(unknown)}", "unknown-key")
    out = copy.deepcopy(defaults)
    out.update(copy.deepcopy(given))
    return out


def _beta(value) -> float:
    if isinstance(value, str):
        if value.lower() in ("inf", "infinity"):
            return math.inf
        raise ConfigInvalid(f"beta must be a number or 'inf', got {value!r}", "thermal-beta")
    return float(value)


def _require(cond: bool, message: str, rule: str) -> None:
    if not cond:
        raise ConfigInvalid(message, rule)


def validate_config(cfg: dict) -> dict:
    """Check a configuration and return it with every default filled in.

    Raises
    ------
    ConfigInvalid
        naming the violated rule, e.g. ``thermalized-factorized-coupling``
        when the thermalized method is requested for a hopping-coupled model.
    """
    if not isinstance(cfg, dict):
        raise ConfigInvalid("configuration must be a JSON object", "structure")
    unknown = set(cfg) - set(_BLOCKS)
    _require(not unknown, f"unknown blocks {sorted(unknown)}", "unknown-key")
    _require("model" in cfg and isinstance(cfg["model"], dict), "missing model block", "model-missing")
    name = cfg["model"].get("name")
    _require(name in MODELS, f"unknown model {name!r}; expected one of {MODELS}", "model-name")

    model = _merge({"name": name, **MODEL_DEFAULTS[name]}, cfg["model"], "model")
    model["spectral_density"] = dict(model["spectral_density"])
    model["thermal"] = _merge({"beta": "inf", "mu": 0.0}, model["thermal"], "model.thermal")
    out = {
        "name": str(cfg.get("name", DEFAULTS["name"])),
        "model": model,
        "discretization": _merge(DEFAULTS["discretization"], cfg.get("discretization", {}), "discretization"),
        "evolution": _merge(DEFAULTS["evolution"], cfg.get("evolution", {}), "evolution"),
        "preparation": _merge(DEFAULTS["preparation"], cfg.get("preparation", {}), "preparation"),
        "outputs": _merge(DEFAULTS["outputs"], cfg.get("outputs", {}), "outputs"),
    }
    disc, evo, prep, outs = out["discretization"], out["evolution"], out["preparation"], out["outputs"]

    try:
        J = SpectralDensity.from_config(model["spectral_density"])
    except (ValueError, KeyError, TypeError) as err:
        raise ConfigInvalid(f"invalid spectral density: {err}", "spectral-density") from err
    beta = _beta(model["thermal"]["beta"])
    _require(beta >= 0, "beta must be nonnegative", "thermal-beta")
    mu = float(model["thermal"]["mu"])

    n = disc["chain_length"]
    _require(isinstance(n, int) and n >= 1, "chain_length must be a positive integer", "chain-length")
    qp = disc["quadrature_points"]
    _require(qp is None or (isinstance(qp, int) and qp >= 2 * n), "quadrature_points must be >= 2 N", "quadrature-points")
    method = disc["thermal_method"]
    _require(method in THERMAL_METHODS, f"thermal_method must be one of {THERMAL_METHODS}", "thermal-method")
    _require(0 < float(disc["split_ratio"]) < 1, "split_ratio must lie in (0, 1)", "split-ratio")

    _require(float(evo["dt"]) > 0, "dt must be positive", "dt")
    _require(evo["order"] in (2, 4), "Trotter order must be 2 or 4", "trotter-order")
    _require(float(evo["t_max"]) > 0, "t_max must be positive", "t-max")
    for blk, key in ((evo, "epsilon"), (prep, "epsilon")):
        _require(0 <= float(blk[key]) < 1, "epsilon must lie in [0, 1)", "policy-epsilon")
    for blk, key in ((evo, "xi"), (prep, "xi"), (evo, "xi_operator"), (prep, "imaginary_xi")):
        if blk[key] is None and key != "xi":
            continue
        _require(blk[key] == "inf" or (isinstance(blk[key], (int, float)) and blk[key] >= 1), "xi must be >= 1", "policy-xi")
    _require(evo["picture"] in ("schroedinger", "heisenberg"), "picture must be schroedinger or heisenberg", "picture")
    _require(isinstance(evo["record_every"], int) and evo["record_every"] >= 1, "record_every must be >= 1", "record-every")
    _require(isinstance(prep["dmrg_sweeps"], int) and prep["dmrg_sweeps"] >= 1, "dmrg_sweeps must be >= 1", "dmrg-sweeps")

    obs = outs["observables"] or list(MODEL_OBSERVABLES[name])
    bad = [o for o in obs if o not in MODEL_OBSERVABLES[name]]
    _require(not bad, f"observables {bad} not defined for {name}", "observables")
    outs["observables"] = list(obs)
    _require(isinstance(outs["n_ed"], int) and outs["n_ed"] >= 2, "n_ed must be >= 2", "n-ed")

    # model/method compatibility
    factorized = name == "modified_rlm"
    if method == "thermalized":
        _require(
            factorized,
            f"the thermalized method needs a factorised coupling (d^+ - d) x (b + b^+); {name} couples by hopping",
            "thermalized-factorized-coupling",
        )
        _require(mu == 0, "the thermalized method needs mu = 0", "thermalized-zero-mu")
    if name in ("rlm", "quantum_dot"):
        _require(method == "none", f"{name} starts from the ground state; thermal_method must be 'none'", "ground-state-model")
        _require(math.isinf(beta), f"{name} is a zero-temperature model; beta must be 'inf'", "ground-state-model")
    if name == "modified_rlm":
        _require(method != "none" or math.isinf(beta), "finite beta needs a thermal method", "thermal-method-required")
        _require(J.support[0] >= 0, "modified_rlm needs a density on [0, wmax]", "positive-support")
        _require(model["initial_occupation"] in (0, 1), "initial_occupation must be 0 or 1", "initial-occupation")
        if method == "thermofield":
            _require(mu == 0, "the thermofield split is implemented for mu = 0", "thermofield-zero-mu")
    if name == "dimer":
        _require(
            method in ("mpo", "none"),
            "the dimer's right bath couples by hopping and has a single free side; use the mpo method",
            "dimer-thermal-method",
        )
        _require(method == "mpo" or math.isinf(beta), "finite beta needs the mpo method", "thermal-method-required")
        _require(J.support[0] >= 0, "dimer baths need a density on [0, wmax]", "positive-support")
        if outs["reference"]:
            _require(float(model["U"]) == 0, "the free-fermion reference needs U = 0", "reference-quadratic")
    return out


# -- model assembly ------------------------------------------------------------


def _policy(block: dict, eps_key="epsilon", xi_key="xi") -> TruncationPolicy:
    xi = block[xi_key]
    return TruncationPolicy(float(block[eps_key]), math.inf if xi == "inf" else xi)


def _chain(J: SpectralDensity, n: int, qp) -> ChainParameters:
    return chain_hamiltonian_params(chain_coefficients(J, n, quadrature_points=qp))


def _spread(n_particles: int, n_sites: int) -> list[int]:
    """Product-state occupations with ``n_particles`` spread evenly."""
    return [int((i + 1) * n_particles // n_sites - i * n_particles // n_sites) for i in range(n_sites)]


def prepare_ground_state(
    spec: FermionHamiltonianSpec, sweeps: int, policy: TruncationPolicy, mu: float = 0.0
) -> tuple[TensorTrain, dict]:
    """DMRG ground state of a quadratic, number-conserving model at chemical potential ``mu``.

    The particle number is read off the single-particle spectrum. If one
    level sits exactly at ``mu`` the ground state is degenerate between two
    number sectors; both are computed (a tiny ``+-bias N`` term, which
    commutes with ``H``, selects the sector) and superposed with equal
    weights. Every number-conserving observable then sees the level half
    filled, as in the free-fermion reference.
    """
    A, B = quadratic_form(spec)
    if np.any(B != 0):
        raise Unsupported("ground-state preparation needs a number-conserving model")
    lam = np.linalg.eigvalsh(A) - mu
    tol = 1e-10
    n_below = int(np.sum(lam < -tol))
    zero = int(np.sum(np.abs(lam) <= tol))
    if zero > 1:
        raise Unsupported(f"{zero} levels at the Fermi energy; ground state is not unique up to one level")
    H = jordan_wigner_hamiltonian(spec)
    n = spec.n_sites
    info: dict[str, Any] = {"particles": n_below, "zero_modes": zero}
    if mu:
        H.one_site_terms.extend((k, -mu * NUMBER) for k in range(n))
    if zero == 0:
        res = dmrg_ground_state(H, sweeps, policy, _spread(n_below, n))
        info.update(energy=res.energy, sweep_energies=res.sweep_energies, converged=res.converged)
        return res.state, info

    gap = float(np.min(np.abs(lam[np.abs(lam) > tol]))) if np.any(np.abs(lam) > tol) else 1.0
    bias = 0.25 * gap
    states = []
    info["sector_energies"] = []
    for particles, sign in ((n_below, 1.0), (n_below + 1, -1.0)):
        Hb = SpinChainHamiltonian(n, list(H.one_site_terms) + [(k, sign * bias * NUMBER) for k in range(n)], list(H.two_site_terms))
        res = dmrg_ground_state(Hb, sweeps, policy, _spread(particles, n))
        info["sector_energies"].append(res.energy - sign * bias * particles)
        info.setdefault("converged", True)
        info["converged"] &= res.converged
        states.append(res.state.scale(1.0 / res.state.norm()))
    psi = (states[0] + states[1]).scale(1.0 / math.sqrt(2.0))
    psi, _ = compress(psi, TruncationPolicy(min(policy.epsilon, 1e-12)))
    info["energy"] = float(np.mean(info["sector_energies"]))
    return psi, info


def _env_hamiltonian(chain: ChainParameters) -> SpinChainHamiltonian:
    spec = FermionHamiltonianSpec([f"b{k}" for k in range(len(chain.site_energies))])
    for k, e in enumerate(chain.site_energies):
        spec.add("number", [k], float(e))
    for k, t in enumerate(chain.hoppings):
        spec.add("hopping", [k, k + 1], float(t))
    return jordan_wigner_hamiltonian(spec)


def thermal_chain_operator(
    chain: ChainParameters, beta: float, scheme: TrotterScheme, policy: TruncationPolicy
) -> TensorTrain:
    """Gibbs state ``exp(-beta H_chain)/Z`` of a free chain as an MPO.

    Obtained by imaginary-time evolution of the normalised identity with
    ``scheme``; a remainder shorter than one step is applied as a final
    shorter step. ``beta = inf`` returns the vacuum projector, the ground
    state of a chain whose levels all lie above ``mu = 0``.
    """
    n = len(chain.site_energies)
    if math.isinf(beta):
        return TensorTrain.product_operator([np.diag([1.0, 0.0])] * n)
    rho = TensorTrain.identity(n).scale(2.0**-n)
    if beta == 0:
        return rho
    H = _env_hamiltonian(chain)
    steps = int(math.floor(beta / scheme.dt + 1e-9))
    if steps:
        rho = tebd_evolve(rho, H, steps * scheme.dt, scheme, policy, imaginary=True, strict=False).state
    rest = beta - steps * scheme.dt
    if rest > 1e-9 * scheme.dt:
        rho = tebd_evolve(rho, H, rest, TrotterScheme(scheme.order, rest), policy, imaginary=True, strict=False).state
    return rho


@dataclass
class _Problem:
    """Everything a single evolution needs."""

    H: SpinChainHamiltonian
    initial: TensorTrain
    observables: dict[str, TensorTrain]
    transform: dict[str, Callable[[complex], float]]
    sites: dict[str, int]
    info: dict = field(default_factory=dict)


def _real(x: complex) -> float:
    return float(np.real(x))


def _build_problem(cfg: dict) -> _Problem:
    model, disc, evo, prep = cfg["model"], cfg["discretization"], cfg["evolution"], cfg["preparation"]
    name = model["name"]
    J = SpectralDensity.from_config(model["spectral_density"])
    p = ThermalParameters(_beta(model["thermal"]["beta"]), float(model["thermal"]["mu"]))
    n = disc["chain_length"]
    qp = disc["quadrature_points"]
    method = disc["thermal_method"]
    gs_policy = _policy(prep)
    ite_scheme = TrotterScheme(prep["imaginary_order"] or evo["order"], float(prep["imaginary_dt"] or evo["dt"]))
    ite_policy = TruncationPolicy(
        float(prep["imaginary_epsilon"] if prep["imaginary_epsilon"] is not None else evo["epsilon"]),
        math.inf if (prep["imaginary_xi"] or evo["xi"]) == "inf" else (prep["imaginary_xi"] or evo["xi"]),
    )
    info: dict[str, Any] = {}

    if name == "rlm":
        chain = _chain(J, n, qp)
        spec0 = build_rlm(float(model["E_imp_initial"]), chain)
        psi, info["ground_state"] = prepare_ground_state(spec0, prep["dmrg_sweeps"], gs_policy, p.mu)
        H = jordan_wigner_hamiltonian(build_rlm(float(model["E_imp"]), chain))
        obs = {"occupation": jordan_wigner_observable([("n", 0)], n + 1)}
        return _Problem(H, psi, obs, {"occupation": _real}, {"impurity": 0}, info)

    if name == "quantum_dot":
        chain = _chain(J, n, qp)
        el = build_rlm(float(model["E_imp"]), chain)
        psi_el, info["ground_state"] = prepare_ground_state(el, prep["dmrg_sweeps"], gs_policy, p.mu)
        plus = np.array([1.0, 1.0]) / math.sqrt(2.0)
        psi = TensorTrain([plus.reshape(1, 2, 1).astype(complex)] + psi_el.tensors, "state", 2)
        H = jordan_wigner_hamiltonian(build_quantum_dot(float(model["delta"]), float(model["v"]), float(model["E_imp"]), chain))
        # rho_01 = tr(rho |1><0|); coherence = 2 |rho_01|
        flip = TensorTrain.product_operator([np.array([[0.0, 0.0], [1.0, 0.0]])] + [np.eye(2)] * (n + 1))
        return _Problem(H, psi, {"coherence": flip}, {"coherence": lambda z: 2.0 * abs(z)}, {"tls": 0, "impurity": 1}, info)

    if name == "modified_rlm":
        E = float(model["E_imp"])
        occ = int(model["initial_occupation"])
        if method in ("none", "thermalized"):
            Jc = J if method == "none" else thermalized_density(J, p)
            chain = _chain(Jc, n, qp)
            H = jordan_wigner_hamiltonian(build_modified_rlm(E, chain))
            psi = TensorTrain.basis_state([occ] + [0] * n)
            obs = {"occupation": jordan_wigner_observable([("n", 0)], n + 1)}
            info["chains"] = {"particle": n}
            return _Problem(H, psi, obs, {"occupation": _real}, {"impurity": 0}, info)
        if method == "thermofield":
            J1, J2 = thermofield_split(J, p)
            n1 = min(n - 1, max(1, int(round(disc["split_ratio"] * n)))) if n > 1 else 1
            n2 = n - n1
            chain1 = _chain(J1, n1, qp)
            try:
                chain2 = _chain(reflect(J2), n2, qp) if n2 > 0 else None
            except EmptyMass:
                chain2, n1, n2 = None, n, 0
                chain1 = _chain(J1, n1, qp)
            H = jordan_wigner_hamiltonian(build_modified_rlm(E, chain1, chain2))
            psi = TensorTrain.basis_state([0] * n2 + [occ] + [0] * n1)
            obs = {"occupation": jordan_wigner_observable([("n", n2)], n + 1)}
            info["chains"] = {"particle": n1, "hole": n2}
            return _Problem(H, psi, obs, {"occupation": _real}, {"impurity": n2}, info)
        # mpo: chain of the bare density, Gibbs state by imaginary time
        chain = _chain(J, n, qp)
        H = jordan_wigner_hamiltonian(build_modified_rlm(E, chain))
        rho_env = thermal_chain_operator(chain, p.beta, ite_scheme, ite_policy)
        d_op = np.diag([1.0 - occ, float(occ)]).reshape(1, 4, 1).astype(complex)
        rho = TensorTrain([d_op] + rho_env.tensors, "operator", 2)
        obs = {"occupation": jordan_wigner_observable([("n", 0)], n + 1)}
        info["chains"] = {"particle": n}
        return _Problem(H, rho, obs, {"occupation": _real}, {"impurity": 0}, info)

    # dimer: [left chain reversed | dL | dR | right chain]
    left = _chain(J, n, qp)
    right = left
    H = jordan_wigner_hamiltonian(
        build_dimer(float(model["h"]), float(model["detuning"]), float(model["g"]), float(model["U"]), left, right)
    )
    total = 2 * n + 2
    dl, dr = n, n + 1
    vac = np.diag([1.0, 0.0]).reshape(1, 4, 1).astype(complex)
    rho_r = thermal_chain_operator(right, p.beta, ite_scheme, ite_policy)
    rho = TensorTrain([vac] * (n + 2) + rho_r.tensors, "operator", 2)
    g = float(model["g"])
    cur = jordan_wigner_observable(
        [(g / 2j, [("cdag", dl), ("c", dr)]), (-g / 2j, [("cdag", dr), ("c", dl)])], total
    )
    obs = {
        "n_left": jordan_wigner_observable([("n", dl)], total),
        "n_right": jordan_wigner_observable([("n", dr)], total),
        "current": cur,
    }
    tr = {k: _real for k in obs}
    return _Problem(H, rho, obs, tr, {"left": dl, "right": dr}, info)


# -- references ------------------------------------------------------------------


def reference_series(cfg: dict, times: NDArray) -> dict[str, NDArray]:
    """Free-fermion reference for every requested observable.

    Baths are discretised linearly with ``outputs.n_ed`` modes each.
    """
    model = cfg["model"]
    name = model["name"]
    n_ed = cfg["outputs"]["n_ed"]
    J = SpectralDensity.from_config(model["spectral_density"])
    p = ThermalParameters(_beta(model["thermal"]["beta"]), float(model["thermal"]["mu"]))
    e, g = linear_discretize(J, n_ed)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DegenerateFermiLevel)
        if name == "rlm":
            h0 = star_hamiltonian([[model["E_imp_initial"]]], e, g)
            h1 = star_hamiltonian([[model["E_imp"]]], e, g)
            C0 = ground_correlation(h0, p.mu)
            return {"occupation": correlation_series(C0, h1, times, [(0, 0)])[:, 0].real}
        if name == "quantum_dot":
            h = star_hamiltonian([[model["E_imp"]]], e, g)
            C0 = ground_correlation(h, p.mu)
            shift = np.zeros_like(h)
            shift[0, 0] = 0.5 * float(model["v"])
            vals = [dephasing_coherence(C0, h + shift, h - shift, t) for t in times]
            return {"coherence": np.array(vals)}
    if name == "modified_rlm":
        A = star_hamiltonian([[model["E_imp"]]], e, g)
        m = A.shape[0]
        B = np.zeros_like(A)
        B[0, 1:] = g
        B[1:, 0] = -g
        occ = np.concatenate([[float(model["initial_occupation"])], fermi_dirac(e, p)])
        G = nambu_correlation(np.diag(occ))
        K = bdg_hamiltonian(A, B)
        return {"occupation": nambu_series(G, K, times, [(m, m)])[:, 0].real}
    # dimer, U = 0: [left bath | dL dR | right bath]
    nb = e.size
    m = 2 * nb + 2
    dl, dr = nb, nb + 1
    h = np.zeros((m, m), dtype=complex)
    h[dl, dl] = model["h"] + 0.5 * model["detuning"]
    h[dr, dr] = model["h"] - 0.5 * model["detuning"]
    h[dl, dr] = h[dr, dl] = -0.5 * model["g"]
    h[:nb, :nb] = np.diag(e)
    h[dr + 1 :, dr + 1 :] = np.diag(e)
    h[dl, :nb] = h[:nb, dl] = g
    h[dr, dr + 1 :] = h[dr + 1 :, dr] = g
    occ = np.zeros(m)
    occ[dr + 1 :] = fermi_dirac(e, p)
    ser = correlation_series(np.diag(occ).astype(complex), h, times, [(dl, dl), (dr, dr), (dl, dr)])
    return {
        "n_left": ser[:, 0].real,
        "n_right": ser[:, 1].real,
        "current": float(model["g"]) * ser[:, 2].imag,
    }


# -- running -----------------------------------------------------------------------


@dataclass
class RunArtifacts:
    config: dict
    columns: dict[str, NDArray]
    meta: dict
    csv_path: Path | None = None
    json_path: Path | None = None

    def column(self, name: str) -> NDArray:
        return self.columns[name]


def _versions() -> dict:
    return {"fermichain": __version__, "numpy": np.__version__, "scipy": scipy.__version__, "python": platform.python_version()}


def _evolve(prob: _Problem, cfg: dict, progress: Callable | None):
    evo = cfg["evolution"]
    scheme = TrotterScheme(evo["order"], float(evo["dt"]))
    # xi_operator, when set, replaces xi for density-operator (mpo method) runs
    mixed = prob.initial.kind == "operator" and evo["xi_operator"] is not None
    policy = _policy(evo, xi_key="xi_operator" if mixed else "xi")
    names = cfg["outputs"]["observables"]
    kw = dict(record_every=evo["record_every"], strict=bool(evo["strict"]))
    if evo["picture"] == "schroedinger":
        obs = {k: prob.observables[k] for k in names}
        res = tebd_evolve(prob.initial, prob.H, float(evo["t_max"]), scheme, policy, observables=obs, callback=progress, **kw)
        recs = res.records
        values = {k: np.array([prob.transform[k](r.observables[k]) for r in recs]) for k in names}
        bonds = np.array([r.bond_dims for r in recs])
        params = np.array([r.n_params for r in recs])
        disc = np.array([r.discarded for r in recs])
        return np.array([r.time for r in recs]), values, bonds, params, disc
    # Heisenberg picture: evolve each observable, contract with the initial state
    values, bonds, params, disc, times = {}, None, None, None, None
    ref = prob.initial
    for k in names:
        res = tebd_evolve(
            prob.observables[k], prob.H, float(evo["t_max"]), scheme, policy,
            heisenberg=True, observables={k: lambda O: _heisenberg_value(ref, O)}, callback=progress, **kw,
        )
        recs = res.records
        values[k] = np.array([prob.transform[k](r.observables[k]) for r in recs])
        b = np.array([r.bond_dims for r in recs])
        bonds = b if bonds is None else np.maximum(bonds, b)
        pc = np.array([r.n_params for r in recs])
        params = pc if params is None else params + pc
        dw = np.array([r.discarded for r in recs])
        disc = dw if disc is None else disc + dw
        times = np.array([r.time for r in recs])
    return times, values, bonds, params, disc


def _heisenberg_value(ref: TensorTrain, O: TensorTrain) -> complex:
    return expectation(ref, O)


def run(config: dict, out_dir: str | Path | None = None, progress: Callable | None = None) -> RunArtifacts:
    """Run one experiment; optionally write ``<name>.csv`` and ``<name>.json`` to ``out_dir``.

    CSV columns: ``time``, each observable, ``<obs>_ed`` and
    ``<obs>_residual`` when the reference is enabled, ``bond_<i>`` for each
    bond, ``n_params`` and the cumulative ``discarded`` weight.
    """
    cfg = validate_config(config)
    t0 = time.perf_counter()
    prob = _build_problem(cfg)
    t_prep = time.perf_counter() - t0
    times, values, bonds, params, disc = _evolve(prob, cfg, progress)
    t_evo = time.perf_counter() - t0 - t_prep

    columns: dict[str, NDArray] = {"time": times}
    columns.update(values)
    meta: dict[str, Any] = {"preparation": _jsonable(prob.info), "sites": prob.sites}
    if cfg["outputs"]["reference"]:
        ref = reference_series(cfg, times)
        for k in cfg["outputs"]["observables"]:
            columns[f"{k}_ed"] = ref[k]
            columns[f"{k}_residual"] = np.abs(values[k] - ref[k])
        meta["max_residual"] = {k: float(columns[f"{k}_residual"].max()) for k in cfg["outputs"]["observables"]}
    for i in range(bonds.shape[1]):
        columns[f"bond_{i}"] = bonds[:, i]
    columns["n_params"] = params
    columns["discarded"] = disc
    meta["runtime_seconds"] = {"preparation": t_prep, "evolution": t_evo}
    meta["versions"] = _versions()

    art = RunArtifacts(cfg, columns, meta)
    if out_dir is not None:
        write_artifacts(art, out_dir)
    return art


def _jsonable(x):
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.floating, np.integer, np.bool_)):
        return x.item()
    return x


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{float(x):.12g}"


def write_csv(path: str | Path, columns: dict[str, NDArray]) -> None:
    names = list(columns)
    n = len(next(iter(columns.values())))
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(names)
        for i in range(n):
            w.writerow([_fmt(columns[k][i]) for k in names])


def write_artifacts(art: RunArtifacts, out_dir: str | Path, stem: str | None = None) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    stem = stem or art.config["name"]
    art.csv_path = out / f"{stem}.csv"
    art.json_path = out / f"{stem}.json"
    write_csv(art.csv_path, art.columns)
    with open(art.json_path, "w") as fh:
        json.dump({"config": art.config, **art.meta}, fh, indent=2, default=_jsonable)


def compare_methods(
    config: dict, methods: Sequence[str], out_dir: str | Path | None = None, progress: Callable | None = None
) -> dict[str, RunArtifacts]:
    """Run one configuration under several thermal methods with identical budgets.

    ``methods`` accepts ``tt``/``tf``/``mpo`` or the full method names. Every
    member run uses the same chain budget ``N`` and truncation policy. When
    ``out_dir`` is given, each run is written as ``<name>_<method>.*`` and an
    aligned ``<name>_compare.csv`` holds the parameter counts and residuals.
    """
    resolved = [METHOD_ALIASES.get(m, m) for m in methods]
    for m in resolved:
        if m not in ("thermalized", "thermofield", "mpo"):
            raise ConfigInvalid(f"unknown method {m!r}", "compare-method")
    seed = copy.deepcopy(config)
    seed.setdefault("discretization", {})["thermal_method"] = resolved[0]
    base = validate_config(seed)
    runs: dict[str, RunArtifacts] = {}
    for m in resolved:
        cfg = copy.deepcopy(base)
        cfg["discretization"]["thermal_method"] = m
        cfg["name"] = f"{base['name']}_{m}"
        art = run(cfg, None, progress)
        if out_dir is not None:
            write_artifacts(art, out_dir)
        runs[m] = art
    if out_dir is not None:
        first = next(iter(runs.values()))
        table = {"time": first.columns["time"]}
        for m, art in runs.items():
            table[f"n_params_{m}"] = art.columns["n_params"]
            table[f"max_bond_{m}"] = np.max([art.columns[k] for k in art.columns if k.startswith("bond_")], axis=0)
            for k in base["outputs"]["observables"]:
                table[f"{k}_{m}"] = art.columns[k]
                if f"{k}_residual" in art.columns:
                    table[f"{k}_residual_{m}"] = art.columns[f"{k}_residual"]
        write_csv(Path(out_dir) / f"{base['name']}_compare.csv", table)
    return runs
