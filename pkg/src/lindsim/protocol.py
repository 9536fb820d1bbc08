"""Compile target Lindbladians into system + damped-ancilla protocols.

A protocol couples the system to a bath through Hermitian coupling terms
``K = sum_i g_i k_terms[i]`` while the bath relaxes under ``L_B`` to a unique
steady state.  ``scale`` turns a protocol into the one-parameter family
``L_T`` used to test the adiabatic limit.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

from .effective import effective_generator_generic, first_order_hamiltonian
from .hilbert import HilbertSpace, boson, collective_spin, embed, pauli
from .numerics import DEFAULT_TOLERANCES, Tolerances, as_matrix, dagger, is_hermitian, spectral_norm
from .spectral import SpectralData, analyze_product
from .superop import LindbladSpec, dissipator, hamiltonian_superop, identity_superop, superop_kron

FIGURE_MODE = "figure"
LIBRARY_MODE = "library"


@dataclass
class SimulationProtocol:
    """System coupled to a relaxing bath.

    ``k_terms`` are Hermitian operators on ``system (x) bath`` at unit
    coupling; ``couplings`` multiply them.  ``k1`` is a system Hamiltonian
    injected at strength ~1/T by ``scale``.  ``target`` is the predicted
    system-sector generator at the stored couplings (``k1`` included).
    """

    name: str
    system_space: HilbertSpace
    bath_dims: tuple[int, ...]
    k_terms: list[np.ndarray]
    couplings: list[float]
    l_b: np.ndarray
    k1: np.ndarray
    target: LindbladSpec | None = None
    damping_times: list[float] | None = None
    theta: float = 1.0
    tau_r_caption: float | None = None
    boson_site: int | None = None
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if not isinstance(self.system_space, HilbertSpace):
            self.system_space = HilbertSpace(self.system_space)
        self.bath_dims = tuple(int(d) for d in self.bath_dims)
        d = self.full_space.total_dim
        self.k_terms = [as_matrix(k, f"k_terms[{i}]") for i, k in enumerate(self.k_terms)]
        for i, k in enumerate(self.k_terms):
            if k.shape != (d, d):
                raise ValueError(f"k_terms[{i}] has shape {k.shape}, expected {(d, d)}")
        if len(self.couplings) != len(self.k_terms):
            raise ValueError("one coupling per coupling term is required")
        self.couplings = [float(g) for g in self.couplings]
        self.l_b = as_matrix(self.l_b, "l_b")
        d_b = self.bath_space.total_dim
        if self.l_b.shape != (d_b * d_b, d_b * d_b):
            raise ValueError(f"l_b has shape {self.l_b.shape}, expected {(d_b * d_b,) * 2}")
        d_s = self.system_space.total_dim
        self.k1 = np.zeros((d_s, d_s), dtype=complex) if self.k1 is None else as_matrix(self.k1, "k1")

    @property
    def bath_space(self) -> HilbertSpace:
        return HilbertSpace(self.bath_dims)

    @property
    def full_space(self) -> HilbertSpace:
        return self.system_space * self.bath_space

    @property
    def n_ancillas(self) -> int:
        return len(self.k_terms)

    @property
    def k(self) -> np.ndarray:
        return sum((g * t for g, t in zip(self.couplings, self.k_terms)), np.zeros_like(self.k_terms[0]))

    @cached_property
    def l0(self) -> np.ndarray:
        d_s = self.system_space.total_dim
        return superop_kron(identity_superop(d_s), self.l_b, d_s, self.bath_space.total_dim)

    def spectral(self, tol: Tolerances = DEFAULT_TOLERANCES) -> SpectralData:
        return analyze_product(self.l_b, self.system_space.total_dim, tol)

    def k1_full(self) -> np.ndarray:
        return np.kron(self.k1, np.eye(self.bath_space.total_dim))


def _ancilla_bank_liouvillian(taus: Sequence[float]) -> np.ndarray:
    space = HilbertSpace([2] * len(taus))
    sm = pauli("minus")
    return sum(dissipator(embed(sm, i, space), 1.0 / tau) for i, tau in enumerate(taus))


def compile_target(target: LindbladSpec, damping_times: float | Sequence[float] = 1.0, theta: float = 1.0) -> SimulationProtocol:
    """One amplitude-damped ancilla qubit per target jump operator.

    Couplings solve ``4 g_i^2 tau_i = gamma_i``; the target Hamiltonian is
    kept as ``k1``.
    """
    m = len(target.jumps)
    if m == 0:
        raise ValueError("target has no jump operators; nothing to compile")
    if np.isscalar(damping_times):
        taus = [float(damping_times)] * m
    else:
        taus = [float(t) for t in damping_times]
    if len(taus) != m:
        raise ValueError(f"{len(taus)} damping times given for {m} jump operators")
    for i, tau in enumerate(taus):
        if not tau > 0:
            raise ValueError(f"damping_times[{i}] must be > 0, got {tau}")
    target.validate()

    anc = HilbertSpace([2] * m)
    sm = pauli("minus")
    couplings, k_terms = [], []
    for i, ((op, rate), tau) in enumerate(zip(target.jumps, taus)):
        if rate < 0:
            raise ValueError(f"jump {i} has negative rate {rate}")
        if not np.any(op):
            raise ValueError(f"jump {i} operator is zero")
        couplings.append(float(np.sqrt(rate / (4.0 * tau))))
        term = np.kron(dagger(op), embed(sm, i, anc))
        k_terms.append(term + dagger(term))
    return SimulationProtocol(
        name="compiled",
        system_space=target.space,
        bath_dims=(2,) * m,
        k_terms=k_terms,
        couplings=couplings,
        l_b=_ancilla_bank_liouvillian(taus),
        k1=target.hamiltonian,
        target=target,
        damping_times=taus,
        theta=theta,
    )


@dataclass
class ScaledModel:
    protocol: SimulationProtocol
    t_scale: float
    mode: str
    tau_r: float
    k_scale: float
    k1_scale: float
    l_t: np.ndarray
    l_eff: np.ndarray  # dimensionful: the effective map is expm(t * l_eff)
    spectral: SpectralData
    k_part_norm: float
    k1_part_norm: float
    metadata: dict = field(default_factory=dict)

    @property
    def l_eff_dimensionless(self) -> np.ndarray:
        return self.t_scale * self.l_eff


def coupling_scale(protocol: SimulationProtocol, T: float, mode: str, spectral: SpectralData) -> tuple[float, float]:
    """``(factor on K, tau_R used)`` for the given scaling mode."""
    if mode == FIGURE_MODE:
        tau_r = protocol.tau_r_caption if protocol.tau_r_caption is not None else spectral.tau_r
        g_max = max((abs(g) for g in protocol.couplings), default=0.0)
        g_t = (tau_r * T) ** -0.5
        return (g_t / g_max if g_max > 0 else 0.0), tau_r
    if mode == LIBRARY_MODE:
        return float(np.sqrt(spectral.tau_r / T)), spectral.tau_r
    raise ValueError(f"unknown scaling mode {mode!r}; expected {FIGURE_MODE!r} or {LIBRARY_MODE!r}")


def scale(
    protocol: SimulationProtocol,
    T: float,
    mode: str = LIBRARY_MODE,
    spectral: SpectralData | None = None,
    tol: Tolerances = DEFAULT_TOLERANCES,
) -> ScaledModel:
    """Assemble ``L_T = L0 + s K + s^2 K1`` for time scale ``T``.

    ``figure`` mode sets the largest coupling to ``(tau_R T)^-1/2`` with
    ``tau_R`` the protocol's nominal (population) relaxation time; ``library`` mode keeps
    the compiled couplings and multiplies ``K`` by ``sqrt(tau_R / T)`` with
    ``tau_R = ||S||``.  In both modes ``K1`` enters with ``s^2``, so the
    ``T -> inf`` effective dynamics is the whole target slowed uniformly.
    """
    if not T > 0:
        raise ValueError("T must be > 0")
    sd = spectral if spectral is not None else protocol.spectral(tol)
    s, tau_r = coupling_scale(protocol, T, mode, sd)
    k_sup = hamiltonian_superop(s * protocol.k, tol)
    k1_sup = hamiltonian_superop(s * s * protocol.k1_full(), tol)
    l_t = protocol.l0 + k_sup + k1_sup
    l_eff = effective_generator_generic(None, s * protocol.k, sd, tol) + sd.p0 @ k1_sup @ sd.p0
    return ScaledModel(
        protocol=protocol,
        t_scale=float(T),
        mode=mode,
        tau_r=float(tau_r),
        k_scale=s,
        k1_scale=s * s,
        l_t=l_t,
        l_eff=l_eff,
        spectral=sd,
        k_part_norm=spectral_norm(k_sup),
        k1_part_norm=spectral_norm(k1_sup),
        metadata={"k1_normalization": "K1 = (k-scale)^2 * H_target, equal weight with the second-order term"},
    )


# --- built-in scenarios -----------------------------------------------------------------

def thermal_rates(g: float, tau_plus: float, tau_minus: float) -> tuple[float, float]:
    """Effective ``(rate_plus, rate_minus)`` for jumps ``S+``/``S-`` with a thermal ancilla."""
    if tau_plus <= 0 or tau_minus <= 0:
        raise ValueError("tau_plus and tau_minus must be > 0")
    base = 4.0 * g * g * tau_minus * tau_plus / (tau_minus + tau_plus) ** 2
    return base * tau_minus, base * tau_plus


def temperature_ratio(omega_eff: float, omega_b: float) -> float:
    """Effective-to-bath temperature ratio ``omega_eff / omega_B``."""
    return omega_eff / omega_b


def thermal_qubit_liouvillian(tau_plus: float, tau_minus: float) -> np.ndarray:
    return dissipator(pauli("minus"), 1.0 / tau_minus) + dissipator(pauli("plus"), 1.0 / tau_plus)


def collective_thermal(n_qubits: int = 3, tau_plus: float = 2.0, tau_minus: float = 1.0, g: float = 1.0) -> SimulationProtocol:
    """``N`` qubits exchanging excitations with one thermalizing ancilla qubit."""
    sm, sp = collective_spin(n_qubits, "minus"), collective_spin(n_qubits, "plus")
    k_term = np.kron(sm, pauli("plus")) + np.kron(sp, pauli("minus"))
    rate_p, rate_m = thermal_rates(g, tau_plus, tau_minus)
    space = HilbertSpace([2] * n_qubits)
    return SimulationProtocol(
        name="collective-thermal",
        system_space=space,
        bath_dims=(2,),
        k_terms=[k_term],
        couplings=[g],
        l_b=thermal_qubit_liouvillian(tau_plus, tau_minus),
        k1=None,
        target=LindbladSpec(space, None, [(sm, rate_m), (sp, rate_p)]),
        tau_r_caption=tau_plus * tau_minus / (tau_plus + tau_minus),
        params={"n_qubits": n_qubits, "tau_plus": tau_plus, "tau_minus": tau_minus, "g": g},
    )


def dephasing_rate(g: float, tau_plus: float, tau_minus: float) -> float:
    return 4.0 * g * g * tau_minus * tau_plus / (tau_plus + tau_minus)


def collective_dephasing(n_qubits: int = 1, tau_plus: float = 2.0, tau_minus: float = 1.0, g: float = 1.0) -> SimulationProtocol:
    """``K = g S^x (x) sigma^x`` with a thermalizing ancilla: collective x-dephasing."""
    sx = collective_spin(n_qubits, "x")
    space = HilbertSpace([2] * n_qubits)
    return SimulationProtocol(
        name="collective-dephasing",
        system_space=space,
        bath_dims=(2,),
        k_terms=[np.kron(sx, pauli("x"))],
        couplings=[g],
        l_b=thermal_qubit_liouvillian(tau_plus, tau_minus),
        k1=None,
        target=LindbladSpec(space, None, [(sx, dephasing_rate(g, tau_plus, tau_minus))]),
        tau_r_caption=tau_plus * tau_minus / (tau_plus + tau_minus),
        params={"n_qubits": n_qubits, "tau_plus": tau_plus, "tau_minus": tau_minus, "g": g},
    )


def cavity_prediction(g: float, omega: float, tau_r: float) -> tuple[float, float]:
    """``(rate on S-, coefficient of S+S- in the Hamiltonian)`` for the damped cavity.

    With ``omega = 0`` this is ``(4 g^2 tau_R, 0)``; a detuned mode lowers
    the rate by ``1 + (2 omega tau_R)^2`` and adds a level shift.
    """
    denom = 1.0 + (2.0 * omega * tau_r) ** 2
    return 4.0 * g * g * tau_r / denom, -4.0 * g * g * omega * tau_r**2 / denom


def collective_damping_cavity(
    n_qubits: int = 1, omega: float = 0.0, tau_r: float = 1.0, cutoff: int = 8, g: float = 1.0
) -> SimulationProtocol:
    """``K = g (S- a^dag + S+ a)`` with a damped (truncated) cavity mode as the bath."""
    sm, sp = collective_spin(n_qubits, "minus"), collective_spin(n_qubits, "plus")
    a, ad = boson(cutoff, "a"), boson(cutoff, "adag")
    l_b = hamiltonian_superop(omega * boson(cutoff, "n")) + dissipator(a, 1.0 / tau_r)
    rate, shift = cavity_prediction(g, omega, tau_r)
    space = HilbertSpace([2] * n_qubits)
    return SimulationProtocol(
        name="collective-damping-cavity",
        system_space=space,
        bath_dims=(cutoff,),
        k_terms=[np.kron(sm, ad) + np.kron(sp, a)],
        couplings=[g],
        l_b=l_b,
        k1=None,
        target=LindbladSpec(space, shift * (sp @ sm), [(sm, rate)]),
        tau_r_caption=tau_r,
        boson_site=n_qubits,
        params={"n_qubits": n_qubits, "omega": omega, "tau_r": tau_r, "cutoff": cutoff, "g": g},
    )


BUILTIN_FACTORIES = {
    "collective-damping-cavity": collective_damping_cavity,
    "collective-thermal": collective_thermal,
    "collective-dephasing": collective_dephasing,
}


def builtin(name: str, **params) -> SimulationProtocol:
    try:
        factory = BUILTIN_FACTORIES[name]
    except KeyError:
        raise ValueError(f"unknown scenario {name!r}; available: {', '.join(sorted(BUILTIN_FACTORIES))}") from None
    return factory(**params)


def builtin_scenarios() -> dict[str, SimulationProtocol]:
    """Default instances: thermal (N=3), dephasing (N=1) and a resonant cavity."""
    return {
        "collective-damping-cavity": collective_damping_cavity(),
        "collective-thermal": collective_thermal(3, 2.0, 1.0),
        "collective-dephasing": collective_dephasing(1, 2.0, 1.0),
    }


# --- serialization ---------------------------------------------------------------------

def matrix_to_json(m) -> list:
    m = np.asarray(m, dtype=complex)
    return [[[float(z.real), float(z.imag)] for z in row] for row in m]


def matrix_from_json(data, name: str = "matrix") -> np.ndarray:
    arr = np.asarray(data, dtype=float)
    if arr.ndim != 3 or arr.shape[2] != 2 or arr.shape[0] != arr.shape[1]:
        raise ValueError(f"{name}: expected a square matrix of [re, im] pairs, got array of shape {arr.shape}")
    return arr[..., 0] + 1j * arr[..., 1]


def protocol_to_dict(p: SimulationProtocol) -> dict:
    out = {
        "name": p.name,
        "system_dims": list(p.system_space.factors),
        "bath_dims": list(p.bath_dims),
        "couplings": list(p.couplings),
        "k_terms": [matrix_to_json(k) for k in p.k_terms],
        "l_b": matrix_to_json(p.l_b),
        "k1": matrix_to_json(p.k1),
        "damping_times": p.damping_times,
        "theta": p.theta,
        "tau_r_caption": p.tau_r_caption,
        "boson_site": p.boson_site,
        "params": p.params,
        "target": None,
    }
    if p.target is not None:
        out["target"] = {
            "hamiltonian": matrix_to_json(p.target.hamiltonian),
            "jumps": [{"op": matrix_to_json(op), "rate": rate} for op, rate in p.target.jumps],
        }
    return out


def protocol_from_dict(data: dict) -> SimulationProtocol:
    system = HilbertSpace(data["system_dims"])
    target = None
    if data.get("target") is not None:
        t = data["target"]
        target = LindbladSpec(
            system,
            matrix_from_json(t["hamiltonian"], "target.hamiltonian"),
            [(matrix_from_json(j["op"], "target.jumps.op"), j["rate"]) for j in t["jumps"]],
        )
    return SimulationProtocol(
        name=data["name"],
        system_space=system,
        bath_dims=tuple(data["bath_dims"]),
        k_terms=[matrix_from_json(k, "k_terms") for k in data["k_terms"]],
        couplings=list(data["couplings"]),
        l_b=matrix_from_json(data["l_b"], "l_b"),
        k1=matrix_from_json(data["k1"], "k1"),
        target=target,
        damping_times=data.get("damping_times"),
        theta=data.get("theta", 1.0),
        tau_r_caption=data.get("tau_r_caption"),
        boson_site=data.get("boson_site"),
        params=data.get("params", {}),
    )


def check_protocol(p: SimulationProtocol, tol: Tolerances = DEFAULT_TOLERANCES) -> dict[str, float]:
    """Hermiticity of K and size of the first-order term ``Tr_B(K rho0)``."""
    sd = p.spectral(tol)
    k = p.k
    return {
        "k_hermitian": float(is_hermitian(k, tol.hermiticity_abs)),
        "first_order_norm": spectral_norm(first_order_hamiltonian(k, sd.rho0)),
    }
