"""Exact-versus-effective propagation, T sweeps, leakage and hierarchy checks."""
from __future__ import annotations

import math
import warnings
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .effective import (
    effective_generator_generic,
    gks_decompose,
    reduce_to_system,
)
from .hilbert import HilbertSpace, embed, ket_bra, pauli
from .numerics import DEFAULT_TOLERANCES, Tolerances, dagger, expm, spectral_norm
from .protocol import (
    FIGURE_MODE,
    LIBRARY_MODE,
    ScaledModel,
    SimulationProtocol,
    collective_damping_cavity,
    collective_dephasing,
    collective_thermal,
    scale,
)
from .spectral import analyze
from .superop import apply, dissipator, hamiltonian_superop, liouvillian, vectorize

DEFAULT_POINTS_PER_DECADE = 40


class LeakageWarning(UserWarning):
    pass


@dataclass
class ErrorCurve:
    T: float
    t_grid: np.ndarray
    distances: np.ndarray

    @property
    def sup_error(self) -> float:
        return float(self.distances.max()) if self.distances.size else 0.0

    @property
    def final_error(self) -> float:
        return float(self.distances[-1]) if self.distances.size else 0.0


@dataclass
class SweepResult:
    T_values: np.ndarray
    sup_errors: np.ndarray
    final_errors: np.ndarray
    metric: str
    fit_slope: float
    fit_intercept: float
    r_squared: float
    degenerate: bool = False

    @property
    def errors(self) -> np.ndarray:
        return self.sup_errors if self.metric == "sup" else self.final_errors

    @property
    def inv_sqrt_T(self) -> np.ndarray:
        return 1.0 / np.sqrt(self.T_values)

    @property
    def fit_prediction(self) -> np.ndarray:
        return self.fit_slope * self.inv_sqrt_T + self.fit_intercept


def log_grid(t_min: float, t_max: float, points_per_decade: int = DEFAULT_POINTS_PER_DECADE) -> np.ndarray:
    """Log-spaced times anchored at ``t_max``: ``t_max * 10**(-j / ppd)`` down to ``t_min``.

    Anchoring makes every point exactly ten times the point one decade
    below it, which ``propagators`` exploits.
    """
    if not 0 < t_min <= t_max:
        raise ValueError(f"need 0 < t_min <= t_max, got {t_min}, {t_max}")
    n = int(math.floor(points_per_decade * math.log10(t_max / t_min) + 1e-9))
    j = np.arange(n, -1, -1)
    return t_max * 10.0 ** (-j / points_per_decade)


def _tenth_power(p: np.ndarray) -> np.ndarray:
    p2 = p @ p
    p8 = p2 @ p2
    p8 = p8 @ p8
    return p8 @ p2


def propagators(l: np.ndarray, times: Sequence[float]):
    """Yield ``expm(t * l)`` for ascending ``times``.

    A time equal to ten times an earlier one is obtained as a 10th power
    (four products) instead of a fresh exponential.
    """
    recent: deque[tuple[float, np.ndarray]] = deque()
    for t in times:
        while recent and 10.0 * recent[0][0] < t * (1 - 1e-12):
            recent.popleft()
        prop = None
        if recent and abs(10.0 * recent[0][0] - t) <= 1e-12 * t:
            prop = _tenth_power(recent[0][1])
        if prop is None:
            prop = expm(t * l)
        recent.append((t, prop))
        yield prop


def _p0_range_factor(p0: np.ndarray, kernel_dim: int) -> tuple[np.ndarray, np.ndarray]:
    """``P0 = A @ Bh`` with orthonormal rows in ``Bh``, so ``||M P0|| = ||M A||``."""
    u, s, vh = np.linalg.svd(p0)
    return u[:, :kernel_dim] * s[:kernel_dim], vh[:kernel_dim]


def default_grid(model: ScaledModel, points_per_decade: int = DEFAULT_POINTS_PER_DECADE,
                 theta: float | None = None, t_min: float | None = None) -> np.ndarray:
    """``log_grid(tau_R / 100, theta * T)`` unless overridden."""
    theta = model.protocol.theta if theta is None else theta
    t_min = model.tau_r / 100 if t_min is None else t_min
    return log_grid(t_min, theta * model.t_scale, points_per_decade)


def error_curve(
    model: ScaledModel,
    t_grid: Sequence[float] | None = None,
    points_per_decade: int = DEFAULT_POINTS_PER_DECADE,
    theta: float | None = None,
    t_min: float | None = None,
) -> ErrorCurve:
    """``||(expm(t L_T) - expm(t L_eff)) P0||`` on ``t_grid``.

    Default grid: ``default_grid(model, points_per_decade, theta, t_min)``.  The effective
    propagator is evaluated on the ``kernel_dim``-dimensional range of P0,
    where it acts exactly (``L_eff = P0 L_eff P0``).
    """
    if t_grid is None:
        t_grid = default_grid(model, points_per_decade, theta, t_min)
    t_grid = np.asarray(t_grid, dtype=float)
    if np.any(t_grid < 0) or np.any(np.diff(t_grid) < 0):
        raise ValueError("t_grid must be nonnegative and sorted")
    sd = model.spectral
    a, bh = _p0_range_factor(sd.p0, sd.kernel_dim)
    l_small = bh @ model.l_eff @ a
    out = np.empty(t_grid.size)
    for i, (big, small) in enumerate(zip(propagators(model.l_t, t_grid), propagators(l_small, t_grid))):
        out[i] = spectral_norm(big @ a - a @ small)
    return ErrorCurve(T=model.t_scale, t_grid=t_grid, distances=out)


def fit_inverse_sqrt(T_values, errors, zero_tol: float = 0.0) -> tuple[float, float, float, bool]:
    """Ordinary least squares of ``errors`` against ``1/sqrt(T)``: ``(slope, intercept, r^2, degenerate)``.

    The fit is degenerate (nothing to fit) when all errors are equal or all
    are at most ``zero_tol``.
    """
    x = 1.0 / np.sqrt(np.asarray(T_values, dtype=float))
    y = np.asarray(errors, dtype=float)
    if np.ptp(y) == 0 or np.all(np.abs(y) <= zero_tol):
        return 0.0, float(y[0]), float("nan"), True
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    r2 = 1.0 - np.sum(resid**2) / np.sum((y - y.mean()) ** 2)
    return float(slope), float(intercept), float(r2), False


def sweep_T(
    protocol: SimulationProtocol,
    T_values: Sequence[float],
    mode: str = LIBRARY_MODE,
    points_per_decade: int = DEFAULT_POINTS_PER_DECADE,
    theta: float | None = None,
    metric: str = "sup",
    threads: int = 1,
    tol: Tolerances = DEFAULT_TOLERANCES,
    check_span: bool = True,
) -> SweepResult:
    """Error against ``1/sqrt(T)`` over a set of time scales, with an OLS fit."""
    T_values = np.sort(np.asarray(T_values, dtype=float))
    if np.any(T_values <= 0):
        raise ValueError("T values must be positive")
    if check_span and (T_values.size < 4 or math.log10(T_values[-1] / T_values[0]) < 1.5):
        raise ValueError("a sweep needs at least 4 T values spanning at least 1.5 decades")
    if metric not in ("sup", "final"):
        raise ValueError(f"metric must be 'sup' or 'final', got {metric!r}")
    sd = protocol.spectral(tol)

    def one(T):
        return error_curve(scale(protocol, T, mode, sd, tol), points_per_decade=points_per_decade, theta=theta)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            curves = list(pool.map(one, T_values))
    else:
        curves = [one(T) for T in T_values]
    sups = np.array([c.sup_error for c in curves])
    finals = np.array([c.final_error for c in curves])
    slope, intercept, r2, degenerate = fit_inverse_sqrt(T_values, sups if metric == "sup" else finals, tol.oracle_abs)
    return SweepResult(T_values, sups, finals, metric, slope, intercept, r2, degenerate)


def scaling_envelope(protocol: SimulationProtocol, T_values: Sequence[float], mode: str = LIBRARY_MODE,
                     points_per_decade: int = 20, tol: Tolerances = DEFAULT_TOLERANCES) -> np.ndarray:
    """``sup_error(T) * sqrt(T / tau_R)`` for each T; roughly constant when the bound is tight."""
    sd = protocol.spectral(tol)
    out = []
    for T in T_values:
        model = scale(protocol, T, mode, sd, tol)
        curve = error_curve(model, points_per_decade=points_per_decade)
        out.append(curve.sup_error * math.sqrt(T / model.tau_r))
    return np.array(out)


@dataclass
class LeakageReport:
    max_population: float
    threshold: float
    levels: tuple[int, ...]

    @property
    def warned(self) -> bool:
        return self.max_population > self.threshold


def leakage_check(model: ScaledModel, t_samples: Sequence[float], threshold: float = 1e-8) -> LeakageReport:
    """Largest population of the top Fock levels during exact evolution from SSS states.

    Top levels are those with ``n >= max(1, cutoff - 2)``.  Initial states
    are ``|psi><psi| (x) rho0`` for computational and superposition states
    ``psi`` of the system.  Emits LeakageWarning above ``threshold``.
    """
    protocol = model.protocol
    if protocol.boson_site is None:
        raise ValueError("model has no truncated boson factor")
    space = protocol.full_space
    cutoff = space.factors[protocol.boson_site]
    levels = tuple(range(max(1, cutoff - 2), cutoff))
    top = embed(sum(ket_bra(cutoff, n, n) for n in levels), protocol.boson_site, space)
    d_s = protocol.system_space.total_dim
    rho0 = model.spectral.rho0
    states = []
    for i in range(d_s):
        for j in range(i, d_s):
            for phase in ((1.0,) if i == j else (1.0, 1j)):
                psi = np.zeros(d_s, dtype=complex)
                psi[i] += 1.0
                psi[j] += phase if i != j else 0.0
                psi /= np.linalg.norm(psi)
                states.append(vectorize(np.kron(np.outer(psi, psi.conj()), rho0)))
    states = np.array(states).T
    worst = 0.0
    top_vec = vectorize(top).conj()
    for t in t_samples:
        evolved = expm(t * model.l_t) @ states
        worst = max(worst, float(np.max(np.real(top_vec @ evolved))))
    report = LeakageReport(max(worst, 0.0), threshold, levels)
    if report.warned:
        warnings.warn(
            f"boson truncation leakage {report.max_population:.3e} exceeds {threshold:.1e} "
            f"(levels {levels} of cutoff {cutoff}); increase the cutoff",
            LeakageWarning,
            stacklevel=2,
        )
    return report


@dataclass
class HierarchyLevel:
    level: int
    l_eff: np.ndarray
    p0_dim: int
    tau_r: float
    k_norm: float = float("nan")
    epsilon: float = float("nan")
    first_order_norm: float = float("nan")
    status: str = "continue"


def hierarchy_iterate(
    l_gen,
    k_ops: Sequence,
    epsilon: float,
    max_levels: int = 3,
    tol: Tolerances = DEFAULT_TOLERANCES,
) -> list[HierarchyLevel]:
    """Iterate dissipation projection over nested steady-state manifolds.

    ``k_ops`` is one operator or one per level.  Level ``n`` analyzes the
    current generator inside the previous manifold; ``k_ops[n]`` is rescaled so that ``||K|| tau_R^(n) = epsilon``
    and, if its projected first-order part vanishes, produces the next
    generator ``-P K S K P``.  ``status`` on the last level says why the
    iteration stopped: ``unique`` (one-dimensional manifold),
    ``hamiltonian`` (nonzero first-order term, returned as that level's
    generator), ``max_levels`` or ``no_coupling``.
    """
    if isinstance(k_ops, np.ndarray) and k_ops.ndim == 2:
        k_ops = [k_ops]
    gen = np.asarray(l_gen, dtype=complex)
    sector = np.eye(gen.shape[0], dtype=complex)
    levels: list[HierarchyLevel] = []
    for n in range(max_levels + 1):
        sd = analyze(gen, tol)
        p_n = sd.p0 @ sector
        p0_dim = int(round(np.trace(p_n).real))
        current = HierarchyLevel(level=n, l_eff=gen, p0_dim=p0_dim, tau_r=sd.tau_r)
        levels.append(current)
        if p0_dim <= 1:
            current.status = "unique"
            break
        if n >= max_levels:
            current.status = "max_levels"
            break
        if n >= len(k_ops):
            current.status = "no_coupling"
            break
        k = np.asarray(k_ops[n], dtype=complex)
        k = k * (epsilon / (spectral_norm(k) * sd.tau_r))
        k_sup = hamiltonian_superop(k, tol)
        current.k_norm = spectral_norm(k)
        current.epsilon = current.k_norm * sd.tau_r
        first = p_n @ k_sup @ p_n
        current.first_order_norm = spectral_norm(first)
        if current.first_order_norm > tol.oracle_abs * max(1.0, spectral_norm(k_sup)):
            levels.append(HierarchyLevel(level=n + 1, l_eff=first, p0_dim=p0_dim, tau_r=float("nan"), status="hamiltonian"))
            break
        gen = -(p_n @ k_sup @ sd.s @ k_sup @ p_n)
        sector = p_n
    return levels


def degenerate_chain(tau: float = 1.0) -> tuple[np.ndarray, list[np.ndarray]]:
    """Three qubits ``A1, A2, B``: ``B`` damped, couplings ``A1<->B`` then ``A2<->A1``.

    Level 0 has a 16-dimensional steady manifold (anything on ``A1 A2``),
    level 1 damps ``A1`` (4-dimensional manifold), level 2 damps ``A2``.
    """
    space = HilbertSpace([2, 2, 2])
    sm, sp = pauli("minus"), pauli("plus")
    l0 = dissipator(embed(sm, 2, space), 1.0 / tau)

    def exchange(a, b):
        term = embed(sm, a, space) @ embed(sp, b, space)
        return term + dagger(term)

    return l0, [exchange(0, 2), exchange(1, 0)]


@dataclass
class RegressionResult:
    name: str
    distance: float
    factorization_residual: float
    gks_residual: float
    expected_rates: list[float]
    extracted_rates: list[float]
    threshold: float
    details: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.distance <= self.threshold and self.factorization_residual <= self.threshold


def regression_scenarios(tol: Tolerances = DEFAULT_TOLERANCES, threshold: float = 1e-8) -> list[RegressionResult]:
    """Master-formula generators of the built-in scenarios against their closed forms."""
    cases = [
        ("collective-thermal N=1", collective_thermal(1, 2.0, 1.0)),
        ("collective-thermal N=2", collective_thermal(2, 2.0, 1.0)),
        ("collective-thermal N=3", collective_thermal(3, 2.0, 1.0)),
        ("collective-dephasing N=1", collective_dephasing(1, 2.0, 1.0)),
        ("collective-dephasing N=2", collective_dephasing(2, 2.0, 1.0)),
        ("collective-damping-cavity N=1", collective_damping_cavity(1, 0.0, 1.0, 8)),
        ("collective-damping-cavity N=2", collective_damping_cavity(2, 0.0, 0.5, 6)),
        ("collective-damping-cavity N=1 detuned", collective_damping_cavity(1, 0.8, 1.0, 6)),
    ]
    results = []
    for name, protocol in cases:
        sd = protocol.spectral(tol)
        full = effective_generator_generic(None, protocol.k, sd, tol)
        system, resid = reduce_to_system(full, sd.rho0)
        predicted = liouvillian(protocol.target, tol)
        gks = gks_decompose(system, tol)
        results.append(
            RegressionResult(
                name=name,
                distance=spectral_norm(system - predicted),
                factorization_residual=resid,
                gks_residual=gks.residual,
                expected_rates=[rate for _, rate in protocol.target.jumps],
                extracted_rates=[gks.rate_along(op) for op, _ in protocol.target.jumps],
                threshold=threshold,
                details={"params": protocol.params},
            )
        )
    return results


def apply_effective(model: ScaledModel, rho, t: float) -> np.ndarray:
    """Effective evolution of an operator for time ``t``."""
    return apply(expm(t * model.l_eff), rho)


__all__ = [
    "ErrorCurve",
    "FIGURE_MODE",
    "LIBRARY_MODE",
    "HierarchyLevel",
    "LeakageReport",
    "LeakageWarning",
    "RegressionResult",
    "SweepResult",
    "degenerate_chain",
    "default_grid",
    "error_curve",
    "fit_inverse_sqrt",
    "hierarchy_iterate",
    "leakage_check",
    "log_grid",
    "propagators",
    "regression_scenarios",
    "scaling_envelope",
    "sweep_T",
]
