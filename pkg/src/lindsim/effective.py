"""Second-order dissipation-projected generators.

The superoperator product ``-P0 K S K P0`` (``K = -i[K, .]``) is the ground
truth here.  The bath-correlation (Gamma) assembly, the Hermitian rewriting
and the damped-qubit closed form are alternative views that are checked
against it.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .hilbert import HilbertSpace, partial_trace_last
from .numerics import (
    DEFAULT_TOLERANCES,
    NumericError,
    Tolerances,
    as_matrix,
    dagger,
    spectral_norm,
)
from .spectral import SpectralData, analyze_product
from .superop import (
    LindbladSpec,
    append_state_superop,
    apply,
    dissipator,
    hamiltonian_superop,
    partial_trace_superop,
    sandwich,
)


class NonvanishingFirstOrderError(NumericError):
    def __init__(self, norm: float):
        super().__init__(f"first-order term ||P0 K P0|| = {norm:.3e} does not vanish")
        self.norm = norm


class NotAGeneratorError(NumericError):
    pass


def first_order_hamiltonian(k, rho0) -> np.ndarray:
    """``Tr_B(K (1 (x) rho0))`` as a system operator."""
    k = as_matrix(k, "k")
    rho0 = as_matrix(rho0, "rho0")
    d_b = rho0.shape[0]
    if k.shape[0] % d_b:
        raise ValueError(f"K dimension {k.shape[0]} is not divisible by bath dimension {d_b}")
    d_s = k.shape[0] // d_b
    return partial_trace_last(k @ np.kron(np.eye(d_s), rho0), d_s, d_b)


def effective_generator_generic(
    l0,
    k,
    spectral: SpectralData,
    tol: Tolerances = DEFAULT_TOLERANCES,
    allow_first_order: bool = False,
) -> np.ndarray:
    """``-P0 K S K P0`` on the full space.

    Raises NonvanishingFirstOrderError when ``P0 K P0`` does not vanish,
    unless ``allow_first_order`` is set (the caller then accounts for the
    first-order part separately).
    """
    k = as_matrix(k)
    k_sup = hamiltonian_superop(k, tol)
    left, right = spectral.p0_factors()
    # ||X right|| = ||X R^dag|| for right^dag = Q R, so norms stay in the rank-r space
    r_l = np.linalg.qr(left)[1]
    r_r = np.linalg.qr(dagger(right))[1]
    if l0 is not None:
        l0 = as_matrix(l0)
        if spectral_norm(l0 @ left @ dagger(r_r)) > tol.oracle_abs * max(1.0, spectral_norm(l0)):
            raise ValueError("spectral data does not belong to l0 (L0 P0 != 0)")
    kl = k_sup @ left
    if not allow_first_order:
        first = spectral_norm(r_l @ (right @ kl) @ dagger(r_r))
        # ||K_sup|| <= 2 ||K||
        if first > tol.oracle_abs * max(1.0, 2.0 * spectral_norm(k)):
            raise NonvanishingFirstOrderError(first)
    return -(left @ ((right @ k_sup) @ (spectral.s @ kl)) @ right)


def effective_with_extra(l0, k, k1, spectral: SpectralData, tol: Tolerances = DEFAULT_TOLERANCES) -> np.ndarray:
    """Second-order generator of ``k`` plus the projected first-order term of ``k1``."""
    p0 = spectral.p0
    d = p0.shape[0]
    dim = int(round(np.sqrt(d)))
    k1 = as_matrix(k1, "k1")
    if k1.shape[0] != dim:
        # system-only Hamiltonian: extend by the identity on the bath
        if spectral.rho0 is None or k1.shape[0] * spectral.rho0.shape[0] != dim:
            raise ValueError(f"k1 of dimension {k1.shape[0]} does not fit the space of dimension {dim}")
        k1 = np.kron(k1, np.eye(spectral.rho0.shape[0]))
    out = effective_generator_generic(l0, k, spectral, tol)
    return out + p0 @ hamiltonian_superop(k1, tol) @ p0


def gamma_matrices(b_ops: Sequence, l_b, tol: Tolerances = DEFAULT_TOLERANCES) -> tuple[np.ndarray, np.ndarray]:
    """Bath correlation matrices.

    ``gamma_a[i, j] = -Tr(S_B(B_i rho0) B_j)`` and
    ``gamma_b[i, j] = -Tr(S_B(rho0 B_i) B_j)``.
    """
    sd = analyze_product(l_b, 1, tol)
    s_b, rho0 = sd.s_b, sd.rho0
    b_ops = [as_matrix(b, f"b_ops[{i}]") for i, b in enumerate(b_ops)]
    m = len(b_ops)
    left = [apply(s_b, b @ rho0) for b in b_ops]
    right = [apply(s_b, rho0 @ b) for b in b_ops]
    gamma_a = np.empty((m, m), dtype=complex)
    gamma_b = np.empty((m, m), dtype=complex)
    for i in range(m):
        for j in range(m):
            gamma_a[i, j] = -np.trace(left[i] @ b_ops[j])
            gamma_b[i, j] = -np.trace(right[i] @ b_ops[j])
    return gamma_a, gamma_b


def effective_from_gamma(l_ops: Sequence, gamma_a, gamma_b) -> np.ndarray:
    """System-sector generator from the general (non-Hermitian-safe) formula.

    ``sum_ij Ga_ij (L_i X L_j - L_j L_i X) + Gb_ij (L_j X L_i - X L_i L_j)``.
    """
    l_ops = [as_matrix(l, f"l_ops[{i}]") for i, l in enumerate(l_ops)]
    gamma_a = np.asarray(gamma_a, dtype=complex)
    gamma_b = np.asarray(gamma_b, dtype=complex)
    m = len(l_ops)
    if gamma_a.shape != (m, m) or gamma_b.shape != (m, m):
        raise ValueError(f"gamma matrices must be {m}x{m} to match {m} system operators")
    d = l_ops[0].shape[0]
    eye = np.eye(d, dtype=complex)
    out = np.zeros((d * d, d * d), dtype=complex)
    for i in range(m):
        for j in range(m):
            li, lj = l_ops[i], l_ops[j]
            if gamma_a[i, j] != 0:
                out += gamma_a[i, j] * (sandwich(li, lj) - sandwich(lj @ li, eye))
            if gamma_b[i, j] != 0:
                out += gamma_b[i, j] * (sandwich(lj, li) - sandwich(eye, li @ lj))
    return out


def hermitian_form(l_ops: Sequence, gamma_a) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Lindblad-form view for Hermitian ``L_i``, ``B_i``.

    Returns ``(generator, gamma, h_eff)`` with ``gamma = (Ga + Ga^dag)/2``,
    ``h_eff = (1/2i) sum_ij (Ga - Ga^dag)_ij L_j L_i`` and
    ``generator = -i[h_eff, .] + sum_ij 2 gamma_ij (L_i X L_j - 1/2 {L_j L_i, X})``.
    """
    l_ops = [as_matrix(l) for l in l_ops]
    gamma_a = np.asarray(gamma_a, dtype=complex)
    gamma = 0.5 * (gamma_a + dagger(gamma_a))
    anti = gamma_a - dagger(gamma_a)
    d = l_ops[0].shape[0]
    eye = np.eye(d, dtype=complex)
    h_eff = np.zeros((d, d), dtype=complex)
    gen = np.zeros((d * d, d * d), dtype=complex)
    for i, li in enumerate(l_ops):
        for j, lj in enumerate(l_ops):
            h_eff += anti[i, j] * (lj @ li) / 2j
            ll = lj @ li
            gen += 2 * gamma[i, j] * (sandwich(li, lj) - 0.5 * sandwich(ll, eye) - 0.5 * sandwich(eye, ll))
    gen += hamiltonian_superop(h_eff, check=False)
    return gen, gamma, h_eff


@dataclass(frozen=True)
class EffectiveGenerator:
    full: np.ndarray
    system_sector: np.ndarray
    gamma_a: np.ndarray
    gamma_b: np.ndarray
    gamma: np.ndarray
    h_eff: np.ndarray
    is_lindblad: bool
    gamma_min_eig: float
    factorization_residual: float


def effective_generator(
    l_ops: Sequence,
    b_ops: Sequence,
    l_b,
    tol: Tolerances = DEFAULT_TOLERANCES,
) -> EffectiveGenerator:
    """All views of the effective generator for ``K = sum_i L_i (x) B_i``."""
    l_ops = [as_matrix(l) for l in l_ops]
    b_ops = [as_matrix(b) for b in b_ops]
    d_s = l_ops[0].shape[0]
    sd = analyze_product(l_b, d_s, tol)
    k = sum(np.kron(l, b) for l, b in zip(l_ops, b_ops, strict=True))
    full = effective_generator_generic(None, k, sd, tol)
    system, resid = reduce_to_system(full, sd.rho0)
    gamma_a, gamma_b = gamma_matrices(b_ops, l_b, tol)
    _, gamma, h_eff = hermitian_form(l_ops, gamma_a)
    gmin = float(np.linalg.eigvalsh(gamma).min()) if gamma.size else 0.0
    return EffectiveGenerator(
        full=full,
        system_sector=system,
        gamma_a=gamma_a,
        gamma_b=gamma_b,
        gamma=gamma,
        h_eff=h_eff,
        is_lindblad=gmin >= -tol.psd_abs,
        gamma_min_eig=gmin,
        factorization_residual=resid,
    )


def hermitian_pairs(a_ops: Sequence, b_ops: Sequence) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """Rewrite ``sum_i (A_i (x) B_i + h.c.)`` as ``sum_k L_k (x) B_k`` with Hermitian factors.

    With ``A = A1 + i A2`` and ``B = B1 + i B2`` (Hermitian parts),
    ``A (x) B + h.c. = 2 A1 (x) B1 - 2 A2 (x) B2``.
    """
    l_out, b_out = [], []
    for a, b in zip(a_ops, b_ops, strict=True):
        a, b = as_matrix(a), as_matrix(b)
        a1, a2 = 0.5 * (a + dagger(a)), -0.5j * (a - dagger(a))
        b1, b2 = 0.5 * (b + dagger(b)), -0.5j * (b - dagger(b))
        l_out += [2 * a1, -2 * a2]
        b_out += [b1, b2]
    return l_out, b_out


def prop3_closed_form(l_ops: Sequence, couplings: Sequence[float], taus: Sequence[float]) -> np.ndarray:
    """``sum_i 4 g_i^2 tau_i D[L_i]`` for a bank of amplitude-damped qubits."""
    if not (len(l_ops) == len(couplings) == len(taus)):
        raise ValueError("l_ops, couplings and taus must have the same length")
    out = None
    for l, g, tau in zip(l_ops, couplings, taus):
        if tau <= 0:
            raise ValueError(f"damping time must be > 0, got {tau}")
        term = dissipator(l, 4.0 * g * g * tau)
        out = term if out is None else out + term
    return out


def reduce_to_system(l_full, rho0) -> tuple[np.ndarray, float]:
    """System-sector generator ``E -> Tr_B L(E (x) rho0)`` and its factorization residual.

    The residual is ``max_E ||L(E (x) rho0) - L_S(E) (x) rho0||`` over the
    matrix-unit basis ``E``.
    """
    l_full = np.asarray(l_full, dtype=complex)
    rho0 = as_matrix(rho0, "rho0")
    d_b = rho0.shape[0]
    d = int(round(np.sqrt(l_full.shape[0])))
    d_s = d // d_b
    embed = append_state_superop(rho0, d_s)
    trace = partial_trace_superop(d_s, d_b)
    image = l_full @ embed
    system = trace @ image
    resid = np.linalg.norm(image - embed @ system, axis=0).max()
    return system, float(resid)


def _orthonormal_hermitian_basis(d: int) -> list[np.ndarray]:
    """Identity/sqrt(d) followed by d**2 - 1 traceless Hermitian matrices, HS-orthonormal."""
    basis = [np.eye(d, dtype=complex) / np.sqrt(d)]
    for j in range(d):
        for k in range(j + 1, d):
            sym = np.zeros((d, d), dtype=complex)
            sym[j, k] = sym[k, j] = 1 / np.sqrt(2)
            anti = np.zeros((d, d), dtype=complex)
            anti[j, k], anti[k, j] = -1j / np.sqrt(2), 1j / np.sqrt(2)
            basis += [sym, anti]
    for l in range(1, d):
        diag = np.zeros(d)
        diag[:l] = 1.0
        diag[l] = -l
        basis.append(np.diag(diag / np.sqrt(l * (l + 1))).astype(complex))
    return basis


def _reshuffle(superop: np.ndarray, d: int) -> np.ndarray:
    """Map ``sum c_mn vec(F_m)vec(F_n)^dag`` <- superoperator of ``X -> sum c_mn F_m X F_n^dag``."""
    l4 = superop.reshape(d, d, d, d)
    return l4.transpose(3, 1, 2, 0).reshape(d * d, d * d)


@dataclass(frozen=True)
class GKSDecomposition:
    hamiltonian: np.ndarray
    jumps: list[tuple[np.ndarray, float]]  # (HS-normalized operator, signed rate)
    kossakowski: np.ndarray
    basis: list[np.ndarray]
    residual: float

    @property
    def negative_rates(self) -> bool:
        return any(r < 0 for _, r in self.jumps)

    def to_spec(self) -> LindbladSpec:
        if self.negative_rates:
            raise NotAGeneratorError("Kossakowski matrix has negative eigenvalues; not a Lindblad generator")
        d = self.hamiltonian.shape[0]
        return LindbladSpec(HilbertSpace([d]), self.hamiltonian, list(self.jumps))

    def rate_along(self, jump) -> float:
        """Rate of ``D[jump]`` contained in the Kossakowski matrix (``jump`` traceless)."""
        jump = as_matrix(jump)
        coords = np.array([np.trace(dagger(f) @ jump) for f in self.basis[1:]])
        norm2 = np.vdot(coords, coords).real
        return float(np.real(np.vdot(coords, self.kossakowski @ coords)) / norm2**2) if norm2 else 0.0


def gks_decompose(
    l_sys,
    tol: Tolerances = DEFAULT_TOLERANCES,
    residual_tol: float | None = None,
) -> GKSDecomposition:
    """Decompose a generator into Hamiltonian and Kossakowski parts.

    Rates from the eigendecomposition of the Kossakowski matrix are reported
    as-is; negative values are kept and flagged.  Jumps with
    ``|rate| <= zero_eig_rel * max(max|rate|, ||L||)`` are dropped.  Raises
    NotAGeneratorError when the rebuilt generator differs from the input by
    more than ``residual_tol`` (default ``oracle_abs * max(1, ||L||)``).
    """
    l_sys = np.asarray(l_sys, dtype=complex)
    d = int(round(np.sqrt(l_sys.shape[0])))
    basis = _orthonormal_hermitian_basis(d)
    fmat = np.array([f.reshape(-1, order="F") for f in basis]).T
    c = dagger(fmat) @ _reshuffle(l_sys, d) @ fmat
    c = 0.5 * (c + dagger(c))

    g_op = c[0, 0] / (2 * d) * np.eye(d) + sum(c[k, 0] * basis[k] for k in range(1, d * d)) / np.sqrt(d)
    h = 0.5j * (g_op - dagger(g_op))
    h = 0.5 * (h + dagger(h))
    h -= np.trace(h) / d * np.eye(d)

    koss = c[1:, 1:]
    rates, vecs = np.linalg.eigh(koss)
    cutoff = tol.zero_eig_rel * max(np.abs(rates).max(initial=0.0), spectral_norm(l_sys), np.finfo(float).tiny)
    jumps = []
    for rate, v in zip(rates[::-1], vecs[:, ::-1].T):
        if abs(rate) <= cutoff:
            continue
        op = sum(coef * f for coef, f in zip(v, basis[1:]))
        jumps.append((op, float(rate)))

    rebuilt = hamiltonian_superop(h, check=False)
    for op, rate in jumps:
        ldl = dagger(op) @ op
        eye = np.eye(d)
        rebuilt = rebuilt + rate * (sandwich(op, dagger(op)) - 0.5 * sandwich(ldl, eye) - 0.5 * sandwich(eye, ldl))
    residual = spectral_norm(rebuilt - l_sys)
    limit = residual_tol if residual_tol is not None else tol.oracle_abs * max(1.0, spectral_norm(l_sys))
    if residual > limit:
        raise NotAGeneratorError(
            f"reconstruction residual {residual:.3e} exceeds {limit:.3e}: input is not trace-annihilating "
            "and Hermiticity-preserving"
        )
    return GKSDecomposition(hamiltonian=h, jumps=jumps, kossakowski=koss, basis=basis, residual=residual)


def generator_distance(a, b) -> float:
    return spectral_norm(np.asarray(a) - np.asarray(b))
