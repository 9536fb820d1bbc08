"""Steady-state projector and reduced resolvent of a Liouvillian."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .numerics import (
    DEFAULT_TOLERANCES,
    NumericError,
    Tolerances,
    dagger,
    eig_general,
    expm,
    solve,
    spectral_norm,
)
from .superop import (
    append_state_superop,
    devectorize,
    identity_superop,
    partial_trace_superop,
    superop_kron,
    vectorize,
)


class NotRelaxingError(NumericError):
    pass


class DegeneracyError(NumericError):
    """Zero eigenvalue is defective (projector cannot be built)."""


class UniquenessError(NumericError):
    pass


@dataclass(frozen=True)
class SpectralData:
    p0: np.ndarray
    q0: np.ndarray
    s: np.ndarray
    tau_r: float
    gap: float
    kernel_dim: int
    eigenvalues: np.ndarray
    # product-structure extras (None on the generic path)
    rho0: np.ndarray | None = None
    system_dim: int | None = None
    s_b: np.ndarray | None = None
    # optional rank factorization P0 = p0_left @ p0_right
    p0_left: np.ndarray | None = None
    p0_right: np.ndarray | None = None

    def p0_factors(self) -> tuple[np.ndarray, np.ndarray]:
        if self.p0_left is None or self.p0_right is None:
            return self.p0, np.eye(self.p0.shape[0], dtype=complex)
        return self.p0_left, self.p0_right

    def identity_residuals(self, l0: np.ndarray) -> dict[str, float]:
        """Relative residuals of the projector/resolvent identities."""
        p0, q0, s = self.p0, self.q0, self.s
        ln = max(spectral_norm(l0), 1.0)
        sn = max(spectral_norm(s), 1.0)
        return {
            "p0_idempotent": spectral_norm(p0 @ p0 - p0) / max(spectral_norm(p0), 1.0),
            "p0_l0": spectral_norm(p0 @ l0) / ln,
            "l0_p0": spectral_norm(l0 @ p0) / ln,
            "s_l0": spectral_norm(s @ l0 - q0) / max(spectral_norm(q0), 1.0),
            "l0_s": spectral_norm(l0 @ s - q0) / max(spectral_norm(q0), 1.0),
            "p0_s": spectral_norm(p0 @ s) / sn,
            "s_p0": spectral_norm(s @ p0) / sn,
        }


def _zero_cluster(evals: np.ndarray, tol: Tolerances) -> tuple[np.ndarray, float]:
    scale = np.max(np.abs(evals)) if evals.size else 0.0
    thresh = tol.zero_eig_rel * max(scale, np.finfo(float).tiny)
    return np.abs(evals) <= thresh, thresh


def _reduced_resolvent(l0: np.ndarray, p0: np.ndarray) -> np.ndarray:
    # group inverse on the complement: valid when the zero eigenvalue is semisimple
    q0 = np.eye(l0.shape[0], dtype=complex) - p0
    return solve(l0 + p0, q0)


def analyze(l0, tol: Tolerances = DEFAULT_TOLERANCES) -> SpectralData:
    """Spectral data of a relaxing Liouvillian.

    The zero-eigenvalue projector is assembled from orthonormal right and
    left kernel bases (``P0 = R (W^dag R)^-1 W^dag``), which is exact for a
    semisimple zero eigenvalue even when ``L0`` is not diagonalizable
    elsewhere.  The reduced resolvent is ``(L0 + P0)^-1 Q0``.
    """
    l0 = np.asarray(l0, dtype=complex)
    n = l0.shape[0]
    evals, _ = eig_general(l0)
    is_zero, thresh = _zero_cluster(evals, tol)
    k = int(is_zero.sum())
    if k == 0:
        raise NotRelaxingError("Liouvillian has no zero eigenvalue (no steady state)")
    nonzero = evals[~is_zero]
    if nonzero.size and np.max(nonzero.real) > -thresh:
        raise NotRelaxingError(
            f"nonzero eigenvalue with real part {np.max(nonzero.real):.3e} >= -{thresh:.1e}: semigroup is not relaxing"
        )

    u, sv, vh = np.linalg.svd(l0)
    if sv[n - k] > max(thresh, tol.zero_eig_rel * sv[0]) * 1e3:
        raise DegeneracyError(
            f"zero eigenvalue has algebraic multiplicity {k} but singular value {sv[n - k]:.3e}: defective zero cluster"
        )
    right = dagger(vh[n - k:])       # columns span Ker L0
    left = u[:, n - k:]              # columns span Ker L0^dag
    overlap = dagger(left) @ right
    if np.linalg.cond(overlap) > 1e8:
        raise DegeneracyError("left and right zero eigenspaces are nearly orthogonal: defective zero cluster")
    coef = np.linalg.solve(overlap, dagger(left))
    p0 = right @ coef
    q0 = np.eye(n, dtype=complex) - p0

    scale = max(spectral_norm(l0), 1.0)
    resid = max(spectral_norm(p0 @ p0 - p0), spectral_norm(l0 @ p0) / scale, spectral_norm(p0 @ l0) / scale)
    if resid > tol.oracle_abs:
        raise DegeneracyError(f"projector residual {resid:.3e} exceeds oracle_abs")

    s = _reduced_resolvent(l0, p0)
    gap = float(np.min(np.abs(nonzero))) if nonzero.size else float("inf")
    return SpectralData(
        p0=p0, q0=q0, s=s, tau_r=spectral_norm(s), gap=gap, kernel_dim=k, eigenvalues=evals,
        p0_left=right, p0_right=coef,
    )


def steady_state(l_b, tol: Tolerances = DEFAULT_TOLERANCES) -> np.ndarray:
    """Unique steady state of ``l_b`` as a unit-trace Hermitian PSD matrix."""
    l_b = np.asarray(l_b, dtype=complex)
    evals, _ = eig_general(l_b)
    is_zero, thresh = _zero_cluster(evals, tol)
    _, sv, vh = np.linalg.svd(l_b)
    if is_zero.sum() != 1 or (sv.size > 1 and sv[-2] <= max(thresh, tol.zero_eig_rel * sv[0])):
        raise UniquenessError(f"bath Liouvillian kernel is not one-dimensional ({int(is_zero.sum())} zero eigenvalues)")
    rho = devectorize(vh[-1].conj())
    tr = np.trace(rho)
    if abs(tr) < 1e-12:
        raise UniquenessError("kernel vector is traceless; not a state")
    rho = rho / tr
    rho = 0.5 * (rho + dagger(rho))
    w, v = np.linalg.eigh(rho)
    if w.min() < -tol.psd_abs * 1e3:
        raise UniquenessError(f"steady state has negative eigenvalue {w.min():.3e}")
    w = np.where(w < tol.psd_abs, np.clip(w, 0.0, None), w)
    rho = (v * w) @ dagger(v)
    return rho / np.trace(rho).real


def analyze_product(l_b, system_dim: int, tol: Tolerances = DEFAULT_TOLERANCES) -> SpectralData:
    """Spectral data for ``L0 = 1_S (x) L_B`` without diagonalizing the full space.

    Uses ``P0(X) = Tr_B(X) (x) rho0`` and ``S = 1_S (x) S_B``.
    """
    l_b = np.asarray(l_b, dtype=complex)
    d_b = int(round(np.sqrt(l_b.shape[0])))
    rho0 = steady_state(l_b, tol)
    p0_b = np.outer(vectorize(rho0), vectorize(np.eye(d_b)).conj())
    s_b = _reduced_resolvent(l_b, p0_b)
    evals_b, _ = eig_general(l_b)
    is_zero, _ = _zero_cluster(evals_b, tol)
    nonzero = evals_b[~is_zero]
    if nonzero.size and np.max(nonzero.real) >= 0:
        raise NotRelaxingError("bath Liouvillian is not relaxing")

    append = append_state_superop(rho0, system_dim)
    trace_b = partial_trace_superop(system_dim, d_b)
    p0 = append @ trace_b
    q0 = np.eye(p0.shape[0], dtype=complex) - p0
    s = superop_kron(identity_superop(system_dim), s_b, system_dim, d_b)
    return SpectralData(
        p0=p0,
        q0=q0,
        s=s,
        tau_r=spectral_norm(s_b),
        gap=float(np.min(np.abs(nonzero))) if nonzero.size else float("inf"),
        kernel_dim=system_dim * system_dim,
        eigenvalues=np.repeat(evals_b, system_dim * system_dim),
        rho0=rho0,
        system_dim=system_dim,
        s_b=s_b,
        p0_left=append,
        p0_right=trace_b,
    )


def resolvent_integral_oracle(l0, t_max: float, n_steps: int = 400, order: int = 8) -> np.ndarray:
    """Quadrature of ``-int_0^t_max exp(t L0) Q0 dt``, test oracle for ``S``.

    ``Q0`` is taken as ``1 - exp(t_max L0)`` (the long-time limit), so the
    oracle shares nothing with the projector construction in ``analyze``.
    Each of the ``n_steps`` panels is integrated with ``order``-point
    Gauss-Legendre; panels are chained through the semigroup property.
    """
    l0 = np.asarray(l0, dtype=complex)
    n = l0.shape[0]
    h = t_max / n_steps
    nodes, weights = np.polynomial.legendre.leggauss(order)
    panel = np.zeros((n, n), dtype=complex)
    for x, w in zip(nodes, weights):
        panel += 0.5 * h * w * expm(0.5 * h * (x + 1) * l0)
    step = expm(h * l0)
    total = np.zeros((n, n), dtype=complex)
    prop = np.eye(n, dtype=complex)
    for _ in range(n_steps):
        total += prop @ panel
        prop = prop @ step
    q0 = np.eye(n, dtype=complex) - prop
    return -total @ q0
