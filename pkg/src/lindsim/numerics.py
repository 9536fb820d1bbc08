"""Dense complex linear algebra shared by every other module.

Thin, validated wrappers over numpy/scipy.  All matrices are plain
``numpy.ndarray`` objects of dtype ``complex128``.
"""
from __future__ import annotations

from dataclasses import dataclass, fields, replace

import numpy as np
import scipy.linalg as sla


class NumericError(RuntimeError):
    """Base class for numerical failures (CLI exit code 3)."""


class DimensionError(ValueError):
    pass


class SingularMatrixError(NumericError):
    pass


class ConvergenceError(NumericError):
    pass


@dataclass(frozen=True)
class Tolerances:
    """Numerical thresholds threaded through the library.

    zero_eig_rel
        Eigenvalues with ``|lambda| <= zero_eig_rel * max|lambda|`` count as zero.
    hermiticity_abs
        Allowed ``max|H - H^dagger|`` for operators declared Hermitian.
    oracle_abs
        Default absolute tolerance for structural identities (projector
        idempotence, vanishing first-order terms, ...).
    psd_abs
        Eigenvalues above ``-psd_abs`` are treated as nonnegative.
    """

    zero_eig_rel: float = 1e-9
    hermiticity_abs: float = 1e-10
    oracle_abs: float = 1e-8
    psd_abs: float = 1e-10

    def __post_init__(self):
        for f in fields(self):
            value = getattr(self, f.name)
            if not (np.isfinite(value) and value > 0):
                raise ValueError(f"tolerance {f.name} must be strictly positive, got {value!r}")

    def with_overrides(self, **overrides: float) -> "Tolerances":
        unknown = set(overrides) - {f.name for f in fields(self)}
        if unknown:
            raise ValueError(f"unknown tolerance name(s): {', '.join(sorted(unknown))}")
        return replace(self, **{k: float(v) for k, v in overrides.items()})

    def as_dict(self) -> dict[str, float]:
        return {f.name: getattr(self, f.name) for f in fields(self)}


DEFAULT_TOLERANCES = Tolerances()


def as_matrix(a, name: str = "matrix") -> np.ndarray:
    """Coerce to a finite 2-d complex array."""
    m = np.asarray(a, dtype=complex)
    if m.ndim != 2 or m.shape[0] < 1 or m.shape[1] < 1:
        raise DimensionError(f"{name} must be a non-empty 2-d array, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError(f"{name} has non-finite entries")
    return m


def _square(a, name: str = "matrix") -> np.ndarray:
    m = as_matrix(a, name)
    if m.shape[0] != m.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {m.shape}")
    return m


def dagger(a: np.ndarray) -> np.ndarray:
    return np.conj(np.asarray(a)).T


def kron(a, b) -> np.ndarray:
    return np.kron(as_matrix(a, "a"), as_matrix(b, "b"))


def expm(a) -> np.ndarray:
    """Matrix exponential (scaling and squaring with Pade approximants)."""
    return sla.expm(_square(a))


def spectral_norm(a) -> float:
    """Largest singular value."""
    m = as_matrix(a)
    return float(np.linalg.norm(m, 2))


def eig_general(a) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues and right eigenvectors of a general complex matrix.

    Raises ConvergenceError if LAPACK fails or if any returned pair has a
    residual ``||A v - lambda v||`` above ``1e-9 * ||A||``.
    """
    m = _square(a)
    try:
        w, v = sla.eig(m)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise ConvergenceError(f"eigendecomposition failed: {exc}") from exc
    scale = max(spectral_norm(m), 1.0)
    v = v / np.linalg.norm(v, axis=0, keepdims=True)
    residual = np.linalg.norm(m @ v - v * w, axis=0)
    if residual.size and residual.max() > 1e-9 * scale:
        raise ConvergenceError(f"eigenpair residual {residual.max():.3e} exceeds 1e-9*||A||")
    return w, v


def solve(a, b, max_condition: float = 1e12) -> np.ndarray:
    """Solve ``a @ x = b``; raise SingularMatrixError when ``cond_1(a) > max_condition``."""
    m = _square(a, "a")
    rhs = np.asarray(b, dtype=complex)
    if rhs.shape[0] != m.shape[0]:
        raise DimensionError(f"rhs has {rhs.shape[0]} rows, matrix has {m.shape[0]}")
    lu, piv, info = sla.lapack.zgetrf(m)
    if info > 0:
        raise SingularMatrixError("matrix is exactly singular")
    anorm = np.linalg.norm(m, 1)
    rcond, _ = sla.lapack.zgecon(lu, anorm, norm="1")
    if rcond == 0 or 1.0 / rcond > max_condition:
        raise SingularMatrixError(f"condition estimate {1.0 / max(rcond, 1e-300):.3e} exceeds {max_condition:.1e}")
    x = sla.lu_solve((lu, piv), rhs)
    # normwise backward error; reduces to 1e-10*||b|| for well-conditioned a
    resid = np.linalg.norm(m @ x - rhs)
    bound = 1e-10 * (np.linalg.norm(rhs) + np.linalg.norm(m) * np.linalg.norm(x))
    if resid > bound:
        raise SingularMatrixError(f"solve residual {resid:.3e} exceeds {bound:.3e}")
    return x


def is_hermitian(a, atol: float) -> bool:
    m = np.asarray(a)
    return bool(np.max(np.abs(m - dagger(m)), initial=0.0) <= atol)
