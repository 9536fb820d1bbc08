"""Vectorization and Liouvillian assembly.

Column stacking is used throughout: ``vec(X) = X.T.ravel()``, so that
``vec(A X B) = (B^T (x) A) vec(X)``.  A superoperator on a ``d``-dimensional
Hilbert space is a ``d**2 x d**2`` complex ndarray acting on ``vec(X)``.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .hilbert import HilbertSpace
from .numerics import (
    DEFAULT_TOLERANCES,
    DimensionError,
    Tolerances,
    as_matrix,
    dagger,
    expm,
    is_hermitian,
)

VEC_CONVENTION = "column-stacking vec(X)=X.T.ravel(); vec(AXB)=(B^T kron A)vec(X)"


def vectorize(x) -> np.ndarray:
    m = as_matrix(x, "x")
    if m.shape[0] != m.shape[1]:
        raise DimensionError(f"operator must be square, got {m.shape}")
    return m.reshape(-1, order="F")


def devectorize(v, dim: int | None = None) -> np.ndarray:
    v = np.asarray(v, dtype=complex).ravel()
    if dim is None:
        dim = int(round(np.sqrt(v.size)))
    if dim * dim != v.size:
        raise DimensionError(f"vector of length {v.size} is not a vectorized {dim}x{dim} operator")
    return v.reshape(dim, dim, order="F")


def apply(superop, x) -> np.ndarray:
    """Apply a superoperator matrix to an operator."""
    x = np.asarray(x, dtype=complex)
    return devectorize(np.asarray(superop) @ vectorize(x), x.shape[0])


def sandwich(a, b) -> np.ndarray:
    """Matrix of ``X -> a X b``."""
    return np.kron(np.asarray(b, dtype=complex).T, np.asarray(a, dtype=complex))


def hamiltonian_superop(h, tol: Tolerances = DEFAULT_TOLERANCES, check: bool = True) -> np.ndarray:
    """Matrix of ``-i[H, .]``.

    ``check=False`` skips the Hermiticity test, for internal composition of
    non-Hermitian pieces.
    """
    h = as_matrix(h, "hamiltonian")
    if check and not is_hermitian(h, tol.hermiticity_abs):
        raise ValueError("Hamiltonian is not Hermitian within hermiticity_abs")
    eye = np.eye(h.shape[0], dtype=complex)
    return -1j * (np.kron(eye, h) - np.kron(h.T, eye))


def dissipator(l, rate: float = 1.0) -> np.ndarray:
    """Matrix of ``rate * (L X L^dag - 1/2 {L^dag L, X})``."""
    if rate < 0:
        raise ValueError(f"dissipation rate must be >= 0, got {rate}")
    l = as_matrix(l, "jump operator")
    eye = np.eye(l.shape[0], dtype=complex)
    ldl = dagger(l) @ l
    return rate * (np.kron(l.conj(), l) - 0.5 * np.kron(eye, ldl) - 0.5 * np.kron(ldl.T, eye))


@dataclass
class LindbladSpec:
    """Hamiltonian plus ``(jump operator, rate)`` pairs on ``space``."""

    space: HilbertSpace
    hamiltonian: np.ndarray
    jumps: list[tuple[np.ndarray, float]] = field(default_factory=list)

    def __post_init__(self):
        if not isinstance(self.space, HilbertSpace):
            self.space = HilbertSpace(self.space)
        d = self.space.total_dim
        if self.hamiltonian is None:
            self.hamiltonian = np.zeros((d, d), dtype=complex)
        self.hamiltonian = as_matrix(self.hamiltonian, "hamiltonian")
        if self.hamiltonian.shape != (d, d):
            raise DimensionError(f"hamiltonian shape {self.hamiltonian.shape} does not match dimension {d}")
        jumps = []
        for i, (op, rate) in enumerate(self.jumps):
            op = as_matrix(op, f"jumps[{i}]")
            if op.shape != (d, d):
                raise DimensionError(f"jumps[{i}] shape {op.shape} does not match dimension {d}")
            if not rate >= 0:
                raise ValueError(f"jumps[{i}] rate must be >= 0, got {rate}")
            jumps.append((op, float(rate)))
        self.jumps = jumps

    def validate(self, tol: Tolerances = DEFAULT_TOLERANCES) -> None:
        if not is_hermitian(self.hamiltonian, tol.hermiticity_abs):
            raise ValueError("hamiltonian is not Hermitian within hermiticity_abs")

    def without_hamiltonian(self) -> "LindbladSpec":
        return LindbladSpec(self.space, None, list(self.jumps))


def liouvillian(spec: LindbladSpec, tol: Tolerances = DEFAULT_TOLERANCES) -> np.ndarray:
    spec.validate(tol)
    out = hamiltonian_superop(spec.hamiltonian, tol)
    for op, rate in spec.jumps:
        out = out + dissipator(op, rate)
    return out


def identity_superop(dim: int) -> np.ndarray:
    return np.eye(dim * dim, dtype=complex)


def superop_kron(a, b, dim_a: int, dim_b: int) -> np.ndarray:
    """Superoperator of ``Phi_a (x) Phi_b`` on ``H_a (x) H_b`` (column stacking).

    Not ``np.kron(a, b)``: the vectorized composite index interleaves the
    row and column indices of both factors.
    """
    a4 = np.asarray(a, dtype=complex).reshape(dim_a, dim_a, dim_a, dim_a)
    b4 = np.asarray(b, dtype=complex).reshape(dim_b, dim_b, dim_b, dim_b)
    # a4[col_out, row_out, col_in, row_in]
    full = np.einsum("aicg,bjdh->abijcdgh", a4, b4)
    d = dim_a * dim_b
    return full.reshape(d * d, d * d)


def partial_trace_superop(dim_keep: int, dim_trace: int) -> np.ndarray:
    """Matrix of ``X -> Tr_B X`` from ``H_S (x) H_B`` to ``H_S``."""
    cols = []
    d = dim_keep * dim_trace
    eye_b = np.eye(dim_trace, dtype=complex)
    for j in range(dim_keep):
        for i in range(dim_keep):
            e = np.zeros((dim_keep, dim_keep), dtype=complex)
            e[i, j] = 1.0
            cols.append(vectorize(np.kron(e, eye_b)))
    # rows of the trace map are the adjoints of the embeddings E -> E (x) 1
    return np.array(cols).conj().reshape(dim_keep * dim_keep, d * d)


def append_state_superop(rho, dim_keep: int) -> np.ndarray:
    """Matrix of ``E -> E (x) rho`` from ``H_S`` to ``H_S (x) H_B``."""
    rho = as_matrix(rho, "rho")
    cols = []
    for j in range(dim_keep):
        for i in range(dim_keep):
            e = np.zeros((dim_keep, dim_keep), dtype=complex)
            e[i, j] = 1.0
            cols.append(vectorize(np.kron(e, rho)))
    return np.array(cols).T


def choi_matrix(channel, dim: int) -> np.ndarray:
    """``sum_ij |i><j| (x) Phi(|i><j|)`` for a superoperator matrix ``channel``."""
    channel = np.asarray(channel)
    out = np.zeros((dim * dim, dim * dim), dtype=complex)
    for i in range(dim):
        for j in range(dim):
            e = np.zeros((dim, dim), dtype=complex)
            e[i, j] = 1.0
            out += np.kron(e, apply(channel, e))
    return out


@dataclass(frozen=True)
class CPTPReport:
    t: float
    trace_defect: float
    choi_min_eig: float
    choi_rank: int

    def ok(self, tol: Tolerances = DEFAULT_TOLERANCES) -> bool:
        return self.trace_defect <= tol.psd_abs and self.choi_min_eig >= -tol.psd_abs


def check_cptp_propagator(l, t: float, tol: Tolerances = DEFAULT_TOLERANCES) -> CPTPReport:
    """Trace-preservation defect and Choi spectrum of ``exp(t L)``."""
    if t < 0:
        raise ValueError("t must be >= 0")
    l = np.asarray(l, dtype=complex)
    dim = int(round(np.sqrt(l.shape[0])))
    prop = expm(t * l)
    defect = 0.0
    for i in range(dim):
        for j in range(dim):
            e = np.zeros((dim, dim), dtype=complex)
            e[i, j] = 1.0
            defect = max(defect, abs(np.trace(apply(prop, e)) - np.trace(e)))
    choi = choi_matrix(prop, dim)
    evals = np.linalg.eigvalsh(0.5 * (choi + dagger(choi)))
    rank = int(np.sum(evals > 1e-8 * max(evals.max(), 1.0)))
    return CPTPReport(float(t), float(defect), float(evals.min()), rank)


def write_superop_csv(superop, path: str | Path, comment: str = "") -> None:
    """Write a superoperator as CSV, each complex entry as a ``re,im`` column pair."""
    m = np.asarray(superop, dtype=complex)
    path = Path(path)
    try:
        with path.open("w", newline="") as fh:
            note = f" {comment}" if comment else ""
            fh.write(f"# superoperator {m.shape[0]}x{m.shape[1]}; {VEC_CONVENTION}; entries as re,im pairs{note}\n")
            writer = csv.writer(fh, lineterminator="\n")
            for row in m:
                writer.writerow([f"{x:.17g}" for z in row for x in (z.real, z.imag)])
    except OSError as exc:
        raise OSError(f"cannot write superoperator CSV to {path}: {exc}") from exc


def read_superop_csv(path: str | Path) -> np.ndarray:
    rows = []
    with Path(path).open() as fh:
        for line in fh:
            if line.startswith("#") or not line.strip():
                continue
            vals = np.array([float(x) for x in line.strip().split(",")])
            rows.append(vals[0::2] + 1j * vals[1::2])
    return np.array(rows)


def random_density_matrix(dim: int, rng: np.random.Generator) -> np.ndarray:
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    rho = g @ dagger(g)
    return rho / np.trace(rho)


def superop_distance(a, b) -> float:
    return float(np.linalg.norm(np.asarray(a) - np.asarray(b), 2))


def jump_list(ops: Sequence, rates: Sequence[float]) -> list[tuple[np.ndarray, float]]:
    return [(np.asarray(o, dtype=complex), float(r)) for o, r in zip(ops, rates, strict=True)]
