"""Hilbert-space bookkeeping and named operator builders.

Basis convention: ``|0>`` is the ground state reached by amplitude damping,
so ``sigma_minus = |0><1|`` and ``sigma_minus |0> = 0``.  Composite spaces
use ``numpy.kron`` ordering: the first factor is the most significant index.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from typing import Sequence

import numpy as np

from .numerics import DimensionError, as_matrix

DEFAULT_BOSON_CUTOFF = 8


@dataclass(frozen=True)
class HilbertSpace:
    factors: tuple[int, ...]

    def __init__(self, factors: Sequence[int]):
        factors = tuple(int(f) for f in factors)
        if not factors or any(f < 2 for f in factors):
            raise DimensionError(f"every subsystem dimension must be >= 2, got {factors}")
        object.__setattr__(self, "factors", factors)

    @property
    def total_dim(self) -> int:
        return int(np.prod(self.factors))

    def __len__(self):
        return len(self.factors)

    def __mul__(self, other: "HilbertSpace") -> "HilbertSpace":
        return HilbertSpace(self.factors + other.factors)


_PAULI = {
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "z": np.array([[1, 0], [0, -1]], dtype=complex),
    "plus": np.array([[0, 0], [1, 0]], dtype=complex),
    "minus": np.array([[0, 1], [0, 0]], dtype=complex),
}


def pauli(which: str) -> np.ndarray:
    """Single-qubit operator ``x``, ``y``, ``z``, ``plus`` or ``minus``.

    ``z`` is ``diag(1, -1)`` in the ``{|0>, |1>}`` basis, so with this
    ladder convention ``[sigma_plus, sigma_minus] = -z``.
    """
    try:
        return _PAULI[which].copy()
    except KeyError:
        raise ValueError(f"unknown Pauli operator {which!r}; expected one of {sorted(_PAULI)}") from None


def embed(op, site: int, space: HilbertSpace | Sequence[int]) -> np.ndarray:
    """``1 (x) ... (x) op (x) ... (x) 1`` with ``op`` on factor ``site``."""
    if not isinstance(space, HilbertSpace):
        space = HilbertSpace(space)
    m = as_matrix(op, "op")
    if not 0 <= site < len(space):
        raise DimensionError(f"site {site} out of range for space with {len(space)} factors")
    if m.shape != (space.factors[site],) * 2:
        raise DimensionError(f"operator of shape {m.shape} does not fit factor {site} of dimension {space.factors[site]}")
    parts = [np.eye(d, dtype=complex) for d in space.factors]
    parts[site] = m
    return reduce(np.kron, parts)


def collective_spin(n_qubits: int, which: str) -> np.ndarray:
    """Sum over sites of the single-qubit operator ``which`` (dimension ``2**n``)."""
    if n_qubits < 1:
        raise ValueError("n_qubits must be >= 1")
    space = HilbertSpace([2] * n_qubits)
    single = pauli(which)
    return sum(embed(single, k, space) for k in range(n_qubits))


def boson(cutoff: int, which: str) -> np.ndarray:
    """Truncated bosonic mode on ``span{|0>, ..., |cutoff-1>}``.

    ``which`` is ``a``, ``adag`` or ``n``.
    """
    if cutoff < 2:
        raise ValueError("cutoff must be >= 2")
    a = np.diag(np.sqrt(np.arange(1, cutoff)), k=1).astype(complex)
    if which == "a":
        return a
    if which == "adag":
        return a.conj().T
    if which == "n":
        return np.diag(np.arange(cutoff)).astype(complex)
    raise ValueError(f"unknown boson operator {which!r}; expected a, adag or n")


def basis_state(dim: int, index: int) -> np.ndarray:
    v = np.zeros(dim, dtype=complex)
    v[index] = 1.0
    return v


def ket_bra(dim: int, i: int, j: int) -> np.ndarray:
    m = np.zeros((dim, dim), dtype=complex)
    m[i, j] = 1.0
    return m


def partial_trace_last(x, dim_keep: int, dim_trace: int) -> np.ndarray:
    """Trace out the trailing factor of ``H_keep (x) H_trace``."""
    m = np.asarray(x).reshape(dim_keep, dim_trace, dim_keep, dim_trace)
    return np.einsum("ibjb->ij", m)
