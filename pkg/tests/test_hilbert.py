import numpy as np
import pytest
from hypothesis import given, strategies as st

from lindsim.hilbert import (
    DEFAULT_BOSON_CUTOFF,
    HilbertSpace,
    basis_state,
    boson,
    collective_spin,
    embed,
    ket_bra,
    partial_trace_last,
    pauli,
)
from lindsim.numerics import expm, spectral_norm

from conftest import random_matrix


def test_pauli_convention():
    ket0, ket1 = basis_state(2, 0), basis_state(2, 1)
    assert np.array_equal(pauli("minus") @ ket1, ket0)
    assert not (pauli("minus") @ ket0).any()
    assert np.array_equal(pauli("plus"), pauli("minus").conj().T)
    x, y, z = pauli("x"), pauli("y"), pauli("z")
    assert np.allclose(x @ y, 1j * z)
    with pytest.raises(ValueError):
        pauli("w")


def test_collective_spin():
    assert np.array_equal(collective_spin(1, "minus"), pauli("minus"))
    ket11 = np.kron(basis_state(2, 1), basis_state(2, 1))
    expected = np.kron(basis_state(2, 0), basis_state(2, 1)) + np.kron(basis_state(2, 1), basis_state(2, 0))
    assert np.allclose(collective_spin(2, "minus") @ ket11, expected)


@given(st.integers(1, 4))
def test_collective_spin_adjoint(n):
    assert np.array_equal(collective_spin(n, "plus"), collective_spin(n, "minus").conj().T)
    sx = collective_spin(n, "x")
    assert np.allclose(sx, collective_spin(n, "plus") + collective_spin(n, "minus"))


def test_collective_commutator():
    # with |0> the ground state, S^z = -1/2 sum sigma_z
    n = 3
    sz = -0.5 * sum(embed(pauli("z"), i, [2] * n) for i in range(n))
    sp, sm = collective_spin(n, "plus"), collective_spin(n, "minus")
    assert np.allclose(sp @ sm - sm @ sp, 2 * sz)


def test_boson():
    a = boson(4, "a")
    assert not (a @ basis_state(4, 0)).any()
    assert np.allclose(a @ basis_state(4, 2), np.sqrt(2) * basis_state(4, 1))
    assert np.allclose(boson(4, "adag"), a.conj().T)
    assert np.allclose(boson(4, "n"), np.diag([0, 1, 2, 3]))
    assert DEFAULT_BOSON_CUTOFF == 8
    with pytest.raises(ValueError):
        boson(1, "a")


def test_embed_examples():
    x = pauli("x")
    assert np.array_equal(embed(x, 0, [2]), x)
    assert np.array_equal(embed(x, 1, [2, 2]), np.kron(np.eye(2), x))
    assert np.array_equal(embed(x, 0, [2, 3]), np.kron(x, np.eye(3)))
    with pytest.raises(ValueError):
        embed(x, 2, [2, 2])
    with pytest.raises(ValueError):
        embed(np.eye(3), 0, [2, 2])


def test_embed_preserves_unitary_norm(rng):
    h = random_matrix(rng, 3)
    u = expm(1j * (h + h.conj().T))
    assert spectral_norm(embed(u, 1, [2, 3, 2])) == pytest.approx(1.0)


def test_space():
    s = HilbertSpace([2, 3])
    assert s.total_dim == 6 and len(s) == 2
    assert (s * HilbertSpace([4])).factors == (2, 3, 4)
    with pytest.raises(ValueError):
        HilbertSpace([2, 1])
    with pytest.raises(ValueError):
        HilbertSpace([])


def test_partial_trace(rng):
    a, b = random_matrix(rng, 2), random_matrix(rng, 3)
    assert np.allclose(partial_trace_last(np.kron(a, b), 2, 3), a * np.trace(b))
    assert np.array_equal(ket_bra(3, 0, 2), np.outer(basis_state(3, 0), basis_state(3, 2)))


@given(st.sampled_from(["x", "y", "z", "plus", "minus"]), st.integers(1, 3))
def test_builders_finite(which, n):
    op = embed(pauli(which), n - 1, [2] * n)
    assert op.shape == (2**n, 2**n) and np.all(np.isfinite(op))
