import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from lindsim.numerics import (
    DEFAULT_TOLERANCES,
    ConvergenceError,
    DimensionError,
    SingularMatrixError,
    Tolerances,
    as_matrix,
    dagger,
    eig_general,
    expm,
    is_hermitian,
    kron,
    solve,
    spectral_norm,
)
from lindsim.hilbert import pauli
from lindsim.superop import dissipator

from conftest import random_matrix

finite = st.floats(-3, 3, allow_nan=False, allow_infinity=False)


def complex_matrices(n):
    return st.tuples(arrays(float, (n, n), elements=finite), arrays(float, (n, n), elements=finite)).map(
        lambda t: t[0] + 1j * t[1]
    )


def test_kron_identities():
    assert np.array_equal(kron(np.eye(2), np.eye(2)), np.eye(4))
    out = kron(np.eye(2), pauli("x"))
    assert np.array_equal(out[:2, :2], pauli("x")) and np.array_equal(out[2:, 2:], pauli("x"))
    assert not out[:2, 2:].any() and not out[2:, :2].any()


def test_kron_associative_bilinear(rng):
    a, b, c = (random_matrix(rng, 2), random_matrix(rng, 3), random_matrix(rng, 2))
    assert np.allclose(kron(kron(a, b), c), kron(a, kron(b, c)), atol=1e-12)
    a2 = random_matrix(rng, 2)
    assert np.allclose(kron(2 * a + a2, b), 2 * kron(a, b) + kron(a2, b), atol=1e-12)


def test_expm_examples():
    assert np.array_equal(expm(np.zeros((3, 3))), np.eye(3))
    assert np.allclose(expm(np.array([[0, 1], [0, 0]])), [[1, 1], [0, 1]], atol=1e-15)
    with pytest.raises(DimensionError):
        expm(np.zeros((2, 3)))


@given(complex_matrices(3))
def test_expm_inverse(a):
    a = a * (5 / max(spectral_norm(a), 5))
    assert np.allclose(expm(a) @ expm(-a), np.eye(3), atol=1e-10)


def test_exponential_perturbation_bound(rng):
    for _ in range(100):
        x = random_matrix(rng, 3) * rng.uniform(0, 0.7)
        y = random_matrix(rng, 3) * rng.uniform(0, 0.3)
        lhs = spectral_norm(expm(x) - expm(x + y))
        assert lhs <= spectral_norm(y) * np.exp(spectral_norm(x) + spectral_norm(y)) * (1 + 1e-12)


def test_spectral_norm_examples(rng):
    assert spectral_norm(np.eye(3)) == pytest.approx(1.0)
    assert spectral_norm(np.diag([3, -4j])) == pytest.approx(4.0)
    a = random_matrix(rng, 4)
    for _ in range(20):
        v = random_matrix(rng, 4, 1)[:, 0]
        assert spectral_norm(a) >= np.linalg.norm(a @ v) / np.linalg.norm(v) - 1e-12


@given(complex_matrices(3), complex_matrices(3))
def test_spectral_norm_submultiplicative(a, b):
    assert spectral_norm(a @ b) <= spectral_norm(a) * spectral_norm(b) * (1 + 1e-12) + 1e-12


def test_eig_examples():
    w, _ = eig_general(np.diag([0.0, -1.0]))
    assert sorted(w.real) == [-1.0, 0.0]
    tau = 0.7
    w, _ = eig_general(dissipator(pauli("minus"), 1 / tau))
    assert np.allclose(np.sort_complex(w), np.sort_complex([0, -1 / tau, -0.5 / tau, -0.5 / tau]), atol=1e-12)


def test_eig_vectors(rng):
    a = random_matrix(rng, 5)
    w, v = eig_general(a)
    assert np.allclose(a @ v, v * w, atol=1e-10)
    assert np.allclose(np.linalg.norm(v, axis=0), 1.0)


def test_eig_rejects_nonfinite():
    with pytest.raises(ValueError):
        eig_general(np.array([[np.nan, 0], [0, 1]]))


def test_solve_examples(rng):
    b = random_matrix(rng, 3, 2)
    assert np.allclose(solve(np.eye(3), b), b)
    assert np.allclose(solve(np.diag([2.0, 4.0]), np.eye(2)), np.diag([0.5, 0.25]))
    a, x = random_matrix(rng, 4), random_matrix(rng, 4, 3)
    assert np.allclose(solve(a, a @ x), x, atol=1e-10)


def test_solve_singular():
    with pytest.raises(SingularMatrixError):
        solve(np.array([[1.0, 2.0], [2.0, 4.0]]), np.eye(2))
    with pytest.raises(SingularMatrixError):
        solve(np.diag([1.0, 1e-14]), np.eye(2))


def test_tolerances():
    t = DEFAULT_TOLERANCES
    assert t.zero_eig_rel == 1e-9 and t.oracle_abs == 1e-8
    t2 = t.with_overrides(oracle_abs=1e-6)
    assert t2.oracle_abs == 1e-6 and t.oracle_abs == 1e-8
    with pytest.raises(ValueError):
        t.with_overrides(nope=1.0)
    with pytest.raises(ValueError):
        Tolerances(psd_abs=0.0)
    assert set(t.as_dict()) == {"zero_eig_rel", "hermiticity_abs", "oracle_abs", "psd_abs"}


def test_helpers(rng):
    a = random_matrix(rng, 3)
    assert np.array_equal(dagger(a), a.conj().T)
    assert is_hermitian(a + dagger(a), 1e-12) and not is_hermitian(a, 1e-12)
    with pytest.raises(DimensionError):
        as_matrix(np.zeros(3))
    with pytest.raises(ValueError):
        as_matrix([[np.inf]])


def test_convergence_error_is_numeric():
    from lindsim.numerics import NumericError

    assert issubclass(ConvergenceError, NumericError)
