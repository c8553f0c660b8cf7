import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import random_density
from thermoprobe.operators import (
    IDENTITY,
    KET_0,
    KET_1,
    SIGMA_MINUS,
    SIGMA_X,
    SIGMA_Z,
    InvalidStateError,
    check_density_matrix,
    embed,
    gibbs_state,
    jump_decompose,
    partial_trace,
    partial_trace_many,
    projector,
    tensor,
)

seeds = st.integers(0, 2**32 - 1)


def test_basis_convention():
    assert np.allclose(SIGMA_Z @ KET_0, KET_0)
    assert np.allclose(SIGMA_Z @ KET_1, -KET_1)
    assert np.allclose(SIGMA_MINUS @ KET_0, KET_1)


def test_embed_orders_qubits():
    assert np.allclose(embed(SIGMA_X, 1), np.kron(SIGMA_X, IDENTITY))
    assert np.allclose(embed(SIGMA_X, 2), np.kron(IDENTITY, SIGMA_X))


@given(seeds)
def test_partial_trace_of_product(seed):
    rng = np.random.default_rng(seed)
    a, b = random_density(rng, 2), random_density(rng, 2)
    rho = tensor(a, b)
    assert np.allclose(partial_trace(rho, 1), a)
    assert np.allclose(partial_trace(rho, 2), b)


@given(seeds)
def test_partial_trace_stack_matches_single(seed):
    rng = np.random.default_rng(seed)
    rhos = np.stack([random_density(rng, 4) for _ in range(3)])
    for keep in (1, 2):
        many = partial_trace_many(rhos, keep)
        assert np.allclose(many, [partial_trace(r, keep) for r in rhos])
        assert np.allclose(np.trace(many, axis1=1, axis2=2), 1.0)


def test_partial_trace_rejects_bad_input():
    with pytest.raises(ValueError):
        partial_trace(np.eye(2), 1)
    with pytest.raises(ValueError):
        partial_trace(np.eye(4) / 4, 3)


def test_check_density_matrix():
    check_density_matrix(projector(KET_0))
    with pytest.raises(InvalidStateError):
        check_density_matrix(np.eye(2))
    with pytest.raises(InvalidStateError):
        check_density_matrix(np.array([[1, 1], [0, 0]]))
    with pytest.raises(InvalidStateError):
        check_density_matrix(np.diag([1.5, -0.5]))
    with pytest.raises(InvalidStateError):
        check_density_matrix(np.ones(3))


@given(st.floats(0.05, 20.0))
def test_gibbs_state_populations(beta):
    g = gibbs_state(0.5 * SIGMA_Z, beta)
    assert np.trace(g) == pytest.approx(1.0)
    assert g[0, 0].real / g[1, 1].real == pytest.approx(np.exp(-beta), rel=1e-12)


@given(seeds, st.floats(0.0, 0.3))
def test_jump_decomposition_eigenoperators(seed, k):
    rng = np.random.default_rng(seed)
    h = 0.5 * embed(SIGMA_Z, 1) + 0.45 * embed(SIGMA_Z, 2) + k * embed(SIGMA_X, 1) @ embed(SIGMA_X, 2)
    m = rng.normal(size=(4, 4))
    a = m + m.T
    dec = jump_decompose(h, a)
    assert np.allclose(dec.total(), a)
    for w, op in dec:
        assert np.allclose(h @ op - op @ h, -w * op, atol=1e-10)
    # A(-w) = A(w)^dagger for Hermitian a
    for w, op in dec:
        assert np.allclose(dec.at(-w, tol=1e-9), op.conj().T)


def test_jump_decomposition_single_qubit():
    dec = jump_decompose(0.5 * SIGMA_Z, SIGMA_X)
    assert np.allclose(dec.at(1.0), SIGMA_MINUS)
    assert np.allclose(dec.at(-1.0), SIGMA_MINUS.T)
    with pytest.raises(KeyError):
        dec.at(0.0)
    with pytest.raises(ValueError):
        jump_decompose(np.array([[0, 1], [0, 0]]), SIGMA_X)
