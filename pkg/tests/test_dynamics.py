import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import random_density
from thermoprobe.bath import BathSpec
from thermoprobe.dynamics import (
    Spacing,
    SteadyStateError,
    TimeGrid,
    default_horizon,
    evolve,
    evolve_many,
    evolve_offsets,
    reduced_trajectory,
    slowest_rate,
    steady_offsets,
    steady_state,
)
from thermoprobe.liouvillian import ApproximationVariant, SystemSpec, build_model, unvec, vec


def spec_two(k=0.0, beta_l1=0.1, mu_z=0.0):
    baths = (BathSpec(1.0, 0.01, mu_z, label="common"), BathSpec(beta_l1, 0.01, mu_z, label="local1"),
             BathSpec(1.0, 0.01, mu_z, label="local2"))
    return SystemSpec(1.0, 0.99, k=k, baths=baths)


def test_time_grid():
    g = TimeGrid(0.0, 100.0, 11)
    assert np.allclose(g.times, np.linspace(0, 100, 11))
    lg = TimeGrid(0.0, 100.0, 11, "log")
    assert lg.spacing is Spacing.LOG and lg.times[0] == 0.0 and len(lg.times) == 11
    assert lg.times[1] == pytest.approx(0.01) and lg.times[-1] == pytest.approx(100.0)
    assert np.all(np.diff(lg.times) > 0)
    assert TimeGrid(1.0, 10.0, 5, "log").times[0] == 1.0
    for bad in [(1.0, 1.0), (-1.0, 2.0)]:
        with pytest.raises(ValueError):
            TimeGrid(*bad)
    with pytest.raises(ValueError):
        TimeGrid(0.0, 1.0, 1)
    with pytest.raises(ValueError):
        TimeGrid(0.0, 1.0, 5, "cubic")


@pytest.mark.parametrize("k", [0.0, 0.1])
@pytest.mark.parametrize("variant", [ApproximationVariant(), ApproximationVariant(secular="full")])
def test_runge_kutta_matches_matrix_exponential(k, variant):
    spec = spec_two(k, mu_z=0.01)
    model = build_model(spec, variant)
    grid = TimeGrid(0.0, 3000.0, 13)
    rk = evolve(spec.initial_density_matrix(), model, grid)
    ex = evolve(spec.initial_density_matrix(), model, grid, method="expm")
    assert np.max(np.abs(rk.states - ex.states)) < 1e-8
    assert rk.trace_error.max() < 1e-12
    assert rk.hermiticity.max() < 1e-12


@given(st.integers(0, 2**32 - 1))
def test_evolution_stays_physical(seed):
    rho0 = random_density(np.random.default_rng(seed), 4)
    traj = evolve(rho0, build_model(spec_two(0.0)), TimeGrid(0.0, 500.0, 6))
    assert traj.trace_error.max() < 1e-9
    assert traj.min_eigenvalue.min() > -1e-6
    assert len(traj) == 6 and traj.dim == 4


def test_evolve_many_matches_separate_runs():
    spec = spec_two()
    models = [build_model(spec), build_model(spec_two(beta_l1=0.2))]
    grid = TimeGrid(0.0, 200.0, 5)
    rho0 = spec.initial_density_matrix()
    both = evolve_many([rho0, rho0], models, grid)
    for traj, m in zip(both, models):
        assert np.allclose(traj.states, evolve(rho0, m, grid, method="expm").states, atol=1e-8)
    with pytest.raises(ValueError):
        evolve_many([rho0], models, grid)
    with pytest.raises(ValueError):
        evolve(rho0, models[0], grid, method="euler")


def test_offset_quotients_match_twin_difference():
    spec = spec_two()
    model = build_model(spec)
    offsets = [1e-2, -1e-2]
    shifted = [build_model(spec.with_beta("local1", 0.1 + e)) for e in offsets]
    grid = TimeGrid(0.0, 400.0, 5)
    rho0 = spec.initial_density_matrix()
    traj, q = evolve_offsets(rho0, model, shifted, offsets, grid)
    assert np.allclose(traj.states, evolve(rho0, model, grid, method="expm").states, atol=1e-9)
    for e, m, qi in zip(offsets, shifted, q):
        twin = evolve(rho0, m, grid, method="expm").states
        diff = (twin - traj.states) / e
        assert np.max(np.abs(qi - diff)) < 1e-6 * max(np.max(np.abs(diff)), 1e-3)


def test_steady_offsets_match_twin_difference():
    spec = spec_two(0.1)
    model = build_model(spec)
    e = 1e-3
    rho, q = steady_offsets(model, [build_model(spec.with_beta("local1", 0.1 + e))], [e])
    direct = (steady_state(build_model(spec.with_beta("local1", 0.1 + e))) - steady_state(model)) / e
    assert np.allclose(q[0], direct, atol=1e-7)
    assert abs(np.trace(q[0])) < 1e-12
    assert np.allclose(model.superoperator @ vec(rho), 0, atol=1e-15)


def test_steady_state_needs_unique_fixed_point():
    # qubit 2 has no bath: the kernel is degenerate
    spec = SystemSpec(1.0, 0.99, baths=(BathSpec(1.0, 0.01, label="local1"),))
    with pytest.raises(SteadyStateError):
        steady_state(build_model(spec))


def test_horizon_and_reduction():
    spec = SystemSpec(1.0, baths=(BathSpec(1.0, 0.01),))
    model = build_model(spec)
    rate = slowest_rate(model)
    assert default_horizon(model) == pytest.approx(10.0 / rate)
    traj = evolve(spec_two().initial_density_matrix(), build_model(spec_two()), TimeGrid(0.0, 10.0, 3))
    red = reduced_trajectory(traj, 2)
    assert red.dim == 2
    with pytest.raises(ValueError):
        reduced_trajectory(red, 1)
    assert np.allclose(unvec(vec(traj.states[1]), 4), traj.states[1])
