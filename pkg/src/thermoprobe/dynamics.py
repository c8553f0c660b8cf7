"""Time evolution and steady states of a LiouvillianModel."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache

import numpy as np
from scipy import integrate, linalg

from .liouvillian import LiouvillianModel, unvec, vec
from .operators import IDENTITY, SIGMA_X, SIGMA_Y, SIGMA_Z, check_density_matrix, \
    partial_trace_many, tensor

RTOL = 1e-9
ATOL = 1e-12


class IntegrationError(RuntimeError):
    pass


class SteadyStateError(RuntimeError):
    pass


class Spacing(str, Enum):
    LINEAR = "linear"
    LOG = "log"


@dataclass(frozen=True)
class TimeGrid:
    t_start: float
    t_end: float
    n_samples: int = 201
    spacing: Spacing = Spacing.LINEAR

    def __post_init__(self):
        object.__setattr__(self, "spacing", Spacing(self.spacing))
        if not (self.t_end > self.t_start >= 0):
            raise ValueError("need t_end > t_start >= 0")
        if self.n_samples < 2:
            raise ValueError("n_samples must be at least 2")

    @property
    def times(self) -> np.ndarray:
        if self.spacing is Spacing.LINEAR:
            return np.linspace(self.t_start, self.t_end, self.n_samples)
        # log spacing keeps t_start itself as the first sample
        lo = self.t_start if self.t_start > 0 else self.t_end * 1e-4
        inner = np.geomspace(lo, self.t_end, self.n_samples - (self.t_start == 0))
        return inner if self.t_start > 0 else np.concatenate([[0.0], inner])


@dataclass(frozen=True, eq=False)
class Trajectory:
    grid: TimeGrid
    states: np.ndarray  # (n_samples, d, d)
    trace_error: np.ndarray = field(default=None)
    min_eigenvalue: np.ndarray = field(default=None)
    hermiticity: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.trace_error is None:
            tr, lo, herm = diagnose(self.states)
            object.__setattr__(self, "trace_error", tr)
            object.__setattr__(self, "min_eigenvalue", lo)
            object.__setattr__(self, "hermiticity", herm)

    @property
    def times(self):
        return self.grid.times

    @property
    def dim(self):
        return self.states.shape[-1]

    def __len__(self):
        return len(self.states)


def diagnose(states):
    """Per-sample diagnostics as (trace error, min eigenvalue, Hermiticity residual)."""
    states = np.asarray(states)
    tr = np.abs(np.trace(states, axis1=-2, axis2=-1) - 1.0)
    dag = np.conj(np.swapaxes(states, -1, -2))
    herm = np.max(np.abs(states - dag), axis=(-2, -1))
    lo = np.linalg.eigvalsh(0.5 * (states + dag))[..., 0]
    return tr, lo, herm


def default_horizon(model: LiouvillianModel, factor: float = 10.0) -> float:
    return factor / slowest_rate(model)


def slowest_rate(model: LiouvillianModel) -> float:
    """Smallest nonzero |Re lambda| of the generator."""
    re = np.abs(np.linalg.eigvals(model.superoperator).real)
    scale = max(re.max(), 1e-300)
    nonzero = re[re > 1e-9 * scale]
    if nonzero.size == 0:
        raise ValueError("generator has no decaying modes")
    return float(nonzero.min())


@lru_cache(maxsize=None)
def pauli_basis(dim: int) -> np.ndarray:
    """Columns vec(P) for the Pauli products P on log2(dim) qubits."""
    n = int(round(math.log2(dim)))
    singles = (IDENTITY, SIGMA_X, SIGMA_Y, SIGMA_Z)
    return np.column_stack([vec(tensor(*ps)) for ps in itertools.product(singles, repeat=n)])


def real_generator(sup, dim: int) -> np.ndarray:
    """The generator acting on real coefficients r_i = Tr(P_i rho).

    Hermitian states are real vectors in this basis, so the integrated state
    is Hermitian by construction rather than up to accumulated roundoff.
    """
    b = pauli_basis(dim)
    return (b.conj().T @ sup @ b).real / dim


def _to_real(rho, dim):
    return (pauli_basis(dim).conj().T @ vec(rho)).real


def _from_real(r, dim):
    """Coefficient rows (..., dim^2) to density matrices (..., dim, dim)."""
    b = pauli_basis(dim)
    flat = np.asarray(r) @ b.T / dim
    return np.swapaxes(flat.reshape(flat.shape[:-1] + (dim, dim)), -1, -2)


def evolve_many(rho0s, models, grid: TimeGrid, *, method: str = "rk",
                rtol: float = RTOL, atol: float = ATOL) -> list[Trajectory]:
    """Propagate several (state, model) pairs in one stacked ODE.

    Running finite-difference twins through the same adaptive step sequence
    removes step-selection noise from their difference.
    """
    models = list(models)
    rho0s = [np.asarray(r, dtype=complex) for r in rho0s]
    if len(rho0s) != len(models):
        raise ValueError("need one initial state per model")
    for r, m in zip(rho0s, models):
        check_density_matrix(r)
        if r.shape != (m.dim, m.dim):
            raise ValueError(f"state shape {r.shape} does not match model dim {m.dim}")
    t = grid.times

    if method == "expm":
        return [_evolve_expm(r, m, grid) for r, m in zip(rho0s, models)]
    if method != "rk":
        raise ValueError(f"unknown method {method!r}")

    blocks = [real_generator(m.superoperator, m.dim) for m in models]
    big = linalg.block_diag(*blocks)
    y0 = np.concatenate([_to_real(r, m.dim) for r, m in zip(rho0s, models)])

    def rhs(_t, y):
        return big @ y

    sol = integrate.solve_ivp(rhs, (t[0], t[-1]), y0, method="DOP853", t_eval=t,
                              rtol=rtol, atol=atol)
    if sol.status != 0 or sol.y.shape[1] != len(t):
        raise IntegrationError(f"integration failed at t={sol.t[-1] if sol.t.size else t[0]}: "
                               f"{sol.message}")
    out, offset = [], 0
    for m in models:
        n = m.dim * m.dim
        states = _from_real(sol.y[offset:offset + n].T, m.dim)
        offset += n
        out.append(Trajectory(grid, np.ascontiguousarray(states)))
    return out


def evolve_offsets(rho0, model: LiouvillianModel, shifted, offsets, grid: TimeGrid, *,
                   rtol: float = RTOL, atol: float = ATOL):
    """Nominal trajectory plus difference quotients of parameter-shifted twins.

    For twin i with generator L_i at parameter offset e_i the quotient
    u_i = (rho_i - rho_0) / e_i obeys du_i/dt = L_i u_i + ((L_i - L_0) / e_i) rho_0
    with u_i(0) = 0. Integrating u_i instead of rho_i lets the error control act
    on the quotient itself, so roundoff is not amplified by 1/e_i.
    """
    shifted = list(shifted)
    offsets = [float(e) for e in offsets]
    if len(shifted) != len(offsets):
        raise ValueError("need one offset per shifted model")
    rho0 = check_density_matrix(np.asarray(rho0, dtype=complex))
    d = model.dim
    n = d * d
    l0 = real_generator(model.superoperator, d)
    m = len(shifted)
    big = np.zeros(((m + 1) * n, (m + 1) * n))
    big[:n, :n] = l0
    for i, (mod, e) in enumerate(zip(shifted, offsets), start=1):
        if mod.dim != d:
            raise ValueError("shifted model dimension mismatch")
        li = real_generator(mod.superoperator, d)
        big[i * n:(i + 1) * n, :n] = (li - l0) / e
        big[i * n:(i + 1) * n, i * n:(i + 1) * n] = li
    y0 = np.zeros((m + 1) * n)
    y0[:n] = _to_real(rho0, d)
    t = grid.times
    sol = integrate.solve_ivp(lambda _t, y: big @ y, (t[0], t[-1]), y0, method="DOP853",
                              t_eval=t, rtol=rtol, atol=atol)
    if sol.status != 0 or sol.y.shape[1] != len(t):
        raise IntegrationError(f"integration failed: {sol.message}")
    blocks = _from_real(sol.y.T.reshape(len(t), m + 1, n).transpose(1, 0, 2), d)
    return Trajectory(grid, np.ascontiguousarray(blocks[0])), np.ascontiguousarray(blocks[1:])


def steady_offsets(model: LiouvillianModel, shifted, offsets):
    """Steady state and quotients (rho_i - rho_0) / e_i of shifted twins.

    Each quotient solves L_i u = -((L_i - L_0) / e_i) rho_0 with Tr u = 0.
    """
    rho0 = steady_state(model)
    d = model.dim
    l0 = model.superoperator
    out = []
    for mod, e in zip(shifted, offsets):
        rhs = -((mod.superoperator - l0) / e) @ vec(rho0)
        u = _bordered_solve(mod.superoperator, rhs, 0.0, d)
        out.append(unvec(u, d))
    return rho0, np.array(out)


def _bordered_solve(sup, rhs, trace_value, d):
    n = d * d
    w = vec(np.eye(d))
    bordered = np.zeros((n + 1, n + 1), dtype=complex)
    bordered[:n, :n] = sup
    bordered[:n, n] = w
    bordered[n, :n] = w
    b = np.zeros(n + 1, dtype=complex)
    b[:n] = rhs
    b[n] = trace_value
    return linalg.solve(bordered, b)[:n]


def evolve(rho0, model: LiouvillianModel, grid: TimeGrid, **kw) -> Trajectory:
    return evolve_many([rho0], [model], grid, **kw)[0]


def _evolve_expm(rho0, model, grid):
    t = grid.times
    sup = model.superoperator
    v = vec(rho0)
    states = []
    for ti in t:
        states.append(unvec(linalg.expm(sup * (ti - t[0])) @ v, model.dim))
    return Trajectory(grid, np.stack(states))


def steady_state(model: LiouvillianModel) -> np.ndarray:
    """Unique trace-one fixed point from the bordered system [[L, w], [w^T, 0]]."""
    sup = model.superoperator
    d = model.dim
    n = d * d
    svals = linalg.svdvals(sup)
    scale = max(svals[0], 1e-300)
    null_dim = int(np.sum(svals <= 1e-10 * scale))
    if null_dim > 1:
        raise SteadyStateError(f"generator kernel has dimension {null_dim}")
    rho = unvec(_bordered_solve(sup, np.zeros(n, dtype=complex), 1.0, d), d)
    return 0.5 * (rho + rho.conj().T)


def reduced_trajectory(traj: Trajectory, keep: int) -> Trajectory:
    if traj.dim != 4:
        raise ValueError("reduced_trajectory needs a two-qubit trajectory")
    return Trajectory(traj.grid, partial_trace_many(traj.states, keep))
