"""Quantum Fisher information for inverse-temperature estimation."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .bath import BathLabel
from .dynamics import TimeGrid, evolve_offsets, steady_offsets
from .liouvillian import ApproximationVariant, SystemSpec, build_model
from .operators import partial_trace, partial_trace_many

DET_FLOOR = 1e-12
EIG_FLOOR = 1e-12
CLIP_TOL = 1e-12
RICHARDSON_RTOL = 1e-6


class DerivativeError(RuntimeError):
    pass


def qfi_spectral(rho, drho, eps: float = EIG_FLOOR) -> float:
    """F = sum_{ij} 2 |<i|drho|j>|^2 / (l_i + l_j) over pairs with l_i + l_j > eps."""
    rho = np.asarray(rho)
    lam, vecs = np.linalg.eigh(0.5 * (rho + rho.conj().T))
    d = vecs.conj().T @ np.asarray(drho) @ vecs
    denom = lam[:, None] + lam[None, :]
    mask = denom > eps
    return float(np.sum(2.0 * np.abs(d[mask]) ** 2 / denom[mask]))


def qfi_2x2(rho, drho) -> float:
    """Qubit QFI: Tr(drho^2) + Tr((rho drho)^2) / det rho."""
    rho = np.asarray(rho)
    drho = np.asarray(drho)
    det = np.linalg.det(rho).real
    if det <= DET_FLOOR:
        return qfi_spectral(rho, drho)
    rd = rho @ drho
    return float((np.trace(drho @ drho) + np.trace(rd @ rd) / det).real)


def qfi(rho, drho) -> float:
    return qfi_2x2(rho, drho) if np.shape(rho) == (2, 2) else qfi_spectral(rho, drho)


def qfi_vs_T(f_beta, temperature):
    """F_T = F_beta / T^4."""
    temperature = np.asarray(temperature, dtype=float)
    if np.any(temperature <= 0):
        raise ValueError("temperature must be positive")
    out = np.asarray(f_beta) / temperature**4
    return out if out.ndim else float(out)


def relative_error(f_beta, beta):
    """Cramer-Rao relative error 1/(beta sqrt(F)); infinite when F = 0."""
    f_beta = np.asarray(f_beta, dtype=float)
    if np.any(np.asarray(beta) <= 0):
        raise ValueError("beta must be positive")
    if np.any(f_beta < 0):
        raise ValueError("QFI must be non-negative")
    with np.errstate(divide="ignore"):
        out = 1.0 / (np.asarray(beta) * np.sqrt(f_beta))
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class EstimationTarget:
    """Which bath temperature is estimated and which qubit is measured.

    ``probe`` is None for a single qubit; otherwise 1 or 2.
    """

    parameter: BathLabel = BathLabel.COMMON
    probe: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "parameter", BathLabel(self.parameter))
        if self.probe not in (None, 1, 2):
            raise ValueError("probe must be None, 1 or 2")


@dataclass(frozen=True, eq=False)
class Derivative:
    value: np.ndarray
    step: float
    richardson_error: float


def quotients_of(f, beta: float):
    """Adapt beta -> f(beta) to the offset-quotient interface of drho_dbeta."""
    def quotients(offsets):
        base = np.asarray(f(beta))
        return [(np.asarray(f(beta + e)) - base) / e for e in offsets]
    return quotients


def drho_dbeta(quotients_at, beta: float, *, rtol: float = RICHARDSON_RTOL,
               max_refinements: int = 4, step: float | None = None) -> Derivative:
    """Central difference in beta with a Richardson check.

    ``quotients_at(offsets)`` returns (rho(beta + e) - rho(beta)) / e for each
    offset e; the central difference with step h is the mean of the +h and -h
    quotients. All four offsets (+-h, +-h/2) are requested in one call so the
    twins share a propagation. The step starts at max(1e-5, 1e-4 beta); D(h)
    and D(h/2) must agree to ``rtol`` relative to max|D|, otherwise h is
    halved. The extrapolated (4 D(h/2) - D(h)) / 3 is returned.
    """
    h = step if step is not None else max(1e-5, 1e-4 * beta)
    for _ in range(max_refinements + 1):
        if beta - h <= 0:
            raise ValueError("finite-difference step crosses beta = 0")
        q = [np.asarray(x) for x in quotients_at([-h, h, -h / 2, h / 2])]
        d_h = 0.5 * (q[0] + q[1])
        d_h2 = 0.5 * (q[2] + q[3])
        scale = float(np.max(np.abs(d_h2)))
        err = float(np.max(np.abs(d_h - d_h2)))
        # absolute floor covers derivatives that vanish identically (t = 0)
        if err <= rtol * scale or err <= 1e-13:
            return Derivative((4 * d_h2 - d_h) / 3, h, err / max(scale, 1e-300))
        h /= 2
    raise DerivativeError(f"Richardson check failed at beta={beta}: rel. mismatch "
                          f"{err / max(scale, 1e-300):.2e} with step {h * 2:.2e}")


@dataclass(frozen=True, eq=False)
class QfiSeries:
    grid: TimeGrid
    values: np.ndarray
    target: EstimationTarget
    derivative_step: float
    beta: float
    clipped: int = 0
    states: np.ndarray | None = field(default=None, repr=False)
    drho: np.ndarray | None = field(default=None, repr=False)
    full_states: np.ndarray | None = field(default=None, repr=False)
    full_qfi: np.ndarray | None = field(default=None, repr=False)
    trace_error: np.ndarray | None = field(default=None, repr=False)
    min_eigenvalue: np.ndarray | None = field(default=None, repr=False)

    @property
    def times(self):
        return self.grid.times

    @property
    def qfi_T(self):
        return self.values * self.beta**4

    @property
    def peak(self) -> float:
        return float(np.max(self.values))

    @property
    def peak_time(self) -> float:
        return float(self.times[int(np.argmax(self.values))])


def clip_qfi(values):
    """Zero out values within CLIP_TOL below zero; returns (values, count)."""
    values = np.array(values, dtype=float)
    if np.any(values < -CLIP_TOL):
        raise ValueError(f"QFI {values.min():.3e} is negative beyond tolerance")
    neg = values < 0
    values[neg] = 0.0
    return values, int(neg.sum())


def project_derivative(drho):
    """Hermitian, traceless part of a (stack of) state derivative(s).

    The exact derivative of a trace-one Hermitian family has this form; the
    projection strips finite-difference noise the qubit formula would misread.
    """
    drho = np.asarray(drho)
    herm = 0.5 * (drho + np.conj(np.swapaxes(drho, -1, -2)))
    d = herm.shape[-1]
    tr = np.trace(herm, axis1=-2, axis2=-1).real / d
    return herm - tr[..., None, None] * np.eye(d)


def _probe(states, target: EstimationTarget):
    if target.probe is None:
        return states
    if np.ndim(states) == 2:
        return partial_trace(states, target.probe)
    return partial_trace_many(states, target.probe)


def _qfi_many(rhos, drhos):
    return np.array([qfi(r, d) for r, d in zip(rhos, drhos)])


def transient_qfi(spec: SystemSpec, variant: ApproximationVariant | None,
                  target: EstimationTarget, grid: TimeGrid, *, form: str = "auto",
                  full_state: bool = False) -> QfiSeries:
    """QFI of the probe state along a trajectory started from spec's rho(0).

    Every shifted-beta twin is a full rebuild of the generator; twins are
    propagated together with the nominal state. The whole-system derivative
    is formed once and the probe derivative is its partial trace. With
    ``full_state`` the QFI of the whole state is kept as well.
    """
    variant = variant or ApproximationVariant()
    if spec.n_qubits == 2 and target.probe is None:
        raise ValueError("two-qubit targets need a probe qubit")
    beta = spec.bath(target.parameter).beta
    rho0 = spec.initial_density_matrix()
    model = build_model(spec, variant, form)
    nominal = {}

    def quotients(offsets):
        shifted = [build_model(spec.with_beta(target.parameter, beta + e), variant, form)
                   for e in offsets]
        traj, q = evolve_offsets(rho0, model, shifted, offsets, grid)
        nominal["traj"] = traj
        return list(q)

    deriv = drho_dbeta(quotients, beta)
    drho = project_derivative(deriv.value)
    traj = nominal["traj"]
    probe_states = _probe(traj.states, target)
    probe_drho = project_derivative(_probe(drho, target))
    values, clipped = clip_qfi(_qfi_many(probe_states, probe_drho))
    full = None
    if full_state:
        full = np.array([qfi_spectral(r, d) for r, d in zip(traj.states, drho)])
    return QfiSeries(grid, values, target, deriv.step, beta, clipped,
                     states=probe_states, drho=probe_drho, full_states=traj.states,
                     full_qfi=full, trace_error=traj.trace_error,
                     min_eigenvalue=traj.min_eigenvalue)


@dataclass(frozen=True, eq=False)
class SteadyPoint:
    beta: float
    qfi: float
    relative_error: float
    state: np.ndarray
    drho: np.ndarray


def steady_qfi_numeric(spec: SystemSpec, variant: ApproximationVariant | None,
                       target: EstimationTarget, *, form: str = "auto") -> SteadyPoint:
    """Steady-state QFI of the probe from finite differences of steady states."""
    variant = variant or ApproximationVariant()
    beta = spec.bath(target.parameter).beta
    model = build_model(spec, variant, form)
    nominal = {}

    def quotients(offsets):
        shifted = [build_model(spec.with_beta(target.parameter, beta + e), variant, form)
                   for e in offsets]
        rho, q = steady_offsets(model, shifted, offsets)
        nominal["rho"] = rho
        return list(q)

    deriv = drho_dbeta(quotients, beta)
    rho = nominal["rho"]
    if target.probe is not None:
        rho = partial_trace(rho, target.probe)
    drho = project_derivative(_probe(project_derivative(deriv.value), target))
    value, _ = clip_qfi([qfi(rho, drho)])
    f = float(value[0])
    return SteadyPoint(beta, f, relative_error(f, beta), rho, drho)
