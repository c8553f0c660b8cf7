"""Closed-form single-qubit relaxation and its inverse-temperature QFI.

The qubit starts in |1> (the lower slot of H = w0 sigma_z / 2 in the basis
of ``operators``) and relaxes under emission and absorption only. With
c = pi J(w0) mu_x^2 and x = beta w0 / 2 the rates are

    gamma_down = c (coth x + 1),  gamma_up = c (coth x - 1),  Gamma = 2 c coth x,

and the upper-slot population is p(t) = (1 - tanh x)(1 - exp(-Gamma t)) / 2.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bath import SpectralDensity, ohmic_j


@dataclass(frozen=True)
class AnalyticParams:
    omega0: float
    beta: float
    mu_x: float
    spectral: SpectralDensity = SpectralDensity()

    def __post_init__(self):
        for name in ("omega0", "beta", "mu_x"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be positive and finite")

    @property
    def c(self) -> float:
        return math.pi * ohmic_j(self.omega0, self.spectral) * self.mu_x**2

    @property
    def nbar(self) -> float:
        """Mean occupation with the sign used in the expanded QFI formula, 1/(1 - e^{beta w})."""
        return 1.0 / (1.0 - math.exp(self.beta * self.omega0))

    @property
    def gamma_down(self) -> float:
        return self.c * (1.0 / math.tanh(0.5 * self.beta * self.omega0) + 1.0)

    @property
    def gamma_up(self) -> float:
        return self.c * (1.0 / math.tanh(0.5 * self.beta * self.omega0) - 1.0)

    @property
    def total_rate(self) -> float:
        return 2.0 * self.c / math.tanh(0.5 * self.beta * self.omega0)


def analytic_state(p: AnalyticParams, t):
    """rho(t) = diag(g_up (1 - e^{-G t}), g_down + g_up e^{-G t}) / G."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("t must be non-negative")
    up, down, tot = p.gamma_up, p.gamma_down, p.total_rate
    decay = np.exp(-tot * t)
    upper = up * -np.expm1(-tot * t) / tot
    lower = (down + up * decay) / tot
    out = np.zeros(t.shape + (2, 2), dtype=complex)
    out[..., 0, 0] = upper
    out[..., 1, 1] = lower
    return out


def _chi(p: AnalyticParams, t):
    return 2.0 * p.c * t / math.tanh(0.5 * p.beta * p.omega0)


def analytic_qfi_expanded(p: AnalyticParams, t):
    """The fully expanded closed form; overflows once chi exceeds ~700."""
    t = np.asarray(t, dtype=float)
    b, w, nbar = p.beta, p.omega0, p.nbar
    chi = _chi(p, t)
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        eta = np.exp(w * b) * (2 + 4 * p.c * t - np.exp(b * w)) + 4 * p.c * t \
            + np.exp(chi) / nbar**2 - 1
        num = eta**2 * nbar**4 * w**2 * np.exp(2 * b * w) * (1 / np.tanh(chi / 2) - 1)
        den = 2 * (np.exp(b * w) + 1) ** 2 * (1 + np.exp(b * w + chi))
        out = num / den
    return out if out.ndim else float(out)


def analytic_qfi(p: AnalyticParams, t):
    """Transient QFI (dp/dbeta)^2 / (p (1 - p)) of the diagonal state.

    Algebraically identical to the expanded closed form but written in terms
    of expm1 and tanh so it neither overflows nor cancels at large chi.
    """
    t = np.asarray(t, dtype=float)
    w = p.omega0
    x = 0.5 * p.beta * w
    th = math.tanh(x)
    sech2 = 1.0 - th * th
    chi = _chi(p, t)
    one_minus = -np.expm1(-chi)  # 1 - e^{-chi}
    decay = np.exp(-chi)
    a = 0.5 * (1.0 - th)  # steady upper population
    prob = a * one_minus
    # d coth x / d beta = -(w/2) csch^2 x, so d chi / d beta = -chi (w/2) / (sinh x cosh x)
    dchi = -chi * 0.5 * w / (math.sinh(x) * math.cosh(x))
    dprob = -0.25 * w * sech2 * one_minus + a * decay * dchi
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.where(prob > 0, dprob**2 / (prob * (1.0 - prob)), 0.0)
    return out if out.ndim else float(out)


def steady_qfi(omega0, beta):
    """w0^2 / (2 + 2 cosh(beta w0)), written to avoid cosh overflow."""
    x = np.abs(np.asarray(beta, dtype=float) * omega0)
    e = np.exp(-x)
    out = np.asarray(omega0, dtype=float) ** 2 * e / (1.0 + e) ** 2
    return out if out.ndim else float(out)
