"""Decay rates and Lamb-shift coefficients of a thermal bath with an Ohmic
spectral density.

All rates here are for unit coupling. The dissipative/dephasing couplings
``mu_x``/``mu_z`` are multiplied in when a generator is assembled.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache

import numpy as np
from scipy import integrate

# upper quadrature limit in units of the cutoff frequency
TAIL_FACTOR = 50.0
PV_RTOL = 1e-8
_COUPLING_WARN = 0.2


class QuadratureError(RuntimeError):
    """Principal-value quadrature failed to stabilise."""


class BathLabel(str, Enum):
    COMMON = "common"
    LOCAL1 = "local1"
    LOCAL2 = "local2"


@dataclass(frozen=True)
class SpectralDensity:
    """Ohmic spectral density with a Lorentzian cutoff."""

    cutoff: float = 20.0
    kind: str = "ohmic"

    def __post_init__(self):
        if self.kind != "ohmic":
            raise ValueError(f"unsupported spectral density {self.kind!r}")
        if not self.cutoff > 0:
            raise ValueError("cutoff must be positive")

    def __call__(self, omega):
        return ohmic_j(omega, self)


@dataclass(frozen=True)
class BathSpec:
    beta: float
    mu_x: float = 0.0
    mu_z: float = 0.0
    spectral: SpectralDensity = field(default_factory=SpectralDensity)
    label: BathLabel = BathLabel.COMMON

    def __post_init__(self):
        if not self.beta > 0:
            raise ValueError(f"beta must be positive, got {self.beta}")
        if self.mu_x < 0 or self.mu_z < 0:
            raise ValueError("couplings must be non-negative")
        object.__setattr__(self, "label", BathLabel(self.label))
        if max(self.mu_x, self.mu_z) > _COUPLING_WARN:
            warnings.warn(
                f"coupling {max(self.mu_x, self.mu_z)} on bath {self.label.value} "
                "is outside the weak-coupling regime",
                stacklevel=2,
            )


@dataclass(frozen=True)
class HalfFourierRate:
    """Real and imaginary parts of the one-sided bath correlation transform,
    Gamma(w) = gamma/2 + i*s."""

    gamma: float
    s: float

    @property
    def complex(self) -> complex:
        return 0.5 * self.gamma + 1j * self.s


def ohmic_j(omega, sd: SpectralDensity):
    wc2 = sd.cutoff * sd.cutoff
    return omega * wc2 / (wc2 + omega * omega)


def bose_occupation(omega, beta):
    """Mean occupation 1/(exp(beta*omega) - 1)."""
    omega = np.asarray(omega, dtype=float)
    if np.any(omega <= 0):
        raise ValueError("bose_occupation requires omega > 0")
    if np.isinf(beta):
        out = np.zeros_like(omega)
    else:
        with np.errstate(over="ignore"):
            out = 1.0 / np.expm1(beta * omega)
    return out if out.ndim else float(out)


def _bose_unchecked(x, beta):
    # x > 0 assumed; quadrature inner loop
    with np.errstate(over="ignore"):
        return 1.0 / np.expm1(beta * x)


def gamma_rate(omega: float, beta: float, sd: SpectralDensity) -> float:
    """Unit-coupling decay rate gamma(omega) = 2 Re Gamma(omega).

    Positive frequencies are emission (rate ~ n+1), negative ones absorption
    (rate ~ n). The omega = 0 limit of J(w) coth(beta w / 2) is 2/beta for an
    Ohmic density, which gives gamma(0) = 2 pi / beta.
    """
    if not beta > 0:
        raise ValueError("beta must be positive")
    if omega == 0.0:
        # J(w) ~ w near zero with unit slope for the Lorentzian-cut Ohmic form
        return 2.0 * math.pi / beta
    x = abs(omega)
    if omega > 0:
        # coth(bx/2) + 1 = 2 / (1 - exp(-bx))
        return math.pi * ohmic_j(x, sd) * 2.0 / -math.expm1(-beta * x)
    if beta * x > 700.0:
        return 0.0
    return math.pi * ohmic_j(x, sd) * 2.0 / math.expm1(beta * x)


def _zero_temperature_tail(omega: float, upper: float, wc: float) -> float:
    """Exact integral of J(x)/(omega - x) over [upper, inf) for the Ohmic form."""
    wc2 = wc * wc
    denom = omega * omega + wc2
    log_part = -math.log(math.sqrt(wc2 + upper * upper) / (upper - omega))
    atan_part = (0.5 * math.pi - math.atan(upper / wc)) / wc
    return wc2 * (omega / denom * log_part - wc2 / denom * atan_part)


def _quad(f, a, b, epsabs=0.0, **kw):
    val, _err = integrate.quad(f, a, b, epsabs=epsabs, epsrel=1e-12, limit=400, **kw)
    return val


def lamb_shift_s(
    omega: float,
    beta: float,
    sd: SpectralDensity,
    *,
    tail_factor: float = TAIL_FACTOR,
    delta0: float | None = None,
) -> float:
    """Unit-coupling Lamb-shift coefficient s(omega) = Im Gamma(omega).

    The Cauchy principal value is evaluated by cutting a symmetric window
    [x0 - delta, x0 + delta] around the pole x0 = |omega|; inside the window
    the singular factor is folded onto u = |x - x0| so the integrand stays
    regular. delta is halved until two successive values agree to PV_RTOL.
    Beyond tail_factor * cutoff the zero-temperature part is integrated in
    closed form and the thermal part (exponentially small) by quadrature.
    """
    if not beta > 0:
        raise ValueError("beta must be positive")
    wc = sd.cutoff
    upper = tail_factor * wc
    J = sd.__call__

    if omega == 0.0:
        body = _quad(lambda x: wc * wc / (wc * wc + x * x), 0.0, upper)
        tail = (0.5 * math.pi - math.atan(upper / wc)) * wc
        return -(body + tail)

    x0 = abs(omega)
    if x0 >= upper:
        raise ValueError("frequency beyond quadrature range")

    # singular piece written as g(x) / (x0 - x)
    if omega > 0:
        def g(x):
            return J(x) * (_bose_unchecked(x, beta) + 1.0)

        def regular(x):
            return J(x) * _bose_unchecked(x, beta) / (omega + x)
    else:
        def g(x):
            return -J(x) * _bose_unchecked(x, beta)

        def regular(x):
            return J(x) * (_bose_unchecked(x, beta) + 1.0) / (omega - x)

    def thermal(x):
        n = _bose_unchecked(x, beta)
        return J(x) * n * 2.0 * omega / (omega * omega - x * x)

    outer = _quad(regular, 0.0, upper, points=[x0] if x0 < upper else None)
    tail = _zero_temperature_tail(omega, upper, wc) + _quad(thermal, upper, np.inf)

    def windowed(delta):
        left = _quad(lambda x: g(x) / (x0 - x), 0.0, x0 - delta)
        right = _quad(lambda x: g(x) / (x0 - x), x0 + delta, upper,
                      points=[wc] if x0 + delta < wc else None)
        # the difference cancels for small u; floor the tolerance at g's scale
        fold = _quad(lambda u: (g(x0 - u) - g(x0 + u)) / u, 0.0, delta,
                     epsabs=1e-14 * abs(g(x0)))
        return left + right + fold

    delta = delta0 if delta0 is not None else min(0.5 * x0, 0.25)
    prev = windowed(delta) + outer + tail
    for _ in range(40):
        delta *= 0.5
        cur = windowed(delta) + outer + tail
        if abs(cur - prev) <= PV_RTOL * max(abs(cur), 1e-300):
            return cur
        prev = cur
    raise QuadratureError(
        f"principal value at omega={omega}, beta={beta} did not stabilise "
        f"(last change {abs(cur - prev):.3e})"
    )


@lru_cache(maxsize=65536)
def _half_fourier_cached(omega: float, beta: float, sd: SpectralDensity) -> HalfFourierRate:
    return HalfFourierRate(gamma_rate(omega, beta, sd), lamb_shift_s(omega, beta, sd))


def half_fourier(omega: float, beta: float, sd: SpectralDensity) -> HalfFourierRate:
    """Memoised (gamma, s) pair at one frequency. Safe for concurrent readers."""
    return _half_fourier_cached(float(omega), float(beta), sd)


def zero_temperature_shift(omega: float, sd: SpectralDensity) -> float:
    """Closed-form s(omega) at beta -> infinity for the Ohmic density."""
    wc = sd.cutoff
    wc2 = wc * wc
    if omega == 0.0:
        return -0.5 * math.pi * wc
    return wc2 / (omega * omega + wc2) * (omega * math.log(abs(omega) / wc) - 0.5 * math.pi * wc)
