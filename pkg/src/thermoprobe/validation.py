"""Acceptance checks, each reported as one pass/fail line with diagnostics.

Transient runs are memoised on their full physical configuration, so the
scenarios shared between checks are integrated once per process.
"""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field

import numpy as np

from .analytic import AnalyticParams, analytic_qfi, analytic_qfi_expanded, steady_qfi
from .bath import BathLabel, BathSpec, SpectralDensity, gamma_rate
from .dynamics import TimeGrid, diagnose, evolve, steady_state
from .liouvillian import (
    ApproximationVariant,
    CoefficientScheme,
    SecularMode,
    SystemSpec,
    build_model,
)
from .metrology import (
    EstimationTarget,
    QfiSeries,
    qfi_2x2,
    qfi_spectral,
    steady_qfi_numeric,
    transient_qfi,
)
from .operators import gibbs_state
from .scenarios import ScenarioConfig, heatmap_cell, heatmap_reference, load_config

SINGLE_QUBIT_STEADY = 0.1966
TRACE_TOL = 1e-9
HERMITICITY_TOL = 1e-10
GKLS_POSITIVITY_TOL = 1e-12
REDFIELD_POSITIVITY_TOL = 1e-6
DETAILED_BALANCE_RTOL = 1e-12
QFI_FORMULA_RTOL = 1e-10


@dataclass(frozen=True)
class Part:
    name: str
    passed: bool
    detail: str


@dataclass(frozen=True)
class CheckResult:
    number: int
    title: str
    parts: tuple[Part, ...]

    @property
    def passed(self) -> bool:
        return all(p.passed for p in self.parts)

    def part(self, name: str) -> Part:
        for p in self.parts:
            if p.name == name:
                return p
        raise KeyError(name)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        detail = "; ".join(f"{p.name}: {p.detail}" + ("" if p.passed else " [failed]")
                           for p in self.parts)
        return f"[{status}] criterion {self.number:2d} {self.title}: {detail}"


# --------------------------------------------------------------------------
# cached scenario runs

_RUNS: dict = {}
_RUN_LOG: list = []


def config(name: str, series: str = "") -> ScenarioConfig:
    for cfg in load_config(name):
        if cfg.series == series:
            return cfg
    raise KeyError(f"{name} has no series {series!r}")


def transient(cfg: ScenarioConfig, grid: TimeGrid | None = None) -> QfiSeries:
    grid = grid or cfg.time_grid()
    key = (cfg.system, cfg.variant, cfg.target, cfg.form, grid)
    if key not in _RUNS:
        _RUNS[key] = transient_qfi(cfg.system, cfg.variant, cfg.target, grid,
                                   form=cfg.form, full_state=True)
        _RUN_LOG.append((f"{cfg.name}/{cfg.series or '-'}", cfg.variant, _RUNS[key]))
    return _RUNS[key]


def clear_cache():
    _RUNS.clear()
    _RUN_LOG.clear()


def _with_variant(cfg: ScenarioConfig, **changes) -> ScenarioConfig:
    return dataclasses.replace(cfg, variant=dataclasses.replace(cfg.variant, **changes))


def _without_dephasing(cfg: ScenarioConfig) -> ScenarioConfig:
    baths = tuple(dataclasses.replace(b, mu_z=0.0) for b in cfg.system.baths)
    return dataclasses.replace(cfg, system=dataclasses.replace(cfg.system, baths=baths))


def _rel_sup(a, b) -> float:
    a, b = np.asarray(a), np.asarray(b)
    return float(np.max(np.abs(a - b)) / max(np.max(np.abs(b)), 1e-300))


def _first_local_max_time(series: QfiSeries) -> float:
    v = series.values
    idx = np.flatnonzero((v[1:-1] > v[:-2]) & (v[1:-1] >= v[2:]))
    return float(series.times[idx[0] + 1]) if idx.size else series.peak_time


# --------------------------------------------------------------------------
# criteria


def check_analytic_oracle() -> CheckResult:
    parts = []
    base = config("single_qubit_transient", "mu001")
    for mu in (0.01, 0.02, 0.03):
        params = AnalyticParams(1.0, 1.0, mu)
        horizon = 10.0 / params.total_rate
        spec = SystemSpec(1.0, baths=(BathSpec(1.0, mu_x=mu),))
        cfg = dataclasses.replace(base, system=spec, t_end=horizon)
        series = transient(cfg)
        exact = analytic_qfi(params, series.times)
        expanded = analytic_qfi_expanded(params, series.times)
        finite = np.isfinite(expanded)
        err = _rel_sup(series.values, exact)
        form_err = _rel_sup(expanded[finite], exact[finite]) if finite.any() else 0.0
        parts.append(Part(f"mu_x={mu}", err <= 1e-5 and form_err <= 1e-8,
                          f"rel sup {err:.2e} (expanded vs stable form {form_err:.1e})"))
    return CheckResult(1, "analytic oracle", tuple(parts))


def check_steady_single_qubit() -> CheckResult:
    parts = []
    for beta, expected in ((0.1, 0.2494), (1.0, 0.1966)):
        spec = SystemSpec(1.0, baths=(BathSpec(beta, mu_x=0.01),))
        f = steady_qfi_numeric(spec, None, EstimationTarget()).qfi
        exact = steady_qfi(1.0, beta)
        ok = abs(f - expected) <= 1e-4 and abs(f - exact) <= 1e-4 * exact
        parts.append(Part(f"beta={beta}", ok, f"{f:.6f} (closed form {exact:.6f})"))
    return CheckResult(2, "steady single-qubit QFI", tuple(parts))


def _trace_distance(a, b) -> float:
    return 0.5 * float(np.sum(np.abs(np.linalg.eigvalsh(a - b))))


def check_thermalization() -> CheckResult:
    rng = np.random.default_rng(7)
    m = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    mixed = m @ m.conj().T
    mixed /= np.trace(mixed)
    states = {"|0>": np.diag([1, 0]).astype(complex), "|1>": np.diag([0, 1]).astype(complex),
              "|+>": np.full((2, 2), 0.5, dtype=complex), "random": mixed}
    parts = []
    for beta in (0.1, 1.0, 5.0):
        spec = SystemSpec(1.0, baths=(BathSpec(beta, mu_x=0.01),))
        model = build_model(spec)
        target = gibbs_state(model.bare_hamiltonian, beta)
        rate = spec.baths[0].mu_x**2 * (gamma_rate(1.0, beta, SpectralDensity())
                                         + gamma_rate(-1.0, beta, SpectralDensity()))
        # coherences decay at half the population rate
        t_end = 80.0 / rate
        grid = TimeGrid(0.0, t_end, 2)
        worst = max(_trace_distance(evolve(r, model, grid, method="expm").states[-1], target)
                    for r in states.values())
        fixed = _trace_distance(steady_state(model), target)
        parts.append(Part(f"beta={beta}", worst < 1e-8 and fixed < 1e-8,
                          f"max trace distance {worst:.1e}, fixed point {fixed:.1e}"))
    return CheckResult(3, "thermalization", tuple(parts))


def check_secular_dichotomy() -> CheckResult:
    wide = config("common_bath_large_detuning", "partial")
    psa = transient(wide)
    full = transient(config("common_bath_large_detuning", "full"))
    err = _rel_sup(psa.values, full.values)
    parts = [Part("detuning 0.5", err <= 0.01, f"rel sup {err:.2e}")]

    narrow = config("common_bath_small_detuning", "partial")
    psa = transient(narrow)
    full = transient(config("common_bath_small_detuning", "full"))
    ratio = psa.peak / full.peak
    parts.append(Part("detuning 0.01 peaks", ratio >= 1.2,
                      f"PSA {psa.peak:.4f} vs full {full.peak:.4f} (x{ratio:.3f})"))

    f_psa = steady_qfi_numeric(narrow.system, narrow.variant, narrow.target).qfi
    f_full = steady_qfi_numeric(narrow.system, _with_variant(narrow, secular=SecularMode.FULL)
                                .variant, narrow.target).qfi
    parts.append(Part("steady", abs(f_psa - f_full) <= 1e-4,
                      f"PSA {f_psa:.5f} vs full {f_full:.5f}"))
    return CheckResult(4, "secular dichotomy", tuple(parts))


def check_unified() -> CheckResult:
    psa = transient(config("common_bath_small_detuning", "partial"))
    uni = transient(config("common_bath_small_detuning", "unified"))
    err = _rel_sup(uni.values, psa.values)
    return CheckResult(5, "unified vs Redfield",
                       (Part("detuning 0.01", err <= 0.02, f"rel sup {err:.2e}"),))


def check_heatmap_corners() -> CheckResult:
    cfg = config("local_bath_heatmap")
    ref = heatmap_reference(cfg)
    cold = heatmap_cell(cfg, 5.0, 5.0)
    hot = heatmap_cell(cfg, 0.5, 0.5)
    return CheckResult(6, "local-bath heatmap", (
        Part("(5, 5) region I", cold > ref, f"{cold:.5f} vs {ref:.5f}"),
        Part("(0.5, 0.5) region II", hot < ref, f"{hot:.5f} vs {ref:.5f}"),
    ))


def check_remote_asymmetry() -> CheckResult:
    l1 = transient(config("remote_sensing", "l1_probe2"))
    l2 = transient(config("remote_sensing", "l2_probe1"))
    det = transient(config("remote_sensing", "l1_probe2_detuned"))
    return CheckResult(7, "remote sensing asymmetry", (
        Part("l1 via 2 vs l2 via 1", l1.peak >= 5 * l2.peak,
             f"peaks {l1.peak:.4g} vs {l2.peak:.3g}"),
        Part("detuning collapse", det.peak * 10 <= l1.peak,
             f"peak {det.peak:.3g} at detuning 0.5 vs {l1.peak:.4g}"),
    ))


def check_lamb_shift_ablation() -> CheckResult:
    with_ls = transient(config("remote_sensing", "l1_probe2"))
    without = transient(config("no_lamb_shift", "k0"))
    return CheckResult(8, "Lamb-shift ablation", (
        Part("k=0", without.peak < 0.2 * with_ls.peak,
             f"peak {without.peak:.3g} without vs {with_ls.peak:.4g} with"),
    ))


def check_coupled_enhancement() -> CheckResult:
    weak = transient(config("coupled_remote_sensing", "k1em4"))
    mid = transient(config("coupled_remote_sensing", "k1em2"))
    strong = transient(config("coupled_remote_sensing", "k1em1"))
    return CheckResult(9, "coupled-qubit enhancement", (
        Part("k=0.1 peak", strong.peak > weak.peak,
             f"{strong.peak:.4g} vs {weak.peak:.4g} at k=1e-4"),
        Part("time of maximum", mid.peak_time < weak.peak_time,
             f"t={mid.peak_time:.4g} (k=1e-2) vs t={weak.peak_time:.4g} (k=1e-4); "
             f"first local maxima at {_first_local_max_time(mid):.4g} and "
             f"{_first_local_max_time(weak):.4g}"),
    ))


def check_steady_coupled() -> CheckResult:
    cfg = config("steady_coupled", "local1")
    spec = cfg.system.with_beta(BathLabel.COMMON, 5.0).with_beta(BathLabel.LOCAL2, 5.0) \
        .with_beta(BathLabel.LOCAL1, 1.0)
    f = steady_qfi_numeric(spec, cfg.variant, cfg.target).qfi
    return CheckResult(10, "steady coupled sweep", (
        Part("k=0.1, beta_l1=1", f >= 0.2, f"F = {f:.4f}"),
    ))


def check_dephasing() -> CheckResult:
    parts = []
    for series in ("common", "local1", "local2"):
        cfg = config("dephasing_uncoupled", series)
        noisy = transient(cfg)
        clean = transient(_without_dephasing(cfg))
        excess = noisy.values - clean.values
        i = int(np.argmax(excess))
        parts.append(Part(series, excess[i] <= 1e-10,
                          f"max excess {excess[i]:.2e} at t={noisy.times[i]:.4g} "
                          f"(peaks {noisy.peak:.4g} vs {clean.peak:.4g})"))
    return CheckResult(11, "dephasing degradation", tuple(parts))


def detailed_balance_error(rate=gamma_rate, sd: SpectralDensity = SpectralDensity()) -> float:
    """Worst relative violation of gamma(-w) = exp(-beta w) gamma(w)."""
    worst = 0.0
    for beta in (0.1, 0.5, 1.0, 5.0):
        for w in (0.01, 0.3, 0.5, 0.99, 1.0, 1.01, 1.5, 2.0, 5.0):
            up = rate(w, beta, sd)
            down = rate(-w, beta, sd)
            worst = max(worst, abs(down - math.exp(-beta * w) * up) / abs(down))
    return worst


def _is_gkls(variant: ApproximationVariant) -> bool:
    return (variant.secular is SecularMode.FULL
            or variant.coefficients is CoefficientScheme.UNIFIED)


def check_properties() -> CheckResult:
    if not _RUN_LOG:
        transient(config("single_qubit_transient", "mu001"))
        transient(config("common_bath_small_detuning", "partial"))
    trace = herm = 0.0
    pos_gkls = pos_red = np.inf
    formula = 0.0
    dpi = -np.inf
    for _, variant, s in _RUN_LOG:
        tr, lo, hm = diagnose(s.full_states)
        trace, herm = max(trace, tr.max()), max(herm, hm.max())
        if _is_gkls(variant):
            pos_gkls = min(pos_gkls, lo.min())
        else:
            pos_red = min(pos_red, lo.min())
        for r, d in zip(s.states, s.drho):
            if np.linalg.det(r).real > 1e-6:
                a, b = qfi_2x2(r, d), qfi_spectral(r, d)
                formula = max(formula, abs(a - b) / max(abs(b), 1e-300))
        if s.full_qfi is not None and s.states.shape[-1] < s.full_states.shape[-1]:
            dpi = max(dpi, float(np.max(s.values - s.full_qfi * (1 + 1e-9) - 1e-12)))
    db = detailed_balance_error()
    pos_gkls = pos_gkls if np.isfinite(pos_gkls) else 0.0
    pos_red = pos_red if np.isfinite(pos_red) else 0.0
    n = len(_RUN_LOG)
    return CheckResult(12, "property suite", (
        Part("trace", trace < TRACE_TOL, f"max drift {trace:.1e} over {n} runs"),
        Part("hermiticity", herm < HERMITICITY_TOL, f"{herm:.1e}"),
        Part("positivity", pos_gkls >= -GKLS_POSITIVITY_TOL
             and pos_red >= -REDFIELD_POSITIVITY_TOL,
             f"min eig GKLS {pos_gkls:.1e}, Redfield {pos_red:.1e}"),
        Part("detailed balance", db <= DETAILED_BALANCE_RTOL, f"rel {db:.1e}"),
        Part("qfi_2x2 vs spectral", formula <= QFI_FORMULA_RTOL, f"rel {formula:.1e}"),
        Part("data processing", dpi <= 0, f"max excess {max(dpi, 0.0):.1e}"),
    ))


CHECKS = (
    check_analytic_oracle, check_steady_single_qubit, check_thermalization,
    check_secular_dichotomy, check_unified, check_heatmap_corners,
    check_remote_asymmetry, check_lamb_shift_ablation, check_coupled_enhancement,
    check_steady_coupled, check_dephasing, check_properties,
)


@dataclass
class Report:
    results: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)


def _selected(check, number: int, pattern: str | None) -> bool:
    if not pattern:
        return True
    return pattern == str(number) or pattern.lower() in check.__name__.lower()


def run_checks(pattern: str | None = None, echo=print) -> Report:
    """Run the checks matching ``pattern`` (a criterion number or a name fragment).

    The property suite goes last so it sees every transient run made before it.
    """
    report = Report()
    for number, check in enumerate(CHECKS, start=1):
        if _selected(check, number, pattern):
            result = check()
            report.results.append(result)
            if echo:
                echo(result.line())
    return report
