"""Config-driven experiments, one runner per scenario kind, each writing CSV.

A config is a TOML file read as flat dotted keys::

    scenario.name = "remote"
    scenario.kind = "transient"        # transient | steady_sweep | heatmap
    system.omega1 = 1.0
    system.omega_minus = 0.01          # or system.omega2
    bath.common.beta = 1.0
    bath.common.mu_x = 0.01
    target.parameter = "local1"
    target.probe = 2

``series.<name>.<key> = value`` defines named variants of the base config;
each series is run separately and written to its own CSV. Unknown keys are
errors. See configs/README.md for the full key list.
"""
from __future__ import annotations

import csv
import dataclasses
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .analytic import steady_qfi
from .bath import BathLabel, BathSpec, SpectralDensity
from .dynamics import Spacing, TimeGrid, default_horizon
from .liouvillian import ApproximationVariant, SystemSpec, build_model
from .metrology import (
    EstimationTarget,
    QfiSeries,
    relative_error,
    steady_qfi_numeric,
    transient_qfi,
)

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib


class ConfigError(ValueError):
    pass


KINDS = ("transient", "steady_sweep", "heatmap")
VARIANT_PRESETS = {
    "partial": {"variant.secular": "partial", "variant.coefficients": "redfield"},
    "full": {"variant.secular": "full", "variant.coefficients": "redfield"},
    "unified": {"variant.secular": "partial", "variant.coefficients": "unified"},
}

_BATH_KEYS = {"beta": float, "mu_x": float, "mu_z": float, "enabled": bool}
SCHEMA: dict[str, type | tuple] = {
    "scenario.name": str,
    "scenario.kind": str,
    "scenario.workers": int,
    "system.omega1": float,
    "system.omega2": float,
    "system.omega_minus": float,
    "system.k": float,
    "system.initial_state": str,
    "system.cutoff": float,
    "variant.secular": str,
    "variant.coefficients": str,
    "variant.lamb_shift": bool,
    "variant.secular_cutoff": float,
    "variant.form": str,
    "target.parameter": str,
    "target.probe": int,
    "grid.t_start": float,
    "grid.t_end": float,
    "grid.n_samples": int,
    "grid.spacing": str,
    "grid.horizon_factor": float,
    "sweep.beta_min": float,
    "sweep.beta_max": float,
    "sweep.n": int,
    "sweep.spacing": str,
    "heatmap.beta_min": float,
    "heatmap.beta_max": float,
    "heatmap.n": int,
    "heatmap.extra": list,
    "heatmap.reference": float,
    "output.file": str,
}
for _label in BathLabel:
    for _key, _typ in _BATH_KEYS.items():
        SCHEMA[f"bath.{_label.value}.{_key}"] = _typ


def _flatten(tree, prefix=""):
    out = {}
    for key, value in tree.items():
        name = f"{prefix}{key}"
        if isinstance(value, dict):
            out.update(_flatten(value, name + "."))
        else:
            out[name] = value
    return out


def _check_key(key, value):
    if key not in SCHEMA:
        raise ConfigError(f"unknown config key {key!r}")
    typ = SCHEMA[key]
    if typ is float and isinstance(value, int) and not isinstance(value, bool):
        return float(value)
    if typ is list:
        if not isinstance(value, list):
            raise ConfigError(f"{key} must be a list")
        return [float(v) for v in value]
    if not isinstance(value, typ) or (typ is int and isinstance(value, bool)):
        raise ConfigError(f"{key} must be {typ.__name__}, got {value!r}")
    return value


@dataclass(frozen=True)
class SweepSpec:
    beta_min: float
    beta_max: float
    n: int
    spacing: Spacing = Spacing.LOG

    @property
    def values(self):
        if self.spacing is Spacing.LOG:
            return np.geomspace(self.beta_min, self.beta_max, self.n)
        return np.linspace(self.beta_min, self.beta_max, self.n)


@dataclass(frozen=True)
class HeatmapSpec:
    beta_min: float = 0.25
    beta_max: float = 8.0
    n: int = 21
    extra: tuple[float, ...] = ()
    reference: float | None = None

    @property
    def values(self):
        base = np.geomspace(self.beta_min, self.beta_max, self.n)
        return np.unique(np.concatenate([base, np.asarray(self.extra, dtype=float)]))


@dataclass(frozen=True, eq=False)
class ScenarioConfig:
    name: str
    kind: str
    system: SystemSpec
    variant: ApproximationVariant
    target: EstimationTarget
    form: str = "auto"
    t_start: float = 0.0
    t_end: float | None = None
    n_samples: int = 401
    spacing: Spacing = Spacing.LINEAR
    horizon_factor: float = 10.0
    sweep: SweepSpec | None = None
    heatmap: HeatmapSpec | None = None
    output: str = ""
    workers: int = 0
    series: str = ""
    raw: dict = field(default_factory=dict, repr=False)

    def time_grid(self) -> TimeGrid:
        t_end = self.t_end
        if t_end is None:
            model = build_model(self.system, self.variant, self.form)
            t_end = default_horizon(model, self.horizon_factor)
        return TimeGrid(self.t_start, t_end, self.n_samples, self.spacing)

    @property
    def csv_name(self) -> str:
        stem = self.output or self.name
        stem = stem[:-4] if stem.endswith(".csv") else stem
        return f"{stem}_{self.series}.csv" if self.series else f"{stem}.csv"


def parse_flat(flat: dict, *, series: str = "") -> ScenarioConfig:
    """Build a ScenarioConfig from already-validated flat keys."""
    get = flat.get
    kind = get("scenario.kind", "transient")
    if kind not in KINDS:
        raise ConfigError(f"scenario.kind must be one of {KINDS}")
    name = get("scenario.name", "scenario")

    omega1 = get("system.omega1", 1.0)
    omega2 = get("system.omega2")
    if "system.omega_minus" in flat:
        if omega2 is not None:
            raise ConfigError("give system.omega2 or system.omega_minus, not both")
        omega2 = omega1 - flat["system.omega_minus"]
    spectral = SpectralDensity(cutoff=get("system.cutoff", 20.0))

    baths = []
    for label in BathLabel:
        keys = {k.split(".")[-1]: v for k, v in flat.items()
                if k.startswith(f"bath.{label.value}.")}
        if not keys or not keys.pop("enabled", True):
            continue
        if "beta" not in keys:
            raise ConfigError(f"bath.{label.value}.beta is required")
        try:
            baths.append(BathSpec(beta=keys["beta"], mu_x=keys.get("mu_x", 0.0),
                                  mu_z=keys.get("mu_z", 0.0), spectral=spectral, label=label))
        except ValueError as exc:
            raise ConfigError(f"bath.{label.value}: {exc}") from exc
    if not baths:
        raise ConfigError("at least one bath is required")
    try:
        system = SystemSpec(omega1=omega1, omega2=omega2, k=get("system.k", 0.0),
                            baths=tuple(baths), initial_state=get("system.initial_state"))
        variant = ApproximationVariant(
            secular=get("variant.secular", "partial"),
            coefficients=get("variant.coefficients", "redfield"),
            lamb_shift=get("variant.lamb_shift", True),
            secular_cutoff=get("variant.secular_cutoff"),
        )
        default_probe = None if system.n_qubits == 1 else 1
        target = EstimationTarget(get("target.parameter", "common"),
                                  get("target.probe", default_probe))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    if system.n_qubits == 1 and target.probe is not None:
        raise ConfigError("single-qubit scenarios take no probe")
    if system.n_qubits == 2 and target.probe is None:
        raise ConfigError("two-qubit scenarios need target.probe")
    try:
        system.bath(target.parameter)
    except KeyError as exc:
        raise ConfigError(f"target bath {target.parameter.value!r} is not in the system") from exc
    if system.n_qubits == 1 and len(baths) != 1:
        raise ConfigError("a single qubit takes exactly one bath")

    sweep = None
    if kind == "steady_sweep":
        try:
            sweep = SweepSpec(flat["sweep.beta_min"], flat["sweep.beta_max"],
                              get("sweep.n", 41), Spacing(get("sweep.spacing", "log")))
        except KeyError as exc:
            raise ConfigError(f"steady_sweep needs {exc.args[0]}") from exc
        except ValueError as exc:
            raise ConfigError(f"sweep: {exc}") from exc
    heatmap = None
    if kind == "heatmap":
        heatmap = HeatmapSpec(get("heatmap.beta_min", 0.25), get("heatmap.beta_max", 8.0),
                              get("heatmap.n", 21), tuple(get("heatmap.extra", ())),
                              get("heatmap.reference"))
        for label in (BathLabel.LOCAL1, BathLabel.LOCAL2):
            try:
                system.bath(label)
            except KeyError as exc:
                raise ConfigError("heatmap needs both local baths") from exc
    form = get("variant.form", "auto")
    if form not in ("auto", "local", "global"):
        raise ConfigError("variant.form must be auto, local or global")
    try:
        spacing = Spacing(get("grid.spacing", "linear"))
        t_start, t_end = get("grid.t_start", 0.0), get("grid.t_end")
        if t_end is not None:
            TimeGrid(t_start, t_end, get("grid.n_samples", 401), spacing)
    except ValueError as exc:
        raise ConfigError(f"grid: {exc}") from exc
    return ScenarioConfig(name=name, kind=kind, system=system, variant=variant, target=target,
                          form=form, t_start=t_start, t_end=t_end,
                          n_samples=get("grid.n_samples", 401), spacing=spacing,
                          horizon_factor=get("grid.horizon_factor", 10.0),
                          sweep=sweep, heatmap=heatmap, output=get("output.file", ""),
                          workers=get("scenario.workers", 0), series=series, raw=dict(flat))


def read_flat(path) -> tuple[dict, dict[str, dict]]:
    """Return (base keys, {series name: override keys}) from a config file."""
    with open(path, "rb") as fh:
        try:
            tree = tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from exc
    flat = _flatten(tree)
    base, series = {}, {}
    for key, value in flat.items():
        if key.startswith("series."):
            parts = key.split(".", 2)
            if len(parts) < 3:
                raise ConfigError(f"malformed series key {key!r}")
            series.setdefault(parts[1], {})[parts[2]] = _check_key(parts[2], value)
        else:
            base[key] = _check_key(key, value)
    return base, series


CONFIG_DIR = Path(__file__).with_name("configs")


def bundled_configs() -> list[str]:
    return sorted(p.stem for p in CONFIG_DIR.glob("*.toml"))


def config_path(name_or_path) -> Path:
    """A file path, or the stem of a config shipped with the package."""
    path = Path(name_or_path)
    if path.is_file():
        return path
    bundled = CONFIG_DIR / f"{path.stem}.toml"
    if path.parent == Path(".") and bundled.is_file():
        return bundled
    raise ConfigError(f"no config file or bundled config named {str(name_or_path)!r}")


def load_config(path, overrides: dict | None = None) -> list[ScenarioConfig]:
    """All runs described by a config file, one per series (or just the base)."""
    base, series = read_flat(config_path(path))
    overrides = {k: _check_key(k, v) for k, v in (overrides or {}).items()}
    if not series:
        return [parse_flat({**base, **overrides})]
    return [parse_flat({**base, **extra, **overrides}, series=name)
            for name, extra in series.items()]


def cli_overrides(variant: str | None = None, no_lamb_shift: bool = False) -> dict:
    out = {}
    if variant is not None:
        if variant not in VARIANT_PRESETS:
            raise ConfigError(f"--variant must be one of {sorted(VARIANT_PRESETS)}")
        out.update(VARIANT_PRESETS[variant])
    if no_lamb_shift:
        out["variant.lamb_shift"] = False
    return out


# --------------------------------------------------------------------------
# runners


@dataclass(frozen=True, eq=False)
class SweepResult:
    axes: tuple[np.ndarray, ...]
    axis_names: tuple[str, ...]
    qfi: np.ndarray
    relative_error: np.ndarray
    diagnostics: dict = field(default_factory=dict)
    region: np.ndarray | None = None
    reference: float | None = None


def _fmt(x) -> str:
    return format(float(x), ".17g")


def write_csv(path, header, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([v if isinstance(v, str) else _fmt(v) for v in row])
    return path


def _workers(cfg: ScenarioConfig) -> int:
    return cfg.workers if cfg.workers > 0 else min(4, os.cpu_count() or 1)


def run_transient(cfg: ScenarioConfig, out_dir=None, *, full_state: bool = False) -> QfiSeries:
    series = transient_qfi(cfg.system, cfg.variant, cfg.target, cfg.time_grid(),
                           form=cfg.form, full_state=full_state)
    if out_dir is not None:
        rows = zip(series.times, series.values, series.qfi_T, series.trace_error,
                   series.min_eigenvalue)
        write_csv(Path(out_dir) / cfg.csv_name,
                  ["t", "qfi_beta", "qfi_T", "trace_err", "min_eig"], rows)
    return series


def _steady_point(cfg: ScenarioConfig, spec: SystemSpec):
    return steady_qfi_numeric(spec, cfg.variant, cfg.target, form=cfg.form)


def run_steady_sweep(cfg: ScenarioConfig, out_dir=None) -> SweepResult:
    if cfg.sweep is None:
        raise ConfigError("config has no sweep section")
    betas = cfg.sweep.values
    label = cfg.target.parameter
    specs = [cfg.system.with_beta(label, float(b)) for b in betas]
    with ThreadPoolExecutor(_workers(cfg)) as pool:
        points = list(pool.map(lambda s: _steady_point(cfg, s), specs))
    qfi = np.array([p.qfi for p in points])
    err = np.array([p.relative_error for p in points])
    result = SweepResult((betas,), (f"beta_{label.value}",), qfi, err,
                         {"min_eig": np.array([np.linalg.eigvalsh(p.state)[0] for p in points])})
    if out_dir is not None:
        rows = zip(betas, qfi, qfi * betas**4, err)
        write_csv(Path(out_dir) / cfg.csv_name,
                  ["beta", "qfi_beta", "qfi_T", "rel_error"], rows)
    return result


def heatmap_reference(cfg: ScenarioConfig) -> float:
    """Steady QFI of a lone qubit in the target bath (local baths absent)."""
    if cfg.heatmap is not None and cfg.heatmap.reference is not None:
        return cfg.heatmap.reference
    return float(steady_qfi(cfg.system.omega1, cfg.system.bath(cfg.target.parameter).beta))


def heatmap_cell(cfg: ScenarioConfig, beta_l1: float, beta_l2: float) -> float:
    spec = cfg.system.with_beta(BathLabel.LOCAL1, beta_l1).with_beta(BathLabel.LOCAL2, beta_l2)
    return _steady_point(cfg, spec).qfi


def run_heatmap(cfg: ScenarioConfig, out_dir=None) -> SweepResult:
    if cfg.heatmap is None:
        raise ConfigError("config has no heatmap section")
    axis = cfg.heatmap.values
    cells = [(i, j) for i in range(len(axis)) for j in range(len(axis))]
    with ThreadPoolExecutor(_workers(cfg)) as pool:
        values = list(pool.map(lambda ij: heatmap_cell(cfg, axis[ij[0]], axis[ij[1]]), cells))
    qfi = np.array(values).reshape(len(axis), len(axis))
    ref = heatmap_reference(cfg)
    region = np.where(qfi > ref, "I", "II")
    beta_c = cfg.system.bath(cfg.target.parameter).beta
    result = SweepResult((axis, axis), ("beta_local1", "beta_local2"), qfi,
                         relative_error(qfi, beta_c), region=region, reference=ref)
    if out_dir is not None:
        rows = ((axis[i], axis[j], qfi[i, j], region[i, j]) for i, j in cells)
        write_csv(Path(out_dir) / cfg.csv_name,
                  ["beta_local1", "beta_local2", "qfi_beta", "region"], rows)
    return result


RUNNERS = {"transient": run_transient, "steady_sweep": run_steady_sweep, "heatmap": run_heatmap}


def run(cfg: ScenarioConfig, out_dir=None):
    return RUNNERS[cfg.kind](cfg, out_dir)


def replace_system(cfg: ScenarioConfig, **changes) -> ScenarioConfig:
    return dataclasses.replace(cfg, system=dataclasses.replace(cfg.system, **changes))
