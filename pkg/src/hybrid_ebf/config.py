"""Run configuration: key=value files, command-line overrides and unit suffixes.

Scenario fields may be given by name (``distance``), with a ``scenario.``
prefix, or by a short alias (``d``, ``N``, ``K``).  Powers accept ``dBm``,
``W``, ``mW``, ``uW`` suffixes and times ``s``, ``ms``, ``us``, ``ns``; a bare
number is SI.  Later sources win: defaults, then the file, then flags.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Mapping

from .experiments import (
    DEFAULT_DELTA,
    DEFAULT_TRIALS,
    FULL_TRIALS,
    PRESET_NAMES,
    Mode,
    SweepSpec,
    SweepVariable,
    preset,
)
from .harvest import PwlaModel, default_pwla, load_pwla_csv
from .impair import ApiDistribution
from .sysmodel import PARAM_FIELDS, InvalidParameter, SystemParams, dbm_to_watts


class ConfigError(InvalidParameter):
    """Bad configuration; ``key`` names the offending entry."""

    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


ALIASES = {
    "N": "n_antennas",
    "K": "rice_factor",
    "d": "distance",
    "tau": "coherence_time",
    "tau_c0": "ce_slot_fixed",
    "p_c0": "ul_pilot_power_fixed",
    "p_max": "ul_pilot_power_max",
    "p_d": "dl_tx_power",
    "noise": "noise_psd",
    "f_c": "carrier_freq",
    "psi_deg": "aoa_deg",
}

POWER_FIELDS = {"dl_tx_power", "ul_pilot_power_max", "ul_pilot_power_fixed", "noise_psd"}
TIME_FIELDS = {"coherence_time", "ce_slot_fixed"}

RUN_KEYS = {
    "preset", "trials", "seed", "out", "workers", "delta", "api.distribution", "api.freeze",
    "api.independent_dl", "pwla", "modes", "sweep.variable", "sweep.values", "full_fidelity",
}

_POWER_UNITS = {"w": 1.0, "mw": 1e-3, "uw": 1e-6, "nw": 1e-9}
_TIME_UNITS = {"s": 1.0, "ms": 1e-3, "us": 1e-6, "ns": 1e-9}
_NUM = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*([a-zA-Z]*)\s*$")


def _split(key: str, text: str) -> tuple[float, str]:
    m = _NUM.match(text)
    if not m:
        raise ConfigError(key, f"expected a number, got {text!r}")
    return float(m.group(1)), m.group(2).lower()


def parse_power(key: str, text: str) -> float:
    value, unit = _split(key, text)
    if unit == "dbm":
        return dbm_to_watts(value)
    if unit == "":
        return value
    if unit not in _POWER_UNITS:
        raise ConfigError(key, f"unknown power unit {unit!r}")
    return value * _POWER_UNITS[unit]


def parse_time(key: str, text: str) -> float:
    value, unit = _split(key, text)
    if unit == "":
        return value
    if unit not in _TIME_UNITS:
        raise ConfigError(key, f"unknown time unit {unit!r}")
    return value * _TIME_UNITS[unit]


def _parse_bool(key: str, text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ConfigError(key, f"expected a boolean, got {text!r}")


def _parse_int(key: str, text: str) -> int:
    try:
        value = float(text)
    except ValueError:
        raise ConfigError(key, f"expected an integer, got {text!r}") from None
    if value != int(value):
        raise ConfigError(key, f"expected an integer, got {text!r}")
    return int(value)


def canonical_key(key: str) -> str:
    key = key.strip().lstrip("-").replace("-", "_")
    if key.startswith("scenario."):
        key = key[len("scenario."):]
    key = ALIASES.get(key, key)
    if key in ("api_distribution", "api_freeze", "api_independent_dl", "sweep_variable", "sweep_values"):
        key = key.replace("_", ".", 1)
    if key not in PARAM_FIELDS and key not in RUN_KEYS:
        raise ConfigError(key, "unknown key")
    return key


def read_config_file(path: str | Path) -> dict[str, str]:
    out: dict[str, str] = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError("config", f"cannot read {path}: {exc}") from None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}", f"expected key=value, got {raw!r}")
        k, v = line.split("=", 1)
        out[canonical_key(k)] = v.strip()
    return out


@dataclass(frozen=True)
class RunConfig:
    params: SystemParams = field(default_factory=SystemParams)
    preset: str = "sweep_d"
    trials: int = DEFAULT_TRIALS
    master_seed: int = 0
    out_dir: Path = Path("results")
    workers: int = 1
    delta: float = DEFAULT_DELTA
    distribution: ApiDistribution = ApiDistribution.UNIFORM
    freeze_api: bool = False
    independent_dl_api: bool = False
    pwla_source: str = "default"
    pwla: PwlaModel = field(default_factory=default_pwla)
    modes: tuple[Mode, ...] | None = None
    sweep_variable: SweepVariable | None = None
    sweep_values: tuple | None = None

    def sweep(self) -> SweepSpec:
        """Resolve the preset (or custom sweep) with every override applied."""
        if self.preset == "custom":
            if self.sweep_variable is None or not self.sweep_values or not self.modes:
                raise ConfigError("preset", "custom sweeps need sweep.variable, sweep.values and modes")
            spec = SweepSpec(self.sweep_variable, self.sweep_values, self.modes, trials=self.trials,
                             master_seed=self.master_seed, base=self.params)
        else:
            spec = preset(self.preset, trials=self.trials, master_seed=self.master_seed, base=self.params)
        changes = dict(delta=self.delta, pwla=self.pwla, freeze_api=self.freeze_api,
                       independent_dl_api=self.independent_dl_api)
        if spec.distribution is ApiDistribution.UNIFORM:
            changes["distribution"] = self.distribution
        if self.modes is not None:
            changes["modes"] = self.modes
        if self.sweep_values is not None:
            changes["values"] = self.sweep_values
        if self.sweep_variable is not None:
            changes["variable"] = self.sweep_variable
        return replace(spec, **changes)

    def metadata(self) -> dict[str, str]:
        meta = {f"scenario.{k}": repr(getattr(self.params, k)) for k in PARAM_FIELDS}
        spec = self.sweep()
        meta.update({
            "preset": self.preset,
            "trials": str(self.trials),
            "seed": str(self.master_seed),
            "delta": repr(self.delta),
            "api.distribution": spec.distribution.value,
            "api.freeze": str(self.freeze_api),
            "api.independent_dl": str(self.independent_dl_api),
            "pwla": self.pwla_source,
            "modes": ",".join(str(m) for m in spec.modes),
            "sweep.variable": spec.variable.value,
            "columns": "value,mode,mean,stderr,trials",
        })
        return meta


def _parse_values(key: str, text: str, variable: SweepVariable | None) -> tuple:
    items = [t.strip() for t in text.split(",") if t.strip()]
    if not items:
        raise ConfigError(key, "empty value list")
    if variable is SweepVariable.DELTA_PAIR:
        return tuple(items)
    try:
        return tuple(int(x) if variable is SweepVariable.N else float(x) for x in items)
    except ValueError:
        raise ConfigError(key, f"bad value list {text!r}") from None


def parse_config(overrides: Mapping[str, str] | None = None, config_file: str | Path | None = None) -> RunConfig:
    """Merge defaults, an optional key=value file and flag overrides, then validate."""
    merged: dict[str, str] = {}
    if config_file is not None:
        merged.update(read_config_file(config_file))
    for k, v in (overrides or {}).items():
        merged[canonical_key(k)] = str(v)

    scenario: dict[str, object] = {}
    for k, v in merged.items():
        if k not in PARAM_FIELDS:
            continue
        if k in POWER_FIELDS:
            scenario[k] = parse_power(k, v)
        elif k in TIME_FIELDS:
            scenario[k] = parse_time(k, v)
        elif k == "n_antennas":
            scenario[k] = _parse_int(k, v)
        elif k == "antenna_gains":
            try:
                scenario[k] = tuple(float(x) for x in v.split(","))
            except ValueError:
                raise ConfigError(k, f"bad gain list {v!r}") from None
        else:
            try:
                scenario[k] = float(v)
            except ValueError:
                raise ConfigError(k, f"expected a number, got {v!r}") from None
    try:
        params = SystemParams().evolve(**scenario)
    except InvalidParameter as exc:
        bad = next((k for k in scenario if k in str(exc)), "scenario")
        raise ConfigError(bad, str(exc)) from None
    if params.n_antennas * params.ce_slot_fixed > params.coherence_time:
        raise ConfigError("ce_slot_fixed", "N * tau_c0 exceeds the coherence time")

    kw: dict[str, object] = {"params": params}
    if "preset" in merged:
        name = merged["preset"]
        if name not in PRESET_NAMES and name != "custom":
            raise ConfigError("preset", f"unknown preset {name!r}")
        kw["preset"] = name
    if _parse_bool("full_fidelity", merged.get("full_fidelity", "false")):
        kw["trials"] = FULL_TRIALS
    if "trials" in merged:
        kw["trials"] = _parse_int("trials", merged["trials"])
        if kw["trials"] < 1:
            raise ConfigError("trials", "must be >= 1")
    if "seed" in merged:
        kw["master_seed"] = _parse_int("seed", merged["seed"])
        if kw["master_seed"] < 0:
            raise ConfigError("seed", "must be >= 0")
    if "workers" in merged:
        kw["workers"] = _parse_int("workers", merged["workers"])
        if kw["workers"] < 1:
            raise ConfigError("workers", "must be >= 1")
    if "out" in merged:
        kw["out_dir"] = Path(merged["out"])
    if "delta" in merged:
        try:
            kw["delta"] = float(merged["delta"])
        except ValueError:
            raise ConfigError("delta", f"expected a number, got {merged['delta']!r}") from None
        if kw["delta"] < 0:
            raise ConfigError("delta", "must be >= 0")
    if "api.distribution" in merged:
        try:
            kw["distribution"] = ApiDistribution(merged["api.distribution"].lower())
        except ValueError:
            raise ConfigError("api.distribution", "expected uniform or gaussian") from None
    if "api.freeze" in merged:
        kw["freeze_api"] = _parse_bool("api.freeze", merged["api.freeze"])
    if "api.independent_dl" in merged:
        kw["independent_dl_api"] = _parse_bool("api.independent_dl", merged["api.independent_dl"])
    if "pwla" in merged and merged["pwla"] != "default":
        try:
            kw["pwla"] = load_pwla_csv(merged["pwla"])
        except (OSError, ValueError) as exc:
            raise ConfigError("pwla", str(exc)) from None
        kw["pwla_source"] = merged["pwla"]
    if "modes" in merged:
        try:
            kw["modes"] = tuple(Mode.parse(t.strip()) for t in merged["modes"].split(",") if t.strip())
        except InvalidParameter as exc:
            raise ConfigError("modes", str(exc)) from None
    variable = None
    if "sweep.variable" in merged:
        try:
            variable = SweepVariable(merged["sweep.variable"])
        except ValueError:
            raise ConfigError("sweep.variable", f"unknown variable {merged['sweep.variable']!r}") from None
        kw["sweep_variable"] = variable
    if "sweep.values" in merged:
        if variable is None:
            name = kw.get("preset", RunConfig.preset)
            variable = preset(name).variable if name in PRESET_NAMES else None
        kw["sweep_values"] = _parse_values("sweep.values", merged["sweep.values"], variable)

    cfg = RunConfig(**kw)
    try:
        cfg.sweep()
    except ConfigError:
        raise
    except InvalidParameter as exc:
        raise ConfigError("sweep", str(exc)) from None
    return cfg
