"""Monte Carlo engine and the named sweeps behind the figures.

A sweep point is one value of the swept variable.  Trials are grouped in
chunks of ``CHUNK`` and every chunk draws from its own substream, keyed by
(master seed, value index, chunk index, purpose).  Chunks are concatenated in
order before any reduction, so results do not depend on the worker count.
"""
from __future__ import annotations

import enum
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from scipy import stats as sps

from .beamform import (
    PrecoderKind,
    ideal_mean_received_power,
    isotropic_mean_received_power,
    make_precoder,
    mean_received_power_approx,
    received_power,
    simulate_received_power,
)
from .channel import build_stats, sample
from .estimate import lse_stats, norm_sq_distribution, run_ce
from .harvest import PwlaModel, default_pwla, harvest, mean_harvested_power_exact
from .impair import ApiDistribution, ApiModel, draw_api
from .optimize import (
    AllocationResult,
    fixed_allocation,
    optimal_joint,
    optimal_power,
    optimal_time,
)
from .sysmodel import InvalidParameter, SystemParams, default_params

CHUNK = 1000
DEFAULT_TRIALS = 10_000
FULL_TRIALS = 100_000
DEFAULT_DELTA = 0.065

_PURPOSE = {"api": 0, "channel": 1, "noise": 2, "frozen_api": 3}


class SweepVariable(str, enum.Enum):
    N = "N"
    K = "K"
    D = "d"
    DELTA = "Delta"
    DELTA_PAIR = "DeltaG_DeltaPhi_pair"
    P_C = "p_c"
    TAU_C = "tau_c"


class Alloc(str, enum.Enum):
    FIXED = "fixed"
    POWER = "power"
    TIME = "time"
    JOINT = "joint"
    DIGITAL_FIXED = "digital_fixed"
    DIGITAL_POWER = "digital_power"
    DIGITAL_TIME = "digital_time"
    DIGITAL_JOINT = "digital_joint"
    NONE = "none"  # no CE at all (ideal CSI or isotropic reference)

    @property
    def digital(self) -> bool:
        return self.value.startswith("digital")


class Metric(str, enum.Enum):
    RECEIVED = "received"
    HARVESTED = "harvested"
    STORED = "stored"
    P_C_OPT = "p_c_opt"
    TAU_C_OPT = "tau_c_opt"


@dataclass(frozen=True)
class Mode:
    """One output column family, written ``alloc:source:metric[:precoder]``.

    ``source`` is ``closed`` (analytic prediction) or ``mc`` (simulation).
    """

    alloc: Alloc
    source: str
    metric: Metric
    precoder: PrecoderKind = PrecoderKind.HYBRID_MRT

    @classmethod
    def parse(cls, text: str) -> "Mode":
        parts = text.split(":")
        if len(parts) not in (3, 4) or parts[1] not in ("closed", "mc"):
            raise InvalidParameter(f"bad mode {text!r}; expected alloc:closed|mc:metric[:precoder]")
        try:
            kind = PrecoderKind(parts[3]) if len(parts) == 4 else PrecoderKind.HYBRID_MRT
            return cls(Alloc(parts[0]), parts[1], Metric(parts[2]), kind)
        except ValueError as exc:
            raise InvalidParameter(f"bad mode {text!r}: {exc}") from None

    def __str__(self) -> str:
        return f"{self.alloc.value}:{self.source}:{self.metric.value}:{self.precoder.value}"


@dataclass(frozen=True)
class SweepSpec:
    variable: SweepVariable
    values: tuple
    modes: tuple[Mode, ...]
    trials: int = DEFAULT_TRIALS
    master_seed: int = 0
    base: SystemParams = field(default_factory=default_params)
    delta: float = DEFAULT_DELTA
    distribution: ApiDistribution = ApiDistribution.UNIFORM
    pwla: PwlaModel = field(default_factory=default_pwla)
    freeze_api: bool = False
    independent_dl_api: bool = False

    def __post_init__(self):
        if self.trials < 1:
            raise InvalidParameter("trials must be >= 1")
        if len(self.values) == 0:
            raise InvalidParameter("sweep needs at least one value")
        object.__setattr__(self, "variable", SweepVariable(self.variable))
        object.__setattr__(self, "modes", tuple(m if isinstance(m, Mode) else Mode.parse(m) for m in self.modes))
        object.__setattr__(self, "distribution", ApiDistribution(self.distribution))


@dataclass(frozen=True)
class TrialRecord:
    """One simulated coherence block."""

    seed_index: int
    received_power: float
    harvested_power: float
    stored_energy: float
    precoder_kind: PrecoderKind
    p_c: float
    tau_c: float


@dataclass(frozen=True)
class SummaryRow:
    value: object
    mode: str
    mean: float
    stderr: float
    trials: int


# ---------------------------------------------------------------------------
# sweep points


def point_setup(spec: SweepSpec, value) -> tuple[SystemParams, float, float | None]:
    """Scenario, amplitude API constant and (optional) separate phase constant at one value."""
    p, delta, delta_phi = spec.base, spec.delta, None
    var = spec.variable
    if var is SweepVariable.N:
        p = p.evolve(n_antennas=int(value))
    elif var is SweepVariable.K:
        p = p.evolve(rice_factor=float(value))
    elif var is SweepVariable.D:
        p = p.evolve(distance=float(value))
    elif var is SweepVariable.DELTA:
        delta = float(value)
    elif var is SweepVariable.DELTA_PAIR:
        delta, delta_phi = parse_pair(value)
    elif var is SweepVariable.P_C:
        p = p.evolve(ul_pilot_power_fixed=float(value))
    elif var is SweepVariable.TAU_C:
        p = p.evolve(ce_slot_fixed=float(value))
    return p, delta, delta_phi


def parse_pair(value) -> tuple[float, float]:
    if isinstance(value, str):
        g, ph = value.split(":")
        return float(g), float(ph)
    g, ph = value
    return float(g), float(ph)


def format_value(value) -> str:
    if isinstance(value, tuple):
        return ":".join(repr(float(v)) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def allocate(alloc: Alloc, p: SystemParams, stats, m: PwlaModel) -> AllocationResult | None:
    """Pilot power and slot length used by an allocation rule (None for no CE)."""
    d = alloc.digital
    if alloc is Alloc.NONE:
        return None
    if alloc in (Alloc.FIXED, Alloc.DIGITAL_FIXED):
        return fixed_allocation(p, stats, m, digital=d)
    if alloc in (Alloc.POWER, Alloc.DIGITAL_POWER):
        return optimal_power(p, stats, m, p.ce_slot_fixed, digital=d)
    if alloc in (Alloc.TIME, Alloc.DIGITAL_TIME):
        return optimal_time(p, stats, m, p.ul_pilot_power_fixed, digital=d)
    return optimal_joint(p, stats, m, digital=d)


def closed_form(mode: Mode, p: SystemParams, stats, m: PwlaModel, alloc: AllocationResult | None) -> float:
    """Analytic prediction of a mode's metric."""
    if alloc is None:
        if mode.metric in (Metric.P_C_OPT, Metric.TAU_C_OPT):
            return 0.0
        if mode.precoder is PrecoderKind.ISOTROPIC:
            mu = isotropic_mean_received_power(p, stats)
        else:
            mu = ideal_mean_received_power(p, stats)
        if mode.metric is Metric.RECEIVED:
            return mu
        ph = float(harvest(m, mu))
        return ph if mode.metric is Metric.HARVESTED else p.coherence_time * ph
    if mode.metric is Metric.P_C_OPT:
        return alloc.p_c_opt
    if mode.metric is Metric.TAU_C_OPT:
        return alloc.tau_c_opt
    mu = mean_received_power_approx(p, stats, alloc.p_c_opt, alloc.tau_c_opt, digital=mode.alloc.digital)
    if mode.metric is Metric.RECEIVED:
        return float(mu)
    if mode.metric is Metric.HARVESTED:
        return float(harvest(m, max(mu, 0.0)))
    return alloc.predicted_stored_energy


def _streams(master_seed: int, value_index: int, chunk: int):
    return [
        np.random.Generator(np.random.PCG64(np.random.SeedSequence(master_seed, spawn_key=(value_index, chunk, tag))))
        for tag in (_PURPOSE["api"], _PURPOSE["channel"], _PURPOSE["noise"])
    ]


def _frozen_api_stream(master_seed: int, value_index: int) -> np.random.Generator:
    """Stream for the one API draw shared by every chunk of a sweep point."""
    seq = np.random.SeedSequence(master_seed, spawn_key=(value_index, 0, _PURPOSE["frozen_api"]))
    return np.random.Generator(np.random.PCG64(seq))


def _chunk_task(args):
    spec, value_index, chunk, size, mode_idx = args
    value = spec.values[value_index]
    p, delta, delta_phi = point_setup(spec, value)
    stats = build_stats(p)
    m = spec.pwla
    out = {}
    groups: dict[Alloc, list[int]] = {}
    for i in mode_idx:
        groups.setdefault(spec.modes[i].alloc, []).append(i)
    for alloc, idxs in groups.items():
        res = allocate(alloc, p, stats, m)
        kinds = sorted({spec.modes[i].precoder for i in idxs}, key=lambda k: k.value)
        r_api, r_ch, r_w = _streams(spec.master_seed, value_index, chunk)
        if res is None:
            # no CE: the precoder sees the true channel (or ignores it)
            h = sample(stats, r_ch, size=size)
            api = ApiModel.ideal(p.n_antennas, size)
            prs = {}
            for k in kinds:
                ref = k if k is PrecoderKind.ISOTROPIC else PrecoderKind.PERFECT_CSI
                prs[k] = received_power(make_precoder(ref, h, h, api), h, p.dl_tx_power, ref)
            slots, pc, tc = 0, 0.0, 0.0
        else:
            pc, tc = res.p_c_opt, res.tau_c_opt
            slots = 1 if alloc.digital else p.n_antennas
            if tc <= 0 or pc <= 0:
                # optimum skipped CE: beamform blind with uniform weights
                h = sample(stats, r_ch, size=size)
                pr_iso = p.dl_tx_power * np.abs(h.sum(axis=-1)) ** 2 / p.n_antennas
                prs = {k: pr_iso for k in kinds}
                pc, tc = 0.0, 0.0
            else:
                prs = simulate_received_power(
                    kinds, p, stats, pc, tc, size, r_api, r_ch, r_w,
                    delta=delta, dist=spec.distribution, delta_phi=delta_phi,
                    freeze_api=spec.freeze_api, independent_dl_api=spec.independent_dl_api,
                    digital=alloc.digital, rng_frozen_api=_frozen_api_stream(spec.master_seed, value_index),
                )
        for i in idxs:
            mode = spec.modes[i]
            pr = prs[mode.precoder]
            if mode.metric is Metric.RECEIVED:
                out[i] = pr
            else:
                ph = harvest(m, pr)
                if mode.metric is Metric.HARVESTED:
                    out[i] = ph
                else:
                    out[i] = (p.coherence_time - slots * tc) * ph - slots * tc * pc
    return out


def simulate_point(spec: SweepSpec, value_index: int, mode_idx=None, *, workers: int = 1) -> dict[int, np.ndarray]:
    """Per-trial samples of every Monte Carlo mode at one sweep value."""
    if mode_idx is None:
        mode_idx = [i for i, mo in enumerate(spec.modes) if mo.source == "mc"]
    n_chunks = math.ceil(spec.trials / CHUNK)
    tasks = [
        (spec, value_index, c, min(CHUNK, spec.trials - c * CHUNK), tuple(mode_idx)) for c in range(n_chunks)
    ]
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(_chunk_task, tasks))
    else:
        parts = [_chunk_task(t) for t in tasks]
    return {i: np.concatenate([part[i] for part in parts]) for i in mode_idx}


def run_trials(spec: SweepSpec, value_index: int = 0, *, workers: int = 1) -> list[SummaryRow]:
    """Mean and standard error of every mode at one sweep value."""
    value = spec.values[value_index]
    p, _, _ = point_setup(spec, value)
    stats = build_stats(p)
    samples = simulate_point(spec, value_index, workers=workers)
    rows = []
    allocs: dict[Alloc, AllocationResult | None] = {}
    for i, mode in enumerate(spec.modes):
        if mode.source == "mc":
            x = samples[i]
            se = float(np.std(x, ddof=1) / np.sqrt(x.size)) if x.size > 1 else float("nan")
            rows.append(SummaryRow(value, str(mode), float(np.mean(x)), se, int(x.size)))
        else:
            if mode.alloc not in allocs:
                allocs[mode.alloc] = allocate(mode.alloc, p, stats, spec.pwla)
            val = closed_form(mode, p, stats, spec.pwla, allocs[mode.alloc])
            rows.append(SummaryRow(value, str(mode), float(val), 0.0, 0))
    return rows


def run_sweep(spec: SweepSpec, *, workers: int = 1) -> list[SummaryRow]:
    rows = []
    for vi in range(len(spec.values)):
        rows.extend(run_trials(spec, vi, workers=workers))
    return rows


def trial_records(spec: SweepSpec, value_index: int, precoder: PrecoderKind | str = PrecoderKind.HYBRID_MRT,
                  alloc: Alloc | str = Alloc.FIXED) -> list[TrialRecord]:
    """Per-trial ledger (received, harvested, stored) for one precoder and allocation."""
    alloc, precoder = Alloc(alloc), PrecoderKind(precoder)
    modes = tuple(Mode(alloc, "mc", met, precoder) for met in (Metric.RECEIVED, Metric.HARVESTED, Metric.STORED))
    sub = replace(spec, modes=modes)
    s = simulate_point(sub, value_index)
    p, _, _ = point_setup(spec, spec.values[value_index])
    res = allocate(alloc, p, build_stats(p), spec.pwla)
    pc, tc = (0.0, 0.0) if res is None else (res.p_c_opt, res.tau_c_opt)
    return [
        TrialRecord(t, float(s[0][t]), float(s[1][t]), float(s[2][t]), precoder, pc, tc)
        for t in range(spec.trials)
    ]


# ---------------------------------------------------------------------------
# validation helpers


def ks_distance(samples, cdf) -> float:
    """Kolmogorov-Smirnov statistic against a CDF callable or a frozen scipy distribution."""
    x = np.asarray(samples, dtype=float).ravel()
    if x.size < 100:
        raise InvalidParameter("ks_distance needs at least 100 samples")
    fn = cdf.cdf if hasattr(cdf, "cdf") else cdf
    return float(sps.kstest(x, fn).statistic)


def simulate_hhat_norm_sq(p: SystemParams, delta: float, trials: int, master_seed: int = 0,
                          dist: ApiDistribution | str = ApiDistribution.UNIFORM):
    """||h_hat||^2 over ``trials`` blocks with a single frozen API draw, plus its predicted law.

    The chi-square law is conditional on the API, so the draw is held fixed.
    """
    r_api, r_ch, r_w = _streams(master_seed, 0, 0)
    api = draw_api(p, delta, dist, r_api)
    stats = build_stats(p)
    h = sample(stats, r_ch, size=trials)
    ce = run_ce(h, api, p.ul_pilot_power_fixed, p.ce_slot_fixed, p, r_w)
    norm_sq = np.sum(np.abs(ce.h_hat) ** 2, axis=-1)
    law = norm_sq_distribution(lse_stats(stats, api, p.ul_pilot_power_fixed, p.ce_slot_fixed, p))
    return norm_sq, law


def exact_mean_harvested(p: SystemParams, m: PwlaModel, mu_pr: float) -> float:
    return mean_harvested_power_exact(m, p.rice_factor, mu_pr)


# ---------------------------------------------------------------------------
# presets

_STORED_ALLOCS = ("fixed", "power", "time", "joint")


def _modes(*texts: str) -> tuple[Mode, ...]:
    return tuple(Mode.parse(t) for t in texts)


def _alloc_modes() -> tuple[Mode, ...]:
    return _modes(
        *(f"{a}:closed:stored" for a in _STORED_ALLOCS),
        "none:closed:stored:perfect_csi",
        "none:closed:stored:isotropic",
    )


PRESET_NAMES = (
    "validation_pdf_cdf",
    "approx_tightness",
    "precoder_api_gap",
    "sweep_N",
    "sweep_K",
    "sweep_d",
    "sweep_delta",
    "gaussian_vs_uniform",
    "digital_vs_hybrid",
    "optimal_pa_ta_insight",
    "normalized_comparison",
    "joint_alloc",
    "amp_phase_grid",
)

DISTANCES = (5.0, 10.0, 15.0, 20.0, 25.0)
ANTENNAS = (10, 20, 30, 40, 50)
RICE = tuple(float(k) for k in range(0, 11))
DELTAS = (0.0, 0.02, 0.04, 0.065, 0.08, 0.1, 0.12, 0.14, 0.16)


def preset(name: str, *, trials: int = DEFAULT_TRIALS, master_seed: int = 0, base: SystemParams | None = None) -> SweepSpec:
    """Named sweep matching one of the figure families."""
    base = default_params() if base is None else base
    kw = dict(trials=trials, master_seed=master_seed, base=base)
    if name == "validation_pdf_cdf":
        return SweepSpec(SweepVariable.D, (15.0,), _modes("fixed:mc:received:hybrid_mrt_no_api",
                                                           "fixed:closed:received"), **kw)
    if name == "approx_tightness":
        return SweepSpec(SweepVariable.D, DISTANCES, _modes(
            "fixed:mc:received:hybrid_mrt_no_api", "fixed:closed:received",
            "fixed:mc:stored:hybrid_mrt_no_api", "fixed:closed:stored"), **kw)
    if name == "precoder_api_gap":
        return SweepSpec(SweepVariable.D, DISTANCES, _modes(
            *(f"joint:mc:{met}:{k}" for met in ("received", "stored")
              for k in ("hybrid_mrt", "hybrid_mrt_no_api", "single_ps")),
            "joint:closed:stored"), **kw)
    if name == "sweep_N":
        return SweepSpec(SweepVariable.N, ANTENNAS, _alloc_modes(), **kw)
    if name == "sweep_K":
        return SweepSpec(SweepVariable.K, RICE, _alloc_modes(), **kw)
    if name == "sweep_d":
        return SweepSpec(SweepVariable.D, DISTANCES, _alloc_modes(), **kw)
    if name == "sweep_delta":
        return SweepSpec(SweepVariable.DELTA, DELTAS, _modes(
            "joint:closed:stored", "joint:mc:stored:hybrid_mrt", "joint:mc:stored:hybrid_mrt_no_api"), **kw)
    if name == "gaussian_vs_uniform":
        return SweepSpec(SweepVariable.DELTA, DELTAS, _modes("joint:mc:stored:hybrid_mrt"),
                         distribution=ApiDistribution.GAUSSIAN, **kw)
    if name == "digital_vs_hybrid":
        return SweepSpec(SweepVariable.D, DISTANCES, _modes(
            "joint:closed:stored", "digital_joint:closed:stored",
            "joint:mc:stored:hybrid_mrt", "digital_joint:mc:stored:hybrid_mrt_no_api"), **kw)
    if name == "optimal_pa_ta_insight":
        return SweepSpec(SweepVariable.D, DISTANCES, _modes(
            "power:closed:p_c_opt", "time:closed:tau_c_opt", "joint:closed:tau_c_opt",
            "power:closed:stored", "time:closed:stored", "joint:closed:stored"), **kw)
    if name == "normalized_comparison":
        return SweepSpec(SweepVariable.D, DISTANCES, _alloc_modes(), **kw)
    if name == "joint_alloc":
        return SweepSpec(SweepVariable.D, (base.distance,), _modes(
            "joint:closed:p_c_opt", "joint:closed:tau_c_opt", "joint:closed:stored"), **kw)
    if name == "amp_phase_grid":
        grid = tuple(f"{g}:{ph}" for g in (0.0, 0.04, 0.08, 0.12, 0.16) for ph in (0.0, 0.04, 0.08, 0.12, 0.16))
        return SweepSpec(SweepVariable.DELTA_PAIR, grid, _modes("joint:mc:stored:hybrid_mrt"), **kw)
    raise KeyError(f"unknown preset {name!r}; known: {', '.join(PRESET_NAMES)}")


# ---------------------------------------------------------------------------
# output

CSV_COLUMNS = ("value", "mode", "mean", "stderr", "trials")


def format_rows(rows: list[SummaryRow]) -> str:
    lines = [",".join(CSV_COLUMNS)]
    for r in rows:
        lines.append(f"{format_value(r.value)},{r.mode},{r.mean!r},{r.stderr!r},{r.trials}")
    return "\n".join(lines) + "\n"


def write_csv(rows: list[SummaryRow], path: str | Path) -> None:
    Path(path).write_text(format_rows(rows))


def write_meta(meta: dict, path: str | Path) -> None:
    Path(path).write_text("".join(f"{k}={meta[k]}\n" for k in sorted(meta)))
