"""Pilot power and training-time allocation that maximise the stored energy.

The objective is the closed-form stored energy: harvest over the RFET part
of the block, minus the pilot energy.  Each PWLA piece gives a concave
problem with a closed-form stationary point.  The per-piece candidates are
scanned in order and the first one whose predicted received power lands on
its own piece is taken.  The PWLA curve is discontinuous and saturates, so
this rule alone can miss the best point.  Every solver therefore also
scores the box corners and the points where the received power crosses a
threshold, and returns the overall best; ``fallback`` records when that
safeguard changed the answer.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .beamform import mean_received_power_approx
from .channel import ChannelStats
from .harvest import PwlaModel, harvest
from .sysmodel import InvalidParameter, ScheduleInfeasible, SystemParams

_NUDGE = 1e-9


class AllocationMode(str, enum.Enum):
    POWER_ONLY = "power"
    TIME_ONLY = "time"
    JOINT = "joint"
    DIGITAL_POWER_ONLY = "digital_power"
    DIGITAL_TIME_ONLY = "digital_time"
    DIGITAL_JOINT = "digital_joint"
    FIXED = "fixed"
    GRID = "grid"

    @property
    def digital(self) -> bool:
        return self.value.startswith("digital")


@dataclass(frozen=True)
class AllocationResult:
    """Optimiser output.

    ``segment_index`` is the 1-based PWLA piece holding the predicted received
    power at the optimum (0 below sensitivity, L+1 in saturation).
    ``admissible`` counts the pieces whose own candidate was self-consistent.
    """

    p_c_opt: float
    tau_c_opt: float
    segment_index: int
    predicted_stored_energy: float
    mode: AllocationMode
    fallback: bool = False
    admissible: int = 0


def _slots(p: SystemParams, digital: bool) -> int:
    return 1 if digital else p.n_antennas


def _tau_max(p: SystemParams, digital: bool) -> float:
    return p.coherence_time / _slots(p, digital)


def stored_energy_objective(
    p: SystemParams, stats: ChannelStats, m: PwlaModel, p_c, tau_c, *, digital: bool = False
):
    """(tau - n tau_c) L(mu_pr) - n tau_c p_c with n CE slots (N hybrid, 1 digital)."""
    n = _slots(p, digital)
    p_c = np.asarray(p_c, dtype=float)
    tau_c = np.asarray(tau_c, dtype=float)
    if np.any(n * tau_c > p.coherence_time * (1 + 1e-12)):
        raise ScheduleInfeasible("n * tau_c exceeds the coherence time")
    mu = mean_received_power_approx(p, stats, p_c, tau_c, digital=digital)
    rfet = np.maximum(p.coherence_time - n * tau_c, 0.0)
    out = rfet * harvest(m, np.maximum(mu, 0.0)) - n * tau_c * p_c
    return out if np.ndim(out) else float(out)


def segment_of(m: PwlaModel, p_r: float) -> int:
    """1-based PWLA piece index; 0 below sensitivity, L+1 above the fitted range."""
    return int(m.segment_index(p_r)) + 1


def _s_over_beta(p: SystemParams, stats: ChannelStats) -> float:
    return p.noise_psd * (stats.rice_factor + 1.0) / stats.beta


def power_candidates(p: SystemParams, stats: ChannelStats, m: PwlaModel, tau_c: float, *, digital: bool = False):
    """Unconstrained stationary pilot powers, one per PWLA piece."""
    n = _slots(p, digital)
    a = np.asarray(m.slopes)
    rfet = p.coherence_time - n * tau_c
    root = np.sqrt(a * p.dl_tx_power * rfet * p.noise_psd * (p.n_antennas - 1))
    return (root - _s_over_beta(p, stats)) / (n * tau_c)


def time_candidates(p: SystemParams, stats: ChannelStats, m: PwlaModel, p_c: float, *, digital: bool = False):
    """Unconstrained stationary CE slot lengths, one per PWLA piece."""
    n = _slots(p, digital)
    a, b = np.asarray(m.slopes), np.asarray(m.intercepts)
    sb = _s_over_beta(p, stats)
    ideal = stats.mean_norm_sq + stats.cov_scale * p.n_antennas
    denom = ideal + (b + p_c) / (a * p.dl_tx_power)
    with np.errstate(invalid="ignore", divide="ignore"):
        root = np.sqrt(p.noise_psd * (p.n_antennas - 1) * (p_c * p.coherence_time + sb) / denom)
    return (root - sb) / (n * p_c)


def _threshold_energies(p: SystemParams, stats: ChannelStats, m: PwlaModel) -> np.ndarray:
    """Pilot energies E_c at which the predicted received power meets each threshold.

    The received-power law depends on E_c alone, so hybrid and digital share these.
    """
    n = p.n_antennas
    ideal = stats.mean_norm_sq + stats.cov_scale * n
    t = np.asarray(m.thresholds)
    gap = ideal - t / p.dl_tx_power
    out = []
    for g in gap[gap > 0]:
        e = (stats.beta * p.noise_psd * (n - 1) / g - p.noise_psd * (stats.rice_factor + 1.0)) / stats.beta
        if e > 0:
            out.extend([e * (1 - _NUDGE), e, e * (1 + _NUDGE)])
    return np.asarray(out)


def _pick(p, stats, m, mode, pcs, tcs, algo_idx, admissible, digital):
    """Score all candidates, return the best; flag when it differs from the rule's pick."""
    pcs, tcs = np.asarray(pcs, float), np.asarray(tcs, float)
    vals = stored_energy_objective(p, stats, m, pcs, tcs, digital=digital)
    best = int(np.argmax(vals))
    fallback = algo_idx is None or vals[best] > vals[algo_idx] * (1 + 1e-12) + 1e-30
    if not fallback:
        best = algo_idx
    mu = mean_received_power_approx(p, stats, pcs[best], tcs[best], digital=digital)
    return AllocationResult(
        p_c_opt=float(pcs[best]),
        tau_c_opt=float(tcs[best]),
        segment_index=segment_of(m, max(mu, 0.0)),
        predicted_stored_energy=float(vals[best]),
        mode=mode,
        fallback=bool(fallback),
        admissible=admissible,
    )


def _first_admissible(p, stats, m, pcs, tcs, digital):
    """Index of the first piece whose candidate lands on that piece, and how many do."""
    mu = mean_received_power_approx(p, stats, pcs, tcs, digital=digital)
    t = m.thresholds
    hits = [i for i in range(m.n_segments) if t[i] <= mu[i] <= t[i + 1]]
    return (hits[0] if hits else None), len(hits)


def optimal_power(
    p: SystemParams, stats: ChannelStats, m: PwlaModel, tau_c: float, *, digital: bool = False
) -> AllocationResult:
    """Best pilot power for a fixed CE slot length."""
    n = _slots(p, digital)
    if not 0 < n * tau_c < p.coherence_time:
        raise InvalidParameter("need 0 < n * tau_c < tau")
    p_max = p.ul_pilot_power_max
    cand = np.clip(power_candidates(p, stats, m, tau_c, digital=digital), 0.0, p_max)
    algo, count = _first_admissible(p, stats, m, cand, np.full_like(cand, tau_c), digital)
    extra = [0.0, p_max] + [e / (n * tau_c) for e in _threshold_energies(p, stats, m) if e / (n * tau_c) <= p_max]
    pcs = np.concatenate([cand, extra])
    mode = AllocationMode.DIGITAL_POWER_ONLY if digital else AllocationMode.POWER_ONLY
    return _pick(p, stats, m, mode, pcs, np.full_like(pcs, tau_c), algo, count, digital)


def optimal_time(
    p: SystemParams, stats: ChannelStats, m: PwlaModel, p_c: float, *, digital: bool = False
) -> AllocationResult:
    """Best CE slot length for a fixed pilot power."""
    if p_c <= 0:
        raise InvalidParameter("p_c must be > 0")
    n = _slots(p, digital)
    t_max = _tau_max(p, digital)
    cand = np.clip(time_candidates(p, stats, m, p_c, digital=digital), 0.0, t_max)
    cand = np.nan_to_num(cand, nan=0.0)
    algo, count = _first_admissible(p, stats, m, np.full_like(cand, p_c), cand, digital)
    extra = [0.0, t_max] + [e / (n * p_c) for e in _threshold_energies(p, stats, m) if e / (n * p_c) <= t_max]
    tcs = np.concatenate([cand, extra])
    mode = AllocationMode.DIGITAL_TIME_ONLY if digital else AllocationMode.TIME_ONLY
    return _pick(p, stats, m, mode, np.full_like(tcs, p_c), tcs, algo, count, digital)


def optimal_joint(p: SystemParams, stats: ChannelStats, m: PwlaModel, *, digital: bool = False) -> AllocationResult:
    """Joint optimum: pilot power at its cap, slot length from the time rule.

    For a fixed pilot energy the received power is unchanged while a higher
    power frees RFET time, so the cap is always optimal.
    """
    if p.ul_pilot_power_max <= 0:
        raise InvalidParameter("ul_pilot_power_max must be > 0")
    res = optimal_time(p, stats, m, p.ul_pilot_power_max, digital=digital)
    mode = AllocationMode.DIGITAL_JOINT if digital else AllocationMode.JOINT
    return AllocationResult(res.p_c_opt, res.tau_c_opt, res.segment_index, res.predicted_stored_energy, mode,
                            res.fallback, res.admissible)


def optimal_digital(
    p: SystemParams, stats: ChannelStats, m: PwlaModel, mode: AllocationMode | str = AllocationMode.DIGITAL_JOINT,
    *, p_c: float | None = None, tau_c: float | None = None,
) -> AllocationResult:
    """Fully digital array: one CE slot, E_c = p_c tau_c, RFET time tau - tau_c."""
    mode = AllocationMode(mode)
    if mode in (AllocationMode.DIGITAL_POWER_ONLY, AllocationMode.POWER_ONLY):
        return optimal_power(p, stats, m, p.ce_slot_fixed if tau_c is None else tau_c, digital=True)
    if mode in (AllocationMode.DIGITAL_TIME_ONLY, AllocationMode.TIME_ONLY):
        return optimal_time(p, stats, m, p.ul_pilot_power_fixed if p_c is None else p_c, digital=True)
    return optimal_joint(p, stats, m, digital=True)


def fixed_allocation(p: SystemParams, stats: ChannelStats, m: PwlaModel, *, digital: bool = False) -> AllocationResult:
    """Reference point (p_c0, tau_c0) scored with the same objective."""
    pc, tc = p.ul_pilot_power_fixed, p.ce_slot_fixed
    val = stored_energy_objective(p, stats, m, pc, tc, digital=digital)
    mu = mean_received_power_approx(p, stats, pc, tc, digital=digital)
    return AllocationResult(pc, tc, segment_of(m, max(mu, 0.0)), float(val), AllocationMode.FIXED)


def _axis(hi: float, count: int, spacing: str) -> np.ndarray:
    if spacing == "linear":
        return np.linspace(0.0, hi, count)
    if spacing == "log":
        return np.concatenate([[0.0], np.geomspace(hi * 1e-12, hi, count - 1)])
    raise InvalidParameter(f"unknown grid spacing {spacing!r}")


def grid_oracle(
    p: SystemParams, stats: ChannelStats, m: PwlaModel, grid_p: int = 200, grid_t: int = 200, *,
    p_c: float | None = None, tau_c: float | None = None, digital: bool = False, spacing: str = "log",
) -> AllocationResult:
    """Exhaustive search of the objective over the feasible box.

    Fixing ``p_c`` or ``tau_c`` collapses that axis.  Log spacing reaches the
    very short optimal slots that a linear grid steps over.
    """
    if grid_p < 2 or grid_t < 2:
        raise InvalidParameter("grid sizes must be >= 2")
    ps = np.array([p_c]) if p_c is not None else _axis(p.ul_pilot_power_max, grid_p, spacing)
    ts = np.array([tau_c]) if tau_c is not None else _axis(_tau_max(p, digital), grid_t, spacing)
    P, T = np.meshgrid(ps, ts, indexing="ij")
    vals = stored_energy_objective(p, stats, m, P, T, digital=digital)
    i, j = np.unravel_index(int(np.argmax(vals)), vals.shape)
    mu = mean_received_power_approx(p, stats, P[i, j], T[i, j], digital=digital)
    return AllocationResult(float(P[i, j]), float(T[i, j]), segment_of(m, max(mu, 0.0)), float(vals[i, j]),
                            AllocationMode.GRID)


def second_difference(f, x: float, h: float) -> float:
    """Central second difference (f(x+h) - 2 f(x) + f(x-h)) / h^2."""
    return (f(x + h) - 2.0 * f(x) + f(x - h)) / h**2


def power_curvature(p: SystemParams, stats: ChannelStats, slope: float, p_c: float, tau_c: float,
                    *, digital: bool = False) -> float:
    """Analytic second derivative in p_c of the objective on a piece with the given slope."""
    n = _slots(p, digital)
    k1 = stats.rice_factor + 1.0
    d = stats.beta * n * p_c * tau_c + p.noise_psd * k1
    return float(-2.0 * slope * p.dl_tx_power * (p.coherence_time - n * tau_c) * p.noise_psd * (p.n_antennas - 1)
                 * (n * tau_c) ** 2 * stats.beta**3 / d**3)
