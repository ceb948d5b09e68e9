"""Downlink energy precoders and the received RF power they deliver."""
from __future__ import annotations

import enum

import numpy as np

from .channel import ChannelStats, sample
from .estimate import run_ce
from .impair import ApiDistribution, ApiModel, draw_api, theta_transform
from .sysmodel import InvalidParameter, SystemParams


class PrecoderKind(str, enum.Enum):
    HYBRID_MRT = "hybrid_mrt"  # estimate-based MRT realised through the impaired DCPS pairs
    HYBRID_MRT_NO_API = "hybrid_mrt_no_api"  # same direction, API ignored on the downlink
    PERFECT_CSI = "perfect_csi"
    ISOTROPIC = "isotropic"
    SINGLE_PS = "single_ps"  # one phase shifter per antenna: phase-only weights


# kinds whose weight vector has norm sqrt(N) and is scaled by 1/sqrt(N) in power
_EQUAL_GAIN = (PrecoderKind.ISOTROPIC, PrecoderKind.SINGLE_PS)


def _unit_conj(v: np.ndarray, what: str) -> np.ndarray:
    norm = np.linalg.norm(v, axis=-1, keepdims=True)
    if np.any(norm == 0):
        raise ValueError(f"{what} has zero norm")
    return np.conj(v) / norm


def make_precoder(
    kind: PrecoderKind | str,
    h: np.ndarray | None = None,
    h_hat: np.ndarray | None = None,
    api: ApiModel | None = None,
) -> np.ndarray:
    """Row vector(s) z with the received amplitude being z @ h.

    All array arguments may carry leading batch axes.  ``api`` is only read by
    ``HYBRID_MRT``; passing ``None`` there means ideal phase shifters.
    """
    kind = PrecoderKind(kind)
    if kind is PrecoderKind.PERFECT_CSI:
        return _unit_conj(np.asarray(h), "h")
    if kind is PrecoderKind.ISOTROPIC:
        ref = h if h is not None else h_hat
        return np.ones(np.shape(ref), dtype=complex)
    z = _unit_conj(np.asarray(h_hat), "h_hat")
    if kind is PrecoderKind.HYBRID_MRT_NO_API:
        return z
    if kind is PrecoderKind.SINGLE_PS:
        return np.exp(1j * np.angle(z))
    if api is None:
        return z
    return theta_transform(z, api.g1, api.g2, api.ph1, api.ph2)


def received_power(precoder: np.ndarray, h: np.ndarray, p_d: float, kind: PrecoderKind | str | None = None):
    """p_d |z h|^2, divided by N for the equal-gain kinds.

    The impaired MRT vector is deliberately not renormalised, so its amplitude
    loss shows up in the result.
    """
    if p_d < 0:
        raise InvalidParameter("p_d must be >= 0")
    amp = np.sum(np.asarray(precoder) * np.asarray(h), axis=-1)
    out = p_d * np.abs(amp) ** 2
    if kind is not None and PrecoderKind(kind) in _EQUAL_GAIN:
        out = out / np.shape(h)[-1]
    return out if np.ndim(out) else float(out)


def simulate_received_power(
    kinds,
    p: SystemParams,
    stats: ChannelStats,
    p_c: float,
    tau_c: float,
    trials: int,
    rng_api: np.random.Generator,
    rng_channel: np.random.Generator,
    rng_noise: np.random.Generator,
    *,
    delta: float = 0.0,
    dist: ApiDistribution | str = ApiDistribution.UNIFORM,
    delta_phi: float | None = None,
    freeze_api: bool = False,
    independent_dl_api: bool = False,
    digital: bool = False,
    rng_frozen_api: np.random.Generator | None = None,
) -> dict[PrecoderKind, np.ndarray]:
    """Per-trial received power for several precoders sharing the same draws.

    Each trial draws API, a channel and CE noise; all kinds see the same
    realisations so their differences are not blurred by sampling noise.
    ``digital`` models a fully digital array: no API and one CE slot.
    With ``freeze_api`` the single API draw comes from ``rng_frozen_api`` when
    given, so callers splitting trials into chunks can share one draw.
    """
    if trials < 1:
        raise InvalidParameter("trials must be >= 1")
    n = p.n_antennas
    if digital:
        api = ApiModel.ideal(n, trials)
    elif freeze_api:
        one = draw_api(n, delta, dist, rng_api if rng_frozen_api is None else rng_frozen_api, delta_phi=delta_phi)
        api = ApiModel(one.delta_g, one.delta_phi, one.spread_g, one.spread_phi, one.distribution,
                       *(np.broadcast_to(a, (trials, n)) for a in (one.g1, one.g2, one.ph1, one.ph2)))
    else:
        api = draw_api(n, delta, dist, rng_api, size=trials, delta_phi=delta_phi)
    h = sample(stats, rng_channel, size=trials)
    ce = run_ce(h, api, p_c, tau_c, p, rng_noise, digital=digital)
    dl_api = api
    if independent_dl_api and not digital:
        dl_api = draw_api(n, delta, dist, rng_api, size=trials, delta_phi=delta_phi)
    out = {}
    for kind in kinds:
        kind = PrecoderKind(kind)
        z = make_precoder(kind, h, ce.h_hat, dl_api)
        out[kind] = received_power(z, h, p.dl_tx_power, kind)
    return out


def mean_received_power_mc(
    kind: PrecoderKind | str,
    p: SystemParams,
    stats: ChannelStats,
    p_c: float,
    tau_c: float,
    trials: int,
    rng: np.random.Generator,
    **kwargs,
) -> tuple[float, float]:
    """Monte Carlo mean of p_r and its standard error."""
    r_api, r_ch, r_w = rng.spawn(3)
    pr = simulate_received_power([kind], p, stats, p_c, tau_c, trials, r_api, r_ch, r_w, **kwargs)[PrecoderKind(kind)]
    se = float(np.std(pr, ddof=1) / np.sqrt(trials)) if trials > 1 else float("nan")
    return float(np.mean(pr)), se


def ideal_mean_received_power(p: SystemParams, stats: ChannelStats) -> float:
    """Perfect CSI, no API: p_d (||mu_h||^2 + beta N / (K+1))."""
    return p.dl_tx_power * (stats.mean_norm_sq + stats.cov_scale * stats.n_antennas)


def isotropic_mean_received_power(p: SystemParams, stats: ChannelStats) -> float:
    """Uniform weights: p_d (|1^H mu_h|^2 / N + beta / (K+1))."""
    coherent = abs(np.sum(stats.mean)) ** 2 / stats.n_antennas
    return p.dl_tx_power * (coherent + stats.cov_scale)


def mean_received_power_approx(p: SystemParams, stats: ChannelStats, p_c, tau_c, *, digital: bool = False):
    """Closed-form mean received power under estimated CSI.

    The estimation penalty beta sigma^2 (N-1) / (beta E_c + sigma^2 (K+1)) is
    subtracted from the ideal value; it does not depend on the API.
    """
    p_c = np.asarray(p_c, dtype=float)
    tau_c = np.asarray(tau_c, dtype=float)
    if np.any(p_c < 0) or np.any(tau_c < 0):
        raise InvalidParameter("p_c and tau_c must be >= 0")
    n = stats.n_antennas
    e_c = p_c * tau_c * (1 if digital else n)
    b, s2 = stats.beta, p.noise_psd
    penalty = b * s2 * (n - 1) / (b * e_c + s2 * (stats.rice_factor + 1.0))
    out = p.dl_tx_power * (stats.mean_norm_sq + stats.cov_scale * n) - p.dl_tx_power * penalty
    return out if out.ndim else float(out)


def mean_received_power_rayleigh_approx(p: SystemParams, beta: float, p_c, tau_c):
    """Zero-mean (K = 0) specialisation: p_d [beta N - beta sigma^2 (N-1) / (beta N E + sigma^2)]."""
    n, s2 = p.n_antennas, p.noise_psd
    e = n * np.asarray(p_c, dtype=float) * np.asarray(tau_c, dtype=float)
    out = p.dl_tx_power * (beta * n - beta * s2 * (n - 1) / (beta * e + s2))
    return out if np.ndim(out) else float(out)
