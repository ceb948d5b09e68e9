"""Uplink least-squares channel estimation through the impaired analog network."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats as sps

from .channel import ChannelStats, complex_normal
from .impair import ApiModel, analog_estimator_matrix, apply_estimator_transpose, cfa_diagonal, sigma2_fa
from .sysmodel import InvalidParameter, NumericError, ScheduleInfeasible, SystemParams


def ce_energy(p_c: float, tau_c: float, n_slots: int) -> float:
    """Pilot energy E_c = p_c * n_slots * tau_c (n_slots = N for antenna switching)."""
    return p_c * n_slots * tau_c


def check_schedule(p: SystemParams, tau_c: float, n_slots: int | None = None) -> None:
    n_slots = p.n_antennas if n_slots is None else n_slots
    if tau_c < 0:
        raise InvalidParameter("tau_c must be >= 0")
    if n_slots * tau_c > p.coherence_time * (1 + 1e-12):
        raise ScheduleInfeasible(
            f"{n_slots} CE slots of {tau_c:g} s exceed the coherence time {p.coherence_time:g} s"
        )


@dataclass(frozen=True)
class LseResult:
    h_eff: np.ndarray  # F_A^T h
    h_hat: np.ndarray
    ce_energy: float
    noise_var_scale: float  # sigma_w^2 / E_c


def run_ce(
    h: np.ndarray,
    api: ApiModel,
    p_c: float,
    tau_c: float,
    p: SystemParams,
    rng: np.random.Generator,
    *,
    digital: bool = False,
) -> LseResult:
    """Pilot phase followed by matched filtering.

    The unit-energy pilot collapses the continuous-time integral to one
    complex Gaussian vector per block: h_hat = F_A^T (h + w / sqrt(E_c)),
    w ~ CN(0, sigma_w^2 I).  ``digital=True`` models N RF chains: all antennas
    listen for one slot, so E_c = p_c * tau_c and F_A is not applied.
    """
    if p_c <= 0:
        raise InvalidParameter("pilot power must be > 0")
    if tau_c <= 0:
        raise InvalidParameter("tau_c must be > 0")
    n_slots = 1 if digital else p.n_antennas
    check_schedule(p, tau_c, n_slots)
    e_c = ce_energy(p_c, tau_c, n_slots)
    w = np.sqrt(p.noise_psd) * complex_normal(rng, h.shape)
    if digital:
        h_eff = np.array(h, dtype=complex)
        h_hat = h_eff + w / np.sqrt(e_c)
    else:
        h_eff = apply_estimator_transpose(api, h)
        h_hat = h_eff + apply_estimator_transpose(api, w) / np.sqrt(e_c)
    return LseResult(h_eff=h_eff, h_hat=h_hat, ce_energy=e_c, noise_var_scale=p.noise_psd / e_c)


@dataclass(frozen=True)
class LseStats:
    cov_hhat: np.ndarray
    sigma2_hhat: float
    mean_hhat: np.ndarray
    sigma2_fa: float
    prior_var: float  # beta / (K + 1)
    noise_var: float  # sigma_w^2 / E_c
    mu_h_norm_sq: float

    @property
    def n_antennas(self) -> int:
        return self.mean_hhat.shape[0]


def lse_stats(stats: ChannelStats, api: ApiModel, p_c: float, tau_c: float, p: SystemParams) -> LseStats:
    e_c = ce_energy(p_c, tau_c, p.n_antennas)
    if e_c <= 0:
        raise InvalidParameter("E_c must be > 0")
    F = analog_estimator_matrix(api)
    noise_var = p.noise_psd / e_c
    cov = stats.cov_scale * F.T @ F.conj() + noise_var * np.diag(cfa_diagonal(api))
    s2fa = sigma2_fa(api)
    return LseStats(
        cov_hhat=cov,
        sigma2_hhat=(stats.cov_scale + noise_var) * s2fa,
        mean_hhat=F.T @ stats.mean,
        sigma2_fa=s2fa,
        prior_var=stats.cov_scale,
        noise_var=noise_var,
        mu_h_norm_sq=stats.mean_norm_sq,
    )


def expected_hhat_norm_sq(ls: LseStats, approx: bool = False) -> float:
    """E{||h_hat||^2}; ``approx`` replaces ||F^T mu||^2 by ||mu||^2 sigma2_FA."""
    n = ls.n_antennas
    if approx:
        return (n * (ls.prior_var + ls.noise_var) + ls.mu_h_norm_sq) * ls.sigma2_fa
    return n * ls.sigma2_hhat + float(np.vdot(ls.mean_hhat, ls.mean_hhat).real)


@dataclass(frozen=True)
class NormSqDistribution:
    """Law of (2 / sigma2_hhat) ||h_hat||^2: non-central chi-square.

    ``scale`` converts back: ||h_hat||^2 = scale * X.
    """

    dof: int
    nc: float
    scale: float

    @property
    def _dist(self):
        if self.nc == 0:
            return sps.chi2(self.dof)
        return sps.ncx2(self.dof, self.nc)

    def pdf(self, x):
        return self._dist.pdf(x)

    def cdf(self, x):
        return self._dist.cdf(x)

    def sample(self, rng: np.random.Generator, size=None):
        return self._dist.rvs(size=size, random_state=rng)

    @property
    def mean(self) -> float:
        return self.dof + self.nc

    def norm_sq_cdf(self, y):
        """CDF of the raw ||h_hat||^2."""
        return self.cdf(np.asarray(y) / self.scale)


def norm_sq_distribution(ls: LseStats) -> NormSqDistribution:
    if ls.sigma2_hhat <= 0:
        raise InvalidParameter("sigma2_hhat must be > 0")
    nc = 2.0 * float(np.vdot(ls.mean_hhat, ls.mean_hhat).real) / ls.sigma2_hhat
    return NormSqDistribution(dof=2 * ls.n_antennas, nc=nc, scale=ls.sigma2_hhat / 2.0)


def posterior_var_scale(beta: float, rice_factor: float, ce_energy: float, noise_psd: float) -> float:
    """beta sigma^2 / (beta E_c + sigma^2 (K+1)): approximate var of each entry of h | h_hat."""
    return beta * noise_psd / (beta * ce_energy + noise_psd * (rice_factor + 1.0))


def _gain_matrix(stats: ChannelStats, api: ApiModel, ce_energy: float, noise_psd: float) -> np.ndarray:
    F = analog_estimator_matrix(api)
    b = stats.cov_scale
    inner = b * F.T @ F.conj() + (noise_psd / ce_energy) * np.diag(cfa_diagonal(api))
    try:
        # C~ = b F^* inner^{-1}, via a solve on the transposed system
        return np.linalg.solve(inner.T, (b * F.conj()).T).T
    except np.linalg.LinAlgError as exc:
        raise NumericError("conditional gain matrix is singular") from exc


def conditional_stats(
    h_hat: np.ndarray,
    stats: ChannelStats,
    api: ApiModel,
    ce_energy: float,
    noise_psd: float,
    *,
    exact_cov: bool = False,
):
    """Mean and covariance of h given the LS estimate.

    Returns ``(mu, scale)`` with cov ~= scale * I, or ``(mu, C)`` with the full
    covariance matrix when ``exact_cov`` is set.
    """
    if ce_energy <= 0:
        raise InvalidParameter("E_c must be > 0")
    gain = _gain_matrix(stats, api, ce_energy, noise_psd)
    F = analog_estimator_matrix(api)
    n = stats.n_antennas
    shrink = np.eye(n) - gain @ F.T
    mu = shrink @ stats.mean + gain @ h_hat
    if exact_cov:
        return mu, shrink * stats.cov_scale
    return mu, posterior_var_scale(stats.beta, stats.rice_factor, ce_energy, noise_psd)


def upsilon_conditional(h_hat: np.ndarray, stats: ChannelStats, api: ApiModel, ce_energy: float, noise_psd: float):
    """Mean and variance of Upsilon = h_hat^H h / ||h_hat|| given h_hat."""
    norm = np.linalg.norm(h_hat)
    if norm == 0:
        raise ValueError("h_hat has zero norm")
    mu_h, var = conditional_stats(h_hat, stats, api, ce_energy, noise_psd)
    return complex(np.vdot(h_hat, mu_h) / norm), var
