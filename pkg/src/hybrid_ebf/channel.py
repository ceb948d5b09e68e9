"""Rician MISO channel statistics and sampling."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .sysmodel import InvalidParameter, SystemParams, large_scale_beta


@dataclass(frozen=True)
class ChannelStats:
    mean: np.ndarray  # LoS mean mu_h, shape (N,)
    cov_scale: float  # C_h = cov_scale * I_N
    beta: float
    rice_factor: float

    @property
    def n_antennas(self) -> int:
        return self.mean.shape[0]

    @property
    def mean_norm_sq(self) -> float:
        return float(np.vdot(self.mean, self.mean).real)


def complex_normal(rng: np.random.Generator, shape) -> np.ndarray:
    """Standard circularly-symmetric complex Gaussian (unit total variance)."""
    z = rng.standard_normal(tuple(np.atleast_1d(shape)) + (2,))
    return (z[..., 0] + 1j * z[..., 1]) * np.sqrt(0.5)


def build_stats(p: SystemParams) -> ChannelStats:
    K = p.rice_factor
    if K < 0:
        raise InvalidParameter("Rice factor must be >= 0")
    beta = large_scale_beta(p)
    # spacing in wavelengths: the linear LoS phase is 2*pi*k*(delta/lambda)*sin(psi)
    spacing = p.antenna_spacing / p.wavelength
    k = np.arange(p.n_antennas)
    theta = 2.0 * np.pi * k * spacing * np.sin(np.deg2rad(p.aoa_deg))
    gains = np.asarray(p.antenna_gains, dtype=float)
    mean = np.sqrt(beta * K / (K + 1.0)) * np.sqrt(gains) * np.exp(1j * theta)
    return ChannelStats(mean=mean, cov_scale=beta / (K + 1.0), beta=beta, rice_factor=float(K))


def sample(stats: ChannelStats, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
    """Draw h ~ CN(mean, cov_scale * I). Returns shape (N,) or (size, N)."""
    shape = (stats.n_antennas,) if size is None else (size, stats.n_antennas)
    return stats.mean + np.sqrt(stats.cov_scale) * complex_normal(rng, shape)
