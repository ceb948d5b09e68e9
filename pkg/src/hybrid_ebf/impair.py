"""Analog phase-shifter impairments (API) of the DCPS pairs.

Each antenna drives two digitally controlled phase shifters whose outputs are
combined.  Their amplitude gains ``g`` and phase offsets ``ph`` deviate from
(1, 0); the deviations are drawn once per coherence block.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .sysmodel import InvalidParameter, SystemParams

SQRT3 = np.sqrt(3.0)


class ApiDistribution(str, enum.Enum):
    UNIFORM = "uniform"
    GAUSSIAN = "gaussian"


@dataclass(frozen=True)
class ApiModel:
    """One draw of per-antenna DCPS errors.

    ``g1, g2, ph1, ph2`` have shape ``(..., N)``; a leading batch axis holds
    independent blocks.  The four error constants are kept apart so that
    amplitude-only and phase-only sweeps can be expressed.
    """

    delta_g: float
    delta_phi: float
    spread_g: float
    spread_phi: float
    distribution: ApiDistribution
    g1: np.ndarray
    g2: np.ndarray
    ph1: np.ndarray
    ph2: np.ndarray

    @property
    def delta(self) -> float:
        return self.delta_g

    @property
    def n_antennas(self) -> int:
        return self.g1.shape[-1]

    @property
    def u1(self) -> np.ndarray:
        return self.g1 * np.exp(1j * self.ph1)

    @property
    def u2(self) -> np.ndarray:
        return self.g2 * np.exp(1j * self.ph2)

    @classmethod
    def ideal(cls, n_antennas: int, size: int | None = None) -> "ApiModel":
        shape = (n_antennas,) if size is None else (size, n_antennas)
        ones, zeros = np.ones(shape), np.zeros(shape)
        return cls(0.0, 0.0, 0.0, 0.0, ApiDistribution.UNIFORM, ones, ones.copy(), zeros, zeros.copy())

    def __getitem__(self, idx) -> "ApiModel":
        """Select blocks along the leading batch axis."""
        return ApiModel(
            self.delta_g, self.delta_phi, self.spread_g, self.spread_phi, self.distribution,
            self.g1[idx], self.g2[idx], self.ph1[idx], self.ph2[idx],
        )


def _draw_psi(rng, spread, dist, shape):
    if dist is ApiDistribution.UNIFORM:
        return rng.uniform(-spread / 2.0, spread / 2.0, size=shape)
    # 3 sigma = spread / 2
    return rng.normal(0.0, spread / 6.0, size=shape)


def draw_api(
    p: SystemParams | int,
    delta: float,
    dist: ApiDistribution | str = ApiDistribution.UNIFORM,
    rng: np.random.Generator | None = None,
    size: int | None = None,
    *,
    delta_phi: float | None = None,
    spread_g: float | None = None,
    spread_phi: float | None = None,
) -> ApiModel:
    """Draw g = 1 - D_g (1 + Psi_g) and ph = D_phi (1 + Psi_phi) per DCPS.

    With only ``delta`` given, all four constants equal ``delta``.  Passing
    ``delta_phi`` separates amplitude and phase severities; the random spreads
    then follow their own delta unless set explicitly.
    """
    dist = ApiDistribution(dist)
    delta_g = float(delta)
    delta_phi = delta_g if delta_phi is None else float(delta_phi)
    spread_g = delta_g if spread_g is None else float(spread_g)
    spread_phi = delta_phi if spread_phi is None else float(spread_phi)
    if min(delta_g, delta_phi, spread_g, spread_phi) < 0:
        raise InvalidParameter("API constants must be >= 0")
    n = p if isinstance(p, int) else p.n_antennas
    if rng is None:
        rng = np.random.default_rng()
    shape = (n,) if size is None else (size, n)
    g1 = 1.0 - delta_g * (1.0 + _draw_psi(rng, spread_g, dist, shape))
    g2 = 1.0 - delta_g * (1.0 + _draw_psi(rng, spread_g, dist, shape))
    ph1 = delta_phi * (1.0 + _draw_psi(rng, spread_phi, dist, shape))
    ph2 = delta_phi * (1.0 + _draw_psi(rng, spread_phi, dist, shape))
    return ApiModel(delta_g, delta_phi, spread_g, spread_phi, dist, g1, g2, ph1, ph2)


def theta_transform(a, g1, g2, ph1, ph2):
    """Weight actually realised by a DCPS pair asked to produce ``a`` (|a| <= 2)."""
    a = np.asarray(a, dtype=complex)
    mag = np.abs(a)
    if np.any(mag > 2.0 + 1e-12):
        raise ValueError("theta_transform requires |a| <= 2")
    half = np.minimum(mag / 2.0, 1.0)
    u1 = np.asarray(g1) * np.exp(1j * np.asarray(ph1))
    u2 = np.asarray(g2) * np.exp(1j * np.asarray(ph2))
    out = np.exp(1j * np.angle(a)) * (half * (u1 + u2) + 1j * np.sqrt(1.0 - half**2) * (u1 - u2))
    return out if out.ndim else complex(out)


def estimator_entries(api: ApiModel) -> tuple[np.ndarray, np.ndarray]:
    """Diagonal (active antenna) and off-diagonal (idle antenna) entries of F_A, per row."""
    u1, u2 = api.u1, api.u2
    diag = (u1 * (1.0 + 1j * SQRT3) + u2 * (1.0 - 1j * SQRT3)) / 2.0
    off = 1j * (u1 - u2)
    return diag, off


def analog_estimator_matrix(api: ApiModel) -> np.ndarray:
    """F_A with shape (..., N, N); row i is antenna i, column k the k-th CE sub-phase."""
    diag, off = estimator_entries(api)
    n = api.n_antennas
    F = np.repeat(off[..., :, None], n, axis=-1)
    idx = np.arange(n)
    F[..., idx, idx] = diag
    return F


def apply_estimator_transpose(api: ApiModel, x: np.ndarray) -> np.ndarray:
    """F_A^T x in O(N), broadcasting over leading axes of ``api`` and ``x``."""
    diag, off = estimator_entries(api)
    return (diag - off) * x + np.sum(off * x, axis=-1, keepdims=True)


def cfa_diagonal(api: ApiModel) -> np.ndarray:
    """Diagonal of C_FA in closed form.

    Entry i is the energy that sub-phase i collects over all antennas, i.e. the
    i-th diagonal entry of F_A^T F_A^*: the active antenna contributes
    |F_ii|^2 and each idle antenna k its leakage |F_ki|^2.
    """
    dphi = api.ph1 - api.ph2
    g1, g2 = api.g1, api.g2
    active = g1**2 + g2**2 - g1 * g2 * (SQRT3 * np.sin(dphi) + np.cos(dphi))
    idle = g1**2 + g2**2 - 2.0 * g1 * g2 * np.cos(dphi)
    return active + np.sum(idle, axis=-1, keepdims=True) - idle


def sigma2_fa(api: ApiModel):
    """tr(C_FA) / N."""
    out = np.mean(cfa_diagonal(api), axis=-1)
    return out if np.ndim(out) else float(out)
