"""Nonlinear RF-to-DC harvesting and the received-power law under Rician fading."""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import integrate, special

from .sysmodel import InvalidParameter, NumericError

UW = 1e-6


@dataclass(frozen=True)
class PwlaModel:
    """Piecewise-linear harvest curve.

    Zero below ``thresholds[0]``, ``slopes[i] * p + intercepts[i]`` on
    ``[thresholds[i], thresholds[i+1]]`` and ``saturation`` above the last
    threshold.  A point sitting on a shared threshold uses the lower segment.
    """

    thresholds: tuple[float, ...]
    slopes: tuple[float, ...]
    intercepts: tuple[float, ...]
    saturation: float

    def __post_init__(self):
        t = np.asarray(self.thresholds, dtype=float)
        if len(self.slopes) != len(self.intercepts) or len(t) != len(self.slopes) + 1:
            raise InvalidParameter("need L+1 thresholds and L slopes/intercepts")
        if len(self.slopes) < 1:
            raise InvalidParameter("need at least one linear piece")
        if np.any(t < 0) or np.any(np.diff(t) <= 0):
            raise InvalidParameter("thresholds must be >= 0 and strictly increasing")
        object.__setattr__(self, "thresholds", tuple(float(x) for x in self.thresholds))
        object.__setattr__(self, "slopes", tuple(float(x) for x in self.slopes))
        object.__setattr__(self, "intercepts", tuple(float(x) for x in self.intercepts))

    @property
    def n_segments(self) -> int:
        return len(self.slopes)

    def segment_index(self, p_r):
        """0..L-1 inside the fitted range, -1 below sensitivity, L above it."""
        t = np.asarray(self.thresholds)
        p = np.asarray(p_r, dtype=float)
        idx = np.searchsorted(t, p, side="left") - 1
        idx = np.where(p == t[0], 0, idx)
        idx = np.where(p > t[-1], self.n_segments, idx)
        return idx if idx.ndim else int(idx)

    def segment_value(self, i: int, p_r):
        return self.slopes[i] * np.asarray(p_r) + self.intercepts[i]

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["threshold", "slope", "intercept"])
            for t, a, b in zip(self.thresholds, self.slopes, self.intercepts):
                w.writerow([repr(t), repr(a), repr(b)])
            w.writerow([repr(self.thresholds[-1]), "", ""])
            w.writerow(["saturation", repr(self.saturation), ""])


def default_pwla() -> PwlaModel:
    """Five-piece fit of a far-field 915 MHz rectifier, saturating at 0.25 mW."""
    return PwlaModel(
        thresholds=tuple(x * UW for x in (6.31, 56.23, 158.49, 562.34, 1000.0, 1258.9)),
        slopes=(0.193, 0.375, 0.13, 0.054, 0.028),
        intercepts=tuple(x * UW for x in (-0.89, -11.767, 30.702, 72.372, 97.284)),
        saturation=250.0 * UW,
    )


def linear_model(efficiency: float, max_input: float = np.inf) -> PwlaModel:
    """Constant-efficiency harvester, the usual linear baseline."""
    return PwlaModel((0.0, max_input), (efficiency,), (0.0,), efficiency * max_input if np.isfinite(max_input) else np.inf)


def load_pwla_csv(path: str | Path) -> PwlaModel:
    """Read the format written by :meth:`PwlaModel.to_csv` (SI units)."""
    thresholds, slopes, intercepts = [], [], []
    saturation = None
    with open(path, newline="") as fh:
        for row in csv.reader(fh):
            row = [c.strip() for c in row]
            if not row or not row[0] or row[0].startswith("#") or row[0] == "threshold":
                continue
            if row[0] == "saturation":
                saturation = float(row[1])
                continue
            thresholds.append(float(row[0]))
            if len(row) > 2 and row[1] and row[2]:
                slopes.append(float(row[1]))
                intercepts.append(float(row[2]))
    if saturation is None:
        raise InvalidParameter(f"{path}: missing saturation row")
    return PwlaModel(tuple(thresholds), tuple(slopes), tuple(intercepts), saturation)


def harvest(m: PwlaModel, p_r):
    """Harvested DC power L{p_r}."""
    p = np.asarray(p_r, dtype=float)
    if np.any(p < 0):
        raise ValueError("received power must be >= 0")
    idx = m.segment_index(p)
    a = np.append(np.asarray(m.slopes), 0.0)
    b = np.append(np.asarray(m.intercepts), m.saturation)
    safe = np.clip(idx, 0, m.n_segments)
    with np.errstate(invalid="ignore"):
        out = np.where(idx < 0, 0.0, a[safe] * np.where(idx == m.n_segments, 0.0, p) + b[safe])
    return out if out.ndim else float(out)


def marcum_q1(a, b):
    """First-order Marcum Q-function via its Bessel series.

    Terms are formed with exponentially scaled I_k so nothing overflows:
    for b > a, Q = sum_{k>=0} (a/b)^k e^{-(a-b)^2/2} Ive_k(ab); otherwise
    Q = 1 - sum_{k>=1} (b/a)^k e^{-(a-b)^2/2} Ive_k(ab).
    """
    a, b = np.broadcast_arrays(np.asarray(a, dtype=float), np.asarray(b, dtype=float))
    if np.any(a < 0) or np.any(b < 0):
        raise ValueError("Marcum Q arguments must be >= 0")
    upper = b > a
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):  # discarded branch
        r = np.where(upper, a / np.where(b > 0, b, 1.0), b / np.where(a > 0, a, 1.0))
    x = a * b
    pref = np.exp(-0.5 * (a - b) ** 2)
    k0 = np.where(upper, 0, 1)
    total = np.zeros_like(x)
    k = 0
    block = 64
    while True:
        ks = np.arange(k, k + block)
        kk = ks.reshape((1,) * x.ndim + (-1,))
        with np.errstate(divide="ignore", invalid="ignore", under="ignore"):
            terms = np.where(
                kk >= k0[..., None],
                np.power(r[..., None], kk) * special.ive(kk, x[..., None]),
                0.0,
            )
        terms = np.nan_to_num(terms)
        total = total + terms.sum(axis=-1)
        k += block
        last = terms[..., -1]
        if np.all(last <= 1e-17 * np.maximum(total, 1e-300)) or k > 20000:
            break
    q = np.where(upper, pref * total, 1.0 - pref * total)
    q = np.where(b == 0, 1.0, q)
    q = np.where((a == 0) & (b > 0), np.exp(-0.5 * b**2), q)
    q = np.clip(q, 0.0, 1.0)
    return q if q.ndim else float(q)


def _check_mu(mu_pr):
    if np.any(np.asarray(mu_pr) <= 0):
        raise InvalidParameter("mean received power must be > 0")


def received_power_pdf(x, K: float, mu_pr: float):
    """Density of p_r for Rice factor K and mean mu_pr."""
    _check_mu(mu_pr)
    x = np.asarray(x, dtype=float)
    c = (K + 1.0) / mu_pr
    z = 2.0 * np.sqrt(K * c * np.maximum(x, 0.0))
    out = c * np.exp(-c * x - K + z) * special.ive(0, z)
    out = np.where(x < 0, 0.0, out)
    return out if out.ndim else float(out)


def received_power_cdf(x, K: float, mu_pr: float):
    _check_mu(mu_pr)
    x = np.maximum(np.asarray(x, dtype=float), 0.0)
    out = 1.0 - marcum_q1(np.sqrt(2.0 * K), np.sqrt(2.0 * (K + 1.0) * x / mu_pr))
    return out if np.ndim(out) else float(out)


def _pieces(lo: float, hi: float, mu: float):
    """Split [lo, hi] at a few multiples of mu so quad sees the bulk of the density."""
    marks = mu * np.array([0.01, 0.1, 0.3, 0.6, 1.0, 1.5, 2.0, 3.0, 5.0, 8.0, 12.0, 20.0, 35.0, 60.0])
    pts = [lo] + [v for v in marks if lo < v < hi] + [hi]
    return list(zip(pts[:-1], pts[1:]))


def mean_harvested_power_exact(m: PwlaModel, K: float, mu_pr: float, rtol: float = 1e-10) -> float:
    """E{L(p_r)}: quadrature over every linear piece plus the saturated tail."""
    _check_mu(mu_pr)
    total = 0.0
    for i in range(m.n_segments):
        lo, hi = m.thresholds[i], m.thresholds[i + 1]
        a, b = m.slopes[i], m.intercepts[i]
        # absolute floor far below the piece's scale, so empty far tails stop early
        floor = 1e-3 * rtol * (abs(a) * mu_pr + abs(b))
        for u, v in _pieces(lo, hi, mu_pr):
            val, err = integrate.quad(
                lambda x: (a * x + b) * received_power_pdf(x, K, mu_pr), u, v, epsabs=floor, epsrel=rtol, limit=200
            )
            if not np.isfinite(val) or err > max(1e-8 * abs(val), 10 * floor, 1e-30):
                raise NumericError(f"quadrature did not converge on [{u:g}, {v:g}]")
            total += val
    if np.isfinite(m.thresholds[-1]):
        total += m.saturation * (1.0 - received_power_cdf(m.thresholds[-1], K, mu_pr))
    return float(total)


def mean_harvested_power_approx(m: PwlaModel, mu_pr):
    """Jensen-type approximation L{E p_r}; above the fitted range this clamps to saturation."""
    return harvest(m, mu_pr)
