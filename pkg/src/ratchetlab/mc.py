"""Euler-Maruyama Monte Carlo for the (flashing) Brownian ratchet SDE.

Serves as an independent cross-check of the exact lattice computations.
Every path draws from its own SFC64 stream whose state is derived by
``SeedSequence((seed, path_index))``, so changing the number of paths never
changes the paths already drawn.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from numba import njit

from .model import RatchetParams, parse_rational
from .walk import LatticeDistribution

_BLOCK = 128


@dataclass(frozen=True)
class McConfig:
    paths: int = 100_000
    dt: float = 1e-4
    seed: int = 0
    wrap: bool = False

    def __post_init__(self):
        if self.paths < 1:
            raise ValueError("paths must be >= 1")
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise ValueError("dt must be positive")

    def check_against(self, params: RatchetParams) -> None:
        limit = float(min(params.tau1, params.tau2)) / 100.0
        if self.dt > limit * (1 + 1e-12):
            raise ValueError(f"dt={self.dt} exceeds min(tau1, tau2)/100 = {limit}")


def _runs(params: RatchetParams | None, dt: Fraction, t_end: Fraction):
    """Split step indices ``0..K-1`` into ``(drift_on, count)`` runs, phase taken at each step's left end."""
    K = t_end / dt
    if K.denominator != 1:
        raise ValueError(f"t_end={t_end} is not a whole number of steps of dt={dt}")
    K = int(K)
    if params is None:
        return [(True, K)] if K else []
    T = params.tau1 + params.tau2
    runs = []
    k = 0
    cycle = 0
    while k < K:
        on_from = math.ceil((cycle * T + params.tau1) / dt)
        next_cycle = math.ceil((cycle + 1) * T / dt)
        for flag, stop in ((False, on_from), (True, next_cycle)):
            stop = min(stop, K)
            if stop > k:
                runs.append((flag, stop - k))
                k = stop
        cycle += 1
    return runs


@njit(cache=True, nogil=True)
def _em_block(y, z, flags, counts, dt, L, cut, mu_lo, mu_hi):
    sq = math.sqrt(dt)
    for p in range(y.shape[0]):
        # position kept as cell * L + u with u in [0, L), so no modulo per step
        cell = math.floor(y[p] / L)
        u = y[p] - cell * L
        if u >= L:
            u -= L
            cell += 1
        j = 0
        for r in range(flags.shape[0]):
            c = counts[r]
            if flags[r]:
                for _ in range(c):
                    mu = mu_lo if u < cut else mu_hi
                    u += mu * dt + sq * z[p, j]
                    j += 1
                    while u >= L:
                        u -= L
                        cell += 1
                    while u < 0.0:
                        u += L
                        cell -= 1
            else:
                # driftless stretch: the sum of c Gaussian increments is one Gaussian
                u += math.sqrt(c * dt) * z[p, j]
                j += 1
                k = math.floor(u / L)
                u -= k * L
                cell += k
                if u >= L:
                    u -= L
                    cell += 1
        y[p] = cell * L + u


def _simulate(params: RatchetParams, cfg: McConfig, t_end, y0: float, flashing: bool) -> np.ndarray:
    dt = parse_rational(cfg.dt)
    runs = _runs(params if flashing else None, dt, parse_rational(t_end))
    flags = np.array([f for f, _ in runs], dtype=np.bool_)
    counts = np.array([c for _, c in runs], dtype=np.int64)
    draws = int(sum(c if f else 1 for f, c in runs))
    a = float(params.alpha)
    g = params.gamma
    L = float(params.L_period)
    out = np.full(cfg.paths, float(y0))
    seed = cfg.seed
    z = np.empty((min(_BLOCK, cfg.paths), draws))
    for start in range(0, cfg.paths, _BLOCK):
        stop = min(start + _BLOCK, cfg.paths)
        for i, path in enumerate(range(start, stop)):
            rng = np.random.Generator(np.random.SFC64(np.random.SeedSequence([seed, path])))
            rng.standard_normal(out=z[i])
        if draws:
            _em_block(out[start:stop], z, flags, counts, float(dt), L, a * L, -g / a, g / (1.0 - a))
    if cfg.wrap:
        out = np.mod(out, L)
        out[out >= L] -= L
    return out


def simulate_flashing(params: RatchetParams, cfg: McConfig, t_end, y0: float = 0.0) -> np.ndarray:
    """Endpoint samples at ``t_end`` of ``dY = dB + eta(t) mu(Y) dt`` started at ``y0``."""
    cfg.check_against(params)
    return _simulate(params, cfg, t_end, y0, flashing=True)


def simulate_ratchet(params: RatchetParams, cfg: McConfig, t_end, y0: float = 0.0) -> np.ndarray:
    """Endpoint samples of the pure ratchet ``dX = dB + mu(X) dt``."""
    return _simulate(params, cfg, t_end, y0, flashing=False)


def ks_distance(samples, dist: LatticeDistribution, snap: bool = True) -> float:
    """Kolmogorov-Smirnov statistic between samples and a lattice distribution.

    The lattice law is a step function with atoms at ``i/n``.  With ``snap``
    (the default) each sample is first rounded to the nearest support site,
    so both distribution functions jump on the same grid.  Without it, every
    atom contributes half its mass to the statistic even for perfect
    agreement.
    """
    x = np.asarray(samples, dtype=float).ravel()
    if x.size == 0:
        raise ValueError("no samples")
    n = dist.n_scale
    sites = dist.sites
    masses = dist.masses
    if snap:
        if dist.parity is None:
            s = np.rint(x * n)
        else:
            s = 2.0 * np.rint((x * n - dist.parity) / 2.0) + dist.parity
        x = np.sort(s)
        grid = sites.astype(float)
    else:
        x = np.sort(x)
        grid = sites / n
    cdf_lat = np.cumsum(masses) / masses.sum()
    pts = np.union1d(grid, x)
    f_emp = np.searchsorted(x, pts, side="right") / x.size
    idx = np.searchsorted(grid, pts, side="right") - 1
    f_lat = np.where(idx >= 0, cdf_lat[np.clip(idx, 0, None)], 0.0)
    return float(np.abs(f_emp - f_lat).max())


def ks_critical(size: int, level: float = 0.01) -> float:
    """Asymptotic one-sample KS critical value."""
    from scipy.stats import kstwobign
    return float(kstwobign.isf(level)) / math.sqrt(size)


def histogram(samples, bins=50, range_=None):
    counts, edges = np.histogram(np.asarray(samples, dtype=float), bins=bins, range=range_)
    return edges[:-1], edges[1:], counts


def write_samples_csv(samples, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["y"])
        w.writerows([f"{v:.17g}"] for v in np.asarray(samples).tolist())


def write_histogram_csv(samples, path, bins=50, range_=None) -> None:
    left, right, counts = histogram(samples, bins, range_)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["bin_left", "bin_right", "count"])
        for a, b, c in zip(left.tolist(), right.tolist(), counts.tolist()):
            w.writerow([f"{a:.17g}", f"{b:.17g}", c])
