"""Peak statistics of evolved densities, parameter sweeps and the tau grid search."""

from __future__ import annotations

import csv
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from fractions import Fraction

import numpy as np
from scipy.special import ndtr

from .model import RatchetParams, parse_rational
from .stationary import mean_displacement_stationary
from .walk import FlashingSchedule, LatticeDistribution, compute_m, evolve_flashing, rescaled_density

log = logging.getLogger(__name__)

TABLE_COLUMNS = ["lambda_or_n", "area1", "area2", "area3", "height1", "height2", "height3", "mean"]


@dataclass(frozen=True)
class PeakStats:
    areas: tuple[float, float, float]
    heights: tuple[float, float, float]
    mean: float


def peak_partition_boundaries(params: RatchetParams) -> tuple[Fraction, Fraction]:
    """Potential maxima on either side of the minimum at 0: ``alpha L - L`` and ``alpha L``."""
    return Fraction(params.l - params.L_period), Fraction(params.l)


AREA_LEFT_CLOSED = "left_closed"
AREA_SPLIT = "split"
HEIGHT_AT_MINIMA = "minima"
HEIGHT_MAX = "max"


def peak_stats(dist: LatticeDistribution, params: RatchetParams, *,
               areas: str = AREA_LEFT_CLOSED, heights: str = HEIGHT_AT_MINIMA) -> PeakStats:
    """Areas, heights and mean of the three peaks around ``-L``, ``0`` and ``L``.

    The regions are ``(-inf, b1)``, ``[b1, b2)`` and ``[b2, inf)`` with
    ``b1 = alpha L - L`` and ``b2 = alpha L``; ``areas="split"`` instead
    shares mass sitting exactly on a boundary evenly.  Heights are the
    linearly interpolated density at ``-L``, ``0`` and ``L``;
    ``heights="max"`` takes the largest interpolated value in each region.
    The defaults reproduce the reference tables.
    """
    n = dist.n_scale
    b_left, b_right = (b * n for b in peak_partition_boundaries(params))
    sites = dist.sites
    m = dist.masses

    if areas == AREA_LEFT_CLOSED:
        a1 = float(m[sites < b_left].sum())
        a3 = float(m[sites >= b_right].sum())
    elif areas == AREA_SPLIT:
        def side_mass(below: bool, b: Fraction) -> float:
            strict = sites < b if below else sites > b
            on = m[sites == b].sum() if b.denominator == 1 else 0.0
            return float(m[strict].sum() + 0.5 * on)
        a1 = side_mass(True, b_left)
        a3 = side_mass(False, b_right)
    else:
        raise ValueError(f"unknown area convention {areas!r}")
    a2 = float(m.sum()) - a1 - a3

    pos, dens = rescaled_density(dist)
    if heights == HEIGHT_AT_MINIMA:
        L = params.L_period
        hs = [float(np.interp(c, pos, dens, left=0.0, right=0.0)) for c in (-L, 0, L)]
    elif heights == HEIGHT_MAX:
        bl, br = float(b_left) / n, float(b_right) / n
        hs = []
        for lo, hi in ((-np.inf, bl), (bl, br), (br, np.inf)):
            inside = dens[(pos >= lo) & (pos <= hi)]
            cands = [inside.max()] if inside.size else []
            for edge in (lo, hi):
                if np.isfinite(edge):
                    cands.append(float(np.interp(edge, pos, dens, left=0.0, right=0.0)))
            hs.append(float(max(cands)) if cands else 0.0)
    else:
        raise ValueError(f"unknown height convention {heights!r}")
    return PeakStats((a1, a2, a3), tuple(hs), dist.mean())


def normal_reference_areas(tau1, params: RatchetParams) -> tuple[float, float, float]:
    """Mass of ``N(0, tau1)`` in the three peak regions."""
    sigma = float(parse_rational(tau1)) ** 0.5
    b_left, b_right = (float(b) for b in peak_partition_boundaries(params))
    lo = float(ndtr(b_left / sigma))
    hi = float(ndtr(b_right / sigma))
    # upper tail via symmetry keeps full relative accuracy
    return lo, hi - lo, float(ndtr(-b_right / sigma))


def run_from_origin(params: RatchetParams, n: int, t=None) -> LatticeDistribution:
    """Distribution at time ``t`` (default ``tau1 + tau2``) of the walk started at site 0."""
    schedule = FlashingSchedule.for_params(params, n)
    steps = schedule.cycle_steps if t is None else schedule.steps_for_time(t)
    return evolve_flashing(LatticeDistribution.point_mass(0, n), params, schedule, steps)


def _map(fn, items, threads: int):
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def lambda_sweep(lambdas, base: RatchetParams, n: int, threads: int = 1) -> list[PeakStats]:
    """Peak statistics at time ``tau1 + tau2`` for each drift strength, in input order."""
    def cell(lam):
        p = replace(base, lam=float(lam))
        return peak_stats(run_from_origin(p, n), p)
    return _map(cell, list(lambdas), threads)


def n_sweep(ns, base: RatchetParams, threads: int = 1) -> list[PeakStats]:
    m = compute_m(base.tau1, base.tau2)
    bad = [n for n in ns if n % m]
    if bad:
        raise ValueError(f"n must be a multiple of m={m}: {bad}")

    def cell(n):
        return peak_stats(run_from_origin(base, n), base)
    return _map(cell, list(ns), threads)


def table_rows(keys, stats: list[PeakStats]) -> list[list[float]]:
    return [[k, *s.areas, *s.heights, s.mean] for k, s in zip(keys, stats)]


def write_table_csv(keys, stats: list[PeakStats], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(TABLE_COLUMNS)
        for row in table_rows(keys, stats):
            w.writerow([row[0]] + [f"{x:.17g}" for x in row[1:]])


def format_table(keys, stats: list[PeakStats], key_name: str = "lambda") -> str:
    lines = [f"{key_name:>6}  {'areas of the three peaks':^36}  {'heights of the three peaks':^33}  mean"]
    for k, s in zip(keys, stats):
        areas = ", ".join(f"{a:.6g}" for a in s.areas)
        heights = ", ".join(f"{h:.6g}" for h in s.heights)
        lines.append(f"{k!s:>6}  ({areas:<34})  ({heights:<31})  {s.mean:.6g}")
    return "\n".join(lines)


@dataclass(frozen=True)
class TauCell:
    tau1: Fraction
    tau2: Fraction
    n: int | None
    mubar: float | None
    rate: float | None
    skipped: str | None = None


@dataclass(frozen=True)
class TauOptimum:
    best: TauCell
    table: list[TauCell]


def _choose_n(m: int, n: int | None, n_floor: int | None) -> int:
    if n is not None:
        if n % m:
            raise ValueError(f"n must be a multiple of m={m}, got n={n}")
        return n
    floor = n_floor or m
    return m * -(-floor // m)


def optimize_tau(params: RatchetParams, tau_grid, n: int | None = None, *, n_floor: int | None = None,
                 max_n: int = 400, threads: int = 1) -> TauOptimum:
    """Grid search of the stationary drift rate ``mubar / (tau1 + tau2)``.

    Each cell uses ``n`` when given, otherwise the smallest multiple of its
    ``m`` at or above ``n_floor``.  Cells needing ``n > max_n`` are skipped and
    flagged.  Ties go to the shorter cycle.
    """
    def cell(pair):
        t1, t2 = (parse_rational(t) for t in pair)
        m = compute_m(t1, t2)
        try:
            nn = _choose_n(m, n, n_floor)
        except ValueError as exc:
            return TauCell(t1, t2, None, None, None, str(exc))
        if nn > max_n:
            return TauCell(t1, t2, nn, None, None, f"needs n={nn} > budget {max_n}")
        p = replace(params, tau1=t1, tau2=t2)
        mubar = mean_displacement_stationary(p, FlashingSchedule.for_params(p, nn))
        return TauCell(t1, t2, nn, mubar, mubar / float(t1 + t2))

    table = _map(cell, list(tau_grid), threads)
    done = [c for c in table if c.rate is not None]
    if not done:
        raise ValueError("no grid cell could be evaluated within the budget")
    for c in table:
        if c.skipped:
            log.warning("tau cell (%s, %s) skipped: %s", c.tau1, c.tau2, c.skipped)
    best = max(done, key=lambda c: (c.rate, -(c.tau1 + c.tau2)))
    return TauOptimum(best, table)
