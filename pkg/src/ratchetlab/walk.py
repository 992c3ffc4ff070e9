"""Exact distribution evolution of the approximating lattice random walks.

Site ``i`` sits at physical position ``i/n``.  The Off phase is the simple
symmetric walk; the On phase moves forward with probability ``p0`` where
``i mod (L n) < l n`` and ``p1`` elsewhere, with ``rho = 1 - lam/n``.

Masses are stored densely over the current support window.  Edge cells that
underflow to exactly zero are trimmed, which leaves every nonzero mass
bit-for-bit unchanged and keeps long runs proportional to the effective
(rather than the nominal) support.
"""

from __future__ import annotations

import csv
import struct
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
from numba import njit

from .model import FlashingPhase, RatchetParams, parse_rational
from .parrondo import _p0_p1

CHECKPOINT_VERSION = 1
_HEADER = struct.Struct("<Bqqqq")


@dataclass(frozen=True)
class LatticeDistribution:
    """Probability masses on consecutive sites ``offset, offset+1, ...``.

    ``parity`` is the parity of the sites allowed to carry mass (``None`` when
    both classes are populated, e.g. a stationary law placed on the line).
    """

    offset: int
    masses: np.ndarray
    n_scale: int
    steps_taken: int = 0
    parity: int | None = None

    def __post_init__(self):
        m = np.asarray(self.masses, dtype=float)
        if m.ndim != 1 or m.size == 0:
            raise ValueError("masses must be a non-empty 1-D array")
        if np.any(m < 0):
            raise ValueError("masses must be non-negative")
        if self.n_scale < 1:
            raise ValueError("n_scale must be >= 1")
        object.__setattr__(self, "masses", m)
        object.__setattr__(self, "offset", int(self.offset))
        if self.parity is not None:
            object.__setattr__(self, "parity", int(self.parity) % 2)

    @classmethod
    def point_mass(cls, site: int, n_scale: int) -> LatticeDistribution:
        return cls(site, np.array([1.0]), n_scale, 0, site % 2)

    @property
    def sites(self) -> np.ndarray:
        return np.arange(self.offset, self.offset + self.masses.size)

    @property
    def positions(self) -> np.ndarray:
        return self.sites / self.n_scale

    def total_mass(self) -> float:
        return float(self.masses.sum())

    def mean(self) -> float:
        """Mean physical position."""
        return float(self.masses @ self.sites) / self.n_scale

    def wrong_parity_mass(self) -> float:
        if self.parity is None:
            return 0.0
        bad = (self.sites % 2) != self.parity
        return float(self.masses[bad].sum())

    def shifted(self, sites: int) -> LatticeDistribution:
        par = None if self.parity is None else (self.parity + sites) % 2
        return replace(self, offset=self.offset + sites, parity=par)

    def mass_at(self, site: int) -> float:
        i = site - self.offset
        return float(self.masses[i]) if 0 <= i < self.masses.size else 0.0


def compute_m(tau1, tau2) -> int:
    """Smallest ``m >= 1`` with ``m^2 tau1`` and ``m^2 tau2`` both integers."""
    t1, t2 = parse_rational(tau1), parse_rational(tau2)
    if t1 <= 0 or t2 <= 0:
        raise ValueError("tau1 and tau2 must be positive")
    # m = lcm(t1.denominator, t2.denominator) always works, so the scan terminates
    m = 1
    while (m * m * t1).denominator != 1 or (m * m * t2).denominator != 1:
        m += 1
    return m


@dataclass(frozen=True)
class FlashingSchedule:
    n: int
    steps_off: int
    steps_on: int
    m: int

    @classmethod
    def for_params(cls, params: RatchetParams, n: int) -> FlashingSchedule:
        m = compute_m(params.tau1, params.tau2)
        if n < 1 or n % m:
            raise ValueError(f"n must be a multiple of m={m}, got n={n}")
        return cls(n, int(n * n * params.tau1), int(n * n * params.tau2), m)

    def __post_init__(self):
        if self.steps_off < 1 or self.steps_on < 1:
            raise ValueError("phase lengths must be >= 1 step")
        if self.n % self.m:
            raise ValueError(f"n must be a multiple of m={self.m}, got n={self.n}")

    @property
    def cycle_steps(self) -> int:
        return self.steps_off + self.steps_on

    def steps_for_time(self, t) -> int:
        k = self.n * self.n * parse_rational(t)
        if k.denominator != 1:
            raise ValueError(f"time {t} is not a whole number of lattice steps at n={self.n}")
        return int(k)

    def phase_of_step(self, k: int) -> FlashingPhase:
        return FlashingPhase.OFF if k % self.cycle_steps < self.steps_off else FlashingPhase.ON


def ratchet_probs(params: RatchetParams, n: int) -> tuple[float, float]:
    """``(p0, p1)`` of the period-``L n`` walk; ``lam = 0`` gives the fair walk."""
    if params.lam >= n:
        raise ValueError(f"lam={params.lam} must be < n={n} so that rho = 1 - lam/n > 0")
    return _p0_p1(1.0 - params.lam / n, params.l, params.L_period)


def _trim(masses: np.ndarray, offset: int) -> tuple[np.ndarray, int]:
    nz = np.flatnonzero(masses)
    if nz.size == 0:
        raise ArithmeticError("all mass underflowed")
    return masses[nz[0]:nz[-1] + 1], offset + int(nz[0])


def step_symmetric(dist: LatticeDistribution) -> LatticeDistribution:
    """One step of the simple symmetric walk."""
    m = dist.masses
    new = np.zeros(m.size + 2)
    new[2:] += 0.5 * m
    new[:-2] += 0.5 * m
    new, off = _trim(new, dist.offset - 1)
    par = None if dist.parity is None else 1 - dist.parity
    return LatticeDistribution(off, new, dist.n_scale, dist.steps_taken + 1, par)


def step_ratchet(dist: LatticeDistribution, params: RatchetParams, n: int | None = None) -> LatticeDistribution:
    """One step of the period-``L n`` asymmetric walk."""
    n = dist.n_scale if n is None else n
    p0, p1 = ratchet_probs(params, n)
    low = np.mod(dist.sites, params.L_period * n) < params.l * n
    fwd = np.where(low, p0, p1)
    bwd = np.where(low, 1.0 - p0, 1.0 - p1)
    m = dist.masses
    new = np.zeros(m.size + 2)
    new[2:] += fwd * m
    new[:-2] += bwd * m
    new, off = _trim(new, dist.offset - 1)
    par = None if dist.parity is None else 1 - dist.parity
    return LatticeDistribution(off, new, dist.n_scale, dist.steps_taken + 1, par)


@njit(cache=True, nogil=True)
def _run_phase(buf, tmp, lo, hi, base, nsteps, ratchet, p0, p1, period, cut, stride):
    """Advance the masses held in ``buf[lo:hi]`` (index ``b`` is site ``base + b``).

    Returns the new window and the array now holding it; the two buffers
    swap roles every step.  Both need ``nsteps + 2`` spare cells on each
    side.  With ``stride == 2`` only the occupied parity class is updated.
    """
    q0 = 1.0 - p0
    q1 = 1.0 - p1
    for _ in range(nsteps):
        # cells just outside the window may hold stale data from older steps
        buf[lo - 2] = 0.0
        buf[lo - 1] = 0.0
        buf[hi] = 0.0
        buf[hi + 1] = 0.0
        if ratchet:
            r = (base + lo - 2) % period
            for b in range(lo - 1, hi + 1, stride):
                rr = r + 2
                if rr >= period:
                    rr -= period
                fw = p0 if r < cut else p1
                bw = q0 if rr < cut else q1
                x = 0.0
                x += fw * buf[b - 1]
                x += bw * buf[b + 1]
                tmp[b] = x
                r += stride
                if r >= period:
                    r -= period
        else:
            for b in range(lo - 1, hi + 1, stride):
                x = 0.0
                x += 0.5 * buf[b - 1]
                x += 0.5 * buf[b + 1]
                tmp[b] = x
        lo -= 1
        hi += 1
        while lo < hi and tmp[lo] == 0.0:
            lo += 1
        while hi > lo and tmp[hi - 1] == 0.0:
            hi -= 1
        if lo == hi:
            raise ArithmeticError("all mass underflowed")
        buf, tmp = tmp, buf
    return lo, hi, buf


def _phase_plan(schedule: FlashingSchedule, start: int, total: int):
    plan = []
    k = start
    end = start + total
    while k < end:
        pos = k % schedule.cycle_steps
        if pos < schedule.steps_off:
            run = min(schedule.steps_off - pos, end - k)
            plan.append((False, run))
        else:
            run = min(schedule.cycle_steps - pos, end - k)
            plan.append((True, run))
        k += run
    return plan


def evolve_runs(initial: LatticeDistribution, params: RatchetParams, runs) -> LatticeDistribution:
    """Apply ``(ratchet: bool, steps)`` runs in order, starting from ``initial``."""
    total = sum(k for _, k in runs)
    if total == 0:
        return initial
    n = initial.n_scale
    p0, p1 = ratchet_probs(params, n) if any(r for r, _ in runs) else (0.5, 0.5)
    size = initial.masses.size + 2 * total + 6
    buf = np.zeros(size)
    tmp = np.zeros(size)
    lo = total + 3
    hi = lo + initial.masses.size
    buf[lo:hi] = initial.masses
    base = initial.offset - lo
    period, cut = params.L_period * n, params.l * n
    stride = 1 if initial.parity is None else 2
    if stride == 2 and initial.wrong_parity_mass() != 0.0:
        raise ValueError("distribution carries mass on the wrong parity class")
    for ratchet, k in runs:
        if k:
            lo, hi, out = _run_phase(buf, tmp, lo, hi, base, k, ratchet, p0, p1, period, cut, stride)
            if out is not buf:
                buf, tmp = tmp, buf
    par = None if initial.parity is None else (initial.parity + total) % 2
    return LatticeDistribution(base + lo, buf[lo:hi].copy(), n, initial.steps_taken + total, par)


def evolve_flashing(initial: LatticeDistribution, params: RatchetParams,
                    schedule: FlashingSchedule, total_steps: int) -> LatticeDistribution:
    """Alternate ``steps_off`` symmetric and ``steps_on`` ratchet steps.

    The phase is taken from ``initial.steps_taken``, so a fresh distribution
    starts in the Off phase and a resumed one continues where it stopped.
    """
    if total_steps < 0:
        raise ValueError("total_steps must be >= 0")
    if initial.n_scale != schedule.n:
        raise ValueError(f"distribution has n={initial.n_scale}, schedule has n={schedule.n}")
    return evolve_runs(initial, params, _phase_plan(schedule, initial.steps_taken, total_steps))


def rescaled_density(dist: LatticeDistribution) -> tuple[np.ndarray, np.ndarray]:
    """Histogram heights of the rescaled walk at its support points.

    With a single parity class the support spacing is ``2/n`` and the height
    is ``mass * n/2``; with both classes populated the spacing is ``1/n``.
    """
    n = dist.n_scale
    if dist.parity is None:
        return dist.positions, dist.masses * n
    keep = (dist.sites % 2) == dist.parity
    return dist.positions[keep], dist.masses[keep] * (n / 2.0)


def write_csv(dist: LatticeDistribution, path) -> None:
    pos, dens = rescaled_density(dist)
    dens_by_site = dict(zip(np.rint(pos * dist.n_scale).astype(int).tolist(), dens.tolist()))
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["site_index", "position", "mass", "density"])
        for site, mass in zip(dist.sites.tolist(), dist.masses.tolist()):
            w.writerow([site, f"{site / dist.n_scale:.17g}", f"{mass:.17g}",
                        f"{dens_by_site.get(site, 0.0):.17g}"])


def _infer_parity(sites: np.ndarray, masses: np.ndarray) -> int | None:
    classes = {int(s) % 2 for s, x in zip(sites, masses) if x != 0.0}
    return classes.pop() if len(classes) == 1 else None


def read_csv(path, n_scale: int, steps_taken: int = 0) -> LatticeDistribution:
    """Load a distribution written by :func:`write_csv` (gaps are filled with zeros)."""
    sites, masses = [], []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            sites.append(int(row["site_index"]))
            masses.append(float(row["mass"]))
    if not sites:
        raise ValueError(f"{path}: no rows")
    sites = np.asarray(sites)
    lo = int(sites.min())
    dense = np.zeros(int(sites.max()) - lo + 1)
    np.add.at(dense, sites - lo, masses)
    return LatticeDistribution(lo, dense, n_scale, steps_taken, _infer_parity(sites, np.asarray(masses)))


def save_checkpoint(dist: LatticeDistribution, path) -> None:
    """Binary layout: version byte, n, offset, steps_taken, length (int64 LE), then LE doubles."""
    head = _HEADER.pack(CHECKPOINT_VERSION, dist.n_scale, dist.offset, dist.steps_taken, dist.masses.size)
    Path(path).write_bytes(head + dist.masses.astype("<f8").tobytes())


def load_checkpoint(path) -> LatticeDistribution:
    raw = Path(path).read_bytes()
    version, n, offset, steps, length = _HEADER.unpack_from(raw)
    if version != CHECKPOINT_VERSION:
        raise ValueError(f"unsupported checkpoint version {version}")
    masses = np.frombuffer(raw, dtype="<f8", count=length, offset=_HEADER.size).astype(float)
    sites = np.arange(offset, offset + length)
    return LatticeDistribution(offset, masses, n, steps, _infer_parity(sites, masses))


def mean_after(params: RatchetParams, n: int, t=None, start_site: int = 0) -> float:
    """Mean position after time ``t`` (default one flash cycle) from a point mass."""
    schedule = FlashingSchedule.for_params(params, n)
    steps = schedule.cycle_steps if t is None else schedule.steps_for_time(t)
    return evolve_flashing(LatticeDistribution.point_mass(start_site, n), params, schedule, steps).mean()


__all__ = [
    "LatticeDistribution", "FlashingSchedule", "compute_m", "step_symmetric", "step_ratchet",
    "evolve_flashing", "evolve_runs", "rescaled_density", "ratchet_probs", "write_csv", "read_csv",
    "save_checkpoint", "load_checkpoint", "mean_after",
]
