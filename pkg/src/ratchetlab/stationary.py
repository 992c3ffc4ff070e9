"""Wrapped flashing walk on Z_{Ln}: cycle matrix, stationary law and mean drift per cycle.

One flash cycle is ``steps_off`` symmetric steps followed by ``steps_on``
ratchet steps.  When both ``L n`` and the cycle length are even the wrapped
chain splits into two parity classes, so one extra symmetric step is appended
to the cycle.  (The ratchet-step alternative is available for comparison.)
"""

from __future__ import annotations

import csv
import logging
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .model import RatchetParams
from .parrondo import solve_stationary
from .walk import FlashingSchedule, LatticeDistribution, evolve_runs, ratchet_probs

log = logging.getLogger(__name__)

EXTRA_SYMMETRIC = "symmetric"
EXTRA_RATCHET = "ratchet"


class StationaryError(RuntimeError):
    """Neither power iteration nor the direct solve produced a stationary vector."""


@dataclass(frozen=True)
class WrappedCycleMatrix:
    size: int
    entries: np.ndarray
    cycle_steps: int
    extra_step: str | None = None

    def row_sum_defect(self) -> float:
        return float(np.abs(self.entries.sum(axis=1) - 1.0).max())

    def is_irreducible(self) -> bool:
        """Reachability scan from state 0 in the graph and its reverse."""
        adj = self.entries > 0
        for a in (adj, adj.T):
            seen = np.zeros(self.size, dtype=bool)
            seen[0] = True
            frontier = seen.copy()
            while frontier.any():
                nxt = a[frontier].any(axis=0) & ~seen
                seen |= nxt
                frontier = nxt
            if not seen.all():
                return False
        return True


@dataclass(frozen=True)
class StationaryResult:
    pibar: np.ndarray
    pibar_recentered: LatticeDistribution
    mubar: float
    matrix: WrappedCycleMatrix


def needs_parity_fix(params: RatchetParams, schedule: FlashingSchedule) -> bool:
    return (params.L_period * schedule.n) % 2 == 0 and schedule.cycle_steps % 2 == 0


def cycle_runs(params: RatchetParams, schedule: FlashingSchedule, extra_step: str = EXTRA_SYMMETRIC):
    """``(ratchet, steps)`` runs making up one (parity-adjusted) flash cycle."""
    runs = [(False, schedule.steps_off), (True, schedule.steps_on)]
    if needs_parity_fix(params, schedule):
        if extra_step == EXTRA_SYMMETRIC:
            runs.append((False, 1))
        elif extra_step == EXTRA_RATCHET:
            runs.append((True, 1))
        else:
            raise ValueError(f"unknown extra-step convention {extra_step!r}")
    return runs


def one_step_matrices(params: RatchetParams, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Symmetric and ratchet one-step matrices on ``Z_{Ln}``."""
    size = params.L_period * n
    p0, p1 = ratchet_probs(params, n)
    j = np.arange(size)
    fwd = np.where(j < params.l * n, p0, p1)
    A = np.zeros((size, size))
    B = np.zeros((size, size))
    np.add.at(A, (j, (j + 1) % size), 0.5)
    np.add.at(A, (j, (j - 1) % size), 0.5)
    np.add.at(B, (j, (j + 1) % size), fwd)
    np.add.at(B, (j, (j - 1) % size), 1.0 - fwd)
    return A, B


def build_wrapped_matrix(params: RatchetParams, schedule: FlashingSchedule,
                         extra_step: str = EXTRA_SYMMETRIC) -> WrappedCycleMatrix:
    """Transition matrix of the wrapped walk over one flash cycle.

    Row ``i`` is the law after one cycle started from state ``i``.  Phase
    powers are formed by repeated squaring of the one-step matrices.
    """
    A, B = one_step_matrices(params, schedule.n)
    P = np.eye(A.shape[0])
    for ratchet, k in cycle_runs(params, schedule, extra_step):
        P = P @ np.linalg.matrix_power(B if ratchet else A, k)
    steps = sum(k for _, k in cycle_runs(params, schedule, extra_step))
    fixed = extra_step if needs_parity_fix(params, schedule) else None
    return WrappedCycleMatrix(A.shape[0], P, steps, fixed)


def wrapped_row(params: RatchetParams, schedule: FlashingSchedule, state: int,
                extra_step: str = EXTRA_SYMMETRIC) -> np.ndarray:
    """One matrix row by evolving a point mass on the line and folding it onto ``Z_{Ln}``.

    Independent of the matrix-power route; used to cross-check it.
    """
    size = params.L_period * schedule.n
    dist = evolve_runs(LatticeDistribution.point_mass(state, schedule.n), params,
                       cycle_runs(params, schedule, extra_step))
    row = np.zeros(size)
    np.add.at(row, dist.sites % size, dist.masses)
    return row


def stationary_distribution(P, tol: float = 1e-13, max_iter: int = 1_000_000,
                            start: np.ndarray | None = None) -> np.ndarray:
    """Stationary row vector ``nu`` of an irreducible stochastic matrix.

    Power iteration on the lazy chain ``(I + P)/2``, which has the same
    stationary law and is aperiodic even when ``P`` is not.  Falls back to a
    direct linear solve if the iterates stall.
    """
    P = P.entries if isinstance(P, WrappedCycleMatrix) else np.asarray(P, dtype=float)
    size = P.shape[0]
    nu = np.full(size, 1.0 / size) if start is None else np.asarray(start, dtype=float) / np.sum(start)
    best = np.inf
    stall = 0
    for _ in range(max_iter):
        nxt = 0.5 * (nu + nu @ P)
        nxt /= nxt.sum()
        delta = np.abs(nxt - nu).max()
        nu = nxt
        if delta < tol:
            break
        if delta < 0.5 * best:
            best, stall = delta, 0
        else:
            stall += 1
            if stall > 1000:
                log.info("power iteration stalled at %.3g; falling back to direct solve", delta)
                nu = solve_stationary(P)
                break
    else:
        nu = solve_stationary(P)
    residual = np.abs(nu @ P - nu).max()
    if not np.all(np.isfinite(nu)) or residual > 1e-10 or nu.min() < -1e-12:
        raise StationaryError(f"stationary vector not found (residual {residual:.3g})")
    return nu


def recenter(pibar: np.ndarray, params: RatchetParams, n: int) -> LatticeDistribution:
    """Place the wrapped law on ``[-(1-alpha)L, alpha L)``: states at or beyond ``alpha L`` move down by ``L``."""
    pibar = np.asarray(pibar, dtype=float)
    size = params.L_period * n
    if pibar.shape != (size,):
        raise ValueError(f"expected a vector of length {size}")
    cut = params.l * n
    masses = np.concatenate([pibar[cut:], pibar[:cut]])
    return LatticeDistribution(cut - size, masses, n, 0, None)


def mean_increment(start: LatticeDistribution, params: RatchetParams, runs) -> float:
    """Expected displacement on the line over ``runs`` started from ``start``.

    By linearity this is the ``start``-weighted average of the per-site mean
    increments, obtained from a single evolution.
    """
    return evolve_runs(start, params, runs).mean() - start.mean()


def wrapped_mean_increment(nu: np.ndarray, params: RatchetParams, schedule: FlashingSchedule,
                           extra_step: str = EXTRA_SYMMETRIC) -> float:
    """Same quantity as :func:`mean_increment`, accumulated on the wrapped chain.

    Each ratchet step from state ``j`` contributes ``(2 forward(j) - 1)/n``.
    """
    n = schedule.n
    A, _ = one_step_matrices(params, n)
    p0, p1 = ratchet_probs(params, n)
    fwd = np.where(np.arange(A.shape[0]) < params.l * n, p0, p1)
    drift = 2.0 * fwd - 1.0
    x = np.asarray(nu, dtype=float)
    total = 0.0
    for ratchet, k in cycle_runs(params, schedule, extra_step):
        if not ratchet:
            x = x @ np.linalg.matrix_power(A, k)
            continue
        for _ in range(k):
            total += x @ drift
            x = np.roll(x * fwd, 1) + np.roll(x * (1.0 - fwd), -1)
    return total / n


def stationary_analysis(params: RatchetParams, schedule: FlashingSchedule,
                        extra_step: str = EXTRA_SYMMETRIC) -> StationaryResult:
    mat = build_wrapped_matrix(params, schedule, extra_step)
    pibar = stationary_distribution(mat)
    centered = recenter(pibar, params, schedule.n)
    mubar = mean_increment(centered, params, cycle_runs(params, schedule, extra_step))
    return StationaryResult(pibar, centered, mubar, mat)


def mean_displacement_stationary(params: RatchetParams, schedule: FlashingSchedule,
                                 extra_step: str = EXTRA_SYMMETRIC) -> float:
    """Mean displacement per flash cycle started from the stationary law of the wrapped chain."""
    return stationary_analysis(params, schedule, extra_step).mubar


def cycle_snapshots(result: StationaryResult, params: RatchetParams, schedule: FlashingSchedule):
    """Distributions at time 0, after the Off phase, and after one full cycle."""
    start = result.pibar_recentered
    mid = evolve_runs(start, params, [(False, schedule.steps_off)])
    end = evolve_runs(mid, params, [(True, schedule.steps_on)])
    return start, mid, end


def write_stationary_csv(result: StationaryResult, params: RatchetParams, n: int, path) -> None:
    size = params.L_period * n
    cut = params.l * n
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["state", "wrapped_position", "recentered_position", "mass", "density"])
        for i in range(size):
            site = i if i < cut else i - size
            mass = result.pibar[i]
            w.writerow([i, f"{i / n:.17g}", f"{site / n:.17g}", f"{mass:.17g}", f"{mass * n:.17g}"])


_MAT_HEADER = struct.Struct("<qq")


def save_matrix(mat: WrappedCycleMatrix, path) -> None:
    """Header ``size, cycle_steps`` (int64 LE), then row-major LE doubles."""
    Path(path).write_bytes(_MAT_HEADER.pack(mat.size, mat.cycle_steps)
                           + np.ascontiguousarray(mat.entries, dtype="<f8").tobytes())


def load_matrix(path) -> WrappedCycleMatrix:
    raw = Path(path).read_bytes()
    size, steps = _MAT_HEADER.unpack_from(raw)
    entries = np.frombuffer(raw, dtype="<f8", count=size * size, offset=_MAT_HEADER.size)
    return WrappedCycleMatrix(size, entries.reshape(size, size).astype(float), steps)
