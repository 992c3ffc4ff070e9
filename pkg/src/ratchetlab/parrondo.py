"""Parrondo games A and B on the cycle Z_L and their mean profits.

Game A is a fair coin toss.  Game B moves forward with probability ``p0`` at
states ``j mod L < l`` and ``p1`` otherwise, with ``(p0, p1)`` tied together
by a single parameter ``rho`` so that B is asymptotically fair.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .model import parse_rational


def p0_p1_from_rho(rho: float, l: int, L_period: int) -> tuple[float, float]:
    """Forward probabilities ``(p0, p1)`` of game B for ``0 < rho < 1``."""
    if not 0.0 < rho < 1.0:
        raise ValueError(f"rho must lie in (0, 1), got {rho}")
    return _p0_p1(rho, l, L_period)


def _p0_p1(rho: float, l: int, L_period: int) -> tuple[float, float]:
    # also valid at rho = 1 (both probabilities 1/2); callers validate the range
    r = rho ** ((L_period - l) / l)
    return r / (1.0 + r), 1.0 / (1.0 + rho)


def solve_p1_from_p0(p0: float, alpha) -> float:
    """The ``p1`` that makes game B fair, given ``p0`` in ``(0, 1/2]``."""
    if not 0.0 < p0 <= 0.5:
        raise ValueError(f"p0 must lie in (0, 1/2], got {p0}")
    a = float(parse_rational(alpha))
    return 1.0 / (1.0 + (p0 / (1.0 - p0)) ** (a / (1.0 - a)))


@dataclass(frozen=True)
class GameBSpec:
    l: int
    L_period: int
    rho: float
    p0: float = field(init=False)
    p1: float = field(init=False)

    def __post_init__(self):
        if not 0 < self.l < self.L_period or math.gcd(self.l, self.L_period) != 1:
            raise ValueError(f"need coprime 0 < l < L, got l={self.l}, L={self.L_period}")
        p0, p1 = p0_p1_from_rho(self.rho, self.l, self.L_period)
        object.__setattr__(self, "p0", p0)
        object.__setattr__(self, "p1", p1)

    @property
    def alpha(self) -> Fraction:
        return Fraction(self.l, self.L_period)

    def fairness_gap(self) -> float:
        """Relative defect of ``(1-p0)^l (1-p1)^(L-l) = p0^l p1^(L-l)``.

        The complements are formed directly from ``rho``; subtracting a
        rounded ``p1`` near 1 would cost digits when ``rho`` is small.
        """
        k = self.L_period - self.l
        q0 = 1.0 / (1.0 + self.rho ** (k / self.l))
        q1 = self.rho / (1.0 + self.rho)
        lhs = q0 ** self.l * q1 ** k
        rhs = self.p0 ** self.l * self.p1 ** k
        return abs(lhs - rhs) / rhs

    def chain(self) -> CycleChain:
        fwd = np.where(np.arange(self.L_period) < self.l, self.p0, self.p1)
        return CycleChain(self.L_period, fwd)


@dataclass(frozen=True)
class CycleChain:
    """Nearest-neighbour walk on ``Z_size``; ``forward[j] = P(j, j+1 mod size)``."""

    size: int
    forward: np.ndarray

    def __post_init__(self):
        fwd = np.asarray(self.forward, dtype=float)
        if self.size < 2 or fwd.shape != (self.size,):
            raise ValueError("forward must have one entry per state and size >= 2")
        if np.any(fwd <= 0) or np.any(fwd >= 1):
            raise ValueError("forward probabilities must lie strictly in (0, 1)")
        object.__setattr__(self, "forward", fwd)

    @property
    def drift(self) -> np.ndarray:
        """Expected one-step increment from each state."""
        return 2.0 * self.forward - 1.0

    def matrix(self) -> np.ndarray:
        n = self.size
        j = np.arange(n)
        P = np.zeros((n, n))
        # += so that size 2 (j+1 == j-1 mod 2) accumulates both moves
        np.add.at(P, (j, (j + 1) % n), self.forward)
        np.add.at(P, (j, (j - 1) % n), 1.0 - self.forward)
        return P


def game_a_chain(size: int) -> CycleChain:
    return CycleChain(size, np.full(size, 0.5))


def solve_stationary(P: np.ndarray) -> np.ndarray:
    """Stationary row vector of an irreducible stochastic matrix by a direct solve."""
    n = P.shape[0]
    A = P.T - np.eye(n)
    A[-1, :] = 1.0
    b = np.zeros(n)
    b[-1] = 1.0
    return np.linalg.solve(A, b)


def invariant_measure_B(spec: GameBSpec) -> np.ndarray:
    """Closed-form detailed-balance solution for game B, normalized."""
    l, L, rho = spec.l, spec.L_period, spec.rho
    k = (L - l) / l
    j = np.arange(L)
    head = rho ** (j[:l] * k)
    tail = rho ** ((L - l) - (j[l:] - l + 1)) * (1.0 + rho) / (1.0 + rho ** k)
    pi = np.concatenate([head, tail])
    return pi / pi.sum()


def mean_profit_single(chain: CycleChain) -> float:
    nu = solve_stationary(chain.matrix())
    return float(nu @ chain.drift)


def mixture_chain(c: float, spec: GameBSpec) -> CycleChain:
    if not 0.0 < c < 1.0:
        raise ValueError(f"mixing weight c must lie in (0, 1), got {c}")
    return CycleChain(spec.L_period, c / 2.0 + (1.0 - c) * spec.chain().forward)


def mean_profit_mixture(c: float, spec: GameBSpec) -> float:
    """Stationary mean profit per play of the random mixture ``cA + (1-c)B``."""
    return mean_profit_single(mixture_chain(c, spec))


def mean_profit_pattern(r: int, s: int, spec: GameBSpec) -> float:
    """Expected profit over one period of the pattern ``A^r B^s`` (``r + s`` plays).

    Divide by ``r + s`` for the per-play figure.
    """
    if r < 1 or s < 1:
        raise ValueError("pattern exponents must be >= 1")
    a = game_a_chain(spec.L_period)
    b = spec.chain()
    plays = [a] * r + [b] * s
    L = spec.L_period
    period = np.linalg.multi_dot([ch.matrix() for ch in plays] + [np.eye(L)])
    if L % 2 == 0 and (r + s) % 2 == 0:
        # parity classes do not communicate; weight them equally (uniform start)
        nu = np.zeros(L)
        for cls in (np.arange(0, L, 2), np.arange(1, L, 2)):
            nu[cls] = 0.5 * solve_stationary(period[np.ix_(cls, cls)])
    else:
        nu = solve_stationary(period)
    total = 0.0
    for ch in plays:
        total += nu @ ch.drift
        nu = nu @ ch.matrix()
    return float(total)
