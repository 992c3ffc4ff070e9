"""Continuous flashing-ratchet model: parameters, sawtooth potential and drift.

Positions are physical (real line).  The potential has period ``L`` with its
minimum 0 at multiples of ``L`` and its maximum ``L`` at ``alpha*L`` (mod ``L``).
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass
from fractions import Fraction

import numpy as np


def parse_rational(value) -> Fraction:
    """Exact rational from ``"p/q"``, a decimal string, an int or a Fraction.

    Decimal strings convert exactly (``"2.4"`` -> 12/5).  Floats are routed
    through ``repr`` so that ``2.4`` also gives 12/5 rather than the binary
    expansion.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("booleans are not rationals")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        if not math.isfinite(value):
            raise ValueError(f"not a finite number: {value!r}")
        return Fraction(repr(value))
    text = str(value).strip()
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise ValueError(f"cannot parse {value!r} as a rational") from exc


class FlashingPhase(enum.Enum):
    OFF = "off"  # Brownian motion, potential switched off
    ON = "on"  # Brownian ratchet


@dataclass(frozen=True)
class RatchetParams:
    """Flashing Brownian ratchet with ``alpha = l / L_period``.

    The drift strength is carried as ``lam``; ``gamma = lam*(1 - alpha)/2`` is
    derived so the two can never disagree.  ``lam = 0`` is accepted as the
    degenerate (driftless) model.
    """

    l: int
    L_period: int
    lam: float
    tau1: Fraction = Fraction(12, 5)
    tau2: Fraction = Fraction(12, 5)

    def __post_init__(self):
        if int(self.l) != self.l or int(self.L_period) != self.L_period:
            raise ValueError("l and L_period must be integers")
        if not 0 < self.l < self.L_period:
            raise ValueError(f"need 0 < l < L_period, got l={self.l}, L={self.L_period}")
        if math.gcd(self.l, self.L_period) != 1:
            raise ValueError(f"l={self.l} and L_period={self.L_period} must be coprime")
        if not (self.lam >= 0 and math.isfinite(self.lam)):
            raise ValueError(f"lam must be finite and >= 0, got {self.lam}")
        object.__setattr__(self, "lam", float(self.lam))
        object.__setattr__(self, "tau1", parse_rational(self.tau1))
        object.__setattr__(self, "tau2", parse_rational(self.tau2))
        if self.tau1 <= 0 or self.tau2 <= 0:
            raise ValueError("tau1 and tau2 must be positive")
        if 2 * self.l == self.L_period:
            warnings.warn("alpha = 1/2: the sawtooth is symmetric and no ratchet effect is expected",
                          stacklevel=3)

    @classmethod
    def from_gamma(cls, l, L_period, gamma, tau1=Fraction(12, 5), tau2=Fraction(12, 5)):
        alpha = l / L_period
        return cls(l, L_period, 2.0 * gamma / (1.0 - alpha), tau1, tau2)

    @classmethod
    def from_alpha(cls, alpha, L_period, lam, tau1=Fraction(12, 5), tau2=Fraction(12, 5)):
        """Build from a rational ``alpha`` and period; ``alpha*L_period`` must be an integer."""
        alpha = parse_rational(alpha)
        l = alpha * L_period
        if l.denominator != 1:
            raise ValueError(f"alpha*L = {l} is not an integer")
        return cls(int(l), int(L_period), lam, tau1, tau2)

    @property
    def alpha(self) -> Fraction:
        return Fraction(self.l, self.L_period)

    @property
    def gamma(self) -> float:
        return self.lam * (1.0 - float(self.alpha)) / 2.0

    @property
    def period_time(self) -> Fraction:
        return self.tau1 + self.tau2


def _reduce(x, period):
    r = np.mod(x, period)
    # np.mod can round tiny negative inputs up to exactly `period`
    return np.where(r >= period, r - period, r)


def _out(a):
    return float(a) if np.ndim(a) == 0 else a


def sawtooth_V(x, params: RatchetParams):
    """Periodic asymmetric sawtooth potential (scalar or array input)."""
    L = float(params.L_period)
    a = float(params.alpha)
    r = _reduce(np.asarray(x, dtype=float), L)
    v = np.where(r <= a * L, r / a, (L - r) / (1.0 - a))
    return _out(v)


def drift_mu(x, params: RatchetParams):
    """Drift ``-gamma V'``: ``-gamma/alpha`` on ``[kL, kL+alpha L)``, ``gamma/(1-alpha)`` elsewhere."""
    L = float(params.L_period)
    a = float(params.alpha)
    g = params.gamma
    r = _reduce(np.asarray(x, dtype=float), L)
    mu = np.where(r < a * L, -g / a, g / (1.0 - a))
    return _out(mu)


def phase_at(t, params: RatchetParams) -> FlashingPhase:
    """Flashing phase at time ``t`` (exact when ``t`` is rational)."""
    t = parse_rational(t)
    T = params.period_time
    return FlashingPhase.OFF if t - T * math.floor(t / T) < params.tau1 else FlashingPhase.ON


def _partition_function(params: RatchetParams) -> float:
    g = params.gamma
    L = params.L_period
    if g == 0:
        return float(L)
    # the two exponential pieces sum to (1 - exp(-2 gamma L)) / (2 gamma)
    return -math.expm1(-2.0 * g * L) / (2.0 * g)


def ratchet_invariant_density(x, params: RatchetParams):
    """Normalized ``C exp(-2 gamma V(x))``, integrating to 1 over one period."""
    v = np.asarray(sawtooth_V(x, params), dtype=float)
    return _out(np.exp(-2.0 * params.gamma * v) / _partition_function(params))


def ratchet_invariant_cdf(x, params: RatchetParams):
    """Distribution function of the invariant density restricted to ``[0, L)``.

    Inputs are clipped to ``[0, L]``; used for binning wrapped samples.
    """
    L = float(params.L_period)
    a = float(params.alpha)
    g = params.gamma
    x = np.clip(np.asarray(x, dtype=float), 0.0, L)
    if g == 0:
        return _out(x / L)
    k = 2.0 * g
    left = (a / k) * -np.expm1(-k * np.minimum(x, a * L) / a)
    right = np.where(
        x > a * L,
        # exp(-k(L-x)/(1-a)) - exp(-kL), written to survive tiny k
        ((1.0 - a) / k) * math.exp(-k * L) * np.expm1(k * (x - a * L) / (1.0 - a)),
        0.0,
    )
    return _out((left + right) / _partition_function(params))
