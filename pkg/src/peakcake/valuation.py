"""Single-peaked (triangular) value densities on the unit cake.

A density is ``v(x) = max(0, h - k|x - p|)`` restricted to ``[0, 1]`` and
normalised so that the whole cake is worth 1.  Everything here is closed
form: the antiderivative of a clipped triangle is piecewise quadratic, so
evaluation and cut queries are exact up to floating point.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

from .errors import CoverageFailed, DomainError, NonNormalizable, Unreachable

ARITH_TOL = 1e-12
AUDIT_TOL = 1e-9


def _check_position(x: float, name: str = "x") -> None:
    if not (0.0 <= x <= 1.0) or math.isnan(x):
        raise DomainError(f"{name}={x!r} is outside [0, 1]")


def _partial_mass(w: float, side: float) -> float:
    """Area of one half of a unit-height triangle of half-width ``w`` clipped at ``side``."""
    if w <= side:
        return w / 2.0
    return side - side * side / (2.0 * w)


def _bisect(f, lo: float, hi: float, tol: float = 1e-14) -> float:
    # f increasing, f(lo) < 0 < f(hi)
    for _ in range(400):
        mid = 0.5 * (lo + hi)
        if f(mid) < 0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= tol * max(1.0, hi):
            break
    return 0.5 * (lo + hi)


def _valid(w: float, lo: float, hi: float) -> bool:
    slack = 1e-12 * max(1.0, abs(w))
    return math.isfinite(w) and lo - slack <= w <= hi + slack


def half_width_for_density(p: float, h: float) -> float:
    """Half-width ``h/k`` that normalises a density with peak ``p`` and height ``h``."""
    a, b = sorted((p, 1.0 - p))
    target = 1.0 / h
    # both sides untruncated: full triangle of area h * w
    w = 1.0 / h
    if _valid(w, 0.0, a):
        return w
    # truncated on the short side only: w^2 + 2(a - 1/h) w - a^2 = 0
    c = a - target
    w = -c + math.sqrt(c * c + a * a)
    if a > 0 and _valid(w, a, b):
        return w
    # truncated on both sides
    w = (a * a + b * b) / (2.0 * (1.0 - target))
    if _valid(w, b, math.inf):
        return w

    def excess(x: float) -> float:
        return _partial_mass(x, a) + _partial_mass(x, b) - target

    hi = 1.0
    while excess(hi) < 0:
        hi *= 2.0
    return _bisect(excess, 0.0, hi)


def half_width_for_slope(p: float, k: float) -> float:
    """Half-width ``h/k`` that normalises a density with peak ``p`` and slope ``k``."""
    a, b = sorted((p, 1.0 - p))
    w = 1.0 / math.sqrt(k)
    if _valid(w, 0.0, a):
        return w
    w = -a + math.sqrt(2.0 * a * a + 2.0 / k)
    if a > 0 and _valid(w, a, b):
        return w
    w = 1.0 / k + (a * a + b * b) / 2.0
    if _valid(w, b, math.inf):
        return w

    def excess(x: float) -> float:
        return k * x * (_partial_mass(x, a) + _partial_mass(x, b)) - 1.0

    hi = 1.0
    while excess(hi) < 0:
        hi *= 2.0
    return _bisect(excess, 0.0, hi)


@dataclass(frozen=True)
class SinglePeakedValuation:
    """One agent's normalised triangular density.

    Build instances with :func:`from_peak_density` or :func:`from_peak_slope`;
    the raw constructor does not enforce normalisation.
    """

    peak: float
    peak_density: float
    slope: float

    @property
    def half_width(self) -> float:
        return self.peak_density / self.slope

    @property
    def left(self) -> float:
        return max(0.0, self.peak - self.half_width)

    @property
    def right(self) -> float:
        return min(1.0, self.peak + self.half_width)

    @property
    def support(self) -> tuple[float, float]:
        return self.left, self.right

    def density(self, x: float) -> float:
        _check_position(x)
        return max(0.0, self.peak_density - self.slope * abs(x - self.peak))

    def _raw_cdf(self, t: float) -> float:
        # antiderivative of the unclipped triangle, zero at its left foot
        w = self.half_width
        lo, hi = self.peak - w, self.peak + w
        if t <= lo:
            return 0.0
        if t <= self.peak:
            return 0.5 * self.slope * (t - lo) ** 2
        if t < hi:
            return self.peak_density * w - 0.5 * self.slope * (hi - t) ** 2
        return self.peak_density * w

    def eval(self, x: float, y: float) -> float:
        """Value of the interval ``[x, y]``."""
        _check_position(x)
        _check_position(y, "y")
        if x > y:
            raise DomainError(f"empty interval [{x}, {y}]")
        return max(0.0, self._raw_cdf(y) - self._raw_cdf(x))

    def cut(self, x: float, target: float) -> float:
        """Smallest ``y >= x`` with ``eval(x, y) == target``."""
        _check_position(x)
        if not target >= 0.0:
            raise DomainError(f"negative target {target!r}")
        if target == 0.0:
            return x
        remaining = self.eval(x, 1.0)
        if target > remaining:
            if target - remaining > ARITH_TOL:
                raise Unreachable(f"target {target} exceeds remaining value {remaining} right of {x}")
            target = remaining
        g = self._raw_cdf(x) + target
        w = self.half_width
        top = self.peak_density * w
        if g <= 0.5 * top:
            y = self.peak - w + math.sqrt(2.0 * g / self.slope)
        else:
            y = self.peak + w - math.sqrt(max(0.0, 2.0 * (top - g) / self.slope))
        return min(max(y, x), self.right)

    def mass(self) -> float:
        return self._raw_cdf(1.0) - self._raw_cdf(0.0)


def from_peak_density(p: float, h: float) -> SinglePeakedValuation:
    """Valuation with peak ``p`` and peak density ``h``; the slope is solved for."""
    _check_position(p, "p")
    if not h > 0 or not math.isfinite(h):
        raise DomainError(f"peak density must be positive, got {h!r}")
    if h <= 1.0:
        raise NonNormalizable(f"peak density {h} cannot carry unit mass on [0, 1]")
    return SinglePeakedValuation(p, h, h / half_width_for_density(p, h))


def from_peak_slope(p: float, k: float) -> SinglePeakedValuation:
    """Valuation with peak ``p`` and slope ``k``; the peak density is solved for."""
    _check_position(p, "p")
    if not k > 0 or not math.isfinite(k):
        raise DomainError(f"slope must be positive, got {k!r}")
    return SinglePeakedValuation(p, k * half_width_for_slope(p, k), k)


def density_at(v: SinglePeakedValuation, x: float) -> float:
    return v.density(x)


def covers_unit_interval(supports: Sequence[tuple[float, float]], tol: float = AUDIT_TOL) -> bool:
    reach = 0.0
    for lo, hi in sorted(supports):
        if lo > reach + tol:
            return False
        reach = max(reach, hi)
    return reach >= 1.0 - tol


@dataclass(frozen=True)
class CakeInstance:
    """An ordered list of agents' valuations over ``[0, 1]``.

    Construction fails when the supports leave part of the cake unwanted,
    unless ``waste_tolerant`` is set.
    """

    agents: tuple[SinglePeakedValuation, ...]
    waste_tolerant: bool = False
    tol: float = field(default=AUDIT_TOL, repr=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "agents", tuple(self.agents))
        if not self.agents:
            raise DomainError("an instance needs at least one agent")
        if not self.coverage and not self.waste_tolerant:
            raise CoverageFailed("agents' supports do not cover [0, 1]; pass waste_tolerant=True to allow this")

    def __len__(self) -> int:
        return len(self.agents)

    @property
    def n(self) -> int:
        return len(self.agents)

    @property
    def common_slope(self) -> bool:
        slopes = [v.slope for v in self.agents]
        return max(slopes) - min(slopes) <= self.tol * max(1.0, max(slopes))

    @property
    def distinct_peaks(self) -> bool:
        peaks = sorted(v.peak for v in self.agents)
        return all(b - a > self.tol for a, b in zip(peaks, peaks[1:]))

    @property
    def coverage(self) -> bool:
        return covers_unit_interval([v.support for v in self.agents], self.tol)

    def peak_order(self) -> list[int]:
        """Agent indices sorted by peak, ties broken by input order."""
        return sorted(range(self.n), key=lambda i: (self.agents[i].peak, i))
