"""Allocation mechanisms run through a Robertson-Webb oracle.

``run_ww`` is the Wang-Wu envy-free procedure; ``run_mww``, ``run_ll`` and
``run_um`` are the modified Wang-Wu, leftmost-leaves and utilitarian
mechanisms; ``run_envelope_um`` maximises utilitarian welfare for arbitrary
slopes, where optimal allocations can be disconnected.

Every mechanism learns the agents only through its oracle.  The returned
utilities are then measured on the true valuations.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .allocation import Allocation, Interval, utilities
from .errors import EmptySegment, EqualPeaks, PrereqViolated
from .oracle import Oracle, QueryLog
from .valuation import ARITH_TOL, CakeInstance, SinglePeakedValuation

# recovered marks closer than this are treated as one point
MARK_MERGE = 1e-12


@dataclass(frozen=True)
class MechanismResult:
    mechanism: str
    allocation: Allocation
    utilities: tuple[float, ...]
    log: QueryLog
    marks: tuple[float, ...]

    @property
    def total(self) -> float:
        return float(sum(self.utilities))


def _finish(name: str, instance: CakeInstance, raw: list[list[tuple[float, float]]], oracle: Oracle, marks) -> MechanismResult:
    alloc = Allocation(tuple(tuple(Interval(s, e) for s, e in piece) for piece in raw))
    return MechanismResult(name, alloc, tuple(float(u) for u in utilities(instance, alloc)), oracle.log, tuple(marks))


def _marks(structures) -> list[float]:
    points = sorted({0.0, 1.0, *(float(x) for s in structures for x in s)})
    out = [0.0]
    for x in points[1:]:
        if x - out[-1] > MARK_MERGE:
            out.append(x)
    out[-1] = 1.0
    return out


def _share(raw, start: float, end: float, agents: list[int]) -> None:
    """Cut ``[start, end]`` into ``2m`` equal pieces; the r-th agent takes pieces r and 2m+1-r."""
    m = len(agents)
    step = (end - start) / (2 * m)
    edges = [start + t * step for t in range(2 * m)] + [end]
    for rank, agent in enumerate(agents):
        raw[agent].append((edges[rank], edges[rank + 1]))
        mirror = 2 * m - 1 - rank
        raw[agent].append((edges[mirror], edges[mirror + 1]))


def run_ww(instance: CakeInstance) -> MechanismResult:
    """Wang-Wu: every segment between marks is shared among all agents."""
    oracle = Oracle(instance)
    structures = [oracle.recover_structure(i) for i in range(instance.n)]
    marks = _marks(structures)
    raw: list[list[tuple[float, float]]] = [[] for _ in range(instance.n)]
    everyone = list(range(instance.n))
    for s, e in zip(marks, marks[1:]):
        _share(raw, s, e, everyone)
    return _finish("ww", instance, raw, oracle, marks)


def run_mww(instance: CakeInstance) -> MechanismResult:
    """Modified Wang-Wu: each segment is shared only among agents who value it."""
    oracle = Oracle(instance)
    structures = [oracle.recover_structure(i) for i in range(instance.n)]
    marks = _marks(structures)
    raw: list[list[tuple[float, float]]] = [[] for _ in range(instance.n)]
    for s, e in zip(marks, marks[1:]):
        interested = [i for i, (l, _, r) in enumerate(structures) if min(e, r) - max(s, l) > MARK_MERGE]
        if not interested:
            if not instance.waste_tolerant:
                raise EmptySegment(f"nobody values [{s}, {e}]")
            # worthless to everyone, so any split keeps envy-freeness
            interested = list(range(instance.n))
        _share(raw, s, e, interested)
    return _finish("mww", instance, raw, oracle, marks)


def _require(instance: CakeInstance, *, slope: bool = True, cover: bool = True, peaks: bool = False) -> None:
    if slope and not instance.common_slope:
        raise PrereqViolated("agents do not share a common slope")
    if cover and not instance.coverage:
        raise PrereqViolated("agents' supports do not cover the cake")
    if peaks and not instance.distinct_peaks:
        raise EqualPeaks("two agents share a peak")


def run_ll(instance: CakeInstance) -> MechanismResult:
    """Leftmost leaves: agents in peak order each take a fair share of what remains."""
    _require(instance)
    oracle = Oracle(instance)
    structures = [oracle.recover_structure(i) for i in range(instance.n)]
    order = sorted(range(instance.n), key=lambda i: (structures[i][1], i))
    n = instance.n
    raw: list[list[tuple[float, float]]] = [[] for _ in range(n)]
    cuts = []
    prev = 0.0
    for rank, agent in enumerate(order[:-1]):
        remaining = oracle.rw_eval(agent, prev, 1.0)
        c = oracle.rw_cut(agent, prev, remaining / (n - rank))
        c = max(c, structures[order[rank + 1]][0])
        raw[agent].append((prev, c))
        cuts.append(c)
        prev = c
    raw[order[-1]].append((prev, 1.0))
    return _finish("ll", instance, raw, oracle, cuts)


def utilitarian_cuts(peaks: list[float], heights: list[float], slope: float) -> list[float]:
    """Crossing points of consecutive densities (sorted by peak) sharing ``slope``."""
    cuts = []
    for i in range(len(peaks) - 1):
        c = (heights[i] - heights[i + 1]) / (2.0 * slope) + (peaks[i] + peaks[i + 1]) / 2.0
        c = min(max(c, peaks[i]), peaks[i + 1])
        if cuts:
            c = max(c, cuts[-1])
        cuts.append(c)
    return cuts


def run_um(instance: CakeInstance) -> MechanismResult:
    """Utilitarian mechanism for common slopes: cut where neighbouring densities cross."""
    _require(instance, peaks=True)
    oracle = Oracle(instance)
    recovered = [oracle.recover_valuation(i) for i in range(instance.n)]
    order = sorted(range(instance.n), key=lambda i: (recovered[i].peak, i))
    slope = float(np.mean([v.slope for v in recovered]))
    cuts = utilitarian_cuts([recovered[i].peak for i in order], [recovered[i].peak_density for i in order], slope)
    edges = [0.0, *cuts, 1.0]
    raw: list[list[tuple[float, float]]] = [[] for _ in range(instance.n)]
    for rank, agent in enumerate(order):
        raw[agent].append((edges[rank], edges[rank + 1]))
    return _finish("um", instance, raw, oracle, cuts)


def _lines(v: SinglePeakedValuation) -> list[tuple[float, float]]:
    # (intercept, slope) of the rising and falling edges
    return [(v.peak_density - v.slope * v.peak, v.slope), (v.peak_density + v.slope * v.peak, -v.slope)]


def envelope_breakpoints(valuations: list[SinglePeakedValuation]) -> list[float]:
    """Every point where the upper envelope of the densities can change owner or slope."""
    points = {0.0, 1.0}
    lines = []
    for v in valuations:
        points.update((v.left, v.peak, v.right))
        lines.extend(_lines(v))
    for x in range(len(lines)):
        c1, m1 = lines[x]
        for y in range(x + 1, len(lines)):
            c2, m2 = lines[y]
            if m1 != m2:
                t = (c2 - c1) / (m1 - m2)
                if 0.0 < t < 1.0:
                    points.add(t)
    return _marks([sorted(points)])


def run_envelope_um(instance: CakeInstance) -> MechanismResult:
    """Give every envelope cell to an agent whose density is highest there."""
    oracle = Oracle(instance)
    recovered = [oracle.recover_valuation(i) for i in range(instance.n)]
    points = envelope_breakpoints(recovered)
    raw: list[list[tuple[float, float]]] = [[] for _ in range(instance.n)]
    for s, e in zip(points, points[1:]):
        mid = 0.5 * (s + e)
        dens = [v.density(mid) for v in recovered]
        best = max(dens)
        owner = next(i for i, d in enumerate(dens) if d >= best - ARITH_TOL)
        raw[owner].append((s, e))
    return _finish("envelope", instance, raw, oracle, points)


MECHANISMS: dict[str, Callable[[CakeInstance], MechanismResult]] = {
    "ww": run_ww,
    "mww": run_mww,
    "ll": run_ll,
    "um": run_um,
    "envelope": run_envelope_um,
}
