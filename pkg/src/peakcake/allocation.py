"""Pieces, allocations and the fairness audits run on them."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, NamedTuple, Optional, Sequence

import numpy as np

from .errors import InvalidAllocation, ShapeMismatch
from .valuation import AUDIT_TOL, CakeInstance

# pieces shorter than this are dropped, gaps shorter than this are closed
SLIVER = 1e-14


@dataclass(frozen=True, order=True)
class Interval:
    start: float
    end: float

    def __post_init__(self) -> None:
        if not self.start <= self.end:
            raise InvalidAllocation(f"interval [{self.start}, {self.end}] is reversed")
        if self.start < -SLIVER or self.end > 1.0 + SLIVER:
            raise InvalidAllocation(f"interval [{self.start}, {self.end}] leaves the cake")
        object.__setattr__(self, "start", float(min(max(self.start, 0.0), 1.0)))
        object.__setattr__(self, "end", float(min(max(self.end, 0.0), 1.0)))

    @property
    def length(self) -> float:
        return self.end - self.start


Piece = tuple[Interval, ...]


def normalize_piece(intervals: Iterable) -> Piece:
    """Sort, drop zero-length intervals and merge touching ones."""
    items = sorted(iv if isinstance(iv, Interval) else Interval(*iv) for iv in intervals)
    out: list[Interval] = []
    for iv in items:
        if iv.length <= SLIVER:
            continue
        if out and iv.start <= out[-1].end + SLIVER:
            last = out.pop()
            iv = Interval(last.start, max(last.end, iv.end))
        out.append(iv)
    return tuple(out)


@dataclass(frozen=True)
class Allocation:
    """One piece per agent; together the pieces partition ``[0, 1]``.

    Ownership of shared endpoints is immaterial (zero measure), so pieces
    are stored as closed intervals and only overlaps of positive length
    count as conflicts.
    """

    pieces: tuple[Piece, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "pieces", tuple(normalize_piece(p) for p in self.pieces))
        self.validate()

    @classmethod
    def from_lists(cls, lists: Sequence[Sequence[Sequence[float]]]) -> "Allocation":
        return cls(tuple(tuple(Interval(float(s), float(e)) for s, e in piece) for piece in lists))

    @property
    def n(self) -> int:
        return len(self.pieces)

    def to_lists(self) -> list[list[list[float]]]:
        return [[[iv.start, iv.end] for iv in piece] for piece in self.pieces]

    def runs(self) -> list[tuple[float, float, int]]:
        """All intervals as ``(start, end, owner)``, left to right."""
        return sorted((iv.start, iv.end, i) for i, piece in enumerate(self.pieces) for iv in piece)

    def validate(self, tol: float = AUDIT_TOL) -> None:
        reach = 0.0
        for start, end, owner in self.runs():
            if start > reach + tol:
                raise InvalidAllocation(f"[{reach}, {start}] is allocated to nobody")
            if start < reach - tol:
                raise InvalidAllocation(f"agent {owner}'s interval starting at {start} overlaps another piece")
            reach = end
        if reach < 1.0 - tol:
            raise InvalidAllocation(f"[{reach}, 1] is allocated to nobody")


def normalize_allocation(pieces) -> Allocation:
    if isinstance(pieces, Allocation):
        return Allocation(pieces.pieces)
    return Allocation(tuple(tuple(iv if isinstance(iv, Interval) else Interval(*iv) for iv in p) for p in pieces))


def piece_value(instance: CakeInstance, agent: int, piece: Piece) -> float:
    v = instance.agents[agent]
    return sum(v.eval(iv.start, iv.end) for iv in piece)


def _check_shape(instance: CakeInstance, allocation: Allocation) -> None:
    if instance.n != allocation.n:
        raise ShapeMismatch(f"instance has {instance.n} agents, allocation has {allocation.n} pieces")


def value_matrix(instance: CakeInstance, allocation: Allocation) -> np.ndarray:
    """``M[i, j]``: agent i's value for agent j's piece."""
    _check_shape(instance, allocation)
    n = instance.n
    m = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            m[i, j] = piece_value(instance, i, allocation.pieces[j])
    return m


def utilities(instance: CakeInstance, allocation: Allocation) -> np.ndarray:
    _check_shape(instance, allocation)
    return np.array([piece_value(instance, i, allocation.pieces[i]) for i in range(instance.n)])


@dataclass(frozen=True)
class AuditReport:
    check: str
    passed: bool
    tolerance: float
    witness: Optional[tuple] = None

    def describe(self) -> str:
        if self.passed:
            return f"{self.check}: pass"
        if self.check == "envy-free":
            i, j, own, other = self.witness
            return f"{self.check}: FAIL agent {i} values agent {j}'s piece at {other:.12g} > own {own:.12g}"
        i, own = self.witness
        return f"{self.check}: FAIL agent {i} gets {own:.12g}"


def audit_envy_free(instance: CakeInstance, allocation: Allocation, eps: float = AUDIT_TOL) -> AuditReport:
    m = value_matrix(instance, allocation)
    envy = m - np.diag(m)[:, None]
    np.fill_diagonal(envy, -np.inf)
    if instance.n == 1 or envy.max() <= eps:
        return AuditReport("envy-free", True, eps)
    i, j = np.unravel_index(int(np.argmax(envy)), envy.shape)
    return AuditReport("envy-free", False, eps, (int(i), int(j), float(m[i, i]), float(m[i, j])))


def audit_proportional(instance: CakeInstance, allocation: Allocation, eps: float = AUDIT_TOL) -> AuditReport:
    own = utilities(instance, allocation)
    i = int(np.argmin(own))
    if own[i] >= 1.0 / instance.n - eps:
        return AuditReport("proportional", True, eps)
    return AuditReport("proportional", False, eps, (i, float(own[i])))


class StructureFlags(NamedTuple):
    connected: bool
    peak_preserving: bool
    non_wasteful: bool


def wasteful_parts(instance: CakeInstance, allocation: Allocation, tol: float = AUDIT_TOL) -> list[tuple[int, Interval]]:
    """Parts of each agent's piece lying outside that agent's support."""
    _check_shape(instance, allocation)
    out = []
    for i, piece in enumerate(allocation.pieces):
        lo, hi = instance.agents[i].support
        for iv in piece:
            if iv.start < lo - tol:
                out.append((i, Interval(iv.start, min(iv.end, lo))))
            if iv.end > hi + tol:
                out.append((i, Interval(max(iv.start, hi), iv.end)))
    return out


def merged_runs(allocation: Allocation) -> list[tuple[float, float, int]]:
    """Left-to-right runs with touching same-owner intervals merged."""
    out: list[tuple[float, float, int]] = []
    for start, end, owner in allocation.runs():
        if out and out[-1][2] == owner:
            out[-1] = (out[-1][0], end, owner)
        else:
            out.append((start, end, owner))
    return out


def peak_inversions(instance: CakeInstance, allocation: Allocation) -> list[tuple[int, int, Interval, Interval]]:
    """Adjacent runs ``[a, b]`` held by j then ``(b, c]`` held by i with ``p_i < p_j``.

    Returned as ``(i, j, left_interval, right_interval)``.  An allocation
    with distinct peaks is peak-preserving exactly when this is empty.
    """
    peaks = [v.peak for v in instance.agents]
    runs = merged_runs(allocation)
    out = []
    for (a, b, j), (_, c, i) in zip(runs, runs[1:]):
        if peaks[i] < peaks[j]:
            out.append((i, j, Interval(a, b), Interval(b, c)))
    return out


def inversion_count(instance: CakeInstance, allocation: Allocation) -> int:
    """Pairs of runs (not necessarily adjacent) whose owners appear out of peak order."""
    rank = {a: r for r, a in enumerate(instance.peak_order())}
    owners = [rank[o] for _, _, o in merged_runs(allocation)]
    return sum(1 for x in range(len(owners)) for y in range(x + 1, len(owners)) if owners[x] > owners[y])


def structure_flags(instance: CakeInstance, allocation: Allocation, tol: float = AUDIT_TOL) -> StructureFlags:
    _check_shape(instance, allocation)
    connected = all(len(p) <= 1 for p in allocation.pieces)
    order = [o for _, _, o in merged_runs(allocation)]
    ranks = {a: r for r, a in enumerate(instance.peak_order())}
    peak_preserving = connected and all(ranks[x] < ranks[y] for x, y in zip(order, order[1:]))
    non_wasteful = not wasteful_parts(instance, allocation, tol)
    return StructureFlags(connected, peak_preserving, non_wasteful)
