"""Pareto optimality: a structural test, a constructive improvement step,
an independent LP check, and welfare summaries.

With a common slope an allocation is Pareto optimal exactly when it is
non-wasteful and peak-preserving.  ``audit_pareto_sp`` decides that
structurally; ``dominance_oracle`` checks the same question numerically by
solving a small LP over a grid, sharing no code with the structural test.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import linprog

from .allocation import (
    Allocation,
    Interval,
    merged_runs,
    peak_inversions,
    structure_flags,
    utilities,
    wasteful_parts,
)
from .errors import PrereqViolated, SolverFailure
from .valuation import ARITH_TOL, AUDIT_TOL, CakeInstance

PO = "PO"
NOT_PO = "NotPO"
INAPPLICABLE = "Inapplicable"

LP_SLACK_THRESHOLD = 1e-7


@dataclass(frozen=True)
class ParetoVerdict:
    verdict: str
    witness: Optional[tuple] = None
    reasons: tuple[str, ...] = ()

    @property
    def is_po(self) -> bool:
        return self.verdict == PO

    def describe(self) -> str:
        if self.verdict == PO:
            return "pareto: PO"
        if self.verdict == INAPPLICABLE:
            return "pareto: inapplicable (" + ", ".join(self.reasons) + ")"
        kind = self.witness[0]
        if kind == "wasteful":
            _, agent, iv = self.witness
            return f"pareto: NOT PO, agent {agent} holds [{iv.start:.12g}, {iv.end:.12g}] outside its support"
        _, i, j, left, right = self.witness
        return (
            f"pareto: NOT PO, agent {j} holds [{left.start:.12g}, {left.end:.12g}] left of "
            f"agent {i}'s [{right.start:.12g}, {right.end:.12g}] although agent {i}'s peak is smaller"
        )


def applicability(instance: CakeInstance) -> tuple[str, ...]:
    reasons = []
    if not instance.common_slope:
        reasons.append("slopes differ")
    if not instance.distinct_peaks:
        reasons.append("peaks coincide")
    if not instance.coverage:
        reasons.append("supports do not cover the cake")
    return tuple(reasons)


def audit_pareto_sp(instance: CakeInstance, allocation: Allocation, tol: float = AUDIT_TOL) -> ParetoVerdict:
    reasons = applicability(instance)
    if reasons:
        return ParetoVerdict(INAPPLICABLE, reasons=reasons)
    waste = wasteful_parts(instance, allocation, tol)
    if waste:
        agent, iv = waste[0]
        return ParetoVerdict(NOT_PO, ("wasteful", agent, iv))
    inversions = peak_inversions(instance, allocation)
    if inversions:
        return ParetoVerdict(NOT_PO, ("order", *inversions[0]))
    flags = structure_flags(instance, allocation, tol)
    assert all(flags), flags
    return ParetoVerdict(PO)


def _subtract(piece, start: float, end: float) -> list[tuple[float, float]]:
    """``piece`` (pairs) minus the interval ``[start, end]``."""
    out = []
    for s, e in piece:
        if e <= start or s >= end:
            out.append((s, e))
            continue
        if s < start:
            out.append((s, start))
        if e > end:
            out.append((end, e))
    return out


def _raw(allocation: Allocation) -> list[list[tuple[float, float]]]:
    return [[(x.start, x.end) for x in p] for p in allocation.pieces]


def _rebuild(pieces: list[list[tuple[float, float]]]) -> Allocation:
    return Allocation(tuple(tuple(Interval(s, e) for s, e in p if e > s) for p in pieces))


def _reassign_waste(instance: CakeInstance, allocation: Allocation, agent: int, iv: Interval) -> Optional[Allocation]:
    """Give each part of ``iv`` to the agent who values it most (nobody loses, someone gains)."""
    cuts = {iv.start, iv.end}
    for v in instance.agents:
        cuts.update(x for x in v.support if iv.start < x < iv.end)
    edges = sorted(cuts)
    pieces = _raw(allocation)
    moved = False
    for s, e in zip(edges, edges[1:]):
        dens = [v.density(0.5 * (s + e)) for v in instance.agents]
        best = max(dens)
        if best <= 0.0:
            continue
        taker = next(m for m, d in enumerate(dens) if d >= best - ARITH_TOL)
        pieces[agent] = _subtract(pieces[agent], s, e)
        pieces[taker].append((s, e))
        moved = True
    return _rebuild(pieces) if moved else None


def _swap(instance: CakeInstance, allocation: Allocation, i: int, j: int, left: Interval, right: Interval) -> Optional[Allocation]:
    """Hand ``[a, c]`` back so that i (smaller peak) sits left of j.

    The split point keeps one agent exactly indifferent: j when ``c`` lies
    left of j's peak, otherwise i.
    """
    vi, vj = instance.agents[i], instance.agents[j]
    a, b, c = left.start, left.end, right.end
    if c <= vj.peak:
        # j keeps the value of [a, b] on [t, c]
        t = vj.cut(a, max(0.0, vj.eval(a, c) - vj.eval(a, b)))
    else:
        # i keeps the value of (b, c] on [a, t)
        t = vi.cut(a, vi.eval(b, c))
    gain_i = vi.eval(a, t) - vi.eval(b, c)
    gain_j = vj.eval(t, c) - vj.eval(a, b)
    if min(gain_i, gain_j) < -ARITH_TOL or max(gain_i, gain_j) <= ARITH_TOL:
        return None
    pieces = _raw(allocation)
    pieces[i] = _subtract(pieces[i], b, c) + [(a, t)]
    pieces[j] = _subtract(pieces[j], a, b) + [(t, c)]
    return _rebuild(pieces)


def find_improvement_exchange(instance: CakeInstance, allocation: Allocation) -> Optional[Allocation]:
    """One Pareto-improving exchange, or ``None`` if the allocation is Pareto optimal."""
    if not instance.common_slope:
        raise PrereqViolated("the exchange argument needs a common slope")
    if not instance.distinct_peaks:
        raise PrereqViolated("the exchange argument needs distinct peaks")
    for agent, iv in wasteful_parts(instance, allocation):
        out = _reassign_waste(instance, allocation, agent, iv)
        if out is not None:
            return out
    for i, j, left, right in peak_inversions(instance, allocation):
        out = _swap(instance, allocation, i, j, left, right)
        if out is not None:
            return out
    return None


def waste_components(instance: CakeInstance, allocation: Allocation) -> int:
    return len(wasteful_parts(instance, allocation))


def improve_to_pareto(instance: CakeInstance, allocation: Allocation, max_steps: int = 10_000) -> tuple[Allocation, int]:
    """Apply exchanges until none is left; returns the final allocation and the step count."""
    steps = 0
    while steps < max_steps:
        nxt = find_improvement_exchange(instance, allocation)
        if nxt is None:
            return allocation, steps
        allocation = nxt
        steps += 1
    raise RuntimeError(f"no fixed point after {max_steps} exchanges")


def exchange_step_bound(instance: CakeInstance, allocation: Allocation) -> int:
    """Upper bound on the exchanges ``improve_to_pareto`` performs.

    Each waste move removes one wasteful piece but may split it at up to 2n
    support endpoints, adding runs. Swaps never create waste and remove at
    least one out-of-order pair of runs, so every pair of the enlarged run
    list is paid for at most once.
    """
    w = waste_components(instance, allocation)
    runs = len(merged_runs(allocation)) + 2 * instance.n * w
    return w + runs * (runs - 1) // 2


@dataclass(frozen=True)
class DominanceResult:
    slack: float
    gains: np.ndarray
    assignment: np.ndarray = field(repr=False)
    edges: np.ndarray = field(repr=False)
    values: np.ndarray = field(repr=False)

    @property
    def utilities(self) -> np.ndarray:
        return (self.assignment * self.values).sum(axis=1)


def dominance_grid(instance: CakeInstance, allocation: Allocation, grid_cells: int) -> np.ndarray:
    points = set(np.linspace(0.0, 1.0, grid_cells + 1).tolist())
    for s, e, _ in allocation.runs():
        points.update((s, e))
    for v in instance.agents:
        points.update((v.left, v.peak, v.right))
    edges = [0.0]
    for x in sorted(points)[1:]:
        if x - edges[-1] > 1e-12:
            edges.append(x)
    edges[-1] = 1.0
    return np.array(edges)


def solve_dominance_lp(instance: CakeInstance, allocation: Allocation, grid_cells: int = 64) -> DominanceResult:
    """Maximise total slack of a fractional cell assignment that leaves nobody worse off."""
    n = instance.n
    if grid_cells < n:
        raise ValueError(f"need at least {n} cells, got {grid_cells}")
    edges = dominance_grid(instance, allocation, grid_cells)
    cells = len(edges) - 1
    values = np.array([[v.eval(edges[c], edges[c + 1]) for c in range(cells)] for v in instance.agents])
    base = utilities(instance, allocation)

    nz = n * cells
    cost = np.concatenate([np.zeros(nz), -np.ones(n)])
    a_eq = np.zeros((cells, nz + n))
    for c in range(cells):
        a_eq[c, [i * cells + c for i in range(n)]] = 1.0
    a_ub = np.zeros((n, nz + n))
    for i in range(n):
        a_ub[i, i * cells:(i + 1) * cells] = -values[i]
        a_ub[i, nz + i] = 1.0
    bounds = [(0.0, 1.0)] * nz + [(0.0, None)] * n
    res = linprog(cost, A_ub=a_ub, b_ub=-base, A_eq=a_eq, b_eq=np.ones(cells), bounds=bounds, method="highs")
    if res.status != 0:
        raise SolverFailure(f"LP solver stopped with status {res.status}: {res.message}")
    z = res.x[:nz].reshape(n, cells)
    gains = res.x[nz:]
    return DominanceResult(float(gains.sum()), gains, z, edges, values)


def dominance_oracle(instance: CakeInstance, allocation: Allocation, grid_cells: int = 64) -> Optional[DominanceResult]:
    """A dominating fractional assignment on the grid, or ``None`` if none gains more than the threshold."""
    if instance.n == 1:
        return None
    res = solve_dominance_lp(instance, allocation, grid_cells)
    return res if res.slack > LP_SLACK_THRESHOLD else None


@dataclass(frozen=True)
class WelfareMetrics:
    utilities: tuple[float, ...]
    total: float
    average: float
    minimum: float


def welfare_metrics(instance: CakeInstance, allocation: Allocation) -> WelfareMetrics:
    u = utilities(instance, allocation)
    return WelfareMetrics(tuple(float(x) for x in u), float(u.sum()), float(u.mean()), float(u.min()))
