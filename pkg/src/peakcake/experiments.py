"""Instance generators, the welfare-loss curve and the mechanism comparison table."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .allocation import Allocation, Interval, audit_envy_free, audit_proportional
from .efficiency import audit_pareto_sp, welfare_metrics
from .errors import CakeError, DomainError, GenerationFailed, PrereqViolated
from .mechanisms import MECHANISMS, MechanismResult
from .valuation import AUDIT_TOL, CakeInstance, from_peak_density, from_peak_slope

MAX_REJECTIONS = 1000
DENSITY_RANGE = (1.05, 6.0)
COMPARED = ("ww", "mww", "ll", "um")


def disjoint_support_instance(n: int) -> CakeInstance:
    """n agents whose supports tile the cake: agent i wants exactly [i/n, (i+1)/n]."""
    if n < 2:
        raise DomainError(f"need at least two agents, got {n}")
    k = 4.0 * n * n
    return CakeInstance(tuple(from_peak_slope((2 * i + 1) / (2 * n), k) for i in range(n)))


def figure1_instance() -> CakeInstance:
    return disjoint_support_instance(3)


def figure3_instance() -> CakeInstance:
    """Three agents with height 3 and peaks 1/3, 1/2, 2/3."""
    return CakeInstance(tuple(from_peak_density(p, 3.0) for p in (1 / 3, 1 / 2, 2 / 3)))


def figdisc_instance() -> CakeInstance:
    """Two agents with unequal slopes; the narrow one sits inside the wide one's support."""
    wide = from_peak_density(0.5, 2.0)
    narrow = from_peak_density(7 / 12, 12.0)
    return CakeInstance((wide, narrow))


def support_allocation(instance: CakeInstance) -> Allocation:
    """Each agent gets its own support (only valid when supports tile the cake)."""
    return Allocation(tuple((Interval(*v.support),) for v in instance.agents))


def _stratified_peaks(rng: np.random.Generator, n: int) -> np.ndarray:
    return (np.arange(n) + rng.uniform(0.1, 0.9, size=n)) / n


def random_instance(n: int, seed: int, common_slope: bool) -> CakeInstance:
    """Seeded instance with distinct peaks whose supports cover the cake.

    Peaks are jittered inside ``n`` equal strata.  Heights are drawn from
    ``DENSITY_RANGE`` (or one shared slope when ``common_slope``) and draws
    that leave a gap are rejected.
    """
    if n < 1:
        raise DomainError(f"need at least one agent, got {n}")
    rng = np.random.default_rng(seed)
    k_hi = min(float(n * n), 36.0)
    for _ in range(MAX_REJECTIONS):
        peaks = _stratified_peaks(rng, n)
        if common_slope:
            k = float(rng.uniform(0.5, max(k_hi, 1.0)))
            agents = tuple(from_peak_slope(float(p), k) for p in peaks)
            if any(v.peak_density < DENSITY_RANGE[0] for v in agents):
                continue
        else:
            hs = rng.uniform(*DENSITY_RANGE, size=n)
            agents = tuple(from_peak_density(float(p), float(h)) for p, h in zip(peaks, hs))
        inst = CakeInstance(agents, waste_tolerant=True)
        if inst.coverage and inst.distinct_peaks:
            return CakeInstance(agents)
    raise GenerationFailed(f"no covering instance for n={n}, seed={seed} after {MAX_REJECTIONS} draws")


@dataclass(frozen=True)
class WelfareLossRow:
    n: int
    t_po: float
    t_ww: float
    wl: float


def welfare_loss(instance: CakeInstance, po_allocation: Allocation, ww_allocation: Optional[Allocation] = None) -> float:
    """Average utility under a Pareto optimal allocation minus the average under WW."""
    verdict = audit_pareto_sp(instance, po_allocation)
    if not verdict.is_po:
        raise PrereqViolated(f"benchmark allocation is not Pareto optimal: {verdict.describe()}")
    if ww_allocation is None:
        ww_allocation = MECHANISMS["ww"](instance).allocation
    return welfare_metrics(instance, po_allocation).average - welfare_metrics(instance, ww_allocation).average


def welfare_loss_curve(n_min: int, n_max: int) -> list[WelfareLossRow]:
    if not 2 <= n_min <= n_max:
        raise DomainError(f"need 2 <= n_min <= n_max, got {n_min}, {n_max}")
    rows = []
    for n in range(n_min, n_max + 1):
        inst = disjoint_support_instance(n)
        po = support_allocation(inst)
        ww = MECHANISMS["ww"](inst).allocation
        t_po = welfare_metrics(inst, po).average
        t_ww = welfare_metrics(inst, ww).average
        rows.append(WelfareLossRow(n, t_po, t_ww, welfare_loss(inst, po, ww)))
    return rows


def welfare_loss_csv(rows: Sequence[WelfareLossRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["n", "T_PO", "T_WW", "WL"])
    for r in rows:
        w.writerow([r.n, repr(r.t_po), repr(r.t_ww), repr(r.wl)])
    return buf.getvalue()


def dominates(u: Sequence[float], v: Sequence[float], tol: float = AUDIT_TOL) -> bool:
    """Componentwise at least as good, strictly better somewhere."""
    d = np.asarray(u) - np.asarray(v)
    return bool(np.all(d >= -tol) and np.any(d > tol))


@dataclass(frozen=True)
class ComparisonRow:
    mechanism: str
    applicable: bool
    reason: str = ""
    utilities: tuple[float, ...] = ()
    total: float = float("nan")
    envy_free: Optional[bool] = None
    proportional: Optional[bool] = None
    pareto: str = ""
    cut_queries: int = 0
    eval_queries: int = 0
    allocation: Optional[Allocation] = field(default=None, repr=False)


@dataclass(frozen=True)
class ComparisonTable:
    rows: tuple[ComparisonRow, ...]
    dominance: dict[tuple[str, str], bool]

    def row(self, mechanism: str) -> ComparisonRow:
        for r in self.rows:
            if r.mechanism == mechanism:
                return r
        raise KeyError(mechanism)

    def dominates_ww(self, mechanism: str) -> Optional[bool]:
        return self.dominance.get((mechanism, "ww"))

    def max_sum(self, mechanism: str, tol: float = AUDIT_TOL) -> Optional[bool]:
        r = self.row(mechanism)
        if not r.applicable:
            return None
        return r.total >= max(x.total for x in self.rows if x.applicable) - tol

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["mechanism", "applicable", "utilities", "sum", "envy_free", "proportional", "pareto",
                    "cut_queries", "eval_queries", "dominates_ww", "max_sum", "note"])
        for r in self.rows:
            if not r.applicable:
                w.writerow([r.mechanism, "no", "", "", "", "", "", "", "", "", "", r.reason])
                continue
            w.writerow([
                r.mechanism, "yes", " ".join(f"{u:.12g}" for u in r.utilities), f"{r.total:.12g}",
                _yn(r.envy_free), _yn(r.proportional), r.pareto, r.cut_queries, r.eval_queries,
                _yn(self.dominates_ww(r.mechanism)), _yn(self.max_sum(r.mechanism)), "",
            ])
        return buf.getvalue()

    def format(self) -> str:
        lines = [f"{'mech':<6} {'utilities':<36} {'sum':>8} {'EF':>3} {'prop':>4} {'PO':>12} {'cut':>4} {'eval':>4} {'domWW':>5} {'max':>4}"]
        for r in self.rows:
            if not r.applicable:
                lines.append(f"{r.mechanism:<6} inapplicable: {r.reason}")
                continue
            utils = " ".join(f"{u:.6f}" for u in r.utilities)
            lines.append(
                f"{r.mechanism:<6} {utils:<36} {r.total:>8.6f} {_yn(r.envy_free):>3} {_yn(r.proportional):>4} "
                f"{r.pareto:>12} {r.cut_queries:>4} {r.eval_queries:>4} "
                f"{_yn(self.dominates_ww(r.mechanism)):>5} {_yn(self.max_sum(r.mechanism)):>4}"
            )
        return "\n".join(lines)


def _yn(flag: Optional[bool]) -> str:
    if flag is None:
        return "-"
    return "yes" if flag else "no"


def _audit_row(name: str, instance: CakeInstance, result: MechanismResult) -> ComparisonRow:
    alloc = result.allocation
    return ComparisonRow(
        mechanism=name,
        applicable=True,
        utilities=result.utilities,
        total=result.total,
        envy_free=audit_envy_free(instance, alloc).passed,
        proportional=audit_proportional(instance, alloc).passed,
        pareto=audit_pareto_sp(instance, alloc).verdict,
        cut_queries=result.log.cut_count,
        eval_queries=result.log.eval_count,
        allocation=alloc,
    )


def compare_mechanisms(instance: CakeInstance, mechanisms: Sequence[str] = COMPARED) -> ComparisonTable:
    """Run each mechanism, audit its output and record pairwise dominance."""
    rows = []
    for name in mechanisms:
        try:
            result = MECHANISMS[name](instance)
        except (PrereqViolated, CakeError) as exc:
            rows.append(ComparisonRow(name, False, reason=f"{type(exc).__name__}: {exc}"))
            continue
        rows.append(_audit_row(name, instance, result))
    dom = {}
    for a in rows:
        for b in rows:
            if a is not b and a.applicable and b.applicable:
                dom[(a.mechanism, b.mechanism)] = dominates(a.utilities, b.utilities)
    return ComparisonTable(tuple(rows), dom)
