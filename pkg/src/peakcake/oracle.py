"""Robertson-Webb query access to an instance, with a query log.

Mechanisms never touch valuation parameters; they see agents only through
``rw_eval`` and ``rw_cut``.  Each agent's triangle is pinned down by two
free parameters, so two cut queries suffice to reconstruct it: we ask for
the points holding 1/4 and 3/4 of the agent's value and invert.

The inversion writes the clipped triangle with virtual feet ``a < b`` and
slope ``k``, scales by ``u = sqrt(k/2)`` (so ``A = u*a`` and ``B = u*b``),
and enumerates which branch each quantile sits on and which sides are
clipped by the cake.  Every case reduces to a polynomial in ``u`` or to a
2x2 linear system.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import RecoveryAmbiguous, RecoveryError
from .valuation import CakeInstance, SinglePeakedValuation

LOW_Q = 0.25
HIGH_Q = 0.75
_CASE_TOL = 1e-9
_MAX_SPAN = 1e4
_EDGE_SNAP = 1e-6
_EDGE_FIT_TOL = 1e-13


@dataclass(frozen=True)
class Query:
    agent: int
    kind: str
    args: tuple[float, ...]
    answer: float


@dataclass
class QueryLog:
    transcript: list[Query] = field(default_factory=list)

    @property
    def eval_count(self) -> int:
        return sum(1 for q in self.transcript if q.kind == "eval")

    @property
    def cut_count(self) -> int:
        return sum(1 for q in self.transcript if q.kind == "cut")

    def record(self, agent: int, kind: str, args: tuple[float, ...], answer: float) -> None:
        self.transcript.append(Query(agent, kind, args, answer))

    def to_text(self) -> str:
        lines = ["# agent\tkind\targs\tanswer"]
        for q in self.transcript:
            args = " ".join(repr(float(a)) for a in q.args)
            lines.append(f"{q.agent}\t{q.kind}\t{args}\t{float(q.answer)!r}")
        return "\n".join(lines) + "\n"

    def write(self, path: str | Path) -> None:
        Path(path).write_text(self.to_text())


# polynomials are coefficient lists, lowest degree first
def _pmul(p: list[float], q: list[float]) -> list[float]:
    out = [0.0] * (len(p) + len(q) - 1)
    for i, x in enumerate(p):
        for j, y in enumerate(q):
            out[i + j] += x * y
    return out


def _padd(p: list[float], q: list[float], scale: float = 1.0) -> list[float]:
    out = [0.0] * max(len(p), len(q))
    for i, x in enumerate(p):
        out[i] += x
    for i, y in enumerate(q):
        out[i] += scale * y
    return out


def _peval(p: list[float], x: float) -> float:
    acc = 0.0
    for c in reversed(p):
        acc = acc * x + c
    return acc


def _rational_asc(y: float, mass: float, clipped: bool) -> tuple[list[float], list[float]]:
    """``A(u)`` as numerator/denominator from ``F(y) = mass`` on the rising branch."""
    if clipped:
        # u^2 y^2 - 2 y u A = mass
        return [-mass, 0.0, y * y], [0.0, 2.0 * y]
    # u (y - a) = sqrt(mass)
    return [-math.sqrt(mass), y], [1.0]


def _rational_desc(y: float, tail: float, clipped: bool) -> tuple[list[float], list[float]]:
    """``B(u)`` from ``1 - F(y) = tail`` on the falling branch."""
    if clipped:
        # (1 - y)(2 u B - u^2 (1 + y)) = tail
        return [tail / (1.0 - y), 0.0, 1.0 + y], [0.0, 2.0]
    return [math.sqrt(tail), y], [1.0]


def _positive_real_roots(poly: list[float]) -> list[float]:
    coeffs = list(poly)
    while coeffs and coeffs[-1] == 0.0:
        coeffs.pop()
    if len(coeffs) < 2:
        return []
    out = []
    for r in np.roots(coeffs[::-1]):
        if abs(r.imag) <= 1e-7 * max(1.0, abs(r.real)) and r.real > 0:
            out.append(float(r.real))
    return out


def _split_candidates(y1: float, y2: float) -> list[tuple]:
    """Candidates with the low quantile on the rising branch and the high one on the falling branch."""
    out = []
    for lclip in (False, True):
        for rclip in (False, True):
            if lclip and y1 <= 0 or rclip and y2 >= 1:
                continue
            na, da = _rational_asc(y1, LOW_Q, lclip)
            nb, db = _rational_desc(y2, 1.0 - HIGH_Q, rclip)
            # (B - A)^2 / 2 - [A^2] - [(B - u)^2] = 1, cleared of denominators
            diff = _padd(_pmul(nb, da), _pmul(na, db), -1.0)
            dd = _pmul(da, db)
            poly = _padd(_pmul(diff, diff), _pmul(dd, dd), -2.0)
            if lclip:
                nadb = _pmul(na, db)
                poly = _padd(poly, _pmul(nadb, nadb), -2.0)
            if rclip:
                edge = _pmul(_padd(nb, _pmul([0.0, 1.0], db), -1.0), da)
                poly = _padd(poly, _pmul(edge, edge), -2.0)
            for root in _positive_real_roots(poly):
                a = _peval(na, root) / _peval(da, root) / root
                b = _peval(nb, root) / _peval(db, root) / root
                out.append((a, b, root, lclip, rclip, "split"))
    return out


def _rising_candidates(y1: float, y2: float) -> list[tuple]:
    """Candidates with both quantiles on the rising branch."""
    out = []
    for lclip in (False, True):
        if lclip:
            if y1 <= 0:
                continue
            mat = np.array([[y1 * y1, -2.0 * y1], [y2 * y2, -2.0 * y2]])
            try:
                usq, c = np.linalg.solve(mat, [LOW_Q, HIGH_Q])
            except np.linalg.LinAlgError:
                continue
            if usq <= 0:
                continue
            u = math.sqrt(usq)
            big_a = c / u
        else:
            u = (math.sqrt(HIGH_Q) - math.sqrt(LOW_Q)) / (y2 - y1)
            big_a = u * y1 - math.sqrt(LOW_Q)
        rest = 1.0 + (big_a * big_a if lclip else 0.0)
        # falling side unclipped
        big_b = big_a + math.sqrt(2.0 * rest)
        out.append((big_a / u, big_b / u, u, lclip, False, "rising"))
        # falling side clipped: B^2 - 2(2u - A)B - A^2 + 2u^2 + 2 rest = 0
        half = 2.0 * u - big_a
        disc = half * half + big_a * big_a - 2.0 * u * u - 2.0 * rest
        # a peak sitting exactly on the far edge gives a double root
        if disc >= -1e-9 * half * half:
            disc = max(disc, 0.0)
            for big_b in (half - math.sqrt(disc), half + math.sqrt(disc)):
                out.append((big_a / u, big_b / u, u, lclip, True, "rising"))
    return out


def _consistent(cand: tuple, y1: float, y2: float) -> bool:
    a, b, u, lclip, rclip, branch = cand
    tol = _CASE_TOL
    # near-zero slopes make the residual check cancel to zero; reject them
    if not (math.isfinite(a) and math.isfinite(b) and u > 0 and 0 < b - a < _MAX_SPAN):
        return False
    p = 0.5 * (a + b)
    if not -tol <= p <= 1 + tol:
        return False
    if lclip != (a < 0) and abs(a) > tol:
        return False
    if rclip != (b > 1) and abs(b - 1) > tol:
        return False
    if not (a - tol <= y1 and y2 <= b + tol):
        return False
    if branch == "split":
        return y1 <= p + tol and p <= y2 + tol
    if branch == "rising":
        return y2 <= p + tol
    return y1 >= p - tol


def _to_valuation(a: float, b: float, u: float) -> SinglePeakedValuation:
    k = 2.0 * u * u
    p = min(1.0, max(0.0, 0.5 * (a + b)))
    return SinglePeakedValuation(p, k * 0.5 * (b - a), k)


def _residuals(v: SinglePeakedValuation, y1: float, y2: float) -> tuple[float, float, float]:
    cdf = v._raw_cdf
    base = cdf(0.0)
    return cdf(y1) - base - LOW_Q, cdf(y2) - base - HIGH_Q, cdf(1.0) - base - 1.0


def _polish(v: SinglePeakedValuation, y1: float, y2: float) -> SinglePeakedValuation:
    """Newton steps on (a, b, k) against the three exact equations."""
    if max(map(abs, _residuals(v, y1, y2))) < 1e-14:
        return v
    x = np.array([v.peak - v.half_width, v.peak + v.half_width, v.slope])

    def build(z):
        a, b, k = z
        return SinglePeakedValuation(0.5 * (a + b), k * 0.5 * (b - a), k)

    for _ in range(4):
        r = np.array(_residuals(build(x), y1, y2))
        if np.max(np.abs(r)) < 1e-15:
            break
        jac = np.empty((3, 3))
        for j in range(3):
            step = 1e-7 * max(1.0, abs(x[j]))
            xp = x.copy()
            xp[j] += step
            jac[:, j] = (np.array(_residuals(build(xp), y1, y2)) - r) / step
        try:
            x = x - np.linalg.solve(jac, r)
        except np.linalg.LinAlgError:
            break
    out = build(x)
    out = SinglePeakedValuation(min(1.0, max(0.0, out.peak)), out.peak_density, out.slope)
    if max(map(abs, _residuals(out, y1, y2))) < max(map(abs, _residuals(v, y1, y2))):
        return out
    return v


def _edge_fit(y1: float, y2: float, at_right: bool) -> Optional[SinglePeakedValuation]:
    """Fit with the peak pinned to 0 (or 1), where F(y) = h y - k y^2 / 2 is linear in (h, k)."""
    t1, t2 = (1.0 - y2, 1.0 - y1) if at_right else (y1, y2)
    try:
        h, k = np.linalg.solve([[t1, -0.5 * t1 * t1], [t2, -0.5 * t2 * t2]], [LOW_Q, HIGH_Q])
    except np.linalg.LinAlgError:
        return None
    if not (k > 0 and h > 1.0):
        return None
    p = 1.0 if at_right else 0.0
    z = np.array([h, k], dtype=float)
    # Gauss-Newton against the unmirrored equations
    for _ in range(3):
        r = np.array(_residuals(SinglePeakedValuation(p, *z), y1, y2))
        jac = np.empty((3, 2))
        for j in range(2):
            zp = z.copy()
            zp[j] += 1e-7 * z[j]
            jac[:, j] = (np.array(_residuals(SinglePeakedValuation(p, *zp), y1, y2)) - r) / (zp[j] - z[j])
        z = z - np.linalg.lstsq(jac, r, rcond=None)[0]
    return SinglePeakedValuation(p, float(z[0]), float(z[1]))


def _snap_to_edge(v: SinglePeakedValuation, y1: float, y2: float) -> SinglePeakedValuation:
    # near an edge the peak is only determined to about sqrt(machine eps);
    # prefer the exact edge model when it fits the data to rounding level
    if min(v.peak, 1.0 - v.peak) > _EDGE_SNAP:
        return v
    w = _edge_fit(y1, y2, at_right=v.peak > 0.5)
    if w is None:
        return v
    if max(map(abs, _residuals(w, y1, y2))) <= _EDGE_FIT_TOL:
        return w
    return v


def valuation_from_quantiles(y1: float, y2: float) -> SinglePeakedValuation:
    """Reconstruct a single-peaked valuation from its 1/4 and 3/4 cut points."""
    if not 0 < y1 < y2 <= 1:
        raise RecoveryError(f"quantile points must satisfy 0 < y1 < y2 <= 1, got {y1}, {y2}")
    cands = _split_candidates(y1, y2)
    cands += _rising_candidates(y1, y2)
    # falling-falling is the mirror image of rising-rising
    for a, b, u, lc, rc, _ in _rising_candidates(1.0 - y2, 1.0 - y1):
        cands.append((1.0 - b, 1.0 - a, u, rc, lc, "falling"))

    found: list[SinglePeakedValuation] = []
    for cand in cands:
        if not _consistent(cand, y1, y2):
            continue
        v = _snap_to_edge(_polish(_to_valuation(*cand[:3]), y1, y2), y1, y2)
        if not (v.slope > 0 and v.peak_density > 1.0):
            continue
        if max(map(abs, _residuals(v, y1, y2))) > 1e-9:
            continue
        if not any(_same(v, w) for w in found):
            found.append(v)
    if not found:
        raise RecoveryError(f"no single-peaked valuation has quantiles ({y1}, {y2})")
    if len(found) > 1:
        raise RecoveryAmbiguous([(v.peak, v.peak_density) for v in found])
    return found[0]


def _same(v: SinglePeakedValuation, w: SinglePeakedValuation) -> bool:
    return (
        abs(v.peak - w.peak) <= 1e-7
        and abs(v.left - w.left) <= 1e-7
        and abs(v.right - w.right) <= 1e-7
        and abs(v.peak_density - w.peak_density) <= 1e-7 * max(1.0, w.peak_density)
    )


class Oracle:
    """Counting Robertson-Webb interface to the agents of one instance.

    One oracle belongs to one mechanism run; its log is append-only.
    """

    def __init__(self, instance: CakeInstance):
        self._agents = instance.agents
        self.n = instance.n
        self.log = QueryLog()

    def rw_eval(self, agent: int, x: float, y: float) -> float:
        answer = self._agents[agent].eval(x, y)
        self.log.record(agent, "eval", (x, y), answer)
        return answer

    def rw_cut(self, agent: int, x: float, target: float) -> float:
        answer = self._agents[agent].cut(x, target)
        self.log.record(agent, "cut", (x, target), answer)
        return answer

    def recover_valuation(self, agent: int) -> SinglePeakedValuation:
        """Reconstruct the agent's full valuation with exactly two cut queries."""
        y1 = self.rw_cut(agent, 0.0, LOW_Q)
        y2 = self.rw_cut(agent, 0.0, HIGH_Q)
        return valuation_from_quantiles(y1, y2)

    def recover_structure(self, agent: int) -> tuple[float, float, float]:
        """``(l, p, r)``: support endpoints and peak, from two cut queries."""
        v = self.recover_valuation(agent)
        return v.left, v.peak, v.right
