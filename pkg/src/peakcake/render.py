"""Deterministic SVG drawings of densities and allocations."""
from __future__ import annotations

from typing import Optional

from .allocation import Allocation
from .valuation import CakeInstance, SinglePeakedValuation

WIDTH, HEIGHT = 640, 320
MARGIN = 40

# agents 0, 1, 2 are grey, white and black; later agents cycle through the rest
FILLS = ("#9a9a9a", "#ffffff", "#000000", "#4c72b0", "#dd8452", "#55a868", "#c44e52", "#8172b3")


def _num(x: float) -> str:
    return f"{x:.12g}"


class _Frame:
    def __init__(self, top: float) -> None:
        self.top = top

    def x(self, t: float) -> float:
        return MARGIN + t * (WIDTH - 2 * MARGIN)

    def y(self, d: float) -> float:
        return HEIGHT - MARGIN - d / self.top * (HEIGHT - 2 * MARGIN)

    def pt(self, t: float, d: float) -> str:
        return f"{_num(self.x(t))},{_num(self.y(d))}"


def _outline(v: SinglePeakedValuation) -> list[tuple[float, float]]:
    xs = [v.left, v.peak, v.right]
    pts = [(x, v.density(x)) for x in xs]
    return [(v.left, 0.0), *pts, (v.right, 0.0)]


def _region(v: SinglePeakedValuation, s: float, e: float) -> list[tuple[float, float]]:
    xs = [s] + ([v.peak] if s < v.peak < e else []) + [e]
    return [(s, 0.0), *((x, v.density(x)) for x in xs), (e, 0.0)]


def render_svg(instance: CakeInstance, allocation: Optional[Allocation] = None) -> str:
    """SVG 1.1 document; identical inputs give identical bytes."""
    top = max(v.peak_density for v in instance.agents) * 1.05
    f = _Frame(top)
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="#f4f4f4"/>',
    ]
    if allocation is not None:
        out.append('<g id="pieces" stroke="#000000" stroke-width="0.5">')
        for agent, piece in enumerate(allocation.pieces):
            fill = FILLS[agent % len(FILLS)]
            v = instance.agents[agent]
            for iv in piece:
                pts = " ".join(f.pt(t, d) for t, d in _region(v, iv.start, iv.end))
                out.append(f'<polygon class="agent-{agent}" fill="{fill}" points="{pts}"/>')
        out.append("</g>")
    out.append('<g id="densities" fill="none" stroke="#333333" stroke-width="1">')
    for agent, v in enumerate(instance.agents):
        pts = " ".join(f.pt(t, d) for t, d in _outline(v))
        out.append(f'<polyline class="density-{agent}" points="{pts}"/>')
    out.append("</g>")
    y0 = _num(f.y(0.0))
    out.append(f'<line x1="{_num(f.x(0.0))}" y1="{y0}" x2="{_num(f.x(1.0))}" y2="{y0}" stroke="#000000"/>')
    for t, label in ((0.0, "0"), (1.0, "1")):
        out.append(f'<text x="{_num(f.x(t))}" y="{_num(f.y(0.0) + 16)}" font-size="12" text-anchor="middle">{label}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
