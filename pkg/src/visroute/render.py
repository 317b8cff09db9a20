"""Static SVG 1.1 drawings of instances, graphs and routing traces."""

from __future__ import annotations

from typing import Iterable, Sequence
from xml.sax.saxutils import escape

from .instance import Instance

PHASE_COLORS = {"THETA": "#1f77b4", "AVOID": "#ff7f0e", "OPPOSITE": "#9467bd"}

_HEAD = ('<?xml version="1.0" encoding="UTF-8" standalone="no"?>\n'
         '<!DOCTYPE svg PUBLIC "-//W3C//DTD SVG 1.1//EN" '
         '"http://www.w3.org/Graphics/SVG/1.1/DTD/svg11.dtd">\n')


class _Canvas:
    """Maps instance coordinates into a ``width`` wide box, y pointing up."""

    def __init__(self, pts: Sequence[Sequence[int]], width: int, margin: int):
        xs = [p[0] for p in pts] or [0]
        ys = [p[1] for p in pts] or [0]
        self.x0, self.y1 = min(xs), max(ys)
        span_x = max(xs) - self.x0 or 1
        span_y = self.y1 - min(ys) or 1
        self.k = (width - 2 * margin) / max(span_x, span_y)
        self.margin = margin
        self.width = width
        self.height = int(span_y * self.k) + 2 * margin

    def xy(self, p: Sequence[int]) -> tuple[str, str]:
        x = self.margin + (p[0] - self.x0) * self.k
        y = self.margin + (self.y1 - p[1]) * self.k
        return f"{x:.2f}", f"{y:.2f}"


def _line(c: _Canvas, a, b, stroke: str, width: float, extra: str = "") -> str:
    (x1, y1), (x2, y2) = c.xy(a), c.xy(b)
    return (f'<line x1="{x1}" y1="{y1}" x2="{x2}" y2="{y2}" stroke="{stroke}" '
            f'stroke-width="{width}"{extra}/>')


def render_svg(inst: Instance, edges: Iterable[tuple[int, int]] = (), trace: dict | None = None,
               *, width: int = 800, margin: int = 20, labels: bool | None = None,
               title: str | None = None) -> str:
    """SVG text: thin graph edges, thick constraints, points, then the trace.

    ``trace`` is a trace in its JSON form; steps are coloured by the phase of
    the move that reached them.
    """
    pts = inst.points
    c = _Canvas(pts, width, margin)
    if labels is None:
        labels = inst.n <= 60
    out = [_HEAD,
           f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{c.width}" height="{c.height}" '
           f'viewBox="0 0 {c.width} {c.height}">']
    if title:
        out.append(f"<title>{escape(title)}</title>")
    out.append(f'<rect x="0" y="0" width="{c.width}" height="{c.height}" fill="white"/>')

    out.append('<g id="edges">')
    cons = inst.constraint_set()
    for u, v in edges:
        if (min(u, v), max(u, v)) not in cons:
            out.append(_line(c, pts[u], pts[v], "#b0b0b0", 0.6))
    out.append("</g>")

    out.append('<g id="constraints">')
    for u, v in inst.constraints:
        out.append(_line(c, pts[u], pts[v], "black", 2.5, ' stroke-linecap="round"'))
    out.append("</g>")

    out.append('<g id="points">')
    for k, p in enumerate(pts):
        x, y = c.xy(p)
        out.append(f'<circle cx="{x}" cy="{y}" r="2.5" fill="black"/>')
        if labels:
            out.append(f'<text x="{x}" y="{y}" dx="3" dy="-3" font-size="9" font-family="sans-serif">{k}</text>')
    out.append("</g>")

    if trace is not None:
        out.append('<g id="trace">')
        steps = trace.get("steps", [])
        for a, b in zip(steps, steps[1:]):
            color = PHASE_COLORS.get(b.get("phase", "THETA"), "red")
            out.append(_line(c, pts[a["vertex"]], pts[b["vertex"]], color, 2.0,
                             ' stroke-opacity="0.85" stroke-linecap="round"'))
        for key, color in (("source", "#2ca02c"), ("dest", "#d62728")):
            if key in trace:
                x, y = c.xy(pts[trace[key]])
                out.append(f'<circle cx="{x}" cy="{y}" r="5" fill="none" stroke="{color}" stroke-width="2"/>')
        out.append("</g>")
        out.append('<g id="legend" font-size="10" font-family="sans-serif">')
        for i, (phase, color) in enumerate(PHASE_COLORS.items()):
            y = 12 + 12 * i
            out.append(f'<line x1="4" y1="{y}" x2="18" y2="{y}" stroke="{color}" stroke-width="2"/>')
            out.append(f'<text x="22" y="{y + 3}">{phase}</text>')
        out.append("</g>")
    out.append("</svg>\n")
    return "\n".join(out)


def write_svg(path: str, *args, **kwargs) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(render_svg(*args, **kwargs))
