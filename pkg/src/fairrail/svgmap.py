"""Standalone SVG drawing of an instance with a built network."""

from __future__ import annotations

import math
from typing import Iterable
from xml.sax.saxutils import escape, quoteattr

from .instance import Instance, check_network

SIZE = 600.0
MARGIN = 50.0
BUILT_STYLE = 'stroke="#b2182b" stroke-width="3"'
UNBUILT_STYLE = 'stroke="#888888" stroke-width="1" stroke-dasharray="6 4" stroke-opacity="0.6"'


def _fmt(v: float) -> str:
    out = f"{v:.2f}".rstrip("0").rstrip(".")
    return "0" if out in ("-0", "") else out


def normalized_positions(instance: Instance, size: float = SIZE, margin: float = MARGIN) -> list[tuple[float, float]]:
    """City positions mapped into the square viewport, aspect ratio kept, y axis pointing up."""
    missing = [c.name for c in instance.cities if not c.has_coords]
    if missing:
        raise ValueError(f"cities without coordinates cannot be drawn: {', '.join(missing)}")
    xs = [c.x for c in instance.cities]
    ys = [c.y for c in instance.cities]
    span = max(max(xs) - min(xs), max(ys) - min(ys))
    scale = (size - 2 * margin) / span if span > 0 else 1.0
    cx = (max(xs) + min(xs)) / 2
    cy = (max(ys) + min(ys)) / 2
    return [(size / 2 + (x - cx) * scale, size / 2 - (y - cy) * scale) for x, y in zip(xs, ys)]


def render_map(instance: Instance, network: Iterable[int] = (), size: float = SIZE) -> str:
    R = check_network(instance, network)
    pos = normalized_positions(instance, size)
    top_pop = max((c.population for c in instance.cities), default=1.0) or 1.0
    s = _fmt(size)
    lines = [
        '<?xml version="1.0" encoding="UTF-8" standalone="no"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{s}" height="{s}" viewBox="0 0 {s} {s}">',
        f"<title>{escape(instance.name or 'railway network')}</title>",
        f'<rect x="0" y="0" width="{s}" height="{s}" fill="white"/>',
        '<g id="candidates">',
    ]
    for eid, e in enumerate(instance.edges):
        if eid in R:
            continue
        (x1, y1), (x2, y2) = pos[e.u], pos[e.v]
        lines.append(f'<line class="unbuilt" x1="{_fmt(x1)}" y1="{_fmt(y1)}" x2="{_fmt(x2)}" y2="{_fmt(y2)}" {UNBUILT_STYLE}/>')
    lines.append("</g>")
    lines.append('<g id="network">')
    for eid in sorted(R):
        e = instance.edges[eid]
        (x1, y1), (x2, y2) = pos[e.u], pos[e.v]
        lines.append(f'<line class="built" x1="{_fmt(x1)}" y1="{_fmt(y1)}" x2="{_fmt(x2)}" y2="{_fmt(y2)}" {BUILT_STYLE}/>')
    lines.append("</g>")
    lines.append('<g id="cities">')
    for c, (x, y) in zip(instance.cities, pos):
        r = 3.0 + 9.0 * math.sqrt(max(c.population, 0.0) / top_pop)
        lines.append(f'<circle class="city" cx="{_fmt(x)}" cy="{_fmt(y)}" r="{_fmt(r)}" fill="#2166ac"/>')
        lines.append(f'<text x="{_fmt(x + r + 2)}" y="{_fmt(y - r - 2)}" font-family="sans-serif" '
                     f'font-size="12" data-city={quoteattr(str(c.id))}>{escape(c.name)}</text>')
    lines.append("</g>")
    lines.append("</svg>")
    return "\n".join(lines) + "\n"
