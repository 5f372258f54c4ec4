"""SVG rendering of tiling patches."""

from __future__ import annotations

import math
from xml.sax.saxutils import quoteattr

from .tiling import Patch

PALETTE = ("#4c72b0", "#dd8452", "#55a868", "#c44e52", "#8172b3", "#937860", "#da8bc3", "#8c8c8c")


def render_svg(patch: Patch, scale: str = "linear", width: int = 800, height: int = 600) -> str:
    """SVG 1.1 document with one rectangle per tile, clipped to the window.

    ``scale`` is ``"linear"`` or ``"logy"`` (logarithmic vertical axis).
    Output depends only on the patch, so identical input gives identical bytes.
    """
    if scale not in ("linear", "logy"):
        raise ValueError(f"unknown scale {scale!r}")
    x0, x1, y0, y1 = (float(v) for v in patch.window)
    if scale == "logy":
        fy = lambda y: math.log(y)
        y0, y1 = math.log(y0), math.log(y1)
    else:
        fy = lambda y: y
    sx = width / (x1 - x0)
    sy = height / (y1 - y0)
    colors = {c: PALETTE[k % len(PALETTE)] for k, c in enumerate(patch.colors())}
    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white" stroke="black" stroke-width="1"/>',
    ]
    for ct in patch.tiles:
        t = ct.tile
        a = max(float(t.x1), x0)
        b = min(float(t.x2), x1)
        lo = max(fy(float(t.y1)), y0)
        hi = min(fy(float(t.y2)), y1)
        if a >= b or lo >= hi:
            continue
        px, pw = (a - x0) * sx, (b - a) * sx
        py, ph = (y1 - hi) * sy, (hi - lo) * sy
        lines.append(
            f'<rect x="{px:.4f}" y="{py:.4f}" width="{pw:.4f}" height="{ph:.4f}" '
            f'fill="{colors[ct.color]}" stroke="black" stroke-width="0.5">'
            f'<title>{_escape(ct.color)}</title></rect>'
        )
    lines.append("</svg>")
    return "\n".join(lines) + "\n"


def _escape(text: str) -> str:
    return quoteattr(text)[1:-1]
