"""Deterministic SVG drawings of planar networks and type timelines."""
from __future__ import annotations

from typing import Sequence

import numpy as np

from .errors import GuardError, StructuralError
from .topology import Network, label_key

WIDTH = 480
HEIGHT = 480
PAD = 32


def _num(x: float) -> str:
    s = f"{x:.3f}".rstrip("0").rstrip(".")
    return "0" if s in ("-0", "") else s


def _header(w: int, h: int) -> list[str]:
    return [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">',
        f'<rect x="0" y="0" width="{w}" height="{h}" fill="white"/>',
    ]


def network_svg(networks: Network | Sequence[Network], title: str | None = None) -> str:
    """Draw one or more planar networks side by side on a shared scale.

    Boundary vertices are filled dots, interior vertices hollow ones.
    """
    nets = [networks] if isinstance(networks, Network) else list(networks)
    if not nets:
        raise StructuralError("nothing to draw")
    for net in nets:
        if net.dimension != 2:
            raise GuardError(f"network drawings need planar points, got dimension {net.dimension}")
    allpts = np.array([p for net in nets for p in net.positions.values()])
    lo, hi = allpts.min(axis=0), allpts.max(axis=0)
    span = float(max(hi - lo)) or 1.0
    cell = WIDTH
    total_w = cell * len(nets)
    out = _header(total_w, HEIGHT)
    if title:
        out.append(f'<text x="{PAD}" y="{PAD // 2 + 4}" font-family="sans-serif" font-size="14">{_esc(title)}</text>')
    inner = cell - 2 * PAD

    def xy(p, k):
        x = PAD + k * cell + (p[0] - lo[0]) / span * inner
        y = HEIGHT - PAD - (p[1] - lo[1]) / span * inner
        return _num(x), _num(y)

    for k, net in enumerate(nets):
        edges = sorted(net.tree.edge_list(), key=lambda e: (label_key(e[0]), label_key(e[1])))
        for a, b in edges:
            (x1, y1), (x2, y2) = xy(net.positions[a], k), xy(net.positions[b], k)
            out.append(f'<line x1="{x1}" y1="{y1}" x2="{x2}" y2="{y2}" stroke="black" stroke-width="2"/>')
        for v in sorted(net.tree.vertices, key=label_key):
            x, y = xy(net.positions[v], k)
            if v in net.tree.boundary:
                out.append(f'<circle cx="{x}" cy="{y}" r="5" fill="black"/>')
                out.append(
                    f'<text x="{x}" y="{y}" dx="7" dy="-7" font-family="sans-serif" font-size="12">{_esc(str(v))}</text>'
                )
            else:
                out.append(f'<circle cx="{x}" cy="{y}" r="4" fill="white" stroke="black" stroke-width="1.5"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def timeline_svg(timeline, flips: Sequence[float] = (), title: str | None = None) -> str:
    """Step plot of ``|I_min(t)|`` with a red marker at every flip."""
    samples = timeline.samples
    ts = np.array([s.t for s in samples])
    sizes = np.array([len(s.set) for s in samples])
    w, h = 640, 240
    t_lo, t_hi = float(ts.min()), float(ts.max())
    t_span = (t_hi - t_lo) or 1.0
    top = int(sizes.max()) + 1

    def X(t):
        return PAD + (t - t_lo) / t_span * (w - 2 * PAD)

    def Y(v):
        return h - PAD - v / top * (h - 2 * PAD)

    out = _header(w, h)
    if title:
        out.append(f'<text x="{PAD}" y="{PAD // 2 + 4}" font-family="sans-serif" font-size="14">{_esc(title)}</text>')
    out.append(f'<line x1="{PAD}" y1="{_num(Y(0))}" x2="{w - PAD}" y2="{_num(Y(0))}" stroke="gray"/>')
    pts = []
    for i, (t, v) in enumerate(zip(ts, sizes)):
        if i:
            pts.append(f"{_num(X(t))},{_num(Y(sizes[i - 1]))}")
        pts.append(f"{_num(X(t))},{_num(Y(v))}")
    out.append(f'<polyline points="{" ".join(pts)}" fill="none" stroke="black" stroke-width="1.5"/>')
    for t in flips:
        x = _num(X(t))
        out.append(f'<line x1="{x}" y1="{PAD}" x2="{x}" y2="{_num(Y(0))}" stroke="red" stroke-width="0.5"/>')
    out.append(
        f'<text x="{PAD}" y="{h - 8}" font-family="sans-serif" font-size="11">t from {t_lo:.6g} to {t_hi:.6g}; '
        f"{len(flips)} flips</text>"
    )
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _esc(s: str) -> str:
    return s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")
