"""Static SVG figures: sample scatter and time-coloured trajectory fans."""
from __future__ import annotations

from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

WIDTH = 480
PAD = 24


def _frame(points: np.ndarray):
    lo, hi = points.min(axis=0), points.max(axis=0)
    span = float(max(hi[0] - lo[0], hi[1] - lo[1], 1e-9))
    scale = (WIDTH - 2 * PAD) / span

    def to_px(p: np.ndarray) -> np.ndarray:
        # svg y grows downwards
        return np.stack([PAD + (p[..., 0] - lo[0]) * scale, WIDTH - PAD - (p[..., 1] - lo[1]) * scale], axis=-1)

    return to_px


def _doc(body: list[str], title: str) -> str:
    head = (f'<?xml version="1.0" encoding="UTF-8"?>\n'
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{WIDTH}" viewBox="0 0 {WIDTH} {WIDTH}">\n'
            f'<rect width="{WIDTH}" height="{WIDTH}" fill="white"/>\n'
            f'<text x="{PAD}" y="{PAD - 8}" font-family="sans-serif" font-size="12">{escape(title)}</text>\n')
    return head + "\n".join(body) + "\n</svg>\n"


def _time_colour(s: float) -> str:
    # blue (t=0) to red (t=1)
    r, g, b = int(40 + 200 * s), int(80 * (1 - abs(2 * s - 1))), int(240 - 200 * s)
    return f"#{r:02x}{g:02x}{b:02x}"


def scatter_svg(path: str | Path, generated: np.ndarray, target: np.ndarray, title: str = "") -> None:
    to_px = _frame(np.concatenate([generated[:, :2], target[:, :2]]))
    body = []
    for pts, colour in ((target, "#f28e2b"), (generated, "#4e79a7")):
        for x, y in to_px(pts[:, :2]):
            body.append(f'<circle cx="{x:.2f}" cy="{y:.2f}" r="2" fill="{colour}" fill-opacity="0.7"/>')
    body.append(f'<text x="{WIDTH - 150}" y="{PAD - 8}" font-family="sans-serif" font-size="11" fill="#4e79a7">generated</text>')
    body.append(f'<text x="{WIDTH - 80}" y="{PAD - 8}" font-family="sans-serif" font-size="11" fill="#f28e2b">target</text>')
    Path(path).write_text(_doc(body, title))


def trajectory_svg(path: str | Path, states: np.ndarray, times: np.ndarray, title: str = "") -> None:
    """``states`` is (steps + 1, n, d); only the first two coordinates are drawn."""
    to_px = _frame(states[..., :2].reshape(-1, 2))
    px = to_px(states[..., :2])
    t0, t1 = float(times[0]), float(times[-1])
    body = []
    for k in range(len(times) - 1):
        colour = _time_colour((0.5 * (times[k] + times[k + 1]) - t0) / (t1 - t0))
        for a, b in zip(px[k], px[k + 1]):
            body.append(f'<line x1="{a[0]:.2f}" y1="{a[1]:.2f}" x2="{b[0]:.2f}" y2="{b[1]:.2f}" '
                        f'stroke="{colour}" stroke-width="0.8"/>')
    Path(path).write_text(_doc(body, title))
