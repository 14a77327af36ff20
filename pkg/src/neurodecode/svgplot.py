"""Dependency-free SVG output for the report artifacts.

Plots are conveniences; the CSVs remain the contract. Output is a pure
function of the inputs so repeated runs stay byte-identical.
"""

from __future__ import annotations

from pathlib import Path
from typing import Mapping, Sequence

PALETTE = (
    "#4477aa",
    "#ee6677",
    "#228833",
    "#ccbb44",
    "#66ccee",
    "#aa3377",
    "#bbbbbb",
    "#222222",
)

MEMBERSHIP_COLORS = {"only_a": "#cc3311", "only_b": "#0077bb", "common": "#aa44aa"}


def _esc(text: str) -> str:
    return text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def bar_chart(
    path: str | Path,
    groups: Sequence[str],
    series: Sequence[tuple[str, Sequence[float]]],
    chance: float | None = 0.5,
    ylabel: str = "accuracy",
    title: str = "",
) -> None:
    """Grouped bars in [0, 1] with an optional horizontal chance line."""
    left, right, top, bottom = 70, 20, 40, 90
    plot_w = max(360, 34 * len(groups) * max(1, len(series)))
    plot_h = 260
    width = left + plot_w + right
    height = top + plot_h + bottom + 18 * ((len(series) + 3) // 4)

    def sx(g: int, s: int) -> float:
        band = plot_w / max(1, len(groups))
        slot = band / (len(series) + 1)
        return left + g * band + slot * (s + 0.5)

    def sy(v: float) -> float:
        return top + plot_h * (1.0 - min(max(v, 0.0), 1.0))

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'font-family="sans-serif" font-size="11">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
    ]
    if title:
        parts.append(f'<text x="{width / 2}" y="20" text-anchor="middle" font-size="14">{_esc(title)}</text>')
    for tick in (0.0, 0.25, 0.5, 0.75, 1.0):
        y = sy(tick)
        parts.append(f'<line x1="{left}" y1="{y}" x2="{left + plot_w}" y2="{y}" stroke="#dddddd"/>')
        parts.append(f'<text x="{left - 6}" y="{y + 4}" text-anchor="end">{tick}</text>')
    parts.append(
        f'<text x="16" y="{top + plot_h / 2}" text-anchor="middle" '
        f'transform="rotate(-90 16 {top + plot_h / 2})">{_esc(ylabel)}</text>'
    )
    band = plot_w / max(1, len(groups))
    slot = band / (len(series) + 1)
    for s, (label, values) in enumerate(series):
        color = PALETTE[s % len(PALETTE)]
        for g, value in enumerate(values):
            x = sx(g, s) - slot * 0.45
            y = sy(value)
            parts.append(
                f'<rect x="{x:.2f}" y="{y:.2f}" width="{slot * 0.9:.2f}" '
                f'height="{top + plot_h - y:.2f}" fill="{color}"/>'
            )
    if chance is not None:
        y = sy(chance)
        parts.append(
            f'<line x1="{left}" y1="{y}" x2="{left + plot_w}" y2="{y}" '
            f'stroke="#444444" stroke-dasharray="6 4"/>'
        )
        parts.append(f'<text x="{left + plot_w + 2}" y="{y + 4}" font-size="10">{chance}</text>')
    for g, group in enumerate(groups):
        x = left + (g + 0.5) * band
        y = top + plot_h + 14
        parts.append(
            f'<text x="{x:.2f}" y="{y}" text-anchor="end" '
            f'transform="rotate(-45 {x:.2f} {y})">{_esc(group)}</text>'
        )
    for s, (label, _) in enumerate(series):
        color = PALETTE[s % len(PALETTE)]
        lx = left + (s % 4) * (plot_w / 4)
        ly = top + plot_h + bottom - 24 + 18 * (s // 4)
        parts.append(f'<rect x="{lx}" y="{ly - 9}" width="10" height="10" fill="{color}"/>')
        parts.append(f'<text x="{lx + 14}" y="{ly}">{_esc(label)}</text>')
    parts.append("</svg>")
    Path(path).write_text("\n".join(parts) + "\n", encoding="utf-8", newline="\n")


def pair_grid(
    path: str | Path,
    words: Sequence[str],
    membership: Mapping[tuple[str, str], str],
    title: str = "",
    label_a: str = "a",
    label_b: str = "b",
) -> None:
    """Word x word scatter of error pairs colored by membership.

    ``membership`` maps an (earlier word, later word) pair to one of
    ``only_a`` / ``only_b`` / ``common``; both symmetric cells get a dot.
    """
    n = len(words)
    cell = max(8, min(16, 640 // max(n, 1)))
    margin = 90
    size = margin + n * cell + 20
    index = {w: i for i, w in enumerate(words)}
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size + 40}" '
        f'font-family="sans-serif" font-size="9">',
        f'<rect width="{size}" height="{size + 40}" fill="white"/>',
    ]
    if title:
        parts.append(f'<text x="{size / 2}" y="16" text-anchor="middle" font-size="13">{_esc(title)}</text>')
    x0 = margin
    y0 = 30
    parts.append(
        f'<rect x="{x0}" y="{y0}" width="{n * cell}" height="{n * cell}" '
        f'fill="none" stroke="#999999"/>'
    )
    for w, i in index.items():
        cx = x0 + (i + 0.5) * cell
        cy = y0 + (i + 0.5) * cell
        parts.append(
            f'<text x="{cx:.1f}" y="{y0 + n * cell + 10}" text-anchor="end" '
            f'transform="rotate(-90 {cx:.1f} {y0 + n * cell + 10})">{_esc(w)}</text>'
        )
        parts.append(f'<text x="{x0 - 4}" y="{cy + 3:.1f}" text-anchor="end">{_esc(w)}</text>')
    for (wa, wb), kind in sorted(membership.items()):
        color = MEMBERSHIP_COLORS.get(kind, "#000000")
        i, j = index[wa], index[wb]
        for a, b in ((i, j), (j, i)):
            cx = x0 + (b + 0.5) * cell
            cy = y0 + (a + 0.5) * cell
            parts.append(f'<circle cx="{cx:.1f}" cy="{cy:.1f}" r="{cell * 0.32:.1f}" fill="{color}"/>')
    ly = y0 + n * cell + margin - 24
    for k, (kind, label) in enumerate((("only_a", label_a), ("only_b", label_b), ("common", "both"))):
        lx = x0 + k * 150
        parts.append(f'<circle cx="{lx}" cy="{ly}" r="5" fill="{MEMBERSHIP_COLORS[kind]}"/>')
        parts.append(f'<text x="{lx + 10}" y="{ly + 3}" font-size="11">{_esc(label)}</text>')
    parts.append("</svg>")
    Path(path).write_text("\n".join(parts) + "\n", encoding="utf-8", newline="\n")


def score_scatter(
    path: str | Path,
    points: Sequence[tuple[float, float, str]],
    xlabel: str,
    ylabel: str,
    title: str = "",
) -> None:
    """Scatter of (x, y, membership) score pairs on [-1, 1] axes."""
    left, top, plot = 60, 30, 320
    size = left + plot + 30
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size + 30}" '
        f'font-family="sans-serif" font-size="11">',
        f'<rect width="{size}" height="{size + 30}" fill="white"/>',
    ]
    if title:
        parts.append(f'<text x="{size / 2}" y="18" text-anchor="middle" font-size="13">{_esc(title)}</text>')

    def s(v: float) -> float:
        return (min(max(v, -1.0), 1.0) + 1.0) / 2.0 * plot

    parts.append(f'<rect x="{left}" y="{top}" width="{plot}" height="{plot}" fill="none" stroke="#999999"/>')
    for tick in (-1.0, 0.0, 1.0):
        parts.append(f'<text x="{left + s(tick):.1f}" y="{top + plot + 14}" text-anchor="middle">{tick}</text>')
        parts.append(f'<text x="{left - 6}" y="{top + plot - s(tick) + 4:.1f}" text-anchor="end">{tick}</text>')
    parts.append(f'<text x="{left + plot / 2}" y="{top + plot + 30}" text-anchor="middle">{_esc(xlabel)}</text>')
    parts.append(
        f'<text x="14" y="{top + plot / 2}" text-anchor="middle" '
        f'transform="rotate(-90 14 {top + plot / 2})">{_esc(ylabel)}</text>'
    )
    for x, y, kind in points:
        color = MEMBERSHIP_COLORS.get(kind, "#000000")
        parts.append(
            f'<circle cx="{left + s(x):.1f}" cy="{top + plot - s(y):.1f}" r="3" '
            f'fill="{color}" fill-opacity="0.8"/>'
        )
    parts.append("</svg>")
    Path(path).write_text("\n".join(parts) + "\n", encoding="utf-8", newline="\n")
