"""Plain-text tables and SVG forest plots for sweep and effect results."""
from __future__ import annotations

import math
from typing import Optional, Sequence
from xml.sax.saxutils import escape

from .validation import Index

TABLE_HEADER = ("distance", "sample", "n-gram", "message", "adj. Rand", "index", "score")

# layout, in SVG user units
ROW_H = 18
LABEL_W = 190
PLOT_W = 420
MARGIN = 20
AXIS_H = 40
SQUARE = 7


def _num(v, digits: int = 4) -> str:
    if v is None:
        return "NA"
    if v != 0 and not 1e-3 <= abs(v) < 1e6:
        return f"{v:.{digits}e}"
    return f"{v:.{digits}f}"


def table_row(record, index) -> tuple:
    """Distance, sample, n-gram, message, adjusted Rand and the index score."""
    idx = Index.parse(index)
    c = record.config
    sample = str(c.sample_size) if c.sample_offset == 0 else f"{c.sample_size}@{c.sample_offset}"
    return (c.distance.value, sample, str(c.ngram), str(c.message_length),
            _num(record.adjusted_rand), idx.value, _num(record.score(idx)))


def format_table(rows: Sequence[tuple], header: tuple = TABLE_HEADER) -> str:
    rows = [tuple(str(x) for x in r) for r in rows]
    widths = [max(len(h), *(len(r[i]) for r in rows)) if rows else len(h) for i, h in enumerate(header)]
    lines = ["  ".join(h.ljust(w) for h, w in zip(header, widths)).rstrip()]
    lines.append("  ".join("-" * w for w in widths))
    for r in rows:
        lines.append("  ".join(x.ljust(w) for x, w in zip(r, widths)).rstrip())
    return "\n".join(lines) + "\n"


def format_effects(report: dict) -> str:
    header = ("variable", "A", "B", "g", "95% CI", "magnitude")
    rows = [(e.variable, e.a, e.b, f"{e.g:+.3f}", f"[{e.ci_low:+.3f}, {e.ci_high:+.3f}]", e.magnitude.value)
            for e in report["estimates"]]
    rows += [(a.variable, "aggregate", f"({a.pair_count} pairs)", f"{a.mean_abs_g:.3f}",
              f"[{a.ci_low:+.3f}, {a.ci_high:+.3f}]", a.magnitude.value)
             for a in report["aggregates"]]
    return format_table(rows, header)


def _ticks(lo: float, hi: float) -> list:
    span = hi - lo
    step = 10 ** math.floor(math.log10(span / 4))
    for mult in (1, 2, 5, 10):
        if span / (step * mult) <= 6:
            step *= mult
            break
    first = math.ceil(lo / step) * step
    out = []
    v = first
    while v <= hi + 1e-12:
        out.append(round(v, 10))
        v += step
    return out


def forest_svg(report: dict, title: Optional[str] = None) -> str:
    """Forest plot: a square and CI line per pairwise test, a diamond per aggregate.

    Drawn marks are ``rect.effect``, ``line.ci`` and ``polygon.aggregate``;
    everything else (no-effect line, baseline, ticks, labels) sits in the
    ``g.axis`` group.
    """
    estimates = list(report["estimates"])
    aggregates = list(report["aggregates"])
    by_var: dict = {}
    for e in estimates:
        by_var.setdefault(e.variable, []).append(e)
    agg_by_var = {a.variable: a for a in aggregates}
    order = list(dict.fromkeys([e.variable for e in estimates] + [a.variable for a in aggregates]))

    bounds = [0.0]
    for e in estimates:
        bounds += [e.ci_low, e.ci_high]
    for a in aggregates:
        bounds += [a.ci_low, a.ci_high]
    bounds = [b for b in bounds if math.isfinite(b)]
    lo, hi = min(bounds), max(bounds)
    if hi - lo < 1e-9:
        lo, hi = -1.0, 1.0
    pad = 0.05 * (hi - lo)
    lo, hi = lo - pad, hi + pad

    x0 = MARGIN + LABEL_W

    def sx(v: float) -> float:
        return x0 + (min(max(v, lo), hi) - lo) / (hi - lo) * PLOT_W

    top = MARGIN + (ROW_H if title else 0)
    rows = []  # (kind, label, item)
    for var in order:
        rows.append(("head", var, None))
        rows += [("est", f"{e.a} vs {e.b}", e) for e in by_var.get(var, [])]
        if var in agg_by_var:
            rows.append(("agg", "aggregate |g|", agg_by_var[var]))
    height = top + ROW_H * len(rows) + AXIS_H + MARGIN
    width = x0 + PLOT_W + MARGIN
    plot_bottom = top + ROW_H * len(rows)

    axis, marks = [], []
    if title:
        axis.append(f'<text x="{MARGIN}" y="{MARGIN + 12}" font-weight="bold">{escape(title)}</text>')
    for r, (kind, label, item) in enumerate(rows):
        y = top + ROW_H * r + ROW_H / 2
        weight = ' font-weight="bold"' if kind == "head" else ""
        indent = 0 if kind == "head" else 12
        axis.append(f'<text x="{MARGIN + indent}" y="{y + 4:.1f}"{weight}>{escape(label)}</text>')
        if kind == "est":
            marks.append(f'<line class="ci" x1="{sx(item.ci_low):.2f}" y1="{y:.1f}" '
                         f'x2="{sx(item.ci_high):.2f}" y2="{y:.1f}" stroke="black"/>')
            marks.append(f'<rect class="effect" x="{sx(item.g) - SQUARE / 2:.2f}" y="{y - SQUARE / 2:.1f}" '
                         f'width="{SQUARE}" height="{SQUARE}" fill="black"/>')
        elif kind == "agg":
            cx, l, rr = sx(item.mean_abs_g), sx(item.ci_low), sx(item.ci_high)
            pts = f"{l:.2f},{y:.1f} {cx:.2f},{y - 6:.1f} {rr:.2f},{y:.1f} {cx:.2f},{y + 6:.1f}"
            marks.append(f'<polygon class="aggregate" points="{pts}" fill="grey" stroke="black"/>')
    axis.append(f'<line class="no-effect" x1="{sx(0.0):.2f}" y1="{top}" x2="{sx(0.0):.2f}" '
                f'y2="{plot_bottom}" stroke="grey" stroke-dasharray="4 3"/>')
    axis.append(f'<line class="baseline" x1="{x0}" y1="{plot_bottom}" x2="{x0 + PLOT_W}" '
                f'y2="{plot_bottom}" stroke="black"/>')
    for t in _ticks(lo, hi):
        axis.append(f'<line class="tick" x1="{sx(t):.2f}" y1="{plot_bottom}" x2="{sx(t):.2f}" '
                    f'y2="{plot_bottom + 4}" stroke="black"/>')
        axis.append(f'<text x="{sx(t):.2f}" y="{plot_bottom + 16}" text-anchor="middle">{t:g}</text>')
    axis.append(f'<text x="{x0 + PLOT_W / 2:.1f}" y="{plot_bottom + 32}" text-anchor="middle">'
                f"Hedges' g</text>")

    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {width} {height}" '
             f'width="{width}" height="{height}" font-family="sans-serif" font-size="11">',
             '<g class="axis">', *axis, "</g>", '<g class="marks">', *marks, "</g>", "</svg>"]
    return '<?xml version="1.0" encoding="UTF-8"?>\n' + "\n".join(parts) + "\n"
