"""Markdown and SVG report emitters.

Output depends only on its inputs (no timestamps, fixed number formatting),
so reports are byte-stable for a fixed seed and provider.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from xml.sax.saxutils import escape

import numpy as np

from breaklens.ensemble import EnsembleBreak, break_magnitude
from breaklens.timeseries import TimeSeries

__all__ = [
    "BreakRecord",
    "records_from",
    "summary_text",
    "render_breaks_md",
    "render_explanations_md",
    "render_scores_md",
    "render_svg",
]


@dataclass(frozen=True)
class BreakRecord:
    """A reported break, whatever strategy produced it."""

    index: int
    date: str
    confidence: float
    magnitude: float
    votes: int = 1
    methods: tuple[str, ...] = ()
    location: float = math.nan

    def as_dict(self) -> dict:
        return {
            "index": self.index, "date": self.date, "confidence": self.confidence,
            "magnitude": None if math.isnan(self.magnitude) else self.magnitude,
            "votes": self.votes, "methods": list(self.methods),
            "location": None if math.isnan(self.location) else self.location,
        }


def records_from(breaks, ts: TimeSeries) -> list[BreakRecord]:
    out = []
    for b in breaks:
        if isinstance(b, EnsembleBreak):
            out.append(BreakRecord(b.index, ts.label(b.index), b.confidence, b.magnitude, b.votes, b.methods, b.location))
        else:
            mag = break_magnitude(ts.values, b.index)
            out.append(BreakRecord(b.index, ts.label(b.index), b.confidence, mag, 1, (b.method_id,), float(b.index)))
    return sorted(out, key=lambda r: r.index)


def summary_text(records) -> str:
    """Plain-text summary: count, then date, confidence (%) and magnitude per break."""
    lines = ["Structural Break Detection Results", f"Breaks detected: {len(records)}"]
    for i, r in enumerate(records, 1):
        mag = "n/a" if math.isnan(r.magnitude) else f"{r.magnitude:.3f}"
        lines += ["", f"Break {i}: {r.date}", f"  Confidence: {100 * r.confidence:.1f}", f"  Magnitude: {mag}"]
    return "\n".join(lines) + "\n"


def render_scores_md(scores, selected: str | None = None) -> str:
    from breaklens.autoselect import CRITERIA

    head = "| Method | " + " | ".join(CRITERIA) + " | Total |"
    lines = [head, "|---|" + "---:|" * (len(CRITERIA) + 1)]
    for sc in sorted(scores, key=lambda s: -round(s.total, 9)):
        name = f"**{sc.method_id}**" if sc.method_id == selected else sc.method_id
        lines.append(f"| {name} | " + " | ".join(f"{v:.1f}" for v in sc.scores) + f" | {sc.total:.1f} |")
    return "\n".join(lines) + "\n"


def render_breaks_md(records, meta: dict, scores=None, profile=None, per_method=None, svg_name: str | None = "breaks.svg") -> str:
    """Detection report: metadata, the summary block, a detail table and optional extras."""
    out = ["# Structural break report", ""]
    for k in ("input", "series", "n", "method", "selected_method", "v_min", "seed"):
        if meta.get(k) is not None:
            out.append(f"- **{k}**: {meta[k]}")
    out += ["", "```", summary_text(records).rstrip("\n"), "```", ""]
    if records:
        out += ["| # | Index | Date | Confidence | Magnitude | Votes | Methods |", "|---:|---:|---|---:|---:|---:|---|"]
        for i, r in enumerate(records, 1):
            mag = "n/a" if math.isnan(r.magnitude) else f"{r.magnitude:.3f}"
            out.append(f"| {i} | {r.index} | {r.date} | {100 * r.confidence:.1f} | {mag} | {r.votes} | {', '.join(r.methods)} |")
        out.append("")
    if profile is not None:
        out += ["## Data profile", ""]
        out += [f"- {k}: {v:.4g}" if isinstance(v, float) else f"- {k}: {v}" for k, v in profile.as_dict().items()]
        out.append("")
    if scores is not None:
        out += ["## Selection scores", "", render_scores_md(scores, meta.get("selected_method"))]
    if per_method is not None:
        out += ["## Per-method detections", ""]
        for m, dets in per_method.items():
            if isinstance(dets, str):
                out.append(f"- {m}: {dets}")
            else:
                out.append(f"- {m}: " + (", ".join(str(d.index) for d in dets) or "none"))
        out.append("")
    if svg_name:
        out += [f"![series with detected breaks]({svg_name})", ""]
    return "\n".join(out)


def render_explanations_md(explained) -> str:
    out = ["## Explanations", ""]
    for i, ex in enumerate(explained, 1):
        date = ex.context.break_date if ex.context is not None else "?"
        head = f"### Break {i}: {date}"
        if ex.mode == "rag":
            head += f" ({len(ex.retrieved_ids)} docs retrieved)"
        out += [head, ""]
        if ex.retrieved_titles:
            out += ["Retrieved: " + "; ".join(ex.retrieved_titles), ""]
        out += [f"> Explanation unavailable: {ex.error}" if ex.error else ex.explanation, ""]
    return "\n".join(out)


def render_svg(ts: TimeSeries, records, width: int = 800, height: int = 320, title: str | None = None) -> str:
    """Line chart with each break marked by a red dashed vertical line."""
    y = np.asarray(ts.values, dtype=float)
    n = y.size
    ml, mr, mt, mb = 60, 20, 30, 40
    pw, ph = width - ml - mr, height - mt - mb
    lo, hi = float(y.min()), float(y.max())
    if hi == lo:
        lo, hi = lo - 1.0, hi + 1.0

    def px(i):
        return ml + (pw * i / (n - 1) if n > 1 else pw / 2)

    def py(v):
        return mt + ph * (hi - v) / (hi - lo)

    pts = " ".join(f"{px(i):.2f},{py(v):.2f}" for i, v in enumerate(y))
    title = escape(title or ts.name)
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">',
        '<rect width="100%" height="100%" fill="white"/>',
        f'<text x="{width / 2:.0f}" y="18" text-anchor="middle" font-family="sans-serif" font-size="14">{title}</text>',
        f'<line x1="{ml}" y1="{mt + ph}" x2="{ml + pw}" y2="{mt + ph}" stroke="black"/>',
        f'<line x1="{ml}" y1="{mt}" x2="{ml}" y2="{mt + ph}" stroke="black"/>',
        f'<text x="{ml - 5}" y="{mt + 4}" text-anchor="end" font-family="sans-serif" font-size="10">{hi:.4g}</text>',
        f'<text x="{ml - 5}" y="{mt + ph}" text-anchor="end" font-family="sans-serif" font-size="10">{lo:.4g}</text>',
        f'<text x="{ml}" y="{height - 20}" text-anchor="start" font-family="sans-serif" font-size="10">{escape(ts.label(0))}</text>',
        f'<text x="{ml + pw}" y="{height - 20}" text-anchor="end" font-family="sans-serif" font-size="10">{escape(ts.label(n - 1))}</text>',
        f'<polyline fill="none" stroke="#1f77b4" stroke-width="1.5" points="{pts}"/>',
    ]
    for r in records:
        x = px(min(max(r.index, 0), n - 1))
        parts.append(
            f'<line class="break" x1="{x:.2f}" y1="{mt}" x2="{x:.2f}" y2="{mt + ph}" '
            f'stroke="red" stroke-width="1.5" stroke-dasharray="6,4"/>'
        )
        parts.append(
            f'<text x="{x + 3:.2f}" y="{mt + 10}" font-family="sans-serif" font-size="10" fill="red">{escape(r.date)}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
