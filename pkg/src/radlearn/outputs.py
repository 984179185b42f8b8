"""CSV / JSON result files and minimal SVG line charts."""
from __future__ import annotations

import csv
import json
from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

from .harness import RECORD_FIELDS, MetricsRecord, Results, summarize

PLOT_METRICS = ("accuracy", "f1_macro", "hot_A", "hot_truth_AT")
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2",
           "#7f7f7f", "#bcbd22", "#17becf")


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_records(records: list[MetricsRecord], path: Path) -> None:
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RECORD_FIELDS)
        for rec in records:
            w.writerow([_cell(getattr(rec, f)) for f in RECORD_FIELDS])


def read_records(path: str | Path) -> list[MetricsRecord]:
    ints = {"batch_index", "queries_used", "cumulative_training_size", "n_admitted", "n_admitted_clean"}
    out = []
    with Path(path).open(newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            vals = {k: (None if v == "" else int(v) if k in ints else float(v)) for k, v in row.items()}
            out.append(MetricsRecord(**vals))
    return out


def svg_line_chart(series: dict[str, np.ndarray], title: str, ylabel: str, xlabel: str = "batch",
                   xticks: list[str] | None = None, width: int = 640, height: int = 400) -> str:
    """Mean curve per label with a shaded min/max band.

    ``series`` maps a label to a ``(runs, points)`` array; NaN entries are skipped.
    """
    left, right, top, bottom = 60, 150, 30, 45
    pw, ph = width - left - right, height - top - bottom
    n_points = max(a.shape[1] for a in series.values())
    finite = np.concatenate([a[np.isfinite(a)] for a in series.values()] or [np.zeros(1)])
    lo, hi = (float(finite.min()), float(finite.max())) if finite.size else (0.0, 1.0)
    if hi - lo < 1e-9:
        lo, hi = lo - 0.5, hi + 0.5

    def x(i):
        return left + (pw * i / max(n_points - 1, 1))

    def y(v):
        return top + ph * (1 - (v - lo) / (hi - lo))

    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
             f'font-family="sans-serif" font-size="11">',
             f'<rect width="{width}" height="{height}" fill="white"/>',
             f'<text x="{width / 2:.1f}" y="18" text-anchor="middle" font-size="13">{escape(title)}</text>',
             f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="#444"/>']
    for t in np.linspace(lo, hi, 5):
        parts.append(f'<line x1="{left - 4}" y1="{y(t):.1f}" x2="{left}" y2="{y(t):.1f}" stroke="#444"/>')
        parts.append(f'<text x="{left - 6}" y="{y(t) + 4:.1f}" text-anchor="end">{t:.3g}</text>')
    if xticks is None:
        xticks = [str(i + 1) for i in range(n_points)]
    for i in sorted({0, (n_points - 1) // 2, n_points - 1}):
        parts.append(f'<text x="{x(i):.1f}" y="{top + ph + 15}" text-anchor="middle">{escape(xticks[i])}</text>')
    parts.append(f'<text x="{left + pw / 2:.1f}" y="{height - 8}" text-anchor="middle">{escape(xlabel)}</text>')
    parts.append(f'<text x="14" y="{top + ph / 2:.1f}" text-anchor="middle" '
                 f'transform="rotate(-90 14 {top + ph / 2:.1f})">{escape(ylabel)}</text>')
    for n, (label, a) in enumerate(series.items()):
        color = PALETTE[n % len(PALETTE)]
        with np.errstate(all="ignore"):
            mean, mn, mx = np.nanmean(a, 0), np.nanmin(a, 0), np.nanmax(a, 0)
        idx = [i for i in range(a.shape[1]) if np.isfinite(mean[i])]
        if not idx:
            continue
        band = [f"{x(i):.1f},{y(mx[i]):.1f}" for i in idx] + [f"{x(i):.1f},{y(mn[i]):.1f}" for i in reversed(idx)]
        parts.append(f'<polygon points="{" ".join(band)}" fill="{color}" fill-opacity="0.18" stroke="none"/>')
        line = " ".join(f"{x(i):.1f},{y(mean[i]):.1f}" for i in idx)
        parts.append(f'<polyline points="{line}" fill="none" stroke="{color}" stroke-width="1.6"/>')
        ly = top + 14 * n + 8
        parts.append(f'<line x1="{left + pw + 10}" y1="{ly}" x2="{left + pw + 28}" y2="{ly}" '
                     f'stroke="{color}" stroke-width="2"/>')
        parts.append(f'<text x="{left + pw + 32}" y="{ly + 4}">{escape(label)}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def _metric_matrix(per_seed: dict[int, list[MetricsRecord]], metric: str) -> np.ndarray:
    rows = [[np.nan if getattr(r, metric) is None else getattr(r, metric) for r in s]
            for s in per_seed.values()]
    width = max(len(r) for r in rows)
    return np.array([r + [np.nan] * (width - len(r)) for r in rows], dtype=float)


def emit_outputs(results: Results, out_dir: str | Path, plot: bool = False,
                 extra: dict | None = None) -> list[Path]:
    """Write one CSV per (method, seed), ``summary.json`` and optionally one SVG per metric."""
    if not results or not any(results.values()):
        raise ValueError("no results to write")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for method, per_seed in results.items():
        for seed, records in per_seed.items():
            path = out / f"{method}_seed{seed}.csv"
            write_records(records, path)
            written.append(path)
    summary = {"methods": summarize(results)}
    if extra:
        summary.update(extra)
    path = out / "summary.json"
    path.write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    written.append(path)
    if plot:
        for metric in PLOT_METRICS:
            series = {m: _metric_matrix(ps, metric) for m, ps in results.items() if ps}
            path = out / f"{metric}.svg"
            path.write_text(svg_line_chart(series, metric, metric), encoding="utf-8")
            written.append(path)
    return written


def emit_sweep(sweep: dict[float, Results], out_dir: str | Path, plot: bool = False) -> list[Path]:
    """Final accuracy per noise level and method; the x axis of the plot is the noise level."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    noises = sorted(sweep)
    methods = list(next(iter(sweep.values())))
    path = out / "sweep.csv"
    table: dict[str, list[list[float]]] = {m: [] for m in methods}
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["noise_level", "method", "seed", "final_accuracy", "final_f1_macro"])
        for noise in noises:
            for m in methods:
                finals = []
                for seed, recs in sweep[noise][m].items():
                    w.writerow([repr(noise), m, seed, repr(recs[-1].accuracy), repr(recs[-1].f1_macro)])
                    finals.append(recs[-1].accuracy)
                table[m].append(finals)
    written = [path]
    if plot:
        series = {m: np.array(table[m], dtype=float).T for m in methods}
        svg = svg_line_chart(series, "final accuracy vs noise level", "accuracy", "noise level",
                             [f"{n:g}" for n in noises])
        p = out / "sweep_accuracy.svg"
        p.write_text(svg, encoding="utf-8")
        written.append(p)
    return written
