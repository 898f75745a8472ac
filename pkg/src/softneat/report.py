"""Hand-written SVG line charts and cross-experiment summaries."""
from __future__ import annotations

import csv
import io
import math
from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def _fmt(v):
    return f"{v:.2f}"


def render_svg(series, title="", xlabel="generation", ylabel="displacement (mm)", scale=1e3,
               width=640, height=400):
    """SVG text of mean curves with shaded +-CI bands.

    ``series`` holds (label, generations, mean, half_width or None) tuples;
    values are multiplied by ``scale`` (metres to millimetres by default).
    """
    ml, mr, mt, mb = 64, 16, 32, 48
    pw, ph = width - ml - mr, height - mt - mb
    prepared = []
    for label, gens, mean, ci in series:
        g = np.asarray(gens, dtype=float)
        m = np.asarray(mean, dtype=float) * scale
        c = np.zeros_like(m) if ci is None else np.asarray(ci, dtype=float) * scale
        ok = np.isfinite(m) & np.isfinite(c)
        prepared.append((label, g[ok], m[ok], c[ok]))
    xs = np.concatenate([p[1] for p in prepared] + [np.zeros(1)])
    lo = np.concatenate([p[2] - p[3] for p in prepared] + [np.zeros(1)])
    hi = np.concatenate([p[2] + p[3] for p in prepared] + [np.zeros(1)])
    x0, x1 = float(xs.min()), float(max(xs.max(), xs.min() + 1))
    y0, y1 = float(min(lo.min(), 0.0)), float(hi.max())
    if y1 <= y0:
        y1 = y0 + 1.0

    def px(x):
        return ml + (x - x0) / (x1 - x0) * pw

    def py(y):
        return mt + ph - (y - y0) / (y1 - y0) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width / 2}" y="20" text-anchor="middle" font-size="14">{escape(title)}</text>',
        f'<line x1="{ml}" y1="{mt + ph}" x2="{ml + pw}" y2="{mt + ph}" stroke="black"/>',
        f'<line x1="{ml}" y1="{mt}" x2="{ml}" y2="{mt + ph}" stroke="black"/>',
    ]
    for t in np.linspace(y0, y1, 5):
        out.append(f'<line x1="{ml - 4}" y1="{_fmt(py(t))}" x2="{ml}" y2="{_fmt(py(t))}" stroke="black"/>')
        out.append(f'<text x="{ml - 6}" y="{_fmt(py(t) + 4)}" text-anchor="end">{t:.3g}</text>')
    for t in np.linspace(x0, x1, 5):
        out.append(f'<text x="{_fmt(px(t))}" y="{mt + ph + 16}" text-anchor="middle">{t:.0f}</text>')
    out.append(f'<text x="{ml + pw / 2}" y="{height - 10}" text-anchor="middle">{escape(xlabel)}</text>')
    out.append(
        f'<text x="14" y="{mt + ph / 2}" text-anchor="middle" '
        f'transform="rotate(-90 14 {mt + ph / 2})">{escape(ylabel)}</text>'
    )
    for k, (label, g, m, c) in enumerate(prepared):
        colour = PALETTE[k % len(PALETTE)]
        if len(g) == 0:
            continue
        if np.any(c > 0):
            band = [(px(a), py(b)) for a, b in zip(g, m + c)]
            band += [(px(a), py(b)) for a, b in zip(g[::-1], (m - c)[::-1])]
            pts = " ".join(f"{_fmt(a)},{_fmt(b)}" for a, b in band)
            out.append(f'<polygon points="{pts}" fill="{colour}" fill-opacity="0.2" stroke="none"/>')
        pts = " ".join(f"{_fmt(px(a))},{_fmt(py(b))}" for a, b in zip(g, m))
        out.append(f'<polyline points="{pts}" fill="none" stroke="{colour}" stroke-width="2"/>')
        ly = mt + 14 + 16 * k
        out.append(f'<line x1="{ml + 10}" y1="{ly - 4}" x2="{ml + 30}" y2="{ly - 4}" stroke="{colour}" stroke-width="2"/>')
        out.append(f'<text x="{ml + 36}" y="{ly}">{escape(str(label))}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def write_svg(path, series, **kw):
    Path(path).write_text(render_svg(series, **kw))


def _read_config(path):
    cfg = {}
    f = Path(path, "config.txt")
    if f.exists():
        for line in f.read_text().splitlines():
            if "=" in line:
                k, v = (s.strip() for s in line.split("=", 1))
                cfg[k] = v
    return cfg


def _read_champions(path):
    f = Path(path, "champions.csv")
    if not f.exists():
        return []
    return list(csv.DictReader(io.StringIO(f.read_text())))


def experiment_dirs(root):
    """``root`` itself if it holds runs, else its subdirectories that do (sorted)."""
    root = Path(root)
    if (root / "runs").is_dir():
        return [root]
    return sorted(p for p in root.iterdir() if (p / "runs").is_dir())


SUMMARY_COLUMNS = (
    "experiment",
    "algorithm",
    "dictionary",
    "runs",
    "median_final_best",
    "mean_final_best",
    "ci95_final_best",
    "mean_connections",
    "mean_hidden_nodes",
    "mean_aptitude",
)


def summarize(path):
    """Summary row (dict) for one experiment directory."""
    from .experiment import load_records
    from .harness import ci95

    records = load_records(path)
    cfg = _read_config(path)
    finals = [r.champion_fitness for r in records]
    champs = _read_champions(path)

    def mean_of(col):
        vals = [float(c[col]) for c in champs if c.get(col) not in (None, "")]
        return float(np.mean(vals)) if vals else math.nan

    return {
        "experiment": Path(path).name,
        "algorithm": cfg.get("algorithm", ""),
        "dictionary": cfg.get("dictionary", ""),
        "runs": len(records),
        "median_final_best": float(np.median(finals)) if finals else math.nan,
        "mean_final_best": float(np.mean(finals)) if finals else math.nan,
        "ci95_final_best": float(ci95(finals)[1][0]) if len(finals) >= 2 else math.nan,
        "mean_connections": mean_of("connections"),
        "mean_hidden_nodes": mean_of("hidden_nodes"),
        "mean_aptitude": mean_of("aptitude"),
    }


def report(in_dir, out_dir):
    """Rebuild metrics and charts from run CSVs; returns the summary rows.

    Writes ``summary.csv``, ``metrics_<experiment>.csv`` for each experiment
    found, and ``fitness.svg`` overlaying their best-so-far curves.
    """
    from .experiment import MetricsBundle, curve_stats, load_records

    dirs = experiment_dirs(in_dir)
    if not dirs:
        raise FileNotFoundError(f"no experiment runs under {str(in_dir)!r}")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows, series = [], []
    for d in dirs:
        records = load_records(d)
        gens, bm, bc, sm, sc = curve_stats(records)
        name = d.name
        (out / f"metrics_{name}.csv").write_text(MetricsBundle(gens, bm, bc, sm, sc).metrics_csv())
        row = summarize(d)
        rows.append(row)
        series.append((row["algorithm"] or name, gens, sm, sc))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SUMMARY_COLUMNS)
    for row in rows:
        w.writerow([repr(v) if isinstance(v, float) else v for v in (row[c] for c in SUMMARY_COLUMNS)])
    (out / "summary.csv").write_text(buf.getvalue())
    write_svg(out / "fitness.svg", series, title="best fitness so far, mean +- 95% CI")
    return rows


__all__ = ["SUMMARY_COLUMNS", "experiment_dirs", "render_svg", "report", "summarize", "write_svg"]
