"""Report emission: score/means CSVs, per-metric comparison tables, and the
Quality-Load scatter (CSV contract plus a rendered SVG figure)."""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from .errors import ValidationError
from .metrics import MethodMeans, QualityLoadPoint, aggregate

FAIL_MARK = "x"
PASS_MARK = "ok"


def _fmt(v: float) -> str:
    return f"{v:.6f}"


def write_scores_csv(points, path) -> None:
    """One row per (method, obstacle)."""
    rows = sorted(points, key=lambda p: (p.method, p.obstacle))
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["method", "obstacle", "traversed", "s_n", "d_n", "tq_n", "cl_raw", "cl_n"])
        for p in rows:
            w.writerow([
                p.method, p.obstacle, int(p.traversed),
                _fmt(p.s_n), _fmt(p.d_n), _fmt(p.tq_n), _fmt(p.cl_raw), _fmt(p.cl_n),
            ])


def read_scores_csv(path) -> list:
    points = []
    with open(path, newline="") as f:
        for row in csv.DictReader(f):
            points.append(QualityLoadPoint(
                method=row["method"], obstacle=int(row["obstacle"]),
                traversed=bool(int(row["traversed"])),
                s_n=float(row["s_n"]), d_n=float(row["d_n"]),
                tq_n=float(row["tq_n"]), cl_raw=float(row["cl_raw"]),
                cl_n=float(row["cl_n"]),
            ))
    return points


def write_means_csv(points, path) -> None:
    """Per-method means with per-obstacle traverse marks (headline table shape)."""
    means = aggregate(points)
    obstacles = sorted({p.obstacle for p in points})
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["method", "mean_cl_n", "mean_tq_n"] + [str(o) for o in obstacles])
        for m in means:
            marks = [PASS_MARK if t else FAIL_MARK for t in m.traversed]
            w.writerow([m.method, _fmt(m.cl_n), _fmt(m.tq_n)] + marks)


def write_metric_table_csv(points, metric: str, path) -> None:
    """Comparison-table shape: per-method mean then per-obstacle cells.

    metric: one of s_n, d_n, tq_n, cl_n; failed cells print the fail mark.
    """
    means = aggregate(points)
    by = {(p.method, p.obstacle): p for p in points}
    obstacles = sorted({p.obstacle for p in points})
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["method", "mean"] + [str(o) for o in obstacles])
        for m in means:
            cells = []
            for o in obstacles:
                p = by[(m.method, o)]
                if not p.traversed and metric != "cl_n":
                    cells.append(FAIL_MARK)
                else:
                    cells.append(f"{getattr(p, metric):.4f}")
            w.writerow([m.method, f"{getattr(m, metric):.4f}"] + cells)


def write_report_tables(points, out_dir) -> dict:
    """Emit the full report set; returns {name: path}."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {}
    paths["scores"] = out / "scores.csv"
    write_scores_csv(points, paths["scores"])
    paths["means"] = out / "means.csv"
    write_means_csv(points, paths["means"])
    for name, metric in (
        ("shock", "s_n"), ("distance", "d_n"), ("quality", "tq_n"), ("load", "cl_n"),
    ):
        paths[name] = out / f"{name}.csv"
        write_metric_table_csv(points, metric, paths[name])
    return paths


def quality_load_graph(points, out_svg, out_csv) -> None:
    """Scatter of (CL_n, TQ_n): one marker per (method, obstacle) plus one mean
    marker per method. The CSV carries the plotted coordinates; the SVG is the
    rendered figure."""
    if not points:
        raise ValidationError("no score points to plot")
    means = aggregate(points)
    rows = sorted(points, key=lambda p: (p.method, p.obstacle))
    with open(out_csv, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["method", "obstacle", "cl_n", "tq_n", "traversed"])
        for p in rows:
            w.writerow([p.method, p.obstacle, _fmt(p.cl_n), _fmt(p.tq_n),
                        int(p.traversed)])
        for m in means:
            w.writerow([m.method, "*", _fmt(m.cl_n), _fmt(m.tq_n), ""])

    plt.rcParams["svg.hashsalt"] = "flipperbench"
    fig, ax = plt.subplots(figsize=(6, 5))
    methods = sorted({p.method for p in points})
    cmap = plt.get_cmap("tab10")
    for i, method in enumerate(methods):
        pts = [p for p in rows if p.method == method]
        ax.scatter(
            [p.cl_n for p in pts], [p.tq_n for p in pts],
            s=18, color=cmap(i % 10), alpha=0.7, label=method,
        )
    for i, m in enumerate(means):
        ax.scatter([m.cl_n], [m.tq_n], s=140, color=cmap(i % 10),
                   marker="*", edgecolors="black", linewidths=0.8, zorder=3)
    ax.set_xlabel("normalized cognitive load (higher = more load)")
    ax.set_ylabel("normalized traversal quality")
    ax.set_xlim(-0.02, 1.02)
    ax.set_ylim(-0.02, 1.02)
    ax.grid(True, alpha=0.3)
    ax.legend(loc="lower left", fontsize=7)
    fig.tight_layout()
    fig.savefig(out_svg, format="svg", metadata={"Date": None})
    plt.close(fig)
