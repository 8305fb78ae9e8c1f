"""CSV report tables and the Quality-Load figure."""

import csv

import pytest

from flipperbench.metrics import QualityLoadPoint
from flipperbench.report import (
    quality_load_graph,
    read_scores_csv,
    write_report_tables,
    write_scores_csv,
)


def point(method, obstacle, traversed=True, tq=0.8, cl=0.7):
    if not traversed:
        return QualityLoadPoint(method=method, obstacle=obstacle, cl_n=1.0,
                                tq_n=0.0, s_n=0.0, d_n=0.0, traversed=False)
    return QualityLoadPoint(method=method, obstacle=obstacle, cl_n=cl,
                            tq_n=tq, s_n=tq, d_n=tq, traversed=True,
                            cl_raw=3.0, cl_sigmoid=1.0 - cl)


def score_set(methods=("m1", "m2"), n_obstacles=4):
    pts = []
    for mi, m in enumerate(methods):
        for ob in range(1, n_obstacles + 1):
            traversed = not (mi == 0 and ob == n_obstacles)
            pts.append(point(m, ob, traversed, tq=0.5 + 0.1 * ob, cl=0.9 - 0.1 * ob))
    return pts


class TestScoresCsv:
    def test_round_trip(self, tmp_path):
        pts = score_set()
        p = tmp_path / "scores.csv"
        write_scores_csv(pts, p)
        back = read_scores_csv(p)
        assert len(back) == len(pts)
        for a, b in zip(back, pts):
            assert (a.method, a.obstacle, a.traversed) == (b.method, b.obstacle, b.traversed)
            assert a.tq_n == pytest.approx(b.tq_n, abs=1e-6)
            assert a.cl_n == pytest.approx(b.cl_n, abs=1e-6)

    def test_report_tables_cover_all_metrics(self, tmp_path):
        paths = write_report_tables(score_set(), tmp_path)
        for key in ("scores", "means", "shock", "distance", "quality", "load"):
            assert key in paths and paths[key].exists()
        with open(paths["shock"]) as f:
            rows = list(csv.reader(f))
        assert rows[0][0] == "method"
        # untraversed cell renders as the failure marker
        flat = [c for row in rows for c in row]
        assert "x" in flat


class TestQualityLoadGraph:
    def test_row_counts_and_failure_corner(self, tmp_path):
        pts = score_set(methods=("a", "b", "c"), n_obstacles=5)
        svg = tmp_path / "ql.svg"
        out_csv = tmp_path / "ql.csv"
        quality_load_graph(pts, svg, out_csv)
        with open(out_csv) as f:
            rows = list(csv.DictReader(f))
        point_rows = [r for r in rows if r["obstacle"] != "*"]
        mean_rows = [r for r in rows if r["obstacle"] == "*"]
        assert len(point_rows) == 15
        assert len(mean_rows) == 3
        failed = [r for r in point_rows if r["traversed"] == "0"]
        assert failed and all(
            float(r["cl_n"]) == 1.0 and float(r["tq_n"]) == 0.0 for r in failed
        )
        assert svg.read_bytes().startswith(b"<?xml")

    def test_svg_and_csv_are_byte_deterministic(self, tmp_path):
        pts = score_set()
        outs = []
        for i in range(2):
            svg = tmp_path / f"ql{i}.svg"
            c = tmp_path / f"ql{i}.csv"
            quality_load_graph(pts, svg, c)
            outs.append((svg.read_bytes(), c.read_bytes()))
        assert outs[0] == outs[1]
