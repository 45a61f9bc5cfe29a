import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from edss_markov import io as eio
from edss_markov.cli import main
from edss_markov.core import build_cohort
from edss_markov.sim import REFERENCE_BASELINE, SimConfig, simulate_cohort

from .test_paths import FIXTURE


def write_visits(path, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["subject_id", "month", "edss"])
        w.writerows(rows)
    return path


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


@pytest.fixture(scope="module")
def sim_csv(tmp_path_factory):
    d = tmp_path_factory.mktemp("sim")
    assert main(["simulate", "--out", str(d), "--seed", "3"]) == 0
    return d / "cohort.csv"


def run(*argv):
    return main([str(a) for a in argv])


class TestEstimate:
    def test_outputs(self, sim_csv, tmp_path):
        assert run("estimate", "--input", sim_csv, "--out", tmp_path) == 0
        names = sorted(p.name for p in tmp_path.glob("interval_*.csv"))
        assert len(names) == 12 and names[0] == "interval_00_03.csv" and names[-1] == "interval_33_36.csv"
        assert (tmp_path / "averaged.csv").exists()
        assert (tmp_path / "chained_00_36.csv").exists()
        m = eio.read_matrix_csv(tmp_path / "averaged.csv")
        assert m.entries.shape == (8, 8)
        rep = json.loads((tmp_path / "report.json").read_text())
        assert len(rep["intervals"]) == 12 and "zero_rows" in rep["averaged"]

    def test_bad_edss_names_line(self, tmp_path, capsys):
        rows = [[f"s{k}", 0, "2.0"] for k in range(55)] + [["bad", 0, "2.3"]]
        p = write_visits(tmp_path / "in.csv", rows)
        assert run("estimate", "--input", p, "--out", tmp_path / "o") == 2
        assert "line 57" in capsys.readouterr().err

    def test_empty_file(self, tmp_path, capsys):
        p = tmp_path / "empty.csv"
        p.write_text("")
        assert run("estimate", "--input", p, "--out", tmp_path / "o") == 2
        assert "EmptyCohort" in capsys.readouterr().err

    def test_bad_header(self, tmp_path):
        p = tmp_path / "h.csv"
        p.write_text("id,month,edss\na,0,2\n")
        assert run("estimate", "--input", p, "--out", tmp_path / "o") == 2

    def test_usage_errors(self, tmp_path):
        assert run("estimate", "--out", tmp_path) == 1
        assert run("nonsense") == 1
        assert main(["estimate"]) == 1


class TestFit:
    def test_three_variants(self, sim_csv, tmp_path):
        assert run("fit", "--input", sim_csv, "--out", tmp_path) == 0
        for name in ("baseline", "homogeneous", "inhomogeneous"):
            assert (tmp_path / f"fit_{name}.csv").exists()
            assert (tmp_path / f"fit_{name}.svg").read_text().startswith("<svg")
        header = next(csv.reader(open(tmp_path / "fit_baseline.csv")))
        assert header[:5] == ["month", "chi_sq", "df", "p_value", "n_remaining"]
        assert header[5:] == [f"observed_{i}" for i in range(8)] + [f"expected_{i}" for i in range(8)]

    def test_from_month_12(self, sim_csv, tmp_path):
        assert run("fit", "--input", sim_csv, "--out", tmp_path, "--variant", "HomogeneousPower",
                   "--from-month", 12) == 0
        rows = read_rows(tmp_path / "fit_homogeneous_from12.csv")
        assert rows[0]["month"] == "15" and rows[-1]["month"] == "36"

    def test_identical_cohorts_plausible(self, sim_csv, tmp_path):
        assert run("fit", "--input", sim_csv, "--validation", sim_csv, "--out", tmp_path,
                   "--variant", "inhomogeneous") == 0
        rep = json.loads((tmp_path / "report.json").read_text())
        v = rep["variants"]["inhomogeneous"]
        assert v["fit"] == "plausible"
        assert all(p["p_value"] > 0.001 for p in v["points"])


class TestClassify:
    def test_hand_fixture(self, tmp_path):
        rows = [[sid, 3 * k, x] for sid, (xs, _) in FIXTURE.items() for k, x in enumerate(xs)]
        p = write_visits(tmp_path / "f.csv", rows)
        assert run("classify", "--input", p, "--out", tmp_path / "o") == 0
        got = {r["subject_id"]: r["label"] for r in read_rows(tmp_path / "o" / "labels.csv")}
        assert got == {sid: lab.value for sid, (_, lab) in FIXTURE.items()}

    def test_single_stable(self, tmp_path):
        p = write_visits(tmp_path / "s.csv", [["a", 0, "2.0"], ["a", 3, "2.0"]])
        assert run("classify", "--input", p, "--out", tmp_path / "o") == 0
        s = json.loads((tmp_path / "o" / "summary.json").read_text())
        assert s["proportions"]["Stable"] == 1.0

    def test_excluded_count(self, tmp_path):
        p = write_visits(tmp_path / "s.csv", [["a", 0, "2.0"], ["a", 3, "3.0"], ["z", 0, "2.0"]])
        assert run("classify", "--input", p, "--out", tmp_path / "o") == 0
        s = json.loads((tmp_path / "o" / "summary.json").read_text())
        assert s["excluded_count"] == 1


WORKED_ROWS = [["p", 0, "2.0"], ["p", 9, "4.0"], ["p", 12, "3.0"], ["p", 15, "3.0"]]


class TestCdw:
    def test_worked_example(self, tmp_path):
        p = write_visits(tmp_path / "w.csv", WORKED_ROWS + [["p", 18, "3.0"]])
        assert run("cdw", "--input", p, "--out", tmp_path / "o") == 0
        ev = read_rows(tmp_path / "o" / "cdw_events.csv")
        assert ev == [{"subject_id": "p", "onset_month": "9", "trigger_edss": "4.0",
                       "threshold_edss": "3.0", "regressed": "false", "regression_month": ""}]
        for name in ("regression_table.csv", "cdw_figure.csv", "cdw_figure.svg", "report.json"):
            assert (tmp_path / "o" / name).exists()

    def test_worked_example_regression(self, tmp_path):
        p = write_visits(tmp_path / "w.csv", WORKED_ROWS + [["p", 18, "2.5"]])
        assert run("cdw", "--input", p, "--out", tmp_path / "o") == 0
        ev = read_rows(tmp_path / "o" / "cdw_events.csv")[0]
        assert (ev["regressed"], ev["regression_month"]) == ("true", "18")
        table = read_rows(tmp_path / "o" / "regression_table.csv")
        assert list(table[0]) == ["edss_at_cdw", "expected", "observed", "n", "t_value", "p_value"]

    def test_no_cdw(self, tmp_path, capsys):
        p = write_visits(tmp_path / "f.csv", [["a", 3 * k, "2.0"] for k in range(13)])
        assert run("cdw", "--input", p, "--out", tmp_path / "o") == 3
        assert "NoCdwEvents" in capsys.readouterr().err
        m = json.loads((tmp_path / "o" / "manifest.json").read_text())
        assert m["status"] == "exit 3"


class TestSimulate:
    def test_byte_identical(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        assert run("simulate", "--out", a, "--seed", 42) == 0
        assert run("simulate", "--out", b, "--seed", 42) == 0
        assert (a / "cohort.csv").read_bytes() == (b / "cohort.csv").read_bytes()

    def test_thread_count_irrelevant(self, tmp_path, monkeypatch):
        assert run("simulate", "--out", tmp_path / "a", "--seed", 42) == 0
        monkeypatch.setenv("EDSS_MARKOV_THREADS", "4")
        assert run("simulate", "--out", tmp_path / "b", "--seed", 42) == 0
        assert (tmp_path / "a" / "cohort.csv").read_bytes() == (tmp_path / "b" / "cohort.csv").read_bytes()

    def test_zero_subjects(self, tmp_path):
        cfg = tmp_path / "c.cfg"
        cfg.write_text("n_subjects = 0\n")
        assert run("simulate", "--config", cfg, "--out", tmp_path / "o") == 1

    def test_unknown_config_key(self, tmp_path):
        cfg = tmp_path / "c.cfg"
        cfg.write_text("# comment\nseeds = 3\n")
        assert run("simulate", "--config", cfg, "--out", tmp_path / "o") == 1

    def test_reference_baseline_summary(self, tmp_path):
        cfg = tmp_path / "c.cfg"
        cfg.write_text("n_subjects = 100000\nmatrix = calibrated\nseed = 5\n")
        assert run("simulate", "--config", cfg, "--out", tmp_path / "s") == 0
        assert run("report", "--input", tmp_path / "s" / "cohort.csv", "--out", tmp_path / "r") == 0
        s = json.loads((tmp_path / "r" / "summary.json").read_text())
        got = np.array(list(s["baseline_distribution"].values()))
        assert np.abs(got - REFERENCE_BASELINE).max() < 0.005

    def test_matrix_from_file(self, tmp_path):
        assert run("simulate", "--out", tmp_path / "a", "--seed", 1) == 0
        cfg = tmp_path / "c.cfg"
        cfg.write_text("matrix = a/truth_matrix.csv\nseed = 1\n")
        assert run("simulate", "--config", cfg, "--out", tmp_path / "b") == 0
        assert (tmp_path / "a" / "cohort.csv").read_bytes() == (tmp_path / "b" / "cohort.csv").read_bytes()


class TestRoundTrip:
    def test_cohort_csv(self, tmp_path):
        c = simulate_cohort(SimConfig(300, REFERENCE_BASELINE, np.full((8, 8), 1 / 8), 0.05, seed=1))
        eio.write_cohort_csv(c, tmp_path / "c.csv")
        assert build_cohort(eio.read_visits_csv(tmp_path / "c.csv")) == c

    def test_matrix_csv(self, tmp_path, rng):
        from edss_markov.chain import TransitionMatrix
        from .oracles import random_stochastic
        m = TransitionMatrix(random_stochastic(rng, 8))
        eio.write_matrix_csv(m, tmp_path / "m.csv")
        back = eio.read_matrix_csv(tmp_path / "m.csv")
        assert np.abs(back.entries - m.entries).max() < 1e-11


class TestManifest:
    def test_contents_and_reproducibility(self, sim_csv, tmp_path):
        for d in ("a", "b"):
            assert run("cdw", "--input", sim_csv, "--out", tmp_path / d) == 0
        m = json.loads((tmp_path / "a" / "manifest.json").read_text())
        assert m["command"] == "cdw" and m["status"] == "ok"
        assert str(sim_csv) in m["inputs"] and len(m["inputs"][str(sim_csv)]) == 64
        files = {p.name for p in (tmp_path / "a").iterdir()} - {"manifest.json"}
        assert set(m["artifacts"]) == files
        for name in files:
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes(), name

    def test_module_entry_point(self, tmp_path):
        r = subprocess.run([sys.executable, "-m", "edss_markov", "simulate", "--out", str(tmp_path)],
                           capture_output=True, text=True)
        assert r.returncode == 0, r.stderr
        assert (tmp_path / "manifest.json").exists()
