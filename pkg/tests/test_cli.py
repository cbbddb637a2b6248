import csv
import json

import numpy as np
import pytest

from corrda.cli import EXIT_DATA, EXIT_OK, EXIT_SOLVER, EXIT_USAGE, OUT_ENV, main
from corrda.data import load_csv


def rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


@pytest.fixture(scope="module")
def moons_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("moons")
    assert main(["gen-moons", "--per-class", "20", "--angle", "50", "--seed", "7", "--out", str(out)]) == EXIT_OK
    return out


def run_twice(tmp_path, argv):
    outs = []
    for k in range(2):
        out = tmp_path / f"run{k}"
        assert main(argv + ["--out", str(out)]) == EXIT_OK
        outs.append(out)
    return outs


def assert_identical_csvs(a, b, skip=()):
    names = sorted(p.name for p in a.glob("*.csv"))
    assert names == sorted(p.name for p in b.glob("*.csv")) and names
    for n in names:
        if n not in skip:
            assert (a / n).read_bytes() == (b / n).read_bytes(), n


class TestGenMoons:
    def test_outputs(self, moons_dir):
        man = json.loads((moons_dir / "manifest.json").read_text())
        assert man["files"] == ["source.csv", "target.csv", "target_test.csv"]
        assert load_csv(moons_dir / "source.csv").n == 40
        assert load_csv(moons_dir / "target_test.csv").n == 1000
        assert man["config"]["rotation_deg"] == 50.0 and man["seed"] == 7

    def test_deterministic(self, tmp_path):
        a, b = run_twice(tmp_path, ["gen-moons", "--per-class", "15", "--angle", "30", "--seed", "3"])
        assert_identical_csvs(a, b)

    def test_angle_zero_same_distribution(self, tmp_path):
        assert main(["gen-moons", "--per-class", "200", "--angle", "0", "--noise", "0", "--out", str(tmp_path)]) == EXIT_OK
        s, t = load_csv(tmp_path / "source.csv"), load_csv(tmp_path / "target.csv")
        # Same two noise-free arcs: identical bounding boxes up to sampling.
        np.testing.assert_allclose(s.features.min(axis=0), t.features.min(axis=0), atol=0.05)
        np.testing.assert_allclose(s.features.max(axis=0), t.features.max(axis=0), atol=0.05)

    def test_env_default_out(self, tmp_path, monkeypatch):
        monkeypatch.setenv(OUT_ENV, str(tmp_path / "env"))
        assert main(["gen-moons", "--per-class", "5"]) == EXIT_OK
        assert (tmp_path / "env" / "manifest.json").exists()

    def test_bad_angle_is_usage_error(self, tmp_path):
        assert main(["gen-moons", "--angle", "400", "--out", str(tmp_path)]) == EXIT_USAGE


class TestAdapt:
    def test_outputs_round_trip(self, moons_dir, tmp_path):
        argv = ["adapt", "--source", str(moons_dir / "source.csv"), "--target", str(moons_dir / "target.csv"),
                "--max-iters", "15", "--emit-correspondence", "--out", str(tmp_path)]
        assert main(argv) == EXIT_OK
        man = json.loads((tmp_path / "manifest.json").read_text())
        assert set(man["files"]) == {"adapted_source.csv", "mapping.csv", "cg_trace.csv", "correspondence.csv"}
        assert man["config"]["lambda_s"] == 1.0 and man["config"]["n_t_rounds"] == 1
        assert len(man["objective_by_round"]) == 1
        adapted = load_csv(tmp_path / "adapted_source.csv")
        np.testing.assert_array_equal(adapted.labels, load_csv(moons_dir / "source.csv").labels)
        c = load_csv(tmp_path / "correspondence.csv", label_column=None).features
        np.testing.assert_allclose(c.sum(axis=1), 1.0)
        assert rows(tmp_path / "cg_trace.csv")[0] == ["round", "iteration", "objective", "gap", "step"]

    def test_deterministic(self, moons_dir, tmp_path):
        argv = ["adapt", "--source", str(moons_dir / "source.csv"), "--target", str(moons_dir / "target.csv"),
                "--lambda-s", "0.01", "--lambda-g", "0.1", "--max-iters", "20", "--nt", "2", "--emit-correspondence"]
        a, b = run_twice(tmp_path, argv)
        assert_identical_csvs(a, b)

    def test_lambda_zero(self, moons_dir, tmp_path):
        argv = ["adapt", "--source", str(moons_dir / "source.csv"), "--target", str(moons_dir / "target.csv"),
                "--lambda-s", "0", "--lambda-g", "0", "--max-iters", "5", "--out", str(tmp_path)]
        assert main(argv) == EXIT_OK

    def test_missing_file(self, moons_dir, tmp_path):
        argv = ["adapt", "--source", str(tmp_path / "nope.csv"), "--target", str(moons_dir / "target.csv"), "--out", str(tmp_path)]
        assert main(argv) == EXIT_DATA
        assert not (tmp_path / "manifest.json").exists()

    def test_unlabelled_source(self, moons_dir, tmp_path):
        p = tmp_path / "u.csv"
        p.write_text("a,b\n0,1\n1,0\n")
        argv = ["adapt", "--source", str(p), "--target", str(moons_dir / "target.csv"), "--out", str(tmp_path)]
        assert main(argv) == EXIT_DATA

    def test_dimension_mismatch(self, moons_dir, tmp_path):
        p = tmp_path / "t3.csv"
        p.write_text("a,b,c\n0,1,2\n1,0,2\n")
        argv = ["adapt", "--source", str(moons_dir / "source.csv"), "--target", str(p), "--out", str(tmp_path)]
        assert main(argv) == EXIT_DATA

    def test_solver_failure_exit_code(self, moons_dir, tmp_path, monkeypatch):
        from corrda.transport import SolverError
        import corrda.cli

        def boom(*a, **k):
            raise SolverError("pivot limit reached")

        monkeypatch.setattr(corrda.cli, "adapt", boom)
        argv = ["adapt", "--source", str(moons_dir / "source.csv"), "--target", str(moons_dir / "target.csv"), "--out", str(tmp_path)]
        assert main(argv) == EXIT_SOLVER

    def test_usage_errors(self, moons_dir, tmp_path):
        with pytest.raises(SystemExit) as exc:
            main(["adapt", "--bogus"])
        assert exc.value.code == EXIT_USAGE
        argv = ["adapt", "--source", str(moons_dir / "source.csv"), "--target", str(moons_dir / "target.csv"),
                "--lambda-s", "-1", "--out", str(tmp_path)]
        assert main(argv) == EXIT_USAGE


class TestEval:
    def test_self_is_perfect(self, moons_dir, tmp_path):
        src = str(moons_dir / "source.csv")
        assert main(["eval", "--train", src, "--test", src, "--out", str(tmp_path)]) == EXIT_OK
        r = rows(tmp_path / "metrics.csv")
        assert len(r) == 2
        assert r[0] == ["classifier", "n_test", "accuracy", "accuracy_class_0", "accuracy_class_1"]
        assert float(r[1][2]) == 1.0

    def test_svm_deterministic(self, moons_dir, tmp_path):
        argv = ["eval", "--train", str(moons_dir / "source.csv"), "--test", str(moons_dir / "target_test.csv"), "--clf", "svm"]
        a, b = run_twice(tmp_path, argv)
        assert_identical_csvs(a, b)
        man = json.loads((a / "manifest.json").read_text())
        assert "svm_gamma" in man["config"]

    def test_label_column_absent(self, moons_dir, tmp_path):
        p = tmp_path / "u.csv"
        p.write_text("x0,x1\n0,1\n")
        argv = ["eval", "--train", str(moons_dir / "source.csv"), "--test", str(p), "--out", str(tmp_path)]
        assert main(argv) == EXIT_DATA


class TestTune:
    def test_grid_and_selection(self, moons_dir, tmp_path):
        argv = ["tune", "--source", str(moons_dir / "source.csv"), "--target", str(moons_dir / "target.csv"),
                "--grid", "0.1,1", "--folds", "3", "--max-iters", "10"]
        a, b = run_twice(tmp_path, argv)
        assert_identical_csvs(a, b)
        report = rows(a / "rv_report.csv")
        assert len(report) == 1 + 4 * 3
        means = {(r[0], r[1]): float(r[4]) for r in report[1:]}
        sel = rows(a / "selected.csv")[1]
        assert means[(sel[0], sel[1])] == max(means.values())

    def test_default_folds(self):
        from corrda.cli import build_parser
        args = build_parser().parse_args(["tune", "--source", "s", "--target", "t"])
        assert args.folds == 5 and args.grid is None


class TestBenches:
    def test_toy_seven_rows(self, tmp_path):
        argv = ["bench-toy", "--trials", "1", "--per-class", "10", "--n-test", "50", "--clf", "1nn", "--max-iters", "3"]
        a, b = run_twice(tmp_path, argv)
        assert_identical_csvs(a, b)
        r = rows(a / "toy_results.csv")
        assert [int(x[0]) for x in r[1:]] == [10, 20, 30, 40, 50, 70, 90]

    def test_flow_columns(self, tmp_path):
        a, b = run_twice(tmp_path, ["bench-flow", "--sizes", "5,10", "--max-iters", "3"])
        assert_identical_csvs(a, b, skip={"flow_timings.csv"})
        r = rows(a / "flow_timings.csv")
        assert r[0] == ["n", "baseline_s", "netsimplex_s", "speedup"]
        assert [x[0] for x in r[1:]] == ["5", "10"]
