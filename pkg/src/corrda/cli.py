"""Command-line entry point: ``corrda <command> [flags]``.

Exit codes: 0 success, 1 usage error, 2 data error, 3 solver failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
import time
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import __version__
from .affinity import DegenerateBandwidthError
from .cg import CgConfig, InfeasibleStartError, NonFiniteObjectiveError
from .classifiers import SvmConvergenceError, make_classifier
from .data import DataError, MoonsSpec, generate_moons, generate_moons_test, load_csv, save_csv, save_matrix_csv
from .experiments import FLOW_MAX_ITERS, FLOW_SIZES, TOY_ANGLES, TOY_CONFIG, bench_flow, bench_toy
from .pipeline import AdaptationConfig, adapt
from .transport import SolverError
from .validation import DEFAULT_GRID_VALUES, GridSpec, reverse_validate

OUT_ENV = "CORRDA_OUT"
EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_SOLVER = 0, 1, 2, 3
GRID_MIDPOINT = 1.0

logger = logging.getLogger("corrda")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


class RunManifest:
    """Audit record of one command; written last, so its presence marks a complete run."""

    def __init__(self, command: str, out: Path, seed: int, config: dict):
        self.out = out
        self.data = {"command": command, "version": __version__, "seed": seed, "config": config,
                     "timings_ms": {}, "objective_by_round": [], "files": []}
        self._t = time.perf_counter()

    def stage(self, name: str):
        now = time.perf_counter()
        self.data["timings_ms"][name] = round(1000.0 * (now - self._t), 3)
        self._t = now

    def add(self, path: Path) -> Path:
        self.data["files"].append(str(Path(path).name))
        return path

    def write(self) -> Path:
        path = self.out / "manifest.json"
        path.write_text(json.dumps(self.data, indent=2, sort_keys=True) + "\n")
        return path


def _floats(text: str) -> tuple[float, ...]:
    try:
        vals = tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None
    if not vals:
        raise argparse.ArgumentTypeError("empty list")
    return vals


def _ints(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _out_dir(args) -> Path:
    out = Path(args.out if args.out is not None else os.environ.get(OUT_ENV, "."))
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise DataError(f"cannot create output directory {out}: {exc}") from None
    return out


def _load(path, label_column, need_labels: bool, what: str):
    s = load_csv(path, label_column=label_column)
    if need_labels and not s.labelled:
        raise DataError(f"{what} {path}: label column {label_column!r} absent")
    return s


def _check_dims(a, b):
    if a.d != b.d:
        raise DataError(f"source has {a.d} features, target has {b.d}")


def _cfg_from(args, lambda_s, lambda_g) -> AdaptationConfig:
    return AdaptationConfig(
        lambda_s=lambda_s,
        lambda_g=lambda_g,
        n_t_rounds=args.nt,
        ridge=args.ridge,
        cg=CgConfig(max_iters=args.max_iters, gap_tolerance=args.gap_tol),
        sigma_source=args.sigma_s,
        sigma_target=args.sigma_t,
        seed=args.seed,
    )


# ---------------------------------------------------------------- commands


def cmd_gen_moons(args) -> int:
    out = _out_dir(args)
    spec = MoonsSpec(per_class=args.per_class, rotation_deg=args.angle, noise_std=args.noise, seed=args.seed)
    man = RunManifest("gen-moons", out, args.seed, {**asdict(spec), "n_test": args.n_test})
    src, tgt = generate_moons(spec)
    test = generate_moons_test(spec, args.n_test)
    man.stage("generate")
    for name, s in (("source.csv", src), ("target.csv", tgt), ("target_test.csv", test)):
        man.add(save_csv(s, out / name))
    man.stage("write")
    man.write()
    return EXIT_OK


def cmd_adapt(args) -> int:
    out = _out_dir(args)
    cfg = _cfg_from(args, args.lambda_s, args.lambda_g)
    man = RunManifest("adapt", out, args.seed, {**cfg.to_dict(), "source": str(args.source), "target": str(args.target)})
    src = _load(args.source, args.label_column, True, "source")
    tgt = _load(args.target, args.label_column, False, "target")
    _check_dims(src, tgt)
    man.stage("load")
    res = adapt(src, tgt.unlabelled(), cfg)
    man.stage("adapt")
    for k, v in res.timings.items():
        man.data["timings_ms"][f"adapt.{k}"] = round(1000.0 * v, 3)
    man.data["objective_by_round"] = res.objective_by_round
    man.data["initial_objective_by_round"] = res.initial_objective_by_round
    man.data["converged_by_round"] = [t.converged for t in res.traces]
    man.add(save_csv(res.adapted_source, out / "adapted_source.csv", label_column=args.label_column))
    man.add(res.composite_map.to_csv(out / "mapping.csv"))
    trace_path = out / "cg_trace.csv"
    with trace_path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["round", "iteration", "objective", "gap", "step"])
        for r, tr in enumerate(res.traces, start=1):
            for t, (f, g, a) in enumerate(zip(tr.objective, tr.gap, tr.step), start=1):
                w.writerow([r, t, repr(f), repr(g), repr(a)])
    man.add(trace_path)
    if args.emit_correspondence:
        man.add(save_matrix_csv(res.final_correspondence, out / "correspondence.csv"))
    man.stage("write")
    man.write()
    return EXIT_OK


def cmd_eval(args) -> int:
    out = _out_dir(args)
    man = RunManifest("eval", out, args.seed, {"train": str(args.train), "test": str(args.test), "clf": args.clf})
    train = _load(args.train, args.label_column, True, "train")
    test = _load(args.test, args.label_column, True, "test")
    if train.d != test.d:
        raise DataError(f"train has {train.d} features, test has {test.d}")
    man.stage("load")
    clf = make_classifier(args.clf, seed=args.seed).fit(train.features, train.labels)
    pred = clf.predict(test.features)
    man.stage("classify")
    classes = range(max(train.class_count, test.class_count))
    per_class = [float(np.mean(pred[test.labels == c] == c)) if np.any(test.labels == c) else float("nan") for c in classes]
    path = out / "metrics.csv"
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["classifier", "n_test", "accuracy"] + [f"accuracy_class_{c}" for c in classes])
        w.writerow([args.clf, test.n, repr(float(np.mean(pred == test.labels)))] + [repr(v) for v in per_class])
    man.add(path)
    if hasattr(clf, "params_"):
        man.data["config"]["svm_gamma"], man.data["config"]["svm_c"] = clf.params_
    man.write()
    return EXIT_OK


def cmd_bench_toy(args) -> int:
    out = _out_dir(args)
    cfg = AdaptationConfig(
        lambda_s=args.lambda_s, lambda_g=args.lambda_g, n_t_rounds=args.nt, ridge=args.ridge,
        cg=CgConfig(max_iters=args.max_iters, gap_tolerance=args.gap_tol),
    )
    man = RunManifest("bench-toy", out, args.seed, {**cfg.to_dict(), "angles": list(args.angles), "trials": args.trials,
                                                    "clf": args.clf, "per_class": args.per_class, "n_test": args.n_test})
    res = bench_toy(args.angles, args.trials, args.clf, cfg, args.per_class, args.n_test, args.seed, args.jobs)
    man.stage("bench")
    man.add(res.to_csv(out / "toy_results.csv"))
    man.add(res.trials_to_csv(out / "toy_trials.csv"))
    man.write()
    return EXIT_OK


def cmd_bench_flow(args) -> int:
    out = _out_dir(args)
    man = RunManifest("bench-flow", out, args.seed, {"sizes": list(args.sizes), "max_iters": args.max_iters})
    res = bench_flow(args.sizes, seed=args.seed, max_iters=args.max_iters)
    man.stage("bench")
    man.add(res.to_csv(out / "flow_timings.csv"))
    # Wall-clock free companion table, reproducible byte for byte.
    path = out / "flow_subproblems.csv"
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["n", "n_source", "n_target", "subproblems"])
        for n, k in zip(res.sizes, res.subproblems):
            w.writerow([n, 2 * n, 2 * n, k])
    man.add(path)
    man.write()
    return EXIT_OK


def cmd_tune(args) -> int:
    out = _out_dir(args)
    grid_s = args.grid_s or args.grid or DEFAULT_GRID_VALUES
    grid_g = args.grid_g or args.grid or DEFAULT_GRID_VALUES
    grid = GridSpec(grid_s, grid_g)
    cfg = _cfg_from(args, 0.0, 0.0)
    man = RunManifest("tune", out, args.seed, {**cfg.to_dict(), "grid_s": list(grid.lambda_s_values),
                                               "grid_g": list(grid.lambda_g_values), "folds": args.folds,
                                               "clf": args.clf, "map_held_out": not args.no_map_held_out})
    src = _load(args.source, args.label_column, True, "source")
    # Reverse validation must not see target labels: load the features only.
    tgt = _load(args.target, args.label_column, False, "target").unlabelled()
    _check_dims(src, tgt)
    man.stage("load")
    rep = reverse_validate(src, tgt, grid, args.folds, cfg, args.clf, not args.no_map_held_out, args.jobs)
    man.stage("tune")
    man.add(rep.to_csv(out / "rv_report.csv"))
    path = out / "selected.csv"
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["lambda_s", "lambda_g", "mean_accuracy"])
        w.writerow([repr(rep.selected[0]), repr(rep.selected[1]), repr(rep.mean_for(rep.selected))])
    man.add(path)
    man.data["selected"] = list(rep.selected)
    man.write()
    return EXIT_OK


# ---------------------------------------------------------------- parser


def _common(p, jobs=False):
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None, help=f"output directory (default: ${OUT_ENV} or .)")
    p.add_argument("--label-column", default="label")
    if jobs:
        p.add_argument("--jobs", type=int, default=1, help="worker processes")


def _adapt_flags(p, lambdas=True):
    if lambdas:
        p.add_argument("--lambda-s", type=float, default=GRID_MIDPOINT)
        p.add_argument("--lambda-g", type=float, default=GRID_MIDPOINT)
    p.add_argument("--nt", type=int, default=1, help="correspondence/mapping rounds")
    p.add_argument("--ridge", type=float, default=1e-3)
    p.add_argument("--gap-tol", type=float, default=1e-5)
    p.add_argument("--max-iters", type=int, default=500)
    p.add_argument("--sigma-s", type=float, default=None)
    p.add_argument("--sigma-t", type=float, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="corrda", description="Correspondence-based unsupervised domain adaptation.")
    parser.add_argument("--version", action="version", version=f"corrda {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("gen-moons", help="write rotated two-moons source/target/test CSVs")
    p.add_argument("--per-class", type=int, default=150)
    p.add_argument("--angle", type=float, default=0.0)
    p.add_argument("--noise", type=float, default=0.05)
    p.add_argument("--n-test", type=int, default=1000)
    _common(p)
    p.set_defaults(func=cmd_gen_moons)

    p = sub.add_parser("adapt", help="adapt a labelled source CSV to a target CSV")
    p.add_argument("--source", required=True)
    p.add_argument("--target", required=True)
    _adapt_flags(p)
    p.add_argument("--emit-correspondence", action="store_true")
    _common(p)
    p.set_defaults(func=cmd_adapt)

    p = sub.add_parser("eval", help="train a classifier on one CSV and score it on another")
    p.add_argument("--train", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--clf", choices=["1nn", "svm"], default="1nn")
    _common(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("bench-toy", help="accuracy sweep over moon rotation angles")
    p.add_argument("--angles", type=_ints, default=TOY_ANGLES)
    p.add_argument("--trials", type=int, default=10)
    p.add_argument("--clf", choices=["1nn", "svm"], default="svm")
    p.add_argument("--per-class", type=int, default=150)
    p.add_argument("--n-test", type=int, default=1000)
    p.add_argument("--lambda-s", type=float, default=TOY_CONFIG.lambda_s)
    p.add_argument("--lambda-g", type=float, default=TOY_CONFIG.lambda_g)
    _adapt_flags(p, lambdas=False)
    _common(p, jobs=True)
    p.set_defaults(func=cmd_bench_toy)

    p = sub.add_parser("bench-flow", help="time the LP subproblems under both solvers")
    p.add_argument("--sizes", type=_ints, default=FLOW_SIZES, help="samples per class")
    p.add_argument("--max-iters", type=int, default=FLOW_MAX_ITERS)
    _common(p)
    p.set_defaults(func=cmd_bench_flow)

    p = sub.add_parser("tune", help="reverse-validation search over (lambda_s, lambda_g)")
    p.add_argument("--source", required=True)
    p.add_argument("--target", required=True)
    p.add_argument("--grid", type=_floats, default=None, help="values for both grids")
    p.add_argument("--grid-s", type=_floats, default=None)
    p.add_argument("--grid-g", type=_floats, default=None)
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--clf", choices=["1nn", "svm"], default="1nn")
    p.add_argument("--no-map-held-out", action="store_true", help="score the held-out fold without mapping it")
    _adapt_flags(p, lambdas=False)
    _common(p, jobs=True)
    p.set_defaults(func=cmd_tune)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (DataError, DegenerateBandwidthError, InfeasibleStartError) as exc:
        print(f"corrda: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (SolverError, NonFiniteObjectiveError, SvmConvergenceError) as exc:
        print(f"corrda: solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except ValueError as exc:
        # Remaining ValueErrors come from invalid flag values (negative lambda, folds < 2, ...).
        print(f"corrda: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
