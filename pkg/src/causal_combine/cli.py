"""Command-line interface.

Subcommands::

    causal-combine estimate   --obs OBS.csv --int INT.csv --scheme plugin-l2
    causal-combine simulate   --config scm.json --n 600 --m 300 --seed 0 --output-dir out/
    causal-combine experiment --table1 --replications 1000 --output-dir out/
    causal-combine sweep      --preset fig3-left --output-dir out/

Exit codes: 0 success, 2 invalid input, 3 singular moment matrix,
4 too many failed Monte Carlo replications. Errors are reported on stderr
as a JSON object ``{"error": ..., "message": ...}``. Output files are
written to temporary names and renamed into place only after every result
has been computed.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import tempfile
from dataclasses import replace
from pathlib import Path

import numpy as np

from .errors import DegenerateWeight, ExcessiveFailures, SingularMoment
from .evaluation import (
    ExperimentConfig,
    Table1Source,
    run_experiment,
    sweep_ratio,
    sweep_sample_size,
    table1_configs,
)
from .linmodel import Dataset, Regime
from .pipeline import EstimateOptions, estimate_effects
from .scm import ScmParams, sample_interventional, sample_observational
from .weighting import Scheme

EXIT_INPUT = 2
EXIT_SINGULAR = 3
EXIT_FAILURES = 4
SCHEMA_VERSION = 1

FIG3_M_GRID = (100, 300, 1000, 3000)
FIG3_RATIO = 3.0
FIG3_FIXED_M = 500
FIG3_N_GRID = (50, 150, 500, 1500, 5000, 15000, 50000)


class InputError(Exception):
    pass


def fmt(x: float) -> str:
    return format(float(x), ".17g")


def simulate_pair(params: ScmParams, n: int, m: int, seed: int) -> tuple[Dataset, Dataset]:
    """Observational and interventional samples from independent child streams of ``seed``."""
    s_obs = np.random.SeedSequence(seed, spawn_key=(0,))
    s_int = np.random.SeedSequence(seed, spawn_key=(1,))
    return sample_observational(params, n, s_obs), sample_interventional(params, m, s_int)


def dataset_to_csv(data: Dataset) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([f"x{j + 1}" for j in range(data.p)] + ["y"])
    for row, y in zip(data.X, data.y):
        w.writerow([fmt(v) for v in row] + [fmt(y)])
    return buf.getvalue()


def read_dataset_csv(path: str | Path, regime: Regime) -> Dataset:
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    if not rows:
        raise InputError(f"{path} is empty")
    header = [h.strip() for h in rows[0]]
    p = len(header) - 1
    if p < 1 or header != [f"x{j + 1}" for j in range(p)] + ["y"]:
        raise InputError(f"{path}: header must be x1..xp,y, got {','.join(header)}")
    body = [r for r in rows[1:] if r]
    try:
        arr = np.array([[float(v) for v in r] for r in body], dtype=float)
    except ValueError as exc:
        raise InputError(f"{path}: non-numeric value ({exc})") from exc
    if arr.ndim != 2 or arr.shape[1] != p + 1:
        raise InputError(f"{path}: every row needs {p + 1} values")
    if arr.shape[0] < p + 2:
        raise InputError(f"{path}: need at least p + 2 = {p + 2} data rows, got {arr.shape[0]}")
    if not np.all(np.isfinite(arr)):
        raise InputError(f"{path}: non-finite values")
    return Dataset(arr[:, :p], arr[:, p], regime)


def _load_json(path: str | Path) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot parse {path}: {exc}") from exc


def _check_schema(doc: dict, path) -> None:
    version = doc.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise InputError(f"{path}: unsupported schema_version {version}")


def load_params(path: str | Path) -> ScmParams:
    doc = _load_json(path)
    _check_schema(doc, path)
    try:
        return ScmParams.from_dict(doc)
    except (ValueError, TypeError) as exc:
        raise InputError(f"{path}: invalid SEM parameters: {exc}") from exc


def write_outputs(files: dict[Path, str]) -> None:
    """Write every file to a temporary sibling, then rename all of them into place."""
    staged = []
    try:
        for path, text in files.items():
            path.parent.mkdir(parents=True, exist_ok=True)
            fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
            with os.fdopen(fd, "w", newline="") as fh:
                fh.write(text)
            staged.append((tmp, path))
    except BaseException:
        for tmp, _ in staged:
            os.unlink(tmp)
        raise
    for tmp, path in staged:
        os.replace(tmp, path)


def _dumps(doc) -> str:
    return json.dumps(doc, indent=2) + "\n"


def cmd_estimate(args) -> int:
    obs = read_dataset_csv(args.obs, Regime.OBSERVATIONAL)
    int_ = read_dataset_csv(args.int, Regime.INTERVENTIONAL)
    if obs.p != int_.p:
        raise InputError(f"observational file has p={obs.p}, interventional p={int_.p}")
    try:
        scheme = Scheme(args.scheme)
    except ValueError:
        raise InputError(f"unknown scheme {args.scheme!r}") from None
    truth = load_params(args.scm) if args.scm else None
    if scheme is Scheme.ORACLE and truth is None:
        raise InputError("scheme 'oracle' needs --scm with the true SEM parameters")
    options = EstimateOptions(
        center=not args.no_center,
        ridge_lambda=args.ridge_lambda,
        l2_lambda=args.l2_lambda,
        l1_lambda=args.l1_lambda,
        cv_folds=args.cv_folds,
        epsilon=args.epsilon,
        seed=args.seed,
    )
    est = estimate_effects(obs, int_, [scheme], options, truth)[scheme]
    text = _dumps({"schema_version": SCHEMA_VERSION, **est.to_dict()})
    if args.output:
        write_outputs({Path(args.output): text})
    else:
        sys.stdout.write(text)
    return 0


def cmd_simulate(args) -> int:
    params = load_params(args.config)
    if args.n < 1 or args.m < 1:
        raise InputError(f"sample sizes must be at least 1 (n={args.n}, m={args.m})")
    obs, int_ = simulate_pair(params, args.n, args.m, args.seed)
    out = Path(args.output_dir)
    write_outputs({out / "obs.csv": dataset_to_csv(obs), out / "int.csv": dataset_to_csv(int_)})
    return 0


def _report_csv(reports: list[tuple[str | None, object]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    labelled = reports[0][0] is not None
    w.writerow((["setting"] if labelled else []) + ["scheme", "replication", "squared_error"])
    for label, report in reports:
        for scheme, idx, err in report.csv_rows():
            w.writerow(([label] if labelled else []) + [scheme, idx, fmt(err)])
    return buf.getvalue()


def _summary_csv(reports: list[tuple[str, object]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["setting", "scheme", "mean_mse", "std_mse", "replications"])
    for label, report in reports:
        for scheme, stats in report.per_method.items():
            w.writerow([label, scheme, fmt(stats.mean_mse), fmt(stats.std_mse), len(stats.per_replication)])
    return buf.getvalue()


def _experiment_config(args) -> ExperimentConfig:
    doc = _load_json(args.config)
    _check_schema(doc, args.config)
    try:
        cfg = ExperimentConfig.from_dict(doc)
    except (KeyError, ValueError, TypeError) as exc:
        raise InputError(f"{args.config}: invalid experiment config: {exc}") from exc
    if args.replications is not None:
        cfg = replace(cfg, replications=args.replications)
    if args.seed is not None:
        cfg = replace(cfg, master_seed=args.seed)
    return cfg


def cmd_experiment(args) -> int:
    out = Path(args.output_dir)
    if args.table1:
        reps = 1000 if args.replications is None else args.replications
        seed = 0 if args.seed is None else args.seed
        if reps < 1:
            raise InputError("replications must be at least 1")
        reports = [(c.scm_source.label, run_experiment(c)) for c in table1_configs(reps, seed)]
        doc = {
            "schema_version": SCHEMA_VERSION,
            "rows": [{"setting": label, "report": r.to_dict()} for label, r in reports],
        }
        write_outputs({
            out / "report.json": _dumps(doc),
            out / "report.csv": _report_csv(reports),
            out / "summary.csv": _summary_csv(reports),
        })
        return 0
    if not args.config:
        raise InputError("experiment needs --config or --table1")
    cfg = _experiment_config(args)
    report = run_experiment(cfg)
    write_outputs({
        out / "report.json": _dumps(report.to_dict()),
        out / "report.csv": _report_csv([(None, report)]),
        out / "summary.csv": _summary_csv([("custom", report)]),
    })
    return 0


def _sweep_csv(reports) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["m", "n", "ratio", "scheme", "mean_mse", "std_mse", "log10_ratio", "log10_mean_mse"])
    for r in reports:
        n, m = r.config["n"], r.config["m"]
        for scheme, stats in r.per_method.items():
            w.writerow([m, n, fmt(n / m), scheme, fmt(stats.mean_mse), fmt(stats.std_mse),
                        fmt(np.log10(n / m)), fmt(np.log10(max(stats.mean_mse, np.finfo(float).tiny)))])
    return buf.getvalue()


def cmd_sweep(args) -> int:
    if args.preset:
        reps = 100 if args.replications is None else args.replications
        seed = 0 if args.seed is None else args.seed
        methods = [s for s in Scheme if s not in (Scheme.OPT_MATRIX, Scheme.RIDGE)]
        if args.preset == "fig3-left":
            base = ExperimentConfig(Table1Source("spread", args.gamma), 300, 100, reps, methods, seed)
            reports = sweep_sample_size(base, FIG3_M_GRID, FIG3_RATIO)
        else:
            base = ExperimentConfig(Table1Source("spread", args.gamma), FIG3_FIXED_M, FIG3_FIXED_M, reps, methods, seed)
            reports = sweep_ratio(base, FIG3_N_GRID)
    else:
        if not args.config:
            raise InputError("sweep needs --config or --preset")
        doc = _load_json(args.config)
        _check_schema(doc, args.config)
        try:
            base = ExperimentConfig.from_dict(doc["base"])
            if args.replications is not None:
                base = replace(base, replications=args.replications)
            if args.seed is not None:
                base = replace(base, master_seed=args.seed)
            if doc.get("mode", "sample_size") == "sample_size":
                reports = sweep_sample_size(base, doc["m_grid"], float(doc["ratio"]))
            elif doc["mode"] == "ratio":
                reports = sweep_ratio(base, doc["n_grid"])
            else:
                raise ValueError(f"unknown sweep mode {doc['mode']!r}")
        except (KeyError, ValueError, TypeError) as exc:
            raise InputError(f"{args.config}: invalid sweep config: {exc}") from exc
    out = Path(args.output_dir)
    write_outputs({
        out / "sweep.json": _dumps({"schema_version": SCHEMA_VERSION, "reports": [r.to_dict() for r in reports]}),
        out / "sweep.csv": _sweep_csv(reports),
    })
    return 0


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        _emit_error("UsageError", message)
        sys.exit(EXIT_INPUT)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="causal-combine", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    est = sub.add_parser("estimate", help="combine estimates from two CSV files")
    est.add_argument("--obs", required=True, help="observational CSV (header x1..xp,y)")
    est.add_argument("--int", required=True, help="interventional CSV (header x1..xp,y)")
    est.add_argument("--scheme", required=True, choices=[s.value for s in Scheme])
    est.add_argument("--no-center", action="store_true", help="skip centering and the intercept column")
    est.add_argument("--ridge-lambda", type=float, default=1.0)
    est.add_argument("--l2-lambda", type=float, default=None, help="fixed penalty for plugin-l2 (default: CV)")
    est.add_argument("--l1-lambda", type=float, default=None, help="fixed penalty for plugin-l1 (default: CV)")
    est.add_argument("--cv-folds", type=int, default=5)
    est.add_argument("--epsilon", type=float, default=None)
    est.add_argument("--seed", type=int, default=0, help="seed for CV fold assignment")
    est.add_argument("--scm", help="true SEM parameters JSON (required for the oracle scheme)")
    est.add_argument("--output", help="write JSON here instead of stdout")
    est.set_defaults(func=cmd_estimate)

    sim = sub.add_parser("simulate", help="sample obs.csv and int.csv from an SEM")
    sim.add_argument("--config", required=True, help="SEM parameters JSON")
    sim.add_argument("--n", type=int, required=True)
    sim.add_argument("--m", type=int, required=True)
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--output-dir", required=True)
    sim.set_defaults(func=cmd_simulate)

    exp = sub.add_parser("experiment", help="run a Monte Carlo experiment")
    exp.add_argument("--config", help="experiment config JSON")
    exp.add_argument("--table1", action="store_true", help="run the four benchmark settings")
    exp.add_argument("--replications", type=int, default=None)
    exp.add_argument("--seed", type=int, default=None, help="override master_seed")
    exp.add_argument("--output-dir", required=True)
    exp.set_defaults(func=cmd_experiment)

    sw = sub.add_parser("sweep", help="sweep sample sizes or the n/m ratio")
    sw.add_argument("--config", help="sweep config JSON")
    sw.add_argument("--preset", choices=["fig3-left", "fig3-right"])
    sw.add_argument("--gamma", type=float, default=1.0, help="confounding strength for presets")
    sw.add_argument("--replications", type=int, default=None)
    sw.add_argument("--seed", type=int, default=None)
    sw.add_argument("--output-dir", required=True)
    sw.set_defaults(func=cmd_sweep)
    return parser


def _emit_error(kind: str, message: str) -> None:
    sys.stderr.write(json.dumps({"error": kind, "message": message}) + "\n")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (InputError, DegenerateWeight, ValueError) as exc:
        _emit_error(type(exc).__name__, str(exc))
        return EXIT_INPUT
    except SingularMoment as exc:
        _emit_error("SingularMoment", str(exc))
        return EXIT_SINGULAR
    except ExcessiveFailures as exc:
        _emit_error("ExcessiveFailures", str(exc))
        return EXIT_FAILURES


if __name__ == "__main__":
    sys.exit(main())
