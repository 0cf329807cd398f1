"""Command-line entry point.

Exit codes: 0 success, 1 usage or input error, 2 computational failure.
Every command that writes a file also writes ``<file>.manifest.json`` with the
resolved parameters, seeds, paths, package version and wall-clock duration.
Relative output paths are resolved against ``$MOLCOMM_OUTPUT_DIR`` when set.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time

from . import __version__
from .errors import (
    DivergenceError,
    GeometryError,
    InvalidParameterError,
    ParseError,
    RankDeficiencyError,
    RelativeMetricError,
)
from .evaluation import DEFAULT_SPLIT_SEED, ModelSpec, compare_models, evaluate_model, split_dataset
from .regressors import DEFAULTS, MODEL_KINDS, fit_model, load_model, save_model
from .sim import ABSORPTION_MODES, ChannelParams, simulate_channel
from .sweep import SweepError, generate_grid, load_sweep_config, read_dataset, run_sweep, write_dataset
from .validate import run_checks

EXIT_OK, EXIT_USAGE, EXIT_FAILURE = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _number(kind, check, what):
    def parse(text):
        try:
            v = kind(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"invalid {kind.__name__} value: {text!r}") from None
        if (kind is float and not math.isfinite(v)) or not check(v):
            raise argparse.ArgumentTypeError(f"must be {what}, got {text!r}")
        return v

    return parse


positive_float = _number(float, lambda v: v > 0, "positive")
nonneg_float = _number(float, lambda v: v >= 0, "non-negative")
positive_int = _number(int, lambda v: v >= 1, "a positive integer")
seed_int = _number(int, lambda v: 0 <= v < 2**64, "an unsigned 64-bit integer")
fraction = _number(float, lambda v: 0 < v <= 1, "in (0, 1]")


def _out_path(path):
    base = os.environ.get("MOLCOMM_OUTPUT_DIR")
    if base and not os.path.isabs(path):
        path = os.path.join(base, path)
    parent = os.path.dirname(path)
    if parent:
        os.makedirs(parent, exist_ok=True)
    return path


def _write_manifest(out, command, params, inputs, outputs, started):
    manifest = {
        "command": command,
        "parameters": params,
        "inputs": inputs,
        "outputs": outputs,
        "version": __version__,
        "duration_s": round(time.perf_counter() - started, 6),
    }
    with open(out + ".manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _require_file(path, flag):
    if not os.path.isfile(path):
        raise UsageError(f"{flag}: no such file {path!r}")


# -- commands ----------------------------------------------------------------

FLAG_FOR_FIELD = {"r_t": "--rt", "r_r": "--rr", "d": "--d", "diff": "--diff", "r_v": "--rv",
                  "n_molecules": "--n", "n_steps": "--steps", "dt": "--dt", "seed": "--seed"}


def cmd_simulate(args, started):
    try:
        params = ChannelParams(r_t=args.rt, r_r=args.rr, d=args.d, diff=args.diff,
                               n_molecules=args.n, n_steps=args.steps, dt=args.dt,
                               seed=args.seed, r_v=args.rv, absorption=args.absorption)
    except InvalidParameterError as exc:
        msg = str(exc)
        for field_name, flag in FLAG_FOR_FIELD.items():
            if msg.startswith(field_name + "=") or msg.startswith(field_name + " "):
                msg = f"{flag}: {msg}"
                break
        raise UsageError(msg) from None
    result = simulate_channel(params)
    out = _out_path(args.out)
    with open(out, "w") as fh:
        fh.write(result.to_text())
    _write_manifest(out, "simulate", {**vars(params)}, {}, [out], started)
    print(f"map = {result.map!r}  absorbed = {result.absorbed_fraction:.4f}  -> {out}")


def cmd_sweep(args, started):
    _require_file(args.config, "--config")
    try:
        config = load_sweep_config(args.config)
    except ParseError as exc:
        raise UsageError(f"--config {args.config}: {exc}") from None
    grid = generate_grid(config)
    ds = run_sweep(grid, args.workers)
    out = _out_path(args.out)
    write_dataset(ds, out)
    params = {k: v for k, v in vars(config).items()}
    params["workers"] = args.workers
    params["row_seeds"] = [str(int(s)) for s in ds.seeds]
    _write_manifest(out, "sweep", params, {"config": args.config}, [out], started)
    print(f"{len(ds)} rows -> {out}")


def _load_split(args):
    _require_file(args.dataset, "--dataset")
    try:
        ds = read_dataset(args.dataset)
    except ParseError as exc:
        raise UsageError(f"--dataset {args.dataset}: {exc}") from None
    return split_dataset(ds, args.split, args.split_seed)


def _model_params(args, kind):
    flags = {
        "l2": args.l2, "lr": args.lr, "epochs": args.epochs, "trees": args.trees,
        "shrinkage": args.shrinkage, "hidden": args.hidden, "seed": args.seed,
    }
    return {k: v for k, v in flags.items() if v is not None and k in DEFAULTS[kind]}


def cmd_train(args, started):
    train, _ = _load_split(args)
    params = _model_params(args, args.model)
    model = fit_model(args.model, train.X, train.y, **params)
    out = _out_path(args.out)
    save_model(model, out)
    _write_manifest(out, "train",
                    {"model": args.model, "model_params": params, "split": args.split,
                     "split_seed": args.split_seed, "n_train": len(train)},
                    {"dataset": args.dataset}, [out], started)
    print(f"trained {args.model} on {len(train)} rows -> {out}")


def cmd_evaluate(args, started):
    _require_file(args.model_file, "--model-file")
    try:
        model = load_model(args.model_file)
    except ParseError as exc:
        raise UsageError(f"--model-file {args.model_file}: {exc}") from None
    _, test = _load_split(args)
    if len(test) == 0:
        raise UsageError("--split leaves no test rows")
    report = evaluate_model(model, test)
    out = _out_path(args.out)
    with open(out, "w") as fh:
        fh.write("metric,value\n")
        for name, value in report.as_row().items():
            fh.write(f"{name},{'-' if value is None else repr(float(value))}\n")
        fh.write(f"n_test,{report.n_test}\n")
    _write_manifest(out, "evaluate", {"split": args.split, "split_seed": args.split_seed},
                    {"dataset": args.dataset, "model_file": args.model_file}, [out], started)
    for name, value in report.as_row().items():
        print(f"{name:>24}: {'-' if value is None else f'{value:.6f}'}")


def cmd_compare(args, started):
    kinds = [k.strip() for k in args.models.split(",") if k.strip()]
    bad = [k for k in kinds if k not in MODEL_KINDS]
    if not kinds or bad:
        raise UsageError(f"--models: unknown model tag(s) {bad}; choose from {', '.join(MODEL_KINDS)}")
    train, test = _load_split(args)
    if len(test) == 0:
        raise UsageError("--split leaves no test rows")
    specs = [ModelSpec(k, _model_params(args, k)) for k in kinds]
    table = compare_models(train, test, specs)
    out = _out_path(args.out)
    with open(out, "w") as fh:
        fh.write(table.to_csv())
    text_out = os.path.splitext(out)[0] + ".txt"
    with open(text_out, "w") as fh:
        fh.write(table.to_text())
    _write_manifest(out, "compare",
                    {"models": {s.kind: s.params for s in specs}, "split": args.split,
                     "split_seed": args.split_seed, "n_train": len(train), "n_test": len(test)},
                    {"dataset": args.dataset}, [out, text_out], started)
    sys.stdout.write(table.to_text())
    if table.failures:
        raise DivergenceError(f"{len(table.failures)} model(s) failed to train")


def cmd_validate(args, started):
    results = run_checks(fast=args.fast, tolerance_scale=args.tolerance_scale)
    for r in results:
        print(f"[{'PASS' if r.passed else 'FAIL'}] {r.name}: {r.detail}")
    failed = [r.name for r in results if not r.passed]
    if failed:
        raise ValidationFailed("failed checks: " + ", ".join(failed))


class ValidationFailed(Exception):
    pass


# -- parser ------------------------------------------------------------------

def _add_model_flags(p):
    p.add_argument("--dataset", required=True, help="dataset CSV")
    p.add_argument("--split", type=fraction, default=0.7, help="training fraction (default 0.7)")
    p.add_argument("--split-seed", type=seed_int, default=DEFAULT_SPLIT_SEED)
    p.add_argument("--seed", type=seed_int, default=None, help="model seed")
    p.add_argument("--l2", type=nonneg_float, default=None, help="L2 weight (ols, sgd)")
    p.add_argument("--lr", type=nonneg_float, default=None, help="learning rate (sgd, mlp)")
    p.add_argument("--epochs", type=positive_int, default=None, help="epochs (sgd, mlp)")
    p.add_argument("--trees", type=positive_int, default=None, help="tree count (forest, gbt)")
    p.add_argument("--shrinkage", type=fraction, default=None, help="boosting shrinkage (gbt)")
    p.add_argument("--hidden", type=positive_int, default=None, help="hidden units (mlp)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="molcomm", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", help="simulate one channel configuration")
    p.add_argument("--rt", type=positive_float, required=True, help="transmitter radius")
    p.add_argument("--rr", type=positive_float, required=True, help="receiver radius")
    p.add_argument("--d", type=positive_float, required=True, help="surface-to-surface gap")
    p.add_argument("--diff", type=nonneg_float, required=True, help="diffusion coefficient")
    p.add_argument("--n", type=positive_int, required=True, help="molecule count")
    p.add_argument("--steps", type=positive_int, required=True, help="number of time steps")
    p.add_argument("--dt", type=positive_float, required=True, help="time step")
    p.add_argument("--seed", type=seed_int, required=True)
    p.add_argument("--rv", type=positive_float, default=None, help="vessel radius (default 2*max radius)")
    p.add_argument("--absorption", choices=ABSORPTION_MODES, default="bridge")
    p.add_argument("--out", default="result.txt")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="simulate a parameter grid into a dataset CSV")
    p.add_argument("--config", required=True, help="sweep config (INI)")
    p.add_argument("--workers", type=positive_int, default=1)
    p.add_argument("--out", default="simulation.csv")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("train", help="train one model on the training split")
    p.add_argument("--model", choices=MODEL_KINDS, required=True)
    _add_model_flags(p)
    p.add_argument("--out", default="model.json")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="score a saved model on the test split")
    p.add_argument("--model-file", required=True)
    _add_model_flags(p)
    p.add_argument("--out", default="metrics.csv")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("compare", help="train and score several models side by side")
    p.add_argument("--models", default="bayes,mlp,forest,gbt", help="comma-separated model tags")
    _add_model_flags(p)
    p.add_argument("--out", default="comparison.csv")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("validate", help="run the built-in oracle checks")
    p.add_argument("--fast", action="store_true", help="fewer molecules, looser tolerance")
    p.add_argument("--tolerance-scale", type=positive_float, default=1.0,
                   help="multiply every check tolerance by this factor")
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    started = time.perf_counter()
    try:
        args.func(args, started)
    except (UsageError, InvalidParameterError, ParseError, FileNotFoundError) as exc:
        print(f"molcomm {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValidationFailed, DivergenceError, GeometryError, RankDeficiencyError,
            RelativeMetricError, SweepError) as exc:
        print(f"molcomm {args.command}: failed: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
