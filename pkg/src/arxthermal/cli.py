"""Command-line front end: ``gen``, ``fit``, ``simulate`` and ``validate``.

Exit codes: 0 success, 1 fit below the requested threshold, 2 usage or
configuration error, 3 data error, 4 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import errors
from .model import load_model, predict_one_step, readd_ambient, save_model, simulate_free_run
from .selection import SearchSpace, grid_search, validate_model, write_candidate_table
from .signals import (
    DatasetSchema,
    IdentDataset,
    Preprocessing,
    Signal,
    check_uniform,
    format_number,
    infer_dt,
    load_dataset,
    preprocess,
    read_columns,
    save_dataset,
)
from .synth import Scenario, load_scenario

DEFAULT_AMBIENT_COLUMN = "T_amb"
EXIT_OK, EXIT_BELOW, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3, 4

_EXIT_FOR = (
    (errors.VersionError, EXIT_USAGE),
    (errors.ConfigError, EXIT_USAGE),
    (errors.ParameterError, EXIT_USAGE),
    (errors.DivergenceError, EXIT_NUMERIC),
    (errors.SelectionError, EXIT_NUMERIC),
    (errors.RankError, EXIT_NUMERIC),
    (errors.DegenerateError, EXIT_NUMERIC),
    (errors.ArxError, EXIT_DATA),
)


class UsageError(errors.ArxError):
    pass


def _positive_int(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return value


def _nonneg_int(text):
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {value}")
    return value


def _add_schema_args(p):
    p.add_argument("--input", dest="inputs", action="append",
                   help="input column (repeat for extra inputs; default: P, or the model's inputs)")
    p.add_argument("--output", default="T",
                   help="output temperature column")
    p.add_argument("--time", default="t", help="time column, checked for uniform sampling "
                   "('' to ignore)")
    p.add_argument("--ambient", default=None,
                   help="ambient column name or a scalar temperature "
                   f"(default: the {DEFAULT_AMBIENT_COLUMN} column when present)")
    p.add_argument("--dt", type=float, default=None,
                   help="sampling step in seconds (default: inferred from the time column)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="arxthermal",
                                     description="ARX thermal identification toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="write synthetic training/validation CSVs")
    g.add_argument("--scenario", help="JSON scenario file (default: built-in bench)")
    g.add_argument("--seed", type=int, default=None)
    g.add_argument("--noise-std", type=float, default=None, help="absolute sensor noise, K")
    g.add_argument("--noise-fraction", type=float, default=None,
                   help="sensor noise as a fraction of the output std")
    g.add_argument("--out-dir", default=".")

    f = sub.add_parser("fit", help="select orders and threshold, write model and reports")
    f.add_argument("--train", required=True)
    f.add_argument("--validate", required=True)
    _add_schema_args(f)
    f.add_argument("--ambient-mode", choices=("explicit", "mean-first-m", "per-sample"),
                   default=None)
    f.add_argument("--m", type=_positive_int, default=10)
    f.add_argument("--na-max", type=_positive_int, default=4)
    f.add_argument("--nb-max", type=_positive_int, default=4)
    f.add_argument("--nk-max", type=_nonneg_int, default=3)
    f.add_argument("--criterion", choices=("aic", "fit"), default="aic")
    f.add_argument("--threshold-count", type=_positive_int, default=20)
    f.add_argument("--no-regularize", action="store_true",
                   help="only try threshold 0")
    f.add_argument("--out-dir", default=".")

    s = sub.add_parser("simulate", help="free-run a model over an input CSV")
    s.add_argument("--model", required=True)
    s.add_argument("--data", required=True)
    _add_schema_args(s)
    s.add_argument("--add-ambient", action="store_true",
                   help="report absolute temperature instead of rise")
    s.add_argument("--one-step", action="store_true",
                   help="one-step-ahead prediction (needs the output column)")
    s.add_argument("--out", default="-", help="prediction CSV ('-' for stdout)")

    v = sub.add_parser("validate", help="score a model on a dataset")
    v.add_argument("--model", required=True)
    v.add_argument("--data", required=True)
    _add_schema_args(v)
    v.add_argument("--fit-threshold", type=float, default=90.0)
    v.add_argument("--report", default=None, help="write the JSON report here")
    return parser


# --------------------------------------------------------------------------

def _ambient_value(text):
    if text is None:
        return None
    try:
        return float(text)
    except ValueError:
        return text


def _schema(args, inputs_default) -> DatasetSchema:
    return DatasetSchema(
        output=args.output,
        inputs=tuple(args.inputs) if args.inputs else tuple(inputs_default),
        time=args.time or None,
        ambient=_ambient_value(args.ambient),
    )


def _load(path, schema: DatasetSchema, dt) -> IdentDataset:
    columns = read_columns(path)
    if schema.ambient is None and DEFAULT_AMBIENT_COLUMN in columns:
        schema = DatasetSchema(schema.output, schema.inputs, schema.time,
                               DEFAULT_AMBIENT_COLUMN)
    if dt is None:
        if not schema.time:
            raise UsageError("--dt is required when there is no time column")
        if schema.time not in columns:
            raise errors.SchemaError(f"time column {schema.time} not found in {path}")
        dt = infer_dt(columns[schema.time])
    return load_dataset(path, schema, dt, label=str(path))


def _dumps(data) -> str:
    return json.dumps(data, indent=2, sort_keys=True) + "\n"


def _write_prediction(path, time, predicted, measured=None):
    rows = [("t", "measured", "predicted", "residual") if measured is not None
            else ("t", "predicted")]
    for k in range(len(predicted)):
        if measured is not None:
            rows.append((format_number(time[k]), format_number(measured[k]),
                         format_number(predicted[k]), format_number(measured[k] - predicted[k])))
        else:
            rows.append((format_number(time[k]), format_number(predicted[k])))
    fh = sys.stdout if path == "-" else open(path, "w", newline="", encoding="utf-8")
    try:
        csv.writer(fh, lineterminator="\n").writerows(rows)
    finally:
        if fh is not sys.stdout:
            fh.close()


def cmd_gen(args) -> int:
    scenario = load_scenario(args.scenario) if args.scenario else Scenario()
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.noise_std is not None:
        overrides["noise_std"] = args.noise_std
    if args.noise_fraction is not None:
        overrides["noise_fraction"] = args.noise_fraction
    if overrides:
        scenario = Scenario.from_dict({**scenario.to_dict(), **overrides})
    train, val = scenario.generate()
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    save_dataset(train, out / "train.csv")
    save_dataset(val, out / "validate.csv")
    (out / "scenario.json").write_text(_dumps(scenario.to_dict()), encoding="utf-8")
    print(f"wrote {out / 'train.csv'} ({len(train)} samples) and "
          f"{out / 'validate.csv'} ({len(val)} samples), seed {scenario.seed}")
    return EXIT_OK


def cmd_fit(args) -> int:
    schema = _schema(args, ("P",))
    raw_train = _load(args.train, schema, args.dt)
    raw_val = _load(args.validate, schema, args.dt or raw_train.dt)
    if raw_val.dt != raw_train.dt:
        raise errors.DataError("training and validation data use different dt")
    mode = Preprocessing(args.ambient_mode, m=args.m) if args.ambient_mode else None
    train, prep = preprocess(raw_train, mode)
    val, _ = preprocess(raw_val, prep)
    space = SearchSpace.bounded(args.na_max, args.nb_max, args.nk_max,
                                threshold_count=args.threshold_count,
                                regularize=not args.no_regularize)
    result = grid_search(train, val, space, args.criterion, preprocessing=prep)

    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    save_model(result.model, out / "model.json")
    write_candidate_table(result.candidates, out / "candidates.csv")
    trace = simulate_free_run(result.model, train)
    _write_prediction(out / "train_prediction.csv", train.output.time, trace.samples,
                      train.output.samples)
    config = {k: v for k, v in sorted(vars(args).items()) if k != "func"}
    report = {
        "config": config,
        "preprocessing": {"mode": prep.mode, "offset": prep.offset, "m": prep.m},
        "criterion": args.criterion,
        "train": result.train_report.to_dict(),
        "validation": result.validation_report.to_dict(),
    }
    (out / "report.json").write_text(_dumps(report), encoding="utf-8")
    print(f"selected orders (na, nb, nk) = {result.model.orders.label()}")
    print(f"train:      {result.train_report.summary()}")
    print(f"validation: {result.validation_report.summary()}")
    return EXIT_OK


def _read_model(path):
    try:
        return load_model(path)
    except errors.ParseError as exc:
        raise UsageError(str(exc)) from None


def _model_dataset(args, model, need_output):
    """Read the CSV named in ``args`` as a dataset aligned with ``model``."""
    columns = read_columns(args.data)
    dt = args.dt if args.dt is not None else model.dt
    if args.time and args.time in columns:
        check_uniform(columns[args.time], dt)
    names = tuple(args.inputs) if args.inputs else model.input_names
    if len(names) != len(model.input_names):
        raise errors.ShapeError(
            f"model expects inputs {list(model.input_names)}, got {list(names)}")
    inputs = {}
    for model_name, col in zip(model.input_names, names):
        if col not in columns:
            raise errors.ShapeError(f"input column {col!r} required by the model is missing "
                                    f"from {args.data}")
        inputs[model_name] = Signal(columns[col], dt)
    n = len(next(iter(inputs.values())))
    ambient = _ambient_value(args.ambient)
    if ambient is None and DEFAULT_AMBIENT_COLUMN in columns:
        ambient = DEFAULT_AMBIENT_COLUMN
    if isinstance(ambient, str):
        if ambient not in columns:
            raise errors.SchemaError(f"ambient column {ambient} not found in {args.data}")
        ambient = Signal(columns[ambient], dt)
    measured = None
    if args.output and args.output in columns:
        measured = Signal(columns[args.output], dt)
    elif need_output:
        raise errors.SchemaError(f"output column {args.output} not found in {args.data}")
    output = measured if measured is not None else Signal(np.zeros(n), dt)
    ds = IdentDataset(inputs, output, ambient, label=str(args.data))
    prep = model.preprocessing
    if measured is not None and prep is not None:
        ds, _ = preprocess(ds, prep)
    return ds, measured is not None


def cmd_simulate(args) -> int:
    model = _read_model(args.model)
    ds, has_output = _model_dataset(args, model, need_output=args.one_step)
    if args.one_step:
        predicted = predict_one_step(model, ds)
    else:
        predicted = simulate_free_run(model, ds)
    measured = ds.output if has_output else None
    if args.add_ambient:
        predicted = readd_ambient(model, predicted, ds.ambient)
        if measured is not None:
            measured = readd_ambient(model, measured, ds.ambient)
    _write_prediction(args.out, predicted.time, predicted.samples,
                      None if measured is None else measured.samples)
    return EXIT_OK


def cmd_validate(args) -> int:
    model = _read_model(args.model)
    ds, _ = _model_dataset(args, model, need_output=True)
    report = validate_model(model, ds)
    passed = report.fit_percent >= args.fit_threshold
    print(report.summary())
    print(f"{'PASS' if passed else 'FAIL'}: fit {report.fit_percent:.4g}% "
          f"vs threshold {args.fit_threshold:.4g}%")
    if args.report:
        body = {"config": {k: v for k, v in sorted(vars(args).items()) if k != "func"},
                "validation": report.to_dict(), "passed": passed}
        Path(args.report).write_text(_dumps(body), encoding="utf-8")
    return EXIT_OK if passed else EXIT_BELOW


COMMANDS = {"gen": cmd_gen, "fit": cmd_fit, "simulate": cmd_simulate, "validate": cmd_validate}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except errors.ArxError as exc:
        for cls, code in _EXIT_FOR:
            if isinstance(exc, cls):
                break
        print(f"error: {exc}", file=sys.stderr)
        return code


if __name__ == "__main__":
    sys.exit(main())
