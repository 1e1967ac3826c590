"""Command-line front end.

Subcommands: impute, mi, synth {cubes,mvn}, inject {mcar,mar}, benchmark,
eval, rerun. Every run that writes files also writes a manifest
(<output>.manifest.json) holding the fully resolved configuration and
input digests; ``rerun <manifest>`` reproduces the run byte for byte.

Exit codes: 0 success, 1 usage error, 2 data error. Diagnostics go to
stderr; data only to the declared output files.
"""

from __future__ import annotations

import argparse
import csv as _csv
import hashlib
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .dataset import normalize, validate
from .engine import (
    DEFAULT_K_GRID,
    ImputeConfig,
    Method,
    initial_impute,
    run_impute,
)
from .errors import DataError
from .evaluate import BenchmarkSpec, benchmark, kfold_cv, rmse
from .io import (
    SchemaConfig,
    format_json,
    infer_schema,
    read_csv,
    write_csv,
    write_report,
)
from .relevance import dataset_class_weights
from .synth import MarSpec, gen_cubes, gen_mvn_mar, inject_mar, inject_mcar

USAGE_ERROR = 1
DATA_ERROR = 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(USAGE_ERROR)


def _sha256(path: str) -> str:
    h = hashlib.sha256()
    h.update(Path(path).read_bytes())
    return h.hexdigest()


def _write_manifest(primary_output: str, subcommand: str, args: dict, inputs: list, outputs: list):
    manifest = {
        "tool": "greyimpute",
        "version": __version__,
        "subcommand": subcommand,
        "arguments": args,
        "inputs": {path: _sha256(path) for path in inputs},
        "outputs": outputs,
    }
    path = primary_output + ".manifest.json"
    Path(path).write_text(format_json(manifest) + "\n", encoding="utf-8")
    return path


def _load_dataset(path: str, schema_path: str | None, infer: bool, class_column=None):
    text = Path(path).read_text(encoding="utf-8")
    if schema_path is not None:
        config = SchemaConfig.from_text(Path(schema_path).read_text(encoding="utf-8"))
    elif infer:
        config = infer_schema(text, class_column=class_column)
    else:
        raise DataError("either --schema or --infer-schema is required")
    return read_csv(text, config), config


def _method_list():
    return ", ".join(m.value for m in Method)


def _add_impute_options(sub):
    sub.add_argument("--method", default="cgknn", help=f"one of: {_method_list()}")
    sub.add_argument("--k", type=int, default=None, help="neighborhood size (default: select by CV)")
    sub.add_argument("--k-grid", type=int, nargs="+", default=list(DEFAULT_K_GRID))
    sub.add_argument("--rho", type=float, default=0.5)
    sub.add_argument("--epsilon", type=float, default=1e-4)
    sub.add_argument("--max-iter", type=int, default=50)
    sub.add_argument("--seed", type=int, default=0)


def _config_from(ns) -> ImputeConfig:
    try:
        method = Method(ns.method)
    except ValueError:
        raise SystemExit(_usage(f"unknown method {ns.method!r}; valid methods: {_method_list()}"))
    return ImputeConfig(
        method=method,
        k=ns.k,
        k_grid=tuple(ns.k_grid),
        rho=ns.rho,
        epsilon=ns.epsilon,
        max_iter=ns.max_iter,
        seed=ns.seed,
    )


def _usage(message: str) -> int:
    print(f"error: {message}", file=sys.stderr)
    return USAGE_ERROR


def _cmd_impute(ns) -> int:
    dataset, config = _load_dataset(ns.input, ns.schema, ns.infer_schema, ns.class_column)
    impute_config = _config_from(ns)
    result = run_impute(dataset, impute_config)
    out = Path(ns.out)
    out.write_text(write_csv(result.completed, config.missing_tokens[0]), encoding="utf-8")
    trace_path = ns.out + ".trace.json"
    trace = {
        "method": impute_config.method.value,
        "iterations": result.iterations,
        "converged": result.converged,
        "chosen_k": result.chosen_k,
        "pool_fallback": result.used_pool_fallback,
        "max_change_per_iteration": list(result.trace),
        "feature_weights": None
        if result.weights_used is None
        else list(result.weights_used),
    }
    Path(trace_path).write_text(format_json(trace) + "\n", encoding="utf-8")
    outputs = [ns.out, trace_path]
    if ns.infer_schema:
        inferred_path = ns.out + ".schema.cfg"
        Path(inferred_path).write_text(config.to_text(), encoding="utf-8")
        outputs.append(inferred_path)
    args = {
        "input": ns.input, "schema": ns.schema, "infer_schema": ns.infer_schema,
        "class_column": ns.class_column,
        "method": ns.method, "k": ns.k, "k_grid": list(ns.k_grid), "rho": ns.rho,
        "epsilon": ns.epsilon, "max_iter": ns.max_iter, "seed": ns.seed, "out": ns.out,
    }
    inputs = [ns.input] + ([ns.schema] if ns.schema else [])
    _write_manifest(ns.out, "impute", args, inputs, outputs)
    return 0


def _cmd_mi(ns) -> int:
    dataset, _ = _load_dataset(ns.input, ns.schema, ns.infer_schema, ns.class_column)
    if dataset.labels is None:
        raise DataError("mi requires a class column in the schema")
    normalized, _ = normalize(dataset)
    filled = initial_impute(normalized, per_class=False)
    weights, estimates = dataset_class_weights(filled)
    payload = {
        "features": [
            {
                "name": feat.name,
                "mi_bits": est.mi,
                "estimator": est.estimator,
                "weight": float(w),
            }
            for feat, est, w in zip(dataset.schema.features, estimates, weights)
        ]
    }
    text = format_json(payload) + "\n"
    if ns.out:
        Path(ns.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


def _write_dataset_outputs(ns, dataset, subcommand, args, inputs, flipped=None):
    Path(ns.out).write_text(write_csv(dataset), encoding="utf-8")
    outputs = [ns.out]
    if flipped is not None:
        mask_path = ns.out + ".mask.csv"
        _write_positions_csv(mask_path, dataset, flipped)
        outputs.append(mask_path)
    _write_manifest(ns.out, subcommand, args, inputs, outputs)
    return 0


def _write_positions_csv(path, dataset, positions):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = _csv.writer(fh, lineterminator="\n")
        writer.writerow([f.name for f in dataset.schema.features])
        for row in positions.astype(int):
            writer.writerow(list(row))
    return path


def _read_positions_csv(path, schema):
    rows = list(_csv.reader(Path(path).read_text(encoding="utf-8").splitlines()))
    header, body = rows[0], rows[1:]
    expected = [f.name for f in schema.features]
    if header != expected:
        raise DataError("mask header does not match the schema's feature columns")
    return np.array([[int(cell) for cell in row] for row in body], dtype=bool)


def _cmd_synth(ns) -> int:
    if ns.scenario == "cubes":
        dataset = gen_cubes(ns.seed)
    else:
        dataset, _ = gen_mvn_mar(ns.seed)
    args = {"scenario": ns.scenario, "seed": ns.seed, "out": ns.out}
    return _write_dataset_outputs(ns, dataset, "synth", args, [])


def _cmd_inject(ns) -> int:
    dataset, _ = _load_dataset(ns.input, ns.schema, ns.infer_schema, ns.class_column)
    if ns.mechanism == "mcar":
        injected = inject_mcar(dataset, ns.columns, ns.rate, ns.seed)
    else:
        idx = [dataset.schema.index_of(c) for c in ns.targets]
        pidx = [dataset.schema.index_of(c) for c in ns.predictors]
        coeffs = tuple(tuple(ns.coeff for _ in pidx) for _ in idx)
        spec = MarSpec(
            targets=tuple(idx),
            predictors=tuple(pidx),
            coefficients=coeffs,
            target_rate=ns.rate,
        )
        injected = inject_mar(dataset, spec, ns.seed)
    flipped = dataset.mask & ~injected.mask
    args = {
        "input": ns.input, "schema": ns.schema, "mechanism": ns.mechanism,
        "rate": ns.rate, "seed": ns.seed, "out": ns.out,
        "columns": getattr(ns, "columns", None),
        "targets": getattr(ns, "targets", None),
        "predictors": getattr(ns, "predictors", None),
        "coeff": getattr(ns, "coeff", None),
        "infer_schema": ns.infer_schema,
        "class_column": ns.class_column,
    }
    inputs = [ns.input] + ([ns.schema] if ns.schema else [])
    return _write_dataset_outputs(ns, injected, "inject", args, inputs, flipped)


def _spec_from_file(path: str):
    raw = json.loads(Path(path).read_text(encoding="utf-8"))
    source = raw.get("dataset")
    if isinstance(source, dict):
        data_text = Path(source["file"]).read_text(encoding="utf-8")
        config = SchemaConfig.from_text(Path(source["schema"]).read_text(encoding="utf-8"))
        dataset = read_csv(data_text, config)
        source_obj: object = dataset
        extra_inputs = [source["file"], source["schema"]]
    else:
        source_obj = source
        extra_inputs = []

    def tupled(key, default=None):
        value = raw.get(key, default)
        return None if value is None else tuple(value)

    spec = BenchmarkSpec(
        dataset=source_obj,
        methods=tuple(raw["methods"]),
        rates=tuple(float(r) for r in raw["rates"]),
        seeds=tuple(int(s) for s in raw["seeds"]),
        mechanism=raw.get("mechanism", "mcar"),
        mcar_columns=tupled("mcar_columns", ["x1"]),
        mar_targets=tupled("mar_targets"),
        mar_predictors=tupled("mar_predictors"),
        k=raw.get("k"),
        k_grid=tupled("k_grid", list(DEFAULT_K_GRID)),
        rho=float(raw.get("rho", 0.5)),
        epsilon=float(raw.get("epsilon", 1e-4)),
        max_iter=int(raw.get("max_iter", 50)),
        folds=int(raw.get("folds", 10)),
        timing=bool(raw.get("timing", True)),
    )
    return spec, extra_inputs


_REPORT_CSV_FIELDS = [
    "method", "missing_rate", "seed", "rmse", "classification_accuracy",
    "baseline_accuracy", "iterations", "chosen_k", "wall_time_ms",
    "converged", "pool_fallback", "error",
]


def _cmd_benchmark(ns) -> int:
    spec, extra_inputs = _spec_from_file(ns.spec)
    if ns.no_timing:
        spec = BenchmarkSpec(**{**spec.__dict__, "timing": False})
    rows = benchmark(spec, jobs=ns.jobs)
    Path(ns.out).write_text(write_report(rows), encoding="utf-8")
    outputs = [ns.out]
    if ns.csv:
        with open(ns.csv, "w", newline="", encoding="utf-8") as fh:
            writer = _csv.DictWriter(fh, fieldnames=_REPORT_CSV_FIELDS, lineterminator="\n")
            writer.writeheader()
            for row in rows:
                writer.writerow({k: row.get(k) for k in _REPORT_CSV_FIELDS})
        outputs.append(ns.csv)
    args = {"spec": ns.spec, "out": ns.out, "csv": ns.csv, "jobs": ns.jobs,
            "no_timing": ns.no_timing}
    _write_manifest(ns.out, "benchmark", args, [ns.spec] + extra_inputs, outputs)
    return 0


def _cmd_eval(ns) -> int:
    config = SchemaConfig.from_text(Path(ns.schema).read_text(encoding="utf-8"))
    truth = read_csv(Path(ns.truth).read_text(encoding="utf-8"), config)
    imputed = read_csv(Path(ns.imputed).read_text(encoding="utf-8"), config)
    positions = _read_positions_csv(ns.mask, truth.schema)
    metrics = {"rmse": rmse(truth, imputed, positions), "masked_cells": int(positions.sum())}
    if imputed.labels is not None:
        metrics["classification_accuracy"] = kfold_cv(imputed, seed=ns.seed)
    text = format_json(metrics) + "\n"
    if ns.out:
        Path(ns.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


def _cmd_validate(ns) -> int:
    dataset, _ = _load_dataset(ns.input, ns.schema, ns.infer_schema, ns.class_column)
    report = validate(dataset)
    payload = {
        "violations": [
            {"row": v.row, "column": v.column, "kind": v.kind, "detail": v.detail}
            for v in report.violations
        ],
        "missing_rates": list(report.missing_rates),
    }
    sys.stdout.write(format_json(payload) + "\n")
    return 0


def _cmd_rerun(ns) -> int:
    manifest = json.loads(Path(ns.manifest).read_text(encoding="utf-8"))
    for path, digest in manifest.get("inputs", {}).items():
        actual = _sha256(path)
        if actual != digest:
            raise DataError(f"input {path!r} changed since the manifest was written")
    sub = manifest["subcommand"]
    args = manifest["arguments"]
    argv = _argv_for(sub, args)
    return main(argv)


def _argv_for(sub: str, args: dict) -> list[str]:
    if sub == "impute":
        argv = ["impute", args["input"], "--out", args["out"], "--method", args["method"],
                "--rho", str(args["rho"]), "--epsilon", str(args["epsilon"]),
                "--max-iter", str(args["max_iter"]), "--seed", str(args["seed"]),
                "--k-grid", *[str(k) for k in args["k_grid"]]]
        if args.get("schema"):
            argv += ["--schema", args["schema"]]
        if args.get("infer_schema"):
            argv += ["--infer-schema"]
        if args.get("class_column"):
            argv += ["--class-column", args["class_column"]]
        if args.get("k") is not None:
            argv += ["--k", str(args["k"])]
        return argv
    if sub == "synth":
        return ["synth", args["scenario"], "--seed", str(args["seed"]), "--out", args["out"]]
    if sub == "inject":
        argv = ["inject", args["mechanism"], args["input"], "--rate", str(args["rate"]),
                "--seed", str(args["seed"]), "--out", args["out"]]
        if args.get("schema"):
            argv += ["--schema", args["schema"]]
        if args.get("infer_schema"):
            argv += ["--infer-schema"]
        if args.get("class_column"):
            argv += ["--class-column", args["class_column"]]
        if args["mechanism"] == "mcar":
            argv += ["--columns", *args["columns"]]
        else:
            argv += ["--targets", *args["targets"], "--predictors", *args["predictors"],
                     "--coeff", str(args["coeff"])]
        return argv
    if sub == "benchmark":
        argv = ["benchmark", args["spec"], "--out", args["out"], "--jobs", str(args["jobs"])]
        if args.get("csv"):
            argv += ["--csv", args["csv"]]
        if args.get("no_timing"):
            argv += ["--no-timing"]
        return argv
    raise DataError(f"cannot rerun subcommand {sub!r}")


def build_parser() -> _Parser:
    parser = _Parser(prog="greyimpute", description=__doc__)
    parser.add_argument("--version", action="version", version=f"greyimpute {__version__}")
    subs = parser.add_subparsers(dest="command", required=True)

    sp = subs.add_parser("impute", help="impute a CSV dataset")
    sp.add_argument("input")
    sp.add_argument("--schema", default=None)
    sp.add_argument("--infer-schema", action="store_true",
                    help="infer the schema and write it next to the output")
    sp.add_argument("--class-column", default=None,
                    help="class column name when inferring the schema")
    sp.add_argument("--out", default="imputed.csv")
    _add_impute_options(sp)
    sp.set_defaults(func=_cmd_impute)

    sp = subs.add_parser("mi", help="per-feature class relevance as JSON")
    sp.add_argument("input")
    sp.add_argument("--schema", default=None)
    sp.add_argument("--infer-schema", action="store_true")
    sp.add_argument("--class-column", default=None)
    sp.add_argument("--out", default=None)
    sp.set_defaults(func=_cmd_mi)

    sp = subs.add_parser("synth", help="generate a benchmark scenario")
    sp.add_argument("scenario", choices=["cubes", "mvn"])
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=_cmd_synth)

    sp = subs.add_parser("inject", help="inject missingness into a CSV dataset")
    sp.add_argument("mechanism", choices=["mcar", "mar"])
    sp.add_argument("input")
    sp.add_argument("--schema", default=None)
    sp.add_argument("--infer-schema", action="store_true")
    sp.add_argument("--class-column", default=None)
    sp.add_argument("--columns", nargs="+", default=["x1"], help="MCAR target columns")
    sp.add_argument("--targets", nargs="+", default=[], help="MAR target columns")
    sp.add_argument("--predictors", nargs="+", default=[], help="MAR predictor columns")
    sp.add_argument("--coeff", type=float, default=1.0, help="MAR coefficient per predictor")
    sp.add_argument("--rate", type=float, required=True)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=_cmd_inject)

    sp = subs.add_parser("benchmark", help="run a benchmark spec file")
    sp.add_argument("spec")
    sp.add_argument("--out", default="report.json")
    sp.add_argument("--csv", default=None, help="also write a flat CSV table")
    sp.add_argument("--jobs", type=int,
                    default=int(os.environ.get("GREYIMPUTE_JOBS", "1")))
    sp.add_argument("--no-timing", action="store_true",
                    help="zero the wall_time_ms fields for reproducible bytes")
    sp.set_defaults(func=_cmd_benchmark)

    sp = subs.add_parser("eval", help="score an imputed dataset against the truth")
    sp.add_argument("--truth", required=True)
    sp.add_argument("--imputed", required=True)
    sp.add_argument("--mask", required=True, help="0/1 CSV of scored positions")
    sp.add_argument("--schema", required=True)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out", default=None)
    sp.set_defaults(func=_cmd_eval)

    sp = subs.add_parser("validate", help="report dataset invariant violations")
    sp.add_argument("input")
    sp.add_argument("--schema", default=None)
    sp.add_argument("--infer-schema", action="store_true")
    sp.add_argument("--class-column", default=None)
    sp.set_defaults(func=_cmd_validate)

    sp = subs.add_parser("rerun", help="re-execute a run from its manifest")
    sp.add_argument("manifest")
    sp.set_defaults(func=_cmd_rerun)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return ns.func(ns)
    except SystemExit as exc:
        return int(exc.code or 0)
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return DATA_ERROR
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return DATA_ERROR


if __name__ == "__main__":
    raise SystemExit(main())
