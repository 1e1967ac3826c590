"""CSV ingestion, schema configuration text, and JSON metric reports.

The CSV dialect is RFC-4180 style with a mandatory header, UTF-8. Column
kinds are declared (never silently inferred) in a line-oriented
``key = value`` schema document::

    # anything after '#' is a comment
    class = species
    missing = NA, , ?
    feature sepal_length = continuous
    feature color = categorical red, green, blue
    feature size = categorical

A ``feature <name>`` line declares a column; a categorical feature may fix
its level list explicitly (values outside it are rejected), otherwise
levels are collected from the data in first-appearance order. ``missing``
lists the exact strings treated as missing cells, matched before numeric
parsing; the first token is also what :func:`write_csv` emits for missing
cells. An :func:`infer_schema` convenience builds a config from the data;
the CLI always writes the inferred document next to the output so runs
stay replayable.

Reports serialize every float as the shortest decimal that round-trips to
the identical IEEE double, so regression comparisons are bit-exact.
"""

from __future__ import annotations

import csv
import io as _stdio
import math
from dataclasses import dataclass

from .dataset import Dataset, Feature, Schema
from .errors import ParseError, RaggedRowError, UnknownLevelError

import numpy as np

__all__ = [
    "SchemaConfig",
    "read_csv",
    "write_csv",
    "infer_schema",
    "write_report",
    "format_json",
    "REPORT_VERSION",
]

DEFAULT_MISSING_TOKENS = ("NA", "", "?")
REPORT_VERSION = 1


@dataclass(frozen=True)
class SchemaConfig:
    """Declared column kinds, class column and missing-value tokens."""

    columns: tuple[tuple[str, str, tuple[str, ...] | None], ...]  # (name, kind, levels)
    class_column: str | None = None
    missing_tokens: tuple[str, ...] = DEFAULT_MISSING_TOKENS

    def column_names(self):
        return [name for name, _, _ in self.columns]

    @classmethod
    def from_text(cls, text: str) -> "SchemaConfig":
        columns = []
        class_column = None
        tokens = DEFAULT_MISSING_TOKENS
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ParseError(f"expected 'key = value', got {line!r}", row=lineno)
            key, value = (part.strip() for part in line.split("=", 1))
            if key == "class":
                class_column = value
            elif key == "missing":
                tokens = tuple(tok.strip() for tok in value.split(","))
            elif key.startswith("feature ") or key.startswith("feature\t"):
                name = key[len("feature"):].strip()
                if not name:
                    raise ParseError("feature line without a column name", row=lineno)
                kind, _, levels_part = value.partition(" ")
                if kind == "continuous":
                    columns.append((name, "continuous", None))
                elif kind == "categorical":
                    levels = tuple(
                        lv.strip() for lv in levels_part.split(",") if lv.strip()
                    ) or None
                    columns.append((name, "categorical", levels))
                else:
                    raise ParseError(
                        f"feature kind must be continuous or categorical, got {kind!r}",
                        row=lineno,
                    )
            else:
                raise ParseError(f"unknown schema key {key!r}", row=lineno)
        if not columns:
            raise ParseError("schema declares no feature columns")
        return cls(tuple(columns), class_column, tokens)

    def to_text(self) -> str:
        lines = []
        if self.class_column is not None:
            lines.append(f"class = {self.class_column}")
        lines.append("missing = " + ", ".join(self.missing_tokens))
        for name, kind, levels in self.columns:
            if kind == "categorical" and levels:
                lines.append(f"feature {name} = categorical " + ", ".join(levels))
            else:
                lines.append(f"feature {name} = {kind}")
        return "\n".join(lines) + "\n"


def _parse_rows(text: str):
    reader = csv.reader(_stdio.StringIO(text))
    rows = list(reader)
    if not rows:
        raise ParseError("CSV has no header row")
    header, body = rows[0], rows[1:]
    for i, row in enumerate(body, start=2):
        if len(row) != len(header):
            raise RaggedRowError(
                f"expected {len(header)} fields, got {len(row)}", row=i
            )
    return header, body


def read_csv(text: str, config: SchemaConfig) -> Dataset:
    """Parse CSV text into a dataset under the declared schema.

    Cells equal to a missing token become missing (mask 0); other cells
    are parsed per the declared column kind. The class column, when
    declared, is extracted into labels with levels collected in
    first-appearance order.
    """
    header, body = _parse_rows(text)
    positions = {name: i for i, name in enumerate(header)}
    for name in config.column_names():
        if name not in positions:
            raise ParseError(f"declared column {name!r} not in CSV header")
    if config.class_column is not None and config.class_column not in positions:
        raise ParseError(f"class column {config.class_column!r} not in CSV header")
    declared = set(config.column_names()) | (
        {config.class_column} if config.class_column else set()
    )
    for name in header:
        if name not in declared:
            raise ParseError(f"CSV column {name!r} is not declared in the schema")

    missing = set(config.missing_tokens)
    n = len(body)
    p = len(config.columns)
    values = np.full((n, p), np.nan)
    mask = np.zeros((n, p), dtype=bool)
    level_maps: list[dict[str, int] | None] = []
    fixed: list[bool] = []
    for name, kind, levels in config.columns:
        if kind == "categorical":
            level_maps.append({lv: i for i, lv in enumerate(levels)} if levels else {})
            fixed.append(levels is not None)
        else:
            level_maps.append(None)
            fixed.append(False)

    for j, (name, kind, _) in enumerate(config.columns):
        col = positions[name]
        lm = level_maps[j]
        for i, row in enumerate(body):
            cell = row[col]
            if cell in missing:
                continue
            if kind == "continuous":
                try:
                    v = float(cell)
                except ValueError:
                    raise ParseError(
                        f"cannot parse {cell!r} as a number in column {name!r}",
                        row=i + 2,
                        column=name,
                    ) from None
                if not math.isfinite(v):
                    raise ParseError(
                        f"non-finite value {cell!r} in column {name!r}",
                        row=i + 2,
                        column=name,
                    )
                values[i, j] = v
            else:
                if cell not in lm:
                    if fixed[j]:
                        raise UnknownLevelError(
                            f"value {cell!r} outside declared levels of {name!r}",
                            row=i + 2,
                            column=name,
                        )
                    lm[cell] = len(lm)
                values[i, j] = lm[cell]
            mask[i, j] = True

    features = []
    for j, (name, kind, levels) in enumerate(config.columns):
        if kind == "categorical":
            lm = level_maps[j]
            ordered = levels if levels else tuple(sorted(lm, key=lm.get))
            if not ordered:
                raise ParseError(f"categorical column {name!r} has no observed levels")
            features.append(Feature(name, tuple(ordered)))
        else:
            features.append(Feature(name))

    labels = None
    class_levels: tuple[str, ...] = ()
    if config.class_column is not None:
        col = positions[config.class_column]
        lm: dict[str, int] = {}
        labels = np.empty(n, dtype=int)
        for i, row in enumerate(body):
            cell = row[col]
            if cell in missing:
                raise ParseError(
                    "class labels must be fully observed", row=i + 2,
                    column=config.class_column,
                )
            if cell not in lm:
                lm[cell] = len(lm)
            labels[i] = lm[cell]
        class_levels = tuple(sorted(lm, key=lm.get))

    schema = Schema(tuple(features), config.class_column, class_levels)
    return Dataset(schema, values, mask, labels)


def write_csv(dataset: Dataset, missing_token: str | None = None) -> str:
    """Render a dataset as CSV text; features first, class column last.

    Missing cells are emitted as ``missing_token`` (default "NA", the
    first default missing token)."""
    token = DEFAULT_MISSING_TOKENS[0] if missing_token is None else missing_token
    header = [f.name for f in dataset.schema.features]
    if dataset.schema.class_column is not None:
        header.append(dataset.schema.class_column)
    buf = _stdio.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for i in range(dataset.n):
        row = []
        for j, feat in enumerate(dataset.schema.features):
            if not dataset.mask[i, j] or np.isnan(dataset.values[i, j]):
                row.append(token)
            elif feat.is_categorical:
                row.append(feat.levels[int(dataset.values[i, j])])
            else:
                row.append(repr(float(dataset.values[i, j])))
        if dataset.schema.class_column is not None:
            row.append(dataset.schema.class_levels[int(dataset.labels[i])])
        writer.writerow(row)
    return buf.getvalue()


def infer_schema(
    text: str,
    class_column: str | None = None,
    missing_tokens: tuple[str, ...] = DEFAULT_MISSING_TOKENS,
) -> SchemaConfig:
    """Build a schema config from the data: a column whose every observed
    cell parses as a finite number is continuous, anything else is
    categorical with levels in first-appearance order."""
    header, body = _parse_rows(text)
    missing = set(missing_tokens)
    columns = []
    for col, name in enumerate(header):
        if name == class_column:
            continue
        cells = [row[col] for row in body if row[col] not in missing]
        numeric = True
        for cell in cells:
            try:
                if not math.isfinite(float(cell)):
                    numeric = False
                    break
            except ValueError:
                numeric = False
                break
        if numeric and cells:
            columns.append((name, "continuous", None))
        else:
            seen: dict[str, None] = {}
            for cell in cells:
                seen.setdefault(cell)
            columns.append((name, "categorical", tuple(seen)))
    return SchemaConfig(tuple(columns), class_column, missing_tokens)


def _format_float(x: float) -> str:
    if math.isnan(x):
        return "null"
    if math.isinf(x):
        return '"Infinity"' if x > 0 else '"-Infinity"'
    if x == int(x) and abs(x) < 1e16:
        return f"{x:.1f}"
    return repr(x)


def format_json(obj, indent: int = 0) -> str:
    """JSON text with floats in their shortest exact form.

    Every float is rendered as the shortest decimal that parses back to
    the identical IEEE double, so report comparisons are bit-exact. The
    standard library encoder offers no hook for float formatting, so this
    small emitter handles the report's value types directly.
    """
    pad = "  " * indent
    inner = "  " * (indent + 1)
    if obj is None:
        return "null"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _format_float(float(obj))
    if isinstance(obj, str):
        escaped = obj.replace("\\", "\\\\").replace('"', '\\"')
        return f'"{escaped}"'
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        parts = [
            f'{inner}"{key}": {format_json(value, indent + 1)}'
            for key, value in obj.items()
        ]
        return "{\n" + ",\n".join(parts) + f"\n{pad}}}"
    if isinstance(obj, (list, tuple)):
        if not len(obj):
            return "[]"
        parts = [f"{inner}{format_json(value, indent + 1)}" for value in obj]
        return "[\n" + ",\n".join(parts) + f"\n{pad}]"
    raise TypeError(f"cannot serialize {type(obj)!r}")


def write_report(runs: list[dict]) -> str:
    """Serialize benchmark results keyed by method, missing rate and seed,
    with per-(method, rate) mean/stddev aggregates across seeds.

    Each run dict needs at least method, missing_rate and seed; metric
    fields (rmse, classification_accuracy, ...) pass through as given.
    """
    nested: dict = {}
    groups: dict = {}
    for run in runs:
        method = str(run["method"])
        rate = repr(float(run["missing_rate"]))
        seed = str(int(run["seed"]))
        payload = {
            k: v for k, v in run.items() if k not in ("method", "missing_rate", "seed")
        }
        nested.setdefault(method, {}).setdefault(rate, {}).setdefault("seeds", {})[
            seed
        ] = payload
        groups.setdefault((method, rate), []).append(payload)

    for (method, rate), cells in groups.items():
        agg: dict = {"seeds": len(cells)}
        for metric in ("rmse", "classification_accuracy", "baseline_accuracy"):
            vals = [c[metric] for c in cells if c.get(metric) is not None]
            if vals:
                arr = np.asarray(vals, dtype=float)
                agg[f"{metric}_mean"] = float(arr.mean())
                agg[f"{metric}_std"] = float(arr.std(ddof=1)) if len(arr) > 1 else 0.0
        nested[method][rate]["aggregate"] = agg

    return format_json({"report_version": REPORT_VERSION, "runs": nested}) + "\n"
