"""Experiment configuration, result records and their rendering."""
from __future__ import annotations

import csv
import dataclasses
import io
import json
from dataclasses import dataclass, field
from typing import Any

from .errors import ConfigInvalid, EmptyInput, UsageError
from .io import _clean, dumps, read_json

RECORD_SCHEMA_VERSION = 1
FORMATS = ("table", "csv", "json")

CSV_HELP = """\
CSV formats:
  sample run     x0[,x1[,x2]], true, reconstructed, abs_error   (one row per test point)
  frame profile  scaled_distance, magnitude                     (one row per probe)
  report --format csv
                 sweep records (e.g. verify --suite weyl): their row columns,
                 e.g. omega, dim, ratio; prefixed by 'name' when several records.
                 other records: name, command, manifold, seed, passed, then every
                 scalar measurement in first-seen order.
"""


@dataclass
class ExperimentConfig:
    """Everything that determines a run; equal configs give equal records."""

    command: str = "verify"
    suite: str | None = None
    manifold: str | None = None
    omega: float | None = None
    Omega: float | None = None
    lmax: int | None = None
    a: float | None = None
    rho: Any = None  # float or "auto"
    strategy: str | None = None
    tol: float = 1e-10
    seed: int = 0
    trials: int | None = None
    points: int = 256
    j: int | None = None
    k: int = 0
    j_max: int = 5
    probe_count: int | None = None
    guard_scales: int = 0
    lattice_in: str | None = None
    lattice_out: str | None = None
    rule_in: str | None = None
    rule_out: str | None = None
    signal: str | None = None
    frame_dir: str | None = None
    out: str | None = None

    @classmethod
    def from_mapping(cls, data: dict, where: str = "config") -> "ExperimentConfig":
        if not isinstance(data, dict):
            raise ConfigInvalid(f"{where}: expected a JSON object, got {type(data).__name__}")
        fields = {f.name: f for f in dataclasses.fields(cls)}
        kwargs = {}
        for key, value in data.items():
            if key not in fields:
                raise ConfigInvalid(f"{where}: unknown field {key!r}")
            kwargs[key] = _coerce(key, value, where)
        return cls(**kwargs)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


_INT_FIELDS = {"lmax", "seed", "trials", "points", "j", "k", "j_max", "probe_count", "guard_scales"}
_FLOAT_FIELDS = {"omega", "Omega", "a", "tol"}


def _coerce(key, value, where):
    if value is None:
        return None
    try:
        if key in _INT_FIELDS:
            if isinstance(value, bool) or (isinstance(value, float) and not value.is_integer()):
                raise ValueError
            return int(value)
        if key in _FLOAT_FIELDS:
            if isinstance(value, bool):
                raise ValueError
            return float(value)
        if key == "rho":
            return value if value == "auto" else float(value)
    except (TypeError, ValueError):
        raise ConfigInvalid(f"{where}: field {key!r} has invalid value {value!r}") from None
    if not isinstance(value, str):
        raise ConfigInvalid(f"{where}: field {key!r} must be a string, got {value!r}")
    return value


def load_config(path) -> dict:
    """Read a JSON config file, validating field names and types."""
    data = read_json(path)
    ExperimentConfig.from_mapping(data, str(path))
    return data


@dataclass
class ResultRecord:
    name: str
    command: str
    config: dict
    measured: dict = field(default_factory=dict)
    checks: dict = field(default_factory=dict)
    rows: list = field(default_factory=list)
    seed: int = 0
    schema_version: int = RECORD_SCHEMA_VERSION
    timestamp: str | None = None
    wall_clock: float | None = None

    @property
    def passed(self) -> bool:
        return all(self.checks.values())

    def to_dict(self) -> dict:
        return _clean(dataclasses.asdict(self))

    @classmethod
    def from_dict(cls, data) -> "ResultRecord":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise ConfigInvalid(f"record has unknown fields {sorted(unknown)}")
        return cls(**data)

    def comparable(self) -> dict:
        """The record without timing fields, for determinism checks."""
        out = self.to_dict()
        out.pop("timestamp")
        out.pop("wall_clock")
        return out


def parse_records(text: str) -> list[ResultRecord]:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigInvalid(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    if isinstance(data, dict):
        data = [data]
    return [ResultRecord.from_dict(d) for d in data]


def _summary_row(rec: ResultRecord) -> dict:
    row = {"name": rec.name, "command": rec.command,
           "manifold": rec.config.get("manifold"), "seed": rec.seed, "passed": rec.passed}
    for key, value in rec.measured.items():
        if isinstance(value, (int, float, str, bool)) or value is None:
            row[key] = value
    return row


def _table_rows(records):
    if all(r.rows for r in records):
        rows = []
        for rec in records:
            for row in rec.rows:
                rows.append({"name": rec.name, **row} if len(records) > 1 else dict(row))
        return rows
    return [_summary_row(r) for r in records]


def _columns(rows):
    cols = []
    for row in rows:
        for key in row:
            if key not in cols:
                cols.append(key)
    return cols


def _fmt(value):
    if isinstance(value, float):
        return f"{value:.6g}"
    return "" if value is None else str(value)


def report(records, fmt: str = "table") -> str:
    records = list(records)
    if not records:
        raise EmptyInput("no records to report")
    fmt = fmt.lower()
    if fmt == "json":
        return dumps([r.to_dict() for r in records])
    if fmt not in FORMATS:
        raise UsageError(f"unknown format {fmt!r}; choose from {FORMATS}")
    if fmt == "csv":
        rows = _table_rows(records)
        cols = _columns(rows)
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(cols)
        for row in rows:
            writer.writerow([repr(v) if isinstance(v, float) else _fmt(v) for v in (row.get(c) for c in cols)])
        return buf.getvalue()
    blocks = [_text_table([_summary_row(r) for r in records])]
    for rec in records:
        if rec.rows:
            blocks.append(f"{rec.name}:\n" + _text_table(rec.rows))
    return "\n".join(blocks)


def _text_table(rows) -> str:
    cols = _columns(rows)
    cells = [[_fmt(row.get(c)) for c in cols] for row in rows]
    widths = [max(len(c), *(len(r[i]) for r in cells)) for i, c in enumerate(cols)]
    lines = ["  ".join(c.ljust(w) for c, w in zip(cols, widths)).rstrip(),
             "  ".join("-" * w for w in widths)]
    lines += ["  ".join(v.ljust(w) for v, w in zip(r, widths)).rstrip() for r in cells]
    return "\n".join(lines) + "\n"
