"""Matrix text files, run configuration and report serialization.

Matrix file layout::

    %%illposed-matrix v1
    <rows> <cols>
    <rows * cols whitespace-separated values, row-major>

Values are written with 17 significant digits, which round-trips every
double exactly.  Reports serialize to JSON (sorted keys, 17-digit floats,
``Infinity``/``NaN`` tokens as emitted by :mod:`json`) or to CSV tables.
"""

from dataclasses import asdict, dataclass, field
import csv
import io
import json
import math
import os

import numpy as np

from .errors import FormatError, IoError

MATRIX_HEADER = "%%illposed-matrix v1"
OUTPUT_DIR_ENV = "ILLPOSED_OUTPUT_DIR"


def format_float(x):
    x = float(x)
    if math.isnan(x):
        return "NaN"
    if math.isinf(x):
        return "Infinity" if x > 0 else "-Infinity"
    return format(x, ".17g")


# -- matrices -----------------------------------------------------------------


def dumps_matrix(M):
    M = np.asarray(M, dtype=np.float64)
    if M.ndim != 2:
        raise FormatError(f"expected a 2-D matrix, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise FormatError("matrix has non-finite entries")
    lines = [MATRIX_HEADER, f"{M.shape[0]} {M.shape[1]}"]
    lines += [" ".join(format(float(v), ".17g") for v in row) for row in M]
    return "\n".join(lines) + "\n"


def loads_matrix(text):
    lines = text.splitlines()
    if not lines or lines[0].strip() != MATRIX_HEADER:
        raise FormatError(f"expected header {MATRIX_HEADER!r}", line=1)
    if len(lines) < 2:
        raise FormatError("missing dimension line", line=2)
    dims = lines[1].split()
    try:
        rows, cols = (int(d) for d in dims)
    except ValueError:
        raise FormatError(f"bad dimension line {lines[1]!r}", line=2) from None
    if rows < 1 or cols < 1:
        raise FormatError(f"dimensions must be positive, got {rows} x {cols}", line=2)
    need = rows * cols
    values = []
    for lineno, line in enumerate(lines[2:], start=3):
        for tok in line.split():
            if len(values) == need:
                raise FormatError(f"more than {need} values", line=lineno)
            try:
                v = float(tok)
            except ValueError:
                raise FormatError(f"not a number: {tok!r}", line=lineno) from None
            if not math.isfinite(v):
                raise FormatError(f"non-finite value {tok!r}", line=lineno)
            values.append(v)
    if len(values) != need:
        raise FormatError(f"expected {need} values, found {len(values)}", line=max(len(lines), 2))
    return np.array(values, dtype=np.float64).reshape(rows, cols)


def write_matrix(path, M):
    try:
        with open(path, "w", encoding="ascii", newline="\n") as fh:
            fh.write(dumps_matrix(M))
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def read_matrix(path):
    try:
        with open(path, encoding="ascii") as fh:
            text = fh.read()
    except (OSError, UnicodeDecodeError) as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    return loads_matrix(text)


# -- configuration and reports ------------------------------------------------


@dataclass
class RunConfig:
    seed: int = 0
    tolerance_budget: float = 10.0
    rank_cutoff_rel: float = None
    grid_levels: list = field(default_factory=list)
    output_format: str = "json"
    output_path: str = None

    def __post_init__(self):
        if not 0 <= int(self.seed) < 2**64:
            raise FormatError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        self.seed = int(self.seed)
        if self.output_format not in ("json", "csv"):
            raise FormatError(f"unknown output format {self.output_format!r}")

    def as_dict(self):
        return asdict(self)


@dataclass
class Report:
    tool_version: str
    command: str
    config: dict
    results: dict
    provenance: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "tool_version": self.tool_version,
            "command": self.command,
            "config": self.config,
            "results": self.results,
            "provenance": self.provenance,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(d["tool_version"], d["command"], d["config"], d["results"], d.get("provenance", {}))


def _plain(obj):
    """Convert numpy scalars/arrays and tuples into JSON-ready Python objects."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    return obj


def _encode(obj, indent, level):
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if obj is None:
        return "null"
    if obj is True:
        return "true"
    if obj is False:
        return "false"
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        return format_float(obj)
    if isinstance(obj, str):
        return json.dumps(obj, ensure_ascii=True)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(k)}: {_encode(obj[k], indent, level + 1)}" for k in sorted(obj)]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, list):
        if not obj:
            return "[]"
        if all(not isinstance(v, (dict, list)) for v in obj):
            return "[" + ", ".join(_encode(v, indent, level + 1) for v in obj) + "]"
        return "[\n" + ",\n".join(pad + _encode(v, indent, level + 1) for v in obj) + "\n" + end + "]"
    raise FormatError(f"cannot serialize {type(obj).__name__}")


def dumps_json(report):
    return _encode(_plain(report.to_dict()), 2, 0) + "\n"


def loads_json(text):
    return Report.from_dict(json.loads(text))


def dumps_csv(report):
    """CSV rendering: every table in ``results["tables"]``, else a key/value summary."""
    results = _plain(report.results)
    tables = results.get("tables") or {}
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    names = sorted(tables)
    if not names:
        w.writerow(["key", "value"])
        for key in sorted(k for k in results if k != "tables"):
            w.writerow([key, _cell(results[key])])
        return buf.getvalue()
    for name in names:
        if len(names) > 1:
            buf.write(f"# {name}\n")
        w.writerow(tables[name]["columns"])
        for row in tables[name]["rows"]:
            w.writerow([_cell(v) for v in row])
    return buf.getvalue()


def _cell(v):
    if isinstance(v, float):
        return format_float(v)
    if isinstance(v, (dict, list)):
        return _encode(v, 0, 0).replace("\n", "")
    if v is None:
        return ""
    return str(v).lower() if isinstance(v, bool) else str(v)


def emit_report(report, config):
    """Serialize ``report`` per ``config.output_format`` and write it out.

    The destination is ``config.output_path``; when that is unset and the
    ``ILLPOSED_OUTPUT_DIR`` environment variable names a directory, the file
    ``<dir>/<command>.<format>`` is written there.  Returns the document
    text and the path written (``None`` means the caller prints it).
    """
    text = dumps_json(report) if config.output_format == "json" else dumps_csv(report)
    path = config.output_path
    if path is None and os.environ.get(OUTPUT_DIR_ENV):
        stem = report.command.replace(" ", "_")
        path = os.path.join(os.environ[OUTPUT_DIR_ENV], f"{stem}.{config.output_format}")
    if path is not None:
        try:
            parent = os.path.dirname(path)
            if parent:
                os.makedirs(parent, exist_ok=True)
            with open(path, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(text)
        except OSError as exc:
            raise IoError(f"cannot write report to {path}: {exc}") from exc
    return text, path
