"""Per-trial result rows and their CSV / plot-data serialization."""

from __future__ import annotations

import csv
import dataclasses
import io
import math
import re
from dataclasses import dataclass
from pathlib import Path

CSV_FIELDS = ("experiment", "axis_value", "trial", "seed", "pee_total", "pee_avg",
              "max_component_error", "emd", "runtime_ms", "algorithm")


@dataclass(frozen=True)
class TrialRecord:
    experiment: str
    axis_value: float
    trial: int
    seed: int
    pee_total: float
    pee_avg: float
    max_component_error: float
    emd: float
    runtime_ms: float
    algorithm: str

    def __post_init__(self):
        for name in ("pee_total", "pee_avg", "max_component_error", "emd", "runtime_ms"):
            if not getattr(self, name) >= 0:
                raise ValueError(f"{name} must be nonnegative, got {getattr(self, name)}")


assert tuple(f.name for f in dataclasses.fields(TrialRecord)) == CSV_FIELDS


def _fmt(value) -> str:
    # repr gives the shortest string that round-trips a float exactly
    return repr(float(value)) if isinstance(value, float) else str(value)


def records_to_csv(records) -> str:
    records = list(records)
    if not records:
        raise ValueError("cannot write an empty table")
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_FIELDS)
    for rec in records:
        writer.writerow([_fmt(getattr(rec, f)) for f in CSV_FIELDS])
    return buf.getvalue()


def emit_csv(records, path) -> Path:
    path = Path(path)
    text = records_to_csv(records)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    return path


def parse_csv(text: str):
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header is None or tuple(header) != CSV_FIELDS:
        raise ValueError(f"unexpected CSV header {header!r}")
    out = []
    for row in reader:
        if not row:
            continue
        kw = dict(zip(CSV_FIELDS, row))
        out.append(TrialRecord(
            experiment=kw["experiment"], axis_value=float(kw["axis_value"]),
            trial=int(kw["trial"]), seed=int(kw["seed"]),
            pee_total=float(kw["pee_total"]), pee_avg=float(kw["pee_avg"]),
            max_component_error=float(kw["max_component_error"]), emd=float(kw["emd"]),
            runtime_ms=float(kw["runtime_ms"]), algorithm=kw["algorithm"]))
    return out


def read_csv(path):
    return parse_csv(Path(path).read_text(encoding="utf-8"))


def _safe_name(name: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.-]+", "_", name).strip("_") or "series"


def emit_plotdata(series: dict, directory) -> list:
    """Write one two-column ``x y`` file per series into ``directory``.

    ``series`` maps a name to a pair of equal-length sequences. Non-finite
    values are written as ``nan``/``inf`` so plotting tools can skip them.
    """
    if not series:
        raise ValueError("no series to write")
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = []
    for name, (xs, ys) in series.items():
        xs, ys = list(xs), list(ys)
        if len(xs) != len(ys):
            raise ValueError(f"series {name!r} has unequal x/y lengths")
        lines = [f"# {name}"]
        lines += [f"{_fmt(float(x))} {_fmt(float(y))}" for x, y in zip(xs, ys)]
        path = directory / f"{_safe_name(name)}.dat"
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        paths.append(path)
    return paths


def read_plotdata(path):
    xs, ys = [], []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if not line or line.startswith("#"):
            continue
        x, y = line.split()
        xs.append(float(x))
        ys.append(float(y))
    return xs, ys


def isclose_records(a: TrialRecord, b: TrialRecord) -> bool:
    return all(
        getattr(a, f) == getattr(b, f)
        or (isinstance(getattr(a, f), float) and math.isnan(getattr(a, f))
            and math.isnan(getattr(b, f)))
        for f in CSV_FIELDS)
