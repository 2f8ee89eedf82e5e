"""Experiment output rows and their CSV / JSON serialization.

Floats are written with 17 significant digits, which is enough for an exact
binary round trip.  Missing values (no reference, or the measured slot of an
error row) are written as empty CSV fields and JSON ``null``; NaN and
infinities are refused.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from typing import Iterable, List, Optional

__all__ = [
    "CSV_COLUMNS",
    "ExperimentRecord",
    "NonFiniteValue",
    "records_to_csv",
    "records_from_csv",
    "records_to_json",
    "records_from_json",
    "write_records",
    "read_records",
]

CSV_COLUMNS = (
    "experiment", "n", "seed", "z0_re", "z0_im", "a",
    "statistic", "measured", "reference", "error", "wall_time_ms",
)

ERROR_PREFIX = "error:"


class NonFiniteValue(ValueError):
    """A NaN or infinity reached a record field."""


def _check(name: str, x: Optional[float]) -> Optional[float]:
    if x is None:
        return None
    x = float(x)
    if not math.isfinite(x):
        raise NonFiniteValue(f"{name} is not finite: {x!r}")
    return x


@dataclass(frozen=True)
class ExperimentRecord:
    """One output row.

    ``error`` is derived as ``measured - reference`` whenever both exist.
    Error rows carry ``statistic = "error:<ExceptionName>"`` and no
    measured value.
    """

    experiment: str
    n: int
    seed: int
    z0: complex
    a: float
    statistic: str
    measured: Optional[float]
    reference: Optional[float] = None
    wall_time_ms: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "seed", int(self.seed))
        z0 = complex(self.z0)
        _check("z0.real", z0.real)
        _check("z0.imag", z0.imag)
        object.__setattr__(self, "z0", z0)
        object.__setattr__(self, "a", _check("a", self.a))
        object.__setattr__(self, "measured", _check("measured", self.measured))
        object.__setattr__(self, "reference", _check("reference", self.reference))
        object.__setattr__(self, "wall_time_ms", _check("wall_time_ms", self.wall_time_ms))
        if self.measured is None and not self.is_error:
            raise ValueError("only error rows may omit the measured value")

    @property
    def error(self) -> Optional[float]:
        if self.measured is None or self.reference is None:
            return None
        return self.measured - self.reference

    @property
    def is_error(self) -> bool:
        return self.statistic.startswith(ERROR_PREFIX)

    @classmethod
    def failure(cls, experiment: str, n: int, seed: int, z0: complex, a: float,
                exc: BaseException, wall_time_ms: float = 0.0) -> "ExperimentRecord":
        return cls(experiment, n, seed, z0, a, ERROR_PREFIX + type(exc).__name__, None,
                   None, wall_time_ms)

    def to_dict(self) -> dict:
        return {
            "experiment": self.experiment,
            "n": self.n,
            "seed": self.seed,
            "z0_re": self.z0.real,
            "z0_im": self.z0.imag,
            "a": self.a,
            "statistic": self.statistic,
            "measured": self.measured,
            "reference": self.reference,
            "error": self.error,
            "wall_time_ms": self.wall_time_ms,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentRecord":
        def opt(v):
            return None if v is None or v == "" else float(v)

        return cls(
            experiment=d["experiment"],
            n=int(d["n"]),
            seed=int(d["seed"]),
            z0=complex(float(d["z0_re"]), float(d["z0_im"])),
            a=float(d["a"]),
            statistic=d["statistic"],
            measured=opt(d["measured"]),
            reference=opt(d["reference"]),
            wall_time_ms=float(d["wall_time_ms"]),
        )


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return format(x, ".17g")
    return str(x)


def records_to_csv(records: Iterable[ExperimentRecord]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in records:
        d = r.to_dict()
        w.writerow([_fmt(d[c]) for c in CSV_COLUMNS])
    return buf.getvalue()


def records_from_csv(text: str) -> List[ExperimentRecord]:
    reader = csv.DictReader(io.StringIO(text))
    if tuple(reader.fieldnames or ()) != CSV_COLUMNS:
        raise ValueError(f"unexpected CSV header {reader.fieldnames!r}")
    return [ExperimentRecord.from_dict(row) for row in reader]


def records_to_json(records: Iterable[ExperimentRecord]) -> str:
    # json writes floats with repr, which already round-trips exactly
    return json.dumps([r.to_dict() for r in records], indent=1, allow_nan=False)


def records_from_json(text: str) -> List[ExperimentRecord]:
    return [ExperimentRecord.from_dict(d) for d in json.loads(text)]


def write_records(records: Iterable[ExperimentRecord], path: str, fmt: str = "csv") -> None:
    text = records_to_csv(records) if fmt == "csv" else records_to_json(records)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)


def read_records(path: str, fmt: Optional[str] = None) -> List[ExperimentRecord]:
    if fmt is None:
        fmt = "json" if str(path).endswith(".json") else "csv"
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    return records_from_csv(text) if fmt == "csv" else records_from_json(text)
