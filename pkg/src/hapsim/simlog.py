import csv
import hashlib
import json
import logging
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, NamedTuple

import numpy as np

from .exceptions import EmptyLogError, MissingColumnError, ScenarioParseError

logger = logging.getLogger(__name__)

SCHEMA_VERSION = "1.0"


class LogRecord(NamedTuple):
    t: float
    theta_s: float
    dtheta_s: float
    theta_h: float
    theta_a: float
    b_h: float
    k_h: float
    b_a: float
    k_a: float
    tau_h_intent: float
    tau_a_intent: float
    tau_h_coupling: float
    tau_a_coupling: float
    tau_total_intent: float
    tau_diff: float
    epsilon: float
    stage_cost: float
    safety_term: float
    disagreement_term: float


COLUMNS: tuple[str, ...] = LogRecord._fields


def config_hash(document: Mapping[str, Any]) -> str:
    encoded = json.dumps(document, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(encoded.encode("utf-8")).hexdigest()


@dataclass
class SimLog:
    """Per control step record of one closed-loop run."""
    name: str
    ts: float
    adaptive: bool = True
    records: list[LogRecord] = field(default_factory=list)
    meta: dict[str, Any] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.records)

    def append(self, record: LogRecord) -> None:
        self.records.append(record)

    def column(self, name: str) -> np.ndarray:
        if name not in COLUMNS:
            raise MissingColumnError(name)
        index = COLUMNS.index(name)
        return np.array([r[index] for r in self.records], dtype=float)

    @property
    def times(self) -> np.ndarray:
        return self.column("t")

    def require_records(self) -> None:
        if not self.records:
            raise EmptyLogError(f"Log {self.name!r} has no records")


def _format(value: float) -> str:
    return f"{value:.9g}"


def write_csv(log: SimLog, path: Path) -> Path:
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(COLUMNS)
        for record in log.records:
            writer.writerow(_format(v) for v in record)
    logger.info("Wrote %s", path)
    return path


def log_document(log: SimLog) -> dict[str, Any]:
    return {
        "meta": {
            "schema_version": SCHEMA_VERSION,
            "scenario": log.name,
            "ts": log.ts,
            "adaptive": log.adaptive,
            **log.meta,
        },
        "columns": list(COLUMNS),
        "records": [list(record) for record in log.records],
    }


def write_json(document: Mapping[str, Any], path: Path) -> Path:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(document, f, indent=2)
        f.write("\n")
    logger.info("Wrote %s", path)
    return path


def _records(
        rows: Iterable[Iterable[Any]],
        columns: list[str],
        location: str,
) -> list[LogRecord]:
    indices = []
    for name in COLUMNS:
        if name not in columns:
            raise MissingColumnError(name)
        indices.append(columns.index(name))
    records = []
    for i, row in enumerate(rows):
        row = list(row)
        try:
            records.append(LogRecord(*(float(row[j]) for j in indices)))
        except (IndexError, ValueError) as e:
            raise ScenarioParseError(f"{location}:{i + 2}", str(e)) from e
    return records


def read_log(path: Path) -> SimLog:
    """Load a log previously exported as CSV or JSON."""
    path = Path(path)
    if not path.is_file():
        raise ScenarioParseError(str(path), "no such log file")
    if path.suffix == ".json":
        try:
            document = json.loads(path.read_text(encoding="utf-8"))
            meta = document["meta"]
            columns = document["columns"]
            rows = document["records"]
        except (ValueError, KeyError, TypeError) as e:
            raise ScenarioParseError(str(path), f"not a log: {e}") from e
        log = SimLog(
            name=meta.get("scenario", path.stem),
            ts=meta.get("ts", 0.0),
            adaptive=meta.get("adaptive", True),
        )
    else:
        with open(path, newline="", encoding="utf-8") as f:
            reader = csv.reader(f)
            columns = next(reader, None)
            rows = list(reader)
        log = SimLog(name=path.stem, ts=0.0)
        if columns is None:
            return log
    log.records = _records(rows, list(columns), str(path))
    if not log.ts and len(log.records) > 1:
        log.ts = log.records[1].t - log.records[0].t
    return log
