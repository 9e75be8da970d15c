"""Result records: a header-rowed CSV plus a JSON run manifest.

Floats are written with ``repr`` so a write/read round trip is bitwise exact.
``delta_e`` is recomputed from ``energy - reference`` on load and a mismatch
with the stored column is an error.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, fields
from pathlib import Path

from .. import __version__

SCHEMA_VERSION = 1


@dataclass(frozen=True)
class ResultRecord:
    task: str
    point: str  # input file stem for chemistry, "N<n>" for cluster
    bond_length: float
    n_qubits: int
    depth: int
    restart: int
    seed: int
    energy: float
    reference: float
    delta_e: float
    fidelity: float
    t_tot: float
    steps: int
    shots: int
    wallclock_s: float
    best: bool
    stop_reason: str

    @classmethod
    def make(cls, **kw) -> ResultRecord:
        kw["delta_e"] = kw["energy"] - kw["reference"]
        return cls(**kw)


COLUMNS = tuple(f.name for f in fields(ResultRecord))
_TYPES = {f.name: f.type for f in fields(ResultRecord)}


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _parse(name: str, text: str):
    kind = _TYPES[name]
    if kind == "float":
        return float(text)
    if kind == "int":
        return int(text)
    if kind == "bool":
        if text not in ("True", "False"):
            raise ValueError(f"column {name}: bad boolean {text!r}")
        return text == "True"
    return text


def emit_results(records, path: str | Path, manifest: dict | None = None) -> tuple[Path, Path]:
    """Write ``<path>.csv`` and ``<path>.manifest.json``; returns both paths."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    csv_path = path.with_name(path.name + ".csv")
    man_path = path.with_name(path.name + ".manifest.json")
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(COLUMNS)
        for rec in records:
            writer.writerow([_fmt(getattr(rec, c)) for c in COLUMNS])
    body = {"schema_version": SCHEMA_VERSION, "package_version": __version__,
            "records": csv_path.name, "columns": list(COLUMNS)}
    body.update(manifest or {})
    man_path.write_text(json.dumps(body, indent=2, sort_keys=True, default=str) + "\n")
    return csv_path, man_path


def read_results(csv_path: str | Path) -> list[ResultRecord]:
    with open(csv_path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(header) != COLUMNS:
            raise ValueError(f"{csv_path}: unexpected header {header}")
        out = []
        for line_no, row in enumerate(reader, start=2):
            values = {c: _parse(c, v) for c, v in zip(COLUMNS, row, strict=True)}
            recomputed = values["energy"] - values["reference"]
            stored = values["delta_e"]
            if not (recomputed == stored or (math.isnan(recomputed) and math.isnan(stored))):
                raise ValueError(f"{csv_path}:{line_no}: delta_e does not equal energy - reference")
            values["delta_e"] = recomputed
            out.append(ResultRecord(**values))
    return out


def records_as_dicts(records) -> list[dict]:
    return [asdict(r) for r in records]
