"""Run record and summary serialization.

CSV layout: ``#`` metadata and event comment lines, one header line naming
columns with units, then data rows.  All numbers are written with 9
significant digits, which makes write / read / write round trips
byte-identical.
"""

from __future__ import annotations

from pathlib import Path

from .sim import RECORD_COLUMNS, RECORD_UNITS, RunRecord


def _fmt(x: float) -> str:
    return f"{x:.9g}"


def write_record_csv(record: RunRecord, path: str | Path) -> None:
    lines = []
    for key in sorted(record.metadata):
        value = record.metadata[key]
        text = _fmt(value) if isinstance(value, float) else str(value)
        lines.append(f"# {key} = {text}")
    for t_ev, label in record.events:
        lines.append(f"# event = {_fmt(t_ev)} {label}")
    header = ",".join(f"{c}[{u}]" for c, u in zip(record.columns, record.units))
    lines.append(header)
    cols = [record.data[c] for c in record.columns]
    for row in zip(*cols):
        lines.append(",".join(_fmt(v) for v in row))
    Path(path).write_text("\n".join(lines) + "\n")


def read_record_csv(path: str | Path) -> RunRecord:
    metadata: dict = {}
    events: list = []
    data: dict = {}
    columns: tuple = ()
    units: tuple = ()
    with open(path) as fh:
        for raw in fh:
            line = raw.rstrip("\n")
            if line.startswith("#"):
                body = line[1:].strip()
                key, _, value = body.partition("=")
                key, value = key.strip(), value.strip()
                if key == "event":
                    t_text, _, label = value.partition(" ")
                    events.append((float(t_text), label))
                else:
                    try:
                        metadata[key] = float(value)
                    except ValueError:
                        metadata[key] = value
            elif not columns:
                parts = line.split(",")
                columns = tuple(p.split("[")[0] for p in parts)
                units = tuple(p.split("[")[1].rstrip("]") for p in parts)
                data = {c: [] for c in columns}
            elif line:
                for c, text in zip(columns, line.split(",")):
                    data[c].append(float(text))
    if columns != RECORD_COLUMNS:
        raise ValueError(f"unexpected record columns in {path}: {columns}")
    return RunRecord(columns, units or RECORD_UNITS, data, events, metadata)


def write_summary(summary: dict, path: str | Path) -> None:
    """Flat key = value text, floats at 9 significant digits."""
    lines = []
    for key in summary:
        value = summary[key]
        if isinstance(value, bool):
            text = "true" if value else "false"
        elif isinstance(value, float):
            text = _fmt(value)
        elif value is None:
            text = "none"
        else:
            text = str(value)
        lines.append(f"{key} = {text}")
    Path(path).write_text("\n".join(lines) + "\n")
