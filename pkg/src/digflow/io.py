"""Trajectory CSV files and JSON reports.

A trajectory file is a CSV table with header row ``t,x1..xn,v1..vn``, preceded
by ``#``-prefixed metadata lines, one ``key=value`` per line with JSON values.
Numbers use 17 significant digits, so a write/read cycle is exact.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Any, Dict, Iterable, Optional, Union

import numpy as np

FORMAT_VERSION = 1

PathOrFile = Union[str, Path, IO[str]]


@dataclass
class TrajectoryFile:
    """In-memory trajectory table with its metadata header."""

    t: np.ndarray
    points: np.ndarray
    velocities: np.ndarray
    header: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=float).reshape(-1)
        self.points = np.atleast_2d(np.asarray(self.points, dtype=float))
        self.velocities = np.atleast_2d(np.asarray(self.velocities, dtype=float))
        n = self.t.size
        if self.points.shape[0] != n or self.velocities.shape != self.points.shape:
            raise ValueError("t, points and velocities must have matching row counts and dimensions")
        if n > 1 and not np.all(np.diff(self.t) > 0):
            raise ValueError("trajectory times must be strictly increasing")
        self.header.setdefault("format_version", FORMAT_VERSION)

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    @property
    def columns(self) -> list:
        n = self.dim
        return ["t"] + [f"x{i + 1}" for i in range(n)] + [f"v{i + 1}" for i in range(n)]

    @property
    def rows(self) -> np.ndarray:
        return np.column_stack([self.t, self.points, self.velocities])


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _open(target: PathOrFile, mode: str):
    if isinstance(target, (str, Path)):
        return open(target, mode, newline="", encoding="utf-8"), True
    return target, False


def dump_trajectory(traj: TrajectoryFile) -> str:
    buf = io.StringIO()
    for key, value in traj.header.items():
        buf.write(f"# {key}={json.dumps(value, sort_keys=True)}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(traj.columns)
    for row in traj.rows:
        writer.writerow([_fmt(x) for x in row])
    return buf.getvalue()


def parse_trajectory(text: str) -> TrajectoryFile:
    header: Dict[str, Any] = {}
    body = []
    for line in text.splitlines():
        if line.startswith("#"):
            key, sep, value = line[1:].strip().partition("=")
            if not sep:
                raise ValueError(f"malformed metadata line: {line!r}")
            header[key.strip()] = json.loads(value)
        elif line.strip():
            body.append(line)
    rows = list(csv.reader(body))
    if not rows:
        raise ValueError("trajectory file has no header row")
    columns, data = rows[0], rows[1:]
    if len(columns) < 3 or (len(columns) - 1) % 2 or columns[0] != "t":
        raise ValueError(f"expected columns t,x1..xn,v1..vn, got {columns}")
    n = (len(columns) - 1) // 2
    table = np.array([[float(x) for x in r] for r in data], dtype=float).reshape(-1, 1 + 2 * n)
    return TrajectoryFile(table[:, 0], table[:, 1:1 + n], table[:, 1 + n:], header)


def write_trajectory(traj: TrajectoryFile, target: PathOrFile) -> None:
    fh, close = _open(target, "w")
    try:
        fh.write(dump_trajectory(traj))
    finally:
        if close:
            fh.close()


def read_trajectory(source: PathOrFile) -> TrajectoryFile:
    fh, close = _open(source, "r")
    try:
        return parse_trajectory(fh.read())
    finally:
        if close:
            fh.close()


def trajectory_from_samples(
    t: Iterable[float], points: Iterable, velocities: Iterable, **header: Any
) -> TrajectoryFile:
    return TrajectoryFile(np.asarray(list(t)), np.asarray(list(points)), np.asarray(list(velocities)), dict(header))


def trajectory_as_json(traj: TrajectoryFile) -> Dict[str, Any]:
    return {
        **traj.header,
        "format_version": FORMAT_VERSION,
        "columns": traj.columns,
        "rows": traj.rows.tolist(),
    }


def _clean(obj: Any) -> Any:
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if np.isfinite(x) else str(x)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def dump_report(report: Dict[str, Any]) -> str:
    """Serialize a report document; non-finite numbers become strings."""
    doc = {"format_version": FORMAT_VERSION, **_clean(report)}
    return json.dumps(doc, indent=2, sort_keys=True, allow_nan=False) + "\n"


def write_report(report: Dict[str, Any], target: Optional[PathOrFile]) -> str:
    text = dump_report(report)
    if target is not None:
        fh, close = _open(target, "w")
        try:
            fh.write(text)
        finally:
            if close:
                fh.close()
    return text


def read_report(source: PathOrFile) -> Dict[str, Any]:
    fh, close = _open(source, "r")
    try:
        doc = json.load(fh)
    finally:
        if close:
            fh.close()
    if doc.get("format_version") != FORMAT_VERSION:
        raise ValueError(f"unsupported report format_version {doc.get('format_version')!r}")
    return doc
