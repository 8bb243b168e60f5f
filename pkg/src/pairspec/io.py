"""Config files, CSV tables and JSON reports.

Config files are flat ``key = value`` lines; ``#`` starts a comment and
comma-separated values become lists. Numbers in CSV output use ``repr``,
the shortest decimal string that reads back to the same double.
"""

from __future__ import annotations

import csv
import io as _io
import json
import os
import tempfile
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from pairspec.kernels import PairSample, PointSet


class ConfigError(ValueError):
    pass


def _scalar(text: str):
    t = text.strip()
    low = t.lower()
    if low in ("true", "false"):
        return low == "true"
    try:
        return int(t)
    except ValueError:
        pass
    try:
        return float(t)
    except ValueError:
        return t


def parse_config_text(text: str, source: str = "<config>") -> dict:
    """Parse ``key = value`` lines into a flat dict."""
    out: dict = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ConfigError(f"{source}:{lineno}: empty key")
        if key in out:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        if "," in value:
            out[key] = [_scalar(v) for v in value.split(",") if v.strip()]
        else:
            out[key] = _scalar(value)
    return out


def read_config(path) -> dict:
    path = Path(path)
    return parse_config_text(path.read_text(), str(path))


def format_config(cfg: dict) -> str:
    lines = []
    for key, value in cfg.items():
        if isinstance(value, (list, tuple)):
            value = ", ".join(_fmt(v) for v in value)
        else:
            value = _fmt(value)
        lines.append(f"{key} = {value}")
    return "\n".join(lines) + "\n"


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def atomic_write_text(path, text: str) -> None:
    """Write via a temp file in the target directory and rename over ``path``."""
    path = Path(path)
    directory = path.parent if str(path.parent) else Path(".")
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=directory)
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_table(path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    atomic_write_text(path, buf.getvalue())


def read_table(path, required: Sequence[str] = ()) -> tuple[list[str], np.ndarray]:
    """Header and float matrix of a CSV file."""
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise ConfigError(f"{path}: empty file, header required") from None
        rows = [r for r in reader if r and any(c.strip() for c in r)]
    missing = [c for c in required if c not in header]
    if missing:
        raise ConfigError(f"{path}: missing columns {missing}; header is {header}")
    try:
        data = np.array([[float(c) for c in r] for r in rows], dtype=np.float64)
    except ValueError as exc:
        raise ConfigError(f"{path}: non-numeric value ({exc})") from None
    if rows and any(len(r) != len(header) for r in rows):
        raise ConfigError(f"{path}: ragged rows, expected {len(header)} columns")
    return header, data.reshape(len(rows), len(header))


def write_points(path, points: PointSet) -> None:
    write_table(path, [f"x{k}" for k in range(points.dim)], points.points.tolist())


def read_points(path) -> PointSet:
    header, data = read_table(path)
    expected = [f"x{k}" for k in range(len(header))]
    if header != expected:
        raise ConfigError(f"{path}: point header must be {','.join(expected)}, got {header}")
    return PointSet(data)


def write_pairs(path, sample: PairSample) -> None:
    if sample.labels is None:
        write_table(path, ["i", "j"], sample.pairs.tolist())
    else:
        rows = [(int(i), int(j), float(y)) for (i, j), y in zip(sample.pairs, sample.labels)]
        write_table(path, ["i", "j", "y"], rows)


def read_pairs(path) -> PairSample:
    header, data = read_table(path, required=("i", "j"))
    if set(header) - {"i", "j", "y"}:
        raise ConfigError(f"{path}: pair header must be i,j[,y], got {header}")
    idx = data[:, [header.index("i"), header.index("j")]]
    if np.any(idx != np.round(idx)):
        raise ConfigError(f"{path}: pair indices must be integers")
    labels = data[:, header.index("y")] if "y" in header else None
    return PairSample(idx.astype(np.int64).reshape(-1, 2), labels)


def write_matrix(path, M: np.ndarray, prefix: str = "g") -> None:
    write_table(path, [f"{prefix}{k}" for k in range(M.shape[1])], np.asarray(M).tolist())


def read_matrix(path) -> np.ndarray:
    return read_table(path)[1]


def write_column(path, name: str, values) -> None:
    write_table(path, [name], [[float(v)] for v in np.asarray(values).ravel()])


def read_column(path, name: str) -> np.ndarray:
    header, data = read_table(path, required=(name,))
    return data[:, header.index(name)]


def write_json(path, obj) -> None:
    atomic_write_text(path, json.dumps(obj, indent=2, allow_nan=True) + "\n")
