"""CSV time series and binary snapshots."""
from __future__ import annotations

import csv
import json
import os

import numpy as np

from .diagnostics import BASE_COLUMNS, EnergyRecord
from .dynamics import SimState
from .spectral import Grid, SpectralField

SNAPSHOT_FORMAT = "nematic-el-snapshot"


def _fmt(x):
    return f"{float(x):.17g}"


def write_records_csv(records, path, extra_names=None):
    """Header plus one row per record, 17 significant digits."""
    if extra_names is None:
        extra_names = list(records[0].extra) if records else []
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(list(BASE_COLUMNS) + list(extra_names))
        for rec in records:
            if list(rec.extra) != list(extra_names):
                raise ValueError("records carry inconsistent extra norm columns")
            w.writerow([_fmt(v) for v in rec.row()])


def read_records_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValueError(f"{path}: empty file, header missing")
    header = rows[0]
    n = len(BASE_COLUMNS)
    if tuple(header[:n]) != BASE_COLUMNS:
        raise ValueError(f"{path}: unexpected header {header[:n]}")
    extra_names = header[n:]
    out = []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise ValueError(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
        try:
            vals = [float(v) for v in row]
        except ValueError:
            raise ValueError(f"{path}:{lineno}: non-numeric field") from None
        base = dict(zip(BASE_COLUMNS, vals[:n]))
        out.append(EnergyRecord(**base, extra=dict(zip(extra_names, vals[n:]))))
    return out


def write_snapshot(state: SimState, path):
    """JSON header line, then little-endian float64 physical data of u and d."""
    g = state.grid
    header = {
        "format": SNAPSHOT_FORMAT,
        "endian": "little",
        "dtype": "f8",
        "dim": g.dim,
        "n_modes": g.n_modes,
        "length": g.length,
        "t": state.t,
        "fields": [{"name": "u", "rank": "vector"}, {"name": "d", "rank": "vector"}],
    }
    payload = np.concatenate([state.u.to_physical(), state.d.to_physical()], axis=0)
    tmp = f"{path}.tmp"
    with open(tmp, "wb") as fh:
        fh.write((json.dumps(header) + "\n").encode("utf-8"))
        fh.write(np.ascontiguousarray(payload, dtype="<f8").tobytes())
    os.replace(tmp, path)


def read_snapshot(path) -> SimState:
    with open(path, "rb") as fh:
        raw = fh.read()
    nl = raw.find(b"\n")
    if nl < 0:
        raise ValueError(f"{path}: missing header line")
    try:
        header = json.loads(raw[:nl].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ValueError(f"{path}: malformed header ({exc})") from None
    if header.get("format") != SNAPSHOT_FORMAT:
        raise ValueError(f"{path}: not a snapshot file")
    if header.get("endian") != "little" or header.get("dtype") != "f8":
        raise ValueError(f"{path}: endianness/dtype marker absent or unsupported")
    grid = Grid(int(header["dim"]), int(header["n_modes"]), float(header["length"]))
    ranks = {"scalar": 1, "vector": grid.dim, "tensor": grid.dim ** 2}
    ncomp = [ranks[f["rank"]] for f in header["fields"]]
    count = sum(ncomp) * grid.n_modes ** grid.dim
    body = raw[nl + 1:]
    if len(body) != 8 * count:
        raise ValueError(f"{path}: payload has {len(body)} bytes, header implies {8 * count}")
    data = np.frombuffer(body, dtype="<f8").reshape((sum(ncomp),) + grid.shape)
    fields, i = {}, 0
    for f, n in zip(header["fields"], ncomp):
        fields[f["name"]] = SpectralField(grid, grid.forward(data[i:i + n]))
        i += n
    return SimState(fields["u"], fields["d"], float(header["t"]))
