"""Deterministic artifact emission: CSV tables, SVG plots, binary snapshots.

All writers format floats with repr() (shortest round-trip) and emit no
timestamps, so a re-run from the same resolved configuration produces
byte-identical files.  The binary snapshot layout (little-endian) is

    magic  8 bytes  b"SLABSNP1"
    n      uint32   grid size
    time   float64
    h      float64  slow-variation parameter of the run
    plen   uint32   byte length of the potential string
    pot    plen bytes, utf-8
    data   n complex128 values (physical samples)
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .errors import IoError

_MAGIC = b"SLABSNP1"


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def write_csv(path, header, rows):
    """Write a CSV table; refuses to create files for empty data."""
    rows = list(rows)
    if not rows:
        raise IoError(f"refusing to write empty table {path}")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [",".join(header)]
    for row in rows:
        if len(row) != len(header):
            raise IoError(f"row width {len(row)} != header width {len(header)}")
        lines.append(",".join(_fmt(v) for v in row))
    path.write_text("\n".join(lines) + "\n")
    return path


def write_error_series_csv(path, series):
    """Error series with its run metadata: columns t, err, h, N."""
    h = series.meta.get("h", float("nan"))
    n = series.meta.get("N", 0)
    return write_csv(
        path,
        ["t", "err", "h", "N"],
        [(t, e, h, n) for t, e in zip(series.t, series.err)],
    )


def write_trajectory_csv(path, traj, ctx=None):
    """Effective trajectory: t, a_*, v_*, theta_*, mu_* (+ H, U if ctx given)."""
    n = traj.n
    header = (
        ["t"]
        + [f"a_{j+1}" for j in range(n)]
        + [f"v_{j+1}" for j in range(n)]
        + [f"theta_{j+1}" for j in range(n)]
        + [f"mu_{j+1}" for j in range(n)]
    )
    rows = []
    if ctx is not None:
        from .effective import compute_VN, restricted_hamiltonian

        header += ["H_N", "V_N"]
        for i, t in enumerate(traj.times):
            p = traj.params_at(i)
            rows.append(
                [t, *traj.vectors[i], restricted_hamiltonian(p, ctx), compute_VN(p, ctx)]
            )
    else:
        for i, t in enumerate(traj.times):
            rows.append([t, *traj.vectors[i]])
    return write_csv(path, header, rows)


def write_snapshot_csv(path, x, values):
    vals = np.asarray(values)
    return write_csv(
        path,
        ["x", "re_u", "im_u", "abs_u"],
        [
            (xi, v.real, v.imag, abs(v))
            for xi, v in zip(np.asarray(x, dtype=float), vals)
        ],
    )


def write_snapshot_manifest(path, times):
    return write_csv(path, ["index", "t"], [(i, t) for i, t in enumerate(times)])


def write_binary_snapshot(path, grid_n, time, h, potential: str, values):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    pot = potential.encode("utf-8")
    vals = np.ascontiguousarray(np.asarray(values, dtype=np.complex128))
    if vals.size != grid_n:
        raise IoError("snapshot length does not match grid size")
    with open(path, "wb") as f:
        f.write(_MAGIC)
        f.write(struct.pack("<I", int(grid_n)))
        f.write(struct.pack("<d", float(time)))
        f.write(struct.pack("<d", float(h)))
        f.write(struct.pack("<I", len(pot)))
        f.write(pot)
        f.write(vals.astype("<c16").tobytes())
    return path


def read_binary_snapshot(path):
    with open(path, "rb") as f:
        magic = f.read(8)
        if magic != _MAGIC:
            raise IoError(f"{path} is not a snapshot file")
        (n,) = struct.unpack("<I", f.read(4))
        (time,) = struct.unpack("<d", f.read(8))
        (h,) = struct.unpack("<d", f.read(8))
        (plen,) = struct.unpack("<I", f.read(4))
        pot = f.read(plen).decode("utf-8")
        data = np.frombuffer(f.read(16 * n), dtype="<c16").copy()
    return {"n": int(n), "time": time, "h": h, "potential": pot, "values": data}


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, Path):
        return str(obj)
    return obj


def write_manifest(path, manifest: dict):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(_jsonable(manifest), indent=2, sort_keys=True) + "\n")
    return path
