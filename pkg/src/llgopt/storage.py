"""On-disk formats: binary field snapshots, trajectory directories, CSV.

Snapshot layout (little-endian):

    magic   4 bytes  b"LLGF"
    version u32      1
    nx, ny  u32, u32
    ncomp   u32
    lx, ly  f64, f64
    t       f64
    payload ncomp * nx * ny f64, component-major, row-major per component

Writes are bit-exact round trips.  Trajectories are directories of numbered
snapshots plus an ``index.csv`` so partial inspection never needs a
monolithic read.  All CSV floats carry 17 significant digits.
"""

import csv
import struct
from pathlib import Path

import numpy as np

from .fields import Trajectory, VectorField3
from .spectral import Grid

MAGIC = b"LLGF"
VERSION = 1
_HEADER = struct.Struct("<4sIIIIddd")


def fmt_float(x):
    return f"{float(x):.17g}"


def write_snapshot(path, data, grid: Grid, t: float):
    """Write one nodal field; ``data`` is (ncomp, nx, ny) or a VectorField3."""
    if isinstance(data, VectorField3):
        data = data.data
    arr = np.ascontiguousarray(data, dtype="<f8")
    if arr.ndim == 2:
        arr = arr[None]
    ncomp = arr.shape[0]
    if arr.shape[1:] != (grid.nx, grid.ny):
        raise ValueError(f"snapshot shape {arr.shape} does not match grid {grid.shape}")
    header = _HEADER.pack(MAGIC, VERSION, grid.nx, grid.ny, ncomp, grid.lx, grid.ly, float(t))
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(arr.tobytes())


def read_snapshot(path):
    """Read one snapshot; returns (data, grid, t)."""
    with open(path, "rb") as fh:
        raw = fh.read(_HEADER.size)
        if len(raw) != _HEADER.size:
            raise ValueError(f"{path}: truncated snapshot header")
        magic, version, nx, ny, ncomp, lx, ly, t = _HEADER.unpack(raw)
        if magic != MAGIC:
            raise ValueError(f"{path}: bad magic {magic!r}, expected {MAGIC!r}")
        if version != VERSION:
            raise ValueError(f"{path}: unsupported format version {version}")
        payload = fh.read(ncomp * nx * ny * 8)
    if len(payload) != ncomp * nx * ny * 8:
        raise ValueError(f"{path}: truncated snapshot payload")
    data = np.frombuffer(payload, dtype="<f8").reshape(ncomp, nx, ny).copy()
    return data, Grid(lx, ly, nx, ny), t


def read_field(path) -> VectorField3:
    data, grid, _ = read_snapshot(path)
    if data.shape[0] != 3:
        raise ValueError(f"{path}: expected a 3-component field, got {data.shape[0]}")
    return VectorField3(data, grid)


def write_trajectory(directory, traj, stride: int = 1):
    """Write frames ``0, stride, 2*stride, ...`` plus the final frame."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    n = traj.n_steps
    indices = sorted(set(range(0, n + 1, stride)) | {n})
    rows = []
    for k in indices:
        name = f"frame_{k:06d}.llgf"
        write_snapshot(directory / name, traj.frame_array(k), traj.grid, traj.times[k])
        rows.append([str(k), fmt_float(traj.times[k]), name])
    write_csv(directory / "index.csv", ["index", "t", "file"], rows)


def read_trajectory(directory) -> Trajectory:
    directory = Path(directory)
    with open(directory / "index.csv", newline="") as fh:
        rows = list(csv.reader(fh))
    if rows and rows[0][:1] == ["index"]:
        rows = rows[1:]
    frames = []
    times = []
    grid = None
    for _, t, name in rows:
        data, g, _ = read_snapshot(directory / name)
        grid = grid or g
        if g != grid:
            raise ValueError(f"{directory}: mixed grids in trajectory")
        frames.append(data)
        times.append(float(t))
    return Trajectory(np.asarray(times), np.stack(frames), grid)


def write_csv(path, header, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)
