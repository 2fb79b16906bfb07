"""3-component nodal vector fields, trajectories, and pointwise algebra."""

from dataclasses import dataclass, field

import numpy as np

from . import _kernels as kernels
from . import spectral
from .errors import DegenerateFieldError, ShapeMismatchError
from .spectral import Grid


def _as_field_array(data, grid):
    arr = np.ascontiguousarray(data, dtype=np.float64)
    if arr.shape != (3, grid.nx, grid.ny):
        raise ShapeMismatchError(
            f"expected data of shape (3, {grid.nx}, {grid.ny}), got {arr.shape}"
        )
    return arr


@dataclass
class VectorField3:
    """Nodal 3-vector field on a grid; data has shape (3, nx, ny)."""

    data: np.ndarray
    grid: Grid

    def __post_init__(self):
        self.data = _as_field_array(self.data, self.grid)
        if not np.all(np.isfinite(self.data)):
            raise ValueError("field contains non-finite entries")

    @classmethod
    def zeros(cls, grid):
        return cls(np.zeros((3, grid.nx, grid.ny)), grid)

    @classmethod
    def constant(cls, grid, vec):
        data = np.empty((3, grid.nx, grid.ny))
        for c in range(3):
            data[c] = vec[c]
        return cls(data, grid)

    def copy(self):
        return VectorField3(self.data.copy(), self.grid)

    def __add__(self, other):
        _require_same_grid(self, other)
        return VectorField3(self.data + other.data, self.grid)

    def __sub__(self, other):
        _require_same_grid(self, other)
        return VectorField3(self.data - other.data, self.grid)

    def __mul__(self, scalar):
        return VectorField3(self.data * float(scalar), self.grid)

    __rmul__ = __mul__

    def __neg__(self):
        return VectorField3(-self.data, self.grid)


def _require_same_grid(a, b):
    if a.grid != b.grid:
        raise ShapeMismatchError(f"grids differ: {a.grid} vs {b.grid}")


@dataclass
class Trajectory:
    """Uniformly sampled time sequence of vector fields on one grid.

    ``data`` has shape (nt + 1, 3, nx, ny); ``times`` runs from 0 to T with
    spacing uniform to 1e-12 relative.
    """

    times: np.ndarray
    data: np.ndarray
    grid: Grid
    diagnostics: object = field(default=None, compare=False)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=np.float64)
        self.data = np.ascontiguousarray(self.data, dtype=np.float64)
        if self.times.ndim != 1 or self.times.size < 2:
            raise ValueError("need at least two time samples")
        if self.data.shape != (self.times.size, 3, self.grid.nx, self.grid.ny):
            raise ShapeMismatchError(
                f"trajectory data shape {self.data.shape} does not match "
                f"{self.times.size} frames on grid {self.grid.shape}"
            )
        steps = np.diff(self.times)
        if steps.size and not np.all(steps > 0):
            raise ValueError("times must be strictly increasing")
        dt = steps[0]
        if np.abs(steps - dt).max() > 1e-12 * max(abs(self.times[-1]), 1.0):
            raise ValueError("time grid is not uniform")

    @classmethod
    def zeros(cls, grid, horizon, nt):
        times = np.linspace(0.0, horizon, nt + 1)
        return cls(times, np.zeros((nt + 1, 3, grid.nx, grid.ny)), grid)

    @classmethod
    def constant(cls, grid, horizon, nt, vec):
        traj = cls.zeros(grid, horizon, nt)
        for c in range(3):
            traj.data[:, c] = vec[c]
        return traj

    @property
    def n_steps(self):
        return self.times.size - 1

    @property
    def horizon(self):
        return float(self.times[-1])

    @property
    def dt(self):
        return float(self.times[1] - self.times[0])

    def frame_array(self, k):
        return self.data[k]

    def frame(self, k):
        return VectorField3(self.data[k].copy(), self.grid)

    def copy(self):
        return Trajectory(self.times.copy(), self.data.copy(), self.grid)

    def __add__(self, other):
        self._require_compatible(other)
        return Trajectory(self.times, self.data + other.data, self.grid)

    def __sub__(self, other):
        self._require_compatible(other)
        return Trajectory(self.times, self.data - other.data, self.grid)

    def __mul__(self, scalar):
        return Trajectory(self.times, self.data * float(scalar), self.grid)

    __rmul__ = __mul__

    def _require_compatible(self, other):
        if self.grid != other.grid or self.times.size != other.times.size:
            raise ShapeMismatchError("trajectories are not compatible")


# -- pointwise algebra -------------------------------------------------------


def cross(a: VectorField3, b: VectorField3) -> VectorField3:
    """Pointwise cross product a x b."""
    _require_same_grid(a, b)
    return VectorField3(kernels.cross(a.data, b.data), a.grid)


def dot(a: VectorField3, b: VectorField3):
    """Pointwise scalar product, returned as an (nx, ny) array."""
    _require_same_grid(a, b)
    return kernels.dot(a.data, b.data)


def effective_field(m: VectorField3, u: VectorField3) -> VectorField3:
    """Exchange-plus-applied field: Laplacian of m plus u."""
    _require_same_grid(m, u)
    return VectorField3(spectral.laplacian(m.data, m.grid) + u.data, m.grid)


def sphere_defect(m) -> float:
    """max over nodes of | |m|^2 - 1 |; a diagnostic, never enforced."""
    data = m.data if isinstance(m, VectorField3) else np.asarray(m)
    return kernels.sphere_defect(np.ascontiguousarray(data, dtype=np.float64))


def renormalize(m: VectorField3) -> VectorField3:
    """Pointwise projection m / |m| onto the unit sphere."""
    out, min_norm = kernels.normalize(m.data)
    if min_norm <= 0.0:
        raise DegenerateFieldError("cannot renormalize: a node has |m| = 0")
    return VectorField3(out, m.grid)
