"""Cosine-basis spectral machinery on a rectangle with Neumann walls.

The domain is the rectangle [0, lx] x [0, ly] sampled at the midpoint
collocation nodes x_i = lx*(i+1/2)/nx.  Scalar fields are expanded in the
orthonormal eigenfunctions of -Laplace + I with zero Neumann boundary
condition,

    xi_jk(x, y) = n_j n_k cos(j pi x / lx) cos(k pi y / ly),

with n_0 = sqrt(1/l) and n_j = sqrt(2/l) for j >= 1, eigenvalues
rho_jk = lambda_jk + 1, lambda_jk = (j pi / lx)^2 + (k pi / ly)^2.  The
discrete transforms are DCT-II/DST based; midpoint quadrature with the
uniform weight lx*ly/(nx*ny) is exact for all resolvable modes, so the
discrete L2 inner product, Parseval, and integration by parts hold to
rounding error for fields living in the truncated basis.

Array convention: nodal scalar fields have shape (nx, ny); vector fields
carry a leading component axis, and every routine here accepts arbitrary
leading axes (..., nx, ny).
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import fft as _fft

from .errors import ShapeMismatchError

# Number of worker threads handed to scipy.fft; fixed per process so runs
# stay bitwise reproducible for a given setting.
_workers = 1


def set_workers(n):
    global _workers
    if n < 1:
        raise ValueError("worker count must be >= 1")
    _workers = int(n)


def get_workers():
    return _workers


@dataclass(frozen=True)
class Grid:
    """Rectangle geometry and collocation resolution."""

    lx: float
    ly: float
    nx: int
    ny: int

    def __post_init__(self):
        if not (self.lx > 0 and self.ly > 0):
            raise ValueError(f"domain lengths must be positive, got {self.lx}, {self.ly}")
        if self.nx < 4 or self.ny < 4:
            raise ValueError(f"need at least 4 nodes per axis, got {self.nx}, {self.ny}")

    @property
    def shape(self):
        return (self.nx, self.ny)

    @property
    def hx(self):
        return self.lx / self.nx

    @property
    def hy(self):
        return self.ly / self.ny

    @property
    def quad_weight(self):
        """Midpoint quadrature weight per node."""
        return (self.lx * self.ly) / (self.nx * self.ny)

    def nodes_x(self):
        return self.lx * (np.arange(self.nx) + 0.5) / self.nx

    def nodes_y(self):
        return self.ly * (np.arange(self.ny) + 0.5) / self.ny

    def meshgrid(self):
        return np.meshgrid(self.nodes_x(), self.nodes_y(), indexing="ij")


@dataclass(frozen=True)
class EigenData:
    """Per-mode eigenvalues of -Laplace (lam) and -Laplace + I (rho)."""

    lam: np.ndarray
    rho: np.ndarray


@lru_cache(maxsize=32)
def eigendata(grid: Grid) -> EigenData:
    jx = (np.arange(grid.nx) * np.pi / grid.lx) ** 2
    ky = (np.arange(grid.ny) * np.pi / grid.ly) ** 2
    lam = jx[:, None] + ky[None, :]
    lam.flags.writeable = False
    rho = lam + 1.0
    rho.flags.writeable = False
    return EigenData(lam=lam, rho=rho)


@dataclass(frozen=True)
class SpectralField:
    """Real cosine-series coefficients, indexed by mode (j, k).

    ``coeffs`` has shape (..., nx, ny); entry (j, k) multiplies the
    orthonormal eigenfunction xi_jk, so the L2(Omega) norm of the nodal
    field equals the Euclidean norm of the coefficients.
    """

    coeffs: np.ndarray
    grid: Grid


def _check_grid_shape(values, grid):
    if values.shape[-2:] != grid.shape:
        raise ShapeMismatchError(
            f"field shape {values.shape} does not match grid {grid.shape}"
        )


def _analyze(values, grid):
    """Nodal values -> orthonormal-basis coefficients (array level)."""
    scale = np.sqrt(grid.quad_weight)
    return _fft.dctn(values, type=2, norm="ortho", axes=(-2, -1), workers=_workers) * scale


def _synthesize(coeffs, grid):
    """Orthonormal-basis coefficients -> nodal values (array level)."""
    scale = np.sqrt(grid.quad_weight)
    return _fft.idctn(coeffs / scale, type=2, norm="ortho", axes=(-2, -1), workers=_workers)


def to_spectral(values, grid) -> SpectralField:
    """Project nodal values onto the cosine basis (exact for resolvable sums)."""
    values = np.asarray(values, dtype=np.float64)
    _check_grid_shape(values, grid)
    return SpectralField(coeffs=_analyze(values, grid), grid=grid)


def to_nodal(field: SpectralField, grid=None):
    """Evaluate a cosine series at the collocation nodes."""
    if grid is None:
        grid = field.grid
    elif grid != field.grid:
        raise ShapeMismatchError("coefficient grid does not match the requested grid")
    _check_grid_shape(field.coeffs, grid)
    return _synthesize(field.coeffs, grid)


# -- differential operators ------------------------------------------------


def laplacian(values, grid):
    """Spectral Laplacian; satisfies the Neumann condition by construction."""
    _check_grid_shape(values, grid)
    lam = eigendata(grid).lam
    return _synthesize(-lam * _analyze(values, grid), grid)


def helmholtz_inverse(values, grid):
    """Solve (I - Laplace) w = values with Neumann walls (rho >= 1 always)."""
    _check_grid_shape(values, grid)
    rho = eigendata(grid).rho
    return _synthesize(_analyze(values, grid) / rho, grid)


def _deriv_cos_to_sin(values, grid, axis):
    """d/dx of a cosine-type field, returned nodally (sine-type content).

    Along ``axis``: analyze with DCT-II, multiply mode j by -j*pi/l, and
    sine-synthesize at the midpoints with a DST-III arrangement.
    """
    n = grid.nx if axis == -2 else grid.ny
    length = grid.lx if axis == -2 else grid.ly
    amp = _fft.dct(values, type=2, axis=axis, workers=_workers)
    # Unnormalized DCT-II: amp_j = 2 sum_i f_i cos(...), so the cosine
    # amplitude of mode j >= 1 is amp_j / n.  Derivative amplitude of
    # sin(j pi x / l) is -(j pi / l) * amp_j / n; the DST-III input carries
    # rows j' = j - 1 halved, with a zero final row (no mode j = n).
    j = np.arange(1, n)
    shape = [1] * values.ndim
    shape[axis] = n - 1
    factor = (-0.5 * np.pi / (length * n)) * j.reshape(shape)
    sl_in = [slice(None)] * values.ndim
    sl_in[axis] = slice(1, None)
    sl_out = [slice(None)] * values.ndim
    sl_out[axis] = slice(0, n - 1)
    work = np.zeros_like(values)
    work[tuple(sl_out)] = amp[tuple(sl_in)] * factor
    return _fft.dst(work, type=3, axis=axis, workers=_workers)


def _deriv_sin_to_cos(values, grid, axis):
    """d/dx of a sine-type field (vanishing on the walls), returned nodally.

    The mode j = n sine component is invisible after differentiation at the
    midpoints (cos(n pi x / l) vanishes there), which realizes the mode
    truncation of the projection.
    """
    n = grid.nx if axis == -2 else grid.ny
    length = grid.lx if axis == -2 else grid.ly
    amp = _fft.dst(values, type=2, axis=axis, workers=_workers)
    # Unnormalized DST-II: amp_{j-1} = 2 sum_i f_i sin(j pi (i+1/2)/n), so
    # the sine amplitude of mode 1 <= j <= n-1 is amp_{j-1} / n.  The
    # derivative has cosine amplitude gamma_j = (j pi / l) amp_{j-1} / n;
    # the unnormalized IDCT-II divides by 2n and doubles modes j >= 1, so
    # feeding it n * gamma_j (with a zero mode-0 row) synthesizes the sum.
    j = np.arange(1, n)
    shape = [1] * values.ndim
    shape[axis] = n - 1
    factor = (np.pi / length) * j.reshape(shape)
    sl_in = [slice(None)] * values.ndim
    sl_in[axis] = slice(0, n - 1)
    sl_out = [slice(None)] * values.ndim
    sl_out[axis] = slice(1, None)
    work = np.zeros_like(values)
    work[tuple(sl_out)] = amp[tuple(sl_in)] * factor
    return _fft.idct(work, type=2, norm=None, axis=axis, workers=_workers)


def grad_x(values, grid):
    """Nodal d/dx of a Neumann (cosine-type) field."""
    _check_grid_shape(values, grid)
    return _deriv_cos_to_sin(values, grid, axis=-2)


def grad_y(values, grid):
    """Nodal d/dy of a Neumann (cosine-type) field."""
    _check_grid_shape(values, grid)
    return _deriv_cos_to_sin(values, grid, axis=-1)


def div_x(values, grid):
    """Nodal d/dx of a flux (sine-type) field, e.g. a product s * grad_x(f)."""
    _check_grid_shape(values, grid)
    return _deriv_sin_to_cos(values, grid, axis=-2)


def div_y(values, grid):
    """Nodal d/dy of a flux (sine-type) field."""
    _check_grid_shape(values, grid)
    return _deriv_sin_to_cos(values, grid, axis=-1)


def gradient_sq(values, grid):
    """Pointwise |grad f|^2 summed over leading (component) axes."""
    _check_grid_shape(values, grid)
    gx = grad_x(values, grid)
    gy = grad_y(values, grid)
    out = gx * gx + gy * gy
    if out.ndim > 2:
        out = out.sum(axis=tuple(range(out.ndim - 2)))
    return out


def grad_pair(values, grid):
    """(d/dx, d/dy) of a cosine-type field, both nodal."""
    _check_grid_shape(values, grid)
    return grad_x(values, grid), grad_y(values, grid)


# -- inner products ----------------------------------------------------------


def l2_inner(f, g, grid):
    """L2(Omega) inner product with midpoint (cosine-node) quadrature."""
    f = np.asarray(f)
    g = np.asarray(g)
    _check_grid_shape(f, grid)
    if f.shape != g.shape:
        raise ShapeMismatchError(f"operand shapes differ: {f.shape} vs {g.shape}")
    return grid.quad_weight * float(np.sum(f * g))

def l2_norm_sq(f, grid):
    return l2_inner(f, f, grid)


def h1_seminorm_inner(f, g, grid):
    """Integral of grad f : grad g, evaluated in coefficient space."""
    lam = eigendata(grid).lam
    af = _analyze(np.asarray(f, dtype=np.float64), grid)
    ag = _analyze(np.asarray(g, dtype=np.float64), grid)
    return float(np.sum(lam * af * ag))


def dealias_mask(grid):
    """2/3-rule mask in coefficient space."""
    keep_x = np.arange(grid.nx) < (2 * grid.nx) // 3
    keep_y = np.arange(grid.ny) < (2 * grid.ny) // 3
    return keep_x[:, None] & keep_y[None, :]
