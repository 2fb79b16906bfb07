"""Forward solver for the controlled LLG flow on [0, T].

Two formulations of the same dynamics are available:

* ``EP``: the semilinear heat form m_t - Lap m = |grad m|^2 m + m x Lap m
  + m x u - m x (m x u).  The stiff Laplacian is treated implicitly in
  coefficient space (diagonal solve), everything else explicitly; one step
  costs a handful of transforms and is unconditionally stable for the
  linear part.
* ``NLP``: the double-cross form m_t = m x (Lap m + u) - m x (m x (Lap m
  + u)), stepped fully explicitly under the cap dt <= h^2/4.  It exists as
  a cross-check; the two formulations agree when |m| = 1.

Both use the left-endpoint control frame u(t_k) over [t_k, t_{k+1}], and
both step in increment form, so exact equilibria are preserved bitwise.
Gilbert damping and the gyromagnetic factor are pinned to one throughout;
the fused kernels assume it.
"""

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import _kernels as kernels
from . import spectral
from .errors import BlowupError, ShapeMismatchError
from .fields import Trajectory, VectorField3, sphere_defect
from .spectral import Grid, SpectralField, eigendata

BLOWUP_THRESHOLD = 1e6
SPHERE_DEFECT_LIMIT = 1e-10  # admissible defect of initial data


class Formulation(str, Enum):
    EP = "ep"
    NLP = "nlp"


@dataclass
class SolverConfig:
    nt: int
    formulation: Formulation = Formulation.EP
    renormalize_every: int | None = None
    dealias: bool = False

    # Fixed model constants (damping, gyromagnetic factor).
    damping: float = 1.0
    gyromagnetic: float = 1.0

    def __post_init__(self):
        self.formulation = Formulation(self.formulation)
        if self.nt < 1:
            raise ValueError(f"nt must be >= 1, got {self.nt}")
        if self.renormalize_every is not None and self.renormalize_every < 1:
            raise ValueError("renormalize_every must be >= 1 when present")
        if self.damping != 1.0 or self.gyromagnetic != 1.0:
            raise ValueError("damping and gyromagnetic factor are fixed to 1")


def explicit_dt_cap(grid: Grid) -> float:
    """Stability cap for the explicit NLP stepper.

    The damping part of the double-cross right-hand side acts like a heat
    flow whose stiffest spectral mode has rate lam_max = pi^2 (1/hx^2 +
    1/hy^2) (up to the (n-1)/n mode truncation); combined with the equally
    large precession rate, explicit Euler needs dt * lam_max <= 1.  This is
    an h^2-scaled cap, stricter by the factor pi^2/2 than the classical
    h^2/4 bound of the 5-point stencil.
    """
    lam_max = float(eigendata(grid).lam.max())
    return 1.0 / lam_max


def _ep_pieces(marr, uarr, grid):
    """Coefficients of m, its Laplacian, |grad m|^2 and the pointwise terms."""
    lam = eigendata(grid).lam
    a_m = spectral._analyze(marr, grid)
    lap = spectral._synthesize(-lam * a_m, grid)
    gsq = spectral.gradient_sq(marr, grid)
    nl = kernels.ep_pointwise(marr, lap, gsq, uarr)
    return a_m, lap, gsq, nl


def rhs_array(marr, uarr, grid, formulation):
    """Assembled right-hand side F(m, u) on raw arrays."""
    if formulation == Formulation.EP:
        _, lap, _, nl = _ep_pieces(marr, uarr, grid)
        return lap + nl
    lap = spectral.laplacian(marr, grid)
    return kernels.double_cross_rhs(marr, lap + uarr)


def rhs(m: VectorField3, u: VectorField3, cfg: SolverConfig) -> VectorField3:
    """Right-hand side of the chosen formulation; both agree when |m| = 1."""
    if m.grid != u.grid:
        raise ShapeMismatchError("m and u live on different grids")
    out = rhs_array(m.data, u.data, m.grid, cfg.formulation)
    if not np.all(np.isfinite(out)):
        raise BlowupError("non-finite right-hand side", step_index=None)
    return VectorField3(out, m.grid)


def _advance(marr, uarr, dt, grid, cfg, mask):
    """One step; returns (next frame, Laplacian and |grad m|^2 of the input).

    The update is solved in increment form, delta = m_{k+1} - m_k, so a
    vanishing right-hand side yields delta identically zero and exact
    equilibria survive bitwise.
    """
    lam = eigendata(grid).lam
    if cfg.formulation == Formulation.EP:
        a_m, lap, gsq, nl = _ep_pieces(marr, uarr, grid)
        a_nl = spectral._analyze(nl, grid)
        if mask is not None:
            a_nl = a_nl * mask
        delta_hat = dt * (-lam * a_m + a_nl) / (1.0 + dt * lam)
        nxt = marr + spectral._synthesize(delta_hat, grid)
    else:
        lap = spectral.laplacian(marr, grid)
        gsq = spectral.gradient_sq(marr, grid)
        rhsv = kernels.double_cross_rhs(marr, lap + uarr)
        if mask is not None:
            rhsv = spectral._synthesize(mask * spectral._analyze(rhsv, grid), grid)
        nxt = marr + dt * rhsv
    return nxt, lap, gsq


def _check_blowup(arr, step_index):
    peak = float(np.abs(arr).max())
    if not math.isfinite(peak) or peak > BLOWUP_THRESHOLD:
        raise BlowupError(
            f"field magnitude {peak:.3e} exceeded {BLOWUP_THRESHOLD:.0e} "
            f"at step {step_index}",
            step_index=step_index,
        )


def step(m: VectorField3, u_step: VectorField3, dt: float, cfg: SolverConfig) -> VectorField3:
    """Advance one IMEX (EP) or explicit (NLP) Euler step of size dt."""
    if m.grid != u_step.grid:
        raise ShapeMismatchError("m and u live on different grids")
    if dt <= 0:
        raise ValueError("dt must be positive")
    if cfg.formulation == Formulation.NLP and dt > explicit_dt_cap(m.grid) * (1 + 1e-9):
        raise ValueError(
            f"explicit NLP step dt={dt:.3e} exceeds stability cap "
            f"{explicit_dt_cap(m.grid):.3e}"
        )
    mask = spectral.dealias_mask(m.grid) if cfg.dealias else None
    nxt, _, _ = _advance(m.data, u_step.data, dt, m.grid, cfg, mask)
    _check_blowup(nxt, step_index=None)
    return VectorField3(nxt, m.grid)


@dataclass
class StepDiagnostics:
    """Per-frame monitors recorded along a forward solve."""

    sphere_defect: np.ndarray
    grad_l2sq: np.ndarray
    lap_l2sq: np.ndarray
    mxlap_l2sq: np.ndarray


class CheckpointedTrajectory:
    """Forward solution stored as sparse checkpoints plus recomputation.

    Frames between checkpoints are regenerated on demand by re-running the
    (deterministic) stepper from the nearest stored frame, so any frame is
    bitwise identical to the dense solve.  One segment is cached at a time,
    which suits the backward adjoint sweep's reverse access pattern.
    """

    def __init__(self, times, grid, stride, checkpoints, u, cfg, diagnostics=None):
        self.times = times
        self.grid = grid
        self.stride = stride
        self.diagnostics = diagnostics
        self._checkpoints = checkpoints
        self._u = u
        self._cfg = cfg
        self._mask = spectral.dealias_mask(grid) if cfg.dealias else None
        self._segment_start = None
        self._segment = None

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
        n = self.n_steps
        if not 0 <= k <= n:
            raise IndexError(k)
        if k in self._checkpoints:
            return self._checkpoints[k]
        base = (k // self.stride) * self.stride
        if self._segment_start != base:
            self._fill_segment(base)
        return self._segment[k - base]

    def frame(self, k):
        return VectorField3(self.frame_array(k).copy(), self.grid)

    def _fill_segment(self, base):
        end = min(base + self.stride, self.n_steps)
        dt = self.dt
        frames = [self._checkpoints[base]]
        cur = frames[0]
        for j in range(base, end):
            cur = _advance_with_renorm(
                cur, self._u.frame_array(j), dt, self.grid, self._cfg, self._mask, j
            )
            frames.append(cur)
        self._segment_start = base
        self._segment = frames

    def densify(self):
        data = np.stack([self.frame_array(k) for k in range(self.n_steps + 1)])
        return Trajectory(self.times, data, self.grid, diagnostics=self.diagnostics)


def _advance_with_renorm(marr, uarr, dt, grid, cfg, mask, k):
    nxt, _, _ = _advance(marr, uarr, dt, grid, cfg, mask)
    _check_blowup(nxt, step_index=k)
    if cfg.renormalize_every is not None and (k + 1) % cfg.renormalize_every == 0:
        nxt, min_norm = kernels.normalize(nxt)
        if min_norm <= 0.0:
            raise BlowupError(f"zero magnetization at step {k}", step_index=k)
    return nxt


def solve_forward(
    m0: VectorField3,
    u: Trajectory,
    horizon: float,
    cfg: SolverConfig,
    frame_budget_bytes: int | None = None,
):
    """March the state from m0 under the control trajectory u.

    Returns a Trajectory with nt + 1 frames and per-frame diagnostics
    (sphere defect, |grad m|^2, |Lap m|^2 and |m x Lap m|^2 integrals).
    If the dense frame storage would exceed ``frame_budget_bytes`` the
    result is a CheckpointedTrajectory instead.
    """
    grid = m0.grid
    if u.grid != grid:
        raise ShapeMismatchError("control grid does not match the state grid")
    if u.n_steps != cfg.nt:
        raise ShapeMismatchError(
            f"control has {u.n_steps} steps but the solver expects {cfg.nt}"
        )
    if abs(u.horizon - horizon) > 1e-12 * max(abs(horizon), 1.0):
        raise ValueError("control horizon does not match the requested horizon")
    defect = sphere_defect(m0)
    if defect > SPHERE_DEFECT_LIMIT:
        raise ValueError(
            f"initial data leaves the unit sphere (defect {defect:.3e} > "
            f"{SPHERE_DEFECT_LIMIT:.0e})"
        )

    nt = cfg.nt
    dt = horizon / nt
    if cfg.formulation == Formulation.NLP and dt > explicit_dt_cap(grid) * (1 + 1e-9):
        raise ValueError(
            f"explicit NLP solve needs dt <= {explicit_dt_cap(grid):.3e}, "
            f"got dt = {dt:.3e}; raise nt or switch to the EP formulation"
        )
    mask = spectral.dealias_mask(grid) if cfg.dealias else None
    w = grid.quad_weight

    frame_bytes = 3 * grid.nx * grid.ny * 8
    dense = frame_budget_bytes is None or (nt + 1) * frame_bytes <= frame_budget_bytes
    if dense:
        frames = np.empty((nt + 1, 3, grid.nx, grid.ny))
        frames[0] = m0.data
    else:
        stride = max(1, math.ceil((nt + 1) * frame_bytes / max(frame_budget_bytes // 2, frame_bytes)))
        checkpoints = {0: m0.data.copy()}

    diag = StepDiagnostics(
        sphere_defect=np.empty(nt + 1),
        grad_l2sq=np.empty(nt + 1),
        lap_l2sq=np.empty(nt + 1),
        mxlap_l2sq=np.empty(nt + 1),
    )

    cur = m0.data
    for k in range(nt):
        nxt, lap, gsq = _advance(cur, u.frame_array(k), dt, grid, cfg, mask)
        _record(diag, k, cur, lap, gsq, w)
        _check_blowup(nxt, step_index=k)
        if cfg.renormalize_every is not None and (k + 1) % cfg.renormalize_every == 0:
            nxt, min_norm = kernels.normalize(nxt)
            if min_norm <= 0.0:
                raise BlowupError(f"zero magnetization at step {k}", step_index=k)
        if dense:
            frames[k + 1] = nxt
        elif (k + 1) % stride == 0 or k + 1 == nt:
            checkpoints[k + 1] = nxt.copy()
        cur = nxt

    lam = eigendata(grid).lam
    lap = spectral._synthesize(-lam * spectral._analyze(cur, grid), grid)
    gsq = spectral.gradient_sq(cur, grid)
    _record(diag, nt, cur, lap, gsq, w)

    times = np.linspace(0.0, horizon, nt + 1)
    if dense:
        return Trajectory(times, frames, grid, diagnostics=diag)
    return CheckpointedTrajectory(times, grid, stride, checkpoints, u, cfg, diagnostics=diag)


def _record(diag, k, marr, lap, gsq, w):
    diag.sphere_defect[k] = kernels.sphere_defect(marr)
    diag.grad_l2sq[k] = w * float(gsq.sum())
    diag.lap_l2sq[k] = w * float((lap * lap).sum())
    mxl = kernels.cross(marr, lap)
    diag.mxlap_l2sq[k] = w * float((mxl * mxl).sum())


def make_initial_data(theta: SpectralField, phi_ang: SpectralField, grid: Grid) -> VectorField3:
    """Unit-sphere initial data from Neumann-compatible angle fields.

    theta and phi_ang are cosine series, so every component of the result
    has vanishing normal derivative on the walls by the chain rule, and
    |m0| = 1 holds to rounding.
    """
    th = spectral.to_nodal(theta, grid)
    ph = spectral.to_nodal(phi_ang, grid)
    data = np.stack([np.sin(th) * np.cos(ph), np.sin(th) * np.sin(ph), np.cos(th)])
    return VectorField3(data, grid)
