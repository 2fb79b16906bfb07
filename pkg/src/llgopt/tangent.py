"""Linearized solver along a frozen state trajectory.

Two uses of the same linear flow: with a general source (and initial value)
it defines the linearization of the state operator; with a control
direction h and zero initial value its solution is the directional
derivative of the control-to-state map.  The sweep reuses the state
solver's IMEX splitting (implicit Laplacian, explicit base-coupled terms)
and its left-endpoint control/base sampling, so the discrete tangent is the
exact derivative of the discrete forward step.
"""

from dataclasses import dataclass

import numpy as np

from . import _kernels as kernels
from . import spectral
from .errors import ShapeMismatchError
from .fields import Trajectory, VectorField3
from .spectral import eigendata
from .state import SolverConfig, _check_blowup


@dataclass
class TangentInput:
    """Frozen base trajectories plus either a source or a control direction.

    ``source`` selects the general linearized system (initial value ``v0``,
    zero when omitted); ``direction`` selects the control-derivative form,
    which forces a zero initial value.
    """

    base_m: object  # Trajectory or CheckpointedTrajectory
    base_u: Trajectory
    source: Trajectory | None = None
    direction: Trajectory | None = None
    v0: VectorField3 | None = None

    def __post_init__(self):
        if (self.source is None) == (self.direction is None):
            raise ValueError("provide exactly one of source (LS1) or direction (LS2)")
        if self.direction is not None and self.v0 is not None:
            if float(np.abs(self.v0.data).max()) != 0.0:
                raise ValueError("the control-derivative form starts from zero")
        grid = self.base_u.grid
        n = self.base_u.n_steps
        for traj in (self.base_m, self.source, self.direction):
            if traj is None:
                continue
            if traj.grid != grid or traj.n_steps != n:
                raise ShapeMismatchError("all trajectories must share grid and time grid")
        if self.v0 is not None and self.v0.grid != grid:
            raise ShapeMismatchError("v0 grid mismatch")


def _tangent_pieces(varr, marr, uarr, grid):
    lam = eigendata(grid).lam
    a_v = spectral._analyze(varr, grid)
    lap_v = spectral._synthesize(-lam * a_v, grid)
    lap_m = spectral.laplacian(marr, grid)
    mgx, mgy = spectral.grad_pair(marr, grid)
    vgx, vgy = spectral.grad_pair(varr, grid)
    gsq_m = (mgx * mgx + mgy * mgy).sum(axis=0)
    grad_mv = (mgx * vgx + mgy * vgy).sum(axis=0)
    nl = kernels.tangent_pointwise(varr, marr, uarr, lap_m, lap_v, gsq_m, grad_mv)
    return a_v, nl


def tangent_rhs(v: VectorField3, m: VectorField3, u: VectorField3,
                g: VectorField3 | None = None) -> VectorField3:
    """Full linearized right-hand side at one time slice.

    Lap v + 2 m (grad m . grad v) + |grad m|^2 v + v x Lap m + m x Lap v
    + v x u - v x (m x u) - m x (v x u) + g.
    """
    for other in (m, u) + (() if g is None else (g,)):
        if other.grid != v.grid:
            raise ShapeMismatchError("fields live on different grids")
    a_v, nl = _tangent_pieces(v.data, m.data, u.data, v.grid)
    lam = eigendata(v.grid).lam
    out = spectral._synthesize(-lam * a_v, v.grid) + nl
    if g is not None:
        out = out + g.data
    return VectorField3(out, v.grid)


def control_derivative_source(m: VectorField3, h: VectorField3) -> VectorField3:
    """Source induced by a control perturbation h: m x h - m x (m x h)."""
    if m.grid != h.grid:
        raise ShapeMismatchError("fields live on different grids")
    return VectorField3(kernels.double_cross_rhs(m.data, h.data), m.grid)


def solve_tangent(inp: TangentInput, cfg: SolverConfig) -> Trajectory:
    """Forward IMEX sweep of the linearized flow; matches the state stepping."""
    grid = inp.base_u.grid
    nt = inp.base_u.n_steps
    if cfg.nt != nt:
        raise ShapeMismatchError(f"config expects {cfg.nt} steps, trajectories have {nt}")
    lam = eigendata(grid).lam
    dt = inp.base_u.dt

    frames = np.zeros((nt + 1, 3, grid.nx, grid.ny))
    if inp.v0 is not None:
        frames[0] = inp.v0.data
    cur = frames[0]
    for k in range(nt):
        marr = inp.base_m.frame_array(k)
        uarr = inp.base_u.frame_array(k)
        a_v, nl = _tangent_pieces(cur, marr, uarr, grid)
        if inp.source is not None:
            nl = nl + inp.source.frame_array(k)
        else:
            nl = nl + kernels.double_cross_rhs(marr, inp.direction.frame_array(k))
        a_nl = spectral._analyze(nl, grid)
        delta_hat = dt * (-lam * a_v + a_nl) / (1.0 + dt * lam)
        cur = cur + spectral._synthesize(delta_hat, grid)
        _check_blowup(cur, step_index=k)
        frames[k + 1] = cur
    return Trajectory(inp.base_u.times, frames, grid)
