"""Backward-in-time sweep for the adjoint of the linearized LLG flow.

The sweep discretizes the continuous adjoint system with the state
solver's grid and steps (optimize-then-discretize): terminal value
m(T) - m_target, implicit Laplacian under time reversal, all base-coupled
terms explicit with the base frames taken at the step's left endpoint.
The O(dt) mismatch against the exact discrete adjoint is measured by the
gradient verification checks and vanishes under step refinement.
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
class AdjointInput:
    """Frozen state/control pair plus the tracking data it is measured against."""

    m_traj: object  # Trajectory or CheckpointedTrajectory
    u_traj: Trajectory
    m_d: Trajectory
    m_omega: VectorField3

    def __post_init__(self):
        grid = self.u_traj.grid
        n = self.u_traj.n_steps
        for traj in (self.m_traj, self.m_d):
            if traj.grid != grid or traj.n_steps != n:
                raise ShapeMismatchError("all trajectories must share grid and time grid")
        if self.m_omega.grid != grid:
            raise ShapeMismatchError("terminal target grid mismatch")


def terminal_condition(m_final: VectorField3, m_omega: VectorField3) -> VectorField3:
    """Terminal adjoint value: the pointwise terminal tracking error."""
    if m_final.grid != m_omega.grid:
        raise ShapeMismatchError("fields live on different grids")
    return VectorField3(m_final.data - m_omega.data, m_final.grid)


def _source_pieces(parr, marr, uarr, grid):
    """Everything on the right-hand side except the tracking term.

    Lap(phi x m) + Lap m x phi + u x phi - 2 div((m . phi) grad m)
    + |grad m|^2 phi + (phi x m) x u + phi x (m x u).
    """
    lam = eigendata(grid).lam
    a_m = spectral._analyze(marr, grid)
    lap_m = spectral._synthesize(-lam * a_m, grid)
    mgx, mgy = spectral.grad_pair(marr, grid)
    gsq_m = (mgx * mgx + mgy * mgy).sum(axis=0)

    out = kernels.adjoint_pointwise(parr, marr, uarr, lap_m, gsq_m)
    out = out + spectral.laplacian(kernels.cross(parr, marr), grid)
    s = kernels.dot(marr, parr)
    out = out - 2.0 * (spectral.div_x(s * mgx, grid) + spectral.div_y(s * mgy, grid))
    return out


def adjoint_rhs(phi: VectorField3, m: VectorField3, u: VectorField3,
                m_d_frame: VectorField3) -> VectorField3:
    """Assembled right-hand side driving the backward equation."""
    for other in (m, u, m_d_frame):
        if other.grid != phi.grid:
            raise ShapeMismatchError("fields live on different grids")
    out = _source_pieces(phi.data, m.data, u.data, phi.grid)
    return VectorField3(out + (m.data - m_d_frame.data), phi.grid)


def solve_adjoint(inp: AdjointInput, cfg: SolverConfig) -> Trajectory:
    """Backward IMEX sweep; returns the adjoint trajectory with nt+1 frames."""
    grid = inp.u_traj.grid
    nt = inp.u_traj.n_steps
    if cfg.nt != nt:
        raise ShapeMismatchError(f"config expects {cfg.nt} steps, trajectories have {nt}")
    lam = eigendata(grid).lam
    dt = inp.u_traj.dt

    frames = np.empty((nt + 1, 3, grid.nx, grid.ny))
    frames[nt] = inp.m_traj.frame_array(nt) - inp.m_omega.data
    cur = frames[nt]
    for k in range(nt - 1, -1, -1):
        marr = inp.m_traj.frame_array(k)
        uarr = inp.u_traj.frame_array(k)
        src = _source_pieces(cur, marr, uarr, grid)
        src = src + (marr - inp.m_d.frame_array(k))
        a_p = spectral._analyze(cur, grid)
        a_s = spectral._analyze(src, grid)
        delta_hat = dt * (-lam * a_p + a_s) / (1.0 + dt * lam)
        cur = cur + spectral._synthesize(delta_hat, grid)
        _check_blowup(cur, step_index=k)
        frames[k] = cur
    return Trajectory(inp.u_traj.times, frames, grid)
