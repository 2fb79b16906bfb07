"""Canonical scenario generators shared by the CLI, tests, and checks."""

import math
from dataclasses import dataclass

import numpy as np

from . import spectral, state
from .control import OcpSpec, traj_l2_norm_sq
from .fields import Trajectory, VectorField3
from .spectral import Grid, SpectralField
from .state import SolverConfig


@dataclass
class Scenario:
    """Everything a run needs; optimizer-only pieces may be None."""

    grid: Grid
    horizon: float
    nt: int
    m0: VectorField3
    u: Trajectory
    m_d: Trajectory | None = None
    m_omega: VectorField3 | None = None
    u_true: Trajectory | None = None
    e_mf: float | None = None

    def ocp(self, e_mf=None, solver=None) -> OcpSpec:
        if self.m_d is None or self.m_omega is None:
            raise ValueError("scenario lacks tracking data; cannot build a control problem")
        return OcpSpec(
            grid=self.grid,
            horizon=self.horizon,
            nt=self.nt,
            m0=self.m0,
            m_d=self.m_d,
            m_omega=self.m_omega,
            e_mf=e_mf if e_mf is not None else self.e_mf,
            solver=solver,
        )


def smooth_coeffs(grid, rng, amp=1.0, kmax=4, decay=1.2, ncomp=None):
    """Random low-mode coefficients with exponential decay (spectrally smooth)."""
    shape = (grid.nx, grid.ny) if ncomp is None else (ncomp, grid.nx, grid.ny)
    c = np.zeros(shape)
    kmax = min(kmax, grid.nx, grid.ny)
    for j in range(kmax):
        for k in range(kmax):
            c[..., j, k] = amp * rng.standard_normal(shape[:-2] or None) * math.exp(-decay * (j + k))
    return c


def smooth_scalar(grid, rng, amp=1.0, kmax=4, decay=1.2):
    return spectral._synthesize(smooth_coeffs(grid, rng, amp, kmax, decay), grid)


def smooth_vector(grid, rng, amp=1.0, kmax=4, decay=1.2) -> VectorField3:
    return VectorField3(
        spectral._synthesize(smooth_coeffs(grid, rng, amp, kmax, decay, ncomp=3), grid), grid
    )


def smooth_control(grid, horizon, nt, rng, amp=1.0, kmax=3, decay=1.2) -> Trajectory:
    """Spatially smooth control with a smooth two-tone time profile."""
    f1 = smooth_vector(grid, rng, amp, kmax, decay).data
    f2 = smooth_vector(grid, rng, amp, kmax, decay).data
    traj = Trajectory.zeros(grid, horizon, nt)
    for k in range(nt + 1):
        t = k / nt
        traj.data[k] = f1 * math.cos(2.0 * t) + f2 * math.sin(1.3 * t + 0.4)
    return traj


def perturbed_initial_data(grid, scale=1.0, seed=0) -> VectorField3:
    """Unit field near e3 with smooth angle perturbations of size ~scale."""
    rng = np.random.default_rng(seed)
    th = smooth_coeffs(grid, rng, amp=0.2 * scale, kmax=3, decay=1.0)
    ph = smooth_coeffs(grid, rng, amp=0.15 * scale, kmax=3, decay=1.0)
    return state.make_initial_data(
        SpectralField(th, grid), SpectralField(ph, grid), grid
    )


def stationary(grid, horizon, nt) -> Scenario:
    m0 = VectorField3.constant(grid, (0.0, 0.0, 1.0))
    u = Trajectory.zeros(grid, horizon, nt)
    m_d = Trajectory.constant(grid, horizon, nt, (0.0, 0.0, 1.0))
    return Scenario(grid, horizon, nt, m0, u, m_d, m0.copy(), e_mf=1.0)


def macrospin(grid, horizon, nt, theta0=math.pi / 4, h_field=1.0) -> Scenario:
    """Uniform state under a uniform axial field; relaxes toward e3."""
    m0 = VectorField3.constant(grid, (math.sin(theta0), 0.0, math.cos(theta0)))
    u = Trajectory.constant(grid, horizon, nt, (0.0, 0.0, h_field))
    return Scenario(grid, horizon, nt, m0, u, e_mf=2.0 * traj_l2_norm_sq(u))


def macrospin_closed_form(theta0, h_field, times):
    """Exact uniform solution: tan(theta/2) decays as exp(-h t), azimuth -h t."""
    t = np.asarray(times)
    theta = 2.0 * np.arctan(np.tan(theta0 / 2.0) * np.exp(-h_field * t))
    phi = -h_field * t
    return np.stack(
        [np.sin(theta) * np.cos(phi), np.sin(theta) * np.sin(phi), np.cos(theta)], axis=1
    )


def perturbed(grid, horizon, nt, scale=1.0, seed=0, control_amp=0.0,
              solver: SolverConfig | None = None) -> Scenario:
    """Smoothly perturbed initial data; tracking data from its own zero-control run.

    With control_amp = 0 the target is attainable exactly, which makes this
    the degenerate-exactness scenario; with a small control_amp it is the
    small-data scenario the energy monitors run on.
    """
    rng = np.random.default_rng(seed + 1)
    m0 = perturbed_initial_data(grid, scale, seed)
    if control_amp > 0:
        u = smooth_control(grid, horizon, nt, rng, amp=control_amp, kmax=3)
    else:
        u = Trajectory.zeros(grid, horizon, nt)
    cfg = solver or SolverConfig(nt=nt)
    m_traj = state.solve_forward(m0, u, horizon, cfg)
    m_d = Trajectory(m_traj.times, m_traj.data.copy(), grid)
    m_omega = VectorField3(m_traj.data[-1].copy(), grid)
    e_mf = max(2.0 * traj_l2_norm_sq(u), 1.0)
    return Scenario(grid, horizon, nt, m0, u, m_d, m_omega, e_mf=e_mf)


def inverse_crime(grid, horizon, nt, seed=0, amp=0.15, scale=0.6,
                  e_mf_factor=10.0, solver: SolverConfig | None = None) -> Scenario:
    """Tracking data generated by the discrete forward model itself.

    A known smooth control produces the desired evolution and terminal
    target, so zero control starts with a substantial tracking misfit and
    the true control is an admissible interior point of the budget ball.
    """
    rng = np.random.default_rng(seed + 17)
    m0 = perturbed_initial_data(grid, scale, seed)
    u_true = smooth_control(grid, horizon, nt, rng, amp=amp, kmax=3)
    cfg = solver or SolverConfig(nt=nt)
    m_traj = state.solve_forward(m0, u_true, horizon, cfg)
    m_d = Trajectory(m_traj.times, m_traj.data.copy(), grid)
    m_omega = VectorField3(m_traj.data[-1].copy(), grid)
    e_mf = e_mf_factor * traj_l2_norm_sq(u_true)
    return Scenario(grid, horizon, nt, m0, Trajectory.zeros(grid, horizon, nt),
                    m_d, m_omega, u_true=u_true, e_mf=e_mf)


def random_admissible_controls(grid, horizon, nt, e_mf, count, rng,
                               kmax=3, decay=1.0):
    """Smooth random controls drawn inside the admissible ball."""
    out = []
    for _ in range(count):
        u = smooth_control(grid, horizon, nt, rng, amp=1.0, kmax=kmax, decay=decay)
        nsq = traj_l2_norm_sq(u)
        fill = rng.uniform(0.05, 0.98)
        if nsq > 0:
            u = u * math.sqrt(fill * e_mf / nsq)
        out.append(u)
    return out


SCENARIO_KINDS = ("stationary", "macrospin", "perturbed", "inverse_crime")


def build(kind, grid, horizon, nt, seed=0, solver=None, **params) -> Scenario:
    if kind == "stationary":
        return stationary(grid, horizon, nt)
    if kind == "macrospin":
        return macrospin(grid, horizon, nt,
                         theta0=params.get("theta0", math.pi / 4),
                         h_field=params.get("h", 1.0))
    if kind == "perturbed":
        return perturbed(grid, horizon, nt, scale=params.get("scale", 1.0),
                         seed=seed, control_amp=params.get("control_amp", 0.0),
                         solver=solver)
    if kind == "inverse_crime":
        return inverse_crime(grid, horizon, nt, seed=seed,
                             amp=params.get("amp", 0.15),
                             scale=params.get("scale", 0.6),
                             e_mf_factor=params.get("e_mf_factor", 10.0),
                             solver=solver)
    raise ValueError(f"unknown scenario kind {kind!r}; expected one of {SCENARIO_KINDS}")
