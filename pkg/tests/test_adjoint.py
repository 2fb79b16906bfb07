"""Backward sweep: exact degeneracies, duality, the uniform-state oracle."""

import math

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from conftest import angle_initial_data, smooth_random_field
from llgopt import spectral, tangent
from llgopt.adjoint import (AdjointInput, _source_pieces, adjoint_rhs,
                            solve_adjoint, terminal_condition)
from llgopt.fields import Trajectory, VectorField3
from llgopt.spectral import Grid
from llgopt.state import SolverConfig, solve_forward


class TestTerminalCondition:
    def test_matching_target_gives_zero(self, grid16):
        m = VectorField3.constant(grid16, (0, 0, 1))
        assert np.abs(terminal_condition(m, m.copy()).data).max() == 0.0

    def test_hand_difference(self, grid16):
        mT = VectorField3.constant(grid16, (0, 0, 1))
        mo = VectorField3.constant(grid16, (1, 0, 0))
        out = terminal_condition(mT, mo).data
        assert np.allclose(out[0], -1.0) and np.allclose(out[2], 1.0)
        assert np.abs(out[1]).max() == 0.0

    def test_random_matches_subtraction(self, grid16, rng):
        a = VectorField3(rng.standard_normal((3,) + grid16.shape), grid16)
        b = VectorField3(rng.standard_normal((3,) + grid16.shape), grid16)
        assert np.array_equal(terminal_condition(a, b).data, a.data - b.data)


class TestAdjointRhs:
    def test_everything_vanishes_on_matched_data(self, grid16, rng):
        m = angle_initial_data(grid16)
        u = smooth_random_field(grid16, rng, amp=0.2)
        out = adjoint_rhs(VectorField3.zeros(grid16), m, u, m.copy())
        assert np.abs(out.data).max() == 0.0

    def test_constant_base_reduces_to_cross_laplacian(self, grid16, rng):
        m = VectorField3.constant(grid16, (0, 0, 1))
        zero = VectorField3.zeros(grid16)
        phi = smooth_random_field(grid16, rng)
        out = adjoint_rhs(phi, m, zero, m.copy())
        direct = spectral.laplacian(np.cross(phi.data, m.data, axis=0), grid16)
        assert np.abs(out.data - direct).max() <= 1e-11 * max(np.abs(direct).max(), 1.0)

    def test_duality_with_tangent_operator(self, grid32, rng):
        """The adjoint right-hand side is the transpose of the linearized one."""
        m = angle_initial_data(grid32)
        u = smooth_random_field(grid32, rng, amp=0.3)
        z = smooth_random_field(grid32, rng)
        phi = smooth_random_field(grid32, rng)
        forward = tangent.tangent_rhs(z, m, u).data
        backward = (_source_pieces(phi.data, m.data, u.data, grid32)
                    + spectral.laplacian(phi.data, grid32))
        lhs = spectral.l2_inner(forward, phi.data, grid32)
        rhs = spectral.l2_inner(backward, z.data, grid32)
        assert abs(lhs - rhs) <= 1e-8 * max(abs(lhs), 1.0)


def _stationary_axial_setup(grid, horizon, nt, h_field):
    """Base m = e3 held stationary by an axial drive u = h e3."""
    m0 = VectorField3.constant(grid, (0, 0, 1))
    u = Trajectory.constant(grid, horizon, nt, (0.0, 0.0, h_field))
    cfg = SolverConfig(nt=nt)
    m_traj = solve_forward(m0, u, horizon, cfg)
    return m_traj, u, cfg


class TestSolveAdjoint:
    def test_zero_data_is_exactly_zero(self, grid16):
        m_traj, u, cfg = _stationary_axial_setup(grid16, 1.0, 64, 0.0)
        m_d = Trajectory(m_traj.times, m_traj.data.copy(), grid16)
        m_omega = VectorField3(m_traj.data[-1].copy(), grid16)
        phi = solve_adjoint(AdjointInput(m_traj, u, m_d, m_omega), cfg)
        assert np.abs(phi.data).max() == 0.0

    def test_uniform_state_matches_ode_oracle(self):
        # Uniform fields kill every spatial term, leaving the 3-dim
        # backward equation -phi' = h (e3 x phi - phi_perp).
        grid = Grid(1.0, 1.0, 8, 8)
        horizon, nt, h_field = 0.5, 4096, 1.0
        m_traj, u, cfg = _stationary_axial_setup(grid, horizon, nt, h_field)
        m_d = Trajectory(m_traj.times, m_traj.data.copy(), grid)
        target = VectorField3.constant(grid, (-0.3, 0.0, 1.0))  # phi(T) = 0.3 e1
        phi = solve_adjoint(AdjointInput(m_traj, u, m_d, target), cfg)

        def time_derivative(_, p):
            # -phi_t = h (e3 x phi - phi_perp), so phi_t is its negative.
            e3 = np.array([0.0, 0.0, 1.0])
            perp = p - p[2] * e3
            return h_field * (perp - np.cross(e3, p))

        sol = solve_ivp(time_derivative, (horizon, 0.0), np.array([0.3, 0.0, 0.0]),
                        t_eval=m_traj.times[::-1], rtol=1e-12, atol=1e-14,
                        method="DOP853")
        exact = sol.y.T[::-1]
        err = max(np.abs(phi.data[k] - exact[k][:, None, None]).max()
                  for k in range(nt + 1))
        assert err <= 1e-4 * np.abs(exact).max()

    def test_backward_linearity_in_the_data(self, grid16, rng):
        m0 = angle_initial_data(grid16)
        u = Trajectory.constant(grid16, 0.2, 48, (0.05, 0.0, 0.1))
        cfg = SolverConfig(nt=48)
        m_traj = solve_forward(m0, u, 0.2, cfg)

        def run(md_shift, mo_shift):
            m_d = Trajectory(m_traj.times, m_traj.data + md_shift, grid16)
            m_omega = VectorField3(m_traj.data[-1] + mo_shift, grid16)
            return solve_adjoint(AdjointInput(m_traj, u, m_d, m_omega), cfg)

        s1 = smooth_random_field(grid16, rng, amp=0.3).data
        s2 = smooth_random_field(grid16, rng, amp=0.3).data
        phi_a = run(s1, s2)
        phi_b = run(0.5 * s1, -2.0 * s2)
        phi_sum = run(1.5 * s1, -1.0 * s2)
        resid = phi_sum.data - (phi_a.data + phi_b.data)
        assert np.abs(resid).max() <= 1e-10 * max(np.abs(phi_sum.data).max(), 1.0)

    def test_magnitude_scales_linearly_with_data(self, grid16, rng):
        m0 = angle_initial_data(grid16)
        u = Trajectory.constant(grid16, 0.2, 48, (0.05, 0.0, 0.1))
        cfg = SolverConfig(nt=48)
        m_traj = solve_forward(m0, u, 0.2, cfg)
        shift = smooth_random_field(grid16, rng, amp=0.2).data
        norms = []
        for scale in (1.0, 2.0):
            m_d = Trajectory(m_traj.times, m_traj.data + scale * shift, grid16)
            m_omega = VectorField3(m_traj.data[-1] + scale * shift, grid16)
            phi = solve_adjoint(AdjointInput(m_traj, u, m_d, m_omega), cfg)
            norms.append(math.sqrt(sum(
                spectral.l2_norm_sq(phi.data[k], grid16) for k in range(49))))
        assert norms[1] == pytest.approx(2.0 * norms[0], rel=1e-10)
