"""Cost functional, projection, gradient representatives, optimizer behavior."""

import math

import numpy as np
import pytest

from conftest import angle_initial_data, smooth_random_field
from llgopt import scenarios
from llgopt.adjoint import AdjointInput, solve_adjoint
from llgopt.control import (GradientMetric, OcpSpec,
                            OptimizeOptions, StoppingReason, adjoint_torque,
                            directional_derivative, evaluate_cost, optimize,
                            project_uad, reduced_gradient, traj_h1_inner,
                            traj_l2_inner, traj_l2_norm_sq, vi_residuals)
from llgopt.fields import Trajectory, VectorField3
from llgopt.spectral import Grid
from llgopt.state import solve_forward


def _basic_spec(grid, horizon, nt, m_d_vec=(0, 0, 1), m0=None):
    m0 = m0 or VectorField3.constant(grid, (0, 0, 1))
    m_d = Trajectory.constant(grid, horizon, nt, m_d_vec)
    m_omega = VectorField3.constant(grid, (0, 0, 1))
    return OcpSpec(grid=grid, horizon=horizon, nt=nt, m0=m0, m_d=m_d,
                   m_omega=m_omega, e_mf=10.0)


class TestEvaluateCost:
    def test_perfect_match_costs_nothing(self, grid16):
        spec = _basic_spec(grid16, 1.0, 16)
        m = Trajectory.constant(grid16, 1.0, 16, (0, 0, 1))
        u = Trajectory.zeros(grid16, 1.0, 16)
        cb = evaluate_cost(m, u, spec)
        assert cb.total == 0.0

    def test_hand_quadrature_of_constants(self, grid16):
        # m = e3 against m_d = e1 on the unit square over unit time:
        # tracking = 1/2 |e3 - e1|^2 = 1, all other terms vanish.
        spec = _basic_spec(grid16, 1.0, 16, m_d_vec=(1, 0, 0))
        m = Trajectory.constant(grid16, 1.0, 16, (0, 0, 1))
        u = Trajectory.zeros(grid16, 1.0, 16)
        cb = evaluate_cost(m, u, spec)
        assert cb.tracking == pytest.approx(1.0, rel=1e-13)
        assert cb.terminal == 0.0 and cb.control_l2 == 0.0 and cb.control_h1 == 0.0
        assert cb.total == pytest.approx(1.0, rel=1e-13)

    def test_breakdown_sums_and_nonnegative(self, grid16, rng):
        nt = 24
        spec = _basic_spec(grid16, 1.0, nt, m_d_vec=(1, 0, 0))
        m = Trajectory.zeros(grid16, 1.0, nt)
        u = Trajectory.zeros(grid16, 1.0, nt)
        m.data[:] = rng.standard_normal(m.data.shape)
        u.data[:] = rng.standard_normal(u.data.shape)
        cb = evaluate_cost(m, u, spec)
        for term in (cb.tracking, cb.terminal, cb.control_l2, cb.control_h1):
            assert term >= 0.0
        total = cb.tracking + cb.terminal + cb.control_l2 + cb.control_h1
        assert cb.total == pytest.approx(total, rel=1e-12)

    def test_matches_dense_quadrature_oracle(self):
        # Analytic low-mode fields evaluated at 32x32 and at 128x128; the
        # fine evaluation is the oracle for the space integrals.
        def build(n):
            grid = Grid(1.0, 1.0, n, n)
            nt = 8
            X, Y = grid.meshgrid()
            cx = np.cos(np.pi * X) * np.cos(np.pi * Y)
            m = Trajectory.zeros(grid, 1.0, nt)
            u = Trajectory.zeros(grid, 1.0, nt)
            for k in range(nt + 1):
                t = k / nt
                m.data[k, 0] = math.cos(t) * cx
                m.data[k, 2] = 1.0
                u.data[k, 1] = math.sin(t + 0.2) * cx
            m_d = Trajectory.constant(grid, 1.0, nt, (0, 0, 1))
            m_omega = VectorField3.constant(grid, (0, 0, 1))
            spec = OcpSpec(grid=grid, horizon=1.0, nt=nt,
                           m0=VectorField3.constant(grid, (0, 0, 1)),
                           m_d=m_d, m_omega=m_omega, e_mf=10.0)
            return evaluate_cost(m, u, spec)

        coarse, fine = build(32), build(128)
        assert coarse.total == pytest.approx(fine.total, rel=1e-6)
        assert coarse.control_h1 == pytest.approx(fine.control_h1, rel=1e-6)


class TestProjection:
    def test_interior_control_unchanged(self, grid16, rng):
        u = Trajectory.zeros(grid16, 1.0, 8)
        u.data[:] = 0.01 * rng.standard_normal(u.data.shape)
        assert project_uad(u, 10.0) is u

    def test_rescaling_by_half(self, grid16):
        u = Trajectory.constant(grid16, 1.0, 8, (2, 0, 0))
        nsq = traj_l2_norm_sq(u)
        out = project_uad(u, nsq / 4.0)
        assert traj_l2_norm_sq(out) == pytest.approx(nsq / 4.0, rel=1e-12)
        assert np.allclose(out.data, 0.5 * u.data)

    def test_idempotent_and_budget_tight(self, grid16, rng):
        u = Trajectory.zeros(grid16, 1.0, 8)
        u.data[:] = rng.standard_normal(u.data.shape)
        e_mf = 0.3 * traj_l2_norm_sq(u)
        once = project_uad(u, e_mf)
        assert traj_l2_norm_sq(once) <= e_mf * (1 + 1e-12)
        assert project_uad(once, e_mf) is once


class TestReducedGradient:
    def test_zero_data_gives_zero(self, grid16):
        u = Trajectory.zeros(grid16, 1.0, 8)
        phi = Trajectory.zeros(grid16, 1.0, 8)
        m = Trajectory.constant(grid16, 1.0, 8, (0, 0, 1))
        for metric in (GradientMetric.H1, GradientMetric.L2):
            g = reduced_gradient(u, phi, m, metric)
            assert np.abs(g.data).max() == 0.0

    def test_hand_example_uniform_fields(self, grid16):
        # phi = e1, m = e3: torque = e1 - e2, constant in space, so the
        # Helmholtz solve is the identity on it.
        u = Trajectory.zeros(grid16, 1.0, 8)
        phi = Trajectory.constant(grid16, 1.0, 8, (1, 0, 0))
        m = Trajectory.constant(grid16, 1.0, 8, (0, 0, 1))
        g = reduced_gradient(u, phi, m, GradientMetric.H1)
        assert np.allclose(g.data[:, 0], 1.0, atol=1e-13)
        assert np.allclose(g.data[:, 1], -1.0, atol=1e-13)
        assert np.abs(g.data[:, 2]).max() < 1e-13

    def _setup_pair(self, grid, nt, rng):
        horizon = 0.5
        m0 = angle_initial_data(grid)
        m_d = Trajectory.constant(grid, horizon, nt, (0, 0, 1))
        spec = OcpSpec(grid=grid, horizon=horizon, nt=nt, m0=m0, m_d=m_d,
                       m_omega=VectorField3.constant(grid, (0, 0, 1)), e_mf=50.0)
        u = Trajectory.zeros(grid, horizon, nt)
        h = Trajectory.zeros(grid, horizon, nt)
        u.data[:] = smooth_random_field(grid, rng, amp=0.1).data
        h.data[:] = smooth_random_field(grid, rng, amp=0.1).data
        m = solve_forward(m0, u, horizon, spec.solver)
        phi = solve_adjoint(AdjointInput(m, u, spec.m_d, spec.m_omega), spec.solver)
        return spec, u, h, m, phi

    def test_h1_representative_identity(self, grid16, rng):
        spec, u, h, m, phi = self._setup_pair(grid16, 32, rng)
        torque = adjoint_torque(phi, m)
        g = reduced_gradient(u, phi, m, GradientMetric.H1)
        lhs = traj_h1_inner(g, h)
        rhs = directional_derivative(u, torque, h)
        assert abs(lhs - rhs) <= 1e-10 * max(abs(rhs), 1e-30)

    def test_l2_representative_identity(self, grid16, rng):
        spec, u, h, m, phi = self._setup_pair(grid16, 32, rng)
        torque = adjoint_torque(phi, m)
        g = reduced_gradient(u, phi, m, GradientMetric.L2)
        lhs = traj_l2_inner(g, h)
        rhs = directional_derivative(u, torque, h)
        assert abs(lhs - rhs) <= 1e-10 * max(abs(rhs), 1e-30)

    def test_gradient_against_cost_fd(self, grid16, rng):
        spec, u, h, m, phi = self._setup_pair(grid16, 256, rng)
        torque = adjoint_torque(phi, m)
        dd = directional_derivative(u, torque, h)

        def total(uu):
            mm = solve_forward(spec.m0, uu, spec.horizon, spec.solver)
            return evaluate_cost(mm, uu, spec).total

        eps = 1e-4
        fd = (total(u + eps * h) - total(u - eps * h)) / (2 * eps)
        assert abs(fd - dd) <= 1e-2 * abs(fd)


class TestOptimize:
    def test_attainable_target_stops_immediately(self, grid16):
        scen = scenarios.perturbed(grid16, 0.5, 64, scale=0.6, seed=4)
        spec = scen.ocp()
        res = optimize(spec, Trajectory.zeros(grid16, 0.5, 64),
                       OptimizeOptions(max_iter=5, grad_tol=1e-10))
        assert res.report.stopping_reason is StoppingReason.GRAD_TOL
        assert len(res.report.records) == 1
        assert res.report.records[0].gradient_norm <= 1e-10

    def test_inverse_crime_descends_and_recovers(self, grid16):
        scen = scenarios.inverse_crime(grid16, 1.0, 128, seed=1, amp=0.15)
        spec = scen.ocp()
        res = optimize(spec, scen.u, OptimizeOptions(max_iter=40, grad_tol=2e-3))
        costs = [r.cost.total for r in res.report.records]
        assert all(costs[i + 1] <= costs[i] * (1 + 1e-14) for i in range(len(costs) - 1))
        assert costs[-1] <= 0.5 * costs[0]
        recomputed = evaluate_cost(res.m, res.u, spec)
        assert recomputed.total == pytest.approx(costs[-1], rel=1e-12)

    def test_budget_active_run_flags_and_descends(self, grid16):
        scen = scenarios.inverse_crime(grid16, 1.0, 128, seed=1, amp=0.15)
        tiny = 0.02 * traj_l2_norm_sq(scen.u_true)
        spec = scen.ocp(e_mf=tiny)
        res = optimize(spec, Trajectory.zeros(grid16, 1.0, 128),
                       OptimizeOptions(max_iter=12, grad_tol=1e-12))
        recs = res.report.records
        assert any(r.budget_active for r in recs)
        assert all(r.budget_active for r in recs[1:])
        costs = [r.cost.total for r in recs]
        assert all(costs[i + 1] <= costs[i] * (1 + 1e-14) for i in range(len(costs) - 1))
        assert traj_l2_norm_sq(res.u) <= tiny * (1 + 1e-9)

    def test_budget_violating_start_rejected(self, grid16):
        scen = scenarios.inverse_crime(grid16, 0.5, 32, seed=1)
        spec = scen.ocp(e_mf=1e-6)
        big = Trajectory.constant(grid16, 0.5, 32, (1, 1, 1))
        with pytest.raises(ValueError, match="budget"):
            optimize(spec, big, OptimizeOptions(max_iter=1))

    def test_vi_certificate_at_stationarity(self, grid16):
        scen = scenarios.inverse_crime(grid16, 1.0, 128, seed=1, amp=0.15)
        spec = scen.ocp()
        res = optimize(spec, scen.u, OptimizeOptions(max_iter=80, grad_tol=2e-3))
        assert res.report.stopping_reason is StoppingReason.GRAD_TOL
        phi = solve_adjoint(AdjointInput(res.m, res.u, spec.m_d, spec.m_omega),
                            spec.solver)
        torque = adjoint_torque(phi, res.m)
        probes = scenarios.random_admissible_controls(
            grid16, 1.0, 128, spec.e_mf, 25, np.random.default_rng(7))
        worst = min(v / s for v, s in vi_residuals(res.u, torque, probes))
        assert worst >= -1e-3
