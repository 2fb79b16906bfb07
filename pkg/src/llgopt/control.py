"""Cost functional, reduced gradient, admissible projection, and optimizer.

The tracked quantities are the running misfit against a desired evolution,
the terminal misfit against a target state, and the L2 and gradient
energies of the control; time integrals use trapezoidal quadrature on the
frame grid.  The admissible set is the closed ball of squared space-time
L2 norm at most ``e_mf``, projected by radial rescaling.

The reduced gradient combines the control terms with the adjoint-state
torque phi x m + m x (phi x m).  In the default H1 metric the gradient
representative is u plus a Helmholtz solve of the torque, chosen so that
its H1 inner product against any direction reproduces the assembled
three-integral directional derivative exactly (a pure linear-algebra
identity, tested as such).
"""

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from . import _kernels as kernels
from . import spectral
from .adjoint import AdjointInput, solve_adjoint
from .errors import ShapeMismatchError
from .fields import Trajectory, VectorField3, sphere_defect
from .spectral import Grid, eigendata
from .state import SolverConfig, solve_forward


@dataclass
class OcpSpec:
    """Complete control-problem definition."""

    grid: Grid
    horizon: float
    nt: int
    m0: VectorField3
    m_d: Trajectory
    m_omega: VectorField3
    e_mf: float
    solver: SolverConfig | None = None

    def __post_init__(self):
        if self.e_mf <= 0:
            raise ValueError("control budget must be positive")
        if sphere_defect(self.m0) > 1e-10:
            raise ValueError("initial data must sit on the unit sphere")
        if self.m_d.grid != self.grid or self.m_d.n_steps != self.nt:
            raise ShapeMismatchError("desired-evolution trajectory does not conform")
        if self.m_omega.grid != self.grid or self.m0.grid != self.grid:
            raise ShapeMismatchError("field grids do not conform")
        if self.solver is None:
            self.solver = SolverConfig(nt=self.nt)
        elif self.solver.nt != self.nt:
            raise ValueError("solver step count must match the problem")


@dataclass(frozen=True)
class CostBreakdown:
    tracking: float
    terminal: float
    control_l2: float
    control_h1: float
    total: float

    @classmethod
    def assemble(cls, tracking, terminal, control_l2, control_h1):
        return cls(tracking, terminal, control_l2, control_h1,
                   tracking + terminal + control_l2 + control_h1)


class GradientMetric(str, Enum):
    L2 = "l2"
    H1 = "h1"


class StoppingReason(str, Enum):
    GRAD_TOL = "grad_tol"
    MAX_ITER = "max_iter"
    LINE_SEARCH_FAIL = "line_search_fail"
    BUDGET_BOUNDARY_STALL = "budget_boundary_stall"


@dataclass
class IterationRecord:
    iteration: int
    cost: CostBreakdown
    gradient_norm: float
    step_size: float
    budget_active: bool


@dataclass
class OptReport:
    records: list[IterationRecord] = field(default_factory=list)
    stopping_reason: StoppingReason | None = None


@dataclass
class OptimizeOptions:
    max_iter: int = 100
    grad_tol: float = 1e-6
    armijo_c: float = 1e-4
    backtrack_ratio: float = 0.5
    max_backtracks: int = 40
    initial_step: float = 1.0
    metric: GradientMetric = GradientMetric.H1

    def __post_init__(self):
        self.metric = GradientMetric(self.metric)
        if not (0 < self.backtrack_ratio < 1):
            raise ValueError("backtrack_ratio must lie in (0, 1)")
        if self.armijo_c <= 0 or self.initial_step <= 0:
            raise ValueError("armijo_c and initial_step must be positive")


@dataclass
class OptimizeResult:
    u: Trajectory
    m: Trajectory
    report: OptReport


def _trapezoid_weights(n_frames, dt):
    w = np.full(n_frames, dt)
    w[0] = 0.5 * dt
    w[-1] = 0.5 * dt
    return w


def traj_l2_inner(a: Trajectory, b: Trajectory) -> float:
    """Space-time L2 inner product, trapezoidal in time."""
    a._require_compatible(b)
    w = _trapezoid_weights(a.times.size, a.dt)
    qw = a.grid.quad_weight
    per_frame = np.einsum("kcij,kcij->k", a.data, b.data)
    return qw * float(np.dot(w, per_frame))


def traj_l2_norm_sq(a: Trajectory) -> float:
    return traj_l2_inner(a, a)


def traj_h1_inner(a: Trajectory, b: Trajectory) -> float:
    """Space-time inner product with the spatial-gradient term included."""
    a._require_compatible(b)
    lam = eigendata(a.grid).lam
    w = _trapezoid_weights(a.times.size, a.dt)
    ca = spectral._analyze(a.data, a.grid)
    cb = spectral._analyze(b.data, b.grid)
    per_frame = np.einsum("kcij,kcij->k", ca, (1.0 + lam) * cb)
    return float(np.dot(w, per_frame))


def traj_h1_norm(a: Trajectory) -> float:
    return math.sqrt(max(traj_h1_inner(a, a), 0.0))


def _tracking_terms(m, spec, w, qw):
    tracking = 0.0
    for k in range(spec.nt + 1):
        diff = m.frame_array(k) - spec.m_d.frame_array(k)
        tracking += w[k] * qw * float((diff * diff).sum())
    dT = m.frame_array(spec.nt) - spec.m_omega.data
    terminal = 0.5 * qw * float((dT * dT).sum())
    return 0.5 * tracking, terminal


def _control_terms(coeffs, w, lam):
    per_l2 = np.einsum("kcij,kcij->k", coeffs, coeffs)
    per_h1 = np.einsum("kcij,kcij->k", coeffs, lam * coeffs)
    return 0.5 * float(np.dot(w, per_l2)), 0.5 * float(np.dot(w, per_h1))


def evaluate_cost(m, u: Trajectory, spec: OcpSpec) -> CostBreakdown:
    """All four cost terms; ``m`` may be dense or checkpointed."""
    if u.n_steps != spec.nt or m.n_steps != spec.nt:
        raise ShapeMismatchError("trajectories do not match the problem size")
    w = _trapezoid_weights(spec.nt + 1, u.dt)
    qw = spec.grid.quad_weight
    lam = eigendata(spec.grid).lam
    tracking, terminal = _tracking_terms(m, spec, w, qw)
    control_l2, control_h1 = _control_terms(spectral._analyze(u.data, spec.grid), w, lam)
    return CostBreakdown.assemble(tracking, terminal, control_l2, control_h1)


def adjoint_torque(phi: Trajectory, m) -> Trajectory:
    """Frame-wise phi x m + m x (phi x m), the PDE part of the gradient."""
    out = np.empty_like(phi.data)
    for k in range(phi.n_steps + 1):
        out[k] = kernels.gradient_direction(phi.frame_array(k), m.frame_array(k))
    return Trajectory(phi.times, out, phi.grid)


def reduced_gradient(u: Trajectory, phi: Trajectory, m,
                     metric=GradientMetric.H1) -> Trajectory:
    """Gradient representative of the reduced cost in the chosen metric.

    H1: u + (I - Lap)^{-1}(phi x m + m x (phi x m)); its H1 pairing with
    any direction reproduces the directional derivative.  L2: the
    strong-form representative u - Lap u + torque (meaningful for smooth u).
    """
    metric = GradientMetric(metric)
    torque = adjoint_torque(phi, m)
    if metric is GradientMetric.H1:
        data = u.data + spectral.helmholtz_inverse(torque.data, u.grid)
    else:
        data = u.data - spectral.laplacian(u.data, u.grid) + torque.data
    return Trajectory(u.times, data, u.grid)


def directional_derivative(u: Trajectory, torque: Trajectory, h: Trajectory) -> float:
    """The assembled three-integral expression: (u, h)_H1 + (torque, h)_L2."""
    return traj_h1_inner(u, h) + traj_l2_inner(torque, h)


def project_uad(u: Trajectory, e_mf: float) -> Trajectory:
    """Radial projection onto the admissible ball ||u||^2_{L2(Q)} <= e_mf."""
    if e_mf <= 0:
        raise ValueError("control budget must be positive")
    nsq = traj_l2_norm_sq(u)
    if nsq <= e_mf:
        return u
    return u * math.sqrt(e_mf / nsq)


def budget_active(u: Trajectory, e_mf: float, slack: float = 1e-9) -> bool:
    return traj_l2_norm_sq(u) >= e_mf * (1.0 - slack)


def optimize(spec: OcpSpec, u_init: Trajectory, opts: OptimizeOptions | None = None) -> OptimizeResult:
    """Projected gradient descent with Armijo backtracking.

    Each iterate solves the forward and adjoint systems, forms the metric
    gradient, and backtracks on s -> cost at project(u - s g).  Terminates
    on the projected-gradient norm ||project(u - s0 g) - u|| / s0 (space-
    time L2), on the iteration cap, or when no backtracked step is
    acceptable (reported as a budget-boundary stall when the iterate sits
    on the budget sphere).
    """
    opts = opts or OptimizeOptions()
    if traj_l2_norm_sq(u_init) > spec.e_mf * (1 + 1e-9):
        raise ValueError("u_init violates the control budget")
    grid = spec.grid
    lam = eigendata(grid).lam
    w = _trapezoid_weights(spec.nt + 1, spec.horizon / spec.nt)
    metric_weight = (1.0 + lam) if opts.metric is GradientMetric.H1 else 1.0

    u = u_init
    cu = spectral._analyze(u.data, grid)
    report = OptReport()
    m = solve_forward(spec.m0, u, spec.horizon, spec.solver)
    tracking, terminal = _tracking_terms(m, spec, w, grid.quad_weight)
    c_l2, c_h1 = _control_terms(cu, w, lam)
    cost = CostBreakdown.assemble(tracking, terminal, c_l2, c_h1)

    for it in range(opts.max_iter + 1):
        phi = solve_adjoint(AdjointInput(m, u, spec.m_d, spec.m_omega), spec.solver)
        g = reduced_gradient(u, phi, m, opts.metric)
        probe = project_uad(u - opts.initial_step * g, spec.e_mf)
        gnorm = math.sqrt(max(traj_l2_norm_sq(probe - u), 0.0)) / opts.initial_step
        active = budget_active(u, spec.e_mf)

        if gnorm <= opts.grad_tol:
            report.records.append(IterationRecord(it, cost, gnorm, 0.0, active))
            report.stopping_reason = StoppingReason.GRAD_TOL
            break
        if it == opts.max_iter:
            report.records.append(IterationRecord(it, cost, gnorm, 0.0, active))
            report.stopping_reason = StoppingReason.MAX_ITER
            break

        # Backtracking trials are linear combinations of u and g, so their
        # control energies and the Armijo decrease come from the cached
        # coefficient arrays; only the forward solve touches the PDE.
        cg = spectral._analyze(g.data, grid)
        ip_gg = float(np.dot(w, np.einsum("kcij,kcij->k", cg, metric_weight * cg)))
        ip_gu = float(np.dot(w, np.einsum("kcij,kcij->k", cg, metric_weight * cu)))

        s = opts.initial_step
        accepted = False
        for _ in range(opts.max_backtracks + 1):
            raw = u - s * g
            nsq = traj_l2_norm_sq(raw)
            theta = 1.0 if nsq <= spec.e_mf else math.sqrt(spec.e_mf / nsq)
            trial = raw if theta == 1.0 else raw * theta
            decrease = (1.0 - theta) * ip_gu + theta * s * ip_gg
            m_trial = solve_forward(spec.m0, trial, spec.horizon, spec.solver)
            tracking, terminal = _tracking_terms(m_trial, spec, w, grid.quad_weight)
            c_trial = theta * (cu - s * cg)
            c_l2, c_h1 = _control_terms(c_trial, w, lam)
            cost_trial = CostBreakdown.assemble(tracking, terminal, c_l2, c_h1)
            if cost_trial.total <= cost.total - opts.armijo_c * decrease:
                accepted = True
                break
            s *= opts.backtrack_ratio
        report.records.append(IterationRecord(it, cost, gnorm, s if accepted else 0.0, active))
        if not accepted:
            report.stopping_reason = (
                StoppingReason.BUDGET_BOUNDARY_STALL if active
                else StoppingReason.LINE_SEARCH_FAIL
            )
            break
        u, m, cost, cu = trial, m_trial, cost_trial, c_trial

    return OptimizeResult(u=u, m=m, report=report)


def vi_residuals(u_star: Trajectory, torque: Trajectory, probes) -> list[tuple[float, float]]:
    """First-order-condition residuals against admissible probe controls.

    For each probe u the residual is the directional derivative toward
    u - u_star; at a constrained minimizer it is nonnegative for every
    admissible u.  Returns (residual, scale) pairs where scale is the
    Cauchy-Schwarz-style normalization (||u_star||_H1 + ||torque||_L2 + 1)
    * ||u - u_star||_H1 used by the acceptance checks.
    """
    base_scale = traj_h1_norm(u_star) + math.sqrt(max(traj_l2_norm_sq(torque), 0.0)) + 1.0
    out = []
    for probe in probes:
        h = probe - u_star
        value = directional_derivative(u_star, torque, h)
        out.append((value, base_scale * traj_h1_norm(h)))
    return out
