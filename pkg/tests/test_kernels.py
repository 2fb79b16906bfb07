"""Parity between the compiled kernels and the NumPy fallback."""

import numpy as np
import pytest

from llgopt import _kernels
from llgopt._kernels import _fallback

native = _kernels.native_impl
needs_native = pytest.mark.skipif(native is None, reason="compiled kernels unavailable")


@pytest.fixture
def blobs():
    rng = np.random.default_rng(99)
    make = lambda: np.ascontiguousarray(rng.standard_normal((3, 12, 9)))
    scal = lambda: np.ascontiguousarray(rng.standard_normal((12, 9)))
    return make, scal


@needs_native
def test_cross_and_dot_match(blobs):
    make, _ = blobs
    a, b = make(), make()
    assert np.array_equal(native.cross(a, b), _fallback.cross(a, b))
    assert np.array_equal(native.dot(a, b), _fallback.dot(a, b))


@needs_native
def test_double_cross_rhs_matches(blobs):
    make, _ = blobs
    m, f = make(), make()
    assert np.array_equal(native.double_cross_rhs(m, f), _fallback.double_cross_rhs(m, f))


@needs_native
def test_ep_pointwise_matches(blobs):
    make, scal = blobs
    m, lap, u = make(), make(), make()
    gsq = scal()
    assert np.array_equal(native.ep_pointwise(m, lap, gsq, u),
                          _fallback.ep_pointwise(m, lap, gsq, u))


@needs_native
def test_tangent_pointwise_matches(blobs):
    make, scal = blobs
    v, m, u, lm, lv = make(), make(), make(), make(), make()
    gsq, gmv = scal(), scal()
    assert np.array_equal(native.tangent_pointwise(v, m, u, lm, lv, gsq, gmv),
                          _fallback.tangent_pointwise(v, m, u, lm, lv, gsq, gmv))


@needs_native
def test_adjoint_pointwise_matches(blobs):
    make, scal = blobs
    p, m, u, lm = make(), make(), make(), make()
    gsq = scal()
    assert np.array_equal(native.adjoint_pointwise(p, m, u, lm, gsq),
                          _fallback.adjoint_pointwise(p, m, u, lm, gsq))


@needs_native
def test_gradient_direction_matches(blobs):
    make, _ = blobs
    p, m = make(), make()
    assert np.array_equal(native.gradient_direction(p, m),
                          _fallback.gradient_direction(p, m))


@needs_native
def test_sphere_defect_and_normalize_match(blobs):
    make, _ = blobs
    m = make() + 2.0
    assert native.sphere_defect(m) == _fallback.sphere_defect(m)
    out_n, min_n = native.normalize(m)
    out_f, min_f = _fallback.normalize(m)
    assert np.array_equal(out_n, out_f)
    assert min_n == min_f


def test_selection_reports_an_implementation():
    assert _kernels.IMPL_NAME in ("native", "numpy")


@needs_native
def test_full_forward_solve_is_backend_independent():
    from llgopt import scenarios
    from llgopt.spectral import Grid
    from llgopt.state import SolverConfig, solve_forward

    grid = Grid(1.0, 1.0, 16, 16)
    scen = scenarios.perturbed(grid, 0.25, 64, scale=0.8, seed=5, control_amp=0.1)
    original = _kernels.IMPL_NAME
    results = {}
    try:
        for name in ("numpy", "native"):
            _kernels.activate(name)
            traj = solve_forward(scen.m0, scen.u, 0.25, SolverConfig(nt=64))
            results[name] = traj.data
    finally:
        _kernels.activate(original)
    assert np.array_equal(results["numpy"], results["native"])
