from dataclasses import replace

import numpy as np
import pytest
import torch

from app.core.exceptions import DimensionMismatchError
from app.services.fem2d import ProblemEJ
from app.services.mesh import uniform_mesh
from app.services.neural import AnalyticSurrogate, JetValue, init_network
from app.services.pinn import build_pinn_problem, exact_surrogate_1d, exact_surrogate_ej
from app.services.vpinn import (
    build_test_space,
    strong_residuals,
    vpinn_combined_loss,
    vpinn_strong_loss,
    vpinn_weak_loss,
    weak_residuals,
)


def _polynomial_surrogate():
    """u = x^3 - 2 x^2 + 0.5."""

    def jet(x):
        t = x[:, 0]
        return JetValue(t ** 3 - 2 * t ** 2 + 0.5, (3 * t ** 2 - 4 * t)[:, None], (6 * t - 4)[:, None])

    return AnalyticSurrogate(1, jet)


def _identity_surrogate():
    def jet(x):
        return JetValue(x[:, 0].clone(), torch.ones_like(x), torch.zeros_like(x))

    return AnalyticSurrogate(1, jet)


def test_test_space_sizes(mesh_11, mesh_2d_11):
    space = build_test_space(mesh_11)
    assert space.n_tests == 12
    assert space.quad_order == 5
    assert space.quadrature_points().shape == (50, 1)
    assert build_test_space(mesh_2d_11).n_tests == 11 * 11


def test_zero_network_weak_loss_1d(mesh_11, zero_net_1d):
    space = build_test_space(mesh_11)
    report = vpinn_weak_loss(zero_net_1d, space, build_pinn_problem(mesh_11, 0.1))
    # only the first test function is nonzero at x = 0
    assert report.components["weak"] == pytest.approx(1.0 / space.n_tests, rel=1e-14)
    assert report.components["bc0"] == 1.0


def test_zero_network_strong_loss_2d(mesh_2d_11, zero_net_2d):
    problem = build_pinn_problem(mesh_2d_11, 0.1)
    report = vpinn_strong_loss(zero_net_2d, build_test_space(mesh_2d_11), problem)
    assert report.components["strong"] == 0.0
    assert report.components["bc_left"] == pytest.approx(10 / 22, rel=1e-12)


def test_gamma_scales_the_weak_residual(mesh_11, zero_net_1d):
    problem = build_pinn_problem(mesh_11, 0.1)
    plain = weak_residuals(zero_net_1d, build_test_space(mesh_11), problem)
    scaled = weak_residuals(zero_net_1d, build_test_space(mesh_11, gamma=3.0), problem)
    np.testing.assert_allclose(scaled.detach(), 3.0 * plain.detach(), atol=1e-15)


@pytest.mark.parametrize("eps", [0.1, 0.05])
def test_exact_solution_1d_has_zero_loss(eps):
    mesh = uniform_mesh(21)
    report = vpinn_combined_loss(exact_surrogate_1d(eps), build_test_space(mesh), build_pinn_problem(mesh, eps))
    assert report.total < 1e-8


def test_exact_solution_2d_has_zero_loss(mesh_2d_11):
    problem = build_pinn_problem(mesh_2d_11, 0.1)
    report = vpinn_combined_loss(exact_surrogate_ej(ProblemEJ(0.1)), build_test_space(mesh_2d_11), problem)
    assert report.total < 1e-8


def test_strong_residual_of_identity_is_the_test_integral(mesh_11):
    eps = 0.1
    space = build_test_space(mesh_11)
    report = vpinn_strong_loss(_identity_surrogate(), space, build_pinn_problem(mesh_11, eps))
    knots = space.directions[0].basis.knots.values
    integrals = (knots[4:] - knots[:-4]) / 4.0  # int B_i = (t_{i+p+1} - t_i) / (p + 1)
    assert report.components["strong"] == pytest.approx(np.mean(integrals[:-1] ** 2), rel=1e-12)
    assert report.components["bc0"] == pytest.approx((1 + eps) ** 2)
    assert report.components["bc1"] == pytest.approx(1.0)


def test_integration_by_parts_for_interior_tests(mesh_11):
    model = _polynomial_surrogate()
    space = build_test_space(mesh_11)
    problem = build_pinn_problem(mesh_11, 0.2)
    strong = strong_residuals(model, space, problem)
    weak = weak_residuals(model, space, problem)
    # from the second test function on, v(0) = v(1) = 0
    np.testing.assert_allclose(weak[1:].detach(), strong[1:].detach(), atol=1e-12)


def test_integration_by_parts_in_2d(mesh_2d_11):
    net = init_network([2, 6, 1], 2)
    space = build_test_space(mesh_2d_11)
    problem = build_pinn_problem(mesh_2d_11, 0.1)
    np.testing.assert_allclose(
        weak_residuals(net, space, problem).detach(),
        strong_residuals(net, space, problem).detach(),
        atol=1e-6,
    )


def test_quadrature_refinement_changes_little():
    mesh = uniform_mesh(101)
    net = init_network([1, 8, 8, 1], 1)
    problem = build_pinn_problem(mesh, 0.01)
    coarse = weak_residuals(net, build_test_space(mesh), problem)
    fine = weak_residuals(net, build_test_space(mesh, quad_order=10), problem)
    np.testing.assert_allclose(coarse.detach(), fine.detach(), atol=1e-8)


def test_combined_loss_bookkeeping(mesh_11):
    net = init_network([1, 6, 6, 1], 7)
    space = build_test_space(mesh_11)
    problem = build_pinn_problem(mesh_11, 0.05)
    combined = vpinn_combined_loss(net, space, problem, keep_parts=True)
    strong = vpinn_strong_loss(net, space, problem)
    weak = vpinn_weak_loss(net, space, problem)
    bc = combined.components["bc0"] + combined.components["bc1"]

    assert set(combined.components) == {"strong", "weak", "bc0", "bc1"}
    assert combined.total == pytest.approx(strong.total + weak.total - bc, rel=1e-12)
    parts = combined.parts
    np.testing.assert_allclose(
        combined.gradient, parts["strong"].gradient + parts["weak"].gradient + parts["bc"].gradient, atol=1e-12
    )


def test_dimension_mismatch(mesh_11, zero_net_2d):
    with pytest.raises(DimensionMismatchError):
        vpinn_weak_loss(zero_net_2d, build_test_space(mesh_11), build_pinn_problem(mesh_11, 0.1))


def _reordered(space, rng):
    directions = []
    for t in space.directions:
        order = rng.permutation(t.active.size)
        directions.append(replace(
            t, active=t.active[order], values=t.values[order], slopes=t.slopes[order], at_zero=t.at_zero[order]
        ))
    return replace(space, directions=tuple(directions))


@pytest.mark.parametrize("dim", [1, 2])
def test_loss_ignores_test_function_order(rng, mesh_11, mesh_2d_11, dim):
    mesh = mesh_11 if dim == 1 else mesh_2d_11
    net = init_network([dim, 6, 6, 1], 12)
    space = build_test_space(mesh)
    problem = build_pinn_problem(mesh, 0.05)
    a = vpinn_combined_loss(net, space, problem)
    b = vpinn_combined_loss(net, _reordered(space, rng), problem)
    assert b.total == pytest.approx(a.total, rel=1e-12)
    np.testing.assert_allclose(b.gradient, a.gradient, rtol=1e-9, atol=1e-13)
