import numpy as np
import pytest

from app.core.exceptions import (
    InvalidMeshError,
    InvalidParameterError,
    UnderdeterminedError,
    UnsupportedDegreeError,
)
from app.services.fem2d import (
    FemKind2D,
    ProblemEJ,
    assemble_ej_system,
    edge_penalty,
    error_norms_2d,
    exact_derivatives_ej,
    exact_solution_ej,
    gram_h1_2d,
    solve_galerkin_2d,
    solve_resmin_2d,
    solve_supg,
    tensor_basis,
)
from app.services.mesh import make_mesh_2d


def test_characteristic_roots():
    problem = ProblemEJ(0.1)
    assert problem.r1 == pytest.approx(10.905, abs=1e-3)
    assert problem.r2 == pytest.approx(-0.905, abs=1e-3)


def test_exact_solution_boundary_values():
    problem = ProblemEJ(0.1)
    t = np.linspace(0.0, 1.0, 21)
    np.testing.assert_allclose(exact_solution_ej(problem, 0.0, t), np.sin(np.pi * t), atol=1e-14)
    np.testing.assert_allclose(exact_solution_ej(problem, 1.0, t), 0.0, atol=1e-14)
    np.testing.assert_allclose(exact_solution_ej(problem, t, 0.0), 0.0, atol=1e-14)
    np.testing.assert_allclose(exact_solution_ej(problem, t, 1.0), 0.0, atol=1e-14)
    assert exact_solution_ej(problem, 0.5, 0.5) == pytest.approx(0.634, abs=1e-3)


@pytest.mark.parametrize("eps", [0.1, 0.01])
def test_exact_solution_satisfies_the_pde(rng, eps):
    problem = ProblemEJ(eps)
    x, y = rng.uniform(0.0, 1.0, (2, 30))
    d = exact_derivatives_ej(problem, x, y)
    residual = d["u_x"] - eps * (d["u_xx"] + d["u_yy"])
    np.testing.assert_allclose(residual, 0.0, atol=1e-10 / eps)


def test_edge_penalty():
    assert edge_penalty(3.0, 2, 0.1, 0.0625) == pytest.approx(19.2)


def test_trial_dimension():
    basis = tensor_basis(make_mesh_2d("uniform", 5, 0.1), 2, 1)
    assert basis[0].dimension * basis[1].dimension == 36
    mesh = make_mesh_2d("uniform", 5, 0.1)
    matrix, load = assemble_ej_system(ProblemEJ(0.1), mesh, basis, basis)
    assert matrix.shape == (36, 36) and load.shape == (36,)


def test_load_comes_from_the_inflow_edge_only():
    mesh = make_mesh_2d("uniform", 5, 0.1)
    basis = tensor_basis(mesh, 2, 1)
    _, load = assemble_ej_system(ProblemEJ(0.1), mesh, basis, basis)
    rows = load.reshape(basis[0].dimension, basis[1].dimension)
    # x-index 0 and 1 carry the left-edge value and normal derivative traces
    assert np.all(rows[2:] == 0.0)
    assert np.any(rows[0] != 0.0)


def test_galerkin_is_accurate_for_moderate_eps():
    problem = ProblemEJ(0.1)
    mesh = make_mesh_2d("uniform", 17, 0.1)
    solution = solve_galerkin_2d(problem, mesh)
    assert solution.kind is FemKind2D.GALERKIN
    assert error_norms_2d(solution.on_grid, problem, mesh).l2_error < 1e-2


def test_supg_is_accurate_for_moderate_eps():
    problem = ProblemEJ(0.1)
    mesh = make_mesh_2d("uniform", 17, 0.1)
    solution = solve_supg(problem, mesh)
    norms = error_norms_2d(solution.on_grid, problem, mesh)
    assert solution.kind is FemKind2D.SUPG
    assert norms.l2_error < 1e-2
    assert norms.n_samples == 101 * 101


def test_supg_vanishes_when_diffusion_dominates():
    problem = ProblemEJ(1e6)
    mesh = make_mesh_2d("uniform", 7, 0.1)
    supg = solve_supg(problem, mesh).coefficients
    galerkin = solve_galerkin_2d(problem, mesh).coefficients
    assert np.linalg.norm(supg - galerkin) / np.linalg.norm(galerkin) < 1e-3


def test_supg_needs_quadratic_trial():
    with pytest.raises(UnsupportedDegreeError):
        solve_supg(ProblemEJ(0.1), make_mesh_2d("uniform", 5, 0.1), trial_degree=1)


def test_resmin_is_accurate_for_moderate_eps():
    problem = ProblemEJ(0.1)
    mesh = make_mesh_2d("uniform", 9, 0.1)
    solution = solve_resmin_2d(problem, mesh)
    assert solution.kind is FemKind2D.RESMIN
    assert solution.residual_norm > 0
    assert error_norms_2d(solution.on_grid, problem, mesh).l2_error < 0.05


def test_resmin_on_16_by_16_elements():
    problem = ProblemEJ(0.1)
    mesh = make_mesh_2d("uniform", 17, 0.1)
    solution = solve_resmin_2d(problem, mesh)
    assert error_norms_2d(solution.on_grid, problem, mesh).l2_error < 1e-2


def test_resmin_with_equal_spaces_is_galerkin():
    problem = ProblemEJ(0.05)
    mesh = make_mesh_2d("uniform", 5, 0.05)
    galerkin = solve_galerkin_2d(problem, mesh)
    resmin = solve_resmin_2d(problem, mesh, trial_degree=2, test_degree=2)
    np.testing.assert_allclose(resmin.coefficients, galerkin.coefficients, atol=1e-9)
    assert resmin.residual_norm < 1e-9


def test_resmin_rejects_poorer_test_space():
    mesh = make_mesh_2d("uniform", 5, 0.1)
    with pytest.raises(UnderdeterminedError):
        solve_resmin_2d(ProblemEJ(0.1), mesh, trial_degree=3, test_degree=2)


def test_h1_gram_of_constant():
    test = tensor_basis(make_mesh_2d("uniform", 4, 0.1), 3, 1)
    gram = gram_h1_2d(test)
    ones = np.ones(gram.shape[0])
    assert ones @ gram @ ones == pytest.approx(1.0)
    np.testing.assert_allclose(gram, gram.T, atol=1e-14)


def _boundary_trace_error(solution, problem):
    t = np.linspace(0.0, 1.0, 201)
    left = solution.on_grid([0.0], t)[0] - np.sin(np.pi * t)
    others = [solution.on_grid([1.0], t)[0], solution.on_grid(t, [0.0])[:, 0], solution.on_grid(t, [1.0])[:, 0]]
    return np.sqrt(np.mean(left ** 2) + sum(np.mean(v ** 2) for v in others))


def test_larger_penalty_tightens_the_boundary_trace():
    problem = ProblemEJ(0.1)
    mesh = make_mesh_2d("uniform", 9, 0.1)
    errors = [
        _boundary_trace_error(solve_galerkin_2d(problem, mesh, penalty_constant=c), problem)
        for c in (3.0, 6.0, 12.0)
    ]
    assert errors[0] > errors[1] > errors[2]


def test_solution_evaluation_agrees_between_grid_and_points(rng):
    problem = ProblemEJ(0.1)
    mesh = make_mesh_2d("uniform", 6, 0.1)
    solution = solve_galerkin_2d(problem, mesh)
    xs, ys = np.sort(rng.uniform(0, 1, 4)), np.sort(rng.uniform(0, 1, 3))
    grid = solution.on_grid(xs, ys)
    xx, yy = np.meshgrid(xs, ys, indexing="ij")
    np.testing.assert_allclose(solution(xx.ravel(), yy.ravel()), grid.ravel(), atol=1e-14)


def test_supg_converges_on_nested_adapted_meshes():
    problem = ProblemEJ(0.001)
    grid = np.linspace(0.0, 1.0, 101)
    errors = []
    for level in range(3):
        mesh = make_mesh_2d("adaptive", 13, problem.eps, refinements=level)
        solution = solve_supg(problem, mesh)
        assert np.abs(solution.on_grid(grid, grid)).max() <= 1.2
        errors.append(error_norms_2d(solution.on_grid, problem, mesh).l2_error)
    assert errors[0] > errors[1] > errors[2]


def test_resmin_oscillates_more_than_supg_on_a_coarse_layer_mesh():
    problem = ProblemEJ(0.001)
    # layer elements of about 10 eps
    mesh = make_mesh_2d("adaptive", 9, 0.05)
    xs, ys = np.linspace(0.0, 1.0, 2001), np.linspace(0.0, 1.0, 51)
    supg = np.abs(solve_supg(problem, mesh).on_grid(xs, ys)).max()
    resmin = np.abs(solve_resmin_2d(problem, mesh).on_grid(xs, ys)).max()
    assert resmin > supg


@pytest.mark.parametrize("eps", [0.0, -0.1])
def test_nonpositive_eps_is_a_parameter_error(eps):
    with pytest.raises(InvalidParameterError) as excinfo:
        ProblemEJ(eps)
    assert not issubclass(excinfo.type, InvalidMeshError)
