import numpy as np
import pytest
import torch

from app.core.exceptions import DimensionMismatchError, InvalidParameterError
from app.services.neural import (
    DTYPE,
    eval_with_input_derivs,
    flatten,
    init_network,
    load_checkpoint,
    loss_gradient,
    parameter_count,
    predict,
    save_checkpoint,
    tanh_derivatives,
    unflatten,
)
from tests.conftest import constant_network


def test_parameter_count():
    assert parameter_count(init_network([1, 20, 20, 20, 20, 1], 1)) == 1321
    assert parameter_count(init_network([2, 20, 20, 20, 20, 1], 1)) == 1341


def test_initialization_is_seeded():
    a = flatten(init_network([1, 8, 8, 1], 7))
    b = flatten(init_network([1, 8, 8, 1], 7))
    c = flatten(init_network([1, 8, 8, 1], 8))
    assert torch.equal(a, b)
    assert not torch.equal(a, c)


def test_glorot_bounds_and_zero_biases():
    net = init_network([2, 30, 1], 3)
    first, last = net.layers
    assert first.weight.abs().max() <= np.sqrt(6.0 / 32)
    assert last.weight.abs().max() <= np.sqrt(6.0 / 31)
    assert torch.count_nonzero(first.bias) == 0


def test_invalid_widths():
    with pytest.raises(InvalidParameterError):
        init_network([1, 0, 1], 1)
    with pytest.raises(DimensionMismatchError):
        init_network([3, 5, 1], 1)
    with pytest.raises(DimensionMismatchError):
        init_network([1, 5, 2], 1)


def test_single_tanh_unit():
    net = init_network([1, 1, 1], 0)
    unflatten(net, torch.tensor([1.0, 0.0, 1.0, 0.0], dtype=DTYPE))
    jet = eval_with_input_derivs(net, np.array([0.0, 0.5]))
    s = np.tanh(0.5)
    np.testing.assert_allclose(jet.value.detach(), [0.0, s], atol=1e-15)
    np.testing.assert_allclose(jet.grad[:, 0].detach(), [1.0, 1 - s ** 2], atol=1e-15)
    np.testing.assert_allclose(jet.hess_diag[:, 0].detach(), [0.0, -2 * s * (1 - s ** 2)], atol=1e-15)


def test_tanh_second_derivative_matches_autograd(rng):
    z = torch.tensor(rng.uniform(-3, 3, 40), dtype=DTYPE, requires_grad=True)
    (d1,) = torch.autograd.grad(torch.tanh(z).sum(), z, create_graph=True)
    (d2,) = torch.autograd.grad(d1.sum(), z)
    s, ds, d2s = tanh_derivatives(z.detach())
    np.testing.assert_allclose(ds, d1.detach(), atol=1e-14)
    np.testing.assert_allclose(d2s, d2, atol=1e-14)


def test_constant_network():
    net = constant_network([1, 4, 4, 1], 0.7)
    jet = eval_with_input_derivs(net, np.linspace(0, 1, 5))
    np.testing.assert_allclose(jet.value.detach(), 0.7)
    assert torch.count_nonzero(jet.grad) == 0
    assert torch.count_nonzero(jet.hess_diag) == 0


@pytest.mark.parametrize("dim", [1, 2])
def test_input_derivatives_match_autograd(rng, dim):
    net = init_network([dim, 8, 8, 1], 11)
    x = torch.tensor(rng.uniform(0, 1, (6, dim)), dtype=DTYPE, requires_grad=True)
    (grad,) = torch.autograd.grad(net(x).sum(), x, create_graph=True)
    second = torch.stack(
        [torch.autograd.grad(grad[:, k].sum(), x, retain_graph=True)[0][:, k] for k in range(dim)], dim=1
    )
    jet = net.jet(x.detach())
    np.testing.assert_allclose(jet.value.detach(), net(x).detach(), atol=1e-14)
    np.testing.assert_allclose(jet.grad.detach(), grad.detach(), atol=1e-12)
    np.testing.assert_allclose(jet.hess_diag.detach(), second.detach(), atol=1e-12)


@pytest.mark.parametrize("seed", range(10))
def test_input_derivatives_match_finite_differences(seed):
    net = init_network([1, 10, 10, 1], seed)
    x = np.random.default_rng(seed).uniform(0.1, 0.9, 8)
    jet = eval_with_input_derivs(net, x)

    def f(points):
        return predict(net, points)

    h1, h2 = 1e-5, 1e-3
    fd1 = (f(x + h1) - f(x - h1)) / (2 * h1)
    fd2 = (f(x + h2) - 2 * f(x) + f(x - h2)) / h2 ** 2
    np.testing.assert_allclose(jet.grad[:, 0].detach(), fd1, rtol=1e-6, atol=1e-8)
    np.testing.assert_allclose(jet.hess_diag[:, 0].detach(), fd2, rtol=1e-3, atol=1e-5)


def test_jet_product_rule(rng):
    f, g = init_network([2, 6, 1], 1), init_network([2, 6, 1], 2)
    x = torch.tensor(rng.uniform(0, 1, (5, 2)), dtype=DTYPE, requires_grad=True)
    product = f(x) * g(x)
    (grad,) = torch.autograd.grad(product.sum(), x, create_graph=True)
    (dxx,) = torch.autograd.grad(grad[:, 0].sum(), x)
    jet = f.jet(x.detach()) * g.jet(x.detach())
    np.testing.assert_allclose(jet.grad.detach(), grad.detach(), atol=1e-12)
    np.testing.assert_allclose(jet.hess_diag[:, 0].detach(), dxx[:, 0], atol=1e-12)


def test_wrong_point_dimension():
    net = init_network([1, 4, 1], 0)
    with pytest.raises(DimensionMismatchError):
        eval_with_input_derivs(net, np.zeros((3, 2)))
    with pytest.raises(DimensionMismatchError):
        unflatten(net, torch.zeros(3, dtype=DTYPE))


def test_gradient_of_constant_loss_is_zero():
    net = init_network([1, 4, 1], 0)
    report = loss_gradient(net, lambda m: {"c": torch.tensor(3.0, dtype=DTYPE)})
    assert report.total == 3.0
    assert torch.count_nonzero(report.gradient) == 0
    assert report.gradient.numel() == parameter_count(net)


def test_gradient_of_squared_output_bias():
    net = constant_network([1, 3, 1], 0.4)

    def loss(m):
        return {"value": m.jet(torch.zeros(1, 1, dtype=DTYPE)).value[0] ** 2}

    report = loss_gradient(net, loss)
    expected = torch.zeros(parameter_count(net), dtype=DTYPE)
    expected[-1] = 0.8
    np.testing.assert_allclose(report.gradient, expected, atol=1e-15)


def _residual_loss(points):
    x = torch.as_tensor(points, dtype=DTYPE)[:, None]

    def loss(m):
        jet = m.jet(x)
        return {
            "pde": torch.mean((-0.1 * jet.hess_diag[:, 0] + jet.grad[:, 0]) ** 2),
            "bc": jet.value[0] ** 2,
        }

    return loss


@pytest.mark.parametrize("seed", range(10))
def test_parameter_gradient_matches_finite_differences(seed):
    rng = np.random.default_rng(seed)
    net = init_network([1, 6, 6, 1], seed)
    loss = _residual_loss(np.linspace(0, 1, 5))
    report = loss_gradient(net, loss)
    theta = flatten(net)
    h = 1e-6
    for k in rng.choice(theta.numel(), 20, replace=False):
        step = torch.zeros_like(theta)
        step[k] = h
        unflatten(net, theta + step)
        plus = loss_gradient(net, loss).total
        unflatten(net, theta - step)
        minus = loss_gradient(net, loss).total
        assert report.gradient[k].item() == pytest.approx((plus - minus) / (2 * h), rel=1e-5, abs=1e-8)
    unflatten(net, theta)


def test_gradient_is_linear_in_the_loss():
    net = init_network([1, 6, 1], 9)
    loss = _residual_loss(np.linspace(0, 1, 7))
    both = loss_gradient(net, loss)
    pde = loss_gradient(net, lambda m: {"pde": loss(m)["pde"]})
    bc = loss_gradient(net, lambda m: {"bc": loss(m)["bc"]})
    np.testing.assert_allclose(both.gradient, pde.gradient + bc.gradient, atol=1e-12)
    assert both.total == pytest.approx(pde.total + bc.total, rel=1e-14)


def test_checkpoint_round_trip(tmp_path):
    net = init_network([2, 7, 5, 1], 13)
    path = save_checkpoint(net, tmp_path / "network.ckpt")
    assert path.read_text().splitlines()[0] == "2,7,5,1"
    restored = load_checkpoint(path)
    assert restored.widths == [2, 7, 5, 1]
    assert torch.equal(flatten(restored), flatten(net))
    points = np.random.default_rng(0).uniform(0, 1, (10, 2))
    np.testing.assert_array_equal(predict(restored, points), predict(net, points))
