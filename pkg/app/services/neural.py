"""Dense tanh network with exact input derivatives up to second order.

Input derivatives are carried forward layer by layer (value, gradient and
pure second derivatives per input direction); parameter gradients of any
loss built from these jets then come from a single reverse sweep with
``torch.autograd.grad``. Everything runs in float64 on the CPU.
"""
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Union
import logging
import math

import numpy as np
import torch
from torch import nn
from torch.nn.utils import parameters_to_vector, vector_to_parameters

from ..core.exceptions import DimensionMismatchError, InvalidParameterError

logger = logging.getLogger(__name__)

DTYPE = torch.float64

Points = Union[np.ndarray, torch.Tensor]


def tanh_derivatives(z: torch.Tensor):
    """tanh and its first two derivatives: s, 1 - s^2, -2 s (1 - s^2)."""
    s = torch.tanh(z)
    ds = 1.0 - s * s
    return s, ds, -2.0 * s * ds


@dataclass
class JetValue:
    """Value, gradient ``(N, d)`` and pure second derivatives ``(N, d)`` at N points."""

    value: torch.Tensor
    grad: torch.Tensor
    hess_diag: torch.Tensor

    @classmethod
    def constant(cls, value: torch.Tensor, dim: int) -> "JetValue":
        zeros = torch.zeros(value.shape[0], dim, dtype=value.dtype)
        return cls(value, zeros, zeros.clone())

    def __add__(self, other):
        if isinstance(other, JetValue):
            return JetValue(self.value + other.value, self.grad + other.grad, self.hess_diag + other.hess_diag)
        return JetValue(self.value + other, self.grad, self.hess_diag)

    __radd__ = __add__

    def __neg__(self):
        return JetValue(-self.value, -self.grad, -self.hess_diag)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, JetValue):
            f, g = self.value[:, None], other.value[:, None]
            return JetValue(
                self.value * other.value,
                self.grad * g + f * other.grad,
                self.hess_diag * g + 2.0 * self.grad * other.grad + f * other.hess_diag,
            )
        return JetValue(self.value * other, self.grad * other, self.hess_diag * other)

    __rmul__ = __mul__

    @property
    def laplacian(self) -> torch.Tensor:
        return self.hess_diag.sum(dim=1)


class MlpNetwork(nn.Module):
    """Fully connected tanh network with a linear output layer."""

    def __init__(self, widths: Sequence[int], seed: int):
        super().__init__()
        widths = [int(w) for w in widths]
        if len(widths) < 2:
            raise InvalidParameterError(f"A network needs at least input and output widths, got {widths}")
        if widths[0] not in (1, 2):
            raise DimensionMismatchError(f"Input width must be 1 or 2, got {widths[0]}")
        if widths[-1] != 1:
            raise DimensionMismatchError(f"Output width must be 1, got {widths[-1]}")
        if any(w < 1 for w in widths):
            raise InvalidParameterError(f"Layer widths must be positive, got {widths}")

        self.widths = widths
        self.seed = seed
        self.layers = nn.ModuleList(
            nn.Linear(fan_in, fan_out, dtype=DTYPE) for fan_in, fan_out in zip(widths[:-1], widths[1:])
        )
        self.reset_parameters(seed)

    @property
    def input_dim(self) -> int:
        return self.widths[0]

    def reset_parameters(self, seed: int) -> None:
        """Glorot-uniform weights and zero biases from a dedicated generator."""
        generator = torch.Generator().manual_seed(seed)
        with torch.no_grad():
            for layer in self.layers:
                fan_out, fan_in = layer.weight.shape
                bound = math.sqrt(6.0 / (fan_in + fan_out))
                layer.weight.uniform_(-bound, bound, generator=generator)
                layer.bias.zero_()

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        h = x
        for layer in self.layers[:-1]:
            h = torch.tanh(layer(h))
        return self.layers[-1](h).squeeze(-1)

    def jet(self, x: torch.Tensor) -> JetValue:
        n, d = x.shape
        h = x
        dh = torch.eye(d, dtype=DTYPE).expand(n, d, d)  # [point, unit, direction]
        d2h = torch.zeros(n, d, d, dtype=DTYPE)
        for layer in self.layers[:-1]:
            w = layer.weight
            z = layer(h)
            dz = torch.einsum("nik,ji->njk", dh, w)
            d2z = torch.einsum("nik,ji->njk", d2h, w)
            s, ds, d2s = tanh_derivatives(z)
            h = s
            dh = ds[..., None] * dz
            d2h = d2s[..., None] * dz * dz + ds[..., None] * d2z
        last = self.layers[-1]
        value = last(h).squeeze(-1)
        grad = torch.einsum("nik,ji->njk", dh, last.weight).squeeze(1)
        hess = torch.einsum("nik,ji->njk", d2h, last.weight).squeeze(1)
        return JetValue(value, grad, hess)


class AnalyticSurrogate(nn.Module):
    """Parameter-free stand-in for a network, used for exact-solution oracles.

    ``function`` maps an ``(N, d)`` tensor of points to a ``JetValue``.
    """

    def __init__(self, input_dim: int, function: Callable[[torch.Tensor], JetValue]):
        super().__init__()
        self.input_dim = input_dim
        self.function = function

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.function(x).value

    def jet(self, x: torch.Tensor) -> JetValue:
        return self.function(x)


JetModel = Union[MlpNetwork, AnalyticSurrogate]


@dataclass
class LossReport:
    total: float
    components: Dict[str, float]
    gradient: torch.Tensor
    parts: Dict[str, "LossReport"] = field(default_factory=dict)


def init_network(widths: Sequence[int], seed: int) -> MlpNetwork:
    net = MlpNetwork(widths, seed)
    logger.debug(f"Initialized network {net.widths} with {parameter_count(net)} parameters (seed {seed})")
    return net


def as_points(points: Points) -> torch.Tensor:
    x = torch.as_tensor(points, dtype=DTYPE)
    if x.ndim == 1:
        x = x[:, None]
    return x


def eval_with_input_derivs(model: JetModel, points: Points) -> JetValue:
    x = as_points(points)
    if x.shape[1] != model.input_dim:
        raise DimensionMismatchError(
            f"Points have dimension {x.shape[1]}, network expects {model.input_dim}"
        )
    return model.jet(x)


def predict(model: JetModel, points: Points) -> np.ndarray:
    x = as_points(points)
    if x.shape[1] != model.input_dim:
        raise DimensionMismatchError(
            f"Points have dimension {x.shape[1]}, network expects {model.input_dim}"
        )
    with torch.no_grad():
        return model(x).numpy().copy()


def parameter_count(model: nn.Module) -> int:
    return sum(p.numel() for p in model.parameters())


def flatten(model: nn.Module) -> torch.Tensor:
    params = list(model.parameters())
    if not params:
        return torch.zeros(0, dtype=DTYPE)
    return parameters_to_vector(params).detach().clone()


def unflatten(model: nn.Module, vector: Union[torch.Tensor, np.ndarray]) -> None:
    vector = torch.as_tensor(vector, dtype=DTYPE)
    if vector.numel() != parameter_count(model):
        raise DimensionMismatchError(
            f"Parameter vector of length {vector.numel()} for {parameter_count(model)} parameters"
        )
    with torch.no_grad():
        vector_to_parameters(vector, list(model.parameters()))


def loss_gradient(
    model: nn.Module,
    loss_fn: Callable[[nn.Module], Dict[str, torch.Tensor]],
    parts: Optional[Dict[str, "LossReport"]] = None,
) -> LossReport:
    """Evaluate named scalar loss components and the gradient of their sum."""
    components = loss_fn(model)
    names: List[str] = list(components)
    total = sum((components[name] for name in names), torch.zeros((), dtype=DTYPE))
    params = list(model.parameters())

    if params and total.requires_grad:
        grads = torch.autograd.grad(total, params, allow_unused=True)
        gradient = torch.cat([
            (g if g is not None else torch.zeros_like(p)).reshape(-1) for g, p in zip(grads, params)
        ])
    else:
        gradient = torch.zeros(parameter_count(model), dtype=DTYPE)

    values = {name: float(components[name].detach()) for name in names}
    return LossReport(
        total=float(sum(values.values())),
        components=values,
        gradient=gradient.detach(),
        parts=parts or {},
    )


def save_checkpoint(model: MlpNetwork, path: Union[str, Path]) -> Path:
    """Widths on the first line, then one parameter per line in flatten order."""
    path = Path(path)
    values = flatten(model).numpy()
    lines = [",".join(str(w) for w in model.widths)]
    lines.extend(f"{v:.17g}" for v in values)
    path.write_text("\n".join(lines) + "\n")
    logger.debug(f"Saved checkpoint with {values.size} parameters to {path}")
    return path


def load_checkpoint(path: Union[str, Path]) -> MlpNetwork:
    lines = Path(path).read_text().split()
    widths = [int(w) for w in lines[0].split(",")]
    net = MlpNetwork(widths, seed=0)
    unflatten(net, np.array([float(v) for v in lines[1:]]))
    return net
