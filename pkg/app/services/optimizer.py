"""Adam and the full-batch training loop.

The moment estimates live in a ``torch.optim.Adam`` instance. ``AdamState``
exposes them as flat vectors in ``flatten`` order.
"""
from dataclasses import dataclass, field
from typing import Callable, Dict, Iterable, List, Optional, Tuple
import logging
import math
import time

import torch
from torch import nn

from ..core.config import settings
from ..core.exceptions import DimensionMismatchError, NonFiniteGradientError, TrainingDivergedError
from .neural import DTYPE, LossReport, MlpNetwork, flatten

logger = logging.getLogger(__name__)


@dataclass
class AdamState:
    n_params: int
    lr: float = settings.DEFAULT_LEARNING_RATE
    beta1: float = 0.9
    beta2: float = 0.999
    eps_adam: float = 1e-8
    optimizer: Optional[torch.optim.Adam] = field(default=None, repr=False, compare=False)

    @classmethod
    def fresh(cls, n_params: int, **hyper) -> "AdamState":
        return cls(n_params, **hyper)

    def bind(self, params: Iterable[torch.Tensor]) -> torch.optim.Adam:
        """Create the optimizer over ``params`` on first use."""
        params = list(params)
        if self.optimizer is None:
            size = sum(p.numel() for p in params)
            if size != self.n_params:
                raise DimensionMismatchError(f"Adam state sized for {self.n_params} parameters, got {size}")
            self.optimizer = torch.optim.Adam(
                params, lr=self.lr, betas=(self.beta1, self.beta2), eps=self.eps_adam
            )
        elif len(params) != len(self.parameters) or any(a is not b for a, b in zip(params, self.parameters)):
            raise ValueError("Adam state is already bound to other parameters")
        return self.optimizer

    @property
    def parameters(self) -> List[torch.Tensor]:
        return list(self.optimizer.param_groups[0]["params"]) if self.optimizer is not None else []

    def _moment(self, key: str) -> torch.Tensor:
        if self.t == 0:
            return torch.zeros(self.n_params, dtype=DTYPE)
        return torch.cat([self.optimizer.state[p][key].reshape(-1) for p in self.parameters])

    @property
    def m(self) -> torch.Tensor:
        return self._moment("exp_avg")

    @property
    def v(self) -> torch.Tensor:
        return self._moment("exp_avg_sq")

    @property
    def t(self) -> int:
        if self.optimizer is None or not self.optimizer.state:
            return 0
        return int(self.optimizer.state[self.parameters[0]]["step"])


def _apply_gradient(state: AdamState, grads: torch.Tensor) -> None:
    if grads.numel() != state.n_params:
        raise DimensionMismatchError(f"Gradient of length {grads.numel()} for {state.n_params} parameters")
    if not torch.isfinite(grads).all():
        bad = int((~torch.isfinite(grads)).sum())
        raise NonFiniteGradientError(f"{bad} non-finite gradient entries at step {state.t + 1}")
    offset = 0
    for p in state.parameters:
        p.grad = grads[offset:offset + p.numel()].view_as(p).clone()
        offset += p.numel()
    state.optimizer.step()


def adam_step(state: AdamState, params: torch.Tensor, grads: torch.Tensor) -> Tuple[torch.Tensor, AdamState]:
    """One bias-corrected Adam update of a flat parameter vector.

    An unbound state is bound to a single vector parameter; a state bound to a
    network loads ``params`` into that network first.
    """
    if params.shape != grads.shape or params.numel() != state.n_params:
        raise DimensionMismatchError(
            f"Length mismatch: params {tuple(params.shape)}, grads {tuple(grads.shape)}, "
            f"state {state.n_params}"
        )
    if state.optimizer is None:
        state.bind([nn.Parameter(torch.zeros(state.n_params, dtype=DTYPE))])
    targets = state.parameters
    with torch.no_grad():
        offset = 0
        for p in targets:
            p.copy_(params[offset:offset + p.numel()].view_as(p))
            offset += p.numel()
    _apply_gradient(state, grads)
    return torch.cat([p.detach().reshape(-1) for p in targets]).clone(), state


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    loss_total: float
    components: Dict[str, float]
    seconds: float


@dataclass
class TrainingHistory:
    records: List[EpochRecord] = field(default_factory=list)

    def append(self, record: EpochRecord) -> None:
        if self.records and record.epoch <= self.records[-1].epoch:
            raise ValueError(f"Epoch {record.epoch} does not follow {self.records[-1].epoch}")
        self.records.append(record)

    @property
    def component_names(self) -> List[str]:
        return list(self.records[0].components) if self.records else []

    @property
    def final(self) -> Optional[EpochRecord]:
        return self.records[-1] if self.records else None

    def header(self) -> List[str]:
        return ["epoch", "loss_total", *self.component_names, "seconds"]

    def rows(self) -> List[List[float]]:
        names = self.component_names
        return [
            [r.epoch, r.loss_total, *(r.components[n] for n in names), r.seconds]
            for r in self.records
        ]


def train(
    net: MlpNetwork,
    loss_evaluator: Callable[[MlpNetwork], LossReport],
    epochs: int,
    adam: Optional[AdamState] = None,
    log_every: Optional[int] = None,
) -> Tuple[MlpNetwork, TrainingHistory, AdamState]:
    """Full-batch Adam for ``epochs`` steps; records epoch 1, every ``log_every`` and the last."""
    if epochs < 1:
        raise ValueError(f"epochs must be at least 1, got {epochs}")
    log_every = log_every or settings.DEFAULT_LOG_EVERY
    state = adam or AdamState.fresh(sum(p.numel() for p in net.parameters()))
    optimizer = state.bind(net.parameters())
    history = TrainingHistory()
    start = time.perf_counter()

    for epoch in range(1, epochs + 1):
        optimizer.zero_grad()
        report = loss_evaluator(net)
        if not math.isfinite(report.total):
            logger.error(f"Loss became non-finite at epoch {epoch}")
            raise TrainingDivergedError(f"Non-finite loss at epoch {epoch}", epoch=epoch)

        _apply_gradient(state, report.gradient)
        if not torch.isfinite(flatten(net)).all():
            raise TrainingDivergedError(f"Non-finite parameters after epoch {epoch}", epoch=epoch)

        if epoch == 1 or epoch % log_every == 0 or epoch == epochs:
            record = EpochRecord(epoch, report.total, dict(report.components), time.perf_counter() - start)
            history.append(record)
            logger.debug(f"epoch {epoch}: loss {report.total:.6e}")
            if epoch % (10 * log_every) == 0:
                logger.info(f"epoch {epoch}/{epochs}: loss {report.total:.6e}")

    logger.info(f"Training finished after {epochs} epochs, final loss {history.final.loss_total:.6e}")
    return net, history, state
