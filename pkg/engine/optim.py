"""Adam with linear warmup and linear decay (BERT-style recipe)."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Iterable, Literal, Optional

import numpy as np

from engine.module import Parameter
from errors import ConfigError, ContractError


@dataclass
class LearningRateSchedule:
    """
    Linear warmup over ``warmup_fraction`` of ``total_steps``, then linear decay.

    Steps are 1-based: the first update uses ``rate(1)``.
    """
    base_lr: float
    total_steps: int
    warmup_fraction: float = 0.1
    kind: Literal["linear", "constant"] = "linear"

    def __post_init__(self) -> None:
        if self.base_lr < 0:
            raise ConfigError(f"learning rate must be non-negative, got {self.base_lr}")
        if not 0.0 <= self.warmup_fraction < 1.0:
            raise ConfigError(f"warmup_fraction must be in [0, 1), got {self.warmup_fraction}")
        if self.total_steps < 1:
            raise ConfigError(f"total_steps must be >= 1, got {self.total_steps}")

    @property
    def warmup_steps(self) -> int:
        return int(round(self.warmup_fraction * self.total_steps))

    def rate(self, step: int) -> float:
        warmup = self.warmup_steps
        if warmup > 0 and step <= warmup:
            return self.base_lr * step / warmup
        if self.kind == "constant":
            return self.base_lr
        remaining = max(self.total_steps - step + 1, 0)
        return self.base_lr * remaining / max(self.total_steps - warmup, 1)


@dataclass
class OptimizerState:
    """Per-parameter Adam moments plus the step counter."""
    first_moment: Dict[str, np.ndarray] = field(default_factory=dict)
    second_moment: Dict[str, np.ndarray] = field(default_factory=dict)
    step: int = 0


class Adam:
    """
    Adam with bias correction, optional decoupled weight decay and global-norm clipping.

    Args:
        params: Named parameters, usually ``module.named_parameters()``.
        schedule: Learning-rate schedule.
        betas: Exponential decay rates for the two moments.
        eps: Denominator fuzz.
        weight_decay: Decoupled decay coefficient (0 disables).
        clip_norm: Global gradient-norm ceiling (None disables).
    """

    def __init__(
        self,
        params: Iterable[tuple[str, Parameter]],
        schedule: LearningRateSchedule,
        betas: tuple[float, float] = (0.9, 0.999),
        eps: float = 1e-8,
        weight_decay: float = 0.0,
        clip_norm: Optional[float] = None,
    ):
        self.params: Dict[str, Parameter] = dict(params)
        self.schedule = schedule
        self.beta1, self.beta2 = betas
        self.eps = eps
        self.weight_decay = weight_decay
        self.clip_norm = clip_norm
        self.state = OptimizerState(
            first_moment={n: np.zeros_like(p.data) for n, p in self.params.items()},
            second_moment={n: np.zeros_like(p.data) for n, p in self.params.items()},
        )

    def zero_grad(self) -> None:
        for p in self.params.values():
            p.zero_grad()

    @property
    def current_lr(self) -> float:
        return self.schedule.rate(self.state.step + 1)

    def _clip_factor(self) -> float:
        if self.clip_norm is None:
            return 1.0
        total = np.sqrt(sum(float((p.grad ** 2).sum()) for p in self.params.values()))
        return 1.0 if total <= self.clip_norm else self.clip_norm / (total + 1e-12)

    def step(self) -> float:
        """
        Apply one update and zero all gradients.

        Returns:
            The learning rate used for this step.

        Raises:
            ContractError: If any parameter has no gradient.
        """
        for name, p in self.params.items():
            if p.grad is None:
                raise ContractError(f"parameter {name!r} has no gradient")
        self.state.step += 1
        t = self.state.step
        lr = self.schedule.rate(t)
        scale = self._clip_factor()
        for name, p in self.params.items():
            g = p.grad * scale
            m = self.state.first_moment[name]
            v = self.state.second_moment[name]
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            m_hat = m / (1.0 - self.beta1 ** t)
            v_hat = v / (1.0 - self.beta2 ** t)
            p.data -= lr * m_hat / (np.sqrt(v_hat) + self.eps)
            if self.weight_decay:
                p.data -= lr * self.weight_decay * p.data
        self.zero_grad()
        return lr
