"""Parameter containers and the base class every trainable component derives from."""
from __future__ import annotations

from abc import ABC, abstractmethod
from typing import Any, Dict, Iterator, Tuple

import numpy as np

from engine.tensor import Tensor
from errors import SchemaError


class Parameter(Tensor):
    """A trainable leaf tensor; gradients are always tracked."""

    def __init__(self, data, name: str | None = None):
        super().__init__(np.array(data, dtype=np.float64), requires_grad=True, name=name)


def gaussian(rng: np.random.Generator, shape: Tuple[int, ...], std: float = 0.02) -> Parameter:
    return Parameter(rng.normal(0.0, std, size=shape))


def zeros(shape: Tuple[int, ...]) -> Parameter:
    return Parameter(np.zeros(shape))


def ones(shape: Tuple[int, ...]) -> Parameter:
    return Parameter(np.ones(shape))


class Module(ABC):
    """
    Abstract base for trainable components.

    Parameters and child modules are discovered from instance attributes in
    assignment order, which keeps ``named_parameters`` stable across runs.
    Lists of modules are walked element by element.
    """

    training: bool = True

    @abstractmethod
    def forward(self, *args, **kwargs) -> Any:
        """Run the component; subclasses define the signature."""

    def __call__(self, *args, **kwargs) -> Any:
        return self.forward(*args, **kwargs)

    def named_parameters(self, prefix: str = "") -> Iterator[Tuple[str, Parameter]]:
        for attr, value in vars(self).items():
            full = f"{prefix}{attr}"
            if isinstance(value, Parameter):
                value.name = full
                yield full, value
            elif isinstance(value, Module):
                yield from value.named_parameters(f"{full}.")
            elif isinstance(value, (list, tuple)):
                for i, item in enumerate(value):
                    if isinstance(item, Module):
                        yield from item.named_parameters(f"{full}.{i}.")

    def parameters(self) -> list[Parameter]:
        return [p for _, p in self.named_parameters()]

    def modules(self) -> Iterator["Module"]:
        yield self
        for value in vars(self).values():
            if isinstance(value, Module):
                yield from value.modules()
            elif isinstance(value, (list, tuple)):
                for item in value:
                    if isinstance(item, Module):
                        yield from item.modules()

    def train(self, mode: bool = True) -> "Module":
        for module in self.modules():
            module.training = mode
        return self

    def eval(self) -> "Module":
        return self.train(False)

    def zero_grad(self) -> None:
        for p in self.parameters():
            p.zero_grad()

    def state_dict(self) -> Dict[str, np.ndarray]:
        return {name: p.data.copy() for name, p in self.named_parameters()}

    def load_state_dict(self, state: Dict[str, np.ndarray]) -> None:
        """
        Copy arrays into parameters in place.

        Raises:
            SchemaError: If names or shapes disagree with this module.
        """
        own = dict(self.named_parameters())
        missing = sorted(set(own) - set(state))
        unexpected = sorted(set(state) - set(own))
        if missing or unexpected:
            raise SchemaError(f"parameter mismatch: missing={missing} unexpected={unexpected}")
        for name, param in own.items():
            value = np.asarray(state[name], dtype=np.float64)
            if value.shape != param.shape:
                raise SchemaError(f"parameter {name}: shape {value.shape} != {param.shape}")
            param.data[...] = value

    def num_parameters(self) -> int:
        return sum(p.size for p in self.parameters())
