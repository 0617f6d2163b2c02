"""Central finite-difference gradient checks against the tape."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Literal, Optional, Sequence

import numpy as np

from engine.tensor import Tensor, backward, get_tape, no_grad


@dataclass
class GradCheckResult:
    max_rel_error: float
    max_abs_error: float
    checked: int
    worst: str

    def passed(self, rel_tol: float) -> bool:
        return self.max_rel_error < rel_tol


def check_gradients(
    loss_fn: Callable[[], Tensor],
    tensors: Sequence[Tensor],
    h: float = 1e-5,
    max_entries: Optional[int] = None,
    rng: Optional[np.random.Generator] = None,
    select: Literal["random", "largest"] = "random",
) -> GradCheckResult:
    """
    Compare tape gradients with central finite differences.

    The relative error of an entry is ``|a - n| / max(|a| + |n|, 1e-12)``;
    entries whose absolute error is below 1e-9 are counted as exact, since
    their relative error is dominated by rounding.

    Args:
        loss_fn: Builds a scalar loss from the current tensor values.
        tensors: Leaf tensors (requires_grad) to check.
        h: Finite-difference step.
        max_entries: Check at most this many entries per tensor.
        rng: Generator for entry sampling.
        select: With ``max_entries``, sample entries at random or take the ones
            with the largest analytic gradient.

    Returns:
        GradCheckResult with the worst errors seen.
    """
    rng = rng or np.random.default_rng(0)
    get_tape().clear()
    for t in tensors:
        t.grad = None
    loss = loss_fn()
    backward(loss)
    analytic = [np.zeros_like(t.data) if t.grad is None else t.grad.copy() for t in tensors]

    worst_rel, worst_abs, checked, worst = 0.0, 0.0, 0, ""
    for k, t in enumerate(tensors):
        flat = t.data.reshape(-1)
        indices = np.arange(flat.size)
        if max_entries is not None and flat.size > max_entries:
            if select == "largest":
                magnitude = np.abs(analytic[k].reshape(-1))
                indices = np.sort(np.argsort(-magnitude, kind="stable")[:max_entries])
            else:
                indices = np.sort(rng.choice(flat.size, size=max_entries, replace=False))
        for i in indices:
            original = flat[i]
            with no_grad():
                flat[i] = original + h
                plus = loss_fn().item()
                flat[i] = original - h
                minus = loss_fn().item()
            flat[i] = original
            numeric = (plus - minus) / (2.0 * h)
            a = analytic[k].reshape(-1)[i]
            abs_err = abs(a - numeric)
            rel_err = 0.0 if abs_err < 1e-9 else abs_err / max(abs(a) + abs(numeric), 1e-12)
            checked += 1
            if rel_err > worst_rel:
                worst_rel, worst = rel_err, f"{t.name or f'tensor{k}'}[{i}] analytic={a:.6g} numeric={numeric:.6g}"
            worst_abs = max(worst_abs, abs_err)
    return GradCheckResult(worst_rel, worst_abs, checked, worst)
