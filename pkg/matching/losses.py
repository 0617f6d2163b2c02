"""Hungarian set-prediction losses and the combined objective."""
from __future__ import annotations

from typing import Optional, Union

import numpy as np

from engine.functional import cross_entropy
from engine.tensor import Tensor
from errors import ContractError
from matching.hungarian import SequenceAssignment

Scalar = Union[Tensor, float, None]


def hungarian_loss(logits: Tensor, assignment: SequenceAssignment, phi_weight: float = 1.0) -> Tensor:
    """
    Summed cross-entropy of every slot against its matched class.

    Unmatched slots target phi and are scaled by ``phi_weight``. The
    assignment is a constant; no gradient flows through the matching.

    Raises:
        ContractError: If the assignment covers a different number of slots.
    """
    targets = assignment.targets
    if logits.ndim != 2 or logits.shape[0] != targets.shape[0]:
        raise ContractError(f"assignment has {targets.shape[0]} slots, logits are {logits.shape}")
    weight: Optional[np.ndarray] = None
    if phi_weight != 1.0:
        weight = np.where(targets == assignment.phi_index, phi_weight, 1.0)
    return cross_entropy(logits, targets, weight)


def total_loss(l_act: Scalar, l_rel: Scalar, l_vqa: Scalar) -> Tensor:
    """``L_act + L_rel + L_vqa`` with unit weights; ``None`` terms are left out."""
    terms = [term for term in (l_act, l_rel, l_vqa) if term is not None]
    if not terms:
        return Tensor(0.0)
    total = terms[0] if isinstance(terms[0], Tensor) else Tensor(float(terms[0]))
    for term in terms[1:]:
        total = total + term
    return total
