"""
Minimum-cost bipartite matching between prediction slots and phi-padded ground truth.

``hungarian_match`` is the O(n^3) Kuhn-Munkres algorithm with row/column
potentials. Columns are scanned in index order and the first minimum wins,
so ties always resolve the same way.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import List, Sequence, Union

import numpy as np

from engine.tensor import Tensor
from errors import ContractError

ArrayOrTensor = Union[np.ndarray, Tensor]


@dataclass(frozen=True, eq=False)
class CostMatrix:
    """
    ``values[i, j] = -1{targets[j] != phi} * probs[i, targets[j]]``.

    ``targets`` is the frame's ground truth in ascending class order followed
    by phi padding.
    """
    values: np.ndarray
    targets: np.ndarray
    phi_index: int


@dataclass(frozen=True, eq=False)
class Assignment:
    """``columns[i]`` is the ground-truth slot matched to prediction row ``i``."""
    columns: np.ndarray
    cost: float


@dataclass(frozen=True, eq=False)
class SequenceAssignment:
    """
    Matching for all ``Q * T`` slots of one clip.

    ``targets[r]`` is the class slot ``r`` is trained towards (phi when unmatched).
    """
    frames: List[Assignment]
    targets: np.ndarray
    total_cost: float
    queries_per_frame: int
    phi_index: int

    @property
    def matched(self) -> np.ndarray:
        """Boolean per slot: True where the slot was matched to a real class."""
        return self.targets != self.phi_index


def _as_array(probs: ArrayOrTensor) -> np.ndarray:
    return probs.data if isinstance(probs, Tensor) else np.asarray(probs, dtype=np.float64)


def build_cost_matrix(probs: ArrayOrTensor, gt_frame: Sequence[int], phi_index: int) -> CostMatrix:
    """
    Build the ``Q x Q`` matching cost for one frame.

    Args:
        probs: ``[Q, classes+1]`` softmax probabilities.
        gt_frame: Ground-truth classes of the frame, any order.
        phi_index: Index of the no-class column.

    Raises:
        ContractError: If the frame holds more classes than there are slots.
    """
    probs = _as_array(probs)
    num_slots = probs.shape[0]
    labels = sorted(int(c) for c in gt_frame)
    if len(labels) > num_slots:
        raise ContractError(f"{len(labels)} ground-truth classes exceed {num_slots} query slots")
    targets = np.array(labels + [phi_index] * (num_slots - len(labels)), dtype=np.int64)
    values = np.where(targets[None, :] != phi_index, -probs[:, targets], 0.0)
    return CostMatrix(values, targets, phi_index)


def assignment_cost(cost: np.ndarray, columns: Sequence[int]) -> float:
    """Sum of ``cost[i, columns[i]]`` taken in ascending row order."""
    total = 0.0
    for i, j in enumerate(columns):
        total += float(cost[i, j])
    return total


def hungarian_match(cost: Union[CostMatrix, np.ndarray]) -> Assignment:
    """
    Solve the square assignment problem exactly.

    Raises:
        ContractError: If the matrix is not square or has a non-finite entry.
    """
    c = cost.values if isinstance(cost, CostMatrix) else np.asarray(cost, dtype=np.float64)
    if c.ndim != 2 or c.shape[0] != c.shape[1]:
        raise ContractError(f"cost matrix must be square, got shape {c.shape}")
    if not np.all(np.isfinite(c)):
        raise ContractError("cost matrix contains non-finite entries")
    n = c.shape[0]
    if n == 0:
        return Assignment(np.zeros(0, dtype=np.int64), 0.0)

    # 1-based potentials; column 0 is the virtual start column.
    u = np.zeros(n + 1)
    v = np.zeros(n + 1)
    owner = np.zeros(n + 1, dtype=np.int64)
    way = np.zeros(n + 1, dtype=np.int64)
    for row in range(1, n + 1):
        owner[0] = row
        j0 = 0
        minv = np.full(n + 1, np.inf)
        used = np.zeros(n + 1, dtype=bool)
        while True:
            used[j0] = True
            i0 = owner[j0]
            free = ~used[1:]
            reduced = c[i0 - 1] - u[i0] - v[1:]
            better = free & (reduced < minv[1:])
            minv[1:][better] = reduced[better]
            way[1:][better] = j0
            candidates = np.where(free, minv[1:], np.inf)
            j1 = int(np.argmin(candidates)) + 1
            delta = candidates[j1 - 1]
            u[owner[used]] += delta
            v[used] -= delta
            minv[~used] -= delta
            j0 = j1
            if owner[j0] == 0:
                break
        while j0:
            j1 = way[j0]
            owner[j0] = owner[j1]
            j0 = j1

    columns = np.zeros(n, dtype=np.int64)
    for j in range(1, n + 1):
        columns[owner[j] - 1] = j - 1
    return Assignment(columns, assignment_cost(c, columns))


def match_sequence(probs: ArrayOrTensor, gt: Sequence[Sequence[int]], queries_per_frame: int,
                   phi_index: int) -> SequenceAssignment:
    """
    Match each frame's ``Q`` slots to that frame's ground truth independently.

    Row ``t * Q + q`` belongs to frame ``t``; frames are reduced in order.
    """
    probs = _as_array(probs)
    q = queries_per_frame
    if probs.shape[0] != q * len(gt):
        raise ContractError(f"{probs.shape[0]} prediction rows for {len(gt)} frames of {q} slots")
    frames: List[Assignment] = []
    targets = np.empty(probs.shape[0], dtype=np.int64)
    total = 0.0
    for t, labels in enumerate(gt):
        matrix = build_cost_matrix(probs[t * q:(t + 1) * q], labels, phi_index)
        assignment = hungarian_match(matrix)
        frames.append(assignment)
        targets[t * q:(t + 1) * q] = matrix.targets[assignment.columns]
        total += assignment.cost
    return SequenceAssignment(frames, targets, total, q, phi_index)


def match_video(probs: ArrayOrTensor, gt: Sequence[Sequence[int]], queries_per_frame: int,
                phi_index: int) -> SequenceAssignment:
    """
    One global matching over all ``Q * T`` slots and the concatenated padded ground truth.

    Slots may take labels from any frame; this is the video-level baseline.
    """
    probs = _as_array(probs)
    q = queries_per_frame
    if probs.shape[0] != q * len(gt):
        raise ContractError(f"{probs.shape[0]} prediction rows for {len(gt)} frames of {q} slots")
    padded = []
    for labels in gt:
        if len(labels) > q:
            raise ContractError(f"{len(labels)} ground-truth classes exceed {q} query slots")
        padded += sorted(int(c) for c in labels) + [phi_index] * (q - len(labels))
    targets_pool = np.array(padded, dtype=np.int64)
    values = np.where(targets_pool[None, :] != phi_index, -probs[:, targets_pool], 0.0)
    assignment = hungarian_match(values)
    return SequenceAssignment([assignment], targets_pool[assignment.columns], assignment.cost, q, phi_index)
