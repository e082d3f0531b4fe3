"""Partition state shared by all streaming algorithms."""

from __future__ import annotations

import math
from fractions import Fraction

UNASSIGNED = -1


def compute_lmax(total_weight: int, k: int, epsilon: float) -> int:
    """Per-block capacity ceil((1+eps) * total_weight / k).

    Evaluated with exact rational arithmetic so that capacities never drift
    by one when the product happens to be an integer.
    """
    if total_weight < 1 or k < 1 or epsilon < 0:
        raise ValueError("need total_weight >= 1, k >= 1, epsilon >= 0")
    eps = Fraction(str(epsilon))
    return math.ceil((1 + eps) * total_weight / k)


class PartitionState:
    """Assignment array plus per-block weights; the source of truth for balance.

    ``block_count`` tracks the number of nodes per block (the LDG tie-break
    wants node counts, not weights).  ``violations`` counts nodes that had to
    be placed in a full block because no feasible block existed; runs never
    abort on capacity exhaustion, they flag it.
    """

    def __init__(self, n: int, k: int, epsilon: float, total_weight: int):
        if k < 1:
            raise ValueError("k must be >= 1")
        self.n = n
        self.k = k
        self.epsilon = epsilon
        self.total_weight = total_weight
        self.l_max = compute_lmax(total_weight, k, epsilon)
        self.assignment = [UNASSIGNED] * n
        self.block_weight = [0] * k
        self.block_count = [0] * k
        self.violations = 0
        self.pass_stats: list = []

    def assign(self, node: int, block: int, weight: int = 1) -> None:
        if self.assignment[node] != UNASSIGNED:
            raise ValueError(f"node {node} already assigned")
        self.assignment[node] = block
        self.block_weight[block] += weight
        self.block_count[block] += 1

    def unassign(self, node: int, weight: int = 1) -> int:
        """Remove a node from its block (restreaming) and return the old block."""
        block = self.assignment[node]
        if block == UNASSIGNED:
            raise ValueError(f"node {node} not assigned")
        self.assignment[node] = UNASSIGNED
        self.block_weight[block] -= weight
        self.block_count[block] -= 1
        return block

    def max_block_weight(self) -> int:
        return max(self.block_weight)

    def is_balanced(self) -> bool:
        return self.max_block_weight() <= self.l_max

    def check_consistency(self, node_weights) -> None:
        """Recompute block weights from scratch and compare."""
        recomputed = [0] * self.k
        counts = [0] * self.k
        for node, block in enumerate(self.assignment):
            if block == UNASSIGNED:
                continue
            recomputed[block] += node_weights[node]
            counts[block] += 1
        if recomputed != self.block_weight or counts != self.block_count:
            raise AssertionError("block weights inconsistent with assignments")
