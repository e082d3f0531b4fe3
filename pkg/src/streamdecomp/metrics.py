"""Exact quality metrics, computed by a dedicated verification pass.

None of the partitioners pay metric overhead while streaming; every number
reported here comes from an independent pass over the input.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

from .partition import UNASSIGNED


@dataclass
class QualityReport:
    edge_cut: Optional[int] = None
    cut_net: Optional[int] = None
    connectivity: Optional[int] = None
    imbalance: float = 0.0
    comm_cost: Optional[int] = None

    def as_dict(self) -> dict:
        return {
            "edge_cut": self.edge_cut,
            "cut_net": self.cut_net,
            "connectivity": self.connectivity,
            "imbalance": self.imbalance,
            "comm_cost": self.comm_cost,
        }


def edge_cut(graph_stream: Iterable, assignment: Sequence[int]) -> int:
    """Total weight of edges with endpoints in distinct blocks.

    Each undirected edge appears twice in the stream (once per endpoint), so
    the doubled sum is halved at the end.
    """
    doubled = 0
    for record in graph_stream:
        bu = assignment[record.id]
        if bu == UNASSIGNED:
            raise ValueError(f"node {record.id} unassigned")
        for v, w in record.neighbors:
            if assignment[v] == UNASSIGNED:
                raise ValueError(f"node {v} unassigned")
            if assignment[v] != bu:
                doubled += w
    if doubled % 2 != 0:
        raise AssertionError("asymmetric adjacency: doubled cut weight is odd")
    return doubled // 2


def cut_net_and_connectivity(hyper_stream: Iterable,
                             assignment: Sequence[int],
                             num_nets: int | None = None) -> tuple[int, int]:
    """(cut-net, lambda-1 connectivity) computed from exact per-net block sets."""
    blocks_of_net: dict[int, set[int]] = {}
    net_weight: dict[int, int] = {}
    for record in hyper_stream:
        block = assignment[record.id]
        if block == UNASSIGNED:
            raise ValueError(f"node {record.id} unassigned")
        for e, w in record.incident_nets:
            blocks_of_net.setdefault(e, set()).add(block)
            net_weight[e] = w
    cut = 0
    connectivity = 0
    for e, blocks in blocks_of_net.items():
        lam = len(blocks)
        if lam >= 2:
            cut += net_weight[e]
            connectivity += (lam - 1) * net_weight[e]
    return cut, connectivity


def comm_cost(graph_stream: Iterable, assignment: Sequence[int],
              hierarchy) -> int:
    """Process-mapping objective: sum of edge weight times PE distance.

    Each undirected edge is counted once.  ``hierarchy`` must offer
    ``distance(a, b)`` and a block count ``k`` matching the partition.
    """
    total = 0
    for record in graph_stream:
        bu = assignment[record.id]
        if bu == UNASSIGNED:
            raise ValueError(f"node {record.id} unassigned")
        for v, w in record.neighbors:
            if v < record.id:
                continue  # count each undirected edge at its lower endpoint
            bv = assignment[v]
            if bv == UNASSIGNED:
                raise ValueError(f"node {v} unassigned")
            if bv != bu:
                total += w * hierarchy.distance(bu, bv)
    return total


def imbalance(block_weights: Sequence[int], k: int) -> float:
    """max_i c(V_i) * k / c(V) - 1."""
    total = sum(block_weights)
    if total == 0:
        return 0.0
    return max(block_weights) * k / total - 1.0
