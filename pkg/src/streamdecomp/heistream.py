"""Buffered streaming graph partitioning with a multilevel scheme per batch.

Each batch of delta nodes becomes a small model graph: the batch subgraph,
one fixed artificial node per block representing everything already assigned,
and (extended model) future neighbors contracted into random in-batch hosts
with their edge weights halved.  The model is coarsened by size-constrained
label propagation, the coarsest level is partitioned by the weighted Fennel
argmax over all k blocks, and label propagation driven by the same Fennel
gain refines every level on the way back up.  Restream passes rebuild the
model around the previous assignment (no ghosts, no initial partitioning,
cut edges barred from contraction) and let refinement improve it.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Iterator, Optional

from .onepass import FennelParams, fennel_alpha, fennel_gain
from .partition import UNASSIGNED, PartitionState


@dataclass
class HeiStreamConfig:
    k: int = 2
    delta: int = 32768
    model: str = "extended"         # basic | extended
    coarsen_rounds: int = 5         # label propagation rounds per level
    localsearch_rounds: int = 5
    x: int = 4                      # coarsest-size parameter
    passes: int = 1
    epsilon: float = 0.03
    gamma: float = 1.5
    alpha: Optional[float] = None
    seed: int = 0

    def __post_init__(self):
        if self.delta < 1 or self.x < 1 or self.passes < 1:
            raise ValueError("delta, x and passes must be >= 1")
        if self.model not in ("basic", "extended"):
            raise ValueError(f"unknown model {self.model!r}")


class BatchModel:
    """Model graph of one batch: batch nodes first, artificial nodes last.

    Batch node i maps to global id ``start + i``; artificial node
    ``num_batch + j`` stands for block j and is fixed.  Adjacency is stored
    on batch nodes only (artificial nodes never move, so their own lists are
    never read).  Ghost contraction may leave fractional edge weights; they
    exist only inside the model.
    """

    def __init__(self, num_batch: int, num_art: int, start: int):
        self.num_batch = num_batch
        self.num_art = num_art
        self.start = start
        n = num_batch + num_art
        self.weight: list[float] = [0] * n        # scoring weight (ghost-inflated)
        self.true_weight: list[int] = [0] * n     # committed weight (capacity)
        self.adj: list[list[tuple[int, float]]] = [[] for _ in range(num_batch)]
        self.blocks: Optional[list[int]] = None   # preassignment (restream)
        self.ghost_inflation = 0                  # total contracted ghost weight

    @property
    def size(self) -> int:
        return self.num_batch + self.num_art

    def art_block(self, node: int) -> int:
        return node - self.num_batch


def load_batch(stream_iter: Iterator, delta: int) -> Optional[list]:
    """Next up-to-delta node records, or None when the stream is exhausted."""
    batch = []
    for record in stream_iter:
        batch.append(record)
        if len(batch) == delta:
            break
    return batch or None


def build_model(batch: list, state: PartitionState, config: HeiStreamConfig,
                rng: random.Random, restream: bool = False) -> BatchModel:
    """Assemble the batch model; see the module docstring for the shapes."""
    start = batch[0].id
    end = batch[-1].id + 1
    nb = len(batch)
    assignment = state.assignment

    outside = start > 0 or (restream and state.n > nb)
    num_art = state.k if outside else 0
    model = BatchModel(nb, num_art, start)

    edges: list[dict[int, float]] = [dict() for _ in range(nb)]
    ghosts: dict[int, list[tuple[int, int]]] = {}
    for local, record in enumerate(batch):
        model.weight[local] = record.weight
        model.true_weight[local] = record.weight
        for v, w in record.neighbors:
            if start <= v < end:
                edges[local][v - start] = edges[local].get(v - start, 0) + w
            elif restream or v < start:
                block = assignment[v]
                if block == UNASSIGNED:
                    raise AssertionError("outside neighbor unassigned in restream")
                art = nb + block
                edges[local][art] = edges[local].get(art, 0) + w
            elif config.model == "extended":
                ghosts.setdefault(v, []).append((local, w))
            # basic model: edges to future nodes are dropped

    if ghosts:
        for ghost_neighbors in ghosts.values():
            host = ghost_neighbors[rng.randrange(len(ghost_neighbors))][0]
            model.weight[host] += 1   # streamed weight of a future node is unknown
            model.ghost_inflation += 1
            for local, w in ghost_neighbors:
                if local == host:
                    continue
                half = w / 2
                edges[local][host] = edges[local].get(host, 0) + half
                edges[host][local] = edges[host].get(local, 0) + half

    for j in range(num_art):
        model.weight[nb + j] = state.block_weight[j]
        model.true_weight[nb + j] = state.block_weight[j]
    if restream:
        # Artificial nodes represent every node outside this batch.
        if num_art:
            for local, record in enumerate(batch):
                model.weight[nb + assignment[record.id]] -= record.weight
                model.true_weight[nb + assignment[record.id]] -= record.weight
        model.blocks = [assignment[r.id] for r in batch]

    model.adj = [sorted(d.items()) for d in edges]
    return model


class _Level:
    """One coarsening level: a contracted model plus the map down to it."""

    def __init__(self, model: BatchModel, cluster_map: list[int]):
        self.model = model
        self.cluster_map = cluster_map


def _propagate_labels(model: BatchModel, cap: int, rounds: int,
                      rng: random.Random,
                      restrict_blocks: Optional[list[int]]) -> list[int]:
    """Size-constrained label propagation clustering of the batch nodes.

    Artificial nodes and their edges are invisible here.  When
    ``restrict_blocks`` is given (restreaming), nodes only join clusters
    inside their own block, which keeps every cut edge uncontracted.
    """
    nb = model.num_batch
    cluster = list(range(nb))
    cluster_weight = [model.true_weight[v] for v in range(nb)]
    order = list(range(nb))
    for _ in range(rounds):
        rng.shuffle(order)
        moved = False
        for v in order:
            own = cluster[v]
            conn: dict[int, float] = {}
            for u, w in model.adj[v]:
                if u >= nb:
                    continue
                if restrict_blocks is not None and \
                        restrict_blocks[u] != restrict_blocks[v]:
                    continue
                conn[cluster[u]] = conn.get(cluster[u], 0.0) + w
            if not conn:
                continue
            wv = model.true_weight[v]
            own_conn = conn.get(own, 0.0)
            best_conn = own_conn
            candidates: list[int] = []
            for c, strength in conn.items():
                if c == own or cluster_weight[c] + wv > cap:
                    continue
                if strength > best_conn:
                    best_conn = strength
                    candidates = [c]
                elif strength == best_conn:
                    candidates.append(c)
            if not candidates:
                continue
            if best_conn == own_conn and rng.random() >= 0.5:
                continue  # zero-gain move declined
            target = candidates[0] if len(candidates) == 1 else rng.choice(candidates)
            cluster_weight[own] -= wv
            cluster_weight[target] += wv
            cluster[v] = target
            moved = True
        if not moved:
            break
    return cluster


def _contract(model: BatchModel, cluster: list[int]) -> tuple[BatchModel, list[int]]:
    """Contract a clustering; artificial nodes carry over one-to-one."""
    nb = model.num_batch
    remap: dict[int, int] = {}
    for v in range(nb):   # ascending order keeps ids deterministic
        c = cluster[v]
        if c not in remap:
            remap[c] = len(remap)
    coarse_nb = len(remap)
    coarse = BatchModel(coarse_nb, model.num_art, model.start)
    coarse.ghost_inflation = model.ghost_inflation
    cluster_map = [remap[cluster[v]] for v in range(nb)]

    for v in range(nb):
        coarse.weight[cluster_map[v]] += model.weight[v]
        coarse.true_weight[cluster_map[v]] += model.true_weight[v]
    for j in range(model.num_art):
        coarse.weight[coarse_nb + j] = model.weight[nb + j]
        coarse.true_weight[coarse_nb + j] = model.true_weight[nb + j]

    edges: list[dict[int, float]] = [dict() for _ in range(coarse_nb)]
    for v in range(nb):
        cv = cluster_map[v]
        for u, w in model.adj[v]:
            cu = cluster_map[u] if u < nb else coarse_nb + model.art_block(u)
            if cu == cv:
                continue
            edges[cv][cu] = edges[cv].get(cu, 0) + w
    coarse.adj = [sorted(d.items()) for d in edges]

    if model.blocks is not None:
        coarse.blocks = [0] * coarse_nb
        for v in range(nb):
            coarse.blocks[cluster_map[v]] = model.blocks[v]
    return coarse, cluster_map


def cluster_cap(state: PartitionState) -> int:
    """Largest cluster weight that can never strand during greedy assignment.

    The lightest block always holds at most (W - s)/k, so an item of weight
    s <= (k*L_max - W)/(k-1) finds a feasible block at any point of the
    stream.  Capping clusters here keeps the hard balance constraint
    satisfiable all the way through initial partitioning and refinement.
    """
    return max(1, (state.k * state.l_max - state.total_weight)
               // max(state.k - 1, 1))


def coarsen(model: BatchModel, config: HeiStreamConfig,
            state: PartitionState, rng: random.Random,
            cap: Optional[int] = None) -> list[_Level]:
    """Cluster and contract until the model is below max(|B|/(2xk), xk)."""
    if cap is None:
        cap = cluster_cap(state)
    threshold = max(model.size // (2 * config.x * config.k),
                    config.x * config.k)
    levels: list[_Level] = []
    current = model
    while current.size > threshold:
        cluster = _propagate_labels(current, cap, config.coarsen_rounds,
                                    rng, current.blocks)
        coarse, cluster_map = _contract(current, cluster)
        if coarse.num_batch >= current.num_batch:
            break   # no shrink, stop
        levels.append(_Level(current, cluster_map))
        current = coarse
    levels.append(_Level(current, list(range(current.num_batch))))
    return levels


def initial_partition(model: BatchModel, state: PartitionState,
                      params: FennelParams) -> list[int]:
    """Full-k generalized Fennel argmax on the coarsest model.

    Block weights start from the artificial weights (the true committed block
    weights); nodes are visited in ascending id order; ties break to the
    lightest block, then the lowest index.  Scores see the ghost-inflated
    weights, but the hard capacity check only counts weight that will be
    committed, so ghosts can never unbalance the real partition.
    """
    nb = model.num_batch
    bw = [0.0] * state.k
    true_bw = [0] * state.k
    for j in range(model.num_art):
        bw[model.art_block(nb + j)] = model.weight[nb + j]
        true_bw[model.art_block(nb + j)] = model.true_weight[nb + j]
    blocks = [UNASSIGNED] * nb
    for v in range(nb):
        gains: dict[int, float] = {}
        for u, w in model.adj[v]:
            b = blocks[u] if u < nb else model.art_block(u)
            if b != UNASSIGNED:
                gains[b] = gains.get(b, 0.0) + w
        wv = model.weight[v]
        tv = model.true_weight[v]
        best = None
        best_key = None
        for i in range(state.k):
            if true_bw[i] + tv > state.l_max:
                continue
            key = (fennel_gain(gains.get(i, 0.0), wv, bw[i], params),
                   -bw[i], -i)
            if best_key is None or key > best_key:
                best, best_key = i, key
        if best is None:
            state.violations += 1
            best = min(range(state.k), key=lambda i: (true_bw[i], i))
        blocks[v] = best
        bw[best] += wv
        true_bw[best] += tv
    return blocks


def _refine_level(model: BatchModel, blocks: list[int], bw: list[float],
                  true_bw: list[int], state: PartitionState,
                  params: FennelParams, rounds: int,
                  rng: random.Random) -> float:
    """Fennel-gain label propagation over adjacent blocks; artificial fixed.

    Returns the total applied gain (each accepted move contributes its score
    improvement; zero-gain moves are taken with probability one half).
    """
    nb = model.num_batch
    order = list(range(nb))
    total_gain = 0.0
    for _ in range(rounds):
        rng.shuffle(order)
        moved = False
        for v in order:
            own = blocks[v]
            wv = model.weight[v]
            tv = model.true_weight[v]
            gains: dict[int, float] = {}
            for u, w in model.adj[v]:
                b = blocks[u] if u < nb else model.art_block(u)
                gains[b] = gains.get(b, 0.0) + w
            bw[own] -= wv
            true_bw[own] -= tv
            stay_score = fennel_gain(gains.get(own, 0.0), wv, bw[own], params)
            best_score = stay_score
            candidates: list[int] = []
            for b, g in gains.items():
                if b == own or true_bw[b] + tv > state.l_max:
                    continue
                score = fennel_gain(g, wv, bw[b], params)
                if score > best_score:
                    best_score = score
                    candidates = [b]
                elif score == best_score:
                    candidates.append(b)
            target = own
            if candidates and (best_score > stay_score or rng.random() < 0.5):
                target = candidates[0] if len(candidates) == 1 \
                    else rng.choice(candidates)
            bw[target] += wv
            true_bw[target] += tv
            if target != own:
                blocks[v] = target
                total_gain += best_score - stay_score
                moved = True
        if not moved:
            break
    return total_gain


def uncoarsen_refine(levels: list[_Level], coarse_blocks: list[int],
                     state: PartitionState, config: HeiStreamConfig,
                     params: FennelParams, rng: random.Random,
                     refine_coarsest: bool = False) -> list[int]:
    """Project the coarsest partition down the hierarchy, refining each level."""
    blocks = coarse_blocks
    first = True
    for level in reversed(levels):
        if not first:
            blocks = [blocks[level.cluster_map[v]]
                      for v in range(level.model.num_batch)]
        if not first or refine_coarsest:
            bw, true_bw = _seed_block_weights(level.model, blocks, state.k)
            _refine_level(level.model, blocks, bw, true_bw, state, params,
                          config.localsearch_rounds, rng)
        first = False
    return blocks


def _seed_block_weights(model: BatchModel,
                        blocks: list[int], k: int) -> tuple[list, list]:
    bw = [0.0] * k
    true_bw = [0] * k
    for j in range(model.num_art):
        art = model.num_batch + j
        bw[model.art_block(art)] += model.weight[art]
        true_bw[model.art_block(art)] += model.true_weight[art]
    for v in range(model.num_batch):
        bw[blocks[v]] += model.weight[v]
        true_bw[blocks[v]] += model.true_weight[v]
    return bw, true_bw


def commit_batch(batch: list, blocks: list[int], state: PartitionState,
                 restream: bool = False) -> None:
    """Write the batch assignment into the global state using true weights.

    Ghost-inflated model weights stay inside the model; global balance is
    accounted with the weights the stream actually carried.
    """
    for local, record in enumerate(batch):
        if restream:
            state.unassign(record.id, record.weight)
        state.assign(record.id, blocks[local], record.weight)


def partition_batch(batch: list, state: PartitionState,
                    config: HeiStreamConfig, params: FennelParams,
                    rng: random.Random, restream: bool = False) -> list[int]:
    model = build_model(batch, state, config, rng, restream)
    levels = coarsen(model, config, state, rng)
    coarsest = levels[-1].model
    if restream:
        coarse_blocks = list(coarsest.blocks)
        refine_coarsest = True
    else:
        coarse_blocks = initial_partition(coarsest, state, params)
        refine_coarsest = False
    return uncoarsen_refine(levels, coarse_blocks, state, config, params,
                            rng, refine_coarsest)


def run_heistream(stream_factory, config: HeiStreamConfig,
                  total_weight: Optional[int] = None) -> PartitionState:
    """Buffered streaming partitioning, optionally with restream passes.

    ``stream_factory()`` must return a fresh stream over the same node order
    for every pass.
    """
    stream = stream_factory()
    header = stream.header
    if total_weight is None:
        if header.has_node_weights:
            raise ValueError("weighted nodes need an explicit total_weight")
        total_weight = header.n
    state = PartitionState(header.n, config.k, config.epsilon, total_weight)
    alpha = config.alpha
    if alpha is None:
        alpha = fennel_alpha(header.n, header.m, config.k, config.gamma)
    params = FennelParams(gamma=config.gamma, alpha=alpha)
    rng = random.Random(config.seed)

    for p in range(config.passes):
        restream = p > 0
        if restream:
            stream = stream_factory()
        it = iter(stream)
        while True:
            batch = load_batch(it, config.delta)
            if batch is None:
                break
            blocks = partition_batch(batch, state, config, params, rng,
                                     restream)
            commit_batch(batch, blocks, state, restream)
    return state
