import random

import pytest

from streamdecomp.heistream import (BatchModel, HeiStreamConfig, build_model,
                                    coarsen, commit_batch, initial_partition,
                                    load_batch, run_heistream,
                                    uncoarsen_refine)
from streamdecomp.metrics import edge_cut
from streamdecomp.onepass import (FennelParams, OnePassConfig, fennel_alpha,
                                  run_onepass)
from streamdecomp.partition import UNASSIGNED, PartitionState
from streamdecomp.streams import StreamedNodeRecord

from generators import (gnp_graph, graph_stream_from_edges,
                        planted_partition_graph, random_graph)


def model_cut_and_penalty(model: BatchModel, blocks, k, params):
    """Decision-relevant Fennel objective: cut weight plus weighted penalty.

    Both terms are conserved by contraction/projection, unlike the internal
    edge sum (intra-cluster edges vanish at the coarse level).
    """
    nb = model.num_batch
    bw = [0.0] * k
    for j in range(model.num_art):
        bw[model.art_block(nb + j)] += model.weight[nb + j]
    for v in range(nb):
        bw[blocks[v]] += model.weight[v]
    cut = 0.0
    penalty = 0.0
    for v in range(nb):
        for u, w in model.adj[v]:
            bu = blocks[u] if u < nb else model.art_block(u)
            if bu != blocks[v]:
                cut += w if u >= nb else w / 2
        penalty += model.weight[v] * params.alpha * params.gamma * \
            bw[blocks[v]] ** (params.gamma - 1.0)
    return cut + penalty, cut


class TestLoadBatch:
    def test_batch_sizes(self):
        stream = graph_stream_from_edges(5, [])
        it = iter(stream)
        sizes = []
        while (batch := load_batch(it, 2)) is not None:
            sizes.append(len(batch))
        assert sizes == [2, 2, 1]

    def test_single_batch_when_delta_large(self):
        stream = graph_stream_from_edges(5, [])
        it = iter(stream)
        assert len(load_batch(it, 100)) == 5
        assert load_batch(it, 100) is None


class TestBuildModel:
    def cfg(self, **kw):
        return HeiStreamConfig(k=4, delta=2, **kw)

    def test_first_batch_has_no_artificial_nodes(self):
        state = PartitionState(4, 4, 0.5, 4)
        batch = [StreamedNodeRecord(0, 1, [(1, 1)]),
                 StreamedNodeRecord(1, 1, [(0, 1)])]
        model = build_model(batch, state, self.cfg(), random.Random(0))
        assert model.num_art == 0
        assert model.size == 2

    def test_parallel_past_edges_merge(self):
        # two past neighbors in block 2 -> one artificial edge of weight 2
        state = PartitionState(6, 4, 0.5, 6)
        state.assign(0, 2, 1)
        state.assign(1, 2, 1)
        batch = [StreamedNodeRecord(2, 1, [(0, 1), (1, 1)]),
                 StreamedNodeRecord(3, 1, [])]
        model = build_model(batch, state, self.cfg(), random.Random(0))
        assert model.num_art == 4
        art2 = model.num_batch + 2
        assert model.adj[0] == [(art2, 2)]
        assert model.weight[art2] == 2   # block 2 weight at batch start

    def test_ghost_contraction_matches_explicit_reference(self):
        # ghost node 2 adjacent to both batch nodes: contracted into one of
        # them, host weight +1, the other gets a half-weight edge to the host
        state = PartitionState(3, 2, 1.0, 3)
        batch = [StreamedNodeRecord(0, 1, [(2, 1)]),
                 StreamedNodeRecord(1, 1, [(2, 1)])]
        model = build_model(batch, state, self.cfg(model="extended"),
                            random.Random(7))
        host = 0 if model.weight[0] == 2 else 1
        other = 1 - host
        assert model.weight[host] == 2 and model.weight[other] == 1
        assert model.adj[other] == [(host, 0.5)]
        assert model.adj[host] == [(other, 0.5)]
        assert model.ghost_inflation == 1

    def test_basic_model_drops_ghost_edges(self):
        state = PartitionState(3, 2, 1.0, 3)
        batch = [StreamedNodeRecord(0, 1, [(2, 1)]),
                 StreamedNodeRecord(1, 1, [(2, 1)])]
        model = build_model(batch, state, self.cfg(model="basic"),
                            random.Random(7))
        assert model.adj == [[], []]
        assert model.ghost_inflation == 0

    def test_restream_artificial_covers_future_too(self):
        state = PartitionState(4, 2, 1.0, 4)
        for node, block in enumerate([0, 1, 0, 1]):
            state.assign(node, block, 1)
        batch = [StreamedNodeRecord(0, 1, [(2, 1), (3, 1)]),
                 StreamedNodeRecord(1, 1, [(3, 1)])]
        model = build_model(batch, state, self.cfg(), random.Random(0),
                            restream=True)
        assert model.num_art == 2
        # node 0 connects to artificial of block 0 (future node 2) and
        # block 1 (future node 3)
        assert sorted(model.adj[0]) == [(2, 1), (3, 1)]
        # artificial weights exclude the current batch
        assert model.weight[2] == 1 and model.weight[3] == 1
        assert model.blocks == [0, 1]


class TestCoarsen:
    def test_threshold_formula(self):
        config = HeiStreamConfig(k=32, delta=32768, x=4)
        model = BatchModel(32768, 32, 0)
        assert max(model.size // (2 * config.x * config.k),
                   config.x * config.k) == 128

    def test_small_model_yields_single_level(self):
        config = HeiStreamConfig(k=2, delta=8, x=4)
        state = PartitionState(8, 2, 0.5, 8)
        batch = [StreamedNodeRecord(i, 1, []) for i in range(8)]
        model = build_model(batch, state, config, random.Random(0))
        levels = coarsen(model, config, state, random.Random(0))
        assert len(levels) == 1
        assert levels[0].model is model

    def test_two_cliques_collapse_to_two_nodes(self):
        clique = lambda off: [(off + a, off + b, 1)
                              for a in range(8) for b in range(a + 1, 8)]
        edges = clique(0) + clique(8) + [(0, 8, 1)]
        stream = graph_stream_from_edges(16, edges)
        config = HeiStreamConfig(k=2, delta=16, x=1, coarsen_rounds=5)
        state = PartitionState(16, 2, 0.0, 16)   # L_max = 8 caps clusters
        batch = list(stream)
        model = build_model(batch, state, config, random.Random(3))
        levels = coarsen(model, config, state, random.Random(3), cap=8)
        coarsest = levels[-1].model
        assert coarsest.num_batch == 2
        assert sorted(coarsest.weight[:2]) == [8, 8]
        assert coarsest.adj[0] == [(1, 1)]   # the bridge survives contraction


class TestInitialPartition:
    def test_affinity_to_artificial_dominates(self):
        config = HeiStreamConfig(k=4, delta=4)
        state = PartitionState(8, 4, 1.0, 8)
        for node, block in enumerate([0, 1, 2, 3]):
            state.assign(node, block, 1)
        batch = [StreamedNodeRecord(4, 1, [(3, 1)])]   # neighbor in block 3
        model = build_model(batch, state, config, random.Random(0))
        params = FennelParams(alpha=0.1)
        assert initial_partition(model, state, params) == [3]

    def test_forced_block_when_others_full(self):
        config = HeiStreamConfig(k=3, delta=1)
        state = PartitionState(10, 3, 0.0, 9)   # L_max = 3
        for node in range(3):
            state.assign(node, 0, 3 if node == 0 else 0)
        state.block_weight = [3, 3, 2]           # blocks 0,1 full
        state.block_count = [1, 1, 1]
        batch = [StreamedNodeRecord(3, 1, [])]
        model = build_model(batch, state, config, random.Random(0))
        params = FennelParams(alpha=0.5)
        assert initial_partition(model, state, params) == [2]

    def test_matches_bruteforce_sequential_oracle(self):
        rng = random.Random(51)
        for _ in range(10):
            k = rng.choice([2, 4, 8])
            nb = rng.randint(3, 20)
            model = BatchModel(nb, k, 0)
            edges = [dict() for _ in range(nb)]
            for v in range(nb):
                model.weight[v] = rng.randint(1, 3)
                model.true_weight[v] = model.weight[v]
                for u in range(v):
                    if rng.random() < 0.2:
                        w = rng.randint(1, 4)
                        edges[v][u] = w
                        edges[u][v] = w
                if rng.random() < 0.4:
                    edges[v][nb + rng.randrange(k)] = rng.randint(1, 2)
            model.adj = [sorted(d.items()) for d in edges]
            for j in range(k):
                model.weight[nb + j] = rng.randint(0, 4)
                model.true_weight[nb + j] = model.weight[nb + j]
            total = sum(model.true_weight)
            state = PartitionState(nb, k, 0.2, total)
            params = FennelParams(alpha=0.7)
            got = initial_partition(model, state, params)

            # straight-line oracle, including the lightest-block fallback
            bw = [float(model.weight[nb + j]) for j in range(k)]
            expected = []
            for v in range(nb):
                best, best_key = None, None
                for i in range(k):
                    if bw[i] + model.weight[v] > state.l_max:
                        continue
                    gain = sum(w for u, w in model.adj[v]
                               if (u >= nb and u - nb == i) or
                               (u < nb and u < len(expected) and expected[u] == i))
                    score = gain - model.weight[v] * 0.7 * 1.5 * bw[i] ** 0.5
                    key = (score, -bw[i], -i)
                    if best_key is None or key > best_key:
                        best, best_key = i, key
                if best is None:
                    best = min(range(k), key=lambda i: (bw[i], i))
                expected.append(best)
                bw[best] += model.weight[v]
            assert got == expected


class TestRefinement:
    def build_partitioned_model(self, seed=61):
        rng = random.Random(seed)
        stream = gnp_graph(rng, 60, 0.1)
        config = HeiStreamConfig(k=4, delta=60, x=1, seed=seed)
        state = PartitionState(60, 4, 0.1, 60)
        batch = list(stream)
        model = build_model(batch, state, config, rng)
        levels = coarsen(model, config, state, rng)
        params = FennelParams(alpha=fennel_alpha(60, stream.header.m, 4))
        coarse = initial_partition(levels[-1].model, state, params)
        return levels, coarse, state, config, params

    def test_projection_preserves_cut_and_weights(self):
        levels, coarse, state, config, params = self.build_partitioned_model()
        assert len(levels) >= 2, "instance too small to build a hierarchy"
        coarse_obj, coarse_cut = model_cut_and_penalty(
            levels[-1].model, coarse, 4, params)
        # project one level without refinement
        level = levels[-2]
        projected = [coarse[levels[-1].cluster_map[levels[-2].cluster_map[v]]]
                     if False else coarse[level.cluster_map[v]]
                     for v in range(level.model.num_batch)]
        fine_obj, fine_cut = model_cut_and_penalty(
            level.model, projected, 4, params)
        assert fine_cut == pytest.approx(coarse_cut, abs=1e-9)
        assert fine_obj == pytest.approx(coarse_obj, abs=1e-9)

    def test_refinement_never_worsens_objective(self):
        levels, coarse, state, config, params = self.build_partitioned_model()
        rng = random.Random(9)
        blocks = uncoarsen_refine(levels, coarse, state, config, params, rng)
        finest = levels[0].model
        refined_obj, _ = model_cut_and_penalty(finest, blocks, 4, params)
        # projection-only baseline
        chain = list(range(levels[0].model.num_batch))
        projected = coarse
        for level in reversed(levels[:-1]):
            projected = [projected[level.cluster_map[v]]
                         for v in range(level.model.num_batch)]
        base_obj, _ = model_cut_and_penalty(finest, projected, 4, params)
        assert refined_obj <= base_obj + 1e-9

    def test_node_already_in_best_block_stays(self):
        config = HeiStreamConfig(k=2, delta=2)
        model = BatchModel(2, 0, 0)
        model.weight = [1, 1]
        model.true_weight = [1, 1]
        model.adj = [[(1, 5)], [(0, 5)]]
        state = PartitionState(2, 2, 1.0, 2)
        params = FennelParams(alpha=0.1)
        levels = coarsen(model, config, state, random.Random(0))
        blocks = uncoarsen_refine(levels, [0, 0], state, config, params,
                                  random.Random(0), refine_coarsest=True)
        assert blocks == [0, 0]


class TestCommitAndRun:
    def test_commit_uses_true_weights(self):
        state = PartitionState(3, 2, 1.0, 3)
        batch = [StreamedNodeRecord(0, 1, [(2, 1)]),
                 StreamedNodeRecord(1, 1, [(2, 1)])]
        commit_batch(batch, [0, 0], state)
        assert state.block_weight == [2, 0]   # no ghost inflation committed

    def test_full_run_assigns_everyone(self):
        rng = random.Random(71)
        stream = random_graph(rng, 150, 400)
        config = HeiStreamConfig(k=8, delta=40, seed=5)
        state = run_heistream(lambda: stream, config)
        assert all(b != UNASSIGNED for b in state.assignment)
        state.check_consistency([1] * 150)
        assert state.is_balanced()

    def test_committed_vs_model_weight_audit(self):
        # tracked inflation explains exactly the model/true weight difference
        rng = random.Random(73)
        stream = random_graph(rng, 120, 360)
        config = HeiStreamConfig(k=4, delta=30, seed=11)
        state = PartitionState(120, 4, 0.03, 120)
        params = FennelParams(alpha=fennel_alpha(120, 360, 4))
        rng_run = random.Random(config.seed)
        it = iter(stream)
        while (batch := load_batch(it, config.delta)) is not None:
            model = build_model(batch, state, config, rng_run)
            model_total = sum(model.weight[v] for v in range(model.num_batch))
            true_total = sum(r.weight for r in batch)
            assert model_total - true_total == model.ghost_inflation
            levels = coarsen(model, config, state, rng_run)
            blocks = uncoarsen_refine(
                levels, initial_partition(levels[-1].model, state, params),
                state, config, params, rng_run)
            commit_batch(batch, blocks, state)
        assert sum(state.block_weight) == 120

    def test_delta_covering_n_single_batch_no_artificial(self):
        rng = random.Random(79)
        stream = random_graph(rng, 50, 120)
        config = HeiStreamConfig(k=4, delta=64, seed=1)
        state = PartitionState(50, 4, 0.03, 50)
        batch = load_batch(iter(stream), config.delta)
        model = build_model(batch, state, config, random.Random(1))
        assert model.num_art == 0

    def test_delta1_behaves_exactly_as_fennel(self):
        rng = random.Random(83)
        for trial in range(20):
            n = rng.randint(20, 80)
            m = rng.randint(n, 4 * n)
            stream = random_graph(rng, n, m)
            config = HeiStreamConfig(k=4, delta=1, model="basic", seed=trial)
            hs = run_heistream(lambda: stream, config)
            fen = PartitionState(n, 4, 0.03, n)
            run_onepass(stream, OnePassConfig(algorithm="fennel"), fen)
            assert hs.assignment == fen.assignment, f"trial {trial}"

    def test_restream_pass_not_worse_usually(self):
        rng = random.Random(89)
        better = 0
        trials = 8
        for t in range(trials):
            stream = planted_partition_graph(rng, 120, 6, 0.3, 60)
            one = run_heistream(lambda: stream,
                                HeiStreamConfig(k=4, delta=30, seed=t))
            two = run_heistream(lambda: stream,
                                HeiStreamConfig(k=4, delta=30, seed=t,
                                                passes=2))
            c1 = edge_cut(stream, one.assignment)
            c2 = edge_cut(stream, two.assignment)
            if c2 <= c1:
                better += 1
            assert two.is_balanced()
        assert better >= trials // 2

    def test_determinism_with_seed(self):
        rng = random.Random(97)
        stream = planted_partition_graph(rng, 100, 4, 0.3, 40)
        runs = [run_heistream(lambda: stream,
                              HeiStreamConfig(k=4, delta=25, seed=13,
                                              passes=2)).assignment
                for _ in range(2)]
        assert runs[0] == runs[1]
