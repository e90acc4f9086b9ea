import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bootperc.engine import (
    OUTCOME_HEADER,
    Explicit,
    PerCommunity,
    UniformCount,
    draw_realization,
    nested_final_sizes,
    resolve_seeds,
    run_block_process,
    run_edge_process,
    run_generations,
    run_node_process,
)
from bootperc.errors import ValidationError
from bootperc.graphs import Block, ErExplicit, ErImplicit, from_edges, generate
from bootperc.influence import DiscreteDistribution, InfluenceSpec, parse_distribution
from oracles import fixed_point

BASIC = InfluenceSpec.basic(2)
MIXED = InfluenceSpec(parse_distribution("2:0.5,3.5:0.5"), parse_distribution("1:0.5,1.5:0.3,0.5:0.2"))
SIGNED = InfluenceSpec(DiscreteDistribution.constant(2), parse_distribution("1:0.6,-1:0.4"))


def adjacency(g, weights):
    adj = [[] for _ in range(g.n)]
    for e, (u, v) in enumerate(g.edges().tolist()):
        w = 1.0 if weights is None else weights[e]
        adj[u].append((v, w))
        if u != v:
            adj[v].append((u, w))
    return adj


def k4():
    return from_edges(4, np.array([[i, j] for i in range(4) for j in range(i + 1, 4)]), multigraph=False)


class TestSeeds:
    def test_uniform(self, rng):
        s = resolve_seeds(5, 20, None, rng)
        assert len(set(s.tolist())) == 5 and s.max() < 20

    def test_per_community(self, rng):
        comm = np.repeat(np.arange(3, dtype=np.int32), [4, 5, 6])
        s = resolve_seeds(PerCommunity((1, 0, 6)), 15, comm, rng)
        assert np.bincount(comm[s], minlength=3).tolist() == [1, 0, 6]

    @pytest.mark.parametrize("seeds", [UniformCount(21), Explicit((1, 1)), Explicit((25,)), PerCommunity((1, 2))])
    def test_rejected(self, seeds, rng):
        comm = np.repeat(np.arange(3, dtype=np.int32), [4, 5, 11])
        with pytest.raises(ValidationError):
            resolve_seeds(seeds, 20, comm, rng)

    def test_explicit_kept(self, rng):
        assert resolve_seeds(Explicit((4, 2)), 5, None, rng).tolist() == [4, 2]


class TestExamples:
    def test_no_seeds(self, rng):
        g = generate(ErExplicit(30, 0.3), rng)
        for out in (run_generations(g, 0, BASIC, rng), run_node_process(g, 0, BASIC, rng),
                    run_edge_process(g, 0, 2, rng)):
            assert out.final_active == 0

    def test_k4(self):
        g = k4()
        assert run_generations(g, Explicit((0, 1)), BASIC).final_active == 4
        out = run_node_process(g, Explicit((0, 1)), BASIC, 3)
        assert out.final_active == out.steps == 4
        assert run_edge_process(g, Explicit((0, 1)), 2, 3).final_active == 4

    def test_star(self):
        g = from_edges(6, np.array([[0, i] for i in range(1, 6)]), multigraph=False)
        assert run_edge_process(g, Explicit((0,)), 2, 1).final_active == 1
        assert run_node_process(g, Explicit((0,)), BASIC, 1).final_active == 1

    def test_all_seeds(self, rng):
        g = generate(ErExplicit(40, 0.1), rng)
        out = run_node_process(g, 40, MIXED, rng)
        assert out.final_active == out.steps == 40
        out = run_node_process(ErImplicit(40, 0.1), 40, BASIC, rng)
        assert out.final_active == out.steps == 40

    def test_too_many_seeds(self, rng):
        with pytest.raises(ValidationError):
            run_node_process(ErImplicit(10, 0.1), 11, BASIC, rng)

    def test_generations_reject_negative(self, rng):
        g = generate(ErExplicit(10, 0.3), rng)
        with pytest.raises(ValidationError, match="negative"):
            run_generations(g, 2, SIGNED, rng)

    def test_edge_threshold_floor(self, rng):
        g = generate(ErExplicit(30, 0.3), rng)
        with pytest.raises(ValidationError):
            run_edge_process(g, 3, 1, rng)
        with pytest.raises(ValidationError):
            run_edge_process(g, 3, lambda d: 1 if d > 5 else 2, rng)

    def test_outcome_row(self):
        out = run_node_process(k4(), Explicit((0, 1)), BASIC, 42)
        assert out.rng_seed == 42
        assert out.csv_row("k4", "explicit:2") == "k4,explicit:2,42,4,4,4"
        assert len(OUTCOME_HEADER.split(",")) == 6

    def test_trajectory(self, rng):
        out = run_node_process(ErImplicit(20000, 1e-3), 200, BASIC, rng, trajectory=True)
        t, a = out.trajectory[:, 0], out.trajectory[:, 1]
        assert len(t) <= 1001 + 1
        assert np.all(np.diff(t) > 0)
        assert a[-1] == 0 or t[-1] < out.steps
        assert a[0] == 200
        out = run_edge_process(k4(), Explicit((0, 1)), 2, 0, trajectory=True)
        # four seed-to-non-seed edges usable at the start
        assert out.trajectory[0].tolist() == [0, 4]


class TestImplicit:
    def test_supercritical(self):
        # a = 400 >> 125
        fr = [run_node_process(ErImplicit(10**5, 2e-4), 400, BASIC, i).final_active / 1e5 for i in range(200)]
        assert np.mean(fr) > 0.95

    def test_subcritical(self):
        ratios = [run_node_process(ErImplicit(10**5, 2e-4), 30, BASIC, i).final_active / 30 for i in range(200)]
        assert np.mean(ratios) < 2

    def test_matches_explicit_in_law(self):
        # same small model, implicit vs materialized: mean final sizes within 4 pooled se
        n, p, a = 400, 0.01, 12
        imp = [run_node_process(ErImplicit(n, p), a, BASIC, i).final_active for i in range(400)]
        exp = []
        for i in range(400):
            r = np.random.default_rng(10_000 + i)
            exp.append(run_node_process(generate(ErExplicit(n, p), r), a, BASIC, r).final_active)
        se = np.sqrt(np.var(imp, ddof=1) / 400 + np.var(exp, ddof=1) / 400)
        assert abs(np.mean(imp) - np.mean(exp)) < 4 * se


graph_seeds = st.integers(0, 2**32 - 1)


@given(graph_seeds, st.floats(0.04, 0.25), st.integers(0, 8))
def test_three_routes_agree(seed, p, a):
    rng = np.random.default_rng(seed)
    g = generate(ErExplicit(50, p), rng)
    seeds = Explicit(tuple(rng.choice(50, a, replace=False).tolist()))
    want = fixed_point(50, adjacency(g, None), np.full(50, 2.0), seeds.nodes)
    thr = np.full(50, 2.0)
    assert run_generations(g, seeds, BASIC, thresholds=thr).active_set() == want
    assert run_node_process(g, seeds, BASIC, rng, thresholds=thr).active_set() == want
    assert run_edge_process(g, seeds, 2, rng).active_set() == want


@given(graph_seeds, st.integers(0, 10))
def test_general_weights_agree(seed, a):
    rng = np.random.default_rng(seed)
    g = generate(ErExplicit(50, 0.12), rng)
    real = draw_realization(g, MIXED, rng)
    seeds = Explicit(tuple(rng.choice(50, a, replace=False).tolist()))
    want = fixed_point(50, adjacency(g, real.weights), real.thresholds, seeds.nodes)
    kw = dict(thresholds=real.thresholds, weights=real.weights)
    assert run_generations(g, seeds, MIXED, **kw).active_set() == want
    out = run_node_process(g, seeds, MIXED, rng, **kw)
    assert out.active_set() == want and out.final_active == out.steps


@given(graph_seeds, st.integers(1, 10), st.integers(0, 10))
def test_seed_monotone(seed, a, extra):
    rng = np.random.default_rng(seed)
    g = generate(ErExplicit(60, 0.08), rng)
    real = draw_realization(g, MIXED, rng)
    order = rng.permutation(60)
    small = Explicit(tuple(order[:a].tolist()))
    big = Explicit(tuple(order[:a + extra].tolist()))
    kw = dict(thresholds=real.thresholds, weights=real.weights)
    assert run_generations(g, small, MIXED, **kw).active_set() <= run_generations(g, big, MIXED, **kw).active_set()


@given(graph_seeds, st.integers(0, 59), st.floats(0.0, 3.0))
def test_threshold_monotone(seed, node, cut):
    rng = np.random.default_rng(seed)
    g = generate(ErExplicit(60, 0.08), rng)
    real = draw_realization(g, MIXED, rng)
    seeds = Explicit(tuple(rng.choice(60, 6, replace=False).tolist()))
    lower = real.thresholds.copy()
    lower[node] = max(0.0, lower[node] - cut)
    before = run_generations(g, seeds, MIXED, thresholds=real.thresholds, weights=real.weights).active_set()
    after = run_generations(g, seeds, MIXED, thresholds=lower, weights=real.weights).active_set()
    assert before <= after


@given(graph_seeds, st.integers(0, 12))
def test_signed_weights_step_identity(seed, a):
    rng = np.random.default_rng(seed)
    g = generate(ErExplicit(50, 0.15), rng)
    out = run_node_process(g, a, SIGNED, rng)
    assert out.final_active == out.steps <= 50
    assert sum(out.per_community_active) == out.final_active


@given(graph_seeds, st.integers(0, 15), st.integers(0, 15))
def test_schedules_agree(seed, a0, a1):
    rng = np.random.default_rng(seed)
    P = np.array([[0.15, 0.03], [0.03, 0.15]])
    g = generate(Block((30, 30), P), rng)
    real = draw_realization(g, BASIC, rng)
    seeds = Explicit(tuple(np.concatenate([rng.choice(30, a0, replace=False),
                                           30 + rng.choice(30, a1, replace=False)]).tolist()))
    paired = run_block_process(g, seeds, BASIC, rng, "paired", thresholds=real.thresholds)
    glob = run_block_process(g, seeds, BASIC, rng, "global", thresholds=real.thresholds)
    gen = run_generations(g, seeds, BASIC, thresholds=real.thresholds)
    assert paired.active_set() == glob.active_set() == gen.active_set()
    assert sum(paired.per_community_active) == paired.final_active
    assert sum(paired.used_per_community) == paired.final_active


class TestBlock:
    def test_no_cross_edges(self, rng):
        P = np.array([[0.3, 0.0], [0.0, 0.3]])
        g = generate(Block((50, 50), P), rng)
        out = run_block_process(g, PerCommunity((10, 0)), BASIC, rng)
        assert out.per_community_active[1] == 0

    def test_needs_communities(self, rng):
        g = generate(ErExplicit(20, 0.2), rng)
        with pytest.raises(ValidationError):
            run_block_process(g, 2, BASIC, rng)
        g2 = generate(Block((10, 10), np.full((2, 2), 0.2)), rng)
        with pytest.raises(ValidationError):
            run_block_process(g2, 2, BASIC, rng, schedule="roundrobin")

    def test_plain_node_process_on_labelled_graph(self):
        # the global node process must size its per-community counters by label
        g = generate(Block((300, 300, 300), np.full((3, 3), 0.02)), np.random.default_rng(8))
        for s in range(5):
            out = run_node_process(g, 40, BASIC, np.random.default_rng(s))
            assert len(out.used_per_community) == 3
            assert sum(out.used_per_community) == out.final_active
            assert sum(out.per_community_active) == out.final_active


class TestNested:
    def test_matches_restarts(self):
        rng = np.random.default_rng(5)
        g = generate(ErExplicit(300, 0.02), rng)
        order = rng.permutation(300)
        thr = np.full(300, 2.0)
        cps = [0, 3, 10, 25, 60]
        got = nested_final_sizes(g, order, cps, np.random.default_rng(1), r=2)
        want = [run_generations(g, Explicit(tuple(order[:c].tolist())), BASIC, thresholds=thr).final_active
                for c in cps]
        assert got.tolist() == want
        got = nested_final_sizes(g, order, cps, np.random.default_rng(2), spec=BASIC)
        assert got.tolist() == want

    def test_nested_rejects(self, rng):
        g = generate(ErExplicit(30, 0.1), rng)
        with pytest.raises(ValidationError):
            nested_final_sizes(g, np.arange(30), [5, 2], rng, r=2)
        with pytest.raises(ValidationError):
            nested_final_sizes(g, np.arange(30), [5], rng, spec=SIGNED)
