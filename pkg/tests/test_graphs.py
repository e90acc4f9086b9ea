import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bootperc.errors import ValidationError
from bootperc.graphs import (
    Block,
    ConfigModel,
    DegreeSequence,
    ErExplicit,
    ErImplicit,
    FromEdgeList,
    GnM,
    PowerLawConfig,
    from_edges,
    generate,
    ingest_edge_list,
    matched_config_model,
    powerlaw_degree_sequence,
    simplify,
    write_edge_list,
)
from bootperc.criticality import powerlaw_moment


def check_symmetric(g):
    rows = np.repeat(np.arange(g.n), g.degrees)
    fwd = np.sort(rows.astype(np.int64) * g.n + g.indices)
    back = np.sort(g.indices.astype(np.int64) * g.n + rows)
    assert np.array_equal(fwd, back)
    assert int(g.degrees.sum()) == 2 * g.n_edges


class TestGenerate:
    def test_gnm_empty(self, rng):
        g = generate(GnM(4, 0), rng)
        assert g.n == 4 and g.n_edges == 0
        assert list(g.degrees) == [0, 0, 0, 0]

    def test_config_regular(self, rng):
        g = generate(ConfigModel(np.array([3, 3, 3, 3])), rng)
        assert list(g.degrees) == [3, 3, 3, 3]
        check_symmetric(g)

    def test_gnm_large_mean_degree(self):
        g = generate(GnM(10**6, 15 * 10**6), np.random.default_rng(1))
        assert g.n_edges == 15 * 10**6
        assert g.degree_sequence().d_bar == 30.0

    def test_implicit_refused(self, rng):
        with pytest.raises(ValidationError, match="implicit-only"):
            generate(ErImplicit(10, 0.1), rng)

    def test_odd_degree_sum(self, rng):
        with pytest.warns(UserWarning):
            g = generate(ConfigModel(np.array([1, 4, 2, 2])), rng)
        # one half-edge removed from the maximum-degree node
        assert list(g.degrees) == [1, 3, 2, 2]

    @pytest.mark.parametrize("spec", [
        ErExplicit(10, 1.5),
        GnM(0, 3),
        GnM(3, -1),
        Block((5, 5), np.array([[0.1, 0.2], [0.3, 0.1]])),
        Block((5, 5), np.array([[0.1, 0.2]])),
        ConfigModel(np.array([2, -1, 1])),
        PowerLawConfig(10, 2.5, 5, 3),
    ])
    def test_invalid_specs(self, spec, rng):
        with pytest.raises(ValidationError):
            generate(spec, rng)

    def test_block_labels(self, rng):
        P = np.array([[0.2, 0.01], [0.01, 0.3]])
        g = generate(Block((30, 70), P), rng)
        assert list(g.community_sizes()) == [30, 70]
        assert not g.is_multigraph
        assert g.self_loops() == 0
        check_symmetric(g)

    def test_block_single_community_matches_er(self):
        # 100 draws each at n=200; compare mean edge counts within 4 sigma
        n, p = 200, 0.05
        a = [generate(Block((n,), np.array([[p]])), np.random.default_rng(i)).n_edges for i in range(100)]
        b = [generate(ErExplicit(n, p), np.random.default_rng(1000 + i)).n_edges for i in range(100)]
        pairs = n * (n - 1) / 2
        sd = np.sqrt(pairs * p * (1 - p))
        for x in (a, b):
            assert abs(np.mean(x) - pairs * p) < 4 * sd / np.sqrt(100)
        assert abs(np.mean(a) - np.mean(b)) < 4 * sd * np.sqrt(2 / 100)

    def test_block_inter_edge_rate(self):
        P = np.array([[0.0, 0.1], [0.1, 0.0]])
        counts = [generate(Block((40, 60), P), np.random.default_rng(i)).n_edges for i in range(50)]
        mu, sd = 2400 * 0.1, np.sqrt(2400 * 0.1 * 0.9)
        assert abs(np.mean(counts) - mu) < 4 * sd / np.sqrt(50)

    def test_simplify(self):
        g = from_edges(3, np.array([[0, 1], [1, 0], [2, 2], [1, 2]]))
        s = simplify(g)
        assert s.n_edges == 2 and not s.is_multigraph
        assert sorted(map(tuple, s.edges().tolist())) == [(0, 1), (1, 2)]

    def test_self_loop_counts_twice(self):
        g = from_edges(2, np.array([[0, 0], [0, 1]]))
        assert list(g.degrees) == [3, 1]
        check_symmetric(g)


@given(st.lists(st.integers(0, 9), min_size=1, max_size=40), st.integers(0, 2**32 - 1))
def test_config_preserves_degrees(degs, seed):
    degs = np.array(degs)
    if degs.sum() % 2:
        degs[0] += 1
    g = generate(ConfigModel(degs), np.random.default_rng(seed))
    assert np.array_equal(g.degrees, degs)
    check_symmetric(g)


@given(st.integers(1, 60), st.integers(0, 200), st.integers(0, 2**32 - 1))
def test_gnm_edge_count(n, M, seed):
    g = generate(GnM(n, M), np.random.default_rng(seed))
    assert g.n_edges == M
    check_symmetric(g)


@given(st.integers(1, 5), st.integers(0, 2**32 - 1))
def test_matched_config_keeps_degrees(k, seed):
    rng = np.random.default_rng(seed)
    g = simplify(generate(ErExplicit(20 * k, 0.2), rng))
    h = matched_config_model(g, rng)
    assert np.array_equal(h.degrees, g.degrees)


def test_matched_triangle(rng):
    tri = from_edges(3, np.array([[0, 1], [1, 2], [0, 2]]), multigraph=False)
    assert list(matched_config_model(tri, rng).degrees) == [2, 2, 2]


class TestPowerLaw:
    def test_degenerate_support(self):
        assert set(powerlaw_degree_sequence(100, 1.5, 6, 6).degrees) == {6}

    def test_deterministic(self):
        a = powerlaw_degree_sequence(5000, 2.2, 3, 70).degrees
        b = powerlaw_degree_sequence(5000, 2.2, 3, 70).degrees
        assert np.array_equal(a, b)
        assert np.all(np.diff(a) <= 0)  # quantiles run from the top

    def test_bad_range(self):
        with pytest.raises(ValidationError):
            powerlaw_degree_sequence(10, 2.0, 5, 4)

    def test_fig6_mean(self):
        ds = powerlaw_degree_sequence(10**6, 2.5, 10, 10**4)
        exact = powerlaw_moment(1, 2.5, 10, 10**4, mode="exact")
        assert abs(ds.d_bar - exact) / exact < 0.02

    @pytest.mark.parametrize("beta,expect", [(1.0, 84), (0.0, 155)])
    def test_flat_laws(self, beta, expect):
        ds = powerlaw_degree_sequence(10**6, beta, 10, 300)
        assert abs(ds.d_bar - expect) < 1.0

    def test_cap_warning(self):
        with pytest.warns(UserWarning, match="exceeds"):
            powerlaw_degree_sequence(100, 3.0, 1, 50)
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            powerlaw_degree_sequence(10**4, 3.0, 1, 100)

    @given(st.integers(1, 3000), st.floats(0.0, 4.0), st.integers(1, 20), st.integers(0, 60))
    def test_empirical_law(self, n, beta, d_min, span):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            ds = powerlaw_degree_sequence(n, beta, d_min, d_min + span)
        vals, probs = ds.distribution()
        assert len(ds.degrees) == n
        assert vals.min() >= d_min and vals.max() <= d_min + span
        assert probs.sum() == pytest.approx(1.0, abs=1e-12)
        assert ds.d_bar == ds.degrees.sum() / n


class TestIngest:
    def write(self, tmp_path, text):
        p = tmp_path / "g.txt"
        p.write_text(text, encoding="utf-8")
        return p

    def test_path_graph(self, tmp_path):
        g, rep = ingest_edge_list(self.write(tmp_path, "0 1\n1 2\n"))
        assert g.n == 3 and g.n_edges == 2
        assert list(g.degrees) == [1, 2, 1]
        assert rep.duplicates == 0 and rep.self_loops == 0

    def test_duplicate_collapsed(self, tmp_path):
        g, rep = ingest_edge_list(self.write(tmp_path, "# comment\n0 1\n1 0\n"))
        assert g.n_edges == 1 and rep.duplicates == 1

    def test_self_loop_dropped_and_ids_remapped(self, tmp_path):
        g, rep = ingest_edge_list(self.write(tmp_path, "10 10\n10 500\n500 7\n"))
        assert rep.self_loops == 1
        assert list(rep.original_ids) == [7, 10, 500]
        assert sorted(map(tuple, g.edges().tolist())) == [(0, 2), (1, 2)]

    @pytest.mark.parametrize("text,line", [("0 1\n1 x\n", 2), ("0 1\n\n2 3 4\n", 3), ("5\n", 1), ("0 -1\n", 1)])
    def test_malformed(self, tmp_path, text, line):
        with pytest.raises(ValidationError, match=rf":{line}:"):
            ingest_edge_list(self.write(tmp_path, text))

    def test_missing(self, tmp_path):
        with pytest.raises(ValidationError):
            ingest_edge_list(tmp_path / "nope.txt")

    def test_roundtrip(self, tmp_path, rng):
        g = simplify(generate(ErExplicit(80, 0.1), rng))
        path = tmp_path / "out.txt"
        write_edge_list(g, path)
        h = generate(FromEdgeList(str(path)), rng)
        # isolated nodes vanish on the way out, so compare the edge sets
        keep = np.flatnonzero(g.degrees)
        remap = np.full(g.n, -1)
        remap[keep] = np.arange(len(keep))
        a = {tuple(sorted(e)) for e in remap[g.edges()].tolist()}
        b = {tuple(sorted(e)) for e in h.edges().tolist()}
        assert a == b


def test_degree_file(tmp_path):
    p = tmp_path / "d.txt"
    p.write_text("# degrees\n3\n1\n\n2\n")
    ds = DegreeSequence.read(p)
    assert list(ds.degrees) == [3, 1, 2] and ds.d_max == 3 and ds.d_bar == 2.0
    p.write_text("3\n-1\n")
    with pytest.raises(ValidationError, match=":2:"):
        DegreeSequence.read(p)
