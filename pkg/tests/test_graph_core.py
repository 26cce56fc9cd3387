import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from isoreduce.errors import GraphParseError, NotStructuralError
from isoreduce.graph_core import (
    WeightedGraph,
    compute_depths,
    enumerate_branches,
    is_structural_set,
    parse_graph,
    random_structural_graph,
    serialize_graph,
    topological_interior,
)
from isoreduce.markov_family import FamilyParams, family_weight, truncated_weight

seeds = st.integers(min_value=0, max_value=2**32 - 1)
sizes = st.integers(min_value=1, max_value=10)


def graph_from_seed(seed, n):
    return random_structural_graph(np.random.default_rng(seed), n)


class TestWeightedGraph:
    def test_zero_weights_are_not_stored(self):
        g = WeightedGraph.from_edges(3, [(1, 2, 0.0), (2, 3, 1.5)])
        assert g.weights == {(2, 3): 1.5}
        assert g.weight(1, 2) == 0

    def test_explicit_zero_rejected(self):
        with pytest.raises(ValueError):
            WeightedGraph(2, {(1, 2): 0j})

    def test_out_of_range_rejected(self):
        with pytest.raises(ValueError):
            WeightedGraph(2, {(1, 3): 1.0})

    def test_non_finite_rejected(self):
        with pytest.raises(ValueError):
            WeightedGraph(2, {(1, 2): float("nan")})

    @given(seeds, sizes)
    def test_dense_roundtrip(self, seed, n):
        g, _ = graph_from_seed(seed, n)
        h = WeightedGraph.from_dense(g.to_dense())
        assert h.weights == g.weights


class TestParse:
    def test_two_cycle(self):
        g, S = parse_graph("n 2\nS 1\ne 1 2 1 0\ne 2 1 1 0")
        assert g.n == 2 and S == (1,)
        assert g.weight(1, 2) == 1 and g.weight(2, 1) == 1

    def test_single_vertex(self):
        g, S = parse_graph("n 1\nS 1")
        assert g.n == 1 and S == (1,) and not g.weights

    def test_comments_and_complex_weight(self):
        g, _ = parse_graph("# header\nn 2\nS 2\ne 1 2 0.5 -1.5  # edge\n")
        assert g.weight(1, 2) == complex(0.5, -1.5)

    @pytest.mark.parametrize(
        "text, line",
        [
            ("n 2\nS 1\nx 1 2", 3),
            ("n 2\nS 1\ne 1 3 1.0", 3),
            ("n 2\nS 1\ne 1 2 1.0\ne 1 2 2.0", 4),
            ("n 2\nS\n", 2),
            ("S 1\ne 1 2 1.0\nn 2", 2),
            ("n 2\nS 1\ne 1 2 abc", 3),
            ("n 2\nn 3", 2),
        ],
    )
    def test_errors_carry_line_numbers(self, text, line):
        with pytest.raises(GraphParseError) as info:
            parse_graph(text)
        assert info.value.line == line
        assert str(info.value).startswith(f"line {line}:")

    def test_missing_structural_line(self):
        with pytest.raises(GraphParseError):
            parse_graph("n 2\ne 1 2 1.0")

    @settings(max_examples=60)
    @given(seeds, sizes)
    def test_serialize_roundtrip(self, seed, n):
        g, S = graph_from_seed(seed, n)
        h, S2 = parse_graph(serialize_graph(g, S))
        assert h.weights == g.weights and S2 == S

    def test_truncated_chain_window_matches_oracle(self):
        p = FamilyParams.reference()
        n, window = 5, 6
        lines = [f"n {window}", "S 1 2"]
        for i in range(1, window + 1):
            for j in range(1, window + 1):
                w = truncated_weight(p, n, i, j)
                if w:
                    lines.append(f"e {i} {j} {w!r}")
        g, S = parse_graph("\n".join(lines))
        for i in range(1, window + 1):
            for j in range(1, window + 1):
                assert g.weight(i, j) == truncated_weight(p, n, i, j)
        # inside the window w_5 and the exact chain differ only in column 6
        assert all(g.weight(i, j) == family_weight(p, i, j) for i in range(1, 7) for j in range(1, 6))


class TestStructural:
    def test_two_cycle(self, two_cycle):
        g, S = two_cycle
        assert is_structural_set(g, S)

    def test_empty_set_is_an_error(self, two_cycle):
        g, _ = two_cycle
        with pytest.raises(ValueError):
            is_structural_set(g, ())

    def test_three_cycle_any_single_vertex(self):
        g = WeightedGraph.from_edges(3, [(1, 2, 1), (2, 3, 1), (3, 1, 1)])
        assert all(is_structural_set(g, {v}) for v in (1, 2, 3))

    def test_interior_two_cycle_witness(self):
        g = WeightedGraph.from_edges(3, [(1, 2, 1), (2, 3, 1), (3, 2, 1)])
        verdict = is_structural_set(g, {1})
        assert not verdict
        assert verdict.witness == (2, 3, 2)

    def test_loops_are_exempt(self):
        g = WeightedGraph.from_edges(2, [(1, 2, 1), (2, 2, 0.5)])
        assert is_structural_set(g, {1})

    @given(seeds, sizes)
    def test_planted_sets_are_structural(self, seed, n):
        g, S = graph_from_seed(seed, n)
        assert is_structural_set(g, S)
        order = topological_interior(g, S)
        pos = {v: k for k, v in enumerate(order)}
        for z in order:
            for y in g.successors(z):
                if y in pos and y != z:
                    assert pos[y] < pos[z]

    @settings(max_examples=50)
    @given(seeds, st.integers(min_value=3, max_value=7))
    def test_verdict_matches_exhaustive_cycle_search(self, seed, n):
        rng = np.random.default_rng(seed)
        A = (rng.random((n, n)) < 0.3).astype(float)
        g = WeightedGraph.from_dense(A)
        S = {int(rng.integers(1, n + 1))}
        # brute force: a non-loop interior cycle exists iff some power of the
        # loop-stripped interior adjacency has a nonzero trace
        inside = [v - 1 for v in g.vertices if v not in S]
        B = A[np.ix_(inside, inside)].copy()
        np.fill_diagonal(B, 0)
        P = np.eye(len(inside))
        has_cycle = False
        for _ in range(len(inside)):
            P = P @ B
            has_cycle |= np.trace(P) > 0
        assert bool(is_structural_set(g, S)) == (not has_cycle)


class TestDepths:
    def test_all_in_s(self, two_cycle):
        g, _ = two_cycle
        assert compute_depths(g, {1, 2}).depth == {1: 0, 2: 0}

    def test_chain(self):
        g = WeightedGraph.from_edges(3, [(2, 1, 1.0), (3, 2, 1.0)])
        assert compute_depths(g, {1}).depth == {1: 0, 2: 1, 3: 2}

    def test_two_cycle(self, two_cycle):
        g, S = two_cycle
        assert compute_depths(g, S).depth == {1: 0, 2: 1}

    def test_not_structural(self):
        g = WeightedGraph.from_edges(3, [(2, 3, 1), (3, 2, 1)])
        with pytest.raises(NotStructuralError):
            compute_depths(g, {1})

    @given(seeds, sizes)
    def test_depth_invariants(self, seed, n):
        g, S = graph_from_seed(seed, n)
        d = compute_depths(g, S)
        interior_count = n - len(S)
        for v in g.vertices:
            assert (d.depth[v] == 0) == (v in S)
            assert d.depth[v] <= interior_count
            if v not in S:
                succ = [d.depth[y] for y in g.successors(v) if y != v]
                assert d.depth[v] == 1 + max(succ, default=0)


class TestBranches:
    def test_two_cycle(self, two_cycle):
        g, S = two_cycle
        assert enumerate_branches(g, S, 1, 1) == [(1, 2, 1)]

    def test_full_set_gives_edges(self):
        g = WeightedGraph.from_edges(2, [(1, 2, 3.0)])
        assert enumerate_branches(g, {1, 2}, 1, 2) == [(1, 2)]
        assert enumerate_branches(g, {1, 2}, 2, 1) == []

    def test_loop_on_structural_vertex(self):
        g = WeightedGraph.from_edges(1, [(1, 1, 0.5)])
        assert enumerate_branches(g, {1}, 1, 1) == [(1, 1)]

    @settings(max_examples=60)
    @given(seeds, st.integers(min_value=1, max_value=8))
    def test_branch_invariants(self, seed, n):
        g, S = graph_from_seed(seed, n)
        for i in S:
            for j in S:
                found = enumerate_branches(g, S, i, j)
                assert found == sorted(found)
                for br in found:
                    assert br[0] == i and br[-1] == j and len(br) >= 2
                    assert all(g.weight(a, b) != 0 for a, b in zip(br, br[1:]))
                    assert len(set(br[:-1])) == len(br) - 1
                    assert all(z not in S for z in br[1:-1])
