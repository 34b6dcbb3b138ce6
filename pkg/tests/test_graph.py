import itertools
import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from cqa.errors import (
    BudgetError,
    EdgeListParseError,
    GenerationError,
    GraphValidationError,
    InvalidDegreeError,
)
from cqa.graph import (
    Graph,
    coloring_oracle,
    complete_graph,
    fig5b_style_graph,
    parse_edge_list,
    path_graph,
    random_regular,
    write_edge_list,
)


def brute_count(g, q):
    # independent reference: plain nested enumeration with no numpy
    count = 0
    best = None
    mult = 0
    for colors in itertools.product(range(q), repeat=g.n_nodes):
        e = sum(q if colors[i] == colors[j] else q - 4 for i, j in g.edges)
        count += all(colors[i] != colors[j] for i, j in g.edges)
        if best is None or e < best:
            best, mult = e, 1
        elif e == best:
            mult += 1
    return count, best, mult


class TestGraph:
    def test_normalizes_edges(self):
        g = Graph(3, ((2, 1), (1, 0)))
        assert g.edges == ((0, 1), (1, 2))
        assert g.n_edges == 2

    @pytest.mark.parametrize("edges", [((0, 0),), ((0, 1), (1, 0)), ((0, 3),), ((-1, 0),)])
    def test_rejects_invalid(self, edges):
        with pytest.raises(GraphValidationError):
            Graph(3, edges)

    def test_rejects_empty_node_set(self):
        with pytest.raises(GraphValidationError):
            Graph(0)


class TestRandomRegular:
    def test_six_three(self):
        for seed in range(5):
            g = random_regular(6, 3, seed)
            assert g.n_edges == 9
            assert g.degrees() == [3] * 6

    def test_four_three_is_k4(self):
        assert random_regular(4, 3, 11).edges == complete_graph(4).edges

    @pytest.mark.parametrize("n,c", [(5, 3), (4, 4), (4, 0), (3, 5)])
    def test_invalid_degree(self, n, c):
        with pytest.raises(InvalidDegreeError):
            random_regular(n, c, 0)

    def test_deterministic(self):
        assert random_regular(10, 3, 42) == random_regular(10, 3, 42)

    def test_restart_cap(self, monkeypatch):
        import cqa.graph as mod

        monkeypatch.setattr(mod, "MAX_RESTARTS", 0)
        with pytest.raises(GenerationError):
            random_regular(6, 3, 0)

    @given(st.integers(3, 14), st.integers(1, 4), st.integers(0, 2**32 - 1))
    def test_always_regular(self, n, c, seed):
        if c >= n or (n * c) % 2:
            return
        g = random_regular(n, c, seed)
        assert g.degrees() == [c] * n
        assert len(set(g.edges)) == g.n_edges == n * c // 2


class TestOracle:
    def test_k4(self):
        res = coloring_oracle(complete_graph(4), 4)
        assert (res.proper_coloring_count, res.min_classical_energy) == (24, 0)

    def test_single_edge_two_colors(self):
        res = coloring_oracle(Graph(2, ((0, 1),)), 2)
        assert (res.proper_coloring_count, res.min_classical_energy) == (2, -2)

    def test_triangle_two_colors(self):
        res = coloring_oracle(complete_graph(3), 2)
        assert res.proper_coloring_count == 0
        assert res.min_classical_energy == -2
        assert not res.colorable

    def test_budget(self):
        with pytest.raises(BudgetError):
            coloring_oracle(path_graph(13), 4)

    @pytest.mark.parametrize("seed", range(4))
    def test_matches_plain_enumeration(self, seed):
        g = random_regular(6, 3, seed)
        res = coloring_oracle(g, 3)
        assert (res.proper_coloring_count, res.min_classical_energy, res.ground_degeneracy) == brute_count(g, 3)

    @given(st.integers(2, 7), st.integers(2, 4), st.data())
    def test_colorable_law_and_symmetry(self, n, q, data):
        pairs = list(itertools.combinations(range(n), 2))
        chosen = data.draw(st.lists(st.sampled_from(pairs), unique=True, max_size=len(pairs)))
        g = Graph(n, tuple(chosen))
        res = coloring_oracle(g, q)
        if res.colorable:
            assert res.min_classical_energy == g.n_edges * (q - 4)
            assert res.ground_degeneracy == res.proper_coloring_count
            # cyclic color shifts act without fixed points, so orbits have size q
            assert res.proper_coloring_count % q == 0
            if any(all(e in g.edges for e in itertools.combinations(c, 2)) for c in itertools.combinations(range(n), q)):
                # a q-clique forces every coloring to use all q colors: free S_q action
                assert res.proper_coloring_count % math.factorial(q) == 0
        perm = data.draw(st.permutations(range(n)))
        assert coloring_oracle(g.relabeled(perm), q) == res


class TestEdgeList:
    def test_parse(self):
        g = parse_edge_list("3\n0 1\n1 2\n")
        assert g == Graph(3, ((0, 1), (1, 2)))

    def test_comments_and_blank_lines(self):
        g = parse_edge_list("# header\n\n3\n# edge\n2 1\n")
        assert g.edges == ((1, 2),)

    def test_self_loop(self):
        with pytest.raises(GraphValidationError):
            parse_edge_list("3\n0 0\n")

    @pytest.mark.parametrize(
        "text,line",
        [("3\n0 1 2\n", 2), ("x\n", 1), ("3\n0 a\n", 2), ("2 3\n", 1), ("0\n", 1), ("# only\n", 0)],
    )
    def test_parse_errors_carry_line(self, text, line):
        with pytest.raises(EdgeListParseError) as info:
            parse_edge_list(text)
        assert info.value.lineno == line

    @given(st.integers(1, 8), st.data())
    def test_round_trip(self, n, data):
        pairs = list(itertools.combinations(range(n), 2))
        chosen = data.draw(st.lists(st.sampled_from(pairs), unique=True, max_size=len(pairs))) if pairs else []
        flipped = [(j, i) if data.draw(st.booleans()) else (i, j) for i, j in chosen]
        text = f"{n}\n" + "".join(f"{i} {j}\n" for i, j in flipped)
        g = parse_edge_list(text)
        assert parse_edge_list(write_edge_list(g)) == g
        assert write_edge_list(g) == f"{n}\n" + "".join(f"{i} {j}\n" for i, j in sorted(chosen))


class TestFig5bGraph:
    def test_shape(self):
        g = fig5b_style_graph()
        assert (g.n_nodes, g.n_edges) == (6, 12)

    def test_exactly_24_colorings(self):
        res = coloring_oracle(fig5b_style_graph(), 4)
        assert res.proper_coloring_count == 24
        assert res.min_classical_energy == 0
        assert brute_count(fig5b_style_graph(), 4)[0] == 24
