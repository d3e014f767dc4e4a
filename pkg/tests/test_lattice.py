import itertools

import numpy as np
import pytest

from nqs.lattice import SymmetryGroup, custom_graph, hypercube, is_bipartite, translation_group


def test_hypercube_chain_20():
    g = hypercube(20, 1, pbc=True)
    assert g.n_sites == 20
    assert g.n_edges == 20
    for i in range(20):
        assert (min(i, (i + 1) % 20), max(i, (i + 1) % 20), 0) in g.edges


def test_hypercube_open_2x2():
    g = hypercube(2, 2, pbc=False)
    assert g.n_sites == 4
    assert g.n_edges == 4


def test_hypercube_pbc_2x2_dedups_wrap_edges():
    g = hypercube(2, 2, pbc=True)
    assert g.n_edges == 2 * 2 ** (2 - 1)  # n_dim * length^(n_dim-1)


def test_hypercube_4x4_pbc_adjacency():
    g = hypercube(4, 2, pbc=True)
    assert g.n_sites == 16
    assert g.n_edges == 32
    # exhaustive adjacency: every site has exactly 4 neighbours
    adj = g.adjacency()
    assert all(len(set(nb)) == 4 for nb in adj)
    # edges match coordinate shifts by one in one dimension
    def coord(s):
        return divmod(s, 4)
    for (i, j, c) in g.edges:
        (xi, yi), (xj, yj) = coord(i), coord(j)
        dx = min((xi - xj) % 4, (xj - xi) % 4)
        dy = min((yi - yj) % 4, (yj - yi) % 4)
        assert sorted((dx, dy)) == [0, 1]


def test_hypercube_edge_counts_open():
    for length, n_dim in [(3, 1), (4, 2), (3, 3)]:
        g = hypercube(length, n_dim, pbc=False)
        assert g.n_edges == n_dim * (length - 1) * length ** (n_dim - 1)


def test_hypercube_rejects_bad_arguments():
    with pytest.raises(ValueError):
        hypercube(0, 1)
    with pytest.raises(ValueError):
        hypercube(4, 4)


def test_custom_graph_basic():
    g = custom_graph([(0, 1, 0), (1, 2, 0)])
    assert g.n_sites == 3
    assert g.n_edges == 2


def test_custom_graph_colors():
    g = custom_graph([(0, 1, 0), (1, 2, 1), (2, 0, 1)])
    assert g.n_sites == 3
    assert sorted(e[2] for e in g.edges) == [0, 1, 1]


def test_custom_graph_canonical_order():
    g = custom_graph([(1, 0, 0)])
    assert g.edges == ((0, 1, 0),)


def test_custom_graph_rejects_self_loops_and_duplicates():
    with pytest.raises(ValueError):
        custom_graph([(0, 0, 0)])
    with pytest.raises(ValueError):
        custom_graph([(0, 1, 0), (1, 0, 0)])
    with pytest.raises(ValueError):
        custom_graph([])


def test_is_bipartite_ring_and_triangle():
    assert is_bipartite(hypercube(20, 1, pbc=True))
    assert not is_bipartite(custom_graph([(0, 1, 0), (1, 2, 0), (0, 2, 0)]))
    assert is_bipartite(hypercube(4, 2, pbc=True))
    assert not is_bipartite(hypercube(3, 1, pbc=True))  # odd ring


def _brute_force_bipartite(g):
    for colors in itertools.product((0, 1), repeat=g.n_sites):
        if all(colors[i] != colors[j] for (i, j, _) in g.edges):
            return True
    return False


def test_is_bipartite_matches_brute_force_small():
    rng = np.random.default_rng(5)
    for _ in range(25):
        n = int(rng.integers(3, 9))
        edges = set()
        for _ in range(int(rng.integers(2, 2 * n))):
            i, j = rng.choice(n, size=2, replace=False)
            edges.add((min(i, j), max(i, j), 0))
        g = custom_graph(sorted(edges))
        assert is_bipartite(g) == _brute_force_bipartite(g)


def test_translation_group_ring4():
    g = hypercube(4, 1, pbc=True)
    grp = translation_group(g)
    assert grp.order == 4
    ident = np.arange(4)
    assert any(np.array_equal(p, ident) for p in grp.permutations)


def test_translation_group_ring20_order():
    grp = translation_group(hypercube(20, 1, pbc=True))
    assert grp.order == 20


def test_translation_group_2d_edge_invariance():
    g = hypercube(3, 2, pbc=True)
    grp = translation_group(g)
    assert grp.order == 9
    edge_set = {(i, j) for (i, j, _) in g.edges}
    for p in grp.permutations:
        mapped = {(min(p[i], p[j]), max(p[i], p[j])) for (i, j) in edge_set}
        assert mapped == edge_set


def test_translation_group_closure():
    grp = translation_group(hypercube(5, 1, pbc=True))
    perms = {tuple(p) for p in grp.permutations}
    for a in grp.permutations:
        for b in grp.permutations:
            assert tuple(a[b]) in perms


def test_translation_group_rejects_open_graph():
    with pytest.raises(ValueError):
        translation_group(hypercube(4, 1, pbc=False))
    with pytest.raises(ValueError):
        translation_group(custom_graph([(0, 1, 0)]))


def test_symmetry_group_requires_identity():
    with pytest.raises(ValueError):
        SymmetryGroup(np.array([[1, 0]]))  # swap only, no identity
