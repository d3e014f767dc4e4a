"""Site/edge graphs and translation symmetry groups for finite lattices.

Edges are undirected, stored in canonical ``(min, max, color)`` order with a
non-negative integer color label (default 0).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

Edge = tuple[int, int, int]


def _canonical_edge(i: int, j: int, color: int = 0) -> Edge:
    if i == j:
        raise ValueError(f"self-loop edge ({i}, {j}) is not allowed")
    if i < 0 or j < 0:
        raise ValueError(f"negative site index in edge ({i}, {j})")
    if color < 0:
        raise ValueError(f"negative edge color {color}")
    return (min(i, j), max(i, j), int(color))


@dataclass(frozen=True)
class Graph:
    """Edge-colored undirected graph over ``n_sites`` vertices.

    For graphs built by :func:`hypercube`, the ``length``/``n_dim``/``pbc``
    metadata is retained so that translation groups can be generated.
    """

    n_sites: int
    edges: tuple[Edge, ...]
    length: int | None = None
    n_dim: int | None = None
    pbc: bool = False

    def __post_init__(self):
        for (i, j, c) in self.edges:
            if not (0 <= i < self.n_sites and 0 <= j < self.n_sites):
                raise ValueError(f"edge ({i}, {j}, {c}) out of range for {self.n_sites} sites")
            if i >= j:
                raise ValueError(f"edge ({i}, {j}, {c}) not in canonical (min, max) order")
        if len(set(self.edges)) != len(self.edges):
            raise ValueError("duplicate edges")

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def edge_array(self) -> np.ndarray:
        """Edges as an integer array of shape (n_edges, 3)."""
        return np.asarray(self.edges, dtype=np.int64).reshape(-1, 3)

    def adjacency(self) -> list[list[int]]:
        adj: list[list[int]] = [[] for _ in range(self.n_sites)]
        for (i, j, _) in self.edges:
            adj[i].append(j)
            adj[j].append(i)
        return adj


@dataclass(frozen=True)
class SymmetryGroup:
    """A set of site permutations closed under composition.

    ``permutations[g, i]`` is the image of site ``i`` under element ``g``.
    """

    permutations: np.ndarray

    def __post_init__(self):
        perms = np.asarray(self.permutations, dtype=np.int64)
        object.__setattr__(self, "permutations", perms)
        if perms.ndim != 2:
            raise ValueError("permutations must be a 2D array (group order, n_sites)")
        n = perms.shape[1]
        ident = np.arange(n)
        for p in perms:
            if not np.array_equal(np.sort(p), ident):
                raise ValueError("row is not a permutation of site indices")
        if not any(np.array_equal(p, ident) for p in perms):
            raise ValueError("group does not contain the identity permutation")

    @property
    def order(self) -> int:
        return self.permutations.shape[0]

    @property
    def n_sites(self) -> int:
        return self.permutations.shape[1]

    def apply(self, g: int, sigma: np.ndarray) -> np.ndarray:
        """Permuted configuration with entries ``out[i] = sigma[p_g(i)]``."""
        return np.asarray(sigma)[..., self.permutations[g]]

    def inverse_permutations(self) -> np.ndarray:
        inv = np.empty_like(self.permutations)
        for g, p in enumerate(self.permutations):
            inv[g, p] = np.arange(self.n_sites)
        return inv


def hypercube(length: int, n_dim: int, pbc: bool = True) -> Graph:
    """Hypercubic lattice of ``length**n_dim`` sites with color-0 bonds.

    Sites are indexed row-major over coordinates (coordinate 0 most
    significant). With ``pbc`` and ``length == 2`` the wrap edge coincides
    with the open edge and is deduplicated.
    """
    if length < 1:
        raise ValueError(f"length must be >= 1, got {length}")
    if not (1 <= n_dim <= 3):
        raise ValueError(f"n_dim must be in 1..3, got {n_dim}")
    n_sites = length**n_dim
    coords = list(itertools.product(range(length), repeat=n_dim))
    site_of = {c: s for s, c in enumerate(coords)}
    edges: set[Edge] = set()
    for c in coords:
        for k in range(n_dim):
            if c[k] + 1 < length:
                nb = list(c)
                nb[k] += 1
                edges.add(_canonical_edge(site_of[c], site_of[tuple(nb)]))
            elif pbc and length > 1:
                nb = list(c)
                nb[k] = 0
                edges.add(_canonical_edge(site_of[c], site_of[tuple(nb)]))
    return Graph(n_sites=n_sites, edges=tuple(sorted(edges)), length=length, n_dim=n_dim, pbc=pbc)


def custom_graph(edges: list[tuple[int, int] | tuple[int, int, int]]) -> Graph:
    """Graph from an explicit edge list; color defaults to 0."""
    if not edges:
        raise ValueError("edge list must be nonempty")
    canon = []
    for e in edges:
        if len(e) == 2:
            canon.append(_canonical_edge(e[0], e[1], 0))
        else:
            canon.append(_canonical_edge(*e))
    if len(set(canon)) != len(canon):
        raise ValueError("duplicate edges in edge list")
    n_sites = 1 + max(max(i, j) for (i, j, _) in canon)
    return Graph(n_sites=n_sites, edges=tuple(sorted(canon)))


def is_bipartite(g: Graph) -> bool:
    """True iff the vertices admit a 2-coloring with no monochromatic edge."""
    color = [-1] * g.n_sites
    adj = g.adjacency()
    for start in range(g.n_sites):
        if color[start] != -1:
            continue
        color[start] = 0
        queue = [start]
        while queue:
            v = queue.pop()
            for w in adj[v]:
                if color[w] == -1:
                    color[w] = 1 - color[v]
                    queue.append(w)
                elif color[w] == color[v]:
                    return False
    return True


def translation_group(g: Graph) -> SymmetryGroup:
    """Cyclic-shift permutations of a periodic hypercube; order = n_sites."""
    if g.length is None or g.n_dim is None or not g.pbc:
        raise ValueError("translation_group requires a hypercube graph with pbc=True")
    length, n_dim = g.length, g.n_dim
    strides = [length**k for k in range(n_dim - 1, -1, -1)]

    def site(coord):
        return sum(c * s for c, s in zip(coord, strides))

    coords = list(itertools.product(range(length), repeat=n_dim))
    perms = np.empty((g.n_sites, g.n_sites), dtype=np.int64)
    for gi, shift in enumerate(itertools.product(range(length), repeat=n_dim)):
        for i, c in enumerate(coords):
            shifted = tuple((c[k] + shift[k]) % length for k in range(n_dim))
            perms[gi, i] = site(shifted)
    return SymmetryGroup(permutations=perms)
