"""Finite many-body Hilbert spaces and the integer index over basis states.

A basis state (a "configuration") is a length-``n_sites`` vector of local
quantum numbers. Spin spaces use Pauli-eigenvalue labels, i.e. spin-1/2
sites take values in {-1, +1} and a spin-s site takes {-2s, -2s+2, ..., 2s}.
Boson sites take occupation numbers {0, ..., n_max}.

Enumeration order is lexicographic with site 0 most significant and local
values ascending; constrained spaces enumerate the constraint-satisfying
subset in the same order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .lattice import Graph

# Explicit enumeration tables are refused beyond this many basis states.
MAX_INDEXED_STATES = 2**24


def _n_sites_of(graph: "Graph | int") -> int:
    if isinstance(graph, Graph):
        return graph.n_sites
    return int(graph)


@dataclass(frozen=True)
class HilbertSpace:
    """Tensor product of identical finite local spaces, optionally constrained.

    ``constraint_sum``, when set, restricts configurations to
    ``sum(values) == constraint_sum`` (total magnetization for spins, total
    particle number for bosons).
    """

    n_sites: int
    local_values: np.ndarray
    constraint_sum: float | None = None
    kind: str = "custom"

    def __post_init__(self):
        values = np.asarray(self.local_values, dtype=np.float64)
        object.__setattr__(self, "local_values", values)
        if self.n_sites < 1:
            raise ValueError("n_sites must be positive")
        if values.ndim != 1 or len(values) < 2:
            raise ValueError("local_values must be a 1D list with at least 2 entries")
        if not np.all(np.diff(values) > 0):
            raise ValueError("local_values must be strictly increasing")

    @property
    def local_dim(self) -> int:
        return len(self.local_values)

    @property
    def constrained(self) -> bool:
        return self.constraint_sum is not None

    @property
    def n_states(self) -> int:
        return HilbertIndex(self).n_states

    def value_indices(self, sigma: np.ndarray) -> np.ndarray:
        """Map configuration values to indices into local_values (vectorized)."""
        sigma = np.asarray(sigma, dtype=np.float64)
        idx = np.searchsorted(self.local_values, sigma)
        idx = np.clip(idx, 0, self.local_dim - 1)
        if not np.all(self.local_values[idx] == sigma):
            raise ValueError("configuration contains values outside local_values")
        return idx

    def is_valid(self, sigma: np.ndarray) -> bool:
        sigma = np.asarray(sigma, dtype=np.float64)
        if sigma.shape != (self.n_sites,):
            return False
        try:
            self.value_indices(sigma)
        except ValueError:
            return False
        if self.constrained and sigma.sum() != self.constraint_sum:
            return False
        return True


def spin_space(s: float, graph: "Graph | int", total_sz: float | None = None) -> HilbertSpace:
    """Spin-s sites with Pauli-style labels {-2s, ..., 2s}, step 2.

    ``total_sz`` (in units of hbar) fixes sum(sigma) = 2*total_sz.
    """
    n_sites = _n_sites_of(graph)
    two_s = round(2 * s)
    if two_s < 1 or abs(2 * s - two_s) > 1e-12:
        raise ValueError(f"s must be a positive half-integer, got {s}")
    values = np.arange(-two_s, two_s + 1, 2, dtype=np.float64)
    constraint = None
    if total_sz is not None:
        target = 2 * total_sz
        if abs(target - round(target)) > 1e-12:
            raise ValueError(f"total_sz={total_sz} is not a multiple of 1/2")
        target = round(target)
        if abs(target) > two_s * n_sites or (target - two_s * n_sites) % 2 != 0:
            raise ValueError(f"total_sz={total_sz} is unreachable for {n_sites} spin-{s} sites")
        constraint = float(target)
    return HilbertSpace(n_sites=n_sites, local_values=values, constraint_sum=constraint, kind="spin")


def boson_space(n_max: int, graph: "Graph | int", n_particles: int | None = None) -> HilbertSpace:
    """Bosonic sites with occupations {0, ..., n_max}."""
    n_sites = _n_sites_of(graph)
    if n_max < 1:
        raise ValueError("n_max must be positive")
    values = np.arange(0, n_max + 1, dtype=np.float64)
    constraint = None
    if n_particles is not None:
        if n_particles < 0 or n_particles > n_max * n_sites:
            raise ValueError(f"n_particles={n_particles} unreachable with n_max={n_max} on {n_sites} sites")
        constraint = float(n_particles)
    return HilbertSpace(n_sites=n_sites, local_values=values, constraint_sum=constraint, kind="boson")


def _enumerate_constrained(hilbert: HilbertSpace) -> np.ndarray:
    """All constraint-satisfying value-index rows in lexicographic order.

    Grows the table site by site, keeping only prefixes whose partial sum can
    still reach the target. Prefix-major/value-minor extension preserves
    lexicographic order.
    """
    values = hilbert.local_values
    n, d = hilbert.n_sites, hilbert.local_dim
    target = hilbert.constraint_sum
    vmin, vmax = values[0], values[-1]
    table = np.zeros((1, 0), dtype=np.int8)
    sums = np.zeros(1)
    for site in range(n):
        remaining = n - site - 1
        # candidate sums for every (prefix, value) pair, value-minor
        cand = (sums[:, None] + values[None, :]).ravel()
        feasible = (cand + remaining * vmin <= target) & (cand + remaining * vmax >= target)
        rows = np.repeat(np.arange(table.shape[0]), d)[feasible]
        vals = np.tile(np.arange(d, dtype=np.int8), table.shape[0])[feasible]
        table = np.concatenate([table[rows], vals[:, None]], axis=1)
        sums = cand[feasible]
        if table.shape[0] > MAX_INDEXED_STATES:
            raise ValueError(f"constrained enumeration exceeds {MAX_INDEXED_STATES} states")
    return table


class HilbertIndex:
    """Bijection between integers [0, n_states) and valid configurations."""

    def __init__(self, hilbert: HilbertSpace):
        self.hilbert = hilbert
        n, d = hilbert.n_sites, hilbert.local_dim
        if n * np.log2(d) >= 63:
            raise ValueError("space too large to index (codes overflow 64-bit integers)")
        self._strides = d ** np.arange(n - 1, -1, -1, dtype=np.int64)
        if hilbert.constrained:
            self._table = _enumerate_constrained(hilbert)
            self._codes = self._table.astype(np.int64) @ self._strides
            self._n_states = self._table.shape[0]
        else:
            self._table = None
            self._codes = None
            self._n_states = d**n

    @property
    def n_states(self) -> int:
        return self._n_states

    def codes(self) -> np.ndarray:
        """Mixed-radix codes of all states, ascending (equals index order)."""
        if self._codes is not None:
            return self._codes
        if self._n_states > MAX_INDEXED_STATES:
            raise ValueError(f"enumeration of {self._n_states} states exceeds {MAX_INDEXED_STATES}")
        return np.arange(self._n_states, dtype=np.int64)

    def number_to_state(self, i: int) -> np.ndarray:
        if not (0 <= i < self._n_states):
            raise IndexError(f"state index {i} out of range [0, {self._n_states})")
        if self._table is not None:
            return self.hilbert.local_values[self._table[i]]
        digits = (i // self._strides) % self.hilbert.local_dim
        return self.hilbert.local_values[digits]

    def state_to_number(self, sigma: np.ndarray) -> int:
        return int(self.states_to_numbers(np.asarray(sigma)[None, :])[0])

    def states_to_numbers(self, sigmas: np.ndarray) -> np.ndarray:
        """Vectorized inverse of number_to_state for a (batch, n_sites) array."""
        sigmas = np.atleast_2d(np.asarray(sigmas, dtype=np.float64))
        if sigmas.shape[1] != self.hilbert.n_sites:
            raise ValueError("configuration length mismatch")
        codes = self.hilbert.value_indices(sigmas).astype(np.int64) @ self._strides
        if self._codes is None:
            return codes
        pos = np.searchsorted(self._codes, codes)
        pos = np.clip(pos, 0, self._n_states - 1)
        if not np.all(self._codes[pos] == codes):
            raise ValueError("configuration violates the space constraint")
        return pos

    def all_states(self) -> np.ndarray:
        """(n_states, n_sites) array of all valid configurations, index order."""
        if self._table is not None:
            return self.hilbert.local_values[self._table]
        if self._n_states > MAX_INDEXED_STATES:
            raise ValueError(f"enumeration of {self._n_states} states exceeds {MAX_INDEXED_STATES}")
        idx = np.arange(self._n_states, dtype=np.int64)
        digits = (idx[:, None] // self._strides[None, :]) % self.hilbert.local_dim
        return self.hilbert.local_values[digits]
