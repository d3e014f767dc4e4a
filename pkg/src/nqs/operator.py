"""Hamiltonians and observables as sums of k-local terms.

A term is a ``d^k x d^k`` matrix acting on ``k`` sites in the tensor-product
basis of local values (ascending value order, first site of ``acting_on``
most significant). Spin operators use the Pauli convention; with value order
(-1, +1) the single-site matrices are

    sx = [[0, 1], [1, 0]]      sy = [[0, i], [-i, 0]]      sz = diag(-1, +1)

The Heisenberg Hamiltonian on bipartite graphs carries the Marshall sign
gauge (exchange element -2 instead of +2), which leaves the spectrum
unchanged and makes the ground-state amplitudes non-negative.
"""

from __future__ import annotations

import warnings

import numpy as np
import scipy.sparse

from .hilbert import HilbertIndex, HilbertSpace
from .lattice import Graph, is_bipartite

MAX_DENSE_STATES = 2**14

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=np.complex128)
SIGMA_Y = np.array([[0, 1j], [-1j, 0]], dtype=np.complex128)
SIGMA_Z = np.array([[-1, 0], [0, 1]], dtype=np.complex128)


class LocalTerm:
    """One k-local summand: a matrix on an ordered tuple of distinct sites."""

    def __init__(self, acting_on, matrix, local_dim: int):
        acting_on = tuple(int(s) for s in acting_on)
        if len(set(acting_on)) != len(acting_on):
            raise ValueError(f"acting_on sites must be distinct, got {acting_on}")
        matrix = np.asarray(matrix, dtype=np.complex128)
        dim = local_dim ** len(acting_on)
        if matrix.shape != (dim, dim):
            raise ValueError(f"term matrix shape {matrix.shape} does not match d^k = {dim} on sites {acting_on}")
        self.acting_on = acting_on
        self.matrix = matrix
        self.local_dim = local_dim
        # per-row nonzero structure for fast connected-element queries
        self._row_cols = []
        self._row_vals = []
        for r in range(dim):
            cols = np.nonzero(matrix[r])[0]
            self._row_cols.append(cols)
            self._row_vals.append(matrix[r, cols])
        k = len(acting_on)
        self._sub_strides = local_dim ** np.arange(k - 1, -1, -1, dtype=np.int64)
        self._digit_table = (
            np.arange(dim, dtype=np.int64)[:, None] // self._sub_strides[None, :]
        ) % local_dim


def _merge_terms(t1: LocalTerm, t2: LocalTerm, d: int) -> LocalTerm:
    """Product of two terms as a single term on the union of their sites."""
    union = tuple(sorted(set(t1.acting_on) | set(t2.acting_on)))
    dim = d ** len(union)
    digits = (
        np.arange(dim, dtype=np.int64)[:, None]
        // (d ** np.arange(len(union) - 1, -1, -1, dtype=np.int64))[None, :]
    ) % d

    def embed(t: LocalTerm) -> np.ndarray:
        pos = [union.index(s) for s in t.acting_on]
        sub = digits[:, pos] @ t._sub_strides
        rest = np.delete(digits, pos, axis=1)
        same_rest = (rest[:, None, :] == rest[None, :, :]).all(axis=2)
        return t.matrix[np.ix_(sub, sub)] * same_rest

    return LocalTerm(union, embed(t1) @ embed(t2), d)


class Operator:
    """Finite sum of k-local terms over a Hilbert space."""

    def __init__(self, hilbert: HilbertSpace, terms: list[LocalTerm]):
        for t in terms:
            if t.local_dim != hilbert.local_dim:
                raise ValueError("term local dimension does not match the Hilbert space")
            for s in t.acting_on:
                if not (0 <= s < hilbert.n_sites):
                    raise ValueError(f"term site {s} out of range")
        self.hilbert = hilbert
        self.terms = list(terms)

    def __add__(self, other: "Operator") -> "Operator":
        if not isinstance(other, Operator):
            return NotImplemented
        if other.hilbert is not self.hilbert and other.hilbert != self.hilbert:
            raise ValueError("cannot add operators on different Hilbert spaces")
        return Operator(self.hilbert, self.terms + other.terms)

    def __mul__(self, other):
        if isinstance(other, Operator):
            if other.hilbert is not self.hilbert and other.hilbert != self.hilbert:
                raise ValueError("cannot multiply operators on different Hilbert spaces")
            d = self.hilbert.local_dim
            merged = [_merge_terms(t1, t2, d) for t1 in self.terms for t2 in other.terms]
            return Operator(self.hilbert, merged)
        if np.isscalar(other):
            return Operator(
                self.hilbert,
                [LocalTerm(t.acting_on, t.matrix * other, t.local_dim) for t in self.terms],
            )
        return NotImplemented

    def __rmul__(self, other):
        if np.isscalar(other):
            return self * other
        return NotImplemented

    def connected_elements(self, sigma: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """All sigma' with <sigma|O|sigma'> != 0 and the matrix elements.

        Duplicate sigma' arising from different terms are merged by summing;
        entries that cancel to exactly zero are dropped. Returns a pair
        (states of shape (n, n_sites), mels of shape (n,)).
        """
        sigma = np.asarray(sigma, dtype=np.float64)
        vidx = self.hilbert.value_indices(sigma)
        values = self.hilbert.local_values
        acc: dict[bytes, complex] = {}
        reps: dict[bytes, np.ndarray] = {}
        for t in self.terms:
            sub = int(vidx[list(t.acting_on)] @ t._sub_strides)
            cols = t._row_cols[sub]
            vals = t._row_vals[sub]
            for c, v in zip(cols, vals):
                new_sigma = sigma.copy()
                new_sigma[list(t.acting_on)] = values[t._digit_table[c]]
                key = new_sigma.tobytes()
                if key in acc:
                    acc[key] += v
                else:
                    acc[key] = complex(v)
                    reps[key] = new_sigma
        states = []
        mels = []
        for key, v in acc.items():
            if v != 0:
                states.append(reps[key])
                mels.append(v)
        if not states:
            return np.zeros((0, self.hilbert.n_sites)), np.zeros(0, dtype=np.complex128)
        return np.array(states), np.array(mels, dtype=np.complex128)

    def connected_batch(self, samples: np.ndarray):
        """Connected elements for a whole sample batch, vectorized per term.

        Unlike :meth:`connected_elements`, duplicate sigma' are NOT merged
        (local-energy accumulation is linear, so sums agree); diagonal
        contributions are returned separately. Returns
        (diag (B,), primes (n, n_sites), mels (n,), seg (n,)) where seg maps
        each off-diagonal entry to its sample row.
        """
        samples = np.atleast_2d(np.asarray(samples, dtype=np.float64))
        n_batch = samples.shape[0]
        vidx = self.hilbert.value_indices(samples).astype(np.int64)
        values = self.hilbert.local_values
        diag = np.zeros(n_batch, dtype=np.complex128)
        primes_list, mels_list, seg_list = [], [], []
        for t in self.terms:
            sites = list(t.acting_on)
            sub = vidx[:, sites] @ t._sub_strides
            for r in range(t.matrix.shape[0]):
                cols = t._row_cols[r]
                if len(cols) == 0:
                    continue
                mask = sub == r
                if not mask.any():
                    continue
                rows = np.nonzero(mask)[0]
                for c, v in zip(cols, t._row_vals[r]):
                    if c == r:
                        diag[rows] += v
                    else:
                        prime = samples[rows].copy()
                        prime[:, sites] = values[t._digit_table[c]]
                        primes_list.append(prime)
                        mels_list.append(np.full(len(rows), v))
                        seg_list.append(rows)
        if primes_list:
            primes = np.concatenate(primes_list)
            mels = np.concatenate(mels_list)
            seg = np.concatenate(seg_list)
        else:
            primes = np.zeros((0, samples.shape[1]))
            mels = np.zeros(0, dtype=np.complex128)
            seg = np.zeros(0, dtype=np.int64)
        return diag, primes, mels, seg

    def to_sparse(self, index: HilbertIndex | None = None) -> scipy.sparse.csr_matrix:
        """Sparse matrix over the indexed basis (vectorized assembly).

        Matrix elements connecting outside a constrained sector are dropped
        (projection onto the sector). Returns a real matrix when all elements
        are real.
        """
        if index is None:
            index = HilbertIndex(self.hilbert)
        n = index.n_states
        codes = index.codes()
        states = index.all_states()
        d = self.hilbert.local_dim
        full_strides = d ** np.arange(self.hilbert.n_sites - 1, -1, -1, dtype=np.int64)
        rows_all, cols_all, vals_all = [], [], []
        for t in self.terms:
            vidx = self.hilbert.value_indices(states[:, list(t.acting_on)]).astype(np.int64)
            sub = vidx @ t._sub_strides
            site_strides = full_strides[list(t.acting_on)]
            for r in range(t.matrix.shape[0]):
                mask = sub == r
                if not mask.any():
                    continue
                rows = np.nonzero(mask)[0]
                for c, v in zip(t._row_cols[r], t._row_vals[r]):
                    delta = int((t._digit_table[c] - t._digit_table[r]) @ site_strides)
                    new_codes = codes[rows] + delta
                    pos = np.searchsorted(codes, new_codes)
                    pos = np.clip(pos, 0, n - 1)
                    ok = codes[pos] == new_codes
                    rows_all.append(rows[ok])
                    cols_all.append(pos[ok])
                    vals_all.append(np.full(ok.sum(), v))
        if rows_all:
            rows = np.concatenate(rows_all)
            cols = np.concatenate(cols_all)
            vals = np.concatenate(vals_all)
        else:
            rows = np.zeros(0, dtype=np.int64)
            cols = np.zeros(0, dtype=np.int64)
            vals = np.zeros(0, dtype=np.complex128)
        mat = scipy.sparse.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()
        if np.all(mat.data.imag == 0):
            mat = scipy.sparse.csr_matrix((mat.data.real, mat.indices, mat.indptr), shape=mat.shape)
        return mat

    def to_dense(self, index: HilbertIndex | None = None) -> np.ndarray:
        """Dense matrix M[i, j] = <state_i|O|state_j> for desk-scale spaces."""
        if index is None:
            index = HilbertIndex(self.hilbert)
        if index.n_states > MAX_DENSE_STATES:
            raise ValueError(f"space of {index.n_states} states too large for a dense matrix")
        return np.asarray(self.to_sparse(index).todense(), dtype=np.complex128)


def _assert_hermitian_terms(op: Operator):
    for t in op.terms:
        if not np.allclose(t.matrix, t.matrix.conj().T, atol=1e-12):
            raise AssertionError("predefined Hamiltonian term is not Hermitian")


def local_operator(hilbert: HilbertSpace, matrices, acting_on) -> Operator:
    """Operator from explicit matrices on site tuples.

    ``matrices`` and ``acting_on`` are parallel lists (one term per pair); a
    single matrix with a single site tuple is also accepted.
    """
    if _is_matrix(matrices):
        matrices = [matrices]
        acting_on = [acting_on]
    if len(matrices) != len(acting_on):
        raise ValueError("matrices and acting_on must have the same length")
    terms = []
    for m, s in zip(matrices, acting_on):
        s = (int(s),) if np.isscalar(s) else tuple(int(x) for x in s)
        terms.append(LocalTerm(s, m, hilbert.local_dim))
    return Operator(hilbert, terms)


def _is_matrix(x) -> bool:
    if isinstance(x, np.ndarray):
        return x.ndim == 2
    if isinstance(x, (list, tuple)) and x and isinstance(x[0], (list, tuple, np.ndarray)):
        # nested list whose elements are rows of numbers -> a single matrix
        return np.isscalar(x[0][0]) or isinstance(x[0][0], complex)
    return False


def graph_operator(hilbert: HilbertSpace, graph: Graph, site_ops=(), bond_ops=()) -> Operator:
    """One term per site per site_op plus one per matching-color edge per bond_op.

    ``bond_ops`` is a list of ``(color, d^2 x d^2 matrix)`` pairs.
    """
    d = hilbert.local_dim
    terms = []
    for m in site_ops:
        for i in range(hilbert.n_sites):
            terms.append(LocalTerm((i,), m, d))
    for color, m in bond_ops:
        matched = [e for e in graph.edges if e[2] == color]
        if not matched:
            warnings.warn(f"bond operator color {color} matches no edges", stacklevel=2)
        for (i, j, _) in matched:
            terms.append(LocalTerm((i, j), m, d))
    return Operator(hilbert, terms)


def _require_spin_half(hilbert: HilbertSpace, name: str):
    if hilbert.local_dim != 2 or not np.array_equal(hilbert.local_values, [-1.0, 1.0]):
        raise ValueError(f"{name} requires a spin-1/2 Hilbert space")


def ising(hilbert: HilbertSpace, graph: Graph, h: float) -> Operator:
    """Transverse-field Ising model H = -h sum_i sx_i - sum_<ij> sz_i sz_j."""
    _require_spin_half(hilbert, "ising")
    terms = [LocalTerm((i,), -h * SIGMA_X, 2) for i in range(hilbert.n_sites)]
    zz = np.kron(SIGMA_Z, SIGMA_Z)
    for (i, j, _) in graph.edges:
        terms.append(LocalTerm((i, j), -zz, 2))
    op = Operator(hilbert, terms)
    _assert_hermitian_terms(op)
    return op


def heisenberg(hilbert: HilbertSpace, graph: Graph, sign_rule: bool | None = None) -> Operator:
    """Heisenberg model H = sum_<ij> (sx sx + sy sy + sz sz), Pauli convention.

    On bipartite graphs the Marshall sign gauge is applied by default
    (exchange element -2), which preserves the spectrum and makes the ground
    state non-negative.
    """
    _require_spin_half(hilbert, "heisenberg")
    if sign_rule is None:
        sign_rule = is_bipartite(graph)
    exchange = np.kron(SIGMA_X, SIGMA_X) + np.kron(SIGMA_Y, SIGMA_Y)
    bond = np.kron(SIGMA_Z, SIGMA_Z) + (-1 if sign_rule else 1) * exchange
    terms = [LocalTerm((i, j), bond, 2) for (i, j, _) in graph.edges]
    op = Operator(hilbert, terms)
    _assert_hermitian_terms(op)
    return op


def bose_hubbard(hilbert: HilbertSpace, graph: Graph, U: float, mu: float = 0.0) -> Operator:
    """Bose-Hubbard model with hopping truncated at n_max.

    H = -sum_<ij> (bdag_i b_j + bdag_j b_i) + (U/2) sum_i n_i (n_i - 1)
        - mu sum_i n_i
    """
    if hilbert.kind != "boson":
        raise ValueError("bose_hubbard requires a boson Hilbert space")
    d = hilbert.local_dim
    ns = np.arange(d, dtype=np.float64)
    b = np.zeros((d, d), dtype=np.complex128)
    for n in range(1, d):
        b[n - 1, n] = np.sqrt(n)
    number = np.diag(ns).astype(np.complex128)
    site = 0.5 * U * number @ (number - np.eye(d)) - mu * number
    hop = -(np.kron(b.conj().T, b) + np.kron(b, b.conj().T))
    terms = [LocalTerm((i,), site, d) for i in range(hilbert.n_sites)]
    terms += [LocalTerm((i, j), hop, d) for (i, j, _) in graph.edges]
    op = Operator(hilbert, terms)
    _assert_hermitian_terms(op)
    return op


def identity_operator(hilbert: HilbertSpace, factor: complex = 1.0) -> Operator:
    """factor * identity, as a 1-local term on site 0."""
    return Operator(hilbert, [LocalTerm((0,), factor * np.eye(hilbert.local_dim), hilbert.local_dim)])
