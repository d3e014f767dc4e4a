import itertools
import math

import numpy as np
import pytest

from nqs.hilbert import HilbertIndex, boson_space, spin_space
from nqs.lattice import hypercube


def test_spin_half_constrained_count():
    hi = spin_space(0.5, 20, total_sz=0.0)
    assert HilbertIndex(hi).n_states == math.comb(20, 10)


def test_spin_half_unconstrained_count():
    assert HilbertIndex(spin_space(0.5, 10)).n_states == 1024


def test_spin_one_local_values():
    hi = spin_space(1.0, 3)
    assert np.array_equal(hi.local_values, [-2.0, 0.0, 2.0])
    assert HilbertIndex(hi).n_states == 27


def test_spin_rejects_unreachable_total_sz():
    with pytest.raises(ValueError):
        spin_space(0.5, 4, total_sz=3.0)
    with pytest.raises(ValueError):
        spin_space(0.5, 4, total_sz=0.5)  # parity-inconsistent for even N


def test_boson_counts():
    assert HilbertIndex(boson_space(1, 4)).n_states == 16
    hi = boson_space(2, 2, n_particles=2)
    idx = HilbertIndex(hi)
    assert idx.n_states == 3
    states = {tuple(idx.number_to_state(i)) for i in range(3)}
    assert states == {(0.0, 2.0), (1.0, 1.0), (2.0, 0.0)}


def test_boson_exhaustive_enumeration():
    hi = boson_space(3, 3, n_particles=3)
    idx = HilbertIndex(hi)
    brute = [
        s for s in itertools.product(range(4), repeat=3) if sum(s) == 3
    ]
    assert idx.n_states == len(brute) == 10
    listed = [tuple(int(v) for v in idx.number_to_state(i)) for i in range(idx.n_states)]
    assert listed == sorted(brute)


def test_boson_rejects_unreachable_filling():
    with pytest.raises(ValueError):
        boson_space(1, 3, n_particles=4)


def test_lexicographic_order_unconstrained():
    idx = HilbertIndex(spin_space(0.5, 2))
    assert np.array_equal(idx.number_to_state(0), [-1.0, -1.0])
    assert np.array_equal(idx.number_to_state(3), [1.0, 1.0])
    # site 0 most significant
    assert np.array_equal(idx.number_to_state(1), [-1.0, 1.0])


def test_roundtrip_all_states_n10():
    idx = HilbertIndex(spin_space(0.5, 10))
    for i in range(idx.n_states):
        assert idx.state_to_number(idx.number_to_state(i)) == i


def test_roundtrip_constrained():
    idx = HilbertIndex(spin_space(0.5, 8, total_sz=1.0))
    for i in range(idx.n_states):
        assert idx.state_to_number(idx.number_to_state(i)) == i


def test_constrained_equals_filtered_unconstrained():
    for n, tsz in [(6, 0.0), (8, 1.0), (12, 0.0)]:
        full = HilbertIndex(spin_space(0.5, n)).all_states()
        filtered = full[full.sum(axis=1) == 2 * tsz]
        constrained = HilbertIndex(spin_space(0.5, n, total_sz=tsz)).all_states()
        assert np.array_equal(filtered, constrained)


def test_binomial_counts_up_to_12():
    for n in range(2, 13, 2):
        for tsz in (0.0, 1.0):
            k = n // 2 + int(tsz)
            idx = HilbertIndex(spin_space(0.5, n, total_sz=tsz))
            assert idx.n_states == math.comb(n, k)


def test_out_of_range_and_invalid():
    hi = spin_space(0.5, 4, total_sz=0.0)
    idx = HilbertIndex(hi)
    with pytest.raises(IndexError):
        idx.number_to_state(idx.n_states)
    with pytest.raises(ValueError):
        idx.state_to_number(np.array([1.0, 1.0, 1.0, 1.0]))  # violates constraint
    with pytest.raises(ValueError):
        idx.state_to_number(np.array([1.0, 0.5, -1.0, -1.0]))  # invalid value


def test_is_valid():
    hi = spin_space(0.5, 4, total_sz=0.0)
    assert hi.is_valid(np.array([1.0, -1.0, 1.0, -1.0]))
    assert not hi.is_valid(np.array([1.0, 1.0, 1.0, -1.0]))
    assert not hi.is_valid(np.array([1.0, -1.0, 1.0]))


def test_graph_argument():
    g = hypercube(4, 1, pbc=True)
    assert spin_space(0.5, g).n_sites == 4
