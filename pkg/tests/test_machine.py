import itertools

import numpy as np
import pytest

from conftest import fd_holomorphic
from nqs.hilbert import HilbertIndex, spin_space
from nqs.lattice import hypercube, translation_group
from nqs.machine import (Ffnn, Jastrow, LookupMachine, RbmMultiVal, RbmSpin, RbmSpinSymm,
                         lncosh)

LN2 = np.log(2.0)


def brute_force_rbm(machine, sigma):
    """Explicit sum over hidden configurations h in {-1,+1}^M."""
    total = 0.0 + 0.0j
    for h in itertools.product((-1.0, 1.0), repeat=machine.n_hidden):
        h = np.array(h)
        total += np.exp(machine.a @ sigma + machine.b @ h + h @ machine.W @ sigma)
    return np.log(total)


def test_lncosh_matches_naive_small():
    z = np.array([0.3 + 0.2j, -1.1 + 0.5j, 2.0 - 0.3j, 0.0 + 0.0j])
    assert np.allclose(lncosh(z), np.log(np.cosh(z)), atol=1e-14)


def test_lncosh_overflow_safe():
    z = np.array([500.0 + 0.3j, -800.0 + 1.0j, 2000.0 + 0.0j])
    out = lncosh(z)
    assert np.all(np.isfinite(out.real))
    assert np.allclose(out.real, np.abs(z.real) - LN2, rtol=1e-12)


class TestRbmSpin:
    def test_zero_parameters_constant(self):
        hi = spin_space(0.5, 4)
        ma = RbmSpin(hi, n_hidden=20)
        for sigma in ([1, 1, 1, 1], [1, -1, 1, -1]):
            assert abs(ma.log_val(np.array(sigma, dtype=float)) - 20 * LN2) < 1e-14

    def test_single_unit_value(self):
        hi = spin_space(0.5, 1)
        ma = RbmSpin(hi, n_hidden=1)
        ma.W[0, 0] = 1.0
        assert abs(ma.log_val(np.array([1.0])) - np.log(2 * np.cosh(1.0))) < 1e-14

    def test_matches_hidden_sum_brute_force(self):
        hi = spin_space(0.5, 4)
        ma = RbmSpin(hi, n_hidden=3)
        ma.init_random_parameters(seed=42, sigma=0.3)
        for sigma in HilbertIndex(hi).all_states()[::3]:
            assert abs(ma.log_val(sigma) - brute_force_rbm(ma, sigma)) < 1e-10

    def test_der_log_analytic_and_fd(self):
        hi = spin_space(0.5, 5)
        ma = RbmSpin(hi, n_hidden=4)
        ma.init_random_parameters(seed=3, sigma=0.1)
        sigma = np.array([1.0, -1.0, 1.0, 1.0, -1.0])
        der = ma.der_log(sigma)
        assert np.allclose(der[:5], sigma)  # d/da_i = sigma_i exactly
        theta = ma.b + ma.W @ sigma
        assert np.allclose(der[5:9], np.tanh(theta))
        assert np.allclose(der[9:], np.outer(np.tanh(theta), sigma).ravel())
        fd = fd_holomorphic(ma, sigma)
        assert np.abs(der - fd).max() / np.abs(fd).max() < 1e-6

    def test_parameter_roundtrip(self):
        ma = RbmSpin(spin_space(0.5, 3), n_hidden=2)
        ma.init_random_parameters(seed=1, sigma=0.5)
        p = ma.get_parameters()
        ma2 = RbmSpin(spin_space(0.5, 3), n_hidden=2)
        ma2.set_parameters(p)
        assert np.array_equal(ma2.get_parameters(), p)


class TestInitRandomParameters:
    def test_sigma_zero(self):
        ma = RbmSpin(spin_space(0.5, 4), n_hidden=3)
        ma.init_random_parameters(seed=9, sigma=0.0)
        assert np.all(ma.get_parameters() == 0)

    def test_same_seed_bitwise(self):
        ma1 = RbmSpin(spin_space(0.5, 4), n_hidden=3)
        ma2 = RbmSpin(spin_space(0.5, 4), n_hidden=3)
        ma1.init_random_parameters(seed=1234, sigma=0.01)
        ma2.init_random_parameters(seed=1234, sigma=0.01)
        assert np.array_equal(ma1.get_parameters(), ma2.get_parameters())

    def test_statistics(self):
        ma = RbmSpin(spin_space(0.5, 20), n_hidden=20)
        assert ma.n_par == 440
        ma.init_random_parameters(seed=7, sigma=0.01)
        parts = np.concatenate([ma.get_parameters().real, ma.get_parameters().imag])
        expected = 0.01 * np.sqrt(2 / np.pi)  # E|N(0, sigma^2)|
        se = 0.01 * np.sqrt(1 - 2 / np.pi) / np.sqrt(parts.size)
        assert abs(np.abs(parts).mean() - expected) < 5 * se


class TestRbmSpinSymm:
    def test_expansion_consistency(self):
        g = hypercube(6, 1, pbc=True)
        hi = spin_space(0.5, g)
        ma = RbmSpinSymm(hi, translation_group(g), alpha=2)
        ma.init_random_parameters(seed=11, sigma=0.3)
        expanded = ma.expanded()
        for sigma in HilbertIndex(hi).all_states()[::5]:
            assert abs(ma.log_val(sigma) - expanded.log_val(sigma)) < 1e-12

    def test_translation_invariance(self):
        g = hypercube(6, 1, pbc=True)
        hi = spin_space(0.5, g)
        grp = translation_group(g)
        ma = RbmSpinSymm(hi, grp, alpha=1)
        ma.init_random_parameters(seed=4, sigma=0.4)
        sigma = np.array([1.0, 1.0, -1.0, 1.0, -1.0, -1.0])
        ref = ma.log_val(sigma)
        for k in range(grp.order):
            assert abs(ma.log_val(grp.apply(k, sigma)) - ref) < 1e-12

    def test_zero_parameters(self):
        g = hypercube(4, 1, pbc=True)
        hi = spin_space(0.5, g)
        ma = RbmSpinSymm(hi, translation_group(g), alpha=3)
        assert abs(ma.log_val(np.array([1.0, -1.0, 1.0, 1.0])) - 3 * 4 * LN2) < 1e-14

    def test_der_log_fd(self):
        g = hypercube(4, 1, pbc=True)
        hi = spin_space(0.5, g)
        ma = RbmSpinSymm(hi, translation_group(g), alpha=2)
        ma.init_random_parameters(seed=5, sigma=0.1)
        sigma = np.array([1.0, -1.0, -1.0, 1.0])
        der = ma.der_log(sigma)
        fd = fd_holomorphic(ma, sigma)
        assert np.abs(der - fd).max() / np.abs(fd).max() < 1e-6

    def test_argmax_orbit_invariance(self):
        g = hypercube(6, 1, pbc=True)
        hi = spin_space(0.5, g)
        grp = translation_group(g)
        ma = RbmSpinSymm(hi, grp, alpha=1)
        ma.init_random_parameters(seed=21, sigma=0.5)
        idx = HilbertIndex(hi)
        states = idx.all_states()
        amps = np.abs(np.exp(ma.log_val(states)))
        best = states[np.argmax(amps)]
        best_amp = amps.max()
        for k in range(grp.order):
            assert abs(np.abs(np.exp(ma.log_val(grp.apply(k, best)))) - best_amp) < 1e-12 * best_amp


class TestRbmMultiVal:
    def test_zero_parameters(self):
        hi = spin_space(1.0, 3)
        ma = RbmMultiVal(hi, n_hidden=5)
        assert abs(ma.log_val(np.array([-2.0, 0.0, 2.0])) - 5 * LN2) < 1e-14

    def test_d2_reduction_to_spin_rbm(self):
        hi = spin_space(0.5, 4)
        spin = RbmSpin(hi, n_hidden=3)
        spin.init_random_parameters(seed=13, sigma=0.3)
        multi = RbmMultiVal(hi, n_hidden=3)
        # explicit linear map: a_(i,0) = -a'_i, a_(i,1) = +a'_i, same for W columns
        params = np.zeros(multi.n_par, dtype=np.complex128)
        a = np.zeros(8, dtype=np.complex128)
        a[0::2] = -spin.a
        a[1::2] = spin.a
        w = np.zeros((3, 8), dtype=np.complex128)
        w[:, 0::2] = -spin.W
        w[:, 1::2] = spin.W
        params[:8] = a
        params[8:11] = spin.b
        params[11:] = w.ravel()
        multi.set_parameters(params)
        for sigma in HilbertIndex(hi).all_states():
            assert abs(multi.log_val(sigma) - spin.log_val(sigma)) < 1e-12

    def test_spin1_brute_force_one_hot(self):
        hi = spin_space(1.0, 2)
        ma = RbmMultiVal(hi, n_hidden=2)
        ma.init_random_parameters(seed=2, sigma=0.3)
        inner = ma._inner
        for sigma in HilbertIndex(hi).all_states():
            x = ma.one_hot(np.atleast_2d(sigma))[0]
            expected = inner.a @ x + sum(
                np.log(2 * np.cosh(inner.b[j] + inner.W[j] @ x)) for j in range(2)
            )
            assert abs(ma.log_val(sigma) - expected) < 1e-12

    def test_der_log_fd(self):
        hi = spin_space(1.0, 2)
        ma = RbmMultiVal(hi, n_hidden=2)
        ma.init_random_parameters(seed=6, sigma=0.1)
        sigma = np.array([2.0, -2.0])
        der = ma.der_log(sigma)
        fd = fd_holomorphic(ma, sigma)
        assert np.abs(der - fd).max() / np.abs(fd).max() < 1e-6

    def test_rejects_invalid_value(self):
        ma = RbmMultiVal(spin_space(1.0, 2), n_hidden=2)
        with pytest.raises(ValueError):
            ma.log_val(np.array([1.0, 0.0]))


class TestFfnn:
    def test_identity_dense_sums_input(self):
        hi = spin_space(0.5, 3)
        ma = Ffnn.from_spec(hi, [{"kind": "dense", "output_dim": 3}])
        params = np.concatenate([np.eye(3).ravel(), np.zeros(3)]).astype(np.complex128)
        ma.set_parameters(params)
        assert abs(ma.log_val(np.array([1.0, -1.0, 1.0])) - 1.0) < 1e-14

    def test_single_lncosh_layer_equals_rbm_without_visible_bias(self):
        hi = spin_space(0.5, 4)
        rbm = RbmSpin(hi, n_hidden=3)
        rbm.init_random_parameters(seed=17, sigma=0.3)
        rbm.a[:] = 0
        ffnn = Ffnn.from_spec(hi, [{"kind": "dense", "output_dim": 3}, {"kind": "lncosh"}])
        ffnn.set_parameters(np.concatenate([rbm.W.ravel(), rbm.b]))
        for sigma in HilbertIndex(hi).all_states()[::3]:
            diff = rbm.log_val(sigma) - (ffnn.log_val(sigma) + 3 * LN2)
            assert abs(diff) < 1e-12

    def test_two_layer_loop_oracle(self):
        hi = spin_space(0.5, 4)
        ma = Ffnn.from_spec(hi, [
            {"kind": "dense", "output_dim": 5}, {"kind": "tanh"},
            {"kind": "dense", "output_dim": 2}, {"kind": "lncosh"},
        ])
        ma.init_random_parameters(seed=23, sigma=0.2)
        w1, b1 = ma.layers[0].W, ma.layers[0].b
        w2, b2 = ma.layers[2].W, ma.layers[2].b
        sigma = np.array([1.0, 1.0, -1.0, 1.0])
        # straightforward re-evaluation with explicit loops
        y1 = [b1[j] + sum(w1[j, k] * sigma[k] for k in range(4)) for j in range(5)]
        y1 = [np.tanh(z) for z in y1]
        y2 = [b2[j] + sum(w2[j, k] * y1[k] for k in range(5)) for j in range(2)]
        expected = sum(np.log(np.cosh(z)) for z in y2)
        assert abs(ma.log_val(sigma) - expected) < 1e-12

    def test_der_log_fd(self):
        hi = spin_space(0.5, 4)
        ma = Ffnn.from_spec(hi, [
            {"kind": "dense", "output_dim": 4}, {"kind": "lncosh"},
            {"kind": "dense", "output_dim": 2}, {"kind": "tanh"},
        ])
        ma.init_random_parameters(seed=31, sigma=0.1)
        sigma = np.array([-1.0, 1.0, 1.0, -1.0])
        der = ma.der_log(sigma)
        fd = fd_holomorphic(ma, sigma)
        assert np.abs(der - fd).max() / np.abs(fd).max() < 1e-6

    def test_relu_gate_and_derivative(self):
        hi = spin_space(0.5, 3)
        ma = Ffnn.from_spec(hi, [{"kind": "dense", "output_dim": 3}, {"kind": "relu"}])
        rng = np.random.default_rng(3)
        while True:
            params = 0.3 * (rng.normal(size=ma.n_par) + 1j * rng.normal(size=ma.n_par))
            ma.set_parameters(params)
            sigma = np.array([1.0, -1.0, 1.0])
            pre = ma.layers[0].forward(sigma[None, :].astype(complex))[0]
            if np.abs(pre.real).min() > 0.05:  # keep clear of the gate edge
                break
        gated = np.where(pre.real > 0, pre, 0.0)
        assert abs(ma.log_val(sigma) - gated.sum()) < 1e-12
        fd = fd_holomorphic(ma, sigma)
        der = ma.der_log(sigma)
        assert np.abs(der - fd).max() / max(np.abs(fd).max(), 1e-12) < 1e-6

    def test_dimension_chain_mismatch(self):
        hi = spin_space(0.5, 3)
        from nqs.machine import DenseLayer
        with pytest.raises(ValueError):
            Ffnn(hi, [DenseLayer(4, 2)])


class TestJastrow:
    def test_zero_and_single_pair(self):
        hi = spin_space(0.5, 2)
        ma = Jastrow(hi)
        assert ma.log_val(np.array([1.0, 1.0])) == 0
        ma.set_parameters(np.array([0.7 + 0.2j]))
        assert abs(ma.log_val(np.array([1.0, 1.0])) - (0.7 + 0.2j)) < 1e-14

    def test_global_flip_invariance(self):
        hi = spin_space(0.5, 6)
        ma = Jastrow(hi)
        assert ma.n_par == 15
        ma.init_random_parameters(seed=5, sigma=0.4)
        rng = np.random.default_rng(0)
        for _ in range(10):
            sigma = rng.choice([-1.0, 1.0], size=6)
            assert abs(ma.log_val(sigma) - ma.log_val(-sigma)) < 1e-12

    def test_der_log_fd(self):
        hi = spin_space(0.5, 5)
        ma = Jastrow(hi)
        ma.init_random_parameters(seed=8, sigma=0.2)
        sigma = np.array([1.0, -1.0, -1.0, 1.0, 1.0])
        fd = fd_holomorphic(ma, sigma)
        assert np.abs(ma.der_log(sigma) - fd).max() / np.abs(fd).max() < 1e-6


class TestLookupMachine:
    def test_table_lookup_and_one_hot_der(self):
        hi = spin_space(0.5, 3)
        idx = HilbertIndex(hi)
        table = np.linspace(0, 1, idx.n_states) + 1j * np.linspace(1, 0, idx.n_states)
        ma = LookupMachine(hi, table)
        for i in range(idx.n_states):
            sigma = idx.number_to_state(i)
            assert ma.log_val(sigma) == table[i]
            der = ma.der_log(sigma)
            assert der[i] == 1.0 and np.count_nonzero(der) == 1

    def test_from_state_vector_zeros(self):
        hi = spin_space(0.5, 2)
        vec = np.array([0.0, 1.0, 1.0, 0.0]) / np.sqrt(2)
        ma = LookupMachine.from_state_vector(hi, vec)
        assert ma.log_val(np.array([-1.0, -1.0])).real == -np.inf
        assert np.isfinite(ma.log_val(np.array([-1.0, 1.0])).real)


def test_overflow_safe_log_val_large_parameters():
    # parameter magnitudes up to 10 on 20 sites: log Psi stays finite
    hi = spin_space(0.5, 20)
    ma = RbmSpin(hi, n_hidden=20)
    rng = np.random.default_rng(0)
    ma.set_parameters(10.0 * (rng.uniform(-1, 1, ma.n_par) + 1j * rng.uniform(-1, 1, ma.n_par)))
    sigma = rng.choice([-1.0, 1.0], size=20)
    val = ma.log_val(sigma)
    assert np.isfinite(val.real) and np.isfinite(val.imag)


def test_batch_shapes():
    hi = spin_space(0.5, 4)
    ma = RbmSpin(hi, n_hidden=3)
    ma.init_random_parameters(seed=1, sigma=0.1)
    batch = HilbertIndex(hi).all_states()[:7]
    vals = ma.log_val(batch)
    ders = ma.der_log(batch)
    assert vals.shape == (7,)
    assert ders.shape == (7, ma.n_par)
    # batched and single paths agree to rounding (BLAS kernels may differ)
    assert abs(vals[2] - ma.log_val(batch[2])) < 1e-12
