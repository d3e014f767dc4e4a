"""Shared test oracles: finite differences, dense kron assembly, exact
distributions. These stay independent of the code paths they check."""

from __future__ import annotations

import numpy as np
import pytest

from nqs.hilbert import HilbertIndex


def fd_holomorphic(machine, sigma, h=1e-5):
    """Central-difference d log Psi / d alpha_k along the real parameter axis
    (equals the holomorphic derivative for holomorphic machines)."""
    p0 = machine.get_parameters()
    out = np.zeros(machine.n_par, dtype=np.complex128)
    for k in range(machine.n_par):
        pp = p0.copy()
        pp[k] += h
        pm = p0.copy()
        pm[k] -= h
        machine.set_parameters(pp)
        fp = machine.log_val(sigma)
        machine.set_parameters(pm)
        fm = machine.log_val(sigma)
        out[k] = (fp - fm) / (2 * h)
    machine.set_parameters(p0)
    return out


def fd_loss_gradient(loss_fn, machine, h=1e-5):
    """Central-difference gradient of a real loss over (Re, Im) parts,
    assembled as dL/dRe + i dL/dIm."""
    p0 = machine.get_parameters()
    out = np.zeros(machine.n_par, dtype=np.complex128)
    for k in range(machine.n_par):
        for direction in (1.0, 1j):
            pp = p0.copy()
            pp[k] += h * direction
            pm = p0.copy()
            pm[k] -= h * direction
            machine.set_parameters(pp)
            fp = loss_fn()
            machine.set_parameters(pm)
            fm = loss_fn()
            out[k] += direction * (fp - fm) / (2 * h)
    machine.set_parameters(p0)
    return out


def kron_chain(site_matrices):
    """Dense operator from per-site matrices (site 0 most significant)."""
    out = np.array([[1.0 + 0j]])
    for m in site_matrices:
        out = np.kron(out, m)
    return out


def embed_dense(matrix, sites, n_sites, d=2):
    """Dense n_sites-body embedding of a k-local matrix via kron + reordering."""
    k = len(sites)
    dim = d**n_sites
    out = np.zeros((dim, dim), dtype=np.complex128)
    rest = [s for s in range(n_sites) if s not in sites]
    strides = d ** np.arange(n_sites - 1, -1, -1)

    def digits(code):
        return (code // strides) % d

    for row in range(dim):
        drow = digits(row)
        sub_r = 0
        for s in sites:
            sub_r = sub_r * d + drow[s]
        for sub_c in range(d**k):
            cols = drow.copy()
            rem = sub_c
            for s in reversed(sites):
                cols[s] = rem % d
                rem //= d
            col = int(cols @ strides)
            out[row, col] += matrix[sub_r, sub_c]
    return out


def exact_pi(machine, hilbert):
    """Exactly normalized |Psi|^2 over the indexed basis."""
    index = HilbertIndex(hilbert)
    logs = machine.log_val(index.all_states())
    finite = np.isfinite(logs.real)
    w = np.zeros(len(logs))
    w[finite] = np.exp(2 * (logs.real[finite] - logs.real[finite].max()))
    return w / w.sum()


def empirical_distribution(samples, hilbert):
    index = HilbertIndex(hilbert)
    flat = samples.reshape(-1, hilbert.n_sites)
    counts = np.bincount(index.states_to_numbers(flat), minlength=index.n_states)
    return counts / counts.sum()


def tv_distance(p, q):
    return 0.5 * np.abs(p - q).sum()
