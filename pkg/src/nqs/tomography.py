"""Quantum state reconstruction from projective measurements (Qsr).

Training minimizes the negative log-likelihood of measurement records under
the machine's normalized distribution pi(sigma) = |Psi(sigma)|^2 / Z.
Records taken outside the reference basis are handled by per-site unitary
rotations; for basis letters X and Y the 2x2 matrices (rows indexed by the
outcome, columns by the reference value, value order -1, +1) are

    U_X = (1/sqrt 2) [[1, 1], [1, -1]]
    U_Y = (1/sqrt 2) [[1, -i], [1, i]]

so the rotated amplitude is Psi_b(o) = sum_s U_b(o, s) Psi(s), a sum over
the 2^(#non-Z sites) reference states compatible with the outcome,
accumulated with a max-shift for stability.

The NLL gradient estimator is  2 ( <O_k*>_pi - mean_records conj(O_k^rot) )
with O^rot the log-derivative propagated through the rotation expansion; as
in the other drivers, the returned complex vector packs the full real-view
derivative, so its real view equals the central-difference gradient.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .hilbert import HilbertIndex, HilbertSpace
from .machine import Machine
from .optimizer import Optimizer, complex_view, real_view
from .output import RunLogWriter, write_wf

EXACT_NORM_LIMIT = 2**16
MAX_ROTATED_SITES = 16

BASIS_ROTATIONS = {
    "X": np.array([[1, 1], [1, -1]], dtype=np.complex128) / np.sqrt(2),
    "Y": np.array([[1, -1j], [1, 1j]], dtype=np.complex128) / np.sqrt(2),
}


@dataclass
class MeasurementRecord:
    """One projective measurement: per-site basis letters and +-1 outcomes."""

    basis: str
    outcome: np.ndarray

    def __post_init__(self):
        self.outcome = np.asarray(self.outcome, dtype=np.float64).ravel()
        if len(self.basis) != len(self.outcome):
            raise ValueError("basis string and outcome must have equal length")
        if any(ch not in "XYZ" for ch in self.basis):
            raise ValueError(f"basis letters must be X, Y or Z, got {self.basis!r}")


def _group_positions(records) -> dict[str, list[int]]:
    groups: dict[str, list[int]] = {}
    for i, rec in enumerate(records):
        groups.setdefault(rec.basis, []).append(i)
    return groups


def _expand_rotation(basis: str, outcomes: np.ndarray):
    """All reference states reachable from the outcomes, with U coefficients.

    Returns (states (B, E, N), coeffs (B, E)) where E = 2^(#non-Z sites).
    """
    outcomes = np.atleast_2d(np.asarray(outcomes, dtype=np.float64))
    n = outcomes.shape[1]
    nonz = [i for i, ch in enumerate(basis) if ch != "Z"]
    k = len(nonz)
    if k > MAX_ROTATED_SITES:
        raise ValueError(f"{k} rotated sites exceed the expansion bound {MAX_ROTATED_SITES}")
    n_rec = outcomes.shape[0]
    n_exp = 2**k
    combos = (np.arange(n_exp)[:, None] >> np.arange(k - 1, -1, -1)[None, :]) & 1  # (E, k)
    states = np.repeat(outcomes[:, None, :], n_exp, axis=1)
    coeffs = np.ones((n_rec, n_exp), dtype=np.complex128)
    out_idx = ((outcomes + 1) / 2).astype(np.int64)  # value -1 -> 0, +1 -> 1
    for j, site in enumerate(nonz):
        u = BASIS_ROTATIONS[basis[site]]
        states[:, :, site] = 2.0 * combos[None, :, j] - 1.0
        coeffs = coeffs * u[out_idx[:, site][:, None], combos[None, :, j]]
    return states, coeffs


def _rotated_batch(machine: Machine, basis: str, outcomes: np.ndarray, want_der: bool):
    """log of (U_b Psi) at each outcome; optionally the rotated log-derivatives."""
    states, coeffs = _expand_rotation(basis, outcomes)
    n_rec, n_exp, n = states.shape
    flat = states.reshape(-1, n)
    logs = machine.log_val(flat).reshape(n_rec, n_exp)
    m = np.max(logs.real, axis=1)
    m = np.where(np.isfinite(m), m, 0.0)
    t = coeffs * np.exp(logs - m[:, None])
    s = t.sum(axis=1)
    log_amp = m + np.log(s)
    if not want_der:
        return log_amp, None
    ders = machine.der_log(flat).reshape(n_rec, n_exp, -1)
    rot_der = (t[:, :, None] * ders).sum(axis=1) / s[:, None]
    return log_amp, rot_der


def rotated_log_amplitude(machine: Machine, record: MeasurementRecord) -> complex:
    """log of (U_b Psi)(outcome) for one record."""
    log_amp, _ = _rotated_batch(machine, record.basis, record.outcome[None, :], want_der=False)
    return complex(log_amp[0])


def log_normalization(machine: Machine, hilbert: HilbertSpace, approximate: bool = False,
                      n_est: int = 65536, seed: int = 0) -> float:
    """log sum_sigma |Psi(sigma)|^2; exact at desk scale, else a flagged
    uniform-sampling estimate."""
    index = HilbertIndex(hilbert)
    if index.n_states <= EXACT_NORM_LIMIT and not approximate:
        logs = machine.log_val(index.all_states())
        m = logs.real.max()
        return float(2 * m + np.log(np.sum(np.exp(2 * (logs.real - m)))))
    warnings.warn("normalization estimated by uniform sampling (approximate)", stacklevel=2)
    rng = np.random.default_rng(seed)
    d = hilbert.local_dim
    sigmas = hilbert.local_values[rng.integers(0, d, size=(n_est, hilbert.n_sites))]
    logs = machine.log_val(sigmas)
    m = logs.real.max()
    mean = np.mean(np.exp(2 * (logs.real - m)))
    return float(2 * m + np.log(mean) + np.log(float(index.n_states)))


def nll_loss(machine: Machine, records, hilbert: HilbertSpace) -> float:
    """Mean negative log-likelihood of the records under pi."""
    records = list(records)
    if not records:
        raise ValueError("dataset must be nonempty")
    log_z = log_normalization(machine, hilbert)
    total = 0.0
    for basis, pos in _group_positions(records).items():
        outcomes = np.array([records[i].outcome for i in pos])
        log_amp, _ = _rotated_batch(machine, basis, outcomes, want_der=False)
        total += float(np.sum(2 * log_amp.real - log_z))
    return -total / len(records)


def nll_gradient(machine: Machine, batch, model_samples: np.ndarray | None = None,
                 hilbert: HilbertSpace | None = None,
                 weights: np.ndarray | None = None) -> np.ndarray:
    """Cogradient of the NLL over a batch of records.

    The model term <O*>_pi uses the exact full-space expectation when
    ``model_samples`` is None (requires ``hilbert`` at desk scale), otherwise
    the average over the provided samples from pi. ``weights`` (optional,
    normalized internally) weight the records, which makes an exactly
    pi-weighted full-space "batch" possible in tests.
    """
    batch = list(batch)
    if not batch:
        raise ValueError("batch must be nonempty")
    if weights is None:
        w = np.full(len(batch), 1.0 / len(batch))
    else:
        w = np.asarray(weights, dtype=np.float64)
        w = w / w.sum()
    data_term = np.zeros(machine.n_par, dtype=np.complex128)
    for basis, pos in _group_positions(batch).items():
        outcomes = np.array([batch[i].outcome for i in pos])
        _, rot_der = _rotated_batch(machine, basis, outcomes, want_der=True)
        data_term += (rot_der.conj() * w[pos][:, None]).sum(axis=0)

    if model_samples is None:
        if hilbert is None:
            raise ValueError("exact model expectation requires the Hilbert space")
        index = HilbertIndex(hilbert)
        states = index.all_states()
        logs = machine.log_val(states)
        pw = np.exp(2 * (logs.real - logs.real.max()))
        pw = pw / pw.sum()
        ders = machine.der_log(states)
        model_term = (ders.conj() * pw[:, None]).sum(axis=0)
    else:
        ders = machine.der_log(np.atleast_2d(model_samples))
        model_term = ders.conj().mean(axis=0)
    return 2 * (model_term - data_term)


def fidelity(machine: Machine, hilbert: HilbertSpace, reference: np.ndarray) -> float:
    """|<ref|Psi_NN>|^2 / (<ref|ref><NN|NN>) via dense algebra."""
    index = HilbertIndex(hilbert)
    logs = machine.log_val(index.all_states())
    m = logs.real.max()
    psi = np.exp(logs - m)
    ref = np.asarray(reference, dtype=np.complex128)
    num = abs(np.vdot(ref, psi)) ** 2
    den = float(np.vdot(ref, ref).real * np.vdot(psi, psi).real)
    return float(num / den)


def rotate_state_vector(vec: np.ndarray, n_sites: int, basis: str) -> np.ndarray:
    """(tensor product of per-site U) applied to a full state vector.

    The vector is in HilbertIndex order (site 0 most significant, value
    order -1, +1), matching the machine-side rotation convention.
    """
    psi = np.asarray(vec, dtype=np.complex128).reshape((2,) * n_sites)
    for site, ch in enumerate(basis):
        if ch == "Z":
            continue
        u = BASIS_ROTATIONS[ch]
        psi = np.moveaxis(np.tensordot(u, psi, axes=([1], [site])), 0, site)
    return psi.reshape(-1)


def generate_measurements(state_vector: np.ndarray, hilbert: HilbertSpace, bases: list[str],
                          n_per_basis: int, seed: int = 0) -> list[MeasurementRecord]:
    """Draw measurement records from a known state, one batch per basis."""
    index = HilbertIndex(hilbert)
    states = index.all_states()
    rng = np.random.default_rng(seed)
    records = []
    for basis in bases:
        rotated = rotate_state_vector(state_vector, hilbert.n_sites, basis)
        probs = np.abs(rotated) ** 2
        probs = probs / probs.sum()
        idx = rng.choice(len(probs), size=n_per_basis, p=probs)
        for i in idx:
            records.append(MeasurementRecord(basis=basis, outcome=states[i].copy()))
    return records


def run_qsr(machine: Machine, optimizer: Optimizer, records, sampler=None, n_iter: int = 100,
            batch_size: int = 100, output_prefix: str | None = None,
            hilbert: HilbertSpace | None = None, reference_state: np.ndarray | None = None,
            seed: int = 0) -> list[dict]:
    """Maximum-likelihood reconstruction driver.

    The model expectation uses the exact full-space term when ``sampler`` is
    None (requires ``hilbert``), otherwise samples drawn from the sampler
    each iteration. Logs the NLL and, when a reference state is supplied,
    the fidelity against it.
    """
    records = list(records)
    if not records:
        raise ValueError("dataset must be nonempty")
    if hilbert is None:
        raise ValueError("run_qsr requires the Hilbert space")
    rng = np.random.default_rng(seed)
    writer = RunLogWriter(output_prefix)
    out = []
    for it in range(n_iter):
        idx = rng.choice(len(records), size=min(batch_size, len(records)), replace=True)
        batch = [records[i] for i in idx]
        if sampler is None:
            grad = nll_gradient(machine, batch, hilbert=hilbert)
        else:
            sampler.refresh(machine)
            model_samples, _ = sampler.sample(machine, max(1, batch_size // sampler.config.n_chains))
            grad = nll_gradient(machine, batch,
                                model_samples=model_samples.reshape(-1, machine.n_visible))
        new_real = optimizer.update(real_view(machine.get_parameters()), real_view(grad))
        machine.set_parameters(complex_view(new_real))
        record = {"Iteration": it, "NLL": nll_loss(machine, records, hilbert)}
        if reference_state is not None:
            record["Fidelity"] = fidelity(machine, hilbert, reference_state)
        out.append(record)
        writer.append(record)
    if output_prefix is not None:
        write_wf(output_prefix, machine)
    return out
