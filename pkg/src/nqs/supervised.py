"""Supervised wavefunction learning by minimizing the negative log overlap.

The loss is L = -log [ <tar|NN><NN|tar> / (<tar|tar><NN|NN>) ], invariant
under rescaling of either state. The gradient estimator is

    grad_k = 2 ( <O_k*>_{pi_NN} - <O_k* r*>_tar / <r*>_tar )

with r = Psi_NN / Psi_tar; mini-batches are drawn from the target
distribution |Psi_tar|^2 with replacement. As in the VMC driver, the
returned complex vector packs the full real-view derivative of L, so its
real view equals the central-difference gradient of the loss.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .machine import Machine
from .optimizer import Optimizer, complex_view, real_view
from .output import RunLogWriter, write_wf

FULL_SUM_LIMIT = 2**16


@dataclass
class SupervisedDataset:
    """Configurations with target log-amplitudes log Psi_tar(sigma)."""

    samples: np.ndarray
    log_targets: np.ndarray

    def __post_init__(self):
        self.samples = np.atleast_2d(np.asarray(self.samples, dtype=np.float64))
        self.log_targets = np.asarray(self.log_targets, dtype=np.complex128).ravel()
        if len(self.samples) != len(self.log_targets):
            raise ValueError("samples and targets must have equal length")
        if len(self.samples) == 0:
            raise ValueError("dataset must be nonempty")

    def __len__(self):
        return len(self.samples)

    def target_probabilities(self) -> np.ndarray:
        """|Psi_tar|^2 normalized over the dataset entries."""
        re = self.log_targets.real
        finite = np.isfinite(re)
        w = np.zeros(len(re))
        w[finite] = np.exp(2 * (re[finite] - re[finite].max()))
        return w / w.sum()

    @classmethod
    def from_state_vector(cls, index, vec: np.ndarray) -> "SupervisedDataset":
        """Full-space dataset from an ED vector in HilbertIndex order."""
        vec = np.asarray(vec, dtype=np.complex128)
        with np.errstate(divide="ignore"):
            logs = np.where(vec == 0, -np.inf + 0j, np.log(np.where(vec == 0, 1.0, vec)))
        return cls(samples=index.all_states(), log_targets=logs)


@dataclass
class OverlapResult:
    loss: float
    overlap: float
    zero_overlap: bool = False


def overlap_loss(machine: Machine, dataset: SupervisedDataset, sampled: bool = False,
                 rng: np.random.Generator | None = None, n_est: int = 4096) -> OverlapResult:
    """Negative log overlap over the dataset's configurations.

    With ``sampled=True`` (or beyond the full-summation limit) the loss is
    estimated self-normalized from draws of the target distribution.
    """
    lt = dataset.log_targets
    ln = machine.log_val(dataset.samples)
    if not sampled and len(dataset) <= FULL_SUM_LIMIT:
        finite_t = np.isfinite(lt.real)
        if not np.any(np.isfinite(ln.real)):
            raise ValueError("machine vanishes on the whole target support")
        mt = lt.real[finite_t].max()
        mn = ln.real.max()
        a = np.sum(np.where(finite_t, np.exp(np.conj(lt - mt) + (ln - mn)), 0.0))
        nt = np.sum(np.where(finite_t, np.exp(2 * (lt.real - mt)), 0.0))
        nn = np.sum(np.exp(2 * (ln.real - mn)))
        overlap = float(abs(a) ** 2 / (nt * nn))
    else:
        rng = rng or np.random.default_rng(0)
        probs = dataset.target_probabilities()
        idx = rng.choice(len(dataset), size=n_est, p=probs)
        r = np.exp(ln[idx] - lt[idx])
        overlap = float(abs(r.mean()) ** 2 / (np.abs(r) ** 2).mean())
    if overlap <= 0:
        return OverlapResult(loss=math.inf, overlap=0.0, zero_overlap=True)
    return OverlapResult(loss=float(-np.log(overlap)), overlap=overlap)


def overlap_gradient(machine: Machine, batch_samples: np.ndarray, batch_log_targets: np.ndarray,
                     model_dataset: SupervisedDataset | None = None) -> np.ndarray:
    """Cogradient of the overlap loss.

    The target-side expectation runs over the batch (drawn from
    |Psi_tar|^2); the model-side expectation <O*>_{pi_NN} uses full
    summation over ``model_dataset`` when given, otherwise self-normalized
    importance weights |r|^2 on the batch. Batch entries with zero target
    amplitude are excluded with a warning.
    """
    batch_samples = np.atleast_2d(np.asarray(batch_samples, dtype=np.float64))
    batch_log_targets = np.asarray(batch_log_targets, dtype=np.complex128).ravel()
    good = np.isfinite(batch_log_targets.real)
    n_dropped = int((~good).sum())
    if n_dropped:
        warnings.warn(f"excluded {n_dropped} batch entries with zero target amplitude",
                      stacklevel=2)
        batch_samples = batch_samples[good]
        batch_log_targets = batch_log_targets[good]
    if len(batch_samples) == 0:
        raise ValueError("batch has no entries with nonzero target amplitude")
    ln = machine.log_val(batch_samples)
    ders = machine.der_log(batch_samples)
    r_conj = np.exp(np.conj(ln - batch_log_targets))
    target_term = (ders.conj() * r_conj[:, None]).mean(axis=0) / r_conj.mean()

    if model_dataset is not None:
        states, pi = model_dataset.samples, None
        lm = machine.log_val(states)
        w = np.exp(2 * (lm.real - lm.real.max()))
        pi = w / w.sum()
        dm = machine.der_log(states)
        model_term = (dm.conj() * pi[:, None]).sum(axis=0)
    else:
        w = np.abs(np.exp(ln - batch_log_targets)) ** 2
        w = w / w.sum()
        model_term = (ders.conj() * w[:, None]).sum(axis=0)
    return 2 * (model_term - target_term)


def run_supervised(machine: Machine, optimizer: Optimizer, dataset: SupervisedDataset,
                   n_iter: int, batch_size: int, output_prefix: str | None = None,
                   loss_kind: str = "overlap", seed: int = 0) -> list[dict]:
    """Train the machine on the dataset; logs the overlap per iteration.

    The model-side expectation uses full summation over the dataset (the
    intended use is a complete or near-complete target support).
    """
    if loss_kind != "overlap":
        raise ValueError(f"unknown loss kind {loss_kind!r}; only 'overlap' is supported")
    if batch_size > len(dataset):
        raise ValueError("batch_size cannot exceed the dataset size")
    rng = np.random.default_rng(seed)
    probs = dataset.target_probabilities()
    writer = RunLogWriter(output_prefix)
    records = []
    for it in range(n_iter):
        idx = rng.choice(len(dataset), size=batch_size, p=probs)
        grad = overlap_gradient(machine, dataset.samples[idx], dataset.log_targets[idx],
                                model_dataset=dataset)
        new_real = optimizer.update(real_view(machine.get_parameters()), real_view(grad))
        machine.set_parameters(complex_view(new_real))
        res = overlap_loss(machine, dataset)
        record = {"Iteration": it, "Loss": res.loss if np.isfinite(res.loss) else 1e308,
                  "Overlap": res.overlap}
        records.append(record)
        writer.append(record)
    if output_prefix is not None:
        write_wf(output_prefix, machine)
    return records
