"""Variational Monte Carlo ground-state search.

The energy is estimated from local energies

    E_loc(sigma) = sum_sigma' <sigma|H|sigma'> Psi(sigma') / Psi(sigma)

averaged over samples of |Psi|^2, and the energy gradient from the covariance
estimator

    F_k = 2 (<O_k* E_loc> - <O_k*> <E_loc>),      O_k = d log Psi / d alpha_k.

F packs the full real-view derivative of the energy: (Re F_k, Im F_k) =
(dE/dRe alpha_k, dE/dIm alpha_k), i.e. F equals the central-difference
gradient of E and the update alpha <- alpha - lr * F is plain steepest
descent. Stochastic reconfiguration preconditions F with the centered
covariance S_kk' = <O_k* O_k'> - <O_k*><O_k'> by solving (S + shift) d = F
either densely or with a matrix-free conjugate-gradient solver.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .hilbert import HilbertIndex, HilbertSpace
from .machine import Machine
from .operator import Operator
from .optimizer import Optimizer, complex_view, real_view
from .output import RunLogWriter, write_wf
from .stats import SeriesStats, chain_statistics


def local_energy(op: Operator, machine: Machine, sigma: np.ndarray) -> complex:
    """E_loc at a single configuration."""
    sigma = np.asarray(sigma, dtype=np.float64)
    log_here = machine.log_val(sigma)
    if not np.isfinite(log_here.real):
        raise ValueError(f"log Psi is not finite at sigma={sigma.tolist()}")
    primes, mels = op.connected_elements(sigma)
    if len(mels) == 0:
        return 0.0 + 0.0j
    logs = machine.log_val(primes)
    return complex(np.sum(mels * np.exp(logs - log_here)))


def local_energies(op: Operator, machine: Machine, samples: np.ndarray) -> np.ndarray:
    """Vectorized E_loc over a flat (n, n_sites) sample array."""
    samples = np.atleast_2d(np.asarray(samples, dtype=np.float64))
    logs_here = machine.log_val(samples)
    if not np.all(np.isfinite(logs_here.real)):
        bad = int(np.nonzero(~np.isfinite(logs_here.real))[0][0])
        raise ValueError(f"log Psi is not finite at sample {bad}: {samples[bad].tolist()}")
    diag, primes, mels, seg = op.connected_batch(samples)
    eloc = diag.copy()
    if len(mels):
        logs = machine.log_val(primes)
        contrib = mels * np.exp(logs - logs_here[seg])
        np.add.at(eloc, seg, contrib)
    return eloc


@dataclass
class EnergyEstimate:
    mean: float
    sigma: float
    taucorr: float
    variance: float
    imag_mean: float


def estimate_energy(op: Operator, machine: Machine, samples: np.ndarray) -> EnergyEstimate:
    """Energy statistics from chain-structured samples (n_chains, n, n_sites).

    The mean is the average of Re E_loc (the imaginary part is reported as a
    diagnostic); the variance is <|E_loc|^2> - |<E_loc>|^2, unclamped.
    """
    samples = np.asarray(samples, dtype=np.float64)
    if samples.ndim == 2:
        samples = samples[None, :, :]
    c, s, n_sites = samples.shape
    if c * s < 2:
        raise ValueError("need at least 2 samples")
    eloc = local_energies(op, machine, samples.reshape(-1, n_sites)).reshape(c, s)
    st = chain_statistics(eloc.real)
    mean_c = complex(eloc.mean())
    variance = float((np.abs(eloc) ** 2).mean() - abs(mean_c) ** 2)
    return EnergyEstimate(mean=st.mean, sigma=st.sigma, taucorr=st.taucorr,
                          variance=variance, imag_mean=float(eloc.imag.mean()))


def estimate_gradient(op: Operator, machine: Machine, samples: np.ndarray,
                      eloc: np.ndarray | None = None,
                      der_logs: np.ndarray | None = None) -> np.ndarray:
    """Covariance gradient estimator over a flat sample array."""
    samples = np.atleast_2d(np.asarray(samples, dtype=np.float64))
    if eloc is None:
        eloc = local_energies(op, machine, samples)
    if der_logs is None:
        der_logs = machine.der_log(samples)
    oconj = der_logs.conj()
    return 2 * (oconj.T @ eloc / len(eloc) - oconj.mean(axis=0) * eloc.mean())


def full_enumeration_weights(machine: Machine, hilbert: HilbertSpace):
    """(states, pi) with pi the exactly normalized |Psi|^2 over the space.

    States where Psi vanishes keep weight zero and are excluded downstream.
    """
    index = HilbertIndex(hilbert)
    states = index.all_states()
    logs = machine.log_val(states)
    re = logs.real
    finite = np.isfinite(re)
    w = np.zeros(len(states))
    w[finite] = np.exp(2 * (re[finite] - re[finite].max()))
    return states, w / w.sum()


def exact_energy_and_gradient(op: Operator, machine: Machine, hilbert: HilbertSpace):
    """Deterministic (E, F) from full enumeration, for tests and small drivers."""
    states, pi = full_enumeration_weights(machine, hilbert)
    support = pi > 0
    states, pi = states[support], pi[support]
    pi = pi / pi.sum()
    eloc = local_energies(op, machine, states)
    ders = machine.der_log(states)
    e_mean = np.sum(pi * eloc)
    oconj = ders.conj()
    f = (oconj * (pi * eloc)[:, None]).sum(axis=0) - (oconj * pi[:, None]).sum(axis=0) * e_mean
    return complex(e_mean), 2 * f


def _conjugate_gradient(matvec, b, tol, max_iter):
    x = np.zeros_like(b)
    r = b.copy()
    p = r.copy()
    rs = float(np.vdot(r, r).real)
    b_norm = float(np.linalg.norm(b))
    if b_norm == 0:
        return x
    for _ in range(max_iter):
        ap = matvec(p)
        alpha = rs / float(np.vdot(p, ap).real)
        x = x + alpha * p
        r = r - alpha * ap
        rs_new = float(np.vdot(r, r).real)
        if np.sqrt(rs_new) <= tol * b_norm:
            return x
        p = r + (rs_new / rs) * p
        rs = rs_new
    raise RuntimeError(
        f"iterative SR solver did not converge in {max_iter} iterations "
        f"(residual norm {np.sqrt(rs):.3e})"
    )


def sr_update(der_logs: np.ndarray, grad: np.ndarray, diag_shift: float = 0.01,
              solver: str = "iterative", weights: np.ndarray | None = None,
              tol: float = 1e-7, max_iter: int | None = None) -> np.ndarray:
    """Solve (S + diag_shift * I) delta = grad for the SR parameter step.

    S is the centered covariance of the log-derivatives over the sample
    (weights default to uniform); the iterative path never forms S.
    """
    if diag_shift < 0:
        raise ValueError("diag_shift must be non-negative")
    n, m = der_logs.shape
    w = np.full(n, 1.0 / n) if weights is None else np.asarray(weights) / np.sum(weights)
    o_mean = w @ der_logs
    oc = der_logs - o_mean[None, :]
    if solver == "exact":
        s = (oc.conj() * w[:, None]).T @ oc
        s = s + diag_shift * np.eye(m)
        try:
            return np.linalg.solve(s, grad)
        except np.linalg.LinAlgError as e:
            raise RuntimeError(
                "exact SR solve failed on a singular covariance; use a positive diag_shift"
            ) from e
    if solver != "iterative":
        raise ValueError(f"unknown SR solver {solver!r} (valid: exact, iterative)")
    oc_dag = oc.conj().T

    def matvec(v):
        return oc_dag @ (w * (oc @ v)) + diag_shift * v

    return _conjugate_gradient(matvec, grad, tol=tol, max_iter=max_iter or max(200, 10 * m))


@dataclass
class VmcConfig:
    n_iter: int = 100
    n_samples: int = 1000
    method: str = "sr"  # "sr" or "plain"
    diag_shift: float = 0.01
    solver: str = "iterative"
    solver_tol: float = 1e-7
    solver_max_iter: int | None = None
    n_discard: int | None = None  # falls back to the sampler's own setting

    def __post_init__(self):
        if self.n_samples < 2:
            raise ValueError("n_samples must be at least 2")
        if self.method not in ("sr", "plain", "plain-gradient"):
            raise ValueError(f"unknown method {self.method!r} (valid: sr, plain)")


@dataclass
class IterationResult:
    iteration: int
    energy: EnergyEstimate
    acceptance: np.ndarray
    observables: dict[str, SeriesStats] = field(default_factory=dict)
    elapsed: float = 0.0

    def log_record(self) -> dict:
        rec = {
            "Iteration": self.iteration,
            "Energy": {
                "Mean": self.energy.mean,
                "Sigma": self.energy.sigma,
                "Taucorr": self.energy.taucorr,
            },
            "EnergyVariance": {"Mean": self.energy.variance},
            "Acceptance": [float(a) for a in self.acceptance],
        }
        for name, st in self.observables.items():
            rec[name] = {"Mean": st.mean, "Sigma": st.sigma, "Taucorr": st.taucorr}
        return rec


def run_vmc(config: VmcConfig, hamiltonian: Operator, machine: Machine, sampler,
            optimizer: Optimizer, output_prefix: str | None = None,
            observables: dict[str, Operator] | None = None) -> list[IterationResult]:
    """Optimize the machine to minimize <H>; returns per-iteration results.

    Writes one JSON log record per iteration to ``output_prefix.log`` and the
    final parameters to ``output_prefix.wf`` (both skipped when the prefix is
    None). Time per iteration: one sampler pass, one estimation pass over the
    batch, the (optional) SR solve, and the optimizer update.
    """
    observables = observables or {}
    writer = RunLogWriter(output_prefix)
    results: list[IterationResult] = []
    n_chains = len(getattr(sampler, "chains", [])) or sampler.config.n_chains
    per_chain = max(1, -(-config.n_samples // n_chains))
    for it in range(config.n_iter):
        t0 = time.perf_counter()
        sampler.refresh(machine)
        samples, acceptance = sampler.sample(machine, per_chain, config.n_discard)
        flat = samples.reshape(-1, machine.n_visible)
        eloc = local_energies(hamiltonian, machine, flat)
        if not np.all(np.isfinite(eloc)):
            raise RuntimeError(f"non-finite local energy at iteration {it}")
        c, s = samples.shape[0], samples.shape[1]
        st = chain_statistics(eloc.real.reshape(c, s))
        mean_c = complex(eloc.mean())
        energy = EnergyEstimate(mean=st.mean, sigma=st.sigma, taucorr=st.taucorr,
                                variance=float((np.abs(eloc) ** 2).mean() - abs(mean_c) ** 2),
                                imag_mean=float(eloc.imag.mean()))
        if not np.isfinite(energy.mean):
            raise RuntimeError(f"non-finite energy at iteration {it}")
        obs_stats = {}
        for name, obs in observables.items():
            obs_eloc = local_energies(obs, machine, flat)
            obs_stats[name] = chain_statistics(obs_eloc.real.reshape(c, s))
        ders = machine.der_log(flat)
        grad = estimate_gradient(hamiltonian, machine, flat, eloc=eloc, der_logs=ders)
        if config.method == "sr":
            step = sr_update(ders, grad, diag_shift=config.diag_shift, solver=config.solver,
                             tol=config.solver_tol, max_iter=config.solver_max_iter)
        else:
            step = grad
        params = machine.get_parameters()
        new_real = optimizer.update(real_view(params), real_view(step))
        machine.set_parameters(complex_view(new_real))
        result = IterationResult(iteration=it, energy=energy, acceptance=acceptance,
                                 observables=obs_stats, elapsed=time.perf_counter() - t0)
        results.append(result)
        writer.append(result.log_record())
    if output_prefix is not None:
        write_wf(output_prefix, machine)
    return results
