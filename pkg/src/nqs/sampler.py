"""Markov-chain samplers targeting pi(sigma) ~ |Psi(sigma)|^2.

Metropolis kinds propose single-site value changes (``local``) or
bond-constrained value swaps (``exchange``, conserving the configuration
sum); both have parallel-tempering variants running ``n_replicas`` replicas
per chain that target |Psi|^(2 beta_r) with a linear beta schedule
beta_r = 1 - r/n_replicas, swapping adjacent replica pairs after each sweep.
Only replica 0 contributes samples. ``exact`` draws i.i.d. samples from the
fully normalized distribution (small spaces only).

Reproducibility contract: chain c owns a generator derived from (seed, c)
via numpy's SeedSequence and consumes it in a fixed order -- per sweep and
replica, a block of proposal indices, a block of replacement-value indices
(local moves with more than two local values), and a block of acceptance
uniforms, followed by one uniform per adjacent replica pair for tempering
swaps. Chains advance in lockstep groups of fixed size (set by the chain
count, never by the worker count), so log Psi is always evaluated on
fixed-shape batches; NQS_WORKERS only schedules whole groups onto threads.
Results are therefore bitwise independent of the worker count.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .hilbert import HilbertIndex, HilbertSpace
from .lattice import Graph
from .machine import Machine

SAMPLER_KINDS = ("local", "exchange", "local_pt", "exchange_pt", "exact")
MAX_EXACT_STATES = 2**20
GROUP_SIZE = 16


def worker_count() -> int:
    """Worker cap from the NQS_WORKERS environment variable (default 1)."""
    try:
        return max(1, int(os.environ.get("NQS_WORKERS", "1")))
    except ValueError:
        return 1


def acceptance_probability(two_re_dlog: float) -> float:
    """min(1, exp(x)) evaluated without overflow."""
    return 1.0 if two_re_dlog >= 0 else math.exp(two_re_dlog)


def chain_seed_sequence(seed: int, chain: int) -> np.random.SeedSequence:
    """Pure function of (master seed, chain index) for per-chain streams."""
    return np.random.SeedSequence(entropy=seed, spawn_key=(chain,))


@dataclass
class SamplerConfig:
    kind: str = "local"
    n_chains: int = 8
    sweep_size: int | None = None  # defaults to n_sites
    n_discard: int = 0
    n_replicas: int = 4
    betas: list[float] | None = None

    def __post_init__(self):
        if self.kind not in SAMPLER_KINDS:
            raise ValueError(f"unknown sampler kind {self.kind!r} (valid: {', '.join(SAMPLER_KINDS)})")
        if self.n_chains < 1 or (self.sweep_size is not None and self.sweep_size < 1):
            raise ValueError("sampler counts must be positive")
        if self.n_discard < 0:
            raise ValueError("n_discard must be non-negative")
        if self.kind.endswith("_pt") and self.n_replicas < 2:
            raise ValueError("parallel tempering needs n_replicas >= 2")


class MarkovChain:
    """State of one chain: replica configurations, cached log Psi, RNG, tallies."""

    def __init__(self, n_replicas: int, n_sites: int, rng: np.random.Generator):
        self.sigma = np.zeros((n_replicas, n_sites))
        self.log_psi = np.zeros(n_replicas, dtype=np.complex128)
        self.rng = rng
        self.accepted = np.zeros(n_replicas, dtype=np.int64)
        self.proposed = np.zeros(n_replicas, dtype=np.int64)
        self.swap_accepted = np.zeros(max(0, n_replicas - 1), dtype=np.int64)
        self.swap_proposed = np.zeros(max(0, n_replicas - 1), dtype=np.int64)

    def reset_counters(self):
        self.accepted[:] = 0
        self.proposed[:] = 0
        self.swap_accepted[:] = 0
        self.swap_proposed[:] = 0

    def acceptance(self) -> np.ndarray:
        return self.accepted / np.maximum(self.proposed, 1)


def _random_state(hilbert: HilbertSpace, rng: np.random.Generator) -> np.ndarray:
    """A valid initial configuration (uniform sites, or a shuffled multiset
    satisfying the sum constraint)."""
    values = hilbert.local_values
    n, d = hilbert.n_sites, hilbert.local_dim
    if not hilbert.constrained:
        return values[rng.integers(0, d, size=n)]
    steps = np.diff(values)
    if not np.allclose(steps, steps[0]):
        raise ValueError("constrained initialization requires uniformly spaced local values")
    units = round((hilbert.constraint_sum - n * values[0]) / steps[0])
    counts = np.zeros(n, dtype=np.int64)
    for i in range(n):
        take = min(d - 1, units)
        counts[i] = take
        units -= take
    if units != 0:
        raise ValueError("constraint unreachable")
    return rng.permutation(values[counts])


class MetropolisSampler:
    """Metropolis(-tempering) sampler with persistent chains."""

    def __init__(self, hilbert: HilbertSpace, config: SamplerConfig, graph: Graph | None = None,
                 seed: int = 0):
        if config.kind == "exact":
            raise ValueError("use ExactSampler for kind 'exact'")
        self.hilbert = hilbert
        self.config = config
        self.kind = config.kind.replace("_pt", "")
        self.is_pt = config.kind.endswith("_pt")
        self.n_replicas = config.n_replicas if self.is_pt else 1
        if self.kind == "exchange":
            if graph is None or graph.n_edges == 0:
                raise ValueError("exchange sampler requires a graph with edges")
            self.edges = graph.edge_array()[:, :2]
        else:
            self.edges = None
            if hilbert.constrained:
                raise ValueError("local sampler does not conserve the space constraint; use exchange")
        self.sweep_size = config.sweep_size or hilbert.n_sites
        if config.betas is not None:
            betas = np.asarray(config.betas, dtype=np.float64)
            if len(betas) != self.n_replicas or betas[0] != 1.0:
                raise ValueError("betas must have length n_replicas and start at 1.0")
        else:
            betas = 1.0 - np.arange(self.n_replicas) / self.n_replicas
        self.betas = betas
        self.chains = []
        for c in range(config.n_chains):
            rng = np.random.Generator(np.random.PCG64(chain_seed_sequence(seed, c)))
            chain = MarkovChain(self.n_replicas, hilbert.n_sites, rng)
            for r in range(self.n_replicas):
                chain.sigma[r] = _random_state(hilbert, rng)
            self.chains.append(chain)

    def refresh(self, machine: Machine):
        """Recompute cached log Psi after a parameter update."""
        for chain in self.chains:
            chain.log_psi[:] = machine.log_val(chain.sigma)

    # -- lockstep advancement over one fixed group of chains ------------------

    def _draw_sweep(self, chain: MarkovChain):
        """Per-sweep RNG blocks for one chain, in the documented order."""
        rng = chain.rng
        n, d = self.hilbert.n_sites, self.hilbert.local_dim
        per_replica = []
        for _ in range(self.n_replicas):
            if self.kind == "local":
                proposals = rng.integers(0, n, size=self.sweep_size)
                vals = rng.integers(0, d - 1, size=self.sweep_size) if d > 2 else None
            else:
                proposals = rng.integers(0, len(self.edges), size=self.sweep_size)
                vals = None
            uniforms = rng.random(size=self.sweep_size)
            per_replica.append((proposals, vals, uniforms))
        swap_uniforms = rng.random(size=self.n_replicas - 1) if self.is_pt else None
        return per_replica, swap_uniforms

    def _replica_sweep(self, chains, machine, r, draws):
        values = self.hilbert.local_values
        beta = self.betas[r]
        k = len(chains)
        proposals = np.empty((k, self.hilbert.n_sites))
        active = np.ones(k, dtype=bool)
        for t in range(self.sweep_size):
            for ci, chain in enumerate(chains):
                sites, vals, _ = draws[ci][r]
                sigma = chain.sigma[r]
                proposals[ci] = sigma
                chain.proposed[r] += 1
                if self.kind == "local":
                    site = sites[t]
                    cur = sigma[site]
                    if len(values) == 2:
                        proposals[ci, site] = values[0] if cur == values[1] else values[1]
                    else:
                        cur_idx = int(np.searchsorted(values, cur))
                        j = vals[t]
                        proposals[ci, site] = values[j if j < cur_idx else j + 1]
                    active[ci] = True
                else:
                    i, j = self.edges[sites[t]]
                    if sigma[i] == sigma[j]:
                        active[ci] = False  # identity proposal, rejected
                    else:
                        proposals[ci, i] = sigma[j]
                        proposals[ci, j] = sigma[i]
                        active[ci] = True
            logs = machine.log_val(proposals)
            for ci, chain in enumerate(chains):
                if not active[ci]:
                    continue
                u = draws[ci][r][2][t]
                if u < acceptance_probability(2 * beta * (logs[ci].real - chain.log_psi[r].real)):
                    chain.sigma[r] = proposals[ci]
                    chain.log_psi[r] = logs[ci]
                    chain.accepted[r] += 1

    def _sweep_group(self, chains, machine):
        all_draws = [self._draw_sweep(chain) for chain in chains]
        replica_draws = [d[0] for d in all_draws]
        for r in range(self.n_replicas):
            self._replica_sweep(chains, machine, r, replica_draws)
        if self.is_pt:
            for ci, chain in enumerate(chains):
                swap_u = all_draws[ci][1]
                for r in range(self.n_replicas - 1):
                    chain.swap_proposed[r] += 1
                    dbeta = self.betas[r] - self.betas[r + 1]
                    dlog = chain.log_psi[r + 1].real - chain.log_psi[r].real
                    if swap_u[r] < acceptance_probability(2 * dbeta * dlog):
                        chain.sigma[[r, r + 1]] = chain.sigma[[r + 1, r]]
                        chain.log_psi[[r, r + 1]] = chain.log_psi[[r + 1, r]]
                        chain.swap_accepted[r] += 1

    def _run_group(self, chains, machine, n_samples, n_discard, out):
        for _ in range(n_discard):
            self._sweep_group(chains, machine)
        for s in range(n_samples):
            self._sweep_group(chains, machine)
            for ci, chain in enumerate(chains):
                out[ci, s] = chain.sigma[0]

    def sample(self, machine: Machine, n_samples_per_chain: int, n_discard: int | None = None):
        """Advance all chains and record one sample per sweep per chain.

        Returns (samples of shape (n_chains, n_samples_per_chain, n_sites),
        acceptance fractions flattened chain-major over replicas).
        """
        if n_discard is None:
            n_discard = self.config.n_discard
        n_chains = len(self.chains)
        out = np.empty((n_chains, n_samples_per_chain, self.hilbert.n_sites))
        for chain in self.chains:
            chain.reset_counters()
        self.refresh(machine)
        groups = [(self.chains[i : i + GROUP_SIZE], out[i : i + GROUP_SIZE])
                  for i in range(0, n_chains, GROUP_SIZE)]
        workers = min(worker_count(), len(groups))
        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                futures = [
                    pool.submit(self._run_group, chains, machine, n_samples_per_chain, n_discard, view)
                    for chains, view in groups
                ]
                for f in futures:
                    f.result()
        else:
            for chains, view in groups:
                self._run_group(chains, machine, n_samples_per_chain, n_discard, view)
        acceptance = np.concatenate([chain.acceptance() for chain in self.chains])
        return out, acceptance


class ExactSampler:
    """I.i.d. draws from the exactly normalized |Psi|^2 (desk-scale spaces)."""

    def __init__(self, hilbert: HilbertSpace, config: SamplerConfig, seed: int = 0):
        self.hilbert = hilbert
        self.config = config
        self.index = HilbertIndex(hilbert)
        if self.index.n_states > MAX_EXACT_STATES:
            raise ValueError(f"space of {self.index.n_states} states too large for exact sampling")
        self.states = self.index.all_states()
        self.rngs = [
            np.random.Generator(np.random.PCG64(chain_seed_sequence(seed, c)))
            for c in range(config.n_chains)
        ]

    def refresh(self, machine: Machine):
        pass

    def probabilities(self, machine: Machine) -> np.ndarray:
        logs = machine.log_val(self.states)
        finite = np.isfinite(logs.real)
        w = np.zeros(len(self.states))
        w[finite] = np.exp(2 * (logs.real[finite] - logs.real[finite].max()))
        return w / w.sum()

    def sample(self, machine: Machine, n_samples_per_chain: int, n_discard: int | None = None):
        probs = self.probabilities(machine)
        n_chains = self.config.n_chains
        out = np.empty((n_chains, n_samples_per_chain, self.hilbert.n_sites))
        for c, rng in enumerate(self.rngs):
            idx = rng.choice(len(probs), size=n_samples_per_chain, p=probs)
            out[c] = self.states[idx]
        return out, np.ones(n_chains)


def exact_sample(hilbert: HilbertSpace, machine: Machine, n_samples: int,
                 rng: np.random.Generator) -> np.ndarray:
    """One-shot i.i.d. draws from the exact distribution (single stream)."""
    index = HilbertIndex(hilbert)
    if index.n_states > MAX_EXACT_STATES:
        raise ValueError(f"space of {index.n_states} states too large for exact sampling")
    states = index.all_states()
    logs = machine.log_val(states)
    finite = np.isfinite(logs.real)
    w = np.zeros(len(states))
    w[finite] = np.exp(2 * (logs.real[finite] - logs.real[finite].max()))
    probs = w / w.sum()
    return states[rng.choice(len(probs), size=n_samples, p=probs)]


def build_sampler(hilbert: HilbertSpace, config: SamplerConfig, graph: Graph | None = None,
                  seed: int = 0):
    if config.kind == "exact":
        return ExactSampler(hilbert, config, seed=seed)
    return MetropolisSampler(hilbert, config, graph=graph, seed=seed)


def run_sampler(config: SamplerConfig, machine: Machine, hilbert: HilbertSpace,
                graph: Graph | None = None, seed: int = 0, n_samples_per_chain: int = 100):
    """Fresh sampler seeded by (seed, chain index); see the module docstring
    for the determinism contract."""
    sampler = build_sampler(hilbert, config, graph=graph, seed=seed)
    return sampler.sample(machine, n_samples_per_chain)


def local_transition_matrix(machine: Machine, hilbert: HilbertSpace) -> np.ndarray:
    """Single-move transition kernel of the local Metropolis rule (small spaces).

    Uses the same acceptance function as the sampler; rows sum to one.
    """
    index = HilbertIndex(hilbert)
    n = index.n_states
    states = index.all_states()
    logs = machine.log_val(states)
    d = hilbert.local_dim
    n_sites = hilbert.n_sites
    proposal = 1.0 / (n_sites * (d - 1))
    T = np.zeros((n, n))
    values = hilbert.local_values
    for i in range(n):
        sigma = states[i]
        stay = 1.0
        for site in range(n_sites):
            for v in values:
                if v == sigma[site]:
                    continue
                new = sigma.copy()
                new[site] = v
                j = index.state_to_number(new)
                p = proposal * acceptance_probability(2 * (logs[j].real - logs[i].real))
                T[i, j] += p
                stay -= p
        T[i, i] = stay
    return T
