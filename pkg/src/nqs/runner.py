"""Executes a validated RunConfig: shared by the CLI and scripting callers."""

from __future__ import annotations

import json
import os

import numpy as np

from .config import (RunConfig, build_graph, build_hilbert, build_machine, build_operator,
                     build_optimizer, build_sampler_from_config, build_vmc_config)
from .exact import full_ed, lanczos_ed
from .hilbert import HilbertIndex
from .output import SCHEMA_VERSION, read_wf
from .sampler import SamplerConfig, build_sampler
from .supervised import SupervisedDataset, run_supervised
from .tomography import MeasurementRecord, run_qsr
from .vmc import run_vmc


def _load_json(path: str):
    with open(path) as f:
        return json.load(f)


def load_supervised_dataset(path: str) -> SupervisedDataset:
    entries = _load_json(path)
    samples = np.array([e["state"] for e in entries], dtype=np.float64)
    targets = np.array([complex(e["log_psi"][0], e["log_psi"][1]) for e in entries])
    return SupervisedDataset(samples=samples, log_targets=targets)


def load_measurements(path: str) -> list[MeasurementRecord]:
    entries = _load_json(path)
    return [MeasurementRecord(basis=e["basis"], outcome=np.asarray(e["outcome"])) for e in entries]


def load_state_vector(path: str) -> np.ndarray:
    pairs = _load_json(path)
    return np.array([complex(re, im) for re, im in pairs])


def execute(config: RunConfig):
    """Run the configured driver; returns its in-process result records."""
    graph = build_graph(config.graph)
    hilbert = build_hilbert(config.hilbert, graph)
    kind = config.driver["kind"]

    if kind == "ed":
        hamiltonian = build_operator(config.operator, hilbert, graph)
        drv = config.driver
        if drv["method"] == "full":
            res = full_ed(hamiltonian, compute_eigenvectors=drv["compute_eigenvectors"])
            res.eigenvalues = res.eigenvalues[: drv["first_n"]]
            if res.eigenvectors is not None:
                res.eigenvectors = res.eigenvectors[: drv["first_n"]]
        else:
            res = lanczos_ed(hamiltonian, first_n=drv["first_n"],
                             compute_eigenvectors=drv["compute_eigenvectors"])
        payload = {"schema_version": SCHEMA_VERSION,
                   "Eigenvalues": [float(v) for v in res.eigenvalues]}
        if res.eigenvectors is not None:
            payload["Eigenvectors"] = [
                [[float(z.real), float(z.imag)] for z in vec] for vec in res.eigenvectors
            ]
        path = config.output_prefix + ".json"
        tmp = path + ".tmp"
        with open(tmp, "w") as f:
            json.dump(payload, f)
        os.replace(tmp, path)
        return payload

    machine = build_machine(config.machine, hilbert, graph, config.seed)
    optimizer = build_optimizer(config.optimizer)

    if kind == "vmc":
        hamiltonian = build_operator(config.operator, hilbert, graph)
        sampler = build_sampler_from_config(config.sampler, hilbert, graph, config.seed)
        vmc_config = build_vmc_config(config.driver)
        results = run_vmc(vmc_config, hamiltonian, machine, sampler, optimizer,
                          output_prefix=config.output_prefix)
        return [r.log_record() for r in results]

    if kind == "supervised":
        dataset = load_supervised_dataset(config.driver["dataset"])
        return run_supervised(machine, optimizer, dataset, n_iter=config.driver["n_iter"],
                              batch_size=config.driver["batch_size"],
                              output_prefix=config.output_prefix,
                              loss_kind=config.driver["loss"], seed=config.seed)

    if kind == "qsr":
        records = load_measurements(config.driver["dataset"])
        reference = None
        if config.driver["reference_state"] is not None:
            reference = load_state_vector(config.driver["reference_state"])
        sampler = None
        if config.driver["model_expectation"] == "sampled":
            sampler_cfg = config.sampler or {
                "kind": "local", "n_chains": 8, "sweep_size": None, "n_discard": 10,
                "n_replicas": 4, "allow_unconstrained": False,
            }
            sampler = build_sampler_from_config(sampler_cfg, hilbert, graph, config.seed)
        return run_qsr(machine, optimizer, records, sampler=sampler,
                       n_iter=config.driver["n_iter"], batch_size=config.driver["batch_size"],
                       output_prefix=config.output_prefix, hilbert=hilbert,
                       reference_state=reference, seed=config.seed)

    raise ValueError(f"unknown driver kind {kind!r}")


def evaluate_machine(config: RunConfig, states: np.ndarray, wf_path: str | None = None) -> np.ndarray:
    """log Psi of the configured machine on a batch of configurations."""
    graph = build_graph(config.graph)
    hilbert = build_hilbert(config.hilbert, graph)
    machine = build_machine(config.machine, hilbert, graph, config.seed)
    if wf_path is not None:
        read_wf(wf_path, machine)
    states = np.atleast_2d(np.asarray(states, dtype=np.float64))
    if states.shape[0] == 0:
        return np.zeros(0, dtype=np.complex128)
    return machine.log_val(states)
