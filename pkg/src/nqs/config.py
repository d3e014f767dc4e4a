"""Config-file parsing, validation, and object construction.

Configs are JSON documents with sections graph / hilbert / operator /
machine / sampler / optimizer / driver plus a master ``seed`` and an
``output_prefix``. Validation fills defaults, rejects unknown keys with
path-qualified messages, and checks cross-section consistency.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from . import lattice, operator
from .hilbert import HilbertSpace, boson_space, spin_space
from .machine import Ffnn, Jastrow, Machine, RbmMultiVal, RbmSpin, RbmSpinSymm
from .optimizer import OPTIMIZER_KINDS, Optimizer
from .sampler import SAMPLER_KINDS, SamplerConfig, build_sampler
from .vmc import VmcConfig


class ConfigError(ValueError):
    """Invalid configuration; the message carries the offending path."""


_MISSING = object()


def _fail(path: str, message: str):
    raise ConfigError(f"{path}: {message}")


def _expect_mapping(value, path: str) -> dict:
    if not isinstance(value, dict):
        _fail(path, f"expected an object, got {type(value).__name__}")
    return value


def _take(section: dict, path: str, key: str, types, default=_MISSING):
    if key not in section:
        if default is _MISSING:
            _fail(path, f"missing required key {key!r}")
        return default
    value = section[key]
    if types is not None and not isinstance(value, types):
        _fail(f"{path}.{key}", f"expected {getattr(types, '__name__', types)}, got {type(value).__name__}")
    return value


def _reject_unknown(section: dict, path: str, allowed: set[str]):
    for key in section:
        if key not in allowed:
            _fail(f"{path}.{key}", f"unknown key (allowed: {', '.join(sorted(allowed))})")


def _kind_of(section: dict, path: str, valid: tuple[str, ...]) -> str:
    kind = _take(section, path, "kind", str)
    if kind not in valid:
        _fail(f"{path}.kind", f"unknown kind {kind!r} (valid kinds: {', '.join(valid)})")
    return kind


_NUM = (int, float)

GRAPH_KINDS = ("hypercube", "custom")
HILBERT_KINDS = ("spin", "boson")
OPERATOR_KINDS = ("ising", "heisenberg", "bose_hubbard", "local", "graph")
MACHINE_CONFIG_KINDS = ("rbm", "rbm_symm", "rbm_multival", "jastrow", "ffnn")
DRIVER_KINDS = ("vmc", "supervised", "qsr", "ed")


def _validate_graph(section, path="graph") -> dict:
    section = _expect_mapping(section, path)
    kind = _kind_of(section, path, GRAPH_KINDS)
    if kind == "hypercube":
        out = {
            "kind": kind,
            "length": _take(section, path, "length", int),
            "n_dim": _take(section, path, "n_dim", int, 1),
            "pbc": _take(section, path, "pbc", bool, True),
        }
        _reject_unknown(section, path, {"kind", "length", "n_dim", "pbc"})
    else:
        edges = _take(section, path, "edges", list)
        out = {"kind": kind, "edges": [list(map(int, e)) for e in edges]}
        _reject_unknown(section, path, {"kind", "edges"})
    return out


def _validate_hilbert(section, path="hilbert") -> dict:
    section = _expect_mapping(section, path)
    kind = _kind_of(section, path, HILBERT_KINDS)
    if kind == "spin":
        out = {
            "kind": kind,
            "s": float(_take(section, path, "s", _NUM)),
            "total_sz": section.get("total_sz"),
        }
        if out["total_sz"] is not None and not isinstance(out["total_sz"], _NUM):
            _fail(f"{path}.total_sz", "expected a number")
        _reject_unknown(section, path, {"kind", "s", "total_sz"})
    else:
        out = {
            "kind": kind,
            "n_max": _take(section, path, "n_max", int),
            "n_particles": section.get("n_particles"),
        }
        if out["n_particles"] is not None and not isinstance(out["n_particles"], int):
            _fail(f"{path}.n_particles", "expected an integer")
        _reject_unknown(section, path, {"kind", "n_max", "n_particles"})
    return out


def _parse_complex_matrix(entry, path: str) -> np.ndarray:
    try:
        arr = np.asarray(entry, dtype=np.float64)
    except (ValueError, TypeError):
        _fail(path, "expected a nested array of [re, im] pairs")
    if arr.ndim != 3 or arr.shape[2] != 2:
        _fail(path, f"expected shape (n, n, 2) of [re, im] pairs, got {arr.shape}")
    return arr[..., 0] + 1j * arr[..., 1]


def _validate_operator(section, path="operator") -> dict:
    section = _expect_mapping(section, path)
    kind = _kind_of(section, path, OPERATOR_KINDS)
    if kind == "ising":
        out = {"kind": kind, "h": float(_take(section, path, "h", _NUM))}
        _reject_unknown(section, path, {"kind", "h"})
    elif kind == "heisenberg":
        out = {"kind": kind, "sign_rule": _take(section, path, "sign_rule", bool, None)}
        _reject_unknown(section, path, {"kind", "sign_rule"})
    elif kind == "bose_hubbard":
        out = {
            "kind": kind,
            "U": float(_take(section, path, "U", _NUM)),
            "mu": float(_take(section, path, "mu", _NUM, 0.0)),
        }
        _reject_unknown(section, path, {"kind", "U", "mu"})
    elif kind == "local":
        matrices = _take(section, path, "matrices", list)
        acting_on = _take(section, path, "acting_on", list)
        out = {"kind": kind, "matrices": matrices, "acting_on": acting_on}
        _reject_unknown(section, path, {"kind", "matrices", "acting_on"})
    else:  # graph operator
        out = {
            "kind": kind,
            "site_ops": _take(section, path, "site_ops", list, []),
            "bond_ops": _take(section, path, "bond_ops", list, []),
        }
        _reject_unknown(section, path, {"kind", "site_ops", "bond_ops"})
    return out


def _validate_machine(section, path="machine") -> dict:
    section = _expect_mapping(section, path)
    kind = _kind_of(section, path, MACHINE_CONFIG_KINDS)
    out = {
        "kind": kind,
        "init_sigma": float(_take(section, path, "init_sigma", _NUM, 0.01)),
        "init_seed": _take(section, path, "init_seed", int, None),
    }
    allowed = {"kind", "init_sigma", "init_seed"}
    if kind in ("rbm", "rbm_multival"):
        out["n_hidden"] = _take(section, path, "n_hidden", int, None)
        out["alpha"] = _take(section, path, "alpha", _NUM, None)
        if out["n_hidden"] is None and out["alpha"] is None:
            out["alpha"] = 1
        allowed |= {"n_hidden", "alpha"}
    elif kind == "rbm_symm":
        out["alpha"] = _take(section, path, "alpha", int, 1)
        allowed |= {"alpha"}
    elif kind == "ffnn":
        out["layers"] = _take(section, path, "layers", list)
        allowed |= {"layers"}
    _reject_unknown(section, path, allowed)
    return out


def _validate_sampler(section, path="sampler") -> dict:
    section = _expect_mapping(section, path)
    kind = _kind_of(section, path, SAMPLER_KINDS)
    out = {
        "kind": kind,
        "n_chains": _take(section, path, "n_chains", int, 8),
        "sweep_size": _take(section, path, "sweep_size", int, None),
        "n_discard": _take(section, path, "n_discard", int, 0),
        "n_replicas": _take(section, path, "n_replicas", int, 4),
        "allow_unconstrained": _take(section, path, "allow_unconstrained", bool, False),
    }
    _reject_unknown(section, path, {"kind", "n_chains", "sweep_size", "n_discard",
                                    "n_replicas", "allow_unconstrained"})
    return out


def _validate_optimizer(section, path="optimizer") -> dict:
    section = _expect_mapping(section, path)
    kind = _kind_of(section, path, tuple(OPTIMIZER_KINDS))
    out = {"kind": kind}
    hyper = {
        "learning_rate": _NUM, "beta1": _NUM, "beta2": _NUM, "epsilon": _NUM,
        "decay": _NUM, "rho": _NUM,
    }
    for key, types in hyper.items():
        if key in section:
            out[key] = float(_take(section, path, key, types))
    _reject_unknown(section, path, {"kind", *hyper})
    return out


def _validate_driver(section, path="driver") -> dict:
    section = _expect_mapping(section, path)
    kind = _kind_of(section, path, DRIVER_KINDS)
    if kind == "vmc":
        out = {
            "kind": kind,
            "n_iter": _take(section, path, "n_iter", int, 100),
            "n_samples": _take(section, path, "n_samples", int, 1000),
            "method": _take(section, path, "method", str, "sr"),
            "diag_shift": float(_take(section, path, "diag_shift", _NUM, 0.01)),
            "solver": _take(section, path, "solver", str, "iterative"),
            "solver_tol": float(_take(section, path, "solver_tol", _NUM, 1e-7)),
            "solver_max_iter": _take(section, path, "solver_max_iter", int, None),
        }
        if out["method"] not in ("sr", "plain"):
            _fail(f"{path}.method", f"unknown method {out['method']!r} (valid: sr, plain)")
        if out["solver"] not in ("exact", "iterative"):
            _fail(f"{path}.solver", f"unknown solver {out['solver']!r} (valid: exact, iterative)")
        _reject_unknown(section, path, set(out))
    elif kind == "supervised":
        out = {
            "kind": kind,
            "dataset": _take(section, path, "dataset", str),
            "n_iter": _take(section, path, "n_iter", int, 1000),
            "batch_size": _take(section, path, "batch_size", int, 100),
            "loss": _take(section, path, "loss", str, "overlap"),
        }
        if out["loss"] != "overlap":
            _fail(f"{path}.loss", f"unknown loss kind {out['loss']!r}; only 'overlap' is supported")
        _reject_unknown(section, path, set(out))
    elif kind == "qsr":
        out = {
            "kind": kind,
            "dataset": _take(section, path, "dataset", str),
            "n_iter": _take(section, path, "n_iter", int, 1000),
            "batch_size": _take(section, path, "batch_size", int, 100),
            "model_expectation": _take(section, path, "model_expectation", str, "exact_full"),
            "reference_state": _take(section, path, "reference_state", str, None),
        }
        if out["model_expectation"] not in ("exact_full", "sampled"):
            _fail(f"{path}.model_expectation",
                  f"unknown mode {out['model_expectation']!r} (valid: exact_full, sampled)")
        _reject_unknown(section, path, set(out))
    else:  # ed
        out = {
            "kind": kind,
            "method": _take(section, path, "method", str, "lanczos"),
            "first_n": _take(section, path, "first_n", int, 1),
            "compute_eigenvectors": _take(section, path, "compute_eigenvectors", bool, False),
        }
        if out["method"] not in ("lanczos", "full"):
            _fail(f"{path}.method", f"unknown method {out['method']!r} (valid: lanczos, full)")
        _reject_unknown(section, path, set(out))
    return out


@dataclass
class RunConfig:
    seed: int
    output_prefix: str
    graph: dict
    hilbert: dict
    operator: dict | None
    machine: dict | None
    sampler: dict | None
    optimizer: dict | None
    driver: dict

    def to_dict(self) -> dict:
        out = {"seed": self.seed, "output_prefix": self.output_prefix,
               "graph": self.graph, "hilbert": self.hilbert, "driver": self.driver}
        for key in ("operator", "machine", "sampler", "optimizer"):
            if getattr(self, key) is not None:
                out[key] = getattr(self, key)
        return out


def parse_config(text: str) -> RunConfig:
    """Parse and validate a JSON config document, filling defaults."""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"config is not valid JSON: {e}") from e
    raw = _expect_mapping(raw, "config")
    allowed = {"seed", "output_prefix", "graph", "hilbert", "operator", "machine",
               "sampler", "optimizer", "driver"}
    _reject_unknown(raw, "config", allowed)
    driver = _validate_driver(_take(raw, "config", "driver", dict))
    needs_machine = driver["kind"] != "ed"
    cfg = RunConfig(
        seed=_take(raw, "config", "seed", int, 1234),
        output_prefix=_take(raw, "config", "output_prefix", str, "run"),
        graph=_validate_graph(_take(raw, "config", "graph", dict)),
        hilbert=_validate_hilbert(_take(raw, "config", "hilbert", dict)),
        operator=_validate_operator(raw["operator"]) if "operator" in raw else None,
        machine=_validate_machine(raw["machine"]) if "machine" in raw else None,
        sampler=_validate_sampler(raw["sampler"]) if "sampler" in raw else None,
        optimizer=_validate_optimizer(raw["optimizer"]) if "optimizer" in raw else None,
        driver=driver,
    )
    if driver["kind"] in ("vmc", "ed") and cfg.operator is None:
        _fail("operator", f"section required for driver kind {driver['kind']!r}")
    if needs_machine and cfg.machine is None:
        _fail("machine", f"section required for driver kind {driver['kind']!r}")
    if driver["kind"] == "vmc" and cfg.sampler is None:
        _fail("sampler", "section required for driver kind 'vmc'")
    if driver["kind"] in ("vmc", "supervised", "qsr") and cfg.optimizer is None:
        _fail("optimizer", f"section required for driver kind {driver['kind']!r}")
    _check_consistency(cfg)
    return cfg


def _check_consistency(cfg: RunConfig):
    if cfg.sampler is not None and cfg.sampler["kind"].startswith("exchange"):
        constrained = (cfg.hilbert["kind"] == "spin" and cfg.hilbert.get("total_sz") is not None) or (
            cfg.hilbert["kind"] == "boson" and cfg.hilbert.get("n_particles") is not None
        )
        if not constrained and not cfg.sampler["allow_unconstrained"]:
            _fail("sampler.kind",
                  "exchange moves conserve the configuration sum; use a constrained space "
                  "or set sampler.allow_unconstrained")
    if cfg.sampler is not None and cfg.sampler["kind"].startswith("local"):
        constrained = (cfg.hilbert["kind"] == "spin" and cfg.hilbert.get("total_sz") is not None) or (
            cfg.hilbert["kind"] == "boson" and cfg.hilbert.get("n_particles") is not None
        )
        if constrained:
            _fail("sampler.kind", "local moves break the space constraint; use an exchange kind")
    if cfg.operator is not None and cfg.operator["kind"] in ("ising", "heisenberg"):
        if cfg.hilbert["kind"] != "spin" or cfg.hilbert["s"] != 0.5:
            _fail("operator.kind", f"{cfg.operator['kind']} requires a spin-1/2 Hilbert space")
    if cfg.operator is not None and cfg.operator["kind"] == "bose_hubbard":
        if cfg.hilbert["kind"] != "boson":
            _fail("operator.kind", "bose_hubbard requires a boson Hilbert space")
    if cfg.machine is not None and cfg.machine["kind"] == "rbm_symm":
        if cfg.graph["kind"] != "hypercube" or not cfg.graph["pbc"]:
            _fail("machine.kind", "rbm_symm requires a periodic hypercube graph for its translation group")


# ---------------------------------------------------------------------------
# object construction


def build_graph(cfg: dict) -> lattice.Graph:
    if cfg["kind"] == "hypercube":
        return lattice.hypercube(cfg["length"], cfg["n_dim"], cfg["pbc"])
    return lattice.custom_graph([tuple(e) for e in cfg["edges"]])


def build_hilbert(cfg: dict, graph: lattice.Graph) -> HilbertSpace:
    if cfg["kind"] == "spin":
        return spin_space(cfg["s"], graph, total_sz=cfg.get("total_sz"))
    return boson_space(cfg["n_max"], graph, n_particles=cfg.get("n_particles"))


def build_operator(cfg: dict, hilbert: HilbertSpace, graph: lattice.Graph) -> operator.Operator:
    kind = cfg["kind"]
    if kind == "ising":
        return operator.ising(hilbert, graph, h=cfg["h"])
    if kind == "heisenberg":
        return operator.heisenberg(hilbert, graph, sign_rule=cfg.get("sign_rule"))
    if kind == "bose_hubbard":
        return operator.bose_hubbard(hilbert, graph, U=cfg["U"], mu=cfg["mu"])
    if kind == "local":
        matrices = [_parse_complex_matrix(m, "operator.matrices") for m in cfg["matrices"]]
        acting = [tuple(int(s) for s in sites) for sites in cfg["acting_on"]]
        return operator.local_operator(hilbert, matrices, acting)
    site_ops = [_parse_complex_matrix(m, "operator.site_ops") for m in cfg["site_ops"]]
    bond_ops = [(int(color), _parse_complex_matrix(m, "operator.bond_ops")) for color, m in cfg["bond_ops"]]
    return operator.graph_operator(hilbert, graph, site_ops=site_ops, bond_ops=bond_ops)


def build_machine(cfg: dict, hilbert: HilbertSpace, graph: lattice.Graph, seed: int) -> Machine:
    kind = cfg["kind"]
    if kind == "rbm":
        machine = RbmSpin(hilbert, n_hidden=cfg.get("n_hidden"), alpha=cfg.get("alpha"))
    elif kind == "rbm_symm":
        group = lattice.translation_group(graph)
        machine = RbmSpinSymm(hilbert, group, alpha=cfg["alpha"])
    elif kind == "rbm_multival":
        n_hidden = cfg.get("n_hidden") or round((cfg.get("alpha") or 1) * hilbert.n_sites)
        machine = RbmMultiVal(hilbert, n_hidden=n_hidden)
    elif kind == "jastrow":
        machine = Jastrow(hilbert)
    else:
        machine = Ffnn.from_spec(hilbert, cfg["layers"])
    init_seed = cfg["init_seed"] if cfg["init_seed"] is not None else seed
    machine.init_random_parameters(seed=init_seed, sigma=cfg["init_sigma"])
    return machine


def build_sampler_from_config(cfg: dict, hilbert: HilbertSpace, graph: lattice.Graph, seed: int):
    sampler_config = SamplerConfig(
        kind=cfg["kind"], n_chains=cfg["n_chains"], sweep_size=cfg["sweep_size"],
        n_discard=cfg["n_discard"], n_replicas=cfg["n_replicas"],
    )
    return build_sampler(hilbert, sampler_config, graph=graph, seed=seed)


def build_optimizer(cfg: dict) -> Optimizer:
    kwargs = {k: v for k, v in cfg.items() if k != "kind"}
    return OPTIMIZER_KINDS[cfg["kind"]](**kwargs)


def build_vmc_config(cfg: dict) -> VmcConfig:
    return VmcConfig(
        n_iter=cfg["n_iter"], n_samples=cfg["n_samples"], method=cfg["method"],
        diag_shift=cfg["diag_shift"], solver=cfg["solver"], solver_tol=cfg["solver_tol"],
        solver_max_iter=cfg["solver_max_iter"],
    )
