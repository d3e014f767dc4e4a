"""JSON run logs and machine parameter files.

``<prefix>.log`` holds a single JSON object ``{"schema_version": 1,
"Output": [record, ...]}`` and is rewritten atomically (write to a temporary
file, then rename) after every iteration, so it parses at any time.
``<prefix>.wf`` stores machine parameters as ``[re, im]`` pairs; floats are
serialized with shortest round-trip decimals, so a write/read round trip is
bit-exact.
"""

from __future__ import annotations

import json
import os

import numpy as np

from .machine import Machine

SCHEMA_VERSION = 1


class RunLogWriter:
    """Accumulates per-iteration records and atomically rewrites prefix.log."""

    def __init__(self, prefix: str | None):
        self.prefix = prefix
        self.records: list[dict] = []
        if prefix is not None:
            self._flush()

    def append(self, record: dict):
        self.records.append(record)
        if self.prefix is not None:
            self._flush()

    def _flush(self):
        path = self.prefix + ".log"
        tmp = path + ".tmp"
        payload = {"schema_version": SCHEMA_VERSION, "Output": self.records}
        try:
            with open(tmp, "w") as f:
                json.dump(payload, f)
            os.replace(tmp, path)
        except OSError as e:
            raise RuntimeError(f"failed to write run log {path}: {e}") from e


def read_log(prefix_or_path: str) -> dict:
    path = prefix_or_path if prefix_or_path.endswith(".log") else prefix_or_path + ".log"
    with open(path) as f:
        return json.load(f)


def _complex_pairs(vec: np.ndarray) -> list[list[float]]:
    return [[float(z.real), float(z.imag)] for z in vec]


def write_wf(prefix_or_path: str, machine: Machine):
    path = prefix_or_path if prefix_or_path.endswith(".wf") else prefix_or_path + ".wf"
    payload = {
        "schema_version": SCHEMA_VERSION,
        "machine_kind": machine.kind,
        "shape": machine.shape_metadata(),
        "parameters": _complex_pairs(machine.get_parameters()),
    }
    tmp = path + ".tmp"
    with open(tmp, "w") as f:
        json.dump(payload, f)
    os.replace(tmp, path)


def read_wf(prefix_or_path: str, machine: Machine):
    path = prefix_or_path if prefix_or_path.endswith(".wf") else prefix_or_path + ".wf"
    with open(path) as f:
        payload = json.load(f)
    kind = payload.get("machine_kind")
    if kind != machine.kind:
        raise ValueError(f"parameter file holds a {kind!r} machine, target is {machine.kind!r}")
    shape = payload.get("shape")
    if shape != machine.shape_metadata():
        raise ValueError(
            f"parameter file shape {shape} does not match machine shape {machine.shape_metadata()}"
        )
    pairs = payload["parameters"]
    if len(pairs) != machine.n_par:
        raise ValueError(f"parameter count {len(pairs)} does not match machine n_par {machine.n_par}")
    params = np.array([complex(re, im) for re, im in pairs], dtype=np.complex128)
    machine.set_parameters(params)
