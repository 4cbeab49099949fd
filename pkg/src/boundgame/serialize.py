"""JSON persistence for matrices, states, measurements, and strategies."""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np

from .qobjects import DensityMatrix, Povm


def matrix_to_dict(m) -> dict:
    a = np.asarray(m, dtype=complex)
    return {
        "rows": a.shape[0],
        "cols": a.shape[1],
        "re": [float(v) for v in a.real.reshape(-1)],
        "im": [float(v) for v in a.imag.reshape(-1)],
    }


def matrix_from_dict(raw: dict) -> np.ndarray:
    rows, cols = int(raw["rows"]), int(raw["cols"])
    re = np.asarray(raw["re"], dtype=float).reshape(rows, cols)
    im = np.asarray(raw["im"], dtype=float).reshape(rows, cols)
    return re + 1j * im


def state_to_dict(state: DensityMatrix) -> dict:
    return {
        "kind": "state",
        "dimA": state.dim_a,
        "dimB": state.dim_b,
        "matrix": matrix_to_dict(state.matrix),
    }


def state_from_dict(raw: dict) -> DensityMatrix:
    return DensityMatrix(int(raw["dimA"]), int(raw["dimB"]), matrix_from_dict(raw["matrix"]))


def povm_to_dict(p: Povm) -> dict:
    return {
        "kind": "povm",
        "z": p.z,
        "effects": [matrix_to_dict(e) for e in p.effects],
    }


def povm_from_dict(raw: dict) -> Povm:
    return Povm(int(raw["z"]), tuple(matrix_from_dict(e) for e in raw["effects"]))


def strategy_fingerprint(state: DensityMatrix, measurements) -> str:
    h = hashlib.sha256()
    h.update(np.round(state.matrix, 12).tobytes())
    for m in measurements:
        for e in m.effects:
            h.update(np.round(np.asarray(e), 12).tobytes())
    return h.hexdigest()[:16]


def save_strategy_bundle(path, d: int, state: DensityMatrix, measurements, extra=None) -> Path:
    """Write a strategy as a directory: manifest plus one JSON per object."""
    root = Path(path)
    root.mkdir(parents=True, exist_ok=True)
    (root / "state.json").write_text(json.dumps(state_to_dict(state)))
    files = {"state": "state.json"}
    for m in measurements:
        name = f"measurement_z{m.z}.json"
        (root / name).write_text(json.dumps(povm_to_dict(m)))
        files[f"measurement_z{m.z}"] = name
    manifest = {
        "d": d,
        "encodings": "weyl-heisenberg",
        "files": files,
        "fingerprint": strategy_fingerprint(state, measurements),
    }
    if extra:
        manifest.update(extra)
    (root / "manifest.json").write_text(json.dumps(manifest, indent=1))
    return root


def load_strategy_bundle(path):
    """Read a bundle directory (or a single JSON file with inline objects)."""
    p = Path(path)
    if p.is_file():
        raw = json.loads(p.read_text())
        state = state_from_dict(raw["state"])
        povms = [povm_from_dict(m) for m in raw["measurements"]]
        return int(raw["d"]), state, povms
    manifest = json.loads((p / "manifest.json").read_text())
    state = state_from_dict(json.loads((p / manifest["files"]["state"]).read_text()))
    d = int(manifest["d"])
    povms = []
    for z in range(d + 1):
        name = manifest["files"][f"measurement_z{z}"]
        povms.append(povm_from_dict(json.loads((p / name).read_text())))
    return d, state, povms
