"""On-disk sample cache for field realizations.

One realization is a pair of files sharing a stem:

* ``<stem>.bin``: the field payload as little-endian IEEE-754 doubles,
  interleaved re/im, row-major with z fastest; psi_a first, then (optionally)
  psi_b appended in the same layout.
* ``<stem>.json``: sidecar with the grid descriptor, seed, physical
  parameters, sampler diagnostics and the field time.

Reload is bit-exact. The cache root defaults to ./sample_cache and can be
pointed elsewhere through the SPINSQUEEZE_CACHE environment variable.
"""

from __future__ import annotations

import json
import os
from pathlib import Path

import numpy as np

from .model import Grid

CACHE_ENV_VAR = "SPINSQUEEZE_CACHE"


def cache_root() -> Path:
    return Path(os.environ.get(CACHE_ENV_VAR, "sample_cache"))


def _interleave(field: np.ndarray) -> np.ndarray:
    flat = np.ascontiguousarray(field, dtype=np.complex128).ravel()
    out = np.empty(2 * flat.size, dtype="<f8")
    out[0::2] = flat.real
    out[1::2] = flat.imag
    return out


def _deinterleave(raw: np.ndarray, shape) -> np.ndarray:
    re = raw[0::2]
    im = raw[1::2]
    return (re + 1j * im).reshape(shape)


def write_record(stem, grid: Grid, psi_a: np.ndarray, psi_b: np.ndarray | None = None,
                 seed: int | None = None, time: float = 0.0,
                 params: dict | None = None, diagnostics: dict | None = None) -> Path:
    """Write one realization; returns the .bin path."""
    stem = Path(stem)
    stem.parent.mkdir(parents=True, exist_ok=True)
    payload = [_interleave(psi_a)]
    fields = ["psi_a"]
    if psi_b is not None:
        payload.append(_interleave(psi_b))
        fields.append("psi_b")
    bin_path = stem.with_suffix(".bin")
    with open(bin_path, "wb") as fh:
        for block in payload:
            fh.write(block.tobytes())
    sidecar = {
        "grid": grid.descriptor(),
        "fields": fields,
        "seed": seed,
        "time": time,
        "params": params or {},
        "diagnostics": diagnostics or {},
    }
    with open(stem.with_suffix(".json"), "w") as fh:
        json.dump(sidecar, fh, indent=1, sort_keys=True)
    return bin_path


def read_record(stem, grid: Grid) -> dict:
    """Reload one realization, verifying it belongs to the given grid."""
    stem = Path(stem)
    with open(stem.with_suffix(".json")) as fh:
        sidecar = json.load(fh)
    desc = sidecar["grid"]
    if (desc["n_per_dir"] != grid.n_per_dir or desc["shape"] != grid.shape
            or not np.allclose(desc["box_lengths"], grid.box_lengths, rtol=1e-12)):
        raise ValueError("cached record belongs to a different grid")
    n = grid.n_per_dir
    per_field = 2 * n ** 3
    raw = np.fromfile(stem.with_suffix(".bin"), dtype="<f8")
    expected = per_field * len(sidecar["fields"])
    if raw.size != expected:
        raise ValueError(f"payload holds {raw.size} doubles, expected {expected}")
    out = dict(sidecar)
    for i, name in enumerate(sidecar["fields"]):
        out[name] = _deinterleave(raw[i * per_field:(i + 1) * per_field], (n, n, n))
    return out
