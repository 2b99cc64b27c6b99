"""Raw array dump: little-endian float64 in row-major order, a header text
file and an optional JSON sidecar."""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .gaussian import GENERATOR_ID
from .hermite import SampleField
from .params import derive_exponents
from . import gaussian


def _base(path) -> Path:
    p = Path(path)
    return p.with_suffix("") if p.suffix in (".bin", ".hdr", ".json") else p


def write_array(path, values: np.ndarray, header: dict) -> Path:
    """Write ``<base>.bin`` and ``<base>.hdr`` (``key: value`` lines); return the base."""
    base = _base(path)
    base.parent.mkdir(parents=True, exist_ok=True)
    np.ascontiguousarray(values, dtype="<f8").tofile(base.with_suffix(".bin"))
    lines = [f"shape: {' '.join(str(s) for s in values.shape)}", "dtype: float64 little-endian row-major"]
    lines += [f"{k}: {v}" for k, v in header.items()]
    base.with_suffix(".hdr").write_text("\n".join(lines) + "\n")
    return base


def read_header(path) -> dict:
    out = {}
    for line in _base(path).with_suffix(".hdr").read_text().splitlines():
        key, _, val = line.partition(":")
        out[key.strip()] = val.strip()
    return out


def read_array(path) -> np.ndarray:
    base = _base(path)
    shape = tuple(int(s) for s in read_header(base)["shape"].split())
    data = np.fromfile(base.with_suffix(".bin"), dtype="<f8")
    if data.size != int(np.prod(shape)):
        raise ValueError(f"{base}.bin holds {data.size} values, header says shape {shape}")
    return data.reshape(shape)


def field_metadata(field: SampleField) -> dict:
    return {
        **field.params.as_dict(),
        "n": list(field.grid.shape),
        "method": field.method,
        "seed": field.seed,
        "substrate": field.substrate,
        "generator": field.generator,
    }


def write_field(path, field: SampleField) -> Path:
    meta = field_metadata(field)
    header = {"H": " ".join(repr(h) for h in field.params.H), "seed": field.seed,
              "generator": GENERATOR_ID, "q": field.params.q, "method": field.method}
    base = write_array(path, field.values, header)
    base.with_suffix(".json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    return base


def read_field(path) -> SampleField:
    base = _base(path)
    meta = json.loads(base.with_suffix(".json").read_text())
    params = derive_exponents(meta["q"], meta["H"])
    values = read_array(base)
    grid = gaussian.GridSpec(tuple(meta["n"]))
    return SampleField(params=params, grid=grid, values=values, method=meta["method"], seed=meta["seed"],
                       substrate=meta.get("substrate"), generator=meta.get("generator", GENERATOR_ID))
