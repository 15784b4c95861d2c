"""Persistence schemas: denoiser parameter files, result tables, run records.

Denoiser files carry the 17 named reals per channel plus the lattice size,
depth, noise level, and a fingerprint of the Trotter circuit they were
optimized against, so stale parameter files cannot silently be reused
against a different target.
"""

from __future__ import annotations

import csv
import hashlib
import json
from pathlib import Path

import numpy as np

from .channels import ChannelParams, MeasurePrepParams, NoiseModel, UnitaryParams
from .circuits import DenoiserSpec, TrotterSpec

DENOISER_SCHEMA = "qdenoise-denoiser-v1"
RUN_SCHEMA = "qdenoise-run-v1"
TABLE_SCHEMA = "qdenoise-table-v1"


def channel_to_dict(params: ChannelParams) -> dict:
    u, m = params.unitary, params.measure
    return {
        "eta1": params.eta1,
        "alpha": u.alpha,
        "kappa_a": list(u.kappa_a),
        "kappa_c": list(u.kappa_c),
        "kappa_1": list(m.kappa_1),
        "kappa_2": list(m.kappa_2),
        "kappa_3": list(m.kappa_3),
    }


def channel_from_dict(d: dict) -> ChannelParams:
    return ChannelParams(
        eta1=float(d["eta1"]),
        unitary=UnitaryParams(
            alpha=float(d["alpha"]),
            kappa_a=tuple(float(x) for x in d["kappa_a"]),
            kappa_c=tuple(float(x) for x in d["kappa_c"]),
        ),
        measure=MeasurePrepParams(
            kappa_1=tuple(float(x) for x in d["kappa_1"]),
            kappa_2=tuple(float(x) for x in d["kappa_2"]),
            kappa_3=tuple(float(x) for x in d["kappa_3"]),
        ),
    )


def trotter_fingerprint(spec: TrotterSpec) -> str:
    payload = json.dumps(
        {
            "L": spec.L,
            "t": spec.t,
            "m_trot": spec.m_trot,
            "p": spec.noise.p,
            "couplings": list(spec.couplings),
        },
        sort_keys=True,
    )
    return hashlib.sha256(payload.encode()).hexdigest()[:16]


def save_denoiser(path, spec: DenoiserSpec, target: TrotterSpec | None = None) -> None:
    doc = {
        "schema": DENOISER_SCHEMA,
        "L": spec.L,
        "depth": spec.depth,
        "p": spec.noise.p,
        "target_fingerprint": trotter_fingerprint(target) if target else None,
        "channels": [channel_to_dict(ch) for ch in spec.layers],
    }
    Path(path).write_text(json.dumps(doc, indent=1))


def load_denoiser(path) -> tuple[DenoiserSpec, dict]:
    doc = json.loads(Path(path).read_text())
    if doc.get("schema") != DENOISER_SCHEMA:
        raise ValueError(f"{path}: not a {DENOISER_SCHEMA} file")
    spec = DenoiserSpec(
        L=int(doc["L"]),
        depth=int(doc["depth"]),
        layers=tuple(channel_from_dict(d) for d in doc["channels"]),
        noise=NoiseModel(float(doc["p"])),
    )
    return spec, doc


def resize_denoiser(spec: DenoiserSpec, L: int) -> DenoiserSpec:
    """Rebuild the same translation-invariant channels on another chain size."""
    return DenoiserSpec(L=L, depth=spec.depth, layers=spec.layers, noise=spec.noise)


def write_table(path, columns: list[str], rows, meta: dict | None = None) -> None:
    """Append rows to a CSV table, creating it (with header) if needed.

    The JSON sidecar ``<path>.meta.json`` records the schema version and any
    run metadata; appending requires the existing header to match.
    """
    path = Path(path)
    rows = [list(r) for r in rows]
    if path.exists():
        with path.open() as fh:
            header = next(csv.reader(fh))
        if header != columns:
            raise ValueError(f"{path}: existing columns {header} != {columns}")
        mode = "a"
    else:
        mode = "w"
    with path.open(mode, newline="") as fh:
        writer = csv.writer(fh)
        if mode == "w":
            writer.writerow(columns)
        writer.writerows(rows)
    sidecar = path.with_suffix(path.suffix + ".meta.json")
    doc = {"schema": TABLE_SCHEMA, "columns": columns}
    if meta:
        doc.update(meta)
    sidecar.write_text(json.dumps(doc, indent=1, default=_jsonable))


def _jsonable(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"cannot serialize {type(obj)!r}")


def write_run_artifact(path, payload: dict) -> None:
    doc = {"schema": RUN_SCHEMA}
    doc.update(payload)
    Path(path).write_text(json.dumps(doc, indent=1, default=_jsonable))
