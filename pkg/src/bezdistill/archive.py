"""Versioned weight archive.

Layout (all integers little-endian)::

    8 bytes   magic  b"BZDWGT\\x00\\x01"
    uint32    format version
    uint32    header length L
    L bytes   UTF-8 JSON header: spec, label, n_params, provenance
    n_params  float64 little-endian parameters (MlpParams.flatten order)

Nothing may follow the parameter block.
"""
from __future__ import annotations

import json
import struct
from dataclasses import asdict
from pathlib import Path

import numpy as np

from .errors import WeightsError
from .field import VelocityField
from .mathcore import MlpParams, MlpSpec

MAGIC = b"BZDWGT\x00\x01"
VERSION = 1
_PREFIX = struct.Struct("<8sII")


def save_weights(field: VelocityField, path: str | Path, provenance: dict | None = None) -> None:
    flat = field.params.flatten()
    header = {
        "spec": asdict(field.spec),
        "label": field.label,
        "n_params": int(flat.size),
        "provenance": provenance or {},
    }
    blob = json.dumps(header, sort_keys=True).encode()
    with open(path, "wb") as fh:
        fh.write(_PREFIX.pack(MAGIC, VERSION, len(blob)))
        fh.write(blob)
        fh.write(flat.astype("<f8").tobytes())


def read_archive(path: str | Path) -> tuple[VelocityField, dict]:
    """Load a field and its provenance dict; raises WeightsError on any defect."""
    raw = Path(path).read_bytes()
    if len(raw) < _PREFIX.size:
        raise WeightsError(f"{path}: truncated archive header")
    magic, version, hlen = _PREFIX.unpack_from(raw)
    if magic != MAGIC:
        raise WeightsError(f"{path}: not a weight archive")
    if version != VERSION:
        raise WeightsError(f"{path}: unsupported archive version {version} (expected {VERSION})")
    start = _PREFIX.size + hlen
    if len(raw) < start:
        raise WeightsError(f"{path}: truncated archive header")
    try:
        header = json.loads(raw[_PREFIX.size:start])
        spec = MlpSpec(**header["spec"])
        n_params = int(header["n_params"])
    except (ValueError, KeyError, TypeError) as exc:
        raise WeightsError(f"{path}: corrupt header ({exc})") from exc
    if n_params != spec.n_params:
        raise WeightsError(f"{path}: spec mismatch, archive holds {n_params} parameters but spec needs {spec.n_params}")
    body = raw[start:]
    if len(body) != 8 * n_params:
        raise WeightsError(f"{path}: corrupt length, expected {8 * n_params} parameter bytes, found {len(body)}")
    flat = np.frombuffer(body, dtype="<f8").astype(np.float64)
    params = MlpParams.from_flat(spec, flat)
    return VelocityField(spec, params, header.get("label", "field")), header.get("provenance", {})


def load_weights(path: str | Path) -> VelocityField:
    return read_archive(path)[0]
