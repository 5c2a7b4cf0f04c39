"""Versioned checkpoint files: a JSON manifest (version, config, parameter
shapes) followed by little-endian float64 blobs ordered by parameter name."""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

MAGIC = b"FQC1"
VERSION = 1


def save(path: str | Path, config: dict, params: list) -> None:
    entries = []
    blobs = []
    for p in params:
        arr = p.value
        if arr.dtype.kind == "c":
            blob = np.ascontiguousarray(arr).view(np.float64)
            kind = "complex"
        else:
            blob = np.ascontiguousarray(arr)
            kind = "real"
        blob = blob.astype("<f8", copy=False)
        entries.append({"name": p.name, "shape": list(arr.shape), "kind": kind})
        blobs.append(blob.tobytes())
    manifest = json.dumps(
        {"version": VERSION, "config": config, "parameters": entries}
    ).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<Q", len(manifest)))
        fh.write(manifest)
        for b in blobs:
            fh.write(b)


def load(path: str | Path) -> tuple[dict, dict[str, np.ndarray]]:
    """Returns (config, {parameter name: value array})."""
    path = Path(path)
    raw = path.read_bytes()
    if raw[:4] != MAGIC:
        raise ValueError(f"{path}: not a checkpoint file (bad magic)")
    (mlen,) = struct.unpack("<Q", raw[4:12])
    try:
        manifest = json.loads(raw[12 : 12 + mlen].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ValueError(f"{path}: corrupted manifest") from exc
    if manifest.get("version") != VERSION:
        raise ValueError(f"{path}: unsupported checkpoint version {manifest.get('version')}")
    offset = 12 + mlen
    values: dict[str, np.ndarray] = {}
    for entry in manifest["parameters"]:
        shape = tuple(entry["shape"])
        count = int(np.prod(shape)) if shape else 1
        if entry["kind"] == "complex":
            count *= 2
        nbytes = count * 8
        blob = raw[offset : offset + nbytes]
        if len(blob) != nbytes:
            raise ValueError(f"{path}: truncated blob for parameter {entry['name']!r}")
        arr = np.frombuffer(blob, dtype="<f8").copy()
        if entry["kind"] == "complex":
            arr = arr.view(np.complex128)
        values[entry["name"]] = arr.reshape(shape)
        offset += nbytes
    if offset != len(raw):
        raise ValueError(f"{path}: {len(raw) - offset} trailing bytes after parameter blobs")
    return manifest["config"], values


def restore_into(net, values: dict[str, np.ndarray]) -> None:
    """Copy checkpoint arrays into a network with matching parameter names."""
    params = {p.name: p for p in net.parameters()}
    missing = set(params) - set(values)
    extra = set(values) - set(params)
    if missing or extra:
        raise ValueError(
            f"checkpoint/model parameter mismatch: missing {sorted(missing)}, "
            f"unexpected {sorted(extra)}"
        )
    for name, arr in values.items():
        p = params[name]
        if p.value.shape != arr.shape:
            raise ValueError(
                f"parameter {name!r}: checkpoint shape {arr.shape} vs model shape {p.value.shape}"
            )
        p.value = arr.astype(p.value.dtype, copy=True)
