"""Reader and writer for the dcepk container file format and dataset manifests.

pkcnn talks to the estimation package purely through its on-disk formats:
block dataset directories for training, and parameter-map containers for
handing corrected maps back to `dcepk metrics`. This module implements that
format contract independently so the two packages stay decoupled.

Container layout: ``b"DCEC"`` magic, an unsigned 64-bit little-endian header
byte length, a UTF-8 JSON header, then the raw payload as little-endian
float32 or complex64 with the first axis varying fastest.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

MAGIC = b"DCEC"
SCHEMA_VERSION = 1
MANIFEST_NAME = "manifest.json"

_ELEMENT_TYPES = {
    "float32": np.dtype("<f4"),
    "complex64": np.dtype("<c8"),
}


def load(path) -> tuple[np.ndarray, dict]:
    """Read one container as ``(array, header)``."""
    with open(path, "rb") as fh:
        preamble = fh.read(len(MAGIC) + 8)
        if len(preamble) < len(MAGIC) + 8 or preamble[: len(MAGIC)] != MAGIC:
            raise ValueError(f"{path}: not a container file")
        (hlen,) = struct.unpack("<Q", preamble[len(MAGIC) :])
        blob = fh.read(hlen)
        if len(blob) != hlen:
            raise ValueError(f"{path}: truncated header")
        header = json.loads(blob.decode("utf-8"))
        if header.get("schema_version") != SCHEMA_VERSION:
            raise ValueError(f"{path}: unsupported schema version")
        if header.get("byte_order") != "little":
            raise ValueError(f"{path}: unsupported byte order")
        if header.get("element_type") not in _ELEMENT_TYPES:
            raise ValueError(f"{path}: unsupported element type")
        dtype = _ELEMENT_TYPES[header["element_type"]]
        payload = fh.read()
    dims = tuple(header["dims"])
    if len(payload) != int(np.prod(dims)) * dtype.itemsize:
        raise ValueError(f"{path}: payload length mismatch")
    return np.frombuffer(payload, dtype=dtype).reshape(dims, order="F").copy(), header


def save(path, data, *, name: str, units: str = "", frame_times=None,
         provenance: dict | None = None, attrs: dict | None = None) -> None:
    """Write one real float32 container (all pkcnn outputs are real maps)."""
    data = np.asarray(data)
    payload = np.ascontiguousarray(data.T).astype("<f4", copy=False)
    header = {
        "schema_version": SCHEMA_VERSION,
        "name": str(name),
        "dims": [int(d) for d in data.shape],
        "element_type": "float32",
        "byte_order": "little",
        "units": str(units),
        "frame_times": None if frame_times is None else [float(t) for t in frame_times],
        "provenance": {"seed": None, "spec": None} if provenance is None else provenance,
    }
    if attrs:
        header["attrs"] = attrs
    blob = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<Q", len(blob)))
        fh.write(blob)
        fh.write(payload.tobytes())


def save_pk_maps(path, ktrans: np.ndarray, vp: np.ndarray,
                 provenance: dict | None = None) -> None:
    """Write corrected maps in the layout `dcepk metrics` consumes."""
    save(
        path,
        np.stack([ktrans, vp], axis=-1),
        name="pk_maps",
        units="ktrans: 1/min; vp: dimensionless",
        provenance=provenance,
    )


def load_manifest(dataset_dir) -> dict:
    path = Path(dataset_dir) / MANIFEST_NAME
    if not path.is_file():
        raise ValueError(f"{dataset_dir}: no {MANIFEST_NAME} found")
    with open(path) as fh:
        manifest = json.load(fh)
    blocks = manifest.get("blocks", [])
    if manifest.get("n_blocks") != len(blocks):
        raise ValueError(f"{path}: inconsistent block listing")
    return manifest
