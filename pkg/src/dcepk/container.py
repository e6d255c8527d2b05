"""A minimal single-array container file, plus typed writers for the domain objects.

Layout on disk::

    bytes 0..3    magic  b"DCEC"
    bytes 4..11   header byte length, unsigned 64-bit little-endian
    ...           UTF-8 JSON header
    ...           raw payload

The header carries ``schema_version``, ``name``, ``dims``, ``element_type``,
``byte_order``, ``units``, ``frame_times``, ``provenance`` (seed plus the
generating settings) and an optional ``attrs`` mapping for scalar metadata.
The payload is little-endian float32 (complex values as interleaved
real/imaginary float32 pairs) with the first axis varying fastest, so a
``(x, y, z, t)`` volume is stored x-fastest.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .errors import (
    ContainerFormatError,
    ContainerHeaderError,
    ContainerLengthError,
    ContainerSchemaError,
    InvalidInputError,
)
from .types import (
    AcquisitionContext,
    DynamicSeries,
    KSpaceSeries,
    PKMaps,
    SamplingMask,
    VascularInputFunction,
)

__all__ = [
    "MAGIC",
    "SCHEMA_VERSION",
    "save",
    "load",
    "save_pk_maps",
    "load_pk_maps",
    "save_series",
    "load_series",
    "save_vif",
    "load_vif",
    "save_mask",
    "load_mask",
    "save_kspace",
    "load_kspace",
    "save_context",
    "load_context",
]

MAGIC = b"DCEC"
SCHEMA_VERSION = 1

_ELEMENT_TYPES = {
    "float32": np.dtype("<f4"),
    "complex64": np.dtype("<c8"),
}

_REQUIRED_FIELDS = (
    "schema_version",
    "name",
    "dims",
    "element_type",
    "byte_order",
    "units",
    "frame_times",
    "provenance",
)


def save(
    path,
    data,
    *,
    name: str,
    units: str = "",
    frame_times=None,
    provenance: dict | None = None,
    attrs: dict | None = None,
) -> None:
    """Write one array to ``path``. Real input is stored as float32, complex as complex64."""
    data = np.asarray(data)
    if np.iscomplexobj(data):
        payload = np.ascontiguousarray(data.T).astype("<c8", copy=False)
        element_type = "complex64"
    else:
        payload = np.ascontiguousarray(data.T).astype("<f4", copy=False)
        element_type = "float32"
    header = {
        "schema_version": SCHEMA_VERSION,
        "name": str(name),
        "dims": [int(d) for d in data.shape],
        "element_type": element_type,
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


def _read_header(fh, path) -> dict:
    preamble = fh.read(len(MAGIC) + 8)
    if len(preamble) < len(MAGIC) + 8 or preamble[: len(MAGIC)] != MAGIC:
        raise ContainerHeaderError(f"{path}: not a container file (bad or truncated magic)")
    (hlen,) = struct.unpack("<Q", preamble[len(MAGIC) :])
    blob = fh.read(hlen)
    if len(blob) != hlen:
        raise ContainerHeaderError(f"{path}: header truncated ({len(blob)} of {hlen} bytes)")
    try:
        header = json.loads(blob.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ContainerHeaderError(f"{path}: header is not valid JSON ({exc})") from exc
    if not isinstance(header, dict):
        raise ContainerHeaderError(f"{path}: header must be a JSON object")
    missing = [k for k in _REQUIRED_FIELDS if k not in header]
    if missing:
        raise ContainerHeaderError(f"{path}: header missing fields {missing}")
    if not (isinstance(header["dims"], list) and all(isinstance(d, int) and d > 0 for d in header["dims"])):
        raise ContainerHeaderError(f"{path}: dims must be a list of positive integers")
    return header


def load(path) -> tuple[np.ndarray, dict]:
    """Read a container back as ``(array, header)``, validating the layout."""
    with open(path, "rb") as fh:
        header = _read_header(fh, path)
        if header["schema_version"] != SCHEMA_VERSION:
            raise ContainerSchemaError(
                f"{path}: unknown schema version {header['schema_version']!r} "
                f"(this reader understands {SCHEMA_VERSION})"
            )
        if header["byte_order"] != "little":
            raise ContainerFormatError(
                f"{path}: byte order {header['byte_order']!r} is unsupported; "
                "payloads are little-endian only"
            )
        if header["element_type"] not in _ELEMENT_TYPES:
            raise ContainerFormatError(
                f"{path}: element type {header['element_type']!r} is unsupported"
            )
        dtype = _ELEMENT_TYPES[header["element_type"]]
        payload = fh.read()
    dims = tuple(header["dims"])
    expected = int(np.prod(dims)) * dtype.itemsize
    if len(payload) != expected:
        raise ContainerLengthError(
            f"{path}: payload is {len(payload)} bytes, header implies {expected} "
            f"(dims {dims}, {header['element_type']})"
        )
    flat = np.frombuffer(payload, dtype=dtype)
    return flat.reshape(dims, order="F").copy(), header


def _provenance(provenance):
    return {"seed": None, "spec": None} if provenance is None else provenance


def save_pk_maps(path, pk: PKMaps, provenance: dict | None = None) -> None:
    save(
        path,
        np.stack([pk.ktrans, pk.vp], axis=-1),
        name="pk_maps",
        units="ktrans: 1/min; vp: dimensionless",
        provenance=_provenance(provenance),
    )


def load_pk_maps(path) -> PKMaps:
    data, header = load(path)
    if header["name"] != "pk_maps" or data.ndim != 4 or data.shape[3] != 2:
        raise InvalidInputError(f"{path}: not a parameter-map container")
    return PKMaps(ktrans=data[..., 0], vp=data[..., 1])


def save_series(path, series: DynamicSeries, provenance: dict | None = None) -> None:
    units = "a.u." if series.kind == "image" else "mM"
    save(
        path,
        series.data,
        name=series.kind,
        units=units,
        frame_times=series.frame_times,
        provenance=_provenance(provenance),
    )


def load_series(path) -> DynamicSeries:
    data, header = load(path)
    if header["name"] not in ("image", "concentration") or header["frame_times"] is None:
        raise InvalidInputError(f"{path}: not a dynamic-series container")
    return DynamicSeries(
        data=data, frame_times=np.asarray(header["frame_times"]), kind=header["name"]
    )


def save_vif(path, vif: VascularInputFunction, provenance: dict | None = None) -> None:
    save(
        path,
        vif.cp,
        name="vif",
        units="mM",
        frame_times=vif.times,
        provenance=_provenance(provenance),
    )


def load_vif(path) -> VascularInputFunction:
    data, header = load(path)
    if header["name"] != "vif" or header["frame_times"] is None:
        raise InvalidInputError(f"{path}: not an input-function container")
    return VascularInputFunction(times=np.asarray(header["frame_times"]), cp=data)


def save_mask(path, mask: SamplingMask, provenance: dict | None = None) -> None:
    save(
        path,
        mask.pattern,
        name="sampling_mask",
        units="binary",
        provenance=_provenance(provenance),
        attrs={"accel_target": mask.accel_target},
    )


def load_mask(path) -> SamplingMask:
    data, header = load(path)
    if header["name"] != "sampling_mask" or data.ndim != 3:
        raise InvalidInputError(f"{path}: not a sampling-mask container")
    accel = header.get("attrs", {}).get("accel_target", 1.0)
    return SamplingMask(pattern=data, accel_target=accel)


def save_kspace(path, k: KSpaceSeries, provenance: dict | None = None) -> None:
    """Store the complex samples; the pattern travels in its own mask container."""
    save(
        path,
        k.data,
        name="kspace",
        units="a.u.",
        frame_times=k.frame_times,
        provenance=_provenance(provenance),
        attrs={"accel_target": k.mask.accel_target},
    )


def load_kspace(path, mask: SamplingMask | None = None) -> KSpaceSeries:
    """Rebuild a k-space series; without a mask an all-ones pattern is assumed."""
    data, header = load(path)
    if header["name"] != "kspace" or header["frame_times"] is None or data.ndim != 4:
        raise InvalidInputError(f"{path}: not a k-space container")
    if mask is None:
        pattern = np.ones((data.shape[0], data.shape[1], data.shape[3]), dtype=np.uint8)
        mask = SamplingMask(pattern=pattern, accel_target=1.0)
    return KSpaceSeries(data=data, mask=mask, frame_times=np.asarray(header["frame_times"]))


def save_context(path, ctx: AcquisitionContext, provenance: dict | None = None) -> None:
    save(
        path,
        np.stack([ctx.t10, ctx.m0, ctx.s0], axis=-1),
        name="acquisition_context",
        units="t10: s; m0: a.u.; s0: a.u.",
        frame_times=ctx.frame_times,
        provenance=_provenance(provenance),
        attrs={"tr": ctx.tr, "flip": ctx.flip, "r1": ctx.r1},
    )


def load_context(path) -> AcquisitionContext:
    data, header = load(path)
    attrs = header.get("attrs", {})
    if (
        header["name"] != "acquisition_context"
        or data.ndim != 4
        or data.shape[3] != 3
        or header["frame_times"] is None
        or not all(k in attrs for k in ("tr", "flip", "r1"))
    ):
        raise InvalidInputError(f"{path}: not an acquisition-context container")
    return AcquisitionContext(
        tr=attrs["tr"],
        flip=attrs["flip"],
        r1=attrs["r1"],
        t10=data[..., 0],
        m0=data[..., 1],
        s0=data[..., 2],
        frame_times=np.asarray(header["frame_times"]),
    )
