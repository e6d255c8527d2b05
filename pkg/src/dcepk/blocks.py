"""Export non-overlapping 3D training blocks for the residual trainer.

A dataset directory holds one container per array per block (undersampled
signal, reference signal, fitted maps, residual maps, per-block acquisition
context), the shared input function, and a JSON manifest describing the
grid, the signal normalization constants, and every block's origin.

Parameter maps are snapped to a dyadic grid before export so that the
float32 identity ``theta_u - theta_r == theta_t`` holds bitwise: values that
are multiples of ``MAP_QUANTUM`` with magnitude below ``MAP_LIMIT`` subtract
exactly in float32.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from . import container
from .errors import InvalidInputError
from .types import (
    AcquisitionContext,
    DynamicSeries,
    PKMaps,
    VascularInputFunction,
)

__all__ = [
    "MAP_QUANTUM",
    "MAP_LIMIT",
    "quantize_maps",
    "block_grid",
    "export_training_blocks",
    "load_manifest",
]

MAP_QUANTUM = 2.0**-16
MAP_LIMIT = 127.0

MANIFEST_NAME = "manifest.json"


def quantize_maps(pk: PKMaps) -> PKMaps:
    """Snap both parameter volumes to the exactly-subtractable dyadic grid."""

    def snap(a):
        return np.clip(np.round(a / MAP_QUANTUM) * MAP_QUANTUM, -MAP_LIMIT, MAP_LIMIT)

    return PKMaps(ktrans=snap(pk.ktrans), vp=snap(pk.vp))


def block_grid(volume_dims, block_dims) -> tuple[int, int, int]:
    """Number of whole blocks along each axis; the remainder is dropped."""
    if len(volume_dims) != 3 or len(block_dims) != 3:
        raise InvalidInputError("volume and block dims must each have three axes")
    if any(int(b) < 1 for b in block_dims):
        raise InvalidInputError(f"block dims must be positive, got {tuple(block_dims)}")
    if any(int(b) > int(v) for v, b in zip(volume_dims, block_dims)):
        raise InvalidInputError(
            f"block dims {tuple(block_dims)} exceed volume dims {tuple(volume_dims)}"
        )
    return tuple(int(v) // int(b) for v, b in zip(volume_dims, block_dims))


def export_training_blocks(
    su: DynamicSeries,
    s_ref: DynamicSeries,
    theta_u: PKMaps,
    theta_t: PKMaps,
    vif: VascularInputFunction,
    ctx: AcquisitionContext,
    block_dims,
    out_dir,
) -> dict:
    """Write the dataset directory and return its manifest.

    ``su`` is the corrupted (zero-filled) signal series the network will see,
    ``s_ref`` the fully sampled reference it is trained to be consistent
    with, ``theta_u`` the maps fitted from ``su``, ``theta_t`` the target
    maps. Blocks tile from the volume origin; partial blocks at the high end
    are dropped.
    """
    if su.kind != "image" or s_ref.kind != "image":
        raise InvalidInputError("su and s_ref must be image-kind series")
    dims = su.dims
    if not (s_ref.dims == dims and theta_u.dims == dims and theta_t.dims == dims and ctx.dims == dims):
        raise InvalidInputError("su, s_ref, theta_u, theta_t, ctx must share volume dims")
    if su.nt != s_ref.nt or su.nt != ctx.frame_times.size:
        raise InvalidInputError("su, s_ref, ctx must share the frame axis")
    bx, by, bz = (int(b) for b in block_dims)
    grid = block_grid(dims, (bx, by, bz))

    theta_u_q = quantize_maps(theta_u)
    theta_t_q = quantize_maps(theta_t)
    # residual target; float32 exact by the dyadic-grid construction
    theta_r = PKMaps(
        ktrans=theta_u_q.ktrans - theta_t_q.ktrans,
        vp=theta_u_q.vp - theta_t_q.vp,
    )

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    container.save_vif(out_dir / "vif.ctr", vif)

    s_lo = float(s_ref.data.min())
    s_hi = float(s_ref.data.max())

    entries = []
    index = 0
    for ix in range(grid[0]):
        for iy in range(grid[1]):
            for iz in range(grid[2]):
                ox, oy, oz = ix * bx, iy * by, iz * bz
                sl = (slice(ox, ox + bx), slice(oy, oy + by), slice(oz, oz + bz))
                bdir = out_dir / "blocks" / f"block_{index:04d}"
                bdir.mkdir(parents=True, exist_ok=True)
                container.save_series(
                    bdir / "su.ctr",
                    DynamicSeries(su.data[sl], su.frame_times, kind="image"),
                )
                container.save_series(
                    bdir / "s.ctr",
                    DynamicSeries(s_ref.data[sl], s_ref.frame_times, kind="image"),
                )
                container.save_pk_maps(
                    bdir / "theta_u.ctr",
                    PKMaps(ktrans=theta_u_q.ktrans[sl], vp=theta_u_q.vp[sl]),
                )
                container.save(
                    bdir / "theta_r.ctr",
                    np.stack([theta_r.ktrans[sl], theta_r.vp[sl]], axis=-1),
                    name="pk_residual",
                    units="ktrans: 1/min; vp: dimensionless",
                )
                container.save_context(
                    bdir / "ctx.ctr",
                    AcquisitionContext(
                        tr=ctx.tr,
                        flip=ctx.flip,
                        r1=ctx.r1,
                        t10=ctx.t10[sl],
                        m0=ctx.m0[sl],
                        s0=ctx.s0[sl],
                        frame_times=ctx.frame_times,
                    ),
                )
                entries.append(
                    {
                        "index": index,
                        "origin": [ox, oy, oz],
                        "dir": str(Path("blocks") / f"block_{index:04d}"),
                    }
                )
                index += 1

    manifest = {
        "schema_version": 1,
        "volume_dims": [int(d) for d in dims],
        "block_dims": [bx, by, bz],
        "grid": list(grid),
        "augmentation_copies": 1,
        "n_blocks": len(entries),
        "n_frames": int(su.nt),
        "frame_times": [float(t) for t in su.frame_times],
        "tr": ctx.tr,
        "flip": ctx.flip,
        "r1": ctx.r1,
        "signal_norm": {"min": s_lo, "max": s_hi},
        "map_quantum": MAP_QUANTUM,
        "vif_file": "vif.ctr",
        "blocks": entries,
    }
    with open(out_dir / MANIFEST_NAME, "w") as fh:
        json.dump(manifest, fh, indent=1, sort_keys=True)
    return manifest


def load_manifest(dataset_dir) -> dict:
    path = Path(dataset_dir) / MANIFEST_NAME
    if not path.is_file():
        raise InvalidInputError(f"{dataset_dir}: no {MANIFEST_NAME} found")
    with open(path) as fh:
        manifest = json.load(fh)
    n = manifest.get("n_blocks")
    if not isinstance(n, int) or n < 0 or len(manifest.get("blocks", [])) != n:
        raise InvalidInputError(f"{path}: inconsistent block listing")
    return manifest
