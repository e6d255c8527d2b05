"""Randomized golden-angle Cartesian undersampling masks.

Each frame after the first holds a set of radial spokes through the k-space
center, rasterized onto the Cartesian grid, with successive spoke angles
advancing by the golden angle and a random per-frame angular offset. The
first frame is always fully sampled so the pre-contrast baseline is clean.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError
from .types import SamplingMask

GOLDEN_ANGLE_DEG = 111.246

__all__ = ["GOLDEN_ANGLE_DEG", "MaskSpec", "golden_angle_mask", "acceleration_of"]


@dataclass(frozen=True)
class MaskSpec:
    """Geometry and target acceleration of an undersampling mask."""

    nkx: int
    nky: int
    nt: int
    accel: float
    seed: int = 0

    def __post_init__(self):
        if self.nkx < 8 or self.nky < 8:
            raise InvalidInputError("mask grid must be at least 8x8")
        if self.nt < 1:
            raise InvalidInputError("need at least one frame")
        if self.accel < 1:
            raise InvalidInputError(f"acceleration factor {self.accel} must be >= 1")


def _spoke_pixels(nkx: int, nky: int, angle_deg: float) -> tuple[np.ndarray, np.ndarray]:
    """Pixel indices of one line through the grid center, nearest-first.

    Rasterized by stepping the dominant axis; returned ordered by distance
    from the center so a spoke can be grown outward partway.
    """
    cx, cy = nkx // 2, nky // 2
    th = np.deg2rad(angle_deg)
    dx, dy = np.cos(th), np.sin(th)
    if abs(dx) >= abs(dy):
        ix = np.arange(nkx)
        iy = np.rint(cy + (ix - cx) * (dy / dx)).astype(int)
        radial = np.abs(ix - cx)
    else:
        iy = np.arange(nky)
        ix = np.rint(cx + (iy - cy) * (dx / dy)).astype(int)
        radial = np.abs(iy - cy)
    keep = (ix >= 0) & (ix < nkx) & (iy >= 0) & (iy < nky)
    ix, iy, radial = ix[keep], iy[keep], radial[keep]
    order = np.argsort(radial, kind="stable")
    return ix[order], iy[order]


def golden_angle_mask(spec: MaskSpec) -> SamplingMask:
    """Generate the (kx, ky, t) binary sampling pattern for a mask spec.

    Frame 0 is all ones. Every later frame collects spokes (angles continue
    across frames; each frame adds its own random offset) until the sample
    count reaches round(N/accel); the last spoke grows outward from the
    center only as far as needed, so the sampled fraction lands within a
    half pixel of 1/accel. The first spoke of a frame is always drawn in
    full; if that alone overshoots the 10% density tolerance the target is
    unreachable and ``InvalidInputError`` is raised.

    Deterministic for a fixed seed.
    """
    rng = np.random.default_rng(spec.seed)
    pattern = np.zeros((spec.nkx, spec.nky, spec.nt), dtype=np.uint8)
    pattern[:, :, 0] = 1
    if spec.accel == 1.0:
        pattern[:] = 1
        return SamplingMask(pattern=pattern, accel_target=1.0)

    npts = spec.nkx * spec.nky
    target = 1.0 / spec.accel
    target_count = int(round(target * npts))
    spoke_idx = 0
    for t in range(1, spec.nt):
        offset = rng.uniform(0.0, 360.0)
        frame = np.zeros((spec.nkx, spec.nky), dtype=np.uint8)
        count = 0
        first = True
        while count < target_count:
            ix, iy = _spoke_pixels(
                spec.nkx, spec.nky, spoke_idx * GOLDEN_ANGLE_DEG + offset
            )
            spoke_idx += 1
            for x, y in zip(ix, iy):
                if not first and count >= target_count:
                    break
                if not frame[x, y]:
                    frame[x, y] = 1
                    count += 1
            if first and count > 1.1 * target * npts:
                raise InvalidInputError(
                    f"target sampled fraction {target:.4f} on a "
                    f"{spec.nkx}x{spec.nky} grid is below a single spoke "
                    f"({count}/{npts} points)"
                )
            first = False
        pattern[:, :, t] = frame
    return SamplingMask(pattern=pattern, accel_target=float(spec.accel))


def acceleration_of(mask: SamplingMask) -> tuple[np.ndarray, float]:
    """Measured acceleration: grid points over sampled points, per frame.

    Returns the per-frame factors and their mean as the aggregate (so a
    fully sampled first frame pulls the aggregate below the per-frame
    target, but each frame keeps its own factor). A frame with nothing
    sampled has no defined factor and raises.
    """
    counts = mask.pattern.sum(axis=(0, 1), dtype=np.int64)
    if np.any(counts == 0):
        raise InvalidInputError("mask has a frame with no sampled points")
    npts = mask.pattern.shape[0] * mask.pattern.shape[1]
    per_frame = npts / counts.astype(np.float64)
    return per_frame, float(per_frame.mean())
