"""Core data containers for the DCE-MRI modeling pipeline.

Conventions used throughout the package:

* kinetic quantities are in minutes (transfer rates in 1/min, input-function
  times in min, concentrations in mM),
* pulse-sequence quantities are in seconds (repetition time) and radians
  (flip angle),
* volumes are indexed ``(x, y, z)`` and dynamic series ``(x, y, z, t)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from .errors import InvalidInputError

__all__ = [
    "PKMaps",
    "VascularInputFunction",
    "AcquisitionContext",
    "DynamicSeries",
    "SamplingMask",
    "KSpaceSeries",
]


def _as_float_volume(a, name: str) -> np.ndarray:
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 3:
        raise InvalidInputError(f"{name} must be a 3D volume, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise InvalidInputError(f"{name} contains non-finite values")
    return a


@dataclass
class PKMaps:
    """Per-voxel Patlak parameter volumes: transfer rate and plasma-volume fraction.

    ``ktrans`` is in 1/min, ``vp`` is a dimensionless fraction. Fitted maps may
    carry negative values (no physical clamping is applied); phantom-generated
    maps are nonnegative by construction.
    """

    ktrans: np.ndarray
    vp: np.ndarray

    def __post_init__(self):
        self.ktrans = _as_float_volume(self.ktrans, "ktrans")
        self.vp = _as_float_volume(self.vp, "vp")
        if self.ktrans.shape != self.vp.shape:
            raise InvalidInputError(
                f"ktrans shape {self.ktrans.shape} != vp shape {self.vp.shape}"
            )

    @property
    def dims(self) -> tuple[int, int, int]:
        return self.ktrans.shape


@dataclass
class VascularInputFunction:
    """Sampled blood-plasma concentration curve Cp(t).

    ``times`` are in minutes and strictly increasing; ``cp`` values are in mM.
    The first sample is expected to be the pre-contrast baseline.
    """

    times: np.ndarray
    cp: np.ndarray

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=np.float64)
        self.cp = np.asarray(self.cp, dtype=np.float64)
        if self.times.ndim != 1 or self.cp.ndim != 1:
            raise InvalidInputError("VIF times and cp must be 1D")
        if self.times.size != self.cp.size:
            raise InvalidInputError("VIF times and cp must have the same length")
        if self.times.size < 2:
            raise InvalidInputError("VIF needs at least 2 samples")
        if not np.all(np.diff(self.times) > 0):
            raise InvalidInputError("VIF times must be strictly increasing")
        if not (np.all(np.isfinite(self.times)) and np.all(np.isfinite(self.cp))):
            raise InvalidInputError("VIF contains non-finite values")


@dataclass
class AcquisitionContext:
    """All fixed acquisition quantities of the imaging experiment.

    ``tr`` repetition time (s), ``flip`` flip angle (rad), ``r1`` contrast
    relaxivity (1/s/mM), ``t10`` pre-contrast T1 (s), ``m0`` equilibrium
    magnetization, ``s0`` pre-contrast baseline signal, ``frame_times``
    acquisition times of the dynamic frames (min).
    """

    tr: float
    flip: float
    r1: float
    t10: np.ndarray
    m0: np.ndarray
    s0: np.ndarray
    frame_times: np.ndarray

    def __post_init__(self):
        self.tr = float(self.tr)
        self.flip = float(self.flip)
        self.r1 = float(self.r1)
        if not self.tr > 0:
            raise InvalidInputError(f"tr must be > 0, got {self.tr}")
        if not 0 < self.flip < np.pi / 2:
            raise InvalidInputError(f"flip must be in (0, pi/2), got {self.flip}")
        if not self.r1 > 0:
            raise InvalidInputError(f"r1 must be > 0, got {self.r1}")
        self.t10 = _as_float_volume(self.t10, "t10")
        self.m0 = _as_float_volume(self.m0, "m0")
        self.s0 = _as_float_volume(self.s0, "s0")
        if not np.all(self.t10 > 0):
            raise InvalidInputError("t10 must be positive everywhere")
        if not np.all(self.m0 >= 0):
            raise InvalidInputError("m0 must be nonnegative")
        if not (self.t10.shape == self.m0.shape == self.s0.shape):
            raise InvalidInputError("t10, m0, s0 must share dims")
        self.frame_times = np.asarray(self.frame_times, dtype=np.float64)
        if self.frame_times.ndim != 1 or not np.all(np.diff(self.frame_times) > 0):
            raise InvalidInputError("frame_times must be 1D and strictly increasing")

    @property
    def dims(self) -> tuple[int, int, int]:
        return self.t10.shape


@dataclass
class DynamicSeries:
    """A real-valued volume-over-time, either image intensities or concentrations."""

    data: np.ndarray
    frame_times: np.ndarray
    kind: Literal["image", "concentration"]

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.float64)
        self.frame_times = np.asarray(self.frame_times, dtype=np.float64)
        if self.data.ndim != 4:
            raise InvalidInputError(f"series data must be 4D, got shape {self.data.shape}")
        if self.frame_times.ndim != 1 or self.frame_times.size != self.data.shape[3]:
            raise InvalidInputError("frame_times length must equal the number of frames")
        if self.kind not in ("image", "concentration"):
            raise InvalidInputError(f"unknown series kind {self.kind!r}")
        if not np.all(np.isfinite(self.data)):
            raise InvalidInputError("series data contains non-finite values")

    @property
    def dims(self) -> tuple[int, int, int]:
        return self.data.shape[:3]

    @property
    def nt(self) -> int:
        return self.data.shape[3]


@dataclass
class SamplingMask:
    """Binary (kx, ky, t) acquisition pattern, broadcast along kz.

    ``accel_target`` records the undersampling factor the pattern was built
    for; the realized per-frame factor is measured by
    :func:`dcepk.sampling.acceleration_of`.
    """

    pattern: np.ndarray
    accel_target: float

    def __post_init__(self):
        pattern = np.asarray(self.pattern)
        if pattern.ndim != 3:
            raise InvalidInputError(f"mask pattern must be 3D (kx, ky, t), got {pattern.shape}")
        if not np.all((pattern == 0) | (pattern == 1)):
            raise InvalidInputError("mask pattern values must be 0 or 1")
        self.pattern = pattern.astype(np.uint8)
        self.accel_target = float(self.accel_target)
        if not self.accel_target >= 1:
            raise InvalidInputError("accel_target must be >= 1")

    @property
    def nt(self) -> int:
        return self.pattern.shape[2]

    @property
    def grid_dims(self) -> tuple[int, int]:
        return self.pattern.shape[:2]


@dataclass
class KSpaceSeries:
    """Complex (k, t)-space samples together with the pattern that acquired them.

    Off-pattern locations are identically zero; this is validated at
    construction so downstream adjoints can rely on it.
    """

    data: np.ndarray
    mask: SamplingMask
    frame_times: np.ndarray

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.complex128)
        self.frame_times = np.asarray(self.frame_times, dtype=np.float64)
        if self.data.ndim != 4:
            raise InvalidInputError(f"k-space data must be 4D, got shape {self.data.shape}")
        nkx, nky, _, nt = self.data.shape
        if self.mask.pattern.shape != (nkx, nky, nt):
            raise InvalidInputError(
                f"mask pattern {self.mask.pattern.shape} does not match k-space "
                f"dims {(nkx, nky, nt)}"
            )
        if self.frame_times.size != nt:
            raise InvalidInputError("frame_times length must equal the number of frames")
        # pattern is (kx, ky, t); data is (kx, ky, kz, t)
        off = self.mask.pattern[:, :, None, :] == 0
        if np.any(np.where(off, self.data, 0) != 0):
            raise InvalidInputError("k-space data must be zero wherever the mask is zero")

    @property
    def dims(self) -> tuple[int, int, int]:
        return self.data.shape[:3]

    @property
    def nt(self) -> int:
        return self.data.shape[3]
