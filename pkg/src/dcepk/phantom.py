"""Synthetic ground-truth worlds for exercising the full pipeline.

A phantom is a set of piecewise-constant ellipsoidal regions on a zero
background, together with a parametric bolus input function and the
acquisition constants of a standard brain DCE protocol (TR 8.24 ms, 12
degree flip, relaxivity 4.2, 21 frames at 73 s). Acquisitions are
synthesized by the forward model plus seeded complex Gaussian noise on the
sampled k-space locations.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError
from .forward import forward_model
from .types import (
    AcquisitionContext,
    KSpaceSeries,
    PKMaps,
    SamplingMask,
    VascularInputFunction,
)

__all__ = [
    "PhantomSpec",
    "make_phantom",
    "make_vif",
    "synthesize_acquisition",
    "add_acquisition_noise",
]

TR_DEFAULT = 0.00824
FLIP_DEG_DEFAULT = 12.0
R1_DEFAULT = 4.2
NT_DEFAULT = 21
DT_SEC_DEFAULT = 73.0
M0_DEFAULT = 1000.0

_KTRANS_RANGE = (0.0, 0.2)
_VP_RANGE = (0.0, 0.1)
_T10_RANGE = (0.8, 1.5)
_N_REGIONS = 8


@dataclass(frozen=True)
class PhantomSpec:
    dims: tuple[int, int, int] = (32, 32, 8)
    nt: int = NT_DEFAULT
    temporal_resolution: float = DT_SEC_DEFAULT
    seed: int = 0
    noise_sigma: float = 0.0
    accel: float = 10.0
    tr: float = TR_DEFAULT
    flip_deg: float = FLIP_DEG_DEFAULT
    r1: float = R1_DEFAULT

    def __post_init__(self):
        if len(self.dims) != 3 or any(d < 8 for d in self.dims):
            raise InvalidInputError("phantom dims must be three axes of at least 8")
        if self.nt < 2:
            raise InvalidInputError("need at least two frames")
        if self.temporal_resolution <= 0:
            raise InvalidInputError("temporal resolution must be positive")
        if self.noise_sigma < 0:
            raise InvalidInputError("noise sigma must be nonnegative")
        if self.accel < 1:
            raise InvalidInputError("acceleration must be >= 1")

    @property
    def frame_times(self) -> np.ndarray:
        """Frame times in minutes (kinetics clock)."""
        return np.arange(self.nt) * self.temporal_resolution / 60.0


def make_vif(nt: int = NT_DEFAULT, dt_sec: float = DT_SEC_DEFAULT) -> VascularInputFunction:
    """Parametric bolus: gamma-variate arrival plus slow washout.

    Zero at t = 0, peak close to 5 mM near one minute, sampled at one-second
    resolution out to the end of the acquisition.
    """
    n_sec = int(np.ceil((nt - 1) * dt_sec))
    t = np.arange(n_sec + 1) / 60.0
    bolus = 4.4 * t**2 * np.exp(-2.0 * (t - 1.0))
    washout = 0.9 * (1 - np.exp(-2.0 * t)) * np.exp(-0.08 * t)
    return VascularInputFunction(times=t, cp=bolus + washout)


def _ellipsoid(dims, rng):
    center = [rng.uniform(0.2, 0.8) * d for d in dims]
    semi = [rng.uniform(0.10, 0.30) * d for d in dims]
    grids = np.ogrid[: dims[0], : dims[1], : dims[2]]
    q = sum(((g - c) / s) ** 2 for g, c, s in zip(grids, center, semi))
    return q <= 1.0


def make_phantom(
    spec: PhantomSpec,
) -> tuple[PKMaps, VascularInputFunction, AcquisitionContext]:
    """Build ground-truth maps, input function, and acquisition context.

    Region parameter values are drawn uniformly from ktrans in [0, 0.2]
    per minute, vp in [0, 0.1], T10 in [0.8, 1.5] s; overlapping regions
    take the later draw. The background has zero uptake and a 1 s T10.
    Deterministic for a fixed seed.
    """
    rng = np.random.default_rng(spec.seed)
    ktrans = np.zeros(spec.dims)
    vp = np.zeros(spec.dims)
    t10 = np.full(spec.dims, 1.0)
    for _ in range(_N_REGIONS):
        region = _ellipsoid(spec.dims, rng)
        ktrans[region] = rng.uniform(*_KTRANS_RANGE)
        vp[region] = rng.uniform(*_VP_RANGE)
        t10[region] = rng.uniform(*_T10_RANGE)

    flip = np.deg2rad(spec.flip_deg)
    m0 = np.full(spec.dims, M0_DEFAULT)
    k = spec.tr / t10
    ek = np.exp(-k)
    s0 = m0 * np.sin(flip) * (1 - ek) / (1 - np.cos(flip) * ek)
    ctx = AcquisitionContext(
        tr=spec.tr,
        flip=flip,
        r1=spec.r1,
        t10=t10,
        m0=m0,
        s0=s0,
        frame_times=spec.frame_times,
    )
    vif = make_vif(spec.nt, spec.temporal_resolution)
    return PKMaps(ktrans=ktrans, vp=vp), vif, ctx


def synthesize_acquisition(
    pk: PKMaps,
    vif: VascularInputFunction,
    ctx: AcquisitionContext,
    mask: SamplingMask,
    noise_sigma: float = 0.0,
    seed: int = 0,
) -> KSpaceSeries:
    """Forward-model k-space with complex Gaussian noise on sampled points.

    The noise standard deviation is ``noise_sigma`` times the magnitude of
    the first frame's DC sample, split evenly between real and imaginary
    parts, and touches only locations the mask keeps, so the off-pattern
    zeros survive. Deterministic per seed.
    """
    return add_acquisition_noise(forward_model(pk, vif, ctx, mask), noise_sigma, seed)


def add_acquisition_noise(k: KSpaceSeries, noise_sigma: float, seed: int = 0) -> KSpaceSeries:
    """Add complex Gaussian noise scaled to the first frame's DC magnitude.

    Only sampled locations are touched, so the off-pattern zeros survive.
    ``noise_sigma == 0`` returns the input unchanged.
    """
    if noise_sigma < 0:
        raise InvalidInputError("noise sigma must be nonnegative")
    if noise_sigma == 0:
        return k
    nkx, nky, nkz, _ = k.data.shape
    dc = abs(k.data[nkx // 2, nky // 2, nkz // 2, 0])
    rng = np.random.default_rng(seed)
    shape = k.data.shape
    noise = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)
    noisy = k.data + noise_sigma * dc * noise * k.mask.pattern[:, :, None, :]
    return KSpaceSeries(data=noisy, mask=k.mask, frame_times=k.frame_times)
