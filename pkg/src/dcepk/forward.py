"""Forward physical model: PK maps -> concentration -> signal -> undersampled k-space.

The three computational steps are

1. Patlak kinetics: ``C(r,t) = vp(r) Cp(t) + ktrans(r) \\int_0^t Cp``,
2. steady-state spoiled gradient echo (SPGR) signal:
   ``S = M0 sin(a) (1 - E) / (1 - cos(a) E) + (S0 - M0 sin(a) (1 - EK) / (1 - cos(a) EK))``
   with ``E = exp(-(K + L))``, ``EK = exp(-K)``, ``K = TR / T10``, ``L = r1 C TR``,
3. a masked, centered, orthonormal 3D discrete Fourier transform per frame.

``forward_model`` composes all three; ``image_forward`` stops after the signal
step. ``spgr_inverse`` and ``zero_fill_recon`` are the analytic inverse /
adjoint used by the conventional (indirect) estimation pipeline.
"""

from __future__ import annotations

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .errors import InvalidInputError, NumericDomainError, OutOfRangeError
from .types import (
    AcquisitionContext,
    DynamicSeries,
    KSpaceSeries,
    PKMaps,
    SamplingMask,
    VascularInputFunction,
)

__all__ = [
    "integrate_vif",
    "vif_at_frames",
    "patlak_forward",
    "spgr_forward",
    "spgr_inverse",
    "undersample",
    "kspace_adjoint",
    "zero_fill_recon",
    "forward_model",
    "image_forward",
]

_SPATIAL_AXES = (0, 1, 2)


def integrate_vif(vif: VascularInputFunction) -> np.ndarray:
    """Cumulative integral of Cp over the VIF time stamps (mM*min).

    Cumulative trapezoidal rule; element 0 is 0.
    """
    return cumulative_trapezoid(vif.cp, vif.times, initial=0.0)


def vif_at_frames(
    vif: VascularInputFunction, frame_times
) -> tuple[np.ndarray, np.ndarray]:
    """Cp and its cumulative integral linearly interpolated to the frame times.

    Raises OutOfRangeError if any frame time lies outside the sampled VIF
    range; bolus curves are never extrapolated.
    """
    frame_times = np.asarray(frame_times, dtype=np.float64)
    if frame_times.min() < vif.times[0] or frame_times.max() > vif.times[-1]:
        raise OutOfRangeError(
            f"frame times [{frame_times.min()}, {frame_times.max()}] exceed the "
            f"VIF range [{vif.times[0]}, {vif.times[-1]}]"
        )
    cum = integrate_vif(vif)
    cp_f = np.interp(frame_times, vif.times, vif.cp)
    cum_f = np.interp(frame_times, vif.times, cum)
    return cp_f, cum_f


def patlak_forward(
    pk: PKMaps, vif: VascularInputFunction, frame_times
) -> DynamicSeries:
    """Concentration series from Patlak kinetics (backflux from the EES ignored).

    Per voxel and frame: ``C = vp * Cp(t) + ktrans * CumInt(t)`` with Cp and
    its running integral interpolated from the VIF samples to the frame times.
    """
    cp_f, cum_f = vif_at_frames(vif, frame_times)
    conc = (
        pk.vp[:, :, :, None] * cp_f[None, None, None, :]
        + pk.ktrans[:, :, :, None] * cum_f[None, None, None, :]
    )
    return DynamicSeries(data=conc, frame_times=frame_times, kind="concentration")


def _check_frames_match(series: DynamicSeries, ctx: AcquisitionContext) -> None:
    if series.dims != ctx.dims:
        raise InvalidInputError(
            f"series dims {series.dims} do not match context dims {ctx.dims}"
        )
    if not np.array_equal(series.frame_times, ctx.frame_times):
        raise InvalidInputError("series and context frame times differ")


def spgr_forward(conc: DynamicSeries, ctx: AcquisitionContext) -> DynamicSeries:
    """Map a concentration series to SPGR signal intensities.

    The baseline term is carried explicitly, so ``C = 0`` reproduces ``s0``
    voxelwise regardless of how ``s0`` was measured.
    """
    if conc.kind != "concentration":
        raise InvalidInputError("spgr_forward expects a concentration series")
    _check_frames_match(conc, ctx)

    sin_a = np.sin(ctx.flip)
    cos_a = np.cos(ctx.flip)
    k = (ctx.tr / ctx.t10)[:, :, :, None]
    l = ctx.r1 * conc.data * ctx.tr
    m0 = ctx.m0[:, :, :, None]
    s0 = ctx.s0[:, :, :, None]

    with np.errstate(over="ignore", invalid="ignore"):
        e = np.exp(-(k + l))
        ek = np.exp(-k)
        signal = m0 * sin_a * (1 - e) / (1 - cos_a * e) + (
            s0 - m0 * sin_a * (1 - ek) / (1 - cos_a * ek)
        )
    if not np.all(np.isfinite(signal)):
        bad = np.argwhere(~np.isfinite(signal))[0]
        raise NumericDomainError(
            f"non-finite SPGR signal at voxel (x,y,z,t)={tuple(int(i) for i in bad)}"
        )
    return DynamicSeries(data=signal, frame_times=conc.frame_times, kind="image")


def spgr_signal_dC(conc_data: np.ndarray, ctx: AcquisitionContext) -> np.ndarray:
    """Voxelwise derivative of the SPGR signal with respect to concentration.

    With ``E = exp(-(K + L))``: ``dS/dC = m0 sin(a) (1 - cos(a)) r1 TR E / (1 - cos(a) E)^2``.
    """
    sin_a = np.sin(ctx.flip)
    cos_a = np.cos(ctx.flip)
    k = (ctx.tr / ctx.t10)[:, :, :, None]
    l = ctx.r1 * conc_data * ctx.tr
    m0 = ctx.m0[:, :, :, None]
    with np.errstate(over="ignore", invalid="ignore"):
        e = np.exp(-(k + l))
        return m0 * sin_a * (1 - cos_a) * ctx.r1 * ctx.tr * e / (1 - cos_a * e) ** 2


def spgr_inverse(
    img: DynamicSeries,
    ctx: AcquisitionContext,
    strict: bool = False,
    report: dict | None = None,
) -> DynamicSeries:
    """Closed-form inversion of the SPGR signal equation back to concentration.

    Solving ``B = m0 sin(a) (1 - E) / (1 - cos(a) E)`` for
    ``E = exp(-(K + L))`` gives ``E = (m0 sin(a) - B) / (m0 sin(a) - B cos(a))``
    and ``C = (-ln(E) - K) / (r1 TR)``. Noise may produce negative
    concentrations; they are returned unclamped.

    Voxel-frames where the solved ``E`` falls outside (0, 1) have no physical
    concentration: they are recorded as ``C = 0``, and their count is stored
    under ``report["n_nonphysical"]`` when a report dict is supplied. With
    ``strict=True`` such voxels raise ``NumericDomainError`` instead.
    """
    if img.kind != "image":
        raise InvalidInputError("spgr_inverse expects an image series")
    _check_frames_match(img, ctx)

    sin_a = np.sin(ctx.flip)
    cos_a = np.cos(ctx.flip)
    k = (ctx.tr / ctx.t10)[:, :, :, None]
    ek = np.exp(-k)
    m0 = ctx.m0[:, :, :, None]
    s0 = ctx.s0[:, :, :, None]

    b = img.data - s0 + m0 * sin_a * (1 - ek) / (1 - cos_a * ek)
    with np.errstate(divide="ignore", invalid="ignore"):
        e = (m0 * sin_a - b) / (m0 * sin_a - b * cos_a)
        nonphysical = ~np.isfinite(e) | (e <= 0) | (e >= 1)
        conc = (-np.log(e) - k) / (ctx.r1 * ctx.tr)
    n_bad = int(np.count_nonzero(nonphysical))
    if n_bad:
        if strict:
            bad = np.argwhere(nonphysical)[0]
            raise NumericDomainError(
                f"{n_bad} voxel-frames outside the SPGR signal range, first at "
                f"(x,y,z,t)={tuple(int(i) for i in bad)}"
            )
        conc = np.where(nonphysical, 0.0, conc)
    if report is not None:
        report["n_nonphysical"] = n_bad
    return DynamicSeries(data=conc, frame_times=img.frame_times, kind="concentration")


def dft3(vol: np.ndarray) -> np.ndarray:
    """Centered orthonormal 3D DFT (DC at the array center)."""
    return np.fft.fftshift(
        np.fft.fftn(np.fft.ifftshift(vol, axes=_SPATIAL_AXES), axes=_SPATIAL_AXES, norm="ortho"),
        axes=_SPATIAL_AXES,
    )


def idft3(ksp: np.ndarray) -> np.ndarray:
    """Inverse of :func:`dft3`; equals its adjoint (unitary transform)."""
    return np.fft.fftshift(
        np.fft.ifftn(np.fft.ifftshift(ksp, axes=_SPATIAL_AXES), axes=_SPATIAL_AXES, norm="ortho"),
        axes=_SPATIAL_AXES,
    )


def undersample(img: DynamicSeries, mask: SamplingMask) -> KSpaceSeries:
    """Masked Fourier encoding of an image series, frame by frame."""
    nx, ny, _, nt = img.data.shape
    if mask.pattern.shape != (nx, ny, nt):
        raise InvalidInputError(
            f"mask pattern {mask.pattern.shape} does not match image dims "
            f"{(nx, ny, nt)}"
        )
    ksp = dft3(img.data) * mask.pattern[:, :, None, :]
    return KSpaceSeries(data=ksp, mask=mask, frame_times=img.frame_times)


def kspace_adjoint(k: KSpaceSeries) -> np.ndarray:
    """Adjoint of the masked Fourier encoding applied to sampled data.

    Returns the complex zero-filled volume series; :func:`zero_fill_recon`
    wraps this with the real-part convention of the corrupted image series.
    """
    return idft3(k.data * k.mask.pattern[:, :, None, :])


def zero_fill_recon(k: KSpaceSeries) -> DynamicSeries:
    """Corrupted image series from undersampled k-space (zero-filled adjoint).

    The real part of the complex adjoint is kept: source images are real, and
    real-part retention keeps the operator linear.
    """
    return DynamicSeries(
        data=kspace_adjoint(k).real, frame_times=k.frame_times, kind="image"
    )


def forward_model(
    pk: PKMaps,
    vif: VascularInputFunction,
    ctx: AcquisitionContext,
    mask: SamplingMask,
) -> KSpaceSeries:
    """Full composition: kinetics, signal model, masked Fourier encoding."""
    return undersample(spgr_forward(patlak_forward(pk, vif, ctx.frame_times), ctx), mask)


def image_forward(
    pk: PKMaps, vif: VascularInputFunction, ctx: AcquisitionContext
) -> DynamicSeries:
    """Composition of the first two steps only: PK maps to clean image series."""
    return spgr_forward(patlak_forward(pk, vif, ctx.frame_times), ctx)
