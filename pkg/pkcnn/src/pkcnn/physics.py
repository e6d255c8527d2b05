"""Differentiable forward physical model: parameter maps to signal series.

Re-expresses the estimation package's image-domain forward model in torch so
gradients flow through it inside the training loss. Two steps:

1. Patlak kinetics ``C(r,t) = vp(r) Cp(t) + ktrans(r) \\int_0^t Cp``,
2. spoiled gradient echo signal
   ``S = m0 sin(a) (1 - E) / (1 - cos(a) E) + (s0 - m0 sin(a) (1 - EK) / (1 - cos(a) EK))``
   with ``E = exp(-(K + L))``, ``EK = exp(-K)``, ``K = tr / t10``,
   ``L = r1 C tr``.

The input function enters through its values and running integral sampled at
the frame times; both are precomputed in float64 numpy with the same
interpolation and trapezoidal rule as the estimation side, so the only
discrepancy between the two implementations is floating-point noise.

Tensor layout is channels-first: maps are ``(n, 2, x, y, z)`` with channel 0
ktrans and channel 1 vp, signals are ``(n, t, x, y, z)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch
from torch import Tensor


def frame_kinetics(times, cp, frame_times) -> tuple[np.ndarray, np.ndarray]:
    """Cp and its cumulative trapezoidal integral at the frame times (float64)."""
    times = np.asarray(times, dtype=np.float64)
    cp = np.asarray(cp, dtype=np.float64)
    frame_times = np.asarray(frame_times, dtype=np.float64)
    if frame_times.min() < times[0] or frame_times.max() > times[-1]:
        raise ValueError("frame times exceed the sampled input-function range")
    cum = np.concatenate(
        [[0.0], np.cumsum(0.5 * (cp[1:] + cp[:-1]) * np.diff(times))]
    )
    return np.interp(frame_times, times, cp), np.interp(frame_times, times, cum)


@dataclass
class FrameVif:
    """Input-function values and running integral at the frame times."""

    cp_f: Tensor
    cum_f: Tensor

    @classmethod
    def from_arrays(cls, times, cp, frame_times, dtype=torch.float32) -> "FrameVif":
        cp_f, cum_f = frame_kinetics(times, cp, frame_times)
        return cls(
            cp_f=torch.as_tensor(cp_f, dtype=dtype),
            cum_f=torch.as_tensor(cum_f, dtype=dtype),
        )

    def to(self, dtype) -> "FrameVif":
        return FrameVif(self.cp_f.to(dtype), self.cum_f.to(dtype))


@dataclass
class PhysicsContext:
    """Everything besides the maps that the forward model and loss need.

    ``t10``, ``m0``, ``s0`` are ``(n, x, y, z)`` volumes (or unbatched
    ``(x, y, z)``); ``signal_lo`` / ``signal_hi`` are the dataset's
    reference-signal normalization constants.
    """

    t10: Tensor
    m0: Tensor
    s0: Tensor
    tr: float
    flip: float
    r1: float
    signal_lo: float
    signal_hi: float


def patlak_concentration(ktrans: Tensor, vp: Tensor, vif: FrameVif) -> Tensor:
    """Concentration series ``(..., t, x, y, z)`` from ``(..., x, y, z)`` maps."""
    shape = [1] * (ktrans.ndim + 1)
    shape[-4] = -1
    cp = vif.cp_f.view(shape)
    cum = vif.cum_f.view(shape)
    return vp.unsqueeze(-4) * cp + ktrans.unsqueeze(-4) * cum


def spgr_signal(conc: Tensor, ctx: PhysicsContext) -> Tensor:
    """SPGR intensities from a concentration series, baseline carried explicitly."""
    sin_a = float(np.sin(ctx.flip))
    cos_a = float(np.cos(ctx.flip))
    k = (ctx.tr / ctx.t10).unsqueeze(-4)
    l = ctx.r1 * conc * ctx.tr
    m0 = ctx.m0.unsqueeze(-4)
    s0 = ctx.s0.unsqueeze(-4)
    e = torch.exp(-(k + l))
    ek = torch.exp(-k)
    return m0 * sin_a * (1 - e) / (1 - cos_a * e) + (
        s0 - m0 * sin_a * (1 - ek) / (1 - cos_a * ek)
    )


def signal_forward(theta: Tensor, vif: FrameVif, ctx: PhysicsContext) -> Tensor:
    """Full model: ``(n, 2, x, y, z)`` maps to ``(n, t, x, y, z)`` signal."""
    if theta.shape[-4] != 2:
        raise ValueError(f"maps must have 2 channels, got {theta.shape[-4]}")
    conc = patlak_concentration(theta.select(-4, 0), theta.select(-4, 1), vif)
    return spgr_signal(conc, ctx)
