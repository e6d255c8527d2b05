"""Closed-form Patlak fitting of concentration curves.

The model is linear in (vp, ktrans), so the least-squares fit per voxel is
the solution of a single 2x2 normal-equation system shared by all voxels
(the design depends only on the input function and frame times). A
brute-force grid search over the same objective is included for validation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateFitError, InvalidInputError
from .forward import vif_at_frames
from .types import DynamicSeries, PKMaps, VascularInputFunction

__all__ = ["fit_patlak_lls", "GridSpec", "fit_patlak_oracle"]

_DET_RTOL = 1e-12


def _design(c, vif, frame_times):
    if c.kind != "concentration":
        raise InvalidInputError("patlak fitting expects a concentration series")
    if frame_times is None:
        frame_times = c.frame_times
    elif not np.array_equal(np.asarray(frame_times, float), c.frame_times):
        raise InvalidInputError("frame_times disagree with the series frame times")
    if c.nt < 2:
        raise InvalidInputError("need at least two frames to fit two parameters")
    return vif_at_frames(vif, frame_times)


def fit_patlak_lls(
    c: DynamicSeries,
    vif: VascularInputFunction,
    frame_times=None,
) -> PKMaps:
    """Exact unconstrained least-squares Patlak fit, voxelwise.

    Minimizes ``sum_t (C_t - vp Cp_t - ktrans CumInt_t)^2`` through the 2x2
    normal equations written out explicitly. Negative estimates are
    returned as-is; noise makes them legitimate outputs and consumers decide
    whether to clamp.

    Raises DegenerateFitError when the normal matrix is singular (determinant
    below ``1e-12 * (trace/2)^2``), naming which regressor collapsed. A voxel
    whose curve is identically zero comes back as (ktrans, vp) = (0, 0).
    """
    cp_f, cum_f = _design(c, vif, frame_times)
    a11 = float(cp_f @ cp_f)
    a12 = float(cp_f @ cum_f)
    a22 = float(cum_f @ cum_f)
    det = a11 * a22 - a12 * a12
    scale = ((a11 + a22) / 2.0) ** 2
    if det <= _DET_RTOL * scale:
        if a11 <= _DET_RTOL * scale:
            why = "Cp is zero at every frame time"
        elif a22 <= _DET_RTOL * scale:
            why = "the Cp integral is zero at every frame time"
        else:
            why = "Cp and its integral are collinear over the frame times"
        raise DegenerateFitError(f"singular Patlak normal matrix: {why}")

    b1 = np.tensordot(c.data, cp_f, axes=([3], [0]))
    b2 = np.tensordot(c.data, cum_f, axes=([3], [0]))
    vp = (a22 * b1 - a12 * b2) / det
    ktrans = (a11 * b2 - a12 * b1) / det
    return PKMaps(ktrans=ktrans, vp=vp)


@dataclass(frozen=True)
class GridSpec:
    """Search grid for the brute-force fit: closed ranges plus a common step."""

    ktrans_lo: float = 0.0
    ktrans_hi: float = 0.5
    vp_lo: float = 0.0
    vp_hi: float = 0.2
    step: float = 1e-4

    def __post_init__(self):
        if self.step <= 0:
            raise InvalidInputError("grid step must be positive")
        if self.ktrans_hi < self.ktrans_lo or self.vp_hi < self.vp_lo:
            raise InvalidInputError("grid ranges must be nonempty")

    @property
    def ktrans_values(self) -> np.ndarray:
        return np.arange(self.ktrans_lo, self.ktrans_hi + self.step / 2, self.step)

    @property
    def vp_values(self) -> np.ndarray:
        return np.arange(self.vp_lo, self.vp_hi + self.step / 2, self.step)


def fit_patlak_oracle(
    c: DynamicSeries,
    vif: VascularInputFunction,
    frame_times=None,
    grid: GridSpec | None = None,
) -> PKMaps:
    """Exhaustive grid search over the Patlak least-squares objective.

    Slow by construction (it exists to validate the closed-form fit in the
    test suite); evaluates the residual sum of squares at every grid point
    and keeps the argmin per voxel.
    """
    grid = grid or GridSpec()
    cp_f, cum_f = _design(c, vif, frame_times)
    kt_vals = grid.ktrans_values
    vp_vals = grid.vp_values
    if kt_vals.size == 0 or vp_vals.size == 0:
        raise InvalidInputError("empty parameter grid")

    dims = c.dims
    flat = c.data.reshape(-1, c.nt)
    kt_out = np.empty(flat.shape[0])
    vp_out = np.empty(flat.shape[0])
    block = max(1, int(2**22 // (vp_vals.size * c.nt)))
    for v in range(flat.shape[0]):
        curve = flat[v]
        best_obj = np.inf
        best_ik = best_iv = 0
        for start in range(0, kt_vals.size, block):
            kt_blk = kt_vals[start : start + block]
            resid = (
                curve[None, None, :]
                - vp_vals[None, :, None] * cp_f[None, None, :]
                - kt_blk[:, None, None] * cum_f[None, None, :]
            )
            obj = np.einsum("kvt,kvt->kv", resid, resid)
            ik, iv = np.unravel_index(np.argmin(obj), obj.shape)
            if obj[ik, iv] < best_obj:
                best_obj = obj[ik, iv]
                best_ik, best_iv = start + ik, iv
        kt_out[v] = kt_vals[best_ik]
        vp_out[v] = vp_vals[best_iv]
    return PKMaps(ktrans=kt_out.reshape(dims), vp=vp_out.reshape(dims))
