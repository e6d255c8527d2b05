"""Model-based direct parameter estimation from undersampled k-space.

Minimizes the data-fidelity objective ``J(theta) = 1/2 ||y - A(theta)||^2``
where A chains Patlak kinetics, the SPGR signal equation, and the masked
Fourier transform. The gradient is analytic throughout: the Fourier adjoint
carries the residual back to image space, the signal model contributes its
voxelwise derivative with respect to concentration, and the kinetic model
is linear so its transpose is a weighted temporal sum.

The optimizer is steepest descent with Armijo backtracking, optionally
preconditioned per parameter channel by the inverse squared norms of the
kinetic design columns (the two channels otherwise differ in curvature by
two orders of magnitude and descent crawls).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInputError, NumericDomainError
from .forward import (
    dft3,
    kspace_adjoint,
    patlak_forward,
    spgr_forward,
    spgr_inverse,
    spgr_signal_dC,
    undersample,
    vif_at_frames,
    zero_fill_recon,
)
from .patlak import fit_patlak_lls
from .types import (
    AcquisitionContext,
    KSpaceSeries,
    PKMaps,
    SamplingMask,
    VascularInputFunction,
)

__all__ = ["ReconOptions", "ReconLog", "objective_and_gradient", "reconstruct_direct"]

_INIT_POLICIES = ("zeros", "patlak-of-corrupted")


@dataclass(frozen=True)
class ReconOptions:
    """Optimizer configuration for the direct reconstruction.

    ``step_scale`` multiplies the curvature-matched trial step each
    iteration; backtracking halves from there when the sufficient-decrease
    test fails.
    """

    max_iters: int = 200
    tol: float = 1e-7
    step_scale: float = 1.0
    c1: float = 1e-4
    max_halvings: int = 50
    init: str = "patlak-of-corrupted"
    precondition: bool = True

    def __post_init__(self):
        if self.max_iters < 1:
            raise InvalidInputError("max_iters must be at least 1")
        if self.tol <= 0:
            raise InvalidInputError("tolerance must be positive")
        if self.step_scale <= 0:
            raise InvalidInputError("step scale must be positive")
        if not 0 < self.c1 < 1:
            raise InvalidInputError("Armijo constant must lie in (0, 1)")
        if self.max_halvings < 1:
            raise InvalidInputError("max_halvings must be at least 1")
        if self.init not in _INIT_POLICIES:
            raise InvalidInputError(
                f"unknown init policy {self.init!r}; choose from {_INIT_POLICIES}"
            )


@dataclass
class ReconLog:
    """Per-iteration objective trace plus termination flags."""

    iterations: list = field(default_factory=list)
    objectives: list = field(default_factory=list)
    steps: list = field(default_factory=list)
    converged: bool = False
    stalled: bool = False

    def append(self, iteration: int, objective: float, step: float) -> None:
        self.iterations.append(int(iteration))
        self.objectives.append(float(objective))
        self.steps.append(float(step))

    def to_jsonl(self) -> str:
        lines = [
            json.dumps({"iteration": i, "objective": o, "step": s})
            for i, o, s in zip(self.iterations, self.objectives, self.steps)
        ]
        return "\n".join(lines)


def objective_and_gradient(
    pk: PKMaps,
    k_meas: KSpaceSeries,
    vif: VascularInputFunction,
    ctx: AcquisitionContext,
) -> tuple[float, PKMaps]:
    """Data-fidelity objective and its analytic gradient at ``pk``.

    Chain rule, innermost first: residual ``r = y - M F S``; its image-space
    pull-back is ``-Re(F^H M r)``; multiply by dS/dC of the signal model;
    contract against the kinetic regressors (Cp and its running integral)
    over time to land in parameter space.
    """
    if pk.dims != ctx.dims:
        raise InvalidInputError(f"maps {pk.dims} do not match context {ctx.dims}")
    conc = patlak_forward(pk, vif, ctx.frame_times)
    pred = undersample(spgr_forward(conc, ctx), k_meas.mask)
    resid = k_meas.data - pred.data
    objective = 0.5 * float(np.vdot(resid, resid).real)

    grad_s = -kspace_adjoint(
        KSpaceSeries(data=resid, mask=k_meas.mask, frame_times=k_meas.frame_times)
    ).real
    grad_c = grad_s * spgr_signal_dC(conc.data, ctx)
    cp_f, cum_f = vif_at_frames(vif, ctx.frame_times)
    grad_ktrans = np.tensordot(grad_c, cum_f, axes=([3], [0]))
    grad_vp = np.tensordot(grad_c, cp_f, axes=([3], [0]))
    return objective, PKMaps(ktrans=grad_ktrans, vp=grad_vp)


def _initial_maps(opts, k_meas, vif, ctx) -> PKMaps:
    if opts.init == "zeros":
        z = np.zeros(ctx.dims)
        return PKMaps(ktrans=z, vp=z.copy())
    corrupted = spgr_inverse(zero_fill_recon(k_meas), ctx)
    return fit_patlak_lls(corrupted, vif)


def _curvature_along(theta, d_kt, d_vp, k_meas, vif, ctx, cp_f, cum_f):
    """Squared norm of the linearized model applied to a parameter direction.

    This is the exact quadratic coefficient of the objective along the
    direction, so slope/curvature is the parabola-vertex step (the
    backtracking search then only corrects for non-quadratic behavior such
    as signal saturation).
    """
    conc = patlak_forward(theta, vif, ctx.frame_times)
    dconc = (
        d_vp[:, :, :, None] * cp_f[None, None, None, :]
        + d_kt[:, :, :, None] * cum_f[None, None, None, :]
    )
    dsig = spgr_signal_dC(conc.data, ctx) * dconc
    ksp = dft3(dsig) * k_meas.mask.pattern[:, :, None, :]
    return float(np.vdot(ksp, ksp).real)


def reconstruct_direct(
    k_meas: KSpaceSeries,
    mask: SamplingMask | None,
    vif: VascularInputFunction,
    ctx: AcquisitionContext,
    opts: ReconOptions = ReconOptions(),
) -> tuple[PKMaps, ReconLog]:
    """Estimate PK maps from undersampled k-space by gradient descent.

    Runs Armijo backtracking line search (halving, sufficient-decrease
    constant ``opts.c1``) from the configured initialization until the
    relative objective decrease drops below ``opts.tol`` or ``opts.max_iters``
    is reached. When the line search exhausts ``opts.max_halvings`` the run
    stops with the ``stalled`` flag set rather than raising: the current
    iterate is still the best visited.

    The accepted-step objective trace in the returned log is monotone
    nonincreasing by construction.
    """
    if mask is not None and not np.array_equal(mask.pattern, k_meas.mask.pattern):
        raise InvalidInputError("mask disagrees with the mask carried by k_meas")

    cp_f, cum_f = vif_at_frames(vif, ctx.frame_times)
    if opts.precondition:
        p_kt = 1.0 / float(cum_f @ cum_f)
        p_vp = 1.0 / float(cp_f @ cp_f)
    else:
        p_kt = p_vp = 1.0

    theta = _initial_maps(opts, k_meas, vif, ctx)
    objective, grad = objective_and_gradient(theta, k_meas, vif, ctx)
    log = ReconLog()
    log.append(0, objective, 0.0)

    for it in range(1, opts.max_iters + 1):
        d_kt = p_kt * grad.ktrans
        d_vp = p_vp * grad.vp
        slope = float(np.sum(grad.ktrans * d_kt) + np.sum(grad.vp * d_vp))
        if slope == 0.0:
            log.converged = True
            break
        curved = _curvature_along(theta, d_kt, d_vp, k_meas, vif, ctx, cp_f, cum_f)
        if curved <= 0.0:
            log.converged = True
            break
        step = opts.step_scale * slope / curved

        accepted = False
        for _ in range(opts.max_halvings):
            try:
                trial = PKMaps(
                    ktrans=theta.ktrans - step * d_kt, vp=theta.vp - step * d_vp
                )
                trial_obj, trial_grad = objective_and_gradient(
                    trial, k_meas, vif, ctx
                )
            except (NumericDomainError, InvalidInputError):
                # step left the signal model's numeric domain; shrink and retry
                step *= 0.5
                continue
            if trial_obj <= objective - opts.c1 * step * slope:
                accepted = True
                break
            step *= 0.5
        if not accepted:
            log.stalled = True
            break

        decrease = objective - trial_obj
        theta, objective, grad = trial, trial_obj, trial_grad
        log.append(it, objective, step)
        if decrease <= opts.tol * max(abs(objective) + decrease, 1e-300):
            log.converged = True
            break

    return theta, log
