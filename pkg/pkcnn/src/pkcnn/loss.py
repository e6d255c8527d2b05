"""Forward-physical-model training loss.

The loss blends two mean-squared terms: fidelity of the predicted residual
maps to the exported residual targets, and consistency of the signal implied
by the corrected maps with the fully sampled reference signal,

    lam * MSE(theta_r, theta_r_pred)
    + (1 - lam) * MSE(S_norm, norm(f_m(theta_u - theta_r_pred)))

where ``f_m`` is the differentiable forward model from :mod:`pkcnn.physics`.
Signals are normalized to the dataset's reference range so the two terms
live on comparable scales and ``lam`` trades them off meaningfully.

Before the signal model, the implied concentration passes through a smooth
floor. The spoiled-gradient-echo ratio has a pole where the denominator
1 - cos(flip) * exp(-(K + L)) vanishes, at a slightly negative concentration;
a randomly initialized network can land voxels there early in training and
blow the signal term up by orders of magnitude. The floor sits halfway
between zero and the nearest pole across the block's T10 range, implemented
as a softplus hinge so realistic (nonnegative) concentrations pass through
untouched while the gradient never dies entirely. Large positive
concentrations need no guard: exp(-L) only decays.
"""

from __future__ import annotations

import math

import torch
import torch.nn.functional as F
from torch import Tensor

from .physics import FrameVif, PhysicsContext, patlak_concentration, spgr_signal

_FLOOR_FRACTION = 0.5
_FLOOR_BETA = 50.0
_L_OVERFLOW = -20.0


def _mse(a: Tensor, b: Tensor) -> Tensor:
    return torch.mean((a - b) ** 2)


def _concentration_floor(ctx: PhysicsContext) -> float:
    """Lowest concentration (mM) the signal term will evaluate, < 0."""
    unit = ctx.r1 * ctx.tr
    cos_flip = math.cos(ctx.flip)
    if cos_flip > 0.0:
        pole_l = math.log(cos_flip) - ctx.tr / float(ctx.t10.max())
        return _FLOOR_FRACTION * pole_l / unit
    return _L_OVERFLOW / unit


def _soft_floor(x: Tensor, lo: float) -> Tensor:
    return lo + F.softplus(x - lo, beta=_FLOOR_BETA)


def loss_terms(
    theta_r_pred: Tensor,
    theta_r_true: Tensor,
    theta_u: Tensor,
    s_true: Tensor,
    vif: FrameVif,
    ctx: PhysicsContext,
    lam: float,
) -> tuple[Tensor, Tensor, Tensor]:
    """Return ``(total, parameter_term, signal_term)``; see the module docstring.

    ``s_true`` is the raw reference signal; both it and the model output are
    normalized with the context's constants before the signal term.
    """
    if not 0.0 <= lam <= 1.0:
        raise ValueError(f"lam must be in [0, 1], got {lam}")
    scale = ctx.signal_hi - ctx.signal_lo
    if not scale > 0:
        raise ValueError("degenerate signal normalization range")

    param_term = _mse(theta_r_pred, theta_r_true)

    theta_t_pred = theta_u - theta_r_pred
    conc = patlak_concentration(
        theta_t_pred.select(-4, 0), theta_t_pred.select(-4, 1), vif
    )
    s_model = spgr_signal(_soft_floor(conc, _concentration_floor(ctx)), ctx)
    signal_term = _mse(
        (s_model - ctx.signal_lo) / scale,
        (s_true - ctx.signal_lo) / scale,
    )
    total = lam * param_term + (1.0 - lam) * signal_term
    return total, param_term, signal_term


def physical_model_loss(
    theta_r_pred: Tensor,
    theta_r_true: Tensor,
    theta_u: Tensor,
    s_true: Tensor,
    vif: FrameVif,
    ctx: PhysicsContext,
    lam: float,
) -> Tensor:
    total, _, _ = loss_terms(theta_r_pred, theta_r_true, theta_u, s_true, vif, ctx, lam)
    return total
