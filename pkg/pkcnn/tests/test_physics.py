"""Differentiable forward model: conventions and small-scale identities.

The headline parity check against the estimation package runs in
test_acceptance.py; these are the cheap structural guarantees.
"""

import numpy as np
import pytest
import torch

from pkcnn.physics import FrameVif, PhysicsContext, patlak_concentration, signal_forward


def _ramp_vif(nt=6):
    times = np.linspace(0.0, 5.0, 50)
    cp = np.clip(times - 0.5, 0.0, None) * np.exp(-times / 4.0)
    frame_times = np.linspace(0.0, 4.5, nt)
    return FrameVif.from_arrays(times, cp, frame_times, dtype=torch.float64)


def _context(shape):
    rng = np.random.default_rng(5)
    return PhysicsContext(
        t10=torch.as_tensor(rng.uniform(0.8, 2.0, shape)),
        m0=torch.as_tensor(rng.uniform(0.8, 1.2, shape)),
        s0=torch.as_tensor(rng.uniform(0.05, 0.15, shape)),
        tr=0.005,
        flip=np.deg2rad(15.0),
        r1=4.5,
        signal_lo=0.0,
        signal_hi=1.0,
    )


def test_vif_frames_must_lie_inside_samples():
    times = np.linspace(0.0, 2.0, 20)
    cp = np.ones_like(times)
    with pytest.raises(ValueError):
        FrameVif.from_arrays(times, cp, np.array([0.0, 2.5]))


def test_concentration_channel_conventions():
    vif = _ramp_vif()
    shape = (4, 4, 4)
    rng = np.random.default_rng(1)
    ktrans = torch.as_tensor(rng.uniform(0.0, 0.3, shape))
    vp = torch.as_tensor(rng.uniform(0.0, 0.1, shape))
    zero = torch.zeros(shape, dtype=torch.float64)

    perfusion_only = patlak_concentration(zero, vp, vif)
    leak_only = patlak_concentration(ktrans, zero, vif)
    both = patlak_concentration(ktrans, vp, vif)

    cp = vif.cp_f.to(torch.float64).reshape(-1, 1, 1, 1)
    cum = vif.cum_f.to(torch.float64).reshape(-1, 1, 1, 1)
    torch.testing.assert_close(perfusion_only, vp * cp)
    torch.testing.assert_close(leak_only, ktrans * cum)
    torch.testing.assert_close(both, perfusion_only + leak_only)


def test_signal_forward_batched_matches_unbatched():
    vif = _ramp_vif()
    shape = (4, 4, 4)
    ctx = _context(shape)
    rng = np.random.default_rng(2)
    theta = torch.as_tensor(rng.uniform(0.0, 0.2, (3, 2) + shape))
    batched = signal_forward(theta, vif, ctx)
    assert batched.shape == (3, 6) + shape
    for i in range(3):
        single = signal_forward(theta[i], vif, ctx)
        torch.testing.assert_close(batched[i], single)


def test_signal_forward_validates_channel_axis():
    vif = _ramp_vif()
    ctx = _context((4, 4, 4))
    with pytest.raises(ValueError, match="2 channels"):
        signal_forward(torch.zeros(3, 4, 4, 4, dtype=torch.float64), vif, ctx)


def test_zero_maps_give_baseline_signal():
    vif = _ramp_vif()
    shape = (4, 4, 4)
    ctx = _context(shape)
    signal = signal_forward(torch.zeros((2,) + shape, dtype=torch.float64), vif, ctx)
    spread = signal.max(dim=-4).values - signal.min(dim=-4).values
    assert float(spread.abs().max()) < 1e-12
    torch.testing.assert_close(signal.select(-4, 0), ctx.s0)
