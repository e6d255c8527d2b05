"""Architecture contract: config validation, shapes, init behavior."""

import pytest
import torch

from pkcnn.network import (
    REQUIRED_DILATIONS,
    NetworkConfig,
    build_network,
    receptive_field,
)


def test_required_dilations_enforced():
    with pytest.raises(ValueError, match="dilations"):
        NetworkConfig(frames=6, dilations=(1, 2, 4, 8))
    with pytest.raises(ValueError, match="dilations"):
        NetworkConfig(frames=6, dilations=(2, 4, 8))


def test_required_kernel_enforced():
    with pytest.raises(ValueError, match="kernel"):
        NetworkConfig(frames=6, kernel_size=5)


def test_lam_range_enforced():
    with pytest.raises(ValueError, match="lam"):
        NetworkConfig(frames=6, lam=-0.1)
    with pytest.raises(ValueError, match="lam"):
        NetworkConfig(frames=6, lam=1.5)
    NetworkConfig(frames=6, lam=0.0)
    NetworkConfig(frames=6, lam=1.0)


def test_other_config_validation():
    with pytest.raises(ValueError, match="frames"):
        NetworkConfig(frames=0)
    with pytest.raises(ValueError):
        NetworkConfig(frames=6, filters=0)
    with pytest.raises(ValueError, match="fc_widths"):
        NetworkConfig(frames=6, fc_widths=())
    with pytest.raises(ValueError, match="head_init_scale"):
        NetworkConfig(frames=6, head_init_scale=-0.5)


def test_output_shape_two_channels():
    torch.manual_seed(0)
    cfg = NetworkConfig(frames=5, filters=4, local_depth=1, fc_widths=(8, 4))
    net = build_network(cfg)
    x = torch.rand(2, 5, 6, 6, 6)
    y = net(x)
    assert y.shape == (2, 2, 6, 6, 6)


def test_rejects_wrong_frame_count():
    cfg = NetworkConfig(frames=5, filters=4, local_depth=1, fc_widths=(8,))
    net = build_network(cfg)
    with pytest.raises(ValueError, match="expected input"):
        net(torch.rand(1, 4, 6, 6, 6))


def test_zero_head_scale_gives_identity_correction():
    torch.manual_seed(0)
    cfg = NetworkConfig(frames=6, filters=4, local_depth=1, fc_widths=(8,),
                        head_init_scale=0.0)
    net = build_network(cfg)
    y = net(torch.rand(3, 6, 8, 8, 4))
    assert torch.count_nonzero(y) == 0


def test_default_head_scale_shrinks_initial_residual():
    torch.manual_seed(0)
    small = build_network(NetworkConfig(frames=6, filters=4, local_depth=1,
                                        fc_widths=(8,)))
    torch.manual_seed(0)
    full = build_network(NetworkConfig(frames=6, filters=4, local_depth=1,
                                       fc_widths=(8,), head_init_scale=1.0))
    x = torch.rand(1, 6, 8, 8, 4)
    assert small(x).abs().max() < full(x).abs().max()
    assert small(x).abs().max() > 0


def test_receptive_field_global_exceeds_local():
    cfg = NetworkConfig(frames=6)
    local, glob = receptive_field(cfg)
    assert (local, glob) == (11, 63)
    shallow = NetworkConfig(frames=6, local_depth=1)
    local1, glob1 = receptive_field(shallow)
    assert glob1 > local1
    assert sum(REQUIRED_DILATIONS) * 2 + 3 == glob1
