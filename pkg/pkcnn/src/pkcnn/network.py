"""Dual-pathway residual network for parameter-map correction.

The network maps a corrupted signal series (frames stacked as channels) to
per-voxel residual maps. The first layer filters each frame individually and
a learned 1x1x1 aggregation collapses the frame axis into one multi-channel
feature volume (a single aggregated value per voxel and filter, instead of
per-frame values). Two parallel pathways follow: a local one of stacked
unit-dilation convolutions and a global one of four dilated convolutions
whose dilation factors grow the receptive field far beyond the local
path's. Concatenated features pass through voxelwise fully-connected layers
(unit kernels) into a two-channel head, one channel per parameter. Spatial
dims are preserved everywhere by zero padding.

``head_init_scale`` shrinks the head's default random initialization so the
untrained network predicts a near-zero residual and the corrected estimate
starts near the uncorrected maps, which keeps the early signal term away
from the degenerate region of the forward model while still letting
gradients reach the trunk. A scale of zero makes the initial residual
exactly zero (the corrected maps equal the uncorrected ones bit for bit),
at the cost of a dead trunk gradient on the first step.
"""

from __future__ import annotations

from dataclasses import dataclass

import torch
from torch import Tensor, nn

REQUIRED_DILATIONS = (2, 4, 8, 16)
REQUIRED_KERNEL = 3


@dataclass
class NetworkConfig:
    """Architecture and loss settings.

    ``frames`` is the number of input channels (dynamic frames). ``lam``
    weights the parameter-fidelity term of the training loss against the
    signal-consistency term.
    """

    frames: int
    filters: int = 32
    local_depth: int = 4
    dilations: tuple[int, ...] = REQUIRED_DILATIONS
    kernel_size: int = REQUIRED_KERNEL
    fc_widths: tuple[int, ...] = (128, 64)
    lam: float = 0.5
    head_init_scale: float = 0.1

    def __post_init__(self):
        self.dilations = tuple(int(d) for d in self.dilations)
        self.fc_widths = tuple(int(w) for w in self.fc_widths)
        if self.frames < 1:
            raise ValueError(f"frames must be >= 1, got {self.frames}")
        if self.filters < 1 or self.local_depth < 1:
            raise ValueError("filters and local_depth must be >= 1")
        if self.dilations != REQUIRED_DILATIONS:
            raise ValueError(
                f"dilations must be exactly {REQUIRED_DILATIONS}, got {self.dilations}"
            )
        if self.kernel_size != REQUIRED_KERNEL:
            raise ValueError(
                f"kernel size must be {REQUIRED_KERNEL}, got {self.kernel_size}"
            )
        if not self.fc_widths or any(w < 1 for w in self.fc_widths):
            raise ValueError(f"fc_widths must be positive, got {self.fc_widths}")
        if not 0.0 <= self.lam <= 1.0:
            raise ValueError(f"lam must be in [0, 1], got {self.lam}")
        if self.head_init_scale < 0.0:
            raise ValueError(
                f"head_init_scale must be >= 0, got {self.head_init_scale}"
            )


class ResidualMapNet(nn.Module):
    """See the module docstring; built by :func:`build_network`."""

    def __init__(self, cfg: NetworkConfig):
        super().__init__()
        self.frames = cfg.frames
        k = cfg.kernel_size
        pad = k // 2
        f = cfg.filters

        self.per_frame = nn.Conv3d(cfg.frames, cfg.frames, k, padding=pad,
                                   groups=cfg.frames)
        self.aggregate = nn.Conv3d(cfg.frames, f, 1)

        local = []
        in_ch = f
        for _ in range(cfg.local_depth):
            local += [nn.Conv3d(in_ch, f, k, padding=pad), nn.ReLU()]
            in_ch = f
        self.local_path = nn.Sequential(*local)

        glob = []
        in_ch = f
        for d in cfg.dilations:
            glob += [nn.Conv3d(in_ch, f, k, padding=d, dilation=d), nn.ReLU()]
            in_ch = f
        self.global_path = nn.Sequential(*glob)

        mixer = []
        in_ch = 2 * f
        for w in cfg.fc_widths:
            mixer += [nn.Conv3d(in_ch, w, 1), nn.ReLU()]
            in_ch = w
        self.mixer = nn.Sequential(*mixer)

        self.head = nn.Conv3d(in_ch, 2, 1)
        with torch.no_grad():
            self.head.weight.mul_(cfg.head_init_scale)
            self.head.bias.mul_(cfg.head_init_scale)

    def forward(self, x: Tensor) -> Tensor:
        if x.ndim != 5 or x.shape[1] != self.frames:
            raise ValueError(
                f"expected input (n, {self.frames}, x, y, z), got {tuple(x.shape)}"
            )
        z = torch.relu(self.per_frame(x))
        z = torch.relu(self.aggregate(z))
        z = torch.cat([self.local_path(z), self.global_path(z)], dim=1)
        return self.head(self.mixer(z))


def build_network(cfg: NetworkConfig) -> ResidualMapNet:
    return ResidualMapNet(cfg)


def receptive_field(cfg: NetworkConfig) -> tuple[int, int]:
    """Receptive-field extent (voxels per axis) of the local and global paths.

    Each k-kernel convolution with dilation d widens the field by (k - 1) d;
    the shared stem contributes once to both paths.
    """
    stem = cfg.kernel_size - 1
    local = 1 + stem + cfg.local_depth * (cfg.kernel_size - 1)
    glob = 1 + stem + sum((cfg.kernel_size - 1) * d for d in cfg.dilations)
    return local, glob
