"""Block dataset reader for exported training directories.

A dataset directory (written by the estimation package's block exporter)
holds a manifest, a shared input function, and one subdirectory per block
with the corrupted signal, the reference signal, the corrupted-fit maps, the
residual targets, and the per-block acquisition context volumes.

Samples come out channels-first: signals ``(t, x, y, z)``, maps
``(2, x, y, z)`` with ktrans in channel 0. The corrupted signal is
normalized to the manifest's reference range for the network input; the
reference signal stays raw because the loss normalizes it itself.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
import torch
from torch.utils.data import Dataset

from . import containers
from .physics import FrameVif, PhysicsContext


def _to_channels_first(a: np.ndarray, dtype) -> torch.Tensor:
    # containers store (x, y, z, c); the network wants (c, x, y, z)
    return torch.as_tensor(np.moveaxis(a, -1, 0).copy(), dtype=dtype)


class BlockDataset(Dataset):
    """Lazy per-block loader over one exported dataset directory."""

    def __init__(self, dataset_dir, dtype=torch.float32):
        self.root = Path(dataset_dir)
        self.dtype = dtype
        self.manifest = containers.load_manifest(self.root)
        self.frame_times = np.asarray(self.manifest["frame_times"], dtype=np.float64)
        self.tr = float(self.manifest["tr"])
        self.flip = float(self.manifest["flip"])
        self.r1 = float(self.manifest["r1"])
        norm = self.manifest["signal_norm"]
        self.signal_lo = float(norm["min"])
        self.signal_hi = float(norm["max"])
        if not self.signal_hi > self.signal_lo:
            raise ValueError(f"{dataset_dir}: degenerate signal normalization range")

        vif_cp, vif_header = containers.load(self.root / self.manifest["vif_file"])
        self.vif_times = np.asarray(vif_header["frame_times"], dtype=np.float64)
        self.vif_cp = np.asarray(vif_cp, dtype=np.float64)
        self.vif_frames = FrameVif.from_arrays(
            self.vif_times, self.vif_cp, self.frame_times, dtype=dtype
        )

    @property
    def n_frames(self) -> int:
        return int(self.manifest["n_frames"])

    @property
    def volume_dims(self) -> tuple[int, int, int]:
        return tuple(self.manifest["volume_dims"])

    @property
    def block_dims(self) -> tuple[int, int, int]:
        return tuple(self.manifest["block_dims"])

    def __len__(self) -> int:
        return int(self.manifest["n_blocks"])

    def origin(self, index: int) -> tuple[int, int, int]:
        return tuple(self.manifest["blocks"][index]["origin"])

    def __getitem__(self, index: int) -> dict:
        bdir = self.root / self.manifest["blocks"][index]["dir"]
        su, _ = containers.load(bdir / "su.ctr")
        s, _ = containers.load(bdir / "s.ctr")
        theta_u, _ = containers.load(bdir / "theta_u.ctr")
        theta_r, _ = containers.load(bdir / "theta_r.ctr")
        ctx, _ = containers.load(bdir / "ctx.ctr")
        scale = self.signal_hi - self.signal_lo
        return {
            "su_norm": _to_channels_first((su - self.signal_lo) / scale, self.dtype),
            "s": _to_channels_first(s, self.dtype),
            "theta_u": _to_channels_first(theta_u, self.dtype),
            "theta_r": _to_channels_first(theta_r, self.dtype),
            "t10": torch.as_tensor(ctx[..., 0], dtype=self.dtype),
            "m0": torch.as_tensor(ctx[..., 1], dtype=self.dtype),
            "s0": torch.as_tensor(ctx[..., 2], dtype=self.dtype),
        }

    def physics_context(self, batch: dict) -> PhysicsContext:
        """Assemble the loss context for a batch (or a single sample dict)."""
        return PhysicsContext(
            t10=batch["t10"],
            m0=batch["m0"],
            s0=batch["s0"],
            tr=self.tr,
            flip=self.flip,
            r1=self.r1,
            signal_lo=self.signal_lo,
            signal_hi=self.signal_hi,
        )
