"""Inference: corrected maps from corrupted blocks, reassembled to a volume.

The network predicts residual maps; the corrected estimate is the
uncorrected fit minus that prediction. Block outputs are placed back at
their manifest origins; with a zero-scaled (untrained) head the result
equals the uncorrected maps exactly.
"""

from __future__ import annotations

import numpy as np
import torch
from torch import Tensor

from . import containers
from .data import BlockDataset
from .network import ResidualMapNet
from .train import load_checkpoint


def correct_blocks(model: ResidualMapNet, su_norm: Tensor, theta_u: Tensor) -> Tensor:
    """``theta_u - network(su_norm)`` for a batch of normalized signal blocks."""
    if theta_u.shape[-4] != 2:
        raise ValueError(f"maps must have 2 channels, got {theta_u.shape[-4]}")
    if su_norm.shape[:1] + su_norm.shape[-3:] != theta_u.shape[:1] + theta_u.shape[-3:]:
        raise ValueError(
            f"signal blocks {tuple(su_norm.shape)} and maps {tuple(theta_u.shape)} "
            "do not align"
        )
    with torch.no_grad():
        return theta_u - model(su_norm)


def infer_dataset(checkpoint_path, dataset_dir) -> tuple[np.ndarray, np.ndarray]:
    """Run a checkpoint over every block of a dataset; returns (ktrans, vp).

    Volumes have the manifest's dims; voxels outside the block tiling (when
    the dims are not multiples of the block size) stay zero.
    """
    model, cfg, _ = load_checkpoint(checkpoint_path)
    dataset = BlockDataset(dataset_dir)
    if cfg.frames != dataset.n_frames:
        raise ValueError(
            f"checkpoint expects {cfg.frames} frames, dataset has {dataset.n_frames}"
        )
    ktrans = np.zeros(dataset.volume_dims)
    vp = np.zeros(dataset.volume_dims)
    bx, by, bz = dataset.block_dims
    for index in range(len(dataset)):
        sample = dataset[index]
        corrected = correct_blocks(
            model, sample["su_norm"].unsqueeze(0), sample["theta_u"].unsqueeze(0)
        )[0].numpy()
        ox, oy, oz = dataset.origin(index)
        ktrans[ox : ox + bx, oy : oy + by, oz : oz + bz] = corrected[0]
        vp[ox : ox + bx, oy : oy + by, oz : oz + bz] = corrected[1]
    return ktrans, vp


def uncorrected_dataset(dataset_dir) -> tuple[np.ndarray, np.ndarray]:
    """Reassemble the dataset's uncorrected fitted maps the same way."""
    dataset = BlockDataset(dataset_dir)
    ktrans = np.zeros(dataset.volume_dims)
    vp = np.zeros(dataset.volume_dims)
    bx, by, bz = dataset.block_dims
    for index in range(len(dataset)):
        theta_u = dataset[index]["theta_u"].numpy()
        ox, oy, oz = dataset.origin(index)
        ktrans[ox : ox + bx, oy : oy + by, oz : oz + bz] = theta_u[0]
        vp[ox : ox + bx, oy : oy + by, oz : oz + bz] = theta_u[1]
    return ktrans, vp


def target_dataset(dataset_dir) -> tuple[np.ndarray, np.ndarray]:
    """Reassemble the dataset's target maps (uncorrected minus residual)."""
    dataset = BlockDataset(dataset_dir)
    ktrans = np.zeros(dataset.volume_dims)
    vp = np.zeros(dataset.volume_dims)
    bx, by, bz = dataset.block_dims
    for index in range(len(dataset)):
        sample = dataset[index]
        theta_t = (sample["theta_u"] - sample["theta_r"]).numpy()
        ox, oy, oz = dataset.origin(index)
        ktrans[ox : ox + bx, oy : oy + by, oz : oz + bz] = theta_t[0]
        vp[ox : ox + bx, oy : oy + by, oz : oz + bz] = theta_t[1]
    return ktrans, vp


def write_maps(path, ktrans: np.ndarray, vp: np.ndarray,
               provenance: dict | None = None) -> None:
    """Write corrected maps as a parameter-map container for `dcepk metrics`."""
    containers.save_pk_maps(path, ktrans, vp, provenance=provenance)
