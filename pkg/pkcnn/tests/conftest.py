"""Shared fixtures: exported block datasets and one trained smoke checkpoint.

Dataset generation goes through the estimation package itself, so every byte
the trainer sees took the same path real exports take. The smoke training run
is session-scoped because several tests look at different aspects of the same
run (loss history, checkpoint contents, held-out accuracy).
"""

import pytest
import torch

from dcepk.blocks import export_training_blocks
from dcepk.forward import image_forward, spgr_inverse, zero_fill_recon
from dcepk.patlak import fit_patlak_lls
from dcepk.phantom import PhantomSpec, make_phantom, synthesize_acquisition
from dcepk.sampling import MaskSpec, golden_angle_mask

from pkcnn.network import NetworkConfig
from pkcnn.train import train

torch.set_num_threads(1)

DIMS = (32, 32, 8)
NT = 6
BLOCK = (16, 16, 4)
ACCEL = 15.0
NOISE = 0.005


def make_block_dataset(out_dir, seed, dims=DIMS, nt=NT, block=BLOCK):
    """Phantom -> undersampled acquisition -> zero-fill fit -> block export."""
    spec = PhantomSpec(dims=dims, nt=nt, seed=seed)
    pk, vif, ctx = make_phantom(spec)
    mask = golden_angle_mask(MaskSpec(dims[0], dims[1], nt, accel=ACCEL, seed=seed))
    kspace = synthesize_acquisition(pk, vif, ctx, mask, noise_sigma=NOISE, seed=seed)
    s_ref = image_forward(pk, vif, ctx)
    su = zero_fill_recon(kspace)
    theta_u = fit_patlak_lls(spgr_inverse(su, ctx), vif)
    export_training_blocks(su, s_ref, theta_u, pk, vif, ctx, block, out_dir)
    return out_dir


def smoke_config() -> NetworkConfig:
    # sized so 20 epochs over 8 blocks move the weights somewhere useful
    return NetworkConfig(frames=NT, filters=16, local_depth=2,
                         fc_widths=(64, 32), lam=0.5)


@pytest.fixture(scope="session")
def train_dataset_dir(tmp_path_factory):
    return make_block_dataset(tmp_path_factory.mktemp("train_ds"), seed=0)


@pytest.fixture(scope="session")
def holdout_dataset_dir(tmp_path_factory):
    return make_block_dataset(tmp_path_factory.mktemp("holdout_ds"), seed=1)


@pytest.fixture(scope="session")
def smoke_run(train_dataset_dir, tmp_path_factory):
    out = tmp_path_factory.mktemp("smoke_run")
    return train(train_dataset_dir, smoke_config(), epochs=20, lr=1e-3,
                 decay=1e-4, batch=1, out_dir=out, seed=0)
