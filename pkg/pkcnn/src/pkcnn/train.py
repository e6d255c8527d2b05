"""Training loop: Adam with time-based learning-rate decay, per-epoch loss log.

Defaults follow the reference setup: learning rate 1e-3 with a decay rate of
1e-4 (per optimizer step, ``lr_t = lr / (1 + decay * t)``), 300 epochs,
mini-batches of 4 blocks. Both loss terms are logged separately per epoch so
the effect of ``lam`` stays visible, and the full network config (including
``lam``) rides along in the checkpoint.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path

import torch
from torch.utils.data import DataLoader

from .data import BlockDataset
from .loss import loss_terms
from .network import NetworkConfig, ResidualMapNet, build_network

CHECKPOINT_NAME = "checkpoint.pt"
LOSS_LOG_NAME = "loss_log.json"


@dataclass
class TrainResult:
    checkpoint_path: Path
    log_path: Path
    history: list[dict]


def train(
    dataset_dir,
    cfg: NetworkConfig | None = None,
    epochs: int = 300,
    lr: float = 1e-3,
    decay: float = 1e-4,
    batch: int = 4,
    out_dir="run",
    seed: int = 0,
) -> TrainResult:
    """Train a residual network on one exported block dataset.

    ``cfg`` defaults to the standard architecture sized to the dataset's
    frame count. Training is not bit-deterministic across library versions;
    the seed is logged with the checkpoint.
    """
    dataset = BlockDataset(dataset_dir)
    if len(dataset) == 0:
        raise ValueError(f"{dataset_dir}: dataset has no blocks")
    if cfg is None:
        cfg = NetworkConfig(frames=dataset.n_frames)
    elif cfg.frames != dataset.n_frames:
        raise ValueError(
            f"config expects {cfg.frames} frames, dataset has {dataset.n_frames}"
        )

    torch.manual_seed(seed)
    model = build_network(cfg)
    model.train()
    loader = DataLoader(
        dataset,
        batch_size=batch,
        shuffle=True,
        generator=torch.Generator().manual_seed(seed),
    )
    optimizer = torch.optim.Adam(model.parameters(), lr=lr)
    scheduler = torch.optim.lr_scheduler.LambdaLR(
        optimizer, lambda step: 1.0 / (1.0 + decay * step)
    )

    history = []
    for epoch in range(epochs):
        sums = {"loss": 0.0, "param_term": 0.0, "signal_term": 0.0}
        n_samples = 0
        for sample in loader:
            optimizer.zero_grad()
            total, param_term, signal_term = loss_terms(
                model(sample["su_norm"]),
                sample["theta_r"],
                sample["theta_u"],
                sample["s"],
                dataset.vif_frames,
                dataset.physics_context(sample),
                cfg.lam,
            )
            total.backward()
            optimizer.step()
            scheduler.step()
            n = sample["su_norm"].shape[0]
            sums["loss"] += total.item() * n
            sums["param_term"] += param_term.item() * n
            sums["signal_term"] += signal_term.item() * n
            n_samples += n
        history.append(
            {
                "epoch": epoch,
                "lr": optimizer.param_groups[0]["lr"],
                **{key: value / n_samples for key, value in sums.items()},
            }
        )

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    checkpoint_path = out_dir / CHECKPOINT_NAME
    torch.save(
        {
            "state_dict": model.state_dict(),
            "config": asdict(cfg),
            "train": {
                "dataset": str(dataset_dir),
                "epochs": epochs,
                "lr": lr,
                "decay": decay,
                "batch": batch,
                "seed": seed,
            },
            "signal_norm": {"min": dataset.signal_lo, "max": dataset.signal_hi},
        },
        checkpoint_path,
    )
    log_path = out_dir / LOSS_LOG_NAME
    with open(log_path, "w") as fh:
        json.dump(history, fh, indent=1)
    return TrainResult(checkpoint_path=checkpoint_path, log_path=log_path, history=history)


def load_checkpoint(path) -> tuple[ResidualMapNet, NetworkConfig, dict]:
    """Rebuild the model in eval mode; returns ``(model, config, metadata)``."""
    payload = torch.load(path, map_location="cpu", weights_only=True)
    cfg = NetworkConfig(**payload["config"])
    model = build_network(cfg)
    model.load_state_dict(payload["state_dict"])
    model.eval()
    meta = {k: v for k, v in payload.items() if k != "state_dict"}
    return model, cfg, meta
