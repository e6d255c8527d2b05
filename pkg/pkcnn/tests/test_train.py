"""Training loop: pinned defaults, logging, checkpointing, failure modes."""

import inspect
import json
import shutil

import pytest

from pkcnn.network import NetworkConfig
from pkcnn.train import load_checkpoint, train

from conftest import NT, smoke_config


def test_pinned_defaults():
    sig = inspect.signature(train)
    assert sig.parameters["epochs"].default == 300
    assert sig.parameters["lr"].default == 1e-3
    assert sig.parameters["decay"].default == 1e-4
    assert sig.parameters["batch"].default == 4


def test_empty_dataset_rejected(train_dataset_dir, tmp_path):
    empty = tmp_path / "empty_ds"
    shutil.copytree(train_dataset_dir, empty)
    manifest = json.loads((empty / "manifest.json").read_text())
    manifest["blocks"] = []
    manifest["n_blocks"] = 0
    (empty / "manifest.json").write_text(json.dumps(manifest))
    with pytest.raises(ValueError, match="no blocks"):
        train(empty, out_dir=tmp_path / "run")


def test_frame_count_mismatch_rejected(train_dataset_dir, tmp_path):
    cfg = NetworkConfig(frames=NT + 1, filters=4, local_depth=1, fc_widths=(8,))
    with pytest.raises(ValueError, match="frames"):
        train(train_dataset_dir, cfg, epochs=1, out_dir=tmp_path / "run")


def test_history_logs_both_terms_per_epoch(smoke_run):
    assert len(smoke_run.history) == 20
    for i, entry in enumerate(smoke_run.history):
        assert entry["epoch"] == i
        for key in ("loss", "param_term", "signal_term", "lr"):
            assert key in entry
            assert entry[key] == entry[key]  # not NaN
        assert entry["loss"] > 0.0
    log = json.loads(smoke_run.log_path.read_text())
    assert log == smoke_run.history


def test_learning_rate_decays_over_steps(smoke_run):
    rates = [entry["lr"] for entry in smoke_run.history]
    assert rates[0] < 1e-3
    assert all(b < a for a, b in zip(rates, rates[1:]))


def test_checkpoint_round_trips_config(smoke_run):
    model, cfg, meta = load_checkpoint(smoke_run.checkpoint_path)
    assert cfg == smoke_config()
    assert cfg.lam == 0.5
    assert not model.training
    assert meta["train"]["epochs"] == 20
    assert meta["train"]["batch"] == 1
    assert meta["signal_norm"]["max"] > meta["signal_norm"]["min"]


def test_lam_one_reduces_parameter_term(train_dataset_dir, tmp_path):
    cfg = NetworkConfig(frames=NT, filters=16, local_depth=2,
                        fc_widths=(64, 32), lam=1.0)
    result = train(train_dataset_dir, cfg, epochs=8, batch=2,
                   out_dir=tmp_path / "run", seed=0)
    first = result.history[0]["param_term"]
    last = result.history[-1]["param_term"]
    assert last < first


def test_lam_zero_reduces_signal_term(train_dataset_dir, tmp_path):
    cfg = NetworkConfig(frames=NT, filters=16, local_depth=2,
                        fc_widths=(64, 32), lam=0.0)
    result = train(train_dataset_dir, cfg, epochs=8, batch=2,
                   out_dir=tmp_path / "run", seed=0)
    first = result.history[0]["signal_term"]
    last = result.history[-1]["signal_term"]
    assert last < first
