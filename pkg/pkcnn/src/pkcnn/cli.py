"""Command-line front end: train a correction network, apply a checkpoint."""

from __future__ import annotations

import argparse
import sys

from .data import BlockDataset
from .infer import infer_dataset, write_maps
from .network import NetworkConfig
from .train import train


def cmd_train(args) -> int:
    dataset = BlockDataset(args.dataset)
    cfg = NetworkConfig(
        frames=dataset.n_frames,
        filters=args.filters,
        local_depth=args.local_depth,
        fc_widths=tuple(int(w) for w in args.fc_widths.split(",")),
        lam=args.lam,
    )
    result = train(
        args.dataset,
        cfg,
        epochs=args.epochs,
        lr=args.lr,
        decay=args.decay,
        batch=args.batch,
        out_dir=args.out,
        seed=args.seed,
    )
    last = result.history[-1]
    print(
        f"wrote {result.checkpoint_path} after {args.epochs} epochs "
        f"(loss {last['loss']:.6g}, param {last['param_term']:.6g}, "
        f"signal {last['signal_term']:.6g})"
    )
    return 0


def cmd_infer(args) -> int:
    ktrans, vp = infer_dataset(args.checkpoint, args.dataset)
    write_maps(
        args.out, ktrans, vp,
        provenance={"seed": None, "spec": {"checkpoint": str(args.checkpoint)}},
    )
    print(f"wrote corrected maps to {args.out}")
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pkcnn", description="Residual correction network for kinetic maps."
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train on an exported block dataset")
    p.add_argument("--dataset", required=True)
    p.add_argument("--out", required=True, help="checkpoint / loss-log directory")
    p.add_argument("--epochs", type=int, default=300)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--decay", type=float, default=1e-4)
    p.add_argument("--batch", type=int, default=4)
    p.add_argument("--lam", type=float, default=0.5, help="loss trade-off in [0, 1]")
    p.add_argument("--filters", type=int, default=32)
    p.add_argument("--local-depth", type=int, default=4)
    p.add_argument("--fc-widths", default="128,64",
                   help="comma-separated voxelwise layer widths")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("infer", help="apply a checkpoint to a dataset's blocks")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--dataset", required=True)
    p.add_argument("--out", required=True, help="corrected parameter-map container")
    p.set_defaults(func=cmd_infer)
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
