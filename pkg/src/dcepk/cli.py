"""Command-line front end chaining the library stages into full pipelines.

Every subcommand reads and writes the package's container files, so a whole
experiment (phantom, sampling mask, forward signal, noisy undersampling,
zero-filled or direct reconstruction, fitting, metrics, dataset export) can
be scripted without touching Python. Flags may also be given in a JSON
config file via ``--config``; explicit flags win.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import blocks, container
from .errors import DcepkError, InvalidInputError
from .forward import (
    forward_model,
    image_forward,
    spgr_inverse,
    undersample,
    zero_fill_recon,
)
from .metrics import ccc, psnr, ssim
from .patlak import fit_patlak_lls
from .phantom import PhantomSpec, add_acquisition_noise, make_phantom
from .recon import ReconOptions, reconstruct_direct
from .sampling import MaskSpec, acceleration_of, golden_angle_mask

__all__ = ["main"]


def _ints(value, n: int, what: str) -> tuple[int, ...]:
    """Parse '32,32,8' (or a JSON list from --config) into an int tuple."""
    if isinstance(value, str):
        parts = [p for p in value.replace("x", ",").split(",") if p.strip()]
    elif isinstance(value, (list, tuple)):
        parts = value
    else:
        raise InvalidInputError(f"{what} must be {n} comma-separated integers")
    try:
        out = tuple(int(p) for p in parts)
    except (TypeError, ValueError):
        raise InvalidInputError(f"{what} must be {n} comma-separated integers") from None
    if len(out) != n:
        raise InvalidInputError(f"{what} needs exactly {n} values, got {len(out)}")
    return out


def _fill(args, **defaults) -> None:
    for dest, value in defaults.items():
        if getattr(args, dest) is None:
            setattr(args, dest, value)


def _require(args, *dests) -> None:
    missing = [d for d in dests if getattr(args, d) is None]
    if missing:
        flags = ", ".join("--" + d.replace("_", "-") for d in missing)
        raise InvalidInputError(f"missing required option(s): {flags}")


def _apply_config(args) -> None:
    if getattr(args, "config", None) is None:
        return
    with open(args.config) as fh:
        cfg = json.load(fh)
    if not isinstance(cfg, dict):
        raise InvalidInputError("--config must hold a JSON object of flag values")
    for key, value in cfg.items():
        dest = key.replace("-", "_")
        if dest == "config" or not hasattr(args, dest):
            continue
        if getattr(args, dest) is None:
            setattr(args, dest, value)


def _prov(command: str, seed=None, **spec) -> dict:
    return {"seed": None if seed is None else int(seed), "spec": {"command": command, **spec}}


def cmd_phantom(args) -> int:
    _fill(args, dims="32,32,8", nt=21, seed=0)
    _require(args, "out")
    dims = _ints(args.dims, 3, "dims")
    spec = PhantomSpec(dims=dims, nt=int(args.nt), seed=int(args.seed))
    pk, vif, ctx = make_phantom(spec)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    prov = _prov("phantom", seed=spec.seed, dims=list(dims), nt=spec.nt)
    container.save_pk_maps(out / "pk.ctr", pk, provenance=prov)
    container.save_vif(out / "vif.ctr", vif, provenance=prov)
    container.save_context(out / "ctx.ctr", ctx, provenance=prov)
    print(f"wrote pk.ctr, vif.ctr, ctx.ctr to {out}")
    return 0


def cmd_mask(args) -> int:
    _fill(args, dims="64,64", nt=21, accel=10.0, seed=0)
    _require(args, "out")
    nkx, nky = _ints(args.dims, 2, "dims")
    spec = MaskSpec(
        nkx=nkx, nky=nky, nt=int(args.nt), accel=float(args.accel), seed=int(args.seed)
    )
    mask = golden_angle_mask(spec)
    prov = _prov("mask", seed=spec.seed, dims=[nkx, nky], nt=spec.nt, accel=spec.accel)
    container.save_mask(args.out, mask, provenance=prov)
    _, overall = acceleration_of(mask)
    print(f"wrote {args.out} (target R={spec.accel:g}, realized R={overall:.2f})")
    return 0


def cmd_forward(args) -> int:
    _require(args, "pk", "vif", "ctx", "out")
    pk = container.load_pk_maps(args.pk)
    vif = container.load_vif(args.vif)
    ctx = container.load_context(args.ctx)
    if args.mask is not None:
        mask = container.load_mask(args.mask)
        k = forward_model(pk, vif, ctx, mask)
        container.save_kspace(args.out, k, provenance=_prov("forward", masked=True))
        print(f"wrote undersampled k-space to {args.out}")
    else:
        series = image_forward(pk, vif, ctx)
        container.save_series(args.out, series, provenance=_prov("forward", masked=False))
        print(f"wrote signal series to {args.out}")
    return 0


def cmd_undersample(args) -> int:
    _fill(args, noise_sigma=0.0, seed=0)
    _require(args, "image", "mask", "out")
    img = container.load_series(args.image)
    mask = container.load_mask(args.mask)
    k = undersample(img, mask)
    k = add_acquisition_noise(k, float(args.noise_sigma), int(args.seed))
    prov = _prov("undersample", seed=args.seed, noise_sigma=float(args.noise_sigma))
    container.save_kspace(args.out, k, provenance=prov)
    print(f"wrote {args.out}")
    return 0


def cmd_zerofill(args) -> int:
    _require(args, "kspace", "out")
    k = container.load_kspace(args.kspace)
    img = zero_fill_recon(k)
    container.save_series(args.out, img, provenance=_prov("zerofill"))
    print(f"wrote zero-filled series to {args.out}")
    return 0


def cmd_invert(args) -> int:
    _require(args, "image", "ctx", "out")
    img = container.load_series(args.image)
    ctx = container.load_context(args.ctx)
    report: dict = {}
    conc = spgr_inverse(img, ctx, report=report)
    container.save_series(args.out, conc, provenance=_prov("invert"))
    note = ""
    if report["n_nonphysical"]:
        note = f" ({report['n_nonphysical']} nonphysical voxel-frames zeroed)"
    print(f"wrote concentration series to {args.out}{note}")
    return 0


def cmd_fit(args) -> int:
    _require(args, "conc", "vif", "out")
    conc = container.load_series(args.conc)
    vif = container.load_vif(args.vif)
    pk = fit_patlak_lls(conc, vif)
    container.save_pk_maps(args.out, pk, provenance=_prov("fit"))
    print(f"wrote fitted maps to {args.out}")
    return 0


def cmd_recon_direct(args) -> int:
    _fill(args, max_iters=200, tol=1e-7)
    _require(args, "kspace", "mask", "vif", "ctx", "out")
    mask = container.load_mask(args.mask)
    k = container.load_kspace(args.kspace, mask=mask)
    vif = container.load_vif(args.vif)
    ctx = container.load_context(args.ctx)
    opts = ReconOptions(max_iters=int(args.max_iters), tol=float(args.tol))
    pk, log = reconstruct_direct(k, mask, vif, ctx, opts)
    prov = _prov("recon-direct", max_iters=opts.max_iters, tol=opts.tol)
    container.save_pk_maps(args.out, pk, provenance=prov)
    if args.log is not None:
        Path(args.log).write_text(log.to_jsonl() + "\n")
    status = "converged" if log.converged else ("stalled" if log.stalled else "max-iters")
    print(
        f"wrote {args.out}: {len(log.iterations) - 1} iterations, "
        f"objective {log.objectives[-1]:.6g}, {status}"
    )
    return 0


def _metric_pairs(ref, test, header):
    """Split parameter-map containers into per-channel comparisons."""
    if header.get("name") == "pk_maps" and ref.ndim == 4 and ref.shape[3] == 2:
        return [("ktrans", ref[..., 0], test[..., 0]), ("vp", ref[..., 1], test[..., 1])]
    return [("", ref, test)]


def _one_metric(name, x, y, roi):
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if roi is not None and roi.ndim == 3 and x.ndim == 4:
        roi = np.broadcast_to(roi[..., None], x.shape)
    if name == "ccc":
        value = ccc(x, y, roi=roi)
        used = x.size if roi is None else int(np.count_nonzero(roi))
    elif name == "ssim":
        if roi is not None:
            raise InvalidInputError("ssim has no roi support; run it without --roi")
        data_range = float(x.max() - x.min())
        value = ssim(x, y, data_range)
        used = x.size
    elif name == "psnr":
        if roi is None:
            sel_x, sel_y, used = x, y, x.size
        else:
            if roi.shape != x.shape:
                raise InvalidInputError("roi dims do not match the compared arrays")
            keep = roi != 0
            sel_x, sel_y, used = x[keep], y[keep], int(np.count_nonzero(keep))
        data_range = float(sel_x.max() - sel_x.min())
        value = psnr(sel_x, sel_y, data_range)
    else:
        raise InvalidInputError(f"unknown metric {name!r} (choose from ccc, ssim, psnr)")
    return float(value), int(used)


def cmd_metrics(args) -> int:
    _fill(args, which="ccc,ssim,psnr")
    _require(args, "ref", "test")
    ref, header = container.load(args.ref)
    test, test_header = container.load(args.test)
    if list(ref.shape) != list(test.shape):
        raise InvalidInputError(
            f"ref dims {ref.shape} do not match test dims {test.shape}"
        )
    roi = None
    if args.roi is not None:
        roi, _ = container.load(args.roi)
        roi = np.asarray(roi, dtype=np.float64)
    names = [w.strip() for w in str(args.which).split(",") if w.strip()]
    results = []
    for name in names:
        for suffix, x, y in _metric_pairs(ref, test, header):
            value, used = _one_metric(name, x, y, roi)
            label = f"{name}_{suffix}" if suffix else name
            results.append({"metric": label, "value": value, "roi_voxels": used})
    for entry in results:
        print(f"{entry['metric']}: {entry['value']:.6g} (roi_voxels={entry['roi_voxels']})")
    if args.json_out is not None:
        with open(args.json_out, "w") as fh:
            json.dump(results, fh, indent=1)
    return 0


def cmd_export_blocks(args) -> int:
    _require(args, "su", "s_ref", "theta_u", "theta_t", "vif", "ctx", "block", "out_dir")
    su = container.load_series(args.su)
    s_ref = container.load_series(args.s_ref)
    theta_u = container.load_pk_maps(args.theta_u)
    theta_t = container.load_pk_maps(args.theta_t)
    vif = container.load_vif(args.vif)
    ctx = container.load_context(args.ctx)
    block = _ints(args.block, 3, "block")
    manifest = blocks.export_training_blocks(
        su, s_ref, theta_u, theta_t, vif, ctx, block, args.out_dir
    )
    print(f"wrote {manifest['n_blocks']} blocks to {args.out_dir}")
    return 0


def _build_parser() -> argparse.ArgumentParser:
    shared = argparse.ArgumentParser(add_help=False)
    shared.add_argument("--config", help="JSON file of flag values; explicit flags override")

    parser = argparse.ArgumentParser(
        prog="dcepk",
        description="Pharmacokinetic forward modeling, undersampling, and reconstruction pipelines.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("phantom", parents=[shared], help="synthesize ground-truth containers")
    p.add_argument("--dims", help="volume dims, e.g. 32,32,8")
    p.add_argument("--nt", type=int, help="number of dynamic frames")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="output directory for pk.ctr, vif.ctr, ctx.ctr")
    p.set_defaults(func=cmd_phantom)

    p = sub.add_parser("mask", parents=[shared], help="golden-angle sampling mask")
    p.add_argument("--dims", help="k-space grid, e.g. 64,64")
    p.add_argument("--nt", type=int)
    p.add_argument("--accel", type=float, help="undersampling factor R")
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.set_defaults(func=cmd_mask)

    p = sub.add_parser(
        "forward", parents=[shared], help="maps to signal series, or to k-space with --mask"
    )
    p.add_argument("--pk")
    p.add_argument("--vif")
    p.add_argument("--ctx")
    p.add_argument("--mask")
    p.add_argument("--out")
    p.set_defaults(func=cmd_forward)

    p = sub.add_parser("undersample", parents=[shared], help="mask an image series in k-space")
    p.add_argument("--image")
    p.add_argument("--mask")
    p.add_argument("--noise-sigma", type=float, help="noise level relative to the DC magnitude")
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.set_defaults(func=cmd_undersample)

    p = sub.add_parser("zerofill", parents=[shared], help="inverse transform of masked k-space")
    p.add_argument("--kspace")
    p.add_argument("--out")
    p.set_defaults(func=cmd_zerofill)

    p = sub.add_parser("invert", parents=[shared], help="signal series to concentration series")
    p.add_argument("--image")
    p.add_argument("--ctx")
    p.add_argument("--out")
    p.set_defaults(func=cmd_invert)

    p = sub.add_parser("fit", parents=[shared], help="closed-form least-squares kinetic fit")
    p.add_argument("--conc")
    p.add_argument("--vif")
    p.add_argument("--out")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser(
        "recon-direct", parents=[shared], help="iterative maps-from-k-space reconstruction"
    )
    p.add_argument("--kspace")
    p.add_argument("--mask")
    p.add_argument("--vif")
    p.add_argument("--ctx")
    p.add_argument("--max-iters", type=int)
    p.add_argument("--tol", type=float)
    p.add_argument("--out")
    p.add_argument("--log", help="JSONL objective trace")
    p.set_defaults(func=cmd_recon_direct)

    p = sub.add_parser("metrics", parents=[shared], help="compare two containers")
    p.add_argument("--ref")
    p.add_argument("--test")
    p.add_argument("--which", help="comma list from ccc,ssim,psnr")
    p.add_argument("--roi", help="container with a nonzero-inside region volume")
    p.add_argument("--json-out")
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser(
        "export-blocks", parents=[shared], help="cut a training dataset of 3D blocks"
    )
    p.add_argument("--su", help="corrupted (zero-filled) signal series")
    p.add_argument("--s-ref", help="fully sampled reference signal series")
    p.add_argument("--theta-u", help="maps fitted from the corrupted series")
    p.add_argument("--theta-t", help="target maps")
    p.add_argument("--vif")
    p.add_argument("--ctx")
    p.add_argument("--block", help="block dims, e.g. 52,52,33")
    p.add_argument("--out-dir")
    p.set_defaults(func=cmd_export_blocks)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        _apply_config(args)
        return args.func(args)
    except (DcepkError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
