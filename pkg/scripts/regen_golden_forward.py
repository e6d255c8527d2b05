#!/usr/bin/env python3
"""Regenerate the pinned forward-model output under tests/data/.

Run this only when the forward physics changes on purpose; the regression
test compares freshly computed k-space against the stored container.
"""

from pathlib import Path

from dcepk import container
from dcepk.phantom import PhantomSpec, make_phantom, synthesize_acquisition
from dcepk.sampling import MaskSpec, golden_angle_mask

SEED = 11
SPEC = PhantomSpec(dims=(8, 8, 8), nt=4, seed=SEED)
MASK = MaskSpec(nkx=8, nky=8, nt=4, accel=2.0, seed=SEED)
NOISE_SIGMA = 0.01


def main() -> None:
    pk, vif, ctx = make_phantom(SPEC)
    mask = golden_angle_mask(MASK)
    k = synthesize_acquisition(pk, vif, ctx, mask, noise_sigma=NOISE_SIGMA, seed=SEED)
    out = Path(__file__).resolve().parent.parent / "tests" / "data" / "golden_kspace.ctr"
    out.parent.mkdir(parents=True, exist_ok=True)
    container.save_kspace(
        out, k, provenance={"seed": SEED, "spec": {"command": "regen_golden_forward"}}
    )
    print(f"wrote {out}")


if __name__ == "__main__":
    main()
