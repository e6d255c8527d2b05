"""Training-block export: grid arithmetic, manifests, and the exact residual identity."""

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dcepk import blocks, container
from dcepk.errors import InvalidInputError
from dcepk.forward import image_forward, spgr_inverse, zero_fill_recon
from dcepk.patlak import fit_patlak_lls
from dcepk.phantom import PhantomSpec, make_phantom, synthesize_acquisition
from dcepk.sampling import MaskSpec, golden_angle_mask
from dcepk.types import DynamicSeries, PKMaps


@pytest.fixture(scope="module")
def world():
    spec = PhantomSpec(dims=(16, 16, 8), nt=6, seed=5)
    pk, vif, ctx = make_phantom(spec)
    s_ref = image_forward(pk, vif, ctx)
    mask = golden_angle_mask(MaskSpec(nkx=16, nky=16, nt=6, accel=3.0, seed=5))
    k = synthesize_acquisition(pk, vif, ctx, mask)
    su = zero_fill_recon(k)
    conc_u = spgr_inverse(su, ctx)
    theta_u = fit_patlak_lls(conc_u, vif)
    return dict(pk=pk, vif=vif, ctx=ctx, s_ref=s_ref, su=su, theta_u=theta_u)


def _export(world, tmp_path, block_dims):
    return blocks.export_training_blocks(
        world["su"],
        world["s_ref"],
        world["theta_u"],
        world["pk"],
        world["vif"],
        world["ctx"],
        block_dims,
        tmp_path / "dataset",
    )


def test_whole_volume_is_one_block(world, tmp_path):
    manifest = _export(world, tmp_path, (16, 16, 8))
    assert manifest["n_blocks"] == 1
    assert manifest["grid"] == [1, 1, 1]
    bdir = tmp_path / "dataset" / manifest["blocks"][0]["dir"]
    for fname in ("su.ctr", "s.ctr", "theta_u.ctr", "theta_r.ctr", "ctx.ctr"):
        assert (bdir / fname).is_file()


def test_count_matches_grid_formula(world, tmp_path):
    manifest = _export(world, tmp_path, (5, 6, 3))
    grid = (16 // 5, 16 // 6, 8 // 3)
    assert tuple(manifest["grid"]) == grid
    expected = grid[0] * grid[1] * grid[2] * manifest["augmentation_copies"]
    assert manifest["n_blocks"] == expected == len(manifest["blocks"])


def test_origins_tile_without_overlap(world, tmp_path):
    manifest = _export(world, tmp_path, (8, 8, 4))
    origins = {tuple(b["origin"]) for b in manifest["blocks"]}
    assert len(origins) == manifest["n_blocks"]
    for ox, oy, oz in origins:
        assert ox % 8 == 0 and oy % 8 == 0 and oz % 4 == 0


def test_paper_scale_grid():
    assert blocks.block_grid((256, 192, 42), (52, 52, 33)) == (4, 3, 1)


def test_block_exceeding_volume_raises(world, tmp_path):
    with pytest.raises(InvalidInputError):
        _export(world, tmp_path, (17, 4, 4))
    with pytest.raises(InvalidInputError):
        blocks.block_grid((16, 16, 8), (4, 4, 9))


def test_nonpositive_block_dim_raises():
    with pytest.raises(InvalidInputError):
        blocks.block_grid((16, 16, 8), (4, 0, 4))


def test_residual_identity_is_bitwise(world, tmp_path):
    manifest = _export(world, tmp_path, (8, 8, 4))
    theta_t_q = blocks.quantize_maps(world["pk"])
    for entry in manifest["blocks"]:
        bdir = tmp_path / "dataset" / entry["dir"]
        theta_u = container.load(bdir / "theta_u.ctr")[0]
        theta_r = container.load(bdir / "theta_r.ctr")[0]
        ox, oy, oz = entry["origin"]
        sl = (slice(ox, ox + 8), slice(oy, oy + 8), slice(oz, oz + 4))
        expected = np.stack(
            [theta_t_q.ktrans[sl], theta_t_q.vp[sl]], axis=-1
        ).astype(np.float32)
        assert np.array_equal(theta_u - theta_r, expected)


def test_block_contents_match_source(world, tmp_path):
    manifest = _export(world, tmp_path, (8, 8, 4))
    entry = manifest["blocks"][-1]
    bdir = tmp_path / "dataset" / entry["dir"]
    ox, oy, oz = entry["origin"]
    sl = (slice(ox, ox + 8), slice(oy, oy + 8), slice(oz, oz + 4))
    su = container.load_series(bdir / "su.ctr")
    assert np.array_equal(su.data, world["su"].data[sl].astype(np.float32))
    s = container.load_series(bdir / "s.ctr")
    assert np.array_equal(s.data, world["s_ref"].data[sl].astype(np.float32))
    ctx_b = container.load_context(bdir / "ctx.ctr")
    assert np.array_equal(ctx_b.t10, world["ctx"].t10[sl].astype(np.float32))
    assert ctx_b.tr == world["ctx"].tr


def test_manifest_round_trip(world, tmp_path):
    manifest = _export(world, tmp_path, (8, 8, 8))
    loaded = blocks.load_manifest(tmp_path / "dataset")
    assert loaded == manifest
    assert loaded["signal_norm"]["max"] == world["s_ref"].data.max()
    assert loaded["signal_norm"]["min"] == world["s_ref"].data.min()
    vif = container.load_vif(tmp_path / "dataset" / loaded["vif_file"])
    assert vif.times.size == world["vif"].times.size


def test_load_manifest_requires_file(tmp_path):
    with pytest.raises(InvalidInputError):
        blocks.load_manifest(tmp_path)


def test_concentration_series_rejected(world, tmp_path):
    conc = DynamicSeries(
        world["su"].data, world["su"].frame_times, kind="concentration"
    )
    with pytest.raises(InvalidInputError):
        blocks.export_training_blocks(
            conc,
            world["s_ref"],
            world["theta_u"],
            world["pk"],
            world["vif"],
            world["ctx"],
            (8, 8, 4),
            tmp_path / "dataset",
        )


def test_dims_mismatch_rejected(world, tmp_path):
    small = PKMaps(ktrans=np.zeros((8, 8, 8)), vp=np.zeros((8, 8, 8)))
    with pytest.raises(InvalidInputError):
        blocks.export_training_blocks(
            world["su"],
            world["s_ref"],
            small,
            world["pk"],
            world["vif"],
            world["ctx"],
            (8, 8, 4),
            tmp_path / "dataset",
        )


@given(
    a=st.floats(min_value=-127.0, max_value=127.0),
    b=st.floats(min_value=-127.0, max_value=127.0),
)
def test_quantized_float32_subtraction_is_exact(a, b):
    q = blocks.MAP_QUANTUM
    qa = np.round(a / q) * q
    qb = np.round(b / q) * q
    diff32 = np.float32(qa) - np.float32(qb)
    assert diff32 == np.float32(qa - qb)
    assert float(diff32) == qa - qb
