import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dcepk import InvalidInputError, SamplingMask
from dcepk.sampling import (
    GOLDEN_ANGLE_DEG,
    MaskSpec,
    acceleration_of,
    golden_angle_mask,
)


def test_golden_angle_constant():
    assert GOLDEN_ANGLE_DEG == pytest.approx(111.246, abs=1e-3)


def test_spec_validation():
    with pytest.raises(InvalidInputError):
        MaskSpec(nkx=4, nky=64, nt=5, accel=4.0)
    with pytest.raises(InvalidInputError):
        MaskSpec(nkx=64, nky=64, nt=0, accel=4.0)
    with pytest.raises(InvalidInputError):
        MaskSpec(nkx=64, nky=64, nt=5, accel=0.9)


def test_accel_one_gives_full_sampling():
    mask = golden_angle_mask(MaskSpec(nkx=16, nky=12, nt=4, accel=1.0, seed=3))
    assert np.all(mask.pattern == 1)


def test_reference_spec_densities():
    mask = golden_angle_mask(MaskSpec(nkx=64, nky=64, nt=21, accel=10.0, seed=7))
    dens = mask.pattern.mean(axis=(0, 1))
    assert dens[0] == 1.0
    assert np.all(dens[1:] >= 0.09) and np.all(dens[1:] <= 0.11)


def test_deterministic_for_fixed_seed():
    a = golden_angle_mask(MaskSpec(nkx=48, nky=40, nt=8, accel=6.0, seed=11))
    b = golden_angle_mask(MaskSpec(nkx=48, nky=40, nt=8, accel=6.0, seed=11))
    np.testing.assert_array_equal(a.pattern, b.pattern)


def test_seed_changes_pattern():
    a = golden_angle_mask(MaskSpec(nkx=48, nky=40, nt=8, accel=6.0, seed=11))
    b = golden_angle_mask(MaskSpec(nkx=48, nky=40, nt=8, accel=6.0, seed=12))
    assert np.any(a.pattern != b.pattern)


def test_center_sampled_in_every_frame():
    mask = golden_angle_mask(MaskSpec(nkx=50, nky=38, nt=12, accel=8.0, seed=2))
    assert np.all(mask.pattern[25, 19, :] == 1)


def test_frames_differ_from_each_other():
    mask = golden_angle_mask(MaskSpec(nkx=64, nky=64, nt=6, accel=10.0, seed=0))
    for t in range(2, 6):
        assert np.any(mask.pattern[:, :, t] != mask.pattern[:, :, 1])


def test_infeasible_density_raises():
    with pytest.raises(InvalidInputError):
        golden_angle_mask(MaskSpec(nkx=8, nky=8, nt=3, accel=60.0, seed=0))


@given(
    seed=st.integers(0, 2**32 - 1),
    accel=st.sampled_from([2.0, 4.0, 8.0, 10.0]),
)
def test_density_tolerance_property(seed, accel):
    spec = MaskSpec(nkx=64, nky=48, nt=4, accel=accel, seed=seed)
    dens = golden_angle_mask(spec).pattern.mean(axis=(0, 1))
    target = 1.0 / accel
    assert np.all(dens[1:] >= 0.9 * target - 1e-12)
    assert np.all(dens[1:] <= 1.1 * target + 1e-12)


def test_acceleration_of_all_ones():
    mask = SamplingMask(pattern=np.ones((16, 16, 3), dtype=np.uint8), accel_target=1.0)
    per, overall = acceleration_of(mask)
    np.testing.assert_array_equal(per, 1.0)
    assert overall == 1.0


def test_acceleration_of_checkerboard():
    pattern = np.zeros((16, 16, 2), dtype=np.uint8)
    pattern[::2, ::2] = 1
    pattern[1::2, 1::2] = 1
    mask = SamplingMask(pattern=pattern, accel_target=2.0)
    per, overall = acceleration_of(mask)
    np.testing.assert_array_equal(per, 2.0)
    assert overall == 2.0


def test_acceleration_of_generated_mask():
    mask = golden_angle_mask(MaskSpec(nkx=64, nky=64, nt=21, accel=10.0, seed=5))
    per, overall = acceleration_of(mask)
    assert per[0] == 1.0
    assert 8.5 <= overall <= 10.5


def test_acceleration_of_empty_frame_raises():
    pattern = np.ones((16, 16, 2), dtype=np.uint8)
    pattern[:, :, 1] = 0
    mask = SamplingMask(pattern=pattern, accel_target=1.0)
    with pytest.raises(InvalidInputError):
        acceleration_of(mask)
