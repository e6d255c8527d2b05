import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles
from dcepk import (
    DegenerateFitError,
    DynamicSeries,
    InvalidInputError,
    PKMaps,
    VascularInputFunction,
)
from dcepk.forward import patlak_forward, vif_at_frames
from dcepk.patlak import GridSpec, fit_patlak_lls, fit_patlak_oracle

DIMS = (4, 3, 2)


def _vif():
    t = np.linspace(0.0, 10.0, 601)
    cp = 5.0 * t**2 * np.exp(-2.0 * (t - 1.0)) * (t > 0)
    cp += 1.0 * (1 - np.exp(-t)) * np.exp(-0.05 * t)
    return VascularInputFunction(times=t, cp=cp)


def _frame_times(nt=9):
    return np.arange(nt) * 73.0 / 60.0


def _series(pk, vif=None, ft=None):
    vif = vif or _vif()
    ft = _frame_times() if ft is None else ft
    return patlak_forward(pk, vif, ft)


class TestLLS:
    def test_noiseless_recovery(self, rng):
        pk = PKMaps(
            ktrans=rng.uniform(0.01, 0.2, DIMS), vp=rng.uniform(0.005, 0.1, DIMS)
        )
        got = fit_patlak_lls(_series(pk), _vif())
        np.testing.assert_allclose(got.ktrans, pk.ktrans, rtol=1e-10)
        np.testing.assert_allclose(got.vp, pk.vp, rtol=1e-10)

    def test_zero_curve_maps_to_zero_parameters(self):
        c = DynamicSeries(
            data=np.zeros(DIMS + (9,)),
            frame_times=_frame_times(),
            kind="concentration",
        )
        got = fit_patlak_lls(c, _vif())
        assert np.all(got.ktrans == 0.0)
        assert np.all(got.vp == 0.0)

    def test_negative_parameters_pass_through(self):
        pk = PKMaps(ktrans=np.full(DIMS, -0.05), vp=np.full(DIMS, -0.01))
        got = fit_patlak_lls(_series(pk), _vif())
        np.testing.assert_allclose(got.ktrans, -0.05, rtol=1e-10)
        np.testing.assert_allclose(got.vp, -0.01, rtol=1e-10)

    def test_objective_beats_perturbations(self, rng):
        pk = PKMaps(
            ktrans=rng.uniform(0.01, 0.2, (1, 1, 1)),
            vp=rng.uniform(0.005, 0.1, (1, 1, 1)),
        )
        c = _series(pk)
        noisy = DynamicSeries(
            data=c.data + rng.normal(0, 0.01, c.data.shape),
            frame_times=c.frame_times,
            kind="concentration",
        )
        fit = fit_patlak_lls(noisy, _vif())
        cp_f, cum_f = vif_at_frames(_vif(), c.frame_times)
        curve = noisy.data[0, 0, 0]
        base = oracles.patlak_objective(
            fit.ktrans[0, 0, 0], fit.vp[0, 0, 0], curve, cp_f, cum_f
        )
        for dk, dv in [(1e-3, 0), (-1e-3, 0), (0, 1e-3), (0, -1e-3), (1e-3, 1e-3)]:
            perturbed = oracles.patlak_objective(
                fit.ktrans[0, 0, 0] + dk, fit.vp[0, 0, 0] + dv, curve, cp_f, cum_f
            )
            assert base <= perturbed

    @given(scale_exp=st.integers(-6, 6))
    def test_scale_equivariance_exact_for_binary_scales(self, scale_exp):
        rng = np.random.default_rng(42)
        s = 2.0**scale_exp
        pk = PKMaps(
            ktrans=rng.uniform(0.01, 0.2, DIMS), vp=rng.uniform(0.005, 0.1, DIMS)
        )
        c = _series(pk)
        noisy = c.data + rng.normal(0, 0.01, c.data.shape)
        fit1 = fit_patlak_lls(
            DynamicSeries(data=noisy, frame_times=c.frame_times, kind="concentration"),
            _vif(),
        )
        fit2 = fit_patlak_lls(
            DynamicSeries(
                data=s * noisy, frame_times=c.frame_times, kind="concentration"
            ),
            _vif(),
        )
        np.testing.assert_array_equal(fit2.ktrans, s * fit1.ktrans)
        np.testing.assert_array_equal(fit2.vp, s * fit1.vp)

    @given(s=st.floats(0.1, 10.0))
    def test_scale_equivariance_general(self, s):
        rng = np.random.default_rng(3)
        pk = PKMaps(
            ktrans=rng.uniform(0.01, 0.2, DIMS), vp=rng.uniform(0.005, 0.1, DIMS)
        )
        c = _series(pk)
        fit1 = fit_patlak_lls(c, _vif())
        fit2 = fit_patlak_lls(
            DynamicSeries(
                data=s * c.data, frame_times=c.frame_times, kind="concentration"
            ),
            _vif(),
        )
        np.testing.assert_allclose(fit2.ktrans, s * fit1.ktrans, rtol=1e-11)
        np.testing.assert_allclose(fit2.vp, s * fit1.vp, rtol=1e-11)

    def test_degenerate_zero_cp_raises(self):
        vif = VascularInputFunction(times=[0.0, 1.0, 2.0, 3.0], cp=[0.0, 0.0, 0.0, 0.0])
        c = DynamicSeries(
            data=np.ones(DIMS + (3,)),
            frame_times=np.array([0.0, 1.0, 2.0]),
            kind="concentration",
        )
        with pytest.raises(DegenerateFitError, match="Cp"):
            fit_patlak_lls(c, vif)

    def test_collinear_design_raises(self):
        # two nearly identical frame times make Cp and its integral
        # proportional over the design, collapsing the normal matrix
        vif = VascularInputFunction(times=[0.0, 1.0, 2.0, 3.0], cp=[0.0, 1.0, 2.0, 3.0])
        c = DynamicSeries(
            data=np.ones(DIMS + (2,)) * 0.5,
            frame_times=np.array([2.0, 2.0000001]),
            kind="concentration",
        )
        with pytest.raises(DegenerateFitError, match="collinear"):
            fit_patlak_lls(c, vif)

    def test_needs_two_frames(self):
        c = DynamicSeries(
            data=np.ones(DIMS + (1,)),
            frame_times=np.array([1.0]),
            kind="concentration",
        )
        with pytest.raises(InvalidInputError):
            fit_patlak_lls(c, _vif())


class TestOracle:
    def test_grid_spec_validation(self):
        with pytest.raises(InvalidInputError):
            GridSpec(step=0.0)
        with pytest.raises(InvalidInputError):
            GridSpec(ktrans_lo=0.3, ktrans_hi=0.1)

    def test_oracle_never_beats_lls(self, rng):
        pk = PKMaps(
            ktrans=rng.uniform(0.05, 0.15, (2, 1, 1)),
            vp=rng.uniform(0.02, 0.08, (2, 1, 1)),
        )
        c = _series(pk)
        noisy = DynamicSeries(
            data=c.data + rng.normal(0, 0.01, c.data.shape),
            frame_times=c.frame_times,
            kind="concentration",
        )
        grid = GridSpec(ktrans_lo=0.0, ktrans_hi=0.3, vp_lo=0.0, vp_hi=0.15, step=2e-3)
        lls = fit_patlak_lls(noisy, _vif())
        orc = fit_patlak_oracle(noisy, _vif(), grid=grid)
        cp_f, cum_f = vif_at_frames(_vif(), c.frame_times)
        for v in [(0, 0, 0), (1, 0, 0)]:
            curve = noisy.data[v]
            o_lls = oracles.patlak_objective(
                lls.ktrans[v], lls.vp[v], curve, cp_f, cum_f
            )
            o_orc = oracles.patlak_objective(
                orc.ktrans[v], orc.vp[v], curve, cp_f, cum_f
            )
            assert o_orc >= o_lls - 1e-15

    def test_noisy_fit_matches_fine_grid_within_one_step(self, rng):
        pk = PKMaps(
            ktrans=np.full((1, 1, 1), 0.12), vp=np.full((1, 1, 1), 0.06)
        )
        c = _series(pk)
        noisy = DynamicSeries(
            data=c.data + rng.normal(0, 0.01, c.data.shape),
            frame_times=c.frame_times,
            kind="concentration",
        )
        step = 1e-4
        grid = GridSpec(ktrans_lo=0.0, ktrans_hi=0.5, vp_lo=0.0, vp_hi=0.2, step=step)
        lls = fit_patlak_lls(noisy, _vif())
        orc = fit_patlak_oracle(noisy, _vif(), grid=grid)
        cp_f, cum_f = vif_at_frames(_vif(), c.frame_times)
        curve = noisy.data[0, 0, 0]
        o_lls = oracles.patlak_objective(
            lls.ktrans[0, 0, 0], lls.vp[0, 0, 0], curve, cp_f, cum_f
        )
        o_orc = oracles.patlak_objective(
            orc.ktrans[0, 0, 0], orc.vp[0, 0, 0], curve, cp_f, cum_f
        )
        # quadratic objective: the grid argmin can exceed the continuous
        # minimum by at most the quadratic form evaluated one half step out
        a11 = cp_f @ cp_f
        a22 = cum_f @ cum_f
        a12 = abs(cp_f @ cum_f)
        bound = (step / 2) ** 2 * (a11 + a22 + 2 * a12)
        assert 0 <= o_orc - o_lls <= bound + 1e-12

    def test_oracle_returns_exact_grid_solution(self, rng):
        pk = PKMaps(ktrans=np.full((1, 1, 1), 0.1), vp=np.full((1, 1, 1), 0.05))
        c = _series(pk)
        grid = GridSpec(ktrans_lo=0.0, ktrans_hi=0.2, vp_lo=0.0, vp_hi=0.1, step=0.005)
        orc = fit_patlak_oracle(c, _vif(), grid=grid)
        assert orc.ktrans[0, 0, 0] == pytest.approx(0.1, abs=1e-12)
        assert orc.vp[0, 0, 0] == pytest.approx(0.05, abs=1e-12)

    def test_noiseless_argmin_within_one_step(self, rng):
        pk = PKMaps(ktrans=np.full((1, 1, 1), 0.1503), vp=np.full((1, 1, 1), 0.0791))
        c = _series(pk)
        grid = GridSpec(ktrans_lo=0.0, ktrans_hi=0.3, vp_lo=0.0, vp_hi=0.12, step=1e-3)
        orc = fit_patlak_oracle(c, _vif(), grid=grid)
        assert abs(orc.ktrans[0, 0, 0] - 0.1503) <= 1e-3
        assert abs(orc.vp[0, 0, 0] - 0.0791) <= 1e-3
