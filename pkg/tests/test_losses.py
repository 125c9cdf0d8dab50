import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from camtraj import autograd as ag
from camtraj.analysis import hf_energy
from camtraj.autograd import Tensor, finite_diff_check
from camtraj.haar import dwt_multi
from camtraj.losses import (
    TooShort,
    WavRegConfig,
    ZeroBaseGradient,
    accreg,
    angle_diagnostic,
    grad_ratio,
    jerk,
    lowpass_reg,
    total_loss,
    velreg,
    wavreg,
)

from gradcases import LOSSES

seeds = st.integers(0, 2**32 - 1)


def val(t):
    return float(t.data)


# config ---------------------------------------------------------------------


def test_default_weights():
    assert WavRegConfig().weights == (2.0, 1.0, 0.5, 0.25)
    assert WavRegConfig().beta == 0.1


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(levels=2),  # wrong number of detail weights
        dict(weight_details=(1.0, 1.0, 0.25)),  # not strictly decreasing
        dict(weight_approx=0.5),  # approx below the coarsest detail
        dict(weight_details=(1.0, 0.5, -0.1)),
        dict(beta=-0.1),
        dict(levels=0, weight_details=()),
    ],
)
def test_config_rejects(kwargs):
    with pytest.raises(ValueError):
        WavRegConfig(**kwargs)


def test_config_allows_zero_detail_weights():
    cfg = WavRegConfig(levels=2, weight_approx=1.0, weight_details=(0.0, 0.0))
    assert cfg.weights == (1.0, 0.0, 0.0)


# wavreg ---------------------------------------------------------------------


def test_wavreg_hand_example():
    cfg = WavRegConfig(levels=1, weight_approx=2.0, weight_details=(1.0,))
    res = wavreg(np.ones((2, 1)), np.zeros((2, 1)), cfg)
    assert val(res.value) == pytest.approx(2 * math.sqrt(2), abs=1e-12)
    assert np.allclose(res.per_band, [2 * math.sqrt(2), 0.0])


def test_wavreg_matches_band_sum_oracle(rng):
    cfg = WavRegConfig()
    x, y = rng.standard_normal((13, 12)), rng.standard_normal((13, 12))
    px, py = dwt_multi(x, 3), dwt_multi(y, 3)
    ref = sum(w * np.abs(a - b).sum() for w, a, b in zip(cfg.weights, px.bands(), py.bands()))
    res = wavreg(x, y, cfg)
    assert val(res.value) == pytest.approx(ref, rel=1e-12)
    assert res.per_band.sum() == pytest.approx(val(res.value), rel=1e-12)


def test_approximation_only_weights(rng):
    cfg = WavRegConfig(levels=3, weight_approx=1.0, weight_details=(0.0, 0.0, 0.0))
    x, y = rng.standard_normal((16, 4)), rng.standard_normal((16, 4))
    ref = np.abs(dwt_multi(x, 3).approx - dwt_multi(y, 3).approx).sum()
    assert val(wavreg(x, y, cfg).value) == pytest.approx(ref, rel=1e-12)


def test_wavreg_batched_is_sum_of_items(rng):
    cfg = WavRegConfig()
    x, y = rng.standard_normal((5, 13, 12)), rng.standard_normal((5, 13, 12))
    total = sum(val(wavreg(a, b, cfg).value) for a, b in zip(x, y))
    assert val(wavreg(x, y, cfg).value) == pytest.approx(total, rel=1e-12)


def test_wavreg_shape_and_length_errors():
    with pytest.raises(ag.ShapeMismatch):
        wavreg(np.zeros((4, 2)), np.zeros((4, 3)), WavRegConfig())
    with pytest.raises(TooShort):
        wavreg(np.zeros((1, 2)), np.zeros((1, 2)), WavRegConfig())


@given(seeds)
def test_wavreg_metric_properties(seed):
    rng = np.random.default_rng(seed)
    cfg = WavRegConfig()
    x, y, z = (rng.standard_normal((13, 3)) for _ in range(3))
    w = lambda a, b: val(wavreg(a, b, cfg).value)
    assert w(x, x) == 0.0
    assert w(x, y) == pytest.approx(w(y, x), rel=1e-12) and w(x, y) > 0
    assert w(x, z) <= w(x, y) + w(y, z) + 1e-9
    alpha = rng.uniform(-3, 3)
    assert w(alpha * x, alpha * y) == pytest.approx(abs(alpha) * w(x, y), rel=1e-10)


def test_total_loss():
    assert total_loss(1.0, 2.0, 0.1) == pytest.approx(1.2)
    assert total_loss(1.0, 2.0, 0.0) == 1.0


# smoothness baselines -------------------------------------------------------


def test_velreg_hand_example():
    assert val(velreg(np.array([[0.0], [1.0], [3.0]]))) == pytest.approx(5.0)


def test_difference_penalties_vanish_on_polynomials():
    t = np.arange(8.0)[:, None]
    assert val(velreg(np.ones((8, 2)))) == 0.0
    assert val(accreg(2 * t + 1)) == pytest.approx(0.0, abs=1e-20)
    assert val(jerk(t**2)) == pytest.approx(0.0, abs=1e-20)


@pytest.mark.parametrize("fn,T", [(velreg, 1), (accreg, 2), (jerk, 3)])
def test_difference_penalties_too_short(fn, T):
    with pytest.raises(TooShort):
        fn(np.zeros((T, 2)))


def test_lowpass_reg_matches_hf_energy(rng):
    x = rng.standard_normal((13, 12))
    for cutoff in (0.0, 0.3, 0.5, 0.9):
        assert val(lowpass_reg(x, cutoff)) == pytest.approx(hf_energy(x, cutoff), rel=1e-10)


def test_lowpass_reg_nyquist_tone_and_offsets(rng):
    tone = np.array([1.0, -1.0] * 8)[:, None]
    assert val(lowpass_reg(tone, 0.5)) == pytest.approx(16.0)
    x = rng.standard_normal((16, 3))
    assert val(lowpass_reg(x + 5.0)) == pytest.approx(val(lowpass_reg(x)), rel=1e-10)
    assert val(lowpass_reg(np.full((16, 2), 3.0))) == pytest.approx(0.0, abs=1e-20)


@pytest.mark.parametrize("name", sorted(LOSSES))
def test_loss_gradients(name):
    for i in range(5):
        f, x = LOSSES[name](np.random.default_rng([i, 17]))
        assert finite_diff_check(f, Tensor(x)) < 1e-5


# gradient diagnostics -------------------------------------------------------


def test_grad_ratio_examples():
    g = np.array([3.0, 4.0])
    assert grad_ratio(g, g, 0.3) == pytest.approx(0.3)
    assert grad_ratio(g, g, 0.0) == 0.0
    with pytest.raises(ZeroBaseGradient):
        grad_ratio(np.zeros(2), g, 0.1)


def test_angle_diagnostic_hand_example():
    rep = angle_diagnostic(np.array([1.0, 0.0]), np.array([0.0, 1.0]), 0.5)
    assert rep.ratio == pytest.approx(0.5)
    assert rep.sin_phi == pytest.approx(0.5 / math.sqrt(1.25))
    assert rep.bound == pytest.approx(1.0) and rep.bounded


def test_angle_diagnostic_collinear_and_unbounded():
    g = np.array([1.0, 2.0, 3.0])
    assert angle_diagnostic(g, 2 * g, 0.1).sin_phi == pytest.approx(0.0, abs=1e-15)
    rep = angle_diagnostic(g, np.array([0.0, 0.0, 10.0]), 1.0)
    assert rep.ratio >= 1 and not rep.bounded and math.isfinite(rep.sin_phi)


@given(seeds)
def test_angle_bound_holds(seed):
    rng = np.random.default_rng(seed)
    gd, gw = rng.standard_normal(20), rng.standard_normal(20)
    beta = rng.uniform(0, 0.99) * np.linalg.norm(gd) / np.linalg.norm(gw)
    rep = angle_diagnostic(gd, gw, beta)
    assert rep.ratio < 1
    assert rep.sin_phi <= rep.bound + 1e-12


@given(seeds, st.floats(1e-3, 10))
def test_grad_ratio_linear_in_beta(seed, beta):
    rng = np.random.default_rng(seed)
    gd, gw = rng.standard_normal(30), rng.standard_normal(30)
    r1, r2 = grad_ratio(gd, gw, beta), grad_ratio(gd, gw, 2 * beta)
    assert abs(r2 - 2 * r1) <= 2 * np.spacing(r2)
