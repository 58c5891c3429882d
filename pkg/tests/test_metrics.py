import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from helpers import ssim_naive
from relightkit.errors import DomainError, ParameterError, StructuralError
from relightkit.imagecore import ColorImage, ColorSpace
from relightkit.lighting import ShLighting
from relightkit.metrics import (
    dssim,
    evaluate,
    l_border,
    l_gradient,
    l_ratio,
    l_wratio,
    mse,
    si_mse,
    ssim,
)
from relightkit.relight import RatioImage


def _color(rng, shape=(16, 16)):
    return ColorImage(ColorSpace.RGB, rng.uniform(0, 1, size=shape + (3,)))


def test_l_ratio_basics(rng):
    r = RatioImage(rng.uniform(0.5, 2.0, size=(8, 8)))
    assert l_ratio(r, r) == 0.0
    tens = np.full((8, 8), 10.0)
    ones = np.ones((8, 8))
    assert l_ratio(tens, ones) == pytest.approx(1.0)
    assert l_ratio(ones, tens) == pytest.approx(1.0)


def test_l_ratio_reciprocal_symmetry(rng):
    r = rng.uniform(0.2, 5.0, size=(12, 12))
    ones = np.ones_like(r)
    assert abs(l_ratio(r, ones) - l_ratio(1.0 / r, ones)) < 1e-7
    # Inverting both arguments leaves the loss unchanged.
    t = rng.uniform(0.2, 5.0, size=(12, 12))
    assert abs(l_ratio(r, t) - l_ratio(1.0 / r, 1.0 / t)) < 1e-12


def test_l_ratio_rejects_nonpositive():
    with pytest.raises(DomainError):
        l_ratio(np.array([[1.0, -1.0]]), np.ones((1, 2)))
    with pytest.raises(StructuralError):
        l_ratio(np.ones((2, 2)), np.ones((3, 3)))


def test_l_border_zero_and_uniform(rng):
    p = rng.uniform(0.5, 2.0, size=(10, 10))
    t = rng.uniform(0.5, 2.0, size=(10, 10))
    assert l_border(p, t, np.zeros((10, 10))) == 0.0
    uniform = np.ones((10, 10))
    assert abs(l_border(p, t, uniform) - l_ratio(p, t)) < 1e-9


def test_l_border_matches_loop_oracle(rng):
    p = rng.uniform(0.5, 2.0, size=(9, 9))
    t = rng.uniform(0.5, 2.0, size=(9, 9))
    w = rng.uniform(0, 10, size=(9, 9)) * (rng.uniform(size=(9, 9)) > 0.4)
    total = 0.0
    nonzero = 0
    for i in range(9):
        for j in range(9):
            total += w[i, j] * abs(np.log10(p[i, j]) - np.log10(t[i, j]))
            if w[i, j] != 0:
                nonzero += 1
    assert l_border(p, t, w) == pytest.approx(total / nonzero)


def test_l_wratio_composes(rng):
    p = rng.uniform(0.5, 2.0, size=(8, 8))
    t = rng.uniform(0.5, 2.0, size=(8, 8))
    ws = rng.uniform(0, 10, size=(8, 8))
    wt = rng.uniform(0, 10, size=(8, 8))
    assert l_wratio(p, t, ws, wt) == pytest.approx(
        l_ratio(p, t) + l_border(p, t, ws) + l_border(p, t, wt))
    assert l_wratio(p, p, ws, wt) == 0.0
    zeros = np.zeros((8, 8))
    assert l_wratio(p, t, zeros, zeros) == pytest.approx(l_ratio(p, t))


def test_l_gradient_cases(rng):
    p = rng.uniform(0.5, 2.0, size=(10, 10))
    assert l_gradient(p, p) == 0.0
    shifted = p + 0.7
    assert l_gradient(p, shifted) == pytest.approx(0.0, abs=1e-12)
    t = rng.uniform(0.5, 2.0, size=(10, 10))
    gx_p = np.diff(p, axis=1, append=p[:, -1:])
    gy_p = np.diff(p, axis=0, append=p[-1:, :])
    gx_t = np.diff(t, axis=1, append=t[:, -1:])
    gy_t = np.diff(t, axis=0, append=t[-1:, :])
    oracle = np.abs(gx_p - gx_t).mean() + np.abs(gy_p - gy_t).mean()
    assert l_gradient(p, t) == pytest.approx(oracle)


def test_mse_cases(rng):
    a = _color(rng)
    assert mse(a, a) == 0.0
    shifted = ColorImage(ColorSpace.RGB, np.clip(a.channels * 0, 0, 1) + 0.5)
    base = ColorImage(ColorSpace.RGB, shifted.channels - 0.1)
    assert mse(base, shifted) == pytest.approx(0.01)
    b = _color(rng)
    oracle = float(np.mean((a.channels - b.channels) ** 2))
    assert mse(a, b) == pytest.approx(oracle)


@pytest.mark.parametrize("k", [0.5, 1.0, 3.0])
def test_si_mse_exact_scale_family(rng, k):
    a = rng.uniform(0.1, 1.0, size=(12, 12))
    error, scale = si_mse(a, k * a)
    assert error == pytest.approx(0.0, abs=1e-12)
    assert scale == pytest.approx(k, abs=1e-6)


def test_si_mse_identity_and_degenerate(rng):
    a = _color(rng)
    error, scale = si_mse(a, a)
    assert error == pytest.approx(0.0, abs=1e-15)
    assert scale == pytest.approx(1.0)
    with pytest.raises(DomainError):
        si_mse(np.zeros((4, 4)), np.ones((4, 4)))


def test_si_mse_matches_grid_search(rng):
    scales = np.arange(0.0, 10.0001, 1e-4)[:, None, None]
    for _ in range(20):
        a = rng.uniform(0.05, 1.0, size=(8, 8))
        k = rng.uniform(0.3, 5.0)
        b = np.clip(k * a + rng.normal(0, 0.05, size=(8, 8)), 0, 10)
        errors = np.mean((scales * a[None] - b[None]) ** 2, axis=(1, 2))
        grid_best = errors.min()
        ours, _ = si_mse(a, b)
        assert abs(ours - grid_best) < 1e-6
        assert ours <= grid_best + 1e-12


def test_si_mse_never_exceeds_mse(rng):
    for _ in range(10):
        a = rng.uniform(0.05, 1.0, size=(6, 6))
        b = rng.uniform(0.0, 1.0, size=(6, 6))
        assert si_mse(a, b).error <= mse(a, b) + 1e-12


def test_ssim_identity_and_symmetry(rng):
    a = rng.uniform(0, 1, size=(24, 24))
    b = rng.uniform(0, 1, size=(24, 24))
    assert ssim(a, a) == pytest.approx(1.0)
    assert dssim(a, a) == pytest.approx(0.0, abs=1e-12)
    assert abs(ssim(a, b) - ssim(b, a)) < 1e-9


def test_ssim_constant_patches_formula():
    a = np.zeros((24, 24))
    b = np.ones((24, 24))
    c1, c2 = 0.01 ** 2, 0.03 ** 2
    expected = (c1 * c2) / ((1.0 + c1) * c2)  # mu=0 vs mu=1, zero variance
    assert ssim(a, b) == pytest.approx(expected, rel=1e-9)
    assert dssim(a, b) == pytest.approx((1 - expected) / 2)
    assert 0.49 < dssim(a, b) <= 0.5


def test_ssim_matches_naive_window_oracle(rng):
    a = rng.uniform(0, 1, size=(20, 20))
    b = np.clip(a + rng.normal(0, 0.1, size=(20, 20)), 0, 1)
    assert ssim(a, b) == pytest.approx(ssim_naive(a, b), abs=1e-10)


def test_ssim_window_size_guard():
    with pytest.raises(ParameterError):
        ssim(np.ones((8, 8)), np.ones((8, 8)))


@given(st.integers(0, 2 ** 32 - 1))
@settings(max_examples=15, deadline=None)
def test_dssim_range_property(seed):
    r = np.random.default_rng(seed)
    a = r.uniform(0, 1, size=(16, 16))
    b = r.uniform(0, 1, size=(16, 16))
    value = dssim(a, b)
    assert 0.0 <= value <= 1.0


def test_evaluate_identical_images(rng):
    img = _color(rng)
    report = evaluate(img, img)
    assert report.mse == 0.0
    assert report.si_mse == pytest.approx(0.0, abs=1e-15)
    assert report.dssim == pytest.approx(0.0, abs=1e-12)
    assert report.pixel_count == 256
    d = report.to_dict()
    assert "l_ratio" not in d and "l_lighting" not in d


def test_evaluate_with_extras(rng):
    relit = _color(rng)
    target = _color(rng)
    pred = RatioImage(rng.uniform(0.5, 2.0, size=(16, 16)))
    true = RatioImage(rng.uniform(0.5, 2.0, size=(16, 16)))
    ws = rng.uniform(0, 10, size=(16, 16)) * (rng.uniform(size=(16, 16)) > 0.5)
    wt = rng.uniform(0, 10, size=(16, 16))
    la = ShLighting(rng.normal(size=9))
    lb = ShLighting(rng.normal(size=9))
    report = evaluate(relit, target, pred_ratio=pred, true_ratio=true,
                      source_weights=ws, target_weights=wt,
                      pred_lighting=la, true_lighting=lb)
    assert report.l_ratio == pytest.approx(l_ratio(pred, true))
    assert report.l_sborder == pytest.approx(l_border(pred, true, ws))
    assert report.l_tborder == pytest.approx(l_border(pred, true, wt))
    assert report.l_wratio == pytest.approx(l_wratio(pred, true, ws, wt))
    assert report.l_gradient == pytest.approx(l_gradient(pred, true))
    assert report.l_lighting >= 0.0
    assert report.weighted_count_source == int(np.count_nonzero(ws))
    assert report.weighted_count_target == 256


def test_evaluate_rgb_mode(rng):
    relit = _color(rng)
    target = _color(rng)
    lum = evaluate(relit, target, mode="luminance")
    rgb = evaluate(relit, target, mode="rgb")
    assert rgb.mse == pytest.approx(mse(relit, target))
    assert rgb.mse != lum.mse
    with pytest.raises(ParameterError):
        evaluate(relit, target, mode="lab")


def test_metric_nonnegativity(rng):
    a = _color(rng)
    b = _color(rng)
    report = evaluate(a, b)
    for value in report.to_dict().values():
        if isinstance(value, float):
            assert value >= 0.0
