import numpy as np
import pytest
from hypothesis import given, strategies as st

from revanneal.errors import FitError, InputError
from revanneal.fitting import (
    count_extrema, envelope_deviation, fit_exp_decay, fit_power_law, fit_saturating_exp, isotonic,
)

T = np.geomspace(2, 2000, 30)


def sat(f1, f2, f3, t=T):
    return f1 * (1 - f2 * np.exp(-f3 * t))


def test_saturating_exact_recovery():
    fit = fit_saturating_exp(np.column_stack([T, sat(0.8, 0.9, 0.01)]))
    np.testing.assert_allclose([fit.f1, fit.f2, fit.f3], [0.8, 0.9, 0.01], rtol=1e-6)
    assert fit.identifiable


def test_saturating_decaying_curve():
    # starts high and relaxes down: f2 negative
    fit = fit_saturating_exp(np.column_stack([T, sat(0.8, -0.24, 0.024)]))
    np.testing.assert_allclose([fit.f1, fit.f2, fit.f3], [0.8, -0.24, 0.024], rtol=1e-6)


def test_saturating_constant_data_is_unidentifiable():
    fit = fit_saturating_exp(np.column_stack([T, np.full(30, 0.4)]))
    assert fit.f1 == pytest.approx(0.4) and fit.f2 == 0.0
    assert not fit.identifiable
    assert fit.to_json()["f3"] is None


@given(st.floats(0.3, 1.0), st.floats(0.2, 0.95), st.floats(0.002, 0.2), st.randoms())
def test_saturating_order_invariance_and_monotone_residual(f1, f2, f3, rnd):
    pts = np.column_stack([T, sat(f1, f2, f3)])
    fit = fit_saturating_exp(pts)
    perm = list(range(len(pts)))
    rnd.shuffle(perm)
    fit2 = fit_saturating_exp(pts[perm])
    assert (fit.f1, fit.f2, fit.f3) == (fit2.f1, fit2.f2, fit2.f3)
    assert all(b <= a for a, b in zip(fit.history, fit.history[1:]))


def test_saturating_noise_recovery():
    rng = np.random.default_rng(7)
    p = sat(0.8, 0.9, 0.01)
    errs = []
    for _ in range(100):
        noisy = rng.binomial(4500, p) / 4500
        errs.append(abs(fit_saturating_exp(np.column_stack([T, noisy])).f3 - 0.01) / 0.01)
    assert max(errs) < 0.05


def test_saturating_errors():
    with pytest.raises(InputError):
        fit_saturating_exp([[1, 0.5], [2, 0.6], [3, 0.7]])
    with pytest.raises(InputError):
        fit_saturating_exp(np.column_stack([T, np.full(30, 1.5)]))
    with pytest.raises(InputError):
        fit_saturating_exp(np.column_stack([-T, sat(0.8, 0.9, 0.01)]))
    with pytest.raises(FitError) as info:
        fit_saturating_exp(np.column_stack([T, sat(0.8, 0.9, 0.01)]), max_iter=1)
    assert "residual" in info.value.report


def test_exp_decay_recovery_and_exclusion():
    x = np.array([0.5, 1.0, 2.0, 4.0, 8.0, 16.0])
    fit = fit_exp_decay(np.column_stack([x, 0.12 * np.exp(-0.06 * x)]))
    assert fit.a == pytest.approx(0.12, rel=1e-6) and fit.b == pytest.approx(0.06, rel=1e-6)
    assert len(fit.excluded) == 2
    two = fit_exp_decay([[2.0, 1.0], [3.0, np.exp(-1)]])
    assert two.b == pytest.approx(1.0) and two.a == pytest.approx(np.e**2)
    with pytest.raises(InputError):
        fit_exp_decay([[2.0, 1.0], [3.0, 0.0]])
    with pytest.raises(InputError):
        fit_exp_decay([[0.5, 1.0], [3.0, 0.5]])


def test_power_law_recovery():
    x = np.geomspace(0.05, 0.5, 8)
    fit = fit_power_law(np.column_stack([x, 1615.79 * x**2.31]))
    assert fit.a == pytest.approx(1615.79, rel=1e-6) and fit.b == pytest.approx(2.31, rel=1e-6)
    flat = fit_power_law(np.column_stack([x, np.full(8, 3.0)]))
    assert flat.b == pytest.approx(0.0, abs=1e-12) and flat.a == pytest.approx(3.0)
    with pytest.raises(InputError):
        fit_power_law([[0.0, 1.0], [1.0, 1.0]])


def test_log_and_nonlinear_methods_agree():
    x = np.linspace(1.5, 10, 10)
    y = 0.12 * np.exp(-0.06 * x)
    a = fit_exp_decay(np.column_stack([x, y]))
    b = fit_exp_decay(np.column_stack([x, y]), method="nonlinear")
    assert b.b == pytest.approx(a.b, rel=0.01)
    x = np.geomspace(0.05, 0.5, 8)
    a = fit_power_law(np.column_stack([x, 1615.79 * x**2.31]))
    b = fit_power_law(np.column_stack([x, 1615.79 * x**2.31]), method="nonlinear")
    assert b.b == pytest.approx(a.b, rel=0.01)
    with pytest.raises(InputError):
        fit_power_law(np.column_stack([x, x]), method="spline")


@given(st.lists(st.floats(-10, 10), min_size=1, max_size=40))
def test_isotonic_is_monotone_and_mean_preserving(y):
    iso = isotonic(y)
    assert np.all(np.diff(iso) >= -1e-12)
    assert iso.sum() == pytest.approx(sum(y), abs=1e-9)
    assert np.all(np.diff(isotonic(y, increasing=False)) <= 1e-12)


def test_extrema_and_envelope():
    y = np.sin(np.linspace(0, 6 * np.pi, 200))
    assert count_extrema(y) == 6
    assert envelope_deviation(np.linspace(0, 1, 10)) == 0.0
    assert envelope_deviation(y) > 0.5
