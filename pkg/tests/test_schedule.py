import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from revanneal.errors import DomainError, InputError
from revanneal.schedule import (
    AnnealSchedule, ReverseProtocol, TemperatureConversion, default_schedule_table, energy_gap,
    eta_from_schedule, eval_A, eval_B, fit_schedule, load_schedule, load_schedule_json,
    read_schedule_csv, s_of_t, save_schedule_json,
)

ZERO = AnnealSchedule(0, 0, 0, 0, 0, 0, 0)


def test_trivial_closed_forms():
    assert eval_A(ZERO, 0.0) == pytest.approx(1.0)
    assert eval_A(ZERO, 1.0) == 0.0
    lin = AnnealSchedule(0, 0, 0, 0, 1.0, 2.0, 0.0)
    assert eval_B(lin, 0.5) == pytest.approx(2.0)


def test_domain_checks(sched):
    with pytest.raises(DomainError):
        eval_A(sched, 1.2)
    with pytest.raises(DomainError):
        eval_B(sched, -0.1)
    with pytest.raises(DomainError):
        eval_A(sched, float("nan"))


def test_default_schedule_shape(sched):
    s = np.linspace(0, 1, 101)
    a, b = eval_A(sched, s), eval_B(sched, s)
    assert np.all(np.diff(a) <= 0) and np.all(np.diff(b) >= 0)
    assert a[-1] == 0.0
    # crossing A = B sits in the middle of the anneal
    cross = s[np.argmin(np.abs(a - b))]
    assert 0.2 < cross < 0.5


def test_default_schedule_fit_residuals():
    table = default_schedule_table()
    fit = fit_schedule(table)
    assert fit.residual_A < 0.05 and fit.residual_B < 0.01


@given(st.lists(st.floats(-2, 2), min_size=4, max_size=4), st.lists(st.floats(0.1, 5), min_size=3, max_size=3))
def test_fit_recovers_exact_closed_form(ca, cb):
    true = AnnealSchedule(*ca, *cb)
    s = np.linspace(0, 1, 40)
    b = eval_B(true, s)
    if np.any(b < 0):
        return
    fit = fit_schedule(np.column_stack([s, eval_A(true, s), b]))
    np.testing.assert_allclose(eval_A(fit, s[:-1]), eval_A(true, s[:-1]), rtol=1e-8)
    np.testing.assert_allclose(eval_B(fit, s), b, rtol=1e-8, atol=1e-10)


def test_fit_rejects_short_table():
    with pytest.raises(InputError):
        fit_schedule(np.ones((3, 3)))


def test_csv_header_errors_name_the_column(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("s,A_GHz,B_over_h_GHz\n0,1,0\n")
    with pytest.raises(InputError, match="A_GHz"):
        read_schedule_csv(p)


def test_csv_round_trip(tmp_path, sched):
    p = tmp_path / "sched.json"
    save_schedule_json(sched, p)
    data = json.loads(p.read_text())
    assert set(data) == {"A_a", "A_b", "A_c", "A_d", "B_a", "B_b", "B_c", "eta"}
    assert load_schedule_json(p) == sched
    assert load_schedule(str(p)) == sched


def test_eta_matches_default(sched):
    assert eta_from_schedule(sched) == pytest.approx(0.206, rel=0.01)
    assert TemperatureConversion().eta == 0.206


def test_protocol_path():
    p = ReverseProtocol(2.0, 3.0, 1.0, 0.6, "down")
    assert p.t_end == 6.0
    assert s_of_t(p, 0.0) == 1.0
    assert s_of_t(p, 1.0) == pytest.approx(0.8)
    assert s_of_t(p, 3.5) == pytest.approx(0.6)
    assert s_of_t(p, 6.0) == pytest.approx(1.0)
    with pytest.raises(DomainError):
        s_of_t(p, 7.0)


def test_wts_ats_constructors():
    w = ReverseProtocol.wts(10.0, 0.7)
    assert (w.t_reverse, w.t_wait, w.t_forward) == (1.0, 8.0, 1.0)
    a = ReverseProtocol.ats(10.0, 0.7)
    assert (a.t_reverse, a.t_wait, a.t_forward) == (5.0, 0.0, 5.0)
    with pytest.raises(InputError):
        ReverseProtocol(1.0, 0.0, 1.0, 1.0)
    with pytest.raises(InputError):
        ReverseProtocol(0.0, 0.0, 1.0, 0.5)


@given(st.floats(0.01, 10), st.floats(0, 10), st.floats(0.01, 10), st.floats(0.05, 0.95))
def test_s_of_t_is_bounded_and_continuous(tr, tw, tf, sr):
    p = ReverseProtocol(tr, tw, tf, sr)
    t = np.linspace(0, p.t_end, 501)
    s = s_of_t(p, t)
    assert np.all(s >= sr - 1e-12) and np.all(s <= 1 + 1e-12)
    slope = (1 - sr) / min(tr, tf)
    assert np.max(np.abs(np.diff(s))) <= slope * (t[1] - t[0]) * (1 + 1e-9) + 1e-12


def test_energy_gap(sched):
    assert energy_gap(sched, 1.0, 0.1) == pytest.approx(2 * eval_B(sched, 1.0) * 0.1)
    assert energy_gap(ZERO, 0.0, 0.0) == pytest.approx(2.0)
    s = 0.7
    expect = 2 * math.hypot(eval_A(sched, s), eval_B(sched, s) * 0.1)
    assert energy_gap(sched, s, 0.1) == pytest.approx(expect)
