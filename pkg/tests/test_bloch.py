import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from revanneal.bloch import (
    GHZ_TO_RAD_PER_US, BlochParams, BlochState, bloch_system, bloch_to_rates, field_of_s,
    load_presets, preset, probs_from_bloch, rates_to_bloch, run_1spin_protocol,
)
from revanneal.errors import DomainError, InputError
from revanneal.integrators import DIAG, PRODUCT, StepPlan
from revanneal.schedule import ReverseProtocol, eval_A, eval_B

SX = np.array([[0, 1], [1, 0]], complex)
SY = np.array([[0, -1j], [1j, 0]])
SZ = np.diag([1.0, -1.0]).astype(complex)
RAISE = np.array([[0, 1], [0, 0]], complex)  # |up><down|


def lindblad_rhs(bvec, rates, svec):
    """dS/dt from the 2x2 master equation with H = -B.sigma/2 and sigma+, sigma-, sigma_z jumps."""
    rho = 0.5 * (np.eye(2) + svec[0] * SX + svec[1] * SY + svec[2] * SZ)
    h = -0.5 * (bvec[0] * SX + bvec[1] * SY + bvec[2] * SZ)
    d = -1j * (h @ rho - rho @ h)
    for g, L in zip(rates, (RAISE, RAISE.conj().T, SZ)):
        Ld = L.conj().T
        d += g * (L @ rho @ Ld - 0.5 * (Ld @ L @ rho + rho @ Ld @ L))
    return np.real([np.trace(P @ d) for P in (SX, SY, SZ)])


@given(st.floats(0.0, 1.0), st.floats(-1, 1), st.floats(0, 2), st.floats(0, 2), st.floats(0, 2),
       st.lists(st.floats(-0.5, 0.5), min_size=3, max_size=3))
def test_bloch_generator_matches_density_matrix_oracle(sched, s, h1, g1, g2, g3, svec):
    if g1 + g2 == 0:
        g1 = 0.1
    params = rates_to_bloch(g1, g2, g3)
    sys = bloch_system(sched, h1, params)
    ours = sys.rhs(np.array(svec), s)
    oracle = lindblad_rhs(field_of_s(sched, s, h1), (g1, g2, g3), svec)
    np.testing.assert_allclose(ours, oracle, atol=1e-9 * max(1.0, np.abs(oracle).max()))


def test_field_components(sched):
    b = field_of_s(sched, 0.7, 0.1)
    assert b[0] == pytest.approx(GHZ_TO_RAD_PER_US * eval_A(sched, 0.7))
    assert b[1] == 0.0
    assert b[2] == pytest.approx(-GHZ_TO_RAD_PER_US * eval_B(sched, 0.7) * 0.1)


@given(st.floats(0.01, 5), st.floats(0.01, 5), st.floats(0, 5))
def test_rate_round_trip(g1, g2, g3):
    back = bloch_to_rates(rates_to_bloch(g1, g2, g3))
    np.testing.assert_allclose(back, (g1, g2, g3), rtol=1e-9, atol=1e-12)


def test_params_validation():
    with pytest.raises(InputError):
        BlochParams(1.0, 3.0, 0.0)
    with pytest.raises(InputError):
        BlochParams(1.0, 1.0, 1.5)
    with pytest.raises(InputError):
        BlochParams(0.0, 1.0, 0.0)
    assert BlochParams(math.inf, math.inf, 0.0).rates == (0.0, 0.0, 0.0)
    with pytest.raises(DomainError):
        BlochState(1.0, 1.0, 0.0)
    with pytest.raises(InputError):
        BlochState.from_label("sideways")


def test_presets():
    p = load_presets()
    assert p["wts"] == BlochParams(41.67, 41.67, -0.66)
    assert p["ats"] == BlochParams(909.09, 909.09, -0.66)
    assert math.isinf(preset("closed").T1)
    with pytest.raises(InputError):
        preset("nope")


def test_probs_from_bloch():
    assert probs_from_bloch(BlochState(0, 0, -1)) == (0.0, 1.0)
    assert probs_from_bloch([0, 0, 0.2]) == pytest.approx((0.6, 0.4))


def test_closed_system_stays_pure(sched):
    prot = ReverseProtocol.ats(3.0, 0.6, "up")
    tr = run_1spin_protocol(sched, 0.1, preset("closed"), prot, observers=np.linspace(0, 3, 13))
    np.testing.assert_allclose(np.linalg.norm(tr.states, axis=1), 1.0, atol=1e-9)


def test_relaxation_reaches_m0_at_fixed_s(sched):
    # long wait: S relaxes to the field-dressed fixed point, and back at s = 1 the
    # spin is nearly along z with p_down close to (1 - M0)/2
    prot = ReverseProtocol.wts(400.0, 0.95, "up")
    tr = run_1spin_protocol(sched, 0.1, BlochParams(5.0, 5.0, -0.6), prot)
    assert tr.final[1] == pytest.approx(0.8, abs=0.02)


@pytest.mark.parametrize("method", [DIAG, PRODUCT])
def test_methods_agree_on_presets(sched, method):
    prot = ReverseProtocol.wts(30.0, 0.7, "down")
    a = run_1spin_protocol(sched, 0.1, preset("wts"), prot, StepPlan(1e-3, DIAG))
    b = run_1spin_protocol(sched, 0.1, preset("wts"), prot, StepPlan(1e-3, method))
    np.testing.assert_allclose(a.states, b.states, atol=10 * 1e-6)
