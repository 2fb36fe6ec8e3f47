import itertools
import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from revanneal.errors import CapabilityError, InputError
from revanneal.problems import (
    SHIPPED_2SAT, IsingProblem, TwoSatInstance, builtin, chain_spectrum, enumerate_spectrum,
    energy, make_ferro_chain, map_2sat, parse_chain_label, read_2sat, read_ising_json,
    state_energies, state_labels, states, write_2sat,
)


def test_two_spin_instances():
    e = state_energies(builtin("2S1"))
    np.testing.assert_allclose(e, [-1.05, -0.95, -0.95, 2.95])
    spec = enumerate_spectrum(builtin("2S2"))
    assert spec.degeneracies == [3, 1]
    assert spec.energies == pytest.approx([-1.0, 3.0])
    spec = enumerate_spectrum(builtin("2S3"))
    assert spec.degeneracies == [2, 1, 1]
    assert spec.levels[0].states == ((1, -1), (-1, 1))


def test_one_spin_labels():
    assert builtin("1S(0.1)").h == (0.1,)
    assert builtin("1S").h == (0.1,)
    assert state_labels(2) == ["uu", "ud", "du", "dd"]
    with pytest.raises(InputError):
        builtin("nonsense")


@st.composite
def small_problems(draw):
    n = draw(st.integers(1, 7))
    h = draw(st.lists(st.floats(-2, 2), min_size=n, max_size=n))
    pairs = [(i, j) for i in range(n) for j in range(i)]
    J = {pq: draw(st.floats(-2, 2)) for pq in pairs if draw(st.booleans())}
    return IsingProblem(n, tuple(h), J)


@given(small_problems())
def test_spectrum_matches_brute_force(p):
    # independent oracle: itertools product over spins
    brute = []
    for cfg in itertools.product((1, -1), repeat=p.n):
        e = sum(h * s for h, s in zip(p.h, cfg))
        e += sum(v * cfg[i] * cfg[j] for (i, j), v in p.J.items())
        brute.append(e)
    np.testing.assert_allclose(state_energies(p), brute, atol=1e-12)
    spec = enumerate_spectrum(p)
    assert sum(spec.degeneracies) == 2**p.n
    assert np.all(np.diff(spec.energies) > 0)
    assert spec.energies[0] == pytest.approx(min(brute))


@given(st.integers(2, 12), st.floats(-1.0, -0.01))
def test_chain_closed_form_matches_enumeration(n, J):
    closed = chain_spectrum(n, J)
    brute = enumerate_spectrum(make_ferro_chain(n, J))
    np.testing.assert_allclose(closed.energies, brute.energies, atol=1e-12)
    assert closed.degeneracies == brute.degeneracies


def test_chain_limits():
    with pytest.raises(CapabilityError):
        state_energies(make_ferro_chain(30, -0.1))
    with pytest.raises(InputError):
        make_ferro_chain(5, 0.1)
    assert parse_chain_label("chain(50)") == (50, -0.1)
    assert parse_chain_label("chain(8,-0.2)") == (8, -0.2)
    assert parse_chain_label("2S1") is None


@st.composite
def two_sat(draw):
    n = draw(st.integers(2, 8))
    m = draw(st.integers(1, 12))
    clauses = []
    for _ in range(m):
        i, j = draw(st.lists(st.integers(1, n), min_size=2, max_size=2, unique=True))
        clauses.append(((i, draw(st.sampled_from([1, -1]))), (j, draw(st.sampled_from([1, -1])))))
    return TwoSatInstance(n, tuple(clauses))


@given(two_sat())
def test_2sat_energy_counts_violations(inst):
    p = map_2sat(inst)
    cfg = states(inst.n_vars)
    assign = cfg > 0  # spin up = true
    np.testing.assert_allclose(energy(p, cfg) + p.offset, 4 * inst.violated(assign), atol=1e-12)


def test_2sat_file_round_trip(tmp_path):
    inst = TwoSatInstance(3, (((1, 1), (2, -1)), ((2, 1), (3, 1))))
    path = tmp_path / "x.cnf"
    write_2sat(inst, path)
    assert read_2sat(path) == inst
    path.write_text("3 2\n1 -2\n")
    with pytest.raises(InputError):
        read_2sat(path)
    path.write_text("3 1\n1 0\n")
    with pytest.raises(InputError):
        read_2sat(path)


@pytest.mark.parametrize("name", SHIPPED_2SAT)
def test_shipped_2sat_have_four_ground_states(name):
    p = builtin(name)
    spec = enumerate_spectrum(p)
    assert spec.degeneracies[0] == 4
    assert spec.energies[0] + p.offset == pytest.approx(0.0)
    assert spec.energies[1] + p.offset == pytest.approx(4.0)


def test_ising_json(tmp_path):
    path = tmp_path / "p.json"
    path.write_text(json.dumps({"n": 2, "h": [0.5, -0.5], "J": [[1, 0, 0.3]]}))
    p = read_ising_json(path)
    assert p.J == {(1, 0): 0.3}
    assert builtin(str(path)).h == (0.5, -0.5)
    path.write_text(json.dumps({"h": [1]}))
    with pytest.raises(InputError):
        read_ising_json(path)


def test_problem_validation():
    with pytest.raises(InputError):
        IsingProblem(2, (1.0,))
    with pytest.raises(InputError):
        IsingProblem(2, (1.0, 1.0), {(0, 0): 1.0})
    with pytest.raises(InputError):
        IsingProblem(2, (1.0, 1.0), {(2, 0): 1.0})
    # couplings given in either order are merged
    assert IsingProblem(2, (0, 0), {(0, 1): 1.0, (1, 0): 0.5}).J == {(1, 0): 1.5}
