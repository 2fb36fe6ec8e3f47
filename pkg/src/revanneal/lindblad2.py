"""Two-spin Lindblad dynamics in the Pauli product basis.

rho = sum_k x_k e_k with e_{4a+b} = P_a (x) P_b / 2, P = (I, X, Y, Z), so x_0 = 1/2
fixes the trace. Configurations are indexed uu, ud, du, dd (first spin first).
The affine generator for the remaining 15 coefficients is computed from
M[k, l] = Tr(e_k L(e_l)) rather than from hand-expanded equations.

Dissipators, in that configuration order:
  L1 = |uu><dd|, L2 = |dd><uu|, L3 = Z(x)Z, L4 = |uu><ud|, L5 = |ud><uu|,
  L6 = |uu><du|, L7 = |du><uu|.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, fields
from functools import lru_cache
from importlib import resources

import numpy as np

from .bloch import GHZ_TO_RAD_PER_US, ProbTrajectory
from .errors import DomainError, InputError
from .integrators import LinearSystem, StepPlan, propagate
from .problems import IsingProblem, Spectrum, states
from .schedule import AnnealSchedule, eval_A, eval_B

_I2 = np.eye(2, dtype=complex)
_X = np.array([[0, 1], [1, 0]], dtype=complex)
_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
_Z = np.diag([1.0, -1.0]).astype(complex)
PAULI = (_I2, _X, _Y, _Z)
BASIS = np.array([np.kron(PAULI[a], PAULI[b]) / 2 for a in range(4) for b in range(4)])
LABELS = ("uu", "ud", "du", "dd")
_ARROWS = {"↑↑": "uu", "↑↓": "ud", "↓↑": "du", "↓↓": "dd", "up": "uu", "down": "dd"}

# <ij| e_k |ij> for each configuration: probabilities are _DIAG @ x
_DIAG = np.real(np.einsum("kii->ik", BASIS))


def _ket(i: int, j: int) -> np.ndarray:
    m = np.zeros((4, 4), dtype=complex)
    m[i, j] = 1.0
    return m


JUMPS = (_ket(0, 3), _ket(3, 0), np.kron(_Z, _Z), _ket(0, 1), _ket(1, 0), _ket(0, 2), _ket(2, 0))


_UNIT_TO_PER_US = {"per_us": 1.0, "per_ms": 1e-3, "Hz": 1e-6}


@dataclass(frozen=True)
class RateSet:
    """Dissipator rates g1..g7 in ``unit``: "per_us" (default), "per_ms" or "Hz"."""

    g1: float = 0.0
    g2: float = 0.0
    g3: float = 0.0
    g4: float = 0.0
    g5: float = 0.0
    g6: float = 0.0
    g7: float = 0.0
    unit: str = "per_us"

    def __post_init__(self):
        if self.unit not in _UNIT_TO_PER_US:
            raise InputError(f"rate unit must be one of {sorted(_UNIT_TO_PER_US)}, got {self.unit!r}")
        if any(not v >= 0 for v in self.as_tuple(convert=False)):
            raise DomainError("rates must be non-negative")

    def as_tuple(self, convert: bool = True) -> tuple:
        vals = tuple(float(getattr(self, f"g{k}")) for k in range(1, 8))
        if convert:
            vals = tuple(v * _UNIT_TO_PER_US[self.unit] for v in vals)
        return vals

    def to_json(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    @classmethod
    def from_json(cls, data: dict) -> "RateSet":
        unknown = set(data) - {f.name for f in fields(cls)}
        if unknown:
            raise InputError(f"unknown rate keys {sorted(unknown)}")
        return cls(**{k: (v if k == "unit" else float(v)) for k, v in data.items()})


@dataclass(frozen=True)
class PauliCoeffs:
    x: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        if x.shape == (15,):
            x = np.concatenate(([0.5], x))
        if x.shape != (16,):
            raise InputError("Pauli coefficient vector must have 16 (or 15) entries")
        if abs(x[0] - 0.5) > 1e-12:
            raise DomainError("x_1 must equal 1/2 (unit trace)")
        object.__setattr__(self, "x", x)

    def rho(self) -> np.ndarray:
        return np.einsum("k,kij->ij", self.x, BASIS)

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.rho())[0])


# --- superoperators in the Pauli basis -------------------------------------------


def _superop(apply) -> np.ndarray:
    """Real 16x16 matrix M[k, l] = Tr(e_k apply(e_l))."""
    images = np.array([apply(e) for e in BASIS])
    return np.real(np.einsum("kij,lji->kl", BASIS, images))


def _hamiltonian_superop(h: np.ndarray) -> np.ndarray:
    return _superop(lambda r: -1j * (h @ r - r @ h))


@lru_cache(maxsize=None)
def _dissipator_superops() -> np.ndarray:
    out = []
    for lk in JUMPS:
        ld = lk.conj().T
        ldl = ld @ lk
        out.append(_superop(lambda r, lk=lk, ld=ld, ldl=ldl:
                            lk @ r @ ld - 0.5 * (ldl @ r + r @ ldl)))
    return np.array(out)


def driver_hamiltonian() -> np.ndarray:
    return -(np.kron(_X, _I2) + np.kron(_I2, _X))


def problem_hamiltonian(problem: IsingProblem) -> np.ndarray:
    if problem.n != 2:
        raise InputError(f"two-spin dynamics needs a 2-spin problem, got n={problem.n}")
    h1, h2 = problem.h
    J = problem.J.get((1, 0), 0.0)
    return h1 * np.kron(_Z, _I2) + h2 * np.kron(_I2, _Z) + J * np.kron(_Z, _Z)


def _rate_vector(rates) -> np.ndarray:
    if isinstance(rates, RateSet):
        return np.array(rates.as_tuple())
    g = np.asarray(rates, dtype=float)
    if g.shape != (7,) or np.any(g < 0):
        raise DomainError("need seven non-negative rates")
    return g


def twospin_system(sched: AnnealSchedule, problem: IsingProblem, rates,
                   driver_scale: float = 1.0) -> LinearSystem:
    """dim-15 affine system for x_2..x_16.

    H = 2 pi [A(s)/2 H_D + B(s)/2 H_P] in rad/us, so the two coherent terms carry
    coefficients pi A(s) and pi B(s) (GHz -> rad/us). ``driver_scale`` multiplies
    A(s); 0 switches the transverse field off.
    """
    gd = _hamiltonian_superop(driver_hamiltonian())[1:, 1:]
    gp = _hamiltonian_superop(problem_hamiltonian(problem))[1:, 1:]
    diss = np.einsum("k,kij->ij", _rate_vector(rates), _dissipator_superops())
    half = 0.5 * GHZ_TO_RAD_PER_US

    def coeffs(s):
        return np.stack([driver_scale * half * np.asarray(eval_A(sched, s)),
                         half * np.asarray(eval_B(sched, s))], axis=1)

    return LinearSystem(
        dim=15,
        terms=(gd, gp),
        coeffs=coeffs,
        dissipator=diss[1:, 1:],
        source=0.5 * diss[1:, 0],
        kind="twospin",
    )


def build_generator(sched: AnnealSchedule, problem: IsingProblem, rates, s: float):
    """(C(s) + D, y) for the 15 free coefficients at annealing parameter s."""
    sys = twospin_system(sched, problem, rates)
    return sys.generator(s), sys.source.copy()


def probs_from_coeffs(c) -> np.ndarray:
    """(p_uu, p_ud, p_du, p_dd); accepts PauliCoeffs, 16- or 15-vectors, or stacks."""
    x = c.x if isinstance(c, PauliCoeffs) else np.asarray(c, dtype=float)
    if x.shape[-1] == 15:
        x = np.concatenate([np.full(x.shape[:-1] + (1,), 0.5), x], axis=-1)
    return x @ _DIAG.T


def coeffs_from_state(label: str) -> PauliCoeffs:
    lab = _ARROWS.get(label.strip(), label.strip().lower())
    if lab not in LABELS:
        raise InputError(f"unknown two-spin state {label!r}; use one of {LABELS}")
    i = LABELS.index(lab)
    proj = _ket(i, i)
    return PauliCoeffs(np.real(np.einsum("kij,ji->k", BASIS, proj)))


# --- equilibrium-consistent rates -------------------------------------------------


def _config_probs(source, beta: float) -> np.ndarray:
    from .equilibrium import gibbs_probs, state_probs

    if isinstance(source, IsingProblem):
        return state_probs(source, beta)
    if isinstance(source, Spectrum):
        if source.n != 2:
            raise InputError("need a 2-spin spectrum")
        lp = gibbs_probs(source, beta)
        out = np.zeros(4)
        cfg = [tuple(int(v) for v in row) for row in states(2)]
        for lv, p in zip(source.levels, lp):
            if len(lv.states) != lv.degeneracy:
                raise InputError("spectrum levels must list all their states")
            for st in lv.states:
                out[cfg.index(tuple(st))] = p / lv.degeneracy
        return out
    raise InputError("expected an IsingProblem or a Spectrum")


def rates_from_equilibrium(source, beta: float, base_rate: float,
                           clamp: float = 1e-12) -> RateSet:
    """Rates obeying detailed balance with the Gibbs state of a 2-spin problem.

    g1 = g3 = g4 = g6 = base, g2 = base p_dd/p_uu, g5 = base p_ud/p_uu,
    g7 = base p_du/p_uu; ratios below ``clamp`` are set to 0.
    """
    if not beta >= 0:
        raise DomainError("beta must be non-negative")
    if not base_rate > 0:
        raise DomainError("base_rate must be positive")
    p = _config_probs(source, beta)
    if p[0] <= 0:
        raise DomainError("reference state uu has zero probability")

    def ratio(q):
        r = q / p[0]
        return 0.0 if r < clamp else base_rate * r

    return RateSet(base_rate, ratio(p[3]), base_rate, base_rate, ratio(p[1]),
                   base_rate, ratio(p[2]))


def beta_for_ratio(ratio: float, gap: float) -> float:
    """beta with exp(-beta gap) = ratio."""
    return -math.log(ratio) / gap


def degeneracy_lift(problem: IsingProblem, delta: float) -> IsingProblem:
    """Split the two fields by +-delta: (h1 - delta, h2 + delta)."""
    h1, h2 = problem.h
    return IsingProblem(2, (h1 - delta, h2 + delta), dict(problem.J),
                        name=f"{problem.name}+lift({delta:g})")


# --- protocol runs ----------------------------------------------------------------


def initial_coeffs(label: str) -> np.ndarray:
    return coeffs_from_state(label).x[1:]


def run_2spin_protocol(sched: AnnealSchedule, problem: IsingProblem, rates, protocol,
                       plan: StepPlan | None = None, observers=None, cache=None,
                       check_physical: bool = False,
                       driver_scale: float = 1.0) -> ProbTrajectory:
    """(p_uu, p_ud, p_du, p_dd) at the observer times (default: t_end only)."""
    plan = plan or StepPlan()
    sys = twospin_system(sched, problem, rates, driver_scale)
    tr = propagate(sys, plan, protocol, initial_coeffs(protocol.initial_state),
                   observers, cache=cache)
    if check_physical:
        for x in tr.states:
            lo = PauliCoeffs(x).min_eigenvalue()
            if lo < -1e-6:
                raise DomainError(f"density matrix lost positivity (eigenvalue {lo:.2e})")
    return ProbTrajectory(tr.times, probs_from_coeffs(tr.states), tr.states, tr.fallback_steps)


def load_rate_presets() -> dict:
    ref = resources.files("revanneal") / "data" / "rate_presets.json"
    return {k: RateSet.from_json(v) for k, v in json.loads(ref.read_text()).items()}


def rate_preset(name: str) -> RateSet:
    presets = load_rate_presets()
    if name not in presets:
        raise InputError(f"unknown rate preset {name!r}; known: {sorted(presets)}")
    return presets[name]
