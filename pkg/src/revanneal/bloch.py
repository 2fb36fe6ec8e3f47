"""Single-spin open dynamics as Bloch equations.

dS/dt = S x B + D S + y, with D = diag(-1/T2, -1/T2, -1/T1) and y = (0, 0, M0/T1).
The field follows H = -B.sigma/2, so B^x = 2 pi A(s) and B^z = -2 pi B(s) h1
(GHz converted to rad/us).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from importlib import resources

import numpy as np

from .errors import DomainError, InputError
from .integrators import LinearSystem, StepPlan, propagate
from .schedule import AnnealSchedule, ReverseProtocol, eval_A, eval_B

GHZ_TO_RAD_PER_US = 2.0 * math.pi * 1e3

# skew generators of S -> S x e_x and S -> S x e_z
_GX = np.array([[0.0, 0.0, 0.0], [0.0, 0.0, 1.0], [0.0, -1.0, 0.0]])
_GZ = np.array([[0.0, 1.0, 0.0], [-1.0, 0.0, 0.0], [0.0, 0.0, 0.0]])


@dataclass(frozen=True)
class BlochParams:
    """Relaxation times in us (math.inf for no damping) and equilibrium magnetization."""

    T1: float
    T2: float
    M0: float

    def __post_init__(self):
        if not (self.T1 > 0 and self.T2 > 0):
            raise InputError("T1 and T2 must be positive (use inf for no damping)")
        if not -1.0 <= self.M0 <= 1.0:
            raise InputError(f"M0 must lie in [-1, 1], got {self.M0}")
        if self.T2 > 2.0 * self.T1 * (1 + 1e-12):
            raise InputError(f"T2={self.T2} exceeds 2*T1={2 * self.T1}")

    @property
    def rates(self):
        return bloch_to_rates(self)


@dataclass(frozen=True)
class BlochState:
    Sx: float
    Sy: float
    Sz: float

    def __post_init__(self):
        if self.Sx**2 + self.Sy**2 + self.Sz**2 > 1 + 1e-9:
            raise DomainError("Bloch vector longer than 1")

    @classmethod
    def from_label(cls, label: str) -> "BlochState":
        lab = label.strip().lower()
        if lab in ("up", "u", "↑"):
            return cls(0.0, 0.0, 1.0)
        if lab in ("down", "d", "↓"):
            return cls(0.0, 0.0, -1.0)
        raise InputError(f"unknown one-spin initial state {label!r}")

    def vector(self) -> np.ndarray:
        return np.array([self.Sx, self.Sy, self.Sz])


def rates_to_bloch(g1: float, g2: float, g3: float) -> BlochParams:
    """(T1, T2, M0) for raising, lowering and dephasing rates (per us)."""
    if min(g1, g2, g3) < 0:
        raise DomainError("rates must be non-negative")
    s = g1 + g2
    t1 = 1.0 / s if s > 0 else math.inf
    d2 = s + 4.0 * g3
    t2 = 2.0 / d2 if d2 > 0 else math.inf
    m0 = (g1 - g2) / s if s > 0 else 0.0
    return BlochParams(t1, t2, m0)


def bloch_to_rates(p: BlochParams):
    """Inverse map: g1 + g2 = 1/T1, g1 - g2 = M0/T1, g3 = (2/T2 - 1/T1)/4."""
    inv1 = 0.0 if math.isinf(p.T1) else 1.0 / p.T1
    inv2 = 0.0 if math.isinf(p.T2) else 1.0 / p.T2
    g1 = 0.5 * inv1 * (1.0 + p.M0)
    g2 = 0.5 * inv1 * (1.0 - p.M0)
    g3 = max(0.0, (2.0 * inv2 - inv1) / 4.0)
    return g1, g2, g3


def field_of_s(sched: AnnealSchedule, s, h1: float) -> np.ndarray:
    """Field (B^x, B^y, B^z) in rad/us; shape (3,) or (len(s), 3)."""
    a = np.asarray(eval_A(sched, s))
    b = np.asarray(eval_B(sched, s))
    out = np.stack([GHZ_TO_RAD_PER_US * a, np.zeros_like(a), -GHZ_TO_RAD_PER_US * b * h1], axis=-1)
    return out


def bloch_system(sched: AnnealSchedule, h1: float, params: BlochParams) -> LinearSystem:
    inv1 = 0.0 if math.isinf(params.T1) else 1.0 / params.T1
    inv2 = 0.0 if math.isinf(params.T2) else 1.0 / params.T2

    def coeffs(s):
        f = field_of_s(sched, s, h1)
        return np.stack([f[:, 0], f[:, 2]], axis=1)

    return LinearSystem(
        dim=3,
        terms=(_GX, _GZ),
        coeffs=coeffs,
        dissipator=np.diag([-inv2, -inv2, -inv1]),
        source=np.array([0.0, 0.0, params.M0 * inv1]),
        kind="bloch",
    )


def probs_from_bloch(state) -> tuple:
    sz = state.Sz if isinstance(state, BlochState) else float(np.asarray(state)[2])
    return 0.5 * (1.0 + sz), 0.5 * (1.0 - sz)


@dataclass
class ProbTrajectory:
    times: np.ndarray
    probs: np.ndarray  # (n_obs, n_states)
    states: np.ndarray
    fallback_steps: int = 0

    @property
    def final(self) -> np.ndarray:
        return self.probs[-1]


def run_1spin_protocol(sched: AnnealSchedule, h1: float, params: BlochParams,
                       protocol: ReverseProtocol, plan: StepPlan | None = None,
                       observers=None, cache=None) -> ProbTrajectory:
    """(p_up, p_down) at the observer times (default: t_end only)."""
    plan = plan or StepPlan()
    sys = bloch_system(sched, h1, params)
    x0 = BlochState.from_label(protocol.initial_state).vector()
    tr = propagate(sys, plan, protocol, x0, observers, cache=cache)
    sz = tr.states[:, 2]
    probs = np.stack([0.5 * (1 + sz), 0.5 * (1 - sz)], axis=1)
    return ProbTrajectory(tr.times, probs, tr.states, tr.fallback_steps)


def load_presets() -> dict:
    ref = resources.files("revanneal") / "data" / "bloch_presets.json"
    raw = json.loads(ref.read_text())
    return {k: BlochParams(_num(v["T1_us"]), _num(v["T2_us"]), float(v["M0"]))
            for k, v in raw.items()}


def _num(v) -> float:
    return math.inf if v in (None, "inf", "Infinity") else float(v)


def preset(name: str) -> BlochParams:
    presets = load_presets()
    if name not in presets:
        raise InputError(f"unknown Bloch preset {name!r}; known: {sorted(presets)}")
    return presets[name]
