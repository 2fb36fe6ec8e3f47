"""Annealing schedule curves, the reverse-annealing time course and derived quantities.

All schedule outputs are A(s)/h and B(s)/h in GHz. Angular-frequency factors are
applied by the dynamics modules.
"""

from __future__ import annotations

import csv
import json
import warnings
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np
from scipy import constants

from .errors import DomainError, InputError

DEFAULT_ETA = 0.206
CSV_HEADER = ("s", "A_over_h_GHz", "B_over_h_GHz")
COEFF_KEYS = ("A_a", "A_b", "A_c", "A_d", "B_a", "B_b", "B_c", "eta")


def _check_s(s):
    arr = np.asarray(s, dtype=float)
    if np.any(~np.isfinite(arr)) or np.any(arr < 0.0) or np.any(arr > 1.0):
        raise DomainError(f"annealing parameter outside [0, 1]: {s!r}")
    return arr


@dataclass(frozen=True)
class AnnealSchedule:
    """Closed-form fit of a tabulated annealing schedule.

    A(s)/h = (1-s) exp(A_a + A_b s + A_c s^2 + A_d s^3), B(s)/h = B_a + B_b s + B_c s^2.
    """

    A_a: float
    A_b: float
    A_c: float
    A_d: float
    B_a: float
    B_b: float
    B_c: float
    # max relative residual against the table the coefficients were fit to
    residual_A: float | None = field(default=None, compare=False)
    residual_B: float | None = field(default=None, compare=False)

    def A(self, s):
        return eval_A(self, s)

    def B(self, s):
        return eval_B(self, s)

    @property
    def eta(self) -> float:
        return eta_from_schedule(self)

    def coefficients(self) -> dict:
        return {k: getattr(self, k) for k in COEFF_KEYS[:-1]}


def eval_A(sched: AnnealSchedule, s):
    """Transverse-field strength A(s)/h in GHz (scalar or array)."""
    s = _check_s(s)
    poly = sched.A_a + s * (sched.A_b + s * (sched.A_c + s * sched.A_d))
    out = (1.0 - s) * np.exp(poly)
    return float(out) if out.ndim == 0 else out


def eval_B(sched: AnnealSchedule, s):
    """Problem-Hamiltonian strength B(s)/h in GHz (scalar or array)."""
    s = _check_s(s)
    out = sched.B_a + s * (sched.B_b + s * sched.B_c)
    return float(out) if out.ndim == 0 else out


def fit_schedule(table) -> AnnealSchedule:
    """Least-squares fit of the two closed forms to rows of (s, A/h, B/h).

    A(s) is fit linearly in log space, log(A/(1-s)) against a cubic in s, using
    rows with s < 1 and A > 0. B(s) is an ordinary quadratic fit.
    """
    rows = np.asarray(table, dtype=float)
    if rows.ndim != 2 or rows.shape[1] != 3:
        raise InputError("schedule table must have three columns (s, A/h, B/h)")
    if rows.shape[0] < 8:
        raise InputError(f"schedule table needs at least 8 rows, got {rows.shape[0]}")
    s, a, b = rows.T
    if np.any(~np.isfinite(rows)):
        raise InputError("schedule table contains non-finite values")
    if np.any(np.diff(s) <= 0):
        raise InputError("schedule table s column must be strictly increasing")
    if s[0] < 0 or s[-1] > 1:
        raise InputError("schedule table s values must lie in [0, 1]")
    if np.any(a < 0) or np.any(b < 0):
        raise InputError("schedule table contains negative A or B values")

    use = (s < 1.0) & (a > 0.0)
    if use.sum() < 4:
        raise InputError("not enough rows with s < 1 and A > 0 to fit A(s)")
    va = np.vander(s[use], 4, increasing=True)
    ca, *_ = np.linalg.lstsq(va, np.log(a[use] / (1.0 - s[use])), rcond=None)
    vb = np.vander(s, 3, increasing=True)
    cb, *_ = np.linalg.lstsq(vb, b, rcond=None)

    sched = AnnealSchedule(*map(float, ca), *map(float, cb))
    fa = eval_A(sched, s[use])
    fb = eval_B(sched, s)
    res_a = float(np.max(np.abs(fa - a[use]) / a[use]))
    bpos = b > 0
    res_b = float(np.max(np.abs(fb[bpos] - b[bpos]) / b[bpos])) if bpos.any() else 0.0
    return AnnealSchedule(*map(float, ca), *map(float, cb), residual_A=res_a, residual_B=res_b)


def read_schedule_csv(path) -> np.ndarray:
    """Read a schedule CSV with header ``s,A_over_h_GHz,B_over_h_GHz``."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise InputError(f"{path}: empty schedule file") from None
        if len(header) != 3:
            raise InputError(f"{path}: expected 3 columns {CSV_HEADER}, got {header}")
        for want, got in zip(CSV_HEADER, header):
            if want != got:
                raise InputError(f"{path}: unexpected column {got!r} (expected {want!r})")
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            try:
                rows.append([float(c) for c in row])
            except ValueError:
                raise InputError(f"{path}:{lineno}: non-numeric value in {row}") from None
            if len(rows[-1]) != 3:
                raise InputError(f"{path}:{lineno}: expected 3 values")
    return np.array(rows, dtype=float).reshape(-1, 3)


def schedule_to_json(sched: AnnealSchedule) -> dict:
    out = sched.coefficients()
    out["eta"] = eta_from_schedule(sched)
    return out


def save_schedule_json(sched: AnnealSchedule, path) -> None:
    Path(path).write_text(json.dumps(schedule_to_json(sched), indent=2) + "\n")


def load_schedule_json(path) -> AnnealSchedule:
    data = json.loads(Path(path).read_text())
    missing = [k for k in COEFF_KEYS[:-1] if k not in data]
    if missing:
        raise InputError(f"{path}: missing coefficient keys {missing}")
    sched = AnnealSchedule(*(float(data[k]) for k in COEFF_KEYS[:-1]))
    if "eta" in data:
        check_eta(float(data["eta"]), sched)
    return sched


def default_schedule() -> AnnealSchedule:
    """Coefficients shipped with the package (see ``data/default_schedule.csv``)."""
    ref = resources.files("revanneal") / "data" / "default_schedule.json"
    with resources.as_file(ref) as p:
        return load_schedule_json(p)


def default_schedule_table() -> np.ndarray:
    ref = resources.files("revanneal") / "data" / "default_schedule.csv"
    with resources.as_file(ref) as p:
        return read_schedule_csv(p)


def load_schedule(spec=None) -> AnnealSchedule:
    """Resolve a schedule from None/"default", a coefficient JSON or a schedule CSV."""
    if spec is None or spec == "default":
        return default_schedule()
    if isinstance(spec, AnnealSchedule):
        return spec
    if isinstance(spec, dict):
        return AnnealSchedule(*(float(spec[k]) for k in COEFF_KEYS[:-1]))
    path = Path(spec)
    if path.suffix.lower() == ".csv":
        return fit_schedule(read_schedule_csv(path))
    return load_schedule_json(path)


# --- temperature conversion -------------------------------------------------


@dataclass(frozen=True)
class TemperatureConversion:
    """beta = eta / T with T in kelvin."""

    eta: float = DEFAULT_ETA

    @classmethod
    def from_schedule(cls, sched: AnnealSchedule) -> "TemperatureConversion":
        eta = eta_from_schedule(sched)
        check_eta(DEFAULT_ETA, sched)
        return cls(eta)


def eta_from_schedule(sched: AnnealSchedule) -> float:
    """h B(1) / (2 k_B), with B(1)/h in GHz."""
    return constants.h * eval_B(sched, 1.0) * 1e9 / (2.0 * constants.k)


def check_eta(eta: float, sched: AnnealSchedule, rel_tol: float = 0.05) -> bool:
    computed = eta_from_schedule(sched)
    if abs(computed - eta) > rel_tol * abs(eta):
        warnings.warn(
            f"eta from schedule ({computed:.4f}) differs from {eta:.4f} by more than "
            f"{rel_tol:.0%}",
            stacklevel=2,
        )
        return False
    return True


# --- reverse protocol -------------------------------------------------------


@dataclass(frozen=True)
class ReverseProtocol:
    """Reverse annealing: ramp 1 -> s_r, pause at s_r, ramp back to 1 (times in us)."""

    t_reverse: float
    t_wait: float
    t_forward: float
    s_r: float
    initial_state: str = "up"

    def __post_init__(self):
        if not self.t_reverse > 0 or not self.t_forward > 0:
            raise InputError("t_reverse and t_forward must be positive")
        if not self.t_wait >= 0:
            raise InputError("t_wait must be non-negative")
        if not 0.0 < self.s_r < 1.0:
            raise InputError(f"s_r must lie in (0, 1), got {self.s_r}")

    @property
    def t_end(self) -> float:
        return self.t_reverse + self.t_wait + self.t_forward

    def segments(self):
        """(s_start, s_stop, duration) for the three stages; zero-length stages dropped."""
        segs = [(1.0, self.s_r, self.t_reverse), (self.s_r, self.s_r, self.t_wait),
                (self.s_r, 1.0, self.t_forward)]
        return [seg for seg in segs if seg[2] > 0]

    @classmethod
    def wts(cls, t_end, s_r, initial_state="up", ramp=1.0):
        return cls(ramp, t_end - 2.0 * ramp, ramp, s_r, initial_state)

    @classmethod
    def ats(cls, t_end, s_r, initial_state="up"):
        return cls(t_end / 2.0, 0.0, t_end / 2.0, s_r, initial_state)


def s_of_t(p: ReverseProtocol, t):
    """Piecewise-linear annealing parameter at time t (scalar or array)."""
    t = np.asarray(t, dtype=float)
    t_end = p.t_end
    if np.any(~np.isfinite(t)) or np.any(t < 0.0) or np.any(t > t_end * (1 + 1e-12)):
        raise DomainError(f"time outside [0, {t_end}]: {t!r}")
    t1 = p.t_reverse
    t2 = p.t_reverse + p.t_wait
    down = 1.0 - (1.0 - p.s_r) * t / t1
    up = p.s_r + (1.0 - p.s_r) * (t - t2) / p.t_forward
    out = np.where(t <= t1, down, np.where(t <= t2, p.s_r, np.minimum(up, 1.0)))
    return float(out) if out.ndim == 0 else out


def energy_gap(sched: AnnealSchedule, s, h1):
    """Single-spin gap 2 sqrt(A(s)^2 + B(s)^2 h1^2) in GHz."""
    a = eval_A(sched, s)
    b = eval_B(sched, s)
    out = 2.0 * np.sqrt(np.square(a) + np.square(b) * np.square(h1))
    return float(out) if np.ndim(out) == 0 else out


__all__ = [
    "AnnealSchedule", "ReverseProtocol", "TemperatureConversion", "DEFAULT_ETA",
    "eval_A", "eval_B", "fit_schedule", "s_of_t", "energy_gap", "eta_from_schedule",
    "check_eta", "read_schedule_csv", "load_schedule_json", "save_schedule_json",
    "schedule_to_json", "default_schedule", "default_schedule_table", "load_schedule",
]
