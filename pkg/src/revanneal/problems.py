"""Ising problem instances, classical energies and exact spectra.

Spin/boolean convention: s_i = +1 is spin up and means x_i is true. Configuration
index k encodes spin i in bit n-1-i (set bit = spin down), so for two spins the
index order is uu, ud, du, dd.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import CapabilityError, InputError

MAX_ENUM_SPINS = 24
MERGE_TOL = 1e-12
_CHUNK = 1 << 18


@dataclass(frozen=True, eq=False)
class IsingProblem:
    """Fields h_i and couplings J_ij (stored once per pair, key (i, j) with i > j)."""

    n: int
    h: tuple
    J: dict = field(default_factory=dict)
    offset: float = 0.0
    name: str = ""

    def __post_init__(self):
        if self.n < 1:
            raise InputError("problem needs at least one spin")
        h = tuple(float(v) for v in self.h)
        if len(h) != self.n:
            raise InputError(f"expected {self.n} fields, got {len(h)}")
        couplings = {}
        for (i, j), v in dict(self.J).items():
            i, j = int(i), int(j)
            if i == j:
                raise InputError(f"self-coupling on spin {i}")
            if not (0 <= i < self.n and 0 <= j < self.n):
                raise InputError(f"coupling ({i}, {j}) out of range for n={self.n}")
            key = (max(i, j), min(i, j))
            couplings[key] = couplings.get(key, 0.0) + float(v)
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "J", couplings)

    def coupling_matrix(self) -> np.ndarray:
        m = np.zeros((self.n, self.n))
        for (i, j), v in self.J.items():
            m[i, j] = v
        return m

    def to_json(self) -> dict:
        return {"n": self.n, "h": list(self.h),
                "J": [[i, j, v] for (i, j), v in sorted(self.J.items())]}


def states(n: int, start: int = 0, stop: int | None = None) -> np.ndarray:
    """Spin configurations (rows of +-1) for indices start..stop-1."""
    stop = 2**n if stop is None else stop
    idx = np.arange(start, stop, dtype=np.int64)
    shifts = np.arange(n - 1, -1, -1, dtype=np.int64)
    bits = (idx[:, None] >> shifts[None, :]) & 1
    return (1 - 2 * bits).astype(np.int8)


def config_label(config) -> str:
    return "".join("u" if s > 0 else "d" for s in config)


def energy(p: IsingProblem, config):
    """Classical energy sum h_i s_i + sum J_ij s_i s_j (offset not included).

    Accepts one configuration or a 2-D array of configurations.
    """
    c = np.asarray(config)
    if c.shape[-1] != p.n:
        raise InputError(f"configuration length {c.shape[-1]} != n={p.n}")
    if not np.all(np.abs(c) == 1):
        raise InputError("spin configuration entries must be +1 or -1")
    c = c.astype(float)
    e = c @ np.asarray(p.h)
    for (i, j), v in p.J.items():
        e = e + v * c[..., i] * c[..., j]
    return float(e) if np.ndim(e) == 0 else e


def state_energies(p: IsingProblem) -> np.ndarray:
    """Energy of every configuration in index order."""
    if p.n > MAX_ENUM_SPINS:
        raise CapabilityError(
            f"exhaustive enumeration limited to n <= {MAX_ENUM_SPINS} (got {p.n}); "
            "use the closed-form chain routines for long chains")
    total = 2**p.n
    out = np.empty(total)
    for start in range(0, total, _CHUNK):
        stop = min(total, start + _CHUNK)
        out[start:stop] = energy(p, states(p.n, start, stop))
    return out


@dataclass(frozen=True)
class Level:
    energy: float
    degeneracy: int
    states: tuple = ()


@dataclass(frozen=True)
class Spectrum:
    """Energy levels in strictly increasing order with integer degeneracies."""

    n: int
    levels: tuple

    def __post_init__(self):
        es = [lv.energy for lv in self.levels]
        if not es:
            raise InputError("empty spectrum")
        if any(b <= a for a, b in zip(es, es[1:])):
            raise InputError("spectrum levels must have strictly increasing energy")
        if sum(lv.degeneracy for lv in self.levels) != 2**self.n:
            raise InputError("degeneracies must sum to 2**n")

    @property
    def energies(self) -> np.ndarray:
        return np.array([lv.energy for lv in self.levels])

    @property
    def degeneracies(self) -> list:
        return [lv.degeneracy for lv in self.levels]

    def __len__(self):
        return len(self.levels)


def enumerate_spectrum(p: IsingProblem, keep_states: int = 8) -> Spectrum:
    """Exact spectrum by enumerating all 2**n configurations."""
    e = state_energies(p)
    order = np.argsort(e, kind="stable")
    es = e[order]
    breaks = np.flatnonzero(np.diff(es) > MERGE_TOL) + 1
    starts = np.concatenate(([0], breaks))
    stops = np.concatenate((breaks, [len(es)]))
    levels = []
    for a, b in zip(starts, stops):
        reps = tuple(tuple(int(v) for v in states(p.n, int(k), int(k) + 1)[0])
                     for k in np.sort(order[a:min(b, a + keep_states)]))
        levels.append(Level(float(es[a]), int(b - a), reps))
    return Spectrum(p.n, tuple(levels))


def chain_spectrum(n: int, J: float) -> Spectrum:
    """Closed-form levels of an open ferromagnetic chain: k domain walls,
    energy J (n-1-2k), degeneracy 2 C(n-1, k)."""
    if n < 2:
        raise InputError("chain needs at least two spins")
    levels = [Level(J * (n - 1 - 2 * k), 2 * math.comb(n - 1, k)) for k in range(n)]
    if J > 0:
        levels.reverse()
    return Spectrum(n, tuple(levels))


def make_ferro_chain(n: int, J: float) -> IsingProblem:
    if n < 2:
        raise InputError("chain needs at least two spins")
    if not J < 0:
        raise InputError(f"ferromagnetic chain requires J < 0, got {J}")
    return IsingProblem(n, (0.0,) * n, {(i + 1, i): J for i in range(n - 1)},
                        name=f"chain({n},{J:g})")


# --- 2-SAT -------------------------------------------------------------------


@dataclass(frozen=True)
class TwoSatInstance:
    """Clauses ((i1, eps1), (i2, eps2)) with 1-based variable indices, eps = +1 for
    x_i and -1 for its negation."""

    n_vars: int
    clauses: tuple

    def __post_init__(self):
        cl = []
        for clause in self.clauses:
            (i1, e1), (i2, e2) = clause
            for i, e in ((i1, e1), (i2, e2)):
                if not 1 <= i <= self.n_vars:
                    raise InputError(f"variable index {i} outside 1..{self.n_vars}")
                if e not in (1, -1):
                    raise InputError(f"literal sign must be +-1, got {e}")
            if i1 == i2:
                raise InputError(f"clause {clause} repeats variable {i1}")
            cl.append(((int(i1), int(e1)), (int(i2), int(e2))))
        object.__setattr__(self, "clauses", tuple(cl))

    def violated(self, assignment) -> np.ndarray:
        """Number of violated clauses for boolean assignment rows (True = x_i true)."""
        a = np.atleast_2d(np.asarray(assignment, dtype=bool))
        count = np.zeros(a.shape[0], dtype=int)
        for (i1, e1), (i2, e2) in self.clauses:
            lit1 = a[:, i1 - 1] if e1 > 0 else ~a[:, i1 - 1]
            lit2 = a[:, i2 - 1] if e2 > 0 else ~a[:, i2 - 1]
            count += ~(lit1 | lit2)
        return count


def map_2sat(inst: TwoSatInstance) -> IsingProblem:
    """Expand sum_a (e1 s_i - 1)(e2 s_j - 1) into fields, couplings and offset.

    Each clause contributes 0 when satisfied and 4 when violated.
    """
    h = np.zeros(inst.n_vars)
    J = {}
    for (i1, e1), (i2, e2) in inst.clauses:
        a, b = i1 - 1, i2 - 1
        h[a] -= e1
        h[b] -= e2
        key = (max(a, b), min(a, b))
        J[key] = J.get(key, 0.0) + e1 * e2
    J = {k: v for k, v in J.items() if v != 0}
    return IsingProblem(inst.n_vars, tuple(h), J, offset=float(len(inst.clauses)),
                        name=f"2sat(N={inst.n_vars},M={len(inst.clauses)})")


def read_2sat(path) -> TwoSatInstance:
    lines = [ln.split("#", 1)[0].strip() for ln in Path(path).read_text().splitlines()]
    lines = [ln for ln in lines if ln]
    if not lines:
        raise InputError(f"{path}: empty 2-SAT file")
    try:
        n, m = (int(v) for v in lines[0].split())
    except ValueError:
        raise InputError(f"{path}: first line must be 'N M'") from None
    if len(lines) - 1 != m:
        raise InputError(f"{path}: header announces {m} clauses, found {len(lines) - 1}")
    clauses = []
    for ln in lines[1:]:
        parts = ln.split()
        if len(parts) != 2:
            raise InputError(f"{path}: clause line {ln!r} must hold two literals")
        lits = [int(v) for v in parts]
        if 0 in lits:
            raise InputError(f"{path}: literal 0 is not allowed")
        clauses.append(tuple((abs(v), 1 if v > 0 else -1) for v in lits))
    return TwoSatInstance(n, tuple(clauses))


def write_2sat(inst: TwoSatInstance, path) -> None:
    lines = [f"{inst.n_vars} {len(inst.clauses)}"]
    lines += [" ".join(str(i * e) for i, e in clause) for clause in inst.clauses]
    Path(path).write_text("\n".join(lines) + "\n")


def read_ising_json(path) -> IsingProblem:
    data = json.loads(Path(path).read_text())
    try:
        J = {(int(i), int(j)): float(v) for i, j, v in data.get("J", [])}
        return IsingProblem(int(data["n"]), tuple(data["h"]), J, name=Path(path).stem)
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"{path}: malformed Ising JSON ({exc})") from None


# --- named instances ---------------------------------------------------------

SHIPPED_2SAT = ("sat6", "sat12", "sat14")

_TWO_SPIN = {
    "2S1": ((-1.0, -1.0), 0.95),
    "2S2": ((-1.0, -1.0), 1.00),
    "2S3": ((-0.95, -0.95), 1.00),
}


def two_spin(h1: float, h2: float, J: float, name: str = "") -> IsingProblem:
    return IsingProblem(2, (h1, h2), {(1, 0): J}, name=name)


def one_spin(h1: float) -> IsingProblem:
    return IsingProblem(1, (h1,), name=f"1S({h1:g})")


def builtin(name: str) -> IsingProblem:
    """Resolve 1S(h), 2S1..2S3, chain(N[,J]), a shipped 2-SAT name (sat6, sat12,
    sat14) or a path to a 2-SAT / Ising JSON file."""
    label = name.strip()
    if label in _TWO_SPIN:
        (h1, h2), J = _TWO_SPIN[label]
        return two_spin(h1, h2, J, name=label)
    m = re.fullmatch(r"1S(?:\(\s*([-+0-9.eE]+)\s*\))?", label)
    if m:
        return one_spin(float(m.group(1)) if m.group(1) else 0.1)
    chain = parse_chain_label(label)
    if chain:
        return make_ferro_chain(*chain)
    if label in SHIPPED_2SAT:
        ref = resources.files("revanneal") / "data" / "twosat" / f"{label}.cnf"
        with resources.as_file(ref) as p:
            inst = map_2sat(read_2sat(p))
        return IsingProblem(inst.n, inst.h, inst.J, inst.offset, name=label)
    path = Path(label)
    if path.exists():
        if path.suffix.lower() == ".json":
            return read_ising_json(path)
        return map_2sat(read_2sat(path))
    raise InputError(f"unknown problem label {name!r}")


def parse_chain_label(name: str):
    """(N, J) for a chain(N[,J]) label, else None."""
    m = re.fullmatch(r"chain\(\s*(\d+)\s*(?:,\s*([-+0-9.eE]+)\s*)?\)", name.strip())
    if not m:
        return None
    return int(m.group(1)), float(m.group(2)) if m.group(2) else -0.1


def state_labels(n: int) -> list:
    return [config_label(c) for c in states(n)]
