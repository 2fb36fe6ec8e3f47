"""WTS / ATS scans with finite-sample emulation, plus h1, s_r and chain-size sweeps."""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from . import __version__
from .bloch import BlochParams, preset as bloch_preset, run_1spin_protocol
from .equilibrium import chain_level_probs
from .errors import InputError
from .integrators import METHODS, StepPlan
from .lindblad2 import LABELS as TWO_SPIN_LABELS
from .lindblad2 import RateSet, degeneracy_lift, rate_preset, run_2spin_protocol
from .markov import build_four_level, build_two_level, propagate_markov
from .problems import builtin, parse_chain_label
from .schedule import ReverseProtocol, energy_gap, eval_A, load_schedule

MODES = ("WTS", "ATS")
BACKENDS = ("bloch", "lindblad2", "markov")
T_MAX = 2000.0
SR_BOUNDS = (0.5, 0.9)
CSV_COLUMNS = ("t_end_us", "state_label", "p_exact", "p_sampled", "n_samples")


@dataclass(frozen=True)
class RateModel:
    """Scale factor exp(-c1 (gap - gap_ref)) (A(s_r)/A(s_ref))^c2 applied to all rates.

    The reference point (s_ref, h_ref) has factor 1. Gaps are in GHz.
    """

    c1: float = 0.06
    c2: float = 2.31
    s_ref: float = 0.7
    h_ref: float = 0.1

    def factor(self, sched, s_r: float, h1: float) -> float:
        gap = energy_gap(sched, s_r, h1)
        gap_ref = energy_gap(sched, self.s_ref, self.h_ref)
        ratio = eval_A(sched, s_r) / eval_A(sched, self.s_ref)
        return math.exp(-self.c1 * (gap - gap_ref)) * ratio**self.c2


@dataclass(frozen=True)
class ScanConfig:
    mode: str = "WTS"
    t_grid: tuple = ()
    s_r: float = 0.7
    problem: str = "1S(0.1)"
    backend: str = "bloch"
    initial_state: str = "down"
    samples_per_point: int = 4500
    seed: int = 0
    bloch: object = None  # preset name or {T1_us, T2_us, M0}; default by mode
    rates: object = None  # preset name or {g1..g7, unit}
    schedule: str = "default"
    tau: float = 1e-3
    method: str = "diagonalization"
    ramp: float = 1.0
    t_max: float = T_MAX
    rate_model: object = None  # None, True for defaults, or dict of RateModel fields
    degeneracy_lift: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "t_grid", tuple(float(t) for t in self.t_grid))

    # -- validation -------------------------------------------------------------

    def problems_found(self) -> list:
        """Every configuration error, so they can be reported together."""
        errs = []
        if self.mode not in MODES:
            errs.append(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.backend not in BACKENDS:
            errs.append(f"backend must be one of {BACKENDS}, got {self.backend!r}")
        if self.method not in METHODS:
            errs.append(f"method must be one of {METHODS}, got {self.method!r}")
        if not self.tau > 0:
            errs.append("tau must be positive")
        if not 0.0 < self.s_r < 1.0:
            errs.append(f"s_r must lie in (0, 1), got {self.s_r}")
        if not isinstance(self.samples_per_point, int) or self.samples_per_point < 0:
            errs.append("samples_per_point must be a non-negative integer")
        g = np.asarray(self.t_grid)
        if len(g) == 0:
            errs.append("t_grid is empty")
        else:
            if np.any(np.diff(g) <= 0):
                errs.append("t_grid must be strictly increasing")
            if g[-1] > self.t_max:
                errs.append(f"t_grid exceeds t_max={self.t_max} us")
            lo = 2.0 * self.ramp if self.mode == "WTS" else 0.0
            if g[0] < lo or (self.mode == "ATS" and g[0] <= 0):
                errs.append(f"t_grid values must be >= {lo} us for {self.mode}")
        try:
            prob = self.load_problem()
        except (InputError, ValueError) as exc:
            errs.append(f"problem: {exc}")
            prob = None
        if prob is not None and self.backend == "bloch" and prob.n != 1:
            errs.append("bloch backend needs a one-spin problem")
        if prob is not None and self.backend == "lindblad2" and prob.n != 2:
            errs.append("lindblad2 backend needs a two-spin problem")
        if self.backend in ("lindblad2", "markov") and self.rates is None:
            errs.append(f"{self.backend} backend needs a rates entry")
        if prob is not None:
            try:
                labels = self.state_labels()
                aliases = {"u", "d", "up", "down"} if len(labels) != 4 or prob.n == 2 else set()
                if self.initial_state not in set(labels) | aliases:
                    errs.append(f"initial_state {self.initial_state!r} not in {labels}")
            except InputError as exc:
                errs.append(str(exc))
        for name, loader in (("bloch", self.bloch_params), ("rates", self.rate_set)):
            try:
                loader()
            except (InputError, ValueError, KeyError, TypeError) as exc:
                errs.append(f"{name}: {exc}")
        try:
            self.rate_model_obj()
        except TypeError as exc:
            errs.append(f"rate_model: {exc}")
        return errs

    def validate(self) -> "ScanConfig":
        errs = self.problems_found()
        if errs:
            raise InputError("invalid scan config:\n  " + "\n  ".join(errs))
        return self

    # -- resolution -------------------------------------------------------------

    def load_problem(self):
        p = builtin(self.problem)
        if self.degeneracy_lift and p.n == 2:
            p = degeneracy_lift(p, self.degeneracy_lift)
        return p

    def state_labels(self) -> tuple:
        if self.backend == "bloch":
            return ("up", "down")
        n = self.load_problem().n
        if n == 1:
            return ("up", "down")
        if n == 2:
            return TWO_SPIN_LABELS
        if self.backend == "markov":
            return ("gs1", "gs2", "gs3", "gs4")
        raise InputError(f"no state labelling for a {n}-spin problem with {self.backend}")

    def bloch_params(self):
        if self.backend != "bloch":
            return None
        spec = self.bloch if self.bloch is not None else self.mode.lower()
        if isinstance(spec, str):
            return bloch_preset(spec)
        vals = [spec.get(k) for k in ("T1_us", "T2_us", "M0")]
        vals = [math.inf if v in (None, "inf") else float(v) for v in vals]
        return BlochParams(*vals)

    def rate_set(self):
        if self.rates is None:
            return None
        if isinstance(self.rates, str):
            return rate_preset(self.rates)
        return RateSet.from_json(dict(self.rates))

    def rate_model_obj(self):
        if not self.rate_model:
            return None
        if self.rate_model is True:
            return RateModel()
        return RateModel(**dict(self.rate_model))

    def protocol(self, t_end: float) -> ReverseProtocol:
        if self.mode == "WTS":
            return ReverseProtocol.wts(t_end, self.s_r, self.initial_state, self.ramp)
        return ReverseProtocol.ats(t_end, self.s_r, self.initial_state)

    def to_json(self) -> dict:
        out = asdict(self)
        out["t_grid"] = list(self.t_grid)
        return out

    @classmethod
    def from_json(cls, data: dict) -> "ScanConfig":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise InputError(f"unknown scan config keys {unknown}")
        data = dict(data)
        grid = data.get("t_grid")
        if isinstance(grid, dict):
            data["t_grid"] = make_grid(data.get("mode", "WTS"), **grid)
        elif grid is None:
            data["t_grid"] = make_grid(data.get("mode", "WTS"))
        return cls(**data)


def make_grid(mode: str = "WTS", num: int = 30, start: float | None = None,
              stop: float = T_MAX, spacing: str = "log", ramp: float = 1.0) -> tuple:
    """Default t_end grid: ``num`` points from the shortest valid protocol to ``stop``."""
    if start is None:
        start = 2.0 * ramp
    if spacing == "log":
        g = np.geomspace(start, stop, num)
    elif spacing == "linear":
        g = np.linspace(start, stop, num)
    else:
        raise InputError(f"grid spacing must be 'log' or 'linear', got {spacing!r}")
    return tuple(float(v) for v in np.round(g, 9))


# --- backends ---------------------------------------------------------------------


class _Runner:
    """Holds the objects shared by all points of one scan (and their map cache)."""

    def __init__(self, cfg: ScanConfig):
        self.cfg = cfg
        self.sched = load_schedule(cfg.schedule)
        self.problem = cfg.load_problem()
        self.labels = cfg.state_labels()
        self.plan = StepPlan(cfg.tau, cfg.method)
        self.cache = {}
        model = cfg.rate_model_obj()
        h1 = self.problem.h[0] if self.problem.n == 1 else 0.0
        self.rate_factor = model.factor(self.sched, cfg.s_r, h1) if model else 1.0
        self.bloch = cfg.bloch_params()
        if self.bloch is not None and self.rate_factor != 1.0:
            f = self.rate_factor
            self.bloch = BlochParams(self.bloch.T1 / f, self.bloch.T2 / f, self.bloch.M0)
        rs = cfg.rate_set()
        self.rates = None if rs is None else tuple(g * self.rate_factor for g in rs.as_tuple())
        if cfg.backend == "markov":
            if len(self.labels) == 2:
                self.W = build_two_level(self.rates[0], self.rates[1])
            else:
                self.W = build_four_level(self.rates)

    def _index(self, label: str) -> int:
        alias = {"u": "up", "d": "down"}
        lab = alias.get(label, label)
        if len(self.labels) == 4 and lab in ("up", "down"):
            lab = "uu" if lab == "up" else "dd"
        if lab not in self.labels:
            raise InputError(f"initial state {label!r} not in {self.labels}")
        return self.labels.index(lab)

    def exact(self, t_end: float) -> np.ndarray:
        cfg = self.cfg
        prot = cfg.protocol(t_end)
        if cfg.backend == "bloch":
            return run_1spin_protocol(self.sched, self.problem.h[0], self.bloch, prot,
                                      self.plan, cache=self.cache).final
        if cfg.backend == "lindblad2":
            init = self.labels[self._index(cfg.initial_state)]
            prot = replace(prot, initial_state=init)
            return run_2spin_protocol(self.sched, self.problem, self.rates, prot,
                                      self.plan, cache=self.cache).final
        p0 = np.zeros(len(self.labels))
        p0[self._index(cfg.initial_state)] = 1.0
        return propagate_markov(self.W, p0, t_end)


_WORKER = {}


def _worker_init(cfg_json):
    _WORKER["runner"] = _Runner(ScanConfig.from_json(cfg_json))


def _worker_exact(t_end):
    return _WORKER["runner"].exact(t_end)


@dataclass
class ScanResult:
    config: ScanConfig
    labels: tuple
    t_end: np.ndarray
    exact: np.ndarray  # (n_points, n_states)
    sampled: np.ndarray
    n_samples: int
    extras: dict = field(default_factory=dict)

    def column(self, label: str, sampled: bool = False) -> np.ndarray:
        src = self.sampled if sampled else self.exact
        return src[:, self.labels.index(label)]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for i, t in enumerate(self.t_end):
            for j, lab in enumerate(self.labels):
                w.writerow([repr(float(t)), lab, f"{self.exact[i, j]:.12g}",
                            f"{self.sampled[i, j]:.12g}", self.n_samples])
        return buf.getvalue()

    def meta(self) -> dict:
        return {"config": self.config.to_json(), "seed": self.config.seed,
                "software": {"revanneal": __version__, "numpy": np.__version__},
                "extras": _jsonable(self.extras)}


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    return obj


def sample_frequencies(probs: np.ndarray, n: int, rng: np.random.Generator) -> np.ndarray:
    """Multinomial relative frequencies; tiny negative round-off is clipped first."""
    p = np.clip(np.asarray(probs, dtype=float), 0.0, None)
    p = p / p.sum()
    if n == 0:
        return np.full_like(p, np.nan)
    return rng.multinomial(n, p) / n


def point_generators(seed: int, n_points: int) -> list:
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(n_points)]


def run_scan(cfg: ScanConfig, workers: int = 1) -> ScanResult:
    """Exact final probabilities for every t_end plus seeded multinomial samples."""
    cfg.validate()
    runner = _Runner(cfg)
    grid = list(cfg.t_grid)
    if workers > 1 and len(grid) > 1:
        with ProcessPoolExecutor(workers, initializer=_worker_init,
                                 initargs=(cfg.to_json(),)) as ex:
            exact = list(ex.map(_worker_exact, grid))
    else:
        exact = [runner.exact(t) for t in grid]
    exact = np.array(exact)
    gens = point_generators(cfg.seed, len(grid))
    sampled = np.array([sample_frequencies(p, cfg.samples_per_point, g)
                        for p, g in zip(exact, gens)])
    extras = {"rate_factor": runner.rate_factor}
    return ScanResult(cfg, tuple(runner.labels), np.array(grid), exact, sampled,
                      cfg.samples_per_point, extras)


def write_scan(result: ScanResult, path) -> Path:
    """Write the scan CSV and a ``.meta.json`` sidecar next to it."""
    path = Path(path)
    path.write_text(result.to_csv())
    side = path.with_suffix(path.suffix + ".meta.json")
    side.write_text(json.dumps(result.meta(), indent=2, sort_keys=True) + "\n")
    return side


def read_scan_csv(path) -> dict:
    """{label: array of (t_end, p_exact, p_sampled)} from a scan CSV."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise InputError(f"{path}: empty scan file")
        missing = [c for c in CSV_COLUMNS if c not in reader.fieldnames]
        if missing:
            raise InputError(f"{path}: missing columns {missing}")
        out = {}
        for row in reader:
            out.setdefault(row["state_label"], []).append(
                (float(row["t_end_us"]), float(row["p_exact"]), float(row["p_sampled"])))
    if not out:
        raise InputError(f"{path}: no data rows")
    return {k: np.array(v) for k, v in out.items()}


# --- sweeps -----------------------------------------------------------------------


@dataclass
class SweepPoint:
    value: float
    result: ScanResult
    gap: float
    A_sr: float


def _require_bloch(cfg: ScanConfig):
    if cfg.backend != "bloch":
        raise InputError("sweeps over h1 and s_r use the bloch backend")


def sweep_h1(template: ScanConfig, h1_list, workers: int = 1) -> list:
    """One scan per field value; each point also carries the gap at s_r."""
    _require_bloch(template)
    sched = load_schedule(template.schedule)
    out = []
    for h1 in h1_list:
        cfg = replace(template, problem=f"1S({float(h1)!r})")
        res = run_scan(cfg, workers)
        out.append(SweepPoint(float(h1), res, energy_gap(sched, cfg.s_r, h1),
                              eval_A(sched, cfg.s_r)))
    return out


def sweep_sr(template: ScanConfig, sr_list, workers: int = 1) -> list:
    """One scan per reversal distance; each point also carries A(s_r)."""
    _require_bloch(template)
    bad = [s for s in sr_list if not SR_BOUNDS[0] <= s <= SR_BOUNDS[1]]
    if bad:
        raise InputError(f"s_r values {bad} outside {list(SR_BOUNDS)}")
    sched = load_schedule(template.schedule)
    h1 = builtin(template.problem).h[0]
    out = []
    for s_r in sr_list:
        cfg = replace(template, s_r=float(s_r))
        res = run_scan(cfg, workers)
        out.append(SweepPoint(float(s_r), res, energy_gap(sched, s_r, h1), eval_A(sched, s_r)))
    return out


@dataclass
class ChainRow:
    n: int
    p0_exact: float
    p0_sampled: float
    energy_exact: float
    energy_sampled: float

    @property
    def abs_energy(self) -> float:
        return abs(self.energy_exact)


def chain_equilibrium_sweep(n_list, J: float, beta: float, samples: int = 5000,
                            seed: int = 0) -> list:
    """Equilibrium ground-state probability and mean energy per chain length.

    Works on the level structure (k domain walls), so N in the thousands is cheap.
    """
    if not J < 0:
        raise InputError("chain sweep expects a ferromagnetic J < 0")
    if not beta >= 0:
        raise InputError("beta must be non-negative")
    gens = point_generators(seed, len(n_list))
    rows = []
    for n, rng in zip(n_list, gens):
        n = int(n)
        lp = chain_level_probs(n, J, beta)
        levels = J * (n - 1 - 2 * np.arange(n))
        freq = sample_frequencies(lp, samples, rng)
        rows.append(ChainRow(n, float(lp[0]), float(freq[0]), float(lp @ levels),
                             float(freq @ levels)))
    return rows


def chain_rows_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("N", "p0_exact", "p0_sampled", "mean_energy", "mean_energy_sampled",
                "abs_mean_energy"))
    for r in rows:
        w.writerow([r.n, f"{r.p0_exact:.12g}", f"{r.p0_sampled:.12g}",
                    f"{r.energy_exact:.12g}", f"{r.energy_sampled:.12g}", f"{r.abs_energy:.12g}"])
    return buf.getvalue()


def is_chain_label(label: str) -> bool:
    return parse_chain_label(label) is not None
