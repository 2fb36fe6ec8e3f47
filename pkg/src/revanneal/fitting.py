"""Curve fits used to summarize scans.

Saturating exponential f1 (1 - f2 exp(-f3 t)) by damped Gauss-Newton
(Levenberg-Marquardt), plus log-linearized fits of a exp(-b x) and a x^b.
Also holds small monotonicity diagnostics used on scan curves.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.optimize import curve_fit

from .errors import FitError, InputError

MAX_ITER = 200
REL_TOL = 1e-9


def _points(points, min_points: int):
    arr = np.asarray(points, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise InputError("points must be (x, y) pairs")
    if len(arr) < min_points:
        raise InputError(f"need at least {min_points} points, got {len(arr)}")
    if not np.all(np.isfinite(arr)):
        raise InputError("points contain non-finite values")
    # sort so results do not depend on input order
    arr = arr[np.lexsort((arr[:, 1], arr[:, 0]))]
    return arr[:, 0], arr[:, 1]


@dataclass
class SaturatingFit:
    f1: float
    f2: float
    f3: float
    residual: float  # sum of squared residuals
    iterations: int
    identifiable: bool = True
    history: list = field(default_factory=list)  # rss after each accepted step

    def predict(self, t):
        t = np.asarray(t, dtype=float)
        return self.f1 * (1.0 - self.f2 * np.exp(-self.f3 * t))

    def to_json(self) -> dict:
        out = asdict(self)
        out["kind"] = "saturating"
        if not self.identifiable:
            out["f3"] = None
        return out


def _sat_model(theta, t):
    f1, f2, f3 = theta
    e = np.exp(-f3 * t)
    return f1 * (1.0 - f2 * e), e


def _sat_jacobian(theta, t, e):
    f1, f2, _ = theta
    return np.stack([1.0 - f2 * e, -f1 * e, f1 * f2 * t * e], axis=1)


def fit_saturating_exp(points, noise_floor: float = 1e-9, max_iter: int = MAX_ITER,
                       rel_tol: float = REL_TOL) -> SaturatingFit:
    """Levenberg-Marquardt fit of p(t) = f1 (1 - f2 exp(-f3 t)).

    Starts from f1 = max p, f2 = 1 - p(t_min)/f1, f3 = 1/median t, and again from
    f1 = p(t_max); the better converged fit with f3 > 0 is returned. When every
    point lies within ``noise_floor`` of the mean there is no curvature to fit;
    f2 = 0 is returned and f3 is flagged unidentifiable.
    """
    t, p = _points(points, 4)
    if np.any(t <= 0):
        raise InputError("t_end values must be positive")
    if np.any((p < 0) | (p > 1)):
        raise InputError("probabilities must lie in [0, 1]")
    mean = float(p.mean())
    if np.all(np.abs(p - mean) <= noise_floor):
        rss = float(np.sum((p - mean) ** 2))
        return SaturatingFit(mean, 0.0, math.nan, rss, 0, identifiable=False, history=[rss])

    # the standard start suits rising curves; a start from the long-time value
    # covers decaying ones, where f2 comes out negative
    starts = [float(p.max()), float(p[-1])]
    best, failure = None, None
    for f1 in starts:
        theta0 = np.array([f1, 1.0 - p[0] / f1 if f1 > 0 else 0.0, 1.0 / float(np.median(t))])
        try:
            with np.errstate(over="ignore", invalid="ignore"):
                fit = _levenberg_marquardt(theta0, t, p, max_iter, rel_tol)
        except FitError as exc:
            failure = failure or exc
            continue
        if fit.f3 > 0 and (best is None or fit.residual < best.residual):
            best = fit
    if best is None:
        raise failure or FitError("saturating fit converged only to f3 <= 0")
    return best


def _levenberg_marquardt(theta, t, p, max_iter, rel_tol) -> SaturatingFit:
    model, e = _sat_model(theta, t)
    r = model - p
    rss = float(r @ r)
    history = [rss]
    lam = 1e-3
    for it in range(1, max_iter + 1):
        jac = _sat_jacobian(theta, t, e)
        jtj = jac.T @ jac
        g = jac.T @ r
        while True:
            a = jtj + lam * np.diag(np.maximum(np.diag(jtj), 1e-12))
            try:
                step = -np.linalg.solve(a, g)
            except np.linalg.LinAlgError:
                step = -np.linalg.lstsq(a, g, rcond=None)[0]
            trial = theta + step
            m_new, e_new = _sat_model(trial, t)
            r_new = m_new - p
            rss_new = float(r_new @ r_new)
            if np.isfinite(rss_new) and rss_new <= rss:
                break
            lam *= 10.0
            if lam > 1e16:
                step = np.zeros(3)
                trial, m_new, e_new, r_new, rss_new = theta, model, e, r, rss
                break
        lam = max(lam / 10.0, 1e-12)
        change = np.max(np.abs(step) / np.maximum(np.abs(theta), 1e-12))
        theta, model, e, r, rss = trial, m_new, e_new, r_new, rss_new
        history.append(rss)
        if change < rel_tol:
            return SaturatingFit(*map(float, theta), rss, it, True, history)
    raise FitError(
        f"saturating fit did not converge in {max_iter} iterations",
        {"f1": theta[0], "f2": theta[1], "f3": theta[2], "residual": rss, "iterations": max_iter},
    )


@dataclass
class ScalingFit:
    kind: str
    a: float
    b: float
    residual: float  # sum of squared residuals in log space
    excluded: list = field(default_factory=list)
    method: str = "log-linear"

    def predict(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "expdecay":
            return self.a * np.exp(-self.b * x)
        return self.a * np.power(x, self.b)

    def to_json(self) -> dict:
        out = asdict(self)
        out["n_excluded"] = len(self.excluded)
        return out


def _nonlinear(model, x, y, a0, b0):
    popt, _ = curve_fit(model, x, y, p0=(a0, b0), maxfev=20_000)
    return float(popt[0]), float(popt[1])


def fit_exp_decay(points, delta_min: float = 1.0, method: str = "log-linear") -> ScalingFit:
    """a exp(-b x) on points with x > delta_min; excluded points are reported."""
    x, y = _points(points, 2)
    if np.any(y <= 0):
        raise InputError("decay values must be positive")
    keep = x > delta_min
    excluded = [[float(u), float(v)] for u, v in zip(x[~keep], y[~keep])]
    x, y = x[keep], y[keep]
    if len(x) < 2:
        raise InputError(f"fewer than two points with x > {delta_min}")
    slope, icpt = np.polyfit(x, np.log(y), 1)
    a, b = math.exp(icpt), -float(slope)
    if method == "nonlinear":
        a, b = _nonlinear(lambda u, a_, b_: a_ * np.exp(-b_ * u), x, y, a, b)
    elif method != "log-linear":
        raise InputError(f"unknown fit method {method!r}")
    res = float(np.sum((np.log(y) - (math.log(a) - b * x)) ** 2))
    return ScalingFit("expdecay", a, b, res, excluded, method)


def fit_power_law(points, method: str = "log-linear") -> ScalingFit:
    """a x^b by least squares in log-log space."""
    x, y = _points(points, 2)
    if np.any(x <= 0) or np.any(y <= 0):
        raise InputError("power-law data must be positive")
    b, icpt = (float(v) for v in np.polyfit(np.log(x), np.log(y), 1))
    a = math.exp(icpt)
    if method == "nonlinear":
        a, b = _nonlinear(lambda u, a_, b_: a_ * np.power(u, b_), x, y, a, b)
    elif method != "log-linear":
        raise InputError(f"unknown fit method {method!r}")
    res = float(np.sum((np.log(y) - (math.log(a) + b * np.log(x))) ** 2))
    return ScalingFit("powerlaw", a, float(b), res, [], method)


# --- monotonicity diagnostics --------------------------------------------------


def isotonic(y, increasing: bool = True) -> np.ndarray:
    """Least-squares monotone fit (pool-adjacent-violators)."""
    y = np.asarray(y, dtype=float)
    if not increasing:
        return -isotonic(-y, True)
    vals, wts, sizes = [], [], []
    for v in y:
        vals.append(v)
        wts.append(1.0)
        sizes.append(1)
        while len(vals) > 1 and vals[-2] > vals[-1]:
            w = wts[-2] + wts[-1]
            v = (vals[-2] * wts[-2] + vals[-1] * wts[-1]) / w
            n = sizes[-2] + sizes[-1]
            del vals[-1], wts[-1], sizes[-1]
            vals[-1], wts[-1], sizes[-1] = v, w, n
    return np.repeat(vals, sizes)


def envelope_deviation(y) -> float:
    """Max distance from the better of the increasing and decreasing monotone fits."""
    y = np.asarray(y, dtype=float)
    up = np.abs(y - isotonic(y, True)).max()
    down = np.abs(y - isotonic(y, False)).max()
    return float(min(up, down))


def count_extrema(y, tol: float = 1e-9) -> int:
    """Interior local extrema, i.e. sign changes of the finite differences."""
    d = np.diff(np.asarray(y, dtype=float))
    d = d[np.abs(d) > tol]
    return int(np.sum(np.sign(d[1:]) != np.sign(d[:-1])))
