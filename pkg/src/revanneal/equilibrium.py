"""Gibbs probabilities, effective inverse temperature and chain thermodynamics."""

from __future__ import annotations

import math

import numpy as np
from scipy import optimize
from scipy.special import gammaln, logsumexp

from .errors import DomainError, FitError, InputError
from .problems import IsingProblem, Spectrum, state_energies
from .schedule import TemperatureConversion


def _log_weights(spec: Spectrum, beta: float) -> np.ndarray:
    e = spec.energies
    logg = np.array([math.log(g) for g in spec.degeneracies])
    return logg - beta * (e - e.min())


def gibbs_probs(spec: Spectrum, beta: float) -> np.ndarray:
    """Level probabilities g_i exp(-beta E_i) / Z."""
    if not beta >= 0:
        raise DomainError(f"beta must be non-negative, got {beta}")
    lw = _log_weights(spec, beta)
    return np.exp(lw - logsumexp(lw))


def state_probs(p: IsingProblem, beta: float) -> np.ndarray:
    """Gibbs probability of every configuration in index order (small n only)."""
    if not beta >= 0:
        raise DomainError(f"beta must be non-negative, got {beta}")
    e = state_energies(p)
    lw = -beta * (e - e.min())
    return np.exp(lw - logsumexp(lw))


def ground_probability(spec: Spectrum, beta: float) -> float:
    return float(gibbs_probs(spec, beta)[0])


def effective_beta(p0: float, spec: Spectrum, tol: float = 1e-10) -> float:
    """Inverse temperature at which the ground level has probability p0."""
    if len(spec) < 2:
        raise InputError("effective_beta needs a spectrum with at least two levels")
    g = spec.degeneracies
    floor = g[0] / sum(g)
    if abs(p0 - floor) <= tol:
        return 0.0
    if not floor < p0 < 1.0:
        raise DomainError(f"ground probability {p0} not attainable (range [{floor}, 1))")

    def f(beta):
        return ground_probability(spec, beta) - p0

    hi = 1.0
    while f(hi) < 0:
        hi *= 2.0
        if hi > 1e12:
            raise DomainError(f"ground probability {p0} not attainable at finite beta")
    beta = optimize.bisect(f, 0.0, hi, xtol=1e-14, rtol=4 * np.finfo(float).eps, maxiter=400)
    if abs(f(beta)) > tol and abs(f(beta)) > 1e-12:
        raise DomainError(f"bisection stalled at |p0(beta) - p0| = {abs(f(beta)):.2e}")
    return float(beta)


def beta_to_temperature(beta: float, conv: TemperatureConversion | None = None) -> float:
    """Temperature in mK for a dimensionless beta."""
    conv = conv or TemperatureConversion()
    if not beta > 0:
        raise DomainError(f"beta must be positive, got {beta}")
    return conv.eta / beta * 1000.0


def chain_mean_energy(n, J: float, beta: float):
    """Equilibrium mean energy -J (n-1) tanh(beta J) of an open chain."""
    n_arr = np.asarray(n)
    if np.any(n_arr < 2):
        raise InputError("chain needs at least two spins")
    if not beta >= 0:
        raise DomainError(f"beta must be non-negative, got {beta}")
    out = -J * (n_arr - 1) * np.tanh(beta * J)
    return float(out) if out.ndim == 0 else out


def chain_level_probs(n: int, J: float, beta: float) -> np.ndarray:
    """Level probabilities by domain-wall count k (energy J (n-1-2k)) via log-sum-exp."""
    if n < 2:
        raise InputError("chain needs at least two spins")
    if not beta >= 0:
        raise DomainError(f"beta must be non-negative, got {beta}")
    k = np.arange(n)
    logg = math.log(2.0) + gammaln(n) - gammaln(k + 1) - gammaln(n - k)
    lw = logg - beta * J * (n - 1 - 2 * k)
    return np.exp(lw - logsumexp(lw))


def chain_ground_probability(n: int, J: float, beta: float) -> float:
    return float(chain_level_probs(n, J, beta)[0])


def fit_beta_to_energies(data, J: float, tol: float = 1e-8) -> float:
    """Least-squares beta for (N, mean energy) pairs against the chain closed form.

    Golden-section search on the sum of squared residuals.
    """
    arr = np.asarray(data, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2 or arr.shape[0] < 2:
        raise InputError("need at least two (N, mean energy) points")
    ns, es = arr.T
    if np.all(es == 0):
        raise FitError("mean-energy data are all zero; beta is not identifiable")

    def sse(beta):
        return float(np.sum((es - chain_mean_energy(ns, J, abs(beta))) ** 2))

    # the residual depends on beta through tanh(beta J) only, so the objective is
    # unimodal; bracket the minimum on a doubling grid before the golden search
    grid = np.concatenate(([0.0], 0.25 * 2.0 ** np.arange(12)))
    vals = [sse(b) for b in grid]
    i = int(np.argmin(vals))
    lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, len(grid) - 1)]
    res = optimize.minimize_scalar(sse, bracket=(lo, hi), method="golden",
                                   tol=tol, options={"maxiter": 10_000})
    if not res.success:
        raise FitError("golden-section search did not converge", {"beta": res.x, "sse": res.fun})
    return abs(float(res.x))
