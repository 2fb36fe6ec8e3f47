"""Classical master equation dP/dt = W P on diagonal (population) subspaces.

State order is (up, down) for one spin and (uu, ud, du, dd) for two spins or for
a four-state ground subspace. Rates are per us.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm, null_space

from .errors import DegenerateChainError, DomainError, InputError

COLSUM_TOL = 1e-12
EIG_COND_LIMIT = 1e5
DRIFT_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class RateMatrix:
    """Generator with zero column sums and non-negative off-diagonal entries."""

    W: np.ndarray
    kind: str = "generic"
    rates: tuple = ()

    def __post_init__(self):
        w = np.array(self.W, dtype=float)
        if w.ndim != 2 or w.shape[0] != w.shape[1]:
            raise InputError("rate matrix must be square")
        off = w - np.diag(np.diag(w))
        if np.any(off < 0):
            raise DomainError("off-diagonal rates must be non-negative")
        scale = max(1.0, float(np.abs(w).max(initial=0.0)))
        if np.any(np.abs(w.sum(axis=0)) > COLSUM_TOL * scale):
            raise DomainError("rate matrix columns must sum to zero")
        w.setflags(write=False)
        object.__setattr__(self, "W", w)

    @property
    def dim(self) -> int:
        return self.W.shape[0]

    @classmethod
    def from_offdiagonal(cls, rates: np.ndarray, kind: str = "generic") -> "RateMatrix":
        """Build W from a matrix of transition rates r[i, j] (j -> i)."""
        r = np.array(rates, dtype=float)
        np.fill_diagonal(r, 0.0)
        return cls(r - np.diag(r.sum(axis=0)), kind)


def _check_rates(vals):
    vals = tuple(float(v) for v in vals)
    if any(not v >= 0 for v in vals):
        raise DomainError("rates must be non-negative")
    return vals


def build_two_level(g1: float, g2: float) -> RateMatrix:
    """W = [[-g2, g1], [g2, -g1]] on (p_up, p_down)."""
    g1, g2 = _check_rates((g1, g2))
    return RateMatrix(np.array([[-g2, g1], [g2, -g1]]), "two_level", (g1, g2))


def build_four_level(rates) -> RateMatrix:
    """Population block of the two-spin dissipators on (uu, ud, du, dd).

    Only transitions to and from uu are present: g1 dd->uu, g2 uu->dd,
    g4 ud->uu, g5 uu->ud, g6 du->uu, g7 uu->du. g3 (dephasing) has no
    population effect.
    """
    g = rates.as_tuple() if hasattr(rates, "as_tuple") else tuple(rates)
    if len(g) != 7:
        raise InputError("need seven rates g1..g7")
    g1, g2, g3, g4, g5, g6, g7 = _check_rates(g)
    w = np.array([
        [-g2 - g5 - g7, g4, g6, g1],
        [g5, -g4, 0.0, 0.0],
        [g7, 0.0, -g6, 0.0],
        [g2, 0.0, 0.0, -g1],
    ])
    return RateMatrix(w, "four_level", (g1, g2, g3, g4, g5, g6, g7))


def _check_prob(p0, dim: int) -> np.ndarray:
    p = np.asarray(p0, dtype=float)
    if p.shape != (dim,):
        raise InputError(f"probability vector must have {dim} entries")
    if np.any(p < -1e-12) or abs(p.sum() - 1.0) > 1e-12:
        raise DomainError("initial vector is not a probability distribution")
    return p


def transition_matrix(W: RateMatrix, t: float) -> np.ndarray:
    """exp(t W); eigendecomposition when well conditioned, scaling-and-squaring otherwise."""
    if not t >= 0:
        raise DomainError("time must be non-negative")
    w = W.W
    if t == 0:
        return np.eye(W.dim)
    lam, r = np.linalg.eig(w)
    try:
        rinv = np.linalg.inv(r)
        cond = np.linalg.norm(r, 1) * np.linalg.norm(rinv, 1)
    except np.linalg.LinAlgError:
        cond = np.inf
    if cond < EIG_COND_LIMIT:
        # eig can be inaccurate near defective matrices even when r looks well
        # conditioned, so the decomposition is checked before it is trusted
        scale = max(1.0, float(np.abs(w).max()))
        recon = np.abs((r * lam) @ rinv - w).max()
        m = (r * np.exp(t * lam)) @ rinv
        if recon < 1e-12 * scale and np.abs(m.imag).max() < 1e-10:
            m = m.real
            if m.min() >= -1e-12 and np.abs(m.sum(axis=0) - 1).max() < 1e-12:
                return m
    return expm(t * w)


def propagate_markov(W: RateMatrix, p0, t: float) -> np.ndarray:
    p = _check_prob(p0, W.dim)
    out = transition_matrix(W, t) @ p
    drift = abs(out.sum() - 1.0)
    if drift > 1e-10:
        raise DomainError(f"probability drifted by {drift:.2e} during propagation")
    return out / out.sum()


def markov_trajectory(W: RateMatrix, p0, times) -> np.ndarray:
    return np.array([propagate_markov(W, p0, t) for t in np.asarray(times, float)])


def stationary(W: RateMatrix, check: bool = True) -> np.ndarray:
    """Normalized kernel vector of W."""
    scale = max(1.0, float(np.abs(W.W).max(initial=0.0)))
    basis = null_space(W.W, rcond=1e-12)
    if basis.shape[1] == 0:
        # numerically full rank; fall back to the smallest singular vector
        _, _, vt = np.linalg.svd(W.W)
        basis = vt[-1:].T
    if basis.shape[1] > 1:
        raise DegenerateChainError(
            f"rate matrix has a {basis.shape[1]}-dimensional kernel", basis)
    v = basis[:, 0]
    v = v / v.sum()
    v[np.abs(v) < 1e-15 * scale] = 0.0
    if check and W.kind == "four_level":
        resid = detailed_balance_residuals(W.rates, v)
        if max(abs(r) for r in resid) > 1e-10 * scale:
            raise DomainError(f"stationary vector violates balance identities: {resid}")
    return v


def detailed_balance_residuals(rates, p) -> tuple:
    """(g2 p_uu - g1 p_dd, g5 p_uu - g4 p_ud, g7 p_uu - g6 p_du)."""
    g1, g2, _, g4, g5, g6, g7 = rates
    return (g2 * p[0] - g1 * p[3], g5 * p[0] - g4 * p[1], g7 * p[0] - g6 * p[2])


def rates_two_level_from_gibbs(p_up: float, base_rate: float):
    """(g1, g2) with g1 = base and g2 = base p_down / p_up (balance g2 p_up = g1 p_down)."""
    if not 0 < p_up <= 1:
        raise DomainError("p_up must lie in (0, 1]")
    return base_rate, base_rate * (1.0 - p_up) / p_up
