"""Piecewise-constant propagation of dx/dt = (C(s(t)) + D) x + y.

Each step of length tau freezes the coherent part at the step midpoint and maps
x -> P x + q exactly (diagonalization) or to second order (product formula).
Step maps are built in vectorized batches and combined as affine maps, so long
ramps cost a handful of batched eigendecompositions rather than a Python loop.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable

import numpy as np

DIAG = "diagonalization"
PRODUCT = "product_formula"
METHODS = (DIAG, PRODUCT)

DEFAULT_TAU = 1e-3  # us
COND_LIMIT = 1e12
IMAG_TOL = 1e-10
SMALL_EXPONENT = 1e-8
_BATCH = 4096


class IllConditionedStep(ArithmeticError):
    """Eigenvector matrix too ill-conditioned for the diagonalization step."""


@dataclass(frozen=True, eq=False)
class LinearSystem:
    """dx/dt = (C(s) + D) x + y with C(s) = sum_k c_k(s) G_k.

    ``terms`` are fixed skew-symmetric matrices and ``coeffs`` maps an array of s
    values to an array of shape (len(s), len(terms)) in rad/us. For the
    two-spin system the first term is the transverse (driver) part and the
    second the longitudinal (problem) part; the product formula splits along them.
    """

    dim: int
    terms: tuple
    coeffs: Callable
    dissipator: np.ndarray
    source: np.ndarray
    kind: str = "generic"
    _expd_cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        for g in self.terms:
            g = np.asarray(g)
            if g.shape != (self.dim, self.dim):
                raise ValueError("coherent term has the wrong shape")
            if np.max(np.abs(g + g.T), initial=0.0) > 1e-12 * max(1.0, np.max(np.abs(g))):
                raise ValueError("coherent terms must be skew-symmetric")
        if np.shape(self.dissipator) != (self.dim, self.dim) or np.shape(self.source) != (self.dim,):
            raise ValueError("dissipator/source shape does not match dim")

    def coefficients(self, s) -> np.ndarray:
        return np.atleast_2d(np.asarray(self.coeffs(np.atleast_1d(np.asarray(s, float)))))

    def coherent(self, s):
        """C(s) for scalar s, or a stack of matrices for an array of s."""
        c = self.coefficients(s)
        mats = np.einsum("nk,kij->nij", c, np.asarray(self.terms))
        return mats[0] if np.ndim(s) == 0 else mats

    def generator(self, s):
        return self.coherent(s) + self.dissipator

    def rhs(self, x, s) -> np.ndarray:
        return self.generator(s) @ x + self.source

    @cached_property
    def term_spectra(self):
        """Real spectral pieces of each term: exp(t G) = K0 + sum_f cos(w_f t) Kc_f + sin(w_f t) Ks_f."""
        return [_real_spectral_pieces(np.asarray(g)) for g in self.terms]

    @cached_property
    def fingerprint(self) -> str:
        """Content hash used to key cached step maps (ids can be recycled)."""
        h = hashlib.sha1()
        for arr in (*self.terms, self.dissipator, self.source,
                    self.coefficients(np.linspace(0.0, 1.0, 11))):
            h.update(np.ascontiguousarray(arr, dtype=float).tobytes())
        return h.hexdigest()

    @cached_property
    def dissipator_is_diagonal(self) -> bool:
        d = self.dissipator
        return bool(np.all(d == np.diag(np.diag(d))))

    def exp_dissipator(self, tau: float) -> np.ndarray:
        """exp(tau D), by numerical diagonalization once per tau."""
        key = float(tau)
        if key not in self._expd_cache:
            self._expd_cache[key] = _expm_diag(self.dissipator, tau)
        return self._expd_cache[key]


def _real_spectral_pieces(g: np.ndarray, tol: float = 1e-9):
    # i G is Hermitian; eigenvalues come in +-w pairs with conjugate projectors
    mu, v = np.linalg.eigh(1j * g)
    scale = max(1.0, float(np.max(np.abs(mu))))
    k0 = np.zeros(g.shape)
    freqs, kc, ks = [], [], []
    used = np.zeros(len(mu), bool)
    for i in np.argsort(-mu):
        if used[i]:
            continue
        grp = np.abs(mu - mu[i]) <= tol * scale
        used |= grp
        proj = v[:, grp] @ v[:, grp].conj().T
        if abs(mu[i]) <= tol * scale:
            k0 += proj.real
        elif mu[i] > 0:
            # the -w group contributes the complex conjugate
            used |= np.abs(mu + mu[i]) <= tol * scale
            freqs.append(float(mu[i]))
            kc.append(2.0 * proj.real)
            ks.append(2.0 * proj.imag)
    d = g.shape[0]
    if not freqs:
        return np.zeros(0), k0, np.zeros((0, d, d)), np.zeros((0, d, d))
    return np.array(freqs), k0, np.array(kc), np.array(ks)


def _expm_diag(m: np.ndarray, tau: float) -> np.ndarray:
    if np.all(m == np.diag(np.diag(m))):
        return np.diag(np.exp(tau * np.diag(m)))
    lam, r = np.linalg.eig(m)
    if np.linalg.cond(r) > COND_LIMIT:
        from scipy.linalg import expm

        return expm(tau * m)
    out = (r * np.exp(tau * lam)) @ np.linalg.inv(r)
    return out.real


@dataclass(frozen=True)
class StepPlan:
    tau: float = DEFAULT_TAU
    method: str = DIAG

    def __post_init__(self):
        if not self.tau > 0:
            raise ValueError("tau must be positive")
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}; choose from {METHODS}")

    def halved(self) -> "StepPlan":
        return StepPlan(self.tau / 2.0, self.method)


# --- batched one-step maps -------------------------------------------------------


def _phi(lam: np.ndarray, tau: float) -> np.ndarray:
    """(exp(tau lam) - 1) / lam with the analytic limit near lam = 0."""
    z = tau * lam
    small = np.abs(z) < SMALL_EXPONENT
    safe = np.where(small, 1.0, lam)
    return np.where(small, tau * (1.0 + z / 2.0), np.expm1(z) / safe)


def diag_maps(sys: LinearSystem, s: np.ndarray, tau: float):
    """Exact step maps by eigendecomposition of M = C(s) + D.

    Returns (P, q, bad) where ``bad`` flags steps whose eigenvector matrix is too
    ill-conditioned (their P, q entries are undefined).
    """
    m = sys.generator(np.atleast_1d(s))
    lam, r = np.linalg.eig(m)
    rinv, bad = _safe_inverse(r)
    e = np.exp(tau * lam)
    p = (r * e[:, None, :]) @ rinv
    ry = rinv @ sys.source
    q = np.einsum("nij,nj->ni", r, _phi(lam, tau) * ry)
    resid = np.maximum(np.abs(p.imag).max(axis=(1, 2)), np.abs(q.imag).max(axis=1))
    bad |= resid > IMAG_TOL
    return p.real, q.real, bad


def _safe_inverse(r: np.ndarray):
    """Batched inverse plus a flag for ill-conditioned members.

    The 1-norm condition number ||R|| ||R^-1|| is used as a cheap stand-in for
    the 2-norm one (they agree within a factor of dim).
    """
    try:
        rinv = np.linalg.inv(r)
    except np.linalg.LinAlgError:
        rinv = np.empty_like(r)
        for i, ri in enumerate(r):
            try:
                rinv[i] = np.linalg.inv(ri)
            except np.linalg.LinAlgError:
                rinv[i] = np.inf
    cond = np.abs(r).sum(axis=1).max(axis=1) * np.abs(rinv).sum(axis=1).max(axis=1)
    bad = ~np.isfinite(cond) | (cond > COND_LIMIT)
    if bad.any():
        rinv[bad] = 0.0
    return rinv, bad


def _rotation(c: np.ndarray, tau: float) -> np.ndarray:
    """exp(tau C) for skew 3x3 C = [[0, Bz, -By], [-Bz, 0, Bx], [By, -Bx, 0]]."""
    b = np.stack([c[:, 1, 2], -c[:, 0, 2], c[:, 0, 1]], axis=1)
    w = np.linalg.norm(b, axis=1)
    safe = np.where(w > 0, w, 1.0)
    n = b / safe[:, None]
    k = np.zeros_like(c)
    k[:, 0, 1], k[:, 0, 2] = -n[:, 2], n[:, 1]
    k[:, 1, 0], k[:, 1, 2] = n[:, 2], -n[:, 0]
    k[:, 2, 0], k[:, 2, 1] = -n[:, 1], n[:, 0]
    th = w * tau
    eye = np.eye(3)[None]
    # C = -w [n]x, so exp(tau C) rotates by -w tau about n
    return eye - np.sin(th)[:, None, None] * k + (1 - np.cos(th))[:, None, None] * (k @ k)


def _term_exp(pieces, t: np.ndarray) -> np.ndarray:
    """exp(t_n G) for a stack of scalars t_n, from precomputed spectral pieces."""
    freqs, k0, kc, ks = pieces
    ph = np.outer(t, freqs)
    out = np.einsum("nf,fij->nij", np.cos(ph), kc) + np.einsum("nf,fij->nij", np.sin(ph), ks)
    return out + k0


def product_maps(sys: LinearSystem, s: np.ndarray, tau: float):
    """Second-order product-formula step maps with a trapezium source term."""
    s = np.atleast_1d(s)
    if sys.kind == "bloch":
        if not sys.dissipator_is_diagonal:
            raise ValueError("Bloch product formula needs a diagonal dissipator")
        half = np.exp(0.5 * tau * np.diag(sys.dissipator))
        rot = _rotation(sys.coherent(s), tau)
        e = half[None, :, None] * rot * half[None, None, :]
    else:
        c = sys.coefficients(s)
        outer = []
        for k, pieces in enumerate(sys.term_spectra):
            outer.append(_term_exp(pieces, 0.5 * tau * c[:, k]))
        e = np.broadcast_to(sys.exp_dissipator(tau), (len(s), sys.dim, sys.dim))
        for u in reversed(outer):
            e = u @ e @ u
    y = sys.source
    q = 0.5 * tau * (y[None, :] + e @ y)
    return np.ascontiguousarray(e), q


def step_maps(sys: LinearSystem, s: np.ndarray, tau: float, method: str):
    """(P, q, n_fallback) for a batch of midpoint s values."""
    if method == PRODUCT:
        p, q = product_maps(sys, s, tau)
        return p, q, 0
    p, q, bad = diag_maps(sys, s, tau)
    nbad = int(bad.sum())
    if nbad:
        pp, qp = product_maps(sys, np.atleast_1d(s)[bad], tau)
        p[bad], q[bad] = pp, qp
    return p, q, nbad


def step_diag(sys: LinearSystem, x, s: float, tau: float) -> np.ndarray:
    """One exact step R e^{tau L} R^-1 x + R L^-1 (e^{tau L} - 1) R^-1 y."""
    p, q, bad = diag_maps(sys, np.array([s], float), tau)
    if bad[0]:
        raise IllConditionedStep(
            f"eigenvector matrix ill-conditioned at s={s}; use the product formula")
    return p[0] @ np.asarray(x, float) + q[0]


def step_product_bloch(sys: LinearSystem, x, s: float, tau: float) -> np.ndarray:
    if sys.dim != 3 or sys.kind != "bloch":
        raise ValueError("step_product_bloch needs a dim-3 Bloch system")
    p, q = product_maps(sys, np.array([s], float), tau)
    return p[0] @ np.asarray(x, float) + q[0]


def step_product_twospin(sys: LinearSystem, x, s: float, tau: float) -> np.ndarray:
    if sys.dim != 15:
        raise ValueError("step_product_twospin needs the dim-15 two-spin system")
    p, q = product_maps(sys, np.array([s], float), tau)
    return p[0] @ np.asarray(x, float) + q[0]


# --- affine map algebra ----------------------------------------------------------


def compose(p: np.ndarray, q: np.ndarray):
    """Combine step maps applied in order 0, 1, ..., n-1 into a single map."""
    p = np.asarray(p)
    q = np.asarray(q)
    if len(p) == 0:
        d = q.shape[-1] if q.ndim == 2 else p.shape[-1]
        return np.eye(d), np.zeros(d)
    while len(p) > 1:
        if len(p) % 2:
            last_p, last_q = p[-1], q[-1]
            p, q = p[:-1], q[:-1]
        else:
            last_p = None
        early_p, late_p = p[0::2], p[1::2]
        early_q, late_q = q[0::2], q[1::2]
        q = np.einsum("nij,nj->ni", late_p, early_q) + late_q
        p = late_p @ early_p
        if last_p is not None:
            p = np.concatenate([p, last_p[None]])
            q = np.concatenate([q, last_q[None]])
    return p[0], q[0]


def then(first, second):
    """Map applying ``first`` and then ``second``."""
    p1, q1 = first
    p2, q2 = second
    return p2 @ p1, p2 @ q1 + q2


def power(p: np.ndarray, q: np.ndarray, n: int):
    """The map (p, q) applied n times, by binary exponentiation."""
    d = p.shape[0]
    result = (np.eye(d), np.zeros(d))
    base = (p, q)
    while n > 0:
        if n & 1:
            result = then(result, base)
        n >>= 1
        if n:
            base = then(base, base)
    return result


# --- protocol propagation --------------------------------------------------------


@dataclass(frozen=True)
class PiecewiseLinearPath:
    """Generic s(t) path given as (s_start, s_stop, duration) segments."""

    segs: tuple

    def segments(self):
        return [seg for seg in self.segs if seg[2] > 0]

    @property
    def t_end(self) -> float:
        return float(sum(seg[2] for seg in self.segs))


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    fallback_steps: int = 0
    n_steps: int = 0

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]


def _segment_steps(duration: float, tau: float):
    n = max(1, math.ceil(duration / tau - 1e-9))
    return n, duration / n


def _full_ramp(sys, s0, s1, n, tau, method, store):
    """Whole-ramp map. Both sweep directions share their step maps (the midpoints
    of s0 -> s1 are those of s1 -> s0 in reverse), so both are built at once."""
    lo, hi = min(s0, s1), max(s0, s1)
    key = (sys.fingerprint, method, lo, hi, n, tau)
    if key not in store:
        eye = (np.eye(sys.dim), np.zeros(sys.dim))
        up, down = eye, eye
        nbad = 0
        for a in range(0, n, _BATCH):
            b = min(n, a + _BATCH)
            mid = lo + (hi - lo) * (np.arange(a, b) + 0.5) / n
            p, q, nb = step_maps(sys, mid, tau, method)
            up = then(up, compose(p, q))
            down = then(compose(p[::-1], q[::-1]), down)
            nbad += nb
        store[key] = {"up": up, "down": down, "nbad": nbad}
    entry = store[key]
    return entry["up" if s1 > s0 else "down"], entry["nbad"]


def _segment_map(sys, s0, s1, n, k0, k1, tau, method, cache):
    """Affine map for steps k0..k1-1 of a segment with n steps from s0 to s1."""
    if k1 <= k0:
        return (np.eye(sys.dim), np.zeros(sys.dim)), 0
    if s0 != s1 and k0 == 0 and k1 == n:
        return _full_ramp(sys, s0, s1, n, tau, method, cache)
    key = (sys.fingerprint, method, s0, s1, n, k0, k1, tau)
    if key in cache:
        return cache[key]
    if s0 == s1:
        p, q, nbad = step_maps(sys, np.array([s0]), tau, method)
        out = (power(p[0], q[0], k1 - k0), nbad * (k1 - k0))
    else:
        total = (np.eye(sys.dim), np.zeros(sys.dim))
        nbad = 0
        for a in range(k0, k1, _BATCH):
            b = min(k1, a + _BATCH)
            mid = s0 + (s1 - s0) * (np.arange(a, b) + 0.5) / n
            p, q, nb = step_maps(sys, mid, tau, method)
            total = then(total, compose(p, q))
            nbad += nb
        out = (total, nbad)
    cache[key] = out
    return out


def propagate(sys: LinearSystem, plan: StepPlan, protocol, x0, observers=None,
              cache: dict | None = None) -> Trajectory:
    """Propagate x0 through the protocol's s(t) path.

    States are recorded at the observer times (default: t_end), each snapped to
    the nearest step boundary. Constant-s stretches reuse one step map raised to
    a power, which equals stepping through them one by one.
    """
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (sys.dim,):
        raise ValueError(f"initial state has shape {x0.shape}, expected ({sys.dim},)")
    t_end = float(protocol.t_end)
    obs = np.array([t_end] if observers is None else observers, dtype=float).ravel()
    if np.any(obs < 0) or np.any(obs > t_end * (1 + 1e-12) + 1e-15):
        raise ValueError(f"observer times must lie in [0, {t_end}]")
    segs = protocol.segments()
    if not segs:
        return Trajectory(np.zeros(len(obs)), np.tile(x0, (len(obs), 1)))

    # place each observer on a (segment, step) boundary
    starts = np.cumsum([0.0] + [d for _, _, d in segs])
    layout = [_segment_steps(d, plan.tau) for _, _, d in segs]
    marks = []  # (segment index, step index)
    for t in obs:
        i = int(np.clip(np.searchsorted(starts, t, side="right") - 1, 0, len(segs) - 1))
        n, tau_i = layout[i]
        k = int(np.clip(round((t - starts[i]) / tau_i), 0, n))
        marks.append((i, k))

    cache = {} if cache is None else cache
    order = sorted(range(len(obs)), key=lambda j: marks[j])
    out = np.empty((len(obs), sys.dim))
    times = np.empty(len(obs))
    x = x0.copy()
    fallback = 0
    j = 0
    for i, ((s0, s1, _), (n, tau_i)) in enumerate(zip(segs, layout)):
        k = 0
        while j < len(order) and marks[order[j]][0] == i:
            target = marks[order[j]][1]
            (p, q), nb = _segment_map(sys, s0, s1, n, k, target, tau_i, plan.method, cache)
            x = p @ x + q
            fallback += nb
            k = target
            out[order[j]] = x
            times[order[j]] = starts[i] + k * tau_i
            j += 1
        (p, q), nb = _segment_map(sys, s0, s1, n, k, n, tau_i, plan.method, cache)
        x = p @ x + q
        fallback += nb
    return Trajectory(times, out, fallback, sum(n for n, _ in layout))


def self_convergence(sys: LinearSystem, plan: StepPlan, protocol, x0) -> float:
    """Max-norm change of the final state when tau is halved once."""
    a = propagate(sys, plan, protocol, x0).final
    b = propagate(sys, plan.halved(), protocol, x0).final
    return float(np.max(np.abs(a - b)))
