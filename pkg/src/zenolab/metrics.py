"""Distances and order quantities for states and channels."""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .config import DEFAULT_SEED, TOL, Tolerances
from .opalg import Superoperator, as_density, hermitize, matrix_log_psd, random_pure


def relative_entropy(rho: np.ndarray, sigma: np.ndarray, base: float = 2.0,
                     tol: Tolerances = TOL) -> float:
    """Umegaki relative entropy D(rho||sigma), +inf when supp rho is not inside supp sigma.

    ``base`` is 2 (bits) by default; pass ``np.e`` for nats.
    """
    rho = as_density(rho, tol)
    sigma = as_density(sigma, tol)
    w, v = np.linalg.eigh(sigma)
    null = v[:, w <= tol.psd]
    if null.shape[1] and np.linalg.norm(null.conj().T @ rho @ null) > 1e-9:
        return np.inf
    val = np.trace(rho @ (matrix_log_psd(rho, tol) - matrix_log_psd(sigma, tol))).real
    return max(val, 0.0) / np.log(base)


def trace_distance(rho: np.ndarray, sigma: np.ndarray) -> float:
    diff = hermitize(np.asarray(rho, dtype=complex) - np.asarray(sigma, dtype=complex))
    return float(0.5 * np.abs(np.linalg.eigvalsh(diff)).sum())


def _psd_sqrt(m: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(hermitize(m))
    return (v * np.sqrt(np.clip(w, 0, None))) @ v.conj().T


def fidelity(rho: np.ndarray, sigma: np.ndarray) -> float:
    """Uhlmann fidelity (tr sqrt(sqrt(rho) sigma sqrt(rho)))^2."""
    s = _psd_sqrt(rho)
    w = np.linalg.eigvalsh(hermitize(s @ np.asarray(sigma, dtype=complex) @ s))
    return float(min(np.sqrt(np.clip(w, 0, None)).sum() ** 2, 1.0))


def choi(phi: Superoperator) -> np.ndarray:
    """(Phi x Id)(|Omega><Omega|) with |Omega> normalized; factor order output (x) reference."""
    return phi.choi()


def process_fidelity(phi: Superoperator, psi: Superoperator) -> float:
    return fidelity(choi(phi), choi(psi))


# ---------------------------------------------------------------------------
# diamond norm bracket

@dataclass(frozen=True)
class DiamondBracket:
    lower: float
    upper: float
    witness_state: np.ndarray

    def __post_init__(self):
        if not 0 <= self.lower <= self.upper:
            raise ValueError(f"inverted bracket [{self.lower}, {self.upper}]")

    @property
    def mid(self) -> float:
        return 0.5 * (self.lower + self.upper)


def _apply_extended(t: np.ndarray, psi: np.ndarray) -> np.ndarray:
    """(Xi x Id)(|psi><psi|) for Xi given as a reshaped superoperator t[q, p, j, i]."""
    d = t.shape[0]
    m = psi.reshape(d, d)
    x = np.einsum("qpji,ia,jb->paqb", t, m, m.conj(), optimize=True)
    return hermitize(x.reshape(d * d, d * d))


def _apply_extended_adjoint(ta: np.ndarray, s: np.ndarray) -> np.ndarray:
    """(Xi^dagger x Id)(S) for the adjoint given as ta[j, i, q, p]."""
    d = ta.shape[0]
    y = np.einsum("jiqp,paqb->iajb", ta, s.reshape(d, d, d, d), optimize=True)
    return hermitize(y.reshape(d * d, d * d))


def _seesaw(t, ta, psi, max_iter, rtol):
    best = -1.0
    for _ in range(max_iter):
        w, v = np.linalg.eigh(_apply_extended(t, psi))
        val = float(np.abs(w).sum())
        if val <= best * (1 + rtol) + 1e-15:
            best = max(best, val)
            break
        best = val
        s = (v * np.sign(w)) @ v.conj().T
        _, u = np.linalg.eigh(_apply_extended_adjoint(ta, s))
        psi = u[:, -1]
    return best, psi


def diamond_upper(xi: Superoperator) -> float:
    """||tr_out |J| ||_inf with J the unnormalized Choi matrix.

    Feasible point Y0 = Y1 = |J| of the standard dual program, so it is a valid
    upper bound; it never exceeds ||J||_1 = d ||choi||_1.
    """
    d = xi.dim
    j = hermitize(xi.choi() * d)
    w, v = np.linalg.eigh(j)
    absj = (v * np.abs(w)) @ v.conj().T
    red = np.trace(absj.reshape(d, d, d, d), axis1=0, axis2=2)
    return float(np.linalg.eigvalsh(hermitize(red)).max())


def diamond_bracket(xi: Superoperator, restarts: int = 16, seed: int = DEFAULT_SEED,
                    max_iter: int = 500, rtol: float = 1e-13) -> DiamondBracket:
    """Bracket [lower, upper] on ||Xi||_diamond for a Hermiticity-preserving map.

    The lower bound is a see-saw ascent over pure inputs on system (x) ancilla,
    started from the maximally entangled state and ``restarts`` random states.
    """
    if xi.in_space.total_dim != xi.out_space.total_dim:
        raise ValueError("diamond_bracket needs a map with equal input and output dimension")
    if not xi.is_hermiticity_preserving(1e-9):
        raise ValueError("map is not Hermiticity-preserving")
    d = xi.dim
    if np.abs(xi.matrix).max() == 0:
        return DiamondBracket(0.0, 0.0, np.eye(d).reshape(-1) / np.sqrt(d))
    t = xi.matrix.reshape(d, d, d, d)
    ta = xi.matrix.conj().T.reshape(d, d, d, d)
    rng = np.random.default_rng(seed)
    seeds = [np.eye(d, dtype=complex).reshape(-1) / np.sqrt(d)]
    seeds += [random_pure(d * d, rng) for _ in range(restarts)]
    best, witness = -1.0, seeds[0]
    for psi in seeds:
        val, psi = _seesaw(t, ta, psi, max_iter, rtol)
        if val > best:
            best, witness = val, psi
    upper = diamond_upper(xi)
    # the two bounds can cross only by rounding
    lower = min(best, upper)
    return DiamondBracket(lower, upper, witness)


# ---------------------------------------------------------------------------
# cp order

def cp_order_constant(phi: Superoperator, psi: Superoperator, tol: float = 1e-9) -> float:
    """Smallest c >= 0 with c Psi - Phi completely positive, or +inf."""
    jphi = hermitize(choi(phi))
    jpsi = hermitize(choi(psi))
    w, v = np.linalg.eigh(jpsi)
    keep = w > tol * max(1.0, w.max())
    vs, vn = v[:, keep], v[:, ~keep]
    if vn.shape[1]:
        cross = vn.conj().T @ jphi @ vs
        null = vn.conj().T @ jphi @ vn
        if np.linalg.norm(cross) > tol or np.linalg.eigvalsh(hermitize(null)).max() > tol:
            return np.inf
    if not keep.any():
        return 0.0
    isq = vs / np.sqrt(w[keep])
    m = hermitize(isq.conj().T @ jphi @ isq)
    return float(max(np.linalg.eigvalsh(m).max(), 0.0))


def pimsner_popa_cb(e: Superoperator) -> float:
    """Complete Pimsner-Popa index: smallest c with c E - Id completely positive."""
    return cp_order_constant(Superoperator.identity(e.in_space), e)


def is_trace_symmetric(s: Superoperator, tol: float = 1e-10) -> bool:
    """Detailed balance with respect to the maximally mixed state.

    Self-adjointness in the Hilbert-Schmidt inner product, which the
    column-stacking map turns into Hermiticity of the matrix.
    """
    return bool(np.linalg.norm(s.matrix - s.matrix.conj().T) <= tol * max(1.0, s.norm()))


# ---------------------------------------------------------------------------
# decay rates

class DecayFit(NamedTuple):
    rate: float
    intercept: float
    residual: float


def decay_rate_fit(t: Sequence[float], values: Sequence[float],
                   window: tuple[float, float] | None = None) -> DecayFit:
    """Least-squares slope of ln(values) against t on the window; rate = -slope."""
    t = np.asarray(t, dtype=float)
    y = np.asarray(values, dtype=float)
    if window is not None:
        sel = (t >= window[0]) & (t <= window[1])
        t, y = t[sel], y[sel]
    if t.size < 3:
        raise ValueError("decay_rate_fit needs at least 3 samples in the window")
    if np.any(y <= 0):
        raise ValueError("decay_rate_fit needs positive values")
    a = np.vstack([t, np.ones_like(t)]).T
    coef, *_ = np.linalg.lstsq(a, np.log(y), rcond=None)
    resid = float(np.linalg.norm(a @ coef - np.log(y)))
    return DecayFit(float(-coef[0]), float(coef[1]), resid)
