"""Single-qubit noise model fitting from Choi matrices.

Choi convention here is reference (x) output,
``M = 1/2 sum_ij |i><j| (x) Phi(|i><j|)``, so ``M[(i,a),(j,b)] = Phi(|i><j|)[a,b] / 2``
and tracing out the output leaves I/2. Indices M11..M44 are 1-based.

The model combines depolarizing (eps), amplitude damping (eta), Z-dephasing
(delta) and X-dephasing (chi) as one simultaneous generator with unit duration,
followed by a phase rotation exp(-i theta Z / 2)^dagger that multiplies the
|0><1| coherence by exp(i theta). In Bloch coordinates the generator damps
z at rate s = eps + eta + chi towards eta / s, x at rate a = eps + delta + eta/2
and y at rate a + chi.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.optimize import least_squares

from .metrics import fidelity
from .opalg import HilbertSpace, Superoperator, X, hermitize

SPACE = HilbertSpace([2])


@dataclass
class NoiseParams:
    eps: float = 0.0
    eta: float = 0.0
    delta: float = 0.0
    theta: float = 0.0
    chi: float = 0.0
    residual: float = 0.0
    flags: list[str] = field(default_factory=list)
    solver: str = ""

    def as_array(self) -> np.ndarray:
        return np.array([self.eps, self.eta, self.delta, self.theta, self.chi])

    def to_dict(self) -> dict:
        return asdict(self)


def choi_ref_out(phi: Superoperator) -> np.ndarray:
    """Choi matrix of a qubit map in reference (x) output order."""
    d = phi.dim
    c = phi.choi().reshape(d, d, d, d)  # [a, i, b, j]
    return c.transpose(1, 0, 3, 2).reshape(d * d, d * d)


def superop_from_choi_ref_out(m: np.ndarray) -> Superoperator:
    c = np.asarray(m, dtype=complex).reshape(2, 2, 2, 2).transpose(1, 0, 3, 2).reshape(4, 4)
    return Superoperator.from_choi(c, SPACE)


def check_choi(m: np.ndarray, tol: float = 1e-2) -> np.ndarray:
    """Validate shape, unit trace and the reference (x) output ordering."""
    m = np.asarray(m, dtype=complex)
    if m.shape != (4, 4):
        raise ValueError(f"expected a 4x4 single-qubit Choi matrix, got {m.shape}")
    if abs(np.trace(m) - 1) > tol:
        raise ValueError(f"Choi matrix has trace {np.trace(m)!r}, expected 1")
    # trace-preserving maps leave I/2 on the reference factor
    red = np.trace(m.reshape(2, 2, 2, 2), axis1=1, axis2=3)
    if np.abs(red - np.eye(2) / 2).max() > tol:
        raise ValueError("Choi matrix does not reduce to I/2 on its first factor; "
                         "expected reference (x) output ordering")
    return m


def identity_fingerprint_ok(tol: float = 1e-12) -> bool:
    """The identity channel must give M11 = M44 = M14 = 1/2 in this ordering."""
    m = choi_ref_out(Superoperator.identity(SPACE))
    return all(abs(m[i, j] - 0.5) < tol for i, j in ((0, 0), (3, 3), (0, 3)))


def extract_chi(m: np.ndarray, tol: float = 1e-12) -> tuple[float, bool]:
    """chi = ln((|M14| + |M23|) / (|M14| - |M23|)); (0, True) when degenerate."""
    m = np.asarray(m, dtype=complex)
    if m.shape != (4, 4):
        raise ValueError(f"expected a 4x4 Choi matrix, got {m.shape}")
    a, b = abs(m[0, 3]), abs(m[1, 2])
    if a <= b + tol:
        return 0.0, True
    return math.log((a + b) / (a - b)), False


def _diag_model(s: float, zinf: float) -> tuple[float, float]:
    e = math.exp(-s)
    return 0.25 * (1 + zinf) + 0.25 * (1 - zinf) * e, 0.25 * (1 - zinf) + 0.25 * (1 + zinf) * e


def reconstruct_choi(p: NoiseParams) -> np.ndarray:
    """Choi matrix (reference (x) output) of the model with parameters ``p``."""
    s = p.eps + p.eta + p.chi
    zinf = p.eta / s if s > 0 else 0.0
    m11, m44 = _diag_model(s, zinf)
    a = p.eps + p.delta + p.eta / 2
    m14 = 0.25 * math.exp(-a) * (1 + math.exp(-p.chi)) * np.exp(1j * p.theta)
    m23 = 0.25 * math.exp(-a) * (1 - math.exp(-p.chi)) * np.exp(-1j * p.theta)
    m = np.zeros((4, 4), dtype=complex)
    m[0, 0], m[1, 1], m[2, 2], m[3, 3] = m11, 0.5 - m11, 0.5 - m44, m44
    m[0, 3], m[3, 0] = m14, np.conj(m14)
    m[1, 2], m[2, 1] = m23, np.conj(m23)
    return m


def is_physical(m: np.ndarray, tol: float = 1e-10) -> bool:
    return bool(np.linalg.eigvalsh(hermitize(m)).min() >= -tol)


def fit_params(m: np.ndarray, residual_tol: float = 1e-6) -> NoiseParams:
    """Fit (eps, eta, delta, theta, chi) to a single-qubit Choi matrix."""
    if not identity_fingerprint_ok():
        raise RuntimeError("Choi ordering convention mismatch")
    m = check_choi(m)
    flags = []
    chi, degenerate = extract_chi(m)
    if degenerate:
        flags.append("chi-degenerate")
    m11, m44 = m[0, 0].real, m[3, 3].real

    def resid(x):
        eps, eta = x
        s = eps + eta + chi
        zinf = eta / s if s > 0 else 0.0
        f11, f44 = _diag_model(s, zinf)
        return [f11 - m11, f44 - m44]

    # deterministic bounded solve from the origin with a fixed budget
    sol = least_squares(resid, x0=[0.0, 0.0], bounds=([0.0, 0.0], [np.inf, np.inf]),
                        method="trf", xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=2000)
    x = [float(v) for v in sol.x]
    # trf keeps iterates strictly interior; snap to the bound when that is no worse
    for i in range(2):
        trial = list(x)
        trial[i] = 0.0
        if np.linalg.norm(resid(trial)) <= np.linalg.norm(resid(x)) + 1e-12:
            x = trial
    eps, eta = x
    theta = float(np.angle(m[0, 3]))
    total = abs(m[0, 3]) + abs(m[1, 2])
    delta = -math.log(2 * total) - eta / 2 - eps if total > 0 else math.inf
    if delta < -1e-9:
        flags.append(f"delta-clamped:{delta:.3e}")
    delta = delta if delta > 0 else 0.0
    residual = float(np.linalg.norm(resid([eps, eta])))
    if residual > residual_tol:
        flags.append(f"fit-residual:{residual:.3e}")
        warnings.warn(f"noise-model fit residual {residual:.3e} exceeds {residual_tol:.1e}",
                      RuntimeWarning, stacklevel=2)
    solver = f"least_squares trf x0=(0,0) max_nfev=2000 nfev={sol.nfev}"
    return NoiseParams(eps, eta, delta, theta, chi, residual, flags, solver)


def clean_channel(m: np.ndarray) -> Superoperator:
    """Pure X-dephasing channel with the chi extracted from ``m``."""
    chi, degenerate = extract_chi(check_choi(m))
    if degenerate:
        warnings.warn("X-dephasing ratio is degenerate; chi set to 0", RuntimeWarning,
                      stacklevel=2)
    q = (1 - math.exp(-chi)) / 2
    return (1 - q) * Superoperator.identity(SPACE) + q * Superoperator.conjugation(X, SPACE)


def model_fidelity(m_model: np.ndarray, m_data: np.ndarray) -> float:
    """Fidelity between two normalized Choi matrices."""
    return fidelity(hermitize(np.asarray(m_model)), hermitize(np.asarray(m_data)))


def load_choi(path: str) -> np.ndarray:
    """Read a Choi matrix from matrix JSON or a CSV of 16 complex entries (row-major)."""
    import json

    from .opalg import from_json_matrix
    if str(path).lower().endswith(".json"):
        with open(path) as fh:
            return from_json_matrix(json.load(fh))[0]
    with open(path) as fh:
        tokens = [t.strip() for t in fh.read().replace("\n", ",").split(",") if t.strip()]
    if len(tokens) != 16:
        raise ValueError(f"expected 16 complex entries, found {len(tokens)}")
    return np.array([complex(t.replace(" ", "").replace("i", "j")) for t in tokens]).reshape(4, 4)
