"""Decay+drift Lindbladians, their semigroups and fixed-point projectors.

Sign convention: a generator ``L`` evolves states by ``exp(-t L)``, with
``L = i[H, .] + sum_i gamma_i S_i`` and each ``S_i`` trace-annihilating.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.linalg

from .config import TOL, Tolerances
from .opalg import (
    HilbertSpace,
    Superoperator,
    as_density,
    devectorize,
    from_json_matrix,
    hermitize,
    matrix_exp,
    pauli_string,
    replace_with_mixed,
    vectorize,
)


class GeneratorError(ValueError):
    """Raised when a generator or its spectrum is not physically valid."""


# ---------------------------------------------------------------------------
# building blocks

def hamiltonian_part(h: np.ndarray, space: HilbertSpace | None = None,
                     tol: Tolerances = TOL) -> Superoperator:
    """Superoperator of rho -> i[H, rho]."""
    h = np.asarray(h, dtype=complex)
    if np.linalg.norm(h - h.conj().T) > tol.herm * max(1.0, np.linalg.norm(h)):
        raise GeneratorError("Hamiltonian is not Hermitian")
    d = h.shape[0]
    space = space or HilbertSpace([d])
    eye = np.eye(d)
    return Superoperator(1j * (np.kron(eye, h) - np.kron(h.T, eye)), space)


def depolarize_sites(space: HilbertSpace, sites: Sequence[int]) -> Superoperator:
    """Conditional expectation replacing the given factors by the maximally mixed state."""
    sites = list(sites)
    return Superoperator.from_function(lambda r: replace_with_mixed(r, space.factors, sites), space)


def complete_depolarize(space: HilbertSpace) -> Superoperator:
    return depolarize_sites(space, range(len(space)))


def depolarizing_channel(space: HilbertSpace, p: float) -> Superoperator:
    """rho -> (1-p) rho + p tr(rho) I/d."""
    return (1 - p) * Superoperator.identity(space) + p * complete_depolarize(space)


def pinching(space: HilbertSpace, p: np.ndarray) -> Superoperator:
    """rho -> (rho + P rho P^dagger)/2 for a unitary involution P."""
    return 0.5 * (Superoperator.identity(space) + Superoperator.conjugation(p, space))


def _is_idempotent(e: Superoperator, tol: float = 1e-8) -> bool:
    return np.linalg.norm(e.matrix @ e.matrix - e.matrix) <= tol * max(1.0, np.linalg.norm(e.matrix))


def replacement_generator(e_target: Superoperator, tol: float = 1e-8) -> Superoperator:
    """S = Id - E for a CPTP projector E, so exp(-tS) = e^{-t} Id + (1 - e^{-t}) E."""
    if not _is_idempotent(e_target, tol):
        raise GeneratorError("replacement target is not idempotent")
    if not e_target.is_cptp(tol):
        raise GeneratorError("replacement target is not CPTP")
    return Superoperator.identity(e_target.in_space) - e_target


def dephasing_generator(p: np.ndarray, space: HilbertSpace | None = None,
                        tol: float = 1e-10) -> Superoperator:
    """S(rho) = rho - P rho P^dagger for a unitary involution P."""
    p = np.asarray(p, dtype=complex)
    d = p.shape[0]
    if np.linalg.norm(p @ p.conj().T - np.eye(d)) > tol:
        raise GeneratorError("dephasing operator is not unitary")
    if np.linalg.norm(p @ p - np.eye(d)) > tol:
        raise GeneratorError("dephasing operator is not an involution; use a pinching projector")
    space = space or HilbertSpace([d])
    return Superoperator.identity(space) - Superoperator.conjugation(p, space)


def gksl_dissipator(jumps: Sequence[np.ndarray], space: HilbertSpace) -> Superoperator:
    """S(rho) = -sum_k (V rho V^dagger - {V^dagger V, rho}/2)."""
    d = space.total_dim
    eye = np.eye(d)
    m = np.zeros((d * d, d * d), dtype=complex)
    for v in jumps:
        v = np.asarray(v, dtype=complex)
        vv = v.conj().T @ v
        m -= np.kron(v.conj(), v) - 0.5 * np.kron(eye, vv) - 0.5 * np.kron(vv.T, eye)
    return Superoperator(m, space)


# ---------------------------------------------------------------------------
# specs

@dataclass(frozen=True)
class LindbladSpec:
    space: HilbertSpace
    hamiltonian: np.ndarray
    stochastic_terms: tuple[tuple[Superoperator, float], ...] = ()
    # the JSON description this spec was built from, if any
    model: dict | None = field(default=None, compare=False)

    def __post_init__(self):
        h = np.array(self.hamiltonian, dtype=complex)
        d = self.space.total_dim
        if h.shape != (d, d):
            raise GeneratorError(f"Hamiltonian shape {h.shape} does not match dimension {d}")
        if np.linalg.norm(h - h.conj().T) > TOL.herm * max(1.0, np.linalg.norm(h)):
            raise GeneratorError("Hamiltonian is not Hermitian")
        h.setflags(write=False)
        object.__setattr__(self, "hamiltonian", h)
        terms = tuple((s, float(w)) for s, w in self.stochastic_terms)
        eye = vectorize(np.eye(d))
        for s, w in terms:
            if not np.isfinite(w) or w < 0:
                raise GeneratorError(f"stochastic weight must be finite and >= 0, got {w}")
            if s.matrix.shape != (d * d, d * d):
                raise GeneratorError("stochastic generator acts on the wrong space")
            # tr S(rho) = <I, S rho> vanishes for every rho iff S^dagger(I) = 0
            if np.linalg.norm(s.matrix.conj().T @ eye) > 1e-9 * max(1.0, s.norm()):
                raise GeneratorError("stochastic generator does not annihilate the trace")
        object.__setattr__(self, "stochastic_terms", terms)

    def with_weights(self, scale: float) -> "LindbladSpec":
        """Copy with every stochastic weight multiplied by ``scale``."""
        return LindbladSpec(self.space, self.hamiltonian,
                            tuple((s, w * scale) for s, w in self.stochastic_terms), self.model)

    def stochastic_part(self) -> Superoperator:
        out = Superoperator.zero(self.space)
        for s, w in self.stochastic_terms:
            out = out + w * s
        return out


def assemble(spec: LindbladSpec) -> Superoperator:
    """L = i[H, .] + sum_i gamma_i S_i."""
    return hamiltonian_part(spec.hamiltonian, spec.space) + spec.stochastic_part()


def _targets(target) -> list[int]:
    return [int(target)] if np.isscalar(target) else [int(t) for t in target]


def spec_from_model(model: dict) -> LindbladSpec:
    """Build a spec from the JSON model format.

    ``{"factors": [...], "hamiltonian_terms": [{"pauli_string", "coefficient"}],
    "stochastic": [{"kind": "replace"|"dephase"|"gksl", "target", "weight"}]}``

    ``replace`` targets are factor indices (0-based). ``dephase`` targets are
    Pauli strings. ``gksl`` targets are lists of jump operators, each a Pauli
    string, ``{"pauli_string", "coefficient"}`` or a matrix object.
    """
    try:
        space = HilbertSpace(model["factors"])
    except KeyError as exc:
        raise GeneratorError("model needs 'factors'") from exc
    d = space.total_dim
    n = len(space)

    def pauli(label):
        if len(label) != n or any(f != 2 for f in space.factors):
            raise GeneratorError(f"Pauli string {label!r} does not fit factors {space.factors}")
        return pauli_string(label)

    h = np.zeros((d, d), dtype=complex)
    for term in model.get("hamiltonian_terms", []):
        h += complex(term["coefficient"]) * pauli(term["pauli_string"])
    terms = []
    for st in model.get("stochastic", []):
        kind = st.get("kind")
        weight = float(st.get("weight", 1.0))
        if kind == "replace":
            sites = _targets(st["target"])
            if any(s < 0 or s >= n for s in sites):
                raise GeneratorError(f"replace target {sites} out of range")
            gen = replacement_generator(depolarize_sites(space, sites))
        elif kind == "dephase":
            gen = dephasing_generator(pauli(st["target"]), space)
        elif kind == "gksl":
            jumps = []
            for j in st["target"]:
                if isinstance(j, str):
                    jumps.append(pauli(j))
                elif "pauli_string" in j:
                    jumps.append(complex(j.get("coefficient", 1.0)) * pauli(j["pauli_string"]))
                else:
                    jumps.append(from_json_matrix(j)[0])
            gen = gksl_dissipator(jumps, space)
        else:
            raise GeneratorError(f"unknown stochastic kind {kind!r}")
        terms.append((gen, weight))
    return LindbladSpec(space, h, tuple(terms), model)


# ---------------------------------------------------------------------------
# evolution

def channel_at(l: Superoperator, t: float, check: bool = True) -> Superoperator:
    """exp(-t L), verified CPTP unless ``check`` is off."""
    if t < 0:
        raise ValueError("evolution time must be >= 0")
    ch = Superoperator(matrix_exp(-t * l.matrix), l.in_space)
    if check and not ch.is_cptp(1e-8):
        raise GeneratorError(f"exp(-tL) at t={t} is not CPTP")
    return ch


def evolve(l: Superoperator, rho: np.ndarray, t: float, tol: Tolerances = TOL) -> np.ndarray:
    if t < 0:
        raise ValueError("evolution time must be >= 0")
    rho = as_density(rho, tol)
    v = matrix_exp(-t * l.matrix) @ vectorize(rho)
    out = devectorize(v, rho.shape)
    # the output tolerance scales with the generator norm
    loose = tol.override(herm=1e-9, psd=1e-9, trace=1e-9)
    try:
        return as_density(out, loose)
    except ValueError as exc:
        raise GeneratorError(f"evolved state is not a density: {exc}") from exc


@dataclass(frozen=True)
class ProjectorSplit:
    # spectral projector onto the peripheral (purely imaginary) eigenspace
    projector: Superoperator
    # L restricted to the peripheral subspace (L E = E L E)
    peripheral_generator: Superoperator
    decay_gap: float
    peripheral_eigenvalues: np.ndarray
    # spectral projector onto the kernel of L (the fixed space proper)
    fixed_projector: Superoperator

    def rotation(self, t: float) -> Superoperator:
        """R_t E = exp(-t L_per) E."""
        r = matrix_exp(-t * self.peripheral_generator.matrix)
        return Superoperator(r @ self.projector.matrix, self.projector.in_space)

    @property
    def has_rotation(self) -> bool:
        return bool(np.abs(self.peripheral_generator.matrix).max() > TOL.zero)


def _spectral_projector(m: np.ndarray, select, w: np.ndarray, eig_tol: float) -> np.ndarray:
    """Riesz projector onto the invariant subspace of eigenvalues picked by ``select``."""
    n = m.shape[0]
    k = int(sum(bool(select(x)) for x in w))
    if k == n:
        return np.eye(n, dtype=complex)
    if k == 0:
        return np.zeros((n, n), dtype=complex)
    # Q1 spans the selected invariant subspace, the tail of Q_b is orthogonal
    # to the complementary one
    _, q_a, k_a = scipy.linalg.schur(m, output="complex", sort=select)
    _, q_b, k_b = scipy.linalg.schur(m, output="complex", sort=lambda x: not select(x))
    if k_a != k or k_b != n - k:
        raise GeneratorError("eigenvalue classification is unstable near the threshold")
    q1 = q_a[:, :k]
    zc = q_b[:, n - k:]
    # semisimplicity of the selected block
    _, v = np.linalg.eig(q1.conj().T @ m @ q1)
    if np.linalg.cond(v) > 1.0 / eig_tol:
        raise GeneratorError("selected spectrum is not semisimple")
    return q1 @ np.linalg.solve(zc.conj().T @ q1, zc.conj().T)


def _checked_projector(p: np.ndarray, space: HilbertSpace, what: str) -> Superoperator:
    e = Superoperator(p, space).hermitized()
    if not _is_idempotent(e, 1e-8):
        raise GeneratorError(f"{what} projector is not idempotent")
    if not e.is_cptp(1e-8):
        raise GeneratorError(f"{what} projector is not CPTP (near-degenerate spectrum?)")
    return e


def fixed_point_split(l: Superoperator, tol: Tolerances = TOL) -> ProjectorSplit:
    """Split the spectrum of L into peripheral and decaying parts.

    An eigenvalue is peripheral when |Re z| < tol.zero * ||L||_2. The returned
    projector E satisfies exp(-tL) -> R_t E with R_t = exp(-t L_per).
    """
    m = np.asarray(l.matrix)
    scale = max(np.linalg.norm(m, 2), 1.0)
    thr = tol.zero * scale
    w = scipy.linalg.eigvals(m)
    if np.any(w.real < -thr):
        raise GeneratorError(f"generator has eigenvalue with Re = {w.real.min():.3e} < 0; "
                             "exp(-tL) would grow")
    per = np.abs(w.real) < thr
    if not per.any():
        raise GeneratorError("generator has no peripheral spectrum")
    e = _checked_projector(_spectral_projector(m, lambda x: abs(x.real) < thr, w, tol.eig),
                           l.in_space, "peripheral")
    e_fix = _checked_projector(_spectral_projector(m, lambda x: abs(x) < thr, w, tol.eig),
                               l.in_space, "fixed-point")
    gap = float(np.min(np.abs(w.real[~per]))) if (~per).any() else np.inf
    per_gen = Superoperator(m @ e.matrix, l.in_space)
    return ProjectorSplit(e, per_gen, gap, w[per], e_fix)


# ---------------------------------------------------------------------------
# Zeno and projection chains

def zeno_generator(e0: Superoperator, l: Superoperator) -> Superoperator:
    return e0 @ l @ e0


def zeno_limit(e0: Superoperator, l: Superoperator, t: float) -> Superoperator:
    """exp(-t E0 L E0) E0, the strong-noise limit of exp(-t(L + gamma S))."""
    return Superoperator(matrix_exp(-t * zeno_generator(e0, l).matrix) @ e0.matrix, l.in_space)


def rotated_projector(e0: Superoperator, h: np.ndarray, t: float) -> Superoperator:
    """E_t = R_{exp(-iHt)} E0 R_{exp(iHt)}."""
    u = scipy.linalg.expm(-1j * t * np.asarray(h, dtype=complex))
    r = Superoperator.conjugation(u, e0.in_space)
    return r @ e0 @ r.adjoint()


def projection_chain(e0: Superoperator, h: np.ndarray, t: float, k: int) -> Superoperator:
    """E_t E_{t - t/k} ... E_{t/k} E_0."""
    if k < 1:
        raise ValueError("k must be >= 1")
    out = e0
    for j in range(1, k + 1):
        out = rotated_projector(e0, h, t * j / k) @ out
    return out


def apply_to_operator(e: Superoperator, h: np.ndarray) -> np.ndarray:
    """E(H) for an operator H, Hermitized."""
    return hermitize(e(np.asarray(h, dtype=complex)))
