"""Operator-algebra substrate: tensor structure, matrix functions, vectorization.

All superoperators use the column-stacking convention::

    vec(A @ rho @ B) == kron(B.T, A) @ vec(rho)

so a map ``rho -> U rho U^dagger`` has matrix ``kron(U.conj(), U)``.
Operators themselves are plain complex numpy arrays.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import reduce
from typing import Callable, NamedTuple, Sequence

import numpy as np
import scipy.linalg

from .config import TOL, Tolerances

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULI = {"I": I2, "X": X, "Y": Y, "Z": Z}


class DimensionError(ValueError):
    pass


@dataclass(frozen=True)
class HilbertSpace:
    factors: tuple[int, ...]

    def __init__(self, factors: Sequence[int], cap: int | None = None):
        factors = tuple(int(f) for f in factors)
        if not factors:
            raise DimensionError("a Hilbert space needs at least one factor")
        if any(f < 2 for f in factors):
            raise DimensionError(f"every factor must be >= 2, got {factors}")
        cap = TOL.dim_cap if cap is None else cap
        total = int(np.prod(factors))
        if total > cap:
            raise DimensionError(f"total dimension {total} exceeds cap {cap}")
        object.__setattr__(self, "factors", factors)

    @property
    def total_dim(self) -> int:
        return int(np.prod(self.factors))

    def __len__(self):
        return len(self.factors)

    @classmethod
    def qubits(cls, n: int) -> "HilbertSpace":
        return cls((2,) * n)


def tensor(*ops: np.ndarray) -> np.ndarray:
    """Kronecker product of any number of operators, left factor first."""
    return reduce(np.kron, [np.asarray(o, dtype=complex) for o in ops])


def pauli_string(label: str) -> np.ndarray:
    """Operator for a string such as ``"XXII"``; one character per qubit."""
    try:
        return tensor(*[PAULI[c] for c in label.upper()])
    except KeyError as exc:
        raise ValueError(f"invalid Pauli character in {label!r}") from exc


def ket(bits: str) -> np.ndarray:
    """Computational basis column for a qubit bitstring like ``"0101"``."""
    if not bits or any(b not in "01" for b in bits):
        raise ValueError(f"not a bitstring: {bits!r}")
    v = np.zeros(2 ** len(bits), dtype=complex)
    v[int(bits, 2)] = 1.0
    return v


def projector(vec: np.ndarray) -> np.ndarray:
    vec = np.asarray(vec, dtype=complex).reshape(-1)
    return np.outer(vec, vec.conj())


def _check_dims(rho: np.ndarray, dims: Sequence[int]):
    d = int(np.prod(dims))
    if rho.shape != (d, d):
        raise DimensionError(f"operator of shape {rho.shape} does not match factors {tuple(dims)}")


def partial_trace(rho: np.ndarray, dims: Sequence[int], keep: Sequence[int]) -> np.ndarray:
    """Marginal on the factors in ``keep`` (0-based), in their original order."""
    rho = np.asarray(rho, dtype=complex)
    dims = list(dims)
    _check_dims(rho, dims)
    keep = sorted(set(keep))
    n = len(dims)
    if any(k < 0 or k >= n for k in keep):
        raise IndexError(f"factor indices {keep} out of range for {n} factors")
    t = rho.reshape(dims + dims)
    traced = [i for i in range(n) if i not in keep]
    # trace out from the highest index so earlier axis numbers stay valid
    for count, i in enumerate(sorted(traced, reverse=True)):
        cur = n - count
        t = np.trace(t, axis1=i, axis2=i + cur)
    dk = int(np.prod([dims[k] for k in keep])) if keep else 1
    return t.reshape(dk, dk)


def replace_with_mixed(rho: np.ndarray, dims: Sequence[int], sites: Sequence[int]) -> np.ndarray:
    """Replace the factors in ``sites`` by the maximally mixed state."""
    dims = list(dims)
    n = len(dims)
    sites = sorted(set(sites))
    rest = [i for i in range(n) if i not in sites]
    marg = partial_trace(rho, dims, rest)
    mixed = np.eye(int(np.prod([dims[s] for s in sites])), dtype=complex)
    mixed /= mixed.shape[0]
    # build in the order (sites, rest) and permute back
    joint = np.kron(mixed, marg)
    order = sites + rest
    odims = [dims[i] for i in order]
    t = joint.reshape(odims + odims)
    inv = np.argsort(order)
    t = t.transpose(list(inv) + [n + i for i in inv])
    d = int(np.prod(dims))
    return t.reshape(d, d)


def vectorize(rho: np.ndarray) -> np.ndarray:
    """Column-stack a matrix into a 1-D vector."""
    return np.asarray(rho).reshape(-1, order="F")


def devectorize(v: np.ndarray, shape: tuple[int, int] | None = None) -> np.ndarray:
    v = np.asarray(v).reshape(-1)
    if shape is None:
        d = int(round(np.sqrt(v.size)))
        if d * d != v.size:
            raise DimensionError(f"vector of length {v.size} is not a square matrix")
        shape = (d, d)
    if shape[0] * shape[1] != v.size:
        raise DimensionError(f"cannot reshape {v.size} entries into {shape}")
    return v.reshape(shape, order="F")


def is_normal(m: np.ndarray, tol: float = TOL.herm) -> bool:
    scale = max(np.linalg.norm(m, 2) ** 2, 1.0)
    return np.linalg.norm(m @ m.conj().T - m.conj().T @ m) <= tol * scale


def matrix_exp(m: np.ndarray, tol: Tolerances = TOL) -> np.ndarray:
    """Matrix exponential.

    Normal matrices go through a complex Schur form (diagonal in that case);
    everything else uses scipy's scaling-and-squaring Pade approximant.
    Raises ``OverflowError`` rather than returning non-finite entries.
    """
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionError(f"matrix_exp needs a square matrix, got {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix_exp input has non-finite entries")
    if is_normal(m, tol.herm):
        t, q = scipy.linalg.schur(m, output="complex")
        out = (q * np.exp(np.diag(t))) @ q.conj().T
    else:
        with np.errstate(over="raise", invalid="raise"):
            try:
                out = scipy.linalg.expm(m)
            except FloatingPointError as exc:
                raise OverflowError("matrix exponential overflows double precision") from exc
    if not np.all(np.isfinite(out)):
        raise OverflowError("matrix exponential overflows double precision")
    return out


def hermitize(m: np.ndarray) -> np.ndarray:
    return (m + m.conj().T) / 2


def matrix_log_psd(m: np.ndarray, tol: Tolerances = TOL) -> np.ndarray:
    """Principal logarithm of a PSD matrix on its support.

    Eigenvalues at or below ``tol.psd`` are treated as zero and contribute
    nothing; callers that care about the kernel must test support separately.
    """
    m = np.asarray(m, dtype=complex)
    if np.linalg.norm(m - m.conj().T) > tol.herm * max(1.0, np.linalg.norm(m)):
        raise ValueError("matrix_log_psd needs a Hermitian matrix")
    w, v = np.linalg.eigh(hermitize(m))
    if w.min() < -tol.psd:
        raise ValueError(f"matrix has negative eigenvalue {w.min():.3e}")
    logs = np.where(w > tol.psd, np.log(np.clip(w, tol.psd, None)), 0.0)
    return (v * logs) @ v.conj().T


class EigResult(NamedTuple):
    values: np.ndarray
    vectors: np.ndarray
    # True when the eigenvector basis was too ill-conditioned and ``vectors``
    # holds the unitary Schur basis instead
    schur: bool


def eig_decompose(m: np.ndarray, tol: Tolerances = TOL) -> EigResult:
    m = np.asarray(m, dtype=complex)
    w, v = scipy.linalg.eig(m)
    scale = max(np.linalg.norm(m, 2), 1.0)
    resid = np.linalg.norm(m @ v - v * w, axis=0)
    cond = np.linalg.cond(v)
    if np.all(resid <= tol.eig * scale) and cond < 1.0 / tol.eig:
        return EigResult(w, v, False)
    t, q = scipy.linalg.schur(m, output="complex")
    if np.linalg.norm(q @ t @ q.conj().T - m) > tol.eig * scale:
        raise np.linalg.LinAlgError("Schur decomposition failed to reproduce the input")
    return EigResult(np.diag(t).copy(), q, True)


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Superoperator:
    """Linear map on operators, stored as a matrix on column-stacked vectors.

    Supports composition with ``@`` (``(A @ B)(rho) == A(B(rho))``), linear
    combinations, and application to an operator by calling it.
    """

    matrix: np.ndarray
    in_space: HilbertSpace
    out_space: HilbertSpace = field(default=None)

    def __post_init__(self):
        out = self.out_space if self.out_space is not None else self.in_space
        object.__setattr__(self, "out_space", out)
        mat = _freeze(self.matrix)
        want = (out.total_dim ** 2, self.in_space.total_dim ** 2)
        if mat.shape != want:
            raise DimensionError(f"superoperator matrix {mat.shape} does not match spaces {want}")
        object.__setattr__(self, "matrix", mat)

    # constructors -----------------------------------------------------
    @classmethod
    def identity(cls, space: HilbertSpace) -> "Superoperator":
        return cls(np.eye(space.total_dim ** 2), space)

    @classmethod
    def zero(cls, space: HilbertSpace) -> "Superoperator":
        return cls(np.zeros((space.total_dim ** 2,) * 2), space)

    @classmethod
    def from_function(cls, f: Callable[[np.ndarray], np.ndarray], in_space: HilbertSpace,
                      out_space: HilbertSpace | None = None) -> "Superoperator":
        out_space = out_space or in_space
        d = in_space.total_dim
        cols = []
        for j in range(d * d):
            basis = np.zeros(d * d, dtype=complex)
            basis[j] = 1.0
            cols.append(vectorize(f(devectorize(basis))))
        return cls(np.array(cols).T, in_space, out_space)

    @classmethod
    def conjugation(cls, u: np.ndarray, space: HilbertSpace) -> "Superoperator":
        """The map rho -> U rho U^dagger."""
        u = np.asarray(u, dtype=complex)
        return cls(np.kron(u.conj(), u), space)

    @classmethod
    def from_kraus(cls, kraus: Sequence[np.ndarray], space: HilbertSpace) -> "Superoperator":
        return cls(sum(np.kron(k.conj(), k) for k in kraus), space)

    @classmethod
    def from_choi(cls, choi: np.ndarray, space: HilbertSpace) -> "Superoperator":
        """Inverse of :meth:`choi` (normalized, ordering output (x) reference)."""
        d = space.total_dim
        j = np.asarray(choi, dtype=complex).reshape(d, d, d, d) * d  # [a, i, b, j]
        # S[(a + d b), (i + d j)] = <a|Phi(|i><j|)|b>; C-order index of (b, a) rows
        return cls(j.transpose(2, 0, 3, 1).reshape(d * d, d * d), space)

    # algebra ----------------------------------------------------------
    @property
    def dim(self) -> int:
        return self.in_space.total_dim

    def __call__(self, rho: np.ndarray) -> np.ndarray:
        shape = (self.out_space.total_dim,) * 2
        return devectorize(self.matrix @ vectorize(rho), shape)

    def __matmul__(self, other: "Superoperator") -> "Superoperator":
        if other.out_space.total_dim != self.in_space.total_dim:
            raise DimensionError("incompatible composition")
        return Superoperator(self.matrix @ other.matrix, other.in_space, self.out_space)

    def _same(self, other):
        if self.matrix.shape != other.matrix.shape:
            raise DimensionError("superoperators act on different spaces")

    def __add__(self, other: "Superoperator") -> "Superoperator":
        self._same(other)
        return Superoperator(self.matrix + other.matrix, self.in_space, self.out_space)

    def __sub__(self, other: "Superoperator") -> "Superoperator":
        self._same(other)
        return Superoperator(self.matrix - other.matrix, self.in_space, self.out_space)

    def __neg__(self):
        return Superoperator(-self.matrix, self.in_space, self.out_space)

    def __mul__(self, scalar) -> "Superoperator":
        return Superoperator(complex(scalar) * self.matrix, self.in_space, self.out_space)

    __rmul__ = __mul__

    def power(self, k: int) -> "Superoperator":
        return Superoperator(np.linalg.matrix_power(self.matrix, k), self.in_space)

    def adjoint(self) -> "Superoperator":
        """Adjoint with respect to the Hilbert-Schmidt inner product."""
        return Superoperator(self.matrix.conj().T, self.out_space, self.in_space)

    def tensor(self, other: "Superoperator") -> "Superoperator":
        """Superoperator of ``self (x) other`` on the concatenated factor list."""
        da, db = self.dim, other.dim
        ta = self.matrix.reshape(da, da, da, da)  # [j, i, l, k] for row i+d*j, col k+d*l
        tb = other.matrix.reshape(db, db, db, db)
        t = np.einsum("abcd,efgh->aebfcgdh", ta, tb)
        space = HilbertSpace(self.in_space.factors + other.in_space.factors)
        return Superoperator(t.reshape((da * db) ** 2, (da * db) ** 2), space)

    def norm(self) -> float:
        """Largest singular value of the matrix (the 2->2 norm)."""
        return float(np.linalg.norm(self.matrix, 2))

    # structure checks ---------------------------------------------------
    def choi(self) -> np.ndarray:
        """Normalized Choi matrix, factor order output (x) reference."""
        d = self.dim
        s = self.matrix.reshape(d, d, d, d)  # [b, a, j, i]
        return s.transpose(1, 3, 0, 2).reshape(d * d, d * d) / d

    def is_trace_preserving(self, tol: float = TOL.trace) -> bool:
        d = self.dim
        dual_identity = devectorize(self.matrix.conj().T @ vectorize(np.eye(self.out_space.total_dim)), (d, d))
        return bool(np.allclose(dual_identity, np.eye(d), atol=tol))

    def is_hermiticity_preserving(self, tol: float = TOL.herm) -> bool:
        c = self.choi()
        return bool(np.linalg.norm(c - c.conj().T) <= tol * max(1.0, np.linalg.norm(c)))

    def is_completely_positive(self, tol: float = 1e-8) -> bool:
        c = self.choi()
        if np.linalg.norm(c - c.conj().T) > tol:
            return False
        return bool(np.linalg.eigvalsh(hermitize(c)).min() >= -tol)

    def is_cptp(self, tol: float = 1e-8) -> bool:
        return self.is_completely_positive(tol) and self.is_trace_preserving(tol)

    def hermitized(self) -> "Superoperator":
        """Closest Hermiticity-preserving map (Hermitian part of the Choi matrix)."""
        return Superoperator.from_choi(hermitize(self.choi()), self.in_space)


def to_json_matrix(m: np.ndarray, dims: Sequence[int] | None = None) -> dict:
    """Serialize as ``{dims, re, im}``; Python float repr round-trips exactly."""
    m = np.asarray(m, dtype=complex)
    return {
        "dims": list(dims) if dims is not None else [m.shape[0]],
        "re": m.real.tolist(),
        "im": m.imag.tolist(),
    }


def from_json_matrix(obj: dict) -> tuple[np.ndarray, list[int]]:
    try:
        re = np.asarray(obj["re"], dtype=float)
        im = np.asarray(obj.get("im", np.zeros_like(re)), dtype=float)
    except (KeyError, TypeError) as exc:
        raise ValueError("matrix JSON needs 're' and 'im' arrays") from exc
    if re.shape != im.shape or re.ndim != 2:
        raise DimensionError("matrix JSON 're'/'im' must be equal-shape 2-D arrays")
    dims = [int(x) for x in obj.get("dims", [re.shape[0]])]
    return re + 1j * im, dims


def as_density(rho: np.ndarray, tol: Tolerances = TOL) -> np.ndarray:
    """Validate a density matrix and return its Hermitian part.

    Raises ``ValueError`` when Hermiticity, positivity or unit trace fail
    beyond the configured tolerances.
    """
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise DimensionError(f"density must be square, got {rho.shape}")
    if np.linalg.norm(rho - rho.conj().T) > tol.herm * max(1.0, np.linalg.norm(rho)):
        raise ValueError("density is not Hermitian")
    rho = hermitize(rho)
    tr = np.trace(rho).real
    if abs(tr - 1.0) > tol.trace:
        raise ValueError(f"density has trace {tr!r}")
    w = np.linalg.eigvalsh(rho)
    if w.min() < -tol.psd:
        raise ValueError(f"density has negative eigenvalue {w.min():.3e}")
    return rho


def random_density(d: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    """Density from a Ginibre matrix; full rank unless ``rank`` is given."""
    rank = d if rank is None else rank
    g = rng.normal(size=(d, rank)) + 1j * rng.normal(size=(d, rank))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def random_pure(d: int, rng: np.random.Generator) -> np.ndarray:
    v = rng.normal(size=d) + 1j * rng.normal(size=d)
    return v / np.linalg.norm(v)


def random_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    g = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    q, r = np.linalg.qr(g)
    return q * (np.diag(r) / np.abs(np.diag(r)))
