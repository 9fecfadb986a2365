"""Model builders, parameter sweeps and numerical verifiers for the decay+drift models."""
from __future__ import annotations

import math
import os
import re
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .config import DEFAULT_SEED
from .metrics import (
    cp_order_constant,
    decay_rate_fit,
    diamond_bracket,
    pimsner_popa_cb,
    process_fidelity,
    relative_entropy,
    trace_distance,
)
from .opalg import HilbertSpace, Superoperator, partial_trace, pauli_string
from .semigroup import (
    LindbladSpec,
    assemble,
    channel_at,
    depolarize_sites,
    fixed_point_split,
    hamiltonian_part,
    rotated_projector,
    spec_from_model,
    zeno_limit,
)
from .zenobounds import beta_lower

METRICS = ("rel-entropy", "trace-dist", "diamond", "proc-fid")


# ---------------------------------------------------------------------------
# models

def chain_model(n: int, gamma: float) -> dict:
    """Model dict for H = 2pi sum_j (X_j X_{j+1} + Y_j Y_{j+1}) with noise replacing qubit 0."""
    if not 2 <= n <= 5:
        raise ValueError("chain length must be between 2 and 5")
    terms = []
    for j in range(n - 1):
        for p in "XY":
            label = ["I"] * n
            label[j] = label[j + 1] = p
            terms.append({"pauli_string": "".join(label), "coefficient": 2 * math.pi})
    return {"factors": [2] * n, "hamiltonian_terms": terms,
            "stochastic": [{"kind": "replace", "target": [0], "weight": gamma}]}


def build_chain(n: int, gamma: float) -> LindbladSpec:
    return spec_from_model(chain_model(n, gamma))


def two_qubit_model(gamma: float) -> dict:
    return {"factors": [2, 2], "hamiltonian_terms": [{"pauli_string": "ZX", "coefficient": 0.5}],
            "stochastic": [{"kind": "replace", "target": [0], "weight": gamma}]}


def build_two_qubit(gamma: float) -> LindbladSpec:
    """H = Z (x) X / 2 with qubit A replaced by the maximally mixed state at rate gamma."""
    return spec_from_model(two_qubit_model(gamma))


def basis_drift_model(gamma: float) -> dict:
    return {"factors": [2], "hamiltonian_terms": [{"pauli_string": "X", "coefficient": 1.0}],
            "stochastic": [{"kind": "dephase", "target": "Z", "weight": gamma}]}


def build_basis_drift(gamma: float) -> LindbladSpec:
    """L = i[X, .] + gamma (rho - Z rho Z)."""
    return spec_from_model(basis_drift_model(gamma))


def two_qubit_e0() -> Superoperator:
    return depolarize_sites(HilbertSpace([2, 2]), [0])


def build_phi_k(k: int) -> Superoperator:
    """(E0 R_k)^k E0 with R_k the Z(x)X/2 rotation through a quarter turn split k ways."""
    if k < 1:
        raise ValueError("k must be >= 1")
    space = HilbertSpace([2, 2])
    e0 = two_qubit_e0()
    h = 0.5 * pauli_string("ZX")
    w, v = np.linalg.eigh(h)
    u = (v * np.exp(-1j * (math.pi / (2 * k)) * w)) @ v.conj().T
    step = e0 @ Superoperator.conjugation(u, space)
    return step.power(k) @ e0


def likelihood_to_gamma(p: float, t: float) -> float:
    """Invert the depolarizing likelihood p = 1 - exp(-gamma t); p = 1 maps to inf."""
    if not 0 <= p <= 1:
        raise ValueError("likelihood must lie in [0, 1]")
    return math.inf if p == 1 else -math.log1p(-p) / t


def stochastic_projector(spec: LindbladSpec) -> Superoperator:
    """Fixed-point projector E0 of the stochastic part alone."""
    return fixed_point_split(spec.stochastic_part()).projector


# ---------------------------------------------------------------------------
# scenarios: a channel family plus the reference it should be compared against

@dataclass
class Scenario:
    model_id: str
    space: HilbertSpace
    # channel(gamma, t, k) -> Superoperator
    channel: Callable[..., Superoperator]
    # reference(t) -> Superoperator
    reference: Callable[[float], Superoperator]
    spec_builder: Callable[[float], LindbladSpec] | None = None
    default_state: str = ""
    keep: tuple[int, ...] | None = None


def _spec_scenario(model_id: str, builder: Callable[[float], LindbladSpec],
                   default_state: str, keep=None) -> Scenario:
    base = builder(1.0)
    # the long-time projector is the same for every gamma > 0
    split = fixed_point_split(assemble(base))
    e0 = stochastic_projector(base)
    h_part = hamiltonian_part(base.hamiltonian, base.space)

    def channel(gamma: float = 1.0, t: float = 1.0, k: int | None = None) -> Superoperator:
        if math.isinf(gamma):
            return zeno_limit(e0, h_part, t)
        return channel_at(assemble(builder(gamma)), t)

    return Scenario(model_id, base.space, channel, split.rotation, builder, default_state, keep)


def model_scenario(model: dict, model_id: str = "model") -> Scenario:
    """Scenario for a JSON model; its stochastic weights are scaled by gamma."""
    spec = spec_from_model(model)
    return _spec_scenario(model_id, spec.with_weights, "0" * len(spec.space))


def phik_scenario() -> Scenario:
    space = HilbertSpace([2, 2])
    e0 = two_qubit_e0()

    def channel(gamma: float = 0.0, t: float = 0.0, k: int | None = None) -> Superoperator:
        return build_phi_k(int(k))

    return Scenario("phik", space, channel, lambda t: e0, None, "00", (1,))


def builtin(name: str) -> Scenario:
    """Registry: chain{n}, twoqubit, basisdrift, phik."""
    m = re.fullmatch(r"chain(\d)", name)
    if m:
        n = int(m.group(1))
        return _spec_scenario(name, lambda g: build_chain(n, g), "0" * n)
    if name == "twoqubit":
        return _spec_scenario(name, build_two_qubit, "00", keep=(1,))
    if name == "basisdrift":
        return _spec_scenario(name, build_basis_drift, "0")
    if name == "phik":
        return phik_scenario()
    raise KeyError(f"unknown builtin model {name!r}")


# ---------------------------------------------------------------------------
# sweeps

@dataclass
class SweepRow:
    param: float
    metric: str
    lower: float
    upper: float
    error: str = ""

    @property
    def value(self) -> float:
        return self.lower if self.lower == self.upper else 0.5 * (self.lower + self.upper)


@dataclass
class SweepResult:
    model_id: str
    axis: str
    rows: list[SweepRow]
    rng_seed: int
    wall_time: float
    fixed: dict = field(default_factory=dict)

    def series(self, metric: str) -> tuple[np.ndarray, np.ndarray]:
        sel = [r for r in self.rows if r.metric == metric and not r.error]
        return np.array([r.param for r in sel]), np.array([r.value for r in sel])


def _marginal(rho, space, keep):
    return rho if keep is None else partial_trace(rho, space.factors, keep)


def evaluate_metric(metric: str, phi: Superoperator, ref: Superoperator, rho: np.ndarray,
                    keep: Sequence[int] | None = None, seed: int = DEFAULT_SEED) -> tuple[float, float]:
    """(lower, upper) of one metric comparing ``phi`` with ``ref``; scalars have lower == upper."""
    space = phi.in_space
    if metric == "rel-entropy":
        v = relative_entropy(_marginal(phi(rho), space, keep), _marginal(ref(rho), space, keep))
        return v, v
    if metric == "trace-dist":
        v = trace_distance(_marginal(phi(rho), space, keep), _marginal(ref(rho), space, keep))
        return v, v
    if metric == "diamond":
        b = diamond_bracket(phi - ref, seed=seed)
        return b.lower, b.upper
    if metric == "proc-fid":
        v = process_fidelity(phi, ref)
        return v, v
    raise ValueError(f"unknown metric {metric!r}")


def worker_count(n_tasks: int) -> int:
    cap = os.environ.get("ZENOLAB_THREADS")
    limit = int(cap) if cap else (os.cpu_count() or 1)
    return max(1, min(limit, n_tasks))


def sweep(scenario: Scenario, axis: str, values: Sequence[float], rho: np.ndarray,
          metrics: Sequence[str] = ("rel-entropy",), t: float = 1.0, gamma: float = 1.0,
          k: int | None = None, keep: Sequence[int] | None = None,
          seed: int = DEFAULT_SEED, workers: int | None = None) -> SweepResult:
    """Evaluate metrics over one axis (gamma, t or k); failures become error rows."""
    if axis not in ("gamma", "t", "k"):
        raise ValueError("axis must be gamma, t or k")
    for m in metrics:
        if m not in METRICS:
            raise ValueError(f"unknown metric {m!r}")
    keep = scenario.keep if keep is None else keep
    start = time.perf_counter()

    def point(v):
        params = {"gamma": gamma, "t": t, "k": k}
        params[axis] = v
        out = []
        try:
            phi = scenario.channel(**params)
            ref = scenario.reference(params["t"])
        except Exception as exc:  # recorded per row, the sweep goes on
            return [SweepRow(v, m, math.nan, math.nan, f"{type(exc).__name__}: {exc}") for m in metrics]
        for m in metrics:
            try:
                lo, hi = evaluate_metric(m, phi, ref, rho, keep, seed)
                out.append(SweepRow(v, m, float(lo), float(hi)))
            except Exception as exc:
                out.append(SweepRow(v, m, math.nan, math.nan, f"{type(exc).__name__}: {exc}"))
        return out

    values = sorted(float(v) for v in values)
    n = workers or worker_count(len(values))
    if n > 1:
        with ThreadPoolExecutor(n) as pool:
            chunks = list(pool.map(point, values))
    else:
        chunks = [point(v) for v in values]
    rows = [r for chunk in chunks for r in chunk]
    return SweepResult(scenario.model_id, axis, rows, seed, time.perf_counter() - start,
                       {"t": t, "gamma": gamma, "k": k})


# ---------------------------------------------------------------------------
# counterexample deficits

def initial_deficit(spec: LindbladSpec, rho: np.ndarray,
                    t_samples: Sequence[float]) -> list[tuple[float, float]]:
    """(t, D0 - D_t) in bits, with D_t = D(Phi^t rho || E Phi^t rho) and E the long-time projector."""
    l = assemble(spec)
    e = fixed_point_split(l).projector
    d0 = relative_entropy(rho, e(rho))
    if not np.isfinite(d0) or d0 <= 0:
        raise ValueError(f"initial relative entropy must be finite and positive, got {d0}")
    out = []
    for t in t_samples:
        rt = channel_at(l, t, check=False)(rho) if t > 0 else rho
        out.append((float(t), d0 - relative_entropy(rt, e(rt))))
    return out


# ---------------------------------------------------------------------------
# converse decay bound

@dataclass
class RevclsiResult:
    t: np.ndarray
    margins: np.ndarray  # shape (len(t), n_states)
    c_cb: float
    s_norm: float

    @property
    def worst(self) -> float:
        return float(self.margins.min())


def verify_revclsi(spec: LindbladSpec, states: Sequence[np.ndarray], t_grid: Sequence[float],
                   orientation: str = "backward") -> RevclsiResult:
    """Margins D(Phi^t rho || E0 Phi^t rho) - exp(-C_cb ||S|| t / 2) D(rho || E_t rho).

    ``orientation="backward"`` uses E_t = R_{exp(iHt)} E0 R_{exp(-iHt)}, the
    rotation under which D(R rho || E0 R rho) = D(rho || E_t rho) for the
    forward evolution R = exp(-t i[H, .]). ``"forward"`` uses the opposite
    conjugation.
    """
    sign = {"backward": -1.0, "forward": 1.0}[orientation]
    s = spec.stochastic_part()
    e0 = fixed_point_split(s).projector
    c_cb = pimsner_popa_cb(e0)
    # an upper estimate of ||S|| keeps the exponential prefactor conservative
    s_norm = diamond_bracket(s).upper
    l = assemble(spec)
    margins = np.zeros((len(t_grid), len(states)))
    for i, t in enumerate(t_grid):
        ch = channel_at(l, t)
        et = rotated_projector(e0, spec.hamiltonian, sign * t)
        pref = math.exp(-c_cb * s_norm * t / 2)
        for j, rho in enumerate(states):
            out = ch(rho)
            margins[i, j] = relative_entropy(out, e0(out)) - pref * relative_entropy(rho, et(rho))
    return RevclsiResult(np.asarray(t_grid, dtype=float), margins, c_cb, s_norm)


# ---------------------------------------------------------------------------
# discretized decay-rate estimate

@dataclass
class LambdaTau:
    lam_tau: float
    c: float
    zeta: float
    alpha: float
    beta: float
    lam: float
    binding: bool


def measure_decay_rate(s: Superoperator, e0: Superoperator, rho: np.ndarray) -> float:
    """Fit rate of D(exp(-tS) rho || E0 rho) over a window scaled by ||S||."""
    scale = max(s.norm(), 1e-12)
    ts = np.linspace(0.5, 4.0, 12) / scale
    target = e0(rho)
    vals = [relative_entropy(channel_at(s, t, check=False)(rho), target) for t in ts]
    return decay_rate_fit(ts, vals).rate


def estimate_lambda_tau(spec: LindbladSpec, tau: float, m: int = 2, grid_points: int = 16,
                        lam: float | None = None) -> LambdaTau:
    """lambda_tau = alpha beta_{c,zeta} lambda from a uniform discretization of [0, tau].

    The averaged product Psi = (mean_i E_{t_i})^m is bracketed as
    (1 - zeta) E <= Psi <= (1 + zeta (c - 1)) E in cp order. ``alpha`` is the
    largest constant with alpha * sum_j mu_j <= exp(-C_cb ||S|| t / 2) dt on the
    grid, the reading under which alpha multiplies the rate.
    """
    if tau <= 0 or m < 1 or grid_points < 2:
        raise ValueError("need tau > 0, m >= 1 and at least 2 grid points")
    s = spec.stochastic_part()
    e0 = fixed_point_split(s).projector
    e = fixed_point_split(assemble(spec)).fixed_projector
    ts = np.linspace(0.0, tau, grid_points)
    avg = Superoperator.zero(spec.space)
    for t in ts:
        avg = avg + rotated_projector(e0, spec.hamiltonian, t) * (1.0 / grid_points)
    psi = avg.power(m)
    low = cp_order_constant(e, psi)
    high = cp_order_constant(psi, e)
    if not np.isfinite(low) or not np.isfinite(high):
        return LambdaTau(0.0, math.inf, 1.0, 0.0, -math.inf, lam or math.nan, False)
    zeta = max(0.0, 1.0 - 1.0 / low)
    c = 1.0 if zeta < 1e-12 else max(1.0, 1.0 + (high - 1.0) / zeta)
    if zeta < 1e-12:
        zeta = 0.0
    c_cb = pimsner_popa_cb(e0)
    s_norm = diamond_bracket(s).upper
    dt = tau / grid_points
    weights = np.exp(-c_cb * s_norm * ts / 2) * dt
    mass = m / grid_points
    alpha = float(weights.min() / mass)
    if lam is None:
        d = spec.space.total_dim
        rho = np.zeros((d, d), dtype=complex)
        rho[0, 0] = 1.0
        lam = measure_decay_rate(s, e0, rho)
    beta = beta_lower(c, zeta) if zeta < 1 else -math.inf
    binding = beta > 0
    return LambdaTau(alpha * beta * lam if binding else 0.0, c, zeta, alpha, beta, lam, binding)
