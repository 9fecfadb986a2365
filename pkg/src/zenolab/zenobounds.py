"""Closed-form Zeno and decay bounds with explicit hypothesis logging.

Every bound returns a :class:`BoundReport`. A failed hypothesis never raises:
the value is still computed and the report is marked non-binding, so a sweep
can show which condition breaks first.

``log_eps(x) = ln(x) / ln(1/eps)`` throughout, i.e. the positive logarithm
for x > 1 that satisfies ``eps ** -log_eps(x) == x``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .opalg import Superoperator

ONE_PLUS = 1.0 + 1.0 / (2.0 * math.pi)


@dataclass
class BoundReport:
    value: float
    hypotheses_ok: bool = True
    hypothesis_log: list[tuple[str, float, float]] = field(default_factory=list)
    inputs_echo: dict = field(default_factory=dict)

    def require(self, condition: str, lhs: float, rhs: float, ok: bool | None = None):
        """Record ``lhs >= rhs`` (or a precomputed verdict) under a readable name."""
        ok = (lhs >= rhs) if ok is None else ok
        self.hypothesis_log.append((condition, float(lhs), float(rhs)))
        if not ok:
            self.hypotheses_ok = False
        return ok

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "hypotheses_ok": self.hypotheses_ok,
            "hypothesis_log": [{"condition": c, "lhs": l, "rhs": r} for c, l, r in self.hypothesis_log],
            "inputs": self.inputs_echo,
        }


def epow(a: float, m: int) -> float:
    """<a>_m = a^m e^a / m!, evaluated in log space."""
    if a < 0 or m < 0:
        raise ValueError("epow needs a >= 0 and m >= 0")
    if a == 0:
        return 1.0 if m == 0 else 0.0
    expo = m * math.log(a) + a - math.lgamma(m + 1)
    return math.exp(expo) if expo < 709.0 else math.inf


def log_eps(x: float, eps: float) -> float:
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    if x <= 0:
        raise ValueError("log_eps needs x > 0")
    return math.log(x) / math.log(1.0 / eps)


def _a(x: float, eps: float) -> float:
    """(1 + 1/2pi)^(x / log_eps x - 2); inf-safe for x <= 1."""
    if x <= 0 or x == 1:
        return 0.0
    expo = x / log_eps(x, eps) - 2.0
    return ONE_PLUS ** expo if expo < 700 else math.inf


def _inv(v: float) -> float:
    return math.inf if v == 0 else 1.0 / v


def _window_hypothesis(rep: BoundReport, name: str, x: float, eps: float,
                       l_norm: float, w: float):
    """x / (log_eps x + 2) >= (1 + 1/2pi) e ||L|| / w + 2, which also needs x > 1."""
    rhs = ONE_PLUS * math.e * l_norm / w + 2.0
    if x <= 1:
        rep.require(f"{name} > 1", x, 1.0, ok=False)
        return
    rep.require(f"{name}/(log_eps {name} + 2) >= (1+1/2pi) e |L|/w + 2",
                x / (log_eps(x, eps) + 2.0), rhs)


def _check_eps(eps):
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")


def commutator_power_norm_bound(h_norm: float, m: int) -> float:
    """||i[H, .]^m|| <= 2^m ||H||^m."""
    return (2.0 * h_norm) ** m


def hsandwich_bound(k: int, t_total: float, l_norm: float, ele_norm: float) -> BoundReport:
    """k (<t|L|/k>_2 + <t|ELE|/k>_2) for k equal interruptions in time t."""
    rep = BoundReport(0.0, inputs_echo=dict(k=k, t_total=t_total, l_norm=l_norm, ele_norm=ele_norm))
    rep.require("k >= 1", k, 1)
    if k < 1:
        rep.value = math.inf
        return rep
    rep.value = k * (epow(t_total * l_norm / k, 2) + epow(t_total * ele_norm / k, 2))
    return rep


def phi_k_bound(k: int) -> float:
    """min(pi^2/(4k) e^{pi/(2k)}, 1) for k interruptions of a quarter-turn rotation."""
    if k < 1:
        raise ValueError("k must be >= 1")
    return min(math.pi ** 2 / (4 * k) * math.exp(math.pi / (2 * k)), 1.0)


def beta_lower(c: float, zeta: float) -> float:
    """Lower estimate on the quasi-factorization constant beta_{c, zeta}.

    ``c == 1`` is accepted as the limit in which the middle term vanishes.
    """
    if c < 1 or not 0 <= zeta < 1:
        raise ValueError("beta_lower needs c >= 1 and 0 <= zeta < 1")
    pre = 1.0 / (1.0 + zeta * c + 2 * zeta ** 2 * (c - 1))
    mid = 0.0 if c == 1 else 2 * zeta * (1 + zeta) * (c - 1) ** 2 / (c * (math.log(c) - 1) + 1)
    return pre * (1.0 - mid - 4 * zeta - zeta ** 2)


def epsultimate_bound(k: int, q: int, gamma: float, eps: float,
                      l_norm: float, ele_norm: float) -> BoundReport:
    _check_eps(eps)
    rep = BoundReport(0.0, inputs_echo=dict(k=k, q=q, gamma=gamma, eps=eps,
                                            l_norm=l_norm, ele_norm=ele_norm))
    if not 1 <= q <= k:
        raise ValueError("q must lie in 1..k")
    x = gamma / q
    _window_hypothesis(rep, "gamma/q", x, eps, l_norm, q)
    head = (k + k % q) * (epow(l_norm / k, 2) + epow(ele_norm / k, 2))
    tail = q * ((q / gamma) * (epow(l_norm / q, 1) + eps) + _inv(_a(x, eps)))
    rep.value = head + tail
    return rep


def discretefinal_bound(k: int, g: int, w: int, eps: float,
                        l_norm: float, ele_norm: float) -> BoundReport:
    """Discrete-interruption bound; ``g`` is the window length giving the cp-order gap."""
    _check_eps(eps)
    rep = BoundReport(0.0, inputs_echo=dict(k=k, g=g, w=w, eps=eps, l_norm=l_norm, ele_norm=ele_norm))
    if w < 1 or g < 1 or k < 1:
        raise ValueError("k, g and w must be >= 1")
    x = k / (g * w)
    _window_hypothesis(rep, "k/gw", x, eps, l_norm, w)
    head = (k + k % w) * (epow(l_norm / k, 2) + epow(ele_norm / k, 2))
    tail = w * ((g * w / k) * (epow(l_norm / w, 1) + eps) + _inv(_a(x, eps)))
    rep.value = head + tail
    return rep


def ctsfinal_bound(gamma: float, w: int, eps: float, l_norm: float) -> BoundReport:
    _check_eps(eps)
    rep = BoundReport(0.0, inputs_echo=dict(gamma=gamma, w=w, eps=eps, l_norm=l_norm))
    if w < 1:
        raise ValueError("w must be >= 1")
    x = gamma / w
    _window_hypothesis(rep, "gamma/w", x, eps, l_norm, w)
    rep.value = w * ((w / gamma) * (epow(l_norm / w, 1) + eps) + _inv(_a(x, eps)))
    return rep


def zfromdecay_bound(kind: str, lam: float, b: float, eps: float, c_eps: float, w: int,
                     l_norm: float, ele_norm: float = 0.0, k: int | None = None) -> BoundReport:
    """Zeno bound from exponential decay ||Phi^t - E0|| <= b e^{-lam t}.

    ``kind="continuous"`` uses a semigroup decaying at rate ``lam`` per unit time;
    ``kind="discrete"`` uses ``k`` interruption channels with decay ``lam`` per channel.
    """
    _check_eps(eps)
    rep = BoundReport(0.0, inputs_echo=dict(kind=kind, lam=lam, b=b, eps=eps, c_eps=c_eps, w=w,
                                            l_norm=l_norm, ele_norm=ele_norm, k=k))
    log_term = math.log(c_eps * b / eps)
    rep.require("c_eps b / eps > 1", c_eps * b / eps, 1.0, ok=log_term > 0)
    gamma = lam / (log_term * w) if log_term > 0 else math.inf
    rep.inputs_echo["gamma"] = gamma
    if kind == "continuous":
        x = gamma
        rep.inputs_echo["a"] = _a(x, eps)
        _window_hypothesis(rep, "gamma", x, eps, l_norm, w)
        rep.value = w * ((1.0 / gamma) * (epow(l_norm / w, 1) + eps) + _inv(_a(x, eps)))
    elif kind == "discrete":
        if k is None or k < 1:
            raise ValueError("discrete kind needs k >= 1")
        g = math.ceil(1.0 / gamma)
        x = k / g
        rep.inputs_echo["a"] = _a(x, eps)
        _window_hypothesis(rep, "k/ceil(1/gamma)", x, eps, l_norm, w)
        head = (k + k % w) * (epow(l_norm / k, 2) + epow(ele_norm / k, 2))
        rep.value = head + w * ((g / k) * (epow(l_norm / w, 1) + eps) + _inv(_a(x, eps)))
    else:
        raise ValueError(f"unknown kind {kind!r}")
    return rep


def zvscmlsi_cap(lam0: float, b0: float, b: float, eps: float, c_eps: float,
                 alpha: float, l_norm: float) -> BoundReport:
    """Upper cap on the decay rate of decay+drift dynamics under strong noise of rate lam0."""
    _check_eps(eps)
    if alpha <= 0 or lam0 <= 0:
        raise ValueError("alpha and lam0 must be > 0")
    rep = BoundReport(0.0, inputs_echo=dict(lam0=lam0, b0=b0, b=b, eps=eps, c_eps=c_eps,
                                            alpha=alpha, l_norm=l_norm))
    rep.require("2b/alpha > 1", 2 * b / alpha, 1.0, ok=2 * b > alpha)
    inner = math.log(c_eps * b0 / eps)
    rep.require("c_eps b0 / eps > 1", c_eps * b0 / eps, 1.0, ok=inner > 0)
    if not rep.hypotheses_ok:
        rep.value = 0.0
        return rep
    amp = (2 * l_norm * (math.e + eps) / alpha) * math.sqrt(2 * inner) * math.log(2 * b / alpha)
    rep.inputs_echo["amplitude"] = amp
    rep.value = amp / math.sqrt(lam0)
    return rep


def epsilongeneral_bound(k: int, t: float, eps: float, l_norm: float, ele_norm: float) -> BoundReport:
    _check_eps(eps)
    rep = BoundReport(0.0, inputs_echo=dict(k=k, t=t, eps=eps, l_norm=l_norm, ele_norm=ele_norm))
    rep.require("k > 1", k, 1, ok=k > 1)
    rep.require("ln(1/eps) >= t|L|/k", math.log(1 / eps), t * l_norm / k)
    b = eps * math.exp(t * l_norm / k)
    rep.inputs_echo["b"] = b
    rep.require("b < 1", 1.0, b, ok=b < 1)
    if b == 1 or k <= 1:
        rep.value = math.inf
        return rep
    pref = k * (1 - eps + 2 * math.sqrt(math.log(k) / k)) / (1 - b) ** 2
    body = epow(t * ele_norm / k, 2) * (1 + 2 * b) + epow(t * l_norm / k, 2) * (1 + 5 * b)
    rep.value = pref * body + 4 * eps * epow(t * l_norm / k, 1) / (1 - eps) ** 2
    return rep


def telescoping_check(f_family: Sequence[Superoperator], g_family: Sequence[Superoperator],
                      rho: np.ndarray) -> float:
    """Residual of prod f - prod g = sum_l (prod_{n>l} g)(f_l - g_l)(omega_{l-1}).

    Products compose later maps on the left; omega_l = f_l ... f_1 (rho).
    """
    if len(f_family) != len(g_family):
        raise ValueError("families must have equal length")
    if not f_family:
        return 0.0
    lhs_f, lhs_g = rho, rho
    for f, g in zip(f_family, g_family):
        lhs_f, lhs_g = f(lhs_f), g(lhs_g)
    lhs = lhs_f - lhs_g
    rhs = np.zeros_like(lhs)
    omega = np.asarray(rho, dtype=complex)
    n = len(f_family)
    for l in range(n):
        term = f_family[l](omega) - g_family[l](omega)
        for m in range(l + 1, n):
            term = g_family[m](term)
        rhs = rhs + term
        omega = f_family[l](omega)
    return float(np.linalg.norm(lhs - rhs))
