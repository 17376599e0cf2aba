"""Numerical kernels shared by the rest of the package.

Hermite polynomials and Hermite functions, Gauss-Hermite and composite
Gauss-Legendre rules, adaptive integration over the real line and a fixed-step
RK4 integrator.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np

from tomrep.errors import AccuracyError, DivergenceError, RangeError

HERMITE_MAX_ORDER = 200
GAUSS_HERMITE_MAX_ORDER = 256
# Below this order the plain recurrence cannot overflow for |x| <= 1e3.
_PLAIN_RECURRENCE_MAX = 30


@dataclass(frozen=True)
class QuadratureRule:
    """Gauss-Hermite rule for the weight exp(-x**2)."""

    nodes: np.ndarray
    weights: np.ndarray
    order: int

    def __post_init__(self):
        self.nodes.setflags(write=False)
        self.weights.setflags(write=False)


@dataclass(frozen=True)
class AdaptiveConfig:
    """Settings for adaptive composite Gauss-Legendre integration on the line.

    ``half_width`` fixes the integration window ``[center - half_width,
    center + half_width]``; when None the window grows until the integrand is
    negligible at both ends.
    """

    atol: float = 1e-10
    rtol: float = 1e-12
    center: float = 0.0
    half_width: float | None = None
    initial_panels: int = 16
    max_level: int = 9
    panel_order: int = 20


@dataclass(frozen=True)
class IntegrationResult:
    value: complex | np.ndarray
    error: float


@dataclass(frozen=True)
class OdeSolution:
    times: np.ndarray
    values: np.ndarray
    step: float

    def __post_init__(self):
        if len(self.times) != len(self.values):
            raise ValueError("times and values differ in length")
        self.times.setflags(write=False)
        self.values.setflags(write=False)


def hermite_eval(n: int, x: float) -> float:
    """Physicists' Hermite polynomial H_n(x) by three-term recurrence.

    Orders above 30 run a magnitude-rescaled recurrence so intermediate values
    never overflow; the final value is rebuilt from its logarithm and a range
    error is raised when it does not fit in a double.
    """
    if n < 0 or n > HERMITE_MAX_ORDER:
        raise RangeError(f"Hermite order {n} outside [0, {HERMITE_MAX_ORDER}]")
    x = float(x)
    if not math.isfinite(x) or abs(x) > 1e3:
        raise RangeError(f"Hermite argument {x} outside [-1e3, 1e3]")
    if n <= _PLAIN_RECURRENCE_MAX:
        h_prev, h = 1.0, 2.0 * x
        if n == 0:
            return 1.0
        for k in range(1, n):
            h_prev, h = h, 2.0 * x * h - 2.0 * k * h_prev
        return h
    sign, log_abs = hermite_log_abs(n, x)
    if sign == 0:
        return 0.0
    if log_abs > 709.0:
        raise RangeError(f"H_{n}({x}) overflows double precision")
    return sign * math.exp(log_abs)


def hermite_log_abs(n: int, x: float) -> tuple[int, float]:
    """Return ``(sign, log|H_n(x)|)`` without overflow."""
    if n < 0 or n > HERMITE_MAX_ORDER:
        raise RangeError(f"Hermite order {n} outside [0, {HERMITE_MAX_ORDER}]")
    h_prev, h = 1.0, 2.0 * x
    if n == 0:
        return 1, 0.0
    log_scale = 0.0
    for k in range(1, n):
        h_prev, h = h, 2.0 * x * h - 2.0 * k * h_prev
        big = max(abs(h), abs(h_prev))
        if big > 1e150:
            h /= big
            h_prev /= big
            log_scale += math.log(big)
    if h == 0.0:
        return 0, -math.inf
    return (1 if h > 0 else -1), log_scale + math.log(abs(h))


def hermite_functions(n_max: int, x) -> np.ndarray:
    """Normalized oscillator eigenfunctions psi_0..psi_{n_max-1} at points x.

    Uses the orthonormal recurrence
    psi_{k+1} = sqrt(2/(k+1)) x psi_k - sqrt(k/(k+1)) psi_{k-1},
    which never forms H_n or 2^n n! explicitly. Returns shape
    ``(n_max,) + x.shape``.
    """
    x = np.asarray(x, dtype=float)
    out = np.empty((n_max,) + x.shape)
    if n_max == 0:
        return out
    out[0] = math.pi ** -0.25 * np.exp(-0.5 * x * x)
    if n_max > 1:
        out[1] = math.sqrt(2.0) * x * out[0]
    for k in range(1, n_max - 1):
        out[k + 1] = (
            math.sqrt(2.0 / (k + 1)) * x * out[k] - math.sqrt(k / (k + 1)) * out[k - 1]
        )
    return out


@lru_cache(maxsize=None)
def _hermgauss(order: int) -> tuple[np.ndarray, np.ndarray]:
    return np.polynomial.hermite.hermgauss(order)


def gauss_hermite_rule(order: int) -> QuadratureRule:
    if not 1 <= order <= GAUSS_HERMITE_MAX_ORDER:
        raise RangeError(f"Gauss-Hermite order {order} outside [1, {GAUSS_HERMITE_MAX_ORDER}]")
    nodes, weights = _hermgauss(order)
    return QuadratureRule(nodes.copy(), weights.copy(), order)


@lru_cache(maxsize=None)
def _legendre(order: int) -> tuple[np.ndarray, np.ndarray]:
    return np.polynomial.legendre.leggauss(order)


def gauss_legendre(a: float, b: float, order: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = _legendre(order)
    half = 0.5 * (b - a)
    return half * x + 0.5 * (a + b), half * w


def composite_legendre(a: float, b: float, panels: int, order: int = 16):
    """Nodes and weights of a composite Gauss-Legendre rule on [a, b]."""
    x, w = _legendre(order)
    edges = np.linspace(a, b, panels + 1)
    half = 0.5 * np.diff(edges)[:, None]
    mid = 0.5 * (edges[1:] + edges[:-1])[:, None]
    return (mid + half * x).ravel(), (half * w).ravel()


def _apply(f, x):
    y = np.asarray(f(x))
    if y.shape[:1] != x.shape:
        # scalar-only callables
        y = np.array([f(xi) for xi in x])
    return y


def _weighted_sum(w, y):
    return np.tensordot(w, y, axes=(0, 0))


def integrate_line(
    f: Callable, rule: QuadratureRule | AdaptiveConfig | None = None
) -> IntegrationResult:
    """Approximate the integral of ``f`` over the whole real line.

    ``f`` takes a 1-D array of abscissas and returns values whose leading axis
    matches it (trailing axes are integrated independently). With a
    ``QuadratureRule`` the Gaussian weight is divided out of the integrand and
    the error is estimated against the rule of half the order. Otherwise a
    composite Gauss-Legendre rule on a finite window is refined by panel
    doubling until two successive levels agree.
    """
    if isinstance(rule, QuadratureRule):
        value = _gh_sum(f, rule.order)
        coarse = _gh_sum(f, max(1, rule.order // 2))
        return IntegrationResult(value, float(np.max(np.abs(value - coarse))))

    cfg = rule if rule is not None else AdaptiveConfig()
    half_width = cfg.half_width
    if half_width is None:
        half_width = _find_window(f, cfg)
    a, b = cfg.center - half_width, cfg.center + half_width
    panels = cfg.initial_panels
    x, w = composite_legendre(a, b, panels, cfg.panel_order)
    prev = _weighted_sum(w, _apply(f, x))
    for _ in range(cfg.max_level):
        panels *= 2
        x, w = composite_legendre(a, b, panels, cfg.panel_order)
        value = _weighted_sum(w, _apply(f, x))
        err = float(np.max(np.abs(value - prev)))
        scale = float(np.max(np.abs(value))) if np.size(value) else 0.0
        if err <= max(cfg.atol, cfg.rtol * scale):
            return IntegrationResult(value, err)
        prev = value
    raise AccuracyError("line integral did not converge", best=value, error=err)


def _gh_sum(f, order):
    x, w = _hermgauss(order)
    return _weighted_sum(w * np.exp(x * x), _apply(f, x))


def _find_window(f, cfg: AdaptiveConfig) -> float:
    half = 8.0
    probe = np.linspace(-1.0, 1.0, 401)
    for _ in range(40):
        edge = cfg.center + half * np.concatenate([probe[:40], probe[-40:]])
        vals = np.abs(_apply(f, edge))
        inner = np.abs(_apply(f, cfg.center + half * probe))
        peak = float(np.max(inner)) if inner.size else 0.0
        if float(np.max(vals)) <= 1e-3 * cfg.atol and float(np.max(vals)) <= 1e-16 * max(peak, 1.0):
            return half
        half *= 1.5
    raise AccuracyError("integrand does not decay on the real line", best=None, error=math.inf)


def ode_solve(
    rhs: Callable[[float, np.ndarray], np.ndarray],
    y0,
    t_span: tuple[float, float],
    step: float,
) -> OdeSolution:
    """Classical fixed-step RK4.

    The step is shrunk slightly so an integer number of steps lands exactly
    on ``t_span[1]``; the step actually used is reported on the solution.
    """
    if step <= 0:
        raise ValueError("step must be positive")
    t0, t1 = map(float, t_span)
    y = np.array(y0, dtype=complex)
    n_steps = max(1, math.ceil((t1 - t0) / step - 1e-9)) if t1 > t0 else 0
    h = (t1 - t0) / n_steps if n_steps else step
    times = t0 + h * np.arange(n_steps + 1)
    if n_steps:
        times[-1] = t1
    values = np.empty((n_steps + 1,) + y.shape, dtype=complex)
    values[0] = y
    for i in range(n_steps):
        t = times[i]
        k1 = rhs(t, y)
        k2 = rhs(t + 0.5 * h, y + 0.5 * h * k1)
        k3 = rhs(t + 0.5 * h, y + 0.5 * h * k2)
        k4 = rhs(t + h, y + h * k3)
        y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(y)):
            raise DivergenceError("ODE state became non-finite", last_time=float(t))
        values[i + 1] = y
    return OdeSolution(times, values, h)
