"""Wavefunction-level constructors: Fock, coherent, Gaussian and parametric vacuum.

Units hbar = m = omega(0) = 1 throughout. These are the conventional
representations against which the probability-based results are checked.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.special import gammaln

from tomrep.coin_rep import coherent_density
from tomrep.errors import DomainError, InvalidStateError, RangeError
from tomrep.special_math import (
    AdaptiveConfig,
    hermite_functions,
    integrate_line,
    ode_solve,
)

FOCK_MAX = 100
LOG_PI = math.log(math.pi)


def fock_psi(n: int, x):
    if not 0 <= n <= FOCK_MAX:
        raise RangeError(f"Fock index {n} outside [0, {FOCK_MAX}]")
    return hermite_functions(n + 1, x)[n]


def coherent_psi(alpha: complex, x):
    alpha = complex(alpha)
    x = np.asarray(x, dtype=float)
    expo = -0.5 * x * x - 0.5 * abs(alpha) ** 2 + math.sqrt(2) * alpha * x - 0.5 * alpha**2
    return math.pi ** -0.25 * np.exp(expo)


def coherent_psi_series(alpha: complex, x, N: int = 32):
    """Partial sum of the Fock expansion of |alpha> with N terms."""
    n = np.arange(N)
    r = abs(alpha)
    if r == 0.0:
        coeff = (n == 0).astype(complex)
    else:
        coeff = np.exp(-0.5 * r * r + n * math.log(r) - 0.5 * gammaln(n + 1) + 1j * n * np.angle(alpha))
    return np.tensordot(coeff, hermite_functions(N, x), axes=(0, 0))


@dataclass(frozen=True)
class GaussianState:
    """psi(x) = exp(-A x^2 + B x + C)."""

    A: complex
    B: complex = 0j
    C: complex = 0j

    def __post_init__(self):
        for name in ("A", "B", "C"):
            object.__setattr__(self, name, complex(getattr(self, name)))
        if self.A.real <= 0:
            raise InvalidStateError(f"Re(A) = {self.A.real} <= 0: not normalizable")

    def psi(self, x):
        x = np.asarray(x, dtype=float)
        return np.exp(-self.A * x * x + self.B * x + self.C)

    def norm_sq(self) -> float:
        a, b = self.A.real, self.B.real
        return math.sqrt(math.pi / (2 * a)) * math.exp(b * b / (2 * a) + 2 * self.C.real)

    @classmethod
    def coherent(cls, alpha: complex) -> "GaussianState":
        alpha = complex(alpha)
        C = -0.5 * abs(alpha) ** 2 - 0.5 * alpha**2 - 0.25 * LOG_PI
        return cls(0.5, math.sqrt(2) * alpha, C)


def normalize(g: GaussianState) -> GaussianState:
    """Fix Re(C) so that the state has unit norm; Im(C) is left alone."""
    a, b = g.A.real, g.B.real
    re_c = -0.5 * (b * b / (2 * a) + 0.5 * math.log(math.pi / (2 * a)))
    return GaussianState(g.A, g.B, complex(re_c, g.C.imag))


def gaussian_psi(g: GaussianState, x):
    return g.psi(x)


@dataclass(frozen=True)
class GaussianMoments:
    mean_x: float
    var_x: float
    var_p: float
    cov_xp: float
    r: float
    mean_p: float


def gaussian_stats(g: GaussianState) -> GaussianMoments:
    """Closed-form first and second moments of a normalized Gaussian.

    |psi|^2 has variance 1/(4 Re A); the momentum variance is |A|^2 / Re A and
    the symmetrized covariance is -Im A / (2 Re A).
    """
    A, B = g.A, g.B
    mean_x = B.real / (2 * A.real)
    var_x = 1.0 / (4 * A.real)
    var_p = abs(A) ** 2 / A.real
    cov = -A.imag / (2 * A.real)
    mean_p = -2 * A.imag * mean_x + B.imag
    r = cov / math.sqrt(var_x * var_p)
    return GaussianMoments(mean_x, var_x, var_p, cov, r, mean_p)


# --- parametric oscillator -------------------------------------------------


@dataclass(frozen=True)
class FrequencyProfile:
    """omega(t) with the times where it is not smooth (so RK4 can stop there)."""

    omega: Callable[[float], float]
    breakpoints: tuple = ()
    spec: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if abs(self.omega(0.0) - 1.0) > 1e-12:
            raise ValueError("frequency profile must start at omega(0) = 1")


def constant_profile() -> FrequencyProfile:
    return FrequencyProfile(lambda t: 1.0, (), {"kind": "constant"})


def step_profile(t_switch: float, omega_after: float, omega_before: float = 1.0) -> FrequencyProfile:
    t_switch = float(t_switch)
    w0, w1 = float(omega_before), float(omega_after)
    return FrequencyProfile(
        lambda t: w0 if t < t_switch else w1,
        (t_switch,),
        {"kind": "step", "t_switch": t_switch, "omega_after": w1, "omega_before": w0},
    )


def profile_from_json(data) -> FrequencyProfile:
    if data is None:
        return constant_profile()
    kind = data.get("kind", "constant")
    if kind == "constant":
        return constant_profile()
    if kind == "step":
        return step_profile(data["t_switch"], data["omega_after"], data.get("omega_before", 1.0))
    raise ValueError(f"unknown frequency profile kind {kind!r}")


@dataclass(frozen=True)
class ParametricSolution:
    """eps(t), deps(t) on a time grid plus the continuous phase of eps."""

    profile: FrequencyProfile
    times: np.ndarray
    eps: np.ndarray
    deps: np.ndarray
    phase: np.ndarray
    step: float

    def wronskian(self) -> np.ndarray:
        return self.deps * self.eps.conj() - self.eps * self.deps.conj()

    def at(self, t: float) -> tuple[complex, complex, float]:
        """(eps, deps, continuous arg eps) at time t.

        Off-grid times are reached by RK4 from the nearest earlier grid point
        with at most one step of the solve's size.
        """
        if not self.times[0] - 1e-12 <= t <= self.times[-1] + 1e-12:
            raise ValueError(f"t={t} outside solved range")
        i = int(np.searchsorted(self.times, t, side="right")) - 1
        i = min(max(i, 0), len(self.times) - 1)
        if abs(self.times[i] - t) <= 1e-12:
            return complex(self.eps[i]), complex(self.deps[i]), float(self.phase[i])
        sol = ode_solve(_eps_rhs(self.profile), [self.eps[i], self.deps[i]], (self.times[i], t), self.step)
        e, de = sol.values[-1]
        ph = float(self.phase[i] + np.angle(e / self.eps[i]))
        return complex(e), complex(de), ph


def _eps_rhs(profile: FrequencyProfile):
    def rhs(t, y):
        w = profile.omega(t)
        return np.array([y[1], -w * w * y[0]])

    return rhs


def epsilon_solve(profile: FrequencyProfile, t_end: float, step: float = 1e-3) -> ParametricSolution:
    """Integrate eps'' + omega(t)^2 eps = 0 with eps(0) = 1, eps'(0) = i.

    Integration restarts at every breakpoint of the profile so the RK4 order
    is not lost on jumps of omega.
    """
    if t_end < 0:
        raise ValueError("t_end must be non-negative")
    cuts = [0.0] + [b for b in profile.breakpoints if 0.0 < b < t_end] + [float(t_end)]
    rhs = _eps_rhs(profile)
    y = np.array([1.0 + 0j, 1j])
    times, values = [np.array([0.0])], [y[None, :]]
    for a, b in zip(cuts[:-1], cuts[1:]):
        if b <= a:
            continue
        # omega is sampled strictly inside the segment so jumps at its ends are respected
        lo, hi = a + 1e-9 * (b - a), b - 1e-9 * (b - a)
        seg = ode_solve(lambda t, y, lo=lo, hi=hi: rhs(min(max(t, lo), hi), y), y, (a, b), step)
        times.append(seg.times[1:])
        values.append(seg.values[1:])
        y = seg.values[-1]
    times = np.concatenate(times)
    values = np.concatenate(values)
    eps, deps = values[:, 0], values[:, 1]
    phase = np.unwrap(np.angle(eps))
    return ParametricSolution(profile, times, eps, deps, phase, step)


def parametric_gaussian(sol: ParametricSolution, t: float) -> GaussianState:
    """The evolved vacuum as exp(-A x^2 + C) with the square-root branch tracked."""
    e, de, ph = sol.at(t)
    if abs(e) < 1e-12:
        raise DomainError("eps(t) ~ 0: wavefunction singular")
    A = -1j * de / (2 * e)
    log_eps = complex(math.log(abs(e)), ph)
    C = -0.25 * LOG_PI - 0.5 * log_eps
    return GaussianState(A, 0j, C)


def parametric_vacuum_psi(sol: ParametricSolution, t: float, x):
    return parametric_gaussian(sol, t).psi(x)


def fock_overlaps(psi: Callable, N: int, atol: float = 1e-13) -> np.ndarray:
    """c_n = integral of psi_n(x) psi(x) dx for n < N."""

    def f(x):
        return hermite_functions(N, x).T * np.asarray(psi(x))[:, None]

    return np.asarray(integrate_line(f, AdaptiveConfig(atol=atol)).value)


def parametric_density_matrix(sol: ParametricSolution, t: float, N: int) -> np.ndarray:
    """rho_{nn'}(t) = c_n conj(c_n') with c_n = <n|0, t>.

    Odd c_n vanish by parity, so they are set to zero exactly.
    """
    if not 1 <= N <= 64:
        raise RangeError("N must lie in [1, 64]")
    g = parametric_gaussian(sol, t)
    c = fock_overlaps(g.psi, N)
    c[1::2] = 0.0
    rho = np.outer(c, c.conj())
    missing = 1.0 - float(np.trace(rho).real)
    if missing > 1e-6:
        warnings.warn(f"Fock truncation N={N} misses population {missing:.3g}", RuntimeWarning)
    return rho


# --- state specifications --------------------------------------------------


@dataclass(frozen=True)
class FockSpec:
    n: int

    def __post_init__(self):
        if self.n < 0:
            raise InvalidStateError("Fock index must be >= 0")


@dataclass(frozen=True)
class CoherentSpec:
    alpha: complex


@dataclass(frozen=True)
class GaussianSpec:
    state: GaussianState


@dataclass(frozen=True)
class ParametricVacuumSpec:
    profile: FrequencyProfile
    t: float
    step: float = 1e-3


StateSpec = FockSpec | CoherentSpec | GaussianSpec | ParametricVacuumSpec


def _complex(v) -> complex:
    if isinstance(v, (list, tuple)):
        if len(v) != 2:
            raise ValueError("complex numbers are given as [re, im]")
        return complex(float(v[0]), float(v[1]))
    return complex(float(v))


def parse_state_spec(data: dict) -> StateSpec:
    kind = data.get("type")
    if kind == "fock":
        return FockSpec(int(data["n"]))
    if kind == "coherent":
        return CoherentSpec(_complex(data.get("alpha", 0)))
    if kind == "gaussian":
        g = GaussianState(_complex(data["A"]), _complex(data.get("B", 0)), _complex(data.get("C", 0)))
        if "C" not in data:
            g = normalize(g)
        return GaussianSpec(g)
    if kind == "parametric_vacuum":
        return ParametricVacuumSpec(
            profile_from_json(data.get("profile")), float(data["t"]), float(data.get("step", 1e-3))
        )
    raise ValueError(f"unknown state type {kind!r}")


def spec_to_json(spec: StateSpec) -> dict:
    if isinstance(spec, FockSpec):
        return {"type": "fock", "n": spec.n}
    if isinstance(spec, CoherentSpec):
        return {"type": "coherent", "alpha": [spec.alpha.real, spec.alpha.imag]}
    if isinstance(spec, GaussianSpec):
        g = spec.state
        return {"type": "gaussian", **{k: [v.real, v.imag] for k, v in (("A", g.A), ("B", g.B), ("C", g.C))}}
    return {"type": "parametric_vacuum", "profile": spec.profile.spec, "t": spec.t, "step": spec.step}


def as_gaussian(spec: StateSpec) -> GaussianState | None:
    """Gaussian parameters of the state, or None for non-Gaussian states."""
    if isinstance(spec, GaussianSpec):
        return spec.state
    if isinstance(spec, CoherentSpec):
        return GaussianState.coherent(spec.alpha)
    if isinstance(spec, FockSpec):
        return GaussianState(0.5, 0, -0.25 * LOG_PI) if spec.n == 0 else None
    if isinstance(spec, ParametricVacuumSpec):
        sol = epsilon_solve(spec.profile, spec.t, spec.step)
        return parametric_gaussian(sol, spec.t)
    raise TypeError(spec)


def wavefunction(spec: StateSpec) -> Callable:
    if isinstance(spec, FockSpec):
        return lambda x, n=spec.n: fock_psi(n, x)
    if isinstance(spec, CoherentSpec):
        return lambda x, a=spec.alpha: coherent_psi(a, x)
    return as_gaussian(spec).psi


def density_matrix(spec: StateSpec, N: int) -> np.ndarray:
    """Fock-basis density matrix of the state truncated to N levels."""
    if isinstance(spec, FockSpec):
        if spec.n >= N:
            raise RangeError(f"Fock state {spec.n} not representable with N={N}")
        rho = np.zeros((N, N), dtype=complex)
        rho[spec.n, spec.n] = 1.0
        return rho
    if isinstance(spec, CoherentSpec):
        return coherent_density(spec.alpha, N)
    c = fock_overlaps(wavefunction(spec), N)
    return np.outer(c, c.conj())
