"""Symplectic tomograms w(X | mu, nu) and their inversion.

w(X | mu, nu) is the probability density of the quadrature mu q + nu p. Every
frame (mu, nu) != (0, 0) is written in polar form s (cos theta, sin theta),
and tomograms obey w(X | s mu, s nu) = w(X / s | mu, nu) / s.

Displacement matrix elements use

    <n| exp(i(X - mu q - nu p)) |n'> = e^{iX} <n| D(beta) |n'>,
    beta = (nu - i mu) / sqrt(2),

with D(beta) = exp(beta a^dag - conj(beta) a).
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy.special import gammaln

from tomrep.errors import AccuracyError, InvalidFrameError, InvalidStateError, RangeError
from tomrep.special_math import (
    AdaptiveConfig,
    composite_legendre,
    gauss_legendre,
    hermite_functions,
    integrate_line,
)
from tomrep.states import GaussianState

NU_MIN = 1e-8
CLIP_TOL = 1e-12
WEYL_MAX = 64


class ClippedNegativeWarning(RuntimeWarning):
    """Tiny negative tomogram values (quadrature noise) were set to zero."""


@dataclass(frozen=True)
class ReferenceFrame:
    mu: float
    nu: float

    def __post_init__(self):
        object.__setattr__(self, "mu", float(self.mu))
        object.__setattr__(self, "nu", float(self.nu))
        if self.mu == 0.0 and self.nu == 0.0:
            raise InvalidFrameError("reference frame (mu, nu) = (0, 0)")

    @property
    def s(self) -> float:
        return math.hypot(self.mu, self.nu)

    @property
    def theta(self) -> float:
        return math.atan2(self.nu, self.mu) % (2 * math.pi)

    @classmethod
    def polar(cls, s: float, theta: float) -> "ReferenceFrame":
        return cls(s * math.cos(theta), s * math.sin(theta))


@dataclass(frozen=True)
class GaussianTomogramParams:
    mean: float
    var: float

    def density(self, X):
        X = np.asarray(X, dtype=float)
        return np.exp(-((X - self.mean) ** 2) / (2 * self.var)) / math.sqrt(2 * math.pi * self.var)


def _clip(w) -> tuple[np.ndarray, int]:
    w = np.asarray(w, dtype=float)
    neg = w < 0
    count = int(neg.sum())
    if count:
        if w.min() < -CLIP_TOL:
            raise AccuracyError(f"tomogram value {w.min():.3g} is negative beyond noise", best=w)
        warnings.warn("clipped negative tomogram values", ClippedNegativeWarning)
        w = np.where(neg, 0.0, w)
    return w, count


# --- forward maps ------------------------------------------------------------


def tomogram_from_psi(psi, X, frame: ReferenceFrame, cfg: AdaptiveConfig | None = None):
    """w = |integral psi(y) exp(i mu y^2/(2 nu) - i X y / nu) dy|^2 / (2 pi |nu|).

    ``psi`` is a vectorized callable or a ``GaussianState``; Gaussian states
    are integrated in closed form by completing the square. For
    |nu| < 1e-8 the kernel is replaced by its delta limit |psi(X/mu)|^2/|mu|.
    """
    X = np.asarray(X, dtype=float)
    mu, nu = frame.mu, frame.nu
    if abs(nu) < NU_MIN:
        if isinstance(psi, GaussianState):
            psi = psi.psi
        return np.abs(np.asarray(psi(X / mu))) ** 2 / abs(mu)
    if isinstance(psi, GaussianState):
        a = psi.A - 0.5j * mu / nu
        b = psi.B - 1j * X / nu
        amp = np.sqrt(np.pi / a) * np.exp(b * b / (4 * a) + psi.C)
        return np.abs(amp) ** 2 / (2 * np.pi * abs(nu))
    Xf = np.atleast_1d(X)

    def f(y):
        kernel = np.exp(1j * (0.5 * mu / nu) * y[:, None] ** 2 - 1j * np.outer(y, Xf) / nu)
        return np.asarray(psi(y))[:, None] * kernel

    res = integrate_line(f, cfg or AdaptiveConfig(atol=1e-12))
    w = np.abs(res.value) ** 2 / (2 * np.pi * abs(nu))
    return w.reshape(X.shape)


def fock_tomogram(n: int, X, frame: ReferenceFrame):
    """Fock-state tomogram psi_n(X/s)^2 / s, s = sqrt(mu^2 + nu^2)."""
    if not 0 <= n <= 100:
        raise RangeError("Fock index outside [0, 100]")
    s = frame.s
    X = np.asarray(X, dtype=float)
    return hermite_functions(n + 1, X / s)[n] ** 2 / s


def gaussian_tomogram_params(g: GaussianState, frame: ReferenceFrame) -> GaussianTomogramParams:
    """Mean and variance of mu q + nu p for psi = exp(-A x^2 + B x + C)."""
    A, B = g.A, g.B
    mu, nu = frame.mu, frame.nu
    two_re = 2 * (A + A.conjugate()).real
    var = abs(2 * A * nu - 1j * mu) ** 2 / two_re
    mean = (mu * (B + B.conjugate()) + 1j * nu * (2 * A * B.conjugate() - 2 * A.conjugate() * B)) / two_re
    return GaussianTomogramParams(float(mean.real), float(var))


def coherent_tomogram_params(alpha: complex, frame: ReferenceFrame) -> GaussianTomogramParams:
    alpha = complex(alpha)
    mean = math.sqrt(2) * (frame.mu * alpha.real + frame.nu * alpha.imag)
    return GaussianTomogramParams(mean, 0.5 * frame.s**2)


# --- displacement (Weyl) matrix elements --------------------------------------


def displacement_matrix(N: int, beta) -> np.ndarray:
    """<m|D(beta)|n> for m, n < N, vectorized over ``beta``.

    Built from normalized associated-Laguerre functions
    l_n^a(x) = sqrt(n!/(n+a)!) x^{a/2} e^{-x/2} L_n^a(x), x = |beta|^2, which
    satisfy a forward recurrence with all values bounded by 1, so nothing
    overflows. Returns shape ``beta.shape + (N, N)``.
    """
    beta = np.asarray(beta, dtype=complex)
    x = np.abs(beta) ** 2
    shape = beta.shape
    xf = x.ravel()
    a = np.arange(N)[:, None]
    with np.errstate(divide="ignore", invalid="ignore"):
        # 0 * log(0) at beta = 0, a = 0 is overwritten just below
        logx = np.where(xf > 0, np.log(np.where(xf > 0, xf, 1.0)), -np.inf)
        log_l0 = 0.5 * a * logx[None, :] - 0.5 * xf[None, :] - 0.5 * gammaln(a + 1)
    log_l0 = np.where(a == 0, -0.5 * xf[None, :], log_l0)
    ell = np.zeros((N, N) + xf.shape)  # ell[a, n, :]
    ell[:, 0] = np.exp(log_l0)
    if N > 1:
        ell[:, 1] = (1 + a - xf[None, :]) * ell[:, 0] / np.sqrt(1.0 + a)
    for n in range(1, N - 1):
        ell[:, n + 1] = (
            (2 * n + 1 + a - xf[None, :]) * ell[:, n] - np.sqrt(n * (n + a)) * ell[:, n - 1]
        ) / np.sqrt((n + 1) * (n + 1 + a))
    phase_b = np.angle(beta.ravel())
    phase_mb = np.angle(-beta.ravel().conj())
    out = np.zeros(xf.shape + (N, N), dtype=complex)
    for m in range(N):
        for n in range(N):
            if m >= n:
                al = m - n
                out[:, m, n] = np.exp(1j * al * phase_b) * ell[al, n]
            else:
                al = n - m
                out[:, m, n] = np.exp(1j * al * phase_mb) * ell[al, m]
    return out.reshape(shape + (N, N))


def frame_beta(mu, nu):
    return (np.asarray(nu) - 1j * np.asarray(mu)) / math.sqrt(2)


def weyl_matrix(N: int, X: float, frame: ReferenceFrame, method: str = "closed") -> np.ndarray:
    """Matrix of <n| exp(i(X - mu q - nu p)) |n'> for n, n' < N.

    ``method="closed"`` uses the Laguerre closed form; ``"quadrature"``
    integrates e^{iX} e^{i mu nu/2} psi_n(x) psi_n'(x - nu) e^{-i mu x} over x.
    """
    if not 1 <= N <= WEYL_MAX + 1:
        raise RangeError(f"Weyl matrix size {N} outside [1, {WEYL_MAX + 1}]")
    mu, nu = frame.mu, frame.nu
    if method == "closed":
        return np.exp(1j * X) * displacement_matrix(N, frame_beta(mu, nu))
    if method == "quadrature":
        half = 12.0 + math.sqrt(2 * N) + abs(nu)
        panels = int(math.ceil(2 * half * (1 + abs(mu) / 4)))
        x, w = composite_legendre(0.5 * nu - half, 0.5 * nu + half, panels, 20)
        left = hermite_functions(N, x) * (w * np.exp(-1j * mu * x))
        right = hermite_functions(N, x - nu)
        return np.exp(1j * X + 0.5j * mu * nu) * (left @ right.T)
    raise ValueError(f"unknown method {method!r}")


def weyl_element(n: int, n_prime: int, X: float, frame: ReferenceFrame, method: str = "closed") -> complex:
    if not (0 <= n <= WEYL_MAX and 0 <= n_prime <= WEYL_MAX):
        raise RangeError(f"Fock indices must lie in [0, {WEYL_MAX}]")
    N = max(n, n_prime) + 1
    return complex(weyl_matrix(N, X, frame, method)[n, n_prime])


# --- tomogram objects ----------------------------------------------------------


class SymplecticTomogram:
    """A tomogram w(X | mu, nu).

    Subclasses implement ``evaluate`` (vectorized over X, scalar frame) and
    ``moments`` (mean, variance of the quadrature on the unit frame at angle
    theta). ``characteristic`` is the integral of w e^{iX} over X; the
    default computes it numerically.
    """

    def evaluate(self, X, mu: float, nu: float):
        raise NotImplementedError

    def __call__(self, X, frame: ReferenceFrame):
        return self.evaluate(X, frame.mu, frame.nu)

    def moments(self, theta: float) -> tuple[float, float]:
        mu, nu = math.cos(theta), math.sin(theta)
        f = lambda u: np.asarray(self.evaluate(u, mu, nu))[:, None] * np.stack([np.ones_like(u), u, u * u], 1)
        m0, m1, m2 = integrate_line(f, AdaptiveConfig(atol=1e-10)).value.real
        mean = m1 / m0
        return mean, m2 / m0 - mean * mean

    def has_closed_characteristic(self) -> bool:
        return False

    def characteristic(self, mu, nu):
        raise NotImplementedError


class GaussianTomogram(SymplecticTomogram):
    def __init__(self, g: GaussianState):
        self.g = g

    def params(self, mu, nu) -> GaussianTomogramParams:
        return gaussian_tomogram_params(self.g, ReferenceFrame(mu, nu))

    def evaluate(self, X, mu, nu):
        return self.params(mu, nu).density(X)

    def moments(self, theta):
        p = self.params(math.cos(theta), math.sin(theta))
        return p.mean, p.var

    def has_closed_characteristic(self):
        return True

    def characteristic(self, mu, nu):
        """exp(i mean - var/2), vectorized over frames."""
        mu, nu = np.broadcast_arrays(np.asarray(mu, float), np.asarray(nu, float))
        A, B = self.g.A, self.g.B
        two_re = 4 * A.real
        var = np.abs(2 * A * nu - 1j * mu) ** 2 / two_re
        mean = ((mu * 2 * B.real) + 1j * nu * (2 * A * B.conjugate() - 2 * A.conjugate() * B)).real / two_re
        return np.exp(1j * mean - 0.5 * var)


class FockTomogram(SymplecticTomogram):
    def __init__(self, n: int):
        self.n = n

    def evaluate(self, X, mu, nu):
        return fock_tomogram(self.n, X, ReferenceFrame(mu, nu))

    def moments(self, theta):
        return 0.0, self.n + 0.5

    def has_closed_characteristic(self):
        return True

    def characteristic(self, mu, nu):
        """<n|D|n> = e^{-s^2/4} L_n(s^2/2), vectorized over frames."""
        s2 = np.asarray(mu, float) ** 2 + np.asarray(nu, float) ** 2
        beta = np.sqrt(0.5 * s2).astype(complex)
        return displacement_matrix(self.n + 1, beta)[..., self.n, self.n].real


class PsiTomogram(SymplecticTomogram):
    """Tomogram of a wavefunction evaluated by quadrature."""

    def __init__(self, psi: Callable, cfg: AdaptiveConfig | None = None):
        self.psi = psi
        self.cfg = cfg

    def evaluate(self, X, mu, nu):
        return tomogram_from_psi(self.psi, X, ReferenceFrame(mu, nu), self.cfg)


def _ray_weyl(N: int, k: np.ndarray) -> np.ndarray:
    """D(-k beta0) on the theta = 0 unit frame, beta0 = -i/sqrt(2)."""
    return displacement_matrix(N, 1j * k / math.sqrt(2))


@lru_cache(maxsize=16)
def _k_rule(N: int):
    k_max = math.sqrt(2.0 * (4 * N + 60))
    panels = int(math.ceil(k_max / 0.25))
    k, wk = composite_legendre(0.0, k_max, panels, 16)
    return k, wk, _ray_weyl(N, k)


def _check_density(rho, tol=1e-8):
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise InvalidStateError("density matrix must be square")
    if np.max(np.abs(rho - rho.conj().T)) > tol:
        raise InvalidStateError("density matrix is not Hermitian")
    tr = np.trace(rho).real
    if tr > 1 + tol or tr <= 0:
        raise InvalidStateError(f"trace {tr} outside (0, 1]")
    if np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))[0] < -tol:
        raise InvalidStateError("density matrix has a negative eigenvalue")
    return rho


class DensityTomogram(SymplecticTomogram):
    """w(X | mu, nu) = Tr[rho delta(X - mu q - nu p)] for a Fock-basis rho.

    The delta function is written as the Fourier integral
    (1/2pi) int dk e^{-ikX} exp(ik(mu q + nu p)), whose matrix elements are
    displacement-operator elements. On the unit frame at angle theta the
    characteristic function is
    chi(k) = sum rho_{n'n} e^{i(n-n')theta} <n|D(-k beta0)|n'>.
    """

    def __init__(self, rho):
        self.rho = _check_density(rho)
        self.N = self.rho.shape[0]
        # diagnostic only: number of values clipped from [-1e-12, 0) to 0
        self.clipped = 0

    def _chi_ray(self, theta):
        k, wk, D = _k_rule(self.N)
        n = np.arange(self.N)
        rot = np.exp(1j * (n[:, None] - n[None, :]) * theta)
        chi = np.einsum("nm,knm->k", self.rho.T * rot, D)
        return k, wk, chi

    def unit_tomogram(self, u, theta):
        u = np.asarray(u, dtype=float)
        k, wk, chi = self._chi_ray(theta)
        # chi(-k) = conj chi(k), so w = (1/pi) Re int_0^inf e^{-iku} chi(k) dk
        vals = (np.exp(-1j * np.outer(u.ravel(), k)) @ (wk * chi)).real / math.pi
        return vals.reshape(u.shape)

    def evaluate(self, X, mu, nu):
        f = ReferenceFrame(mu, nu)
        s = f.s
        w, count = _clip(self.unit_tomogram(np.asarray(X, float) / s, f.theta) / s)
        self.clipped += count
        return w

    def moments(self, theta):
        N = self.N
        big = np.zeros((N + 2, N + 2), dtype=complex)
        big[:N, :N] = self.rho
        a = np.diag(np.sqrt(np.arange(1, N + 2)), 1)
        q = (a + a.T) / math.sqrt(2)
        p = (a - a.T) / (1j * math.sqrt(2))
        Xop = math.cos(theta) * q + math.sin(theta) * p
        tr = np.trace(big).real
        mean = np.trace(big @ Xop).real / tr
        return mean, np.trace(big @ Xop @ Xop).real / tr - mean * mean

    def has_closed_characteristic(self):
        return True

    def characteristic(self, mu, nu):
        mu, nu = np.broadcast_arrays(np.asarray(mu, float), np.asarray(nu, float))
        # exp(i(mu q + nu p)) = D(-beta)
        D = displacement_matrix(self.N, -frame_beta(mu, nu))
        return np.einsum("nm,...mn->...", self.rho, D)


def tomogram_from_density(rho, X, frame: ReferenceFrame):
    return DensityTomogram(rho).evaluate(X, frame.mu, frame.nu)


class GridTomogram(SymplecticTomogram):
    """Empirical tomogram on a grid of frames and X values.

    A requested frame is served by the stored frame of nearest direction
    (mirror frames included via w(X | -mu, -nu) = w(-X | mu, nu)), rescaled
    to the requested length and linearly interpolated in X (zero outside).
    """

    def __init__(self, X, mu, nu, w):
        X, mu, nu, w = (np.asarray(v, dtype=float) for v in (X, mu, nu, w))
        frames = {}
        for key in sorted(set(zip(mu.tolist(), nu.tolist()))):
            sel = (mu == key[0]) & (nu == key[1])
            order = np.argsort(X[sel])
            frames[key] = (X[sel][order], w[sel][order])
        if not frames:
            raise ValueError("empty tomogram grid")
        self.frames = frames
        self._keys = list(frames)
        self._theta = np.array([math.atan2(n, m) for m, n in self._keys])
        self._s = np.array([math.hypot(m, n) for m, n in self._keys])

    def evaluate(self, X, mu, nu):
        f = ReferenceFrame(mu, nu)
        X = np.asarray(X, dtype=float)
        d = np.angle(np.exp(1j * (self._theta - f.theta)))
        d_mirror = np.angle(np.exp(1j * (self._theta + math.pi - f.theta)))
        i, j = int(np.argmin(np.abs(d))), int(np.argmin(np.abs(d_mirror)))
        mirror = abs(d_mirror[j]) < abs(d[i])
        idx = j if mirror else i
        xs, ws = self.frames[self._keys[idx]]
        ratio = self._s[idx] / f.s
        u = X * ratio
        if mirror:
            u = -u
        return ratio * np.interp(u, xs, ws, left=0.0, right=0.0)

    def coarsened(self) -> "GridTomogram":
        """The same grid keeping every other X sample (endpoints kept) in each frame."""
        g = object.__new__(GridTomogram)
        g.frames = {}
        for k, (xs, ws) in self.frames.items():
            keep = np.unique(np.append(np.arange(0, len(xs), 2), len(xs) - 1))
            g.frames[k] = (xs[keep], ws[keep])
        g._keys, g._theta, g._s = self._keys, self._theta, self._s
        return g

    def moments(self, theta):
        f = ReferenceFrame.polar(1.0, theta)
        lo = min(xs[0] / s for (xs, _), s in zip(self.frames.values(), self._s))
        hi = max(xs[-1] / s for (xs, _), s in zip(self.frames.values(), self._s))
        u = np.linspace(min(lo, -hi), max(hi, -lo), 4001)
        w = self.evaluate(u, f.mu, f.nu)
        m0 = np.trapezoid(w, u)
        if m0 <= 0:
            return 0.0, 1.0
        mean = np.trapezoid(w * u, u) / m0
        return mean, max(np.trapezoid(w * u * u, u) / m0 - mean**2, 1e-6)


def tomogram_for_state(spec, method: str = "closed") -> SymplecticTomogram:
    """Tomogram object for a state spec (closed forms when available)."""
    from tomrep import states

    if method == "quadrature":
        return PsiTomogram(states.wavefunction(spec))
    if isinstance(spec, states.FockSpec):
        return FockTomogram(spec.n)
    return GaussianTomogram(states.as_gaussian(spec))


# --- reconstruction -------------------------------------------------------------


@dataclass(frozen=True)
class ReconstructionConfig:
    s_max: float = 10.0
    radial_nodes: int = 96
    angles: int = 64
    window_sds: float = 10.0
    tol: float = 1e-6
    analytic_inner: bool = False


@dataclass(frozen=True)
class ReconstructionResult:
    rho: np.ndarray
    trace_residual: float
    hermiticity_residual: float
    quadrature_error: float


def _unit_window(tomogram: SymplecticTomogram, theta: float, sds: float):
    mean, var = tomogram.moments(theta)
    half = sds * math.sqrt(max(var, 1e-12)) + 8.0
    return mean, half


def characteristic_polar(
    tomogram: SymplecticTomogram, s_nodes: np.ndarray, thetas: np.ndarray, cfg: ReconstructionConfig
) -> np.ndarray:
    """chi(s, theta) = integral of w(X | s cos theta, s sin theta) e^{iX} dX.

    The X integral is done once per angle on the unit frame, using
    w(X | s e_theta) = w(X/s | e_theta)/s, so that
    chi(s, theta) = integral of w(u | e_theta) e^{isu} du. Returns shape
    ``(len(thetas), len(s_nodes))``.
    """
    out = np.empty((len(thetas), len(s_nodes)), dtype=complex)
    for i, th in enumerate(thetas):
        mu, nu = math.cos(th), math.sin(th)
        if cfg.analytic_inner and tomogram.has_closed_characteristic():
            out[i] = tomogram.characteristic(s_nodes * mu, s_nodes * nu)
            continue
        center, half = _unit_window(tomogram, th, cfg.window_sds)
        # panel width 0.5 resolves e^{isu} for s <= s_max ~ 10 with 16-point panels
        panels = int(math.ceil(2 * half / 0.5 * max(1.0, cfg.s_max / 10.0)))
        u, wu = composite_legendre(center - half, center + half, panels, 16)
        w = np.asarray(tomogram.evaluate(u, mu, nu), dtype=float)
        out[i] = np.exp(1j * np.outer(s_nodes, u)) @ (wu * w)
    return out


def _assemble(chi, s, ws, thetas, N):
    D0 = displacement_matrix(N, -1j * s / math.sqrt(2))  # (S, N, N)
    n = np.arange(N)
    dtheta = 2 * math.pi / len(thetas)
    radial = np.einsum("ts,s,snm->tnm", chi, ws * s, D0)
    rot = np.exp(1j * (n[:, None] - n[None, :])[None, :, :] * np.asarray(thetas)[:, None, None])
    return (radial * rot).sum(axis=0) * dtheta / (2 * math.pi)


def density_from_tomogram(
    w: SymplecticTomogram, N: int, cfg: ReconstructionConfig | None = None, check: bool = True
) -> ReconstructionResult:
    """<n|rho|n'> = (1/2pi) int w(X|mu,nu) <n|e^{i(X - mu q - nu p)}|n'> dX dmu dnu.

    Polar (s, theta) grid: Gauss-Legendre in s on [0, s_max], uniform theta.
    The quadrature error is estimated against a rule with half the radial
    nodes and every other angle, plus the size of the integrand at the radial
    cutoff; with ``check`` an ``AccuracyError`` (carrying the result) is
    raised when it exceeds ``cfg.tol``.
    """
    cfg = cfg or ReconstructionConfig()
    if not 1 <= N <= 48:
        raise RangeError("N must lie in [1, 48]")
    thetas = 2 * math.pi * np.arange(cfg.angles) / cfg.angles
    s, ws = gauss_legendre(0.0, cfg.s_max, cfg.radial_nodes)
    s_c, ws_c = gauss_legendre(0.0, cfg.s_max, cfg.radial_nodes // 2)
    chi = characteristic_polar(w, np.concatenate([s, s_c, [cfg.s_max]]), thetas, cfg)
    n_s = len(s)
    rho = _assemble(chi[:, :n_s], s, ws, thetas, N)
    coarse = _assemble(chi[::2, n_s:-1], s_c, ws_c, thetas[::2], N)
    tail = float(np.max(np.abs(chi[:, -1]))) * cfg.s_max
    err = float(np.max(np.abs(rho - coarse))) + tail
    result = ReconstructionResult(
        rho,
        abs(float(np.trace(rho).real) - 1.0),
        float(np.max(np.abs(rho - rho.conj().T))),
        err,
    )
    if check and err > cfg.tol:
        raise AccuracyError(f"reconstruction quadrature error {err:.3g} > {cfg.tol:.3g}", best=result, error=err)
    return result
