"""Transition probabilities |<psi1|psi2>|^2 computed three independent ways."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from tomrep import states
from tomrep.errors import AccuracyError
from tomrep.special_math import AdaptiveConfig, gauss_hermite_rule, gauss_legendre, integrate_line
from tomrep.states import GaussianState
from tomrep.tomography import (
    ReconstructionConfig,
    SymplecticTomogram,
    characteristic_polar,
    gaussian_tomogram_params,
    ReferenceFrame,
)

CLIP = 1e-8


@dataclass(frozen=True)
class TransitionResult:
    probability: float
    method: str
    error: float
    imag_residual: float = 0.0


def _clipped(p: float, method: str, error: float, imag: float = 0.0) -> TransitionResult:
    if not -CLIP <= p <= 1 + CLIP:
        raise AccuracyError(f"{method} probability {p} outside [0, 1]", best=p, error=error)
    return TransitionResult(min(max(p, 0.0), 1.0), method, error, imag)


def gaussian_overlap(g1: GaussianState, g2: GaussianState) -> complex:
    """<g1|g2> in closed form."""
    a = g1.A.conjugate() + g2.A
    b = g1.B.conjugate() + g2.B
    c = g1.C.conjugate() + g2.C
    return complex(np.sqrt(np.pi / a) * np.exp(b * b / (4 * a) + c))


def born_probability(spec1, spec2) -> TransitionResult:
    """|integral conj(psi1) psi2 dx|^2; closed form when both states are Gaussian."""
    g1, g2 = states.as_gaussian(spec1), states.as_gaussian(spec2)
    if g1 is not None and g2 is not None:
        return _clipped(abs(gaussian_overlap(g1, g2)) ** 2, "born", 1e-15)
    psi1, psi2 = states.wavefunction(spec1), states.wavefunction(spec2)
    res = integrate_line(lambda x: np.conj(psi1(x)) * psi2(x), AdaptiveConfig(atol=1e-13))
    amp = complex(res.value)
    return _clipped(abs(amp) ** 2, "born", 2 * abs(amp) * res.error)


@dataclass(frozen=True)
class TransitionConfig:
    s_max: float = 10.0
    radial_nodes: int = 96
    angles: int = 64
    analytic_inner: bool = True
    imag_tol: float = 1e-4
    # the cutoff grows by 1.5x while |chi1 chi2| s at the edge exceeds this
    tail_tol: float = 1e-10
    s_limit: float = 60.0


def _polar_product(w1, w2, s_max, cfg):
    rcfg = ReconstructionConfig(s_max=s_max, analytic_inner=cfg.analytic_inner)
    thetas = 2 * math.pi * np.arange(cfg.angles) / cfg.angles
    nodes = max(cfg.radial_nodes, int(math.ceil(cfg.radial_nodes * s_max / 10.0)))
    s, ws = gauss_legendre(0.0, s_max, nodes)
    s_all = np.append(s, s_max)
    chi1 = characteristic_polar(w1, s_all, thetas, rcfg)
    chi2 = characteristic_polar(w2, s_all, thetas, rcfg)
    # (-mu, -nu) sits half a turn away on the angle grid
    prod = chi1 * np.roll(chi2, -cfg.angles // 2, axis=0)
    return prod[:, :-1] * (ws * s)[None, :], float(np.max(np.abs(prod[:, -1]))) * s_max


def tomographic_transition(
    w1: SymplecticTomogram, w2: SymplecticTomogram, cfg: TransitionConfig | None = None
) -> TransitionResult:
    """(1/2pi) int w1(X|mu,nu) w2(Y|-mu,-nu) e^{i(X+Y)} dX dY dmu dnu.

    The X and Y integrals are characteristic functions (closed form when the
    tomogram provides one, quadrature otherwise); the (mu, nu) integral runs
    on a polar grid with an even number of angles so that (-mu, -nu) is the
    grid angle theta + pi. The radial cutoff starts at ``cfg.s_max`` and is
    extended while the integrand is still significant there.
    """
    cfg = cfg or TransitionConfig()
    if cfg.angles % 2:
        raise ValueError("angle count must be even")
    s_max = cfg.s_max
    integrand, tail = _polar_product(w1, w2, s_max, cfg)
    while tail > cfg.tail_tol and s_max * 1.5 <= cfg.s_limit:
        s_max *= 1.5
        integrand, tail = _polar_product(w1, w2, s_max, cfg)
    dtheta = 2 * math.pi / cfg.angles
    total = integrand.sum() * dtheta / (2 * math.pi)
    coarse = integrand[::2].sum() * 2 * dtheta / (2 * math.pi)
    err = abs(total - coarse) + tail
    if abs(total.imag) > cfg.imag_tol:
        raise AccuracyError(f"imaginary residual {total.imag:.3g}", best=total, error=err)
    if err > cfg.imag_tol:
        raise AccuracyError(f"(mu, nu) integral not converged: error {err:.3g}", best=total, error=err)
    return _clipped(float(total.real), "tomographic", err, float(total.imag))


def gaussian_transition(g1: GaussianState, g2: GaussianState, order: int = 48) -> TransitionResult:
    """Gaussian-tomogram transition probability.

    With both tomograms normal laws, the X and Y integrals give
    exp(i(mean1 - mean2) - (var1 + var2)/2); the remaining (mu, nu) integral
    is a 2-D Gauss-Hermite rule mapped onto the quadratic form var1 + var2.
    """
    frame_x, frame_y = ReferenceFrame(1, 0), ReferenceFrame(0, 1)
    # var(mu, nu) is a quadratic form; mean is linear
    def quad_form(g):
        vx = gaussian_tomogram_params(g, frame_x).var
        vy = gaussian_tomogram_params(g, frame_y).var
        vxy = 0.5 * (gaussian_tomogram_params(g, ReferenceFrame(1, 1)).var - vx - vy)
        return np.array([[vx, vxy], [vxy, vy]])

    def mean_vec(g):
        return np.array([gaussian_tomogram_params(g, f).mean for f in (frame_x, frame_y)])

    Q = 0.5 * (quad_form(g1) + quad_form(g2))
    d = mean_vec(g1) - mean_vec(g2)
    L = np.linalg.cholesky(Q)
    Linv_T = np.linalg.inv(L).T
    rule = gauss_hermite_rule(order)
    t1, t2 = np.meshgrid(rule.nodes, rule.nodes, indexing="ij")
    W = np.outer(rule.weights, rule.weights)
    # (mu, nu) = L^{-T} t  =>  (mu, nu) Q (mu, nu)^T = |t|^2
    pts = np.einsum("ij,jab->iab", Linv_T, np.stack([t1, t2]))
    phase = np.exp(1j * np.einsum("i,iab->ab", d, pts))
    jac = abs(np.linalg.det(Linv_T))
    total = (W * phase).sum() * jac / (2 * math.pi)
    half = gauss_hermite_rule(order // 2)
    u1, u2 = np.meshgrid(half.nodes, half.nodes, indexing="ij")
    pts_c = np.einsum("ij,jab->iab", Linv_T, np.stack([u1, u2]))
    coarse = (np.outer(half.weights, half.weights) * np.exp(1j * np.einsum("i,iab->ab", d, pts_c))).sum() * jac / (2 * math.pi)
    return _clipped(float(total.real), "gaussian-closed", abs(total - coarse), float(total.imag))
