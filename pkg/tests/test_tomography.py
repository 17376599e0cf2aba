import math
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.linalg import expm

from tomrep import states as S
from tomrep import tomography as T
from tomrep.coin_rep import coherent_coin_closed_form, coherent_density, coins_from_density, fock_density
from tomrep.errors import AccuracyError, InvalidFrameError, InvalidStateError
from tomrep.special_math import AdaptiveConfig, hermite_functions, integrate_line

INV_SQRT_PI = 1 / math.sqrt(math.pi)
F = T.ReferenceFrame

frames = st.tuples(st.floats(-3, 3), st.floats(-3, 3)).filter(lambda f: math.hypot(*f) > 0.05)


def line_norm(fn):
    return integrate_line(fn, AdaptiveConfig(atol=1e-12)).value.real


def quadrature_ops(N):
    a = np.diag(np.sqrt(np.arange(1, N)), 1)
    return (a + a.T) / math.sqrt(2), (a - a.T) / (1j * math.sqrt(2))


def test_invalid_frame():
    with pytest.raises(InvalidFrameError):
        F(0, 0)


def test_psi_tomogram_examples():
    vac = lambda x: S.fock_psi(0, x)
    assert T.tomogram_from_psi(vac, 0.0, F(0, 1)) == pytest.approx(INV_SQRT_PI, abs=1e-12)
    X = np.linspace(-3, 3, 13)
    assert np.allclose(T.tomogram_from_psi(vac, X, F(1, 0)), INV_SQRT_PI * np.exp(-X * X), atol=1e-15)
    for th in np.linspace(0, 2 * math.pi, 7):
        w = T.tomogram_from_psi(lambda x: S.fock_psi(1, x), X, F(math.cos(th), math.sin(th)))
        assert np.allclose(w, 2 * X * X * INV_SQRT_PI * np.exp(-X * X), atol=1e-10)


def test_fock_tomogram_examples():
    assert T.fock_tomogram(0, 0.0, F(1, 0)) == pytest.approx(INV_SQRT_PI, abs=1e-15)
    assert T.fock_tomogram(0, 0.0, F(2, 0)) == pytest.approx(INV_SQRT_PI / 2, abs=1e-15)
    assert T.fock_tomogram(0, 0.0, F(2, 0)) == pytest.approx(0.28209, abs=1e-5)
    for n in range(11):
        assert line_norm(lambda x: T.fock_tomogram(n, x, F(0.3, -1.7))) == pytest.approx(1.0, abs=1e-8)


@pytest.mark.parametrize("n", [0, 1, 4, 7])
@pytest.mark.parametrize("frame", [F(2.0, 0.0), F(0.6, 1.3), F(-1.1, -0.4)])
def test_fock_tomogram_scaled_exponent_matches_fresnel_quadrature(n, frame):
    X = np.linspace(-5, 5, 21)
    closed = T.fock_tomogram(n, X, frame)
    quad = T.tomogram_from_psi(lambda x: S.fock_psi(n, x), X, frame)
    assert np.max(np.abs(closed - quad)) <= 1e-6
    # the unscaled exponent exp(-X^2) only integrates to 1 on unit frames
    s = frame.s
    unscaled = lambda x: np.exp(-x * x) / (math.sqrt(math.pi) * s) * (hermite_functions(n + 1, x / s)[n] ** 2 * np.exp(x * x / s**2))
    assert abs(line_norm(unscaled) - 1.0) > 1e-2


def test_gaussian_params_examples():
    vac = S.normalize(S.GaussianState(0.5))
    p = T.gaussian_tomogram_params(vac, F(1, 0))
    assert (p.mean, p.var) == pytest.approx((0.0, 0.5), abs=1e-15)
    coh = S.GaussianState.coherent(1.0)
    p = T.gaussian_tomogram_params(coh, F(1, 0))
    assert (p.mean, p.var) == pytest.approx((math.sqrt(2), 0.5), abs=1e-15)
    p = T.gaussian_tomogram_params(coh, F(0, 1))
    assert (p.mean, p.var) == pytest.approx((0.0, 0.5), abs=1e-15)
    with pytest.raises(InvalidStateError):
        S.GaussianState(-0.1)


@given(st.complex_numbers(max_magnitude=2.0), frames)
def test_coherent_params_agree_with_generic(alpha, f):
    frame = F(*f)
    a = T.coherent_tomogram_params(alpha, frame)
    b = T.gaussian_tomogram_params(S.GaussianState.coherent(alpha), frame)
    assert abs(a.mean - b.mean) <= 1e-12 and abs(a.var - b.var) <= 1e-12


def test_gaussian_tomogram_variance_convention_normalizes():
    vac = S.normalize(S.GaussianState(0.5))
    p = T.gaussian_tomogram_params(vac, F(1, 0))
    X = np.linspace(-4, 4, 33)
    # variance convention exp(-(X-m)^2/(2 var)) reproduces the vacuum position density
    assert np.allclose(p.density(X), INV_SQRT_PI * np.exp(-X * X), atol=1e-15)
    assert line_norm(p.density) == pytest.approx(1.0, abs=1e-12)
    # the exponent /var with the same prefactor integrates to 1/sqrt(2)
    alt = lambda x: np.exp(-((x - p.mean) ** 2) / p.var) / math.sqrt(2 * math.pi * p.var)
    assert line_norm(alt) == pytest.approx(1 / math.sqrt(2), abs=1e-12)


@pytest.mark.parametrize(
    "g",
    [
        S.GaussianState.coherent(1.0 - 0.5j),
        S.normalize(S.GaussianState(1.3 - 0.6j, 0.4 + 0.2j)),
        S.normalize(S.GaussianState(0.35 + 0.9j, -0.7j)),
    ],
)
def test_gaussian_tomogram_matches_fresnel_quadrature(g):
    X = np.linspace(-5, 5, 21)
    for th in np.linspace(0.1, 2 * math.pi, 8, endpoint=False):
        frame = F(1.3 * math.cos(th), 1.3 * math.sin(th))
        closed = T.GaussianTomogram(g)(X, frame)
        quad = T.tomogram_from_psi(g.psi, X, frame)
        assert np.max(np.abs(closed - quad)) <= 1e-6


@given(st.integers(0, 10), frames)
def test_fock_normalization_property(n, f):
    assert line_norm(lambda x: T.fock_tomogram(n, x, F(*f))) == pytest.approx(1.0, abs=1e-8)


@given(st.integers(0, 6), frames, st.floats(0.2, 4.0), st.floats(-4, 4))
def test_homogeneity(n, f, lam, X):
    frame, scaled = F(*f), F(lam * f[0], lam * f[1])
    lhs = T.fock_tomogram(n, X, scaled)
    rhs = T.fock_tomogram(n, X / lam, frame) / lam
    assert abs(lhs - rhs) <= 1e-8
    g = T.GaussianTomogram(S.normalize(S.GaussianState(0.7 + 0.3j, 0.5 - 0.2j)))
    mirror = F(-lam * f[0], -lam * f[1])
    assert abs(g(X, mirror) - g(-X / lam, frame) / lam) <= 1e-8


def test_nu_limit_branch_is_continuous():
    g = S.normalize(S.GaussianState(0.6 - 0.4j, 0.5 + 0.1j))
    X = np.linspace(-3, 3, 7)
    at_limit = T.tomogram_from_psi(g.psi, X, F(1.0, 5e-9))
    # closed-form Fresnel integral just above the threshold
    near = T.tomogram_from_psi(g, X, F(1.0, 2e-8))
    assert np.allclose(at_limit, near, atol=1e-6)
    assert np.allclose(at_limit, np.abs(g.psi(X)) ** 2, atol=1e-15)


def test_weyl_examples():
    for n in range(4):
        for m in range(4):
            val = T.weyl_element(n, m, 0.7, F(1e-300, 0.0))
            assert abs(val - (np.exp(0.7j) if n == m else 0.0)) <= 1e-14
    mu, nu = 0.8, -1.3
    e00 = T.weyl_element(0, 0, 0.0, F(mu, nu))
    assert abs(e00) == pytest.approx(math.exp(-(mu * mu + nu * nu) / 4), abs=1e-15)


@pytest.mark.parametrize("frame", [F(0.4, 0.0), F(-1.2, 0.9), F(2.0, 2.5), F(0.0, -3.0)])
def test_weyl_quadrature_matches_closed_form(frame):
    closed = T.weyl_matrix(12, 0.3, frame, "closed")
    quad = T.weyl_matrix(12, 0.3, frame, "quadrature")
    assert np.max(np.abs(closed - quad)) <= 1e-8


@pytest.mark.parametrize("frame", [F(-1.2, 0.9), F(0.5, 1.5)])
def test_weyl_matches_operator_exponential_oracle(frame):
    # e^{iX} exp(-i(mu q + nu p)) on a large truncated basis; compare the leading block
    big = 80
    q, p = quadrature_ops(big)
    X = -0.4
    oracle = np.exp(1j * X) * expm(-1j * (frame.mu * q + frame.nu * p))[:10, :10]
    assert np.max(np.abs(T.weyl_matrix(10, X, frame) - oracle)) <= 1e-10
    # psi_n'(x + nu) without the e^{i mu nu/2} phase is a different operator
    x = np.linspace(-15, 15, 6001)
    dx = x[1] - x[0]
    alt = np.exp(1j * X) * (hermite_functions(10, x) * np.exp(-1j * frame.mu * x)) @ hermite_functions(10, x + frame.nu).T * dx
    assert np.max(np.abs(alt - oracle)) > 1e-2


def test_weyl_unitarity_rows():
    D = T.weyl_matrix(48, 0.0, F(0.9, -1.4))
    rows = np.sum(np.abs(D[:6]) ** 2, axis=1)
    assert np.max(np.abs(rows - 1.0)) <= 1e-6


@given(st.integers(0, 8), st.integers(0, 8), st.floats(-3, 3), frames)
def test_weyl_conjugation_symmetry(n, m, X, f):
    lhs = T.weyl_element(n, m, X, F(*f))
    rhs = np.conj(T.weyl_element(m, n, X, F(-f[0], -f[1]))) * np.exp(2j * X)
    assert abs(lhs - rhs) <= 1e-8


def test_density_tomogram_examples():
    X = np.linspace(-4, 4, 17)
    assert np.allclose(T.tomogram_from_density(fock_density(0, 6), X, F(1, 0)), INV_SQRT_PI * np.exp(-X * X), atol=1e-10)
    mix = 0.5 * (fock_density(0, 4) + fock_density(1, 4))
    frame = F(0.3, 1.1)
    expected = 0.5 * (T.fock_tomogram(0, X, frame) + T.fock_tomogram(1, X, frame))
    assert np.allclose(T.tomogram_from_density(mix, X, frame), expected, atol=1e-10)


@pytest.mark.parametrize("frame", [F(1, 0), F(0.2, -1.4), F(-2.0, 0.5)])
def test_coherent_projector_tomogram_is_gaussian(frame):
    alpha = 1.0
    rho = coherent_density(alpha, 24)
    X = np.linspace(-6, 6, 41)
    w = T.tomogram_from_density(rho / np.trace(rho).real, X, frame)
    p = T.coherent_tomogram_params(alpha, frame)
    assert np.max(np.abs(w - p.density(X))) <= 1e-6


def test_density_tomogram_matches_psi_for_pure_state():
    g = S.normalize(S.GaussianState(0.9 - 0.2j, 0.3 + 0.3j))
    rho = S.density_matrix(S.GaussianSpec(g), 30)
    rho = rho / np.trace(rho).real
    X = np.linspace(-5, 5, 21)
    frame = F(0.7, -0.8)
    assert np.max(np.abs(T.DensityTomogram(rho)(X, frame) - T.tomogram_from_psi(g.psi, X, frame))) <= 1e-6


def test_density_tomogram_rejects_unphysical():
    with pytest.raises(InvalidStateError):
        T.DensityTomogram(np.diag([1.2, -0.2]))
    with pytest.raises(InvalidStateError):
        T.DensityTomogram(np.array([[0.5, 0.4], [0.1, 0.5]]))


@pytest.mark.filterwarnings("ignore::tomrep.tomography.ClippedNegativeWarning")
def test_clipping_policy():
    w, n = T._clip(np.array([0.2, -5e-13, 0.0]))
    assert n == 1 and w[1] == 0.0
    with pytest.raises(AccuracyError):
        T._clip(np.array([0.2, -1e-9]))


@pytest.mark.parametrize("n", [0, 1])
def test_reconstruct_fock(n):
    res = T.density_from_tomogram(T.FockTomogram(n), 8)
    target = fock_density(n, 8)
    assert np.max(np.abs(res.rho - target)) <= 1e-6
    assert res.trace_residual <= 1e-6 and res.hermiticity_residual <= 1e-6


def test_reconstruct_coherent_coins():
    alpha = 0.5
    res = T.density_from_tomogram(T.GaussianTomogram(S.GaussianState.coherent(alpha)), 8)
    c = coins_from_density(0.5 * (res.rho + res.rho.conj().T))
    for n in range(8):
        for m in range(n, 8):
            ref = coherent_coin_closed_form(alpha, n, m)
            if n == m:
                assert abs(c.diag[n] - ref["p3"]) <= 1e-5
            else:
                got = c.get(n, m)
                assert abs(got[0] - ref["p1"]) <= 1e-5 and abs(got[1] - ref["p2"]) <= 1e-5


def test_reconstruct_analytic_inner_agrees():
    tom = T.GaussianTomogram(S.normalize(S.GaussianState(0.8 + 0.3j, 0.2 - 0.4j)))
    # squeezed along one direction: chi decays slowly there, so the radial cutoff grows
    a = T.density_from_tomogram(tom, 10, T.ReconstructionConfig(s_max=14.0, radial_nodes=128)).rho
    b = T.density_from_tomogram(tom, 10, T.ReconstructionConfig(s_max=14.0, radial_nodes=128, analytic_inner=True)).rho
    assert np.max(np.abs(a - b)) <= 1e-8


def test_reconstruction_reports_truncation():
    cfg = T.ReconstructionConfig(s_max=4.0)
    with pytest.raises(AccuracyError) as info:
        T.density_from_tomogram(T.FockTomogram(2), 6, cfg)
    assert info.value.best is not None and info.value.error > cfg.tol


def test_grid_tomogram_reconstruction():
    alpha = 0.5
    g = S.GaussianState.coherent(alpha)
    k = 64
    th = 2 * math.pi * np.arange(k) / k
    X = np.linspace(-9, 9, 721)
    rows = [(x, math.cos(t), math.sin(t)) for t in th for x in X]
    Xs, mu, nu = (np.array(c) for c in zip(*rows))
    w = np.concatenate([T.GaussianTomogram(g).evaluate(X, math.cos(t), math.sin(t)) for t in th])
    grid = T.GridTomogram(Xs, mu, nu, w)
    assert grid(0.3, F(2.0, 0.0)) == pytest.approx(T.GaussianTomogram(g)(0.3, F(2.0, 0.0)), abs=1e-4)
    res = T.density_from_tomogram(grid, 4, check=False)
    exact = coherent_density(alpha, 4)
    assert np.max(np.abs(res.rho - exact)) <= 1e-3
