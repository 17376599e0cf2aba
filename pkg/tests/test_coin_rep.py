import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from tomrep import coin_rep as cr
from tomrep import qubit as qb
from tomrep.errors import InvalidStateError

E1 = math.exp(-1.0)


def random_density(rng, N):
    G = rng.normal(size=(N, N)) + 1j * rng.normal(size=(N, N))
    rho = G.conj().T @ G
    return rho / np.trace(rho).real


def test_fock_projector_coins():
    c = cr.coins_from_density(cr.fock_density(2, 5))
    assert c.diag.tolist() == [0, 0, 1, 0, 0]
    assert np.all(c.p1 == 0.5) and np.all(c.p2 == 0.5)


def test_coherent_coins_poisson_and_first_pair():
    c = cr.coins_from_density(cr.coherent_density(1.0, 12))
    assert c.diag[:3] == pytest.approx([E1, E1, E1 / 2], abs=1e-15)
    p1, p2 = c.get(0, 1)
    assert p1 == pytest.approx(0.5 + E1, abs=1e-15)
    assert p2 == pytest.approx(0.5, abs=1e-15)
    assert 0.5 + E1 == pytest.approx(0.86788, abs=1e-5)


def test_closed_form_examples():
    vac = cr.coherent_coin_closed_form(0.0, 0, 0)
    assert vac == {"p3": 1.0}
    assert cr.coherent_coin_closed_form(0.0, 0, 3) == {"p1": 0.5, "p2": 0.5}
    assert cr.coherent_coin_closed_form(1.0, 1, 1)["p3"] == pytest.approx(E1, abs=1e-15)
    c = cr.coherent_coin_closed_form(1j, 0, 1)
    assert c["p1"] == pytest.approx(0.5, abs=1e-15)
    assert c["p2"] == pytest.approx(0.5 + E1, abs=1e-15)


def test_closed_form_large_indices_do_not_overflow():
    c = cr.coherent_coin_closed_form(2.0, 170, 200)
    assert 0.5 - 1e-12 <= c["p1"] <= 0.5 + 1e-12


def test_density_from_coins_examples():
    c = cr.CoinProbabilities(3, np.array([1.0, 0.0, 0.0]), np.full(3, 0.5), np.full(3, 0.5))
    assert np.array_equal(cr.density_from_coins(c), cr.fock_density(0, 3))
    p = qb.QubitProbabilities(0.7, 0.2, 0.6)
    c2 = cr.coins_from_density(qb.density_from_probs(p))
    assert (c2.get(0, 1), c2.diag[0]) == ((pytest.approx(0.7), pytest.approx(0.2)), pytest.approx(0.6))
    assert np.allclose(cr.density_from_coins(c2), qb.density_from_probs(p), atol=1e-15)
    alpha = 1.0
    rho = cr.density_from_coins(cr.coins_from_density(cr.coherent_density(alpha, 12)))
    exact = cr.coherent_density(alpha, 40)[:12, :12]
    assert np.max(np.abs(rho - exact)) <= 1e-6


@pytest.mark.parametrize("N", [1, 2, 7, 33, 64])
def test_roundtrip_exact(N):
    rng = np.random.default_rng(N)
    rho = random_density(rng, N)
    back = cr.density_from_coins(cr.coins_from_density(rho))
    # 1/2 + Re(rho) rounds to the binary64 grid near 1/2: one half-ulp of 1 is the floor
    assert np.max(np.abs(back - rho)) <= 2.0**-53
    assert np.array_equal(back.diagonal(), rho.diagonal().real)


@given(st.integers(2, 12), st.integers(0, 2**32 - 1))
def test_coins_density_coins_is_bitwise_identity(N, seed):
    c = cr.coins_from_density(random_density(np.random.default_rng(seed), N))
    # coins at least 1/4 survive the shift by 1/2 exactly
    c = cr.CoinProbabilities(N, c.diag, np.clip(c.p1, 0.25, 1.0), np.clip(c.p2, 0.25, 1.0))
    back = cr.coins_from_density(cr.density_from_coins(c), tol=1.0)
    assert np.array_equal(back.p1, c.p1) and np.array_equal(back.p2, c.p2)
    assert np.array_equal(back.diag, c.diag)


@given(st.integers(1, 16), st.integers(0, 2**32 - 1))
def test_physical_states_give_valid_coins(N, seed):
    c = cr.coins_from_density(random_density(np.random.default_rng(seed), N))
    for arr in (c.diag, c.p1, c.p2):
        assert np.all((arr >= 0) & (arr <= 1))


def test_diagonal_coin_equals_population():
    # p3 on the diagonal is the population itself (an equality, not a difference)
    rho = random_density(np.random.default_rng(5), 6)
    c = cr.coins_from_density(rho)
    assert np.array_equal(c.diag, rho.diagonal().real)
    assert c.diag.sum() == pytest.approx(1.0, abs=1e-14)


def test_unphysical_overflow_is_reported():
    bad = np.array([[0.5, 0.9], [0.9, 0.5]])
    with pytest.raises(InvalidStateError):
        cr.coins_from_density(bad)
    with pytest.raises(InvalidStateError):
        cr.coins_from_density(np.diag([0.8, 0.8]))


@pytest.mark.parametrize("alpha", [0.3, 1.0, 1.5 + 0.5j, 2.0])
def test_coherent_population_tail(alpha):
    N = 32
    c = cr.coins_from_density(cr.coherent_density(alpha, N))
    x = abs(alpha) ** 2
    bound = math.exp(-x) * x**N / math.factorial(N)
    tail = 1.0 - c.diag.sum()
    assert -1e-15 <= tail <= max(cr.poisson_tail_bound(alpha, N), bound) + 1e-15


def test_sylvester_examples():
    assert cr.sylvester_check(np.eye(4) / 4).positive
    v = cr.sylvester_check(np.diag([1.0, -0.1]) / 0.9)
    assert not v.positive and v.failing_minor == 2
    rho = cr.density_from_coins(cr.coins_from_density(cr.coherent_density(0.7 - 0.4j, 10)))
    assert cr.sylvester_check(rho).positive


@given(st.integers(1, 8), st.integers(0, 2**32 - 1), st.booleans())
def test_sylvester_agrees_with_spectrum(N, seed, shift):
    rng = np.random.default_rng(seed)
    G = rng.normal(size=(N, N)) + 1j * rng.normal(size=(N, N))
    H = G + G.conj().T
    if shift:
        H = H + (abs(np.linalg.eigvalsh(H)[0]) + rng.uniform(-0.5, 0.5)) * np.eye(N)
    verdict = cr.sylvester_check(H)
    assert verdict.positive == (np.linalg.eigvalsh(H)[0] >= -1e-10)


def test_joint_examples():
    j = cr.qubit_to_joint(qb.QubitProbabilities(0.5, 0.5, 0.5))
    assert np.allclose(j.W, 1 / 6, atol=1e-16)
    j = cr.qubit_to_joint(qb.QubitProbabilities(1.0, 0.5, 0.5))
    assert j.W[0, 0] == pytest.approx(1 / 3) and j.W[1, 0] == 0.0
    assert np.allclose(j.W[:, 1:], 1 / 6)


@given(st.floats(0, 1), st.floats(0, 1), st.floats(0, 1))
def test_joint_marginal_and_roundtrip(a, b, c):
    p = qb.QubitProbabilities(a, b, c)
    j = cr.qubit_to_joint(p)
    assert abs(j.W.sum() - 1.0) <= 1e-12
    assert np.allclose(j.marginal(), 1 / 3, atol=1e-12)
    back = cr.joint_to_qubit(j)
    assert np.allclose(back.as_array(), p.as_array(), atol=1e-15)


@given(st.floats(0, 1), st.floats(0, 1), st.floats(0, 1))
def test_conditional_divides_by_marginal(a, b, c):
    j = cr.qubit_to_joint(qb.QubitProbabilities(a, b, c))
    cond = j.conditional()
    # only W(j,k)/P(k) is a distribution over j; the product W(j,k)P(k) sums to 1/9
    assert np.allclose(cond.sum(axis=0), 1.0, atol=1e-12)
    assert np.allclose((j.W * j.marginal()[None, :]).sum(axis=0), 1 / 9, atol=1e-12)
    assert np.allclose(cond[0], [a, b, c], atol=1e-12)


def test_joint_pi_vector_order():
    j = cr.qubit_to_joint(qb.QubitProbabilities(0.9, 0.3, 0.6))
    assert np.allclose(cr.joint_pi_vector(j), np.array([0.9, 0.1, 0.3, 0.7, 0.6, 0.4]) / 3)


def test_json_roundtrip():
    c = cr.coins_from_density(cr.coherent_density(0.4 + 0.3j, 5))
    text = json.dumps(c.to_json())
    back = cr.CoinProbabilities.from_json(json.loads(text))
    assert np.array_equal(back.diag, c.diag)
    assert np.array_equal(back.p1, c.p1) and np.array_equal(back.p2, c.p2)
    assert json.loads(text)["off"][0] == {"n": 0, "np": 1, "p1": c.p1[0], "p2": c.p2[0]}
