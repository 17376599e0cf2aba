"""Time evolution of coin probabilities.

The von Neumann equation i d(rho)/dt = [H, rho] is integrated directly and,
equivalently, as an affine system dPi/dt = M Pi + gamma on the coin
coordinates

    Pi = (p3^(0,0), ..., p3^(N-2,N-2), p1^(0,1), p2^(0,1), p1^(0,2), ...),

where the last diagonal coin is eliminated by normalization.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from tomrep.coin_rep import coherent_element, upper_pairs
from tomrep.errors import InvalidStateError
from tomrep.special_math import ode_solve


@dataclass(frozen=True)
class HamiltonianMatrix:
    """Hermitian H(t); ``matrix`` is used when time independent."""

    N: int
    matrix: np.ndarray | None = None
    func: Callable[[float], np.ndarray] | None = None

    def __post_init__(self):
        if (self.matrix is None) == (self.func is None):
            raise ValueError("give exactly one of matrix or func")
        if self.matrix is not None:
            m = np.asarray(self.matrix, dtype=complex)
            if m.shape != (self.N, self.N):
                raise ValueError("Hamiltonian shape does not match N")
            if np.max(np.abs(m - m.conj().T)) > 1e-12:
                raise InvalidStateError("Hamiltonian is not Hermitian")
            object.__setattr__(self, "matrix", m)

    @property
    def time_independent(self) -> bool:
        return self.matrix is not None

    def at(self, t: float) -> np.ndarray:
        if self.matrix is not None:
            return self.matrix
        h = np.asarray(self.func(t), dtype=complex)
        if np.max(np.abs(h - h.conj().T)) > 1e-12:
            raise InvalidStateError(f"Hamiltonian not Hermitian at t={t}")
        return h


def oscillator_hamiltonian(N: int) -> HamiltonianMatrix:
    """H_jk = (1/2 + j) delta_jk."""
    return HamiltonianMatrix(N, np.diag(0.5 + np.arange(N)).astype(complex))


def qubit_hamiltonian() -> HamiltonianMatrix:
    return HamiltonianMatrix(2, np.diag([0.5, -0.5]).astype(complex))


# --- coin chart ---------------------------------------------------------------


def chart_dim(N: int) -> int:
    return N * N - 1


def pi_from_density(rho) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    N = rho.shape[0]
    iu = np.triu_indices(N, 1)
    off = rho[iu]
    pairs = np.empty(2 * len(off))
    pairs[0::2] = 0.5 + off.real
    pairs[1::2] = 0.5 - off.imag
    return np.concatenate([rho.diagonal().real[: N - 1], pairs])


def density_from_pi(pi, N: int) -> np.ndarray:
    pi = np.asarray(pi, dtype=float)
    rho = np.zeros((N, N), dtype=complex)
    diag = pi[: N - 1]
    rho[np.diag_indices(N)] = np.append(diag, 1.0 - diag.sum())
    iu = np.triu_indices(N, 1)
    upper = (pi[N - 1 :: 2] - 0.5) - 1j * (pi[N::2] - 0.5)
    rho[iu] = upper
    rho[(iu[1], iu[0])] = upper.conj()
    return rho


def _linear_chart(drho: np.ndarray) -> np.ndarray:
    """Chart differential: coordinates of a traceless Hermitian perturbation."""
    N = drho.shape[0]
    off = drho[np.triu_indices(N, 1)]
    pairs = np.empty(2 * len(off))
    pairs[0::2] = off.real
    pairs[1::2] = -off.imag
    return np.concatenate([drho.diagonal().real[: N - 1], pairs])


# --- evolution ------------------------------------------------------------------


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    rhos: np.ndarray
    step: float

    def coins(self) -> np.ndarray:
        """Coin-coordinate vector at every time, shape (T, N^2 - 1)."""
        return np.array([pi_from_density(r) for r in self.rhos])

    def at(self, t: float) -> np.ndarray:
        i = int(np.argmin(np.abs(self.times - t)))
        if abs(self.times[i] - t) > 1e-9:
            raise ValueError(f"t={t} is not on the trajectory grid")
        return self.rhos[i]


def kinetic_evolve(rho0, H: HamiltonianMatrix, t_span=(0.0, 1.0), step: float = 1e-3) -> Trajectory:
    """RK4 integration of i d(rho)/dt = H rho - rho H. No renormalization."""
    rho0 = np.asarray(rho0, dtype=complex)
    N = H.N
    if rho0.shape != (N, N):
        raise ValueError("rho0 does not match Hamiltonian size")
    if np.max(np.abs(rho0 - rho0.conj().T)) > 1e-10:
        raise InvalidStateError("rho0 is not Hermitian")

    def rhs(t, y):
        r = y.reshape(N, N)
        h = H.at(t)
        return (-1j * (h @ r - r @ h)).ravel()

    sol = ode_solve(rhs, rho0.ravel(), t_span, step)
    return Trajectory(sol.times, sol.values.reshape(-1, N, N), sol.step)


def coherent_coin_trajectory(alpha: complex, n: int, n_prime: int, t: float) -> dict:
    """Coins of |alpha e^{-it}><alpha e^{-it}| for the oscillator H = a^dag a + 1/2.

    rho_{nn'}(t) = e^{-|alpha|^2} |alpha|^{n+n'} e^{i(phi - t)(n - n')} / sqrt(n! n'!),
    phi = arg alpha. Diagonal coins are constant in time.
    """
    if n > n_prime:
        raise ValueError("need n <= n'")
    alpha = complex(alpha)
    el = coherent_element(alpha * complex(math.cos(t), -math.sin(t)), n, n_prime)
    if n == n_prime:
        return {"p3": coherent_element(alpha, n, n).real}
    return {"p1": 0.5 + el.real, "p2": 0.5 - el.imag}


@dataclass(frozen=True)
class ProbabilityVectorSystem:
    M: np.ndarray
    gamma: np.ndarray
    N: int

    def rate(self, pi) -> np.ndarray:
        return self.M @ pi + self.gamma

    def evolve(self, pi0, t_span, step: float = 1e-3):
        sol = ode_solve(lambda t, y: (self.M @ y.real + self.gamma).astype(complex), pi0, t_span, step)
        return sol.times, sol.values.real


def affine_system(H: HamiltonianMatrix) -> ProbabilityVectorSystem:
    """(M, gamma) with dPi/dt = M Pi + gamma for Pi the coin chart of rho(t).

    Built by probing the commutator superoperator with the chart's basis
    perturbations: gamma is the rate at Pi = 0 and column j of M the rate
    change along the j-th coordinate.
    """
    if not H.time_independent:
        raise ValueError("affine system needs a time-independent Hamiltonian")
    h = H.matrix
    N = H.N
    dim = chart_dim(N)

    def rate(rho):
        return _linear_chart(-1j * (h @ rho - rho @ h))

    base = density_from_pi(np.zeros(dim), N)
    gamma = rate(base)
    M = np.empty((dim, dim))
    for j in range(dim):
        e = np.zeros(dim)
        e[j] = 1.0
        M[:, j] = rate(density_from_pi(e, N) - base)
    return ProbabilityVectorSystem(M, gamma, N)


@dataclass(frozen=True)
class StationaryState:
    energy: float
    pi: np.ndarray


def stationary_spectrum(H: HamiltonianMatrix) -> list[StationaryState]:
    """Energies of H with the coin vectors of their eigenprojectors, by energy."""
    if not H.time_independent:
        raise ValueError("spectrum needs a time-independent Hamiltonian")
    energies, vecs = np.linalg.eigh(H.matrix)
    out = []
    for e, v in zip(energies, vecs.T):
        out.append(StationaryState(float(e), pi_from_density(np.outer(v, v.conj()))))
    return out


def relative_entropy(p: float, q: float) -> float:
    """Two-point Kullback-Leibler divergence D((p, 1-p) || (q, 1-q)) in nats.

    Uses 0 ln 0 = 0; returns inf when q is 0 or 1 and p differs from it.
    """
    if not (0.0 <= p <= 1.0 and 0.0 <= q <= 1.0):
        raise ValueError("arguments must be probabilities")
    total = 0.0
    for a, b in ((p, q), (1.0 - p, 1.0 - q)):
        if a == 0.0:
            continue
        if b == 0.0:
            return math.inf
        total += a * math.log(a / b)
    return total


def pair_labels(N: int) -> list[str]:
    labels = [f"p3_{n}_{n}" for n in range(N - 1)]
    for n, m in upper_pairs(N):
        labels += [f"p1_{n}_{m}", f"p2_{n}_{m}"]
    return labels
