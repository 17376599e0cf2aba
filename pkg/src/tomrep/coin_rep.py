"""Coin (dichotomic) probability representation of Fock-basis density matrices.

For n < n' the element <n|rho|n'> is carried by two coins,

    <n|rho|n'> = (p1 - 1/2) - i (p2 - 1/2),

so p1 = 1/2 + Re rho_{nn'} and p2 = 1/2 - Im rho_{nn'}; the diagonal is
p3^{(n,n)} = rho_{nn}. For N = 2 this is exactly the qubit chart in
:mod:`tomrep.qubit`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln

from tomrep.errors import InvalidStateError
from tomrep.qubit import QubitProbabilities

COIN_TOL = 1e-9


@dataclass(frozen=True)
class CoinProbabilities:
    """Coins of an N x N density matrix.

    ``diag[n]`` is p3^{(n,n)}; ``p1[k]``, ``p2[k]`` belong to the k-th pair of
    ``pairs`` (lexicographic n < n').
    """

    N: int
    diag: np.ndarray
    p1: np.ndarray
    p2: np.ndarray
    pairs: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "pairs", upper_pairs(self.N))
        for arr in (self.diag, self.p1, self.p2):
            arr.setflags(write=False)
        if self.diag.shape != (self.N,) or self.p1.shape != (len(self.pairs),):
            raise ValueError("coin arrays do not match dimension")

    def get(self, n: int, n_prime: int) -> tuple[float, float]:
        """(p1, p2) for the pair n < n'."""
        k = pair_index(self.N, n, n_prime)
        return float(self.p1[k]), float(self.p2[k])

    def to_json(self) -> dict:
        return {
            "N": self.N,
            "diag": [float(v) for v in self.diag],
            "off": [
                {"n": n, "np": m, "p1": float(a), "p2": float(b)}
                for (n, m), a, b in zip(self.pairs, self.p1, self.p2)
            ],
        }

    @classmethod
    def from_json(cls, data: dict) -> "CoinProbabilities":
        N = int(data["N"])
        p1 = np.full(N * (N - 1) // 2, 0.5)
        p2 = np.full_like(p1, 0.5)
        for entry in data.get("off", []):
            k = pair_index(N, int(entry["n"]), int(entry["np"]))
            p1[k] = entry["p1"]
            p2[k] = entry["p2"]
        return cls(N, np.asarray(data["diag"], dtype=float), p1, p2)


@dataclass(frozen=True)
class JointCoinDistribution:
    """W[j-1, k-1] = W(j, k), j in {1, 2}, k in {1, 2, 3}."""

    W: np.ndarray

    def marginal(self) -> np.ndarray:
        return self.W.sum(axis=0)

    def conditional(self) -> np.ndarray:
        """W(j|k) = W(j, k) / P(k)."""
        return self.W / self.marginal()[None, :]


def upper_pairs(N: int) -> tuple:
    return tuple((n, m) for n in range(N) for m in range(n + 1, N))


def pair_index(N: int, n: int, m: int) -> int:
    if not 0 <= n < m < N:
        raise IndexError(f"need 0 <= n < n' < {N}, got ({n}, {m})")
    return n * N - n * (n + 1) // 2 + (m - n - 1)


def coins_from_density(rho, tol: float = COIN_TOL) -> CoinProbabilities:
    rho = np.asarray(rho, dtype=complex)
    N = rho.shape[0]
    if rho.shape != (N, N):
        raise InvalidStateError("density matrix must be square")
    if np.max(np.abs(rho - rho.conj().T)) > tol:
        raise InvalidStateError("density matrix is not Hermitian")
    if np.trace(rho).real > 1.0 + tol:
        raise InvalidStateError(f"trace {np.trace(rho).real} exceeds 1")
    iu = np.triu_indices(N, 1)
    upper = rho[iu]
    diag = rho.diagonal().real.copy()
    p1 = 0.5 + upper.real
    p2 = 0.5 - upper.imag
    for name, arr in (("p3", diag), ("p1", p1), ("p2", p2)):
        if arr.size and (arr.min() < -tol or arr.max() > 1.0 + tol):
            raise InvalidStateError(f"{name} coin outside [0, 1]: matrix is not physical")
    return CoinProbabilities(N, diag, p1, p2)


def density_from_coins(c: CoinProbabilities) -> np.ndarray:
    N = c.N
    rho = np.zeros((N, N), dtype=complex)
    rho[np.diag_indices(N)] = c.diag
    iu = np.triu_indices(N, 1)
    upper = (c.p1 - 0.5) - 1j * (c.p2 - 0.5)
    rho[iu] = upper
    rho[(iu[1], iu[0])] = upper.conj()
    return rho


@dataclass(frozen=True)
class SylvesterVerdict:
    positive: bool
    failing_minor: int | None
    minors: np.ndarray


def sylvester_check(rho, tol: float = 1e-10) -> SylvesterVerdict:
    """Positive-semidefiniteness from leading principal minors.

    A near-zero leading minor leaves the criterion inconclusive for
    semidefinite matrices; the verdict then comes from the spectrum.
    ``failing_minor`` is 1-based.
    """
    rho = np.asarray(rho, dtype=complex)
    N = rho.shape[0]
    minors = np.array([np.linalg.det(rho[:k, :k]).real for k in range(1, N + 1)])
    for k, m in enumerate(minors, start=1):
        if m < -tol:
            return SylvesterVerdict(False, k, minors)
        if m <= tol:
            # singular leading block: leading minors no longer decide
            w = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))
            if w[0] < -tol:
                return SylvesterVerdict(False, _first_bad_block(rho, tol), minors)
            return SylvesterVerdict(True, None, minors)
    return SylvesterVerdict(True, None, minors)


def _first_bad_block(rho, tol):
    for k in range(1, rho.shape[0] + 1):
        if np.linalg.eigvalsh(rho[:k, :k])[0] < -tol:
            return k
    return rho.shape[0]


def coherent_element(alpha: complex, n: int, m: int) -> complex:
    """<n|alpha><alpha|m> = e^{-|alpha|^2} alpha^n conj(alpha)^m / sqrt(n! m!)."""
    r = abs(alpha)
    if r == 0.0:
        return 1.0 + 0j if n == m == 0 else 0j
    log_mod = -r * r + (n + m) * math.log(r) - 0.5 * (gammaln(n + 1) + gammaln(m + 1))
    phase = (n - m) * np.angle(alpha)
    return complex(math.exp(log_mod) * np.exp(1j * phase))


def coherent_coin_closed_form(alpha: complex, n: int, n_prime: int) -> dict:
    """Coins of |alpha><alpha| for one index pair.

    Returns ``{"p3": ...}`` when n == n', else ``{"p1": ..., "p2": ...}``.
    """
    if n > n_prime:
        raise ValueError("need n <= n'")
    el = coherent_element(alpha, n, n_prime)
    if n == n_prime:
        return {"p3": el.real}
    return {"p1": 0.5 + el.real, "p2": 0.5 - el.imag}


def coherent_density(alpha: complex, N: int) -> np.ndarray:
    """Truncated projector |alpha><alpha| on the first N Fock states (not renormalized)."""
    n = np.arange(N)
    r = abs(alpha)
    if r == 0.0:
        amp = (n == 0).astype(complex)
    else:
        log_amp = -0.5 * r * r + n * math.log(r) - 0.5 * gammaln(n + 1)
        amp = np.exp(log_amp) * np.exp(1j * n * np.angle(alpha))
    return np.outer(amp, amp.conj())


def fock_density(n: int, N: int) -> np.ndarray:
    rho = np.zeros((N, N), dtype=complex)
    rho[n, n] = 1.0
    return rho


def poisson_tail_bound(alpha: complex, N: int) -> float:
    """Upper bound on the population beyond the first N Fock states of |alpha>."""
    x = abs(alpha) ** 2
    if x == 0.0:
        return 0.0
    # sum_{n>=N} e^{-x} x^n/n! <= e^{-x} x^N/N! * 1/(1 - x/(N+1)) for x < N+1
    lead = math.exp(-x + N * math.log(x) - gammaln(N + 1))
    ratio = x / (N + 1)
    return lead / (1 - ratio) if ratio < 1 else 1.0


def qubit_to_joint(p: QubitProbabilities) -> JointCoinDistribution:
    W = np.array([[p.p1, p.p2, p.p3], [1 - p.p1, 1 - p.p2, 1 - p.p3]]) / 3.0
    return JointCoinDistribution(W)


def joint_to_qubit(j: JointCoinDistribution) -> QubitProbabilities:
    cond = j.conditional()
    return QubitProbabilities(*cond[0])


def joint_pi_vector(j: JointCoinDistribution) -> np.ndarray:
    """The 6-vector (p1, 1-p1, p2, 1-p2, p3, 1-p3)/3."""
    return j.W.T.ravel()
