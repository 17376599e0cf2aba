"""Qubit states as three spin-projection probabilities.

``p_k`` is the probability of spin projection +1/2 along the k-th of three
orthonormal axes. The density matrix is

    rho = [[p3,                    (p1 - 1/2) - i (p2 - 1/2)],
           [(p1 - 1/2) + i (p2 - 1/2), 1 - p3               ]]

and the physical states fill the ball of radius 1/2 centred at (1/2, 1/2, 1/2).
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from tomrep.errors import DomainError, InvalidStateError

BALL_TOL = 1e-9


class StateClass(enum.Enum):
    INTERIOR = "interior"
    PURE = "pure-surface"
    INVALID = "invalid"


@dataclass(frozen=True)
class QubitProbabilities:
    p1: float
    p2: float
    p3: float

    def __post_init__(self):
        for name in ("p1", "p2", "p3"):
            v = getattr(self, name)
            if not (-BALL_TOL <= v <= 1.0 + BALL_TOL):
                raise InvalidStateError(f"{name}={v} is not a probability")

    def as_array(self) -> np.ndarray:
        return np.array([self.p1, self.p2, self.p3])

    def ball_excess(self) -> float:
        """(p1-1/2)^2 + (p2-1/2)^2 + (p3-1/2)^2 - 1/4; positive means unphysical."""
        return _radius_sq(self.as_array()) - 0.25


@dataclass(frozen=True)
class BlochVector:
    x: float
    y: float
    z: float

    def norm(self) -> float:
        return math.sqrt(self.x**2 + self.y**2 + self.z**2)

    @property
    def inside_ball(self) -> bool:
        return self.norm() ** 2 <= 1.0 + BALL_TOL


@dataclass(frozen=True)
class QubitAngles:
    phi: float
    theta: float


@dataclass(frozen=True)
class Classification:
    kind: StateClass
    purity: float
    radius_sq: float


def _radius_sq(p: np.ndarray) -> float:
    d = p - 0.5
    return float(d @ d)


def _check_ball(p: QubitProbabilities, tol: float) -> None:
    excess = p.ball_excess()
    if excess > tol:
        raise InvalidStateError(
            f"(p1-1/2)^2+(p2-1/2)^2+(p3-1/2)^2 = {excess + 0.25:.12g} exceeds 1/4"
        )


def density_from_probs(p: QubitProbabilities, tol: float = BALL_TOL) -> np.ndarray:
    _check_ball(p, tol)
    off = (p.p1 - 0.5) + 1j * (p.p2 - 0.5)
    return np.array([[p.p3, np.conj(off)], [off, 1.0 - p.p3]], dtype=complex)


def _check_density(rho: np.ndarray, tol: float) -> None:
    if rho.shape != (2, 2):
        raise InvalidStateError(f"qubit density matrix must be 2x2, got {rho.shape}")
    if np.max(np.abs(rho - rho.conj().T)) > tol:
        raise InvalidStateError("density matrix is not Hermitian")
    if abs(np.trace(rho) - 1.0) > tol:
        raise InvalidStateError(f"trace {np.trace(rho).real} != 1")


def probs_from_density(rho, tol: float = 1e-12) -> QubitProbabilities:
    rho = np.asarray(rho, dtype=complex)
    _check_density(rho, tol)
    if (rho[0, 0] * rho[1, 1]).real - abs(rho[0, 1]) ** 2 < -tol:
        raise InvalidStateError("rho11 rho22 - |rho12|^2 < 0")
    off = rho[1, 0]
    return QubitProbabilities(off.real + 0.5, off.imag + 0.5, rho[0, 0].real)


def bloch_from_probs(p: QubitProbabilities) -> BlochVector:
    return BlochVector(2 * p.p1 - 1, 2 * p.p2 - 1, 2 * p.p3 - 1)


def probs_from_bloch(b: BlochVector) -> QubitProbabilities:
    return QubitProbabilities((1 + b.x) / 2, (1 + b.y) / 2, (1 + b.z) / 2)


def classify_state(p: QubitProbabilities, tol: float = BALL_TOL) -> Classification:
    s = _radius_sq(p.as_array())
    if s > 0.25 + tol:
        kind = StateClass.INVALID
    elif abs(s - 0.25) <= tol:
        kind = StateClass.PURE
    else:
        kind = StateClass.INTERIOR
    return Classification(kind, 0.5 + 2.0 * s, s)


def angles_from_probs(p: QubitProbabilities, tol: float = 1e-12) -> QubitAngles:
    """Azimuth phi in [0, 2pi) and polar theta in [0, pi] of p - (1/2, 1/2, 1/2).

    phi uses both its cosine and sine, so it is unambiguous. Raises
    ``DomainError`` when the direction (or its azimuth) is undefined.
    """
    d = p.as_array() - 0.5
    r = math.sqrt(d @ d)
    if r < tol:
        raise DomainError("theta undefined at the centre of the ball")
    rho_xy = math.hypot(d[0], d[1])
    if rho_xy < tol:
        raise DomainError("phi undefined on the polar axis")
    theta = math.acos(max(-1.0, min(1.0, d[2] / r)))
    phi = math.atan2(d[1] / rho_xy, d[0] / rho_xy) % (2 * math.pi)
    return QubitAngles(phi, theta)


def direction_from_angles(a: QubitAngles) -> np.ndarray:
    st = math.sin(a.theta)
    return np.array([st * math.cos(a.phi), st * math.sin(a.phi), math.cos(a.theta)])


def two_time_matrix(
    p_t1: QubitProbabilities, p_t2: QubitProbabilities, tol: float = BALL_TOL
) -> np.ndarray:
    """|psi(t1)><psi(t2)| written through the probabilities at both times.

    The pure state is taken with real non-negative first amplitude
    sqrt(p3), i.e. psi = (sqrt(p3), c / sqrt(p3)) with
    c = (p1 - 1/2) + i (p2 - 1/2).
    """
    for p in (p_t1, p_t2):
        if classify_state(p, tol).kind is not StateClass.PURE:
            raise DomainError("two-time matrix needs pure states")
        if p.p3 <= tol:
            raise DomainError("p3 ~ 0: amplitude gauge sqrt(p3) is singular")
    psi1 = _pure_vector(p_t1)
    psi2 = _pure_vector(p_t2)
    return np.outer(psi1, psi2.conj())


def _pure_vector(p: QubitProbabilities) -> np.ndarray:
    c = (p.p1 - 0.5) + 1j * (p.p2 - 0.5)
    a = math.sqrt(p.p3)
    return np.array([a, c / a], dtype=complex)
