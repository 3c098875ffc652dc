"""Two-qubit noisy model: a system qubit exchanging excitations with one environment qubit.

Single-qubit basis order is ``(|->, |+>)`` throughout, so index 0 is
``|->``.  The Hamiltonian ``omega (|+-><-+| + |-+><+-|)`` acts on
system (x) environment, the environment starts in ``(|+> + |->)/sqrt 2`` and
each step lasts ``tau_j`` so that ``theta_j = omega tau_j``.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from lgps.errors import DomainError, UsageError
from lgps.lg import LGReport, k3
from lgps.opstate import LabeledOperator, max_entangled_link, partial_contract
from lgps.process import (
    Instrument,
    ProcessState,
    Scenario,
    a_label,
    build_process_state,
    s_label,
)

MINUS = np.array([1.0, 0.0], dtype=complex)
PLUS = np.array([0.0, 1.0], dtype=complex)
ENV_STATE = (PLUS + MINUS) / np.sqrt(2)


def _ket(*bits: str) -> np.ndarray:
    v = np.array([1.0 + 0j])
    for b in bits:
        v = np.kron(v, PLUS if b == "+" else MINUS)
    return v


def exchange_hamiltonian(omega: float) -> np.ndarray:
    flip = np.outer(_ket("+", "-"), _ket("-", "+"))
    return omega * (flip + flip.T)


@dataclass(frozen=True)
class TwoQubitModel:
    """Model parameters; ``rho0`` is the initial system state in the ``(|->, |+>)`` basis."""

    omega: float
    tau1: float
    tau2: float
    rho0: np.ndarray
    k: int | None = None

    def __post_init__(self):
        r = np.array(self.rho0, dtype=complex)
        if r.shape != (2, 2):
            raise DomainError(f"rho0 must be 2x2, got {r.shape}")
        a, b, c = r[0, 0].real, r[1, 1].real, r[0, 1]
        if abs(r[1, 0] - np.conj(c)) > 1e-12 or abs(r[0, 0].imag) > 1e-12 or abs(r[1, 1].imag) > 1e-12:
            raise DomainError("rho0 is not Hermitian")
        if abs(a + b - 1) > 1e-12 or a < -1e-12 or b < -1e-12 or abs(c) ** 2 > a * b + 1e-12:
            raise DomainError(f"rho0 entries a={a}, b={b}, c={c} do not form a density matrix")
        r.flags.writeable = False
        object.__setattr__(self, "rho0", r)

    @classmethod
    def from_entries(cls, omega, tau1, tau2, a, b, c=0.0, k=None) -> "TwoQubitModel":
        return cls(omega, tau1, tau2, np.array([[a, c], [np.conj(c), b]], dtype=complex), k)

    @classmethod
    def at_angles(cls, theta1: float, theta2: float, rho0=None, omega: float = 1.0, k=None) -> "TwoQubitModel":
        if rho0 is None:
            rho0 = np.eye(2) / 2
        return cls(omega, theta1 / omega, theta2 / omega, rho0, k)

    @property
    def theta1(self) -> float:
        return self.omega * self.tau1

    @property
    def theta2(self) -> float:
        return self.omega * self.tau2

    @property
    def a(self) -> float:
        return float(self.rho0[0, 0].real)

    @property
    def b(self) -> float:
        return float(self.rho0[1, 1].real)

    @property
    def c(self) -> complex:
        return complex(self.rho0[0, 1])


def build_two_qubit_scenario(m: TwoQubitModel) -> Scenario:
    env = np.outer(ENV_STATE, ENV_STATE.conj())
    return Scenario.from_hamiltonian(m.rho0, env, exchange_hamiltonian(m.omega), [m.tau1, m.tau2])


def model_process_state(m: TwoQubitModel) -> ProcessState:
    return build_process_state(build_two_qubit_scenario(m))


def psi_states(theta1: float, theta2: float) -> tuple[np.ndarray, np.ndarray]:
    """The two pure components ``(psi_-, psi_+)`` of the model's process state on (A1, S2, A2, S3).

    The process state is ``rho0 (x) 4 (|psi_-><psi_-| + |psi_+><psi_+|)``
    with the unnormalized links used here; each component has norm
    ``1/sqrt 2``.  Phases follow ``exp(-i H tau)``.
    """
    c1, s1, c2, s2 = math.cos(theta1), math.sin(theta1), math.cos(theta2), math.sin(theta2)
    terms_minus = [
        (1, "----"), (c1, "++--"), (-1j * s1, "-+--"), (c2, "--++"), (-1j * s2, "++-+"),
        (c1 * c2, "++++"), (-1j * c1 * s2, "---+"), (-1j * s1 * c2, "-+++"), (-s1 * s2, "+--+"),
    ]
    flip = str.maketrans("+-", "-+")
    psi_m = sum(amp * _ket(*bits) for amp, bits in terms_minus)
    psi_p = sum(amp * _ket(*bits.translate(flip)) for amp, bits in terms_minus)
    norm = 2 * math.sqrt(2)
    return psi_m / norm, psi_p / norm


def twisted_link(k: int) -> np.ndarray:
    """Unnormalized link ``(|--> + (-1)^k |++>)(...)^dag``: the Choi state of a k-fold phase flip."""
    v = _ket("-", "-") + (-1) ** k * _ket("+", "+")
    return np.outer(v, v.conj())


def rotated_basis(theta: float) -> list[np.ndarray]:
    """``[|+>_theta, |->_theta]`` with ``|+>_theta = cos|+> - i sin|->``, ``|->_theta = -i sin|+> + cos|->``."""
    c, s = math.cos(theta), math.sin(theta)
    return [c * PLUS - 1j * s * MINUS, -1j * s * PLUS + c * MINUS]


def phi_basis(k: int) -> list[np.ndarray]:
    """Time-2 basis ``[phi_+, phi_-]`` adapted to the half-integer-pi step with index k."""
    eps = (-1) ** (k - 1)
    return [(PLUS + 1j * eps * MINUS) / np.sqrt(2), (MINUS + 1j * eps * PLUS) / np.sqrt(2)]


def paper_measurement_plan(theta: float, k: int = 1) -> list[Instrument]:
    """Rotated basis at times 1 and 3, ``phi`` basis at time 2; +1 for the first vector of each."""
    if not -math.pi - 1e-12 <= theta <= math.pi + 1e-12:
        raise DomainError(f"theta must lie in [-pi, pi], got {theta}")
    rot = Instrument.projective(rotated_basis(theta), (1.0, -1.0))
    return [rot, Instrument.projective(phi_basis(k), (1.0, -1.0)), rot]


def halfpi_index(theta: float, tol: float = 1e-12) -> int | None:
    """k with ``theta = (k + 1/2) pi``, or None when theta is not such a point."""
    k = round(theta / math.pi - 0.5)
    return k if abs(theta - (k + 0.5) * math.pi) <= tol else None


@dataclass(frozen=True)
class HalfPiReduction:
    k: int
    two_time_state: LabeledOperator
    phi_plus: np.ndarray
    phi_minus: np.ndarray
    form_residual: float
    link_identity_residual: float

    def first_step_output(self) -> np.ndarray:
        """State entering the time-2 measurement when nothing is measured at time 1."""
        return partial_contract(
            self.two_time_state, (s_label(1), a_label(1)), max_entangled_link(2)
        ).matrix


def halfpi_reduced_state(m: TwoQubitModel, tol: float = 1e-12) -> HalfPiReduction:
    """Two-time reduction of the model at ``theta1 = theta2 = (k + 1/2) pi``.

    Checks that the reduced state is ``rho0 (x) (Pi_+ (x) Pi_phi+ + Pi_- (x) Pi_phi-)``
    on (S1, A1, S2) and that contracting the time-2 link leaves
    ``rho0 (x) Phi_1`` on (S1, A1, S3): the two steps together act as the
    phase flip between ``|->`` and ``|+>``, so the link carries a relative
    minus sign.
    """
    k1, k2 = halfpi_index(m.theta1, tol), halfpi_index(m.theta2, tol)
    if k1 is None or k2 is None or k1 != k2:
        raise UsageError(
            f"angles ({m.theta1}, {m.theta2}) are not equal half-integer multiples of pi; "
            "use model_process_state instead"
        )
    ps = model_process_state(m)
    two = partial_contract(ps, a_label(2), np.eye(2) / 2)
    two = partial_contract(two, s_label(3), "trace")
    phi_p, phi_m = phi_basis(k1)
    expected = np.kron(
        m.rho0,
        np.kron(np.outer(PLUS, PLUS), np.outer(phi_p, phi_p.conj()))
        + np.kron(np.outer(MINUS, MINUS), np.outer(phi_m, phi_m.conj())),
    )
    link = partial_contract(ps, (s_label(2), a_label(2)), max_entangled_link(2))
    link_expected = np.kron(m.rho0, twisted_link(1))
    return HalfPiReduction(
        k1,
        two,
        phi_p,
        phi_m,
        float(np.linalg.norm(two.matrix - expected)),
        float(np.linalg.norm(link.matrix - link_expected)),
    )


def k3_closed_form(theta) -> np.ndarray | float:
    return 2 * np.cos(2 * np.asarray(theta)) - np.cos(4 * np.asarray(theta))


@dataclass(frozen=True)
class K3Curve:
    points: list[tuple[float, LGReport]]
    max_deviation: float


def k3_curve(
    m: TwoQubitModel, thetas: Sequence[float], k: int | None = None, workers: int = 1, tol: float | None = None
) -> K3Curve:
    """K3 along a grid of measurement angles for a half-integer-pi model."""
    if k is None:
        k = m.k if m.k is not None else halfpi_index(m.theta1)
        if k is None:
            raise UsageError("model angles are not at a half-integer multiple of pi; pass k")
    ps = model_process_state(m)

    def point(theta: float) -> tuple[float, LGReport]:
        return float(theta), k3(ps, paper_measurement_plan(theta, k), tol)

    thetas = [float(t) for t in thetas]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            points = list(pool.map(point, thetas))
    else:
        points = [point(t) for t in thetas]
    dev = max((abs(r.K3 - k3_closed_form(t)) for t, r in points), default=0.0)
    return K3Curve(points, float(dev))
