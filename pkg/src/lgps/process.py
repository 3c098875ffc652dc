"""Process states, measurement plans and n-point duals.

Slot convention for an n-time process with system dimension d::

    S1, A1, S2, A2, ..., A{n-1}, Sn

``Sj`` carries the state fed into the measurement at time j; ``Aj`` is the
link partner that receives the post-measurement state and hands it to the
evolution between times j and j+1.  Duals on ``Aj`` carry the complex
conjugate of the measurement projector.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from lgps.errors import DomainError, InvalidInstrumentError, ShapeError, UsageError
from lgps.opstate import (
    LabeledOperator,
    _tol,
    as_matrix,
    contract_all,
    is_density_matrix,
    is_hermitian,
    is_unitary,
    labeled,
    max_entangled_link,
    min_eigenvalue,
    orthonormal_basis,
    partial_contract,
    partial_trace,
    permute,
    sandwich,
    tensor_product,
)

ENV = "E"


def s_label(j: int) -> str:
    return f"S{j}"


def a_label(j: int) -> str:
    return f"A{j}"


def process_labels(n: int) -> tuple[str, ...]:
    labels: list[str] = []
    for j in range(1, n + 1):
        labels.append(s_label(j))
        if j < n:
            labels.append(a_label(j))
    return tuple(labels)


def hamiltonian_unitary(h, tau: float) -> np.ndarray:
    """``exp(-i H tau)`` by eigendecomposition of the Hermitian ``h``."""
    h = as_matrix(h, square=True, name="hamiltonian")
    if not is_hermitian(h, 1e-12):
        raise DomainError("hamiltonian is not Hermitian")
    w, v = np.linalg.eigh(0.5 * (h + h.conj().T))
    return (v * np.exp(-1j * w * tau)) @ v.conj().T


@dataclass(frozen=True)
class Scenario:
    """Initial product state plus the unitaries acting between measurement times.

    ``unitaries[j]`` acts on system (x) environment between times j+1 and j+2.
    When built with :meth:`from_hamiltonian` the generating Hamiltonian and
    durations are kept for serialization.
    """

    rho0_system: np.ndarray
    rho0_env: np.ndarray
    unitaries: tuple[np.ndarray, ...]
    hamiltonian: np.ndarray | None = None
    durations: tuple[float, ...] | None = None

    def __post_init__(self):
        rs = as_matrix(self.rho0_system, square=True, name="rho0_system")
        re = as_matrix(self.rho0_env, square=True, name="rho0_env")
        us = tuple(as_matrix(u, square=True, name="evolution") for u in self.unitaries)
        if not us:
            raise DomainError("a scenario needs at least one evolution (n_times >= 2)")
        d = rs.shape[0] * re.shape[0]
        for u in us:
            if u.shape != (d, d):
                raise ShapeError(f"evolution of shape {u.shape} on a space of dimension {d}")
        for m in (rs, re, *us):
            m.flags.writeable = False
        object.__setattr__(self, "rho0_system", rs)
        object.__setattr__(self, "rho0_env", re)
        object.__setattr__(self, "unitaries", us)
        if self.durations is not None:
            object.__setattr__(self, "durations", tuple(float(t) for t in self.durations))

    @classmethod
    def from_hamiltonian(cls, rho0_system, rho0_env, hamiltonian, durations: Sequence[float]) -> "Scenario":
        h = as_matrix(hamiltonian, square=True, name="hamiltonian")
        us = tuple(hamiltonian_unitary(h, t) for t in durations)
        return cls(rho0_system, rho0_env, us, hamiltonian=h, durations=tuple(durations))

    @property
    def d_system(self) -> int:
        return self.rho0_system.shape[0]

    @property
    def d_env(self) -> int:
        return self.rho0_env.shape[0]

    @property
    def n_times(self) -> int:
        return len(self.unitaries) + 1

    def validate(self, tol: float | None = None) -> None:
        tol = _tol(tol)
        if not is_density_matrix(self.rho0_system, tol):
            raise DomainError("rho0_system is not a density matrix")
        if not is_density_matrix(self.rho0_env, tol):
            raise DomainError("rho0_env is not a density matrix")
        for j, u in enumerate(self.unitaries, start=1):
            if not is_unitary(u, 1e-12):
                raise DomainError(f"evolution {j} is not unitary")


@dataclass(frozen=True)
class Instrument:
    """Projective measurement (``basis`` columns, outcome ``values``) or no measurement.

    Outcome index x refers to column x of ``basis``.  For an unmeasured slot
    ``basis`` and ``values`` are ``None``.
    """

    kind: str
    basis: np.ndarray | None = None
    values: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.kind not in ("projective", "unmeasured"):
            raise InvalidInstrumentError(f"unknown instrument kind {self.kind!r}")
        if self.kind == "projective":
            b = np.array(self.basis, dtype=complex)
            if b.ndim != 2 or b.shape[0] != b.shape[1]:
                raise ShapeError(f"basis must be d x d, got {b.shape}")
            if np.abs(b.conj().T @ b - np.eye(b.shape[0])).max() > 1e-12:
                raise InvalidInstrumentError("measurement basis is not orthonormal")
            b.flags.writeable = False
            vals = self.values
            if vals is None:
                vals = (1.0,) + (-1.0,) * (b.shape[0] - 1)
            vals = tuple(float(v) for v in vals)
            if len(vals) != b.shape[0]:
                raise InvalidInstrumentError(
                    f"{len(vals)} outcome values for a {b.shape[0]}-outcome measurement"
                )
            object.__setattr__(self, "basis", b)
            object.__setattr__(self, "values", vals)

    @classmethod
    def projective(cls, vectors, values: Sequence[float] | None = None) -> "Instrument":
        """Build from a list of basis vectors (first vector gets the first value)."""
        cols = orthonormal_basis(vectors)
        return cls("projective", cols, None if values is None else tuple(values))

    @classmethod
    def computational(cls, d: int, values: Sequence[float] | None = None) -> "Instrument":
        return cls("projective", np.eye(d, dtype=complex), None if values is None else tuple(values))

    @classmethod
    def unmeasured(cls) -> "Instrument":
        return cls("unmeasured")

    @property
    def measured(self) -> bool:
        return self.kind == "projective"

    @property
    def n_outcomes(self) -> int:
        return self.basis.shape[1] if self.measured else 1

    def projector(self, x: int) -> np.ndarray:
        if not self.measured:
            raise UsageError("an unmeasured slot has no projectors")
        if not 0 <= x < self.basis.shape[1]:
            raise DomainError(f"outcome index {x} out of range 0..{self.basis.shape[1] - 1}")
        v = self.basis[:, x]
        return np.outer(v, v.conj())

    def is_dichotomic(self) -> bool:
        return self.measured and all(v in (1.0, -1.0) for v in self.values)


MeasurementPlan = Sequence[Instrument]


class ProcessState(LabeledOperator):
    """Choi-form process tensor on slots ``S1, A1, ..., Sn``."""

    def __post_init__(self):
        super().__post_init__()
        n = (len(self.labels) + 1) // 2
        if self.labels != process_labels(n):
            raise UsageError(f"process-state slots must be {process_labels(n)}, got {self.labels}")
        if len(set(self.dims)) != 1:
            raise ShapeError(f"all slots of a process state share one dimension, got {self.dims}")

    @classmethod
    def from_operator(cls, op: LabeledOperator) -> "ProcessState":
        n = (len(op.labels) + 1) // 2
        op = permute(op, process_labels(n))
        return cls(op.labels, op.dims, op.matrix)

    @property
    def n_times(self) -> int:
        return (len(self.labels) + 1) // 2

    @property
    def d(self) -> int:
        return self.dims[0]

    def with_matrix(self, matrix) -> "ProcessState":
        return ProcessState(self.labels, self.dims, matrix)


def check_process_state(ps: ProcessState, tol: float | None = None) -> None:
    """Raise ``DomainError`` unless ``ps`` is Hermitian, PSD and normalized."""
    tol = _tol(tol)
    if not is_hermitian(ps.matrix, tol):
        raise DomainError("process state is not Hermitian")
    if min_eigenvalue(ps.matrix) < -tol:
        raise DomainError("process state has a negative eigenvalue")
    total = contract_all(ps, n_point_operation([Instrument.unmeasured()] * ps.n_times, [None] * ps.n_times, ps.d).matrix)
    if abs(total - 1) > tol:
        raise DomainError(f"unmeasured contraction gives {total}, not 1")


def build_process_state(s: Scenario, tol: float | None = None) -> ProcessState:
    """Feed a link into every intermediate slot, evolve with the environment, trace it out."""
    s.validate(tol)
    d = s.d_system
    state = tensor_product(
        labeled([s_label(1)], [d], s.rho0_system),
        labeled([ENV], [s.d_env], s.rho0_env),
    )
    link = max_entangled_link(d)
    for j, u in enumerate(s.unitaries, start=1):
        state = tensor_product(state, labeled([a_label(j), s_label(j + 1)], [d, d], link))
        order = tuple(lab for lab in state.labels if lab != ENV) + (ENV,)
        state = permute(state, order)
        state = sandwich(state, (s_label(j + 1), ENV), u)
    state = partial_trace(state, ENV)
    return ProcessState(state.labels, state.dims, state.matrix)


def _pair_dual(inst: Instrument, x: int | None, d: int) -> np.ndarray:
    if inst.measured:
        if x is None:
            raise UsageError("a measured slot needs an outcome index")
        p = inst.projector(x)
        return np.kron(p, p.conj())
    if x is not None:
        raise UsageError("an unmeasured slot takes no outcome index")
    return max_entangled_link(d)


def _last_dual(inst: Instrument, x: int | None, d: int) -> np.ndarray:
    if inst.measured:
        if x is None:
            raise UsageError("a measured slot needs an outcome index")
        return inst.projector(x)
    if x is not None:
        raise UsageError("an unmeasured slot takes no outcome index")
    return np.eye(d, dtype=complex)


def n_point_operation(plan: MeasurementPlan, outcomes: Sequence[int | None], d: int) -> LabeledOperator:
    """Dual operator whose contraction with a process state gives the joint probability.

    ``outcomes[j]`` is the outcome index at time j+1, or ``None`` for an
    unmeasured slot.  Measured pairs contribute ``Pi_x (x) Pi_x*``; an
    unmeasured pair contributes the link ``Phi``; the final slot contributes
    ``Pi_x`` or the identity.
    """
    n = len(plan)
    if n < 1:
        raise UsageError("empty measurement plan")
    if len(outcomes) != n:
        raise UsageError(f"{len(outcomes)} outcomes for a {n}-time plan")
    factors = []
    for j in range(n - 1):
        factors.append(labeled([s_label(j + 1), a_label(j + 1)], [d, d], _pair_dual(plan[j], outcomes[j], d)))
    factors.append(labeled([s_label(n)], [d], _last_dual(plan[-1], outcomes[-1], d)))
    return tensor_product(*factors)


def probability(ps: ProcessState, plan: MeasurementPlan, outcomes: Sequence[int | None]) -> complex:
    """``(O|S)`` for one outcome tuple; complex so callers can police the imaginary part."""
    if len(plan) != ps.n_times:
        raise UsageError(f"plan has {len(plan)} times, process state has {ps.n_times}")
    return contract_all(ps, n_point_operation(plan, outcomes, ps.d).matrix)


def reduce_process_state(ps: ProcessState, measured_prefix: Sequence[tuple[Instrument, int | None]]) -> LabeledOperator:
    """Contract the earliest slot pairs with the given (instrument, outcome) duals.

    The result lives on the remaining slots and is unnormalized; its trace
    divided by ``d`` per remaining link equals the prefix probability.
    """
    m = len(measured_prefix)
    if m >= ps.n_times:
        raise UsageError(
            f"a prefix of {m} measurements leaves no later slot in a {ps.n_times}-time process"
        )
    out: LabeledOperator = ps
    for j, (inst, x) in enumerate(measured_prefix, start=1):
        out = partial_contract(out, (s_label(j), a_label(j)), _pair_dual(inst, x, ps.d))
    return out


def prefix_probability(reduced: LabeledOperator) -> float:
    """Probability carried by a reduced state: contract every remaining slot as unmeasured."""
    d = reduced.dims[0]
    links = (len(reduced.labels) - 1) // 2
    return float(reduced.trace().real) / d**links


def markov_product_state(choi_steps: Sequence, rho0, tol: float | None = None) -> ProcessState:
    """Product ``rho0 (x) C_1 (x) ... (x) C_{n-1}`` of per-step Choi states.

    Each ``C_j`` is ordered (input A_j, output S_{j+1}).
    """
    tol = _tol(tol)
    rho0 = as_matrix(rho0, square=True, name="rho0")
    d = rho0.shape[0]
    if not is_density_matrix(rho0, tol):
        raise DomainError("rho0 is not a density matrix")
    if not choi_steps:
        raise DomainError("need at least one step")
    factors = [labeled([s_label(1)], [d], rho0)]
    for j, c in enumerate(choi_steps, start=1):
        c = as_matrix(c, square=True, name=f"choi step {j}")
        if c.shape != (d * d, d * d):
            raise ShapeError(f"choi step {j} has shape {c.shape}, expected {(d * d, d * d)}")
        if not is_hermitian(c, tol) or min_eigenvalue(c) < -tol:
            raise DomainError(f"choi step {j} is not positive semidefinite")
        step = labeled([a_label(j), s_label(j + 1)], [d, d], c)
        if np.abs(partial_trace(step, s_label(j + 1)).matrix - np.eye(d)).max() > tol:
            raise DomainError(f"choi step {j} is not trace preserving")
        factors.append(step)
    op = tensor_product(*factors)
    return ProcessState(op.labels, op.dims, op.matrix)
