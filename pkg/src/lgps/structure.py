"""Structural tests on 3-time process states.

Four basis-dependent conditions decide whether two-time statistics are
marginals of the three-time joint:

* ``1A`` / ``1B``: no off-diagonal blocks on ``S1`` / ``A1`` in the time-1 basis;
* ``2A`` / ``2B``: the same on ``S2`` / ``A2`` in the time-2 basis, inside every
  state reduced by the time-1 outcome.

One condition from each group suffices.  On ``A`` slots the relevant basis
is the complex conjugate of the measurement basis.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from lgps.errors import DomainError, InapplicableError, InvalidInstrumentError, UsageError
from lgps.opstate import (
    LabeledOperator,
    _tol,
    dephase,
    labeled,
    op_inner,
    partial_contract,
    partial_trace,
    permute,
    sandwich,
    tensor_product,
)
from lgps.process import (
    Instrument,
    MeasurementPlan,
    ProcessState,
    Scenario,
    a_label,
    build_process_state,
    s_label,
)

CONDITIONS = ("1A", "1B", "2A", "2B")

# condition pair -> name of the quantum-classical form it admits
QC_FORMS = {
    ("1B", "2A"): "S2-classical, A1-classical",
    ("1A", "2A"): "S1-classical, S2-classical",
    ("1B", "2B"): "A1-classical, A2-classical",
    ("1A", "2B"): "S1-classical, A2-classical",
}


def _basis_cols(basis) -> np.ndarray:
    if isinstance(basis, Instrument):
        if not basis.measured:
            raise UsageError("structural conditions need a projective instrument")
        return basis.basis
    b = np.asarray(basis, dtype=complex)
    if b.ndim != 2 or b.shape[0] != b.shape[1]:
        raise DomainError(f"basis must be a d x d matrix of columns, got {b.shape}")
    if np.abs(b.conj().T @ b - np.eye(b.shape[0])).max() > 1e-12:
        raise DomainError("basis is not orthonormal")
    return b


def _slot_and_basis(which: str, bases) -> tuple[str, np.ndarray]:
    b1, b2 = (_basis_cols(b) for b in bases)
    return {
        "1A": (s_label(1), b1),
        "1B": (a_label(1), b1.conj()),
        "2A": (s_label(2), b2),
        "2B": (a_label(2), b2.conj()),
    }[which]


def _pair_projector(b: np.ndarray, x: int) -> np.ndarray:
    v = b[:, x]
    p = np.outer(v, v.conj())
    return np.kron(p, p.conj())


def _off_diagonal_norm(op: LabeledOperator, slot: str, b: np.ndarray) -> float:
    total = 0.0
    d = b.shape[0]
    for x, y in itertools.permutations(range(d), 2):
        unit = np.outer(b[:, x], b[:, y].conj())
        total += partial_contract(op, slot, unit).norm() ** 2
    return float(np.sqrt(total))


def _require_three_time(ps: ProcessState) -> None:
    if ps.n_times != 3:
        raise UsageError(f"structural conditions are defined for 3-time process states, got {ps.n_times}")


def condition_residual(ps: ProcessState, which: str, bases) -> float:
    """Root-sum-square Frobenius norm of the blocks a condition requires to vanish.

    ``bases`` holds the time-1 and time-2 measurement bases (column matrices
    or projective instruments).
    """
    _require_three_time(ps)
    if which not in CONDITIONS:
        raise UsageError(f"unknown condition {which!r}; choose from {CONDITIONS}")
    slot, b = _slot_and_basis(which, bases)
    if which.startswith("1"):
        return _off_diagonal_norm(ps, slot, b)
    b1 = _basis_cols(bases[0])
    total = 0.0
    for x1 in range(b1.shape[1]):
        reduced = partial_contract(ps, (s_label(1), a_label(1)), _pair_projector(b1, x1))
        total += _off_diagonal_norm(reduced, slot, b) ** 2
    return float(np.sqrt(total))


def _normalize_conditions(conditions) -> tuple[str, ...]:
    if isinstance(conditions, str):
        conditions = (conditions,)
    conds = tuple(sorted(set(conditions)))
    for c in conds:
        if c not in CONDITIONS:
            raise UsageError(f"unknown condition {c!r}")
    if sum(c.startswith("1") for c in conds) > 1 or sum(c.startswith("2") for c in conds) > 1:
        raise UsageError(f"pick at most one time-1 and one time-2 condition, got {conds}")
    if not conds:
        raise UsageError("no condition given")
    return conds


def qc_projection(ps: ProcessState, pair, bases) -> ProcessState:
    """Nearest state of the quantum-classical form selected by ``pair``.

    The state splits into the blocks selected by the time-1 outcome,
    ``sum_x (Pi_x (x) Pi_x*) (x) S_x`` on (S1, A1), and a remainder.  A time-2
    condition dephases the named slot inside every ``S_x``; a time-1
    condition dephases the named slot in the remainder (the blocks already
    are).  The remainder is exactly the correction that vanishes under any
    time-1 outcome dual, so fully measured statistics are unchanged.
    """
    _require_three_time(ps)
    conds = _normalize_conditions(pair)
    b1 = _basis_cols(bases[0])
    pair_slots = (s_label(1), a_label(1))
    blocks = None
    for x in range(b1.shape[1]):
        part = sandwich(ps, pair_slots, _pair_projector(b1, x))
        blocks = part if blocks is None else blocks + part
    rest = ps - blocks
    for c in conds:
        slot, b = _slot_and_basis(c, bases)
        if c.startswith("1"):
            rest = dephase(rest, slot, b)
        else:
            blocks = dephase(blocks, slot, b)
    out = rest + blocks
    return ProcessState(out.labels, out.dims, out.matrix)


def classical_form_residual(ps: ProcessState, bases) -> float:
    """Distance from the state with all four measured slots dephased."""
    _require_three_time(ps)
    out: LabeledOperator = ps
    for c in CONDITIONS:
        slot, b = _slot_and_basis(c, bases)
        out = dephase(out, slot, b)
    return (ps - out).norm()


def _marginal_blocks(ps: ProcessState) -> list[LabeledOperator]:
    groups = [(s_label(1),)] + [(a_label(j), s_label(j + 1)) for j in range(1, ps.n_times)]
    blocks = []
    for g in groups:
        others = tuple(lab for lab in ps.labels if lab not in g)
        blocks.append(partial_trace(ps, others) if others else ps)
    return blocks


def markov_product_part(ps: ProcessState) -> ProcessState:
    """Tensor product of the initial-state and per-step marginals, normalized to ``ps``'s trace."""
    blocks = _marginal_blocks(ps)
    total = ps.trace()
    prod = tensor_product(*blocks)
    prod = prod.scaled(1 / total ** (len(blocks) - 1))
    prod = permute(prod, ps.labels)
    return ProcessState(prod.labels, prod.dims, prod.matrix)


def markov_product_residual(ps: ProcessState) -> float:
    """Frobenius distance between ``ps`` and the product of its per-step marginals."""
    return (ps - markov_product_part(ps)).norm()


@dataclass(frozen=True)
class DisturbanceReport:
    initial_classical: bool
    step_classical: bool
    initial_residual: float
    step_residual: float


def disturbance_conditions(target, basis_1, basis_2, tol: float | None = None) -> DisturbanceReport:
    """Check that the inputs to the first two measurements are classical in their bases.

    Only meaningful for Markovian product states; ``target`` may be a
    ``Scenario`` or a ``ProcessState``.  The initial condition asks
    ``rho0`` to be diagonal in ``basis_1``; the step condition asks the
    first step's output for every ``basis_1`` input to be diagonal in
    ``basis_2``.
    """
    tol = _tol(tol)
    ps = build_process_state(target, tol) if isinstance(target, Scenario) else target
    _require_three_time(ps)
    product_residual = markov_product_residual(ps)
    if product_residual > tol:
        raise InapplicableError(
            f"state is not a Markovian product (residual {product_residual:.3e}); "
            "disturbance conditions do not apply"
        )
    b1 = _basis_cols(basis_1)
    b2 = _basis_cols(basis_2)
    blocks = _marginal_blocks(ps)
    total = ps.trace().real
    rho0 = blocks[0].scaled(1 / total)
    step = blocks[1].scaled(ps.d / total)
    r0 = _off_diagonal_norm(rho0, s_label(1), b1)
    r_step = 0.0
    for x in range(b1.shape[1]):
        v = b1[:, x]
        out = partial_contract(step, a_label(1), np.outer(v, v.conj()).conj())
        r_step += _off_diagonal_norm(out, s_label(2), b2) ** 2
    r_step = float(np.sqrt(r_step))
    return DisturbanceReport(r0 < tol, r_step < tol, r0, r_step)


def markov_order_form_residual(
    ps: ProcessState,
    partition: tuple[Sequence[str], Sequence[str], Sequence[str]],
    components: Sequence[tuple[float, object, object, object]],
    duals: Sequence,
    tol: float | None = None,
) -> float:
    """Distance between ``ps`` and ``sum_x P(x) S_H^(x) (x) S_M^(x) (x) S_F^(x)``.

    ``partition`` names the history, memory and future slots; each
    component's blocks are matrices on those slots in the given order.
    ``duals[x]`` is the instrument effect on the memory slots that must pick
    out component x alone: ``(duals[x] | S_M^(y)) = delta_xy``.
    """
    tol = _tol(tol)
    hist, mem, fut = (tuple(p) for p in partition)
    if sorted(hist + mem + fut) != sorted(ps.labels):
        raise UsageError(f"partition {partition} does not cover slots {ps.labels} exactly")
    if len(duals) != len(components):
        raise InvalidInstrumentError(f"{len(duals)} duals for {len(components)} components")
    probs = np.array([c[0] for c in components], dtype=float)
    if (probs < -tol).any() or abs(probs.sum() - 1) > tol:
        raise DomainError(f"component probabilities {probs} are not a distribution")
    for x, dual in enumerate(duals):
        for y, comp in enumerate(components):
            val = op_inner(dual, comp[2])
            if abs(val - (1.0 if x == y else 0.0)) > tol:
                raise InvalidInstrumentError(f"(O^({x})|S_M^({y})) = {val:.3e}, expected {int(x == y)}")
    total = None
    for p, s_h, s_m, s_f in components:
        parts = []
        for slots, m in ((hist, s_h), (mem, s_m), (fut, s_f)):
            if slots:
                parts.append(labeled(slots, [ps.dim(s) for s in slots], m))
        term = permute(tensor_product(*parts), ps.labels).scaled(p)
        total = term if total is None else total + term
    return (ps - total).norm()


@dataclass(frozen=True)
class QCClassification:
    residual_1A: float
    residual_1B: float
    residual_2A: float
    residual_2B: float
    tol: float
    markov_product_residual: float
    classical_form_residual: float
    disturbance: DisturbanceReport | None = None
    bases: tuple = field(default=(), compare=False, repr=False)

    def residual(self, which: str) -> float:
        return getattr(self, f"residual_{which}")

    def holds(self, which: str) -> bool:
        return self.residual(which) < self.tol

    @property
    def qc_form(self) -> list[tuple[str, str]]:
        """Condition pairs that hold, each admitting one quantum-classical form."""
        return [pair for pair in QC_FORMS if self.holds(pair[0]) and self.holds(pair[1])]

    def to_json(self) -> dict:
        out = {f"residual_{c}": self.residual(c) for c in CONDITIONS}
        out.update({f"holds_{c}": self.holds(c) for c in CONDITIONS})
        out["qc_form"] = ["+".join(pair) for pair in self.qc_form]
        out["markov_product_residual"] = self.markov_product_residual
        out["classical_form_residual"] = self.classical_form_residual
        if self.disturbance is None:
            out["disturbance"] = None
        else:
            out["disturbance"] = {
                "initial_classical": self.disturbance.initial_classical,
                "step_classical": self.disturbance.step_classical,
                "initial_residual": self.disturbance.initial_residual,
                "step_residual": self.disturbance.step_residual,
            }
        out["tol"] = self.tol
        return out


def classify(ps: ProcessState, bases, tol: float | None = None) -> QCClassification:
    """Evaluate every structural test for ``ps`` in the given time-1/time-2 bases."""
    tol = _tol(tol)
    residuals = {c: condition_residual(ps, c, bases) for c in CONDITIONS}
    mpr = markov_product_residual(ps)
    dist = disturbance_conditions(ps, bases[0], bases[1], tol) if mpr <= tol else None
    return QCClassification(
        residuals["1A"],
        residuals["1B"],
        residuals["2A"],
        residuals["2B"],
        tol,
        mpr,
        classical_form_residual(ps, bases),
        dist,
        tuple(bases),
    )


def plan_bases(plan: MeasurementPlan) -> tuple[np.ndarray, np.ndarray]:
    """Time-1 and time-2 bases of a 3-time plan."""
    if len(plan) < 2 or not (plan[0].measured and plan[1].measured):
        raise UsageError("classification needs projective measurements at times 1 and 2")
    return plan[0].basis, plan[1].basis
