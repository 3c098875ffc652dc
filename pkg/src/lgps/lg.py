"""Probability tables, two-time correlators and the K3 Leggett-Garg functional."""

from __future__ import annotations

import csv
import io
import itertools
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from lgps.errors import (
    ConventionError,
    DegenerateConditioningError,
    DomainError,
    LabelError,
    UsageError,
)
from lgps.opstate import LabeledOperator, _tol, contract_all
from lgps.process import Instrument, MeasurementPlan, ProcessState, Scenario, n_point_operation


class NonDichotomicWarning(UserWarning):
    """Correlator evaluated with outcome values other than +1/-1; K3 <= 1 need not hold."""


@dataclass(frozen=True)
class ProbabilityTable:
    """Joint distribution over the measured times of a plan.

    ``p[x_a, x_b, ...]`` is indexed by outcome index at each time in
    ``times`` (1-based, increasing).  ``values[k]`` gives the real outcome
    values at ``times[k]``.  ``n_times`` is the length of the plan the table
    came from.
    """

    times: tuple[int, ...]
    values: tuple[tuple[float, ...], ...]
    p: np.ndarray
    n_times: int

    def __post_init__(self):
        p = np.array(self.p, dtype=float)
        if p.ndim != len(self.times) or len(self.values) != len(self.times):
            raise UsageError("table axes, times and values disagree")
        if list(self.times) != sorted(set(self.times)):
            raise UsageError(f"times must be increasing, got {self.times}")
        for ax, vals in enumerate(self.values):
            if p.shape[ax] != len(vals):
                raise UsageError(f"axis {ax} has {p.shape[ax]} outcomes but {len(vals)} values")
        p.flags.writeable = False
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "times", tuple(self.times))
        object.__setattr__(self, "values", tuple(tuple(float(v) for v in vs) for vs in self.values))

    def total(self) -> float:
        return float(self.p.sum())

    def __getitem__(self, idx) -> float:
        return float(self.p[idx])

    def entries(self):
        """Yield ``(index_tuple, value_tuple, probability)`` in row-major order."""
        for idx in itertools.product(*(range(len(v)) for v in self.values)):
            yield idx, tuple(self.values[k][i] for k, i in enumerate(idx)), float(self.p[idx])

    def is_dichotomic(self) -> bool:
        return all(v in (1.0, -1.0) for vals in self.values for v in vals)

    def to_json(self) -> list[dict]:
        return [{"outcomes": list(vals), "p": prob} for _, vals, prob in self.entries()]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow([f"x{t}" for t in self.times] + ["p"])
        for _, vals, prob in self.entries():
            w.writerow([f"{v:.12g}" for v in vals] + [f"{prob:.12g}"])
        return buf.getvalue()


def _measured_times(plan: MeasurementPlan) -> tuple[int, ...]:
    return tuple(j + 1 for j, inst in enumerate(plan) if inst.measured)


def _contract_table(op: LabeledOperator, plan: MeasurementPlan, d: int) -> np.ndarray:
    """Complex array of ``(O^{(x)}|op)`` over every outcome tuple of the measured slots."""
    times = _measured_times(plan)
    shape = tuple(plan[t - 1].n_outcomes for t in times)
    out = np.zeros(shape, dtype=complex)
    for idx in itertools.product(*(range(s) for s in shape)):
        outcomes: list[int | None] = [None] * len(plan)
        for t, x in zip(times, idx):
            outcomes[t - 1] = x
        out[idx] = contract_all(op, n_point_operation(plan, outcomes, d).matrix)
    return out


def _real_table(c: np.ndarray, tol: float) -> np.ndarray:
    worst = float(np.abs(c.imag).max()) if c.size else 0.0
    if worst > tol:
        raise ConventionError(f"probability with imaginary part {worst:.3e} exceeds tolerance {tol:.1e}")
    return c.real


def _table(plan: MeasurementPlan, p: np.ndarray) -> ProbabilityTable:
    times = _measured_times(plan)
    return ProbabilityTable(times, tuple(plan[t - 1].values for t in times), p, len(plan))


def joint_probability(ps: ProcessState, plan: MeasurementPlan, tol: float | None = None) -> ProbabilityTable:
    """Contract the n-point dual of every outcome tuple against ``ps``."""
    if len(plan) != ps.n_times:
        raise UsageError(f"plan has {len(plan)} times, process state has {ps.n_times}")
    return _table(plan, _real_table(_contract_table(ps, plan, ps.d), _tol(tol)))


def sequential_oracle(s: Scenario, plan: MeasurementPlan, tol: float | None = None) -> ProbabilityTable:
    """Brute-force Born rule: alternate projective updates and unitary steps on system (x) environment."""
    if len(plan) != s.n_times:
        raise UsageError(f"plan has {len(plan)} times, scenario has {s.n_times}")
    tol = _tol(tol)
    de = s.d_env
    eye_e = np.eye(de)
    branches: dict[tuple[int, ...], np.ndarray] = {(): np.kron(s.rho0_system, s.rho0_env)}
    for j, inst in enumerate(plan):
        if inst.measured:
            updated = {}
            for key, rho in branches.items():
                for x in range(inst.n_outcomes):
                    v = inst.basis[:, x]
                    k = np.kron(np.outer(v, v.conj()), eye_e)
                    updated[key + (x,)] = k @ rho @ k
            branches = updated
        if j < len(s.unitaries):
            u = s.unitaries[j]
            branches = {key: u @ rho @ u.conj().T for key, rho in branches.items()}
    shape = tuple(plan[t - 1].n_outcomes for t in _measured_times(plan))
    c = np.zeros(shape, dtype=complex)
    for key, rho in branches.items():
        c[key] = np.trace(rho)
    return _table(plan, _real_table(c, tol))


def sum_out(table: ProbabilityTable, times: Sequence[int]) -> ProbabilityTable:
    """Plain classical marginal: sum the named time axes away."""
    axes = []
    for t in times:
        if t not in table.times:
            raise UsageError(f"time {t} is not measured in this table")
        axes.append(table.times.index(t))
    keep = [k for k in range(len(table.times)) if k not in axes]
    return ProbabilityTable(
        tuple(table.times[k] for k in keep),
        tuple(table.values[k] for k in keep),
        table.p.sum(axis=tuple(axes)),
        table.n_times,
    )


def marginal_probability(table: ProbabilityTable, pair: tuple[int, int]) -> ProbabilityTable:
    """Two-time distribution for ``pair`` obtainable from ``table`` without extra assumptions.

    Either the table already covers exactly ``pair`` (the other slots were
    unmeasured) or every extra measured time comes after the pair, in which
    case summing it out is exact because later measurements cannot affect
    earlier statistics.  Summing an earlier or intermediate measurement is
    refused: that equality is the Kolmogorov condition being tested, not a
    given.
    """
    pair = tuple(sorted(pair))
    if len(pair) != 2 or pair[0] == pair[1]:
        raise UsageError(f"pair must name two distinct times, got {pair}")
    if table.times == pair:
        return table
    if not set(pair) <= set(table.times):
        raise UsageError(f"times {pair} are not both measured in table over {table.times}")
    extra = [t for t in table.times if t not in pair]
    if any(t < pair[1] for t in extra):
        raise UsageError(
            f"summing measured times {extra} that precede time {pair[1]} is not a marginal; "
            "use a plan with those slots unmeasured"
        )
    return sum_out(table, extra)


def correlation(table: ProbabilityTable) -> float:
    """``sum x_i x_j P(x_i, x_j)`` for a two-time table."""
    if len(table.times) != 2:
        raise UsageError(f"correlation needs a two-time table, got times {table.times}")
    if not table.is_dichotomic():
        warnings.warn("outcome values are not +/-1", NonDichotomicWarning, stacklevel=2)
    vi = np.asarray(table.values[0])
    vj = np.asarray(table.values[1])
    return float(np.einsum("i,j,ij->", vi, vj, table.p))


@dataclass(frozen=True)
class LGReport:
    """Correlators and K3 for one process state and 3-time plan.

    ``K3`` always equals ``C12 + C23 - C13``.  When a reference
    quantum-classical state was supplied, ``joint_term`` is
    ``1 - sum (x2-x3)(x2-x1) P(x1,x2,x3)`` and ``correction_terms`` are the
    signed contributions of the deviation ``S - S_QC`` through the
    time-1-unmeasured and time-2-unmeasured correlators, so that
    ``joint_term + sum(correction_terms)`` reconstructs K3.
    """

    C12: float
    C23: float
    C13: float
    tol: float
    correction_terms: tuple[float, float] = (0.0, 0.0)
    deviation_norm: float = 0.0
    joint_term: float | None = None
    tables: dict = field(default_factory=dict, compare=False, repr=False)

    @property
    def K3(self) -> float:
        return self.C12 + self.C23 - self.C13

    @property
    def lg_satisfied(self) -> bool:
        return self.K3 <= 1 + self.tol

    @property
    def k3_reconstructed(self) -> float | None:
        if self.joint_term is None:
            return None
        return self.joint_term + sum(self.correction_terms)

    def to_json(self) -> dict:
        return {
            "C12": self.C12,
            "C23": self.C23,
            "C13": self.C13,
            "K3": self.K3,
            "lg_satisfied": self.lg_satisfied,
            "correction_terms": list(self.correction_terms),
            "deviation_norm": self.deviation_norm,
        }


def _check_three_time_plan(plan: MeasurementPlan) -> None:
    if len(plan) != 3:
        raise UsageError(f"K3 needs a 3-time plan, got {len(plan)} times")
    for j, inst in enumerate(plan, start=1):
        if not inst.measured:
            raise UsageError(f"time {j} must be measured in the 3-time plan")
        if not inst.is_dichotomic():
            warnings.warn(f"time {j} outcome values are not +/-1", NonDichotomicWarning, stacklevel=3)


def pairwise_plans(plan: MeasurementPlan) -> dict[tuple[int, int], list[Instrument]]:
    """Plans realizing each two-time pair of a 3-time plan.

    (1, 2) keeps all three measurements (time 3 is summed later); the other
    pairs leave the excluded time unmeasured.
    """
    un = Instrument.unmeasured()
    return {
        (1, 2): list(plan),
        (2, 3): [un, plan[1], plan[2]],
        (1, 3): [plan[0], un, plan[2]],
    }


def pairwise_tables(ps: ProcessState, plan: MeasurementPlan, tol: float | None = None) -> dict:
    """Three-time joint and the three two-time tables used by K3."""
    _check_three_time_plan(plan)
    plans = pairwise_plans(plan)
    p3 = joint_probability(ps, plans[(1, 2)], tol)
    return {
        (1, 2, 3): p3,
        (1, 2): marginal_probability(p3, (1, 2)),
        (2, 3): joint_probability(ps, plans[(2, 3)], tol),
        (1, 3): joint_probability(ps, plans[(1, 3)], tol),
    }


def k3(ps: ProcessState, plan: MeasurementPlan, tol: float | None = None) -> LGReport:
    """K3 = C12 + C23 - C13 for a 3-time projective plan."""
    tol = _tol(tol)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", NonDichotomicWarning)
        tables = pairwise_tables(ps, plan, tol)
        cs = {pair: correlation(tables[pair]) for pair in ((1, 2), (2, 3), (1, 3))}
    return LGReport(cs[(1, 2)], cs[(2, 3)], cs[(1, 3)], tol, tables=tables)


def _signed_sum(op: LabeledOperator, plan: MeasurementPlan, d: int) -> float:
    """``sum prod(x) (O^{(x)}|op)`` over outcome tuples of the measured slots."""
    c = _contract_table(op, plan, d)
    weights = np.ones(c.shape)
    for ax, t in enumerate(_measured_times(plan)):
        shape = [1] * c.ndim
        shape[ax] = -1
        weights = weights * np.asarray(plan[t - 1].values).reshape(shape)
    return float(np.real((weights * c).sum()))


def k3_with_deviation(ps: ProcessState, qc: ProcessState, plan: MeasurementPlan, tol: float | None = None) -> LGReport:
    """K3 split into a joint-probability term on ``ps`` plus corrections carried by ``ps - qc``."""
    tol = _tol(tol)
    if ps.labels != qc.labels or ps.dims != qc.dims:
        raise LabelError(f"slot mismatch between states: {ps.labels}{ps.dims} vs {qc.labels}{qc.dims}")
    report = k3(ps, plan, tol)
    p3 = report.tables[(1, 2, 3)]
    x1, x2, x3 = (np.asarray(v) for v in p3.values)
    kernel = (x2[None, :, None] - x3[None, None, :]) * (x2[None, :, None] - x1[:, None, None])
    joint_term = 1.0 - float((kernel * p3.p).sum())
    delta = ps - qc
    plans = pairwise_plans(plan)
    c23_dev = _signed_sum(delta, plans[(2, 3)], ps.d)
    c13_dev = _signed_sum(delta, plans[(1, 3)], ps.d)
    return LGReport(
        report.C12,
        report.C23,
        report.C13,
        tol,
        correction_terms=(c23_dev, -c13_dev),
        deviation_norm=delta.norm(),
        joint_term=joint_term,
        tables=report.tables,
    )


def _require_dichotomic(*tables: ProbabilityTable) -> None:
    for t in tables:
        if not t.is_dichotomic():
            raise DomainError(f"table over times {t.times} has non-dichotomic outcome values")


def _conditional_future(p3: ProbabilityTable, p12: ProbabilityTable, tol: float) -> np.ndarray:
    """``P(x3 | x2)`` from the 3-time joint, pooling over x1 with the joint's own weights."""
    bad = np.argwhere((p12.p[:, :, None] <= tol) & (p3.p > tol))
    if bad.size:
        i, j, k = bad[0]
        raise DegenerateConditioningError(
            f"P12({p12.values[0][i]:+g}, {p12.values[1][j]:+g}) = 0 but "
            f"P3({p3.values[0][i]:+g}, {p3.values[1][j]:+g}, {p3.values[2][k]:+g}) > 0"
        )
    num = p3.p.sum(axis=0)
    den = p12.p.sum(axis=0)
    cond = np.zeros_like(num)
    for j in range(num.shape[0]):
        if den[j] > tol:
            cond[j] = num[j] / den[j]
    return cond


def markov_order_k3(p3: ProbabilityTable, p12: ProbabilityTable, p2: ProbabilityTable, tol: float | None = None) -> float:
    """K3 with the (2,3) statistics rebuilt from the Markov-order-1 relation.

    ``P23(x2, x3) = P2(x2) * P3(x1, x2, x3) / P12(x1, x2)``; the ratio is
    independent of x1 when the relation holds, and is pooled over x1 with
    weights ``P12(x1, x2)`` so that the result stays a distribution when it
    holds only approximately.  Zero-probability conditioning contributes
    nothing; a zero ``P12`` under a nonzero ``P3`` raises.
    """
    tol = _tol(tol)
    if p3.times != (1, 2, 3) or p12.times != (1, 2) or p2.times != (2,):
        raise UsageError("expected tables over times (1,2,3), (1,2) and (2,)")
    _require_dichotomic(p3, p12, p2)
    x1, x2, x3 = (np.asarray(v) for v in p3.values)
    p23 = p2.p[:, None] * _conditional_future(p3, p12, tol)
    c12 = float(np.einsum("i,j,ijk->", x1, x2, p3.p))
    c13 = float(np.einsum("i,k,ijk->", x1, x3, p3.p))
    c23 = float(np.einsum("j,k,jk->", x2, x3, p23))
    return c12 + c23 - c13


def markov_order_relation_residual(
    p3: ProbabilityTable, p12: ProbabilityTable, p23: ProbabilityTable, p2: ProbabilityTable, tol: float | None = None
) -> float:
    """Largest violation of ``P23/P2 = P3/P12`` over entries with well-defined conditioning."""
    tol = _tol(tol)
    worst = 0.0
    for i, j, k in itertools.product(*(range(s) for s in p3.p.shape)):
        if p2.p[j] <= tol:
            continue
        if p12.p[i, j] <= tol:
            if p3.p[i, j, k] > tol:
                raise DegenerateConditioningError(f"P12 vanishes at ({i}, {j}) while P3 does not")
            continue
        lhs = p23.p[j, k] / p2.p[j]
        rhs = p3.p[i, j, k] / p12.p[i, j]
        worst = max(worst, abs(lhs - rhs))
    return worst
