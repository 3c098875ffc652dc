"""Scenario documents: JSON in, validated objects out, and back.

Complex matrices are lists of rows of ``[re, im]`` pairs (row-major); a bare
real number is accepted for an entry on input and always written back as a
pair.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from lgps.errors import LgpsError, SchemaError
from lgps.opstate import matrix_to_json, vector_to_json
from lgps.process import Instrument, Scenario
from lgps.scenarios import TwoQubitModel, build_two_qubit_scenario, halfpi_index, paper_measurement_plan


def _complex(x, path: str) -> complex:
    if isinstance(x, bool):
        raise SchemaError(path, "expected a number or [re, im] pair")
    if isinstance(x, (int, float)):
        return complex(float(x), 0.0)
    if isinstance(x, (list, tuple)) and len(x) == 2 and all(
        isinstance(v, (int, float)) and not isinstance(v, bool) for v in x
    ):
        return complex(float(x[0]), float(x[1]))
    raise SchemaError(path, f"expected a number or [re, im] pair, got {x!r}")


def _vector(x, path: str, length: int | None = None) -> np.ndarray:
    if not isinstance(x, list) or not x:
        raise SchemaError(path, "expected a non-empty list of entries")
    v = np.array([_complex(e, f"{path}[{i}]") for i, e in enumerate(x)])
    if length is not None and len(v) != length:
        raise SchemaError(path, f"has {len(v)} entries, expected {length}")
    return v


def _matrix(x, path: str, dim: int | None = None) -> np.ndarray:
    if not isinstance(x, list) or not x:
        raise SchemaError(path, "expected a non-empty list of rows")
    rows = []
    width = dim
    for i, row in enumerate(x):
        if not isinstance(row, list):
            raise SchemaError(f"{path}[{i}]", "row must be a list")
        if width is None:
            width = len(row)
        rows.append(_vector(row, f"{path}[{i}]", width))
    m = np.array(rows)
    if dim is not None and m.shape[0] != dim:
        raise SchemaError(path, f"has {m.shape[0]} rows, expected {dim}")
    if m.shape[0] != m.shape[1]:
        raise SchemaError(path, f"must be square, got {m.shape[0]}x{m.shape[1]}")
    return m


def _number(doc: dict, key: str, path: str, default=None) -> float:
    if key not in doc:
        if default is None:
            raise SchemaError(f"{path}.{key}", "missing")
        return default
    v = doc[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise SchemaError(f"{path}.{key}", f"expected a finite number, got {v!r}")
    return float(v)


def _int(doc: dict, key: str, path: str) -> int:
    v = doc[key]
    if isinstance(v, bool) or not isinstance(v, int):
        raise SchemaError(f"{path}.{key}", f"expected an integer, got {v!r}")
    return v


@dataclass(frozen=True)
class ScenarioDocument:
    """Everything a scenario file can specify.

    ``model`` and ``theta`` are set when the file used the two-qubit-model
    shorthand; ``plan`` is ``None`` when the file gave no explicit plan.
    """

    scenario: Scenario
    plan: tuple[Instrument, ...] | None = None
    model: TwoQubitModel | None = None
    theta: float | None = None

    def model_k(self) -> int:
        m = self.model
        if m is None:
            raise SchemaError("two_qubit_model", "missing")
        if m.k is not None:
            return m.k
        k = halfpi_index(m.theta1)
        return 1 if k is None else k

    def effective_plan(self, k: int | None = None) -> list[Instrument]:
        if self.plan is not None:
            return list(self.plan)
        if self.model is None or self.theta is None:
            raise SchemaError("plan", "missing (give a plan or two_qubit_model.theta)")
        return paper_measurement_plan(self.theta, self.model_k() if k is None else k)


def _parse_model(doc, path: str) -> tuple[TwoQubitModel, float | None]:
    if not isinstance(doc, dict):
        raise SchemaError(path, "expected an object")
    rho = doc.get("rho0")
    if not isinstance(rho, dict):
        raise SchemaError(f"{path}.rho0", "expected an object with a, b, c_re, c_im")
    a = _number(rho, "a", f"{path}.rho0")
    b = _number(rho, "b", f"{path}.rho0")
    c = complex(_number(rho, "c_re", f"{path}.rho0", 0.0), _number(rho, "c_im", f"{path}.rho0", 0.0))
    k = _int(doc, "k", path) if "k" in doc else None
    theta = _number(doc, "theta", path) if "theta" in doc else None
    omega, tau1, tau2 = (_number(doc, key, path) for key in ("omega", "tau1", "tau2"))
    try:
        model = TwoQubitModel.from_entries(omega, tau1, tau2, a, b, c, k)
    except LgpsError as exc:
        raise SchemaError(f"{path}.rho0", str(exc)) from None
    return model, theta


def _parse_plan(doc, path: str, d: int) -> tuple[Instrument, ...]:
    if not isinstance(doc, list) or not doc:
        raise SchemaError(path, "expected a non-empty list of instruments")
    plan = []
    for j, item in enumerate(doc):
        ipath = f"{path}[{j}]"
        if item == "unmeasured":
            plan.append(Instrument.unmeasured())
            continue
        if not isinstance(item, dict) or "basis" not in item:
            raise SchemaError(ipath, 'expected "unmeasured" or an object with "basis"')
        basis = item["basis"]
        if not isinstance(basis, list) or len(basis) != d:
            raise SchemaError(f"{ipath}.basis", f"expected {d} basis vectors")
        vectors = [_vector(v, f"{ipath}.basis[{i}]", d) for i, v in enumerate(basis)]
        values = None
        if "values" in item:
            vals = item["values"]
            if not isinstance(vals, list) or len(vals) != d or any(
                isinstance(v, bool) or not isinstance(v, (int, float)) for v in vals
            ):
                raise SchemaError(f"{ipath}.values", f"expected {d} real outcome values")
            values = tuple(float(v) for v in vals)
        try:
            plan.append(Instrument.projective(vectors, values))
        except LgpsError as exc:
            raise SchemaError(f"{ipath}.basis", str(exc)) from None
    return tuple(plan)


def load_document(doc: dict) -> ScenarioDocument:
    """Validate a parsed JSON document; raises ``SchemaError`` naming the bad field."""
    if not isinstance(doc, dict):
        raise SchemaError("$", "top level must be an object")
    model = theta = None
    if "two_qubit_model" in doc:
        model, theta = _parse_model(doc["two_qubit_model"], "two_qubit_model")
        scenario = build_two_qubit_scenario(model)
    else:
        for key in ("dim_system", "dim_env", "rho0_system", "rho0_env", "evolutions"):
            if key not in doc:
                raise SchemaError(key, "missing")
        ds = _int(doc, "dim_system", "$")
        de = _int(doc, "dim_env", "$")
        if ds < 1 or de < 1:
            raise SchemaError("dim_system" if ds < 1 else "dim_env", "must be positive")
        rs = _matrix(doc["rho0_system"], "rho0_system", ds)
        re = _matrix(doc["rho0_env"], "rho0_env", de)
        ev = doc["evolutions"]
        try:
            if isinstance(ev, dict):
                if "hamiltonian" not in ev or "durations" not in ev:
                    raise SchemaError("evolutions", "expected hamiltonian and durations")
                h = _matrix(ev["hamiltonian"], "evolutions.hamiltonian", ds * de)
                durs = ev["durations"]
                if not isinstance(durs, list) or not durs or any(
                    isinstance(t, bool) or not isinstance(t, (int, float)) for t in durs
                ):
                    raise SchemaError("evolutions.durations", "expected a non-empty list of numbers")
                scenario = Scenario.from_hamiltonian(rs, re, h, [float(t) for t in durs])
            elif isinstance(ev, list) and ev:
                us = [_matrix(u, f"evolutions[{j}]", ds * de) for j, u in enumerate(ev)]
                scenario = Scenario(rs, re, tuple(us))
            else:
                raise SchemaError("evolutions", "expected a list of matrices or a hamiltonian block")
            scenario.validate()
        except SchemaError:
            raise
        except LgpsError as exc:
            raise SchemaError("scenario", str(exc)) from None
    plan = None
    if "plan" in doc:
        plan = _parse_plan(doc["plan"], "plan", scenario.d_system)
        if len(plan) != scenario.n_times:
            raise SchemaError("plan", f"has {len(plan)} instruments for {scenario.n_times} measurement times")
    return ScenarioDocument(scenario, plan, model, theta)


def dump_document(sd: ScenarioDocument) -> dict:
    """Canonical JSON form; ``load_document(dump_document(x))`` reproduces ``x``."""
    out: dict = {}
    if sd.model is not None:
        m = sd.model
        block = {
            "omega": m.omega,
            "tau1": m.tau1,
            "tau2": m.tau2,
            "rho0": {"a": m.a, "b": m.b, "c_re": m.c.real, "c_im": m.c.imag},
        }
        if m.k is not None:
            block["k"] = m.k
        if sd.theta is not None:
            block["theta"] = sd.theta
        out["two_qubit_model"] = block
    else:
        s = sd.scenario
        out["dim_system"] = s.d_system
        out["dim_env"] = s.d_env
        out["rho0_system"] = matrix_to_json(s.rho0_system)
        out["rho0_env"] = matrix_to_json(s.rho0_env)
        if s.hamiltonian is not None:
            out["evolutions"] = {"hamiltonian": matrix_to_json(s.hamiltonian), "durations": list(s.durations)}
        else:
            out["evolutions"] = [matrix_to_json(u) for u in s.unitaries]
    if sd.plan is not None:
        out["plan"] = [
            {"basis": [vector_to_json(inst.basis[:, x]) for x in range(inst.n_outcomes)], "values": list(inst.values)}
            if inst.measured
            else "unmeasured"
            for inst in sd.plan
        ]
    return out


def read_document(path: str | Path) -> ScenarioDocument:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise SchemaError("--input", f"cannot read {p}: {exc.strerror}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError("$", f"invalid JSON at line {exc.lineno}: {exc.msg}") from None
    return load_document(doc)
