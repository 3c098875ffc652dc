"""``lgps`` command line: run, sweep and classify scenario files.

Exit status is 0 on success, 2 for bad input and 3 when a probability
comes out with a non-negligible imaginary part.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass
from pathlib import Path

from lgps.errors import ConventionError, LgpsError, SchemaError
from lgps.io import ScenarioDocument, read_document
from lgps.lg import joint_probability, k3
from lgps.opstate import default_tol
from lgps.process import build_process_state
from lgps.scenarios import k3_curve
from lgps.structure import classify, plan_bases

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_CONVENTION = 3

PHI_NOTE = (
    "time-2 basis uses phi_+ = (|+> + i eps |->)/sqrt2 and phi_- = (|-> + i eps |+>)/sqrt2 "
    "with eps = (-1)^(k-1); the unmeasured time-2 dual is (Pi_phi+ + Pi_phi-)/2"
)


@dataclass(frozen=True)
class RunConfig:
    command: str
    input: Path
    out: Path | None = None
    format: str = "json"
    tol: float | None = None
    theta_min: float = -math.pi
    theta_max: float = math.pi
    steps: int = 181
    k: int | None = None
    jobs: int = 1

    def validate(self) -> None:
        if not self.input.is_file():
            raise SchemaError("--input", f"no such file: {self.input}")
        if self.out is not None and not self.out.parent.exists():
            raise SchemaError("--out", f"directory does not exist: {self.out.parent}")
        if self.tol is not None and not self.tol > 0:
            raise SchemaError("--tol", "must be positive")
        if self.command == "sweep" and self.steps < 2:
            raise SchemaError("--steps", "must be at least 2")
        if self.jobs < 1:
            raise SchemaError("--jobs", "must be at least 1")

    def resolved_tol(self) -> float:
        return default_tol() if self.tol is None else self.tol


def theta_grid(lo: float, hi: float, steps: int) -> list[float]:
    """Evenly spaced grid whose reversal is exactly the grid for (hi, lo)."""
    n = steps - 1
    return [((n - i) * lo + i * hi) / n for i in range(steps)]


def _fmt(x: float) -> str:
    return format(float(x), ".12g")


def _emit(text: str, out: Path | None) -> None:
    if out is None:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")
    else:
        out.write_text(text if text.endswith("\n") else text + "\n")


def _notes(doc: ScenarioDocument) -> list[str]:
    return [PHI_NOTE] if doc.model is not None and doc.plan is None else []


def cmd_run(cfg: RunConfig) -> int:
    doc = read_document(cfg.input)
    tol = cfg.resolved_tol()
    plan = doc.effective_plan(cfg.k)
    ps = build_process_state(doc.scenario, tol)
    table = joint_probability(ps, plan, tol)
    report = None
    if len(plan) == 3 and all(inst.measured for inst in plan):
        report = k3(ps, plan, tol)
        print(f"K3 = {_fmt(report.K3)}")
        print(f"lg_satisfied = {str(report.lg_satisfied).lower()}")
    else:
        print("K3 = n/a (plan is not a fully measured 3-time plan)")
    for note in _notes(doc):
        print(f"note: {note}", file=sys.stderr)
    if cfg.format == "csv":
        text = table.to_csv()
    else:
        payload = {"table": table.to_json(), "lg": None if report is None else report.to_json()}
        payload["notes"] = _notes(doc)
        text = json.dumps(payload, indent=2)
    if cfg.out is not None:
        _emit(text, cfg.out)
    return EXIT_OK


def cmd_sweep(cfg: RunConfig) -> int:
    doc = read_document(cfg.input)
    if doc.model is None:
        raise SchemaError("two_qubit_model", "sweep needs the two_qubit_model block")
    tol = cfg.resolved_tol()
    k = cfg.k if cfg.k is not None else doc.model_k()
    thetas = theta_grid(cfg.theta_min, cfg.theta_max, cfg.steps)
    for t in (cfg.theta_min, cfg.theta_max):
        if not -math.pi - 1e-12 <= t <= math.pi + 1e-12:
            raise SchemaError("--theta-min" if t == cfg.theta_min else "--theta-max", "must lie in [-pi, pi]")
    curve = k3_curve(doc.model, thetas, k=k, workers=cfg.jobs, tol=tol)
    if cfg.format == "json":
        rows = [{"theta": t, "C12": r.C12, "C23": r.C23, "C13": r.C13, "K3": r.K3} for t, r in curve.points]
        text = json.dumps({"k": k, "points": rows, "notes": _notes(doc)}, indent=2)
    else:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["theta", "C12", "C23", "C13", "K3"])
        for t, r in curve.points:
            w.writerow([_fmt(t), _fmt(r.C12), _fmt(r.C23), _fmt(r.C13), _fmt(r.K3)])
        text = buf.getvalue()
    _emit(text, cfg.out)
    return EXIT_OK


def cmd_classify(cfg: RunConfig) -> int:
    doc = read_document(cfg.input)
    tol = cfg.resolved_tol()
    ps = build_process_state(doc.scenario, tol)
    if ps.n_times != 3:
        raise SchemaError("evolutions", f"classification needs 3 measurement times, got {ps.n_times}")
    report = classify(ps, plan_bases(doc.effective_plan(cfg.k)), tol)
    data = report.to_json()
    data["notes"] = _notes(doc)
    if cfg.format == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["key", "value"])
        for key, val in data.items():
            if isinstance(val, dict):
                for sub, v in val.items():
                    w.writerow([f"{key}.{sub}", v])
            elif isinstance(val, list):
                w.writerow([key, ";".join(map(str, val))])
            else:
                w.writerow([key, _fmt(val) if isinstance(val, float) else val])
        text = buf.getvalue()
    else:
        text = json.dumps(data, indent=2)
    _emit(text, cfg.out)
    return EXIT_OK


COMMANDS = {"run": cmd_run, "sweep": cmd_sweep, "classify": cmd_classify}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lgps", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, helptext in (
        ("run", "joint probabilities and K3 for the scenario's plan"),
        ("sweep", "K3 over a grid of measurement angles (two-qubit model)"),
        ("classify", "quantum-classical structure report"),
    ):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("input_pos", nargs="?", metavar="INPUT", help="scenario JSON (same as --input)")
        p.add_argument("--input", help="scenario JSON")
        p.add_argument("--out", help="output file (stdout when omitted)")
        p.add_argument("--format", choices=("csv", "json"), default="csv" if name == "sweep" else "json")
        p.add_argument("--tol", type=float, help="residual tolerance (default: LGPS_TOL or 1e-10)")
        p.add_argument("--k", type=int, help="index of the half-integer-pi point for the time-2 basis")
        if name == "sweep":
            p.add_argument("--theta-min", type=float, default=-math.pi)
            p.add_argument("--theta-max", type=float, default=math.pi)
            p.add_argument("--steps", type=int, default=181)
            p.add_argument("--jobs", type=int, default=1, help="worker threads")
    return parser


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    src = ns.input or ns.input_pos
    if src is None:
        raise SchemaError("--input", "missing")
    if ns.input and ns.input_pos and ns.input != ns.input_pos:
        raise SchemaError("--input", "given twice with different values")
    extra = {}
    if ns.command == "sweep":
        extra = dict(theta_min=ns.theta_min, theta_max=ns.theta_max, steps=ns.steps, jobs=ns.jobs)
    return RunConfig(
        command=ns.command,
        input=Path(src),
        out=Path(ns.out) if ns.out else None,
        format=ns.format,
        tol=ns.tol,
        k=ns.k,
        **extra,
    )


def main(argv: list[str] | None = None) -> int:
    ns = build_parser().parse_args(argv)
    try:
        cfg = config_from_args(ns)
        cfg.validate()
        return COMMANDS[cfg.command](cfg)
    except ConventionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONVENTION
    except LgpsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
