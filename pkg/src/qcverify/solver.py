"""External solver driver and the top-level verification loop.

The query is written to a temp file as SMT-LIB2 and discharged by a
delta-complete solver subprocess speaking the dReal 4 command-line
protocol (`<solver> --precision <delta> file.smt2`).  A real dReal
binary is used when present on PATH; otherwise the bundled `icpsat`
solver (same protocol) takes over.
"""

from __future__ import annotations

import json
import re
import shutil
import subprocess
import sys
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path

from .encoder import EncodeOptions, SymbolTable
from .errors import MissingSymbol, SolverError
from .program import BasisSet, ConcreteState, FullHilbert, JointState, ProgramModel
from .smtlib import EmitConfig, to_script
from .specs import assemble_query, check_structural
from .terms import Constraint

REFUTE_MARGIN = 1e-2


@dataclass(frozen=True)
class SolverConfig:
    solver_path: tuple[str, ...] | None = None  # None = auto-detect
    delta: float = 1e-4
    timeout: float = 600.0
    mode: str = "exact"
    extra_flags: tuple[str, ...] = ()
    box_keep_eq1: bool = False

    def __post_init__(self):
        if self.delta <= 0:
            raise ValueError("delta must be positive")

    def command(self) -> list[str]:
        if self.solver_path:
            return list(self.solver_path)
        return default_solver_command()

    def encode_options(self) -> EncodeOptions:
        return EncodeOptions(mode=self.mode, box_keep_eq1=self.box_keep_eq1)


def default_solver_command() -> list[str]:
    for name in ("dreal", "dreal4"):
        path = shutil.which(name)
        if path:
            return [path]
    path = shutil.which("icpsat")
    if path:
        return [path]
    return [sys.executable, "-m", "qcverify.icp.cli"]


def solver_available(cfg: SolverConfig) -> bool:
    try:
        proc = subprocess.run(
            cfg.command() + ["--version"], capture_output=True, text=True, timeout=30
        )
        return proc.returncode == 0
    except (OSError, subprocess.TimeoutExpired):
        return False


@dataclass
class Verdict:
    kind: str  # unsat | delta-sat | timeout | unknown | error
    model: dict[str, tuple[float, float]] = field(default_factory=dict)
    wall_time_ms: float = 0.0
    delta: float = 0.0
    raw: str = ""

    @property
    def is_unsat(self) -> bool:
        return self.kind == "unsat"

    @property
    def is_delta_sat(self) -> bool:
        return self.kind == "delta-sat"


_MODEL_LINE = re.compile(r"^\s*(\S+)\s*:\s*\[\s*([^,\]]+),\s*([^\]]+)\]\s*$")


def parse_solver_output(text: str, delta: float) -> Verdict:
    model: dict[str, tuple[float, float]] = {}
    kind = None
    for line in text.splitlines():
        stripped = line.strip()
        if stripped == "unsat":
            kind = "unsat"
        elif stripped.startswith("delta-sat"):
            kind = "delta-sat"
        elif stripped == "unknown":
            kind = "unknown"
        else:
            match = _MODEL_LINE.match(line)
            if match and kind == "delta-sat":
                try:
                    model[match.group(1)] = (float(match.group(2)), float(match.group(3)))
                except ValueError:
                    continue
    if kind is None:
        raise SolverError(f"unparseable solver output: {text[:400]!r}")
    return Verdict(kind, model, delta=delta, raw=text)


def run(
    constraint: Constraint,
    decls,
    cfg: SolverConfig,
    emit: EmitConfig | None = None,
    keep_file: str | None = None,
) -> Verdict:
    """Write the script, invoke the solver subprocess, parse the verdict."""
    script = to_script(constraint, decls, emit or EmitConfig())
    if keep_file:
        Path(keep_file).write_text(script, encoding="utf-8")
        path = keep_file
        cleanup = False
    else:
        handle = tempfile.NamedTemporaryFile(
            "w", suffix=".smt2", prefix="qcv_", delete=False, encoding="utf-8"
        )
        handle.write(script)
        handle.close()
        path = handle.name
        cleanup = True
    cmd = cfg.command() + ["--precision", repr(cfg.delta)] + list(cfg.extra_flags) + [path]
    start = time.monotonic()
    try:
        proc = subprocess.run(cmd, capture_output=True, text=True, timeout=cfg.timeout)
    except subprocess.TimeoutExpired:
        return Verdict("timeout", wall_time_ms=(time.monotonic() - start) * 1000, delta=cfg.delta)
    except OSError as exc:
        raise SolverError(f"cannot invoke solver {cmd[0]!r}: {exc}") from exc
    finally:
        if cleanup:
            Path(path).unlink(missing_ok=True)
    elapsed = (time.monotonic() - start) * 1000
    output = proc.stdout + ("\n" + proc.stderr if proc.stderr else "")
    try:
        verdict = parse_solver_output(output, cfg.delta)
    except SolverError:
        if proc.returncode != 0:
            return Verdict("error", wall_time_ms=elapsed, delta=cfg.delta, raw=output)
        raise
    verdict.wall_time_ms = elapsed
    return verdict


# --- counterexamples ---------------------------------------------------------


@dataclass
class Counterexample:
    inputs: dict  # qubit -> {alpha, beta_re, beta_im}
    params: dict  # parameter name -> value
    branches: dict  # label -> {qubit -> components} for the final state
    sphere_residuals: dict  # qubit -> residual of |a|^2+|b|^2-1 at state 0
    from_interval_midpoints: bool = True

    def max_residual(self) -> float:
        return max(self.sphere_residuals.values(), default=0.0)

    def to_dict(self) -> dict:
        return {
            "inputs": {str(k): v for k, v in self.inputs.items()},
            "params": dict(self.params),
            "branches": self.branches,
            "sphere_residuals": {str(k): v for k, v in self.sphere_residuals.items()},
            "from_interval_midpoints": self.from_interval_midpoints,
        }


def _mid(model: dict, name: str) -> float:
    if name not in model:
        raise MissingSymbol(name)
    lo, hi = model[name]
    return 0.5 * (lo + hi)


def extract_counterexample(
    verdict: Verdict, table: SymbolTable, p: ProgramModel
) -> Counterexample:
    if not verdict.is_delta_sat:
        raise SolverError("counterexamples exist only for delta-sat verdicts")
    inputs, residuals = {}, {}
    joint_done = set()
    for qubit in range(p.n_qubits):
        val = p.init[qubit]
        if isinstance(val, JointState):
            if val.qubits[0] not in joint_done:
                joint_done.add(val.qubits[0])
                # pinned constants; their norm residual is zero by construction
                for member in val.qubits:
                    residuals[member] = 0.0
            continue
        block = table.block(0, qubit, "")
        alpha = _mid(verdict.model, block.name("alpha"))
        beta_re = _mid(verdict.model, block.name("beta_r"))
        beta_im = _mid(verdict.model, block.name("beta_i"))
        inputs[qubit] = {"alpha": alpha, "beta_re": beta_re, "beta_im": beta_im}
        residuals[qubit] = abs(alpha**2 + beta_re**2 + beta_im**2 - 1.0)
    params = {
        prm.name: _mid(verdict.model, prm.name)
        for prm in p.params
        if prm.name in verdict.model
    }
    branches = {}
    final = p.n_states - 1
    from .program import branch_labels

    for label in branch_labels(p):
        per_qubit = {}
        for qubit in range(p.n_qubits):
            try:
                block = table.block(final, qubit, label)
                per_qubit[str(qubit)] = {
                    "alpha": _mid(verdict.model, block.name("alpha")),
                    "beta_re": _mid(verdict.model, block.name("beta_r")),
                    "beta_im": _mid(verdict.model, block.name("beta_i")),
                }
            except (MissingSymbol, KeyError):
                continue
        branches[label] = per_qubit
    return Counterexample(inputs, params, branches, residuals)


def is_spurious(cex: Counterexample, delta: float) -> bool:
    """Witness outside Hilbert space: sphere residual beyond 10*delta."""
    return cex.max_residual() > 10.0 * delta


# --- verification flow -------------------------------------------------------


@dataclass
class VerifyOutcome:
    status: str  # verified | refuted | spurious | timeout | error | structural-violation
    mode: str
    delta: float
    wall_time_ms: float = 0.0
    counterexample: Counterexample | None = None
    structural_violations: list = field(default_factory=list)
    stages: list = field(default_factory=list)  # (mode, verdict kind, ms)

    def exit_code(self) -> int:
        if self.status == "verified":
            return 0
        if self.status in ("refuted", "structural-violation"):
            return 1
        return 2

    def to_dict(self) -> dict:
        return {
            "verdict": self.status,
            "mode": self.mode,
            "delta": self.delta,
            "wall_time_ms": round(self.wall_time_ms, 3),
            "counterexample": self.counterexample.to_dict() if self.counterexample else None,
            "structural_violations": [
                {"rule": repr(rule), "op_index": index}
                for rule, index in self.structural_violations
            ],
            "stages": [
                {"mode": mode, "verdict": kind, "wall_time_ms": round(ms, 3)}
                for mode, kind, ms in self.stages
            ],
        }


def verify(
    p: ProgramModel,
    formula: Constraint,
    rules=(),
    cfg: SolverConfig = SolverConfig(),
    dump_smt: str | None = None,
) -> VerifyOutcome:
    """Structural checks, then the delta-decision query.

    Box mode follows the over-approximation discipline: unsat verifies;
    a witness inside Hilbert space refutes; a witness outside it is
    spurious and triggers an automatic exact-mode re-run.
    """
    start = time.monotonic()
    violations = check_structural(rules, p)
    if violations:
        return VerifyOutcome(
            "structural-violation",
            cfg.mode,
            cfg.delta,
            (time.monotonic() - start) * 1000,
            structural_violations=violations,
        )
    constraint, table = assemble_query(p, formula, cfg.encode_options())
    verdict = run(constraint, table.declarations, cfg, keep_file=dump_smt)
    stages = [(cfg.mode, verdict.kind, verdict.wall_time_ms)]
    if verdict.is_unsat:
        return VerifyOutcome(
            "verified", cfg.mode, cfg.delta, (time.monotonic() - start) * 1000, stages=stages
        )
    if verdict.kind in ("timeout", "unknown", "error"):
        status = "timeout" if verdict.kind == "timeout" else "error"
        return VerifyOutcome(
            status, cfg.mode, cfg.delta, (time.monotonic() - start) * 1000, stages=stages
        )
    cex = extract_counterexample(verdict, table, p)
    if cfg.mode == "box" and is_spurious(cex, cfg.delta):
        # spurious candidate: repeat without the over-approximation
        exact_cfg = SolverConfig(
            solver_path=cfg.solver_path,
            delta=cfg.delta,
            timeout=cfg.timeout,
            mode="exact",
            extra_flags=cfg.extra_flags,
        )
        inner = verify(p, formula, rules, exact_cfg)
        inner.stages = stages + inner.stages
        inner.wall_time_ms = (time.monotonic() - start) * 1000
        if inner.status in ("verified", "refuted"):
            return inner
        inner.status = "spurious" if inner.status not in ("timeout", "error") else inner.status
        return inner
    # sharpen the witness: re-query with a strict-violation margin so the
    # counterexample replays against the simulator with real slack
    sharp_constraint, sharp_table = assemble_query(
        p, formula, cfg.encode_options(), margin=REFUTE_MARGIN
    )
    sharp = run(sharp_constraint, sharp_table.declarations, cfg)
    stages.append((cfg.mode + "+margin", sharp.kind, sharp.wall_time_ms))
    if sharp.is_delta_sat:
        cex = extract_counterexample(sharp, sharp_table, p)
    return VerifyOutcome(
        "refuted",
        cfg.mode,
        cfg.delta,
        (time.monotonic() - start) * 1000,
        counterexample=cex,
        stages=stages,
    )


def report_json(outcome: VerifyOutcome, benchmark: str | None = None) -> str:
    payload = outcome.to_dict()
    if benchmark:
        payload["benchmark"] = benchmark
    return json.dumps(payload, indent=2, sort_keys=True)
