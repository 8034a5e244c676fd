"""First-order specifications over qubit blocks and state-vector entries.

A specification is a constraint tree whose leaves may reference encoder
symbols through marker variables:

    qref(state, qubit, role)      role in alpha|beta_r|beta_i|phi|theta
    aref(state, index, part)      part in re|im  (full-register vector)

References default to the all-branches form; verification expands them
into one copy per measurement branch before encoding, so the property
must hold on every path.  The same tree evaluates numerically against
simulator traces, which keeps the oracle and the SMT pipeline on one
spec source.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import UnresolvedSymRef
from .program import Measure, ProgramModel, branch_labels, touched_qubits
from .terms import (
    Add,
    And,
    Const,
    Constraint,
    Eq,
    Ge,
    Gt,
    Implies,
    Le,
    Lt,
    Mul,
    Neg,
    Not,
    Or,
    RealTerm,
    Sin,
    Cos,
    Sub,
    TrueC,
    Var,
    conjoin,
    constraint_variables,
    evaluate_constraint,
    to_nnf,
)

ALL_BRANCHES = "*"
_ROLES = ("alpha", "beta_r", "beta_i", "phi", "theta")


def qref(state: int, qubit: int, role: str, branch: str = ALL_BRANCHES) -> Var:
    if role not in _ROLES:
        raise UnresolvedSymRef(f"unknown qubit role {role!r}")
    return Var(f"@q/{state}/{qubit}/{role}/{branch}")


def aref(state: int, index: int, part: str, branch: str = ALL_BRANCHES) -> Var:
    if part not in ("re", "im"):
        raise UnresolvedSymRef(f"amplitude part must be re or im, got {part!r}")
    return Var(f"@a/{state}/{index}/{part}/{branch}")


def ite(cond: Constraint, then: Constraint, otherwise: Constraint = TrueC()) -> Constraint:
    """(cond ? then : otherwise) desugared into two implications."""
    return And([Implies(cond, then), Implies(Not(cond), otherwise)])


def qubit_equal(state_a: int, qubit_a: int, state_b: int, qubit_b: int) -> Constraint:
    """Componentwise amplitude equality of two qubit blocks."""
    return And(
        [
            Eq(qref(state_a, qubit_a, role), qref(state_b, qubit_b, role))
            for role in ("alpha", "beta_r", "beta_i")
        ]
    )


def negate(formula: Constraint) -> Constraint:
    """Negation pushed to atoms; != becomes a strict disjunction."""
    return to_nnf(Not(formula))


def add_margin(formula: Constraint, margin: float) -> Constraint:
    """Strengthen every strict atom by `margin` (used to extract robust
    counterexamples: a delta-sat witness of the strengthened negation
    violates the original spec by at least the margin)."""
    if margin <= 0:
        return formula
    from fractions import Fraction

    m = Const.of(Fraction(margin))

    def walk(c: Constraint) -> Constraint:
        if isinstance(c, Lt):
            return Lt(c.a, Sub(c.b, m))
        if isinstance(c, Gt):
            return Gt(c.a, Add(c.b, m))
        if isinstance(c, And):
            return And([walk(x) for x in c.items])
        if isinstance(c, Or):
            return Or([walk(x) for x in c.items])
        if isinstance(c, Implies):
            return Implies(c.a, walk(c.b))
        return c

    return walk(formula)


# --- reference resolution ----------------------------------------------------


def _parse_ref(name: str) -> tuple | None:
    if not name.startswith("@"):
        return None
    parts = name.split("/")
    kind = parts[0]
    if kind == "@q":
        return ("q", int(parts[1]), int(parts[2]), parts[3], parts[4])
    if kind == "@a":
        return ("a", int(parts[1]), int(parts[2]), parts[3], parts[4])
    raise UnresolvedSymRef(f"malformed reference {name!r}")


def referenced_amp_states(formula: Constraint) -> set[int]:
    out = set()
    for name in constraint_variables(formula):
        ref = _parse_ref(name)
        if ref and ref[0] == "a":
            out.add(ref[1])
    return out


def expand_branches(formula: Constraint, p: ProgramModel) -> Constraint:
    """One copy of the formula per measurement branch (conjunction)."""
    labels = branch_labels(p)
    has_star = any(
        _parse_ref(name) and _parse_ref(name)[4] == ALL_BRANCHES
        for name in constraint_variables(formula)
    )
    if not has_star or labels == [""]:
        return formula
    copies = [_rebind_branch(formula, label) for label in labels]
    return conjoin(copies)


def _rebind_branch(c: Constraint, label: str) -> Constraint:
    def walk_term(t: RealTerm) -> RealTerm:
        if isinstance(t, Var):
            ref = _parse_ref(t.name)
            if ref and ref[4] == ALL_BRANCHES:
                head, a, b, c_, _ = ref
                prefix = "@q" if head == "q" else "@a"
                return Var(f"{prefix}/{a}/{b}/{c_}/{label}")
            return t
        if isinstance(t, (Add, Sub, Mul)):
            return type(t)(walk_term(t.a), walk_term(t.b))
        if isinstance(t, Neg):
            return Neg(walk_term(t.a))
        if isinstance(t, (Sin, Cos)):
            return type(t)(walk_term(t.arg))
        return t

    return _map_atoms(c, walk_term)


def _map_atoms(c: Constraint, fn) -> Constraint:
    if isinstance(c, (Eq, Le, Lt, Ge, Gt)):
        return type(c)(fn(c.a), fn(c.b))
    if isinstance(c, And):
        return And([_map_atoms(x, fn) for x in c.items])
    if isinstance(c, Or):
        return Or([_map_atoms(x, fn) for x in c.items])
    if isinstance(c, Not):
        return Not(_map_atoms(c.item, fn))
    if isinstance(c, Implies):
        return Implies(_map_atoms(c.a, fn), _map_atoms(c.b, fn))
    return c


def resolve(formula: Constraint, table) -> Constraint:
    """Replace reference markers with the encoder's symbol names."""

    def walk_term(t: RealTerm) -> RealTerm:
        if isinstance(t, Var):
            ref = _parse_ref(t.name)
            if ref is None:
                return t
            if ref[0] == "q":
                _, state, qubit, role, branch = ref
                if branch == ALL_BRANCHES:
                    branch = ""
                block = table.block(state, qubit, branch)
                if role in ("phi", "theta") and not table.emit_phase_vars:
                    raise UnresolvedSymRef(f"{role} is not present in box mode")
                return block.var(role)
            _, state, index, part, branch = ref
            if branch == ALL_BRANCHES:
                branch = ""
            amp = table.amplitude(state, index, branch)
            return amp.re if part == "re" else amp.im
        if isinstance(t, (Add, Sub, Mul)):
            return type(t)(walk_term(t.a), walk_term(t.b))
        if isinstance(t, Neg):
            return Neg(walk_term(t.a))
        if isinstance(t, (Sin, Cos)):
            return type(t)(walk_term(t.arg))
        return t

    return _map_atoms(formula, walk_term)


# --- structural rules ---------------------------------------------------------


@dataclass(frozen=True)
class ForbidJointTouch:
    """No state operation before `before` may touch group_a and group_b
    together (the preprocessing check, never encoded into SMT)."""

    group_a: frozenset
    group_b: frozenset
    before: int | None = None  # op index bound; None scans up to first measurement


def check_structural(rules, p: ProgramModel) -> list[tuple]:
    """Violations as (rule, op_index); empty list means pass."""
    violations = []
    for rule in rules:
        bound = rule.before
        if bound is None:
            bound = next(
                (i for i, op in enumerate(p.ops) if isinstance(op, Measure)), len(p.ops)
            )
        for index, op in enumerate(p.ops[:bound]):
            touched = touched_qubits(op)
            if touched & rule.group_a and touched & rule.group_b:
                violations.append((rule, index))
                break
    return violations


# --- query assembly -----------------------------------------------------------


def assemble_query(
    p: ProgramModel,
    formula: Constraint,
    opts=None,
    margin: float = 0.0,
):
    """encode(p) conjoined with the negated spec; returns (constraint, table)."""
    from .encoder import EncodeOptions, encode

    opts = opts or EncodeOptions()
    expanded = expand_branches(formula, p)
    needed = referenced_amp_states(expanded)
    if needed - set(opts.materialize_states):
        opts = EncodeOptions(
            mode=opts.mode,
            box_keep_eq1=opts.box_keep_eq1,
            materialize_states=frozenset(set(opts.materialize_states) | needed),
        )
    encoded, table = encode(p, opts)
    negated = add_margin(negate(expanded), margin)
    goal = resolve(negated, table)
    return conjoin([encoded, goal]), table


# --- numeric evaluation (simulator oracle) -------------------------------------


def _canonical_block(state_vec, n: int, qubit: int) -> tuple[float, float, float]:
    from .sim import qubit_factor

    factor = qubit_factor(state_vec, n, qubit)
    return float(factor[0].real), float(factor[1].real), float(factor[1].imag)


def _block_angles(alpha: float, beta_re: float, beta_im: float) -> tuple[float, float]:
    theta = 2.0 * math.acos(max(-1.0, min(1.0, alpha)))
    if theta < 1e-12 or abs(theta - math.pi) < 1e-12:
        return 0.0, theta
    phi = math.atan2(beta_im, beta_re) % (2.0 * math.pi)
    return phi, theta


def spec_env(formula: Constraint, p: ProgramModel, traces: dict, params: dict) -> dict:
    """Numeric environment for every reference in an expanded formula.

    `traces` maps branch labels to sim.Trace (or None for zero-probability
    branches).  Vector references use unnormalized amplitudes, matching
    the encoder's projection semantics.
    """
    env = dict(params)
    for name in constraint_variables(formula):
        ref = _parse_ref(name)
        if ref is None:
            continue
        kind, state, which, role_or_part, branch = ref
        if branch == ALL_BRANCHES:
            if list(traces.keys()) != [""]:
                raise UnresolvedSymRef("expand branches before evaluation")
            branch = ""
        trace = traces.get(branch)
        if kind == "a":
            if trace is None:
                env[name] = 0.0
                continue
            raw = trace.states[state] * math.sqrt(trace.accum_probs[state])
            amp = raw[which]
            env[name] = float(amp.real) if role_or_part == "re" else float(amp.imag)
        else:
            if trace is None:
                value = _zero_branch_block(p, state, which, branch)
                if value is None:
                    raise UnresolvedSymRef(
                        f"qubit {which} not resolvable on zero-probability branch {branch!r}"
                    )
                alpha, beta_re, beta_im = value
            else:
                alpha, beta_re, beta_im = _canonical_block(
                    trace.states[state], p.n_qubits, which
                )
            if role_or_part == "alpha":
                env[name] = alpha
            elif role_or_part == "beta_r":
                env[name] = beta_re
            elif role_or_part == "beta_i":
                env[name] = beta_im
            else:
                phi, theta = _block_angles(alpha, beta_re, beta_im)
                env[name] = phi if role_or_part == "phi" else theta
    return env


def _zero_branch_block(p: ProgramModel, state: int, qubit: int, branch: str):
    """Measured qubits pin to their outcome bit even on dead branches."""
    cursor = 0
    for index, op in enumerate(p.ops[: state]):
        if isinstance(op, Measure):
            for q, bit in zip(op.qubits, branch[cursor : cursor + len(op.qubits)]):
                if q == qubit:
                    return (1.0, 0.0, 0.0) if bit == "0" else (0.0, 1.0, 0.0)
            cursor += len(op.qubits)
    return None


def evaluate_spec(formula: Constraint, p: ProgramModel, trace, params: dict, tol: float = 1e-7) -> bool:
    """Truth of the (single-branch) formula against one simulator trace."""
    traces = {trace.branch: trace, "": trace}
    bound = _rebind_branch(formula, trace.branch) if trace.branch else formula
    env = spec_env(bound, p, traces, params)
    return evaluate_constraint(bound, env, tol)


def evaluate_spec_multi(formula: Constraint, p: ProgramModel, traces: dict, params: dict, tol: float = 1e-7) -> bool:
    """Truth of the branch-expanded formula against all branch traces."""
    expanded = expand_branches(formula, p)
    env = spec_env(expanded, p, traces, params)
    return evaluate_constraint(expanded, env, tol)
