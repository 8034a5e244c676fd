"""Lower a program model to one constraint conjunction.

Per state and qubit the encoder creates a five-variable block
(amplitudes alpha, beta_re, beta_im and Bloch angles phi, theta) tied
by the sphere/angle-range constraints in exact mode, or a [-1,1] box
per amplitude in box mode.  Gates rewrite blocks directly while their
operands stay unentangled and basis-safe; otherwise qubit groups merge
(union-find) into symbolic state vectors and the gate applies as a
padded matrix.  Measurement branches the encoding per outcome
bit-string: measured blocks pin to the outcome basis state, vector
groups project, untouched qubits copy forward.

Naming is deterministic: blocks are role_state_qubit[_branch]; vector
entries are s{state}q{low}_{index}_{r|i}[_branch].  Encoding the same
program twice yields byte-identical output.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .errors import EntangledOperand, UnresolvedSymRef
from .gates import (
    AmplitudeImage,
    BlockView,
    GuardedMapping,
    PhaseImage,
    base_mapping,
    matrix_for,
)
from .program import (
    BasisSet,
    ConcreteState,
    FullHilbert,
    Gate,
    JointState,
    Measure,
    ProgramModel,
)
from .terms import (
    Add,
    And,
    ComplexTerm,
    Const,
    Constraint,
    Cos,
    Eq,
    Exact,
    Ge,
    Implies,
    Le,
    Lt,
    Mul,
    Or,
    PI,
    RealTerm,
    Sin,
    TrueC,
    Var,
    ZERO,
    complex_mul,
    conjoin,
    fold_constants,
)

# abstract per-qubit status used for mapping-vs-matrix dispatch
BASIS0, BASIS1, BASIS_ANY, GENERAL = "b0", "b1", "b?", "gen"
_BASIS = {BASIS0, BASIS1, BASIS_ANY}


@dataclass(frozen=True)
class EncodeOptions:
    mode: str = "exact"  # "exact" | "box"
    box_keep_eq1: bool = False  # literal reading: keep the trig coupling in box mode
    materialize_states: frozenset = frozenset()

    @property
    def emit_phase_vars(self) -> bool:
        return self.mode == "exact" or self.box_keep_eq1


@dataclass
class Block:
    """One qubit block's variable names at a given state/branch."""

    state: int
    qubit: int
    branch: str
    has_phase: bool

    def _suffix(self) -> str:
        return f"_{self.branch}" if self.branch else ""

    def name(self, role: str) -> str:
        return f"{role}_{self.state}_{self.qubit}{self._suffix()}"

    def var(self, role: str) -> Var:
        return Var(self.name(role))

    def view(self) -> BlockView:
        return BlockView(
            self.var("alpha"),
            self.var("beta_r"),
            self.var("beta_i"),
            self.var("phi") if self.has_phase else None,
            self.var("theta") if self.has_phase else None,
        )

    def names(self) -> list[str]:
        roles = ["alpha", "beta_r", "beta_i"]
        if self.has_phase:
            roles += ["phi", "theta"]
        return [self.name(r) for r in roles]


@dataclass
class VectorState:
    """A symbolic state vector over an ordered qubit group."""

    state: int
    qubits: tuple[int, ...]
    branch: str
    amplitudes: list[ComplexTerm] = field(default_factory=list)

    def names(self) -> list[str]:
        out = []
        for amp in self.amplitudes:
            for part in (amp.re, amp.im):
                if isinstance(part, Var):
                    out.append(part.name)
        return out


def _vector_vars(state: int, qubits: tuple[int, ...], branch: str, merged: bool = False) -> VectorState:
    suffix = f"_{branch}" if branch else ""
    low = qubits[0]
    prefix = "t" if merged else "s"
    amplitudes = [
        ComplexTerm(
            Var(f"{prefix}{state}q{low}_{k}_r{suffix}"),
            Var(f"{prefix}{state}q{low}_{k}_i{suffix}"),
        )
        for k in range(2 ** len(qubits))
    ]
    return VectorState(state, qubits, branch, amplitudes)


@dataclass
class SymbolTable:
    """Deterministic map from (state, qubit/index, branch, role) to names."""

    n_qubits: int
    n_states: int
    mode: str
    emit_phase_vars: bool
    declarations: list[str] = field(default_factory=list)
    blocks: dict = field(default_factory=dict)  # (state, qubit, branch) -> Block
    vectors: dict = field(default_factory=dict)  # (state, branch) -> list[VectorState]
    prob_terms: dict = field(default_factory=dict)  # (branch, op_index) -> RealTerm
    branch_prefix_len: list[int] = field(default_factory=list)  # per state

    def state_branch(self, state: int, full_branch: str) -> str:
        return full_branch[: self.branch_prefix_len[state]]

    def block(self, state: int, qubit: int, full_branch: str) -> Block:
        key = (state, qubit, self.state_branch(state, full_branch))
        if key not in self.blocks:
            raise UnresolvedSymRef(f"no qubit block for state={state} qubit={qubit}")
        return self.blocks[key]

    def amplitude(self, state: int, index: int, full_branch: str) -> ComplexTerm:
        """Entry of the full-register vector at `state`, if materialized."""
        branch = self.state_branch(state, full_branch)
        for vec in self.vectors.get((state, branch), []):
            if len(vec.qubits) == self.n_qubits:
                return vec.amplitudes[index]
        raise UnresolvedSymRef(
            f"state {state} has no full-register vector (index {index}); "
            f"materialize it when encoding"
        )


class _UnionFind:
    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, x: int) -> int:
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, a: int, b: int) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[max(ra, rb)] = min(ra, rb)

    def group(self, x: int) -> tuple[int, ...]:
        root = self.find(x)
        return tuple(q for q in range(len(self.parent)) if self.find(q) == root)


@dataclass
class _Ctx:
    """One measurement branch during emission."""

    label: str
    status: dict  # qubit -> BASIS0 | BASIS1 | BASIS_ANY | GENERAL
    blocks: dict  # qubit -> Block (current state)
    vectors: dict  # group key (lowest qubit) -> VectorState (current)
    vectors_member: set = field(default_factory=set)


_HALF = Const.of(Fraction(1, 2))
_TWO_PI = Mul(Const.of(2), PI)


def qubit_constraints(block: Block, opts: EncodeOptions) -> Constraint:
    """Sphere + angle-range coupling (exact) or per-component box bounds."""
    a, br, bi = block.var("alpha"), block.var("beta_r"), block.var("beta_i")
    if opts.mode == "box":
        box = [
            Ge(a, Const.of(-1)),
            Le(a, Const.of(1)),
            Ge(br, Const.of(-1)),
            Le(br, Const.of(1)),
            Ge(bi, Const.of(-1)),
            Le(bi, Const.of(1)),
        ]
        if not opts.box_keep_eq1:
            return And(box)
        phi, theta = block.var("phi"), block.var("theta")
        half_theta = Mul(_HALF, theta)
        return And(
            [
                Eq(a, Cos(half_theta)),
                Eq(br, Mul(Cos(phi), Sin(half_theta))),
                Eq(bi, Mul(Sin(phi), Sin(half_theta))),
            ]
            + box
        )
    phi, theta = block.var("phi"), block.var("theta")
    half_theta = Mul(_HALF, theta)
    return And(
        [
            Eq(a, Cos(half_theta)),
            Eq(br, Mul(Cos(phi), Sin(half_theta))),
            Eq(bi, Mul(Sin(phi), Sin(half_theta))),
            Ge(theta, ZERO),
            Le(theta, PI),
            Ge(phi, ZERO),
            Lt(phi, _TWO_PI),
            Implies(Eq(theta, ZERO), Eq(phi, ZERO)),
            Implies(Eq(theta, PI), Eq(phi, ZERO)),
        ]
    )


def _basis_pin(block: Block, bit: int) -> list[Constraint]:
    return [
        Eq(block.var("alpha"), Const.of(1 - bit)),
        Eq(block.var("beta_r"), Const.of(bit)),
        Eq(block.var("beta_i"), ZERO),
    ]


def _copy_rows(new: Block, old: Block) -> list[Constraint]:
    return [
        Eq(new.var("alpha"), old.var("alpha")),
        Eq(new.var("beta_r"), old.var("beta_r")),
        Eq(new.var("beta_i"), old.var("beta_i")),
    ]


def _image_rows(new: Block, image) -> list[Constraint]:
    if isinstance(image, AmplitudeImage):
        return [
            Eq(new.var("alpha"), image.alpha),
            Eq(new.var("beta_r"), image.beta_re),
            Eq(new.var("beta_i"), image.beta_im),
        ]
    if isinstance(image, PhaseImage):
        return [Eq(new.var("phi"), image.phi), Eq(new.var("theta"), image.theta)]
    raise TypeError(f"unknown image {image!r}")


class Encoder:
    def __init__(self, program: ProgramModel, opts: EncodeOptions):
        self.p = program
        self.opts = opts
        self.table = SymbolTable(
            program.n_qubits, program.n_states, opts.mode, opts.emit_phase_vars
        )
        self.uf = _UnionFind(program.n_qubits)
        self.sec_qubit: list[Constraint] = []
        self.sec_initial: list[Constraint] = []
        self.sec_ops: list[Constraint] = []
        self.sec_params: list[Constraint] = []

    # -- variable creation -------------------------------------------------

    def _new_block(self, state: int, qubit: int, branch: str) -> Block:
        block = Block(state, qubit, branch, self.opts.emit_phase_vars)
        self.table.blocks[(state, qubit, branch)] = block
        self.table.declarations.extend(block.names())
        self.sec_qubit.append(qubit_constraints(block, self.opts))
        return block

    def _new_vector(
        self, state: int, qubits: tuple[int, ...], branch: str, merged: bool = False
    ) -> VectorState:
        vec = _vector_vars(state, qubits, branch, merged)
        self.table.declarations.extend(vec.names())
        self.table.vectors.setdefault((state, branch), []).append(vec)
        if self.opts.mode == "box":
            for amp in vec.amplitudes:
                for part in (amp.re, amp.im):
                    self.sec_qubit.append(
                        And([Ge(part, Const.of(-1)), Le(part, Const.of(1))])
                    )
        return vec

    # -- dispatch analysis --------------------------------------------------

    def _route(self, gate: Gate, ctx: _Ctx) -> str:
        """mapping | guarded | matrix for this gate given operand statuses."""
        operands = list(gate.controls) + list(gate.targets)
        if any(q in ctx.vectors_member for q in operands):
            return "matrix"
        if gate.kind in ("custom", "rx"):
            return "matrix"
        mapping = base_mapping(gate.kind, gate.param)
        if mapping is None:
            return "matrix"
        if any(ctx.status[c] not in _BASIS for c in gate.controls):
            return "matrix"
        if mapping.safe_on == "basis" and any(
            ctx.status[t] not in _BASIS for t in gate.targets
        ):
            return "matrix"
        if mapping.safe_on == "phase":
            # rz rewrites as the equivalent amplitude rotation; rx goes matrix
            return "matrix" if gate.kind == "rx" else "mapping"
        if gate.controls and any(ctx.status[c] == BASIS_ANY for c in gate.controls):
            return "guarded"
        return "mapping"

    # -- main loop ----------------------------------------------------------

    def run(self) -> tuple[Constraint, SymbolTable]:
        p, opts = self.p, self.opts
        contexts = [self._initial_context()]
        self.table.branch_prefix_len = [0] * p.n_states
        prefix = 0
        for op_index, op in enumerate(p.ops):
            state = op_index + 1
            if isinstance(op, Measure):
                prefix += len(op.qubits)
                self.table.branch_prefix_len[state:] = [prefix] * (p.n_states - state)
                contexts = self._emit_measurement(op, op_index, state, contexts)
            else:
                self._prepare_route(op, contexts[0])
                for ctx in contexts:
                    self._emit_gate(self._current_gate, state, ctx)
        if p.n_states - 1 in opts.materialize_states and p.n_states > 1:
            for ctx in contexts:
                self._materialize(p.n_states - 1, ctx)
        constraint = conjoin(
            self.sec_params + self.sec_qubit + self.sec_initial + self.sec_ops
        )
        return constraint, self.table

    def _initial_context(self) -> _Ctx:
        p, opts = self.p, self.opts
        for param in p.params:
            self.table.declarations.append(param.name)
            if param.low is not None:
                self.sec_params.append(Ge(Var(param.name), Const.of(Fraction(param.low))))
            if param.high is not None:
                bound = Const.of(Fraction(param.high))
                self.sec_params.append(
                    Lt(Var(param.name), bound) if param.high_strict else Le(Var(param.name), bound)
                )
        status: dict[int, str] = {}
        blocks: dict[int, Block] = {}
        vectors: dict[int, VectorState] = {}
        for qubit in range(p.n_qubits):
            blocks[qubit] = self._new_block(0, qubit, "")
        handled_joint: set[int] = set()
        for qubit, val in enumerate(p.init):
            block = blocks[qubit]
            if isinstance(val, FullHilbert):
                status[qubit] = GENERAL
            elif isinstance(val, BasisSet):
                if val.bits == (0,):
                    status[qubit] = BASIS0
                    self.sec_initial.append(And(_basis_pin(block, 0)))
                elif val.bits == (1,):
                    status[qubit] = BASIS1
                    self.sec_initial.append(And(_basis_pin(block, 1)))
                else:
                    status[qubit] = BASIS_ANY
                    self.sec_initial.append(
                        Or([And(_basis_pin(block, 0)), And(_basis_pin(block, 1))])
                    )
            elif isinstance(val, ConcreteState):
                bit = _concrete_basis_bit(val)
                status[qubit] = {0: BASIS0, 1: BASIS1}.get(bit, GENERAL)
                self.sec_initial.append(
                    And(
                        [
                            Eq(block.var("alpha"), _float_const(val.alpha)),
                            Eq(block.var("beta_r"), _float_const(val.beta_re)),
                            Eq(block.var("beta_i"), _float_const(val.beta_im)),
                        ]
                    )
                )
            elif isinstance(val, JointState):
                status[qubit] = GENERAL
                if val.qubits[0] in handled_joint:
                    continue
                handled_joint.add(val.qubits[0])
                for member in val.qubits[1:]:
                    self.uf.union(val.qubits[0], member)
                vec = self._new_vector(0, val.qubits, "")
                pins = []
                for k, amp in enumerate(val.amplitudes):
                    pins.append(Eq(vec.amplitudes[k].re, _amp_const(amp[0])))
                    pins.append(Eq(vec.amplitudes[k].im, _amp_const(amp[1])))
                self.sec_initial.append(And(pins))
                vectors[val.qubits[0]] = vec
        ctx = _Ctx("", status, blocks, vectors)
        ctx.vectors_member = self._vector_members(ctx)
        if 0 in opts.materialize_states:
            self._materialize(0, ctx)
        return ctx

    def _vector_members(self, ctx: _Ctx) -> set[int]:
        out: set[int] = set()
        for vec in ctx.vectors.values():
            out |= set(vec.qubits)
        return out

    def _normalize_gate(self, gate: Gate, ctx: _Ctx) -> Gate:
        """Phase kickback: a controlled phase whose target is pinned to a
        basis state acts on the control instead (c-P is symmetric)."""
        while (
            gate.kind in ("p", "rk", "z")
            and gate.controls
            and len(gate.targets) == 1
            and gate.targets[0] not in ctx.vectors_member
            and ctx.status[gate.targets[0]] in (BASIS0, BASIS1)
        ):
            target = gate.targets[0]
            if ctx.status[target] == BASIS0:
                return Gate("i", (target,))
            param = gate.param if gate.kind != "z" else PI
            kind = gate.kind if gate.kind != "z" else "p"
            gate = Gate(kind, (gate.controls[-1],), gate.controls[:-1], param)
        return gate

    def _prepare_route(self, gate: Gate, ctx: _Ctx) -> None:
        # routes and partition merges are branch-independent; compute once
        ctx.vectors_member = self._vector_members(ctx)
        gate = self._normalize_gate(gate, ctx)
        self._current_gate = gate
        self._current_route = self._route(gate, ctx)

    # -- gate emission ------------------------------------------------------

    def _emit_gate(self, gate: Gate, state: int, ctx: _Ctx) -> None:
        route = self._current_route
        touched = set(gate.targets) | set(gate.controls)
        new_blocks = {
            qubit: self._new_block(state, qubit, ctx.label) for qubit in range(self.p.n_qubits)
        }
        rows: list[Constraint] = []
        if route in ("mapping", "guarded"):
            fire = True
            if gate.controls and route == "mapping":
                fire = all(ctx.status[c] == BASIS1 for c in gate.controls)
            rows.extend(self._mapping_rows(gate, ctx, new_blocks, route))
            new_vectors = {}
            for low, vec in ctx.vectors.items():
                new_vec = self._new_vector(state, vec.qubits, ctx.label)
                rows.extend(_vector_copy(new_vec, vec))
                new_vectors[low] = new_vec
            self._advance_status(gate, ctx, route, fire)
        else:
            rows.extend(self._matrix_rows(gate, state, ctx, new_blocks))
            new_vectors = ctx.vectors  # updated in place by _matrix_rows
            for qubit in touched:
                ctx.status[qubit] = GENERAL
        # untouched qubits copy their blocks forward (for vector-group
        # members the copy chains a dangling block, mirroring the paper's
        # identity rows; the group state itself is carried by the vector)
        for qubit in range(self.p.n_qubits):
            if qubit in touched:
                continue
            rows.append(conjoin(_copy_rows(new_blocks[qubit], ctx.blocks[qubit])))
        self.sec_ops.append(conjoin(rows))
        ctx.blocks = new_blocks
        if route in ("mapping", "guarded"):
            ctx.vectors = new_vectors
        ctx.vectors_member = self._vector_members(ctx)

    def _mapping_rows(self, gate: Gate, ctx: _Ctx, new_blocks, route: str) -> list[Constraint]:
        mapping = base_mapping(gate.kind, gate.param)
        if gate.kind == "rz":
            from .gates import _phase_rotation_image

            images = _phase_rotation_image(gate.param)
        elif gate.kind == "rx":  # pragma: no cover - routed to matrix
            raise EntangledOperand("rx has no amplitude-safe block rewrite")
        else:
            images = mapping.image
        targets = gate.targets
        rows: list[Constraint] = []
        # controls always carry forward unchanged
        for control in gate.controls:
            rows.extend(_copy_rows(new_blocks[control], ctx.blocks[control]))
        target_views = tuple(ctx.blocks[t].view() for t in targets)
        canonical_identity = gate.kind in ("z", "p", "rk", "rz") and all(
            ctx.status[t] in _BASIS for t in targets
        )
        if canonical_identity:
            fire_rows = [
                row for t in targets for row in _copy_rows(new_blocks[t], ctx.blocks[t])
            ]
        else:
            fire_rows = []
            for t, image in zip(targets, images(*target_views)):
                fire_rows.extend(_image_rows(new_blocks[t], image))
        if not gate.controls:
            return rows + fire_rows
        known = [ctx.status[c] for c in gate.controls]
        if route == "mapping":  # all controls basis-known
            fire = all(s == BASIS1 for s in known)
            if fire:
                rows.extend(fire_rows)
            else:
                for t in targets:
                    rows.extend(_copy_rows(new_blocks[t], ctx.blocks[t]))
            return rows
        # guarded: case split on the control basis values
        identity_rows = [
            row for t in targets for row in _copy_rows(new_blocks[t], ctx.blocks[t])
        ]
        any_zero = Or(
            [And(_basis_pin(ctx.blocks[c], 0)) for c in gate.controls if ctx.status[c] != BASIS1]
        )
        all_one = [
            pin
            for c in gate.controls
            if ctx.status[c] != BASIS1
            for pin in _basis_pin(ctx.blocks[c], 1)
        ]
        rows.append(
            Or(
                [
                    And([any_zero] + identity_rows),
                    And(all_one + fire_rows),
                ]
            )
        )
        return rows

    def _advance_status(self, gate: Gate, ctx: _Ctx, route: str, fire: bool) -> None:
        if gate.kind == "swap":
            a, b = gate.targets
            ctx.status[a], ctx.status[b] = ctx.status[b], ctx.status[a]
            return
        if route == "mapping" and not fire:
            return  # known-off controls: identity
        for t in gate.targets:
            s = ctx.status[t]
            if gate.kind == "x":
                new = {BASIS0: BASIS1, BASIS1: BASIS0}.get(s, s)
            elif gate.kind == "h":
                new = GENERAL
            elif gate.kind in ("z", "p", "rk", "rz"):
                new = s if s in _BASIS else GENERAL
            else:  # identity
                new = s
            if route == "guarded":
                # outcome depends on control values; x keeps basis states basis
                new = BASIS_ANY if gate.kind == "x" and s in _BASIS else new
            ctx.status[t] = new

    # -- matrix path ----------------------------------------------------------

    def _group_of(self, qubit: int, ctx: _Ctx) -> tuple[int, ...]:
        return self.uf.group(qubit)

    def _materialize(self, state: int, ctx: _Ctx) -> None:
        """Merge everything into one full-register vector at `state`."""
        all_qubits = tuple(range(self.p.n_qubits))
        existing = [v for v in ctx.vectors.values() if v.qubits == all_qubits]
        if existing:
            return
        for qubit in range(1, self.p.n_qubits):
            self.uf.union(0, qubit)
        vec = self._tensor_group(state, all_qubits, ctx)
        ctx.vectors = {0: vec}
        ctx.vectors_member = set(all_qubits)

    def _tensor_group(self, state: int, qubits: tuple[int, ...], ctx: _Ctx) -> VectorState:
        """Combined vector over `qubits` from current blocks/vectors, with
        fresh variables and defining product equalities."""
        factors: list[tuple[tuple[int, ...], list[ComplexTerm]]] = []
        cursor = 0
        ordered = sorted(qubits)
        consumed: set[int] = set()
        for qubit in ordered:
            if qubit in consumed:
                continue
            owner = None
            for low, vec in ctx.vectors.items():
                if qubit in vec.qubits:
                    owner = vec
                    break
            if owner is not None:
                factors.append((owner.qubits, list(owner.amplitudes)))
                consumed |= set(owner.qubits)
            else:
                view = ctx.blocks[qubit].view()
                factors.append(
                    (
                        (qubit,),
                        [
                            ComplexTerm(view.alpha, ZERO),
                            ComplexTerm(view.beta_re, view.beta_im),
                        ],
                    )
                )
                consumed.add(qubit)
        if len(factors) == 1 and factors[0][0][0] in ctx.vectors:
            return ctx.vectors[factors[0][0][0]]
        # qubit order of the product = concatenation of factor orders
        order: list[int] = []
        for qubits_f, _ in factors:
            order.extend(qubits_f)
        product = factors[0][1]
        for _, amps in factors[1:]:
            product = [complex_mul(a, b) for a in product for b in amps]
        # reindex into ascending qubit order
        sorted_order = sorted(order)
        dim = len(product)
        n = len(order)
        reordered: list[ComplexTerm] = [None] * dim
        for idx in range(dim):
            bits = format(idx, f"0{n}b")
            by_qubit = dict(zip(order, bits))
            new_idx = int("".join(by_qubit[q] for q in sorted_order), 2)
            reordered[new_idx] = product[idx]
        vec = self._new_vector(state, tuple(sorted_order), ctx.label, merged=True)
        rows = []
        for k in range(dim):
            rows.append(Eq(vec.amplitudes[k].re, reordered[k].re))
            rows.append(Eq(vec.amplitudes[k].im, reordered[k].im))
        self.sec_ops.append(conjoin(rows))
        for q in sorted_order:
            ctx.vectors.pop(q, None)
        ctx.vectors[sorted_order[0]] = vec
        ctx.vectors_member = self._vector_members(ctx)
        return vec

    def _matrix_rows(self, gate: Gate, state: int, ctx: _Ctx, new_blocks) -> list[Constraint]:
        op_qubits = tuple(gate.controls) + tuple(gate.targets)
        # merge every group touching the op
        merged: set[int] = set()
        for q in op_qubits:
            merged |= set(self._group_of(q, ctx))
            for low, vec in list(ctx.vectors.items()):
                if q in vec.qubits:
                    merged |= set(vec.qubits)
        for q in op_qubits:
            self.uf.union(op_qubits[0], q)
        for q in merged:
            self.uf.union(op_qubits[0], q)
        group = tuple(sorted(merged | set(op_qubits)))
        current = self._tensor_group(state - 1, group, ctx)
        matrix = matrix_for(gate)
        new_vec = self._new_vector(state, group, ctx.label)
        rows = _matrix_apply_rows(matrix, current, new_vec, op_qubits, group)
        # untouched vector groups copy forward
        for low, vec in list(ctx.vectors.items()):
            if vec is current:
                continue
            copy = self._new_vector(state, vec.qubits, ctx.label)
            rows.extend(_vector_copy(copy, vec))
            ctx.vectors[low] = copy
        ctx.vectors[group[0]] = new_vec
        ctx.vectors_member = self._vector_members(ctx)
        return rows

    # -- measurement ----------------------------------------------------------

    def _emit_measurement(self, op: Measure, op_index: int, state: int, contexts):
        out = []
        for ctx in contexts:
            members = self._vector_members(ctx)
            measured_in_vec = [q for q in op.qubits if q in members]
            for outcome in range(2 ** len(op.qubits)):
                bits = format(outcome, f"0{len(op.qubits)}b")
                label = ctx.label + bits
                status = dict(ctx.status)
                new_blocks = {
                    qubit: self._new_block(state, qubit, label)
                    for qubit in range(self.p.n_qubits)
                }
                rows: list[Constraint] = []
                prob_factors: list[RealTerm] = []
                for qubit, bit in zip(op.qubits, bits):
                    rows.extend(_basis_pin(new_blocks[qubit], int(bit)))
                    status[qubit] = BASIS0 if bit == "0" else BASIS1
                    if qubit not in members:
                        view = ctx.blocks[qubit].view()
                        if bit == "0":
                            prob_factors.append(Mul(view.alpha, view.alpha))
                        else:
                            prob_factors.append(
                                Add(
                                    Mul(view.beta_re, view.beta_re),
                                    Mul(view.beta_im, view.beta_im),
                                )
                            )
                new_vectors = {}
                for low, vec in ctx.vectors.items():
                    new_vec = self._new_vector(state, vec.qubits, label)
                    positions = {q: i for i, q in enumerate(vec.qubits)}
                    inside = [q for q in op.qubits if q in vec.qubits]
                    if inside:
                        prob_terms: list[RealTerm] = []
                        for k, amp in enumerate(vec.amplitudes):
                            kbits = format(k, f"0{len(vec.qubits)}b")
                            match = all(
                                kbits[positions[q]] == bits[op.qubits.index(q)]
                                for q in inside
                            )
                            if match:
                                rows.append(Eq(new_vec.amplitudes[k].re, amp.re))
                                rows.append(Eq(new_vec.amplitudes[k].im, amp.im))
                                prob_terms.append(Add(Mul(amp.re, amp.re), Mul(amp.im, amp.im)))
                            else:
                                rows.append(Eq(new_vec.amplitudes[k].re, ZERO))
                                rows.append(Eq(new_vec.amplitudes[k].im, ZERO))
                        total = prob_terms[0]
                        for extra in prob_terms[1:]:
                            total = Add(total, extra)
                        prob_factors.append(total)
                    else:
                        rows.extend(_vector_copy(new_vec, vec))
                    new_vectors[low] = new_vec
                for qubit in range(self.p.n_qubits):
                    if qubit in op.qubits:
                        continue
                    rows.append(conjoin(_copy_rows(new_blocks[qubit], ctx.blocks[qubit])))
                self.sec_ops.append(conjoin(rows))
                if prob_factors:
                    prob = prob_factors[0]
                    for factor in prob_factors[1:]:
                        prob = Mul(prob, factor)
                    self.table.prob_terms[(label, op_index)] = fold_constants(prob)
                out.append(
                    _Ctx(label, status, new_blocks, new_vectors)
                )
                out[-1].vectors_member = self._vector_members(out[-1])
        return out


def _vector_copy(new: VectorState, old: VectorState) -> list[Constraint]:
    rows = []
    for a, b in zip(new.amplitudes, old.amplitudes):
        rows.append(Eq(a.re, b.re))
        rows.append(Eq(a.im, b.im))
    return rows


def _matrix_apply_rows(matrix, current: VectorState, new: VectorState, op_qubits, group) -> list[Constraint]:
    """new = (matrix embedded on op_qubits within group) * current."""
    n = len(group)
    position = {q: i for i, q in enumerate(group)}
    op_positions = [position[q] for q in op_qubits]
    k = len(op_qubits)
    rows: list[Constraint] = []
    for idx in range(2**n):
        bits = list(format(idx, f"0{n}b"))
        row_code = int("".join(bits[p] for p in op_positions), 2)
        total_re: RealTerm | None = None
        total_im: RealTerm | None = None
        for col_code in range(2**k):
            entry = matrix.entries[row_code][col_code]
            source_bits = list(bits)
            col_bits = format(col_code, f"0{k}b")
            for p, b in zip(op_positions, col_bits):
                source_bits[p] = b
            source = current.amplitudes[int("".join(source_bits), 2)]
            term = complex_mul(entry, source)
            if isinstance(term.re, Const) and term.re.value.is_zero() and isinstance(
                term.im, Const
            ) and term.im.value.is_zero():
                continue
            total_re = term.re if total_re is None else fold_constants(Add(total_re, term.re))
            total_im = term.im if total_im is None else fold_constants(Add(total_im, term.im))
        rows.append(Eq(new.amplitudes[idx].re, total_re if total_re is not None else ZERO))
        rows.append(Eq(new.amplitudes[idx].im, total_im if total_im is not None else ZERO))
    return rows


def _concrete_basis_bit(val: ConcreteState) -> int:
    if abs(val.alpha - 1) < 1e-12 and abs(val.beta_re) < 1e-12 and abs(val.beta_im) < 1e-12:
        return 0
    if abs(val.alpha) < 1e-12 and abs(val.beta_re - 1) < 1e-12 and abs(val.beta_im) < 1e-12:
        return 1
    return -1


def _float_const(x: float) -> Const:
    return Const.of(Fraction(x))


def _amp_const(x) -> Const:
    if isinstance(x, Exact):
        return Const(x)
    return Const.of(Fraction(float(x)))


def encode(program: ProgramModel, opts: EncodeOptions | None = None) -> tuple[Constraint, SymbolTable]:
    """Full constraint conjunction plus the symbol table for one program."""
    opts = opts or EncodeOptions()
    return Encoder(program, opts).run()
