"""Circuit intermediate representation and the builder API.

A program is a qubit count, an ordered list of state operations (gates
or measurements), optional symbolic gate parameters, and one initial
valuation per qubit.  Building validates indices and parameter binding
and precomputes the measurement branch tree.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence, Union

from .errors import DuplicateTarget, IndexOutOfRange, UnboundParameter
from .terms import Exact, RealTerm, Var, angle, term_variables


@dataclass(frozen=True)
class Gate:
    """One gate application: a named kind on targets, optionally controlled.

    kind is one of: i, x, z, h, rx, rz, p, rk, swap, custom.
    `param` is the rotation angle for rx/rz/p, or the exponent k for rk.
    `matrix` holds the 2^k x 2^k complex entries for kind "custom".
    """

    kind: str
    targets: tuple[int, ...]
    controls: tuple[int, ...] = ()
    param: RealTerm | None = None
    matrix: tuple | None = None

    def controlled_by(self, *controls: int) -> "Gate":
        return Gate(self.kind, self.targets, self.controls + tuple(controls), self.param, self.matrix)

    def arity(self) -> int:
        return len(self.targets) + len(self.controls)

    def __repr__(self):
        ctrl = f" ctrl {list(self.controls)}" if self.controls else ""
        par = f"({self.param})" if self.param is not None else ""
        return f"Gate[{self.kind}{par} {list(self.targets)}{ctrl}]"


@dataclass(frozen=True)
class Measure:
    qubits: tuple[int, ...]

    def __repr__(self):
        return f"Measure{list(self.qubits)}"


StateOp = Union[Gate, Measure]


def I(target: int) -> Gate:
    return Gate("i", (target,))


def X(target: int) -> Gate:
    return Gate("x", (target,))


def Z(target: int) -> Gate:
    return Gate("z", (target,))


def H(target: int) -> Gate:
    return Gate("h", (target,))


def RX(theta: RealTerm, target: int) -> Gate:
    return Gate("rx", (target,), param=theta)


def RZ(phi: RealTerm, target: int) -> Gate:
    return Gate("rz", (target,), param=phi)


def P(phi: RealTerm, target: int) -> Gate:
    """Phase gate diag(1, e^{i*phi})."""
    return Gate("p", (target,), param=phi)


def RK(k: int, target: int) -> Gate:
    """Phase-shift gate diag(1, e^{2*pi*i / 2^k})."""
    return Gate("rk", (target,), param=angle(Fraction(2, 2**k)))


def SWAP(a: int, b: int) -> Gate:
    return Gate("swap", (a, b))


def CX(control: int, target: int) -> Gate:
    return X(target).controlled_by(control)


def CZ(control: int, target: int) -> Gate:
    return Z(target).controlled_by(control)


def CCX(c1: int, c2: int, target: int) -> Gate:
    return X(target).controlled_by(c1, c2)


def CustomGate(matrix, *targets: int) -> Gate:
    return Gate("custom", tuple(targets), matrix=tuple(tuple(row) for row in matrix))


def MEASURE(*qubits: int) -> Measure:
    return Measure(tuple(qubits))


# --- initial valuations ----------------------------------------------------


@dataclass(frozen=True)
class FullHilbert:
    """No assertion; the qubit ranges over the whole state space."""


@dataclass(frozen=True)
class BasisSet:
    """The qubit is one of the listed computational basis states."""

    bits: tuple[int, ...] = (0, 1)


@dataclass(frozen=True)
class ConcreteState:
    """The qubit is pinned to (alpha, beta_re + i*beta_im)."""

    alpha: float
    beta_re: float
    beta_im: float = 0.0


@dataclass(frozen=True)
class JointState:
    """A contiguous qubit group pinned to a 2^k amplitude vector.

    Amplitudes are (re, im) pairs; entries may be Exact for lossless
    constants (e.g. 1/sqrt(2)) or floats.
    """

    qubits: tuple[int, ...]
    amplitudes: tuple

    @staticmethod
    def bell(q0: int, q1: int) -> "JointState":
        h = Exact.sqrt2() * Exact(Fraction(1, 2))
        zero = Exact()
        return JointState((q0, q1), ((h, zero), (zero, zero), (zero, zero), (h, zero)))


InitialValuation = Union[FullHilbert, BasisSet, ConcreteState, JointState]


@dataclass(frozen=True)
class Parameter:
    name: str
    low: float | None = None
    high: float | None = None
    high_strict: bool = False


# --- program model ---------------------------------------------------------


@dataclass(frozen=True)
class ProgramModel:
    n_qubits: int
    ops: tuple[StateOp, ...]
    params: tuple[Parameter, ...] = ()
    init: tuple[InitialValuation, ...] = ()

    @property
    def n_states(self) -> int:
        return len(self.ops) + 1

    def measured_qubits(self) -> list[int]:
        """Measured qubit indices in program order."""
        out: list[int] = []
        for op in self.ops:
            if isinstance(op, Measure):
                out.extend(op.qubits)
        return out

    def measure_op_indices(self) -> list[int]:
        return [i for i, op in enumerate(self.ops) if isinstance(op, Measure)]


def touched_qubits(op: StateOp) -> set[int]:
    """Targets, controls, and measured indices of one state operation."""
    if isinstance(op, Measure):
        return set(op.qubits)
    return set(op.targets) | set(op.controls)


def branch_labels(p: ProgramModel) -> list[str]:
    """All measurement-outcome bit strings, lexicographic; [''] if none."""
    k = len(p.measured_qubits())
    if k == 0:
        return [""]
    return [format(i, f"0{k}b") for i in range(2**k)]


_KNOWN_KINDS = {"i", "x", "z", "h", "rx", "rz", "p", "rk", "swap", "custom"}


def build_program(
    n_qubits: int,
    ops: Iterable[StateOp],
    params: Sequence[Parameter] = (),
    initial_valuations: Sequence[InitialValuation] | None = None,
) -> ProgramModel:
    """Validate and freeze a program model.

    Raises IndexOutOfRange, DuplicateTarget, or UnboundParameter on the
    documented error cases.
    """
    if n_qubits <= 0:
        raise IndexOutOfRange("programs need at least one qubit")
    op_list = tuple(ops)
    declared = {p.name for p in params}
    for op in op_list:
        if isinstance(op, Measure):
            if not op.qubits:
                raise DuplicateTarget("measurement of zero qubits")
            if len(set(op.qubits)) != len(op.qubits):
                raise DuplicateTarget(f"duplicate qubit in {op!r}")
            _check_range(op.qubits, n_qubits, op)
            continue
        if op.kind not in _KNOWN_KINDS:
            raise IndexOutOfRange(f"unknown gate kind {op.kind!r}")
        all_indices = op.targets + op.controls
        if len(set(all_indices)) != len(all_indices):
            raise DuplicateTarget(f"control/target overlap in {op!r}")
        _check_range(all_indices, n_qubits, op)
        if op.kind == "custom":
            dim = 2 ** len(op.targets)
            if op.matrix is None or len(op.matrix) != dim or any(len(r) != dim for r in op.matrix):
                raise IndexOutOfRange(f"custom matrix must be {dim}x{dim} in {op!r}")
        if op.param is not None and isinstance(op.param, RealTerm):
            for name in term_variables(op.param):
                if name not in declared:
                    raise UnboundParameter(f"parameter {name!r} not declared")
    init = tuple(initial_valuations) if initial_valuations is not None else None
    if init is None:
        init = tuple(FullHilbert() for _ in range(n_qubits))
    if len(init) != n_qubits:
        raise IndexOutOfRange(f"expected {n_qubits} initial valuations, got {len(init)}")
    seen_joint: set[int] = set()
    for qubit, val in enumerate(init):
        if isinstance(val, JointState):
            if qubit not in val.qubits:
                raise IndexOutOfRange(f"joint state at qubit {qubit} does not include it")
            if qubit != val.qubits[0]:
                continue  # validated once, at the first member
            if list(val.qubits) != list(range(val.qubits[0], val.qubits[-1] + 1)):
                raise IndexOutOfRange(f"joint state qubits {val.qubits} not contiguous")
            if len(val.amplitudes) != 2 ** len(val.qubits):
                raise IndexOutOfRange("joint state amplitude count mismatch")
            _check_range(val.qubits, n_qubits, val)
            for member in val.qubits:
                if member in seen_joint:
                    raise DuplicateTarget(f"qubit {member} in two joint states")
                seen_joint.add(member)
                if not isinstance(init[member], JointState) or init[member] != val:
                    raise IndexOutOfRange("joint state must be listed at each member qubit")
    return ProgramModel(n_qubits, op_list, tuple(params), init)


def _check_range(indices: Iterable[int], n_qubits: int, context) -> None:
    for q in indices:
        if not 0 <= q < n_qubits:
            raise IndexOutOfRange(f"qubit {q} out of range in {context!r}")


def flatten_layer(gates: Sequence[Gate]) -> list[Gate]:
    """One gate per qubit in fixed order; used for per-qubit layers like H(Q)."""
    return sorted(gates, key=lambda g: g.targets[0])
