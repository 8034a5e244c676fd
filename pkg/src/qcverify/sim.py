"""Concrete dense state-vector simulation.

This is the brute-force oracle the rest of the package is checked
against: it applies every operation numerically with its own gate
tables, independent of the symbolic catalog and encoder.  Qubit 0 is
the most significant index bit of the amplitude vector.

Not built for speed; the practical ceiling is ~20 qubits dense.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ZeroProbabilityBranch
from .program import (
    BasisSet,
    ConcreteState,
    FullHilbert,
    Gate,
    JointState,
    Measure,
    ProgramModel,
)
from .terms import evaluate

_NORM_TOL = 1e-9


@dataclass
class DenseState:
    n_qubits: int
    amplitudes: np.ndarray

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))


def _gate_unitary(gate: Gate, env: dict[str, float]) -> np.ndarray:
    """Numeric unitary over (controls..., targets...) in that qubit order."""
    kind = gate.kind
    if kind == "custom":
        dim = len(gate.matrix)
        base = np.zeros((dim, dim), dtype=complex)
        for i in range(dim):
            for j in range(dim):
                entry = gate.matrix[i][j]
                base[i, j] = evaluate(entry.re, env) + 1j * evaluate(entry.im, env)
    elif kind == "swap":
        base = np.eye(4, dtype=complex)[[0, 2, 1, 3]]
    else:
        lam = evaluate(gate.param, env) if gate.param is not None else None
        if kind == "i":
            base = np.eye(2, dtype=complex)
        elif kind == "x":
            base = np.array([[0, 1], [1, 0]], dtype=complex)
        elif kind == "z":
            base = np.array([[1, 0], [0, -1]], dtype=complex)
        elif kind == "h":
            base = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2.0)
        elif kind in ("p", "rk"):
            base = np.array([[1, 0], [0, np.exp(1j * lam)]], dtype=complex)
        elif kind == "rz":
            base = np.array(
                [[np.exp(-0.5j * lam), 0], [0, np.exp(0.5j * lam)]], dtype=complex
            )
        elif kind == "rx":
            c, s = math.cos(lam / 2), math.sin(lam / 2)
            base = np.array([[c, -1j * s], [-1j * s, c]], dtype=complex)
        else:
            raise ValueError(f"unknown gate kind {kind!r}")
    if not gate.controls:
        return base
    n_ctrl = len(gate.controls)
    dim = (2**n_ctrl) * base.shape[0]
    full = np.eye(dim, dtype=complex)
    full[dim - base.shape[0] :, dim - base.shape[0] :] = base
    return full


def apply_unitary(state: np.ndarray, n: int, unitary: np.ndarray, qubits: list[int]) -> np.ndarray:
    k = len(qubits)
    op = unitary.reshape([2] * (2 * k))
    tensor = np.tensordot(op, state.reshape([2] * n), axes=(list(range(k, 2 * k)), qubits))
    tensor = np.moveaxis(tensor, list(range(k)), qubits)
    return tensor.reshape(-1)


def apply_gate(state: np.ndarray, n: int, gate: Gate, env: dict[str, float]) -> np.ndarray:
    order = list(gate.controls) + list(gate.targets)
    return apply_unitary(state, n, _gate_unitary(gate, env), order)


def _measure_project(state: np.ndarray, n: int, qubits: tuple[int, ...], bits: str):
    """Project onto the outcome bits; return (renormalized state, probability)."""
    tensor = state.reshape([2] * n).copy()
    for qubit, bit in zip(qubits, bits):
        index = [slice(None)] * n
        index[qubit] = 1 - int(bit)
        tensor[tuple(index)] = 0.0
    flat = tensor.reshape(-1)
    prob = float(np.vdot(flat, flat).real)
    return flat, prob


def initial_state_vector(
    p: ProgramModel, free_states: dict[int, tuple[complex, complex]] | None = None
) -> np.ndarray:
    """Tensor together the initial valuations; `free_states` supplies
    concrete (alpha, beta) pairs for FullHilbert / BasisSet qubits."""
    free_states = free_states or {}
    factors: list[np.ndarray] = []
    qubit = 0
    while qubit < p.n_qubits:
        val = p.init[qubit]
        if isinstance(val, JointState):
            vec = np.array(
                [_amp_to_complex(a) for a in val.amplitudes], dtype=complex
            )
            factors.append(vec)
            qubit = val.qubits[-1] + 1
            continue
        if isinstance(val, ConcreteState):
            vec = np.array([val.alpha, val.beta_re + 1j * val.beta_im], dtype=complex)
        else:
            if qubit not in free_states:
                raise ValueError(f"qubit {qubit} needs a concrete input state")
            alpha, beta = free_states[qubit]
            if isinstance(val, BasisSet):
                bit = _basis_bit(alpha, beta)
                if bit not in val.bits:
                    raise ValueError(f"qubit {qubit} input outside its basis set")
            vec = np.array([alpha, beta], dtype=complex)
        factors.append(vec)
        qubit += 1
    state = factors[0]
    for factor in factors[1:]:
        state = np.kron(state, factor)
    norm = np.linalg.norm(state)
    if abs(norm - 1.0) > 1e-6:
        raise ValueError(f"initial state norm {norm} is not 1")
    return state / norm


def _amp_to_complex(pair) -> complex:
    re, im = pair
    re = re.to_float() if hasattr(re, "to_float") else float(re)
    im = im.to_float() if hasattr(im, "to_float") else float(im)
    return re + 1j * im


def _basis_bit(alpha: complex, beta: complex) -> int:
    if abs(alpha - 1) < 1e-9 and abs(beta) < 1e-9:
        return 0
    if abs(beta - 1) < 1e-9 and abs(alpha) < 1e-9:
        return 1
    return -1


@dataclass
class Trace:
    """Per-state vectors along one measurement branch.

    `states` are renormalized; `accum_probs[s]` is the product of the
    branch-measurement probabilities up to state s, so the unnormalized
    (projection-semantics) vector at state s is states[s]*sqrt(accum_probs[s]).
    """

    branch: str
    states: list[np.ndarray]
    probability: float
    accum_probs: list[float]


def run_concrete(
    p: ProgramModel,
    input_state: np.ndarray,
    branch_choice: str = "",
    params: dict[str, float] | None = None,
) -> tuple[DenseState, float]:
    """Run the program down one measurement branch.

    Raises ZeroProbabilityBranch when the chosen branch has probability
    below 1e-12 (its post-measurement state is undefined).
    """
    trace = run_trace(p, input_state, branch_choice, params)
    return DenseState(p.n_qubits, trace.states[-1]), trace.probability


def run_trace(
    p: ProgramModel,
    input_state: np.ndarray,
    branch_choice: str = "",
    params: dict[str, float] | None = None,
) -> Trace:
    env = params or {}
    n = p.n_qubits
    total_measured = len(p.measured_qubits())
    if len(branch_choice) != total_measured:
        raise ValueError(
            f"branch choice {branch_choice!r} must cover {total_measured} measured qubits"
        )
    state = np.asarray(input_state, dtype=complex)
    if abs(np.linalg.norm(state) - 1.0) > 1e-6:
        raise ValueError("input state is not normalized")
    states = [state.copy()]
    probability = 1.0
    accum = [1.0]
    cursor = 0
    for op in p.ops:
        if isinstance(op, Measure):
            bits = branch_choice[cursor : cursor + len(op.qubits)]
            cursor += len(op.qubits)
            state, prob = _measure_project(state, n, op.qubits, bits)
            probability *= prob
            if prob < 1e-12:
                raise ZeroProbabilityBranch(
                    f"branch {branch_choice!r} has probability {prob}"
                )
            state = state / math.sqrt(prob)
        else:
            state = apply_gate(state, n, op, env)
        if abs(np.linalg.norm(state) - 1.0) > _NORM_TOL:
            raise AssertionError("simulator norm drift exceeded tolerance")
        states.append(state.copy())
        accum.append(probability)
    return Trace(branch_choice, states, probability, accum)


def qubit_factor(state: np.ndarray, n: int, qubit: int, tol: float = 1e-7) -> np.ndarray:
    """Extract the qubit's single-qubit factor from a product state.

    The factor is phase-normalized so its first component is real and
    nonnegative.  Raises ValueError when the qubit is entangled with the
    rest beyond `tol`.
    """
    tensor = np.moveaxis(state.reshape([2] * n), qubit, 0).reshape(2, -1)
    u, s, _vh = np.linalg.svd(tensor, full_matrices=False)
    if s.size > 1 and s[1] > tol:
        raise ValueError(f"qubit {qubit} is entangled (second singular value {s[1]:.3g})")
    factor = u[:, 0]
    phase = _normalizing_phase(factor)
    return factor * phase


def _normalizing_phase(vec: np.ndarray) -> complex:
    anchor = vec[0] if abs(vec[0]) > 1e-12 else vec[1]
    return abs(anchor) / anchor


def branch_probabilities(
    p: ProgramModel, input_state: np.ndarray, params: dict[str, float] | None = None
) -> dict[str, float]:
    from .program import branch_labels

    out = {}
    for label in branch_labels(p):
        try:
            _, prob = run_concrete(p, input_state, label, params)
            out[label] = prob
        except ZeroProbabilityBranch:
            out[label] = 0.0
    return out


def enumerate_verify(
    p: ProgramModel,
    formula,
    input_space,
    params: dict[str, float] | None = None,
    tol: float = 1e-7,
):
    """Run every input through every branch and evaluate the spec numerically.

    `formula` is a SpecFormula; `input_space` yields free-qubit input
    dictionaries (see initial_state_vector).  Returns (True, None) or
    (False, first failing (inputs, branch)).
    """
    from .program import branch_labels
    from .specs import evaluate_spec_multi

    for free in input_space:
        vec = initial_state_vector(p, free)
        traces = {}
        for label in branch_labels(p):
            try:
                traces[label] = run_trace(p, vec, label, params)
            except ZeroProbabilityBranch:
                traces[label] = None
        if not evaluate_spec_multi(formula, p, traces, params or {}, tol=tol):
            return False, free
    return True, None


def basis_input_space(p: ProgramModel):
    """All basis assignments for the free (non-pinned) qubits."""
    free: list[tuple[int, tuple[int, ...]]] = []
    for qubit, val in enumerate(p.init):
        if isinstance(val, BasisSet):
            free.append((qubit, val.bits))
        elif isinstance(val, FullHilbert):
            free.append((qubit, (0, 1)))
    if not free:
        return [dict()]
    spaces = []

    def expand(prefix: dict, rest: list):
        if not rest:
            spaces.append(dict(prefix))
            return
        qubit, bits = rest[0]
        for bit in bits:
            prefix[qubit] = (1.0 + 0j, 0j) if bit == 0 else (0j, 1.0 + 0j)
            expand(prefix, rest[1:])
        prefix.pop(qubit, None)

    expand({}, free)
    return spaces
