"""Benchmark circuit generators, specifications, and mutants.

Each generator returns the circuit, a specification formula over
encoder symbols, optional structural rules, and the verification mode
the benchmark is normally run in.  Specs are built from the program so
fault-injected mutants (which may change the state count) rebuild
their spec against the mutated circuit.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .errors import UnsupportedSize
from .program import (
    BasisSet,
    CCX,
    CX,
    CZ,
    FullHilbert,
    Gate,
    H,
    I,
    JointState,
    MEASURE,
    P,
    Parameter,
    ProgramModel,
    RK,
    SWAP,
    X,
    build_program,
)
from .specs import ForbidJointTouch, aref, ite, qref
from .terms import (
    Add,
    And,
    Const,
    Constraint,
    Cos,
    Div,
    Eq,
    Ge,
    Le,
    Mul,
    PI,
    RealTerm,
    Sin,
    Sub,
    Var,
    conjoin,
)

from .terms import Exact

_INV_RT2 = Const(Exact(Fraction(0), Fraction(1, 2)))  # 1/sqrt(2) exactly


@dataclass
class Benchmark:
    name: str
    program: ProgramModel
    spec: Constraint
    rules: tuple = ()
    mode: str = "exact"
    mutations: tuple[str, ...] = ()
    notes: str = ""


# --- teleportation -----------------------------------------------------------


def _tp_ops(drop: str | None = None) -> list:
    ops = [CX(0, 1), H(0), MEASURE(0, 1), CX(1, 2), CZ(0, 2)]
    if drop == "drop-cz":
        ops.remove(ops[4])
    elif drop == "drop-cx-correction":
        ops.remove(ops[3])
    return ops


def _tp_spec(p: ProgramModel) -> Constraint:
    """Bob's final qubit equals Alice's input on every branch.

    Written on the final state vector: after projecting on outcome x the
    unnormalized amplitudes at |x0> and |x1> are the input pair scaled
    by 1/2 (every teleportation branch has probability 1/4).
    """
    final = p.n_states - 1
    two = Const.of(2)
    parts = []
    for x in ("00", "01", "10", "11"):
        base = int(x, 2) << 1
        parts.append(Eq(Mul(two, aref(final, base, "re", x)), qref(0, 0, "alpha", x)))
        parts.append(Eq(Mul(two, aref(final, base + 1, "re", x)), qref(0, 0, "beta_r", x)))
        parts.append(Eq(Mul(two, aref(final, base + 1, "im", x)), qref(0, 0, "beta_i", x)))
    return And(parts)


def make_tp(mutation: str | None = None) -> Benchmark:
    init = (FullHilbert(), JointState.bell(1, 2), JointState.bell(1, 2))
    program = build_program(3, _tp_ops(mutation), initial_valuations=init)
    rules = (ForbidJointTouch(frozenset({0, 1}), frozenset({2}), before=2),)
    return Benchmark(
        "tp",
        program,
        _tp_spec(program),
        rules=rules,
        mode="exact",
        mutations=("drop-cz", "drop-cx-correction"),
    )


# --- Toffoli -----------------------------------------------------------------


def _bit(qubit: int) -> RealTerm:
    # basis-valued qubits carry their bit in the beta_re component
    return qref(0, qubit, "beta_r")


def _xor(a: RealTerm, b: RealTerm) -> RealTerm:
    return Sub(Add(a, b), Mul(Const.of(2), Mul(a, b)))


def _toffoli_spec(p: ProgramModel) -> Constraint:
    final = p.n_states - 1
    out2 = _xor(_bit(2), Mul(_bit(0), _bit(1)))
    parts = []
    for qubit in (0, 1):
        for role in ("alpha", "beta_r", "beta_i"):
            parts.append(Eq(qref(final, qubit, role), qref(0, qubit, role)))
    parts.append(Eq(qref(final, 2, "beta_r"), out2))
    parts.append(Eq(qref(final, 2, "alpha"), Sub(Const.of(1), out2)))
    parts.append(Eq(qref(final, 2, "beta_i"), Const.of(0)))
    return And(parts)


def make_toffoli(mutation: str | None = None) -> Benchmark:
    op = CCX(0, 1, 2)
    if mutation == "drop-x":
        op = I(2).controlled_by(0, 1)
    program = build_program(3, [op], initial_valuations=tuple(BasisSet() for _ in range(3)))
    return Benchmark(
        "toffoli", program, _toffoli_spec(program), mode="exact", mutations=("drop-x",)
    )


# --- Grover diffusion operator -------------------------------------------------


def _gdo_ops(n: int, mutation: str | None) -> list:
    layer_h = [H(q) for q in range(n)]
    layer_x = [X(q) for q in range(n)]
    core = Gate("z", (0,), tuple(range(1, n)))
    if mutation == "sign-flip":
        core = Gate("i", (0,), tuple(range(1, n)))
    return layer_h + layer_x + [core] + layer_x + layer_h


def _gdo_spec(p: ProgramModel) -> Constraint:
    """Reflection about the mean.  The H,X,cZ,X,H ladder realizes the
    diffusion operator up to a global -1, so every output amplitude is
    the input amplitude reflected: out_k = in_k - 2*mean(in)."""
    n = p.n_qubits
    final = p.n_states - 1
    dim = 2**n
    inv = Const.of(Fraction(1, dim))
    mean_re: RealTerm = aref(0, 0, "re")
    mean_im: RealTerm = aref(0, 0, "im")
    for k in range(1, dim):
        mean_re = Add(mean_re, aref(0, k, "re"))
        mean_im = Add(mean_im, aref(0, k, "im"))
    mean_re = Mul(inv, mean_re)
    mean_im = Mul(inv, mean_im)
    parts = []
    for k in range(dim):
        for part, mean in (("re", mean_re), ("im", mean_im)):
            parts.append(
                Eq(
                    aref(final, k, part),
                    Sub(aref(0, k, part), Mul(Const.of(2), mean)),
                )
            )
    return And(parts)


def make_gdo(n: int, mutation: str | None = None) -> Benchmark:
    if not 2 <= n <= 24:
        raise UnsupportedSize("gdo supports 2..24 qubits")
    program = build_program(n, _gdo_ops(n, mutation))
    return Benchmark(
        f"gdo-{n}", program, _gdo_spec(program), mode="box", mutations=("sign-flip",)
    )


# --- quantum Fourier transform --------------------------------------------------


def _qft_ops(n: int) -> list:
    ops = []
    for i in range(n):
        ops.append(H(i))
        for j in range(i + 1, n):
            ops.append(RK(j - i + 1, i).controlled_by(j))
    return ops


def _qft_spec(p: ProgramModel) -> Constraint:
    """Product form: qubit i ends in (|0> + e^{2 pi i 0.x_i...x_n}|1>)/sqrt 2."""
    n = p.n_qubits
    final = p.n_states - 1
    parts = []
    for i in range(n):
        frac: RealTerm = Mul(Const.of(Fraction(1, 2)), _bit(i))
        for j in range(i + 1, n):
            frac = Add(frac, Mul(Const.of(Fraction(1, 2 ** (j - i + 1))), _bit(j)))
        phase = Mul(Mul(Const.of(2), PI), frac)
        parts.append(Eq(qref(final, i, "alpha"), _INV_RT2))
        parts.append(Eq(qref(final, i, "beta_r"), Mul(_INV_RT2, Cos(phase))))
        parts.append(Eq(qref(final, i, "beta_i"), Mul(_INV_RT2, Sin(phase))))
    return And(parts)


def make_qft(n: int) -> Benchmark:
    if not 2 <= n <= 12:
        raise UnsupportedSize("qft supports 2..12 qubits")
    program = build_program(
        n, _qft_ops(n), initial_valuations=tuple(BasisSet() for _ in range(n))
    )
    return Benchmark(f"qft-{n}", program, _qft_spec(program), mode="exact")


# --- quantum phase estimation ----------------------------------------------------


def _qpe_ops(n: int) -> list:
    theta = Var("theta")
    ops = [H(q) for q in range(n)]
    for j in range(n):
        # controlled powers U^{2^{n-1-j}} of the phase gate U = P(2 pi theta)
        angle = Mul(Const.of(2 ** (n - j)), Mul(PI, theta))
        ops.append(P(angle, n).controlled_by(j))
    for k in range(n // 2):
        ops.append(SWAP(k, n - 1 - k))
    # inverse QFT on the counting register
    inverse = []
    for i in range(n):
        inverse.append(H(i))
        for j in range(i + 1, n):
            angle = Mul(Const.of(Fraction(-2, 2 ** (j - i + 1))), PI)
            inverse.append(P(angle, i).controlled_by(j))
    inverse.reverse()
    return ops + inverse


def _qpe_spec(p: ProgramModel) -> Constraint:
    n = p.n_qubits - 1
    final = p.n_states - 1
    theta = Var("theta")
    threshold = Div(Const.of(4), Mul(PI, PI))
    parts = []
    for a in range(2**n):
        lo = Fraction(2 * a - 1, 2 ** (n + 1))
        hi = Fraction(2 * a + 1, 2 ** (n + 1))
        window = And([Ge(theta, Const.of(lo)), Le(theta, Const.of(hi))])
        index = 2 * a + 1  # eigenqubit pinned to |1>, counting bits above it
        magnitude = Add(
            Mul(aref(final, index, "re"), aref(final, index, "re")),
            Mul(aref(final, index, "im"), aref(final, index, "im")),
        )
        parts.append(ite(window, Ge(magnitude, threshold)))
    return And(parts)


def make_qpe(n: int) -> Benchmark:
    if not 2 <= n <= 5:
        raise UnsupportedSize("qpe supports 2..5 counting qubits")
    init = tuple(BasisSet((0,)) for _ in range(n)) + (BasisSet((1,)),)
    program = build_program(
        n + 1,
        _qpe_ops(n),
        params=(Parameter("theta", 0.0, 1.0, high_strict=True),),
        initial_valuations=init,
    )
    return Benchmark(f"qpe-{n}", program, _qpe_spec(program), mode="exact")


# --- ripple-carry adder -----------------------------------------------------------


def _add_ops(n: int) -> list:
    # registers: a = 0..n-1, b = n..2n-1, carry-out z = 2n, ancilla cin = 2n+1
    a = list(range(n))
    b = list(range(n, 2 * n))
    z = 2 * n
    cin = 2 * n + 1
    carries = [cin] + a[:-1]
    ops = []
    for i in range(n):
        c, bi, ai = carries[i], b[i], a[i]
        ops += [CX(ai, bi), CX(ai, c), CCX(c, bi, ai)]
    ops.append(CX(a[-1], z))
    for i in reversed(range(n)):
        c, bi, ai = carries[i], b[i], a[i]
        ops += [CCX(c, bi, ai), CX(ai, c), CX(c, bi)]
    return ops


def _add_spec(p: ProgramModel) -> Constraint:
    n = (p.n_qubits - 2) // 2
    final = p.n_states - 1
    carry: RealTerm = Const.of(0)
    parts = []
    for i in range(n):
        ai, bi = _bit(i), _bit(n + i)
        ab = Mul(ai, bi)
        axb = _xor(ai, bi)
        total = _xor(axb, carry)
        parts.append(Eq(qref(final, n + i, "beta_r"), total))
        carry = Add(ab, Mul(axb, carry))  # majority(a, b, c) on bits
        for role in ("alpha", "beta_r", "beta_i"):
            parts.append(Eq(qref(final, i, role), qref(0, i, role)))
    parts.append(Eq(qref(final, 2 * n, "beta_r"), carry))
    parts.append(Eq(qref(final, 2 * n + 1, "beta_r"), Const.of(0)))
    return And(parts)


def make_add(n: int) -> Benchmark:
    if n not in (3, 8):
        raise UnsupportedSize("add supports n=3 (enumeration) and n=8")
    init = tuple(BasisSet() for _ in range(2 * n)) + (BasisSet((0,)), BasisSet((0,)))
    program = build_program(2 * n + 2, _add_ops(n), initial_valuations=init)
    return Benchmark(f"add-{n}", program, _add_spec(program), mode="exact")


# --- registry ------------------------------------------------------------------


_SIZED = {"gdo": make_gdo, "qft": make_qft, "qpe": make_qpe, "add": make_add}
_DEFAULT_SIZE = {"gdo": 3, "qft": 3, "qpe": 3, "add": 3}


def generate(name: str, n: int | None = None, mutation: str | None = None) -> Benchmark:
    """Benchmark by name; `n` sizes the parametric families."""
    if name == "tp":
        return make_tp(mutation)
    if name == "toffoli":
        return make_toffoli(mutation)
    if name in _SIZED:
        size = n if n is not None else _DEFAULT_SIZE[name]
        if name == "gdo":
            return make_gdo(size, mutation)
        if mutation:
            raise UnsupportedSize(f"{name} has no mutations")
        return _SIZED[name](size)
    raise UnsupportedSize(f"unknown benchmark {name!r}")


BENCHMARK_NAMES = ("toffoli", "tp", "add", "qft", "qpe", "gdo")
