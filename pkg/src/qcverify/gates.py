"""Gate catalog: block-level direct mappings and complex matrices.

Every catalog gate has a matrix form; most also have a direct mapping
that rewrites a qubit block (alpha, beta_re, beta_im, phi, theta)
without building any state vector.  `safe_on` records the operand
domain where the block rewrite agrees with the matrix action (the
Hadamard and X rewrites are exact only on basis-valued blocks because
the block keeps alpha real; phase rotations are exact everywhere).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

from .errors import UnsupportedGate
from .program import Gate
from .terms import (
    Add,
    ComplexTerm,
    Const,
    Cos,
    Div,
    Exact,
    Mul,
    Neg,
    RealTerm,
    Sin,
    Sub,
    ZERO,
    fold_constants,
)

SQRT2_CONST = Const(Exact.sqrt2())


@dataclass(frozen=True)
class BlockView:
    """Read-only view of one qubit block's five components."""

    alpha: RealTerm
    beta_re: RealTerm
    beta_im: RealTerm
    phi: RealTerm | None = None
    theta: RealTerm | None = None


@dataclass(frozen=True)
class AmplitudeImage:
    """New block defined through its amplitude components."""

    alpha: RealTerm
    beta_re: RealTerm
    beta_im: RealTerm


@dataclass(frozen=True)
class PhaseImage:
    """New block defined through its Bloch angles."""

    phi: RealTerm
    theta: RealTerm


BlockImage = AmplitudeImage | PhaseImage


@dataclass(frozen=True)
class DirectMapping:
    """Bijective block rewrite for one gate (no controls)."""

    name: str
    arity: int
    image: Callable[..., tuple[BlockImage, ...]]
    safe_on: str  # "any" | "basis"
    basis_control_only: bool = False


@dataclass(frozen=True)
class GuardedMapping:
    """A base mapping fired only when all control qubits are basis states."""

    base: DirectMapping
    n_controls: int
    basis_control_only: bool = True

    @property
    def name(self) -> str:
        return f"c{self.n_controls}-{self.base.name}"


def _identity_image(block: BlockView) -> tuple[BlockImage, ...]:
    return (AmplitudeImage(block.alpha, block.beta_re, block.beta_im),)


def _x_image(block: BlockView) -> tuple[BlockImage, ...]:
    return (AmplitudeImage(block.beta_re, block.alpha, block.beta_im),)


def _z_image(block: BlockView) -> tuple[BlockImage, ...]:
    return (
        AmplitudeImage(
            block.alpha,
            fold_constants(Neg(block.beta_re)),
            fold_constants(Neg(block.beta_im)),
        ),
    )


def _h_image(block: BlockView) -> tuple[BlockImage, ...]:
    return (
        AmplitudeImage(
            fold_constants(Div(Add(block.alpha, block.beta_re), SQRT2_CONST)),
            fold_constants(Div(Sub(block.alpha, block.beta_re), SQRT2_CONST)),
            block.beta_im,
        ),
    )


def _swap_image(a: BlockView, b: BlockView) -> tuple[BlockImage, ...]:
    return (
        AmplitudeImage(b.alpha, b.beta_re, b.beta_im),
        AmplitudeImage(a.alpha, a.beta_re, a.beta_im),
    )


def _phase_rotation_image(lam: RealTerm):
    """beta multiplied by e^{i*lam}; alpha untouched (diag(1, e^{i*lam}))."""

    cos_l = fold_constants(Cos(lam))
    sin_l = fold_constants(Sin(lam))

    def image(block: BlockView) -> tuple[BlockImage, ...]:
        new_re = Sub(Mul(cos_l, block.beta_re), Mul(sin_l, block.beta_im))
        new_im = Add(Mul(sin_l, block.beta_re), Mul(cos_l, block.beta_im))
        return (
            AmplitudeImage(block.alpha, fold_constants(new_re), fold_constants(new_im)),
        )

    return image


def _rx_phase_image(theta_shift: RealTerm):
    def image(block: BlockView) -> tuple[BlockImage, ...]:
        return (PhaseImage(block.phi, fold_constants(Add(block.theta, theta_shift))),)

    return image


def _rz_phase_image(phi_shift: RealTerm):
    def image(block: BlockView) -> tuple[BlockImage, ...]:
        return (PhaseImage(fold_constants(Add(block.phi, phi_shift)), block.theta),)

    return image


def base_mapping(kind: str, param: RealTerm | None) -> DirectMapping | None:
    if kind == "i":
        return DirectMapping("i", 1, _identity_image, "any")
    if kind == "x":
        return DirectMapping("x", 1, _x_image, "basis")
    if kind == "z":
        return DirectMapping("z", 1, _z_image, "any")
    if kind == "h":
        return DirectMapping("h", 1, _h_image, "basis")
    if kind == "swap":
        return DirectMapping("swap", 2, _swap_image, "any")
    if kind in ("p", "rk"):
        return DirectMapping(kind, 1, _phase_rotation_image(param), "any")
    if kind == "rx":
        return DirectMapping("rx", 1, _rx_phase_image(param), "phase")
    if kind == "rz":
        return DirectMapping("rz", 1, _rz_phase_image(param), "phase")
    return None


def mapping_for(gate: Gate) -> DirectMapping | GuardedMapping | None:
    """The gate's direct mapping, or None when only a matrix form exists."""
    base = base_mapping(gate.kind, gate.param)
    if base is None:
        return None
    if gate.controls:
        return GuardedMapping(base, len(gate.controls))
    return base


# --- matrices ---------------------------------------------------------------


@dataclass(frozen=True)
class GateMatrix:
    """2^k x 2^k complex-term matrix."""

    dim: int
    entries: tuple  # tuple of tuples of ComplexTerm

    def numeric(self, env: dict[str, float] | None = None):
        import numpy as np

        from .terms import evaluate

        env = env or {}
        out = np.zeros((self.dim, self.dim), dtype=complex)
        for i in range(self.dim):
            for j in range(self.dim):
                entry = self.entries[i][j]
                out[i, j] = evaluate(entry.re, env) + 1j * evaluate(entry.im, env)
        return out


def _c(re=0, im=0) -> ComplexTerm:
    return ComplexTerm.of_const(Exact.of(Fraction(re)), Exact.of(Fraction(im)))


_INV = Exact.sqrt2() * Exact(Fraction(1, 2))  # 1/sqrt(2)


def _matrix_1q(kind: str, param: RealTerm | None) -> tuple:
    if kind == "i":
        return ((_c(1), _c(0)), (_c(0), _c(1)))
    if kind == "x":
        return ((_c(0), _c(1)), (_c(1), _c(0)))
    if kind == "z":
        return ((_c(1), _c(0)), (_c(0), _c(-1)))
    if kind == "h":
        h = ComplexTerm.of_const(_INV)
        neg_h = ComplexTerm.of_const(-_INV)
        return ((h, h), (h, neg_h))
    if kind in ("p", "rk"):
        cos_l = fold_constants(Cos(param))
        sin_l = fold_constants(Sin(param))
        return ((_c(1), _c(0)), (_c(0), ComplexTerm(cos_l, sin_l)))
    if kind == "rz":
        half = fold_constants(Mul(Const.of(Fraction(1, 2)), param))
        lo = ComplexTerm(fold_constants(Cos(half)), fold_constants(Neg(Sin(half))))
        hi = ComplexTerm(fold_constants(Cos(half)), fold_constants(Sin(half)))
        return ((lo, _c(0)), (_c(0), hi))
    if kind == "rx":
        half = fold_constants(Mul(Const.of(Fraction(1, 2)), param))
        c = ComplexTerm(fold_constants(Cos(half)), ZERO)
        ms = ComplexTerm(ZERO, fold_constants(Neg(Sin(half))))
        return ((c, ms), (ms, c))
    raise UnsupportedGate(f"no single-qubit matrix for {kind!r}")


def _swap_matrix() -> tuple:
    rows = []
    perm = {0: 0, 1: 2, 2: 1, 3: 3}
    for i in range(4):
        rows.append(tuple(_c(1) if perm[i] == j else _c(0) for j in range(4)))
    return tuple(rows)


def matrix_for(gate: Gate) -> GateMatrix:
    """Matrix over (controls..., targets...) qubit order, controls first."""
    if gate.kind == "custom":
        base_entries = gate.matrix
        base_dim = len(base_entries)
    elif gate.kind == "swap":
        base_entries = _swap_matrix()
        base_dim = 4
    else:
        base_entries = _matrix_1q(gate.kind, gate.param)
        base_dim = 2
    if not gate.controls:
        return GateMatrix(base_dim, tuple(tuple(row) for row in base_entries))
    n_ctrl = len(gate.controls)
    dim = (2**n_ctrl) * base_dim
    fire_offset = dim - base_dim  # all-controls-one block
    rows = []
    for i in range(dim):
        row = []
        for j in range(dim):
            if i >= fire_offset and j >= fire_offset:
                row.append(base_entries[i - fire_offset][j - fire_offset])
            else:
                row.append(_c(1) if i == j else _c(0))
        rows.append(tuple(row))
    return GateMatrix(dim, tuple(rows))


def measurement_matrices() -> tuple[GateMatrix, GateMatrix]:
    """Projectors onto |0> and |1>."""
    m0 = GateMatrix(2, ((_c(1), _c(0)), (_c(0), _c(0))))
    m1 = GateMatrix(2, ((_c(0), _c(0)), (_c(0), _c(1))))
    return m0, m1
