"""Symbolic real/complex arithmetic terms and boolean constraints.

Every encoding in this package is built from these trees.  Terms are
immutable after construction and safe to share between threads; all
operations on them are pure functions.

Numeric constants are kept exact (rationals extended with a sqrt(2)
component, the only irrational the gate catalog introduces) so that
constant folding never loses precision.  Decimal rendering happens only
at serialization time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Union

Rat = Union[int, Fraction]

_SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class Exact:
    """Exact constant of the form ``r + s*sqrt(2)`` with rational r, s."""

    r: Fraction = Fraction(0)
    s: Fraction = Fraction(0)

    @staticmethod
    def of(value: "Exact | Rat") -> "Exact":
        if isinstance(value, Exact):
            return value
        return Exact(Fraction(value))

    @staticmethod
    def sqrt2() -> "Exact":
        return Exact(Fraction(0), Fraction(1))

    def __add__(self, other: "Exact") -> "Exact":
        return Exact(self.r + other.r, self.s + other.s)

    def __sub__(self, other: "Exact") -> "Exact":
        return Exact(self.r - other.r, self.s - other.s)

    def __mul__(self, other: "Exact") -> "Exact":
        # (r1 + s1*v2)(r2 + s2*v2) with v2**2 == 2
        return Exact(
            self.r * other.r + 2 * self.s * other.s,
            self.r * other.s + self.s * other.r,
        )

    def __neg__(self) -> "Exact":
        return Exact(-self.r, -self.s)

    def inverse(self) -> "Exact":
        denom = self.r * self.r - 2 * self.s * self.s
        if denom == 0:
            raise ZeroDivisionError("inverse of zero constant")
        return Exact(self.r / denom, -self.s / denom)

    def __truediv__(self, other: "Exact") -> "Exact":
        return self * other.inverse()

    def is_zero(self) -> bool:
        return self.r == 0 and self.s == 0

    def is_rational(self) -> bool:
        return self.s == 0

    def to_float(self) -> float:
        return float(self.r) + float(self.s) * _SQRT2

    def sign(self) -> int:
        if self.is_zero():
            return 0
        return 1 if self.to_float() > 0 else -1


EXACT_ZERO = Exact()
EXACT_ONE = Exact(Fraction(1))
EXACT_HALF = Exact(Fraction(1, 2))
# 1/sqrt(2) == sqrt(2)/2, the constant the Hadamard mapping divides by.
SQRT2_INV = Exact(Fraction(0), Fraction(1, 2))


class RealTerm:
    """Base class for symbolic real-valued expression nodes."""

    __slots__ = ()

    def __add__(self, other):
        return Add(self, _coerce(other))

    def __radd__(self, other):
        return Add(_coerce(other), self)

    def __sub__(self, other):
        return Sub(self, _coerce(other))

    def __rsub__(self, other):
        return Sub(_coerce(other), self)

    def __mul__(self, other):
        return Mul(self, _coerce(other))

    def __rmul__(self, other):
        return Mul(_coerce(other), self)

    def __truediv__(self, other):
        return Div(self, _coerce(other))

    def __neg__(self):
        return Neg(self)


def _coerce(value) -> "RealTerm":
    if isinstance(value, RealTerm):
        return value
    if isinstance(value, (int, Fraction)):
        return Const(Exact.of(value))
    if isinstance(value, Exact):
        return Const(value)
    raise TypeError(f"cannot use {value!r} as a real term")


@dataclass(frozen=True, slots=True)
class Var(RealTerm):
    name: str


@dataclass(frozen=True, slots=True)
class Const(RealTerm):
    value: Exact

    @staticmethod
    def of(value: Exact | Rat) -> "Const":
        return Const(Exact.of(value))


@dataclass(frozen=True, slots=True)
class Add(RealTerm):
    a: RealTerm
    b: RealTerm


@dataclass(frozen=True, slots=True)
class Sub(RealTerm):
    a: RealTerm
    b: RealTerm


@dataclass(frozen=True, slots=True)
class Mul(RealTerm):
    a: RealTerm
    b: RealTerm


@dataclass(frozen=True, slots=True)
class Neg(RealTerm):
    a: RealTerm


@dataclass(frozen=True, slots=True)
class Div(RealTerm):
    a: RealTerm
    b: RealTerm


@dataclass(frozen=True, slots=True)
class Sin(RealTerm):
    arg: RealTerm


@dataclass(frozen=True, slots=True)
class Cos(RealTerm):
    arg: RealTerm


@dataclass(frozen=True, slots=True)
class Pi(RealTerm):
    pass


PI = Pi()
ZERO = Const(EXACT_ZERO)
ONE = Const(EXACT_ONE)


def const(value: Exact | Rat) -> Const:
    return Const.of(value)


def angle(numerator: Rat, denominator: Rat = 1) -> RealTerm:
    """Rational multiple of pi, e.g. ``angle(1, 2)`` is pi/2."""
    frac = Fraction(numerator) / Fraction(denominator)
    if frac == 1:
        return PI
    return Mul(Const.of(frac), PI)


@dataclass(frozen=True, slots=True)
class ComplexTerm:
    """Pair of real terms read as ``re + i*im``."""

    re: RealTerm
    im: RealTerm

    @staticmethod
    def of_real(t: RealTerm) -> "ComplexTerm":
        return ComplexTerm(t, ZERO)

    @staticmethod
    def of_const(re: Exact | Rat, im: Exact | Rat = 0) -> "ComplexTerm":
        return ComplexTerm(Const.of(re), Const.of(im))

    def __add__(self, other: "ComplexTerm") -> "ComplexTerm":
        return ComplexTerm(fold_constants(self.re + other.re), fold_constants(self.im + other.im))

    def __neg__(self) -> "ComplexTerm":
        return ComplexTerm(fold_constants(Neg(self.re)), fold_constants(Neg(self.im)))


def complex_mul(a: ComplexTerm, b: ComplexTerm) -> ComplexTerm:
    """(a.re + i a.im)(b.re + i b.im) expanded as term trees, then folded."""
    re = Sub(Mul(a.re, b.re), Mul(a.im, b.im))
    im = Add(Mul(a.re, b.im), Mul(a.im, b.re))
    return ComplexTerm(fold_constants(re), fold_constants(im))


# --- constraints -----------------------------------------------------------


class Constraint:
    __slots__ = ()


@dataclass(frozen=True, slots=True)
class Eq(Constraint):
    a: RealTerm
    b: RealTerm


@dataclass(frozen=True, slots=True)
class Le(Constraint):
    a: RealTerm
    b: RealTerm


@dataclass(frozen=True, slots=True)
class Lt(Constraint):
    a: RealTerm
    b: RealTerm


@dataclass(frozen=True, slots=True)
class Ge(Constraint):
    a: RealTerm
    b: RealTerm


@dataclass(frozen=True, slots=True)
class Gt(Constraint):
    a: RealTerm
    b: RealTerm


@dataclass(frozen=True, slots=True)
class And(Constraint):
    items: tuple

    def __init__(self, items: Iterable[Constraint]):
        object.__setattr__(self, "items", tuple(items))


@dataclass(frozen=True, slots=True)
class Or(Constraint):
    items: tuple

    def __init__(self, items: Iterable[Constraint]):
        object.__setattr__(self, "items", tuple(items))


@dataclass(frozen=True, slots=True)
class Not(Constraint):
    item: Constraint


@dataclass(frozen=True, slots=True)
class Implies(Constraint):
    a: Constraint
    b: Constraint


@dataclass(frozen=True, slots=True)
class TrueC(Constraint):
    pass


TRUE = TrueC()


def to_nnf(c: Constraint, positive: bool = True) -> Constraint:
    """Negation normal form; negated equalities become strict disjunctions."""
    if isinstance(c, TrueC):
        return TrueC() if positive else Or([])  # empty Or reads as false
    if isinstance(c, Eq):
        return c if positive else Or([Lt(c.a, c.b), Gt(c.a, c.b)])
    if isinstance(c, Le):
        return c if positive else Gt(c.a, c.b)
    if isinstance(c, Lt):
        return c if positive else Ge(c.a, c.b)
    if isinstance(c, Ge):
        return c if positive else Lt(c.a, c.b)
    if isinstance(c, Gt):
        return c if positive else Le(c.a, c.b)
    if isinstance(c, And):
        items = [to_nnf(x, positive) for x in c.items]
        return And(items) if positive else Or(items)
    if isinstance(c, Or):
        items = [to_nnf(x, positive) for x in c.items]
        return Or(items) if positive else And(items)
    if isinstance(c, Not):
        return to_nnf(c.item, not positive)
    if isinstance(c, Implies):
        if positive:
            return Or([to_nnf(c.a, False), to_nnf(c.b, True)])
        return And([to_nnf(c.a, True), to_nnf(c.b, False)])
    raise TypeError(f"unknown constraint {c!r}")


def conjoin(items: Iterable[Constraint]) -> Constraint:
    """And(...) with single-element and nested-And flattening."""
    flat: list[Constraint] = []
    for item in items:
        if isinstance(item, TrueC):
            continue
        if isinstance(item, And):
            flat.extend(item.items)
        else:
            flat.append(item)
    if not flat:
        return TRUE
    if len(flat) == 1:
        return flat[0]
    return And(flat)


def disjoin(items: Iterable[Constraint]) -> Constraint:
    flat: list[Constraint] = []
    for item in items:
        if isinstance(item, Or):
            flat.extend(item.items)
        else:
            flat.append(item)
    if len(flat) == 1:
        return flat[0]
    return Or(flat)


# --- constant folding ------------------------------------------------------

# sin at rational multiples of pi, for multiples of pi/4 and pi/2 (the only
# angles the gate catalog produces that have exact values in Q(sqrt 2)).
_SIN_TABLE = {
    Fraction(0): EXACT_ZERO,
    Fraction(1, 4): SQRT2_INV,
    Fraction(1, 2): EXACT_ONE,
    Fraction(3, 4): SQRT2_INV,
    Fraction(1): EXACT_ZERO,
    Fraction(5, 4): -SQRT2_INV,
    Fraction(3, 2): -EXACT_ONE,
    Fraction(7, 4): -SQRT2_INV,
}


def _special_sin(multiple: Fraction) -> Exact | None:
    return _SIN_TABLE.get(multiple % 2)


def _pi_multiple(t: RealTerm) -> Fraction | None:
    """If t is an exact rational multiple of pi, return the multiple."""
    if isinstance(t, Pi):
        return Fraction(1)
    if isinstance(t, Const) and t.value.is_zero():
        return Fraction(0)
    if isinstance(t, Mul):
        if isinstance(t.a, Const) and isinstance(t.b, Pi) and t.a.value.is_rational():
            return t.a.value.r
        if isinstance(t.b, Const) and isinstance(t.a, Pi) and t.b.value.is_rational():
            return t.b.value.r
    if isinstance(t, Neg):
        inner = _pi_multiple(t.a)
        return None if inner is None else -inner
    return None


def fold_constants(t: RealTerm) -> RealTerm:
    """Fold exact-constant subtrees; apply 0/1 identities.

    sin/cos fold only at multiples of pi/4 where the value lies in
    Q(sqrt 2); everything else stays symbolic.
    """
    if isinstance(t, (Var, Const, Pi)):
        return t
    if isinstance(t, Add):
        a, b = fold_constants(t.a), fold_constants(t.b)
        if isinstance(a, Const) and isinstance(b, Const):
            return Const(a.value + b.value)
        if isinstance(a, Const) and a.value.is_zero():
            return b
        if isinstance(b, Const) and b.value.is_zero():
            return a
        return Add(a, b)
    if isinstance(t, Sub):
        a, b = fold_constants(t.a), fold_constants(t.b)
        if isinstance(a, Const) and isinstance(b, Const):
            return Const(a.value - b.value)
        if isinstance(b, Const) and b.value.is_zero():
            return a
        if isinstance(a, Const) and a.value.is_zero():
            return fold_constants(Neg(b))
        return Sub(a, b)
    if isinstance(t, Mul):
        a, b = fold_constants(t.a), fold_constants(t.b)
        if isinstance(a, Const) and isinstance(b, Const):
            return Const(a.value * b.value)
        for x, y in ((a, b), (b, a)):
            if isinstance(x, Const):
                if x.value.is_zero():
                    return ZERO
                if x.value == EXACT_ONE:
                    return y
        return Mul(a, b)
    if isinstance(t, Neg):
        a = fold_constants(t.a)
        if isinstance(a, Const):
            return Const(-a.value)
        if isinstance(a, Neg):
            return a.a
        return Neg(a)
    if isinstance(t, Div):
        a, b = fold_constants(t.a), fold_constants(t.b)
        if isinstance(b, Const):
            if b.value.is_zero():
                raise ZeroDivisionError("division by constant zero")
            if isinstance(a, Const):
                return Const(a.value / b.value)
            if b.value == EXACT_ONE:
                return a
        if isinstance(a, Const) and a.value.is_zero():
            return ZERO
        return Div(a, b)
    if isinstance(t, Sin):
        arg = fold_constants(t.arg)
        multiple = _pi_multiple(arg)
        if multiple is not None:
            value = _special_sin(multiple)
            if value is not None:
                return Const(value)
        return Sin(arg)
    if isinstance(t, Cos):
        arg = fold_constants(t.arg)
        multiple = _pi_multiple(arg)
        if multiple is not None:
            value = _special_sin(multiple + Fraction(1, 2))
            if value is not None:
                return Const(value)
        return Cos(arg)
    raise TypeError(f"unknown term node {t!r}")


# --- numeric evaluation ----------------------------------------------------


def evaluate(t: RealTerm, env: dict[str, float]) -> float:
    """Double-precision evaluation under a variable assignment."""
    if isinstance(t, Var):
        return env[t.name]
    if isinstance(t, Const):
        return t.value.to_float()
    if isinstance(t, Pi):
        return math.pi
    if isinstance(t, Add):
        return evaluate(t.a, env) + evaluate(t.b, env)
    if isinstance(t, Sub):
        return evaluate(t.a, env) - evaluate(t.b, env)
    if isinstance(t, Mul):
        return evaluate(t.a, env) * evaluate(t.b, env)
    if isinstance(t, Neg):
        return -evaluate(t.a, env)
    if isinstance(t, Div):
        return evaluate(t.a, env) / evaluate(t.b, env)
    if isinstance(t, Sin):
        return math.sin(evaluate(t.arg, env))
    if isinstance(t, Cos):
        return math.cos(evaluate(t.arg, env))
    raise TypeError(f"unknown term node {t!r}")


def evaluate_constraint(c: Constraint, env: dict[str, float], tol: float = 0.0) -> bool:
    """Truth value of a constraint under an assignment (tol slackens atoms)."""
    if isinstance(c, TrueC):
        return True
    if isinstance(c, Eq):
        return abs(evaluate(c.a, env) - evaluate(c.b, env)) <= tol
    if isinstance(c, Le):
        return evaluate(c.a, env) <= evaluate(c.b, env) + tol
    if isinstance(c, Lt):
        return evaluate(c.a, env) < evaluate(c.b, env) + tol
    if isinstance(c, Ge):
        return evaluate(c.a, env) >= evaluate(c.b, env) - tol
    if isinstance(c, Gt):
        return evaluate(c.a, env) > evaluate(c.b, env) - tol
    if isinstance(c, And):
        return all(evaluate_constraint(x, env, tol) for x in c.items)
    if isinstance(c, Or):
        return any(evaluate_constraint(x, env, tol) for x in c.items)
    if isinstance(c, Not):
        return not evaluate_constraint(c.item, env, tol)
    if isinstance(c, Implies):
        return (not evaluate_constraint(c.a, env, tol)) or evaluate_constraint(c.b, env, tol)
    raise TypeError(f"unknown constraint node {c!r}")


def term_variables(t: RealTerm, out: set[str] | None = None) -> set[str]:
    if out is None:
        out = set()
    stack = [t]
    while stack:
        node = stack.pop()
        if isinstance(node, Var):
            out.add(node.name)
        elif isinstance(node, (Add, Sub, Mul, Div)):
            stack.append(node.a)
            stack.append(node.b)
        elif isinstance(node, Neg):
            stack.append(node.a)
        elif isinstance(node, (Sin, Cos)):
            stack.append(node.arg)
    return out


def constraint_variables(c: Constraint, out: set[str] | None = None) -> set[str]:
    if out is None:
        out = set()
    if isinstance(c, (Eq, Le, Lt, Ge, Gt)):
        term_variables(c.a, out)
        term_variables(c.b, out)
    elif isinstance(c, (And, Or)):
        for item in c.items:
            constraint_variables(item, out)
    elif isinstance(c, Not):
        constraint_variables(c.item, out)
    elif isinstance(c, Implies):
        constraint_variables(c.a, out)
        constraint_variables(c.b, out)
    return out
