"""Exact sparse polynomials for the presolve pass.

Coefficients are rationals; sqrt(2) is carried as a generator unit with
the reduction rt2^2 -> 2, so every constant the encodings produce
(including 1/sqrt(2) chains) cancels exactly.  Trigonometric subterms
with non-special arguments become opaque units keyed by the canonical
form of their argument polynomial, which makes syntactically different
but algebraically equal chains collapse to identical monomials.
"""

from __future__ import annotations

import math
from fractions import Fraction

from ..terms import (
    Add,
    Const,
    Cos,
    Div,
    Exact,
    Mul,
    Neg,
    Pi,
    RealTerm,
    Sin,
    Sub,
    Var,
)

# A unit is ('v', name) | ('pi',) | ('rt2',) | ('sin', key) | ('cos', key)
# where key is the canonical hashable form of the argument polynomial.
# A monomial is a sorted tuple of (unit, exponent) pairs.

MONOMIAL_LIMIT = 6000


class PolyBlowup(Exception):
    """Expansion produced too many monomials; caller keeps the raw term."""


class Poly:
    __slots__ = ("terms",)

    def __init__(self, terms: dict | None = None):
        self.terms = terms or {}

    @staticmethod
    def const(value: Fraction | int) -> "Poly":
        value = Fraction(value)
        return Poly({(): value} if value else {})

    @staticmethod
    def exact(value: Exact) -> "Poly":
        terms = {}
        if value.r:
            terms[()] = value.r
        if value.s:
            terms[((("rt2",), 1),)] = value.s
        return Poly(terms)

    @staticmethod
    def var(name: str) -> "Poly":
        return Poly({((("v", name), 1),): Fraction(1)})

    @staticmethod
    def unit(unit: tuple) -> "Poly":
        return Poly({((unit, 1),): Fraction(1)})

    def is_zero(self) -> bool:
        return not self.terms

    def is_constant(self) -> bool:
        """No variable or trig units (pi and rt2 still count as constant)."""
        return all(_mono_is_constant(mono) for mono in self.terms)

    def constant_value(self) -> float:
        assert self.is_constant()
        return sum(float(c) * _mono_float(m) for m, c in self.terms.items())

    def key(self) -> tuple:
        return tuple(sorted(self.terms.items()))

    def variables(self) -> set[str]:
        out: set[str] = set()
        for mono in self.terms:
            for unit, _ in mono:
                _unit_variables(unit, out)
        return out

    def degree_hint(self) -> int:
        return max((sum(e for _, e in m) for m in self.terms), default=0)

    def __add__(self, other: "Poly") -> "Poly":
        terms = dict(self.terms)
        for mono, coeff in other.terms.items():
            new = terms.get(mono, Fraction(0)) + coeff
            if new:
                terms[mono] = new
            else:
                terms.pop(mono, None)
        return Poly(terms)

    def __neg__(self) -> "Poly":
        return Poly({m: -c for m, c in self.terms.items()})

    def __sub__(self, other: "Poly") -> "Poly":
        return self + (-other)

    def __mul__(self, other: "Poly") -> "Poly":
        if len(self.terms) * len(other.terms) > 4 * MONOMIAL_LIMIT:
            raise PolyBlowup()
        terms: dict = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                mono, extra = _mono_mul(m1, m2)
                coeff = c1 * c2 * extra
                new = terms.get(mono, Fraction(0)) + coeff
                if new:
                    terms[mono] = new
                else:
                    terms.pop(mono, None)
        if len(terms) > MONOMIAL_LIMIT:
            raise PolyBlowup()
        return Poly(terms)

    def scale(self, factor: Fraction) -> "Poly":
        if not factor:
            return Poly()
        return Poly({m: c * factor for m, c in self.terms.items()})

    def try_invert(self) -> "Poly | None":
        """Inverse when the poly is a nonzero constant a + b*rt2."""
        a = self.terms.get((), Fraction(0))
        b = self.terms.get(((("rt2",), 1),), Fraction(0))
        if len(self.terms) > (1 if a else 0) + (1 if b else 0):
            return None
        if a == 0 and b == 0:
            return None
        inv = Exact(a, b).inverse()
        return Poly.exact(inv)

    def __repr__(self):
        return f"Poly({self.terms!r})"


def _mono_mul(m1: tuple, m2: tuple) -> tuple[tuple, Fraction]:
    merged: dict = {}
    for unit, exp in m1:
        merged[unit] = merged.get(unit, 0) + exp
    for unit, exp in m2:
        merged[unit] = merged.get(unit, 0) + exp
    extra = Fraction(1)
    rt2 = ("rt2",)
    if rt2 in merged:
        exp = merged[rt2]
        extra *= Fraction(2) ** (exp // 2)
        if exp % 2:
            merged[rt2] = 1
        else:
            del merged[rt2]
    mono = tuple(sorted((u, e) for u, e in merged.items() if e))
    return mono, extra


def _mono_is_constant(mono: tuple) -> bool:
    return all(unit[0] in ("pi", "rt2") or _trig_constant(unit) for unit, _ in mono)


def _trig_constant(unit: tuple) -> bool:
    if unit[0] not in ("sin", "cos"):
        return False
    key = unit[1]
    return all(_mono_is_constant(mono) for mono, _ in key)


def _unit_variables(unit: tuple, out: set[str]) -> None:
    if unit[0] == "v":
        out.add(unit[1])
    elif unit[0] in ("sin", "cos"):
        for mono, _ in unit[1]:
            for inner, _e in mono:
                _unit_variables(inner, out)


def _mono_float(mono: tuple) -> float:
    out = 1.0
    for unit, exp in mono:
        out *= _unit_float(unit) ** exp
    return out


def _unit_float(unit: tuple) -> float:
    tag = unit[0]
    if tag == "pi":
        return math.pi
    if tag == "rt2":
        return math.sqrt(2.0)
    if tag in ("sin", "cos"):
        arg = sum(float(c) * _mono_float(m) for m, c in unit[1])
        return math.sin(arg) if tag == "sin" else math.cos(arg)
    raise ValueError(f"unit {unit!r} is not constant")


def has_variable_trig(poly: Poly) -> bool:
    """True when any sin/cos unit has variables inside its argument."""
    for mono in poly.terms:
        for unit, _ in mono:
            if unit[0] in ("sin", "cos"):
                inner: set[str] = set()
                for m, _c in unit[1]:
                    for u, _e in m:
                        _unit_variables(u, inner)
                if inner:
                    return True
    return False


def poly_substitute(poly: Poly, subst: dict[str, "Poly"]) -> "Poly":
    """Replace variable units by their defining polynomials (one level;
    callers guarantee subst values are fully resolved)."""
    out = Poly()
    for mono, coeff in poly.terms.items():
        factor = Poly.const(coeff)
        for unit, exp in mono:
            base = _substitute_unit(unit, subst)
            for _ in range(exp):
                factor = factor * base
        out = out + factor
    return out


def _substitute_unit(unit: tuple, subst: dict[str, "Poly"]) -> "Poly":
    tag = unit[0]
    if tag == "v":
        hit = subst.get(unit[1])
        return hit if hit is not None else Poly.unit(unit)
    if tag in ("sin", "cos"):
        arg = Poly(dict(unit[1]))
        if arg.variables() & subst.keys():
            new_arg = poly_substitute(arg, subst)
            special = _try_special_trig(tag, new_arg)
            if special is not None:
                return special
            return Poly.unit((tag, new_arg.key()))
        return Poly.unit(unit)
    return Poly.unit(unit)


def poly_eval(poly: Poly, env: dict[str, float]) -> float:
    out = 0.0
    for mono, coeff in poly.terms.items():
        value = float(coeff)
        for unit, exp in mono:
            value *= _unit_eval(unit, env) ** exp
        out += value
    return out


def _unit_eval(unit: tuple, env: dict[str, float]) -> float:
    tag = unit[0]
    if tag == "v":
        return env[unit[1]]
    if tag == "pi":
        return math.pi
    if tag == "rt2":
        return math.sqrt(2.0)
    if tag in ("sin", "cos"):
        arg = sum(
            float(c) * math.prod(_unit_eval(u, env) ** e for u, e in m)
            for m, c in unit[1]
        )
        return math.sin(arg) if tag == "sin" else math.cos(arg)
    raise ValueError(f"unknown unit {unit!r}")


# sin values at multiples of pi/4 (same table the term folder uses)
_SIN_QUARTERS = {
    Fraction(0): Exact(Fraction(0)),
    Fraction(1, 4): Exact(Fraction(0), Fraction(1, 2)),
    Fraction(1, 2): Exact(Fraction(1)),
    Fraction(3, 4): Exact(Fraction(0), Fraction(1, 2)),
    Fraction(1): Exact(Fraction(0)),
    Fraction(5, 4): Exact(Fraction(0), Fraction(-1, 2)),
    Fraction(3, 2): Exact(Fraction(-1)),
    Fraction(7, 4): Exact(Fraction(0), Fraction(-1, 2)),
}


def _try_special_trig(kind: str, arg: Poly) -> Poly | None:
    """Exact value when the argument is a rational multiple of pi."""
    multiple = None
    if arg.is_zero():
        multiple = Fraction(0)
    elif len(arg.terms) == 1:
        (mono, coeff), = arg.terms.items()
        if mono == ((("pi",), 1),):
            multiple = coeff
    if multiple is None:
        return None
    if kind == "cos":
        multiple = multiple + Fraction(1, 2)
    value = _SIN_QUARTERS.get(multiple % 2)
    if value is None:
        return None
    return Poly.exact(value)


def from_term(term: RealTerm, subst: dict[str, Poly] | None = None) -> Poly:
    """Expand a term tree into canonical polynomial form.

    `subst` maps eliminated variable names to their defining polynomials
    (already fully resolved).  Raises PolyBlowup when expansion is too
    large to be worthwhile.
    """
    subst = subst or {}

    def walk(t: RealTerm) -> Poly:
        if isinstance(t, Var):
            resolved = subst.get(t.name)
            return resolved if resolved is not None else Poly.var(t.name)
        if isinstance(t, Const):
            return Poly.exact(t.value)
        if isinstance(t, Pi):
            return Poly.unit(("pi",))
        if isinstance(t, Add):
            return walk(t.a) + walk(t.b)
        if isinstance(t, Sub):
            return walk(t.a) - walk(t.b)
        if isinstance(t, Mul):
            return walk(t.a) * walk(t.b)
        if isinstance(t, Neg):
            return -walk(t.a)
        if isinstance(t, Div):
            denom = walk(t.b)
            inverse = denom.try_invert()
            if inverse is None:
                raise PolyBlowup()  # non-constant denominator: keep raw term
            return walk(t.a) * inverse
        if isinstance(t, (Sin, Cos)):
            kind = "sin" if isinstance(t, Sin) else "cos"
            arg = walk(t.arg)
            special = _try_special_trig(kind, arg)
            if special is not None:
                return special
            return Poly.unit((kind, arg.key()))
        raise TypeError(f"unknown term node {t!r}")

    return walk(term)


def _balanced(parts: list[RealTerm], node) -> RealTerm:
    """Balanced combining tree; keeps recursion depth logarithmic."""
    while len(parts) > 1:
        merged = []
        for i in range(0, len(parts) - 1, 2):
            merged.append(node(parts[i], parts[i + 1]))
        if len(parts) % 2:
            merged.append(parts[-1])
        parts = merged
    return parts[0]


def to_term(poly: Poly) -> RealTerm:
    """Rebuild a term tree (used when residual atoms go to interval search)."""
    if poly.is_zero():
        return Const(Exact())
    parts: list[RealTerm] = []
    for mono, coeff in sorted(poly.terms.items()):
        rt2_exp = 0
        factors: list[RealTerm] = []
        for unit, exp in mono:
            if unit == ("rt2",):
                rt2_exp = exp
                continue
            base = _unit_to_term(unit)
            for _ in range(exp):
                factors.append(base)
        if rt2_exp:
            constant = Exact(Fraction(0), coeff)
        else:
            constant = Exact(coeff)
        if factors and constant == Exact(Fraction(1)):
            term = _balanced(factors, Mul)
        else:
            term = _balanced([Const(constant)] + factors, Mul)
        parts.append(term)
    return _balanced(parts, Add)


def _unit_to_term(unit: tuple) -> RealTerm:
    tag = unit[0]
    if tag == "v":
        return Var(unit[1])
    if tag == "pi":
        return Pi()
    if tag == "rt2":
        return Const(Exact.sqrt2())
    if tag in ("sin", "cos"):
        arg = to_term(Poly(dict(unit[1])))
        return Sin(arg) if tag == "sin" else Cos(arg)
    raise ValueError(f"unknown unit {unit!r}")
