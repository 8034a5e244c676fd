"""SMT-LIB2 v2.6 serialization and parsing for constraint trees.

Serialization is deterministic: the same tree always produces
byte-identical text.  Constants render as decimal literals with 17
significant digits; pi renders as a literal unless the target solver
exposes a builtin symbol.
"""

from __future__ import annotations

from dataclasses import dataclass
from decimal import Decimal
from fractions import Fraction
from typing import Iterable, Sequence

from .errors import UndeclaredVariable
from .terms import (
    Add,
    And,
    Const,
    Constraint,
    Cos,
    Div,
    Eq,
    Exact,
    Ge,
    Gt,
    Implies,
    Le,
    Lt,
    Mul,
    Neg,
    Not,
    Or,
    Pi,
    RealTerm,
    Sin,
    Sub,
    TrueC,
    Var,
    constraint_variables,
)

PI_LITERAL = "3.1415926535897932"


@dataclass(frozen=True)
class EmitConfig:
    """Solver-dependent symbol choices for the nonlinear theory."""

    sin_symbol: str = "sin"
    cos_symbol: str = "cos"
    pi_symbol: str | None = None  # None renders pi as a 17-digit literal
    logic: str = "QF_NRA"


DEFAULT_EMIT = EmitConfig()


def decimal_literal(value: float) -> str:
    """Render a float as an SMT-LIB decimal (no exponent), 17 sig digits."""
    if value != value or value in (float("inf"), float("-inf")):
        raise ValueError(f"non-finite constant {value}")
    text = format(Decimal(f"{value:.17g}"), "f")
    if "." not in text:
        text += ".0"
    return text


def _const_text(value: Exact) -> str:
    as_float = value.to_float()
    if as_float < 0:
        return f"(- {decimal_literal(-as_float)})"
    return decimal_literal(as_float)


def term_to_sexpr(t: RealTerm, cfg: EmitConfig = DEFAULT_EMIT) -> str:
    if isinstance(t, Var):
        return t.name
    if isinstance(t, Const):
        return _const_text(t.value)
    if isinstance(t, Pi):
        return cfg.pi_symbol if cfg.pi_symbol else PI_LITERAL
    if isinstance(t, Add):
        return f"(+ {term_to_sexpr(t.a, cfg)} {term_to_sexpr(t.b, cfg)})"
    if isinstance(t, Sub):
        return f"(- {term_to_sexpr(t.a, cfg)} {term_to_sexpr(t.b, cfg)})"
    if isinstance(t, Mul):
        return f"(* {term_to_sexpr(t.a, cfg)} {term_to_sexpr(t.b, cfg)})"
    if isinstance(t, Neg):
        return f"(- {term_to_sexpr(t.a, cfg)})"
    if isinstance(t, Div):
        return f"(/ {term_to_sexpr(t.a, cfg)} {term_to_sexpr(t.b, cfg)})"
    if isinstance(t, Sin):
        return f"({cfg.sin_symbol} {term_to_sexpr(t.arg, cfg)})"
    if isinstance(t, Cos):
        return f"({cfg.cos_symbol} {term_to_sexpr(t.arg, cfg)})"
    raise TypeError(f"unknown term node {t!r}")


def constraint_to_sexpr(c: Constraint, cfg: EmitConfig = DEFAULT_EMIT) -> str:
    if isinstance(c, TrueC):
        return "true"
    if isinstance(c, Eq):
        return f"(= {term_to_sexpr(c.a, cfg)} {term_to_sexpr(c.b, cfg)})"
    if isinstance(c, Le):
        return f"(<= {term_to_sexpr(c.a, cfg)} {term_to_sexpr(c.b, cfg)})"
    if isinstance(c, Lt):
        return f"(< {term_to_sexpr(c.a, cfg)} {term_to_sexpr(c.b, cfg)})"
    if isinstance(c, Ge):
        return f"(>= {term_to_sexpr(c.a, cfg)} {term_to_sexpr(c.b, cfg)})"
    if isinstance(c, Gt):
        return f"(> {term_to_sexpr(c.a, cfg)} {term_to_sexpr(c.b, cfg)})"
    if isinstance(c, And):
        inner = " ".join(constraint_to_sexpr(x, cfg) for x in c.items)
        return f"(and {inner})" if c.items else "true"
    if isinstance(c, Or):
        inner = " ".join(constraint_to_sexpr(x, cfg) for x in c.items)
        return f"(or {inner})" if c.items else "false"
    if isinstance(c, Not):
        return f"(not {constraint_to_sexpr(c.item, cfg)})"
    if isinstance(c, Implies):
        return f"(=> {constraint_to_sexpr(c.a, cfg)} {constraint_to_sexpr(c.b, cfg)})"
    raise TypeError(f"unknown constraint node {c!r}")


SQRT2_NAME = "sqrt2"


def _has_sqrt2_const(t: RealTerm) -> bool:
    if isinstance(t, Const):
        return t.value.s != 0
    if isinstance(t, (Add, Sub, Mul, Div)):
        return _has_sqrt2_const(t.a) or _has_sqrt2_const(t.b)
    if isinstance(t, Neg):
        return _has_sqrt2_const(t.a)
    if isinstance(t, (Sin, Cos)):
        return _has_sqrt2_const(t.arg)
    return False


def _lower_sqrt2_term(t: RealTerm) -> RealTerm:
    """Rewrite constants r + s*sqrt(2) as r + s*<sqrt2 var> so the wire
    format stays exact (decimal literals cannot represent sqrt 2)."""
    if isinstance(t, Const):
        if t.value.s == 0:
            return t
        from .terms import Exact

        root = Var(SQRT2_NAME)
        scaled = root if t.value.s == 1 else Mul(Const(Exact(t.value.s)), root)
        if t.value.r == 0:
            return scaled
        return Add(Const(Exact(t.value.r)), scaled)
    if isinstance(t, (Add, Sub, Mul, Div)):
        return type(t)(_lower_sqrt2_term(t.a), _lower_sqrt2_term(t.b))
    if isinstance(t, Neg):
        return Neg(_lower_sqrt2_term(t.a))
    if isinstance(t, (Sin, Cos)):
        return type(t)(_lower_sqrt2_term(t.arg))
    return t


def _lower_sqrt2(c: Constraint) -> tuple[Constraint, bool]:
    found = [False]

    def walk(c: Constraint) -> Constraint:
        if isinstance(c, (Eq, Le, Lt, Ge, Gt)):
            if _has_sqrt2_const(c.a) or _has_sqrt2_const(c.b):
                found[0] = True
                return type(c)(_lower_sqrt2_term(c.a), _lower_sqrt2_term(c.b))
            return c
        if isinstance(c, And):
            return And([walk(x) for x in c.items])
        if isinstance(c, Or):
            return Or([walk(x) for x in c.items])
        if isinstance(c, Not):
            return Not(walk(c.item))
        if isinstance(c, Implies):
            return Implies(walk(c.a), walk(c.b))
        return c

    lowered = walk(c)
    return lowered, found[0]


def sqrt2_definition() -> list[Constraint]:
    root = Var(SQRT2_NAME)
    return [Eq(Mul(root, root), Const.of(2)), Ge(root, Const.of(0))]


def to_smtlib(
    c: Constraint,
    decls: Sequence[str] | set[str],
    cfg: EmitConfig = DEFAULT_EMIT,
    comments: Iterable[tuple[int, str]] | None = None,
) -> str:
    """Declarations plus one assert per top-level conjunct.

    Raises UndeclaredVariable if the constraint mentions a variable that
    is missing from decls.  `comments` pairs (conjunct index, text) to
    interleave section markers into the output.
    """
    ordered = sorted(decls) if isinstance(decls, (set, frozenset)) else list(decls)
    declared = set(ordered)
    c, needs_root = _lower_sqrt2(c)
    if needs_root:
        if SQRT2_NAME in declared:
            raise UndeclaredVariable(f"{SQRT2_NAME} is reserved for the sqrt(2) definition")
        ordered = [SQRT2_NAME] + ordered
        declared.add(SQRT2_NAME)
    for name in sorted(constraint_variables(c)):
        if name not in declared:
            raise UndeclaredVariable(name)
    lines = [f"(declare-fun {name} () Real)" for name in ordered]
    if needs_root:
        for item in sqrt2_definition():
            lines.append(f"(assert {constraint_to_sexpr(item, cfg)})")
    conjuncts = list(c.items) if isinstance(c, And) else [c]
    marker = {}
    if comments:
        for index, text in comments:
            marker.setdefault(index, []).append(text)
    for i, item in enumerate(conjuncts):
        for text in marker.get(i, []):
            lines.append(f"; {text}")
        if not isinstance(item, TrueC):
            lines.append(f"(assert {constraint_to_sexpr(item, cfg)})")
    return "\n".join(lines)


def to_script(
    c: Constraint,
    decls: Sequence[str] | set[str],
    cfg: EmitConfig = DEFAULT_EMIT,
    comments: Iterable[tuple[int, str]] | None = None,
) -> str:
    body = to_smtlib(c, decls, cfg, comments)
    return f"(set-logic {cfg.logic})\n{body}\n(check-sat)\n(exit)\n"


# --- parsing ---------------------------------------------------------------


class SmtParseError(Exception):
    pass


def tokenize(text: str) -> list[str]:
    tokens: list[str] = []
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch == ";":
            while i < n and text[i] != "\n":
                i += 1
        elif ch in "()":
            tokens.append(ch)
            i += 1
        elif ch.isspace():
            i += 1
        else:
            j = i
            while j < n and not text[j].isspace() and text[j] not in "();":
                j += 1
            tokens.append(text[i:j])
            i = j
    return tokens


def _read_sexpr(tokens: list[str], pos: int):
    if pos >= len(tokens):
        raise SmtParseError("unexpected end of input")
    tok = tokens[pos]
    if tok == "(":
        items = []
        pos += 1
        while pos < len(tokens) and tokens[pos] != ")":
            node, pos = _read_sexpr(tokens, pos)
            items.append(node)
        if pos >= len(tokens):
            raise SmtParseError("unbalanced parenthesis")
        return items, pos + 1
    if tok == ")":
        raise SmtParseError("unexpected ')'")
    return tok, pos + 1


def read_all_sexprs(text: str) -> list:
    tokens = tokenize(text)
    out, pos = [], 0
    while pos < len(tokens):
        node, pos = _read_sexpr(tokens, pos)
        out.append(node)
    return out


_NUM_CHARS = set("0123456789.")


def _parse_number(token: str) -> Exact | None:
    if not token or not set(token) <= _NUM_CHARS or token.count(".") > 1:
        return None
    if "." in token:
        whole, frac = token.split(".")
        whole = whole or "0"
        denominator = 10 ** len(frac)
        return Exact(Fraction(int(whole) * denominator + int(frac or 0), denominator))
    return Exact(Fraction(int(token)))


def sexpr_to_term(node, cfg: EmitConfig = DEFAULT_EMIT) -> RealTerm:
    if isinstance(node, str):
        number = _parse_number(node)
        if number is not None:
            return Const(number)
        if cfg.pi_symbol and node == cfg.pi_symbol:
            return Pi()
        return Var(node)
    if not node:
        raise SmtParseError("empty term application")
    head, args = node[0], node[1:]
    if head == "+":
        terms = [sexpr_to_term(a, cfg) for a in args]
        out = terms[0]
        for t in terms[1:]:
            out = Add(out, t)
        return out
    if head == "-":
        if len(args) == 1:
            return Neg(sexpr_to_term(args[0], cfg))
        terms = [sexpr_to_term(a, cfg) for a in args]
        out = terms[0]
        for t in terms[1:]:
            out = Sub(out, t)
        return out
    if head == "*":
        terms = [sexpr_to_term(a, cfg) for a in args]
        out = terms[0]
        for t in terms[1:]:
            out = Mul(out, t)
        return out
    if head == "/":
        if len(args) != 2:
            raise SmtParseError("/ expects two arguments")
        return Div(sexpr_to_term(args[0], cfg), sexpr_to_term(args[1], cfg))
    if head == cfg.sin_symbol:
        return Sin(sexpr_to_term(args[0], cfg))
    if head == cfg.cos_symbol:
        return Cos(sexpr_to_term(args[0], cfg))
    raise SmtParseError(f"unknown term head {head!r}")


_REL = {"=": Eq, "<=": Le, "<": Lt, ">=": Ge, ">": Gt}


def sexpr_to_constraint(node, cfg: EmitConfig = DEFAULT_EMIT) -> Constraint:
    if node == "true":
        return TrueC()
    if node == "false":
        return Not(TrueC())
    if not isinstance(node, list) or not node:
        raise SmtParseError(f"expected a constraint, got {node!r}")
    head, args = node[0], node[1:]
    if head in _REL:
        if len(args) != 2:
            raise SmtParseError(f"{head} expects two arguments")
        return _REL[head](sexpr_to_term(args[0], cfg), sexpr_to_term(args[1], cfg))
    if head == "and":
        return And([sexpr_to_constraint(a, cfg) for a in args])
    if head == "or":
        return Or([sexpr_to_constraint(a, cfg) for a in args])
    if head == "not":
        return Not(sexpr_to_constraint(args[0], cfg))
    if head == "=>":
        out = sexpr_to_constraint(args[-1], cfg)
        for a in reversed(args[:-1]):
            out = Implies(sexpr_to_constraint(a, cfg), out)
        return out
    raise SmtParseError(f"unknown constraint head {head!r}")


@dataclass
class ParsedScript:
    logic: str | None
    decls: list[str]
    asserts: list[Constraint]


def parse_script(text: str, cfg: EmitConfig = DEFAULT_EMIT) -> ParsedScript:
    logic = None
    decls: list[str] = []
    asserts: list[Constraint] = []
    for node in read_all_sexprs(text):
        if not isinstance(node, list) or not node:
            continue
        head = node[0]
        if head == "set-logic":
            logic = node[1]
        elif head in ("declare-fun", "declare-const"):
            decls.append(node[1])
        elif head == "assert":
            asserts.append(sexpr_to_constraint(node[1], cfg))
        elif head in ("check-sat", "exit", "set-info", "set-option", "get-model"):
            continue
    return ParsedScript(logic, decls, asserts)


# --- structural comparison (round-trip testing) ----------------------------


def terms_structurally_equal(a: RealTerm, b: RealTerm, tol: float = 1e-12) -> bool:
    # negative constants serialize as (- lit) and parse back as Neg(Const)
    if isinstance(a, Neg) and isinstance(a.a, Const):
        a = Const(-a.a.value)
    if isinstance(b, Neg) and isinstance(b.a, Const):
        b = Const(-b.a.value)
    if isinstance(a, Const) and isinstance(b, Const):
        return abs(a.value.to_float() - b.value.to_float()) <= tol
    # pi may round-trip as its decimal literal
    if isinstance(a, Pi) and isinstance(b, Const):
        return abs(b.value.to_float() - 3.141592653589793) <= 1e-12
    if isinstance(b, Pi) and isinstance(a, Const):
        return terms_structurally_equal(b, a, tol)
    if type(a) is not type(b):
        return False
    if isinstance(a, Var):
        return a.name == b.name
    if isinstance(a, Pi):
        return True
    if isinstance(a, (Add, Sub, Mul, Div)):
        return terms_structurally_equal(a.a, b.a, tol) and terms_structurally_equal(a.b, b.b, tol)
    if isinstance(a, Neg):
        return terms_structurally_equal(a.a, b.a, tol)
    if isinstance(a, (Sin, Cos)):
        return terms_structurally_equal(a.arg, b.arg, tol)
    raise TypeError(f"unknown term node {a!r}")


def constraints_structurally_equal(a: Constraint, b: Constraint, tol: float = 1e-12) -> bool:
    # Neg(Const c) serializes like Const(-c); normalize before comparing.
    if type(a) is not type(b):
        return False
    if isinstance(a, TrueC):
        return True
    if isinstance(a, (Eq, Le, Lt, Ge, Gt)):
        return terms_structurally_equal(a.a, b.a, tol) and terms_structurally_equal(a.b, b.b, tol)
    if isinstance(a, (And, Or)):
        return len(a.items) == len(b.items) and all(
            constraints_structurally_equal(x, y, tol) for x, y in zip(a.items, b.items)
        )
    if isinstance(a, Not):
        return constraints_structurally_equal(a.item, b.item, tol)
    if isinstance(a, Implies):
        return constraints_structurally_equal(a.a, b.a, tol) and constraints_structurally_equal(
            a.b, b.b, tol
        )
    raise TypeError(f"unknown constraint node {a!r}")
