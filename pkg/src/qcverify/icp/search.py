"""Delta-complete satisfiability search.

Three layers, applied to the formula's conjuncts:

1. presolve: eliminate defined variables (x = t chains), normalize every
   atom to canonical polynomial form, decide constant atoms against the
   delta threshold, and collapse degenerate disjunctions.  The encoder's
   state-evolution chains are all definitional, so most benchmark
   queries are decided entirely here, exactly.
2. case split: remaining disjunctions split the problem; each branch
   re-runs presolve (a branch may pin new variables).  Independent
   variable components solve separately and their models merge.
3. interval search: leaf conjunctions go to HC4-style branch-and-prune
   with outward-rounded intervals.  `unsat` is reported only when the
   search space is exhausted; `delta-sat` only when a point provably
   satisfies every atom within delta.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

from ..terms import (
    Add,
    And,
    Const,
    Constraint,
    Cos,
    Div,
    Eq,
    Ge,
    Gt,
    Le,
    Lt,
    Mul,
    Neg,
    Or,
    Pi,
    RealTerm,
    Sin,
    Sub,
    TrueC,
    Var,
    to_nnf,
)
from . import intervals as iv
from .intervals import Interval
from .poly import (
    Poly,
    PolyBlowup,
    from_term,
    has_variable_trig,
    poly_eval,
    poly_substitute,
    to_term,
)

DEFAULT_BOUND = 1e6


@dataclass
class Budget:
    max_boxes: int = 200_000
    max_branches: int = 60_000
    boxes: int = 0
    branches: int = 0

    def spend_box(self) -> bool:
        self.boxes += 1
        return self.boxes <= self.max_boxes

    def spend_branch(self) -> bool:
        self.branches += 1
        return self.branches <= self.max_branches


class GiveUp(Exception):
    """Search exceeded its budget or hit a case it cannot decide."""


# --- items ------------------------------------------------------------------


@dataclass
class Lit:
    """poly OP 0 with op in {eq, le, lt}."""

    op: str
    poly: Poly

    def variables(self) -> set[str]:
        return self.poly.variables()


@dataclass
class OrItem:
    disjuncts: list  # list of item-lists (each a conjunction)

    def variables(self) -> set[str]:
        out: set[str] = set()
        for conj in self.disjuncts:
            for item in conj:
                out |= item.variables()
        return out


FALSE = "false"


def _compile(c: Constraint, subst: dict[str, Poly], delta: float):
    """NNF constraint -> list of items, or FALSE."""
    if isinstance(c, TrueC):
        return []
    if isinstance(c, And):
        out = []
        for x in c.items:
            sub = _compile(x, subst, delta)
            if sub == FALSE:
                return FALSE
            out.extend(sub)
        return out
    if isinstance(c, Or):
        survivors = []
        for x in c.items:
            sub = _compile(x, subst, delta)
            if sub == FALSE:
                continue
            if not sub:
                return []  # one disjunct trivially true
            survivors.append(sub)
        if not survivors:
            return FALSE
        if len(survivors) == 1:
            return survivors[0]
        return [OrItem(survivors)]
    if isinstance(c, (Eq, Le, Lt, Ge, Gt)):
        poly = from_term(Sub(c.a, c.b), subst)
        if isinstance(c, Eq):
            op = "eq"
        elif isinstance(c, Le):
            op = "le"
        elif isinstance(c, Lt):
            op = "lt"
        elif isinstance(c, Ge):
            op, poly = "le", -poly
        else:
            op, poly = "lt", -poly
        return _decide_or_keep(Lit(op, poly), delta)
    raise TypeError(f"constraint {c!r} not in NNF")


def _decide_or_keep(lit: Lit, delta: float):
    if not lit.poly.is_constant():
        return [lit]
    if lit.poly.is_zero():
        # exact zero: eq/le hold exactly, strict lt is exactly false
        return FALSE if lit.op == "lt" else []
    value = lit.poly.constant_value()
    cut = delta * 0.5
    if lit.op == "eq":
        return [] if abs(value) <= cut else FALSE
    if lit.op == "le":
        return [] if value <= cut else FALSE
    return [] if value < cut else FALSE


def _substitute_lit(lit: Lit, subst: dict[str, Poly], delta: float):
    if not (lit.poly.variables() & subst.keys()):
        return [lit]
    rebuilt = poly_substitute(lit.poly, subst)
    return _decide_or_keep(Lit(lit.op, rebuilt), delta)


def _substitute_items(items: list, subst: dict[str, Poly], delta: float):
    out = []
    for item in items:
        if isinstance(item, Lit):
            sub = _substitute_lit(item, subst, delta)
            if sub == FALSE:
                return FALSE
            out.extend(sub)
        else:
            survivors = []
            for conj in item.disjuncts:
                new_conj = _substitute_items(conj, subst, delta)
                if new_conj == FALSE:
                    continue
                if not new_conj:
                    survivors = "true"
                    break
                survivors.append(new_conj)
            if survivors == "true":
                continue
            if not survivors:
                return FALSE
            if len(survivors) == 1:
                out.extend(survivors[0])
            else:
                out.append(OrItem(survivors))
    return out


def _solvable_definition(lit: Lit) -> tuple[str, Poly] | None:
    """x = rest when the poly is linear in some variable x (pure term c*x)."""
    if lit.op != "eq":
        return None
    if has_variable_trig(lit.poly):
        return None
    for mono, coeff in lit.poly.terms.items():
        if len(mono) == 1 and mono[0][1] == 1 and mono[0][0][0] == "v":
            name = mono[0][0][1]
            rest = Poly({m: c for m, c in lit.poly.terms.items() if m != mono})
            solved = rest.scale(Fraction(-1) / coeff)
            if name not in solved.variables():
                return name, solved
    return None


def presolve(items: list, subst: dict[str, Poly], delta: float):
    """Fixpoint of definition elimination + constant decision.

    Returns (items, subst) or (FALSE, subst).  `subst` is extended with
    resolved definitions (values reference only surviving variables).
    """
    for _ in range(60):
        new_defs: dict[str, Poly] = {}
        kept = []
        for item in items:
            if isinstance(item, Lit) and not (item.poly.variables() & new_defs.keys()):
                definition = _solvable_definition(item)
                if definition is not None and definition[0] not in subst and definition[0] not in new_defs:
                    name, value = definition
                    new_defs[name] = value
                    continue
            kept.append(item)
        if not new_defs:
            return kept, subst
        # resolve new definitions against each other and fold into subst
        for name in list(new_defs):
            value = new_defs[name]
            if value.variables() & new_defs.keys():
                others = {k: v for k, v in new_defs.items() if k != name}
                value = poly_substitute(value, others)
                if name in value.variables():
                    kept.append(Lit("eq", new_defs.pop(name) - Poly.var(name)))
                    continue
                new_defs[name] = value
        for old_name, old_value in list(subst.items()):
            if old_value.variables() & new_defs.keys():
                subst[old_name] = poly_substitute(old_value, new_defs)
        subst.update(new_defs)
        items = _substitute_items(kept, new_defs, delta)
        if items == FALSE:
            return FALSE, subst
    return items, subst


# --- component decomposition ------------------------------------------------


def _components(items: list) -> list[list]:
    parent: dict[str, str] = {}

    def find(x: str) -> str:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(a: str, b: str):
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[ra] = rb

    item_vars = []
    for item in items:
        vs = sorted(item.variables())
        item_vars.append(vs)
        for v in vs:
            parent.setdefault(v, v)
        for a, b in zip(vs, vs[1:]):
            union(a, b)
    groups: dict[str, list] = {}
    constants = []
    for item, vs in zip(items, item_vars):
        if not vs:
            constants.append(item)
            continue
        groups.setdefault(find(vs[0]), []).append(item)
    out = list(groups.values())
    if constants:
        # constant OrItems that survived compilation still need a decision
        out.append(constants)
    return out


# --- interval search (HC4 branch and prune) ---------------------------------


def _eval_term(t: RealTerm, box: dict[str, Interval], cache: dict) -> Interval:
    key = id(t)
    hit = cache.get(key)
    if hit is not None:
        return hit
    if isinstance(t, Var):
        out = box[t.name]
    elif isinstance(t, Const):
        v = t.value.to_float()
        out = Interval(math.nextafter(v, -math.inf), math.nextafter(v, math.inf))
        if t.value.is_rational() and float(t.value.r) == v and t.value.r.denominator & (t.value.r.denominator - 1) == 0:
            out = iv.point(v)  # dyadic rationals are exact in binary
    elif isinstance(t, Pi):
        out = iv.PI_INTERVAL
    elif isinstance(t, Add):
        out = iv.add(_eval_term(t.a, box, cache), _eval_term(t.b, box, cache))
    elif isinstance(t, Sub):
        out = iv.sub(_eval_term(t.a, box, cache), _eval_term(t.b, box, cache))
    elif isinstance(t, Mul):
        out = iv.mul(_eval_term(t.a, box, cache), _eval_term(t.b, box, cache))
    elif isinstance(t, Neg):
        out = iv.neg(_eval_term(t.a, box, cache))
    elif isinstance(t, Div):
        out = iv.div(_eval_term(t.a, box, cache), _eval_term(t.b, box, cache))
    elif isinstance(t, Sin):
        out = iv.sin(_eval_term(t.arg, box, cache))
    elif isinstance(t, Cos):
        out = iv.cos(_eval_term(t.arg, box, cache))
    else:
        raise TypeError(f"unknown term {t!r}")
    cache[key] = out
    return out


def _backward(t: RealTerm, target: Interval, box: dict[str, Interval], cache: dict) -> bool:
    """Narrow variables so t stays inside target; False when provably empty."""
    current = cache[id(t)]
    narrowed = iv.intersect(current, target)
    if narrowed is None:
        return False
    cache[id(t)] = narrowed
    if isinstance(t, Var):
        meet = iv.intersect(box[t.name], narrowed)
        if meet is None:
            return False
        box[t.name] = meet
        return True
    if isinstance(t, (Const, Pi)):
        return True
    if isinstance(t, Add):
        a, b = cache[id(t.a)], cache[id(t.b)]
        return _backward(t.a, iv.sub(narrowed, b), box, cache) and _backward(
            t.b, iv.sub(narrowed, cache[id(t.a)]), box, cache
        )
    if isinstance(t, Sub):
        a, b = cache[id(t.a)], cache[id(t.b)]
        return _backward(t.a, iv.add(narrowed, b), box, cache) and _backward(
            t.b, iv.sub(cache[id(t.a)], narrowed), box, cache
        )
    if isinstance(t, Mul):
        a, b = cache[id(t.a)], cache[id(t.b)]
        ok = True
        if not (b.lo <= 0.0 <= b.hi):
            ok = _backward(t.a, iv.div(narrowed, b), box, cache)
        if ok:
            a2 = cache[id(t.a)]
            if not (a2.lo <= 0.0 <= a2.hi):
                ok = _backward(t.b, iv.div(narrowed, a2), box, cache)
        return ok
    if isinstance(t, Neg):
        return _backward(t.a, iv.neg(narrowed), box, cache)
    if isinstance(t, Div):
        a, b = cache[id(t.a)], cache[id(t.b)]
        ok = _backward(t.a, iv.mul(narrowed, b), box, cache)
        if ok and not (narrowed.lo <= 0.0 <= narrowed.hi):
            ok = _backward(t.b, iv.div(cache[id(t.a)], narrowed), box, cache)
        return ok
    if isinstance(t, (Sin, Cos)):
        return _backward_trig(t, narrowed, box, cache)
    raise TypeError(f"unknown term {t!r}")


def _backward_trig(t: RealTerm, target: Interval, box: dict[str, Interval], cache: dict) -> bool:
    arg = cache[id(t.arg)]
    if arg.width() > 4 * math.pi or arg.lo == -math.inf or arg.hi == math.inf:
        return True  # too wide to invert usefully; forward pruning still applies
    lo = max(-1.0, target.lo)
    hi = min(1.0, target.hi)
    if lo > hi:
        return False
    clipped = Interval(lo, hi)
    if isinstance(t, Sin):
        principal = iv.asin_range(clipped)  # within [-pi/2, pi/2]
        pieces = [principal, Interval(math.pi - principal.hi, math.pi - principal.lo)]
    else:
        principal = iv.acos_range(clipped)  # within [0, pi]
        pieces = [principal, Interval(-principal.hi, -principal.lo)]
    hulls = []
    k_lo = math.floor(arg.lo / (2 * math.pi)) - 1
    k_hi = math.ceil(arg.hi / (2 * math.pi)) + 1
    for k in range(k_lo, k_hi + 1):
        shift = 2 * math.pi * k
        for piece in pieces:
            shifted = Interval(piece.lo + shift - 1e-12, piece.hi + shift + 1e-12)
            meet = iv.intersect(shifted, arg)
            if meet is not None:
                hulls.append(meet)
    if not hulls:
        return False
    merged = hulls[0]
    for piece in hulls[1:]:
        merged = iv.hull(merged, piece)
    return _backward(t.arg, merged, box, cache)


@dataclass
class IcpResult:
    verdict: str  # unsat | delta-sat | unknown
    box: dict[str, Interval] | None = None


_TARGETS = {"eq": Interval(0.0, 0.0), "le": Interval(-math.inf, 0.0), "lt": Interval(-math.inf, 0.0)}


def icp_solve(lits: list[Lit], delta: float, budget: Budget) -> IcpResult:
    terms = [(lit.op, to_term(lit.poly)) for lit in lits]
    names = sorted(set().union(*[lit.variables() for lit in lits]))
    box = {name: Interval(-DEFAULT_BOUND, DEFAULT_BOUND) for name in names}
    min_width = max(delta * 1e-3, 1e-12)
    stack = [box]
    saw_unknown = False
    while stack:
        if not budget.spend_box():
            raise GiveUp("box budget exhausted")
        box = stack.pop()
        pruned = _contract(terms, box, delta)
        if pruned == "empty":
            continue
        if pruned == "delta-sat":
            return IcpResult("delta-sat", box)
        # split the widest variable
        widest, width = None, min_width
        for name, interval in box.items():
            w = interval.width() / (1.0 + abs(interval.mid()))
            if w > width:
                widest, width = name, w
        if widest is None:
            if _midpoint_check(terms, box, delta):
                return IcpResult("delta-sat", box)
            saw_unknown = True
            continue
        interval = box[widest]
        mid = interval.mid()
        left = dict(box)
        left[widest] = Interval(interval.lo, mid)
        right = dict(box)
        right[widest] = Interval(mid, interval.hi)
        stack.append(left)
        stack.append(right)
    return IcpResult("unknown") if saw_unknown else IcpResult("unsat")


def _contract(terms, box: dict[str, Interval], delta: float):
    cut = delta * 0.98
    for _ in range(30):
        before = sum(min(i.width(), 1e9) for i in box.values())
        all_delta_true = True
        for op, term in terms:
            cache: dict = {}
            root = _eval_term(term, box, cache)
            if op == "eq" and (root.lo > 0.0 or root.hi < 0.0):
                return "empty"
            if op == "le" and root.lo > 0.0:
                return "empty"
            if op == "lt" and root.lo >= 0.0:
                return "empty"
            if op == "eq":
                if not (-cut <= root.lo and root.hi <= cut):
                    all_delta_true = False
            else:
                if not root.hi <= cut:
                    all_delta_true = False
            if not _backward(term, _TARGETS[op], box, cache):
                return "empty"
        if all_delta_true:
            return "delta-sat"
        after = sum(min(i.width(), 1e9) for i in box.values())
        if before - after <= 0.01 * max(before, 1e-9):
            return "open"
    return "open"


def _midpoint_check(terms, box: dict[str, Interval], delta: float) -> bool:
    env = {name: interval.mid() for name, interval in box.items()}
    from ..terms import evaluate

    cut = delta * 0.99
    for op, term in terms:
        value = evaluate(term, env)
        if op == "eq" and abs(value) > cut:
            return False
        if op in ("le", "lt") and value > cut:
            return False
    return True


# --- top-level search -------------------------------------------------------


@dataclass
class SolveResult:
    verdict: str  # unsat | delta-sat | unknown
    model: dict[str, Interval] = field(default_factory=dict)
    subst: dict[str, Poly] = field(default_factory=dict)


def _or_score(item: OrItem) -> tuple:
    pins = 0
    total = 0
    for conj in item.disjuncts:
        for sub in conj:
            total += 1
            if isinstance(sub, Lit) and sub.op == "eq" and len(sub.poly.variables()) <= 1:
                pins += 1
    pin_fraction = pins / total if total else 0.0
    return (len(item.disjuncts), -pin_fraction)


def solve_items(items: list, subst: dict[str, Poly], delta: float, budget: Budget) -> SolveResult:
    items, subst = presolve(items, subst, delta)
    if items == FALSE:
        return SolveResult("unsat", subst=subst)
    if not items:
        return SolveResult("delta-sat", {}, subst)
    components = _components(items)
    if len(components) > 1:
        model: dict[str, Interval] = {}
        merged_subst = dict(subst)
        saw_unknown = False
        for component in components:
            result = solve_items(component, dict(subst), delta, budget)
            if result.verdict == "unsat":
                return SolveResult("unsat", subst=subst)
            if result.verdict == "unknown":
                saw_unknown = True
                continue
            model.update(result.model)
            merged_subst.update(result.subst)
        if saw_unknown:
            return SolveResult("unknown", subst=merged_subst)
        return SolveResult("delta-sat", model, merged_subst)
    items = components[0]
    or_items = [x for x in items if isinstance(x, OrItem)]
    if or_items:
        if not budget.spend_branch():
            raise GiveUp("branch budget exhausted")
        chosen = min(or_items, key=_or_score)
        rest = [x for x in items if x is not chosen]
        saw_unknown = False
        for disjunct in chosen.disjuncts:
            result = solve_items(rest + disjunct, dict(subst), delta, budget)
            if result.verdict == "delta-sat":
                return result
            if result.verdict == "unknown":
                saw_unknown = True
        return SolveResult("unknown" if saw_unknown else "unsat", subst=subst)
    lits = [x for x in items if isinstance(x, Lit)]
    result = icp_solve(lits, delta, budget)
    if result.verdict == "delta-sat":
        return SolveResult("delta-sat", result.box, subst)
    return SolveResult(result.verdict, subst=subst)


def _sqrt2_roots(asserts: list[Constraint]) -> set[str]:
    """Variables asserted to be the nonnegative square root of two.

    The emitter writes irrational constants through such a definition;
    recognizing it restores exact sqrt(2) arithmetic after parsing.
    """
    from fractions import Fraction as _F

    from ..terms import Exact as _Exact

    squared: set[str] = set()
    nonneg: set[str] = set()
    for c in asserts:
        if isinstance(c, Eq):
            for lhs, rhs in ((c.a, c.b), (c.b, c.a)):
                if (
                    isinstance(lhs, Mul)
                    and isinstance(lhs.a, Var)
                    and isinstance(lhs.b, Var)
                    and lhs.a.name == lhs.b.name
                    and isinstance(rhs, Const)
                    and rhs.value == _Exact(_F(2))
                ):
                    squared.add(lhs.a.name)
        if (
            isinstance(c, (Ge, Gt))
            and isinstance(c.a, Var)
            and isinstance(c.b, Const)
            and c.b.value.is_zero()
        ):
            nonneg.add(c.a.name)
    return squared & nonneg


def _replace_var(t: RealTerm, names: set[str], value: RealTerm) -> RealTerm:
    if isinstance(t, Var):
        return value if t.name in names else t
    if isinstance(t, (Add, Sub, Mul, Div)):
        return type(t)(_replace_var(t.a, names, value), _replace_var(t.b, names, value))
    if isinstance(t, Neg):
        return Neg(_replace_var(t.a, names, value))
    if isinstance(t, (Sin, Cos)):
        return type(t)(_replace_var(t.arg, names, value))
    return t


def _apply_sqrt2(c: Constraint, names: set[str]) -> Constraint:
    from ..terms import Exact as _Exact

    root = Const(_Exact.sqrt2())

    def walk(c: Constraint) -> Constraint:
        if isinstance(c, (Eq, Le, Lt, Ge, Gt)):
            return type(c)(_replace_var(c.a, names, root), _replace_var(c.b, names, root))
        if isinstance(c, And):
            return And([walk(x) for x in c.items])
        if isinstance(c, Or):
            return Or([walk(x) for x in c.items])
        return c

    return walk(c)


def solve(asserts: list[Constraint], declared: list[str], delta: float, budget: Budget | None = None) -> SolveResult:
    """Decide the conjunction of asserts; the model covers every declared name."""
    budget = budget or Budget()
    subst: dict[str, Poly] = {}
    roots = _sqrt2_roots(asserts)
    if roots:
        asserts = [_apply_sqrt2(c, roots) for c in asserts]
    try:
        items = []
        for c in asserts:
            compiled = _compile(to_nnf(c, True), subst, delta)
            if compiled == FALSE:
                return SolveResult("unsat")
            items.extend(compiled)
        result = solve_items(items, subst, delta, budget)
    except PolyBlowup:
        return SolveResult("unknown")
    except GiveUp:
        return SolveResult("unknown")
    if result.verdict != "delta-sat":
        return result
    model = dict(result.model)
    env = {name: interval.mid() for name, interval in model.items()}
    for name in roots:
        value = math.sqrt(2.0)
        model[name] = Interval(value, value)
        env[name] = value
    for name in declared:
        if name not in model and name not in result.subst:
            model[name] = Interval(0.0, 0.0)
            env[name] = 0.0
    for name, poly in result.subst.items():
        missing = [v for v in poly.variables() if v not in env]
        for v in missing:
            env[v] = 0.0
            model[v] = Interval(0.0, 0.0)
        value = poly_eval(poly, env)
        env[name] = value
        model[name] = Interval(value, value)
    return SolveResult("delta-sat", model, result.subst)
