"""CAS-neutral expression IR.

Expressions are immutable trees built from a small set of variants.  The
smart constructors (`add`, `mul`, `neg`, `power`) maintain the structural
invariants the rest of the pipeline relies on: n-ary sums/products are
flattened and never have fewer than two operands, numeric literals fold
eagerly, and negation of a literal folds into the literal itself.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Optional


class Expr:
    """Base class for all IR expression nodes."""

    __slots__ = ()


# Constant identifiers.
IMAGINARY_UNIT = "imaginary_unit"
EULER_E = "euler_e"
PI = "pi"
EULER_GAMMA = "euler_gamma"
INFINITY = "infinity"

CONSTANT_NAMES = frozenset({IMAGINARY_UNIT, EULER_E, PI, EULER_GAMMA, INFINITY})

# Relation kinds (the eight relations retained by the second extraction scan).
REL_EQ = "eq"
REL_LT = "lt"
REL_GT = "gt"
REL_NE = "ne"
REL_LE = "le"
REL_GE = "ge"
REL_TO = "to"
REL_EQUIV = "equiv"

RELATION_KINDS = (REL_EQ, REL_LT, REL_GT, REL_NE, REL_LE, REL_GE, REL_TO, REL_EQUIV)

# BigOp kinds.
OP_SUM = "sum"
OP_PROD = "prod"
OP_INT = "int"
OP_LIM = "lim"
OP_ANTIDER = "antider"


@dataclass(frozen=True, slots=True)
class Number(Expr):
    value: Fraction

    def __post_init__(self):
        if not isinstance(self.value, Fraction):
            object.__setattr__(self, "value", Fraction(self.value))


@dataclass(frozen=True, slots=True)
class Const(Expr):
    name: str

    def __post_init__(self):
        if self.name not in CONSTANT_NAMES:
            raise ValueError(f"unknown constant {self.name!r}")


@dataclass(frozen=True, slots=True)
class Var(Expr):
    name: str


@dataclass(frozen=True, slots=True)
class Add(Expr):
    terms: tuple[Expr, ...]


@dataclass(frozen=True, slots=True)
class Mul(Expr):
    factors: tuple[Expr, ...]


@dataclass(frozen=True, slots=True)
class Pow(Expr):
    base: Expr
    exponent: Expr


@dataclass(frozen=True, slots=True)
class Neg(Expr):
    operand: Expr


@dataclass(frozen=True, slots=True)
class FunctionApp(Expr):
    func: str
    params: tuple[Expr, ...] = ()
    args: tuple[Expr, ...] = ()


@dataclass(frozen=True, slots=True)
class Derivative(Expr):
    operand: Expr
    var: str
    order: int = 1

    def __post_init__(self):
        if self.order < 1:
            raise ValueError("derivative order must be >= 1")


@dataclass(frozen=True, slots=True)
class BigOp(Expr):
    kind: str
    var: str
    lo: Optional[Expr]
    hi: Optional[Expr]
    body: Expr


@dataclass(frozen=True, slots=True)
class Relation:
    kind: str
    lhs: Expr
    rhs: Expr

    def __post_init__(self):
        if self.kind not in RELATION_KINDS:
            raise ValueError(f"unknown relation kind {self.kind!r}")


ZERO = Number(Fraction(0))
ONE = Number(Fraction(1))
MINUS_ONE = Number(Fraction(-1))
HALF = Number(Fraction(1, 2))


def num(value) -> Number:
    return Number(Fraction(value))


def add(*terms: Expr) -> Expr:
    """Flattened n-ary sum with numeric folding."""
    flat: list[Expr] = []
    acc = Fraction(0)
    for t in terms:
        if isinstance(t, Add):
            inner = t.terms
        else:
            inner = (t,)
        for u in inner:
            if isinstance(u, Number):
                acc += u.value
            else:
                flat.append(u)
    if acc != 0:
        flat.append(Number(acc))
    if not flat:
        return ZERO
    if len(flat) == 1:
        return flat[0]
    return Add(tuple(flat))


def mul(*factors: Expr) -> Expr:
    """Flattened n-ary product with numeric folding."""
    flat: list[Expr] = []
    acc = Fraction(1)
    for f in factors:
        if isinstance(f, Mul):
            inner = f.factors
        else:
            inner = (f,)
        for u in inner:
            if isinstance(u, Number):
                acc *= u.value
            else:
                flat.append(u)
    if acc == 0:
        return ZERO
    if acc == -1 and len(flat) == 1:
        return neg(flat[0])
    if acc != 1:
        flat.insert(0, Number(acc))
    if not flat:
        return ONE
    if len(flat) == 1:
        return flat[0]
    return Mul(tuple(flat))


def neg(operand: Expr) -> Expr:
    if isinstance(operand, Number):
        return Number(-operand.value)
    if isinstance(operand, Neg):
        return operand.operand
    return Neg(operand)


def sub(lhs: Expr, rhs: Expr) -> Expr:
    return add(lhs, neg_term(rhs))


def neg_term(operand: Expr) -> Expr:
    """Negation that pushes through products so sums stay flat."""
    if isinstance(operand, Number):
        return Number(-operand.value)
    if isinstance(operand, Neg):
        return operand.operand
    if isinstance(operand, Mul):
        return mul(MINUS_ONE, operand)
    return Neg(operand)


def power(base: Expr, exponent: Expr) -> Expr:
    if isinstance(exponent, Number):
        if exponent.value == 1:
            return base
        if exponent.value == 0:
            return ONE
        if isinstance(base, Number) and exponent.value.denominator == 1:
            e = int(exponent.value)
            if e >= 0:
                return Number(base.value ** e)
            if base.value != 0:
                return Number(Fraction(1) / base.value ** (-e))
    return Pow(base, exponent)


def div(lhs: Expr, rhs: Expr) -> Expr:
    if isinstance(lhs, Number) and isinstance(rhs, Number) and rhs.value != 0:
        return Number(lhs.value / rhs.value)
    return mul(lhs, power(rhs, MINUS_ONE))


def children(expr: Expr) -> tuple[Expr, ...]:
    if isinstance(expr, Add):
        return expr.terms
    if isinstance(expr, Mul):
        return expr.factors
    if isinstance(expr, Pow):
        return (expr.base, expr.exponent)
    if isinstance(expr, Neg):
        return (expr.operand,)
    if isinstance(expr, FunctionApp):
        return expr.params + expr.args
    if isinstance(expr, Derivative):
        return (expr.operand,)
    if isinstance(expr, BigOp):
        out = []
        if expr.lo is not None:
            out.append(expr.lo)
        if expr.hi is not None:
            out.append(expr.hi)
        out.append(expr.body)
        return tuple(out)
    return ()


def walk(expr: Expr) -> Iterator[Expr]:
    """Pre-order traversal."""
    stack = [expr]
    while stack:
        node = stack.pop()
        yield node
        stack.extend(reversed(children(node)))


def free_variables(expr: Expr) -> set[str]:
    """Names of free variables; constants never contribute and BigOp
    binders are excluded from their own body."""
    out: set[str] = set()
    _collect_free(expr, frozenset(), out)
    return out


def _collect_free(expr: Expr, bound: frozenset[str], out: set[str]) -> None:
    if isinstance(expr, Var):
        if expr.name not in bound:
            out.add(expr.name)
        return
    if isinstance(expr, BigOp):
        # Bounds are evaluated in the enclosing scope; only the body binds.
        if expr.lo is not None:
            _collect_free(expr.lo, bound, out)
        if expr.hi is not None:
            _collect_free(expr.hi, bound, out)
        _collect_free(expr.body, bound | {expr.var}, out)
        return
    if isinstance(expr, Derivative):
        _collect_free(expr.operand, bound, out)
        if expr.var not in bound:
            out.add(expr.var)
        return
    for c in children(expr):
        _collect_free(c, bound, out)


def substitute(expr: Expr, mapping: dict[str, Expr]) -> Expr:
    """Capture-avoiding substitution of free variables."""
    if not mapping:
        return expr
    if isinstance(expr, Var):
        return mapping.get(expr.name, expr)
    if isinstance(expr, (Number, Const)):
        return expr
    if isinstance(expr, Add):
        return add(*(substitute(t, mapping) for t in expr.terms))
    if isinstance(expr, Mul):
        return mul(*(substitute(f, mapping) for f in expr.factors))
    if isinstance(expr, Pow):
        return power(substitute(expr.base, mapping), substitute(expr.exponent, mapping))
    if isinstance(expr, Neg):
        return neg(substitute(expr.operand, mapping))
    if isinstance(expr, FunctionApp):
        return FunctionApp(
            expr.func,
            tuple(substitute(p, mapping) for p in expr.params),
            tuple(substitute(a, mapping) for a in expr.args),
        )
    if isinstance(expr, Derivative):
        return Derivative(substitute(expr.operand, mapping), expr.var, expr.order)
    if isinstance(expr, BigOp):
        inner = {k: v for k, v in mapping.items() if k != expr.var}
        return BigOp(
            expr.kind,
            expr.var,
            substitute(expr.lo, mapping) if expr.lo is not None else None,
            substitute(expr.hi, mapping) if expr.hi is not None else None,
            substitute(expr.body, inner),
        )
    raise TypeError(f"not an Expr: {expr!r}")


def sort_key(expr: Expr) -> tuple:
    """Deterministic total order used for canonical printing and sorting."""
    if isinstance(expr, Number):
        return (0, str(expr.value))
    if isinstance(expr, Const):
        return (1, expr.name)
    if isinstance(expr, Var):
        return (2, expr.name)
    if isinstance(expr, Pow):
        return (3, sort_key(expr.base), sort_key(expr.exponent))
    if isinstance(expr, Mul):
        return (4,) + tuple(sort_key(f) for f in expr.factors)
    if isinstance(expr, Add):
        return (5,) + tuple(sort_key(t) for t in expr.terms)
    if isinstance(expr, Neg):
        return (6, sort_key(expr.operand))
    if isinstance(expr, FunctionApp):
        return (7, expr.func) + tuple(sort_key(c) for c in expr.params + expr.args)
    if isinstance(expr, Derivative):
        return (8, expr.var, expr.order, sort_key(expr.operand))
    if isinstance(expr, BigOp):
        key = [9, expr.kind, expr.var]
        for b in (expr.lo, expr.hi):
            key.append(sort_key(b) if b is not None else ("",))
        key.append(sort_key(expr.body))
        return tuple(key)
    raise TypeError(f"not an Expr: {expr!r}")
