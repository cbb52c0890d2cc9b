"""Canonical rational normal form over function atoms.

Expressions normalize to a fraction of multivariate Laurent polynomials
whose indeterminates ("atoms") are variables, constants, function
applications with canonicalized arguments, and powers with symbolic
exponents.  Like atoms merge by adding exponents, so exponent laws
(e^x e^y = e^{x+y}) fall out of collection; powers of the imaginary unit
fold modulo four; even powers of sin/sinh eliminate through the
Pythagorean relations; gamma arguments shift to a canonical fractional
part (the recurrence Gamma(z+1) = z Gamma(z) run to a fixpoint); and
gamma pairs with arguments summing to an integer contract through the
reflection formula.  An expression equals zero exactly when its
normalized numerator is the empty polynomial.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Union

from . import ir
from .errors import BudgetExceeded, SymbolicError
from .ir import (
    Add,
    BigOp,
    Const,
    Derivative,
    Expr,
    FunctionApp,
    Mul,
    Neg,
    Number,
    Pow,
    Var,
)

ExpKey = Union[Fraction, Expr]
Mono = tuple[tuple[Expr, ExpKey], ...]
Poly = dict[Mono, Fraction]

EMPTY_MONO: Mono = ()

ODD_FUNCTIONS = frozenset({
    "sin", "tan", "csc", "cot", "sinh", "tanh", "csch", "coth",
    "arcsin", "arctan", "erf",
})
EVEN_FUNCTIONS = frozenset({"cos", "sec", "cosh", "sech"})

BESSEL_FAMILIES = frozenset({"bessel_j", "bessel_y", "bessel_i", "bessel_k"})

_MAX_GAMMA_SHIFT = 32
_MAX_HYPER_UNROLL = 12
_MAX_BIGOP_UNROLL = 64


class NormContext:
    """Step budget and memoization shared across one normalization."""

    __slots__ = ("budget", "steps", "power_cap", "_canon_memo")

    def __init__(self, budget: int = 200_000, power_cap: int = 64):
        self.budget = budget
        self.steps = 0
        self.power_cap = power_cap
        self._canon_memo: dict[Expr, Expr] = {}

    def tick(self, n: int = 1) -> None:
        self.steps += n
        if self.steps > self.budget:
            raise BudgetExceeded(f"rewrite budget of {self.budget} steps exhausted")


@dataclass(frozen=True, slots=True)
class RatForm:
    num: tuple[tuple[Mono, Fraction], ...]
    den: tuple[tuple[Mono, Fraction], ...]

    def num_poly(self) -> Poly:
        return dict(self.num)

    def den_poly(self) -> Poly:
        return dict(self.den)


def _freeze(num: Poly, den: Poly) -> RatForm:
    return RatForm(
        tuple(sorted(num.items(), key=lambda kv: _mono_sort_key(kv[0]))),
        tuple(sorted(den.items(), key=lambda kv: _mono_sort_key(kv[0]))),
    )


ONE_POLY: Poly = {EMPTY_MONO: Fraction(1)}


def const_poly(value: Fraction) -> Poly:
    return {} if value == 0 else {EMPTY_MONO: Fraction(value)}


# --- monomial and polynomial arithmetic ---

def _exp_sortable(exp: ExpKey):
    if isinstance(exp, Fraction):
        return (0, -exp)  # larger powers sort first within equal atoms
    return (1,) + ir.sort_key(exp)


def _mono_sort_key(mono: Mono):
    degree = sum((e for _, e in mono if isinstance(e, Fraction)), Fraction(0))
    return (-degree, tuple((ir.sort_key(a), _exp_sortable(e)) for a, e in mono))


def _exp_to_expr(exp: ExpKey) -> Expr:
    return Number(exp) if isinstance(exp, Fraction) else exp


def _exp_add(a: ExpKey, b: ExpKey, ctx: NormContext) -> ExpKey:
    if isinstance(a, Fraction) and isinstance(b, Fraction):
        return a + b
    total = norm(ir.add(_exp_to_expr(a), _exp_to_expr(b)), ctx)
    return _as_exp_key(emit(total))


def _exp_negate(exp: ExpKey, ctx: NormContext) -> ExpKey:
    if isinstance(exp, Fraction):
        return -exp
    return _as_exp_key(emit(norm(ir.neg_term(exp), ctx)))


def _exp_scale(exp: ExpKey, factor: Fraction, ctx: NormContext) -> ExpKey:
    if isinstance(exp, Fraction):
        return exp * factor
    return _as_exp_key(emit(norm(ir.mul(Number(factor), exp), ctx)))


def _as_exp_key(expr: Expr) -> ExpKey:
    return expr.value if isinstance(expr, Number) else expr


def _exact_rational_pow(base: Fraction, exp: Fraction) -> Optional[Fraction]:
    """base**exp when the result is exactly rational, else None."""
    if exp.denominator == 1:
        e = int(exp)
        if e >= 0:
            return base ** e
        return None if base == 0 else Fraction(1) / base ** (-e)
    if base < 0:
        return None  # principal value is not real
    root = exp.denominator

    def iroot(n: int) -> Optional[int]:
        if n == 0:
            return 0
        r = round(n ** (1.0 / root))
        for cand in (r - 1, r, r + 1):
            if cand >= 0 and cand ** root == n:
                return cand
        return None

    pn = iroot(base.numerator)
    pd = iroot(base.denominator)
    if pn is None or pd is None:
        return None
    return Fraction(pn, pd) ** exp.numerator


def _post_mono(entries: dict[Expr, ExpKey], coef: Fraction, ctx: NormContext) -> Poly:
    """Fold special atoms of a raw monomial and expand Pythagorean powers."""
    ctx.tick()
    if coef == 0:
        return {}
    factors: list[Poly] = []
    clean: dict[Expr, ExpKey] = {}
    for atom, exp in entries.items():
        if isinstance(exp, Fraction) and exp == 0:
            continue
        if isinstance(atom, Const) and atom.name == ir.IMAGINARY_UNIT and \
                isinstance(exp, Fraction) and exp.denominator == 1:
            r = int(exp) % 4
            if r == 0:
                continue
            if r == 2:
                coef = -coef
                continue
            if r == 3:
                coef = -coef
            clean[atom] = Fraction(1)
            continue
        if isinstance(atom, Number) and isinstance(exp, Fraction):
            folded = _exact_rational_pow(atom.value, exp)
            if folded is not None:
                coef *= folded
                continue
        if isinstance(atom, (Add, Mul)) and isinstance(exp, Fraction) and \
                exp.denominator == 1:
            # A compound base whose exponents merged to an integer
            # re-expands into a genuine polynomial when that is exact.
            r = _rat_pow(_norm(atom, ctx), int(exp), ctx)
            if r.den == ONE_POLY:
                factors.append(r.num)
                continue
        if isinstance(atom, Pow) and isinstance(exp, Fraction) and \
                exp.denominator == 1 and exp != 1:
            # (w^e)^k = w^(e k) holds for integer k on principal branches.
            combined = _norm(
                Pow(atom.base, ir.mul(Number(exp), atom.exponent)), ctx
            )
            if combined.den == ONE_POLY:
                factors.append(combined.num)
                continue
        if isinstance(atom, FunctionApp) and atom.func in ("sin", "sinh") and \
                isinstance(exp, Fraction) and exp.denominator == 1 and exp >= 2:
            k, r = divmod(int(exp), 2)
            u = atom.args[0]
            cos_atom = FunctionApp("cos" if atom.func == "sin" else "cosh", (), (u,))
            square: Poly = {
                EMPTY_MONO: Fraction(1) if atom.func == "sin" else Fraction(-1),
                ((cos_atom, Fraction(2)),):
                    Fraction(-1) if atom.func == "sin" else Fraction(1),
            }
            factors.append(poly_pow(square, k, ctx))
            if r:
                clean[atom] = Fraction(1)
            continue
        if atom in clean:
            clean[atom] = _exp_add(clean[atom], exp, ctx)
        else:
            clean[atom] = exp
    clean = {a: e for a, e in clean.items() if not (isinstance(e, Fraction) and e == 0)}
    if coef == 0:
        return {}
    mono = tuple(sorted(clean.items(), key=lambda kv: ir.sort_key(kv[0])))
    result: Poly = {mono: coef}
    for f in factors:
        result = poly_mul(result, f, ctx)
    return result


def mono_mul(m1: Mono, m2: Mono, coef: Fraction, ctx: NormContext) -> Poly:
    entries: dict[Expr, ExpKey] = {}
    for atom, exp in m1 + m2:
        if atom in entries:
            entries[atom] = _exp_add(entries[atom], exp, ctx)
        else:
            entries[atom] = exp
    return _post_mono(entries, coef, ctx)


def poly_add(p: Poly, q: Poly) -> Poly:
    out = dict(p)
    for mono, c in q.items():
        nc = out.get(mono, Fraction(0)) + c
        if nc == 0:
            out.pop(mono, None)
        else:
            out[mono] = nc
    return out


def poly_mul(p: Poly, q: Poly, ctx: NormContext) -> Poly:
    out: Poly = {}
    for m1, c1 in p.items():
        for m2, c2 in q.items():
            ctx.tick()
            out = poly_add(out, mono_mul(m1, m2, c1 * c2, ctx))
    return out


def poly_pow(p: Poly, n: int, ctx: NormContext) -> Poly:
    if n < 0:
        raise ValueError("poly_pow needs a nonnegative exponent")
    if n > ctx.power_cap:
        raise BudgetExceeded(f"power {n} exceeds the expansion cap {ctx.power_cap}")
    result = dict(ONE_POLY)
    base = p
    while n:
        if n & 1:
            result = poly_mul(result, base, ctx)
        n >>= 1
        if n:
            base = poly_mul(base, base, ctx)
    return result


def _mono_inverse(mono: Mono, ctx: NormContext) -> Mono:
    return tuple((atom, _exp_negate(exp, ctx)) for atom, exp in mono)


class _ZeroDenominator(SymbolicError):
    pass


@dataclass
class _Rat:
    num: Poly
    den: Poly


def _rat_const(value: Fraction) -> _Rat:
    return _Rat(const_poly(value), dict(ONE_POLY))


def _rat_add(a: _Rat, b: _Rat, ctx: NormContext) -> _Rat:
    if a.den == b.den:
        return _Rat(poly_add(a.num, b.num), dict(a.den))
    return _Rat(
        poly_add(poly_mul(a.num, b.den, ctx), poly_mul(b.num, a.den, ctx)),
        poly_mul(a.den, b.den, ctx),
    )


def _rat_mul(a: _Rat, b: _Rat, ctx: NormContext) -> _Rat:
    return _Rat(poly_mul(a.num, b.num, ctx), poly_mul(a.den, b.den, ctx))


def _rat_inv(a: _Rat, ctx: NormContext) -> _Rat:
    if not a.num:
        raise _ZeroDenominator("division by an expression that normalizes to zero")
    if len(a.num) == 1:
        (mono, coef), = a.num.items()
        inv_poly = {_mono_inverse(mono, ctx): Fraction(1) / coef}
        return _Rat(poly_mul(a.den, inv_poly, ctx), dict(ONE_POLY))
    return _Rat(dict(a.den), dict(a.num))


def _rat_pow(a: _Rat, n: int, ctx: NormContext) -> _Rat:
    if n < 0:
        return _rat_pow(_rat_inv(a, ctx), -n, ctx)
    return _Rat(poly_pow(a.num, n, ctx), poly_pow(a.den, n, ctx))


def _atom_rat(atom: Expr, exp: ExpKey = Fraction(1)) -> _Rat:
    if isinstance(exp, Fraction) and exp == 0:
        return _rat_const(Fraction(1))
    return _Rat({((atom, exp),): Fraction(1)}, dict(ONE_POLY))


# --- normalization ---

def norm(expr: Expr, ctx: Optional[NormContext] = None) -> RatForm:
    ctx = ctx or NormContext()
    rat = _norm(expr, ctx)
    rat = _gamma_reflect(rat, ctx)
    return _freeze(rat.num, rat.den)


def _norm(expr: Expr, ctx: NormContext) -> _Rat:
    ctx.tick()
    if isinstance(expr, Number):
        return _rat_const(expr.value)
    if isinstance(expr, Const):
        return _atom_rat(expr)
    if isinstance(expr, Var):
        return _atom_rat(expr)
    if isinstance(expr, Add):
        total = _rat_const(Fraction(0))
        for t in expr.terms:
            total = _rat_add(total, _norm(t, ctx), ctx)
        return total
    if isinstance(expr, Mul):
        prod = _rat_const(Fraction(1))
        for f in expr.factors:
            prod = _rat_mul(prod, _norm(f, ctx), ctx)
        return prod
    if isinstance(expr, Neg):
        return _rat_mul(_rat_const(Fraction(-1)), _norm(expr.operand, ctx), ctx)
    if isinstance(expr, Pow):
        return _norm_pow(expr, ctx)
    if isinstance(expr, FunctionApp):
        return _norm_function(expr, ctx)
    if isinstance(expr, Derivative):
        return _atom_rat(Derivative(canon(expr.operand, ctx), expr.var, expr.order))
    if isinstance(expr, BigOp):
        return _norm_bigop(expr, ctx)
    raise SymbolicError(f"cannot normalize {expr!r}")


def _single_unit_mono(rat: _Rat) -> Optional[Mono]:
    """The monomial when the form is exactly one monomial over 1."""
    if rat.den == ONE_POLY and len(rat.num) == 1:
        (mono, coef), = rat.num.items()
        if coef == 1:
            return mono
    return None


def _norm_pow(expr: Pow, ctx: NormContext) -> _Rat:
    exp_rat = _norm(expr.exponent, ctx)
    exp_expr = emit(_freeze(exp_rat.num, exp_rat.den))
    base_rat = _norm(expr.base, ctx)
    if isinstance(exp_expr, Number) and exp_expr.value.denominator == 1:
        return _rat_pow(base_rat, int(exp_expr.value), ctx)
    # Non-integer exponent: principal value.
    exp_key = _as_exp_key(exp_expr)
    if not base_rat.num:
        if isinstance(exp_expr, Number) and exp_expr.value > 0:
            return _rat_const(Fraction(0))
        raise _ZeroDenominator("zero base with a non-positive exponent")
    base_expr = emit(_freeze(base_rat.num, base_rat.den))
    if base_expr == ir.ONE:
        return _rat_const(Fraction(1))
    if isinstance(base_expr, Number):
        if isinstance(exp_key, Fraction):
            folded = _exact_rational_pow(base_expr.value, exp_key)
            if folded is not None:
                return _rat_const(folded)
        if base_expr.value > 0:
            return _atom_rat(base_expr, exp_key)
        return _atom_rat(Pow(base_expr, exp_expr))
    if base_rat.den == ONE_POLY and len(base_rat.num) == 1:
        (m, coef), = base_rat.num.items()
        if coef > 0:
            # (c * x * y)^s = c^s x^s y^s is branch-safe for positive
            # rational c and splits each unit-exponent atom.
            out = _rat_const(Fraction(1))
            if coef != 1:
                out = _rat_mul(out, _norm_pow(Pow(Number(coef), exp_expr), ctx), ctx)
            for atom, aexp in m:
                if isinstance(aexp, Fraction) and aexp == 1:
                    out = _rat_mul(out, _atom_rat(atom, exp_key), ctx)
                else:
                    # Nested non-unit power stays whole (branch safety).
                    out = _rat_mul(
                        out, _atom_rat(_pow_expr(atom, aexp), exp_key), ctx
                    )
            return out
    return _atom_rat(base_expr, exp_key)


def _pow_expr(atom: Expr, exp: ExpKey) -> Expr:
    return ir.power(atom, _exp_to_expr(exp))


def canon(expr: Expr, ctx: NormContext) -> Expr:
    """Canonical IR of an expression (memoized)."""
    cached = ctx._canon_memo.get(expr)
    if cached is not None:
        return cached
    rat = _norm(expr, ctx)
    result = emit(_freeze(rat.num, rat.den))
    ctx._canon_memo[expr] = result
    return result


# --- function-atom canonicalization ---

def _norm_function(expr: FunctionApp, ctx: NormContext) -> _Rat:
    func = expr.func
    if func == "binomial":
        a, b = expr.args
        return _norm(
            ir.div(
                FunctionApp("gamma", (), (ir.add(a, ir.ONE),)),
                ir.mul(
                    FunctionApp("gamma", (), (ir.add(b, ir.ONE),)),
                    FunctionApp("gamma", (), (ir.add(ir.sub(a, b), ir.ONE),)),
                ),
            ),
            ctx,
        )
    if func == "pochhammer":
        a, n = expr.args
        n_c = canon(n, ctx)
        if isinstance(n_c, Number) and n_c.value.denominator == 1 and \
                0 <= n_c.value <= _MAX_HYPER_UNROLL * 2:
            prod = _rat_const(Fraction(1))
            for k in range(int(n_c.value)):
                prod = _rat_mul(prod, _norm(ir.add(a, ir.num(k)), ctx), ctx)
            return prod
        return _norm(
            ir.div(
                FunctionApp("gamma", (), (ir.add(a, n),)),
                FunctionApp("gamma", (), (a,)),
            ),
            ctx,
        )
    if func == "gamma":
        return _norm_gamma(expr.args[0], ctx)
    if func == "genhyper":
        return _norm_genhyper(expr, ctx)
    if func == "elliptic_k" or func == "elliptic_e":
        m = canon(expr.args[0], ctx)
        if m == ir.ZERO:
            return _norm(ir.div(Const(ir.PI), ir.num(2)), ctx)
        if func == "elliptic_e" and m == ir.ONE:
            return _rat_const(Fraction(1))
        return _atom_rat(FunctionApp(func, (), (m,)))
    params = tuple(canon(p, ctx) for p in expr.params)
    args = tuple(canon(a, ctx) for a in expr.args)
    if func in ODD_FUNCTIONS and len(args) == 1 and not params:
        arg_rat = _norm(args[0], ctx)
        if _leading_negative(arg_rat):
            flipped = emit(_freeze(*_neg_parts(arg_rat, ctx)))
            return _rat_mul(
                _rat_const(Fraction(-1)),
                _atom_rat(FunctionApp(func, (), (flipped,))),
                ctx,
            )
    if func in EVEN_FUNCTIONS and len(args) == 1 and not params:
        arg_rat = _norm(args[0], ctx)
        if _leading_negative(arg_rat):
            flipped = emit(_freeze(*_neg_parts(arg_rat, ctx)))
            return _atom_rat(FunctionApp(func, (), (flipped,)))
    return _atom_rat(FunctionApp(func, params, args))


def _neg_parts(rat: _Rat, ctx: NormContext) -> tuple[Poly, Poly]:
    return poly_mul(rat.num, const_poly(Fraction(-1)), ctx), rat.den


def _leading_negative(rat: _Rat) -> bool:
    if not rat.num:
        return False
    lead = min(rat.num.items(), key=lambda kv: _mono_sort_key(kv[0]))
    return lead[1] < 0


def _poly_const_part(p: Poly) -> Fraction:
    return p.get(EMPTY_MONO, Fraction(0))


def _norm_gamma(arg: Expr, ctx: NormContext) -> _Rat:
    arg_rat = _norm(arg, ctx)
    if arg_rat.den != ONE_POLY:
        return _atom_rat(FunctionApp("gamma", (), (emit(_freeze(arg_rat.num, arg_rat.den)),)))
    poly = arg_rat.num
    c = _poly_const_part(poly)
    nonconst = {m: v for m, v in poly.items() if m != EMPTY_MONO}
    if not nonconst:
        return _gamma_constant(c, ctx)
    shift = _floor_fraction(c)
    if shift == 0 or abs(shift) > _MAX_GAMMA_SHIFT:
        return _atom_rat(FunctionApp("gamma", (), (emit(_freeze(poly, ONE_POLY)),)))
    rep_poly = poly_add(poly, const_poly(Fraction(-shift)))
    atom = FunctionApp("gamma", (), (emit(_freeze(rep_poly, ONE_POLY)),))
    result = _atom_rat(atom)
    if shift > 0:
        # Gamma(u + k) = (u+k-1)...(u) Gamma(u)
        for j in range(1, shift + 1):
            factor = _Rat(poly_add(poly, const_poly(Fraction(-j))), dict(ONE_POLY))
            result = _rat_mul(result, factor, ctx)
    else:
        # Gamma(u - k) = Gamma(u) / ((u-k)(u-k+1)...(u-1))
        for j in range(0, -shift):
            factor = _Rat(poly_add(poly, const_poly(Fraction(j))), dict(ONE_POLY))
            result = _rat_mul(result, _rat_inv(factor, ctx), ctx)
    return result


def _floor_fraction(c: Fraction) -> int:
    return c.numerator // c.denominator


def _gamma_constant(c: Fraction, ctx: NormContext) -> _Rat:
    if c.denominator == 1:
        if c >= 1:
            value = Fraction(1)
            for k in range(2, int(c)):
                value *= k
            return _rat_const(value)
        # Pole; keep the atom so evaluation reports it.
        return _atom_rat(FunctionApp("gamma", (), (Number(c),)))
    shift = _floor_fraction(c)
    rep = c - shift
    result: _Rat
    if rep == Fraction(1, 2):
        result = _atom_rat(Const(ir.PI), Fraction(1, 2))
    else:
        result = _atom_rat(FunctionApp("gamma", (), (Number(rep),)))
    if shift > 0:
        value = Fraction(1)
        for j in range(1, shift + 1):
            value *= c - j
        return _rat_mul(result, _rat_const(value), ctx)
    if shift < 0:
        value = Fraction(1)
        for j in range(0, -shift):
            value *= c + j
        return _rat_mul(result, _rat_inv(_rat_const(value), ctx), ctx)
    return result


def _norm_genhyper(expr: FunctionApp, ctx: NormContext) -> _Rat:
    p = int(expr.params[0].value)  # type: ignore[union-attr]
    q = int(expr.params[1].value)  # type: ignore[union-attr]
    numerator = [canon(a, ctx) for a in expr.args[:p]]
    denominator = [canon(a, ctx) for a in expr.args[p:p + q]]
    z = canon(expr.args[p + q], ctx)
    # Upper-parameter zero terminates the series at its first term.
    if any(a == ir.ZERO for a in numerator):
        return _rat_const(Fraction(1))
    if z == ir.ZERO:
        return _rat_const(Fraction(1))
    # Matching parameters cancel.
    num_left: list[Expr] = []
    den_left = list(denominator)
    for a in numerator:
        if a in den_left:
            den_left.remove(a)
        else:
            num_left.append(a)
    numerator, denominator = num_left, den_left
    p, q = len(numerator), len(denominator)
    if p == 0 and q == 0:
        return _norm(ir.power(Const(ir.EULER_E), z), ctx)
    terminating = [
        int(-a.value) for a in numerator
        if isinstance(a, Number) and a.value.denominator == 1 and a.value <= 0
    ]
    if terminating and min(terminating) <= _MAX_HYPER_UNROLL:
        n = min(terminating)
        total: Expr = ir.ZERO
        for k in range(n + 1):
            term: Expr = ir.div(ir.power(z, ir.num(k)), _factorial_expr(k))
            for a in numerator:
                term = ir.mul(term, FunctionApp("pochhammer", (), (a, ir.num(k))))
            for b in denominator:
                term = ir.div(term, FunctionApp("pochhammer", (), (b, ir.num(k))))
            total = ir.add(total, term)
        return _norm(total, ctx)
    atom = FunctionApp(
        "genhyper",
        (ir.num(p), ir.num(q)),
        tuple(sorted(numerator, key=ir.sort_key))
        + tuple(sorted(denominator, key=ir.sort_key))
        + (z,),
    )
    return _atom_rat(atom)


def _factorial_expr(k: int) -> Expr:
    value = 1
    for j in range(2, k + 1):
        value *= j
    return ir.num(value)


def _norm_bigop(expr: BigOp, ctx: NormContext) -> _Rat:
    lo = canon(expr.lo, ctx) if expr.lo is not None else None
    hi = canon(expr.hi, ctx) if expr.hi is not None else None
    if expr.kind in (ir.OP_SUM, ir.OP_PROD) and isinstance(lo, Number) and \
            isinstance(hi, Number) and lo.value.denominator == 1 and \
            hi.value.denominator == 1:
        span = int(hi.value) - int(lo.value) + 1
        if 0 <= span <= _MAX_BIGOP_UNROLL:
            acc = _rat_const(Fraction(0) if expr.kind == ir.OP_SUM else Fraction(1))
            for k in range(int(lo.value), int(hi.value) + 1):
                piece = _norm(
                    ir.substitute(expr.body, {expr.var: ir.num(k)}), ctx
                )
                acc = _rat_add(acc, piece, ctx) if expr.kind == ir.OP_SUM \
                    else _rat_mul(acc, piece, ctx)
            return acc
    body = canon(expr.body, ctx)
    return _atom_rat(BigOp(expr.kind, expr.var, lo, hi, body))


# --- gamma reflection ---

def _gamma_pairs(mono: Mono, ctx: NormContext) -> Optional[tuple[int, int, Expr, int]]:
    """Indices of a gamma pair whose arguments sum to an integer m in
    {0, 1}; returns (i, j, argument_of_first, m)."""
    gammas = [
        (i, atom.args[0]) for i, (atom, exp) in enumerate(mono)
        if isinstance(atom, FunctionApp) and atom.func == "gamma"
        and isinstance(exp, Fraction) and exp.denominator == 1 and exp >= 1
    ]
    for x in range(len(gammas)):
        for y in range(x + 1, len(gammas)):
            i, u = gammas[x]
            j, v = gammas[y]
            total = emit(norm_plain(ir.add(u, v), ctx))
            if isinstance(total, Number) and total.value.denominator == 1 \
                    and total.value in (0, 1):
                return i, j, u, int(total.value)
    return None


def norm_plain(expr: Expr, ctx: NormContext) -> RatForm:
    """Normalize without the reflection pass (used internally by it)."""
    rat = _norm(expr, ctx)
    return _freeze(rat.num, rat.den)


def _reflect_poly(p: Poly, ctx: NormContext) -> tuple[_Rat, bool]:
    changed = False
    total = _Rat({}, dict(ONE_POLY))
    for mono, coef in p.items():
        pair = _gamma_pairs(mono, ctx)
        if pair is None:
            total = _rat_add(total, _Rat({mono: coef}, dict(ONE_POLY)), ctx)
            continue
        changed = True
        i, j, u, m = pair
        rest = []
        for k, (atom, exp) in enumerate(mono):
            if k in (i, j):
                if isinstance(exp, Fraction) and exp > 1:
                    rest.append((atom, exp - 1))
            else:
                rest.append((atom, exp))
        sin_arg = emit(norm_plain(ir.mul(Const(ir.PI), u), ctx))
        sin_atom = FunctionApp("sin", (), (sin_arg,))
        # Gamma(u)Gamma(1-u) = pi/sin(pi u); Gamma(u)Gamma(-u) = -pi/(u sin(pi u)).
        replacement = _rat_mul(
            _atom_rat(Const(ir.PI)),
            _rat_inv(_atom_rat(sin_atom), ctx),
            ctx,
        )
        if m == 0:
            replacement = _rat_mul(replacement, _rat_const(Fraction(-1)), ctx)
            replacement = _rat_mul(replacement, _rat_inv(_norm(u, ctx), ctx), ctx)
        piece = _rat_mul(_Rat({tuple(rest): coef}, dict(ONE_POLY)), replacement, ctx)
        total = _rat_add(total, piece, ctx)
    return total, changed


def _gamma_reflect(rat: _Rat, ctx: NormContext) -> _Rat:
    for _ in range(8):
        num_rat, ch1 = _reflect_poly(rat.num, ctx)
        den_rat, ch2 = _reflect_poly(rat.den, ctx)
        if not (ch1 or ch2):
            return rat
        # num/den each became rational forms; recombine.
        rat = _rat_mul(num_rat, _rat_inv(den_rat, ctx), ctx)
    return rat


# --- emission ---

def emit(rf: RatForm) -> Expr:
    num = _emit_poly(dict(rf.num))
    den_poly = dict(rf.den)
    if den_poly == ONE_POLY:
        return num
    if not dict(rf.num):
        return ir.ZERO
    den = _emit_poly(den_poly)
    return ir.mul(num, ir.power(den, ir.MINUS_ONE))


def _emit_poly(p: Poly) -> Expr:
    if not p:
        return ir.ZERO
    terms = []
    for mono, coef in sorted(p.items(), key=lambda kv: _mono_sort_key(kv[0])):
        factors: list[Expr] = []
        if coef != 1 or not mono:
            factors.append(Number(coef))
        for atom, exp in mono:
            factors.append(ir.power(atom, _exp_to_expr(exp)))
        terms.append(ir.mul(*factors) if len(factors) != 1 else factors[0])
    return ir.add(*terms) if len(terms) != 1 else terms[0]


# --- classification helpers ---

def is_zero_form(rf: RatForm) -> bool:
    return not dict(rf.num)


def is_one_form(rf: RatForm) -> bool:
    return dict(rf.num) == dict(rf.den)


def constant_value(rf: RatForm) -> Optional[Fraction]:
    num, den = dict(rf.num), dict(rf.den)
    if set(num) <= {EMPTY_MONO} and set(den) <= {EMPTY_MONO}:
        n = num.get(EMPTY_MONO, Fraction(0))
        d = den.get(EMPTY_MONO, Fraction(0))
        if d != 0:
            return n / d
    return None
