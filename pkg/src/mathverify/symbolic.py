"""Symbolic verification: rewrite toward zero (difference) or one (quotient).

The simplifier layers bounded identity rewriting (a data-driven rule
table with validity conditions checked against the constraint-derived
assumptions), Bessel order-lattice reduction, and the rational normal
form of :mod:`normform`.  Pre-processing conversions - exponential form,
hypergeometric form, expansion, and their combinations - are tried in
configured order; the first conversion under which the difference
normalizes to zero (or the quotient to one) wins and is recorded.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Optional, Sequence, Union

from . import ir
from .calculus import resolve_derivatives
from .constraints import BASE_COMPLEX, VariableDomain
from .errors import (
    BudgetExceeded,
    MalformedRule,
    MathVerifyError,
    NonEquationRelation,
    SymbolicError,
)
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
    Relation,
    Var,
)
from .normform import (
    BESSEL_FAMILIES,
    NormContext,
    RatForm,
    canon,
    constant_value,
    emit,
    is_one_form,
    is_zero_form,
    norm,
)
from .parser import MacroTable, parse, tokenize
from .translate import TranslationTable, to_expr

# Preprocessor identifiers.
PRE_NONE = "none"
PRE_EXPONENTIAL = "exponential"
PRE_HYPERGEOMETRIC = "hypergeometric"
PRE_EXPAND = "expand"
PRE_EXPAND_CONVERT = "expand_then_convert"

ALL_PREPROCESSORS = (
    PRE_NONE, PRE_EXPONENTIAL, PRE_HYPERGEOMETRIC, PRE_EXPAND, PRE_EXPAND_CONVERT,
)

MODE_DIFFERENCE = "difference"
MODE_QUOTIENT = "quotient"
MODE_BOTH = "both"

CLASS_ZERO = "zero"
CLASS_ONE = "one"
CLASS_OTHER_NUMERIC = "other_numeric"
CLASS_UNSIMPLIFIED = "unsimplified"
CLASS_ERROR = "error"

_PLACEHOLDER_RE = re.compile(r"var\d*\Z")


@dataclass(frozen=True, slots=True)
class RewriteRule:
    pattern: Expr
    replacement: Expr
    # Conditions: (placeholder, kind, value); kind in {ge, gt, ne, real}.
    conditions: tuple[tuple[str, str, Optional[Fraction]], ...]
    source: str


@dataclass
class SimplifyConfig:
    mode: str = MODE_BOTH
    preprocessors: tuple[str, ...] = ALL_PREPROCESSORS
    rewrite_step_budget: int = 500_000
    assumptions: tuple[VariableDomain, ...] = ()
    rules: tuple[RewriteRule, ...] = ()

    def __post_init__(self):
        if self.rewrite_step_budget <= 0:
            raise ValueError("rewrite step budget must be positive")
        for p in self.preprocessors:
            if p not in ALL_PREPROCESSORS:
                raise ValueError(f"unknown preprocessor {p!r}")


@dataclass
class SymbolicOutcome:
    classification: str
    value: Optional[Fraction] = None
    winning_preprocessor: Optional[str] = None
    steps_used: int = 0
    error_kind: Optional[str] = None

    @property
    def verified(self) -> bool:
        return self.classification in (CLASS_ZERO, CLASS_ONE)


# --- rule table ---

def load_rewrite_rules(
    source: str,
    macro_table: MacroTable,
    translation_table: TranslationTable,
) -> tuple[RewriteRule, ...]:
    """Rules are ``pattern -> replacement`` with an optional
    ``? placeholder condition`` tail, one per line."""
    rules = []
    for lineno, raw in enumerate(source.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "->" not in line:
            raise MalformedRule(f"line {lineno}: missing '->'")
        head, _, tail = line.partition("->")
        body, _, cond_text = tail.partition("?")
        try:
            pattern = to_expr(parse(tokenize(head.strip(), placeholders=True),
                                    macro_table), translation_table)
            replacement = to_expr(parse(tokenize(body.strip(), placeholders=True),
                                        macro_table), translation_table)
        except MathVerifyError as exc:
            raise MalformedRule(f"line {lineno}: {exc}") from exc
        conditions = []
        for clause in filter(None, (c.strip() for c in cond_text.split(","))):
            conditions.append(_parse_condition(clause, lineno))
        rules.append(RewriteRule(pattern, replacement, tuple(conditions), line))
    return tuple(rules)


def _parse_condition(clause: str, lineno: int) -> tuple[str, str, Optional[Fraction]]:
    parts = clause.split()
    if len(parts) == 2 and parts[1] == "real":
        return (parts[0], "real", None)
    if len(parts) == 3 and parts[1] in (">=", ">", "!="):
        kind = {">=": "ge", ">": "gt", "!=": "ne"}[parts[1]]
        return (parts[0], kind, Fraction(parts[2]))
    raise MalformedRule(f"line {lineno}: bad condition {clause!r}")


def load_rewrite_rules_file(
    path: Union[str, Path],
    macro_table: MacroTable,
    translation_table: TranslationTable,
) -> tuple[RewriteRule, ...]:
    return load_rewrite_rules(
        Path(path).read_text(encoding="utf-8"), macro_table, translation_table
    )


# --- assumption-aware sign analysis ---

def _domains_for(name: str, domains: Sequence[VariableDomain]) -> list[VariableDomain]:
    return [d for d in domains if d.var == name]


def is_real_expr(expr: Expr, domains: Sequence[VariableDomain]) -> bool:
    if isinstance(expr, Number):
        return True
    if isinstance(expr, Const):
        return expr.name != ir.IMAGINARY_UNIT
    if isinstance(expr, Var):
        named = _domains_for(expr.name, domains)
        return bool(named) and all(d.base_set != BASE_COMPLEX for d in named)
    if isinstance(expr, (Add, Mul)):
        return all(is_real_expr(c, domains) for c in ir.children(expr))
    if isinstance(expr, Neg):
        return is_real_expr(expr.operand, domains)
    if isinstance(expr, Pow):
        if not is_real_expr(expr.base, domains):
            return False
        if isinstance(expr.exponent, Number) and expr.exponent.value.denominator == 1:
            return True
        return is_nonneg_expr(expr.base, domains) and is_real_expr(expr.exponent, domains)
    if isinstance(expr, FunctionApp):
        real_on_reals = {"sin", "cos", "sinh", "cosh", "tanh", "erf", "arctan"}
        if expr.func in real_on_reals and not expr.params:
            return all(is_real_expr(a, domains) for a in expr.args)
        return False
    return False


def is_nonneg_expr(expr: Expr, domains: Sequence[VariableDomain]) -> bool:
    if isinstance(expr, Number):
        return expr.value >= 0
    if isinstance(expr, Const):
        return expr.name in (ir.EULER_E, ir.PI, ir.EULER_GAMMA, ir.INFINITY)
    if isinstance(expr, Var):
        named = _domains_for(expr.name, domains)
        if not named:
            return False
        for d in named:
            if d.interval is not None and d.interval[0] is not None and d.interval[0] >= 0:
                return True
            if d.progression is not None and d.progression[0] >= 0 and d.progression[1] > 0:
                return True
            if d.finite_set is not None and all(v >= 0 for v in d.finite_set):
                return True
        return False
    if isinstance(expr, Add):
        return all(is_nonneg_expr(t, domains) for t in expr.terms)
    if isinstance(expr, Mul):
        return all(is_nonneg_expr(f, domains) for f in expr.factors)
    if isinstance(expr, Pow):
        if isinstance(expr.exponent, Number) and expr.exponent.value.denominator == 1 \
                and int(expr.exponent.value) % 2 == 0:
            return is_real_expr(expr.base, domains)
        if expr.base == Const(ir.EULER_E):
            return is_real_expr(expr.exponent, domains)
        return is_nonneg_expr(expr.base, domains)
    return False


def is_positive_expr(expr: Expr, domains: Sequence[VariableDomain]) -> bool:
    if isinstance(expr, Number):
        return expr.value > 0
    if isinstance(expr, Const):
        return expr.name in (ir.EULER_E, ir.PI, ir.EULER_GAMMA)
    if isinstance(expr, Var):
        for d in _domains_for(expr.name, domains):
            if d.interval is not None and d.interval[0] is not None and \
                    (d.interval[0] > 0 or (d.interval[0] == 0 and d.interval[1])):
                return True
            if d.progression is not None and d.progression[0] > 0 and d.progression[1] > 0:
                return True
            if d.finite_set is not None and d.finite_set and \
                    all(v > 0 for v in d.finite_set):
                return True
        return False
    if isinstance(expr, Mul):
        return all(is_positive_expr(f, domains) for f in expr.factors)
    if isinstance(expr, Add):
        terms_ok = all(is_nonneg_expr(t, domains) for t in expr.terms)
        return terms_ok and any(is_positive_expr(t, domains) for t in expr.terms)
    if isinstance(expr, Pow):
        if expr.base == Const(ir.EULER_E):
            return is_real_expr(expr.exponent, domains)
        return is_positive_expr(expr.base, domains)
    return False


def _condition_holds(
    kind: str, value: Optional[Fraction], bound: Expr,
    domains: Sequence[VariableDomain],
) -> bool:
    if kind == "real":
        return is_real_expr(bound, domains)
    if kind == "ge":
        if value == 0:
            return is_nonneg_expr(bound, domains)
        return is_nonneg_expr(ir.sub(bound, Number(value)), domains)
    if kind == "gt":
        if value == 0:
            return is_positive_expr(bound, domains)
        return is_positive_expr(ir.sub(bound, Number(value)), domains)
    if kind == "ne":
        if isinstance(bound, Number):
            return bound.value != value
        return is_positive_expr(bound, domains) or (
            value == 0 and is_positive_expr(ir.neg_term(bound), domains)
        )
    return False


# --- pattern matching ---

def _is_placeholder(expr: Expr) -> bool:
    return isinstance(expr, Var) and _PLACEHOLDER_RE.match(expr.name) is not None


def match_pattern(pattern: Expr, subject: Expr,
                  binding: dict[str, Expr]) -> bool:
    if _is_placeholder(pattern):
        name = pattern.name  # type: ignore[union-attr]
        if name in binding:
            return binding[name] == subject
        binding[name] = subject
        return True
    if type(pattern) is not type(subject):
        return False
    if isinstance(pattern, (Number, Const, Var)):
        return pattern == subject
    if isinstance(pattern, Neg):
        return match_pattern(pattern.operand, subject.operand, binding)
    if isinstance(pattern, Pow):
        return match_pattern(pattern.base, subject.base, binding) and \
            match_pattern(pattern.exponent, subject.exponent, binding)
    if isinstance(pattern, (Add, Mul)):
        p_children = ir.children(pattern)
        s_children = ir.children(subject)
        if len(p_children) != len(s_children):
            return False
        return _match_commutative(list(p_children), list(s_children), binding)
    if isinstance(pattern, FunctionApp):
        if pattern.func != subject.func or \
                len(pattern.params) != len(subject.params) or \
                len(pattern.args) != len(subject.args):
            return False
        for p, s in zip(pattern.params + pattern.args,
                        subject.params + subject.args):
            if not match_pattern(p, s, binding):
                return False
        return True
    if isinstance(pattern, Derivative):
        return pattern.var == subject.var and pattern.order == subject.order and \
            match_pattern(pattern.operand, subject.operand, binding)
    if isinstance(pattern, BigOp):
        if pattern.kind != subject.kind or pattern.var != subject.var:
            return False
        for p, s in ((pattern.lo, subject.lo), (pattern.hi, subject.hi)):
            if (p is None) != (s is None):
                return False
            if p is not None and not match_pattern(p, s, binding):
                return False
        return match_pattern(pattern.body, subject.body, binding)
    return False


def _match_commutative(pattern_children: list[Expr], subject_children: list[Expr],
                       binding: dict[str, Expr]) -> bool:
    if not pattern_children:
        return not subject_children
    p = pattern_children[0]
    for i, s in enumerate(subject_children):
        trial = dict(binding)
        if match_pattern(p, s, trial):
            rest = subject_children[:i] + subject_children[i + 1:]
            if _match_commutative(pattern_children[1:], rest, trial):
                binding.clear()
                binding.update(trial)
                return True
    return False


class _Rewriter:
    def __init__(self, rules: Sequence[RewriteRule],
                 domains: Sequence[VariableDomain], budget: int):
        self.rules = rules
        self.domains = domains
        self.budget = budget
        self.steps = 0

    def _tick(self):
        self.steps += 1
        if self.steps > self.budget:
            raise BudgetExceeded("rewrite budget exhausted")

    def _try_rules(self, expr: Expr) -> Optional[Expr]:
        for rule in self.rules:
            binding: dict[str, Expr] = {}
            if not match_pattern(rule.pattern, expr, binding):
                continue
            ok = True
            for name, kind, value in rule.conditions:
                bound = binding.get(name)
                if bound is None or not _condition_holds(kind, value, bound, self.domains):
                    ok = False
                    break
            if ok:
                self._tick()
                return ir.substitute(rule.replacement, binding)
        return None

    def rewrite(self, expr: Expr) -> Expr:
        rebuilt = self._rebuild(expr)
        for _ in range(32):
            replaced = self._try_rules(rebuilt)
            if replaced is None:
                return rebuilt
            rebuilt = self._rebuild(replaced)
        return rebuilt

    def _rebuild(self, expr: Expr) -> Expr:
        if isinstance(expr, (Number, Const, Var)):
            return expr
        if isinstance(expr, Add):
            return ir.add(*(self.rewrite(t) for t in expr.terms))
        if isinstance(expr, Mul):
            return ir.mul(*(self.rewrite(f) for f in expr.factors))
        if isinstance(expr, Pow):
            return ir.power(self.rewrite(expr.base), self.rewrite(expr.exponent))
        if isinstance(expr, Neg):
            return ir.neg(self.rewrite(expr.operand))
        if isinstance(expr, FunctionApp):
            return FunctionApp(
                expr.func,
                tuple(self.rewrite(p) for p in expr.params),
                tuple(self.rewrite(a) for a in expr.args),
            )
        if isinstance(expr, Derivative):
            return Derivative(self.rewrite(expr.operand), expr.var, expr.order)
        if isinstance(expr, BigOp):
            return BigOp(
                expr.kind, expr.var,
                self.rewrite(expr.lo) if expr.lo is not None else None,
                self.rewrite(expr.hi) if expr.hi is not None else None,
                self.rewrite(expr.body),
            )
        return expr


def apply_rules(expr: Expr, rules: Sequence[RewriteRule],
                domains: Sequence[VariableDomain] = (),
                budget: int = 10_000) -> tuple[Expr, int]:
    rw = _Rewriter(rules, domains, budget)
    out = rw.rewrite(expr)
    return out, rw.steps


# --- expansion and conversion preprocessors ---

def expand(expr: Expr, *, power_cap: int = 64, budget: int = 500_000) -> Expr:
    """Distribute products over sums and integer powers of sums; the
    result is a flattened, collected sum in canonical order."""
    from .normform import norm_plain
    ctx = NormContext(budget=budget, power_cap=power_cap)
    return emit(norm_plain(expr, ctx))


def _genhyper(numerator: Sequence[Expr], denominator: Sequence[Expr], z: Expr) -> Expr:
    return FunctionApp(
        "genhyper",
        (ir.num(len(numerator)), ir.num(len(denominator))),
        tuple(numerator) + tuple(denominator) + (z,),
    )


def _map_tree(expr: Expr, fn) -> Expr:
    """Bottom-up structural map."""
    if isinstance(expr, (Number, Const, Var)):
        return fn(expr)
    if isinstance(expr, Add):
        return fn(ir.add(*(_map_tree(t, fn) for t in expr.terms)))
    if isinstance(expr, Mul):
        return fn(ir.mul(*(_map_tree(f, fn) for f in expr.factors)))
    if isinstance(expr, Pow):
        return fn(ir.power(_map_tree(expr.base, fn), _map_tree(expr.exponent, fn)))
    if isinstance(expr, Neg):
        return fn(ir.neg(_map_tree(expr.operand, fn)))
    if isinstance(expr, FunctionApp):
        return fn(FunctionApp(
            expr.func,
            tuple(_map_tree(p, fn) for p in expr.params),
            tuple(_map_tree(a, fn) for a in expr.args),
        ))
    if isinstance(expr, Derivative):
        return fn(Derivative(_map_tree(expr.operand, fn), expr.var, expr.order))
    if isinstance(expr, BigOp):
        return fn(BigOp(
            expr.kind, expr.var,
            _map_tree(expr.lo, fn) if expr.lo is not None else None,
            _map_tree(expr.hi, fn) if expr.hi is not None else None,
            _map_tree(expr.body, fn),
        ))
    return fn(expr)


_I = Const(ir.IMAGINARY_UNIT)
_E = Const(ir.EULER_E)


def _exp_of(u: Expr) -> Expr:
    return ir.power(_E, u)


def to_exponential_form(expr: Expr) -> Expr:
    """Rewrite trigonometric/hyperbolic functions (and reciprocals) in
    terms of powers of e; every other node passes through unchanged."""

    def convert(node: Expr) -> Expr:
        if not isinstance(node, FunctionApp) or node.params or len(node.args) != 1:
            return node
        u = node.args[0]
        iu = ir.mul(_I, u)
        miu = ir.mul(ir.MINUS_ONE, _I, u)
        two_i = ir.mul(ir.num(2), _I)
        sin_form = ir.div(ir.sub(_exp_of(iu), _exp_of(miu)), two_i)
        cos_form = ir.div(ir.add(_exp_of(iu), _exp_of(miu)), ir.num(2))
        sinh_form = ir.div(ir.sub(_exp_of(u), _exp_of(ir.neg_term(u))), ir.num(2))
        cosh_form = ir.div(ir.add(_exp_of(u), _exp_of(ir.neg_term(u))), ir.num(2))
        table = {
            "sin": sin_form,
            "cos": cos_form,
            "tan": ir.div(sin_form, cos_form),
            "csc": ir.div(ir.ONE, sin_form),
            "sec": ir.div(ir.ONE, cos_form),
            "cot": ir.div(cos_form, sin_form),
            "sinh": sinh_form,
            "cosh": cosh_form,
            "tanh": ir.div(sinh_form, cosh_form),
            "csch": ir.div(ir.ONE, sinh_form),
            "sech": ir.div(ir.ONE, cosh_form),
            "coth": ir.div(cosh_form, sinh_form),
        }
        return table.get(node.func, node)

    return _map_tree(expr, convert)


def to_hypergeometric_form(expr: Expr) -> Expr:
    """Table-driven rewrite of supported functions into generalized
    hypergeometric form; unmatched nodes pass through unchanged."""

    def convert(node: Expr) -> Expr:
        if isinstance(node, Pow) and node.base == _E:
            return _genhyper((), (), node.exponent)
        if not isinstance(node, FunctionApp):
            return node
        if node.func == "bessel_j" and len(node.params) == 1:
            nu, z = node.params[0], node.args[0]
            prefactor = ir.div(
                ir.power(ir.div(z, ir.num(2)), nu),
                FunctionApp("gamma", (), (ir.add(nu, ir.ONE),)),
            )
            body = _genhyper(
                (), (ir.add(nu, ir.ONE),),
                ir.neg_term(ir.div(ir.power(z, ir.num(2)), ir.num(4))),
            )
            return ir.mul(prefactor, body)
        if node.func == "laguerre_poly":
            n, alpha = node.params
            x = node.args[0]
            prefactor = FunctionApp("binomial", (), (ir.add(n, alpha), n))
            return ir.mul(
                prefactor,
                _genhyper((ir.neg_term(n),), (ir.add(alpha, ir.ONE),), x),
            )
        if node.func == "legendre_poly":
            n = node.params[0]
            x = node.args[0]
            return _genhyper(
                (ir.neg_term(n), ir.add(n, ir.ONE)),
                (ir.ONE,),
                ir.div(ir.sub(ir.ONE, x), ir.num(2)),
            )
        if node.func == "jacobi_poly":
            alpha, beta, n = node.params
            x = node.args[0]
            prefactor = ir.div(
                FunctionApp("pochhammer", (), (ir.add(alpha, ir.ONE), n)),
                FunctionApp("gamma", (), (ir.add(n, ir.ONE),)),
            )
            return ir.mul(
                prefactor,
                _genhyper(
                    (ir.neg_term(n), ir.add(n, alpha, beta, ir.ONE)),
                    (ir.add(alpha, ir.ONE),),
                    ir.div(ir.sub(ir.ONE, x), ir.num(2)),
                ),
            )
        if node.func == "cheby_t":
            n = node.params[0]
            x = node.args[0]
            return _genhyper(
                (ir.neg_term(n), n), (ir.HALF,), ir.div(ir.sub(ir.ONE, x), ir.num(2))
            )
        if node.func == "erf":
            z = node.args[0]
            prefactor = ir.mul(
                ir.num(2), z, ir.power(Const(ir.PI), Number(Fraction(-1, 2)))
            )
            return ir.mul(
                prefactor,
                _genhyper((ir.HALF,), (Number(Fraction(3, 2)),),
                          ir.neg_term(ir.power(z, ir.num(2)))),
            )
        return node

    return _map_tree(expr, convert)


# --- Bessel order-lattice reduction ---

def reduce_bessel_orders(expr: Expr, ctx: NormContext) -> Expr:
    """Rewrite Bessel-family terms whose orders differ by integers onto
    the two lowest lattice orders via the three-term recurrences."""
    groups: dict[tuple[str, Expr], list[Expr]] = {}
    for node in ir.walk(expr):
        if isinstance(node, FunctionApp) and node.func in BESSEL_FAMILIES \
                and len(node.params) == 1 and len(node.args) == 1:
            key = (node.func, canon(node.args[0], ctx))
            order = canon(node.params[0], ctx)
            bucket = groups.setdefault(key, [])
            if order not in bucket:
                bucket.append(order)
    replacements: dict[tuple[str, Expr, Expr], Expr] = {}
    for (func, arg), orders in groups.items():
        classes: list[list[tuple[Expr, int]]] = []
        for order in orders:
            placed = False
            for cls in classes:
                base_order = cls[0][0]
                delta = canon(ir.sub(order, base_order), ctx)
                if isinstance(delta, Number) and delta.value.denominator == 1:
                    cls.append((order, int(delta.value)))
                    placed = True
                    break
            if not placed:
                classes.append([(order, 0)])
        for cls in classes:
            min_off = min(off for _, off in cls)
            members = [(order, off - min_off) for order, off in cls]
            if max(off for _, off in members) < 2:
                continue
            mu = next(order for order, off in members if off == 0)

            memo: dict[int, Expr] = {}

            def member_at(k: int) -> Expr:
                if k in memo:
                    return memo[k]
                order_k = canon(ir.add(mu, ir.num(k)), ctx)
                if k in (0, 1):
                    e: Expr = FunctionApp(func, (order_k,), (arg,))
                else:
                    prev_order = canon(ir.add(mu, ir.num(k - 1)), ctx)
                    ratio = ir.div(ir.mul(ir.num(2), prev_order), arg)
                    f_prev = member_at(k - 1)
                    f_prev2 = member_at(k - 2)
                    if func in ("bessel_j", "bessel_y"):
                        e = ir.sub(ir.mul(ratio, f_prev), f_prev2)
                    elif func == "bessel_i":
                        e = ir.sub(f_prev2, ir.mul(ratio, f_prev))
                    else:  # bessel_k
                        e = ir.add(f_prev2, ir.mul(ratio, f_prev))
                memo[k] = e
                return e

            for order, off in members:
                if off >= 2:
                    replacements[(func, order, arg)] = member_at(off)
    if not replacements:
        return expr

    def replace(node: Expr) -> Expr:
        if isinstance(node, FunctionApp) and node.func in BESSEL_FAMILIES \
                and len(node.params) == 1 and len(node.args) == 1:
            key = (node.func, canon(node.params[0], ctx), canon(node.args[0], ctx))
            hit = replacements.get(key)
            if hit is not None:
                return hit
        return node

    return _map_tree(expr, replace)


# --- simplification ---

def _classify(rf: RatForm, target: str, steps: int) -> SymbolicOutcome:
    if is_zero_form(rf):
        return SymbolicOutcome(CLASS_ZERO, steps_used=steps)
    if target in (MODE_QUOTIENT, MODE_BOTH) and is_one_form(rf):
        return SymbolicOutcome(CLASS_ONE, steps_used=steps)
    value = constant_value(rf)
    if value is not None:
        if value == 1 and target in (MODE_QUOTIENT, MODE_BOTH):
            return SymbolicOutcome(CLASS_ONE, steps_used=steps)
        return SymbolicOutcome(CLASS_OTHER_NUMERIC, value=value, steps_used=steps)
    return SymbolicOutcome(CLASS_UNSIMPLIFIED, steps_used=steps)


def simplify(expr: Expr, config: Optional[SimplifyConfig] = None) -> tuple[SymbolicOutcome, Expr]:
    """Normalize one expression and classify the result against the
    configured target (0 for differences, 1 for quotients)."""
    config = config or SimplifyConfig()
    ctx = NormContext(budget=config.rewrite_step_budget)
    try:
        e = resolve_derivatives(expr)
        e, rule_steps = apply_rules(
            e, config.rules, config.assumptions,
            budget=max(1, config.rewrite_step_budget // 10),
        )
        e = reduce_bessel_orders(e, ctx)
        rf = norm(e, ctx)
    except BudgetExceeded:
        return SymbolicOutcome(CLASS_UNSIMPLIFIED, steps_used=ctx.steps), expr
    except SymbolicError as exc:
        return (
            SymbolicOutcome(CLASS_ERROR, error_kind=type(exc).__name__,
                            steps_used=ctx.steps),
            expr,
        )
    outcome = _classify(rf, config.mode, rule_steps + ctx.steps)
    return outcome, emit(rf)


def _preprocess_variants(pre: str, lhs: Expr, rhs: Expr) -> list[tuple[Expr, Expr]]:
    if pre == PRE_NONE:
        return [(lhs, rhs)]
    if pre == PRE_EXPONENTIAL:
        return [(to_exponential_form(lhs), to_exponential_form(rhs))]
    if pre == PRE_HYPERGEOMETRIC:
        return [(to_hypergeometric_form(lhs), to_hypergeometric_form(rhs))]
    if pre == PRE_EXPAND:
        return [(expand(lhs), expand(rhs))]
    if pre == PRE_EXPAND_CONVERT:
        el, er = expand(lhs), expand(rhs)
        return [
            (to_exponential_form(el), to_exponential_form(er)),
            (to_hypergeometric_form(el), to_hypergeometric_form(er)),
        ]
    raise ValueError(f"unknown preprocessor {pre!r}")


def verify_symbolic(
    rel: Relation,
    domains: Sequence[VariableDomain] = (),
    config: Optional[SimplifyConfig] = None,
) -> SymbolicOutcome:
    """Simplify lhs-rhs (and lhs/rhs when the mode allows) under each
    preprocessor in order; the first zero/one outcome wins."""
    config = config or SimplifyConfig()
    if rel.kind not in (ir.REL_EQ, ir.REL_EQUIV):
        raise NonEquationRelation(
            f"symbolic verification requires an equation, got {rel.kind!r}"
        )
    assumptions = tuple(domains) or config.assumptions
    best: Optional[SymbolicOutcome] = None
    for pre in config.preprocessors:
        try:
            variants = _preprocess_variants(pre, rel.lhs, rel.rhs)
        except (BudgetExceeded, SymbolicError):
            continue
        for lhs, rhs in variants:
            if config.mode in (MODE_DIFFERENCE, MODE_BOTH):
                sub_config = SimplifyConfig(
                    mode=MODE_DIFFERENCE,
                    preprocessors=config.preprocessors,
                    rewrite_step_budget=config.rewrite_step_budget,
                    assumptions=assumptions,
                    rules=config.rules,
                )
                outcome, _ = simplify(ir.sub(lhs, rhs), sub_config)
                if outcome.classification == CLASS_ZERO:
                    outcome.winning_preprocessor = pre
                    return outcome
                if best is None or _more_informative(outcome, best):
                    best = outcome
            if config.mode in (MODE_QUOTIENT, MODE_BOTH):
                if rel.lhs == ir.ZERO or rel.rhs == ir.ZERO:
                    continue  # quotient form refuses a literal zero side
                quo_config = SimplifyConfig(
                    mode=MODE_QUOTIENT,
                    preprocessors=config.preprocessors,
                    rewrite_step_budget=config.rewrite_step_budget,
                    assumptions=assumptions,
                    rules=config.rules,
                )
                outcome, _ = simplify(ir.div(lhs, rhs), quo_config)
                if outcome.classification == CLASS_ONE:
                    outcome.winning_preprocessor = pre
                    return outcome
                if best is None or _more_informative(outcome, best):
                    best = outcome
    return best if best is not None else SymbolicOutcome(CLASS_UNSIMPLIFIED)


def _more_informative(candidate: SymbolicOutcome, current: SymbolicOutcome) -> bool:
    rank = {CLASS_OTHER_NUMERIC: 2, CLASS_UNSIMPLIFIED: 1, CLASS_ERROR: 0}
    return rank.get(candidate.classification, 0) > rank.get(current.classification, 0)
