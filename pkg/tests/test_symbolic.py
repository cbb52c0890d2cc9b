import random
from fractions import Fraction

import pytest

from mathverify import ir
from mathverify.constraints import VariableDomain
from mathverify.errors import BudgetExceeded, NonEquationRelation
from mathverify.ir import Const, FunctionApp, Var, free_variables
from mathverify.numeric import NumericConfig, eval_expr
from mathverify.parser import parse, tokenize
from mathverify.symbolic import (
    CLASS_OTHER_NUMERIC,
    CLASS_UNSIMPLIFIED,
    CLASS_ZERO,
    MODE_DIFFERENCE,
    MODE_QUOTIENT,
    PRE_EXPONENTIAL,
    PRE_NONE,
    SimplifyConfig,
    expand,
    simplify,
    to_exponential_form,
    to_hypergeometric_form,
    verify_symbolic,
)
from mathverify.translate import to_expr, to_relation

EVAL_CONFIG = NumericConfig(precision_digits=20)


def tx(latex, tables):
    return to_expr(parse(tokenize(latex), tables.macro_table),
                   tables.translation_table)


def tr(latex, tables):
    return to_relation(parse(tokenize(latex), tables.macro_table),
                       tables.translation_table)


def numerically_zero(expr, points, tol=1e-9):
    for assignment in points:
        value = eval_expr(expr, assignment, EVAL_CONFIG)
        assert abs(value) < tol, (assignment, value)


RNG = random.Random(20180615)


def random_rational(lo=-2, hi=2):
    return Fraction(RNG.randint(lo * 12, hi * 12), 12) + Fraction(1, 24)


# --- expand ---

def test_expand_square_of_sum(tables):
    out = expand(tx("(x+y)^2", tables))
    assert out == tx("x^2 + 2xy + y^2", tables)


def test_expand_atom(tables):
    assert expand(Var("x")) == Var("x")


def test_expand_difference_of_squares(tables):
    out = expand(tx("(a+b)(a-b)", tables))
    assert out == tx("a^2 - b^2", tables)


def test_expand_budget():
    with pytest.raises(BudgetExceeded):
        expand(ir.power(ir.add(Var("x"), Var("y")), ir.num(300)), power_cap=64)


# --- exponential form ---

def test_exponential_form_sinh(tables):
    out = to_exponential_form(tx(r"\sinh@{x}", tables))
    assert out == tx(r"\frac{\expe^{x}-\expe^{-x}}{2}", tables)


def test_exponential_form_cos_uses_imaginary_exponentials(tables):
    out = to_exponential_form(tx(r"\cos@{x}", tables))
    constants = {n.name for n in ir.walk(out) if isinstance(n, Const)}
    assert ir.IMAGINARY_UNIT in constants
    assert ir.EULER_E in constants


def test_exponential_form_leaves_gamma_alone(tables):
    expr = tx(r"\GammaFn@{x}", tables)
    assert to_exponential_form(expr) == expr


@pytest.mark.parametrize("latex", [
    r"\sin@{x}", r"\cos@{x}", r"\tan@{x}", r"\sec@{x}", r"\csc@{x}",
    r"\cot@{x}", r"\sinh@{x}", r"\cosh@{x}", r"\tanh@{x}", r"\sech@{x}",
    r"\csch@{x}", r"\coth@{x}",
])
def test_exponential_form_preserves_semantics(latex, tables):
    # The conversion agrees with the original at sampled complex points.
    expr = tx(latex, tables)
    converted = to_exponential_form(expr)
    for _ in range(6):
        z = complex(float(random_rational()), float(random_rational()))
        if abs(z) < 0.2:
            z += 0.5
        v1 = eval_expr(expr, {"x": z}, EVAL_CONFIG)
        v2 = eval_expr(converted, {"x": z}, EVAL_CONFIG)
        assert abs(v1 - v2) < 1e-10 * max(1, abs(v1))


def test_hypergeometric_form_exponential(tables):
    out = to_hypergeometric_form(tx(r"\expe^{x}", tables))
    assert out == FunctionApp("genhyper", (ir.num(0), ir.num(0)), (Var("x"),))


def test_hypergeometric_form_laguerre_matches_recurrence(tables):
    # Laguerre -> binomial * 1F1 checked numerically against the kernel's
    # recurrence-backed evaluation at x in {1/2, 3/2}, n <= 4.
    expr = tx(r"\LaguerreL[\alpha]{n}@{x}", tables)
    converted = to_hypergeometric_form(expr)
    for n in range(5):
        for x in (Fraction(1, 2), Fraction(3, 2)):
            assign = {"n": Fraction(n), "alpha": Fraction(2, 5), "x": x}
            v1 = eval_expr(expr, assign, EVAL_CONFIG)
            v2 = eval_expr(converted, assign, EVAL_CONFIG)
            assert abs(v1 - v2) < 1e-10


def test_hypergeometric_form_leaves_sums_alone(tables):
    expr = tx("x+1", tables)
    assert to_hypergeometric_form(expr) == expr


@pytest.mark.parametrize("latex,assigns", [
    (r"\BesselJ{\nu}@{z}", {"nu": Fraction(2, 5), "z": Fraction(7, 5)}),
    (r"\LegendreP{n}@{x}", {"n": Fraction(3), "x": Fraction(2, 5)}),
    (r"\JacobiP{\alpha}{\beta}{n}@{x}",
     {"alpha": Fraction(1, 3), "beta": Fraction(3, 4), "n": Fraction(2),
      "x": Fraction(1, 5)}),
    (r"\ChebyT{n}@{x}", {"n": Fraction(4), "x": Fraction(3, 10)}),
    (r"\erf@@{z}", {"z": Fraction(4, 5)}),
])
def test_hypergeometric_form_preserves_semantics(latex, assigns, tables):
    expr = tx(latex, tables)
    converted = to_hypergeometric_form(expr)
    v1 = eval_expr(expr, assigns, EVAL_CONFIG)
    v2 = eval_expr(converted, assigns, EVAL_CONFIG)
    assert abs(v1 - v2) < 1e-10 * max(1, abs(v1))


# --- simplify ---

def default_config(tables, **kw):
    kw.setdefault("rules", tables.rewrite_rules)
    return SimplifyConfig(**kw)


def test_simplify_pythagorean(tables):
    out, _ = simplify(tx(r"\sin@{x}^2 + \cos@{x}^2 - 1", tables),
                      default_config(tables, mode=MODE_DIFFERENCE))
    assert out.classification == CLASS_ZERO


def test_simplify_gamma_quotient_is_one(tables):
    out, _ = simplify(tx(r"\frac{\GammaFn@{x+1}}{x\GammaFn@{x}}", tables),
                      default_config(tables, mode=MODE_QUOTIENT))
    assert out.classification == "one"


def test_simplify_constant_difference_flagged(tables):
    out, _ = simplify(tx("2 - 1", tables),
                      default_config(tables, mode=MODE_DIFFERENCE))
    assert out.classification == CLASS_OTHER_NUMERIC
    assert out.value == Fraction(1)


def test_simplify_budget_exhaustion_is_unsimplified(tables):
    expr = ir.power(ir.add(Var("x"), Var("y"), Var("z")), ir.num(30))
    out, residual = simplify(expr, default_config(tables, rewrite_step_budget=50))
    assert out.classification == CLASS_UNSIMPLIFIED
    assert residual == expr


# --- verify_symbolic ---

def test_verify_sinh_definition_via_none(tables):
    rel = tr(r"\sinh@{x} = \frac{\expe^{x}-\expe^{-x}}{2}", tables)
    out = verify_symbolic(rel, (), default_config(tables))
    assert out.classification == CLASS_ZERO
    assert out.winning_preprocessor == PRE_NONE


def test_verify_hyperbolic_pythagorean(tables):
    rel = tr(r"\cosh@{x}^2 - \sinh@{x}^2 = 1", tables)
    out = verify_symbolic(rel, (), default_config(tables))
    assert out.classification == CLASS_ZERO


def test_exponential_preprocessor_needed_without_rules(tables):
    # With an empty rule table the hyperbolic double angle only falls to
    # zero after conversion to exponential form.
    rel = tr(r"\sinh@{2x} = 2\sinh@{x}\cosh@{x}", tables)
    config = SimplifyConfig(rules=())
    out = verify_symbolic(rel, (), config)
    assert out.classification == CLASS_ZERO
    assert out.winning_preprocessor == PRE_EXPONENTIAL
    none_only = SimplifyConfig(rules=(), preprocessors=(PRE_NONE,))
    out_none = verify_symbolic(rel, (), none_only)
    assert out_none.classification != CLASS_ZERO


def test_inequality_raises(tables):
    rel = tr("x < 1", tables)
    with pytest.raises(NonEquationRelation):
        verify_symbolic(rel, (), default_config(tables))


def test_quotient_mode_refuses_literal_zero(tables):
    rel = tr("0 = x", tables)
    out = verify_symbolic(rel, (), default_config(tables, mode=MODE_QUOTIENT))
    assert out.classification != "one"


def test_assumption_gated_rule(tables):
    # sqrt(x^2) = x needs x >= 0; without the assumption it must not fire.
    rel = tr(r"\sqrt{x^2} = x", tables)
    nonneg = VariableDomain("x", "real", interval=(Fraction(0), False, None, False))
    out = verify_symbolic(rel, [nonneg], default_config(tables))
    assert out.classification == CLASS_ZERO
    out_free = verify_symbolic(rel, (), default_config(tables))
    assert out_free.classification != CLASS_ZERO


def test_monotone_classification_over_corpus(tables, mini_corpus):
    # Enabling preprocessors never loses a zero classification.
    full = default_config(tables)
    none_only = default_config(tables, preprocessors=(PRE_NONE,))
    zero_under_none = set()
    zero_under_full = set()
    for record in mini_corpus:
        try:
            rel = tr(record.latex, tables)
        except Exception:
            continue
        if rel.kind not in (ir.REL_EQ, ir.REL_EQUIV):
            continue
        if verify_symbolic(rel, (), none_only).verified:
            zero_under_none.add(record.id)
        if verify_symbolic(rel, (), full).verified:
            zero_under_full.add(record.id)
    assert zero_under_none <= zero_under_full
    assert len(zero_under_full) > len(zero_under_none)


# --- rewrite rule self-validation ---

def _condition_points(rule):
    kinds = {name: kind for name, kind, _ in rule.conditions}

    def draw(name):
        kind = kinds.get(name)
        for _ in range(50):
            if kind in ("ge", "gt"):
                value = abs(random_rational()) + Fraction(1, 10)
            elif kind in ("real", "ne"):
                value = random_rational()
                if kind == "ne" and value == 0:
                    continue
            else:
                value = complex(float(random_rational()), float(random_rational()))
                if abs(value) < 0.15:
                    continue
            return value
        raise AssertionError("could not draw a point")

    return draw


def test_every_rewrite_rule_is_numerically_self_validating(tables):
    # lhs and rhs of each rule agree at ten points in its validity domain.
    for rule in tables.rewrite_rules:
        placeholders = sorted(free_variables(rule.pattern))
        draw = _condition_points(rule)
        checked = 0
        attempts = 0
        while checked < 10 and attempts < 200:
            attempts += 1
            assignment = {name: draw(name) for name in placeholders}
            try:
                v1 = eval_expr(rule.pattern, assignment, EVAL_CONFIG)
                v2 = eval_expr(rule.replacement, assignment, EVAL_CONFIG)
            except Exception:
                continue  # pole at the sampled point; redraw
            if max(abs(v1), abs(v2)) > 1e6:
                continue
            assert abs(v1 - v2) < 1e-10 * max(1, abs(v1)), rule.source
            checked += 1
        assert checked == 10, rule.source


# --- soundness sampling ---

def _sample_assignment(variables, domains):
    assignment = {}
    for name in sorted(variables):
        named = [d for d in domains if d.var == name]
        value = None
        for d in named:
            if d.progression is not None:
                start, step, end = d.progression
                k = RNG.randint(0, 8)
                value = start + k * step
                break
            if d.finite_set is not None:
                value = RNG.choice(list(d.finite_set))
                break
            if d.interval is not None and d.interval[0] is not None \
                    and d.interval[2] is not None:
                lo, _, hi, _ = d.interval
                value = lo + (hi - lo) * Fraction(RNG.randint(1, 23), 24)
                break
            if d.interval is not None and d.interval[0] is not None:
                value = d.interval[0] + abs(random_rational()) + Fraction(1, 24)
                break
        if value is None:
            value = random_rational()
        assignment[name] = value
    return assignment


def test_soundness_of_zero_classifications(tables, mini_corpus):
    # A zero from the simplifier re-checks numerically on the original
    # relation at 25 random constraint-satisfying points.
    from mathverify.constraints import interpret_constraints

    checked_any = False
    for record in mini_corpus:
        try:
            rel = tr(record.latex, tables)
        except Exception:
            continue
        if rel.kind not in (ir.REL_EQ, ir.REL_EQUIV):
            continue
        interp = interpret_constraints(record.constraints, tables.blueprints,
                                       tables.macro_table)
        config = default_config(tables, assumptions=tuple(interp.domains))
        out = verify_symbolic(rel, interp.domains, config)
        if out.classification != CLASS_ZERO:
            continue
        checked_any = True
        variables = free_variables(rel.lhs) | free_variables(rel.rhs)
        original = ir.sub(rel.lhs, rel.rhs)
        points = 0
        attempts = 0
        while points < 25 and attempts < 400:
            attempts += 1
            assignment = _sample_assignment(variables, interp.domains)
            try:
                value = eval_expr(original, assignment, EVAL_CONFIG)
            except Exception:
                continue  # singular draw
            assert abs(value) < 1e-9, (record.id, assignment, value)
            points += 1
        assert points == 25, record.id
    assert checked_any
