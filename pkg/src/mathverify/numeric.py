"""Numeric verification: test-value assignment and high-precision evaluation.

The evaluation kernel runs on mpmath with a guard-digit working precision
(requested digits + 10).  Verification assigns candidate values to free
variables, filters them through the interpreted constraints, evaluates
both relation sides at every surviving assignment, and classifies the
outcome against the configured threshold.  Timeout enforcement is
cooperative: every evaluation step and series loop polls a deadline.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import mpmath
from mpmath import mp

from . import ir
from .calculus import resolve_derivatives
from .constraints import SpecialValueAssignment, VariableDomain, check_domain
from .errors import (
    ConvergenceFailure,
    EvaluationError,
    EvaluationOverflow,
    NumericallyUnsupported,
    PoleOrSingularity,
    VerificationTimeout,
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
    free_variables,
)

DEFAULT_TEST_VALUES = (Fraction(-1, 2), Fraction(1, 2), Fraction(3, 2))

# Function ids the kernel can evaluate.
NUMERIC_FUNCTIONS = frozenset({
    "sin", "cos", "tan", "sec", "csc", "cot",
    "sinh", "cosh", "tanh", "sech", "csch", "coth",
    "arcsin", "arccos", "arctan", "ln",
    "gamma", "log_gamma", "erf", "erfc",
    "bessel_j", "bessel_y", "bessel_i", "bessel_k",
    "genhyper",
    "jacobi_poly", "laguerre_poly", "hermite_poly",
    "cheby_t", "cheby_u", "legendre_poly",
    "elliptic_k", "elliptic_e",
    "binomial", "pochhammer",
})

MODE_ABSOLUTE = "absolute"
MODE_RELATIVE = "relative"
MODE_QUOTIENT = "quotient"


@dataclass
class NumericConfig:
    test_values: tuple = DEFAULT_TEST_VALUES
    threshold: float = 0.001
    precision_digits: int = 10
    timeout_seconds: float = 300.0
    comparison_mode: str = MODE_ABSOLUTE

    def __post_init__(self):
        if self.threshold <= 0:
            raise ValueError("threshold must be positive")
        if self.precision_digits < 1:
            raise ValueError("precision must be at least one digit")
        if self.timeout_seconds <= 0:
            raise ValueError("timeout must be positive")


class Deadline:
    """Cooperative cancellation checkpoint for long evaluations."""

    __slots__ = ("_limit",)

    def __init__(self, seconds: Optional[float]):
        self._limit = None if seconds is None else time.monotonic() + seconds

    def check(self) -> None:
        if self._limit is not None and time.monotonic() > self._limit:
            raise VerificationTimeout("verification exceeded its time limit")


_NO_DEADLINE = Deadline(None)


class EvalContext:
    __slots__ = ("deadline", "branch_sensitive")

    def __init__(self, deadline: Deadline = _NO_DEADLINE):
        self.deadline = deadline
        self.branch_sensitive = False


def _to_mp(value):
    if isinstance(value, Fraction):
        return mp.mpf(value.numerator) / mp.mpf(value.denominator)
    if isinstance(value, complex):
        return mp.mpc(value.real, value.imag)
    if isinstance(value, (int, float)):
        return mp.mpf(value)
    return value  # already an mpmath number


def _is_real(x) -> bool:
    return isinstance(x, mpmath.mpf) or (hasattr(x, "imag") and x.imag == 0)


def _is_integer_mp(x) -> bool:
    return _is_real(x) and mp.isint(mp.re(x))


def _check_finite(x):
    if not mp.isfinite(x):
        raise PoleOrSingularity(f"non-finite value {x}")
    return x


def eval_expr(expr: Expr, assignment: dict, config: NumericConfig,
              ctx: Optional[EvalContext] = None):
    """Evaluate an IR expression to an mpmath number at the assignment.

    Works at ``precision_digits`` plus ten guard digits; principal
    branches everywhere, with branch-sensitive operations recorded on the
    context.
    """
    if ctx is None:
        ctx = EvalContext()
    with mp.workdps(config.precision_digits + 10):
        mp_assign = {k: _to_mp(v) for k, v in assignment.items()}
        return _eval(expr, mp_assign, ctx)


def _eval(expr: Expr, assign: dict, ctx: EvalContext):
    ctx.deadline.check()
    if isinstance(expr, Number):
        return mp.mpf(expr.value.numerator) / mp.mpf(expr.value.denominator)
    if isinstance(expr, Const):
        if expr.name == ir.IMAGINARY_UNIT:
            return mp.mpc(0, 1)
        if expr.name == ir.EULER_E:
            return mp.e + 0
        if expr.name == ir.PI:
            return mp.pi + 0
        if expr.name == ir.EULER_GAMMA:
            return mp.euler + 0
        raise EvaluationError(f"constant {expr.name} has no finite value")
    if isinstance(expr, Var):
        try:
            return assign[expr.name]
        except KeyError:
            raise EvaluationError(f"unassigned variable {expr.name!r}") from None
    if isinstance(expr, Add):
        total = mp.mpf(0)
        for t in expr.terms:
            total += _eval(t, assign, ctx)
        return _check_finite(total)
    if isinstance(expr, Mul):
        prod = mp.mpf(1)
        for f in expr.factors:
            prod *= _eval(f, assign, ctx)
        return _check_finite(prod)
    if isinstance(expr, Neg):
        return -_eval(expr.operand, assign, ctx)
    if isinstance(expr, Pow):
        return _eval_pow(expr, assign, ctx)
    if isinstance(expr, FunctionApp):
        return _eval_function(expr, assign, ctx)
    if isinstance(expr, Derivative):
        resolved = resolve_derivatives(expr)
        if isinstance(resolved, Derivative):
            raise NumericallyUnsupported(f"derivative of {_head_name(expr.operand)}")
        return _eval(resolved, assign, ctx)
    if isinstance(expr, BigOp):
        return _eval_bigop(expr, assign, ctx)
    raise EvaluationError(f"cannot evaluate {expr!r}")


def _head_name(expr: Expr) -> str:
    if isinstance(expr, FunctionApp):
        return expr.func
    return type(expr).__name__.lower()


def _eval_pow(expr: Pow, assign: dict, ctx: EvalContext):
    base = _eval(expr.base, assign, ctx)
    exponent = _eval(expr.exponent, assign, ctx)
    if base == 0:
        if _is_real(exponent) and mp.re(exponent) > 0:
            return mp.mpf(0)
        if exponent == 0:
            return mp.mpf(1)
        raise PoleOrSingularity("zero base with non-positive exponent")
    if _is_real(base) and mp.re(base) < 0 and not _is_integer_mp(exponent):
        ctx.branch_sensitive = True
    try:
        return _check_finite(mp.power(base, exponent))
    except (ZeroDivisionError, ValueError) as exc:
        raise PoleOrSingularity(str(exc)) from exc
    except OverflowError as exc:
        raise EvaluationOverflow(str(exc)) from exc


def _eval_function(expr: FunctionApp, assign: dict, ctx: EvalContext):
    func = expr.func
    if func not in NUMERIC_FUNCTIONS:
        raise NumericallyUnsupported(func)
    params = [_eval(p, assign, ctx) for p in expr.params]
    args = [_eval(a, assign, ctx) for a in expr.args]
    try:
        value = _dispatch(func, params, args, ctx)
    except (NumericallyUnsupported, EvaluationError):
        raise
    except VerificationTimeout:
        raise
    except mpmath.libmp.NoConvergence as exc:
        raise ConvergenceFailure(str(exc)) from exc
    except (ZeroDivisionError, ValueError, ArithmeticError) as exc:
        raise PoleOrSingularity(f"{func}: {exc}") from exc
    return _check_finite(value)


def _dispatch(func: str, params: list, args: list, ctx: EvalContext):
    if func == "ln":
        if _is_real(args[0]) and mp.re(args[0]) < 0:
            ctx.branch_sensitive = True
        if args[0] == 0:
            raise PoleOrSingularity("log of zero")
        return mp.log(args[0])
    if func == "log_gamma":
        if _is_real(args[0]) and mp.re(args[0]) < 0:
            ctx.branch_sensitive = True
        return mp.loggamma(args[0])
    simple = {
        "sin": mp.sin, "cos": mp.cos, "tan": mp.tan,
        "sec": mp.sec, "csc": mp.csc, "cot": mp.cot,
        "sinh": mp.sinh, "cosh": mp.cosh, "tanh": mp.tanh,
        "sech": mp.sech, "csch": mp.csch, "coth": mp.coth,
        "arcsin": mp.asin, "arccos": mp.acos, "arctan": mp.atan,
        "gamma": mp.gamma, "erf": mp.erf, "erfc": mp.erfc,
    }
    if func in simple:
        return simple[func](args[0])
    if func == "bessel_j":
        return mp.besselj(params[0], args[0])
    if func == "bessel_y":
        return mp.bessely(params[0], args[0])
    if func == "bessel_i":
        return mp.besseli(params[0], args[0])
    if func == "bessel_k":
        return mp.besselk(params[0], args[0])
    if func == "genhyper":
        return _eval_genhyper(params, args)
    if func == "jacobi_poly":
        alpha, beta, n = params
        return mp.jacobi(n, alpha, beta, args[0])
    if func == "laguerre_poly":
        n, alpha = params
        return mp.laguerre(n, alpha, args[0])
    if func == "hermite_poly":
        return mp.hermite(params[0], args[0])
    if func == "cheby_t":
        return mp.chebyt(params[0], args[0])
    if func == "cheby_u":
        return mp.chebyu(params[0], args[0])
    if func == "legendre_poly":
        return mp.legendre(params[0], args[0])
    if func == "elliptic_k":
        return mp.ellipk(args[0])
    if func == "elliptic_e":
        return mp.ellipe(args[0])
    if func == "binomial":
        return mp.binomial(args[0], args[1])
    if func == "pochhammer":
        return mp.rf(args[0], args[1])
    raise NumericallyUnsupported(func)


def _eval_genhyper(params: list, args: list):
    p, q = int(mp.re(params[0])), int(mp.re(params[1]))
    a_s = args[:p]
    b_s = args[p:p + q]
    z = args[p + q]
    terminating = any(_is_integer_mp(a) and mp.re(a) <= 0 for a in a_s)
    if (p, q) not in ((0, 0), (0, 1), (1, 1), (2, 1)) and not terminating:
        raise NumericallyUnsupported(f"genhyper({p},{q})")
    return mp.hyper(a_s, b_s, z)


def _eval_bigop(expr: BigOp, assign: dict, ctx: EvalContext):
    if expr.kind in (ir.OP_SUM, ir.OP_PROD):
        lo = _eval(expr.lo, assign, ctx)
        hi = _eval(expr.hi, assign, ctx)
        if not (_is_integer_mp(lo) and _is_integer_mp(hi)):
            raise NumericallyUnsupported(f"{expr.kind} with non-integer bounds")
        lo_i, hi_i = int(mp.re(lo)), int(mp.re(hi))
        acc = mp.mpf(0) if expr.kind == ir.OP_SUM else mp.mpf(1)
        inner = dict(assign)
        for k in range(lo_i, hi_i + 1):
            ctx.deadline.check()
            inner[expr.var] = mp.mpf(k)
            term = _eval(expr.body, inner, ctx)
            acc = acc + term if expr.kind == ir.OP_SUM else acc * term
        return _check_finite(acc)
    if expr.kind == ir.OP_INT:
        lo = _eval(expr.lo, assign, ctx)
        hi = _eval(expr.hi, assign, ctx)
        if not (_is_real(lo) and _is_real(hi) and mp.isfinite(lo) and mp.isfinite(hi)):
            raise NumericallyUnsupported("integral over a non-finite real interval")
        inner = dict(assign)

        def integrand(t):
            ctx.deadline.check()
            inner[expr.var] = t
            return _eval(expr.body, inner, ctx)

        try:
            return _check_finite(mp.quad(integrand, [mp.re(lo), mp.re(hi)]))
        except mpmath.libmp.NoConvergence as exc:
            raise ConvergenceFailure(str(exc)) from exc
    raise NumericallyUnsupported(f"big operator {expr.kind}")


# --- test value assignment ---

def _integer_candidates(domain: VariableDomain) -> Optional[list[Fraction]]:
    """Smallest three members for countable domains; None when the domain
    does not prescribe one."""
    if domain.progression is not None:
        start, step, end = domain.progression
        values = []
        v = start
        while len(values) < 3:
            if end is not None:
                if (step > 0 and v > end) or (step < 0 and v < end):
                    break
            values.append(v)
            v = v + step
        return values
    if domain.finite_set is not None:
        return sorted(domain.finite_set)[:3]
    if domain.base_set == "integer":
        lo = Fraction(0)
        if domain.interval is not None:
            lower, lower_strict, _, _ = domain.interval
            if lower is not None:
                lo = Fraction(int(lower) + (1 if lower_strict and lower == int(lower) else 0))
                while lo < lower or (lower_strict and lo == lower):
                    lo += 1
        return [lo, lo + 1, lo + 2]
    return None


def generate_assignments(
    variables: set[str],
    domains: Sequence[VariableDomain],
    specials: Optional[SpecialValueAssignment],
    config: NumericConfig,
) -> list[dict[str, Fraction]]:
    """Cartesian product of per-variable candidate lists, filtered by the
    interpreted domains.  Closed formulae get the single empty assignment."""
    if not variables:
        return [{}]
    special_values = specials.assignments if specials is not None else {}
    # Blueprint-assigned variables keep their special value even when an
    # interpreted domain disagrees (the conflict is logged upstream).
    filter_domains = [d for d in domains if d.var not in special_values]
    per_var: dict[str, list[Fraction]] = {}
    for name in sorted(variables):
        if name in special_values:
            per_var[name] = [special_values[name]]
            continue
        var_domains = [d for d in domains if d.var == name]
        candidates: Optional[list[Fraction]] = None
        for d in var_domains:
            candidates = _integer_candidates(d)
            if candidates is not None:
                break
        if candidates is None:
            candidates = [Fraction(v) if not isinstance(v, complex) else v
                          for v in config.test_values]
        kept = [v for v in candidates if check_domain(var_domains, {name: v})]
        per_var[name] = kept
    assignments: list[dict[str, Fraction]] = [{}]
    for name in sorted(variables):
        new: list[dict[str, Fraction]] = []
        for base in assignments:
            for v in per_var[name]:
                ext = dict(base)
                ext[name] = v
                new.append(ext)
        assignments = new
        if not assignments:
            return []
    return [a for a in assignments if check_domain(filter_domains, a)]


# --- relation verification ---

@dataclass
class EvalRecord:
    assignment: dict[str, str]
    lhs: complex
    rhs: complex
    discrepancy: float


CLASS_VERIFIED = "verified"
CLASS_ABOVE_THRESHOLD = "above_threshold"
CLASS_NO_VALID_VALUES = "no_valid_values"
CLASS_EVALUATION_ERROR = "evaluation_error"
CLASS_TIMEOUT = "timeout"
CLASS_UNSUPPORTED = "numerically_unsupported"


@dataclass
class NumericOutcome:
    classification: str
    detail: Optional[str] = None
    worst: Optional[float] = None
    evaluations: list[EvalRecord] = field(default_factory=list)
    skipped: list[dict[str, str]] = field(default_factory=list)
    branch_sensitive: bool = False

    @property
    def verified(self) -> bool:
        return self.classification == CLASS_VERIFIED


def _fmt_assignment(assignment: dict) -> dict[str, str]:
    return {k: str(v) for k, v in assignment.items()}


def _discrepancy(kind: str, lhs, rhs, config: NumericConfig) -> tuple[float, bool]:
    """(reported discrepancy, point passes)."""
    threshold = config.threshold
    if kind in (ir.REL_EQ, ir.REL_EQUIV, ir.REL_NE):
        if config.comparison_mode == MODE_QUOTIENT and rhs != 0:
            d = float(abs(lhs / rhs - 1))
        elif config.comparison_mode == MODE_RELATIVE:
            scale = max(abs(lhs), abs(rhs), mp.mpf(1))
            d = float(abs(lhs - rhs) / scale)
        else:
            d = float(abs(lhs - rhs))
        if kind == ir.REL_NE:
            return d, d >= threshold
        return d, d < threshold
    # Order relations need essentially real values.
    imag = float(max(abs(mp.im(lhs)), abs(mp.im(rhs))))
    if imag >= threshold:
        return imag, False
    a, b = mp.re(lhs), mp.re(rhs)
    # Computed equality slack for the non-strict relations.
    eps = mp.mpf(10) ** (-config.precision_digits)
    if kind == ir.REL_LT:
        margin = float(a - b)
        return max(margin, 0.0), a < b
    if kind == ir.REL_LE:
        margin = float(a - b)
        return max(margin, 0.0), a <= b + eps
    if kind == ir.REL_GT:
        margin = float(b - a)
        return max(margin, 0.0), a > b
    if kind == ir.REL_GE:
        margin = float(b - a)
        return max(margin, 0.0), a >= b - eps
    raise ValueError(f"relation {kind!r} has no numeric semantics")


def verify_numeric(
    rel: Relation,
    domains: Sequence[VariableDomain] = (),
    specials: Optional[SpecialValueAssignment] = None,
    config: Optional[NumericConfig] = None,
) -> NumericOutcome:
    """Evaluate the relation at every valid assignment and classify."""
    config = config or NumericConfig()
    if rel.kind == ir.REL_TO:
        raise ValueError("limit relations are not numerically verifiable")
    deadline = Deadline(config.timeout_seconds)
    ctx = EvalContext(deadline)
    variables = free_variables(rel.lhs) | free_variables(rel.rhs)
    try:
        assignments = generate_assignments(variables, domains, specials, config)
    except VerificationTimeout:
        return NumericOutcome(CLASS_TIMEOUT)
    if not assignments:
        return NumericOutcome(CLASS_NO_VALID_VALUES)
    lhs = resolve_derivatives(rel.lhs)
    rhs = resolve_derivatives(rel.rhs)
    evaluations: list[EvalRecord] = []
    skipped: list[dict[str, str]] = []
    worst: Optional[float] = None
    all_pass = True
    with mp.workdps(config.precision_digits + 10):
        for assignment in assignments:
            mp_assign = {k: _to_mp(v) for k, v in assignment.items()}
            try:
                lv = _eval(lhs, mp_assign, ctx)
                rv = _eval(rhs, mp_assign, ctx)
            except PoleOrSingularity:
                skipped.append(_fmt_assignment(assignment))
                continue
            except NumericallyUnsupported as exc:
                return NumericOutcome(
                    CLASS_UNSUPPORTED, detail=exc.function_id,
                    evaluations=evaluations, skipped=skipped,
                    branch_sensitive=ctx.branch_sensitive,
                )
            except VerificationTimeout:
                return NumericOutcome(
                    CLASS_TIMEOUT, evaluations=evaluations, skipped=skipped,
                    branch_sensitive=ctx.branch_sensitive,
                )
            except EvaluationError as exc:
                return NumericOutcome(
                    CLASS_EVALUATION_ERROR, detail=exc.kind,
                    evaluations=evaluations, skipped=skipped,
                    branch_sensitive=ctx.branch_sensitive,
                )
            d, ok = _discrepancy(rel.kind, lv, rv, config)
            evaluations.append(
                EvalRecord(_fmt_assignment(assignment), complex(lv), complex(rv), d)
            )
            if not ok:
                all_pass = False
                worst = d if worst is None else max(worst, d)
    if not evaluations:
        return NumericOutcome(CLASS_NO_VALID_VALUES, skipped=skipped,
                              branch_sensitive=ctx.branch_sensitive)
    if all_pass:
        return NumericOutcome(CLASS_VERIFIED, evaluations=evaluations,
                              skipped=skipped, branch_sensitive=ctx.branch_sensitive)
    return NumericOutcome(
        CLASS_ABOVE_THRESHOLD, worst=worst, evaluations=evaluations,
        skipped=skipped, branch_sensitive=ctx.branch_sensitive,
    )
