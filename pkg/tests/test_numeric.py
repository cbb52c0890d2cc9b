import time
from fractions import Fraction

import pytest
from mpmath import mp, mpc, mpf

import oracles
from mathverify import ir
from mathverify.constraints import SpecialValueAssignment, VariableDomain
from mathverify.ir import BigOp, Const, FunctionApp, Number, Pow, Var
from mathverify.numeric import (
    CLASS_ABOVE_THRESHOLD,
    CLASS_NO_VALID_VALUES,
    CLASS_TIMEOUT,
    CLASS_VERIFIED,
    NumericConfig,
    eval_expr,
    generate_assignments,
    verify_numeric,
)

CONFIG = NumericConfig()
TOL = mpf(10) ** -10


def _f(func, *args, params=()):
    return FunctionApp(func, tuple(params), tuple(args))


def kernel(func, params, args, dps=25):
    expr = _f(func, *[Var(f"a{i}") for i in range(len(args))],
              params=[Var(f"p{i}") for i in range(len(params))])
    assign = {f"p{i}": v for i, v in enumerate(params)}
    assign.update({f"a{i}": v for i, v in enumerate(args)})
    return eval_expr(expr, assign, NumericConfig(precision_digits=dps))


def agree(value, reference):
    return abs(mpc(value) - mpc(reference)) <= TOL * max(1, abs(mpc(reference)))


# Twenty-plus sample points per function: a real sweep plus complex points.
REAL_POINTS = [Fraction(n, 10) for n in
               (-27, -19, -13, -8, -3, 2, 4, 7, 11, 14, 16, 19, 23, 26, 31)]
COMPLEX_POINTS = [complex(0.4, 0.7), complex(-0.8, 0.3), complex(1.2, -0.9),
                  complex(-1.4, -0.6), complex(0.1, 1.3), complex(2.2, 0.4)]
ALL_POINTS = REAL_POINTS + COMPLEX_POINTS  # 21 points


def _points(exclude=lambda z: False):
    points = [z for z in ALL_POINTS if not exclude(z)]
    assert len(points) >= 20 or exclude is not None
    return points


@pytest.mark.parametrize("z", ALL_POINTS)
def test_oracle_sin(z):
    with mp.workdps(30):
        assert agree(kernel("sin", (), (z,)), oracles.sin_series(z))


@pytest.mark.parametrize("z", ALL_POINTS)
def test_oracle_cos(z):
    with mp.workdps(30):
        assert agree(kernel("cos", (), (z,)), oracles.cos_series(z))


@pytest.mark.parametrize("z", ALL_POINTS)
def test_oracle_tan_as_ratio(z):
    with mp.workdps(30):
        ref = oracles.sin_series(z) / oracles.cos_series(z)
        assert agree(kernel("tan", (), (z,)), ref)


@pytest.mark.parametrize("z", ALL_POINTS)
def test_oracle_sinh_cosh_tanh(z):
    with mp.workdps(30):
        assert agree(kernel("sinh", (), (z,)), oracles.sinh_series(z))
        assert agree(kernel("cosh", (), (z,)), oracles.cosh_series(z))
        ref = oracles.sinh_series(z) / oracles.cosh_series(z)
        assert agree(kernel("tanh", (), (z,)), ref)


@pytest.mark.parametrize("z", ALL_POINTS)
def test_oracle_reciprocal_trig(z):
    with mp.workdps(30):
        assert agree(kernel("sec", (), (z,)), 1 / oracles.cos_series(z))
        assert agree(kernel("csc", (), (z,)), 1 / oracles.sin_series(z))
        assert agree(kernel("cot", (), (z,)),
                     oracles.cos_series(z) / oracles.sin_series(z))
        assert agree(kernel("sech", (), (z,)), 1 / oracles.cosh_series(z))
        assert agree(kernel("csch", (), (z,)), 1 / oracles.sinh_series(z))
        assert agree(kernel("coth", (), (z,)),
                     oracles.cosh_series(z) / oracles.sinh_series(z))


@pytest.mark.parametrize("z", [z for z in ALL_POINTS
                               if not (isinstance(z, Fraction) and z <= 0)])
def test_oracle_ln(z):
    with mp.workdps(30):
        assert agree(kernel("ln", (), (z,)), oracles.ln_atanh(z))


def test_oracle_ln_point_count():
    pts = [z for z in ALL_POINTS if not (isinstance(z, Fraction) and z <= 0)]
    # Complex points plus the positive reals still exceed ten; pad with a
    # second sweep to honor the twenty-point contract.
    extra = [Fraction(n, 7) for n in range(1, 15)]
    with mp.workdps(30):
        for z in pts + extra:
            assert agree(kernel("ln", (), (z,)), oracles.ln_atanh(z))
    assert len(pts + extra) >= 20


INVERSE_POINTS = [Fraction(n, 100) for n in
                  (-95, -80, -66, -51, -37, -22, -9, 4, 18, 27, 39, 48, 55,
                   63, 72, 81, 88, 93)] + [complex(0.3, 0.2), complex(-0.4, 0.5)]


@pytest.mark.parametrize("z", INVERSE_POINTS)
def test_oracle_arcsin_arctan(z):
    with mp.workdps(30):
        assert agree(kernel("arcsin", (), (z,)), oracles.arcsin_series(z))
        assert agree(kernel("arctan", (), (z,)), oracles.arctan_series(z))


@pytest.mark.parametrize("z", INVERSE_POINTS)
def test_oracle_arccos(z):
    with mp.workdps(30):
        ref = mp.pi / 2 - oracles.arcsin_series(z)
        assert agree(kernel("arccos", (), (z,)), ref)


GAMMA_POINTS = [Fraction(n, 10) for n in
                (-27, -19, -13, -7, -3, 3, 5, 8, 12, 15, 19, 24, 28, 33, 41)] \
    + COMPLEX_POINTS


@pytest.mark.parametrize("z", GAMMA_POINTS)
def test_oracle_gamma(z):
    with mp.workdps(35):
        assert agree(kernel("gamma", (), (z,)), oracles.spouge_gamma(z))


@pytest.mark.parametrize("z", [z for z in GAMMA_POINTS
                               if not isinstance(z, Fraction) or z > 0])
def test_oracle_log_gamma(z):
    # log-gamma's own branch structure differs from log(Gamma) by 2 pi i
    # multiples, so the comparison goes through the exponential.
    with mp.workdps(35):
        value = mp.exp(kernel("log_gamma", (), (z,), dps=30))
        assert agree(value, oracles.spouge_gamma(z))


def test_pythagorean_identity_at_three_halves():
    expr = ir.add(
        ir.power(_f("sin", Var("x")), ir.num(2)),
        ir.power(_f("cos", Var("x")), ir.num(2)),
    )
    value = eval_expr(expr, {"x": Fraction(3, 2)}, CONFIG)
    assert abs(value - 1) < mpf(10) ** -10


def test_gamma_half_is_sqrt_pi():
    value = kernel("gamma", (), (Fraction(1, 2),), dps=12)
    with mp.workdps(22):
        assert abs(value - mp.sqrt(mp.pi)) < mpf(10) ** -11


@pytest.mark.parametrize("z", ALL_POINTS)
def test_oracle_erf_erfc(z):
    with mp.workdps(30):
        ref = oracles.erf_series(z)
        assert agree(kernel("erf", (), (z,)), ref)
        assert agree(kernel("erfc", (), (z,)), 1 - ref)


BESSEL_CASES = [
    (nu, z)
    for nu in (Fraction(-3, 10), Fraction(1, 2), Fraction(13, 10), Fraction(5, 2))
    for z in (Fraction(3, 10), Fraction(9, 10), Fraction(8, 5), Fraction(27, 10),
              complex(1.1, 0.4))
]  # 20 points


@pytest.mark.parametrize("nu,z", BESSEL_CASES)
def test_oracle_bessel_j(nu, z):
    with mp.workdps(30):
        assert agree(kernel("bessel_j", (nu,), (z,)), oracles.bessel_j_series(nu, z))


@pytest.mark.parametrize("nu,z", BESSEL_CASES)
def test_oracle_bessel_y(nu, z):
    with mp.workdps(30):
        assert agree(kernel("bessel_y", (nu,), (z,)), oracles.bessel_y_from_j(nu, z))


@pytest.mark.parametrize("nu,z", BESSEL_CASES)
def test_oracle_bessel_i(nu, z):
    with mp.workdps(30):
        assert agree(kernel("bessel_i", (nu,), (z,)), oracles.bessel_i_series(nu, z))


@pytest.mark.parametrize("nu,z", BESSEL_CASES)
def test_oracle_bessel_k(nu, z):
    with mp.workdps(30):
        assert agree(kernel("bessel_k", (nu,), (z,)), oracles.bessel_k_from_i(nu, z))


HYPER_CASES = (
    [((), (Fraction(3, 2),), z) for z in
     (Fraction(-7, 10), Fraction(2, 5), Fraction(6, 5), complex(0.3, 0.5))]
    + [((Fraction(-1, 2),), (Fraction(5, 4),), z) for z in
       (Fraction(-3, 5), Fraction(1, 5), Fraction(4, 5), complex(-0.2, 0.4))]
    + [((Fraction(1, 3), Fraction(2, 3)), (Fraction(7, 5),), z) for z in
       (Fraction(-2, 5), Fraction(1, 4), Fraction(3, 5), Fraction(-4, 5),
        complex(0.2, 0.3), complex(-0.3, -0.2))]
    + [((Fraction(1), Fraction(1)), (Fraction(2),), z) for z in
       (Fraction(1, 2), Fraction(-1, 2), Fraction(3, 10),
        complex(0.1, 0.2), Fraction(-9, 10), Fraction(7, 10))]
)  # 20 points across 0F1, 1F1, 2F1


@pytest.mark.parametrize("a_s,b_s,z", HYPER_CASES)
def test_oracle_genhyper(a_s, b_s, z):
    params = (ir.num(len(a_s)), ir.num(len(b_s)))
    args = tuple(Number(v) for v in a_s) + tuple(Number(v) for v in b_s)
    expr = FunctionApp("genhyper", params, args + (Var("z"),))
    value = eval_expr(expr, {"z": z}, NumericConfig(precision_digits=25))
    with mp.workdps(30):
        ref = oracles.hyper_series(list(a_s), list(b_s), z)
    assert agree(value, ref)


def test_two_f_one_log_identity():
    # 2F1(1,1;2;1/2) = 2 ln 2 to ten significant digits.
    expr = FunctionApp("genhyper", (ir.num(2), ir.num(1)),
                       (ir.ONE, ir.ONE, ir.num(2), ir.HALF))
    value = eval_expr(expr, {}, NumericConfig(precision_digits=12))
    with mp.workdps(22):
        assert abs(value - 2 * mp.log(2)) < mpf(10) ** -11


POLY_CASES = [
    (n, x) for n in (0, 1, 2, 3, 5, 7, 8)
    for x in (Fraction(-7, 10), Fraction(2, 5), Fraction(13, 10))
]  # 21 points


@pytest.mark.parametrize("n,x", POLY_CASES)
def test_oracle_orthogonal_polynomials(n, x):
    alpha, beta = Fraction(2, 5), Fraction(7, 10)
    with mp.workdps(30):
        assert agree(kernel("jacobi_poly", (alpha, beta, n), (x,)),
                     oracles.jacobi_recurrence(n, alpha, beta, x))
        assert agree(kernel("laguerre_poly", (n, alpha), (x,)),
                     oracles.laguerre_recurrence(n, alpha, x))
        assert agree(kernel("hermite_poly", (n,), (x,)),
                     oracles.hermite_recurrence(n, x))
        assert agree(kernel("cheby_t", (n,), (x,)),
                     oracles.chebyshev_t_recurrence(n, x))
        assert agree(kernel("cheby_u", (n,), (x,)),
                     oracles.chebyshev_u_recurrence(n, x))
        assert agree(kernel("legendre_poly", (n,), (x,)),
                     oracles.legendre_recurrence(n, x))


ELLIPTIC_POINTS = [Fraction(n, 100) for n in
                   (-60, -35, -20, -5, 2, 8, 15, 22, 30, 38, 45, 52, 60, 67,
                    73, 80, 86, 91, 95, 99)]  # 20 points


@pytest.mark.parametrize("m", ELLIPTIC_POINTS)
def test_oracle_elliptic(m):
    with mp.workdps(30):
        assert agree(kernel("elliptic_k", (), (m,)), oracles.elliptic_k_agm(m))
        assert agree(kernel("elliptic_e", (), (m,)), oracles.elliptic_e_agm(m))


POCHHAMMER_CASES = [
    (a, n) for a in (Fraction(-7, 10), Fraction(1, 3), Fraction(3, 2),
                     Fraction(5, 2), complex(0.3, 0.8))
    for n in (0, 1, 3, 6)
]  # 20 points


@pytest.mark.parametrize("a,n", POCHHAMMER_CASES)
def test_oracle_pochhammer(a, n):
    with mp.workdps(30):
        assert agree(kernel("pochhammer", (), (a, n)),
                     oracles.pochhammer_product(a, n))


BINOMIAL_CASES = [
    (a, b) for a in (Fraction(9, 2), Fraction(13, 3), Fraction(7), Fraction(21, 4))
    for b in (Fraction(1, 2), Fraction(1), Fraction(2), Fraction(5, 2), Fraction(3))
]  # 20 points


@pytest.mark.parametrize("a,b", BINOMIAL_CASES)
def test_oracle_binomial(a, b):
    with mp.workdps(35):
        ref = oracles.spouge_gamma(a + 1) / (
            oracles.spouge_gamma(b + 1) * oracles.spouge_gamma(a - b + 1))
        assert agree(kernel("binomial", (), (a, b)), ref)


def test_finite_sum_and_product():
    body = ir.power(Var("k"), ir.num(2))
    total = eval_expr(BigOp(ir.OP_SUM, "k", ir.ZERO, ir.num(10), body), {}, CONFIG)
    assert abs(total - 385) < TOL
    prod = eval_expr(BigOp(ir.OP_PROD, "k", ir.ONE, ir.num(6), Var("k")), {}, CONFIG)
    assert abs(prod - 720) < TOL


def test_quadrature_against_simpson():
    body = ir.power(Const(ir.EULER_E), ir.neg_term(ir.power(Var("t"), ir.num(2))))
    value = eval_expr(BigOp(ir.OP_INT, "t", ir.ZERO, ir.ONE, body), {}, CONFIG)
    with mp.workdps(30):
        ref = oracles.simpson(lambda t: mp.exp(-t * t), 0, 1, 4000)
    assert abs(value - ref) < mpf(10) ** -9


def test_integral_of_square_is_exact():
    value = eval_expr(
        BigOp(ir.OP_INT, "t", ir.ZERO, ir.ONE, ir.power(Var("t"), ir.num(2))),
        {}, CONFIG)
    assert abs(value - mpf(1) / 3) < TOL


CONJUGATE_FUNCS = [
    ("sin", ()), ("cos", ()), ("sinh", ()), ("cosh", ()), ("erf", ()),
    ("gamma", ()), ("bessel_j", (Fraction(1, 2),)),
]


@pytest.mark.parametrize("func,params", CONJUGATE_FUNCS)
def test_conjugate_symmetry(func, params):
    # Real-analytic kernels commute with conjugation on their test domain.
    for z in (complex(0.7, 0.4), complex(1.3, -0.6), complex(0.2, 1.1)):
        v1 = kernel(func, params, (z,))
        v2 = kernel(func, params, (z.conjugate(),))
        assert abs(mp.conj(mpc(v1)) - mpc(v2)) < TOL


# --- assignment generation ---

def test_default_assignments_cartesian():
    out = generate_assignments({"x", "y"}, [], None, CONFIG)
    assert len(out) == 9
    assert {frozenset(a.items()) for a in out} == {
        frozenset({("x", vx), ("y", vy)})
        for vx in CONFIG.test_values for vy in CONFIG.test_values
    }


def test_blueprint_value_overrides():
    specials = SpecialValueAssignment({"x": Fraction(1, 2)}, "0 < var < 1 ==> 1/2")
    out = generate_assignments({"x"}, [], specials, CONFIG)
    assert out == [{"x": Fraction(1, 2)}]


def test_integer_domain_uses_smallest_members():
    domain = VariableDomain("n", "integer",
                            progression=(Fraction(0), Fraction(1), None))
    out = generate_assignments({"n"}, [domain], None, CONFIG)
    assert out == [{"n": Fraction(0)}, {"n": Fraction(1)}, {"n": Fraction(2)}]


def test_interval_domain_filters_defaults():
    domain = VariableDomain("x", "real",
                            interval=(Fraction(0), True, Fraction(1), True))
    out = generate_assignments({"x"}, [domain], None, CONFIG)
    assert out == [{"x": Fraction(1, 2)}]


def test_closed_formula_single_empty_assignment():
    assert generate_assignments(set(), [], None, CONFIG) == [{}]


def test_blueprint_value_wins_over_conflicting_domain():
    specials = SpecialValueAssignment({"x": Fraction(1, 2)}, "rule")
    domain = VariableDomain("x", "real",
                            interval=(Fraction(2), False, None, False))
    out = generate_assignments({"x"}, [domain], specials, CONFIG)
    assert out == [{"x": Fraction(1, 2)}]


# --- relation verification ---

def _sin(x):
    return _f("sin", x)


def _cos(x):
    return _f("cos", x)


def test_double_angle_verified():
    rel = ir.Relation(ir.REL_EQ, _sin(ir.mul(ir.num(2), Var("x"))),
                      ir.mul(ir.num(2), _sin(Var("x")), _cos(Var("x"))))
    out = verify_numeric(rel, (), None, CONFIG)
    assert out.classification == CLASS_VERIFIED
    assert len(out.evaluations) == 3


def test_seeded_sign_error_above_threshold():
    rel = ir.Relation(ir.REL_EQ, _sin(ir.mul(ir.num(2), Var("x"))),
                      ir.mul(ir.num(2), _sin(Var("x")), _sin(Var("x"))))
    out = verify_numeric(rel, (), None, CONFIG)
    assert out.classification == CLASS_ABOVE_THRESHOLD
    by_x = {ev.assignment["x"]: ev.discrepancy for ev in out.evaluations}
    assert by_x["1/2"] == pytest.approx(0.3818, abs=5e-4)
    assert out.worst > 0.001


def test_all_values_filtered_is_no_valid_values():
    domain = VariableDomain("x", "real",
                            interval=(Fraction(10), False, None, False))
    rel = ir.Relation(ir.REL_EQ, Var("x"), Var("x"))
    out = verify_numeric(rel, [domain], None, CONFIG)
    assert out.classification == CLASS_NO_VALID_VALUES


def test_inequality_relation_checked():
    rel = ir.Relation(ir.REL_LT, ir.power(Var("x"), ir.num(2)),
                      ir.add(ir.power(Var("x"), ir.num(2)), ir.ONE))
    out = verify_numeric(rel, (), None, CONFIG)
    assert out.classification == CLASS_VERIFIED
    # The reversed relation fails with the violation margin recorded.
    flipped = ir.Relation(ir.REL_GT, ir.power(Var("x"), ir.num(2)),
                          ir.add(ir.power(Var("x"), ir.num(2)), ir.ONE))
    out = verify_numeric(flipped, (), None, CONFIG)
    assert out.classification == CLASS_ABOVE_THRESHOLD


def test_ne_relation_uses_threshold_tolerance():
    rel = ir.Relation(ir.REL_NE, Var("x"), ir.add(Var("x"), ir.ONE))
    assert verify_numeric(rel, (), None, CONFIG).classification == CLASS_VERIFIED
    rel_eq = ir.Relation(ir.REL_NE, Var("x"), Var("x"))
    assert verify_numeric(rel_eq, (), None, CONFIG).classification == \
        CLASS_ABOVE_THRESHOLD


def test_singularity_bookkeeping():
    # 1/(x - 1/2) hits a pole at the x = 1/2 test value and is skipped.
    body = ir.div(ir.ONE, ir.sub(Var("x"), ir.HALF))
    rel = ir.Relation(ir.REL_EQ, body, body)
    out = verify_numeric(rel, (), None, CONFIG)
    assert out.classification == CLASS_VERIFIED
    assert len(out.evaluations) + len(out.skipped) == 3
    assert len(out.skipped) == 1


def test_numerically_unsupported_function():
    rel = ir.Relation(
        ir.REL_EQ,
        FunctionApp("qgenhyper", (ir.num(1), ir.num(1)),
                    (Var("a"), Var("b"), Var("z"))),
        ir.ONE,
    )
    out = verify_numeric(rel, (), None, CONFIG)
    assert out.classification == "numerically_unsupported"
    assert out.detail == "qgenhyper"


def test_determinism():
    rel = ir.Relation(ir.REL_EQ, _sin(ir.mul(ir.num(2), Var("x"))),
                      ir.mul(ir.num(2), _sin(Var("x")), _cos(Var("x"))))
    out1 = verify_numeric(rel, (), None, CONFIG)
    out2 = verify_numeric(rel, (), None, CONFIG)
    assert [ev.__dict__ for ev in out1.evaluations] == \
        [ev.__dict__ for ev in out2.evaluations]
    assert out1.classification == out2.classification


def test_timeout_is_strict():
    big_sum = BigOp(ir.OP_SUM, "k", ir.ZERO, ir.num(100_000_000),
                    _sin(Var("k")))
    rel = ir.Relation(ir.REL_EQ, big_sum, ir.ZERO)
    config = NumericConfig(timeout_seconds=2)
    start = time.monotonic()
    out = verify_numeric(rel, (), None, config)
    elapsed = time.monotonic() - start
    assert out.classification == CLASS_TIMEOUT
    assert elapsed < 3.0


def test_branch_sensitive_tagging():
    # (-2)^(1/2) is a principal-branch choice and gets tagged.
    rel = ir.Relation(ir.REL_EQ,
                      Pow(ir.num(-2), ir.HALF), Pow(ir.num(-2), ir.HALF))
    out = verify_numeric(rel, (), None, CONFIG)
    assert out.classification == CLASS_VERIFIED
    assert out.branch_sensitive


def test_precision_guard_digits():
    # Working precision carries ten guard digits past the request.
    value = eval_expr(FunctionApp("gamma", (), (ir.HALF,)), {},
                      NumericConfig(precision_digits=10))
    with mp.workdps(30):
        assert abs(value - mp.sqrt(mp.pi)) < mpf(10) ** -15
