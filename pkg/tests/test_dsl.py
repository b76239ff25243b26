import numpy as np
import pytest

from qeforge.dsl import BinOp, Call, Ident, Neg, ScalarField, parse, pretty
from qeforge.errors import ParseError, SingularityError


class TestParse:
    def test_kappa_quotient_tree(self):
        tree = parse("kappa/(x1+x2)")
        assert tree == BinOp(op="/", left=Ident(name="kappa"),
                             right=BinOp(op="+", left=Ident(name="x1"),
                                         right=Ident(name="x2")))

    def test_syntax_error_offset(self):
        parse("2*x1p")
        with pytest.raises(ParseError) as err:
            parse("2*/x1")
        assert err.value.offset == 2

    def test_call_with_negated_parameter(self):
        assert parse("exp(-f)") == Call(fn="exp", args=(Neg(arg=Ident(name="f")),))

    def test_unknown_function_at_parse_time(self):
        with pytest.raises(ParseError):
            parse("sinh(x1)")

    def test_wrong_arity(self):
        with pytest.raises(ParseError):
            parse("pow(x1)")
        with pytest.raises(ParseError):
            parse("exp(x1, x2)")

    def test_power_right_associative(self):
        assert ScalarField("2^3^2", []).eval_value([]) == 512.0

    def test_unary_minus_binds_tighter_than_power_base(self):
        # grammar: factor := unary ('^' factor)?, so -2^2 = (-2)^2
        assert ScalarField("-2^2", []).eval_value([]) == 4.0

    def test_precedence(self):
        assert ScalarField("2+3*4^2", []).eval_value([]) == 50.0

    def test_primed_identifier_names(self):
        tree = parse("x_1' + 2")
        assert tree.left == Ident(name="x_1'")

    def test_unexpected_character(self):
        with pytest.raises(ParseError) as err:
            parse("x1 @ x2")
        assert err.value.offset == 3


PRINT_CORPUS = [
    "1", "-1", "x1", "kappa/(x1+x2)", "2*x1p", "exp(-f)", "2+3*4^2",
    "x1^2", "-x1^2", "x1^-2", "2^3^2", "(x1+x2)^(kappa+1)",
    "sin(x1)*cos(x2)", "sqrt(1+x1^2)", "pow(x1, 2)", "log(exp(x1))",
    "x1*x2/(1+x2^2)", "-(x1-x2)", "1e-3*x1", "2.5E2", "0.25+x1",
    "x1/x2/x3", "x1-x2-x3", "x1^(x2^2)", "exp(x1)*exp(-x1)",
    "alpha*beta+gamma", "x1p*x2p", "(x1)", "((x1+x2))", "-(-x1)",
    "sin(cos(x1))", "1/(1+exp(-x1))", "x1*(x2+x3)*(x4-1)",
    "sqrt(x1)/sqrt(x2)", "pow(x1+x2, kappa)", "x1^2+x2^2-2*x1*x2",
    "0", "-0.5", "3.25*x1^3", "log(x1+10)", "cos(-x2)",
    "x1^2^3", "a_b*c_d", "x'*y'", "(x1+1)*(x1-1)", "2*(3+4)",
    "exp(x1+x2)", "x1/(x2*x3)", "1-x1+x2-x3", "x1*x1*x1", "pi_val+1",
]


@pytest.mark.parametrize("text", PRINT_CORPUS)
def test_parse_print_parse_idempotent(text):
    tree = parse(text)
    printed = pretty(tree)
    assert parse(printed) == tree
    assert pretty(parse(printed)) == printed


class TestEvalJet:
    def test_product_first_order(self):
        f = ScalarField("x1*x2", ["x1", "x2"])
        j = f.eval([2.0, 3.0], 1)
        assert j.value == 6.0
        assert j.partial((1, 0)) == 3.0
        assert j.partial((0, 1)) == 2.0

    def test_quotient_rule(self):
        f = ScalarField("kappa/(x1+x2)", ["x1", "x2"], {"kappa": -2.0})
        j = f.eval([1.0, 1.0], 1)
        assert j.value == -1.0
        assert j.partial((1, 0)) == pytest.approx(0.5)
        assert j.partial((0, 1)) == pytest.approx(0.5)

    def test_power_with_parameter_exponent(self):
        f = ScalarField("(x1+x2)^(kappa+1)", ["x1", "x2"], {"kappa": 1.0})
        j = f.eval([1.0, 1.0], 2)
        assert j.value == pytest.approx(4.0)
        assert j.partial((1, 0)) == pytest.approx(4.0)
        assert j.partial((2, 0)) == pytest.approx(2.0)

    def test_unbound_identifier(self):
        f = ScalarField("x1+mystery", ["x1"])
        with pytest.raises(ValueError, match="mystery"):
            f.eval([1.0], 1)

    def test_point_dimension_check(self):
        with pytest.raises(ValueError):
            ScalarField("x1", ["x1", "x2"]).eval([1.0], 1)

    def test_singularity_carries_context(self):
        f = ScalarField("1/(x1-1)", ["x1"])
        with pytest.raises(SingularityError) as err:
            f.eval([1.0], 1)
        assert err.value.point == (1.0,)
        assert "sub-expression" in str(err.value)

    def test_log_singularity(self):
        f = ScalarField("log(x1-2)", ["x1"])
        with pytest.raises(SingularityError):
            f.eval([1.0], 0)

    def test_variable_exponent_uses_exp_log(self):
        f = ScalarField("x1^x2", ["x1", "x2"])
        j = f.eval([2.0, 3.0], 1)
        assert j.value == pytest.approx(8.0)
        assert j.partial((1, 0)) == pytest.approx(3.0 * 2.0 ** 2)
        assert j.partial((0, 1)) == pytest.approx(8.0 * np.log(2.0))

    def test_non_integer_power_requires_positive_base(self):
        f = ScalarField("x1^0.5", ["x1"])
        assert f.eval([4.0], 1).value == pytest.approx(2.0)
        with pytest.raises(SingularityError):
            f.eval([-4.0], 1)
        # integer exponents are fine on negative bases
        g = ScalarField("x1^3", ["x1"])
        assert g.eval([-2.0], 1).value == pytest.approx(-8.0)

    def test_with_params_rebinding(self):
        f = ScalarField("c*x1", ["x1"], {"c": 2.0})
        assert f.eval_value([3.0]) == 6.0
        assert f.with_params(c=5.0).eval_value([3.0]) == 15.0


def _random_expression(rng):
    """Random smooth expression over x1, x2, x3 with guarded domains."""
    leaves = ["x1", "x2", "x3", "x1", "x2", "x3",
              f"{rng.uniform(0.3, 2.0):.3f}"]

    def atom():
        return leaves[rng.randint(len(leaves))]

    def build(depth):
        if depth == 0:
            return atom()
        op = rng.randint(7)
        if op == 0:
            return f"({build(depth - 1)} + {build(depth - 1)})"
        if op == 1:
            return f"({build(depth - 1)} - {build(depth - 1)})"
        if op == 2:
            return f"({build(depth - 1)} * {build(depth - 1)})"
        if op == 3:
            return f"({build(depth - 1)} / (2.5 + sin({build(depth - 1)})))"
        if op == 4:
            return f"sin({build(depth - 1)})"
        if op == 5:
            return f"exp(0.4 * cos({build(depth - 1)}))"
        return f"log(2.2 + sin({build(depth - 1)}))"

    return build(3)


def central_differences(func, point, order_index, steps=(1e-5, 2e-4, 2e-3)):
    """Central finite differences of a scalar function for |alpha| <= 3."""
    point = np.asarray(point, dtype=float)
    alpha = tuple(order_index)
    total = sum(alpha)
    h1, h2, h3 = steps

    def shift(p, i, h):
        q = p.copy()
        q[i] += h
        return q

    def d1(f, i, h):
        return lambda p: (f(shift(p, i, h)) - f(shift(p, i, -h))) / (2 * h)

    def d2(f, i, h):
        return lambda p: (f(shift(p, i, h)) - 2.0 * f(p)
                          + f(shift(p, i, -h))) / h ** 2

    vars_used = [i for i, a in enumerate(alpha) for _ in range(a)]
    if total == 0:
        return func(point)
    if total == 1:
        return d1(func, vars_used[0], h1)(point)
    if total == 2:
        if vars_used[0] == vars_used[1]:
            return d2(func, vars_used[0], h2)(point)
        return d1(d1(func, vars_used[0], h2), vars_used[1], h2)(point)
    # total == 3: apply a first difference over a second difference
    i, j, k = vars_used
    if i == j:
        return d1(d2(func, i, h3), k, h3)(point)
    if j == k:
        return d1(d2(func, j, h3), i, h3)(point)
    return d1(d1(d1(func, i, h3), j, h3), k, h3)(point)


def test_jet_derivatives_match_finite_differences():
    """Every stored derivative of order <= 3 agrees with central FD."""
    rng = np.random.RandomState(99)
    coords = ["x1", "x2", "x3"]
    from qeforge.jets import _space

    for _ in range(12):
        field = ScalarField(_random_expression(rng), coords)
        point = rng.uniform(0.4, 1.2, 3)
        jet = field.eval(point, 3)
        for alpha in _space(3, 3).alphas:
            fd = central_differences(field.eval_value, point, alpha)
            stored = jet.partial(alpha)
            tol = 1e-4 * max(1.0, abs(fd), abs(stored))
            assert abs(stored - fd) <= tol, (field.expr, alpha, stored, fd)


def test_order_zero_matches_plain_evaluation():
    rng = np.random.RandomState(7)
    for _ in range(20):
        text = _random_expression(rng)
        field = ScalarField(text, ["x1", "x2", "x3"])
        p = rng.uniform(0.4, 1.2, 3)
        assert field.eval(p, 0).value == pytest.approx(field.eval_value(p),
                                                       abs=1e-15, rel=1e-15)
