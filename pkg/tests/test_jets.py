import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qeforge import jets
from qeforge.errors import SingularityError
from qeforge.jets import Jet, seed


def random_jet(rng, n_vars, order):
    return Jet(n_vars, order, rng.uniform(-2.0, 2.0, jets.n_terms(n_vars, order)))


class TestSeed:
    def test_coordinate_function_2d(self):
        j = seed((2.0, 3.0), 0, 2)
        assert j.value == 2.0
        assert j.partial((1, 0)) == 1.0
        assert j.partial((0, 1)) == 0.0
        assert j.partial((2, 0)) == 0.0
        assert j.partial((1, 1)) == 0.0

    def test_second_variable(self):
        j = seed((0.0, 0.0), 1, 1)
        assert j.value == 0.0
        assert j.partial((0, 1)) == 1.0

    def test_fourth_variable_order3(self):
        j = seed((1.0, 1.0, 1.0, 1.0), 3, 3)
        assert j.value == 1.0
        assert j.partial((0, 0, 0, 1)) == 1.0
        assert j.partial((0, 0, 0, 2)) == 0.0
        assert j.partial((1, 0, 0, 1)) == 0.0

    def test_out_of_range_errors(self):
        with pytest.raises(ValueError):
            seed((1.0, 2.0), 2, 1)
        with pytest.raises(ValueError):
            seed((1.0, 2.0), -1, 1)
        with pytest.raises(ValueError):
            seed((1.0, 2.0), 0, 5)
        with pytest.raises(ValueError):
            seed((1.0, 2.0), 0, -1)


class TestArithmetic:
    def test_polynomial_identity(self):
        # (1 + x)(1 - x) = 1 - x^2 at x = 0
        x = seed((0.0,), 0, 2)
        prod = (1.0 + x) * (1.0 - x)
        assert prod.value == 1.0
        assert prod.partial((1,)) == 0.0
        assert prod.partial((2,)) == -2.0

    def test_constant_division(self):
        f = Jet.const(5.0, 3, 2)
        g = Jet.const(2.0, 3, 2)
        q = f / g
        assert q.value == 2.5
        assert np.all(q.coeffs[1:] == 0.0)

    def test_square_of_coordinate(self):
        a = seed((1.0,), 0, 2)
        sq = a * a
        assert sq.value == 1.0
        assert sq.partial((1,)) == 2.0
        assert sq.partial((2,)) == 2.0

    def test_mixed_order_takes_min(self):
        a = seed((1.0, 2.0), 0, 3)
        b = seed((1.0, 2.0), 1, 2)
        assert (a * b).order == 2
        assert (a + b).order == 2

    def test_n_vars_mismatch(self):
        with pytest.raises(ValueError):
            seed((1.0,), 0, 2) + seed((1.0, 2.0), 0, 2)

    def test_division_by_zero_value(self):
        with pytest.raises(SingularityError):
            Jet.const(1.0, 2, 2) / Jet.const(0.0, 2, 2)

    def test_ring_axioms_random(self):
        rng = np.random.RandomState(0)
        for _ in range(100):
            a = random_jet(rng, 4, 3)
            b = random_jet(rng, 4, 3)
            c = random_jet(rng, 4, 3)
            assoc = ((a * b) * c).coeffs - (a * (b * c)).coeffs
            comm = (a * b).coeffs - (b * a).coeffs
            assert np.max(np.abs(assoc)) <= 1e-10
            assert np.max(np.abs(comm)) <= 1e-12
            distrib = (a * (b + c)).coeffs - (a * b + a * c).coeffs
            assert np.max(np.abs(distrib)) <= 1e-10

    def test_div_mul_round_trip(self):
        rng = np.random.RandomState(1)
        for _ in range(50):
            a = random_jet(rng, 3, 3)
            b = random_jet(rng, 3, 3)
            if abs(b.value) < 1e-6:
                continue
            back = (a * b) / b
            assert np.max(np.abs(back.coeffs - a.coeffs)) <= 1e-10


class TestAnalytic:
    def test_exp_of_seed(self):
        a = seed((0.0,), 0, 2)
        e = jets.exp(a)
        assert e.value == pytest.approx(1.0)
        assert e.partial((1,)) == pytest.approx(1.0)
        assert e.partial((2,)) == pytest.approx(1.0)

    def test_pow_real_of_linear_sum(self):
        alpha = 0.37
        a = seed((1.0, 1.0), 0, 2) + seed((1.0, 1.0), 1, 2)
        p = jets.pow_real(a, alpha)
        assert p.value == pytest.approx(2.0 ** alpha)
        assert p.partial((1, 0)) == pytest.approx(alpha * 2.0 ** (alpha - 1))
        assert p.partial((2, 0)) == pytest.approx(
            alpha * (alpha - 1) * 2.0 ** (alpha - 2))

    def test_log_exp_round_trip(self):
        rng = np.random.RandomState(2)
        for _ in range(25):
            a = random_jet(rng, 2, 3)
            back = jets.log(jets.exp(a))
            assert np.max(np.abs(back.coeffs - a.coeffs)) <= 1e-12

    def test_sin_cos_pythagoras(self):
        rng = np.random.RandomState(3)
        a = random_jet(rng, 2, 3)
        one = jets.sin(a) * jets.sin(a) + jets.cos(a) * jets.cos(a)
        expected = Jet.const(1.0, 2, 3)
        assert np.max(np.abs(one.coeffs - expected.coeffs)) <= 1e-12

    def test_sqrt_square(self):
        rng = np.random.RandomState(4)
        a = random_jet(rng, 2, 3) + 5.0  # keep positive
        back = jets.sqrt(a) * jets.sqrt(a)
        assert np.max(np.abs(back.coeffs - a.coeffs)) <= 1e-11

    def test_domain_errors(self):
        neg = Jet.const(-1.0, 1, 2)
        with pytest.raises(SingularityError):
            jets.log(neg)
        with pytest.raises(SingularityError):
            jets.sqrt(neg)
        with pytest.raises(SingularityError):
            jets.pow_real(neg, 0.5)

    def test_negative_integer_power_allows_negative_base(self):
        a = Jet.const(-2.0, 1, 2)
        assert jets.pow_real(a, -2.0).value == pytest.approx(0.25)

    def test_analytic_dispatch(self):
        a = Jet.const(2.0, 1, 2)
        assert jets.analytic("exp", a).value == pytest.approx(math.exp(2.0))
        assert jets.analytic("pow_real", a, r=3.0).value == pytest.approx(8.0)
        with pytest.raises(ValueError):
            jets.analytic("tanh", a)


class TestPartial:
    def test_partial_validates_order(self):
        j = seed((1.0, 1.0), 0, 2)
        with pytest.raises(ValueError):
            j.partial((3, 0))
        with pytest.raises(ValueError):
            j.partial((1,))

    def test_derivative_shift(self):
        x = seed((2.0, 3.0), 0, 3)
        y = seed((2.0, 3.0), 1, 3)
        f = x * x * y
        fx = f.d(0)
        assert fx.value == pytest.approx(2 * 2.0 * 3.0)
        assert fx.partial((1, 0)) == pytest.approx(2 * 3.0)
        assert fx.partial((0, 1)) == pytest.approx(2 * 2.0)


@settings(max_examples=60, deadline=None)
@given(
    st.floats(min_value=-2.0, max_value=2.0),
    st.floats(min_value=-2.0, max_value=2.0),
    st.floats(min_value=0.1, max_value=2.0),
)
def test_mul_matches_scalar_calculus(a0, b0, c0):
    """Jet arithmetic agrees with classical calculus on f = (x+a)(x+b)/c."""
    x = seed((0.5,), 0, 3)
    f = (x + a0) * (x + b0) / c0
    # f(x) = (x^2 + (a+b)x + ab)/c at x0 = 0.5
    x0 = 0.5
    assert f.value == pytest.approx((x0 + a0) * (x0 + b0) / c0, abs=1e-12)
    assert f.partial((1,)) == pytest.approx((2 * x0 + a0 + b0) / c0, abs=1e-12)
    assert f.partial((2,)) == pytest.approx(2.0 / c0, abs=1e-12)
    assert f.partial((3,)) == pytest.approx(0.0, abs=1e-12)
