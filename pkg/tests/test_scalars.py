"""Unit tests for exact scalars: Q(i), cyclotomic extensions, roots and predicates."""

import random
from fractions import Fraction

import pytest

from germkit.exceptions import IncompatibleFields, ScalingObstruction
from germkit.services.scalars import (
    I_UNIT,
    ONE,
    ZERO,
    Cyclotomic,
    GaussianRational,
    Modulus,
    minimal_polynomial,
    modulus_compare,
    nth_root,
    power_equals,
    root_of_unity_order,
    solve_linear,
    zeta_power,
)


class TestGaussianRational:
    def test_product_with_conjugate_is_norm(self):
        x = GaussianRational(1, 1)
        assert x * x.conjugate() == 2
        assert x.norm() == 2

    def test_inverse(self):
        x = GaussianRational(1, 1)
        assert x.inverse() == GaussianRational(Fraction(1, 2), Fraction(-1, 2))
        assert x * x.inverse() == ONE

    def test_normalized_storage_makes_equal_values_equal(self):
        assert GaussianRational(Fraction(2, 4), Fraction(1, 2)) == GaussianRational(Fraction(1, 2), Fraction(1, 2))

    def test_equality_and_hash_with_rationals(self):
        assert GaussianRational(2) == 2
        assert GaussianRational(Fraction(1, 3)) == Fraction(1, 3)
        assert hash(GaussianRational(Fraction(1, 3))) == hash(Fraction(1, 3))

    def test_division_by_zero(self):
        with pytest.raises(ZeroDivisionError):
            ONE / ZERO

    @pytest.mark.parametrize(
        "value, text",
        [
            (GaussianRational(Fraction(3, 2), Fraction(1, 3)), "3/2+1/3i"),
            (GaussianRational(0, -1), "-i"),
            (GaussianRational(0, Fraction(1, 3)), "1/3i"),
            (GaussianRational(2, -1), "2-i"),
            (GaussianRational(-5), "-5"),
        ],
    )
    def test_str(self, value, text):
        assert str(value) == text


def _random_gaussian(rng: random.Random) -> GaussianRational:
    return GaussianRational(
        Fraction(rng.randint(-9, 9), rng.randint(1, 6)),
        Fraction(rng.randint(-9, 9), rng.randint(1, 6)),
    )


def _random_cyclotomic(rng: random.Random, order: int = 5):
    zeta = zeta_power(order)
    return sum((_random_gaussian(rng) * zeta ** k for k in range(3)), ZERO)


class TestFieldAxioms:
    @pytest.mark.parametrize("seed", range(8))
    def test_gaussian_triples(self, seed):
        rng = random.Random(seed)
        a, b, c = (_random_gaussian(rng) for _ in range(3))
        assert (a + b) + c == a + (b + c)
        assert (a * b) * c == a * (b * c)
        assert a * (b + c) == a * b + a * c
        assert a * b == b * a
        assert a - a == ZERO
        if a:
            assert a * a.inverse() == ONE
            assert (b / a) * a == b

    @pytest.mark.parametrize("seed", range(4))
    def test_cyclotomic_triples(self, seed):
        rng = random.Random(100 + seed)
        a, b, c = (_random_cyclotomic(rng) for _ in range(3))
        assert (a * b) * c == a * (b * c)
        assert a * (b + c) == a * b + a * c
        if a:
            assert a * a.inverse() == ONE

    @pytest.mark.parametrize("seed", range(8))
    def test_modulus_of_reciprocal_is_opposite(self, seed):
        rng = random.Random(seed)
        x = _random_gaussian(rng)
        if not x:
            x = GaussianRational(seed + 2, 1)
        opposite = {Modulus.LESS: Modulus.GREATER, Modulus.GREATER: Modulus.LESS, Modulus.EQUAL: Modulus.EQUAL}
        assert modulus_compare(x.inverse()) == opposite[modulus_compare(x)]

    @pytest.mark.parametrize("x", [GaussianRational(Fraction(3, 5), Fraction(4, 5)), I_UNIT, -ONE])
    def test_unit_modulus_is_its_own_opposite(self, x):
        assert modulus_compare(x) == Modulus.EQUAL
        assert modulus_compare(x.inverse()) == Modulus.EQUAL


class TestCyclotomic:
    def test_minimal_polynomial_is_cyclotomic_when_4_does_not_divide(self):
        assert minimal_polynomial(3) == (ONE, ONE, ONE)
        assert Cyclotomic.degree(5) == 4

    def test_minimal_polynomial_over_gaussian_field_for_order_8(self):
        # ζ_8² = i
        assert minimal_polynomial(8) == (-I_UNIT, ZERO, ONE)
        assert zeta_power(8) ** 2 == I_UNIT

    def test_small_orders_live_in_gaussian_field(self):
        assert zeta_power(1) == ONE
        assert zeta_power(2) == -ONE
        assert zeta_power(4) == I_UNIT

    def test_sixth_root_relations(self):
        zeta = zeta_power(6)
        assert isinstance(zeta, Cyclotomic)
        assert zeta ** 3 == -1
        assert zeta ** 6 == 1
        assert zeta * zeta == zeta - 1

    def test_elements_in_base_field_are_demoted(self):
        zeta = zeta_power(3)
        value = zeta + zeta ** 2
        assert isinstance(value, GaussianRational)
        assert value == -1

    def test_inverse_and_conjugate(self):
        zeta = zeta_power(6)
        x = zeta + 2
        assert x * x.inverse() == ONE
        assert zeta * zeta.conjugate() == ONE

    def test_mixing_orders_raises(self):
        with pytest.raises(IncompatibleFields):
            zeta_power(3) + zeta_power(5)

    def test_str(self):
        assert str(zeta_power(6)) == "zeta(6)"
        assert str(zeta_power(6) * 2 + 1) == "1+2*zeta(6)"


class TestPredicates:
    @pytest.mark.parametrize(
        "value, order",
        [(ONE, 1), (-ONE, 2), (I_UNIT, 4), (-I_UNIT, 4), (GaussianRational(2), None)],
    )
    def test_root_of_unity_order_in_gaussian_field(self, value, order):
        assert root_of_unity_order(value) == order

    def test_root_of_unity_order_cyclotomic(self):
        assert root_of_unity_order(zeta_power(6)) == 6
        assert root_of_unity_order(zeta_power(6) ** 2) == 3
        assert root_of_unity_order(GaussianRational(Fraction(3, 5), Fraction(4, 5))) is None

    @pytest.mark.parametrize(
        "value, expected",
        [
            (GaussianRational(Fraction(1, 2)), Modulus.LESS),
            (GaussianRational(2), Modulus.GREATER),
            (GaussianRational(Fraction(3, 5), Fraction(4, 5)), Modulus.EQUAL),
            (GaussianRational(1, 1), Modulus.GREATER),
        ],
    )
    def test_modulus_compare(self, value, expected):
        assert modulus_compare(value) == expected

    def test_modulus_of_root_of_unity(self):
        assert modulus_compare(zeta_power(6)) == Modulus.EQUAL

    def test_modulus_of_cyclotomic_with_rational_norm(self):
        # |2ζ_3|² = 4
        assert modulus_compare(zeta_power(3) * 2) == Modulus.GREATER

    def test_power_equals(self):
        assert power_equals(GaussianRational(2), 3, 8)
        assert not power_equals(GaussianRational(2), 3, 9)
        assert power_equals(zeta_power(6), 6, 1)


class TestRoots:
    def test_square_root_picks_positive_real_part(self):
        assert nth_root(GaussianRational(4), 2) == 2

    def test_square_root_of_minus_one(self):
        assert nth_root(-ONE, 2) == I_UNIT

    def test_gaussian_root(self):
        assert nth_root(GaussianRational(0, 2), 2) == GaussianRational(1, 1)

    def test_cube_root_of_rational(self):
        assert nth_root(GaussianRational(Fraction(8, 27)), 3) == Fraction(2, 3)

    def test_first_root_is_identity(self):
        x = GaussianRational(3, 7)
        assert nth_root(x, 1) == x

    @pytest.mark.parametrize("value, m", [(GaussianRational(2), 2), (I_UNIT, 2), (GaussianRational(3), 3)])
    def test_missing_root_is_an_obstruction(self, value, m):
        with pytest.raises(ScalingObstruction):
            nth_root(value, m)


class TestSolveLinear:
    def test_two_by_two(self):
        matrix = [[GaussianRational(2), GaussianRational(1)], [GaussianRational(1), GaussianRational(3)]]
        x, y = solve_linear(matrix, [GaussianRational(5), GaussianRational(10)])
        assert (x, y) == (1, 3)

    def test_singular_system(self):
        with pytest.raises(ZeroDivisionError):
            solve_linear([[ONE, ONE], [ONE, ONE]], [ONE, ZERO])
