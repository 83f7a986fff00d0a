"""Unit tests for truncated power series in one and two variables."""

import random
from fractions import Fraction

import pytest

from germkit.exceptions import PreconditionError, TruncationExhausted
from germkit.services.scalars import I_UNIT, ONE, GaussianRational, zeta_power
from germkit.services.series import INFINITY, BiSeries, UniSeries, compose_pair, eval_along_curve

N = 8


@pytest.fixture()
def z():
    return BiSeries.z(N)


@pytest.fixture()
def w():
    return BiSeries.w(N)


class TestBiSeriesArithmetic:
    def test_binomial_square(self, z, w):
        square = (z + w) ** 2
        assert dict(square.terms) == {(2, 0): 1, (1, 1): 2, (0, 2): 1}

    def test_products_drop_terms_above_truncation(self, z, w):
        product = (z ** 5) * (w ** 4)
        assert product.is_zero()
        assert product.trunc == N

    def test_sum_takes_smaller_truncation(self, z):
        coarse = BiSeries.z(3)
        assert (z + coarse).trunc == 3

    def test_unit_reciprocal_is_geometric_series(self, w):
        inverse = (1 - w).unit_reciprocal()
        assert all(inverse.coefficient(0, k) == 1 for k in range(N + 1))

    def test_non_unit_has_no_reciprocal(self, z):
        with pytest.raises(PreconditionError):
            z.unit_reciprocal()

    def test_gaussian_and_cyclotomic_coefficients(self, z):
        zeta = zeta_power(6)
        series = z.scale(zeta) * z.scale(zeta.conjugate())
        assert series.coefficient(2, 0) == 1
        assert (z.scale(I_UNIT) ** 2).coefficient(2, 0) == -1

    def test_coefficient_above_truncation_raises(self, z):
        with pytest.raises(TruncationExhausted):
            z.coefficient(N, 1)

    def test_scalar_division(self, z):
        assert (z / 2).coefficient(1, 0) == Fraction(1, 2)


class TestBiSeriesStructure:
    def test_multiplicity(self, z, w):
        assert (z * w + w ** 3).multiplicity() == 2
        assert BiSeries({}, N).multiplicity() is INFINITY

    def test_homogeneous_part(self, z, w):
        phi = z + z * w + w ** 2 + z ** 3
        assert dict(phi.homogeneous_part(2).terms) == {(1, 1): 1, (0, 2): 1}

    def test_monomial_factor(self, z, w):
        a, b, unit = (z ** 2 * w * (1 + z)).monomial_factor()
        assert (a, b) == (2, 1)
        assert unit == 1 + z

    def test_monomial_factor_absent(self, z, w):
        assert (z + w).monomial_factor() is None

    def test_monomial_factor_of_zero(self):
        with pytest.raises(PreconditionError):
            BiSeries({}, N).monomial_factor()

    def test_shift_divides_exactly(self, z, w):
        assert (z * w + z ** 2).shift(-1, 0) == w + z
        with pytest.raises(PreconditionError):
            (z * w + w ** 2).shift(-1, 0)

    def test_divisible_by(self, z, w):
        assert (z * w + z ** 3).divisible_by("z")
        assert not (z * w + w ** 3).divisible_by("z")

    def test_orders_along_axes(self, z, w):
        phi = z ** 2 * w + z ** 3
        assert phi.z_order() == 2
        assert phi.w_order() == 0

    def test_derivative(self, z, w):
        phi = z ** 2 * w + w ** 3
        assert phi.derivative("z") == (z * w).scale(2)
        assert phi.derivative("w") == z ** 2 + (w ** 2).scale(3)

    def test_equality_up_to_common_truncation(self):
        fine = BiSeries({(1, 0): 1, (5, 0): 1}, 6)
        coarse = BiSeries({(1, 0): 1}, 4)
        assert fine == coarse
        assert fine != BiSeries({(1, 0): 1}, 6)

    def test_str(self, z, w):
        assert str(z.scale(2) + z * w) == "2*z + z*w"
        assert str(w - z ** 2) == "w - z^2"
        assert str(BiSeries({}, N)) == "0"


class TestComposition:
    def test_compose_pair(self, z, w):
        phi = z * w
        assert compose_pair(phi, z + z ** 2, w) == z * w + z ** 2 * w

    def test_compose_respects_order(self, z, w):
        phi = z ** 2
        result = phi.compose(z + w, w, order=2)
        assert result.trunc == 2
        assert dict(result.terms) == {(2, 0): 1, (1, 1): 2, (0, 2): 1}

    def test_substituted_series_must_vanish(self, z, w):
        with pytest.raises(PreconditionError):
            z.compose(z + 1, w)

    def test_restrictions(self, z, w):
        phi = z + z * w + w ** 2
        assert phi.restrict_z() == UniSeries.variable(N)
        assert phi.restrict_w() == UniSeries({2: 1}, N)

    def test_eval_along_invariant_curve_vanishes(self, z, w):
        phi = w - z ** 2
        theta = UniSeries({2: 1}, N)
        assert eval_along_curve(phi, theta).is_zero()
        assert phi.eval_along_curve(theta).trunc == N


def _random_series(rng: random.Random, low: int = 0, terms: int = 4) -> BiSeries:
    coeffs = {}
    for _ in range(terms):
        i = rng.randint(0, 4)
        j = rng.randint(max(low - i, 0), 4)
        coeffs[(i, j)] = GaussianRational(rng.randint(-5, 5), rng.randint(-2, 2)) or ONE
    return BiSeries(coeffs, N)


class TestRingIdentities:
    @pytest.mark.parametrize("seed", range(8))
    def test_multiplicity_is_additive(self, seed):
        rng = random.Random(seed)
        phi, psi = _random_series(rng), _random_series(rng)
        m = phi.multiplicity() + psi.multiplicity()
        if m <= N:
            assert (phi * psi).multiplicity() == m

    @pytest.mark.parametrize("seed", range(6))
    def test_identity_substitution(self, seed, z, w):
        phi = _random_series(random.Random(seed))
        assert compose_pair(phi, z, w) == phi

    @pytest.mark.parametrize("seed", range(6))
    def test_reciprocal_is_an_involution(self, seed):
        rng = random.Random(seed)
        u = _random_series(rng, low=1) + (GaussianRational(rng.randint(1, 5), rng.randint(-3, 3)))
        inverse = u.unit_reciprocal()
        assert u * inverse == 1
        assert inverse.unit_reciprocal() == u

    @pytest.mark.parametrize("seed", range(6))
    def test_eval_along_curve_is_multiplicative(self, seed):
        rng = random.Random(seed)
        phi, psi = _random_series(rng), _random_series(rng)
        theta = UniSeries({k: rng.randint(-3, 3) for k in range(1, 4)}, N)
        product = eval_along_curve(phi, theta) * eval_along_curve(psi, theta)
        assert eval_along_curve(phi * psi, theta) == product


class TestUniSeries:
    def test_reversion(self):
        h = UniSeries({1: 1, 2: 1}, N)
        inverse = h.reversion()
        assert h.compose(inverse) == UniSeries.variable(N)
        # the inverse of z + z^2 has Catalan coefficients with alternating signs
        assert [inverse.coefficient(k) for k in range(1, 6)] == [1, -1, 2, -5, 14]

    def test_reciprocal(self):
        u = UniSeries({0: 2, 1: 1}, N)
        assert u * u.reciprocal() == UniSeries.constant(ONE, N)

    def test_compose_needs_vanishing_inner(self):
        with pytest.raises(PreconditionError):
            UniSeries.variable(N).compose(UniSeries.constant(1, N))

    def test_order_and_shift(self):
        s = UniSeries({3: GaussianRational(0, 1), 5: 2}, N)
        assert s.order() == 3
        assert s.shift(-3) == UniSeries({0: GaussianRational(0, 1), 2: 2}, N - 3)
        assert UniSeries({}, N).order() is INFINITY

    def test_to_bi(self):
        theta = UniSeries({2: 1, 3: -1}, N)
        assert dict(theta.to_bi("w").terms) == {(0, 2): 1, (0, 3): -1}

    def test_str(self):
        assert str(UniSeries({1: 1, 3: Fraction(-1, 8)}, N)) == "z - 1/8*z^3"
