"""Unit tests for exact surds, monomial and curve valuations, segment maps and eigen-weights."""

import random
from fractions import Fraction
from unittest.mock import patch

import pytest

from germkit.exceptions import InvariantViolated, PreconditionError, TruncationExhausted, Unsupported
from germkit.services.germ import Germ
from germkit.services.series import INFINITY, BiSeries, UniSeries
from germkit.services.valuations import (
    CurveApprox,
    Drift,
    MonomialWeights,
    PiecewiseAffine,
    QuadraticSurd,
    SegmentFamily,
    eigen_weight,
    eval_curve,
    eval_monomial,
    exponent_matrix,
    iterate_weights,
    pushforward_on_coordinates,
    segment_map,
)

SQRT2 = QuadraticSurd.sqrt(2)


def germ(text: str, order: int = 12) -> Germ:
    return Germ.from_text(text, order)


class TestQuadraticSurd:
    def test_square_factor_is_pulled_out(self):
        assert QuadraticSurd.sqrt(8) == QuadraticSurd(0, 2, 2)
        assert QuadraticSurd.sqrt(Fraction(3, 2)) == QuadraticSurd(0, Fraction(1, 2), 6)

    def test_perfect_square_is_rational(self):
        assert QuadraticSurd.sqrt(Fraction(9, 4)).is_rational()
        assert QuadraticSurd.sqrt(Fraction(9, 4)) == Fraction(3, 2)

    def test_ordering(self):
        assert SQRT2 < Fraction(3, 2)
        assert SQRT2 > Fraction(7, 5)
        assert (3 - 2 * SQRT2).sign() == 1
        assert (2 * SQRT2 - 3).sign() == -1

    def test_reciprocal(self):
        assert (1 + SQRT2).reciprocal() == SQRT2 - 1

    def test_square(self):
        assert QuadraticSurd.sqrt(6) ** 2 == 6

    def test_mixed_radicands(self):
        with pytest.raises(Unsupported):
            SQRT2 + QuadraticSurd.sqrt(3)

    def test_negative_radicand(self):
        with pytest.raises(Unsupported):
            QuadraticSurd.sqrt(-2)

    @pytest.mark.parametrize(
        "value, text",
        [
            (QuadraticSurd(1, 1, 2), "1+sqrt(2)"),
            (QuadraticSurd(1, -1, 2), "1-sqrt(2)"),
            (QuadraticSurd(0, -1, 2), "-sqrt(2)"),
            (QuadraticSurd(0, Fraction(1, 3), 6), "1/3*sqrt(6)"),
            (QuadraticSurd(Fraction(5, 2)), "5/2"),
        ],
    )
    def test_str(self, value, text):
        assert str(value) == text


class TestMonomialValuations:
    def test_weights_must_be_positive(self):
        with pytest.raises(PreconditionError):
            MonomialWeights.of(0, 1)

    def test_eval_monomial(self):
        phi = BiSeries({(2, 1): 1, (0, 3): 5}, 8)
        assert eval_monomial(MonomialWeights.of(1, 2), phi) == 4
        assert eval_monomial(MonomialWeights.of(1, Fraction(1, 3)), phi) == 1

    def test_eval_monomial_of_zero(self):
        assert eval_monomial(MonomialWeights.of(1, 1), BiSeries({}, 8)) is INFINITY

    def test_value_beyond_truncation(self):
        with pytest.raises(TruncationExhausted):
            eval_monomial(MonomialWeights.of(1, 10), BiSeries({(0, 2): 1}, 5))

    def test_normalized_and_skewness(self):
        weights = MonomialWeights.of(2, 3)
        assert weights.normalized() == MonomialWeights.of(1, Fraction(3, 2))
        assert weights.skewness == Fraction(3, 2)
        assert weights.thinness == Fraction(5, 2)

    def test_pushforward(self):
        f = germ("(w^2, z^3)")
        assert pushforward_on_coordinates(f, MonomialWeights.of(1, 1)) == (2, 3)

    @pytest.mark.parametrize("seed", range(6))
    def test_valuation_of_products_and_sums(self, seed):
        rng = random.Random(seed)
        weights = MonomialWeights.of(rng.randint(1, 2), rng.choice([1, 2, Fraction(1, 2), Fraction(3, 2)]))
        phi, psi = (
            BiSeries({(rng.randint(0, 3), rng.randint(0, 3)): rng.randint(-4, 4) or 1 for _ in range(3)}, 30)
            for _ in range(2)
        )
        v_phi, v_psi = eval_monomial(weights, phi), eval_monomial(weights, psi)
        assert eval_monomial(weights, phi * psi) == v_phi + v_psi
        v_sum = eval_monomial(weights, phi + psi)
        assert v_sum is INFINITY or v_sum >= min(v_phi, v_psi)


class TestCurveValuations:
    def test_axes(self):
        phi = BiSeries({(2, 1): 1, (3, 0): 1}, 8)
        assert eval_curve(CurveApprox.axis_z(), phi) == 2
        assert eval_curve(CurveApprox.axis_w(), phi) == 0

    def test_invariant_graph_has_infinite_value(self):
        phi = BiSeries({(0, 1): 1, (2, 0): -1}, 8)
        assert eval_curve(CurveApprox.graph(UniSeries({2: 1}, 8)), phi) is INFINITY

    def test_graph(self):
        phi = BiSeries({(0, 1): 1, (2, 0): -1}, 8)
        assert eval_curve(CurveApprox.graph(UniSeries({2: 1, 3: 1}, 8)), phi) == 3

    def test_graph_through_origin(self):
        with pytest.raises(PreconditionError):
            CurveApprox.graph(UniSeries({0: 1, 1: 1}, 8))


SEGMENT_GERMS = [
    "(2z, z^3*w + w^2)",
    "(z/2*(1+w), z*w + w^3 + z^2*w^2)",
    "(3z + z*w, w^2 + z^4*w)",
    "(-z, z^2*w^2 + w^5 + z^3*w)",
]


def _sample_points():
    return [1 + Fraction(k, 3) for k in range(20)]


class TestSegmentMaps:
    def test_piecewise_affine_envelope(self):
        phi = PiecewiseAffine.minimal([(2, 0), (1, 3), (3, 5)])
        assert phi.pieces == ((2, 0), (1, 3))
        assert phi.breakpoints() == [Fraction(3)]
        assert phi(2) == 4
        assert phi(5) == 8

    def test_zw_segment(self):
        segment = segment_map(germ("(2z, z^3*w + w^2)"), SegmentFamily.ZW)
        assert segment.map.breakpoints() == [Fraction(3)]
        assert segment.image(2) == MonomialWeights.of(1, 4)
        # min(2t, t + 3) reaches N + 1 = 13 at t = 10
        assert segment.certain_up_to == Fraction(10)
        assert segment.drift == Drift.INCREASING
        assert segment.fixed_set == []

    def test_identity_on_zw_segment(self):
        segment = segment_map(germ("(2z, w*(1+z))", 10), SegmentFamily.ZW)
        assert segment.map.pieces == ((1, 0),)
        assert segment.fixed_set == [(Fraction(1), None)]
        assert segment.fixed_points() == []
        assert segment.drift == Drift.NONE
        data = segment.to_dict()
        assert data["fixed_set"] == [["1", "inf"]]
        assert data["drift"] == "none"
        assert data["certain_up_to"] == "11"

    def test_infinity_segment_moves_down(self):
        segment = segment_map(germ("(2z, w^2 + z*w)"), SegmentFamily.INFINITY)
        assert segment.map.pieces == ((0, 2),)
        assert segment.z_limit == "fixed"
        # ν(z) = t goes to t / 2
        assert segment.parameter(4) == 2
        assert segment.image(4) == MonomialWeights.of(2, 1)
        assert segment.drift == Drift.DECREASING
        assert segment.fixed_set == []
        assert segment.certain_up_to is None
        assert segment.to_dict()["certain_up_to"] is None

    def test_identity_on_infinity_segment(self):
        segment = segment_map(germ("(2z, w*(1+z))", 10), SegmentFamily.INFINITY)
        assert segment.fixed_set == [(Fraction(1), None)]
        assert segment.drift == Drift.NONE
        assert segment.parameter(7) == 7

    def test_infinity_segment_contracts_z_curve(self):
        segment = segment_map(germ("(2z, z*w)"), SegmentFamily.INFINITY)
        assert segment.z_limit == "contracted"
        assert segment.drift == Drift.DECREASING

    @pytest.mark.parametrize("family", list(SegmentFamily))
    @pytest.mark.parametrize("text", SEGMENT_GERMS)
    def test_drift_matches_the_parameter_map(self, text, family):
        segment = segment_map(germ(text), family)
        signs = {(segment.parameter(t) > t) - (segment.parameter(t) < t) for t in _sample_points()}
        expected = {Drift.INCREASING: {1}, Drift.DECREASING: {-1}, Drift.NONE: {0}}
        if segment.drift in expected and not segment.fixed_set:
            assert signs == expected[segment.drift]

    def test_fixed_interval_meets_fixed_point(self):
        phi = PiecewiseAffine.minimal([(1, 0), (0, 3)])
        assert phi.pieces == ((1, 0), (0, 3))
        assert phi.fixed_set() == [(Fraction(1), Fraction(3))]
        assert phi.fixed_points() == []
        assert phi.drift() == Drift.DECREASING

    def test_decreasing_drift(self):
        phi = PiecewiseAffine.minimal([(0, 1)])
        assert phi.fixed_points() == [Fraction(1)]
        assert phi.drift() == Drift.DECREASING

    def test_level(self):
        phi = PiecewiseAffine.minimal([(1, 0), (0, 3)])
        assert phi.level(2) == Fraction(2)
        assert phi.level(5) is None
        assert PiecewiseAffine.minimal([(2, 0), (1, 3)]).level(4) == Fraction(2)

    def test_level_below_the_start_value(self):
        with pytest.raises(TruncationExhausted):
            PiecewiseAffine.minimal([(1, 5)]).level(3)

    @pytest.mark.parametrize("seed", range(5))
    def test_drift_agrees_with_samples(self, seed):
        rng = random.Random(seed)
        pairs = {(rng.randint(0, 4), rng.randint(-3, 4)) for _ in range(rng.randint(1, 4))}
        phi = PiecewiseAffine.minimal(pairs)
        signs = {(phi(t) > t) - (phi(t) < t) for t in [1 + Fraction(k, 4) for k in range(80)]}
        drift = phi.drift()
        if drift == Drift.NONE:
            assert signs == {0}
        elif drift == Drift.INCREASING:
            assert -1 not in signs
        elif drift == Drift.DECREASING:
            assert 1 not in signs
        for t in phi.fixed_points():
            assert phi(t) == t

    @pytest.mark.parametrize("text", SEGMENT_GERMS)
    def test_zw_family_matches_brute_force(self, text):
        f = germ(text)
        segment = segment_map(f, SegmentFamily.ZW)
        for t in _sample_points():
            assert segment.map(t) == eval_monomial(MonomialWeights.of(1, t), f.f2)

    @pytest.mark.parametrize("text", SEGMENT_GERMS)
    def test_infinity_family_matches_brute_force(self, text):
        f = germ(text)
        segment = segment_map(f, SegmentFamily.INFINITY)
        for t in _sample_points():
            assert segment.map(t) == eval_monomial(MonomialWeights.of(t, 1), f.f2)

    def test_needs_prepared_germ(self):
        with pytest.raises(PreconditionError):
            segment_map(germ("(2z + w^2, z*w)"), SegmentFamily.ZW)


class TestEigenWeights:
    def test_w2_z3(self):
        eigen = eigen_weight(germ("(w^2, z^3)"))
        assert eigen.weights == MonomialWeights.of(1, QuadraticSurd.sqrt(Fraction(3, 2)))
        assert eigen.c_infinity == QuadraticSurd.sqrt(6)
        assert str(eigen.c_infinity) == "sqrt(6)"
        assert eigen.matrix == ((0, 2), (3, 0))

    def test_symmetric(self):
        eigen = eigen_weight(germ("(z^2, w^2)"))
        assert eigen.weights == MonomialWeights.of(1, 1)
        assert eigen.c_infinity == 2

    def test_perron_root_is_a_surd(self):
        eigen = eigen_weight(germ("(z^3*w, z*w^2)"))
        assert eigen.c_infinity == QuadraticSurd(Fraction(5, 2), Fraction(1, 2), 5)
        assert eigen.weights == MonomialWeights.of(QuadraticSurd(Fraction(1, 2), Fraction(1, 2), 5), 1)

    @pytest.mark.parametrize("text", ["(w^2, z^3)", "(z^3*w, z*w^2)", "(z^2*w, z*w^3)", "(z^2, w^2)"])
    def test_fixed_point_identity(self, text):
        f = germ(text)
        eigen = eigen_weight(f)
        pushed = pushforward_on_coordinates(f, eigen.weights)
        assert pushed == (eigen.c_infinity * eigen.weights.s, eigen.c_infinity * eigen.weights.t)

    def test_wrong_direction_fails_its_own_check(self):
        skewed = MonomialWeights.of(1, 2)
        with patch.object(MonomialWeights, "normalized", return_value=skewed):
            with pytest.raises(InvariantViolated):
                eigen_weight(germ("(w^2, z^3)"))

    def test_needs_monomial_components(self):
        with pytest.raises(Unsupported):
            exponent_matrix(germ("(z + w^2, z*w)"))

    def test_coordinate_eigen_direction(self):
        # distinct diagonal exponents: the dominant direction is a curve valuation
        with pytest.raises(Unsupported):
            eigen_weight(germ("(z^2, w^3)"))

    def test_to_dict(self):
        data = eigen_weight(germ("(w^2, z^3)")).to_dict()
        assert data["c_infinity"] == "sqrt(6)"
        assert data["M"] == [[0, 2], [3, 0]]

    def test_iterate_weights(self):
        sequence = iterate_weights(germ("(w^2, z^3)"), 2)
        assert sequence == [
            MonomialWeights.of(1, 1),
            MonomialWeights.of(1, Fraction(3, 2)),
            MonomialWeights.of(1, 1),
        ]
