"""Tests for the analysis service: job building, dispatch and report fields."""

from fractions import Fraction
from pathlib import Path

import pytest

from germkit.exceptions import MaxStepsExceeded, NonDominant, ParseError
from germkit.models import ClassifyReport, DivergenceReport, RatesReport
from germkit.services.analysis import CLAIMS, AnalysisService, parse_steps
from germkit.services.blowup import Chart
from germkit.services.parser import Command, load_job

JOBS = Path(__file__).resolve().parent.parent / "jobs" / "paper"


@pytest.fixture()
def service():
    return AnalysisService(truncation=12, max_steps=8)


class TestParseSteps:
    def test_charts_and_centres(self):
        steps = parse_steps("z:0, w:1/2,w")
        assert steps == [(Chart.Z, 0), (Chart.W, Fraction(1, 2)), (Chart.W, 0)]

    def test_bad_chart(self):
        with pytest.raises(ParseError):
            parse_steps("x:0")

    def test_empty_walk(self):
        with pytest.raises(ParseError):
            parse_steps(" , ")


class TestJob:
    def test_defaults_to_service_truncation(self, service):
        job = service.job("classify", "(2z, z*w)")
        assert job.command == Command.CLASSIFY
        assert job.order == 12
        assert job.options == {}

    def test_options_are_strings_and_none_is_dropped(self, service):
        job = service.job(Command.RIGIDIFY, "(2z, z*w)", 10, max_steps=3, steps=None)
        assert job.order == 10
        assert job.options == {"max_steps": "3"}

    def test_every_command_has_a_claim(self):
        assert set(CLAIMS) == set(Command)


class TestRun:
    def test_classify(self, service):
        report = service.run(service.job("classify", "(2z, z*w + z^3)", 8))
        assert isinstance(report, ClassifyReport)
        assert report.type == "semi-superattracting"
        assert report.lam == "2"
        assert report.rigid_class == 2
        assert report.order == 8
        assert report.claim == CLAIMS[Command.CLASSIFY]

    def test_classify_serializes_lambda(self, service):
        data = service.run(service.job("classify", "(z/2, z*w)", 8)).model_dump(by_alias=True)
        assert data["lambda"] == "1/2"

    def test_classify_undecidable_rigidity_is_a_reason(self, service):
        report = service.run(service.job("classify", "(2z + w^2, z*w)", 8))
        assert report.rigid_class is None
        assert report.reason

    def test_rates(self, service):
        report = service.run(service.job("rates", "(w^2, z^3)", 40, n_max=4))
        assert isinstance(report, RatesReport)
        assert report.rates == [2, 6, 12, 36]
        assert report.supermultiplicative
        assert report.c_infinity == "sqrt(6)"
        assert report.upper_bound_holds
        assert report.delta == "1/3*sqrt(6)"

    def test_rates_without_eigen_weight(self, service):
        report = service.run(service.job("rates", "(z^2 + w^3, z*w^2)", 30, n_max=2))
        assert report.c_infinity is None
        assert report.notes

    def test_walk(self, service):
        report = service.run(service.job("walk", "(w^2, z^3)", 20, steps="z:0,w:0,w:0"))
        assert report.lift == "(w^6, z)"
        assert len(report.modification["steps"]) == 3

    def test_walk_needs_steps(self, service):
        with pytest.raises(ParseError):
            service.run(service.job("walk", "(w^2, z^3)", 20))

    def test_exceptional_action(self, service):
        report = service.run(service.job("exc-action", "(2z, z*w)", 8))
        assert report.kind == "contracted"
        assert report.point == "[1:0]"

    def test_rigidify(self, service):
        report = service.run(service.job("rigidify", "(2z, z^3*w + w^2)", 14, max_steps=6))
        assert report.steps == 3
        assert report.rigid_class == 2

    def test_rigidify_step_bound(self, service):
        with pytest.raises(MaxStepsExceeded):
            service.run(service.job("rigidify", "(2z, z^3*w + w^2)", 14, max_steps=1))

    def test_max_steps_must_be_a_number(self, service):
        job = service.job("rigidify", "(2z, z*w)", 8)
        job.options["max_steps"] = "many"
        with pytest.raises(ParseError):
            service.run(job)

    def test_divergence(self, service):
        report = service.run(service.job("divergence", "(2z*(1+w), z*w)", 14))
        assert isinstance(report, DivergenceReport)
        assert report.formal_only
        assert report.phi is not None

    def test_eigen(self, service):
        report = service.run(service.job("eigen", "(w^2, z^3)", 20, n_max=2))
        assert report.c_infinity == "sqrt(6)"
        assert report.M == [[0, 2], [3, 0]]
        assert len(report.iterates) == 3

    def test_eigen_without_exact_weight(self, service):
        report = service.run(service.job("eigen", "(z^2, w^3)", 20, n_max=2))
        assert report.c_infinity is None
        assert any("no exact eigen-weight" in note for note in report.notes)

    def test_segment(self, service):
        report = service.run(service.job("segment", "(2z, z^3*w + w^2)", 12, family="zw"))
        assert report.family == "zw"
        assert report.breakpoints == ["3"]
        assert report.drift == "increasing"
        assert report.certain_up_to == "10"
        assert report.fixed_set == []

    def test_non_dominant_germ(self, service):
        with pytest.raises(NonDominant):
            service.run(service.job("classify", "(z, z)", 8))


class TestJobFiles:
    @pytest.mark.parametrize("class_id", range(1, 8))
    def test_rigid_class_jobs(self, service, class_id):
        job = load_job(JOBS / f"rigid-class-{class_id}.job")
        assert service.run(job).rigid_class == class_id

    def test_rates_job(self, service):
        report = service.run(load_job(JOBS / "w2-z3-rates.job"))
        assert report.rates == [2, 6, 12, 36]

    def test_walk_job(self, service):
        report = service.run(load_job(JOBS / "w2-z3-walk.job"))
        assert report.lift == "(w^6, z)"

    def test_first_action_counterexample_job(self, service):
        report = service.run(load_job(JOBS / "counterexample-first-action.job"))
        assert report.formal_only
