"""Analysis service: turns a JobSpec into a report, one handler per command."""

import logging
from collections.abc import Callable

from germkit.exceptions import ParseError, Undecidable, Unsupported
from germkit.models import (
    ClassifyReport,
    CurvesReport,
    DivergenceReport,
    EigenReport,
    ExceptionalReport,
    LiftReport,
    NormalFormReport,
    PrepareReport,
    RatesReport,
    Report,
    RigidifyReport,
    RigidReport,
    SegmentReport,
)
from germkit.services.blowup import (
    Chart,
    Modification,
    exceptional_image,
    rigidify_semisuper,
    walk,
)
from germkit.services.conjugacy import (
    divergence_report,
    invariant_curves,
    normal_form,
    prepare,
)
from germkit.services.germ import (
    Germ,
    attraction_rates,
    classify,
    classify_rigid,
)
from germkit.services.parser import Command, JobSpec, parse_scalar
from germkit.services.scalars import ZERO, Scalar
from germkit.services.valuations import (
    QuadraticSurd,
    SegmentFamily,
    eigen_weight,
    iterate_weights,
    segment_map,
)

logger = logging.getLogger(__name__)

CLAIMS = {
    Command.CLASSIFY: "the linear part sorts the germ into one of four types, and rigid germs into one of seven classes",
    Command.RATES: "c(f^(n+m)) >= c(f^n) c(f^m) and bounded above by c_inf^n",
    Command.RIGID: "the critical set is a normal-crossing divisor that is backward and forward invariant",
    Command.BLOWUP: "the lift through one blow-up fixes the chosen point of the exceptional line",
    Command.WALK: "the lift through the given chain of blow-ups fixes the final point",
    Command.EXC_ACTION: "the induced map of the exceptional line is theta -> P2(1, theta)/P1(1, theta)",
    Command.RIGIDIFY: "finitely many blow-ups along the invariant curve make the germ rigid",
    Command.PREPARE: "straightening both invariant curves gives the form (lambda z(1+f1), w f2)",
    Command.CURVES: "the stable and unstable invariant curves exist as formal graphs",
    Command.NORMAL_FORM: "a formal change of coordinates reaches the normal form of the rigid germ",
    Command.DIVERGENCE: "the conjugating coefficients grow like q^(n^2/2) when the change is only formal",
    Command.EIGEN: "the eigenvaluation is the monomial weight fixed by f_* with eigenvalue c_inf",
    Command.SEGMENT: "f_* acts on the segment of monomial valuations by an explicit piecewise-affine map",
}


def parse_steps(text: str) -> list[tuple[Chart, Scalar]]:
    """``z:0,w:1/2`` → [(Chart.Z, 0), (Chart.W, 1/2)]."""
    steps = []
    for item in filter(None, (s.strip() for s in text.split(","))):
        chart, sep, theta = item.partition(":")
        if chart not in ("z", "w"):
            raise ParseError(f"bad chart {chart!r} in step {item!r}")
        steps.append((Chart(chart), parse_scalar(theta) if sep and theta else ZERO))
    if not steps:
        raise ParseError("empty blow-up walk")
    return steps


def _rigid_fields(f: Germ) -> dict:
    try:
        result = classify_rigid(f)
    except Undecidable as exc:
        return {"reason": str(exc)}
    return result.to_dict()


class AnalysisService:
    def __init__(
        self,
        truncation: int = 16,
        max_steps: int = 12,
        min_retained_order: int = 8,
        rate_iterations: int = 4,
    ):
        self.truncation = truncation
        self.max_steps = max_steps
        self.min_retained_order = min_retained_order
        self.rate_iterations = rate_iterations
        self._handlers: dict[Command, Callable[[Germ, JobSpec], dict]] = {
            Command.CLASSIFY: self._classify,
            Command.RATES: self._rates,
            Command.RIGID: self._rigid,
            Command.BLOWUP: self._blowup,
            Command.WALK: self._walk,
            Command.EXC_ACTION: self._exc_action,
            Command.RIGIDIFY: self._rigidify,
            Command.PREPARE: self._prepare,
            Command.CURVES: self._curves,
            Command.NORMAL_FORM: self._normal_form,
            Command.DIVERGENCE: self._divergence,
            Command.EIGEN: self._eigen,
            Command.SEGMENT: self._segment,
        }
        logger.info("AnalysisService initialized with N=%d, max_steps=%d", truncation, max_steps)

    def job(self, command: Command | str, germ: str, order: int | None = None, **options) -> JobSpec:
        return JobSpec(
            command=Command(command),
            germ=germ,
            order=order or self.truncation,
            options={k: str(v) for k, v in options.items() if v is not None},
        )

    def run(self, job: JobSpec) -> Report:
        f = Germ.from_text(job.germ, job.order)
        logger.info("running %s on %s at N=%d", job.command.value, job.germ, f.trunc)
        fields = self._handlers[job.command](f, job)
        notes = fields.pop("notes", [])
        return _REPORTS[job.command](
            command=job.command.value,
            germ=job.germ,
            order=f.trunc,
            claim=CLAIMS[job.command],
            notes=notes,
            **fields,
        )

    # ── handlers ───────────────────────────────────────────────────────

    def _option_int(self, job: JobSpec, key: str, default: int) -> int:
        value = job.options.get(key)
        if value is None:
            return default
        if not value.isdigit():
            raise ParseError(f"{key} must be a non-negative integer, got {value!r}")
        return int(value)

    def _classify(self, f: Germ, job: JobSpec) -> dict:
        germ_type = classify(f).to_dict()
        return {
            "type": germ_type["type"],
            "lambda": germ_type["lambda"],
            "disk_position": germ_type["disk_position"],
            "rotation_order": germ_type["rotation_order"],
            "notes": germ_type["notes"],
            **_rigid_fields(f),
        }

    def _rates(self, f: Germ, job: JobSpec) -> dict:
        n_max = self._option_int(job, "n_max", self.rate_iterations)
        notes = []
        try:
            c_inf = QuadraticSurd.coerce(eigen_weight(f).c_infinity)
        except Unsupported as exc:
            c_inf = None
            notes.append(f"c_inf not computed: {exc}")
        report = attraction_rates(f, n_max, c_inf)
        return {
            "rates": report.rates,
            "supermultiplicative": report.supermultiplicative,
            "c_infinity": None if report.c_infinity is None else str(report.c_infinity),
            "upper_bound_holds": report.upper_bound_holds,
            "delta": None if report.delta is None else str(report.delta),
            "notes": notes,
        }

    def _rigid(self, f: Germ, job: JobSpec) -> dict:
        return _rigid_fields(f)

    def _lift(self, f: Germ, steps: list[tuple[Chart, Scalar]]) -> dict:
        modification = Modification()
        for chart, theta in steps:
            modification.add_step(chart, theta)
        lift = walk(f, steps)
        try:
            classification = classify_rigid(lift).to_dict()
        except Undecidable as exc:
            classification = {"rigid_class": None, "reason": str(exc)}
        return {
            "lift": str(lift),
            "modification": modification.to_dict(),
            "classification": classification,
        }

    def _blowup(self, f: Germ, job: JobSpec) -> dict:
        chart = Chart(job.options.get("chart", "z"))
        theta = parse_scalar(job.options["theta"]) if job.options.get("theta") else ZERO
        return self._lift(f, [(chart, theta)])

    def _walk(self, f: Germ, job: JobSpec) -> dict:
        if "steps" not in job.options:
            raise ParseError("walk needs steps, e.g. z:0,w:0")
        return self._lift(f, parse_steps(job.options["steps"]))

    def _exc_action(self, f: Germ, job: JobSpec) -> dict:
        data = exceptional_image(f).to_dict()
        return {
            "kind": data["kind"],
            "map": data.get("map"),
            "degree": data.get("degree"),
            "point": data.get("point"),
        }

    def _rigidify(self, f: Germ, job: JobSpec) -> dict:
        max_steps = self._option_int(job, "max_steps", self.max_steps)
        rig = rigidify_semisuper(f, max_steps, self.min_retained_order)
        return {
            "steps": len(rig.modification.steps),
            "rigid_class": rig.classification.class_id,
            "final_germ": str(rig.germ),
            "modification": rig.modification.to_dict(),
            "lifts": [str(g) for g in rig.lifts],
            "residual_order": rig.record.residual_order,
        }

    def _prepare(self, f: Germ, job: JobSpec) -> dict:
        g, record = prepare(f)
        return {"prepared": str(g), "conjugation": record.to_dict()}

    def _curves(self, f: Germ, job: JobSpec) -> dict:
        unstable, stable = invariant_curves(f)
        notes = []
        (_, b), (c, d) = f.linear_part()
        if b or c or d:
            notes.append("curves are given in coordinates where df0 = diag(lambda, 0)")
        return {"unstable": unstable.to_dict(), "stable": stable.to_dict(), "notes": notes}

    def _normal_form(self, f: Germ, job: JobSpec) -> dict:
        max_steps = self._option_int(job, "max_steps", self.max_steps)
        result = normal_form(f, max_steps, self.min_retained_order)
        first = None
        if result.first_action is not None:
            first = {
                "one_dimensional": result.first_action.one_d.to_dict(),
                "phi": str(result.first_action.phi),
            }
        steps = 0 if result.rigidification is None else len(result.rigidification.modification.steps)
        return {
            "normal_form": result.normal_form.to_dict(),
            "conjugation": result.record.to_dict(),
            "first_action": first,
            "rigidification_steps": steps,
            "notes": result.notes + result.normal_form.notes,
        }

    def _divergence(self, f: Germ, job: JobSpec) -> dict:
        max_steps = self._option_int(job, "max_steps", self.max_steps)
        result = normal_form(f, max_steps, self.min_retained_order)
        phi = psi = None
        if result.first_action is not None:
            phi = divergence_report(result.first_action.phi)
        if result.second is not None:
            psi = divergence_report(result.second.psi)
        reports = [r for r in (phi, psi) if r is not None]
        notes = list(result.notes)
        if not reports:
            notes.append("normal form reached without a first action or second conjugacy")
        return {
            "phi": None if phi is None else phi.to_dict(),
            "psi": None if psi is None else psi.to_dict(),
            "formal_only": any(r.formal_only for r in reports),
            "notes": notes,
        }

    def _eigen(self, f: Germ, job: JobSpec) -> dict:
        steps = self._option_int(job, "n_max", self.rate_iterations)
        notes = []
        fields: dict = {}
        try:
            fields = eigen_weight(f).to_dict()
        except Unsupported as exc:
            notes.append(f"no exact eigen-weight: {exc}; iterates bracket it")
        iterates = [w.to_dict() for w in iterate_weights(f, steps)]
        return {**fields, "iterates": iterates, "notes": notes}

    def _segment(self, f: Germ, job: JobSpec) -> dict:
        family = SegmentFamily(job.options.get("family", SegmentFamily.ZW.value))
        result = segment_map(f, family)
        return {
            **result.to_dict(),
            "breakpoints": [str(t) for t in result.map.breakpoints()],
            "fixed_points": [str(t) for t in result.fixed_points()],
        }


_REPORTS: dict[Command, type[Report]] = {
    Command.CLASSIFY: ClassifyReport,
    Command.RATES: RatesReport,
    Command.RIGID: RigidReport,
    Command.BLOWUP: LiftReport,
    Command.WALK: LiftReport,
    Command.EXC_ACTION: ExceptionalReport,
    Command.RIGIDIFY: RigidifyReport,
    Command.PREPARE: PrepareReport,
    Command.CURVES: CurvesReport,
    Command.NORMAL_FORM: NormalFormReport,
    Command.DIVERGENCE: DivergenceReport,
    Command.EIGEN: EigenReport,
    Command.SEGMENT: SegmentReport,
}
