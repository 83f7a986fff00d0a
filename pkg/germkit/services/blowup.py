"""
Point blow-ups in the two standard charts, lifts of germs, the induced action
on the exceptional line, and the rigidification pipeline for
semi-superattracting germs.

Charts centred at θ on the newest exceptional component E:
    ZChart: (z, w) = (u, u·(t + θ))      E = {u = 0}
    WChart: (z, w) = ((x + θ)·y, y)      E = {y = 0}
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import TYPE_CHECKING

from germkit.exceptions import (
    CommonZero,
    IndeterminateLift,
    InvariantViolated,
    MaxStepsExceeded,
    PointNotFixed,
    PreconditionError,
    TruncationExhausted,
    Undecidable,
)
from germkit.services.germ import Germ, GermKind, RigidClassification, classify, classify_rigid
from germkit.services.scalars import ONE, ZERO, Scalar, as_scalar
from germkit.services.series import INFINITY, BiSeries, _format_coefficient, _join_terms

if TYPE_CHECKING:
    from germkit.services.conjugacy import ConjugationRecord

logger = logging.getLogger(__name__)


class Chart(str, Enum):
    Z = "z"
    W = "w"


class PointKind(str, Enum):
    ORIGIN = "origin"
    FREE = "free"
    SATELLITE = "satellite"


@dataclass(frozen=True)
class BlowupStep:
    chart: Chart
    theta: Scalar
    point: PointKind = PointKind.FREE

    def to_dict(self) -> dict:
        return {"chart": self.chart.value, "theta": str(self.theta), "point": self.point.value}


@dataclass
class Vertex:
    index: int
    point: PointKind
    parents: tuple[int, ...]


@dataclass
class Modification:
    """Ordered blow-ups with the dual graph of the exceptional divisor."""

    steps: list[BlowupStep] = field(default_factory=list)
    vertices: list[Vertex] = field(default_factory=list)
    edges: set[frozenset[int]] = field(default_factory=set)
    # components through the running chart's axes {a=0}, {b=0}
    _labels: tuple[int | None, int | None] = field(default=(None, None), repr=False)

    def add_step(self, chart: Chart, theta: Scalar) -> BlowupStep:
        on = tuple(label for label in self._labels if label is not None)
        kind = (PointKind.ORIGIN, PointKind.FREE, PointKind.SATELLITE)[len(on)]
        new = len(self.vertices)
        self.vertices.append(Vertex(new, kind, on))
        if len(on) == 2:
            self.edges.discard(frozenset(on))
        for label in on:
            self.edges.add(frozenset((label, new)))
        first, second = self._labels
        if chart == Chart.Z:
            self._labels = (new, second if not theta else None)
        else:
            self._labels = (first if not theta else None, new)
        step = BlowupStep(chart, theta, kind)
        self.steps.append(step)
        return step

    def neighbours(self, index: int) -> list[int]:
        return sorted(j for edge in self.edges if index in edge for j in edge if j != index)

    def is_tree(self) -> bool:
        if not self.vertices:
            return True
        seen = {0}
        stack = [0]
        while stack:
            for j in self.neighbours(stack.pop()):
                if j not in seen:
                    seen.add(j)
                    stack.append(j)
        return len(seen) == len(self.vertices) and len(self.edges) == len(self.vertices) - 1

    def is_path(self) -> bool:
        return self.is_tree() and all(len(self.neighbours(v.index)) <= 2 for v in self.vertices)

    def precedes(self, i: int, j: int) -> bool:
        """E_i ≤ E_j: E_j was created over a point of E_i or of a component above it."""
        if i == j:
            return True
        return any(self.precedes(i, p) for p in self.vertices[j].parents)

    def to_dict(self) -> dict:
        return {
            "steps": [s.to_dict() for s in self.steps],
            "vertices": [
                {"index": v.index, "point": v.point.value, "parents": list(v.parents)}
                for v in self.vertices
            ],
            "edges": sorted(sorted(e) for e in self.edges),
        }


# ── Lifting ─────────────────────────────────────────────────────────────


def _quotient(num: BiSeries, den: BiSeries) -> BiSeries:
    """num/den when den is a monomial times a unit dividing num."""
    if den.is_zero():
        raise IndeterminateLift("division by a series vanishing to truncation")
    factor = den.monomial_factor()
    if factor is None:
        raise IndeterminateLift(f"cannot divide by {den}: not a monomial times a unit")
    a, b, unit = factor
    try:
        shifted = num.shift(-a, -b)
    except PreconditionError as exc:
        raise IndeterminateLift(f"lift has a pole along the exceptional divisor: {exc}") from exc
    return shifted * unit.unit_reciprocal()


def _forward(chart: Chart, theta: Scalar, a: BiSeries, b: BiSeries) -> tuple[BiSeries, BiSeries]:
    if chart == Chart.Z:
        return a, a * (b + theta)
    return (a + theta) * b, b


def _inverse(chart: Chart, theta: Scalar, big_z: BiSeries, big_w: BiSeries) -> tuple[BiSeries, BiSeries]:
    if chart == Chart.Z:
        return big_z, _quotient(big_w, big_z) - theta
    return _quotient(big_z, big_w) - theta, big_w


def blow_down(steps: list[tuple[Chart, Scalar]], trunc: int) -> Germ:
    """The composite π of the chart maps, in the final chart's coordinates."""
    a, b = BiSeries.z(trunc), BiSeries.w(trunc)
    for chart, theta in reversed(steps):
        a, b = _forward(chart, as_scalar(theta), a, b)
    return Germ(a, b, provenance="blow-down")


def walk(f: Germ, steps: list[tuple[Chart, Scalar]]) -> Germ:
    """π⁻¹ ∘ f ∘ π for the composite of the given chart steps."""
    if not steps:
        return f
    pi = blow_down(steps, f.trunc)
    big_z = f.f1.compose(pi.f1, pi.f2)
    big_w = f.f2.compose(pi.f1, pi.f2)
    for chart, theta in steps:
        big_z, big_w = _inverse(chart, as_scalar(theta), big_z, big_w)
    image = (big_z.constant_term(), big_w.constant_term())
    if image[0] or image[1]:
        raise PointNotFixed(
            f"lift sends the centre to ({image[0]}, {image[1]}) in chart coordinates",
            image=image,
        )
    logger.debug("lift through %d blow-ups has truncation %d", len(steps), min(big_z.trunc, big_w.trunc))
    return Germ(big_z, big_w, provenance=f"lift of {f.provenance}")


def lift_once(f: Germ, theta: Scalar | int = 0, chart: Chart = Chart.Z) -> Germ:
    """f̂ = π⁻¹ ∘ f ∘ π for one blow-up, centred at θ in the chosen chart."""
    return walk(f, [(chart, as_scalar(theta))])


# ── Action on the exceptional line ──────────────────────────────────────


def _trim(poly: list[Scalar]) -> list[Scalar]:
    poly = list(poly)
    while poly and not poly[-1]:
        poly.pop()
    return poly


def _poly_divmod(num: list[Scalar], den: list[Scalar]) -> tuple[list[Scalar], list[Scalar]]:
    num, den = _trim(num), _trim(den)
    if not den:
        raise ZeroDivisionError("polynomial division by zero")
    quotient = [ZERO] * max(len(num) - len(den) + 1, 1)
    lead_inv = ONE / den[-1]
    while len(num) >= len(den) and num:
        shift = len(num) - len(den)
        c = num[-1] * lead_inv
        quotient[shift] = c
        for k, d in enumerate(den):
            num[shift + k] = num[shift + k] - c * d
        num = _trim(num)
    return _trim(quotient), num


def poly_gcd(p: list[Scalar], q: list[Scalar]) -> list[Scalar]:
    """Monic gcd of two polynomials given low degree first."""
    p, q = _trim(p), _trim(q)
    while q:
        _, r = _poly_divmod(p, q)
        p, q = q, r
    if not p:
        return []
    lead_inv = ONE / p[-1]
    return [c * lead_inv for c in p]


def _format_poly(poly: list[Scalar], var: str = "theta") -> str:
    pieces = []
    for k, c in enumerate(poly):
        if c:
            monomial = "" if k == 0 else (var if k == 1 else f"{var}^{k}")
            pieces.append(_format_coefficient(c, monomial))
    return _join_terms(pieces)


class ActionKind(str, Enum):
    SELF_MAP = "self-map"
    CONTRACTED = "contracted"


@dataclass
class ExceptionalAction:
    kind: ActionKind
    numerator: list[Scalar] = field(default_factory=list)
    denominator: list[Scalar] = field(default_factory=list)
    degree: int | None = None
    point: tuple[Scalar, Scalar] | None = None

    def __call__(self, theta: Scalar | int) -> Scalar:
        theta = as_scalar(theta)
        if self.kind == ActionKind.CONTRACTED:
            return self.point[1] / self.point[0]
        num = sum((c * theta ** k for k, c in enumerate(self.numerator)), ZERO)
        den = sum((c * theta ** k for k, c in enumerate(self.denominator)), ZERO)
        return num / den

    def to_dict(self) -> dict:
        if self.kind == ActionKind.CONTRACTED:
            return {"kind": self.kind.value, "point": f"[{self.point[0]}:{self.point[1]}]"}
        return {
            "kind": self.kind.value,
            "map": f"theta -> ({_format_poly(self.numerator)})/({_format_poly(self.denominator)})",
            "degree": self.degree,
        }


def exceptional_image(f: Germ) -> ExceptionalAction:
    """Induced map of the first exceptional line, θ = w/z ↦ B(θ)/A(θ)."""
    k1, k2 = f.f1.multiplicity(), f.f2.multiplicity()
    if k1 is INFINITY and k2 is INFINITY:
        raise TruncationExhausted("both components vanish to truncation")
    if k1 != k2:
        point = (ONE, ZERO) if k1 < k2 else (ZERO, ONE)
        return ExceptionalAction(ActionKind.CONTRACTED, point=point)
    k = k1
    # P(1, θ) as coefficient lists in θ
    a = _trim([f.f1.coefficient(k - j, j) for j in range(k + 1)])
    b = _trim([f.f2.coefficient(k - j, j) for j in range(k + 1)])
    if len(b) == len(a):
        ratio = b[-1] / a[-1]
        if all(bb == ratio * aa for aa, bb in zip(a, b)):
            return ExceptionalAction(ActionKind.CONTRACTED, point=(ONE, ratio))
    common = poly_gcd(a, b)
    bad = []
    if len(common) > 1:
        bad.append(_format_poly(common))
    if len(a) <= k and len(b) <= k:
        bad.append("infinity")
    if bad:
        raise CommonZero(f"P1 and P2 vanish together on E at roots of {', '.join(bad)}", thetas=bad)
    return ExceptionalAction(ActionKind.SELF_MAP, numerator=b, denominator=a, degree=k)


# ── Rigidification ──────────────────────────────────────────────────────


@dataclass
class Rigidification:
    modification: Modification
    germ: Germ
    classification: RigidClassification
    record: ConjugationRecord
    lifts: list[Germ] = field(default_factory=list)


def rigidify_semisuper(
    f: Germ, max_steps: int, min_retained_order: int = 8
) -> Rigidification:
    """Prepare f, then blow up along the invariant curve {w=0} until the lift is rigid."""
    from germkit.services.conjugacy import prepare

    germ_type = classify(f)
    if germ_type.kind != GermKind.SEMI_SUPER:
        raise PreconditionError(f"rigidification pipeline needs a semi-superattracting germ, got {germ_type.kind.value}")
    lam = germ_type.lam
    g, record = prepare(f)
    modification = Modification()
    lifts = [g]
    for step in range(max_steps + 1):
        try:
            result = classify_rigid(g)
        except Undecidable:
            result = None
        if isinstance(result, RigidClassification):
            logger.info("rigid after %d blow-ups: class %d", step, result.class_id)
            return Rigidification(modification, g, result, record, lifts)
        if step == max_steps:
            break
        if g.trunc - 1 < min_retained_order:
            raise TruncationExhausted(
                f"next lift would keep only {g.trunc - 1} orders (< {min_retained_order}); raise -N"
            )
        g = lift_once(g, ZERO, Chart.Z)
        modification.add_step(Chart.Z, ZERO)
        if g.trace() != lam or g.det():
            raise InvariantViolated("lift lost the diagonal linear part diag(λ, 0)")
        lifts.append(g)
        logger.debug("blow-up %d: lift truncated at %d", step + 1, g.trunc)
    raise MaxStepsExceeded(f"not rigid after {max_steps} blow-ups", residue=g)
