"""
Germs f = (f1, f2) of (C^2, 0): linear data, classification, iteration,
attraction rates and the rigid-germ class table.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import TYPE_CHECKING, Union

from germkit.exceptions import NonDominant, PreconditionError, TruncationExhausted, Undecidable
from germkit.services.scalars import ONE, Modulus, Scalar, modulus_compare, root_of_unity_order
from germkit.services.series import INFINITY, BiSeries

if TYPE_CHECKING:
    from germkit.services.valuations import QuadraticSurd

logger = logging.getLogger(__name__)

Matrix = tuple[tuple[Scalar, Scalar], tuple[Scalar, Scalar]]


@dataclass(frozen=True)
class Germ:
    f1: BiSeries
    f2: BiSeries
    provenance: str = "input"

    def __post_init__(self):
        if self.f1.constant_term() or self.f2.constant_term():
            raise PreconditionError("germ components must vanish at the origin")

    @classmethod
    def from_text(cls, text: str, order: int) -> Germ:
        from germkit.services.parser import parse_germ

        f1, f2 = parse_germ(text, order)
        return cls(f1, f2, provenance=text.strip())

    @property
    def trunc(self) -> int:
        return min(self.f1.trunc, self.f2.trunc)

    def components(self) -> tuple[BiSeries, BiSeries]:
        return self.f1, self.f2

    def linear_part(self) -> Matrix:
        """df₀ as ((∂f1/∂z, ∂f1/∂w), (∂f2/∂z, ∂f2/∂w)) at 0."""
        return (
            (self.f1.coefficient(1, 0), self.f1.coefficient(0, 1)),
            (self.f2.coefficient(1, 0), self.f2.coefficient(0, 1)),
        )

    def trace(self) -> Scalar:
        (a, _), (_, d) = self.linear_part()
        return a + d

    def det(self) -> Scalar:
        (a, b), (c, d) = self.linear_part()
        return a * d - b * c

    def jacobian_det(self) -> BiSeries:
        return self.f1.derivative("z") * self.f2.derivative("w") - self.f1.derivative(
            "w"
        ) * self.f2.derivative("z")

    def compose(self, inner: Germ, order: int | None = None) -> Germ:
        """self ∘ inner."""
        return Germ(
            self.f1.compose(inner.f1, inner.f2, order),
            self.f2.compose(inner.f1, inner.f2, order),
            provenance=f"({self.provenance}) o ({inner.provenance})",
        )

    def iterate(self, n: int) -> Germ:
        if n < 1:
            raise ValueError("iterate needs n ≥ 1")
        result = self
        for _ in range(n - 1):
            result = Germ(
                self.f1.compose(result.f1, result.f2),
                self.f2.compose(result.f1, result.f2),
            )
        return Germ(result.f1, result.f2, provenance=f"iterate {n} of {self.provenance}")

    def truncate(self, n: int) -> Germ:
        return Germ(self.f1.truncate(n), self.f2.truncate(n), self.provenance)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Germ):
            return NotImplemented
        return self.f1 == other.f1 and self.f2 == other.f2

    __hash__ = None

    def __str__(self) -> str:
        return f"({self.f1}, {self.f2})"


def identity_germ(trunc: int) -> Germ:
    return Germ(BiSeries.z(trunc), BiSeries.w(trunc), provenance="identity")


def linear_germ(matrix: Matrix, trunc: int) -> Germ:
    (a, b), (c, d) = matrix
    return Germ(
        BiSeries({(1, 0): a, (0, 1): b}, trunc),
        BiSeries({(1, 0): c, (0, 1): d}, trunc),
        provenance="linear",
    )


def invert_matrix(matrix: Matrix) -> Matrix:
    (a, b), (c, d) = matrix
    det = a * d - b * c
    if not det:
        raise PreconditionError("linear map is not invertible")
    inv = ONE / det
    return ((d * inv, -b * inv), (-c * inv, a * inv))


def linear_conjugate(f: Germ, matrix: Matrix) -> Germ:
    """A⁻¹ ∘ f ∘ A."""
    trunc = f.trunc
    a = linear_germ(matrix, trunc)
    a_inv = linear_germ(invert_matrix(matrix), trunc)
    g = a_inv.compose(f.compose(a))
    return Germ(g.f1, g.f2, provenance=f"linear conjugate of {f.provenance}")


# ── Classification ──────────────────────────────────────────────────────


class GermKind(str, Enum):
    INVERTIBLE = "invertible"
    SEMI_SUPER = "semi-superattracting"
    SUPERATTRACTING = "superattracting"
    NILPOTENT_NON_SUPER = "nilpotent-non-superattracting"


@dataclass
class GermType:
    kind: GermKind
    lam: Scalar | None = None
    disk: Modulus | None = None
    rotation_order: int | None = None
    notes: list[str] = field(default_factory=list)

    @property
    def irrational_rotation(self) -> bool:
        return self.disk == Modulus.EQUAL and self.rotation_order is None

    def to_dict(self) -> dict:
        return {
            "type": self.kind.value,
            "lambda": None if self.lam is None else str(self.lam),
            "disk_position": None if self.disk is None else self.disk.value,
            "rotation_order": self.rotation_order,
            "notes": list(self.notes),
        }


def classify(f: Germ) -> GermType:
    """Invertible / SemiSuper(λ) / Superattracting / NilpotentNonSuper."""
    if f.jacobian_det().is_zero():
        raise NonDominant(
            f"Jacobian determinant vanishes up to order {f.trunc - 1}; germ is not dominant"
        )
    det, tr = f.det(), f.trace()
    if det:
        return GermType(GermKind.INVERTIBLE, notes=["rigidification trivial: df0 is invertible"])
    if tr:
        disk = modulus_compare(tr)
        order = root_of_unity_order(tr) if disk == Modulus.EQUAL else None
        result = GermType(GermKind.SEMI_SUPER, lam=tr, disk=disk, rotation_order=order)
        if disk == Modulus.EQUAL and order is None:
            result.notes.append("irrational rotation")
        logger.debug("semi-superattracting germ with λ=%s (%s)", tr, disk.value)
        return result
    (a, b), (c, d) = f.linear_part()
    if not any((a, b, c, d)):
        return GermType(GermKind.SUPERATTRACTING)
    return GermType(GermKind.NILPOTENT_NON_SUPER, notes=["df0 is nilpotent and nonzero"])


# ── Attraction rates ────────────────────────────────────────────────────


def attraction_rate(f: Germ) -> int:
    """c(f) = min(ord f1, ord f2)."""
    value = min(f.f1.multiplicity(), f.f2.multiplicity())
    if value is INFINITY:
        raise TruncationExhausted(
            f"both components vanish up to order {f.trunc}; c(f) lies above the truncation"
        )
    return value


@dataclass
class RatesReport:
    rates: list[int]
    supermultiplicative: bool
    c_infinity: QuadraticSurd | None = None
    upper_bound_holds: bool | None = None
    delta: QuadraticSurd | None = None


def attraction_rates(f: Germ, n_max: int, c_infinity: QuadraticSurd | None = None) -> RatesReport:
    """c(fⁿ) for n = 1..n_max with the check c(f^{n+m}) ≥ c(fⁿ)·c(f^m).

    When the asymptotic rate is known exactly, also checks c(fⁿ) ≤ c_∞ⁿ and
    reports δ = min c(fⁿ)/c_∞ⁿ.
    """
    if n_max < 1:
        raise ValueError("n_max must be at least 1")
    rates = []
    current = f
    for n in range(1, n_max + 1):
        if n > 1:
            current = Germ(f.f1.compose(current.f1, current.f2), f.f2.compose(current.f1, current.f2))
        rates.append(attraction_rate(current))
        logger.debug("c(f^%d) = %d", n, rates[-1])

    supermultiplicative = all(
        rates[n + m - 1] >= rates[n - 1] * rates[m - 1]
        for n in range(1, n_max + 1)
        for m in range(1, n_max + 1 - n)
    )
    report = RatesReport(rates=rates, supermultiplicative=supermultiplicative)
    if c_infinity is not None:
        powers = [c_infinity ** n for n in range(1, n_max + 1)]
        report.c_infinity = c_infinity
        report.upper_bound_holds = all(c <= p for c, p in zip(rates, powers))
        ratios = [c / p for c, p in zip(rates, powers)]
        report.delta = min(ratios)
    return report


# ── Rigid germs ─────────────────────────────────────────────────────────


class Axis(str, Enum):
    Z = "z=0"
    W = "w=0"


@dataclass
class RigidClassification:
    class_id: int
    components: tuple[Axis, ...]
    p: int | None = None
    matrix: tuple[tuple[int, int], tuple[int, int]] | None = None
    trace_zero: bool = False

    def to_dict(self) -> dict:
        return {
            "rigid_class": self.class_id,
            "components": [a.value for a in self.components],
            "p": self.p,
            "M": None if self.matrix is None else [list(r) for r in self.matrix],
            "trace_zero": self.trace_zero,
        }


@dataclass
class NotRigidEvidence:
    reason: str

    def to_dict(self) -> dict:
        return {"rigid_class": None, "reason": self.reason}


RigidResult = Union[RigidClassification, NotRigidEvidence]


def _image_axes(f: Germ, axis: Axis) -> list[Axis]:
    """Coordinate axes containing f(axis); empty when f(axis) is neither."""
    var = "z" if axis == Axis.Z else "w"
    targets = []
    if _vanishes_on(f.f1, var):
        targets.append(Axis.Z)
    if _vanishes_on(f.f2, var):
        targets.append(Axis.W)
    return targets


def _vanishes_on(phi: BiSeries, var: str) -> bool:
    return phi.is_zero() or phi.divisible_by(var)


def classify_rigid(f: Germ) -> RigidResult:
    """Decide rigidity in the given coordinates and read off the class 1..7."""
    jac = f.jacobian_det()
    if jac.is_zero():
        raise NonDominant("Jacobian determinant vanishes up to truncation")
    factor = jac.monomial_factor()
    if factor is None:
        raise Undecidable(
            "Jacobian determinant is not a monomial times a unit in these coordinates"
        )
    a, b, _ = factor
    components = set()
    if a > 0:
        components.add(Axis.Z)
    if b > 0:
        components.add(Axis.W)

    # backward invariance: f^{-1}(C) ⊂ C
    changed = True
    while changed:
        changed = False
        for axis in list(components):
            g = f.f1 if axis == Axis.Z else f.f2
            if g.is_zero():
                return NotRigidEvidence(f"component of f along {axis.value} vanishes to truncation")
            mf = g.monomial_factor()
            if mf is None:
                return NotRigidEvidence(
                    f"preimage of {axis.value} is not contained in the coordinate axes"
                )
            alpha, beta, _ = mf
            for needed, present in ((Axis.Z, alpha > 0), (Axis.W, beta > 0)):
                if present and needed not in components:
                    components.add(needed)
                    changed = True

    # forward invariance: f(C) ⊂ C
    for axis in components:
        targets = _image_axes(f, axis)
        if not targets:
            return NotRigidEvidence(f"image of {axis.value} is not contained in the axes")
        # both targets: the axis is contracted to the origin
        if len(targets) == 1 and targets[0] not in components:
            return NotRigidEvidence(f"image of {axis.value} leaves the critical set")

    ordered = tuple(sorted(components, key=lambda x: x.value))
    trace_zero = not f.trace()
    if not components:
        return RigidClassification(1, ordered, trace_zero=trace_zero)

    if len(components) == 1:
        (axis,) = components
        g = f.f1 if axis == Axis.Z else f.f2
        alpha, beta, _ = g.monomial_factor()
        p = alpha if axis == Axis.Z else beta
        if not trace_zero:
            class_id = 2 if p == 1 else 3
        else:
            class_id = 4
        return RigidClassification(class_id, ordered, p=p, trace_zero=trace_zero)

    a1, b1, _ = f.f1.monomial_factor()
    a2, b2, _ = f.f2.monomial_factor()
    matrix = ((a1, b1), (a2, b2))
    if not trace_zero:
        class_id = 5
    elif a1 * b2 - b1 * a2 != 0:
        class_id = 6
    else:
        class_id = 7
    logger.debug("rigid germ of class %d with M=%s", class_id, matrix)
    return RigidClassification(class_id, ordered, matrix=matrix, trace_zero=trace_zero)


def is_rigid(f: Germ) -> bool:
    try:
        return isinstance(classify_rigid(f), RigidClassification)
    except Undecidable:
        return False
