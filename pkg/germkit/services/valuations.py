"""
Exact valuation-space computations: monomial and curve valuations, the induced
tree map on the two model segments, and eigen-weights of monomial germs.

Weights are rational or real quadratic surds p + q·√D; both compare exactly.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from functools import lru_cache, total_ordering
from typing import Union

import sympy

from germkit.exceptions import InvariantViolated, PreconditionError, TruncationExhausted, Unsupported
from germkit.services.germ import Germ
from germkit.services.series import INFINITY, BiSeries, UniSeries, _Infinity

logger = logging.getLogger(__name__)


# ── Quadratic surds ─────────────────────────────────────────────────────


@lru_cache(maxsize=None)
def _square_free(n: int) -> tuple[int, int]:
    """n = k^2 · D with D square-free; returns (k, D)."""
    k, d = 1, 1
    for prime, exp in sympy.factorint(n).items():
        k *= prime ** (exp // 2)
        if exp % 2:
            d *= prime
    return k, d


def _sign(p: Fraction, q: Fraction, d: int) -> int:
    """Sign of p + q·√d for square-free d ≥ 1."""
    if q == 0 or d == 1:
        value = p + q if d == 1 else p
        return (value > 0) - (value < 0)
    if p >= 0 and q >= 0:
        return 1
    if p <= 0 and q <= 0:
        return -1
    diff = p * p - q * q * d
    return (diff > 0) - (diff < 0) if p > 0 else (diff < 0) - (diff > 0)


@total_ordering
class QuadraticSurd:
    """p + q·√D with p, q rational and D a square-free positive integer."""

    __slots__ = ("p", "q", "d")

    def __init__(self, p: int | Fraction = 0, q: int | Fraction = 0, d: int = 1):
        p, q = Fraction(p), Fraction(q)
        if d < 1:
            raise ValueError("surd radicand must be positive")
        k, d = _square_free(d) if d > 1 else (1, 1)
        q *= k
        if d == 1:
            p, q = p + q, Fraction(0)
        if q == 0:
            d = 1
        self.p, self.q, self.d = p, q, d

    @classmethod
    def sqrt(cls, value: int | Fraction) -> QuadraticSurd:
        value = Fraction(value)
        if value < 0:
            raise Unsupported("square root of a negative weight")
        num = value.numerator * value.denominator
        k, d = _square_free(num) if num > 1 else (int(num == 1), 1)
        return cls(0, Fraction(k, value.denominator), d)

    @staticmethod
    def coerce(value) -> QuadraticSurd:
        if isinstance(value, QuadraticSurd):
            return value
        if isinstance(value, (int, Fraction)):
            return QuadraticSurd(value)
        return NotImplemented

    def _common(self, other: QuadraticSurd) -> int:
        if self.d == 1:
            return other.d
        if other.d == 1 or other.d == self.d:
            return self.d
        raise Unsupported(f"surds √{self.d} and √{other.d} live in different fields")

    def is_rational(self) -> bool:
        return self.q == 0

    def sign(self) -> int:
        return _sign(self.p, self.q, self.d)

    def __add__(self, other):
        other = QuadraticSurd.coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return QuadraticSurd(self.p + other.p, self.q + other.q, self._common(other))

    __radd__ = __add__

    def __neg__(self) -> QuadraticSurd:
        return QuadraticSurd(-self.p, -self.q, self.d)

    def __sub__(self, other):
        other = QuadraticSurd.coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        other = QuadraticSurd.coerce(other)
        if other is NotImplemented:
            return NotImplemented
        d = self._common(other)
        return QuadraticSurd(
            self.p * other.p + self.q * other.q * d,
            self.p * other.q + self.q * other.p,
            d,
        )

    __rmul__ = __mul__

    def reciprocal(self) -> QuadraticSurd:
        den = self.p * self.p - self.q * self.q * self.d
        if den == 0:
            raise ZeroDivisionError("reciprocal of zero surd")
        return QuadraticSurd(self.p / den, -self.q / den, self.d)

    def __truediv__(self, other):
        other = QuadraticSurd.coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self * other.reciprocal()

    def __rtruediv__(self, other):
        other = QuadraticSurd.coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return other * self.reciprocal()

    def __pow__(self, n: int) -> QuadraticSurd:
        if n < 0:
            return self.reciprocal() ** (-n)
        result = QuadraticSurd(1)
        for _ in range(n):
            result = result * self
        return result

    def __eq__(self, other) -> bool:
        other = QuadraticSurd.coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return (self.p, self.q, self.d) == (other.p, other.q, other.d)

    def __lt__(self, other) -> bool:
        other = QuadraticSurd.coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return (self - other).sign() < 0

    def __hash__(self) -> int:
        if self.q == 0:
            return hash(self.p)
        return hash((self.p, self.q, self.d))

    def __float__(self) -> float:
        return float(self.p) + float(self.q) * self.d ** 0.5

    def __repr__(self) -> str:
        return f"QuadraticSurd({self})"

    def __str__(self) -> str:
        if self.q == 0:
            return str(self.p)
        root = f"sqrt({self.d})"
        if self.q == 1:
            radical = root
        elif self.q == -1:
            radical = f"-{root}"
        else:
            radical = f"{self.q}*{root}"
        if self.p == 0:
            return radical
        return f"{self.p}{radical}" if radical.startswith("-") else f"{self.p}+{radical}"


Weight = Union[Fraction, QuadraticSurd]


def as_weight(value) -> Weight:
    if isinstance(value, QuadraticSurd):
        return value.p if value.is_rational() else value
    return Fraction(value)


# ── Monomial and curve valuations ───────────────────────────────────────


@dataclass(frozen=True)
class MonomialWeights:
    """Monomial valuation ν(z^i w^j) = s·i + t·j."""

    s: Weight
    t: Weight

    def __post_init__(self):
        if self.s <= 0 or self.t <= 0:
            raise PreconditionError("monomial weights must be positive")

    @classmethod
    def of(cls, s, t) -> MonomialWeights:
        return cls(as_weight(s), as_weight(t))

    def normalized(self) -> MonomialWeights:
        m = min(self.s, self.t)
        return MonomialWeights.of(self.s / m, self.t / m)

    @property
    def skewness(self) -> Weight:
        n = self.normalized()
        return max(n.s, n.t)

    @property
    def thinness(self) -> Weight:
        return as_weight(1 + self.skewness)

    def to_dict(self) -> dict:
        return {"s": str(self.s), "t": str(self.t)}


def eval_monomial(weights: MonomialWeights, phi: BiSeries) -> Weight | _Infinity:
    """min over the support of s·i + t·j.

    Terms above the truncation have value at least (N+1)·min(s, t); a larger
    minimum cannot be certified and raises TruncationExhausted.
    """
    if phi.is_zero():
        return INFINITY
    value = min(weights.s * i + weights.t * j for i, j in phi.terms)
    bound = (phi.trunc + 1) * min(weights.s, weights.t)
    if value > bound:
        raise TruncationExhausted(
            f"valuation {value} exceeds what truncation {phi.trunc} certifies"
        )
    return as_weight(value)


class CurveKind(str, Enum):
    AXIS_Z = "z=0"
    AXIS_W = "w=0"
    GRAPH = "graph"


@dataclass(frozen=True)
class CurveApprox:
    kind: CurveKind
    theta: UniSeries | None = None

    @classmethod
    def axis_z(cls) -> CurveApprox:
        return cls(CurveKind.AXIS_Z)

    @classmethod
    def axis_w(cls) -> CurveApprox:
        return cls(CurveKind.AXIS_W)

    @classmethod
    def graph(cls, theta: UniSeries) -> CurveApprox:
        if theta.terms.get(0):
            raise PreconditionError("graph curve must pass through the origin")
        return cls(CurveKind.GRAPH, theta)


def eval_curve(curve: CurveApprox, phi: BiSeries) -> int | _Infinity:
    """Axes: order of the axis as a factor of φ. Graphs: order of φ(z, θ(z))."""
    if phi.is_zero():
        return INFINITY
    if curve.kind == CurveKind.AXIS_Z:
        return phi.z_order()
    if curve.kind == CurveKind.AXIS_W:
        return phi.w_order()
    return phi.eval_along_curve(curve.theta).order()


def pushforward_on_coordinates(f: Germ, weights: MonomialWeights) -> tuple[Weight, Weight]:
    """(ν(f1), ν(f2))."""
    v1 = eval_monomial(weights, f.f1)
    v2 = eval_monomial(weights, f.f2)
    if v1 is INFINITY or v2 is INFINITY:
        raise TruncationExhausted("a component vanishes up to truncation")
    return v1, v2


# ── Piecewise-affine maps on segments ───────────────────────────────────


@dataclass(frozen=True)
class PiecewiseAffine:
    """t ↦ min_k (a_k·t + b_k) on [start, ∞), stored without dominated pairs."""

    pieces: tuple[tuple[int, int], ...]
    start: Fraction = Fraction(1)

    @classmethod
    def minimal(cls, pairs, start: Fraction = Fraction(1)) -> PiecewiseAffine:
        return cls(_lower_envelope(set(pairs), start), start)

    def __call__(self, t) -> Weight:
        return as_weight(min(a * t + b for a, b in self.pieces))

    def breakpoints(self) -> list[Fraction]:
        points = []
        for (a1, b1), (a2, b2) in zip(self.pieces, self.pieces[1:]):
            points.append(Fraction(b2 - b1, a1 - a2))
        return points

    def intervals(self) -> list[tuple[tuple[int, int], Fraction, Fraction | None]]:
        """Each piece with the interval [lo, hi] it is active on; hi is None for the last one."""
        ends = [self.start, *self.breakpoints()]
        return [
            (piece, ends[k], ends[k + 1] if k + 1 < len(ends) else None)
            for k, piece in enumerate(self.pieces)
        ]

    def fixed_set(self, line: tuple[int, int] = (1, 0)) -> list[tuple[Fraction, Fraction | None]]:
        """{t ≥ start : g(t) = a·t + b} for line (a, b) as closed intervals, hi None meaning unbounded."""
        a0, b0 = line
        found: list[tuple[Fraction, Fraction | None]] = []
        for (a, b), lo, hi in self.intervals():
            if a == a0:
                if b == b0:
                    found.append((lo, hi))
                continue
            t = Fraction(b0 - b, a - a0)
            if t >= lo and (hi is None or t <= hi):
                found.append((t, t))
        merged: list[tuple[Fraction, Fraction | None]] = []
        for lo, hi in sorted(found, key=lambda iv: iv[0]):
            if merged and (merged[-1][1] is None or lo <= merged[-1][1]):
                last_lo, last_hi = merged[-1]
                merged[-1] = (last_lo, None if last_hi is None or hi is None else max(last_hi, hi))
            else:
                merged.append((lo, hi))
        return merged

    def fixed_points(self) -> list[Fraction]:
        """Isolated solutions of g(t) = t."""
        return [lo for lo, hi in self.fixed_set() if hi == lo]

    def drift(self, line: tuple[int, int] = (1, 0)) -> Drift:
        """Sign of g(t) − (a·t + b) over [start, ∞); INCREASING when g lies above the line."""
        a0, b0 = line
        samples = {self.start, *self.breakpoints()}
        for lo, hi in self.fixed_set(line):
            samples.add(lo)
            if hi is not None:
                samples.add(hi)
        # the difference is affine between consecutive samples and past the last one
        samples.add(max(samples) + 1)
        signs = set()
        for t in samples:
            gap = self(t) - (a0 * t + b0)
            signs.add((gap > 0) - (gap < 0))
        if signs == {0}:
            return Drift.NONE
        if -1 not in signs:
            return Drift.INCREASING
        if 1 not in signs:
            return Drift.DECREASING
        return Drift.MIXED

    def level(self, value) -> Fraction | None:
        """Largest t ≥ start with g(t) ≤ value, None when g never exceeds it."""
        if self(self.start) > value:
            raise TruncationExhausted(f"the map already exceeds {value} at t = {self.start}")
        for (a, b), _, hi in self.intervals():
            if hi is not None and self(hi) <= value:
                continue
            if a == 0:
                return None
            return Fraction(value - b, a)
        return None

    def to_dict(self) -> dict:
        return {"pieces": [list(p) for p in self.pieces], "start": str(self.start)}


def _lower_envelope(pairs: set[tuple[int, int]], start: Fraction) -> tuple[tuple[int, int], ...]:
    if not pairs:
        raise PreconditionError("empty piecewise-affine map")
    lines = sorted(pairs)
    current = min(lines, key=lambda ab: (ab[0] * start + ab[1], ab[0]))
    envelope = [current]
    t_cur = start
    while True:
        a0, b0 = current
        best = None
        for a, b in lines:
            if a >= a0:
                continue
            t = Fraction(b - b0, a0 - a)
            if t < t_cur:
                t = t_cur
            if best is None or t < best[0] or (t == best[0] and a < best[1][0]):
                best = (t, (a, b))
        if best is None:
            break
        t_cur, current = best
        envelope.append(current)
    return tuple(envelope)


class SegmentFamily(str, Enum):
    ZW = "zw"
    INFINITY = "infinity"


class Drift(str, Enum):
    INCREASING = "increasing"
    DECREASING = "decreasing"
    NONE = "none"
    MIXED = "mixed"


@dataclass
class SegmentMap:
    family: SegmentFamily
    map: PiecewiseAffine
    # largest t at which the map cannot change by terms past the truncation, None for all t
    certain_up_to: Fraction | None
    drift: Drift
    fixed_set: list[tuple[Fraction, Fraction | None]] = field(default_factory=list)
    z_limit: str | None = None

    def parameter(self, t) -> Weight:
        """Family parameter of f_*ν: g(t) on ZW, t / g(t) on INFINITY."""
        t = as_weight(t)
        if self.family == SegmentFamily.ZW:
            return self.map(t)
        return as_weight(t / self.map(t))

    def image(self, t) -> MonomialWeights:
        """Normalized weights of f_*ν for the family member with parameter t."""
        t = as_weight(t)
        if self.family == SegmentFamily.ZW:
            return MonomialWeights.of(1, self.map(t))
        return MonomialWeights.of(t, self.map(t)).normalized()

    def fixed_points(self) -> list[Fraction]:
        return [lo for lo, hi in self.fixed_set if hi == lo]

    def to_dict(self) -> dict:
        return {
            "family": self.family.value,
            **self.map.to_dict(),
            "fixed_set": [[str(lo), "inf" if hi is None else str(hi)] for lo, hi in self.fixed_set],
            "certain_up_to": None if self.certain_up_to is None else str(self.certain_up_to),
            "drift": self.drift.value,
            "z_limit": self.z_limit,
        }


def _check_prepared(f: Germ) -> None:
    factor = f.f1.monomial_factor() if not f.f1.is_zero() else None
    if factor is None or factor[:2] != (1, 0) or f.f2.is_zero() or not f.f2.divisible_by("w"):
        raise PreconditionError(
            "segment map needs a prepared germ (λz(1+f1), w·f2)"
        )


_OPPOSITE = {Drift.INCREASING: Drift.DECREASING, Drift.DECREASING: Drift.INCREASING}


def segment_map(f: Germ, family: SegmentFamily) -> SegmentMap:
    """Induced map on ν_{1,t} (ZW) or on ν(z)=t, ν(w)=1 (INFINITY), t ≥ 1."""
    _check_prepared(f)
    support = f.f2.support()
    if family == SegmentFamily.ZW:
        pieces = PiecewiseAffine.minimal((j, i) for i, j in support)
        # t ↦ g(t): compare g with the diagonal
        line = (1, 0)
    else:
        pieces = PiecewiseAffine.minimal((i, j) for i, j in support)
        # t ↦ t / g(t) moves down exactly where g > 1
        line = (0, 1)
    # a term past the truncation has total degree > N, so its value is > N at every t ≥ 1
    certain = pieces.level(f.trunc + 1)
    drift = pieces.drift(line)
    fixed = pieces.fixed_set(line)
    if family == SegmentFamily.ZW:
        return SegmentMap(family, pieces, certain, drift, fixed)

    z_limit = "fixed" if any(a == 0 for a, _ in pieces.pieces) else "contracted"
    logger.debug("infinity segment map %s, z-curve valuation %s", pieces.pieces, z_limit)
    return SegmentMap(family, pieces, certain, _OPPOSITE.get(drift, drift), fixed, z_limit=z_limit)


# ── Eigen-weights ───────────────────────────────────────────────────────


@dataclass
class EigenValuation:
    weights: MonomialWeights
    c_infinity: Weight
    matrix: tuple[tuple[int, int], tuple[int, int]]

    def to_dict(self) -> dict:
        return {
            "weights": self.weights.to_dict(),
            "c_infinity": str(self.c_infinity),
            "M": [list(r) for r in self.matrix],
            "skewness": str(self.weights.skewness),
            "thinness": str(self.weights.thinness),
        }


def exponent_matrix(f: Germ) -> tuple[tuple[int, int], tuple[int, int]]:
    rows = []
    for g in (f.f1, f.f2):
        factor = g.monomial_factor() if not g.is_zero() else None
        if factor is None:
            raise Unsupported("eigen-weights need both components to be monomial times a unit")
        rows.append((factor[0], factor[1]))
    return rows[0], rows[1]


def eigen_weight(f: Germ) -> EigenValuation:
    """Fixed normalized weight direction of ν ↦ (ν(f1), ν(f2)) and its Perron root."""
    (a, b), (c, d) = matrix = exponent_matrix(f)
    trace, det = a + d, a * d - b * c
    rho = (QuadraticSurd.sqrt(trace * trace - 4 * det) + trace) / 2
    if b == 0 and c == 0 and a == d:
        s, t = QuadraticSurd(1), QuadraticSurd(1)
    elif b != 0:
        s, t = QuadraticSurd(b), rho - a
    else:
        s, t = rho - d, QuadraticSurd(c)
    if s.sign() <= 0 or t.sign() <= 0:
        raise Unsupported("eigen direction is a coordinate curve valuation, not a monomial one")
    weights = MonomialWeights.of(s, t).normalized()
    pushed = (weights.s * a + weights.t * b, weights.s * c + weights.t * d)
    if pushed != (rho * weights.s, rho * weights.t):
        raise InvariantViolated("eigen-weight failed its fixed-point check")
    logger.debug("eigen-weight %s with c_inf=%s", weights, rho)
    return EigenValuation(weights, as_weight(rho), matrix)


def iterate_weights(f: Germ, steps: int) -> list[MonomialWeights]:
    """Monomial skeleton iteration from ν_m: ν ↦ normalized (ν(f1), ν(f2))."""
    current = MonomialWeights.of(1, 1)
    sequence = [current]
    for _ in range(steps):
        v1, v2 = pushforward_on_coordinates(f, current)
        current = MonomialWeights.of(v1, v2).normalized()
        sequence.append(current)
    return sequence
