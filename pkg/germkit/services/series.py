"""
Truncated formal power series in one variable (z) and two variables (z, w).

Series are immutable and sparse. A series with truncation N knows every
coefficient of total degree ≤ N; nothing is claimed above N, and every result
carries the smallest truncation of its operands.
"""

from __future__ import annotations

import logging
from functools import total_ordering
from types import MappingProxyType
from typing import Iterable, Mapping

from germkit.exceptions import PreconditionError, TruncationExhausted
from germkit.services.scalars import ONE, ZERO, Cyclotomic, GaussianRational, Scalar, as_scalar

logger = logging.getLogger(__name__)

Exponent = tuple[int, int]


@total_ordering
class _Infinity:
    """Order of a series that vanishes up to its truncation."""

    _instance: _Infinity | None = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __eq__(self, other) -> bool:
        return other is self

    def __lt__(self, other) -> bool:
        return False

    def __hash__(self) -> int:
        return hash("germkit.infinity")

    def __add__(self, other):
        return self

    __radd__ = __add__

    def __repr__(self) -> str:
        return "INFINITY"

    def __str__(self) -> str:
        return "inf"


INFINITY = _Infinity()


def _format_coefficient(c: Scalar, monomial: str) -> tuple[str, str]:
    """Return (sign, body) for one printed term."""
    if isinstance(c, GaussianRational) and c.is_rational():
        sign = "-" if c.re < 0 else "+"
        magnitude = abs(c.re)
        if not monomial:
            return sign, str(magnitude)
        if magnitude == 1:
            return sign, monomial
        return sign, f"{magnitude}*{monomial}"
    text = str(c)
    if isinstance(c, GaussianRational) and c.re == 0 and c.im < 0:
        return "-", f"{-c}*{monomial}" if monomial else str(-c)
    if isinstance(c, GaussianRational) and c.re == 0:
        return "+", f"{c}*{monomial}" if monomial else text
    return "+", f"({text})*{monomial}" if monomial else f"({text})"


def _join_terms(pieces: list[tuple[str, str]]) -> str:
    if not pieces:
        return "0"
    sign, body = pieces[0]
    text = f"-{body}" if sign == "-" else body
    for sign, body in pieces[1:]:
        text += f" {sign} {body}"
    return text


def _monomial(i: int, j: int) -> str:
    parts = []
    if i:
        parts.append("z" if i == 1 else f"z^{i}")
    if j:
        parts.append("w" if j == 1 else f"w^{j}")
    return "*".join(parts)


# ── One variable ────────────────────────────────────────────────────────


class UniSeries:
    """Σ_{k ≤ trunc} c_k z^k."""

    __slots__ = ("_terms", "trunc")

    def __init__(self, terms: Mapping[int, Scalar | int] | None = None, trunc: int = 0):
        if trunc < 0:
            raise ValueError("truncation must be non-negative")
        cleaned = {}
        for k, c in (terms or {}).items():
            c = as_scalar(c)
            if k < 0:
                raise ValueError("negative exponent in a power series")
            if k <= trunc and c:
                cleaned[k] = c
        self._terms = cleaned
        self.trunc = trunc

    @classmethod
    def _clean(cls, terms: dict[int, Scalar], trunc: int) -> UniSeries:
        obj = object.__new__(cls)
        obj._terms = {k: c for k, c in terms.items() if k <= trunc and c}
        obj.trunc = trunc
        return obj

    @classmethod
    def constant(cls, c: Scalar | int, trunc: int) -> UniSeries:
        return cls({0: c}, trunc)

    @classmethod
    def variable(cls, trunc: int) -> UniSeries:
        return cls({1: ONE}, trunc)

    @property
    def terms(self) -> Mapping[int, Scalar]:
        return MappingProxyType(self._terms)

    def coefficient(self, k: int) -> Scalar:
        if k > self.trunc:
            raise TruncationExhausted(f"coefficient of z^{k} lies above truncation {self.trunc}")
        return self._terms.get(k, ZERO)

    def is_zero(self) -> bool:
        return not self._terms

    def order(self) -> int | _Infinity:
        return min(self._terms) if self._terms else INFINITY

    def truncate(self, n: int) -> UniSeries:
        return UniSeries._clean(self._terms, min(n, self.trunc))

    def __add__(self, other) -> UniSeries:
        if not isinstance(other, UniSeries):
            other = UniSeries.constant(other, self.trunc)
        out = dict(self._terms)
        for k, c in other._terms.items():
            out[k] = out[k] + c if k in out else c
        return UniSeries._clean(out, min(self.trunc, other.trunc))

    __radd__ = __add__

    def __neg__(self) -> UniSeries:
        return UniSeries._clean({k: -c for k, c in self._terms.items()}, self.trunc)

    def __sub__(self, other) -> UniSeries:
        if not isinstance(other, UniSeries):
            other = UniSeries.constant(other, self.trunc)
        return self + (-other)

    def __rsub__(self, other) -> UniSeries:
        return (-self) + other

    def __mul__(self, other) -> UniSeries:
        if not isinstance(other, UniSeries):
            c = as_scalar(other)
            return UniSeries._clean({k: v * c for k, v in self._terms.items()}, self.trunc)
        n = min(self.trunc, other.trunc)
        out: dict[int, Scalar] = {}
        right = sorted(other._terms.items())
        for k1, c1 in sorted(self._terms.items()):
            for k2, c2 in right:
                k = k1 + k2
                if k > n:
                    break
                p = c1 * c2
                out[k] = out[k] + p if k in out else p
        return UniSeries._clean(out, n)

    __rmul__ = __mul__

    def __pow__(self, e: int) -> UniSeries:
        if e < 0:
            return self.reciprocal() ** (-e)
        result = UniSeries.constant(ONE, self.trunc)
        base = self
        while e:
            if e & 1:
                result = result * base
            e >>= 1
            if e:
                base = base * base
        return result

    def shift(self, k: int) -> UniSeries:
        """Multiply by z^k (k may be negative when z^-k divides)."""
        if k < 0 and any(e < -k for e in self._terms):
            raise PreconditionError(f"z^{-k} does not divide the series")
        return UniSeries._clean({e + k: c for e, c in self._terms.items()}, self.trunc + k)

    def reciprocal(self) -> UniSeries:
        """1/self for a unit (nonzero constant term)."""
        u0 = self._terms.get(0)
        if u0 is None:
            raise PreconditionError("series is not a unit")
        inv0 = ONE / u0
        t = (self * inv0) - 1
        result = UniSeries.constant(ONE, self.trunc)
        power = UniSeries.constant(ONE, self.trunc)
        for _ in range(self.trunc):
            power = power * (-t)
            if power.is_zero():
                break
            result = result + power
        return result * inv0

    def derivative(self) -> UniSeries:
        return UniSeries._clean(
            {k - 1: c * k for k, c in self._terms.items() if k > 0}, max(self.trunc - 1, 0)
        )

    def compose(self, g: UniSeries, order: int | None = None) -> UniSeries:
        """self ∘ g for g without constant term."""
        if g._terms.get(0):
            raise PreconditionError("inner series must vanish at 0")
        n = min(self.trunc, g.trunc) if order is None else min(self.trunc, g.trunc, order)
        result = UniSeries._clean({}, n)
        power = UniSeries.constant(ONE, n)
        for k in range(0, max(self._terms, default=0) + 1):
            if k:
                power = power * g.truncate(n)
            c = self._terms.get(k)
            if c:
                result = result + power * c
            if power.is_zero():
                break
        return result

    def reversion(self) -> UniSeries:
        """Compositional inverse of a series z·(unit)."""
        a1 = self._terms.get(1)
        if self._terms.get(0) or a1 is None:
            raise PreconditionError("only series with invertible linear term can be reverted")
        inv = UniSeries({1: ONE / a1}, self.trunc)
        for k in range(2, self.trunc + 1):
            err = self.compose(inv, order=k).coefficient(k)
            if err:
                inv = inv - UniSeries({k: err / a1}, self.trunc)
        return inv

    def to_bi(self, variable: str = "z") -> BiSeries:
        if variable == "z":
            return BiSeries._clean({(k, 0): c for k, c in self._terms.items()}, self.trunc)
        return BiSeries._clean({(0, k): c for k, c in self._terms.items()}, self.trunc)

    def __eq__(self, other) -> bool:
        if not isinstance(other, UniSeries):
            if isinstance(other, (int, GaussianRational, Cyclotomic)):
                other = UniSeries.constant(other, self.trunc)
            else:
                return NotImplemented
        n = min(self.trunc, other.trunc)
        return self.truncate(n)._terms == other.truncate(n)._terms

    __hash__ = None

    def __repr__(self) -> str:
        return f"UniSeries({self}, trunc={self.trunc})"

    def __str__(self) -> str:
        pieces = [_format_coefficient(c, _monomial(k, 0)) for k, c in sorted(self._terms.items())]
        return _join_terms(pieces)


# ── Two variables ───────────────────────────────────────────────────────


def _degree_sorted(terms: Mapping[Exponent, Scalar]) -> list[tuple[Exponent, Scalar]]:
    return sorted(terms.items(), key=lambda kv: (kv[0][0] + kv[0][1], kv[0][0]))


class BiSeries:
    """Σ_{i+j ≤ trunc} c_ij z^i w^j."""

    __slots__ = ("_terms", "trunc", "_sorted")

    def __init__(self, terms: Mapping[Exponent, Scalar | int] | None = None, trunc: int = 0):
        if trunc < 0:
            raise ValueError("truncation must be non-negative")
        cleaned = {}
        for (i, j), c in (terms or {}).items():
            if i < 0 or j < 0:
                raise ValueError("negative exponent in a power series")
            c = as_scalar(c)
            if i + j <= trunc and c:
                cleaned[(i, j)] = c
        self._terms = cleaned
        self.trunc = trunc
        self._sorted = None

    @classmethod
    def _clean(cls, terms: dict[Exponent, Scalar], trunc: int) -> BiSeries:
        obj = object.__new__(cls)
        obj._terms = {e: c for e, c in terms.items() if e[0] + e[1] <= trunc and c}
        obj.trunc = trunc
        obj._sorted = None
        return obj

    @classmethod
    def constant(cls, c: Scalar | int, trunc: int) -> BiSeries:
        return cls({(0, 0): c}, trunc)

    @classmethod
    def z(cls, trunc: int) -> BiSeries:
        return cls({(1, 0): ONE}, trunc)

    @classmethod
    def w(cls, trunc: int) -> BiSeries:
        return cls({(0, 1): ONE}, trunc)

    @classmethod
    def monomial(cls, i: int, j: int, trunc: int, c: Scalar | int = 1) -> BiSeries:
        return cls({(i, j): c}, trunc)

    @property
    def terms(self) -> Mapping[Exponent, Scalar]:
        return MappingProxyType(self._terms)

    def sorted_terms(self) -> list[tuple[Exponent, Scalar]]:
        """Terms ordered by (total degree, z-exponent)."""
        if self._sorted is None:
            self._sorted = _degree_sorted(self._terms)
        return self._sorted

    def coefficient(self, i: int, j: int) -> Scalar:
        if i + j > self.trunc:
            raise TruncationExhausted(
                f"coefficient of z^{i}w^{j} lies above truncation {self.trunc}"
            )
        return self._terms.get((i, j), ZERO)

    def constant_term(self) -> Scalar:
        return self._terms.get((0, 0), ZERO)

    def is_zero(self) -> bool:
        return not self._terms

    def support(self) -> list[Exponent]:
        return [e for e, _ in self.sorted_terms()]

    def multiplicity(self) -> int | _Infinity:
        """Lowest total degree present; INFINITY when zero up to truncation."""
        if not self._terms:
            return INFINITY
        return min(i + j for i, j in self._terms)

    def homogeneous_part(self, k: int) -> BiSeries:
        return BiSeries._clean(
            {e: c for e, c in self._terms.items() if e[0] + e[1] == k}, self.trunc
        )

    def truncate(self, n: int) -> BiSeries:
        return BiSeries._clean(self._terms, min(n, self.trunc))

    def with_truncation(self, n: int) -> BiSeries:
        """Reinterpret the stored terms at truncation n; only valid for polynomials."""
        return BiSeries._clean(self._terms, n)

    def z_order(self) -> int | _Infinity:
        return min((i for i, _ in self._terms), default=INFINITY)

    def w_order(self) -> int | _Infinity:
        return min((j for _, j in self._terms), default=INFINITY)

    def divisible_by(self, variable: str) -> bool:
        """True when the variable divides every stored term (and the series is nonzero)."""
        index = 0 if variable == "z" else 1
        return all(e[index] > 0 for e in self._terms)

    # arithmetic

    def _lift(self, other) -> BiSeries:
        if isinstance(other, BiSeries):
            return other
        return BiSeries.constant(as_scalar(other), self.trunc)

    def __add__(self, other) -> BiSeries:
        other = self._lift(other)
        out = dict(self._terms)
        for e, c in other._terms.items():
            out[e] = out[e] + c if e in out else c
        return BiSeries._clean(out, min(self.trunc, other.trunc))

    __radd__ = __add__

    def __neg__(self) -> BiSeries:
        return BiSeries._clean({e: -c for e, c in self._terms.items()}, self.trunc)

    def __sub__(self, other) -> BiSeries:
        return self + (-self._lift(other))

    def __rsub__(self, other) -> BiSeries:
        return (-self) + other

    def scale(self, c: Scalar | int) -> BiSeries:
        c = as_scalar(c)
        return BiSeries._clean({e: v * c for e, v in self._terms.items()}, self.trunc)

    def __mul__(self, other) -> BiSeries:
        if not isinstance(other, BiSeries):
            return self.scale(other)
        return self.multiply(other)

    __rmul__ = __mul__

    def multiply(self, other: BiSeries, order: int | None = None) -> BiSeries:
        n = min(self.trunc, other.trunc)
        if order is not None:
            n = min(n, order)
        right = other.sorted_terms()
        if not right or not self._terms:
            return BiSeries._clean({}, n)
        low = right[0][0][0] + right[0][0][1]
        out: dict[Exponent, Scalar] = {}
        for (i1, j1), c1 in self.sorted_terms():
            d1 = i1 + j1
            if d1 + low > n:
                break
            for (i2, j2), c2 in right:
                if d1 + i2 + j2 > n:
                    break
                key = (i1 + i2, j1 + j2)
                p = c1 * c2
                prev = out.get(key)
                out[key] = p if prev is None else prev + p
        return BiSeries._clean(out, n)

    def __pow__(self, e: int) -> BiSeries:
        if e < 0:
            return self.unit_reciprocal() ** (-e)
        result = BiSeries.constant(ONE, self.trunc)
        base = self
        while e:
            if e & 1:
                result = result * base
            e >>= 1
            if e:
                base = base * base
        return result

    def unit_reciprocal(self) -> BiSeries:
        """1/u for a unit u, via (1/u₀)·Σ(-t)^k with t = u/u₀ - 1."""
        u0 = self._terms.get((0, 0))
        if u0 is None:
            raise PreconditionError("series is not a unit")
        inv0 = ONE / u0
        t = self.scale(inv0) - 1
        result = BiSeries.constant(ONE, self.trunc)
        power = BiSeries.constant(ONE, self.trunc)
        for _ in range(self.trunc):
            power = power.multiply(-t)
            if power.is_zero():
                break
            result = result + power
        return result.scale(inv0)

    def __truediv__(self, other) -> BiSeries:
        if isinstance(other, BiSeries):
            return self * other.unit_reciprocal()
        return self.scale(ONE / as_scalar(other))

    def shift(self, a: int, b: int) -> BiSeries:
        """Multiply by z^a w^b; negative exponents divide and must be exact."""
        if any(i + a < 0 or j + b < 0 for i, j in self._terms):
            raise PreconditionError(f"z^{-a}w^{-b} does not divide the series")
        return BiSeries._clean(
            {(i + a, j + b): c for (i, j), c in self._terms.items()}, self.trunc + a + b
        )

    def monomial_factor(self) -> tuple[int, int, BiSeries] | None:
        """(a, b, u) with self = z^a w^b · u and u a unit, or None."""
        if not self._terms:
            raise PreconditionError("zero series has no monomial factorization")
        a = min(i for i, _ in self._terms)
        b = min(j for _, j in self._terms)
        if (a, b) not in self._terms:
            return None
        return a, b, self.shift(-a, -b)

    def derivative(self, variable: str) -> BiSeries:
        if variable == "z":
            terms = {(i - 1, j): c * i for (i, j), c in self._terms.items() if i > 0}
        else:
            terms = {(i, j - 1): c * j for (i, j), c in self._terms.items() if j > 0}
        return BiSeries._clean(terms, max(self.trunc - 1, 0))

    def compose(self, g1: BiSeries, g2: BiSeries, order: int | None = None) -> BiSeries:
        return compose_pair(self, g1, g2, order)

    def restrict_z(self) -> UniSeries:
        """φ(z, 0)."""
        return UniSeries._clean({i: c for (i, j), c in self._terms.items() if j == 0}, self.trunc)

    def restrict_w(self) -> UniSeries:
        """φ(0, w) as a series in one variable."""
        return UniSeries._clean({j: c for (i, j), c in self._terms.items() if i == 0}, self.trunc)

    def eval_along_curve(self, theta: UniSeries) -> UniSeries:
        """φ(z, θ(z)) for θ ∈ m."""
        return eval_along_curve(self, theta)

    def agrees_with(self, other: BiSeries, up_to: int) -> bool:
        return self.truncate(up_to)._terms == other.truncate(up_to)._terms

    def __eq__(self, other) -> bool:
        if not isinstance(other, BiSeries):
            if isinstance(other, (int, GaussianRational, Cyclotomic)):
                other = BiSeries.constant(other, self.trunc)
            else:
                return NotImplemented
        n = min(self.trunc, other.trunc)
        return self.agrees_with(other, n)

    __hash__ = None

    def __repr__(self) -> str:
        return f"BiSeries({self}, trunc={self.trunc})"

    def __str__(self) -> str:
        pieces = [_format_coefficient(c, _monomial(i, j)) for (i, j), c in self.sorted_terms()]
        return _join_terms(pieces)


def compose_pair(
    phi: BiSeries, g1: BiSeries, g2: BiSeries, order: int | None = None
) -> BiSeries:
    """φ(g1, g2) for g1, g2 ∈ m, truncated at the smallest operand truncation."""
    if g1.constant_term() or g2.constant_term():
        raise PreconditionError("substituted series must vanish at the origin")
    n = min(phi.trunc, g1.trunc, g2.trunc)
    if order is not None:
        n = min(n, order)
    if phi.is_zero():
        return BiSeries._clean({}, n)
    g1, g2 = g1.truncate(n), g2.truncate(n)

    rows: dict[int, dict[int, Scalar]] = {}
    for (i, j), c in phi._terms.items():
        rows.setdefault(i, {})[j] = c
    max_j = max(j for _, j in phi._terms)
    v1 = g1.multiplicity()
    v2 = g2.multiplicity()

    g2_powers = [BiSeries.constant(ONE, n)]
    for _ in range(max_j):
        if v2 is INFINITY or len(g2_powers) * v2 > n:
            g2_powers.append(BiSeries._clean({}, n))
        else:
            g2_powers.append(g2_powers[-1].multiply(g2, n))

    result = BiSeries._clean({}, n)
    g1_power = BiSeries.constant(ONE, n)
    for i in range(0, max(rows) + 1):
        if i:
            if v1 is INFINITY or i * v1 > n:
                break
            g1_power = g1_power.multiply(g1, n)
        row = rows.get(i)
        if not row:
            continue
        inner: dict[Exponent, Scalar] = {}
        for j, c in row.items():
            for e, v in g2_powers[j]._terms.items():
                p = v * c
                inner[e] = inner[e] + p if e in inner else p
        result = result + g1_power.multiply(BiSeries._clean(inner, n), n)
    return result


def eval_along_curve(phi: BiSeries, theta: UniSeries) -> UniSeries:
    """φ(z, θ(z)), truncated at min(N_φ, N_θ)."""
    if theta.terms.get(0):
        raise PreconditionError("curve must pass through the origin")
    n = min(phi.trunc, theta.trunc)
    powers = [UniSeries.constant(ONE, n)]
    out = UniSeries._clean({}, n)
    for (i, j), c in phi.sorted_terms():
        if i > n:
            continue
        while len(powers) <= j:
            powers.append(powers[-1] * theta.truncate(n))
        out = out + powers[j].shift(i).truncate(n) * c
    return out


def from_terms(items: Iterable[tuple[Exponent, Scalar | int]], trunc: int) -> BiSeries:
    return BiSeries(dict(items), trunc)
