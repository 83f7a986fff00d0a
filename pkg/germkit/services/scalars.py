"""
Exact scalars for germ coefficients.

Two representations share one arithmetic surface:
  - GaussianRational: a + b·i with a, b in Q, stored over a common denominator.
  - Cyclotomic: an element of Q(i)(ζ_r), stored as coordinates on the power
    basis 1, ζ, ..., ζ^{k-1} reduced modulo the minimal polynomial of ζ_r over Q(i).

Cyclotomic elements that land in Q(i) are demoted to GaussianRational, so the
two types never represent the same number.
"""

from __future__ import annotations

import logging
from enum import Enum
from fractions import Fraction
from functools import lru_cache
from math import gcd, lcm
from typing import Union

import sympy

from germkit.exceptions import IncompatibleFields, InvariantViolated, ScalingObstruction, Unsupported

logger = logging.getLogger(__name__)


class Modulus(str, Enum):
    LESS = "less"
    EQUAL = "equal"
    GREATER = "greater"


class GaussianRational:
    """(a + b·i) / d with integers a, b, d, d > 0 and gcd(a, b, d) = 1."""

    __slots__ = ("_a", "_b", "_d")

    def __init__(self, re: int | Fraction = 0, im: int | Fraction = 0):
        re, im = Fraction(re), Fraction(im)
        d = lcm(re.denominator, im.denominator)
        a = re.numerator * (d // re.denominator)
        b = im.numerator * (d // im.denominator)
        self._a, self._b, self._d = _normalized(a, b, d)

    @classmethod
    def _raw(cls, a: int, b: int, d: int) -> GaussianRational:
        obj = object.__new__(cls)
        obj._a, obj._b, obj._d = _normalized(a, b, d)
        return obj

    @property
    def re(self) -> Fraction:
        return Fraction(self._a, self._d)

    @property
    def im(self) -> Fraction:
        return Fraction(self._b, self._d)

    def is_zero(self) -> bool:
        return self._a == 0 and self._b == 0

    def __bool__(self) -> bool:
        return not self.is_zero()

    def is_rational(self) -> bool:
        return self._b == 0

    def norm(self) -> Fraction:
        """|x|^2, always rational."""
        return Fraction(self._a * self._a + self._b * self._b, self._d * self._d)

    def conjugate(self) -> GaussianRational:
        return GaussianRational._raw(self._a, -self._b, self._d)

    def inverse(self) -> GaussianRational:
        n = self._a * self._a + self._b * self._b
        if n == 0:
            raise ZeroDivisionError("inverse of zero scalar")
        return GaussianRational._raw(self._d * self._a, -self._d * self._b, n)

    # arithmetic

    def __add__(self, other):
        other = _coerce(other)
        if other is NotImplemented or isinstance(other, Cyclotomic):
            return NotImplemented
        if self._d == other._d:
            return GaussianRational._raw(self._a + other._a, self._b + other._b, self._d)
        return GaussianRational._raw(
            self._a * other._d + other._a * self._d,
            self._b * other._d + other._b * self._d,
            self._d * other._d,
        )

    __radd__ = __add__

    def __neg__(self) -> GaussianRational:
        return GaussianRational._raw(-self._a, -self._b, self._d)

    def __sub__(self, other):
        other = _coerce(other)
        if other is NotImplemented or isinstance(other, Cyclotomic):
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        other = _coerce(other)
        if other is NotImplemented or isinstance(other, Cyclotomic):
            return NotImplemented
        return GaussianRational._raw(
            self._a * other._a - self._b * other._b,
            self._a * other._b + self._b * other._a,
            self._d * other._d,
        )

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self * other.inverse()

    def __rtruediv__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return other * self.inverse()

    def __pow__(self, n: int):
        return _power(self, n)

    def __eq__(self, other) -> bool:
        if isinstance(other, GaussianRational):
            return self._a == other._a and self._b == other._b and self._d == other._d
        if isinstance(other, Cyclotomic):
            return False
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self == other

    def __hash__(self) -> int:
        if self._b == 0:
            return hash(Fraction(self._a, self._d))
        return hash((self._a, self._b, self._d))

    def __repr__(self) -> str:
        return f"GaussianRational({self})"

    def __str__(self) -> str:
        re, im = self.re, self.im
        if im == 0:
            return str(re)
        if im == 1:
            imag = "i"
        elif im == -1:
            imag = "-i"
        else:
            imag = f"{im}i"
        if re == 0:
            return imag
        return f"{re}{imag}" if imag.startswith("-") else f"{re}+{imag}"


def _normalized(a: int, b: int, d: int) -> tuple[int, int, int]:
    if d == 0:
        raise ZeroDivisionError("zero denominator")
    if d < 0:
        a, b, d = -a, -b, -d
    g = gcd(a, b, d)
    if g != 1:
        a, b, d = a // g, b // g, d // g
    return a, b, d


ZERO = GaussianRational(0)
ONE = GaussianRational(1)
I_UNIT = GaussianRational(0, 1)


# ── Cyclotomic fields over Q(i) ─────────────────────────────────────────


def _sympy_to_gaussian(value) -> GaussianRational:
    value = sympy.sympify(value)
    re, im = sympy.Rational(sympy.re(value)), sympy.Rational(sympy.im(value))
    return GaussianRational(Fraction(int(re.p), int(re.q)), Fraction(int(im.p), int(im.q)))


@lru_cache(maxsize=None)
def minimal_polynomial(order: int) -> tuple[GaussianRational, ...]:
    """Monic minimal polynomial of ζ_order over Q(i), coefficients low degree first.

    For 4 ∤ order this is the cyclotomic polynomial. For 4 | order the cyclotomic
    polynomial splits into two factors over Q(i); ζ is a root of the one dividing
    x^(order/4) - i.
    """
    if order < 1:
        raise ValueError(f"cyclotomic order must be positive, got {order}")
    x = sympy.Symbol("x")
    phi = sympy.cyclotomic_poly(order, x)
    if order % 4 == 0:
        _, factors = sympy.factor_list(phi, x, gaussian=True)
        target = sympy.Poly(x ** (order // 4) - sympy.I, x, gaussian=True)
        chosen = None
        for factor, _ in factors:
            candidate = sympy.Poly(factor, x, gaussian=True).monic()
            if target.rem(candidate).is_zero:
                chosen = candidate
                break
        if chosen is None:
            raise InvariantViolated(f"no factor of the {order}-th cyclotomic polynomial fixes ζ")
        poly = chosen
    else:
        poly = sympy.Poly(phi, x, gaussian=True).monic()
    coeffs = [_sympy_to_gaussian(c) for c in reversed(poly.all_coeffs())]
    logger.debug("minimal polynomial of ζ_%d over Q(i) has degree %d", order, len(coeffs) - 1)
    return tuple(coeffs)


@lru_cache(maxsize=None)
def _reduction_table(order: int) -> tuple[tuple[GaussianRational, ...], ...]:
    """Coordinates of x^k mod the minimal polynomial for k = deg .. 2·deg - 2."""
    mp = minimal_polynomial(order)
    k = len(mp) - 1
    table = []
    current = [-c for c in mp[:-1]]
    for _ in range(max(k - 1, 1)):
        table.append(tuple(current))
        top = current[-1]
        shifted = [ZERO] + current[:-1]
        current = [s - top * c for s, c in zip(shifted, mp[:-1])]
    return tuple(table)


class Cyclotomic:
    """Element Σ coords[k]·ζ^k of Q(i)(ζ_order)."""

    __slots__ = ("order", "coords")

    def __init__(self, order: int, coords):
        self.order = order
        self.coords = tuple(coords)

    @staticmethod
    def degree(order: int) -> int:
        return len(minimal_polynomial(order)) - 1

    @classmethod
    def _make(cls, order: int, coords: list[GaussianRational]) -> Scalar:
        if all(c.is_zero() for c in coords[1:]):
            return coords[0]
        return cls(order, coords)

    def _coords_of(self, other) -> list[GaussianRational] | None:
        if isinstance(other, Cyclotomic):
            if other.order != self.order:
                raise IncompatibleFields(
                    f"cannot mix ζ_{self.order} and ζ_{other.order} scalars"
                )
            return list(other.coords)
        other = _coerce(other)
        if other is NotImplemented:
            return None
        return [other] + [ZERO] * (len(self.coords) - 1)

    def is_zero(self) -> bool:
        return False

    def __bool__(self) -> bool:
        return True

    def is_rational(self) -> bool:
        return False

    def __add__(self, other):
        theirs = self._coords_of(other)
        if theirs is None:
            return NotImplemented
        return Cyclotomic._make(self.order, [a + b for a, b in zip(self.coords, theirs)])

    __radd__ = __add__

    def __neg__(self) -> Cyclotomic:
        return Cyclotomic(self.order, [-c for c in self.coords])

    def __sub__(self, other):
        theirs = self._coords_of(other)
        if theirs is None:
            return NotImplemented
        return Cyclotomic._make(self.order, [a - b for a, b in zip(self.coords, theirs)])

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        theirs = self._coords_of(other)
        if theirs is None:
            return NotImplemented
        k = len(self.coords)
        prod = [ZERO] * (2 * k - 1)
        for i, a in enumerate(self.coords):
            if a.is_zero():
                continue
            for j, b in enumerate(theirs):
                if not b.is_zero():
                    prod[i + j] = prod[i + j] + a * b
        reduced = prod[:k]
        for offset, row in enumerate(_reduction_table(self.order)):
            idx = k + offset
            if idx >= len(prod) or prod[idx].is_zero():
                continue
            reduced = [r + prod[idx] * c for r, c in zip(reduced, row)]
        return Cyclotomic._make(self.order, reduced)

    __rmul__ = __mul__

    def _multiplication_matrix(self) -> list[list[GaussianRational]]:
        k = len(self.coords)
        columns = []
        current: Scalar = self
        zeta = zeta_power(self.order, 1)
        for _ in range(k):
            columns.append(_as_coords(current, self.order, k))
            current = current * zeta
        return [[columns[j][i] for j in range(k)] for i in range(k)]

    def inverse(self) -> Scalar:
        k = len(self.coords)
        matrix = self._multiplication_matrix()
        rhs = [ONE] + [ZERO] * (k - 1)
        return Cyclotomic._make(self.order, solve_linear(matrix, rhs))

    def __truediv__(self, other):
        if isinstance(other, Cyclotomic):
            return self * other.inverse()
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self * other.inverse()

    def __rtruediv__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return other * self.inverse()

    def __pow__(self, n: int):
        return _power(self, n)

    def conjugate(self) -> Scalar:
        inv_zeta = zeta_power(self.order, self.order - 1)
        result: Scalar = ZERO
        power: Scalar = ONE
        for c in self.coords:
            result = result + c.conjugate() * power
            power = power * inv_zeta
        return result

    def __eq__(self, other) -> bool:
        if isinstance(other, Cyclotomic):
            return self.order == other.order and self.coords == other.coords
        return False

    def __hash__(self) -> int:
        return hash((self.order, self.coords))

    def __repr__(self) -> str:
        return f"Cyclotomic({self})"

    def __str__(self) -> str:
        parts = []
        for k, c in enumerate(self.coords):
            if c.is_zero():
                continue
            base = "" if k == 0 else (f"zeta({self.order})" if k == 1 else f"zeta({self.order})^{k}")
            if not base:
                parts.append(f"({c})" if not c.is_rational() else str(c))
            elif c == ONE:
                parts.append(base)
            elif c == -ONE:
                parts.append(f"-{base}")
            elif c.is_rational():
                parts.append(f"{c}*{base}")
            else:
                parts.append(f"({c})*{base}")
        text = parts[0]
        for p in parts[1:]:
            text += p if p.startswith("-") else "+" + p
        return text


Scalar = Union[GaussianRational, Cyclotomic]


def _as_coords(x: Scalar, order: int, k: int) -> list[GaussianRational]:
    if isinstance(x, Cyclotomic):
        return list(x.coords)
    return [x] + [ZERO] * (k - 1)


def _coerce(value) -> GaussianRational | Cyclotomic:
    if isinstance(value, (GaussianRational, Cyclotomic)):
        return value
    if isinstance(value, (int, Fraction)):
        return GaussianRational(value)
    return NotImplemented


def as_scalar(value) -> Scalar:
    """Accept ints, Fractions and scalars; anything else is a TypeError."""
    result = _coerce(value)
    if result is NotImplemented:
        raise TypeError(f"not an exact scalar: {value!r}")
    return result


def _power(x: Scalar, n: int) -> Scalar:
    if n < 0:
        return _power(x.inverse(), -n)
    result: Scalar = ONE
    base = x
    while n:
        if n & 1:
            result = result * base
        n >>= 1
        if n:
            base = base * base
    return result


@lru_cache(maxsize=None)
def zeta_power(order: int, k: int = 1) -> Scalar:
    """ζ_order^k as a canonical scalar."""
    k %= order
    if order in (1, 2, 4):
        return {1: ONE, 2: -ONE, 4: I_UNIT}[order] ** k
    deg = Cyclotomic.degree(order)
    if deg == 1:
        # ζ lies in Q(i): it is a root of the linear minimal polynomial
        return (-minimal_polynomial(order)[0]) ** k
    if k < deg:
        coords = [ZERO] * deg
        coords[k] = ONE
        return Cyclotomic._make(order, coords)
    return zeta_power(order, k - 1) * zeta_power(order, 1)


def solve_linear(matrix: list[list[Scalar]], rhs: list[Scalar]) -> list[Scalar]:
    """Gaussian elimination over exact scalars. Raises ZeroDivisionError if singular."""
    n = len(matrix)
    rows = [list(row) + [b] for row, b in zip(matrix, rhs)]
    for col in range(n):
        pivot = next((r for r in range(col, n) if rows[r][col]), None)
        if pivot is None:
            raise ZeroDivisionError("singular linear system")
        rows[col], rows[pivot] = rows[pivot], rows[col]
        inv = ONE / rows[col][col]
        rows[col] = [v * inv for v in rows[col]]
        for r in range(n):
            if r != col and rows[r][col]:
                factor = rows[r][col]
                rows[r] = [a - factor * b for a, b in zip(rows[r], rows[col])]
    return [row[n] for row in rows]


# ── Predicates ──────────────────────────────────────────────────────────


def root_of_unity_order(x: Scalar) -> int | None:
    """Least r ≥ 1 with x^r = 1, or None."""
    if isinstance(x, GaussianRational):
        for r, value in ((1, ONE), (2, -ONE), (4, I_UNIT), (4, -I_UNIT)):
            if x == value:
                return r
        return None
    bound = lcm(x.order, 4)
    for r in sorted(d for d in range(1, bound + 1) if bound % d == 0):
        if x ** r == ONE:
            return r
    return None


def modulus_compare(x: Scalar) -> Modulus:
    """Compare |x| with 1 exactly."""
    if isinstance(x, GaussianRational):
        n = x.norm()
    elif root_of_unity_order(x) is not None:
        return Modulus.EQUAL
    else:
        product = x * x.conjugate()
        if not isinstance(product, GaussianRational) or not product.is_rational():
            raise Unsupported(f"cannot decide |{x}| against 1 in Q(i)(ζ_{x.order})")
        n = product.re
    if n < 1:
        return Modulus.LESS
    if n > 1:
        return Modulus.GREATER
    return Modulus.EQUAL


def power_equals(x: Scalar, n: int, d: Scalar | int) -> bool:
    """Exact test x^n == d, used for resonance detection."""
    return x ** n == as_scalar(d)


def nth_root(x: Scalar, m: int) -> Scalar:
    """A root y with y^m = x inside Q(i), chosen deterministically.

    Raises ScalingObstruction when no such root exists in the working field.
    """
    if m == 1:
        return x
    if isinstance(x, Cyclotomic):
        raise ScalingObstruction(f"no {m}-th root of {x} is computed outside Q(i)")
    if x.is_zero():
        return ZERO
    t = sympy.Symbol("t")
    a = sympy.Rational(x.re.numerator, x.re.denominator) + sympy.I * sympy.Rational(
        x.im.numerator, x.im.denominator
    )
    _, factors = sympy.factor_list(t ** m - a, t, gaussian=True)
    roots = []
    for factor, _ in factors:
        poly = sympy.Poly(factor, t, gaussian=True)
        if poly.degree() == 1:
            lead, const = poly.all_coeffs()
            roots.append(_sympy_to_gaussian(-const / lead))
    if not roots:
        raise ScalingObstruction(f"{x} has no {m}-th root in Q(i)")
    roots.sort(key=lambda r: (-r.re, -r.im))
    return roots[0]
