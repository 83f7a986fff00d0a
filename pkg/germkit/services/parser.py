"""
Text front end: scalars, series, germs and job files.

Grammar (implicit multiplication binds like '*', '^' binds tighter, both
left-associative apart from '^'):

    germ   := [name '='] '(' expr ',' expr ')'
    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/' | <implicit>) unary)*
    unary  := ('-' | '+') unary | power
    power  := atom ('^' ['-'] NUMBER)?
    atom   := NUMBER | 'i' | 'z' | 'w' | 'zeta' '(' NUMBER ')' | 'O' '(' NUMBER ')' | '(' expr ')'

So ``1/3i`` reads as (1/3)·i and ``O(k)`` caps the truncation at k - 1.
"""

import logging
import re
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

from germkit.exceptions import ParseError, PreconditionError
from germkit.services.scalars import I_UNIT, Scalar, zeta_power
from germkit.services.series import BiSeries

logger = logging.getLogger(__name__)

MIN_ORDER = 4


class Command(str, Enum):
    CLASSIFY = "classify"
    RATES = "rates"
    RIGID = "rigid"
    BLOWUP = "blowup"
    WALK = "walk"
    EXC_ACTION = "exc-action"
    RIGIDIFY = "rigidify"
    PREPARE = "prepare"
    CURVES = "curves"
    NORMAL_FORM = "normal-form"
    DIVERGENCE = "divergence"
    EIGEN = "eigen"
    SEGMENT = "segment"


@dataclass
class JobSpec:
    command: Command
    germ: str
    order: int
    options: dict[str, str] = field(default_factory=dict)
    source: str = "inline"

    def to_dict(self) -> dict:
        return {
            "command": self.command.value,
            "germ": self.germ,
            "order": self.order,
            "options": dict(self.options),
            "source": self.source,
        }


# ── Regex helpers ──────────────────────────────────────────────────────

_TOKEN = re.compile(
    r"\s*(?:(?P<number>\d+)|(?P<zeta>zeta)|(?P<name>[zwiO])|(?P<op>\*\*|[-+*/^(),]))"
)
_GERM_NAME = re.compile(r"^\s*[A-Za-z_]\w*\s*=\s*")
_JOB_LINE = re.compile(r"^\s*(?P<key>[a-z][a-z_-]*)\s*:\s*(?P<value>.*?)\s*$")
_COMMENT = re.compile(r"^\s*(?:#.*)?$")


def _tokenize(text: str) -> list[tuple[str, str]]:
    tokens = []
    pos = 0
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise ParseError(f"unexpected character {text[pos:].lstrip()[:1]!r} at column {pos + 1}")
        kind = m.lastgroup
        value = m.group(kind)
        if value == "**":
            value = "^"
        tokens.append((kind, value))
        pos = m.end()
    return tokens


class _Parser:
    def __init__(self, text: str, order: int):
        self.tokens = _tokenize(text)
        self.pos = 0
        self.trunc = order

    def peek(self) -> tuple[str, str] | None:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def take(self) -> tuple[str, str]:
        tok = self.peek()
        if tok is None:
            raise ParseError("unexpected end of input")
        self.pos += 1
        return tok

    def expect(self, value: str) -> None:
        tok = self.take()
        if tok[1] != value:
            raise ParseError(f"expected {value!r}, found {tok[1]!r}")

    def number(self) -> int:
        kind, value = self.take()
        if kind != "number":
            raise ParseError(f"expected a number, found {value!r}")
        return int(value)

    def expr(self) -> BiSeries:
        value = self.term()
        while (tok := self.peek()) and tok[1] in "+-" and tok[0] == "op":
            self.take()
            rhs = self.term()
            value = value + rhs if tok[1] == "+" else value - rhs
        return value

    def _starts_atom(self, tok: tuple[str, str] | None) -> bool:
        return tok is not None and (tok[0] in ("number", "zeta", "name") or tok[1] == "(")

    def term(self) -> BiSeries:
        value = self.unary()
        while True:
            tok = self.peek()
            if tok and tok[1] == "*":
                self.take()
                value = value * self.unary()
            elif tok and tok[1] == "/":
                self.take()
                value = self._divide(value, self.unary())
            elif self._starts_atom(tok):
                value = value * self.unary()
            else:
                return value

    def _divide(self, num: BiSeries, den: BiSeries) -> BiSeries:
        if den.is_zero():
            raise ZeroDivisionError("division by zero in series expression")
        try:
            return num * den.unit_reciprocal()
        except PreconditionError as exc:
            raise ParseError(f"cannot divide by non-unit {den}") from exc

    def unary(self) -> BiSeries:
        tok = self.peek()
        if tok and tok[1] == "-":
            self.take()
            return -self.unary()
        if tok and tok[1] == "+":
            self.take()
            return self.unary()
        return self.power()

    def power(self) -> BiSeries:
        base = self.atom()
        tok = self.peek()
        if tok and tok[1] == "^":
            self.take()
            negative = False
            if (nxt := self.peek()) and nxt[1] == "-":
                self.take()
                negative = True
            exponent = self.number()
            if negative:
                if base.constant_term().is_zero():
                    raise ParseError("negative power of a non-unit")
                return base.unit_reciprocal() ** exponent
            return base ** exponent
        return base

    def atom(self) -> BiSeries:
        kind, value = self.take()
        if kind == "number":
            return BiSeries.constant(int(value), self.trunc)
        if kind == "name":
            if value == "z":
                return BiSeries.z(self.trunc)
            if value == "w":
                return BiSeries.w(self.trunc)
            if value == "i":
                return BiSeries.constant(I_UNIT, self.trunc)
            self.expect("(")
            k = self.number()
            self.expect(")")
            if k < 1:
                raise ParseError("O(k) needs k ≥ 1")
            self.trunc = min(self.trunc, k - 1)
            return BiSeries.constant(0, self.trunc)
        if kind == "zeta":
            self.expect("(")
            r = self.number()
            self.expect(")")
            if r < 1:
                raise ParseError("zeta(r) needs r ≥ 1")
            return BiSeries.constant(zeta_power(r, 1), self.trunc)
        if value == "(":
            inner = self.expr()
            self.expect(")")
            return inner
        raise ParseError(f"unexpected token {value!r}")

    def finish(self) -> None:
        if self.peek() is not None:
            raise ParseError(f"trailing input starting at {self.peek()[1]!r}")


def parse_series(text: str, order: int) -> BiSeries:
    """Parse a series in z, w, truncated at total degree ``order`` (or earlier O(k))."""
    _check_order(order)
    p = _Parser(text, order)
    value = p.expr()
    p.finish()
    return value.truncate(p.trunc)


def parse_scalar(text: str) -> Scalar:
    """Parse a constant expression such as ``3/2``, ``-1/3i`` or ``(1+i)*zeta(6)^2``."""
    p = _Parser(text, MIN_ORDER)
    value = p.expr()
    p.finish()
    if any(e != (0, 0) for e in value.terms):
        raise ParseError(f"not a constant: {text!r}")
    return value.constant_term()


def parse_germ(text: str, order: int) -> tuple[BiSeries, BiSeries]:
    """Parse ``(f1, f2)`` (optionally ``f = (f1, f2)``) into two series with a common truncation."""
    _check_order(order)
    text = _GERM_NAME.sub("", text, count=1)
    p = _Parser(text, order)
    p.expect("(")
    f1 = p.expr()
    p.expect(",")
    f2 = p.expr()
    p.expect(")")
    p.finish()
    n = p.trunc
    logger.debug("parsed germ at truncation %d", n)
    return f1.truncate(n), f2.truncate(n)


def _check_order(order: int) -> None:
    if order < MIN_ORDER:
        raise ParseError(f"truncation order must be at least {MIN_ORDER}, got {order}")


def parse_job(text: str, source: str = "inline", default_order: int = 16) -> JobSpec:
    """Parse a job file: ``key: value`` lines, '#' comments.

    Required keys: command, germ. Optional: order, plus command options.
    """
    values: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        if _COMMENT.match(line):
            continue
        m = _JOB_LINE.match(line)
        if not m:
            raise ParseError(f"{source}:{lineno}: expected 'key: value'")
        values[m.group("key").replace("-", "_")] = m.group("value")

    try:
        command = Command(values.pop("command"))
    except KeyError:
        raise ParseError(f"{source}: missing 'command'") from None
    except ValueError as exc:
        raise ParseError(f"{source}: {exc}") from None
    if "germ" not in values:
        raise ParseError(f"{source}: missing 'germ'")
    germ = values.pop("germ")
    order_text = values.pop("order", str(default_order))
    if not order_text.isdigit():
        raise ParseError(f"{source}: order must be a positive integer")
    order = int(order_text)
    _check_order(order)
    return JobSpec(command=command, germ=germ, order=order, options=values, source=source)


def load_job(path: str | Path, default_order: int = 16) -> JobSpec:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"cannot read job file {path}: {exc}") from exc
    return parse_job(text, source=str(path), default_order=default_order)
