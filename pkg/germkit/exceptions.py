"""Domain errors. Each carries the exit code the CLI returns for it."""

from __future__ import annotations

from typing import Any


class GermError(Exception):
    exit_code = 1
    kind = "error"


class ParseError(GermError):
    exit_code = 2
    kind = "parse"


class PreconditionError(GermError):
    exit_code = 3
    kind = "precondition"


class NonDominant(PreconditionError):
    kind = "non_dominant"


class IndeterminateLift(PreconditionError):
    kind = "indeterminate_lift"


class PointNotFixed(PreconditionError):
    kind = "point_not_fixed"

    def __init__(self, message: str, image: Any = None):
        super().__init__(message)
        self.image = image


class IncompatibleFields(PreconditionError, ValueError):
    kind = "incompatible_fields"


class TruncationExhausted(GermError):
    exit_code = 4
    kind = "truncation_exhausted"


class Unsupported(GermError):
    exit_code = 5
    kind = "unsupported"


class Undecidable(GermError):
    exit_code = 6
    kind = "undecidable"


class MaxStepsExceeded(GermError):
    exit_code = 7
    kind = "max_steps_exceeded"

    def __init__(self, message: str, residue: Any = None):
        super().__init__(message)
        self.residue = residue


class ScalingObstruction(GermError):
    exit_code = 8
    kind = "scaling_obstruction"


class CommonZero(PreconditionError):
    kind = "common_zero"

    def __init__(self, message: str, thetas: Any = None):
        super().__init__(message)
        self.thetas = thetas


class InvariantViolated(GermError):
    """An exact self-check inside a computation failed."""

    exit_code = 9
    kind = "invariant_violated"
