"""Exception hierarchy for mixsynth.

Every error carries a human-readable message and an optional remediation
hint. The CLI maps the two families onto exit codes: validation problems
(bad input files, incompatible shapes, invalid flags) exit with 1, runtime
failures (diverging fits, non-finite gradients) exit with 2.
"""

from typing import Optional


class MixsynthError(Exception):
    """Base class for all mixsynth errors."""

    exit_code = 2

    def __init__(self, message: str, hint: str = ""):
        super().__init__(message)
        self.message = message
        self.hint = hint

    def __str__(self) -> str:
        hint_part = f"\n  Hint: {self.hint}" if self.hint else ""
        return f"{self.message}{hint_part}"


class ValidationError(MixsynthError):
    """Input rejected before any computation ran."""

    exit_code = 1


class ShapeError(ValidationError):
    """Operand shapes are incompatible with a grad-core op-kind."""

    def __init__(self, op_kind: str, *shapes: tuple[int, ...], detail: str = ""):
        shape_text = ", ".join(str(tuple(s)) for s in shapes)
        message = f"{op_kind}: incompatible shapes {shape_text}"
        if detail:
            message += f" ({detail})"
        super().__init__(message)
        self.op_kind = op_kind
        self.shapes = shapes


class ConfigError(ValidationError):
    """Configuration file could not be read."""


class SchemaError(ValidationError):
    """A model, parameter or score file does not match its schema."""

    def __init__(self, kind: str, field: str, problem: str, hint: str = ""):
        super().__init__(f"{kind}: field '{field}' {problem}", hint)
        self.kind = kind
        self.field = field


class AudioFormatError(ValidationError):
    """WAV file has an unsupported sample rate, channel count or encoding."""


class ScoreError(ValidationError):
    """Score track violates the monophonic contract or cannot initialize."""


class RuntimeFailure(MixsynthError):
    """Computation started but could not complete."""

    exit_code = 2


class NonFiniteGradientError(RuntimeFailure):
    """A gradient contained NaN or infinity."""

    def __init__(self, iteration: int, name: Optional[str] = None):
        where = f" for '{name}'" if name else ""
        super().__init__(
            f"non-finite gradient{where} at iteration {iteration}",
            "lower the learning rate or check the initialization",
        )
        self.iteration = iteration


class DivergenceError(RuntimeFailure):
    """The loss became non-finite during optimization."""

    def __init__(self, iteration: int):
        super().__init__(
            f"loss diverged (non-finite) at iteration {iteration}",
            "lower the learning rate or check the initialization",
        )
        self.iteration = iteration
