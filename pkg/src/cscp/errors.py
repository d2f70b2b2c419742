"""Exception hierarchy shared across the package."""

from __future__ import annotations


class CscpError(Exception):
    """Base class for all domain errors."""


class ConfigError(CscpError):
    """Panel spec geometry or mode configuration is invalid."""


class UnknownUnitError(CscpError):
    """A command or reference targets a unit outside the plant catalog."""


class ScenarioError(CscpError):
    """A scenario step cannot be resolved against the bound plant/panel."""


class InfeasibleError(CscpError):
    """A synthesis problem has no solution under the given constraints."""


class UndefinedRatioError(CscpError):
    """Workload ratio requested against a zero-valued denominator."""


class LayoutError(CscpError):
    """An autonomy-lint layout references unknown units or rows."""


class FormatError(CscpError):
    """A document violates its file schema.

    ``field`` is a dotted path to the offending value; ``line`` is set when
    the underlying JSON text position is known.
    """

    def __init__(self, message: str, field: str = "", line: int | None = None):
        super().__init__(message)
        self.field = field
        self.line = line

    def __str__(self) -> str:
        loc = []
        if self.line is not None:
            loc.append(f"line {self.line}")
        if self.field:
            loc.append(f"field '{self.field}'")
        base = super().__str__()
        return f"{base} ({', '.join(loc)})" if loc else base
