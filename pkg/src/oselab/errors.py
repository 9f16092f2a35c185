"""Exception hierarchy for oselab."""

from __future__ import annotations


class OselabError(Exception):
    """Base class for all library errors."""


# geometry
class GeometryError(OselabError, ValueError):
    pass


class RankDeficient(GeometryError):
    pass


class AmbientMismatch(GeometryError):
    pass


class NotTransverse(GeometryError):
    pass


class NotComplementary(GeometryError):
    pass


class ZeroVector(GeometryError):
    pass


class NotGeneralPosition(GeometryError):
    pass


# cocycles and spectra
class NotInvertible(OselabError):
    pass


class Overflow(OselabError, OverflowError):
    """A raw matrix product left the representable range."""


class DomainError(OselabError, ValueError):
    pass


class HorizonTooShort(OselabError):
    pass


class SeparationFailure(OselabError):
    pass


class SubsetBlowup(OselabError):
    pass


class InvalidSpec(OselabError, ValueError):
    pass


class NotPositiveDefinite(OselabError, ValueError):
    pass


class HypothesisFailure(OselabError):
    """A lemma hypothesis does not hold on the supplied data.

    ``clause`` names the violated hypothesis so callers can tell a
    rejected instance apart from a failed conclusion.
    """

    def __init__(self, clause: str, detail: str = ""):
        self.clause = clause
        self.detail = detail
        msg = f"hypothesis '{clause}' violated"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)


class DeltaTooLarge(HypothesisFailure):
    def __init__(self, delta: float, delta0: float):
        self.delta = delta
        self.delta0 = delta0
        super().__init__("delta0", f"delta={delta:.6g} >= delta0={delta0:.6g}")


# harness
class EmptyBlock(OselabError):
    pass


class InsufficientData(OselabError):
    def __init__(self, message: str, n_usable: int = 0, n_zero: int = 0):
        self.n_usable = n_usable
        self.n_zero = n_zero
        super().__init__(f"{message} (usable={n_usable}, zero-distance={n_zero})")


class ConfigError(OselabError, ValueError):
    def __init__(self, message: str, line: int | None = None, field: str | None = None):
        self.detail = message
        self.line = line
        self.field = field
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field '{field}'")
        prefix = ", ".join(where)
        super().__init__(f"{prefix}: {message}" if prefix else message)


class StageError(OselabError):
    """A component failure annotated with the pipeline stage that raised it."""

    def __init__(self, stage: str, cause: Exception):
        self.stage = stage
        self.cause = cause
        super().__init__(f"[{stage}] {type(cause).__name__}: {cause}")
