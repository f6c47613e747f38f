"""Exception hierarchy shared by every engine module."""

from __future__ import annotations

from typing import Any


class CertifyError(Exception):
    """Base class for all engine errors."""


# ---------------------------------------------------------------------------
# Field kernel
# ---------------------------------------------------------------------------


class FieldError(CertifyError):
    """Invalid modulus or mixed moduli."""


class DimensionError(CertifyError):
    """Operand shapes do not agree."""


class CapExceededError(CertifyError):
    """A configured size cap would be exceeded."""

    def __init__(self, what: str, requested: int, cap: int) -> None:
        super().__init__(f"{what}: requested {requested} exceeds cap {cap}")
        self.what = what
        self.requested = requested
        self.cap = cap


# ---------------------------------------------------------------------------
# Data and diagrams
# ---------------------------------------------------------------------------


class DatumError(CertifyError):
    """Unknown, reserved or duplicated label, or invalid constructor parameters."""


class MorphismError(CertifyError):
    """A morphism square fails to commute or its shape is inconsistent."""

    def __init__(
        self,
        message: str,
        *,
        index: Any = None,
        edge: Any = None,
        witness: list[int] | None = None,
    ) -> None:
        super().__init__(message)
        self.index = index
        self.edge = edge
        self.witness = witness


class DiagramError(CertifyError):
    """A diagram violates a structural rule."""

    def __init__(self, message: str, *, kind: str = "structure", where: Any = None) -> None:
        super().__init__(message)
        self.kind = kind
        self.where = where


class SurjectivityUndecided(CertifyError):
    """Neither a direct computation nor a structural certificate applies."""


# ---------------------------------------------------------------------------
# Certificates, gates, theorems
# ---------------------------------------------------------------------------


class CertificateError(CertifyError):
    """A certificate step failed to replay."""

    def __init__(self, message: str, *, step: int | None = None, cause: str = "") -> None:
        super().__init__(message if step is None else f"step {step}: {message}")
        self.step = step
        self.cause = cause or message


class AssignmentError(CertifyError):
    """A gate assignment fails verification."""

    def __init__(self, message: str, *, mode: int | None = None, vertex: Any = None) -> None:
        super().__init__(message)
        self.mode = mode
        self.vertex = vertex


class ParameterError(CertifyError):
    """Parameters violate a construction's stated constraints."""


class HypothesisError(CertifyError):
    """A theorem hypothesis is not satisfied; the input is unsupported."""
