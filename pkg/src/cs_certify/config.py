"""Engine-wide configuration: size caps and numeric tolerances.

A single active :class:`EngineConfig` is consulted by every capped
operation.  Callers may pass an explicit ``cap=`` to any such operation,
which always wins over the active configuration.
"""

from __future__ import annotations

import logging
from collections.abc import Iterator
from contextlib import contextmanager

from pydantic import BaseModel, Field

logger = logging.getLogger(__name__)


class EngineConfig(BaseModel):
    """Caps and tolerances for exact and numeric computations."""

    tensor_cap: int = Field(
        default=10**6, ge=1, description="Maximum entries of a Kronecker power"
    )
    lambda_cap: int = Field(
        default=10**7, ge=1, description="Maximum points enumerated by a multilinear average"
    )
    datum_cap: int = Field(
        default=4 * 10**7, ge=1, description="Maximum entries of a stacked limit-space system"
    )
    partition_index_cap: int = Field(
        default=22, ge=1, description="Largest index set for exact partition search"
    )
    tolerance: float = Field(default=1e-9, ge=0.0, description="Numeric inequality slack")
    store_intermediate_hashes: bool = Field(
        default=True, description="Record diagram fingerprints while building and replaying"
    )

    model_config = {"frozen": True}


_active = EngineConfig()


def get_config() -> EngineConfig:
    """Return the active configuration."""
    return _active


def set_config(config: EngineConfig) -> None:
    """Replace the active configuration."""
    global _active
    _active = config
    logger.debug("Engine config set: %s", config.model_dump())


@contextmanager
def override(**fields) -> Iterator[EngineConfig]:
    """Temporarily override selected fields of the active configuration."""
    previous = _active
    set_config(previous.model_copy(update=fields))
    try:
        yield _active
    finally:
        set_config(previous)


def resolve_cap(explicit: int | None, name: str) -> int:
    """Pick an explicit cap if given, else the active config value ``name``."""
    if explicit is not None:
        return explicit
    return getattr(_active, name)
