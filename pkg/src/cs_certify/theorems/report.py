"""Pipeline reports: the certificate, its CS count, the bounds it is held to and timings."""

from __future__ import annotations

import logging
import time
from collections.abc import Iterator
from contextlib import contextmanager

from pydantic import BaseModel, Field

from cs_certify.entailment.certificate import EntailmentCertificate
from cs_certify.entailment.replay import CertificateBuilder, replay

logger = logging.getLogger(__name__)


class StageRecord(BaseModel):
    name: str
    k: int = Field(description="CS steps spent in the stage")
    bound: int | None = None
    seconds: float


class SpotCheck(BaseModel):
    """One numeric inequality checked on random tables."""

    name: str
    trials: int
    ok: bool
    worst_margin: float = Field(description="Least right-hand side minus left-hand side seen")
    detail: str = ""


class PipelineReport(BaseModel):
    theorem: str
    p: int
    certificate: EntailmentCertificate
    k: int
    bound: int = Field(description="Staged bound on k, summed over the construction stages")
    formula: float | None = Field(
        default=None, description="The asymptotic expression the staged bound is compared with"
    )
    gamma: dict[str, tuple[str, int]] = Field(default_factory=dict)
    stages: list[StageRecord] = Field(default_factory=list)
    spotchecks: list[SpotCheck] = Field(default_factory=list)
    warnings: list[str] = Field(default_factory=list)
    parameters: dict[str, int | str] = Field(default_factory=dict)

    model_config = {"arbitrary_types_allowed": True}

    @property
    def ok(self) -> bool:
        return self.k <= self.bound and all(c.ok for c in self.spotchecks)


class StageClock:
    """Records the CS steps and wall time each stage adds to a builder."""

    def __init__(self, builder: CertificateBuilder) -> None:
        self.builder = builder
        self.stages: list[StageRecord] = []

    @contextmanager
    def stage(self, name: str, bound: int | None = None) -> Iterator[None]:
        start_k = self.builder.k
        start = time.perf_counter()
        yield
        spent = self.builder.k - start_k
        seconds = time.perf_counter() - start
        self.stages.append(StageRecord(name=name, k=spent, bound=bound, seconds=seconds))
        logger.info("Stage %s: %d CS steps in %.2fs", name, spent, seconds)
        if bound is not None and spent > bound:
            raise AssertionError(f"stage {name} used {spent} CS steps, bound {bound}")


def finish(
    theorem: str,
    p: int,
    builder: CertificateBuilder,
    clock: StageClock,
    bound: int,
    **extra,
) -> PipelineReport:
    """Replay the built certificate and wrap it in a report."""
    cert = builder.certificate()
    result = replay(cert).require()
    if result.k > bound:
        raise AssertionError(f"{theorem}: k={result.k} exceeds the staged bound {bound}")
    report = PipelineReport(
        theorem=theorem,
        p=p,
        certificate=cert,
        k=result.k,
        bound=bound,
        gamma=cert.claimed_gamma.to_dict(),
        stages=clock.stages,
        **extra,
    )
    logger.info("%s: certificate replays with k=%d (staged bound %d)", theorem, report.k, bound)
    return report
