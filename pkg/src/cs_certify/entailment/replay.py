"""Replaying certificates step by step, and building them incrementally."""

from __future__ import annotations

import logging
from collections.abc import Iterable, Mapping

from pydantic import BaseModel, Field

from cs_certify.config import get_config
from cs_certify.diagrams.constructions import relabel_diagram, self_join
from cs_certify.diagrams.diagram import Diagram, validate
from cs_certify.diagrams.labels import LEFT, RIGHT, PrefixRules, fmt, prefixed
from cs_certify.diagrams.morphisms import (
    DiagramMorphism,
    is_strong_isomorphism,
    rename_morphism,
    verify_diagram_morphism,
)
from cs_certify.entailment.certificate import (
    CsStep,
    EntailmentCertificate,
    Gamma,
    MorphStep,
    ProofStep,
    RelabelStep,
    WeakenStep,
)
from cs_certify.errors import CertificateError, CertifyError

logger = logging.getLogger(__name__)


def cs_step(diagram: Diagram, leaves: Iterable) -> tuple[Diagram, Gamma]:
    """``D +_S D`` and its gamma: (L;i) -> (i,0), (R;i) -> (i,1) for leaves outside S."""
    shared = [diagram.resolve(x) for x in leaves]
    for x in shared:
        if not diagram.is_leaf(x):
            raise CertificateError(f"CS set contains non-leaf {fmt(x)}")
    joined = self_join(diagram, shared)
    doubled = set(diagram.leaves) - set(shared)
    gamma = {}
    for x in diagram.leaves:
        if x in doubled:
            gamma[prefixed(LEFT, x)] = (x, 0)
            gamma[prefixed(RIGHT, x)] = (x, 1)
    return joined, Gamma(gamma)


def morph_gamma(morph: DiagramMorphism, respected: Iterable) -> Gamma:
    """alpha(i) -> (i, 0) for every respected leaf i of the previous diagram."""
    return Gamma({morph.alpha[i]: (i, 0) for i in respected})


def apply_step(diagram: Diagram, step: ProofStep) -> tuple[Diagram, Gamma, int]:
    """Result diagram, step gamma and CS increment of one step."""
    if isinstance(step, CsStep):
        joined, gamma = cs_step(diagram, step.leaves)
        return joined, gamma, 1
    if isinstance(step, MorphStep):
        morph = step.morphism
        if morph.target != diagram:
            raise CertificateError("morphism target is not the current diagram")
        report = verify_diagram_morphism(morph)
        if not report.ok:
            first = report.failures[0]
            raise CertificateError(f"morphism fails at {first.where}: {first.reason}")
        return morph.source, morph_gamma(morph, report.respected), 0
    if isinstance(step, RelabelStep):
        renamed, rename = relabel_diagram(diagram, PrefixRules(step.rules))
        iso = rename_morphism(diagram, renamed, rename)
        if not is_strong_isomorphism(iso):
            raise CertificateError("relabelling is not a strong isomorphism")
        return renamed, Gamma({rename[x]: (x, 0) for x in diagram.leaves}), 0
    if isinstance(step, WeakenStep):
        keep = diagram.leaves if step.keep is None else [diagram.resolve(x) for x in step.keep]
        return diagram, Gamma({x: (x, 0) for x in keep}), step.k
    raise CertificateError(f"unknown step type {type(step).__name__}")


class ReplayReport(BaseModel):
    """Outcome of replaying a certificate."""

    ok: bool
    k: int = 0
    gamma: Gamma = Field(default_factory=Gamma)
    final: Diagram | None = None
    hashes: list[str] = Field(default_factory=list)
    failed_step: int | None = None
    cause: str = ""

    model_config = {"arbitrary_types_allowed": True}

    def require(self) -> ReplayReport:
        if not self.ok:
            raise CertificateError(self.cause, step=self.failed_step)
        return self


def replay(cert: EntailmentCertificate) -> ReplayReport:
    """Recompute every intermediate diagram and check the claims.

    Accepts iff every step applies, the final diagram matches, the computed
    CS count does not exceed ``claimed_k`` and ``claimed_gamma`` is a
    sub-function of the computed gamma.
    """
    record = get_config().store_intermediate_hashes
    validate(cert.initial).require()
    current = cert.initial
    gamma = Gamma.identity(current.leaves)
    k = 0
    hashes: list[str] = []

    def fail(index: int | None, cause: str) -> ReplayReport:
        logger.info("Replay rejected at step %s: %s", index, cause)
        return ReplayReport(
            ok=False, k=k, gamma=gamma, final=current, hashes=hashes,
            failed_step=index, cause=cause,
        )

    for index, step in enumerate(cert.steps):
        try:
            current, step_gamma, inc = apply_step(current, step)
        except CertifyError as exc:
            return fail(index, str(exc))
        gamma = gamma.then(step_gamma)
        k += inc
        if record or cert.hashes:
            digest = current.fingerprint()
            if cert.hashes and index < len(cert.hashes) and cert.hashes[index] != digest:
                return fail(index, "intermediate diagram hash mismatch")
            hashes.append(digest)
        logger.debug("Step %d (%s): %r, k=%d", index, step.type, current, k)

    if cert.final is not None and cert.final != current:
        return fail(None, "final diagram does not match")
    if k > cert.claimed_k:
        return fail(None, f"computed k={k} exceeds claimed k={cert.claimed_k}")
    if not gamma.extends(cert.claimed_gamma):
        return fail(None, "claimed gamma is not a sub-function of the computed gamma")
    logger.info("Replayed %d steps: k=%d, final %r", len(cert.steps), k, current)
    return ReplayReport(ok=True, k=k, gamma=gamma, final=current, hashes=hashes)


# ---------------------------------------------------------------------------
# Builder
# ---------------------------------------------------------------------------


class CertificateBuilder:
    """Apply steps one at a time, checking each, and emit the certificate."""

    def __init__(self, initial: Diagram) -> None:
        validate(initial).require()
        self.initial = initial
        self.current = initial
        self.gamma = Gamma.identity(initial.leaves)
        self.k = 0
        self.steps: list[ProofStep] = []
        self.hashes: list[str] = []

    def _push(self, step: ProofStep) -> CertificateBuilder:
        try:
            self.current, step_gamma, inc = apply_step(self.current, step)
        except CertifyError as exc:
            raise CertificateError(str(exc), step=len(self.steps)) from exc
        self.gamma = self.gamma.then(step_gamma)
        self.k += inc
        self.steps.append(step)
        if get_config().store_intermediate_hashes:
            self.hashes.append(self.current.fingerprint())
        return self

    def cs(self, leaves: Iterable) -> CertificateBuilder:
        return self._push(CsStep(leaves=list(leaves)))

    def morph(self, morphism: DiagramMorphism) -> CertificateBuilder:
        return self._push(MorphStep(morphism=morphism))

    def relabel(self, rules: Mapping | Iterable) -> CertificateBuilder:
        return self._push(RelabelStep(rules=rules))

    def weaken(self, keep: Iterable | None = None, k: int = 0) -> CertificateBuilder:
        return self._push(WeakenStep(keep=None if keep is None else list(keep), k=k))

    def extend(self, cert: EntailmentCertificate) -> CertificateBuilder:
        """Append every step of a certificate starting at the current diagram."""
        if cert.initial != self.current:
            raise CertificateError("certificate does not start at the current diagram")
        for step in cert.steps:
            self._push(step)
        return self

    def certificate(self, gamma: Gamma | None = None) -> EntailmentCertificate:
        return EntailmentCertificate(
            initial=self.initial,
            steps=list(self.steps),
            claimed_k=self.k,
            claimed_gamma=self.gamma if gamma is None else gamma,
            final=self.current,
            hashes=list(self.hashes) if len(self.hashes) == len(self.steps) else [],
        )
