"""Numeric replay of a certificate on explicit functions.

Walks the steps of a certificate carrying a table per leaf.  A CS step
duplicates the tables (the right copy conjugated); a morph step picks the
coset of the image of theta that maximises the restricted average and
builds the pulled-back tables on the source.  At every step the average
may only grow, up to the square root taken by a CS step.
"""

from __future__ import annotations

import logging
from collections.abc import Mapping

import numpy as np
from pydantic import BaseModel, Field

from cs_certify.config import get_config
from cs_certify.data.averages import FunctionTable, lambda_eval, points
from cs_certify.data.morphisms import DatumMorphism
from cs_certify.diagrams.constructions import datum_of
from cs_certify.diagrams.labels import LEFT, RIGHT, ZEROI, Label, as_label, fmt, prefixed
from cs_certify.diagrams.morphisms import datum_morphism_of
from cs_certify.entailment.certificate import (
    CsStep,
    EntailmentCertificate,
    MorphStep,
    RelabelStep,
)
from cs_certify.entailment.replay import apply_step
from cs_certify.errors import CertificateError
from cs_certify.field.matrix import FpMatrix, image_basis, rank

logger = logging.getLogger(__name__)


class TransportStep(BaseModel):
    index: int
    kind: str
    before: float = Field(description="|Lambda| before the step")
    after: float = Field(description="|Lambda| after the step")
    exponent: float = Field(description="1/2 for a CS step, else 1")
    holds: bool


class TransportReport(BaseModel):
    ok: bool
    initial_value: float
    final_value: float
    k: int
    steps: list[TransportStep] = Field(default_factory=list)
    gamma_ok: bool = True
    tables: dict[Label, FunctionTable] = Field(default_factory=dict, exclude=True)

    model_config = {"arbitrary_types_allowed": True}

    def require(self) -> TransportReport:
        if not self.ok:
            bad = next((s for s in self.steps if not s.holds), None)
            where = "gamma" if bad is None else f"step {bad.index}"
            raise CertificateError(f"numeric inequality violated at {where}")
        return self


def _complement(theta: FpMatrix) -> FpMatrix:
    """Standard basis vectors completing the image of theta to the whole space."""
    p, dim = theta.p, theta.rows
    chosen: list[int] = []
    current = image_basis(theta)
    r = current.cols
    ident = FpMatrix.identity(p, dim)
    for c in range(dim):
        if r == dim:
            break
        trial = FpMatrix.hstack([current, ident.select_columns([c])], rows=dim, p=p)
        if rank(trial) > r:
            current, r = trial, r + 1
            chosen.append(c)
    return ident.select_columns(chosen) if chosen else FpMatrix.zeros(p, dim, 0)


def pull_back(
    morph: DatumMorphism, tables: Mapping[Label, FunctionTable], n: int
) -> tuple[dict[Label, FunctionTable], complex]:
    """Tables on the source of a datum morphism from tables on its target.

    Returns the tables for the maximising coset and the restricted average
    ``g_zero(0) * Lambda_source(g)`` they realise.
    """
    src, tgt = morph.source, morph.target
    p = tgt.p
    comp = _complement(morph.theta)
    c = comp.cols
    reps = points(p, c, n)
    best: tuple[float, int, dict, complex] | None = None
    for ell in range(reps.shape[0]):
        v = np.mod(np.einsum("vc,cn->vn", comp.array, reps[ell]), p)
        grouped: dict[Label, list[Label]] = {}
        for i in tgt.labels:
            grouped.setdefault(morph.alpha[i], []).append(i)
        zero_factor = 1.0 + 0j
        for i in grouped.get(ZEROI, []):
            shift = np.mod(tgt.phi(i).array @ v, p)
            zero_factor *= tables[i](shift[None])[0]
        pulled: dict[Label, FunctionTable] = {}
        for j in src.labels:
            wj = src.w_dim(j)
            pts = points(p, wj, n)
            values = np.ones(pts.shape[0], dtype=np.complex128)
            for i in grouped.get(j, []):
                shift = np.mod(tgt.phi(i).array @ v, p)
                images = np.einsum("ab,cbn->can", morph.sigma[i].array, pts) + shift[None]
                values *= tables[i](images)
            pulled[j] = FunctionTable(p, wj, n, values)
        value = zero_factor * lambda_eval(src, pulled, n)
        if best is None or abs(value) > best[0]:
            best = (abs(value), ell, pulled, value)
    assert best is not None
    logger.debug("Coset %d of %d maximises the restricted average", best[1], reps.shape[0])
    return best[2], best[3]


def semantic_transport(
    cert: EntailmentCertificate,
    tables: Mapping | None = None,
    n: int = 1,
    seed: int | None = 0,
) -> TransportReport:
    """Check the inequality chain of a certificate on explicit functions.

    With no tables, random unit-modulus tables are drawn from ``seed``.
    """
    tol = get_config().tolerance
    diagram = cert.initial
    datum, _ = datum_of(diagram)
    if tables is None:
        rng = np.random.default_rng(seed)
        current = {
            x: FunctionTable.random(datum.p, datum.w_dim(x), n, rng) for x in datum.labels
        }
    else:
        current = {as_label(k): t for k, t in tables.items()}
    initial_tables = dict(current)
    origin = {x: (x, 0) for x in datum.labels}
    value = abs(lambda_eval(datum, current, n))
    start = value
    k = 0
    steps: list[TransportStep] = []

    for index, step in enumerate(cert.steps):
        before = value
        exponent = 1.0
        if isinstance(step, CsStep):
            nxt, _, _ = apply_step(diagram, step)
            shared = {diagram.resolve(x) for x in step.leaves}
            fresh: dict[Label, FunctionTable] = {}
            fresh_origin = {}
            for x in diagram.leaves:
                if x in shared:
                    continue
                fresh[prefixed(LEFT, x)] = current[x]
                fresh[prefixed(RIGHT, x)] = current[x].conj()
                if x in origin:
                    i, bit = origin[x]
                    fresh_origin[prefixed(LEFT, x)] = (i, bit)
                    fresh_origin[prefixed(RIGHT, x)] = (i, 1 - bit)
            datum, _ = datum_of(nxt)
            current, origin = fresh, fresh_origin
            value = abs(lambda_eval(datum, current, n))
            exponent = 0.5
            k += 1
        elif isinstance(step, MorphStep):
            morph = step.morphism
            nxt, step_gamma, _ = apply_step(diagram, step)
            dm = datum_morphism_of(morph)
            pulled, _ = pull_back(dm, current, n)
            origin = {
                j: origin[i] for j, (i, _) in step_gamma.items() if i in origin
            }
            current = pulled
            datum = dm.source
            value = abs(lambda_eval(datum, current, n))
        elif isinstance(step, RelabelStep):
            nxt, step_gamma, _ = apply_step(diagram, step)
            current = {new: current[old] for new, (old, _) in step_gamma.items()}
            origin = {new: origin[old] for new, (old, _) in step_gamma.items() if old in origin}
        else:
            nxt, step_gamma, inc = apply_step(diagram, step)
            k += inc
            origin = {j: origin[j] for j in step_gamma if j in origin}
        holds = before <= value**exponent + tol
        if not holds:
            logger.error(
                "Step %d (%s): |Lambda| %.12g exceeds %.12g^%g", index, step.type, before, value,
                exponent,
            )
        steps.append(
            TransportStep(
                index=index, kind=step.type, before=before, after=value,
                exponent=exponent, holds=holds,
            )
        )
        diagram = nxt

    gamma_ok = True
    for j, (i, bit) in cert.claimed_gamma.items():
        if origin.get(j) != (i, bit):
            gamma_ok = False
            logger.error("Claimed gamma at %s is not tracked by the transport", fmt(j))
            continue
        if not current[j].is_translate_of(initial_tables[i], conjugate=bool(bit)):
            gamma_ok = False
            logger.error("Table at %s is not a translate of the table at %s", fmt(j), fmt(i))
    chain = start <= value ** (1.0 / 2**k) + tol if k else start <= value + tol
    ok = chain and gamma_ok and all(s.holds for s in steps)
    return TransportReport(
        ok=ok, initial_value=start, final_value=value, k=k, steps=steps,
        gamma_ok=gamma_ok, tables=current,
    )
