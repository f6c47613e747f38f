"""Conversion between engine objects and the wire models, and JSON file IO."""

from __future__ import annotations

import hashlib
import json
import logging
from pathlib import Path
from typing import TypeVar

from pydantic import BaseModel, ValidationError

from cs_certify.data.datum import LinearDatum
from cs_certify.data.standard import forms
from cs_certify.diagrams.diagram import Diagram
from cs_certify.diagrams.labels import as_label, as_prefix, fmt
from cs_certify.diagrams.morphisms import DiagramMorphism
from cs_certify.entailment.certificate import (
    CsStep,
    EntailmentCertificate,
    MorphStep,
    RelabelStep,
    WeakenStep,
)
from cs_certify.errors import CertificateError, DatumError
from cs_certify.export.models import (
    CertificateModel,
    CsStepModel,
    DatumModel,
    DiagramModel,
    DiagramMorphismModel,
    EdgeModel,
    FormsModel,
    IndexModel,
    MatrixModel,
    MorphStepModel,
    RelabelStepModel,
    ReportModel,
    SpotCheckModel,
    StageModel,
    VertexModel,
    WeakenStepModel,
)
from cs_certify.field.matrix import FpMatrix
from cs_certify.theorems.report import PipelineReport

logger = logging.getLogger(__name__)

M = TypeVar("M", bound=BaseModel)


# ---------------------------------------------------------------------------
# Matrices and data
# ---------------------------------------------------------------------------


def encode_matrix(m: FpMatrix) -> MatrixModel:
    return MatrixModel(**m.to_json())


def decode_matrix(model: MatrixModel) -> FpMatrix:
    return FpMatrix.from_json(model.model_dump())


def encode_datum(phi: LinearDatum) -> DatumModel:
    return DatumModel(
        p=phi.p,
        v_dim=phi.v_dim,
        indices=[IndexModel(label=fmt(i), phi=encode_matrix(m)) for i, m in phi.items()],
    )


def decode_datum(model: DatumModel) -> LinearDatum:
    return LinearDatum(
        model.p, model.v_dim, [(as_label(x.label), decode_matrix(x.phi)) for x in model.indices]
    )


def datum_from_forms(
    model: FormsModel, p: int | None = None
) -> tuple[LinearDatum, dict[str, list[int]]]:
    """The datum of a system of forms and its integer rows, keyed by label."""
    p = p if p is not None else model.p
    if p is None:
        raise DatumError("a system of forms needs a modulus p")
    labels = model.labels or [str(k + 1) for k in range(len(model.forms))]
    phi = forms(p, model.forms, labels)
    declared = {fmt(as_label(x)): list(row) for x, row in zip(labels, model.forms)}
    return phi, declared


# ---------------------------------------------------------------------------
# Diagrams and morphisms
# ---------------------------------------------------------------------------


def encode_diagram(diagram: Diagram) -> DiagramModel:
    return DiagramModel(
        p=diagram.p,
        vertices=[
            VertexModel(label=fmt(x), dim=diagram.dim(x), leaf=diagram.is_leaf(x))
            for x in diagram.vertices
        ],
        edges=[
            EdgeModel(source=fmt(x), target=fmt(y), map=encode_matrix(m))
            for (x, y), m in diagram.edge_items()
        ],
        aliases={fmt(a): fmt(c) for a, c in diagram.aliases.items()},
    )


def decode_diagram(model: DiagramModel) -> Diagram:
    return Diagram(
        model.p,
        [(as_label(v.label), (v.dim, v.leaf)) for v in model.vertices],
        [((as_label(e.source), as_label(e.target)), decode_matrix(e.map)) for e in model.edges],
        {as_label(a): as_label(c) for a, c in model.aliases.items()},
    )


def diagram_key(diagram: Diagram) -> str:
    """The fingerprint, extended by the choice of canonical names.

    Equal diagrams may disagree about which name of a merged vertex is
    canonical, and morphisms are keyed by canonical names.
    """
    names = sorted(fmt(x) for x in diagram.vertices)
    digest = hashlib.sha256(json.dumps(names, ensure_ascii=False).encode("utf-8")).hexdigest()
    return f"{diagram.fingerprint()}-{digest[:12]}"


class _DiagramTable:
    """Each distinct diagram stored once under its key."""

    def __init__(self) -> None:
        self.models: dict[str, DiagramModel] = {}

    def put(self, diagram: Diagram) -> str:
        key = diagram_key(diagram)
        if key not in self.models:
            self.models[key] = encode_diagram(diagram)
        return key


def encode_morphism(morph: DiagramMorphism, table: _DiagramTable) -> DiagramMorphismModel:
    return DiagramMorphismModel(
        source=table.put(morph.source),
        target=table.put(morph.target),
        alpha={fmt(x): fmt(a) for x, a in morph.alpha.items()},
        theta={fmt(x): encode_matrix(m) for x, m in morph.theta.items()},
    )


def decode_morphism(
    model: DiagramMorphismModel, diagrams: dict[str, Diagram]
) -> DiagramMorphism:
    try:
        source, target = diagrams[model.source], diagrams[model.target]
    except KeyError as exc:
        raise CertificateError(f"morphism refers to unknown diagram {exc.args[0]}") from None
    return DiagramMorphism(
        source=source,
        target=target,
        alpha={as_label(x): as_label(a) for x, a in model.alpha.items()},
        theta={as_label(x): decode_matrix(m) for x, m in model.theta.items()},
    )


# ---------------------------------------------------------------------------
# Certificates
# ---------------------------------------------------------------------------


def encode_certificate(cert: EntailmentCertificate) -> CertificateModel:
    table = _DiagramTable()
    initial = table.put(cert.initial)
    steps = []
    for step in cert.steps:
        if isinstance(step, MorphStep):
            steps.append(MorphStepModel(morphism=encode_morphism(step.morphism, table)))
        elif isinstance(step, CsStep):
            steps.append(CsStepModel(leaves=[fmt(x) for x in step.leaves]))
        elif isinstance(step, RelabelStep):
            steps.append(RelabelStepModel(rules=[(fmt(a), fmt(b)) for a, b in step.rules]))
        else:
            keep = None if step.keep is None else [fmt(x) for x in step.keep]
            steps.append(WeakenStepModel(keep=keep, k=step.k))
    final = None if cert.final is None else table.put(cert.final)
    return CertificateModel(
        diagrams=table.models,
        initial=initial,
        final=final,
        steps=steps,
        claimed_k=cert.claimed_k,
        claimed_gamma=cert.claimed_gamma.to_dict(),
        hashes=list(cert.hashes),
    )


def decode_certificate(model: CertificateModel) -> EntailmentCertificate:
    """Rebuild a certificate; the diagrams are checked against their keys."""
    diagrams: dict[str, Diagram] = {}
    for key, dm in model.diagrams.items():
        diagram = decode_diagram(dm)
        if diagram_key(diagram) != key:
            raise CertificateError(f"diagram {key[:12]} does not match its fingerprint")
        diagrams[key] = diagram
    steps = []
    for sm in model.steps:
        if isinstance(sm, MorphStepModel):
            steps.append(MorphStep(morphism=decode_morphism(sm.morphism, diagrams)))
        elif isinstance(sm, CsStepModel):
            steps.append(CsStep(leaves=sm.leaves))
        elif isinstance(sm, RelabelStepModel):
            steps.append(RelabelStep(rules=[(as_prefix(a), as_prefix(b)) for a, b in sm.rules]))
        else:
            steps.append(WeakenStep(keep=sm.keep, k=sm.k))
    if model.initial not in diagrams or (model.final and model.final not in diagrams):
        raise CertificateError("initial or final diagram missing from the table")
    return EntailmentCertificate(
        initial=diagrams[model.initial],
        steps=steps,
        claimed_k=model.claimed_k,
        claimed_gamma=model.claimed_gamma,
        final=diagrams[model.final] if model.final else None,
        hashes=model.hashes,
    )


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------


def encode_report(report: PipelineReport, *, with_certificate: bool = True) -> ReportModel:
    return ReportModel(
        theorem=report.theorem,
        p=report.p,
        k=report.k,
        bound=report.bound,
        formula=report.formula,
        gamma=report.gamma,
        stages=[StageModel(**s.model_dump()) for s in report.stages],
        spotchecks=[SpotCheckModel(**c.model_dump()) for c in report.spotchecks],
        warnings=report.warnings,
        parameters=report.parameters,
        certificate=encode_certificate(report.certificate) if with_certificate else None,
    )


# ---------------------------------------------------------------------------
# Files
# ---------------------------------------------------------------------------


def write_json(model: BaseModel, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(model.model_dump_json(indent=1), encoding="utf-8")
    logger.info("Wrote %s (%d bytes)", path, path.stat().st_size)
    return path


def read_json(cls: type[M], path: str | Path) -> M:
    text = Path(path).read_text(encoding="utf-8")
    try:
        return cls.model_validate_json(text)
    except ValidationError as exc:
        raise DatumError(f"{path} is not a valid {cls.__name__}: {exc}") from exc


def load_certificate(path: str | Path) -> EntailmentCertificate:
    """A certificate file, or the certificate embedded in a report file."""
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    if "theorem" in data:
        report = ReportModel.model_validate(data)
        if report.certificate is None:
            raise CertificateError(f"{path} holds a report without a certificate")
        return decode_certificate(report.certificate)
    return decode_certificate(CertificateModel.model_validate(data))


def load_datum(
    path: str | Path, p: int | None = None
) -> tuple[LinearDatum, dict[str, list[int]] | None]:
    """A datum file or a system of forms; forms also return their integer rows."""
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    try:
        if "forms" in data:
            return datum_from_forms(FormsModel.model_validate(data), p)
        return decode_datum(DatumModel.model_validate(data)), None
    except ValidationError as exc:
        raise DatumError(f"{path} is not a datum or a system of forms: {exc}") from exc
