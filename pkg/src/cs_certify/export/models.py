"""Pydantic wire models for every object the command line reads or writes.

Labels travel in their textual form (tokens joined by ``;``); matrices
carry their modulus and row-major residues.
"""

from __future__ import annotations

from typing import Annotated, Literal, Union

from pydantic import BaseModel, Field

# ---------------------------------------------------------------------------
# Linear algebra and data
# ---------------------------------------------------------------------------


class MatrixModel(BaseModel):
    p: int = Field(ge=2)
    rows: int = Field(ge=0)
    cols: int = Field(ge=0)
    entries: list[int] = Field(description="Row-major residues in [0, p)")


class IndexModel(BaseModel):
    label: str
    phi: MatrixModel


class DatumModel(BaseModel):
    """A linear datum: phi_i: F_p^v_dim -> F_p^w_i for each index."""

    p: int = Field(ge=2)
    v_dim: int = Field(ge=0)
    indices: list[IndexModel]


class FormsModel(BaseModel):
    """A system of linear forms, the usual input of the theorem drivers."""

    p: int | None = Field(None, description="May be given on the command line instead")
    forms: list[list[int]] = Field(description="Integer coefficient rows, one per form")
    labels: list[str] | None = Field(None, description="Defaults to 1..len(forms)")


# ---------------------------------------------------------------------------
# Diagrams and morphisms
# ---------------------------------------------------------------------------


class VertexModel(BaseModel):
    label: str
    dim: int = Field(ge=0)
    leaf: bool


class EdgeModel(BaseModel):
    source: str
    target: str
    map: MatrixModel


class DiagramModel(BaseModel):
    p: int = Field(ge=2)
    vertices: list[VertexModel]
    edges: list[EdgeModel] = Field(default_factory=list)
    aliases: dict[str, str] = Field(default_factory=dict, description="alias -> canonical")


class DiagramMorphismModel(BaseModel):
    """``source -> target``; the diagrams are keys into the certificate table."""

    source: str
    target: str
    alpha: dict[str, str] = Field(description="target vertex -> source vertex")
    theta: dict[str, MatrixModel]


# ---------------------------------------------------------------------------
# Certificates
# ---------------------------------------------------------------------------


class MorphStepModel(BaseModel):
    type: Literal["morph"] = "morph"
    morphism: DiagramMorphismModel


class CsStepModel(BaseModel):
    type: Literal["cs"] = "cs"
    leaves: list[str] = Field(default_factory=list)


class RelabelStepModel(BaseModel):
    type: Literal["relabel"] = "relabel"
    rules: list[tuple[str, str]] = Field(description="old prefix -> new prefix")


class WeakenStepModel(BaseModel):
    type: Literal["weaken"] = "weaken"
    keep: list[str] | None = None
    k: int = Field(default=0, ge=0)


StepModel = Annotated[
    Union[MorphStepModel, CsStepModel, RelabelStepModel, WeakenStepModel],
    Field(discriminator="type"),
]


class CertificateModel(BaseModel):
    """``initial |=^claimed_k_gamma final``, with each distinct diagram stored once."""

    version: int = 1
    diagrams: dict[str, DiagramModel] = Field(description="diagram key -> diagram")
    initial: str
    final: str | None = None
    steps: list[StepModel] = Field(default_factory=list)
    claimed_k: int = Field(ge=0)
    claimed_gamma: dict[str, tuple[str, int]] = Field(default_factory=dict)
    hashes: list[str] = Field(default_factory=list)


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------


class StageModel(BaseModel):
    name: str
    k: int
    bound: int | None = None
    seconds: float


class SpotCheckModel(BaseModel):
    name: str
    trials: int
    ok: bool
    worst_margin: float
    detail: str = ""


class ReportModel(BaseModel):
    theorem: str
    p: int
    k: int
    bound: int
    formula: float | None = None
    gamma: dict[str, tuple[str, int]] = Field(default_factory=dict)
    stages: list[StageModel] = Field(default_factory=list)
    spotchecks: list[SpotCheckModel] = Field(default_factory=list)
    warnings: list[str] = Field(default_factory=list)
    parameters: dict[str, int | str] = Field(default_factory=dict)
    certificate: CertificateModel | None = None
