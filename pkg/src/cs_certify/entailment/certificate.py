"""Entailment certificates: proof steps, the gamma correspondence, composition."""

from __future__ import annotations

from collections.abc import Iterable, Iterator, Mapping
from enum import Enum
from typing import Annotated, Literal, Union

from pydantic import BaseModel, Field, field_validator

from cs_certify.diagrams.diagram import Diagram
from cs_certify.diagrams.labels import Label, as_label, as_prefix, fmt
from cs_certify.diagrams.morphisms import DiagramMorphism
from cs_certify.errors import CertificateError

# ---------------------------------------------------------------------------
# Gamma
# ---------------------------------------------------------------------------


class Gamma(Mapping):
    """Partial map from leaves of a later diagram to (leaf of an earlier one, bit).

    Bit 0 means "a translate of", bit 1 "a conjugated translate of".
    """

    __slots__ = ("_map",)

    def __init__(self, entries: Mapping | Iterable = ()) -> None:
        items = entries.items() if isinstance(entries, Mapping) else entries
        self._map: dict[Label, tuple[Label, int]] = {}
        for key, value in items:
            target, bit = value
            if bit not in (0, 1):
                raise CertificateError(f"gamma bit must be 0 or 1, got {bit}")
            self._map[as_label(key)] = (as_label(target), int(bit))

    @classmethod
    def identity(cls, leaves: Iterable) -> Gamma:
        return cls({x: (x, 0) for x in leaves})

    def __getitem__(self, key) -> tuple[Label, int]:
        return self._map[as_label(key)]

    def __iter__(self) -> Iterator[Label]:
        return iter(self._map)

    def __len__(self) -> int:
        return len(self._map)

    def then(self, later: Gamma) -> Gamma:
        """Compose with the gamma of a later step (bits add mod 2)."""
        out = {}
        for j, (mid, bit2) in later.items():
            if mid in self._map:
                i, bit1 = self._map[mid]
                out[j] = (i, (bit1 + bit2) % 2)
        return Gamma(out)

    def restrict(self, keep: Iterable) -> Gamma:
        keep = {as_label(k) for k in keep}
        return Gamma({j: v for j, v in self._map.items() if j in keep})

    def extends(self, other: Gamma) -> bool:
        """Whether ``other`` is a sub-function of this gamma."""
        return all(self._map.get(j) == v for j, v in other.items())

    def preimage(self, targets: Iterable) -> list[Label]:
        targets = {as_label(t) for t in targets}
        return [j for j, (i, _) in self._map.items() if i in targets]

    def to_dict(self) -> dict[str, tuple[str, int]]:
        return {fmt(j): (fmt(i), bit) for j, (i, bit) in self._map.items()}

    def __eq__(self, other) -> bool:
        if isinstance(other, Gamma):
            return self._map == other._map
        return NotImplemented

    def __hash__(self) -> int:
        return hash(frozenset(self._map.items()))

    def __repr__(self) -> str:
        body = ", ".join(f"{fmt(j)}->({fmt(i)},{b})" for j, (i, b) in self._map.items())
        return f"Gamma({body})"


# ---------------------------------------------------------------------------
# Steps
# ---------------------------------------------------------------------------


class StepKind(str, Enum):
    MORPH = "morph"
    CS = "cs"
    RELABEL = "relabel"
    WEAKEN = "weaken"


class MorphStep(BaseModel):
    """A verified morphism from the next diagram into the previous one."""

    type: Literal["morph"] = "morph"
    morphism: DiagramMorphism

    model_config = {"arbitrary_types_allowed": True, "frozen": True}


class CsStep(BaseModel):
    """One Cauchy-Schwarz step: self-join along a set of leaves."""

    type: Literal["cs"] = "cs"
    leaves: list[Label] = Field(default_factory=list)

    model_config = {"frozen": True}

    @field_validator("leaves", mode="before")
    @classmethod
    def _coerce(cls, v):
        return [as_label(x) for x in v]


class RelabelStep(BaseModel):
    """Longest-prefix renaming, checked as a strong isomorphism."""

    type: Literal["relabel"] = "relabel"
    rules: list[tuple[Label, Label]]

    model_config = {"frozen": True}

    @field_validator("rules", mode="before")
    @classmethod
    def _coerce(cls, v):
        items = v.items() if isinstance(v, Mapping) else v
        return [(as_prefix(old), as_prefix(new)) for old, new in items]


class WeakenStep(BaseModel):
    """Discard part of gamma and/or add slack to the CS count."""

    type: Literal["weaken"] = "weaken"
    keep: list[Label] | None = None
    k: int = Field(default=0, ge=0)

    model_config = {"frozen": True}

    @field_validator("keep", mode="before")
    @classmethod
    def _coerce(cls, v):
        return None if v is None else [as_label(x) for x in v]


ProofStep = Annotated[
    Union[MorphStep, CsStep, RelabelStep, WeakenStep], Field(discriminator="type")
]


# ---------------------------------------------------------------------------
# Certificate
# ---------------------------------------------------------------------------


class EntailmentCertificate(BaseModel):
    """A claimed proof ``initial |=^k_gamma final``."""

    initial: Diagram
    steps: list[ProofStep] = Field(default_factory=list)
    claimed_k: int = Field(ge=0)
    claimed_gamma: Gamma = Field(default_factory=Gamma)
    final: Diagram | None = None
    hashes: list[str] = Field(
        default_factory=list, description="Fingerprints of each intermediate diagram"
    )

    model_config = {"arbitrary_types_allowed": True, "frozen": True}

    @field_validator("claimed_gamma", mode="before")
    @classmethod
    def _coerce_gamma(cls, v):
        return v if isinstance(v, Gamma) else Gamma(v)

    @property
    def cs_count(self) -> int:
        """Number of CS steps (the entailment exponent before any slack)."""
        return sum(1 for s in self.steps if isinstance(s, CsStep))

    def step_kinds(self) -> list[StepKind]:
        return [StepKind(s.type) for s in self.steps]


def compose(first: EntailmentCertificate, second: EntailmentCertificate) -> EntailmentCertificate:
    """``A |= B`` and ``B |= C`` give ``A |= C`` with k added and gamma composed."""
    middle = first.final
    if middle is None or middle != second.initial:
        raise CertificateError("cannot compose: first.final differs from second.initial")
    return EntailmentCertificate(
        initial=first.initial,
        steps=[*first.steps, *second.steps],
        claimed_k=first.claimed_k + second.claimed_k,
        claimed_gamma=first.claimed_gamma.then(second.claimed_gamma),
        final=second.final,
        hashes=[*first.hashes, *second.hashes] if first.hashes and second.hashes else [],
    )


def concatenate(certificates: Iterable[EntailmentCertificate]) -> EntailmentCertificate:
    certs = list(certificates)
    if not certs:
        raise CertificateError("nothing to concatenate")
    out = certs[0]
    for cert in certs[1:]:
        out = compose(out, cert)
    return out
