"""Morphisms of diagrams, patching, and the datum/diagram adjunction.

A morphism ``Theta: C -> D`` has a shape ``alpha`` from the vertices of D
to those of C (or ZEROI) and maps ``theta[x]: V^C[alpha(x)] -> V^D[x]``
with ``phi^D_xy . theta_x == theta_y . phi^C_{alpha(x) alpha(y)}`` on
every edge xy of D.  Squares are checked edge by edge; no limit space
is ever formed.
"""

from __future__ import annotations

import logging
from collections import Counter
from collections.abc import Mapping, Sequence

import numpy as np
from pydantic import BaseModel, field_validator

from cs_certify.data.datum import LinearDatum
from cs_certify.data.morphisms import (
    DatumMorphism,
    MorphismFailure,
    MorphismReport,
    _witness,
)
from cs_certify.diagrams.constructions import HUB, datum_of, diagram_of, limit_space
from cs_certify.diagrams.diagram import Diagram
from cs_certify.diagrams.labels import ZEROI, Label, as_label, fmt
from cs_certify.errors import MorphismError
from cs_certify.field.matrix import FpMatrix, rank, solve_matrix

logger = logging.getLogger(__name__)


class DiagramMorphism(BaseModel):
    """A morphism of diagrams ``source -> target``."""

    source: Diagram
    target: Diagram
    alpha: dict[Label, Label]
    theta: dict[Label, FpMatrix]

    model_config = {"arbitrary_types_allowed": True, "frozen": True}

    @field_validator("alpha", mode="before")
    @classmethod
    def _coerce_alpha(cls, v):
        return {as_label(k): as_label(x) for k, x in dict(v).items()}

    @field_validator("theta", mode="before")
    @classmethod
    def _coerce_theta(cls, v):
        return {as_label(k): m for k, m in dict(v).items()}

    @classmethod
    def build(
        cls,
        source: Diagram,
        target: Diagram,
        alpha: Mapping,
        theta: Mapping | None = None,
    ) -> DiagramMorphism:
        """Resolve aliases and fill default maps.

        Missing maps default to the identity on leaves sent to a leaf of
        equal dimension, and to the empty map out of ZEROI.
        """
        resolved_alpha = {
            target.resolve(k): source.resolve(v) for k, v in alpha.items()
        }
        given = {target.resolve(k): m for k, m in (theta or {}).items()}
        full: dict[Label, FpMatrix] = {}
        p = target.p
        for x in target.vertices:
            if x not in resolved_alpha:
                raise MorphismError(f"alpha is missing target vertex {fmt(x)}", index=x)
            a = resolved_alpha[x]
            if x in given:
                full[x] = given[x]
            elif a == ZEROI:
                full[x] = FpMatrix.zeros(p, target.dim(x), 0)
            elif target.is_leaf(x) and source.dim(a) == target.dim(x):
                full[x] = FpMatrix.identity(p, target.dim(x))
            else:
                raise MorphismError(f"theta for {fmt(x)} must be given", index=x)
        return cls(source=source, target=target, alpha=resolved_alpha, theta=full)

    def image_of(self, x: Label) -> Label:
        return self.alpha[self.target.resolve(x)]


# ---------------------------------------------------------------------------
# Verification
# ---------------------------------------------------------------------------


def _check_shapes(morph: DiagramMorphism) -> None:
    src, tgt = morph.source, morph.target
    if src.p != tgt.p:
        raise MorphismError(f"source over F_{src.p}, target over F_{tgt.p}")
    if set(morph.alpha) != set(tgt.vertices):
        missing = set(tgt.vertices) - set(morph.alpha)
        raise MorphismError(
            f"alpha must cover exactly the target vertices (missing {len(missing)})"
        )
    known = set(src.vertices)
    for x in tgt.vertices:
        a = morph.alpha[x]
        if a != ZEROI and a not in known:
            raise MorphismError(f"alpha({fmt(x)}) = {fmt(a)} is not a source vertex", index=x)
        m = morph.theta.get(x)
        want = (tgt.dim(x), src.dim(a))
        if m is None or m.shape != want:
            got = None if m is None else m.shape
            raise MorphismError(f"theta at {fmt(x)} has shape {got}, expected {want}", index=x)


def verify_diagram_morphism(morph: DiagramMorphism) -> MorphismReport:
    """Check the shape rules and every edge square; list respected leaves."""
    _check_shapes(morph)
    src, tgt = morph.source, morph.target
    alpha, theta = morph.alpha, morph.theta
    failures: list[MorphismFailure] = []
    for x in tgt.vertices:
        a = alpha[x]
        if tgt.is_leaf(x) and a != ZEROI and not src.is_leaf(a):
            failures.append(
                MorphismFailure(where=fmt(x), reason=f"leaf sent to non-leaf {fmt(a)}")
            )
        if not tgt.is_leaf(x) and (a == ZEROI or src.is_leaf(a)):
            failures.append(
                MorphismFailure(where=fmt(x), reason=f"non-leaf sent to {fmt(a)}")
            )
    identities = {x for x, m in theta.items() if m.is_identity()}
    for (x, y), phi in tgt.edge_items():
        a, b = alpha[x], alpha[y]
        if not src.has_edge(a, b):
            failures.append(
                MorphismFailure(
                    where=f"{fmt(x)}->{fmt(y)}",
                    reason=f"{fmt(a)}->{fmt(b)} is not a source edge",
                )
            )
            continue
        if x in identities and y in identities:
            lhs, rhs = phi, src.edge_map(a, b)
        else:
            lhs = phi @ theta[x]
            rhs = theta[y] @ src.edge_map(a, b)
        if lhs != rhs:
            failures.append(
                MorphismFailure(
                    where=f"{fmt(x)}->{fmt(y)}",
                    witness=_witness(lhs - rhs),
                    reason="phi_target . theta_x != theta_y . phi_source",
                )
            )
    leaf_images = Counter(alpha[x] for x in tgt.leaves)
    respected = [
        x
        for x in tgt.leaves
        if alpha[x] != ZEROI and leaf_images[alpha[x]] == 1 and x in identities
    ]
    report = MorphismReport(ok=not failures, respected=respected, failures=failures)
    logger.debug(
        "Diagram morphism checked over %d edges: ok=%s", tgt.edge_count, report.ok
    )
    return report


def is_strong_isomorphism(morph: DiagramMorphism) -> bool:
    """Bijective on vertices and edges, invertible maps, every leaf respected."""
    report = verify_diagram_morphism(morph)
    src, tgt = morph.source, morph.target
    if not report.ok or len(report.respected) != len(tgt.leaves):
        return False
    if sorted(morph.alpha.values()) != sorted(src.vertices):
        return False
    if src.edge_count != tgt.edge_count:
        return False
    return all(
        m.is_identity() or (m.rows == m.cols and rank(m) == m.rows)
        for m in morph.theta.values()
    )


# ---------------------------------------------------------------------------
# Elementary morphisms
# ---------------------------------------------------------------------------


def identity_diagram_morphism(diagram: Diagram) -> DiagramMorphism:
    return DiagramMorphism(
        source=diagram,
        target=diagram,
        alpha={x: x for x in diagram.vertices},
        theta={x: FpMatrix.identity(diagram.p, diagram.dim(x)) for x in diagram.vertices},
    )


def rename_morphism(
    old: Diagram, new: Diagram, rename: Mapping[Label, Label]
) -> DiagramMorphism:
    """The identity-map morphism ``new -> old`` for a vertex renaming old -> new."""
    return DiagramMorphism(
        source=new,
        target=old,
        alpha={x: rename[x] for x in old.vertices},
        theta={x: FpMatrix.identity(old.p, old.dim(x)) for x in old.vertices},
    )


def compose_diagram_morphisms(
    second: DiagramMorphism, first: DiagramMorphism
) -> DiagramMorphism:
    """``second . first`` for ``first: A -> B`` and ``second: B -> C``."""
    if first.target != second.source:
        raise MorphismError("cannot compose: first.target differs from second.source")
    alpha: dict[Label, Label] = {}
    theta: dict[Label, FpMatrix] = {}
    for x, mid in second.alpha.items():
        if mid == ZEROI:
            alpha[x] = ZEROI
            theta[x] = FpMatrix.zeros(second.target.p, second.target.dim(x), 0)
        else:
            alpha[x] = first.alpha[mid]
            theta[x] = second.theta[x] @ first.theta[mid]
    return DiagramMorphism(
        source=first.source, target=second.target, alpha=alpha, theta=theta
    )


def restriction_morphism(diagram: Diagram, sub: Diagram) -> DiagramMorphism:
    """The natural morphism ``diagram -> sub`` for an induced sub-diagram."""
    return DiagramMorphism(
        source=diagram,
        target=sub,
        alpha={x: x for x in sub.vertices},
        theta={x: FpMatrix.identity(sub.p, sub.dim(x)) for x in sub.vertices},
    )


def retarget(morph: DiagramMorphism, source: Diagram, target: Diagram) -> DiagramMorphism:
    """The same shape and maps read between other diagrams on the same vertices.

    Used for leaf toggling, where C(Y -> non-leaf) and D(alpha^-1(Y) -> non-leaf)
    share vertices and edges with C and D.
    """
    return DiagramMorphism(
        source=source,
        target=target,
        alpha={target.resolve(x): a for x, a in morph.alpha.items()},
        theta={target.resolve(x): m for x, m in morph.theta.items()},
    )


# ---------------------------------------------------------------------------
# Patching
# ---------------------------------------------------------------------------


def patch_morphisms(target: Diagram, parts: Sequence[DiagramMorphism]) -> DiagramMorphism:
    """Glue morphisms ``C -> target[Y_k]`` along a cover of vertices and edges."""
    if not parts:
        raise MorphismError("nothing to patch")
    source = parts[0].source
    alpha: dict[Label, Label] = {}
    theta: dict[Label, FpMatrix] = {}
    owner: dict[Label, int] = {}
    for k, part in enumerate(parts):
        if part.source != source and part.source is not source:
            raise MorphismError(f"part {k} has a different source")
        for x in part.target.vertices:
            y = target.resolve(x)
            if y in alpha:
                if alpha[y] != part.alpha[x] or theta[y] != part.theta[x]:
                    raise MorphismError(
                        f"parts {owner[y]} and {k} disagree at {fmt(y)}", index=y
                    )
                continue
            alpha[y] = part.alpha[x]
            theta[y] = part.theta[x]
            owner[y] = k
    missing = [x for x in target.vertices if x not in alpha]
    if missing:
        raise MorphismError(f"vertex {fmt(missing[0])} is not covered", index=missing[0])
    covered = {
        (target.resolve(x), target.resolve(y))
        for part in parts
        for x, y in part.target.edges
    }
    for edge in target.edges:
        if edge not in covered:
            raise MorphismError(
                f"edge {fmt(edge[0])}->{fmt(edge[1])} is not covered", edge=edge
            )
    return DiagramMorphism(source=source, target=target, alpha=alpha, theta=theta)


# ---------------------------------------------------------------------------
# Functoriality and adjunction
# ---------------------------------------------------------------------------


def _coordinates(projections: Mapping[Label, FpMatrix], order: list[Label], values: list[FpMatrix]):
    """Limit-space coordinates c with projections[x] @ c == values[x] for all x."""
    stacked = FpMatrix.vstack([projections[x] for x in order])
    rhs = FpMatrix.vstack(values)
    coords = solve_matrix(stacked, rhs)
    if coords is None:
        raise MorphismError("tuple of maps is not compatible")
    return coords


def datum_morphism_of(morph: DiagramMorphism) -> DatumMorphism:
    """datum(Theta): datum(C) -> datum(D) with sigma_i = theta_i on leaves."""
    src, tgt = morph.source, morph.target
    src_datum, src_proj = datum_of(src)
    tgt_datum, tgt_proj = datum_of(tgt)
    order = tgt.vertices
    values = []
    for x in order:
        a = morph.alpha[x]
        if a == ZEROI:
            values.append(FpMatrix.zeros(tgt.p, tgt.dim(x), src_datum.v_dim))
        else:
            values.append(morph.theta[x] @ src_proj[a])
    if order:
        theta = _coordinates(tgt_proj, order, values)
    else:
        theta = FpMatrix.zeros(tgt.p, tgt_datum.v_dim, src_datum.v_dim)
    return DatumMorphism(
        source=src_datum,
        target=tgt_datum,
        alpha={x: morph.alpha[x] for x in tgt.leaves},
        theta=theta,
        sigma={x: morph.theta[x] for x in tgt.leaves},
    )


def diagram_morphism_of(morph: DatumMorphism) -> DiagramMorphism:
    """diagram(Theta): diagram(Phi) -> diagram(Psi)."""
    alpha = {HUB: HUB, **{i: a for i, a in morph.alpha.items()}}
    theta = {HUB: morph.theta, **{i: s for i, s in morph.sigma.items()}}
    return DiagramMorphism(
        source=diagram_of(morph.source),
        target=diagram_of(morph.target),
        alpha=alpha,
        theta=theta,
    )


def datum_to_diagram_morphism(morph: DatumMorphism, diagram: Diagram) -> DiagramMorphism:
    """A datum morphism ``Phi -> datum(D)`` as a diagram morphism ``diagram(Phi) -> D``.

    ``morph.target`` must be ``datum_of(diagram)``.
    """
    tgt_datum, proj = datum_of(diagram)
    if tgt_datum != morph.target:
        raise MorphismError("morphism target is not the datum of the given diagram")
    alpha: dict[Label, Label] = {}
    theta: dict[Label, FpMatrix] = {}
    for x in diagram.vertices:
        if diagram.is_leaf(x):
            alpha[x] = morph.alpha[x]
            theta[x] = morph.sigma[x]
        else:
            alpha[x] = HUB
            theta[x] = proj[x] @ morph.theta
    return DiagramMorphism(
        source=diagram_of(morph.source), target=diagram, alpha=alpha, theta=theta
    )


def diagram_to_datum_morphism(morph: DiagramMorphism, datum: LinearDatum) -> DatumMorphism:
    """A diagram morphism ``diagram(Phi) -> D`` as a datum morphism ``Phi -> datum(D)``."""
    if morph.source != diagram_of(datum):
        raise MorphismError("morphism source is not the diagram of the given datum")
    tgt = morph.target
    tgt_datum, proj = datum_of(tgt)
    order = tgt.nonleaves
    values = [morph.theta[x] for x in order]
    if order:
        theta = _coordinates(proj, order, values)
    else:
        theta = FpMatrix.zeros(tgt.p, tgt_datum.v_dim, datum.v_dim)
    return DatumMorphism(
        source=datum,
        target=tgt_datum,
        alpha={x: morph.alpha[x] for x in tgt.leaves},
        theta=theta,
        sigma={x: morph.theta[x] for x in tgt.leaves},
    )


def adjunction(
    datum: LinearDatum, diagram: Diagram, morph: DatumMorphism | DiagramMorphism
):
    """Move a morphism across the datum/diagram adjunction in either direction."""
    if isinstance(morph, DatumMorphism):
        return datum_to_diagram_morphism(morph, diagram)
    return diagram_to_datum_morphism(morph, datum)


# ---------------------------------------------------------------------------
# Compatible tuples
# ---------------------------------------------------------------------------


def is_compatible(diagram: Diagram, values: Mapping) -> bool:
    """Whether ``values`` (a vector per vertex) is a compatible tuple."""
    vals = {diagram.resolve(x): np.mod(np.asarray(v, dtype=np.int64), diagram.p)
            for x, v in values.items()}
    if set(vals) != set(diagram.vertices):
        return False
    for (x, y), m in diagram.edge_items():
        if not np.array_equal(m @ vals[x], vals[y]):
            return False
    return True


def compatible_basis(diagram: Diagram) -> list[dict[Label, np.ndarray]]:
    """A basis of the compatible tuples of a diagram."""
    dim, proj = limit_space(diagram)
    return [{x: proj[x].column(k) for x in diagram.vertices} for k in range(dim)]


def transport_compatible_tuple(morph: DiagramMorphism, values: Mapping) -> dict[Label, np.ndarray]:
    """``(theta_x(v_alpha(x)))_x``: compatible in the target when the morphism verifies."""
    src = morph.source
    vals = {src.resolve(x): np.asarray(v, dtype=np.int64) for x, v in values.items()}
    out: dict[Label, np.ndarray] = {}
    for x, a in morph.alpha.items():
        if a == ZEROI:
            out[x] = np.zeros(morph.target.dim(x), dtype=np.int64)
        else:
            out[x] = morph.theta[x] @ vals[a]
    return out
