"""Deciding whether a diagram is surjective at a vertex.

Small diagrams are decided directly from the rank of the limit-space
projection.  Larger ones are split at cut vertices (a non-leaf with two
parents and no children joins two diagrams along one leaf) or into weakly
connected components, and each piece is decided in turn.  A morphism
with a surjective map at the vertex also carries surjectivity forward.
"""

from __future__ import annotations

import logging

import networkx as nx
from pydantic import BaseModel, Field

from cs_certify.diagrams.constructions import limit_space, restrict_diagram, toggle_leaves
from cs_certify.diagrams.diagram import Diagram
from cs_certify.diagrams.labels import ZEROI, Label, fmt, sort_key
from cs_certify.diagrams.morphisms import DiagramMorphism
from cs_certify.errors import CapExceededError, DiagramError, SurjectivityUndecided
from cs_certify.field.matrix import FpMatrix, rank, right_inverse

logger = logging.getLogger(__name__)


class SurjectivityCertificate(BaseModel):
    """Why a diagram is (or is not) surjective at a vertex."""

    vertex: str
    surjective: bool
    method: str = Field(description="direct, component, cut-vertex or morphism")
    detail: str = ""
    parts: list[SurjectivityCertificate] = Field(default_factory=list)

    def __bool__(self) -> bool:
        return self.surjective


def _direct(diagram: Diagram, x: Label, cap: int | None) -> SurjectivityCertificate:
    _, proj = limit_space(diagram, cap=cap)
    r = rank(proj[x])
    d = diagram.dim(x)
    return SurjectivityCertificate(
        vertex=fmt(x),
        surjective=r == d,
        method="direct",
        detail=f"projection rank {r} of {d}",
    )


def _split_at(diagram: Diagram, v: Label) -> tuple[set, set] | None:
    """The two sides of a cut vertex ``v``, each including ``v``, if it separates."""
    g = diagram.graph
    parents = list(g.predecessors(v))
    if len(parents) != 2 or g.out_degree(v) != 0:
        return None
    rest = g.subgraph([y for y in g.nodes if y != v])
    side = nx.node_connected_component(rest.to_undirected(as_view=True), parents[0])
    if parents[1] in side:
        return None
    other = set(g.nodes) - side - {v}
    return side | {v}, other | {v}


def _side(diagram: Diagram, keep: set, v: Label) -> Diagram:
    return toggle_leaves(restrict_diagram(diagram, keep), [v])


def surjective_at(
    diagram: Diagram, x, *, cap: int | None = None
) -> SurjectivityCertificate:
    """Decide surjectivity at ``x``, raising SurjectivityUndecided if neither route works.

    A negative answer is only ever produced by a direct rank computation.
    """
    x = diagram.resolve(x)
    if x == ZEROI:
        return SurjectivityCertificate(vertex=fmt(x), surjective=True, method="direct")
    try:
        return _direct(diagram, x, cap)
    except CapExceededError as exc:
        logger.debug("Direct surjectivity check at %s skipped: %s", fmt(x), exc)

    g = diagram.graph
    component = nx.node_connected_component(g.to_undirected(as_view=True), x)
    if len(component) < diagram.vertex_count:
        sub = restrict_diagram(diagram, component)
        part = surjective_at(sub, x, cap=cap)
        return SurjectivityCertificate(
            vertex=fmt(x),
            surjective=part.surjective,
            method="component",
            detail=f"{len(component)} of {diagram.vertex_count} vertices",
            parts=[part],
        )

    for v in diagram.nonleaves:
        sides = _split_at(diagram, v)
        if sides is None:
            continue
        near, far = sides if x in sides[0] else (sides[1], sides[0])
        first = surjective_at(_side(diagram, near, v), x, cap=cap)
        second = surjective_at(_side(diagram, far, v), v, cap=cap)
        if first.surjective and second.surjective:
            return SurjectivityCertificate(
                vertex=fmt(x),
                surjective=True,
                method="cut-vertex",
                detail=f"joined at {fmt(v)}",
                parts=[first, second],
            )
        raise SurjectivityUndecided(
            f"a side of the joining at {fmt(v)} is not surjective; cannot decide {fmt(x)}"
        )
    raise SurjectivityUndecided(
        f"{diagram!r} is too large for a direct check at {fmt(x)} and has no cut vertex"
    )


def surjective_via_morphism(
    morph: DiagramMorphism,
    x,
    source_certificate: SurjectivityCertificate | None = None,
    *,
    cap: int | None = None,
) -> SurjectivityCertificate:
    """Surjectivity of the target at ``x`` from a morphism ``C -> D``.

    Needs ``theta_x`` onto and C surjective at ``alpha(x)``; the latter is
    decided here unless a certificate is supplied.
    """
    x = morph.target.resolve(x)
    a = morph.alpha[x]
    theta = morph.theta[x]
    if a == ZEROI or rank(theta) != theta.rows:
        raise SurjectivityUndecided(f"theta at {fmt(x)} is not onto")
    base = source_certificate or surjective_at(morph.source, a, cap=cap)
    if not base.surjective:
        raise SurjectivityUndecided(f"source is not surjective at {fmt(a)}")
    return SurjectivityCertificate(
        vertex=fmt(x),
        surjective=True,
        method="morphism",
        detail=f"onto map from {fmt(a)}",
        parts=[base],
    )


# ---------------------------------------------------------------------------
# Sections
# ---------------------------------------------------------------------------


def _cut_vertices(diagram: Diagram) -> list[Label]:
    """Joined leaves (two parents, no children) that separate the diagram."""
    g = diagram.graph
    points = nx.articulation_points(g.to_undirected(as_view=True))
    found = [v for v in points if g.in_degree(v) == 2 and g.out_degree(v) == 0]
    return sorted(found, key=sort_key)


def section_at(diagram: Diagram, x, *, cap: int | None = None) -> dict[Label, FpMatrix]:
    """Maps ``W_x -> V_y`` for every vertex y forming a compatible tuple, identity at x.

    This is a right inverse of the projection at x, written vertex by
    vertex.  Cut vertices are split off first so that only the pieces
    between them ever need a limit space.  Raises DiagramError when the
    diagram is not surjective at x.
    """
    x = diagram.resolve(x)
    p = diagram.p
    g = diagram.graph
    component = nx.node_connected_component(g.to_undirected(as_view=True), x)
    if len(component) < diagram.vertex_count:
        inner = section_at(restrict_diagram(diagram, component), x, cap=cap)
        return {
            y: inner[y] if y in inner else FpMatrix.zeros(p, diagram.dim(y), diagram.dim(x))
            for y in diagram.vertices
        }

    for v in _cut_vertices(diagram):
        sides = _split_at(diagram, v)
        if sides is None:
            continue
        near, far = sides if x in sides[0] else (sides[1], sides[0])
        inner = section_at(_side(diagram, near, v), x, cap=cap)
        outer = section_at(_side(diagram, far, v), v, cap=cap)
        at_v = inner[v]
        out = dict(inner)
        for y in far:
            if y != v:
                out[y] = outer[y] @ at_v
        return out

    _, proj = limit_space(diagram, cap=cap)
    psi = right_inverse(proj[x])
    if psi is None:
        raise DiagramError(
            f"{diagram!r} is not surjective at {fmt(x)}", kind="surjectivity", where=x
        )
    return {y: proj[y] @ psi for y in diagram.vertices}
