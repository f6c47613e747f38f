"""Solving for morphisms out of a one-hub diagram.

A morphism ``diagram(phi) -> D`` that sends every non-leaf of D to the hub
is determined by a single linear map ``C: V -> limit(D)``: the value at a
non-leaf x is ``proj_x C``.  Fixing the shape on the leaves of D turns the
square conditions into the linear system ``proj_q C = phi_alpha(q)`` (or 0
for leaves sent to ZEROI), which is solved per weakly connected component.
"""

from __future__ import annotations

import logging
from collections.abc import Mapping

import networkx as nx

from cs_certify.data.datum import LinearDatum
from cs_certify.diagrams.constructions import HUB, diagram_of, limit_space, restrict_diagram
from cs_certify.diagrams.diagram import Diagram
from cs_certify.diagrams.labels import ZEROI, Label, as_label, fmt
from cs_certify.diagrams.morphisms import DiagramMorphism
from cs_certify.errors import MorphismError
from cs_certify.field.matrix import FpMatrix, solve_matrix

logger = logging.getLogger(__name__)


def _leaf_value(datum: LinearDatum, target: Diagram, q: Label, a: Label) -> FpMatrix:
    if a == ZEROI:
        return FpMatrix.zeros(datum.p, target.dim(q), datum.v_dim)
    if datum.w_dim(a) != target.dim(q):
        raise MorphismError(
            f"leaf {fmt(q)} has dimension {target.dim(q)} but W_{fmt(a)} has {datum.w_dim(a)}",
            index=q,
        )
    return datum.phi(a)


def solve_hub_morphism(
    datum: LinearDatum,
    target: Diagram,
    leaf_alpha: Mapping,
    *,
    cap: int | None = None,
) -> DiagramMorphism | None:
    """The morphism ``diagram(datum) -> target`` with the given leaf shape, if one exists.

    ``leaf_alpha`` sends every leaf of ``target`` to an index of ``datum``
    (with the identity map) or to ZEROI; every non-leaf goes to the hub.
    Returns None when the leaf values admit no compatible interpolation.
    """
    p = datum.p
    shape = {target.resolve(q): as_label(a) for q, a in leaf_alpha.items()}
    missing = [q for q in target.leaves if q not in shape]
    if missing:
        raise MorphismError(f"no image given for leaf {fmt(missing[0])}", index=missing[0])

    alpha: dict[Label, Label] = {}
    theta: dict[Label, FpMatrix] = {}
    for q in target.leaves:
        a = shape[q]
        alpha[q] = a
        if a == ZEROI:
            theta[q] = FpMatrix.zeros(p, target.dim(q), 0)
        else:
            _leaf_value(datum, target, q, a)
            theta[q] = FpMatrix.identity(p, target.dim(q))

    components = nx.weakly_connected_components(target.graph)
    for component in components:
        piece = restrict_diagram(target, component)
        inner = piece.nonleaves
        if not inner:
            continue
        _, proj = limit_space(piece, cap=cap)
        leaves = piece.leaves
        if leaves:
            stacked = FpMatrix.vstack([proj[q] for q in leaves])
            rhs = FpMatrix.vstack([_leaf_value(datum, target, q, shape[q]) for q in leaves])
            coords = solve_matrix(stacked, rhs)
            if coords is None:
                logger.debug(
                    "No hub morphism: leaf values on a %d-vertex component are incompatible",
                    piece.vertex_count,
                )
                return None
        else:
            width = next(iter(proj.values())).cols
            coords = FpMatrix.zeros(p, width, datum.v_dim)
        for x in inner:
            alpha[x] = HUB
            theta[x] = proj[x] @ coords
    logger.debug("Solved hub morphism into %r", target)
    return DiagramMorphism(source=diagram_of(datum), target=target, alpha=alpha, theta=theta)
