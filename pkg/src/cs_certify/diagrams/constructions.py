"""Building diagrams: the datum/diagram functors, joinings, restrictions."""

from __future__ import annotations

import logging
from collections.abc import Iterable

from cs_certify.config import resolve_cap
from cs_certify.data.datum import LinearDatum
from cs_certify.diagrams.diagram import Diagram
from cs_certify.diagrams.labels import (
    DIAMOND,
    Label,
    PrefixRules,
    fmt,
    prefixed,
    sort_key,
)
from cs_certify.errors import CapExceededError, DiagramError
from cs_certify.field.matrix import FpMatrix, kernel_basis

logger = logging.getLogger(__name__)

HUB: Label = (DIAMOND,)


# ---------------------------------------------------------------------------
# Functors
# ---------------------------------------------------------------------------


def diagram_of(datum: LinearDatum) -> Diagram:
    """One non-leaf hub with a leaf per index."""
    vertices = [(HUB, (datum.v_dim, False))]
    vertices += [(i, (m.rows, True)) for i, m in datum.items()]
    edges = [((HUB, i), m) for i, m in datum.items()]
    return Diagram(datum.p, vertices, edges)


def limit_space(
    diagram: Diagram, *, cap: int | None = None
) -> tuple[int, dict[Label, FpMatrix]]:
    """Dimension of the space of compatible tuples and the projection to each vertex.

    Tuples are parametrised by their values at the source vertices; every
    vertex with several parents contributes the constraint that the values
    pushed down from its parents agree.
    """
    p = diagram.p
    limit = resolve_cap(cap, "datum_cap")
    sources = diagram.sources()
    width = sum(diagram.dim(s) for s in sources)
    total_rows = sum(diagram.dim(x) * max(1, len(diagram.parents(x))) for x in diagram.vertices)
    if total_rows * width > limit:
        raise CapExceededError("limit-space system entries", total_rows * width, limit)

    ident = FpMatrix.identity(p, width)
    offsets: dict[Label, int] = {}
    at = 0
    for s in sources:
        offsets[s] = at
        at += diagram.dim(s)

    value: dict[Label, FpMatrix] = {}
    constraints: list[FpMatrix] = []
    for y in diagram.topological_order():
        if y in offsets:
            value[y] = ident.select_rows(range(offsets[y], offsets[y] + diagram.dim(y)))
            continue
        parents = diagram.parents(y)
        value[y] = diagram.edge_map(parents[0], y) @ value[parents[0]]
        for x in parents[1:]:
            constraints.append(diagram.edge_map(x, y) @ value[x] - value[y])
    if constraints:
        basis = kernel_basis(FpMatrix.vstack(constraints))
    else:
        basis = ident
    projections = {x: value[x] @ basis for x in diagram.vertices}
    logger.debug(
        "Limit space: %d source coordinates, %d constraints, dim %d",
        width,
        len(constraints),
        basis.cols,
    )
    return basis.cols, projections


def datum_of(
    diagram: Diagram, *, cap: int | None = None
) -> tuple[LinearDatum, dict[Label, FpMatrix]]:
    """The limit-space datum of a diagram, indexed by its leaves, and all projections."""
    dim, projections = limit_space(diagram, cap=cap)
    datum = LinearDatum(diagram.p, dim, [(x, projections[x]) for x in diagram.leaves])
    return datum, projections


# ---------------------------------------------------------------------------
# Joinings
# ---------------------------------------------------------------------------


def join_diagrams(
    left: Diagram,
    right: Diagram,
    matching: Iterable,
    *,
    left_prefix: str | None = "L",
    right_prefix: str | None = "R",
) -> Diagram:
    """Glue two diagrams along matched leaves, which become non-leaves.

    A merged vertex is named after its left-hand side; the right-hand name
    is kept as an alias.  ``left_prefix=None`` keeps the left labels as
    they are.
    """
    if left.p != right.p:
        raise DiagramError("cannot join diagrams over different fields")
    if left_prefix is None and right_prefix is None:
        raise DiagramError("at least one side of a joining needs a prefix")
    pairs = [(left.resolve(a), right.resolve(b)) for a, b in matching]
    merged: dict[Label, Label] = {}
    matched_left: set[Label] = set()
    for a, b in pairs:
        if not left.is_leaf(a) or not right.is_leaf(b):
            raise DiagramError(
                f"can only match leaves, got {fmt(a)} and {fmt(b)}", kind="join", where=(a, b)
            )
        if left.dim(a) != right.dim(b):
            raise DiagramError(
                f"dimension mismatch matching {fmt(a)} with {fmt(b)}", kind="join", where=(a, b)
            )
        if b in merged or a in matched_left:
            raise DiagramError("matching is not a partial bijection", kind="join", where=(a, b))
        merged[b] = a
        matched_left.add(a)

    def name0(x: Label) -> Label:
        return prefixed(left_prefix, x)

    def name1(y: Label) -> Label:
        return name0(merged[y]) if y in merged else prefixed(right_prefix, y)

    vertices = [
        (name0(x), (left.dim(x), left.is_leaf(x) and x not in matched_left))
        for x in left.vertices
    ]
    vertices += [
        (name1(y), (right.dim(y), right.is_leaf(y))) for y in right.vertices if y not in merged
    ]
    edges = [((name0(x), name0(y)), m) for (x, y), m in left.edge_items()]
    edges += [((name1(x), name1(y)), m) for (x, y), m in right.edge_items()]
    aliases = {name0(a): name0(c) for a, c in left.aliases.items()}
    for a, c in right.aliases.items():
        aliases[prefixed(right_prefix, a)] = name1(c)
    for b, a in merged.items():
        aliases[prefixed(right_prefix, b)] = name0(a)
    return Diagram(left.p, vertices, edges, aliases)


def self_join(diagram: Diagram, shared: Iterable) -> Diagram:
    """``D +_S D`` with L/R prefixes."""
    shared = [diagram.resolve(s) for s in shared]
    return join_diagrams(diagram, diagram, [(s, s) for s in shared])


def disjoint_union(left: Diagram, right: Diagram, **prefixes) -> Diagram:
    return join_diagrams(left, right, [], **prefixes)


# ---------------------------------------------------------------------------
# Restriction, leaf toggling, relabelling
# ---------------------------------------------------------------------------


def restrict_diagram(diagram: Diagram, keep: Iterable) -> Diagram:
    """The induced sub-diagram; every kept leaf must keep its parent."""
    kept = {diagram.resolve(y) for y in keep}
    for x in kept:
        if diagram.is_leaf(x):
            parent = diagram.parent_of(x)
            if parent not in kept:
                raise DiagramError(
                    f"restriction keeps leaf {fmt(x)} but drops its parent {fmt(parent)}",
                    kind="restriction",
                    where=x,
                )
    vertices = [(x, (diagram.dim(x), diagram.is_leaf(x))) for x in diagram.vertices if x in kept]
    edges = [((x, y), m) for (x, y), m in diagram.edge_items() if x in kept and y in kept]
    aliases = {a: c for a, c in diagram.aliases.items() if c in kept}
    return Diagram(diagram.p, vertices, edges, aliases)


def nonleaves_and(diagram: Diagram, extra: Iterable = ()) -> list[Label]:
    """All non-leaves together with the given leaves."""
    return diagram.nonleaves + [diagram.resolve(x) for x in extra]


def toggle_leaves(diagram: Diagram, flip: Iterable) -> Diagram:
    """Flip the leaf flag of each vertex in ``flip``."""
    flipped = {diagram.resolve(x) for x in flip}
    vertices = [
        (x, (diagram.dim(x), diagram.is_leaf(x) != (x in flipped))) for x in diagram.vertices
    ]
    return Diagram(diagram.p, vertices, diagram.edge_items(), diagram.aliases)


def relabel_diagram(
    diagram: Diagram, rules: PrefixRules
) -> tuple[Diagram, dict[Label, Label]]:
    """Rewrite every vertex name by longest-prefix rules.

    Names matching no rule are dropped; each vertex must keep at least one
    name.  The rewritten canonical name stays canonical when it survives,
    otherwise the least surviving alias is promoted.  Returns the new
    diagram and the map from old to new canonical labels.
    """
    rename: dict[Label, Label] = {}
    aliases: dict[Label, Label] = {}
    for x in diagram.vertices:
        survivors = []
        for name in diagram.names(x):
            new = rules.apply(name)
            if new is not None and new not in survivors:
                survivors.append(new)
        if not survivors:
            raise DiagramError(f"relabelling drops every name of {fmt(x)}", kind="relabel", where=x)
        canonical = survivors[0] if rules.apply(x) is not None else min(survivors, key=sort_key)
        rename[x] = canonical
        for other in survivors:
            if other != canonical:
                aliases[other] = canonical
    if len(set(rename.values())) != len(rename):
        raise DiagramError("relabelling sends two vertices to the same name", kind="relabel")
    vertices = [(rename[x], (diagram.dim(x), diagram.is_leaf(x))) for x in diagram.vertices]
    edges = [((rename[x], rename[y]), m) for (x, y), m in diagram.edge_items()]
    return Diagram(diagram.p, vertices, edges, aliases), rename


def prefix_diagram(diagram: Diagram, prefix: str) -> Diagram:
    return relabel_diagram(diagram, PrefixRules({(): (prefix,)}))[0]
