"""Cauchy-Schwarz diagrams: DAGs of F_p spaces with designated leaves.

Wraps a NetworkX DiGraph.  Vertices are keyed by their canonical label;
alternative names (from joinings) are kept in an alias table.  Self-loops
and the edges to and from ZEROI are implicit and never stored.
"""

from __future__ import annotations

import hashlib
import json
import logging
from collections.abc import Iterable, Mapping

import networkx as nx
from pydantic import BaseModel, Field

from cs_certify.diagrams.labels import ZEROI, Label, as_label, check_label, fmt, sort_key
from cs_certify.errors import DiagramError
from cs_certify.field.matrix import FpMatrix, check_prime

logger = logging.getLogger(__name__)


class Diagram:
    """A Cauchy-Schwarz diagram over F_p.

    ``vertices`` maps labels to ``(dim, is_leaf)``; ``edges`` maps
    ``(x, y)`` to the matrix of phi_xy with shape ``dim(y) x dim(x)``.
    """

    def __init__(
        self,
        p: int,
        vertices: Mapping | Iterable[tuple],
        edges: Mapping | Iterable[tuple] = (),
        aliases: Mapping | None = None,
    ) -> None:
        self.p = check_prime(p)
        self._graph = nx.DiGraph()
        items = vertices.items() if isinstance(vertices, Mapping) else vertices
        for raw, shape in items:
            dim, leaf = shape
            label = check_label(raw)
            if label in self._graph:
                raise DiagramError(f"duplicate vertex {fmt(label)}", where=label)
            if dim < 0:
                raise DiagramError(f"negative dimension at {fmt(label)}", where=label)
            self._graph.add_node(label, dim=int(dim), leaf=bool(leaf))
        edge_items = edges.items() if isinstance(edges, Mapping) else edges
        for (a, b), m in edge_items:
            x, y = as_label(a), as_label(b)
            for v in (x, y):
                if v not in self._graph:
                    raise DiagramError(f"edge mentions unknown vertex {fmt(v)}", where=(x, y))
            if x == y:
                raise DiagramError(f"explicit self-loop at {fmt(x)}", where=(x, y))
            if self._graph.has_edge(x, y):
                raise DiagramError(f"duplicate edge {fmt(x)} -> {fmt(y)}", where=(x, y))
            self._graph.add_edge(x, y, map=m)
        self._aliases: dict[Label, Label] = {}
        for alias, canonical in (aliases or {}).items():
            alias, canonical = as_label(alias), as_label(canonical)
            if canonical not in self._graph:
                raise DiagramError(f"alias of unknown vertex {fmt(canonical)}", where=canonical)
            if alias in self._graph:
                if alias != canonical:
                    raise DiagramError(f"alias {fmt(alias)} shadows a vertex", where=alias)
                continue
            if self._aliases.get(alias, canonical) != canonical:
                raise DiagramError(f"alias {fmt(alias)} names two vertices", where=alias)
            self._aliases[alias] = canonical
        self._names: dict[Label, list[Label]] | None = None
        self._fingerprint: str | None = None

    # ------------------------------------------------------------------
    # Vertices
    # ------------------------------------------------------------------

    @property
    def graph(self) -> nx.DiGraph:
        """Read-only view of the underlying digraph."""
        return self._graph.copy(as_view=True)

    @property
    def vertices(self) -> list[Label]:
        return list(self._graph.nodes)

    @property
    def leaves(self) -> list[Label]:
        return [x for x, d in self._graph.nodes(data=True) if d["leaf"]]

    @property
    def nonleaves(self) -> list[Label]:
        return [x for x, d in self._graph.nodes(data=True) if not d["leaf"]]

    @property
    def aliases(self) -> dict[Label, Label]:
        return dict(self._aliases)

    @property
    def vertex_count(self) -> int:
        return self._graph.number_of_nodes()

    def __contains__(self, label) -> bool:
        label = as_label(label)
        return label in self._graph or label in self._aliases

    def resolve(self, label) -> Label:
        """Canonical label of a vertex given any of its names."""
        label = as_label(label)
        if label == ZEROI or label in self._graph:
            return label
        try:
            return self._aliases[label]
        except KeyError:
            raise DiagramError(f"unknown vertex {fmt(label)}", where=label) from None

    def names(self, label) -> list[Label]:
        """The canonical label followed by every alias of the vertex."""
        return list(self.name_table()[self.resolve(label)])

    def name_table(self) -> dict[Label, list[Label]]:
        """Every canonical label with its names, as returned by :meth:`names`."""
        if self._names is None:
            extra: dict[Label, list[Label]] = {x: [] for x in self._graph.nodes}
            for alias, canonical in self._aliases.items():
                extra[canonical].append(alias)
            self._names = {x: [x] + sorted(a, key=sort_key) for x, a in extra.items()}
        return self._names

    def dim(self, label) -> int:
        x = self.resolve(label)
        return 0 if x == ZEROI else self._graph.nodes[x]["dim"]

    def is_leaf(self, label) -> bool:
        x = self.resolve(label)
        return x != ZEROI and self._graph.nodes[x]["leaf"]

    # ------------------------------------------------------------------
    # Edges
    # ------------------------------------------------------------------

    @property
    def edges(self) -> list[tuple[Label, Label]]:
        return list(self._graph.edges)

    @property
    def edge_count(self) -> int:
        return self._graph.number_of_edges()

    def has_edge(self, a, b) -> bool:
        x, y = self.resolve(a), self.resolve(b)
        return x == y or ZEROI in (x, y) or self._graph.has_edge(x, y)

    def edge_map(self, a, b) -> FpMatrix:
        """phi_xy, including the identity self-loop and zero maps at ZEROI."""
        x, y = self.resolve(a), self.resolve(b)
        if ZEROI in (x, y):
            return FpMatrix.zeros(self.p, self.dim(y), self.dim(x))
        if x == y:
            return FpMatrix.identity(self.p, self.dim(x))
        data = self._graph.edges.get((x, y))
        if data is None:
            raise DiagramError(f"no edge {fmt(x)} -> {fmt(y)}", where=(x, y))
        return data["map"]

    def edge_items(self) -> list[tuple[tuple[Label, Label], FpMatrix]]:
        return [((x, y), d["map"]) for x, y, d in self._graph.edges(data=True)]

    def parents(self, label) -> list[Label]:
        return list(self._graph.predecessors(self.resolve(label)))

    def children(self, label) -> list[Label]:
        return list(self._graph.successors(self.resolve(label)))

    def parent_of(self, leaf) -> Label:
        parents = self.parents(leaf)
        if len(parents) != 1:
            raise DiagramError(f"leaf {fmt(self.resolve(leaf))} has {len(parents)} parents")
        return parents[0]

    def sources(self) -> list[Label]:
        return [x for x in self._graph.nodes if self._graph.in_degree(x) == 0]

    def topological_order(self) -> list[Label]:
        return list(nx.topological_sort(self._graph))

    # ------------------------------------------------------------------
    # Serialisation helpers
    # ------------------------------------------------------------------

    def canonical_form(self) -> dict:
        """A deterministic plain-data description (used for hashing).

        Every vertex is keyed by its least name, so two diagrams that only
        disagree about which name of a merged vertex is canonical are equal.
        """
        names = self.name_table()
        rep = {x: min(ns, key=sort_key) for x, ns in names.items()}
        return {
            "p": self.p,
            "vertices": sorted(
                [list(rep[x]), d["dim"], d["leaf"]] for x, d in self._graph.nodes(data=True)
            ),
            "edges": sorted(
                [list(rep[x]), list(rep[y]), d["map"].entries()]
                for x, y, d in self._graph.edges(data=True)
            ),
            "aliases": sorted(
                [list(n), list(rep[x])] for x, ns in names.items() for n in ns if n != rep[x]
            ),
        }

    def fingerprint(self) -> str:
        """SHA-256 of the canonical form, computed once per diagram."""
        if self._fingerprint is None:
            payload = json.dumps(
                self.canonical_form(), separators=(",", ":"), ensure_ascii=False
            )
            self._fingerprint = hashlib.sha256(payload.encode("utf-8")).hexdigest()
        return self._fingerprint

    def __eq__(self, other) -> bool:
        if not isinstance(other, Diagram):
            return NotImplemented
        if self is other:
            return True
        if (self.p, self.vertex_count, self.edge_count) != (
            other.p,
            other.vertex_count,
            other.edge_count,
        ):
            return False
        return self.fingerprint() == other.fingerprint()

    def __hash__(self) -> int:
        return hash(self.fingerprint())

    def __repr__(self) -> str:
        return (
            f"Diagram(p={self.p}, {self.vertex_count} vertices, "
            f"{len(self.leaves)} leaves, {self.edge_count} edges)"
        )


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------


class DiagramProblem(BaseModel):
    kind: str = Field(description="cycle, paths, leaf, shape or alias")
    where: str
    message: str


class DiagramReport(BaseModel):
    ok: bool
    problems: list[DiagramProblem] = Field(default_factory=list)

    def require(self) -> DiagramReport:
        if not self.ok:
            first = self.problems[0]
            raise DiagramError(first.message, kind=first.kind, where=first.where)
        return self


def _second_path(graph: nx.DiGraph, start: Label) -> Label | None:
    """A vertex reachable from ``start`` along two different paths, if any."""
    seen = {start}
    stack = [start]
    while stack:
        x = stack.pop()
        for y in graph.successors(x):
            if y in seen:
                return y
            seen.add(y)
            stack.append(y)
    return None


def validate(diagram: Diagram) -> DiagramReport:
    """Check acyclicity, single-connectedness, leaf degrees and edge shapes."""
    problems: list[DiagramProblem] = []
    g = diagram._graph
    for (x, y), m in diagram.edge_items():
        want = (g.nodes[y]["dim"], g.nodes[x]["dim"])
        if m.p != diagram.p or m.shape != want:
            problems.append(
                DiagramProblem(
                    kind="shape",
                    where=f"{fmt(x)}->{fmt(y)}",
                    message=f"edge {fmt(x)}->{fmt(y)} has shape {m.shape}, expected {want}",
                )
            )
    for x in diagram.leaves:
        if g.in_degree(x) != 1 or g.out_degree(x) != 0:
            problems.append(
                DiagramProblem(
                    kind="leaf",
                    where=fmt(x),
                    message=(
                        f"leaf {fmt(x)} has in-degree {g.in_degree(x)} and "
                        f"out-degree {g.out_degree(x)}"
                    ),
                )
            )
    if not nx.is_directed_acyclic_graph(g):
        cycle = nx.find_cycle(g)
        problems.append(
            DiagramProblem(
                kind="cycle",
                where=fmt(cycle[0][0]),
                message=f"cycle through {fmt(cycle[0][0])}",
            )
        )
    else:
        for x in diagram.topological_order():
            y = _second_path(g, x)
            if y is not None:
                problems.append(
                    DiagramProblem(
                        kind="paths",
                        where=f"{fmt(x)}->{fmt(y)}",
                        message=f"two directed paths from {fmt(x)} to {fmt(y)}",
                    )
                )
                break
    report = DiagramReport(ok=not problems, problems=problems)
    if not report.ok:
        logger.debug("Diagram invalid: %s", problems[0].message)
    return report
