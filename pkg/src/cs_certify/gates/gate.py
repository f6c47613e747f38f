"""Gates, assignments, and their verification.

A gate is a diagram whose leaves are split into pins and toggles, with a
finite set of modes.  An assignment sends every toggle to a mode and
gives, for every mode r and for r = 0, a datum D_r on the pin names and
a morphism ``diagram(D_r) -> D[non-leaves, pins, S_r]`` respecting every
pin and sending the toggles of S_r to ZEROI.

Composite gates are built from sub-gates sitting inside the ambient
diagram under a label prefix.  Their assignments are assembled from the
sub-assignments by solving one small linear system per mode for the maps
``V_r -> V^part_r`` (see :func:`compose_assignment`).
"""

from __future__ import annotations

import logging
import os
from collections.abc import Iterable, Mapping, Sequence
from concurrent.futures import ThreadPoolExecutor, as_completed

import numpy as np
from pydantic import BaseModel, Field, model_validator

from cs_certify.data.datum import LinearDatum
from cs_certify.diagrams.constructions import HUB, diagram_of, restrict_diagram
from cs_certify.diagrams.diagram import Diagram
from cs_certify.diagrams.labels import ZEROI, Label, as_label, fmt, prefixed, sort_key
from cs_certify.diagrams.morphisms import DiagramMorphism, verify_diagram_morphism
from cs_certify.diagrams.solver import solve_hub_morphism
from cs_certify.errors import AssignmentError, DiagramError, ParameterError
from cs_certify.field.matrix import FpMatrix, solve_matrix

logger = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# Gates
# ---------------------------------------------------------------------------


class GatePart(BaseModel):
    """A sub-gate whose local label y is the vertex ``prefix;y`` of the ambient diagram."""

    prefix: Label
    gate: Gate

    model_config = {"arbitrary_types_allowed": True, "frozen": True}


class Gate(BaseModel):
    """A diagram with modes, named pins and toggles.

    ``names`` gives every pin the index label it carries in the data D_r.
    """

    name: str
    diagram: Diagram
    modes: list[int]
    names: dict[str, Label]
    parts: list[GatePart] = Field(default_factory=list)

    model_config = {"arbitrary_types_allowed": True, "frozen": True}

    @model_validator(mode="before")
    @classmethod
    def _resolve_pins(cls, data):
        if isinstance(data, dict) and isinstance(data.get("diagram"), Diagram):
            diagram = data["diagram"]
            data = {
                **data,
                "names": {n: diagram.resolve(x) for n, x in data.get("names", {}).items()},
            }
        return data

    @model_validator(mode="after")
    def _check(self) -> Gate:
        if not self.modes or 0 in self.modes or len(set(self.modes)) != len(self.modes):
            raise ParameterError(f"{self.name}: modes must be distinct and nonzero")
        pins = [self.diagram.resolve(x) for x in self.names.values()]
        if len(set(pins)) != len(pins):
            raise ParameterError(f"{self.name}: two pin names share a vertex")
        for x in pins:
            if not self.diagram.is_leaf(x):
                raise ParameterError(f"{self.name}: pin {fmt(x)} is not a leaf")
        if self.parts:
            problems = part_problems(self)
            if problems:
                raise ParameterError(f"{self.name}: {problems[0]}")
        return self

    @property
    def pins(self) -> list[Label]:
        return list(self.names.values())

    @property
    def toggles(self) -> list[Label]:
        pins = set(self.pins)
        return [x for x in self.diagram.leaves if x not in pins]

    def pin_label(self, pin: Label) -> Label:
        """The index label of a pin in the data D_r."""
        for n, x in self.names.items():
            if x == pin:
                return as_label(n)
        raise ParameterError(f"{self.name}: {fmt(pin)} is not a pin")

    def pin(self, name: str) -> Label:
        return self.names[name]

    def local(self, part: GatePart, label) -> Label:
        """The ambient vertex of a sub-gate vertex."""
        return self.diagram.resolve(prefixed(part.prefix, as_label(label)))

    def restricted(self, toggles: Iterable = ()) -> Diagram:
        """``D[non-leaves, pins, toggles]``."""
        keep = self.diagram.nonleaves + self.pins + [self.diagram.resolve(t) for t in toggles]
        return restrict_diagram(self.diagram, keep)

    def __repr__(self) -> str:
        return (
            f"Gate({self.name}, modes={self.modes}, {len(self.pins)} pins, "
            f"{len(self.toggles)} toggles, {len(self.parts)} parts)"
        )


GatePart.model_rebuild()


def part_problems(gate: Gate) -> list[str]:
    """Check that the parts tile the gate.

    Every vertex and edge lies in some part with the same maps, every
    toggle is a toggle of exactly one part, every pin is a pin of a part,
    and a vertex shared by several parts is a pin of each.
    """
    d = gate.diagram
    problems: list[str] = []
    owners: dict[Label, list[tuple[int, bool]]] = {}
    for k, part in enumerate(gate.parts):
        sub = part.gate
        sub_pins = set(sub.pins)
        for y in sub.diagram.vertices:
            try:
                x = gate.local(part, y)
            except DiagramError:
                problems.append(f"part {fmt(part.prefix)} vertex {fmt(y)} is missing")
                continue
            if d.dim(x) != sub.diagram.dim(y):
                problems.append(f"{fmt(x)} has another dimension in part {fmt(part.prefix)}")
            owners.setdefault(x, []).append((k, y in sub_pins))
            if sub.diagram.is_leaf(y) and y not in sub_pins and not d.is_leaf(x):
                problems.append(f"toggle {fmt(y)} of part {fmt(part.prefix)} is not a leaf")
            if not sub.diagram.is_leaf(y) and d.is_leaf(x):
                problems.append(f"non-leaf {fmt(y)} of part {fmt(part.prefix)} is a leaf")
        for (a, b), m in sub.diagram.edge_items():
            x, y = gate.local(part, a), gate.local(part, b)
            if not d.has_edge(x, y) or d.edge_map(x, y) != m:
                problems.append(f"edge {fmt(x)}->{fmt(y)} differs in part {fmt(part.prefix)}")
    for x in d.vertices:
        found = owners.get(x, [])
        if not found:
            problems.append(f"vertex {fmt(x)} lies in no part")
        elif len(found) > 1 and not all(is_pin for _, is_pin in found):
            problems.append(f"shared vertex {fmt(x)} is not a pin of every part")
    for x in gate.pins:
        if not any(is_pin for _, is_pin in owners.get(x, [])):
            problems.append(f"pin {fmt(x)} is not a pin of any part")
    for x in gate.toggles:
        if sum(1 for _, is_pin in owners.get(x, []) if not is_pin) != 1:
            problems.append(f"toggle {fmt(x)} is not a toggle of exactly one part")
    return problems


# ---------------------------------------------------------------------------
# Assignments
# ---------------------------------------------------------------------------


class GateAssignment(BaseModel):
    """A toggle partition with one datum and one morphism per mode (and mode 0)."""

    partition: dict[Label, int]
    data: dict[int, LinearDatum]
    morphisms: dict[int, DiagramMorphism]

    model_config = {"arbitrary_types_allowed": True}

    def toggles_in(self, r: int) -> list[Label]:
        """S_r; empty for r = 0."""
        return [t for t, mode in self.partition.items() if mode == r and r != 0]


class AssignmentFailure(BaseModel):
    mode: int | None
    where: str
    reason: str


class AssignmentReport(BaseModel):
    ok: bool
    gate: str
    modes_checked: list[int] = Field(default_factory=list)
    failures: list[AssignmentFailure] = Field(default_factory=list)

    def require(self) -> AssignmentReport:
        if not self.ok:
            first = self.failures[0]
            raise AssignmentError(
                f"{self.gate}: {first.reason} at {first.where}", mode=first.mode, vertex=first.where
            )
        return self


def _check_mode(gate: Gate, assignment: GateAssignment, r: int) -> list[AssignmentFailure]:
    fails: list[AssignmentFailure] = []

    def fail(where: str, reason: str) -> None:
        fails.append(AssignmentFailure(mode=r, where=where, reason=reason))

    datum = assignment.data.get(r)
    morph = assignment.morphisms.get(r)
    if datum is None or morph is None:
        fail("-", "no datum or morphism for this mode")
        return fails
    wanted = sorted((as_label(n) for n in gate.names), key=sort_key)
    if sorted(datum.labels, key=sort_key) != wanted:
        fail("-", "datum indices are not the pin names")
        return fails
    toggles = assignment.toggles_in(r)
    if morph.target != gate.restricted(toggles):
        fail("-", "target is not the restricted gate diagram")
        return fails
    if morph.source != diagram_of(datum):
        fail("-", "source is not the diagram of the datum")
        return fails
    report = verify_diagram_morphism(morph)
    for failure in report.failures:
        fail(failure.where, failure.reason)
    for name, x in gate.names.items():
        if morph.alpha.get(x) != as_label(name) or not morph.theta[x].is_identity():
            fail(fmt(x), f"pin is not respected as {name}")
    for t in toggles:
        if morph.alpha.get(t) != ZEROI:
            fail(fmt(t), "toggle of this mode is not sent to the zero index")
    return fails


def verify_assignment(
    gate: Gate, assignment: GateAssignment, *, max_workers: int | None = None
) -> AssignmentReport:
    """Check the partition, then every mode's morphism edge by edge.

    Modes are independent and are checked in a thread pool.
    """
    failures: list[AssignmentFailure] = []
    toggles = set(gate.toggles)
    keys = set(assignment.partition)
    for t in sorted(toggles - keys, key=sort_key):
        failures.append(AssignmentFailure(mode=None, where=fmt(t), reason="toggle has no mode"))
    for t in sorted(keys - toggles, key=sort_key):
        failures.append(AssignmentFailure(mode=None, where=fmt(t), reason="not a toggle"))
    for t, r in assignment.partition.items():
        if r not in gate.modes:
            failures.append(AssignmentFailure(mode=r, where=fmt(t), reason="unknown mode"))
    modes = [0, *gate.modes]
    if max_workers is None:
        max_workers = max(1, min(len(modes), (os.cpu_count() or 4) - 1))
    if not failures and max_workers <= 1:
        for r in modes:
            failures.extend(_check_mode(gate, assignment, r))
    elif not failures:
        with ThreadPoolExecutor(max_workers=max_workers) as executor:
            futures = {executor.submit(_check_mode, gate, assignment, r): r for r in modes}
            for future in as_completed(futures):
                failures.extend(future.result())
        failures.sort(key=lambda f: modes.index(f.mode) if f.mode in modes else -1)
    report = AssignmentReport(
        ok=not failures, gate=gate.name, modes_checked=modes, failures=failures
    )
    if report.ok:
        logger.info("Assignment of %s verified over modes %s", gate.name, gate.modes)
    else:
        first = failures[0]
        logger.info("Assignment of %s rejected in mode %s: %s", gate.name, first.mode, first.reason)
    return report


def permute_modes(assignment: GateAssignment, perm: Mapping[int, int]) -> GateAssignment:
    """Rename modes by a permutation of the gate's modes; mode 0 is fixed."""
    full = {0: 0, **{int(a): int(b) for a, b in perm.items()}}
    for r in {*assignment.partition.values(), *assignment.data}:
        full.setdefault(r, r)
    if sorted(full.values()) != sorted(full):
        raise ParameterError(f"{dict(perm)} is not a permutation of the modes")
    return GateAssignment(
        partition={t: full[r] for t, r in assignment.partition.items()},
        data={full[r]: d for r, d in assignment.data.items()},
        morphisms={full[r]: m for r, m in assignment.morphisms.items()},
    )


# ---------------------------------------------------------------------------
# Solving
# ---------------------------------------------------------------------------


def solve_assignment(
    gate: Gate,
    partition: Mapping,
    data: Mapping[int, LinearDatum],
    *,
    cap: int | None = None,
) -> GateAssignment:
    """Interpolate every mode's morphism through the hub from the pins and S_r.

    Suited to gates small enough for a limit space; raises AssignmentError
    naming the mode when the prescribed data admit no morphism.
    """
    parts = {gate.diagram.resolve(t): int(r) for t, r in partition.items()}
    morphisms: dict[int, DiagramMorphism] = {}
    for r in [0, *gate.modes]:
        toggles = [t for t, mode in parts.items() if mode == r and r != 0]
        target = gate.restricted(toggles)
        shape: dict[Label, Label] = {x: as_label(n) for n, x in gate.names.items()}
        shape.update({t: ZEROI for t in toggles})
        morph = solve_hub_morphism(data[r], target, shape, cap=cap)
        if morph is None:
            raise AssignmentError(f"{gate.name}: no morphism for mode {r}", mode=r)
        morphisms[r] = morph
    return GateAssignment(partition=parts, data=dict(data), morphisms=morphisms)


def passthrough_assignment(
    gate: Gate, partition: Mapping, datum: LinearDatum
) -> GateAssignment:
    """The identity morphism of ``diagram(datum)`` offered as a part assignment.

    Toggles are not sent to ZEROI; :func:`compose_assignment` instead asks
    the composite to vanish on them.  Not a valid assignment on its own.
    """
    if gate.diagram != diagram_of(datum):
        raise ParameterError(f"{gate.name} is not the diagram of the datum")
    parts = {gate.diagram.resolve(t): int(r) for t, r in partition.items()}
    data: dict[int, LinearDatum] = {}
    morphisms: dict[int, DiagramMorphism] = {}
    for r in [0, *gate.modes]:
        keep = gate.pins + [t for t, mode in parts.items() if mode == r and r != 0]
        sub = LinearDatum(datum.p, datum.v_dim, [(i, datum.phi(i)) for i in keep])
        target = gate.restricted([t for t in keep if t not in gate.pins])
        data[r] = sub
        morphisms[r] = DiagramMorphism.build(
            diagram_of(sub),
            target,
            {x: x for x in target.vertices},
            {HUB: FpMatrix.identity(datum.p, datum.v_dim)},
        )
    return GateAssignment(partition=parts, data=data, morphisms=morphisms)


def _value(morph: DiagramMorphism, datum: LinearDatum, y: Label) -> FpMatrix:
    """The map ``V -> W_y`` a morphism out of ``diagram(datum)`` gives at y."""
    a = morph.alpha[y]
    if a == ZEROI:
        return FpMatrix.zeros(datum.p, morph.target.dim(y), datum.v_dim)
    if a == HUB:
        return morph.theta[y]
    return morph.theta[y] @ datum.phi(a)


class _System:
    """Rows of ``sum_k A_k theta_k = B`` over the stacked unknowns theta_k."""

    def __init__(self, p: int, widths: Sequence[int], cols: int) -> None:
        self.p = p
        self.widths = list(widths)
        self.offsets = [sum(self.widths[:k]) for k in range(len(self.widths))]
        self.cols = cols
        self.terms: list[list[tuple[int, FpMatrix]]] = []
        self.rhs: list[FpMatrix] = []

    def add(self, terms: Sequence[tuple[int, FpMatrix]], rhs: FpMatrix) -> None:
        self.terms.append(list(terms))
        self.rhs.append(rhs)

    def solve(self) -> list[FpMatrix] | None:
        total = sum(self.widths)
        height = sum(b.rows for b in self.rhs)
        a = np.zeros((height, total), dtype=np.int64)
        at = 0
        for terms, b in zip(self.terms, self.rhs):
            for k, m in terms:
                o = self.offsets[k]
                a[at : at + b.rows, o : o + self.widths[k]] += m.array
            at += b.rows
        rhs = FpMatrix.vstack(self.rhs, cols=self.cols, p=self.p)
        coords = solve_matrix(FpMatrix(self.p, a, shape=(height, total)), rhs)
        if coords is None:
            return None
        return [
            coords.select_rows(range(o, o + w)) for o, w in zip(self.offsets, self.widths)
        ]


def _compose_mode(
    gate: Gate,
    subs: Sequence[GateAssignment],
    r: int,
    datum: LinearDatum,
    partition: Mapping[Label, int],
) -> DiagramMorphism:
    p = datum.p
    toggles = [t for t, mode in partition.items() if mode == r and r != 0]
    target = gate.restricted(toggles)
    present = set(target.vertices)
    sub_data = [sub.data[r] for sub in subs]
    system = _System(p, [d.v_dim for d in sub_data], datum.v_dim)

    # Each target vertex is described by (part, map V^part -> W_x) pairs.
    seen: dict[Label, tuple[int, FpMatrix]] = {}
    lazy: list[tuple[int, FpMatrix]] = []
    for k, part in enumerate(gate.parts):
        morph = subs[k].morphisms[r]
        sub_pins = set(part.gate.pins)
        for y in morph.target.vertices:
            x = gate.local(part, y)
            value = _value(morph, sub_data[k], y)
            if x not in present:
                continue
            if x in partition and partition[x] == r and r != 0:
                if morph.alpha[y] != ZEROI:
                    lazy.append((k, value))
                continue
            if x in seen:
                j, other = seen[x]
                system.add([(k, value), (j, -other)], FpMatrix.zeros(p, value.rows, datum.v_dim))
                continue
            seen[x] = (k, value)
            if y in sub_pins and x in gate.pins:
                system.add([(k, value)], datum.phi(gate.pin_label(x)))
    for k, value in lazy:
        system.add([(k, value)], FpMatrix.zeros(p, value.rows, datum.v_dim))

    solution = system.solve()
    if solution is None:
        raise AssignmentError(f"{gate.name}: the parts do not compose in mode {r}", mode=r)

    alpha: dict[Label, Label] = {}
    theta: dict[Label, FpMatrix] = {}
    for x in target.vertices:
        if x in gate.pins:
            alpha[x] = gate.pin_label(x)
            theta[x] = FpMatrix.identity(p, target.dim(x))
        elif x in partition:
            alpha[x] = ZEROI
            theta[x] = FpMatrix.zeros(p, target.dim(x), 0)
        else:
            k, value = seen[x]
            alpha[x] = HUB
            theta[x] = value @ solution[k]
    return DiagramMorphism(source=diagram_of(datum), target=target, alpha=alpha, theta=theta)


def compose_assignment(
    gate: Gate,
    subs: Sequence[GateAssignment],
    data: Mapping[int, LinearDatum],
) -> GateAssignment:
    """Assemble an assignment of a composite gate from one assignment per part.

    ``subs[k]`` is an assignment of ``gate.parts[k]`` in its local labels,
    already permuted onto the composite's modes.  For each mode the maps
    ``theta_k: V_r -> V^k_r`` are solved for jointly: the composite must
    agree with D_r at its pins, the parts must agree at every fused vertex,
    and toggles of S_r that a part does not send to ZEROI must vanish.
    """
    if len(subs) != len(gate.parts):
        raise ParameterError(f"{gate.name}: {len(gate.parts)} parts, {len(subs)} assignments")
    toggles = set(gate.toggles)
    partition: dict[Label, int] = {}
    for part, sub in zip(gate.parts, subs):
        for t, r in sub.partition.items():
            x = gate.local(part, t)
            if x in toggles:
                partition[x] = r
    morphisms = {}
    for r in [0, *gate.modes]:
        morphisms[r] = _compose_mode(gate, subs, r, data[r], partition)
        logger.debug("%s: mode %d composed from %d parts", gate.name, r, len(subs))
    return GateAssignment(partition=partition, data=dict(data), morphisms=morphisms)


# ---------------------------------------------------------------------------
# The datum of an assignment
# ---------------------------------------------------------------------------


def mode_label(r: int) -> Label:
    return (f"M{r}",)


def assignment_datum(gate: Gate, assignment: GateAssignment) -> LinearDatum:
    """V = the direct sum of the V_r over r in {0} and the modes.

    Each pin reads the sum of its D_r maps; the index of mode r projects
    away from V_r.
    """
    modes = [0, *gate.modes]
    data = [assignment.data[r] for r in modes]
    p = data[0].p
    total = sum(d.v_dim for d in data)
    offsets = [sum(d.v_dim for d in data[:k]) for k in range(len(data))]
    ident = FpMatrix.identity(p, total)
    out: list[tuple[Label, FpMatrix]] = []
    for name in gate.names:
        blocks = [d.phi(as_label(name)) for d in data]
        out.append((as_label(name), FpMatrix.hstack(blocks, rows=blocks[0].rows, p=p)))
    for k, r in enumerate(modes[1:], start=1):
        keep = [c for c in range(total) if not offsets[k] <= c < offsets[k] + data[k].v_dim]
        out.append((mode_label(r), ident.select_rows(keep)))
    return LinearDatum(p, total, out)


def assignment_morphism(gate: Gate, assignment: GateAssignment) -> DiagramMorphism:
    """``diagram(assignment_datum) -> gate.diagram``.

    Pins go to their names, a toggle of S_r goes to the index of mode r,
    and every non-leaf goes to the hub with the sum of the modes' maps.
    """
    modes = [0, *gate.modes]
    data = [assignment.data[r] for r in modes]
    datum = assignment_datum(gate, assignment)
    p = datum.p
    d = gate.diagram
    offsets = [sum(x.v_dim for x in data[:k]) for k in range(len(data))]

    def spread(k: int, m: FpMatrix) -> FpMatrix:
        blocks = [
            m if j == k else FpMatrix.zeros(p, m.rows, data[j].v_dim) for j in range(len(data))
        ]
        return FpMatrix.hstack(blocks, rows=m.rows, p=p)

    hub: dict[Label, FpMatrix] = {}
    for y in d.nonleaves:
        acc = FpMatrix.zeros(p, d.dim(y), datum.v_dim)
        for k, r in enumerate(modes):
            acc = acc + spread(k, assignment.morphisms[r].theta[y])
        hub[y] = acc
    alpha: dict[Label, Label] = {y: HUB for y in d.nonleaves}
    theta: dict[Label, FpMatrix] = dict(hub)
    for x in gate.pins:
        alpha[x] = gate.pin_label(x)
        theta[x] = FpMatrix.identity(p, d.dim(x))
    for t in gate.toggles:
        r = assignment.partition[t]
        k = modes.index(r)
        value = d.edge_map(d.parent_of(t), t) @ hub[d.parent_of(t)]
        keep = [c for c in range(datum.v_dim) if not offsets[k] <= c < offsets[k] + data[k].v_dim]
        alpha[t] = mode_label(r)
        theta[t] = value.select_columns(keep)
    return DiagramMorphism(source=diagram_of(datum), target=d, alpha=alpha, theta=theta)


def complete_permutation(modes: Sequence[int], fixed: Mapping[int, int]) -> dict[int, int]:
    """Extend ``fixed`` to a permutation of ``modes``, the rest kept in increasing order."""
    fixed = {int(a): int(b) for a, b in fixed.items()}
    if len(set(fixed.values())) != len(fixed) or not set(fixed) | set(fixed.values()) <= set(
        modes
    ):
        raise ParameterError(f"{fixed} does not extend to a permutation of {list(modes)}")
    rest_from = [r for r in sorted(modes) if r not in fixed]
    rest_to = [r for r in sorted(modes) if r not in fixed.values()]
    return {**fixed, **dict(zip(rest_from, rest_to))}


def pin_section(gate: Gate, assignment: GateAssignment, pin: str) -> dict[Label, FpMatrix]:
    """A section of the gate diagram at a pin, zero at every other pin.

    Read off the mode-0 morphism: a vector of V_0 with the given pin value
    and the other pins zero is pushed to every vertex.  Raises DiagramError
    when D_0 does not separate the pins.
    """
    morph = assignment.morphisms[0]
    datum = assignment.data[0]
    p = datum.p
    d = gate.diagram
    x = gate.pin(pin)
    width = d.dim(x)
    stacked = FpMatrix.vstack(
        [datum.phi(as_label(n)) for n in gate.names], cols=datum.v_dim, p=p
    )
    rhs = FpMatrix.vstack(
        [
            FpMatrix.identity(p, width) if n == pin else FpMatrix.zeros(p, d.dim(y), width)
            for n, y in gate.names.items()
        ],
        cols=width,
        p=p,
    )
    psi = solve_matrix(stacked, rhs)
    if psi is None:
        raise DiagramError(
            f"{gate.name}: D_0 does not separate pin {pin}", kind="surjectivity", where=x
        )
    out = {y: _value(morph, datum, y) @ psi for y in morph.target.vertices}
    for t in gate.toggles:
        parent = d.parent_of(t)
        out[t] = d.edge_map(parent, t) @ out[parent]
    return out
