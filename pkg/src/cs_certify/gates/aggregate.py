"""The aggregate gate agg_s and its SumConst and Cross assignments.

agg_s is four copies of diagram(gc_s), labelled 00, 01, 10, 11, glued by
two CS steps: first along s+1, then along 1.  Its pins are the triangle
leaves ``omega;△`` for omega in a set P of corners; every other leaf is
a toggle.
"""

from __future__ import annotations

import logging
from collections.abc import Iterable
from functools import lru_cache

import numpy as np

from cs_certify.data.datum import LinearDatum
from cs_certify.data.morphisms import corestrict
from cs_certify.data.standard import SQUARE, const, crs, gc, sum_datum, trivial
from cs_certify.diagrams.constructions import HUB, diagram_of
from cs_certify.diagrams.diagram import Diagram
from cs_certify.diagrams.labels import TRIANGLE, ZEROI, Label, as_label
from cs_certify.diagrams.morphisms import DiagramMorphism
from cs_certify.entailment.certificate import EntailmentCertificate
from cs_certify.entailment.replay import CertificateBuilder
from cs_certify.errors import AssignmentError, ParameterError
from cs_certify.field.matrix import FpMatrix, solve_matrix
from cs_certify.gates.gate import Gate, GateAssignment, complete_permutation, permute_modes

logger = logging.getLogger(__name__)

CORNER_OF = {("L", "L"): "00", ("L", "R"): "01", ("R", "L"): "10", ("R", "R"): "11"}


def corner(omega: str, leaf: str = TRIANGLE) -> Label:
    return (omega, leaf)


@lru_cache(maxsize=32)
def build_aggregate(p: int, s: int) -> tuple[Diagram, EntailmentCertificate]:
    """``gc_s |=^2 agg_s`` with gamma(00;△) = gamma(11;△) = (△, 0), the others (△, 1)."""
    if s < 1:
        raise ParameterError(f"agg_s needs s >= 1, got {s}")
    builder = CertificateBuilder(diagram_of(gc(p, s)))
    builder.cs([(str(s + 1),)])
    builder.cs([("L", "1"), ("R", "1")])
    builder.relabel({old: (new,) for old, new in CORNER_OF.items()})
    cert = builder.certificate()
    logger.debug("Built agg_%d: %r", s, builder.current)
    return builder.current, cert


def _present(present: Iterable[str] | None) -> tuple[str, ...]:
    if present is None:
        return tuple(SQUARE)
    out = tuple(w for w in SQUARE if w in set(present))
    if len(out) < 2 or len(out) != len(set(present)):
        raise ParameterError(f"P must be 2 to 4 corners of the square, got {present}")
    return out


@lru_cache(maxsize=64)
def _aggregate_gate(p: int, s: int, present: tuple[str, ...]) -> Gate:
    diagram, _ = build_aggregate(p, s)
    suffix = ",".join(present) if len(present) < 4 else ""
    return Gate(
        name=f"agg_{s}" + (f"^{suffix}" if suffix else ""),
        diagram=diagram,
        modes=list(range(1, s + 1)),
        names={w: corner(w) for w in present},
    )


def aggregate_gate(p: int, s: int, present: Iterable[str] | None = None) -> Gate:
    """agg_s^P with modes 1..s."""
    return _aggregate_gate(p, s, _present(present))


def _toggle_modes(gate: Gate, first: dict[Label, int]) -> dict[Label, int]:
    """``omega;r`` toggles go to mode r; triangle toggles and overrides come from ``first``."""
    out: dict[Label, int] = {}
    for t in gate.toggles:
        if t in first:
            out[t] = first[t]
        elif t[1] == TRIANGLE:
            out[t] = 1
        else:
            out[t] = int(t[1])
    return out


# ---------------------------------------------------------------------------
# Hub tables
# ---------------------------------------------------------------------------
#
# Each table gives, per corner omega, the map from V(D_r) into the corner
# hub F_p^(s+1) as {coordinate: row}.  Every other non-leaf is read off a
# hub through its edge map.

HubTable = dict[str, dict[int, list[int]]]


def sum_table(s: int) -> HubTable:
    """Sum on (x, a, b): hubs 00 = (x, 0), 01 = (x, b), 10 = (x + a, 0), 11 = (x + a, b).

    x and a sit in the first coordinate, b in the last.
    """
    return {
        "00": {0: [1, 0, 0]},
        "01": {0: [1, 0, 0], s: [0, 0, 1]},
        "10": {0: [1, 1, 0]},
        "11": {0: [1, 1, 0], s: [0, 0, 1]},
    }


def const_table(r: int) -> HubTable:
    """Const in mode r: every hub carries x in coordinate r and zero elsewhere."""
    return {w: {r - 1: [1]} for w in SQUARE}


def cross_table(s: int, tau: str, r: int) -> HubTable:
    """Cross^tau on (x, y) in mode r = 1 (reads x at 00, tau) or r = 2 (reads y).

    The switched-off pair carries its value in coordinate 2; the other pair
    adds the difference in coordinate 1 (tau = 01) or s + 1 (tau = 10).
    """
    other = "10" if tau == "01" else "01"
    edge = 0 if tau == "01" else s
    if r == 1:
        off, on, value, diff = ("00", tau), (other, "11"), [1, 0], [-1, 1]
    else:
        off, on, value, diff = (other, "11"), ("00", tau), [0, 1], [1, -1]
    table: HubTable = {w: {1: value} for w in off}
    table.update({w: {1: value, edge: diff} for w in on})
    return table


def _hub_matrix(p: int, s: int, rows: dict[int, list[int]], width: int) -> FpMatrix:
    out = np.zeros((s + 1, width), dtype=np.int64)
    for coordinate, row in rows.items():
        out[coordinate] = row
    return FpMatrix(p, out)


def table_morphism(
    gate: Gate,
    s: int,
    r: int,
    datum: LinearDatum,
    toggles: Iterable[Label],
    table: HubTable,
    through: FpMatrix | None = None,
) -> DiagramMorphism:
    """``diagram(datum) -> agg_s[non-leaves, pins, toggles]`` from a hub table.

    ``through`` maps V(datum) into the space the table is written on.
    """
    d = gate.diagram
    p = datum.p
    width = len(next(iter(table["00"].values())))
    theta: dict[Label, FpMatrix] = {}
    for w, rows in table.items():
        hub = _hub_matrix(p, s, rows, width)
        theta[d.resolve((w, *HUB))] = hub if through is None else hub @ through
    toggles = [d.resolve(t) for t in toggles]
    target = gate.restricted(toggles)
    alpha: dict[Label, Label] = {x: HUB for x in target.nonleaves}
    for x in target.topological_order():
        if x not in theta and not target.is_leaf(x):
            parent = target.parents(x)[0]
            theta[x] = target.edge_map(parent, x) @ theta[parent]
    for name, x in gate.names.items():
        alpha[x] = as_label(name)
    for t in toggles:
        alpha[t] = ZEROI
    logger.debug("%s mode %d from its hub table", gate.name, r)
    return DiagramMorphism.build(diagram_of(datum), target, alpha, theta)


def _pin_coordinates(base: LinearDatum, present: tuple[str, ...]) -> FpMatrix:
    """The map Trivial(P) -> V(base) reading each pin of P as its own coordinate."""
    stacked = base.stacked(present)
    lift = solve_matrix(stacked, FpMatrix.identity(base.p, len(present)))
    if lift is None:
        raise AssignmentError(f"the forms of {list(present)} are not independent", mode=0)
    return lift


def _assignment(
    gate: Gate,
    s: int,
    partition: dict[Label, int],
    data: dict[int, LinearDatum],
    tables: dict[int, tuple[HubTable, FpMatrix | None]],
) -> GateAssignment:
    morphisms = {}
    for r, (table, through) in tables.items():
        toggles = [t for t, mode in partition.items() if mode == r and r != 0]
        morphisms[r] = table_morphism(gate, s, r, data[r], toggles, table, through)
    return GateAssignment(partition=partition, data=data, morphisms=morphisms)


@lru_cache(maxsize=64)
def _sumconst(p: int, s: int, present: tuple[str, ...]) -> GateAssignment:
    gate = _aggregate_gate(p, s, present)
    partition = _toggle_modes(gate, {})
    full = sum_datum(p)
    summed = sum_table(s)
    if len(present) == 4:
        data = {0: full, 1: full}
        tables = {0: (summed, None), 1: (summed, None)}
    else:
        zeroed = [w for w in SQUARE if w not in present]
        sub, inclusion = corestrict(full, zeroed)
        data = {0: trivial(p, present), 1: sub}
        tables = {
            0: (summed, _pin_coordinates(full, present)),
            1: (summed, inclusion.theta),
        }
    for r in range(2, s + 1):
        data[r] = const(p, present)
        tables[r] = (const_table(r), None)
    return _assignment(gate, s, partition, data, tables)


def sumconst(
    p: int, s: int, present: Iterable[str] | None = None, mode: int = 1
) -> GateAssignment:
    """SumConst_mode: D_mode = Sum(P), the other modes Const(P).

    Triangle toggles are switched off in the summing mode and each
    ``omega;r`` toggle in mode r (for SumConst_1).
    """
    present = _present(present)
    base = _sumconst(p, s, present)
    if mode == 1:
        return base
    if not 1 <= mode <= s:
        raise ParameterError(f"mode {mode} is not in 1..{s}")
    return permute_modes(base, {1: mode, mode: 1})


@lru_cache(maxsize=64)
def _cross(p: int, s: int, tau: str, eta: str | None) -> GateAssignment:
    if s < 2:
        raise ParameterError(f"cross needs s >= 2, got {s}")
    if tau not in ("01", "10"):
        raise ParameterError(f"tau must be 01 or 10, got {tau}")
    other = "10" if tau == "01" else "01"
    if eta is not None and eta not in ("00", "11"):
        raise ParameterError(f"eta must be 00 or 11, got {eta}")
    present = tuple(w for w in SQUARE if w != eta)
    gate = _aggregate_gate(p, s, present)
    first = {
        corner("00", "2"): 1,
        corner(tau, "2"): 1,
        corner(other, "2"): 2,
        corner("11", "2"): 2,
    }
    if eta is not None:
        first[corner(eta)] = 2
    partition = _toggle_modes(gate, first)
    summed = sum_table(s)
    tables = {r: (cross_table(s, tau, r), None) for r in (1, 2)}
    if eta is None:
        data = {0: sum_datum(p), 1: crs(p, tau), 2: crs(p, tau)}
        tables[0] = (summed, None)
    else:
        struck, inclusion = corestrict(crs(p, tau), [eta])
        data = {0: trivial(p, present), 1: crs(p, tau, missing=eta), 2: struck}
        tables[0] = (summed, _pin_coordinates(sum_datum(p), present))
        tables[2] = (cross_table(s, tau, 2), inclusion.theta)
    for r in range(3, s + 1):
        data[r] = const(p, present)
        tables[r] = (const_table(r), None)
    return _assignment(gate, s, partition, data, tables)


def cross(
    p: int,
    s: int,
    tau: str = "01",
    eta: str | None = None,
    modes: tuple[int, int] = (1, 2),
) -> GateAssignment:
    """Cross^tau_{i,j}: D_i = D_j = crs^tau; with ``eta`` the corner eta is dropped.

    The ``omega;2`` toggles are split between modes i and j so that each
    mode reads the crossing pattern; in the eta variant D_i omits eta and
    D_j co-restricts it.
    """
    base = _cross(p, s, tau, eta)
    if tuple(modes) == (1, 2):
        return base
    i, j = modes
    return permute_modes(base, complete_permutation(range(1, s + 1), {1: i, 2: j}))


def aggregate_assignment(
    p: int,
    s: int,
    variant: str,
    *,
    present: Iterable[str] | None = None,
    modes: tuple[int, ...] = (1, 2),
    tau: str = "01",
    eta: str | None = None,
) -> GateAssignment:
    """Dispatch by name: ``sumconst`` (mode ``modes[0]``) or ``cross``."""
    if variant == "sumconst":
        return sumconst(p, s, present, mode=modes[0])
    if variant == "cross":
        return cross(p, s, tau, eta, modes=(modes[0], modes[1]))
    raise ParameterError(f"unknown aggregate assignment {variant!r}")
