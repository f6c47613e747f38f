"""The individual arithmetic gate: eight aggregates A1..A4, B1..B4.

Built from agg_s by three CS steps and a relabelling.  The pins are
X1 = A1;00;△, X2 = B1;00;△, Y1 = A4;00;△ and Y2 = B4;00;△.  The initial
variant drops X2 and the final (Omega) variant drops Y2; the dropped
vertex becomes a toggle.
"""

from __future__ import annotations

import logging
from functools import lru_cache

from cs_certify.data.standard import ag, ag_initial, const, trivial
from cs_certify.diagrams.diagram import Diagram
from cs_certify.entailment.certificate import EntailmentCertificate
from cs_certify.entailment.replay import CertificateBuilder
from cs_certify.errors import ParameterError
from cs_certify.gates.aggregate import aggregate_gate, build_aggregate, corner, cross, sumconst
from cs_certify.gates.gate import Gate, GateAssignment, GatePart, compose_assignment

logger = logging.getLogger(__name__)

PARTS = ["A1", "A2", "A3", "A4", "B1", "B2", "B3", "B4"]

# (third CS side, second CS side, first CS side) -> aggregate name
_RELABEL = {
    ("L", "L", "L"): "A1",
    ("L", "L", "R"): "A2",
    ("R", "L", "R"): "A3",
    ("R", "L", "L"): "A4",
    ("L", "R", "L"): "B1",
    ("L", "R", "R"): "B2",
    ("R", "R", "R"): "B3",
    ("R", "R", "L"): "B4",
}


def mirror(name: str) -> str:
    """The north-south reflection Aj <-> A(5-j), Bj <-> B(5-j)."""
    return f"{name[0]}{5 - int(name[1])}"


@lru_cache(maxsize=16)
def build_indagate(p: int, s: int) -> tuple[Diagram, EntailmentCertificate]:
    """``agg_s |=^3 IndAGate_s`` with gamma(X1) = (00;△, 0) and gamma(Y1) = (00;△, 1)."""
    if s < 2:
        raise ParameterError(f"IndAGate_s needs s >= 2, got {s}")
    agg, _ = build_aggregate(p, s)
    builder = CertificateBuilder(agg)
    builder.cs([corner("01")])
    builder.cs([("L", *corner("10"))])
    builder.cs([("L", "R", *corner("10")), ("R", "R", *corner("00")), ("R", "R", *corner("11"))])
    builder.relabel({old: (new,) for old, new in _RELABEL.items()})
    logger.debug("Built IndAGate_%d: %r", s, builder.current)
    return builder.current, builder.certificate()


def _corners(name: str, initial: bool, final: bool) -> list[str]:
    if name in ("A1", "A4"):
        return ["00", "01", "10"]
    if name in ("A2", "A3"):
        return ["01", "10"]
    if name in ("B2", "B3"):
        return ["00", "01", "11"]
    dropped = initial if name == "B1" else final
    return ["01", "10"] if dropped else ["00", "01", "10"]


@lru_cache(maxsize=32)
def indagate_gate(p: int, s: int, initial: bool = False, final: bool = False) -> Gate:
    diagram, _ = build_indagate(p, s)
    names = {"X1": ("A1", *corner("00"))}
    if not initial:
        names["X2"] = ("B1", *corner("00"))
    names["Y1"] = ("A4", *corner("00"))
    if not final:
        names["Y2"] = ("B4", *corner("00"))
    parts = [
        GatePart(prefix=(name,), gate=aggregate_gate(p, s, _corners(name, initial, final)))
        for name in PARTS
    ]
    tag = ",".join(t for t, on in (("A", initial), ("Ω", final)) if on)
    return Gate(
        name=f"IndAGate_{s}" + (f"^{tag}" if tag else ""),
        diagram=diagram,
        modes=list(range(1, s + 1)),
        names=names,
        parts=parts,
    )


def _assemble(gate: Gate, choices: dict[str, GateAssignment], data) -> GateAssignment:
    return compose_assignment(gate, [choices[name] for name in PARTS], data)


def _data(p: int, s: int, gate: Gate, one, two) -> dict:
    pins = list(gate.names)
    data = {0: trivial(p, pins), 1: one, 2: two}
    for r in range(3, s + 1):
        data[r] = const(p, pins)
    return data


@lru_cache(maxsize=32)
def middle(p: int, s: int, i: int, final: bool = False) -> GateAssignment:
    """Middle(i): D_1 = ag(i, A), D_2 = ag(i, B), Const in the other modes.

    For i = 0 the A4 aggregate crosses instead of passing mode 2 through.
    """
    if i not in (0, 1):
        raise ParameterError(f"Middle(i) needs i in {{0, 1}}, got {i}")
    gate = indagate_gate(p, s, final=final)

    def c(name: str) -> list[str]:
        return _corners(name, False, final)

    choices = {
        "A1": cross(p, s, "01", "11", modes=(1, 2)),
        "A2": sumconst(p, s, c("A2"), mode=2),
        "A3": sumconst(p, s, c("A3"), mode=2),
        "A4": cross(p, s, "01", "11", modes=(2, 1)) if i == 0 else sumconst(p, s, c("A4"), 2),
        "B1": cross(p, s, "01", "11", modes=(1, 2)),
        "B2": sumconst(p, s, c("B2"), mode=1),
        "B3": sumconst(p, s, c("B3"), mode=2),
        "B4": sumconst(p, s, c("B4"), mode=1),
    }
    data = _data(p, s, gate, ag(p, i, "A", final), ag(p, i, "B", final))
    return _assemble(gate, choices, data)


@lru_cache(maxsize=64)
def initial(p: int, s: int, i: int, j: int, sign: int, final: bool = False) -> GateAssignment:
    """Initial(i, j, sign) on the gate without X2: D_1/D_2 = ag(i, j, sign, A/B).

    The first two binary digits i, j of the multiplier and its sign are
    fixed here; B1 and A2 swap modes for a negative sign.
    """
    if i not in (0, 1) or j not in (0, 1) or sign not in (1, -1):
        raise ParameterError(f"invalid Initial parameters i={i}, j={j}, sign={sign}")
    gate = indagate_gate(p, s, initial=True, final=final)

    def c(name: str) -> list[str]:
        return _corners(name, True, final)

    plus = sign == 1
    choices = {
        "A1": cross(p, s, "10", "11", modes=(1, 2)) if i == 0 else sumconst(p, s, c("A1"), 1),
        "B1": sumconst(p, s, c("B1"), mode=1 if plus else 2),
        "A2": sumconst(p, s, c("A2"), mode=2 if plus else 1),
        "B2": sumconst(p, s, c("B2"), mode=1),
        "A3": sumconst(p, s, c("A3"), mode=2),
        "B3": sumconst(p, s, c("B3"), mode=2),
        "A4": cross(p, s, "01", "11", modes=(2, 1)) if j == 0 else sumconst(p, s, c("A4"), 2),
        "B4": sumconst(p, s, c("B4"), mode=1),
    }
    data = _data(
        p,
        s,
        gate,
        ag_initial(p, i, j, sign, "A", final),
        ag_initial(p, i, j, sign, "B", final),
    )
    return _assemble(gate, choices, data)


def indagate_assignment(
    p: int,
    s: int,
    variant: str,
    *,
    i: int = 0,
    j: int = 0,
    sign: int = 1,
    final: bool = False,
) -> GateAssignment:
    """Dispatch by name: ``middle`` or ``initial``; ``final`` selects the Omega variants."""
    if variant == "middle":
        return middle(p, s, i, final)
    if variant == "initial":
        return initial(p, s, i, j, sign, final)
    raise ParameterError(f"unknown IndAGate assignment {variant!r}")
