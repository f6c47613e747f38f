"""The bridge gate: two copies of diagram(gc_s) glued along s+1."""

from __future__ import annotations

import logging
from functools import lru_cache

from cs_certify.data.standard import const, gc, trivial
from cs_certify.diagrams.constructions import diagram_of
from cs_certify.diagrams.diagram import Diagram
from cs_certify.diagrams.labels import TRIANGLE
from cs_certify.entailment.certificate import EntailmentCertificate
from cs_certify.entailment.replay import CertificateBuilder
from cs_certify.errors import ParameterError
from cs_certify.gates.gate import Gate, GateAssignment, solve_assignment

logger = logging.getLogger(__name__)


@lru_cache(maxsize=16)
def build_bridge(p: int, s: int) -> tuple[Diagram, EntailmentCertificate]:
    """``gc_s |=^1 Bridge_s`` with gamma(X) = (△, 0) and gamma(Y) = (△, 1)."""
    if s < 1:
        raise ParameterError(f"Bridge_s needs s >= 1, got {s}")
    builder = CertificateBuilder(diagram_of(gc(p, s)))
    builder.cs([(str(s + 1),)])
    return builder.current, builder.certificate()


@lru_cache(maxsize=16)
def bridge_gate(p: int, s: int) -> Gate:
    diagram, _ = build_bridge(p, s)
    return Gate(
        name=f"Bridge_{s}",
        diagram=diagram,
        modes=list(range(1, s + 1)),
        names={"X": ("L", TRIANGLE), "Y": ("R", TRIANGLE)},
    )


@lru_cache(maxsize=16)
def boring(p: int, s: int) -> GateAssignment:
    """Both copies of index r switch off in mode r, leaving X = Y."""
    gate = bridge_gate(p, s)
    partition = {(side, str(r)): r for side in ("L", "R") for r in range(1, s + 1)}
    data = {0: trivial(p, ["X", "Y"])}
    for r in range(1, s + 1):
        data[r] = const(p, ["X", "Y"])
    assignment = solve_assignment(gate, partition, data)
    logger.debug("Boring assignment of %s solved", gate.name)
    return assignment
