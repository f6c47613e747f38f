"""BigAgg^m: m aggregates H0..H(m-1) glued into a ring.

Consecutive aggregates alternately share their 11 and 10 triangle
leaves, so that the pins X_l = H_l;00;△ satisfy one alternating sum.
"""

from __future__ import annotations

import logging
from functools import lru_cache

from cs_certify.data.standard import bigsum, const, trivial
from cs_certify.diagrams.diagram import Diagram
from cs_certify.entailment.certificate import EntailmentCertificate
from cs_certify.entailment.replay import CertificateBuilder
from cs_certify.errors import ParameterError
from cs_certify.gates.aggregate import aggregate_gate, build_aggregate, corner, sumconst
from cs_certify.gates.gate import Gate, GateAssignment, GatePart, compose_assignment

logger = logging.getLogger(__name__)

RING = ["00", "10", "11"]


def bigagg_steps(m: int) -> list[tuple[list[tuple[str, ...]], dict]]:
    """The (CS leaves, relabel rules) pairs turning agg into BigAgg^m."""
    if m < 4 or m & (m - 1):
        raise ParameterError(f"BigAgg^m needs m a power of two >= 4, got {m}")
    steps: list[tuple[list[tuple[str, ...]], dict]] = [
        ([corner("11")], {("L",): ("H0",), ("R",): ("H1",)})
    ]
    width = 2
    while width < m // 2:
        rules: dict = {("L",): ()}
        for ell in range(width):
            rules[("R", f"H{ell}")] = (f"H{2 * width - 1 - ell}",)
        steps.append(([(f"H{width - 1}", *corner("10"))], rules))
        width *= 2
    rules = {("L",): ()}
    for ell in range(width):
        rules[("R", f"H{ell}")] = (f"H{m - 1 - ell}",)
    steps.append(([("H0", *corner("10")), (f"H{width - 1}", *corner("10"))], rules))
    return steps


@lru_cache(maxsize=16)
def build_bigagg(p: int, s: int, m: int) -> tuple[Diagram, EntailmentCertificate]:
    """``agg_s |=^{log2 m} BigAgg_s^m``."""
    agg, _ = build_aggregate(p, s)
    builder = CertificateBuilder(agg)
    for leaves, rules in bigagg_steps(m):
        builder.cs(leaves)
        builder.relabel(rules)
    logger.debug("Built BigAgg_%d^%d: %r", s, m, builder.current)
    return builder.current, builder.certificate()


@lru_cache(maxsize=16)
def bigagg_gate(p: int, s: int, m: int) -> Gate:
    diagram, _ = build_bigagg(p, s, m)
    sub = aggregate_gate(p, s, RING)
    return Gate(
        name=f"BigAgg_{s}^{m}",
        diagram=diagram,
        modes=list(range(1, s + 1)),
        names={f"X{ell}": (f"H{ell}", *corner("00")) for ell in range(m)},
        parts=[GatePart(prefix=(f"H{ell}",), gate=sub) for ell in range(m)],
    )


@lru_cache(maxsize=16)
def bigagg_sumconst(p: int, s: int, m: int) -> GateAssignment:
    """D_1 = BigSum(m): every aggregate sums in mode 1 and is constant elsewhere."""
    gate = bigagg_gate(p, s, m)
    pins = list(gate.names)
    data = {0: trivial(p, pins), 1: bigsum(p, m)}
    for r in range(2, s + 1):
        data[r] = const(p, pins)
    return compose_assignment(gate, [sumconst(p, s, RING, 1)] * m, data)
