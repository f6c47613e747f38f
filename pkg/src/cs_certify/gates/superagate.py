"""SuperAGate^{k,m}: m arithmetic gates H0..H(m-1) in a row.

Built from AGate^k by the same doubling and reflection as the chain
inside it; the reflection reverses both the H and the G indices.  Its
amulti assignment multiplies through the row, one mode at a time.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Sequence
from functools import lru_cache

from cs_certify.data.standard import lag, trivial
from cs_certify.diagrams.diagram import Diagram
from cs_certify.diagrams.labels import TRIANGLE
from cs_certify.entailment.certificate import EntailmentCertificate
from cs_certify.entailment.replay import CertificateBuilder
from cs_certify.errors import ParameterError
from cs_certify.gates.agate import _is_power_of_two, abilin, agate_gate, build_agate
from cs_certify.gates.gate import Gate, GateAssignment, GatePart, compose_assignment
from cs_certify.gates.indagate import PARTS, mirror

logger = logging.getLogger(__name__)


def row_length(s: int) -> int:
    """The least power of two that is at least max(1, s - 1)."""
    need = max(1, s - 1)
    return 1 << (need - 1).bit_length()


def _y(k: int) -> tuple[str, ...]:
    return (f"G{k - 1}", "A4", "00", TRIANGLE)


@lru_cache(maxsize=16)
def build_superagate(p: int, s: int, k: int, m: int) -> tuple[Diagram, EntailmentCertificate]:
    """``AGate^k |=^{log2 m} SuperAGate^{k,m}``."""
    if not _is_power_of_two(m):
        raise ParameterError(f"SuperAGate needs m a power of two, got {m}")
    start, _ = build_agate(p, s, k)
    builder = CertificateBuilder(start)
    builder.relabel({(): ("H0",)})
    c = 1
    while c < m:
        builder.cs([(f"H{c - 1}", *_y(k))])
        rules = {("L",): ()}
        for i in range(c):
            for g in range(k):
                for name in PARTS:
                    rules[("R", f"H{i}", f"G{g}", name)] = (
                        f"H{2 * c - 1 - i}",
                        f"G{k - 1 - g}",
                        mirror(name),
                    )
        builder.relabel(rules)
        c *= 2
    logger.debug("Built SuperAGate_%d^{%d,%d}: %r", s, k, m, builder.current)
    return builder.current, builder.certificate()


@lru_cache(maxsize=16)
def superagate_gate(p: int, s: int, k: int, m: int) -> Gate:
    diagram, _ = build_superagate(p, s, k, m)
    sub = agate_gate(p, s, k)
    return Gate(
        name=f"SuperAGate_{s}^{{{k},{m}}}",
        diagram=diagram,
        modes=list(range(1, s + 1)),
        names={
            "X": ("H0", "G0", "A1", "00", TRIANGLE),
            "Y": (f"H{m - 1}", *_y(k)),
        },
        parts=[GatePart(prefix=(f"H{i}",), gate=sub) for i in range(m)],
    )


def amulti(
    p: int, s: int, k: int, multipliers: Sequence[int], m: int | None = None
) -> GateAssignment:
    """AMulti(a_2, ..., a_s): D_1 = lag(a_2...a_s, B) and D_r = lag(a_r, A) for r >= 2.

    Gate Hi carries a_{i+2} between modes i+2 and 1; the remaining gates
    pass mode 1 through unchanged.
    """
    a = [int(x) for x in multipliers]
    if len(a) != s - 1:
        raise ParameterError(f"AMulti_{s} takes {s - 1} multipliers, got {len(a)}")
    if m is None:
        m = row_length(s)
    if m < s - 1:
        raise ParameterError(f"SuperAGate row of {m} gates cannot carry {s - 1} multipliers")
    gate = superagate_gate(p, s, k, m)
    subs = []
    for i in range(m):
        if i <= s - 2:
            subs.append(abilin(p, s, k, a[i], modes=(i + 2, 1)))
        else:
            subs.append(abilin(p, s, k, 1, modes=(1, 2)))
    data = {0: trivial(p, ["X", "Y"]), 1: lag(p, math.prod(a), "B")}
    for r in range(2, s + 1):
        data[r] = lag(p, a[r - 2], "A")
    return compose_assignment(gate, subs, data)
