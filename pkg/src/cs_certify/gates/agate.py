"""The arithmetic gate AGate^k: a chain of k individual gates G0..G(k-1).

Each doubling glues two copies of the current chain along the Y pins of
its last gate and reflects the right copy, so gate Gi of the right side
becomes G(2c-1-i) with Aj, Bj renamed to A(5-j), B(5-j).
"""

from __future__ import annotations

import logging
from functools import lru_cache

from cs_certify.data.standard import const, lag, trivial
from cs_certify.diagrams.diagram import Diagram
from cs_certify.diagrams.labels import TRIANGLE
from cs_certify.entailment.certificate import EntailmentCertificate
from cs_certify.entailment.replay import CertificateBuilder
from cs_certify.errors import ParameterError
from cs_certify.gates.gate import (
    Gate,
    GateAssignment,
    GatePart,
    complete_permutation,
    compose_assignment,
    permute_modes,
)
from cs_certify.gates.indagate import PARTS, build_indagate, indagate_gate, initial, middle, mirror

logger = logging.getLogger(__name__)


def _is_power_of_two(k: int) -> bool:
    return k >= 1 and k & (k - 1) == 0


@lru_cache(maxsize=16)
def build_agate(p: int, s: int, k: int) -> tuple[Diagram, EntailmentCertificate]:
    """``IndAGate_s |=^{log2 k} AGate_s^k``, starting from the IndAGate diagram."""
    if not _is_power_of_two(k):
        raise ParameterError(f"AGate^k needs k a power of two, got {k}")
    start, _ = build_indagate(p, s)
    builder = CertificateBuilder(start)
    builder.relabel({(): ("G0",)})
    c = 1
    while c < k:
        last = f"G{c - 1}"
        builder.cs([(last, "A4", "00", TRIANGLE), (last, "B4", "00", TRIANGLE)])
        rules = {("L",): ()}
        for i in range(c):
            for name in PARTS:
                rules[("R", f"G{i}", name)] = (f"G{2 * c - 1 - i}", mirror(name))
        builder.relabel(rules)
        c *= 2
    logger.debug("Built AGate_%d^%d: %r", s, k, builder.current)
    return builder.current, builder.certificate()


@lru_cache(maxsize=16)
def agate_gate(p: int, s: int, k: int) -> Gate:
    diagram, _ = build_agate(p, s, k)
    parts = [
        GatePart(prefix=(f"G{ell}",), gate=indagate_gate(p, s, ell == 0, ell == k - 1))
        for ell in range(k)
    ]
    return Gate(
        name=f"AGate_{s}^{k}",
        diagram=diagram,
        modes=list(range(1, s + 1)),
        names={
            "X": ("G0", "A1", "00", TRIANGLE),
            "Y": (f"G{k - 1}", "A4", "00", TRIANGLE),
        },
        parts=parts,
    )


def digits(a: int, count: int) -> list[int]:
    """The binary digits of |a|, least significant first."""
    return [(abs(a) >> t) & 1 for t in range(count)]


@lru_cache(maxsize=128)
def _abilin(p: int, s: int, k: int, a: int) -> GateAssignment:
    gate = agate_gate(p, s, k)
    bits = digits(a, k + 1)
    sign = -1 if a < 0 else 1
    subs = [initial(p, s, bits[0], bits[1], sign, final=k == 1)]
    subs += [middle(p, s, bits[ell + 1], final=ell == k - 1) for ell in range(1, k)]
    data = {0: trivial(p, ["X", "Y"]), 1: lag(p, a, "A"), 2: lag(p, a, "B")}
    for r in range(3, s + 1):
        data[r] = const(p, ["X", "Y"])
    return compose_assignment(gate, subs, data)


def abilin(
    p: int, s: int, k: int, a: int, modes: tuple[int, int] = (1, 2)
) -> GateAssignment:
    """ABilin_{s;i,j}^k(a): D_i = lag(a, A), D_j = lag(a, B), Const elsewhere.

    The multiplier is read in binary along the chain; |a| < 2^(k+1).
    """
    if abs(a) >= 2 ** (k + 1):
        raise ParameterError(f"|a| = {abs(a)} does not fit AGate^{k} (needs < {2 ** (k + 1)})")
    base = _abilin(p, s, k, a)
    if tuple(modes) == (1, 2):
        return base
    i, j = modes
    return permute_modes(base, complete_permutation(range(1, s + 1), {1: i, 2: j}))
