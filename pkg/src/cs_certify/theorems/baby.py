"""U^3 |= Psi(a): the bilinear reformulation of U^3 control.

The chain runs gc_2 -> agg_2 -> IndAGate_2 -> AGate_2^k and finishes
with a morphism from diagram(Psi(a)) read off the ABilin assignment.
"""

from __future__ import annotations

import logging

from cs_certify.complexity.baby import baby_universal
from cs_certify.complexity.cs import cs_complexity, gc_universal
from cs_certify.data.standard import uk
from cs_certify.diagrams.constructions import diagram_of
from cs_certify.diagrams.morphisms import compose_diagram_morphisms, diagram_morphism_of
from cs_certify.entailment.replay import CertificateBuilder
from cs_certify.errors import ParameterError
from cs_certify.field.matrix import check_prime
from cs_certify.gates.agate import abilin, agate_gate, build_agate
from cs_certify.gates.aggregate import build_aggregate
from cs_certify.gates.gate import assignment_datum, assignment_morphism, verify_assignment
from cs_certify.gates.indagate import build_indagate
from cs_certify.theorems.report import PipelineReport, StageClock, finish

logger = logging.getLogger(__name__)

CORNER = ("000",)


def gate_size(a: int) -> int:
    """The least power of two k with |a| < 2^(k+1)."""
    k = 1
    while abs(a) >= 2 ** (k + 1):
        k *= 2
    return k


def baby_steps(a: int) -> int:
    return 5 + gate_size(a).bit_length() - 1


def _floor_log2(x: int) -> int:
    return x.bit_length() - 1


def stated_steps(a: int) -> int:
    """The larger of the two closed forms for the step count; 5 when |a| < 4."""
    a = abs(a)
    if a < 4:
        return 5
    first = 6 + _floor_log2(max(_floor_log2(a) - 1, 1))
    second = 6 + _floor_log2(_floor_log2(a - 1))
    return max(first, second)


def prove_baby(a: int, p: int) -> PipelineReport:
    """``U^3 |=^k Psi(a)`` with gamma(1) = (000, 0) and gamma(2) = (000, 1)."""
    check_prime(p)
    if p == 2:
        raise ParameterError("the bilinear reformulation needs p > 2")
    k_gate = gate_size(a)
    u3 = uk(p, 3)
    builder = CertificateBuilder(diagram_of(u3))
    clock = StageClock(builder)

    with clock.stage("U3 -> gc_2", bound=0):
        witness = cs_complexity(u3, CORNER, 2)
        builder.morph(diagram_morphism_of(gc_universal(u3, CORNER, witness)))
    with clock.stage("gc_2 -> agg_2", bound=2):
        builder.extend(build_aggregate(p, 2)[1])
    with clock.stage("agg_2 -> IndAGate_2", bound=3):
        builder.extend(build_indagate(p, 2)[1])
    with clock.stage(f"IndAGate_2 -> AGate_2^{k_gate}", bound=k_gate.bit_length() - 1):
        builder.extend(build_agate(p, 2, k_gate)[1])
    with clock.stage("AGate -> Psi", bound=0):
        gate = agate_gate(p, 2, k_gate)
        assignment = abilin(p, 2, k_gate, a)
        verify_assignment(gate, assignment).require()
        datum = assignment_datum(gate, assignment)
        universal = baby_universal(datum, "X", "Y", a)
        if universal is None:
            raise AssertionError("the ABilin datum admits no morphism from Psi(a)")
        builder.morph(
            compose_diagram_morphisms(
                assignment_morphism(gate, assignment), diagram_morphism_of(universal)
            )
        )

    expected = {("1",): (CORNER, 0), ("2",): (CORNER, 1)}
    for leaf, value in expected.items():
        if builder.gamma.get(leaf) != value:
            raise AssertionError(f"gamma at {leaf} is {builder.gamma.get(leaf)}, expected {value}")
    builder.weaken(list(expected))

    warnings = []
    stated = stated_steps(a)
    if builder.k > stated:
        message = f"k={builder.k} exceeds the closed form {stated} for a={a}"
        logger.warning(message)
        warnings.append(message)
    return finish(
        "baby",
        p,
        builder,
        clock,
        bound=baby_steps(a),
        warnings=warnings,
        parameters={"a": a, "k_gate": k_gate, "stated": stated},
    )
