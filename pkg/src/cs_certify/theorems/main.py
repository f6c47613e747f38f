"""Phi |= gc_{s(Phi, i0)}: Cauchy-Schwarz control at the true complexity.

Stages:

1. A copy of gc_{t_j} is stashed at every index j != i0, one CS step
   each, with t_j the CS complexity at j.
2. While some t_j exceeds s(Phi, i0) + 1, the largest one is lowered by
   one: the copy at j0 is discarded, a fresh copy of the diagram is
   stashed at j0 and grown into a StarGate centred on j0, whose
   assignment maps gc_{t_j0 - 1} into it.
3. A StarGate centred on i0 with degree s(Phi, i0) + 1 is built and
   gc_{s(Phi, i0)} is mapped into it.
"""

from __future__ import annotations

import logging
import math

from cs_certify.complexity.cs import (
    cs_complexity,
    diag_cs_complexity,
    gc_reduction,
    gc_universal,
)
from cs_certify.complexity.true import form_rows, integer_lift_bound, true_complexity
from cs_certify.data.datum import LinearDatum
from cs_certify.data.standard import gc
from cs_certify.diagrams.constructions import diagram_of
from cs_certify.diagrams.diagram import Diagram
from cs_certify.diagrams.labels import TRIANGLE, Label, as_label, fmt
from cs_certify.diagrams.morphisms import (
    DiagramMorphism,
    compose_diagram_morphisms,
    diagram_morphism_of,
)
from cs_certify.diagrams.surjectivity import section_at
from cs_certify.entailment.replay import CertificateBuilder
from cs_certify.entailment.stashing import discard_stash, reveal_stash, stash_token, unstash
from cs_certify.errors import HypothesisError
from cs_certify.field.matrix import FpMatrix, rank
from cs_certify.gates.gate import assignment_datum, assignment_morphism, verify_assignment
from cs_certify.gates.stargate import (
    StarGateParams,
    assign_stargate,
    build_stargate,
    choose_params,
    others,
    stargate_gate,
)
from cs_certify.theorems.report import PipelineReport, StageClock, finish

logger = logging.getLogger(__name__)

_TRIANGLE: Label = (TRIANGLE,)


# ---------------------------------------------------------------------------
# Hypotheses
# ---------------------------------------------------------------------------


def check_pairwise_independent(phi: LinearDatum) -> None:
    rows = form_rows(phi)
    labels = phi.labels
    for a, i in enumerate(labels):
        if not rows[i].any():
            raise HypothesisError(f"phi_{fmt(i)} is the zero form")
        for j in labels[a + 1 :]:
            pair = FpMatrix(phi.p, [[int(x) for x in rows[i]], [int(x) for x in rows[j]]])
            if rank(pair) < 2:
                raise HypothesisError(f"phi_{fmt(i)} and phi_{fmt(j)} are linearly dependent")


def complexities(phi: LinearDatum) -> tuple[dict[Label, int], dict[Label, int]]:
    """CS complexity and true complexity at every index."""
    cs_values: dict[Label, int] = {}
    true_values: dict[Label, int] = {}
    for j in phi.labels:
        witness = cs_complexity(phi, j)
        if witness is None:
            raise HypothesisError(f"phi_{fmt(j)} has no finite CS complexity")
        cs_values[j] = witness.s
        true_values[j] = true_complexity(phi, j, witness.s).s
    return cs_values, true_values


def lift_bound(phi: LinearDatum, declared: dict | None = None) -> int:
    """L: the largest integer coefficient, declared or lifted symmetrically."""
    if declared:
        return max([1] + [abs(int(a)) for row in declared.values() for a in row])
    return integer_lift_bound([r.tolist() for r in form_rows(phi).values()], phi.p)


def formula_value(count: int, big_l: int) -> float:
    """k^3 (log2 k + log2 log2 (10 L)) for k forms with coefficients bounded by L."""
    return count**3 * (math.log2(count) + math.log2(math.log2(10 * big_l)))


# ---------------------------------------------------------------------------
# Stages
# ---------------------------------------------------------------------------


def cs_dual(builder: CertificateBuilder, j, t: int) -> int:
    """``D |=^1 D +_{j<->△} gc_t``: stash a copy of gc_t at the leaf j.

    Returns the CS complexity found at j, which may be below t.
    """
    current = builder.current
    j = current.resolve(j)
    found = diag_cs_complexity(current, j, t)
    if found is None:
        raise HypothesisError(f"CS complexity at {fmt(j)} exceeds {t}")
    s, morph = found
    plain = CertificateBuilder(current)
    plain.morph(morph)
    if s < t:
        plain.morph(diagram_morphism_of(gc_reduction(current.p, t, s)))
    builder.cs([j])
    builder.relabel({("L",): (), ("R",): (stash_token(j),)})
    reveal_stash(plain.certificate(), current, j, [j], [_TRIANGLE], into=builder)
    builder.relabel({(stash_token(_TRIANGLE),): (), (): (stash_token(j),)})
    logger.debug("Stashed gc_%d at %s (complexity %d)", t, fmt(j), s)
    return s


def stargate_to_gc(
    phi: LinearDatum,
    i0,
    params: StarGateParams,
    diagram: Diagram,
    *,
    declared: dict | None = None,
) -> DiagramMorphism:
    """``diagram(gc_{s-1}) -> StarGate`` with △ sent to F0;i0.

    The StarGate assignment has D_r = trivial({i0}) in every mode, so its
    datum has CS complexity s - 1 at i0.
    """
    p, s = phi.p, params.s
    i0 = as_label(i0)
    gate = stargate_gate(phi, i0, params, diagram=diagram)
    assignment = assign_stargate(phi, i0, params, gate=gate, declared=declared)
    verify_assignment(gate, assignment).require()
    datum = assignment_datum(gate, assignment)
    witness = cs_complexity(datum, i0, s - 1)
    if witness is None:
        raise AssertionError(f"StarGate datum has CS complexity above {s - 1} at {fmt(i0)}")
    into = diagram_morphism_of(gc_universal(datum, i0, witness))
    if witness.s < s - 1:
        into = compose_diagram_morphisms(
            into, diagram_morphism_of(gc_reduction(p, s - 1, witness.s))
        )
    return compose_diagram_morphisms(assignment_morphism(gate, assignment), into)


def grow_stargate(
    builder: CertificateBuilder,
    phi: LinearDatum,
    centre: Label,
    params: StarGateParams,
    degrees: dict[Label, int],
    *,
    declared: dict | None = None,
) -> None:
    """Build the StarGate centred on ``centre`` and map gc_{s-1} into it."""
    diagram, cert = build_stargate(phi, centre, params, degrees)
    builder.extend(cert)
    builder.morph(stargate_to_gc(phi, centre, params, diagram, declared=declared))


def lower_degree(
    builder: CertificateBuilder,
    phi: LinearDatum,
    i0: Label,
    j0: Label,
    degrees: dict[Label, int],
    *,
    declared: dict | None = None,
) -> None:
    """Replace the copy of gc_s stashed at j0 by a copy of gc_{s-1}.

    Every other stash has degree at most s.  Costs 2 + the StarGate
    build count of CS steps.
    """
    p = phi.p
    s = degrees[j0]
    small = diagram_of(gc(p, s))
    opened = unstash(builder.current, j0)
    builder.morph(
        discard_stash(
            opened,
            small,
            j0,
            _TRIANGLE,
            left_prefix=None,
            right_prefix=stash_token(j0),
            section=section_at(small, _TRIANGLE),
        )
    )
    builder.cs([j0])
    builder.relabel({("L",): (), ("R",): (stash_token(j0),)})

    plain = CertificateBuilder(opened)
    cs_dual(plain, i0, s)
    centred = {j: t for j, t in degrees.items() if j != j0}
    centred[i0] = s
    params = choose_params(phi, j0, s, declared=declared)
    grow_stargate(plain, phi, j0, params, centred, declared=declared)

    reveal_stash(
        plain.certificate(),
        opened,
        j0,
        [j0],
        [_TRIANGLE],
        section=section_at(opened, j0),
        into=builder,
    )
    builder.relabel({(stash_token(_TRIANGLE),): (), (): (stash_token(j0),)})
    degrees[j0] = s - 1


def pick_index(phi: LinearDatum, degrees: dict[Label, int]) -> Label:
    """The index with the largest degree, the first in label order on ties."""
    order = {j: n for n, j in enumerate(phi.labels)}
    return max(degrees, key=lambda j: (degrees[j], -order[j]))


# ---------------------------------------------------------------------------
# Driver
# ---------------------------------------------------------------------------


def prove_main(phi: LinearDatum, i0, *, declared: dict | None = None) -> PipelineReport:
    """``Phi |=^k gc_{s(Phi, i0)}`` with gamma(△) = (i0, 0) or (i0, 1).

    Raises HypothesisError when two forms are dependent or when
    s(Phi) > s(Phi, i0) + 1.
    """
    i0 = as_label(i0)
    arms = others(phi, i0)
    check_pairwise_independent(phi)
    cs_values, true_values = complexities(phi)
    s0 = true_values[i0]
    s_phi = max(true_values.values())
    if s_phi > s0 + 1:
        raise HypothesisError(f"s(Φ)={s_phi} > s(Φ,{fmt(i0)})+1")
    logger.info(
        "Forms %d, s_cs(%s)=%d, s(%s)=%d, s(Phi)=%d",
        len(phi), fmt(i0), cs_values[i0], fmt(i0), s0, s_phi,
    )
    big_l = lift_bound(phi, declared)
    builder = CertificateBuilder(diagram_of(phi))
    clock = StageClock(builder)
    extra = {
        "formula": formula_value(len(phi), big_l),
        "parameters": {"index": fmt(i0), "s": s0, "s_cs": cs_values[i0], "L": big_l},
    }

    if cs_values[i0] <= s0:
        with clock.stage("gc universal", bound=0):
            witness = cs_complexity(phi, i0)
            builder.morph(diagram_morphism_of(gc_universal(phi, i0, witness)))
        builder.weaken([_TRIANGLE])
        return finish("main", phi.p, builder, clock, bound=0, **extra)

    target = s0 + 1
    degrees = {j: max(1, cs_values[j]) for j in arms}
    bound = len(arms)
    with clock.stage("stash duals", bound=len(arms)):
        for j in arms:
            cs_dual(builder, j, degrees[j])

    while max(degrees.values()) > target:
        j0 = pick_index(phi, degrees)
        s = degrees[j0]
        params = choose_params(phi, j0, s, declared=declared)
        step = 2 + params.step_bound(len(arms))
        bound += step
        with clock.stage(f"lower {fmt(j0)} from {s}", bound=step):
            lower_degree(builder, phi, i0, j0, degrees, declared=declared)

    params = choose_params(phi, i0, target, declared=declared)
    step = params.step_bound(len(arms))
    bound += step
    with clock.stage(f"StarGate at {fmt(i0)}", bound=step):
        grow_stargate(builder, phi, i0, params, degrees, declared=declared)

    if builder.gamma.get(_TRIANGLE, (None, 0))[0] != i0:
        raise AssertionError(f"gamma(△) does not point at {fmt(i0)}")
    builder.weaken([_TRIANGLE])
    return finish("main", phi.p, builder, clock, bound=bound, **extra)
