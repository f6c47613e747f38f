"""StarGate: n spokes of a system Phi wired through SuperAGates to central BigAggs.

For every spoke l there is a copy Fl of diagram(Phi); for every other
index j and spoke l, Fl;j runs through a bridge Br[j,l] and a SuperAGate
A[j,l] into the aggregate ring Bag[j] at its vertex Hl;00;△.  The only
pin is F0;i0.

The build starts from Phi with a copy of gc_{t_j} stashed at every other
index j.  Each stash is grown into a bridge, a SuperAGate and one
aggregate by lifting the plain certificate through the rest of the
diagram; then the whole picture is doubled log2 n times while the
aggregates close into rings.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Mapping
from functools import lru_cache

from pydantic import BaseModel, Field, model_validator

from cs_certify.complexity.cs import gc_reduction
from cs_certify.complexity.dual import dual_tensor
from cs_certify.complexity.true import monomials, symmetric_dim
from cs_certify.data.datum import LinearDatum
from cs_certify.data.standard import gc, trivial
from cs_certify.diagrams.constructions import (
    HUB,
    diagram_of,
    relabel_diagram,
    self_join,
)
from cs_certify.diagrams.diagram import Diagram
from cs_certify.diagrams.labels import TRIANGLE, Label, PrefixRules, as_label, fmt, prefixed
from cs_certify.diagrams.morphisms import diagram_morphism_of
from cs_certify.diagrams.surjectivity import section_at
from cs_certify.entailment.certificate import EntailmentCertificate
from cs_certify.entailment.replay import CertificateBuilder
from cs_certify.entailment.stashing import (
    discard_stash,
    reveal_stash,
    stash,
    stash_token,
    unstash,
)
from cs_certify.errors import DiagramError, ParameterError
from cs_certify.field.matrix import FpMatrix, right_inverse
from cs_certify.gates.agate import _is_power_of_two, build_agate
from cs_certify.gates.aggregate import build_aggregate, corner
from cs_certify.gates.bigagg import bigagg_gate, bigagg_steps, bigagg_sumconst
from cs_certify.gates.bridge import boring, bridge_gate, build_bridge
from cs_certify.gates.gate import (
    Gate,
    GateAssignment,
    GatePart,
    compose_assignment,
    passthrough_assignment,
    pin_section,
)
from cs_certify.gates.indagate import build_indagate
from cs_certify.gates.superagate import amulti, build_superagate, row_length, superagate_gate

logger = logging.getLogger(__name__)

# The free end of the bridge in a grown stash, joined to Phi at j.
ENTRY: Label = ("A", "L", TRIANGLE)


class StarGateParams(BaseModel):
    """Sizes of a StarGate: SuperAGate^{k,m} on every arm, n spokes."""

    s: int = Field(ge=2)
    k: int = Field(ge=1)
    m: int = Field(ge=1)
    n: int = Field(ge=4)

    model_config = {"frozen": True}

    @model_validator(mode="after")
    def _powers_of_two(self) -> StarGateParams:
        for name in ("k", "m", "n"):
            value = getattr(self, name)
            if not _is_power_of_two(value):
                raise ParameterError(f"{name} = {value} is not a power of two")
        return self

    @property
    def arm_steps(self) -> int:
        """CS steps spent growing one stash."""
        return 9 + int(math.log2(self.k)) + int(math.log2(self.m))

    def step_bound(self, arms: int) -> int:
        return arms * self.arm_steps + int(math.log2(self.n))


def choose_params(
    phi: LinearDatum, i0, s: int, *, declared: dict | None = None
) -> StarGateParams:
    """The least powers of two with 2L^2 < 2^(k+1), s - 1 <= m and n >= C(d+s-1, s)."""
    basis = dual_tensor(phi, i0, s, declared=declared).basis
    k = 1
    while basis.bound >= 2 ** (k + 1):
        k *= 2
    n = 4
    while n < symmetric_dim(phi.v_dim, s):
        n *= 2
    return StarGateParams(s=s, k=k, m=row_length(s), n=n)


def others(phi: LinearDatum, i0) -> list[Label]:
    i0 = as_label(i0)
    if i0 not in phi:
        raise ParameterError(f"{fmt(i0)} is not an index of the system")
    return [j for j in phi.labels if j != i0]


def _dot(j: Label) -> str:
    return ".".join(j)


def spoke(ell: int) -> str:
    return f"F{ell}"


def bridge_name(j: Label, ell: int) -> str:
    return f"Br[{_dot(j)},{ell}]"


def arm_name(j: Label, ell: int) -> str:
    return f"A[{_dot(j)},{ell}]"


def bag_name(j: Label) -> str:
    return f"Bag[{_dot(j)}]"


# ---------------------------------------------------------------------------
# Sections
# ---------------------------------------------------------------------------


def _graft(
    out: dict[Label, FpMatrix],
    diagram: Diagram,
    prefix: str | None,
    section: Mapping[Label, FpMatrix],
    at: FpMatrix,
) -> None:
    """Copy a section of a piece of ``diagram`` under ``prefix``, composed with ``at``."""
    for y, m in section.items():
        out[diagram.resolve(prefixed(prefix, y))] = m @ at


def _zeros(out: dict[Label, FpMatrix], diagram: Diagram, prefix: str, piece: Diagram) -> None:
    for y in piece.vertices:
        x = diagram.resolve(prefixed(prefix, y))
        out.setdefault(x, FpMatrix.zeros(diagram.p, diagram.dim(x), 1))


def _superagate_section(p: int, s: int, k: int, m: int, pin: str) -> dict[Label, FpMatrix]:
    return pin_section(superagate_gate(p, s, k, m), amulti(p, s, k, [1] * (s - 1), m), pin)


# ---------------------------------------------------------------------------
# Growing one stash
# ---------------------------------------------------------------------------


@lru_cache(maxsize=8)
def _superagate_certificate(p: int, s: int, k: int, m: int) -> EntailmentCertificate:
    """gc_s |= SuperAGate^{k,m} through agg, IndAGate and AGate^k."""
    builder = CertificateBuilder(diagram_of(gc(p, s)))
    builder.extend(build_aggregate(p, s)[1])
    builder.extend(build_indagate(p, s)[1])
    builder.extend(build_agate(p, s, k)[1])
    builder.extend(build_superagate(p, s, k, m)[1])
    return builder.certificate()


def _bridge_to_aggregate(p: int, s: int) -> EntailmentCertificate:
    """Bridge |=^0 gc_s |=^2 agg, dropping the L copy; gamma(00;△) = R;△."""
    g = diagram_of(gc(p, s))
    last = (str(s + 1),)
    builder = CertificateBuilder(build_bridge(p, s)[0])
    builder.morph(
        discard_stash(
            g, g, last, last, left_prefix="R", right_prefix="L", section=section_at(g, last)
        )
    )
    builder.extend(build_aggregate(p, s)[1])
    return builder.certificate()


@lru_cache(maxsize=8)
def grow_stash(p: int, s: int, k: int, m: int) -> tuple[Diagram, EntailmentCertificate]:
    """``gc_s |=^M D`` with M = 9 + log2 k + log2 m.

    D is a SuperAGate with a bridge under ``A`` joined at its X pin and an
    aggregate under ``B`` joined at 00;△ to its Y pin; gamma(A;L;△) is
    the triangle of gc_s.
    """
    sa = superagate_gate(p, s, k, m)
    bridge = build_bridge(p, s)[0]
    g = diagram_of(gc(p, s))
    last = (str(s + 1),)
    end = ("R", TRIANGLE)
    builder = CertificateBuilder(g)

    # Two CS steps give four copies of gc_s in a row; the outer left one goes.
    builder.cs([last])
    builder.cs([end])
    builder.relabel(
        {("L", "R"): (), ("R",): (stash_token((TRIANGLE,)),), ("L", "L"): ("D",)}
    )
    builder.morph(
        discard_stash(
            stash(g, bridge, (TRIANGLE,), end),
            g,
            last,
            last,
            left_prefix=None,
            right_prefix="D",
            section=section_at(g, last),
        )
    )

    # Grow the plain gc_s into the SuperAGate, with bridges stashed at X and Y.
    x, y = sa.pin("X"), sa.pin("Y")
    reveal_stash(
        _superagate_certificate(p, s, k, m),
        bridge,
        end,
        [(TRIANGLE,)],
        [x, y],
        section=section_at(bridge, end),
        into=builder,
    )

    # Turn the bridge at Y into an aggregate with everything else stashed at its end.
    at_x = stash_token(x)
    builder.relabel({(stash_token(y),): (), (): (stash_token(end),)})
    c1 = stash(sa.diagram, bridge, x, end)
    c1_section: dict[Label, FpMatrix] = {}
    _graft(c1_section, c1, None, _superagate_section(p, s, k, m, "Y"), FpMatrix.identity(p, 1))
    _zeros(c1_section, c1, at_x, bridge)
    reveal_stash(
        _bridge_to_aggregate(p, s),
        c1,
        y,
        [end],
        [corner("00")],
        section=c1_section,
        into=builder,
    )
    agg = stash_token(corner("00"))
    builder.relabel({(agg,): (), (agg, at_x): ("A",), (): ("B",)})
    logger.info("Grew a stash: %r over %d CS steps", builder.current, builder.k)
    return builder.current, builder.certificate()


@lru_cache(maxsize=8)
def grown_section(p: int, s: int, k: int, m: int) -> dict[Label, FpMatrix]:
    """A section of the grown stash at its entry, zero on the aggregate."""
    grown, _ = grow_stash(p, s, k, m)
    bridge = build_bridge(p, s)[0]
    through = section_at(bridge, ("L", TRIANGLE))
    out: dict[Label, FpMatrix] = {}
    _graft(out, grown, "A", through, FpMatrix.identity(p, 1))
    at_x = through[bridge.resolve(("R", TRIANGLE))]
    _graft(out, grown, None, _superagate_section(p, s, k, m, "X"), at_x)
    _zeros(out, grown, "B", build_aggregate(p, s)[0])
    return out


# ---------------------------------------------------------------------------
# Building the StarGate
# ---------------------------------------------------------------------------


def _degrees(phi: LinearDatum, i0, s: int, t: Mapping | None) -> dict[Label, int]:
    t = {as_label(j): int(v) for j, v in (t or {}).items()}
    out = {}
    for j in others(phi, i0):
        out[j] = t.get(j, s)
        if not 1 <= out[j] <= s:
            raise ParameterError(f"stash degree at {fmt(j)} must lie in [1, {s}], got {out[j]}")
    return out


def boosted(phi: LinearDatum, i0, s: int, t: Mapping | None = None) -> Diagram:
    """Phi with a copy of gc_{t_j} stashed at every index j other than i0."""
    out = diagram_of(phi)
    for j, tj in _degrees(phi, i0, s, t).items():
        out = stash(out, diagram_of(gc(phi.p, tj)), j, (TRIANGLE,))
    return out


def _context_section(
    context: Diagram, phi: LinearDatum, j: Label, pieces: Mapping[Label, Mapping]
) -> dict[Label, FpMatrix]:
    """A section of Phi-with-stashes at j: lift through phi_j, then fill each stash."""
    u = right_inverse(phi.phi(j))
    if u is None:
        raise DiagramError(f"phi_{fmt(j)} is not surjective", kind="surjectivity", where=j)
    out = {context.resolve(HUB): u}
    for i in phi.labels:
        out[context.resolve(i)] = phi.phi(i) @ u
    for other, section in pieces.items():
        if other != j:
            _graft(out, context, stash_token(other), section, out[context.resolve(other)])
    return out


def _ring_steps(arms: list[Label], n: int) -> list[tuple[list[Label], dict]]:
    """The BigAgg doublings, run on every arm's aggregate at once."""
    out = []
    for leaves, rules in bigagg_steps(n):
        shared = [
            (*leaf[:-2], stash_token(j), "B", *leaf[-2:]) for leaf in leaves for j in arms
        ]
        out.append((shared, rules))
    return out


def _final_rules(arms: list[Label], n: int) -> dict[Label, Label]:
    rules: dict[Label, Label] = {}
    for ell in range(n):
        h = f"H{ell}"
        rules[(h,)] = (spoke(ell),)
        for j in arms:
            token = stash_token(j)
            rules[(h, token)] = (arm_name(j, ell),)
            rules[(h, token, "A")] = (bridge_name(j, ell),)
            rules[(h, token, "B")] = (bag_name(j), h)
    return rules


def build_stargate(
    phi: LinearDatum, i0, params: StarGateParams, t: Mapping | None = None
) -> tuple[Diagram, EntailmentCertificate]:
    """``D((t_j)) |= StarGate`` with gamma(F0;i0) = i0.

    ``t`` gives the degree of the copy of gc stashed at each j (default s).
    The CS count is at most |I'| (9 + log2 k + log2 m) + log2 n.
    """
    p, s, k, m, n = phi.p, params.s, params.k, params.m, params.n
    degrees = _degrees(phi, i0, s, t)
    arms = list(degrees)
    builder = CertificateBuilder(boosted(phi, i0, s, degrees))
    grown, grow_cert = grow_stash(p, s, k, m)
    grown_sec = grown_section(p, s, k, m)
    pieces: dict[Label, Mapping] = {}
    for j, tj in degrees.items():
        small = diagram_of(gc(p, tj))
        pieces[j] = section_at(small, (TRIANGLE,))

    for j in arms:
        token = stash_token(j)
        context = unstash(builder.current, j)
        builder.relabel({(token,): (), (): (stash_token((TRIANGLE,)),)})

        plain = CertificateBuilder(diagram_of(gc(p, degrees[j])))
        if degrees[j] < s:
            plain.morph(diagram_morphism_of(gc_reduction(p, s, degrees[j])))
        plain.extend(grow_cert)
        reveal_stash(
            plain.certificate(),
            context,
            j,
            [(TRIANGLE,)],
            [ENTRY],
            section=_context_section(context, phi, j, pieces),
            into=builder,
        )
        builder.relabel({(stash_token(ENTRY),): (), (): (token,)})
        pieces[j] = grown_sec
        logger.debug("Grew the arm at %s: k=%d", fmt(j), builder.k)

    for shared, rules in _ring_steps(arms, n):
        builder.cs(shared)
        builder.relabel(rules)
    builder.relabel(_final_rules(arms, n))
    bound = params.step_bound(len(arms))
    if builder.k > bound:
        raise AssertionError(f"StarGate build used {builder.k} CS steps, bound {bound}")
    logger.info("Built StarGate over %d arms: %r, k=%d", len(arms), builder.current, builder.k)
    return builder.current, builder.certificate()


def stargate_diagram(phi: LinearDatum, i0, params: StarGateParams) -> Diagram:
    """The StarGate diagram assembled directly, without a certificate."""
    grown, _ = grow_stash(phi.p, params.s, params.k, params.m)
    arms = others(phi, i0)
    out = diagram_of(phi)
    for j in arms:
        out = stash(out, grown, j, ENTRY)
    for shared, rules in _ring_steps(arms, params.n):
        out = relabel_diagram(self_join(out, shared), PrefixRules(rules))[0]
    return relabel_diagram(out, PrefixRules(_final_rules(arms, params.n)))[0]


# ---------------------------------------------------------------------------
# Gate and assignment
# ---------------------------------------------------------------------------


def phi_gate(phi: LinearDatum, s: int, pins) -> Gate:
    """diagram(Phi) as a gate whose pins are the given indices."""
    return Gate(
        name="Phi",
        diagram=diagram_of(phi),
        modes=list(range(1, s + 1)),
        names={fmt(as_label(i)): as_label(i) for i in pins},
    )


def stargate_gate(
    phi: LinearDatum, i0, params: StarGateParams, diagram: Diagram | None = None
) -> Gate:
    """The StarGate with modes 1..s and the single pin F0;i0."""
    p, s, k, m, n = phi.p, params.s, params.k, params.m, params.n
    i0 = as_label(i0)
    arms = others(phi, i0)
    if diagram is None:
        diagram = stargate_diagram(phi, i0, params)
    centre = phi_gate(phi, s, phi.labels)
    outer = phi_gate(phi, s, arms)
    parts = [
        GatePart(prefix=(spoke(ell),), gate=centre if ell == 0 else outer) for ell in range(n)
    ]
    for j in arms:
        parts.append(GatePart(prefix=(bag_name(j),), gate=bigagg_gate(p, s, n)))
        for ell in range(n):
            parts.append(GatePart(prefix=(bridge_name(j, ell),), gate=bridge_gate(p, s)))
            parts.append(GatePart(prefix=(arm_name(j, ell),), gate=superagate_gate(p, s, k, m)))
    return Gate(
        name=f"StarGate_{s}^{{{k},{m},{n}}}",
        diagram=diagram,
        modes=list(range(1, s + 1)),
        names={fmt(i0): (spoke(0), *i0)},
        parts=parts,
    )


def check_params(phi: LinearDatum, params: StarGateParams, bound: int) -> None:
    """Raise ParameterError naming the first size condition that fails."""
    s, k, m, n = params.s, params.k, params.m, params.n
    need = symmetric_dim(phi.v_dim, s)
    if n < need:
        raise ParameterError(f"n >= C(d+s-1, s) fails: n = {n}, C(d+s-1, s) = {need}")
    if bound >= 2 ** (k + 1):
        raise ParameterError(f"2L^2 < 2^(k+1) fails: 2L^2 = {bound}, k = {k}")
    if m < s - 1:
        raise ParameterError(f"s - 1 <= m fails: s = {s}, m = {m}")
    if n % 2:
        raise ParameterError(f"n must be even, got {n}")


def assign_stargate(
    phi: LinearDatum,
    i0,
    params: StarGateParams,
    *,
    gate: Gate | None = None,
    declared: dict | None = None,
) -> GateAssignment:
    """An assignment of the StarGate with D_r = trivial({i0}) in every mode.

    Spoke l stands for the l-th sorted index tuple tau over the adapted
    basis e_1..e_d; arm A[j,l] multiplies by phi_j(e_tau_r) in mode r.
    Raises HypothesisError when phi_i0^s is in the span of the other
    tensor powers.
    """
    p, s, k, m, n = phi.p, params.s, params.k, params.m, params.n
    i0 = as_label(i0)
    arms = others(phi, i0)
    basis = dual_tensor(phi, i0, s, declared=declared).basis
    check_params(phi, params, basis.bound)
    if gate is None:
        gate = stargate_gate(phi, i0, params)
    taus = monomials(phi.v_dim, s)

    subs: list[GateAssignment] = []
    for ell in range(n):
        part = gate.parts[ell].gate
        if ell == 0:
            partition = {}
        elif ell < len(taus):
            partition = {i0: next(r for r in range(1, s + 1) if taus[ell][r - 1] != 0)}
        else:
            partition = {i0: 1}
        subs.append(passthrough_assignment(part, partition, phi))
    for j in arms:
        subs.append(bigagg_sumconst(p, s, n))
        for ell in range(n):
            if ell < len(taus):
                a = [basis.integer_values[j][taus[ell][r - 1]] for r in range(1, s + 1)]
            else:
                a = [0] * s
            subs.append(boring(p, s))
            subs.append(amulti(p, s, k, a[1:], m))
    data = {r: trivial(p, [i0]) for r in range(s + 1)}
    assignment = compose_assignment(gate, subs, data)
    logger.info(
        "Assigned %s: %d parts, %d toggles", gate.name, len(gate.parts), len(assignment.partition)
    )
    return assignment
