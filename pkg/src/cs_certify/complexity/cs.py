"""Cauchy-Schwarz complexity and the generalized-convolution universal morphism.

Phi has CS complexity at most s at i when the other indices split into
s + 1 parts S_r, each admitting mu_r: W_i -> V with phi_i mu_r = 1 and
phi_j mu_r = 0 for j in S_r.  Such mu_r exists iff S_r is *good*:
phi_i maps the common kernel of S_r onto W_i.  Goodness is closed under
taking subsets, so a minimal cover by good sets is a minimal partition.
"""

from __future__ import annotations

import logging
from collections.abc import Sequence

from pydantic import BaseModel, Field, field_validator

from cs_certify.config import resolve_cap
from cs_certify.data.datum import LinearDatum
from cs_certify.data.morphisms import DatumMorphism, restrict, verify_datum_morphism
from cs_certify.data.standard import gc
from cs_certify.diagrams.constructions import datum_of
from cs_certify.diagrams.diagram import Diagram
from cs_certify.diagrams.labels import TRIANGLE, ZEROI, Label, as_label, fmt
from cs_certify.diagrams.morphisms import DiagramMorphism, datum_to_diagram_morphism
from cs_certify.errors import CapExceededError, DatumError, MorphismError
from cs_certify.field.matrix import FpMatrix, kernel_intersection, rank, right_inverse

logger = logging.getLogger(__name__)


class CsWitness(BaseModel):
    """A partition of the other indices with the maps mu_r proving s_cs <= s."""

    index: Label
    partition: list[list[Label]] = Field(description="S_1 .. S_{s+1}")
    mu: list[FpMatrix] = Field(description="mu_r: W_i -> V, one per part")

    model_config = {"arbitrary_types_allowed": True, "frozen": True}

    @field_validator("index", mode="before")
    @classmethod
    def _coerce_index(cls, v):
        return as_label(v)

    @field_validator("partition", mode="before")
    @classmethod
    def _coerce_partition(cls, v):
        return [[as_label(x) for x in part] for part in v]

    @property
    def s(self) -> int:
        return len(self.partition) - 1

    def part_of(self, j: Label) -> int:
        for r, part in enumerate(self.partition):
            if j in part:
                return r
        raise DatumError(f"{fmt(j)} is in no part")

    def verify(self, phi: LinearDatum) -> bool:
        """phi_i mu_r = 1 and phi_j mu_r = 0 on S_r, checked exactly."""
        i = self.index
        others = [j for j in phi.labels if j != i]
        flat = [j for part in self.partition for j in part]
        if sorted(flat) != sorted(others) or len(self.mu) != len(self.partition):
            return False
        for part, mu in zip(self.partition, self.mu):
            if mu.shape != (phi.v_dim, phi.w_dim(i)):
                return False
            if not (phi.phi(i) @ mu).is_identity():
                return False
            if any(not (phi.phi(j) @ mu).is_zero() for j in part):
                return False
        return True


# ---------------------------------------------------------------------------
# Search
# ---------------------------------------------------------------------------


def _kernel(phi: LinearDatum, labels: Sequence[Label]) -> FpMatrix:
    return kernel_intersection([phi.phi(j) for j in labels], phi.v_dim, phi.p)


def mu_for(phi: LinearDatum, i, part: Sequence) -> FpMatrix | None:
    """A map mu with phi_i mu = 1 and phi_j mu = 0 on ``part``, if ``part`` is good."""
    i = as_label(i)
    kernel = _kernel(phi, [as_label(j) for j in part])
    restricted = phi.phi(i) @ kernel
    inv = right_inverse(restricted)
    return None if inv is None else kernel @ inv


def is_good(phi: LinearDatum, i, part: Sequence) -> bool:
    i = as_label(i)
    kernel = _kernel(phi, [as_label(j) for j in part])
    return rank(phi.phi(i) @ kernel) == phi.w_dim(i)


def good_sets(phi: LinearDatum, i: Label, others: Sequence[Label]) -> list[bool]:
    """Goodness of every subset of ``others``, indexed by bitmask."""
    n = len(others)
    good = [False] * (1 << n)
    for mask in range(1 << n):
        # a good set has good subsets, so one bad maximal subset settles it
        if any(not good[mask & ~(1 << b)] for b in range(n) if mask >> b & 1):
            continue
        good[mask] = is_good(phi, i, [others[b] for b in range(n) if mask >> b & 1])
    logger.debug("%d of %d subsets are good at %s", sum(good), len(good), fmt(i))
    return good


def _min_cover(good: list[bool], n: int, limit: int) -> list[int] | None:
    """Fewest good sets partitioning the full mask, at most ``limit`` of them."""
    full = (1 << n) - 1
    inf = limit + 1
    best = [inf] * (1 << n)
    choice = [0] * (1 << n)
    best[0] = 0
    for mask in range(1, full + 1):
        low = mask & -mask
        rest = mask ^ low
        sub = rest
        while True:
            part = sub | low
            if good[part] and best[mask ^ part] + 1 < best[mask]:
                best[mask] = best[mask ^ part] + 1
                choice[mask] = part
            if sub == 0:
                break
            sub = (sub - 1) & rest
    if best[full] > limit:
        return None
    parts = []
    mask = full
    while mask:
        parts.append(choice[mask])
        mask ^= choice[mask]
    return parts


def cs_complexity(
    phi: LinearDatum, i, s_max: int | None = None, *, cap: int | None = None
) -> CsWitness | None:
    """The minimal-s witness with s <= s_max, or None.

    Exact search over subsets of the other indices, so the index set may
    not exceed ``partition_index_cap``.
    """
    i = as_label(i)
    phi.phi(i)
    limit = resolve_cap(cap, "partition_index_cap")
    if len(phi) > limit:
        raise CapExceededError("partition search indices", len(phi), limit)
    others = [j for j in phi.labels if j != i]
    n = len(others)
    s_max = max(n - 1, 0) if s_max is None else s_max
    if not is_good(phi, i, []):
        logger.info("phi_%s is not surjective: no finite CS complexity", fmt(i))
        return None
    if n == 0:
        return CsWitness(index=i, partition=[[]], mu=[mu_for(phi, i, [])])
    good = good_sets(phi, i, others)
    masks = _min_cover(good, n, s_max + 1)
    if masks is None:
        logger.info("No partition with s <= %d at %s", s_max, fmt(i))
        return None
    partition = [[others[b] for b in range(n) if m >> b & 1] for m in masks]
    mu = [mu_for(phi, i, part) for part in partition]
    witness = CsWitness(index=i, partition=partition, mu=mu)
    logger.info("CS complexity at %s is %d", fmt(i), witness.s)
    return witness


def system_cs_complexity(phi: LinearDatum, s_max: int | None = None) -> int | None:
    """max_i s_cs(phi, i), or None if some index has none within s_max."""
    values = []
    for i in phi.labels:
        w = cs_complexity(phi, i, s_max)
        if w is None:
            return None
        values.append(w.s)
    return max(values, default=0)


def cs_complexity_monotone(
    phi: LinearDatum, i, *, keep=None, morph: DatumMorphism | None = None
) -> bool:
    """Check that s_cs at i never drops when indices are added or pulled along a morphism.

    With ``keep`` the sub-datum phi[keep] is compared with phi.  With
    ``morph: Psi -> phi`` respecting i, s_cs(phi, i) is compared with
    s_cs(Psi, alpha(i)); no other index of phi may share alpha(i).
    """
    i = as_label(i)
    full = cs_complexity(phi, i)
    checks = []
    if keep is not None:
        sub = restrict(phi, {i, *(as_label(j) for j in keep)})
        part = cs_complexity(sub, i)
        checks.append(full is None or (part is not None and part.s <= full.s))
    if morph is not None:
        if morph.target != phi:
            raise MorphismError("morphism does not end at the datum")
        a = morph.alpha[i]
        if any(morph.alpha[j] == a for j in phi.labels if j != i):
            raise MorphismError(f"{fmt(i)} shares its image with another index", index=i)
        source = cs_complexity(morph.source, a)
        checks.append(source is None or (full is not None and full.s <= source.s))
    return all(checks)


# ---------------------------------------------------------------------------
# Universal morphism
# ---------------------------------------------------------------------------


def gc_universal(phi: LinearDatum, i, witness: CsWitness) -> DatumMorphism:
    """The morphism gc_s(W_i) -> phi with alpha(i) = triangle, respecting i.

    theta(u_1, .., u_{s+1}) = sum mu_r(u_r); for j in S_r the map sigma_j
    reads the coordinates other than r through phi_j mu_l.
    """
    i = as_label(i)
    if witness.index != i or not witness.verify(phi):
        raise MorphismError(f"witness does not verify at {fmt(i)}", index=i)
    p, w = phi.p, phi.w_dim(i)
    s = witness.s
    source = gc(p, s, w)
    theta = FpMatrix.hstack(witness.mu, rows=phi.v_dim, p=p)
    alpha: dict[Label, Label] = {i: TRIANGLE}
    sigma: dict[Label, FpMatrix] = {i: FpMatrix.identity(p, w)}
    for r, part in enumerate(witness.partition):
        for j in part:
            alpha[j] = (str(r + 1),)
            blocks = [phi.phi(j) @ witness.mu[ell] for ell in range(s + 1) if ell != r]
            sigma[j] = FpMatrix.hstack(blocks, rows=phi.w_dim(j), p=p)
    morph = DatumMorphism(source=source, target=phi, alpha=alpha, theta=theta, sigma=sigma)
    verify_datum_morphism(morph).require()
    return morph


def gc_reduction(p: int, s: int, t: int, w: int = 1) -> DatumMorphism:
    """gc_s(W) -> gc_t(W) for t <= s, fixing every index of gc_t and respecting the triangle.

    On V it keeps the first t coordinates and sums the rest into slot t+1.
    """
    if not 0 <= t <= s:
        raise DatumError(f"gc_{s} does not reduce to gc_{t}")
    ident = FpMatrix.identity(p, (t + 1) * w)
    slots = [ident.select_columns(range(r * w, (r + 1) * w)) for r in range(t + 1)]
    mu = slots + [slots[t]] * (s - t)
    partition = [[(str(r + 1),)] for r in range(t + 1)] + [[] for _ in range(s - t)]
    witness = CsWitness(index=TRIANGLE, partition=partition, mu=mu)
    return gc_universal(gc(p, t, w), TRIANGLE, witness)


def _insert_at(p: int, w: int, s: int, r: int) -> FpMatrix:
    """tau_r: U -> U^{s+1}, placing u in slot r."""
    ident = FpMatrix.identity(p, w)
    return FpMatrix.vstack(
        [ident if k == r else FpMatrix.zeros(p, w, w) for k in range(s + 1)], cols=w, p=p
    )


def witness_from_morphism(morph: DatumMorphism, i) -> CsWitness:
    """Recover a CS witness from a morphism gc_s -> phi respecting i at the triangle.

    mu_r = theta tau_r; indices sent to ZEROI join the first part.
    """
    i = as_label(i)
    phi = morph.target
    verify_datum_morphism(morph).require()
    if morph.alpha.get(i) != (TRIANGLE,) or not morph.sigma[i].is_identity():
        raise MorphismError(f"morphism does not respect {fmt(i)} at the triangle", index=i)
    s = len(morph.source) - 2
    w = phi.w_dim(i)
    mu = [morph.theta @ _insert_at(phi.p, w, s, r) for r in range(s + 1)]
    partition: list[list[Label]] = [[] for _ in range(s + 1)]
    for j in phi.labels:
        if j == i:
            continue
        a = morph.alpha[j]
        if a == ZEROI:
            partition[0].append(j)
        elif a == (TRIANGLE,):
            raise MorphismError(f"{fmt(j)} also maps to the triangle", index=j)
        else:
            partition[int(a[0]) - 1].append(j)
    witness = CsWitness(index=i, partition=partition, mu=mu)
    if not witness.verify(phi):
        raise MorphismError("recovered maps do not form a CS witness", index=i)
    return witness


# ---------------------------------------------------------------------------
# Diagrams
# ---------------------------------------------------------------------------


def diag_cs_complexity(
    diagram: Diagram, i, s_max: int | None = None
) -> tuple[int, DiagramMorphism] | None:
    """s_cs of the diagram's datum at leaf i, with the morphism diagram(gc_s) -> D."""
    i = diagram.resolve(i)
    if not diagram.is_leaf(i):
        raise DatumError(f"{fmt(i)} is not a leaf")
    datum, _ = datum_of(diagram)
    witness = cs_complexity(datum, i, s_max)
    if witness is None:
        return None
    morph = gc_universal(datum, i, witness)
    return witness.s, datum_to_diagram_morphism(morph, diagram)
