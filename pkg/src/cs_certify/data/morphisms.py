"""Morphisms of linear data and the constructions built from them.

A morphism ``Theta: source -> target`` has a shape ``alpha`` sending every
target index to a source index or ZEROI, a map ``theta: V_source -> V_target``
and, per target index i, ``sigma[i]: W_source[alpha(i)] -> W_target[i]`` with

    sigma[i] @ phi_source[alpha(i)] == phi_target[i] @ theta.
"""

from __future__ import annotations

import logging
from collections.abc import Iterable, Mapping, Sequence

import numpy as np
from pydantic import BaseModel, Field, field_validator

from cs_certify.data.datum import LinearDatum
from cs_certify.diagrams.labels import ZEROI, Label, as_label, fmt, prefixed
from cs_certify.errors import DatumError, MorphismError
from cs_certify.field.matrix import (
    FpMatrix,
    image_basis,
    kernel_basis,
    kernel_intersection,
    rank,
    right_inverse,
    row_space_basis,
    solve_matrix,
)

logger = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# Types
# ---------------------------------------------------------------------------


class DatumMorphism(BaseModel):
    """A morphism of linear data ``source -> target``."""

    source: LinearDatum
    target: LinearDatum
    alpha: dict[Label, Label]
    theta: FpMatrix
    sigma: dict[Label, FpMatrix]

    model_config = {"arbitrary_types_allowed": True, "frozen": True}

    @field_validator("alpha", mode="before")
    @classmethod
    def _coerce_alpha(cls, v):
        return {as_label(k): as_label(x) for k, x in dict(v).items()}

    @field_validator("sigma", mode="before")
    @classmethod
    def _coerce_sigma(cls, v):
        return {as_label(k): m for k, m in dict(v).items()}

    @classmethod
    def build(
        cls,
        source: LinearDatum,
        target: LinearDatum,
        alpha: Mapping,
        theta: FpMatrix,
        sigma: Mapping | None = None,
    ) -> DatumMorphism:
        """Fill in default sigmas: identity on equal spaces, empty from ZEROI."""
        alpha = {as_label(k): as_label(x) for k, x in alpha.items()}
        given = {as_label(k): m for k, m in (sigma or {}).items()}
        p = target.p
        full: dict[Label, FpMatrix] = {}
        for i in target.labels:
            if i not in alpha:
                raise MorphismError(f"alpha is missing target index {fmt(i)}", index=i)
            if i in given:
                full[i] = given[i]
            elif alpha[i] == ZEROI:
                full[i] = FpMatrix.zeros(p, target.w_dim(i), 0)
            elif source.w_dim(alpha[i]) == target.w_dim(i):
                full[i] = FpMatrix.identity(p, target.w_dim(i))
            else:
                raise MorphismError(
                    f"sigma for {fmt(i)} must be given: dimensions differ", index=i
                )
        return cls(source=source, target=target, alpha=alpha, theta=theta, sigma=full)

    def source_phi(self, i: Label) -> FpMatrix:
        """phi_source at alpha(i), the zero map when alpha(i) is ZEROI."""
        a = self.alpha[i]
        if a == ZEROI:
            return FpMatrix.zeros(self.source.p, 0, self.source.v_dim)
        return self.source.phi(a)


class MorphismFailure(BaseModel):
    where: str = Field(description="Failing index or edge, ';'-joined")
    witness: list[int] = Field(default_factory=list, description="Unit vector exposing it")
    reason: str = ""


class MorphismReport(BaseModel):
    """Outcome of checking every commuting square of a morphism."""

    ok: bool
    respected: list[Label] = Field(default_factory=list)
    failures: list[MorphismFailure] = Field(default_factory=list)

    def require(self) -> MorphismReport:
        if not self.ok:
            first = self.failures[0]
            raise MorphismError(
                f"square fails at {first.where}: {first.reason}",
                index=first.where,
                witness=first.witness,
            )
        return self


def _witness(diff: FpMatrix) -> list[int]:
    cols = np.flatnonzero(diff.array.any(axis=0))
    e = [0] * diff.cols
    e[int(cols[0])] = 1
    return e


# ---------------------------------------------------------------------------
# Verification
# ---------------------------------------------------------------------------


def _check_shapes(morph: DatumMorphism) -> None:
    src, tgt = morph.source, morph.target
    if src.p != tgt.p:
        raise MorphismError(f"source over F_{src.p}, target over F_{tgt.p}")
    if morph.theta.shape != (tgt.v_dim, src.v_dim):
        raise MorphismError(
            f"theta has shape {morph.theta.shape}, expected {(tgt.v_dim, src.v_dim)}"
        )
    if set(morph.alpha) != set(tgt.labels):
        raise MorphismError("alpha must be defined on exactly the target indices")
    for i in tgt.labels:
        a = morph.alpha[i]
        if a != ZEROI and a not in src:
            raise MorphismError(f"alpha({fmt(i)}) = {fmt(a)} is not a source index", index=i)
        w_src = 0 if a == ZEROI else src.w_dim(a)
        if i not in morph.sigma or morph.sigma[i].shape != (tgt.w_dim(i), w_src):
            raise MorphismError(f"sigma for {fmt(i)} missing or misshapen", index=i)


def verify_datum_morphism(morph: DatumMorphism) -> MorphismReport:
    """Check every square and list the respected target indices.

    Every failing index is reported, in target order, each with the unit
    vector e_c of the first source coordinate where the composites differ.
    """
    _check_shapes(morph)
    failures: list[MorphismFailure] = []
    tgt = morph.target
    for i in tgt.labels:
        lhs = morph.sigma[i] @ morph.source_phi(i)
        rhs = tgt.phi(i) @ morph.theta
        if lhs != rhs:
            failures.append(
                MorphismFailure(
                    where=fmt(i),
                    witness=_witness(lhs - rhs),
                    reason="sigma . phi_source != phi_target . theta",
                )
            )
    images = [morph.alpha[i] for i in tgt.labels]
    respected = [
        i
        for i in tgt.labels
        if morph.alpha[i] != ZEROI
        and images.count(morph.alpha[i]) == 1
        and morph.sigma[i].is_identity()
    ]
    report = MorphismReport(ok=not failures, respected=respected, failures=failures)
    logger.debug(
        "Datum morphism checked: ok=%s, %d respected, %d failures",
        report.ok,
        len(respected),
        len(failures),
    )
    return report


# ---------------------------------------------------------------------------
# Elementary morphisms
# ---------------------------------------------------------------------------


def identity_morphism(phi: LinearDatum) -> DatumMorphism:
    return DatumMorphism.build(
        phi, phi, {i: i for i in phi.labels}, FpMatrix.identity(phi.p, phi.v_dim)
    )


def compose_datum_morphisms(second: DatumMorphism, first: DatumMorphism) -> DatumMorphism:
    """``second . first`` for ``first: A -> B`` and ``second: B -> C``."""
    if first.target != second.source:
        raise MorphismError("cannot compose: first.target differs from second.source")
    alpha: dict[Label, Label] = {}
    sigma: dict[Label, FpMatrix] = {}
    for i, mid in second.alpha.items():
        if mid == ZEROI:
            alpha[i] = ZEROI
            sigma[i] = FpMatrix.zeros(second.target.p, second.target.w_dim(i), 0)
        else:
            alpha[i] = first.alpha[mid]
            sigma[i] = second.sigma[i] @ first.sigma[mid]
    return DatumMorphism(
        source=first.source,
        target=second.target,
        alpha=alpha,
        theta=second.theta @ first.theta,
        sigma=sigma,
    )


def restrict(phi: LinearDatum, keep: Iterable) -> LinearDatum:
    """The induced sub-datum on ``keep`` (original order preserved)."""
    wanted = {as_label(j) for j in keep}
    unknown = wanted - set(phi.labels)
    if unknown:
        raise DatumError(f"unknown indices {sorted(fmt(u) for u in unknown)}")
    return LinearDatum(phi.p, phi.v_dim, [(i, m) for i, m in phi.items() if i in wanted])


def restriction_map(phi: LinearDatum, keep: Iterable) -> DatumMorphism:
    """The natural morphism ``phi -> phi[keep]``."""
    sub = restrict(phi, keep)
    return DatumMorphism.build(
        phi, sub, {i: i for i in sub.labels}, FpMatrix.identity(phi.p, phi.v_dim)
    )


def corestrict(phi: LinearDatum, zeroed: Iterable) -> tuple[LinearDatum, DatumMorphism]:
    """The co-restriction ``phi<J>`` and its inclusion morphism into ``phi``."""
    zeroed = [as_label(j) for j in zeroed]
    for j in zeroed:
        phi.phi(j)
    inclusion = kernel_intersection([phi.phi(j) for j in zeroed], phi.v_dim, phi.p)
    rest = [(i, m @ inclusion) for i, m in phi.items() if i not in zeroed]
    sub = LinearDatum(phi.p, inclusion.cols, rest)
    alpha = {i: (ZEROI if i in zeroed else i) for i in phi.labels}
    return sub, DatumMorphism.build(sub, phi, alpha, inclusion)


# ---------------------------------------------------------------------------
# Joinings
# ---------------------------------------------------------------------------


def fiber_product(
    left: LinearDatum, right: LinearDatum, matching: Sequence[tuple[Label, Label]]
) -> tuple[FpMatrix, FpMatrix]:
    """Projections ``pi_0, pi_1`` from a basis of the fiber product."""
    if left.p != right.p:
        raise DatumError("cannot join data over different fields")
    rows = []
    for a, b in matching:
        if left.w_dim(a) != right.w_dim(b):
            raise DatumError(
                f"cannot match {fmt(a)} (dim {left.w_dim(a)}) with {fmt(b)} "
                f"(dim {right.w_dim(b)})"
            )
        rows.append(FpMatrix.hstack([left.phi(a), -right.phi(b)]))
    total = left.v_dim + right.v_dim
    if rows:
        basis = kernel_basis(FpMatrix.vstack(rows))
    else:
        basis = FpMatrix.identity(left.p, total)
    pi0 = basis.select_rows(range(left.v_dim))
    pi1 = basis.select_rows(range(left.v_dim, total))
    return pi0, pi1


def _check_matching(
    left: LinearDatum, right: LinearDatum, matching: Iterable
) -> list[tuple[Label, Label]]:
    pairs = [(as_label(a), as_label(b)) for a, b in matching]
    firsts = [a for a, _ in pairs]
    seconds = [b for _, b in pairs]
    if len(set(firsts)) != len(firsts) or len(set(seconds)) != len(seconds):
        raise DatumError("matching is not a partial bijection")
    for a in firsts:
        left.phi(a)
    for b in seconds:
        right.phi(b)
    return pairs


def join_data(
    left: LinearDatum,
    right: LinearDatum,
    matching: Iterable,
    *,
    left_prefix: str | None = "L",
    right_prefix: str | None = "R",
) -> LinearDatum:
    """The joining of two data along a partial matching of their indices.

    With ``left_prefix=None`` the left labels are kept as they are.
    """
    if left_prefix is None and right_prefix is None:
        raise DatumError("at least one side of a joining needs a prefix")
    pairs = _check_matching(left, right, matching)
    pi0, pi1 = fiber_product(left, right, pairs)
    matched0 = {a for a, _ in pairs}
    matched1 = {b for _, b in pairs}
    indices = [(prefixed(left_prefix, i), m @ pi0) for i, m in left.items() if i not in matched0]
    indices += [
        (prefixed(right_prefix, i), m @ pi1) for i, m in right.items() if i not in matched1
    ]
    return LinearDatum(left.p, pi0.cols, indices)


def self_join(phi: LinearDatum, shared: Iterable) -> LinearDatum:
    """``phi +_S phi``."""
    return join_data(phi, phi, [(s, s) for s in shared])


def direct_sum(left: LinearDatum, right: LinearDatum) -> LinearDatum:
    return join_data(left, right, [])


# ---------------------------------------------------------------------------
# Isomorphisms and normal form
# ---------------------------------------------------------------------------


def _left_inverse(m: FpMatrix) -> FpMatrix:
    inv = right_inverse(m.T)
    if inv is None:
        raise DatumError("matrix has no left inverse")
    return inv.T


def strong_isomorphism(phi: LinearDatum, psi: LinearDatum) -> DatumMorphism | None:
    """A strong isomorphism ``phi -> psi`` if one exists, else None."""
    if phi.p != psi.p or phi.v_dim != psi.v_dim or set(phi.labels) != set(psi.labels):
        return None
    if any(phi.w_dim(i) != psi.w_dim(i) for i in phi.labels):
        return None
    order = phi.labels
    theta = solve_matrix(psi.stacked(order), phi.stacked(order))
    if theta is None:
        return None
    if rank(theta) < phi.v_dim:
        ker_phi = kernel_basis(phi.stacked())
        ker_psi = kernel_basis(psi.stacked())
        if ker_phi.cols != ker_psi.cols:
            return None
        if ker_phi.cols:
            proj = _left_inverse(ker_phi)
            ident = FpMatrix.identity(phi.p, phi.v_dim)
            theta = theta @ (ident - ker_phi @ proj) + ker_psi @ proj
        if rank(theta) < phi.v_dim:
            return None
    morph = DatumMorphism.build(phi, psi, {i: i for i in psi.labels}, theta)
    return morph if verify_datum_morphism(morph).ok else None


def is_strong_isomorphism(morph: DatumMorphism) -> bool:
    report = verify_datum_morphism(morph)
    n = morph.source.v_dim
    return (
        report.ok
        and morph.theta.shape == (n, n)
        and rank(morph.theta) == n
        and len(report.respected) == len(morph.target)
        and sorted(morph.alpha.values()) == sorted(morph.source.labels)
    )


class NormalForm(BaseModel):
    """A non-degenerate surjective datum with morphisms to and from the input."""

    datum: LinearDatum
    to_normal: DatumMorphism
    from_normal: DatumMorphism

    model_config = {"arbitrary_types_allowed": True, "frozen": True}


def normalize(phi: LinearDatum) -> NormalForm:
    """Quotient by the joint kernel and shrink each W_i to the image of phi_i.

    ``to_normal`` respects every index whose map is already surjective and
    ``from_normal`` respects every index.
    """
    p = phi.p
    quotient = row_space_basis(phi.stacked())
    if quotient.rows == 0:
        quotient = FpMatrix.zeros(p, 0, phi.v_dim)
    section = right_inverse(quotient) if quotient.rows else FpMatrix.zeros(p, phi.v_dim, 0)
    new_maps: list[tuple[Label, FpMatrix]] = []
    to_sigma: dict[Label, FpMatrix] = {}
    from_sigma: dict[Label, FpMatrix] = {}
    for i, m in phi.items():
        coords = solve_matrix(quotient.T, m.T)
        coords = coords.T if coords is not None else None
        if coords is None:
            raise AssertionError(f"index {fmt(i)} does not factor through the quotient")
        if rank(coords) == coords.rows:
            embed = FpMatrix.identity(p, coords.rows)
        else:
            embed = image_basis(coords)
        reduced = solve_matrix(embed, coords)
        new_maps.append((i, reduced))
        to_sigma[i] = _left_inverse(embed) if embed.cols else FpMatrix.zeros(p, 0, m.rows)
        from_sigma[i] = embed
    normal = LinearDatum(p, quotient.rows, new_maps)
    ident = {i: i for i in phi.labels}
    to_normal = DatumMorphism(
        source=phi, target=normal, alpha=ident, theta=quotient, sigma=to_sigma
    )
    from_normal = DatumMorphism(
        source=normal, target=phi, alpha=ident, theta=section, sigma=from_sigma
    )
    logger.debug("Normalized datum: v_dim %d -> %d", phi.v_dim, normal.v_dim)
    return NormalForm(datum=normal, to_normal=to_normal, from_normal=from_normal)
