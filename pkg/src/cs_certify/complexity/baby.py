"""The universal datum Psi(a) for the bilinear reformulation.

A datum Phi admits a morphism Psi(a) -> Phi respecting i and j (sent to
the indices 1 and 2) exactly when the other indices split as S_1, S_2
with maps mu_0: F_p^2 -> V, mu_1, mu_2: F_p -> V such that

    (phi_i, phi_j) mu_0 = identity,
    (phi_i, phi_j) mu_1 (x) = (a x, x),   phi_l mu_1 = 0 on S_1,
    (phi_i, phi_j) mu_2 (x) = (x, a x),   phi_l mu_2 = 0 on S_2.
"""

from __future__ import annotations

import logging
from collections.abc import Sequence

from pydantic import BaseModel, field_validator

from cs_certify.config import resolve_cap
from cs_certify.data.datum import LinearDatum
from cs_certify.data.morphisms import DatumMorphism, verify_datum_morphism
from cs_certify.data.standard import psi_baby
from cs_certify.diagrams.labels import Label, as_label, fmt
from cs_certify.errors import CapExceededError, DatumError, MorphismError
from cs_certify.field.matrix import FpMatrix, kernel_intersection, right_inverse, solve_matrix

logger = logging.getLogger(__name__)


class BabyWitness(BaseModel):
    i: Label
    j: Label
    a: int
    s1: list[Label]
    s2: list[Label]
    mu0: FpMatrix
    mu1: FpMatrix
    mu2: FpMatrix

    model_config = {"arbitrary_types_allowed": True, "frozen": True}

    @field_validator("i", "j", mode="before")
    @classmethod
    def _coerce_index(cls, v):
        return as_label(v)

    @field_validator("s1", "s2", mode="before")
    @classmethod
    def _coerce_parts(cls, v):
        return [as_label(x) for x in v]

    def verify(self, phi: LinearDatum) -> bool:
        p = phi.p
        pair = _pair(phi, self.i, self.j)
        others = sorted(j for j in phi.labels if j not in (self.i, self.j))
        if sorted(self.s1 + self.s2) != others:
            return False
        if not (pair @ self.mu0).is_identity():
            return False
        if pair @ self.mu1 != FpMatrix(p, [[self.a], [1]]):
            return False
        if pair @ self.mu2 != FpMatrix(p, [[1], [self.a]]):
            return False
        return all((phi.phi(x) @ self.mu1).is_zero() for x in self.s1) and all(
            (phi.phi(x) @ self.mu2).is_zero() for x in self.s2
        )


def _pair(phi: LinearDatum, i: Label, j: Label) -> FpMatrix:
    for x in (i, j):
        if phi.w_dim(x) != 1:
            raise DatumError(f"W_{fmt(x)} must be F_p")
    return FpMatrix.vstack([phi.phi(i), phi.phi(j)])


def _mu(phi: LinearDatum, pair: FpMatrix, part: Sequence[Label], value: FpMatrix):
    kernel = kernel_intersection([phi.phi(x) for x in part], phi.v_dim, phi.p)
    coords = solve_matrix(pair @ kernel, value)
    return None if coords is None else kernel @ coords


def find_baby_witness(
    phi: LinearDatum, i, j, a: int, *, cap: int | None = None
) -> BabyWitness | None:
    """Search every split of the other indices into S_1 and S_2."""
    i, j = as_label(i), as_label(j)
    p = phi.p
    pair = _pair(phi, i, j)
    others = [x for x in phi.labels if x not in (i, j)]
    limit = resolve_cap(cap, "partition_index_cap")
    if len(phi) > limit:
        raise CapExceededError("baby witness search indices", len(phi), limit)
    mu0 = right_inverse(pair)
    if mu0 is None:
        logger.info("(phi_%s, phi_%s) is not onto F_p^2", fmt(i), fmt(j))
        return None
    first = FpMatrix(p, [[a], [1]])
    second = FpMatrix(p, [[1], [a]])
    n = len(others)
    for mask in range(1 << n):
        s1 = [others[b] for b in range(n) if mask >> b & 1]
        s2 = [others[b] for b in range(n) if not mask >> b & 1]
        mu1 = _mu(phi, pair, s1, first)
        if mu1 is None:
            continue
        mu2 = _mu(phi, pair, s2, second)
        if mu2 is None:
            continue
        logger.debug("Baby witness: S_1=%s, S_2=%s", [fmt(x) for x in s1], [fmt(x) for x in s2])
        return BabyWitness(i=i, j=j, a=a, s1=s1, s2=s2, mu0=mu0, mu1=mu1, mu2=mu2)
    return None


def baby_universal(
    phi: LinearDatum, i, j, a: int, witness: BabyWitness | None = None
) -> DatumMorphism | None:
    """The morphism Psi(a) -> phi respecting i and j, or None when no witness exists.

    theta(x, y, z, w) = mu_0(x, y) + mu_1(z) + mu_2(w).
    """
    i, j = as_label(i), as_label(j)
    if witness is None:
        witness = find_baby_witness(phi, i, j, a)
        if witness is None:
            return None
    elif not witness.verify(phi):
        raise MorphismError("baby witness does not verify")
    p = phi.p
    source = psi_baby(p, a)
    mu0, mu1, mu2 = witness.mu0, witness.mu1, witness.mu2
    theta = FpMatrix.hstack([mu0, mu1, mu2])
    alpha: dict[Label, Label] = {i: ("1",), j: ("2",)}
    sigma: dict[Label, FpMatrix] = {i: FpMatrix.identity(p, 1), j: FpMatrix.identity(p, 1)}
    for x in witness.s1:
        alpha[x] = ("3",)
        sigma[x] = phi.phi(x) @ FpMatrix.hstack([mu0, mu2])
    for x in witness.s2:
        alpha[x] = ("4",)
        sigma[x] = phi.phi(x) @ FpMatrix.hstack([mu0, mu1])
    morph = DatumMorphism(source=source, target=phi, alpha=alpha, theta=theta, sigma=sigma)
    verify_datum_morphism(morph).require()
    logger.info("Psi(%d) -> datum respecting %s and %s", a, fmt(i), fmt(j))
    return morph
