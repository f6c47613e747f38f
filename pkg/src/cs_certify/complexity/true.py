"""True complexity of a system of linear forms.

s(Phi, i) is the largest t for which phi_i^(x)t lies in the span of the
phi_j^(x)t, j != i.  Tensor powers are compared either as full Kronecker
powers (length d^t) or through their coordinates on sorted index tuples
(length C(d+t-1, t)); a symmetric tensor is determined by the latter.
"""

from __future__ import annotations

import itertools
import logging
from collections.abc import Sequence
from enum import Enum

import numpy as np
from pydantic import BaseModel, Field
from scipy.special import comb

from cs_certify.config import resolve_cap
from cs_certify.data.datum import LinearDatum
from cs_certify.diagrams.labels import Label, as_label, fmt
from cs_certify.errors import CapExceededError, DatumError
from cs_certify.field.matrix import FpMatrix, in_span, kron_power, solve, symmetric_lift

logger = logging.getLogger(__name__)


class TensorMode(str, Enum):
    FULL = "full"
    SYMMETRIC = "symmetric"
    AUTO = "auto"


def form_rows(phi: LinearDatum) -> dict[Label, np.ndarray]:
    """Each index as a row vector; every W_i must be one-dimensional."""
    rows = {}
    for i, m in phi.items():
        if m.rows != 1:
            raise DatumError(f"{fmt(i)} is not a linear form (W has dim {m.rows})")
        rows[i] = m.array[0]
    return rows


def symmetric_dim(d: int, t: int) -> int:
    return int(comb(d + t - 1, t, exact=True))


def monomials(d: int, t: int) -> list[tuple[int, ...]]:
    """Sorted index tuples of length t over range(d); (0, .., 0) first."""
    return list(itertools.combinations_with_replacement(range(d), t))


def symmetric_power(row: np.ndarray, t: int, p: int) -> np.ndarray:
    """Coordinates of row^(x)t on sorted index tuples."""
    d = row.shape[0]
    out = np.ones(symmetric_dim(d, t), dtype=np.int64)
    for k, tau in enumerate(monomials(d, t)):
        value = 1
        for r in tau:
            value = value * int(row[r]) % p
        out[k] = value
    return out


def _choose_mode(d: int, t: int, mode: TensorMode, cap: int | None) -> TensorMode:
    limit = resolve_cap(cap, "tensor_cap")
    if mode is TensorMode.FULL:
        return mode
    if mode is TensorMode.SYMMETRIC:
        if symmetric_dim(d, t) > limit:
            raise CapExceededError("symmetric power coordinates", symmetric_dim(d, t), limit)
        return mode
    if d**t <= limit:
        return TensorMode.FULL
    if symmetric_dim(d, t) <= limit:
        logger.debug("d^t = %d over cap; using %d symmetric coordinates", d**t,
                     symmetric_dim(d, t))
        return TensorMode.SYMMETRIC
    raise CapExceededError("tensor power coordinates", symmetric_dim(d, t), limit)


def tensor_power(row: np.ndarray, t: int, p: int, mode: TensorMode, cap: int | None = None):
    if mode is TensorMode.SYMMETRIC:
        return symmetric_power(row, t, p)
    return kron_power(FpMatrix.row_vector(p, row), t, cap=cap).array[0]


# ---------------------------------------------------------------------------
# Witnesses
# ---------------------------------------------------------------------------


class TensorWitness(BaseModel):
    """Evidence at one degree t, in one coordinate system.

    Membership carries ``coefficients`` c_j with phi_i^t = sum c_j phi_j^t;
    non-membership carries a ``dual`` vector v with phi_i^t(v) = 1 and
    phi_j^t(v) = 0 for j != i.
    """

    index: Label
    degree: int = Field(ge=0)
    mode: TensorMode
    member: bool
    coefficients: dict[Label, int] = Field(default_factory=dict)
    dual: list[int] = Field(default_factory=list)

    def verify(self, phi: LinearDatum) -> bool:
        rows = form_rows(phi)
        p, t = phi.p, self.degree
        powers = {j: tensor_power(r, t, p, self.mode) for j, r in rows.items()}
        target = powers[self.index]
        if self.member:
            acc = np.zeros_like(target)
            for j, c in self.coefficients.items():
                if j == self.index:
                    return False
                acc = np.mod(acc + c * powers[j], p)
            return bool(np.array_equal(acc, target))
        v = np.asarray(self.dual, dtype=np.int64)
        if v.shape != target.shape:
            return False
        if int(target @ v) % p != 1:
            return False
        return all(int(powers[j] @ v) % p == 0 for j in rows if j != self.index)


def degree_witness(
    phi: LinearDatum,
    i,
    t: int,
    *,
    mode: TensorMode = TensorMode.AUTO,
    cap: int | None = None,
) -> TensorWitness:
    """Decide membership of phi_i^t in the span of the others, with evidence."""
    i = as_label(i)
    rows = form_rows(phi)
    p = phi.p
    used = _choose_mode(phi.v_dim, t, mode, cap)
    powers = {j: tensor_power(r, t, p, used, cap) for j, r in rows.items()}
    others = [j for j in rows if j != i]
    coeffs = in_span(powers[i], [powers[j] for j in others], p)
    if coeffs is not None:
        return TensorWitness(
            index=i, degree=t, mode=used, member=True,
            coefficients={j: int(c) for j, c in zip(others, coeffs) if int(c)},
        )
    system = FpMatrix(p, np.vstack([powers[j] for j in others] + [powers[i]]))
    rhs = np.zeros(len(others) + 1, dtype=np.int64)
    rhs[-1] = 1
    v = solve(system, rhs)
    if v is None:
        raise AssertionError("non-membership without a separating dual vector")
    return TensorWitness(index=i, degree=t, mode=used, member=False, dual=[int(x) for x in v])


class TrueComplexity(BaseModel):
    """s(Phi, i) with the membership witness at s and, below t_max, the dual at s + 1."""

    index: Label
    s: int
    t_max: int
    membership: list[bool] = Field(description="membership at t = 0 .. t_max")
    witness: TensorWitness
    certificate: TensorWitness | None = None


def true_complexity(
    phi: LinearDatum,
    i,
    t_max: int,
    *,
    mode: TensorMode = TensorMode.AUTO,
    cap: int | None = None,
) -> TrueComplexity:
    """Scan t = 0 .. t_max and return the largest t with membership.

    An index with no other index has s = 0 by convention; its only
    witness is the failed membership at degree 0.
    """
    i = as_label(i)
    phi.phi(i)
    found = [degree_witness(phi, i, t, mode=mode, cap=cap) for t in range(t_max + 1)]
    membership = [w.member for w in found]
    members = [t for t, m in enumerate(membership) if m]
    s = members[-1] if members else 0
    certificate = None
    if s < t_max:
        certificate = found[s + 1]
    logger.info("True complexity at %s: s=%d (scanned to %d)", fmt(i), s, t_max)
    return TrueComplexity(
        index=i, s=s, t_max=t_max, membership=membership, witness=found[s],
        certificate=certificate,
    )


def system_true_complexity(phi: LinearDatum, t_max: int, **kwargs) -> int:
    """s(Phi) = max_i s(Phi, i)."""
    return max(true_complexity(phi, i, t_max, **kwargs).s for i in phi.labels)


def integer_lift_bound(rows: Sequence[Sequence[int]], p: int) -> int:
    """L: the largest absolute symmetric lift of any coefficient (at least 1)."""
    return max([1] + [abs(symmetric_lift(int(a), p)) for r in rows for a in r])
