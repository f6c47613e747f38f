"""Dual tensors for degree reduction, and U^k dual functions.

When phi_i0^(x)s is not in the span of the other phi_j^(x)s there is a
tensor annihilated by every phi_j^(x)s but not by phi_i0^(x)s.  It is
written in a basis adapted to phi_i0 (phi_i0 vanishes on e_2 .. e_d) as
coefficients beta_tau on sorted index tuples tau, normalised so that
beta_(1..1) phi_i0(e_1) = 1.
"""

from __future__ import annotations

import itertools
import logging

import numpy as np
from pydantic import BaseModel, Field

from cs_certify.complexity.true import form_rows, monomials
from cs_certify.data.averages import FunctionTable, points
from cs_certify.data.datum import LinearDatum
from cs_certify.diagrams.labels import Label, as_label, fmt
from cs_certify.errors import DatumError, HypothesisError
from cs_certify.field.matrix import FpMatrix, solve, symmetric_lift

logger = logging.getLogger(__name__)


class AdaptedBasis(BaseModel):
    """e_1 = eps_c, e_l = lambda eps_l - phi_i0(eps_l) eps_c for the other l."""

    pivot: int = Field(description="standard coordinate c with phi_i0(eps_c) != 0")
    order: list[int] = Field(description="standard coordinate behind each e_l")
    matrix: list[list[int]] = Field(description="columns are e_1 .. e_d")
    integer_values: dict[Label, list[int]] = Field(
        description="integer representatives of phi_j(e_l)"
    )
    bound: int = Field(description="2 L^2")


def adapted_basis(phi: LinearDatum, i0, *, declared: dict | None = None) -> AdaptedBasis:
    """A basis with phi_i0(e_l) = 0 for l >= 2 and small integer values phi_j(e_l).

    ``declared`` may give integer coefficient rows per index; otherwise
    symmetric lifts of the residues are used.
    """
    i0 = as_label(i0)
    p, d = phi.p, phi.v_dim
    rows = form_rows(phi)
    declared = declared or {}
    ints = {
        j: [int(a) for a in declared.get(fmt(j), [symmetric_lift(int(x), p) for x in r])]
        for j, r in rows.items()
    }
    for j, r in rows.items():
        if len(ints[j]) != d or any((a - int(x)) % p for a, x in zip(ints[j], r)):
            raise DatumError(f"declared coefficients of {fmt(j)} do not reduce to the form")
    target = ints[i0]
    nonzero = [c for c in range(d) if target[c] % p]
    if not nonzero:
        raise DatumError(f"phi_{fmt(i0)} is the zero form")
    c = nonzero[0]
    lam = target[c]
    order = [c] + [ell for ell in range(d) if ell != c]
    columns: list[list[int]] = []
    for ell in order:
        e = [0] * d
        if ell == c:
            e[c] = 1
        else:
            e[ell] = lam
            e[c] = -target[ell]
        columns.append(e)
    values = {j: [sum(a * x for a, x in zip(row, e)) for e in columns] for j, row in ints.items()}
    big_l = max([1] + [abs(a) for row in ints.values() for a in row])
    bound = 2 * big_l * big_l
    worst = max(abs(v) for vals in values.values() for v in vals)
    if worst > bound:
        raise AssertionError(f"adapted basis value {worst} exceeds 2L^2 = {bound}")
    matrix = [[columns[k][r] % p for k in range(d)] for r in range(d)]
    return AdaptedBasis(
        pivot=c, order=order, matrix=matrix, integer_values=values, bound=bound
    )


def basis_values(phi: LinearDatum, basis: AdaptedBasis | None) -> dict[Label, list[int]]:
    """phi_j(e_l) reduced mod p; the standard basis when ``basis`` is None."""
    p = phi.p
    if basis is None:
        return {j: [int(x) % p for x in r] for j, r in form_rows(phi).items()}
    return {j: [v % p for v in vals] for j, vals in basis.integer_values.items()}


class DualTensor(BaseModel):
    """beta_tau on sorted index tuples of length s over the basis e_1 .. e_d."""

    index: Label
    degree: int
    basis: AdaptedBasis | None = Field(
        default=None, description="None means the standard basis"
    )
    beta: dict[tuple[int, ...], int]

    def values(self, phi: LinearDatum) -> dict[Label, list[int]]:
        return basis_values(phi, self.basis)

    def evaluate(self, phi: LinearDatum, j) -> int:
        """sum_tau beta_tau prod_r phi_j(e_tau_r)."""
        p = phi.p
        vals = self.values(phi)[as_label(j)]
        acc = 0
        for tau, b in self.beta.items():
            term = b
            for r in tau:
                term = term * vals[r] % p
            acc = (acc + term) % p
        return acc

    def verify(self, phi: LinearDatum) -> bool:
        p = phi.p
        i0 = self.index
        if any(self.evaluate(phi, j) for j in phi.labels if j != i0):
            return False
        if self.basis is None:
            return self.evaluate(phi, i0) == 1
        lam = self.values(phi)[i0][0]
        ones = tuple([0] * self.degree)
        return self.beta.get(ones, 0) * lam % p == 1


def monomial_matrix(phi: LinearDatum, s: int, basis: AdaptedBasis | None = None) -> FpMatrix:
    """Rows indexed by sorted tuples tau, columns by indices: prod_r phi_j(e_tau_r)."""
    p, d = phi.p, phi.v_dim
    vals = basis_values(phi, basis)
    table = []
    for tau in monomials(d, s):
        row = []
        for j in phi.labels:
            v = 1
            for r in tau:
                v = v * vals[j][r] % p
            row.append(v)
        table.append(row)
    return FpMatrix.from_rows(p, table, cols=len(phi))


def dual_tensor(
    phi: LinearDatum,
    i0,
    s: int,
    *,
    adapted: bool = True,
    declared: dict | None = None,
) -> DualTensor:
    """beta with sum_tau beta_tau prod phi_j(e_tau_r) = 0 for j != i0.

    In the adapted basis the i0 equation reads beta_(1..1) lambda^s and is
    set to lambda^(s-1); in the standard basis it is set to 1, which is
    the row-vector equation alpha M = e_i0 for the monomial matrix M.
    Raises HypothesisError when phi_i0^(x)s is in the span of the others.
    """
    i0 = as_label(i0)
    p = phi.p
    basis = adapted_basis(phi, i0, declared=declared) if adapted else None
    m = monomial_matrix(phi, s, basis)
    col = phi.labels.index(i0)
    rhs = np.zeros(len(phi), dtype=np.int64)
    if basis is None:
        rhs[col] = 1
    else:
        lam = basis.integer_values[i0][0] % p
        rhs[col] = pow(lam, s - 1, p)
    beta = solve(m.T, rhs)
    if beta is None:
        raise HypothesisError(
            f"phi_{fmt(i0)}^{s} lies in the span of the other tensor powers"
        )
    taus = monomials(phi.v_dim, s)
    out = DualTensor(
        index=i0, degree=s, basis=basis,
        beta={tau: int(b) for tau, b in zip(taus, beta) if int(b)},
    )
    if not out.verify(phi):
        raise AssertionError("dual tensor failed its own check")
    logger.info("Dual tensor at %s, degree %d: %d nonzero coefficients", fmt(i0), s, len(out.beta))
    return out


# ---------------------------------------------------------------------------
# Dual functions
# ---------------------------------------------------------------------------


def dual_function(g: FunctionTable, k: int) -> FunctionTable:
    """D_{U^k} g (x) = E_a prod_{omega != 0} C^{|omega|} g(x + omega . a)."""
    if k < 1:
        raise DatumError(f"dual functions need k >= 1, got {k}")
    p, w, n = g.p, g.w_dim, g.n
    xs = points(p, w, n)
    shifts = points(p, w * k, n).reshape(-1, k, w, n)
    acc = np.zeros(xs.shape[0], dtype=np.complex128)
    cube = [om for om in itertools.product((0, 1), repeat=k) if any(om)]
    for a in shifts:
        prod = np.ones(xs.shape[0], dtype=np.complex128)
        for om in cube:
            offset = np.einsum("k,kwn->wn", np.asarray(om, dtype=np.int64), a)
            vals = g(xs + offset[None])
            prod *= np.conj(vals) if sum(om) % 2 else vals
        acc += prod
    return FunctionTable(p, w, n, acc / shifts.shape[0])
