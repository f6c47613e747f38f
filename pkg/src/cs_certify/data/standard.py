"""Standard linear data used throughout the gate library and the examples.

Each constructor returns the exact datum with its conventional index
labels.  ``standard_datum(kind, **params)`` dispatches by name.
"""

from __future__ import annotations

import itertools
import logging
from collections.abc import Callable, Iterable, Sequence

from cs_certify.data.datum import LinearDatum
from cs_certify.data.morphisms import corestrict, restrict
from cs_certify.diagrams.labels import TRIANGLE, Label, as_label
from cs_certify.errors import DatumError
from cs_certify.field.matrix import FpMatrix, check_prime, kernel_basis

logger = logging.getLogger(__name__)

SQUARE = ["00", "01", "10", "11"]


def _block_row(p: int, blocks: Sequence[int], width: int) -> FpMatrix:
    """``[c_0 I | c_1 I | ...]`` with identity blocks of size ``width``."""
    ident = FpMatrix.identity(p, width)
    return FpMatrix.hstack([ident.scale(c) for c in blocks], rows=width, p=p)


def forms(p: int, rows: Sequence[Sequence[int]], labels: Iterable | None = None) -> LinearDatum:
    """A system of linear forms F_p^d -> F_p, one row per form."""
    p = check_prime(p)
    if labels is None:
        labels = [str(k + 1) for k in range(len(rows))]
    labels = [as_label(x) for x in labels]
    if len(labels) != len(rows):
        raise DatumError("one label per form is required")
    d = len(rows[0]) if rows else 0
    return LinearDatum(p, d, [(x, FpMatrix.row_vector(p, r)) for x, r in zip(labels, rows)])


# ---------------------------------------------------------------------------
# Structural data
# ---------------------------------------------------------------------------


def trivial(p: int, labels: Iterable, dim: int = 1) -> LinearDatum:
    """V is the direct sum of the W_i; each phi_i is a projection."""
    labels = [as_label(x) for x in labels]
    total = dim * len(labels)
    return LinearDatum(
        p,
        total,
        [
            (x, FpMatrix.identity(p, total).select_rows(range(k * dim, (k + 1) * dim)))
            for k, x in enumerate(labels)
        ],
    )


def const(p: int, labels: Iterable, dim: int = 1) -> LinearDatum:
    """V = W and every phi_i is the identity."""
    return LinearDatum(p, dim, [(as_label(x), FpMatrix.identity(p, dim)) for x in labels])


def cube_labels(k: int) -> list[Label]:
    return [("".join(str(b) for b in omega),) for omega in itertools.product((0, 1), repeat=k)]


def uk(p: int, k: int, dim: int = 1) -> LinearDatum:
    """U^k(W): V = W^(k+1), phi_omega(x, h) = x + sum omega_i h_i."""
    if k < 2:
        raise DatumError("U^k needs k >= 2 (the label '0' is reserved)")
    out = []
    for omega in itertools.product((0, 1), repeat=k):
        out.append(("".join(map(str, omega)), _block_row(p, (1, *omega), dim)))
    return LinearDatum(p, dim * (k + 1), out)


def gc(p: int, s: int, dim: int = 1) -> LinearDatum:
    """The generalized convolution datum of degree s over U = F_p^dim.

    Indices are the triangle and 1..s+1; phi_triangle sums the s+1
    coordinates and phi_i omits coordinate i.
    """
    if s < 0:
        raise DatumError(f"gc needs s >= 0, got {s}")
    n = s + 1
    out = [(TRIANGLE, _block_row(p, [1] * n, dim))]
    ident = FpMatrix.identity(p, n * dim)
    for i in range(n):
        keep = [r for r in range(n * dim) if not i * dim <= r < (i + 1) * dim]
        out.append((str(i + 1), ident.select_rows(keep)))
    return LinearDatum(p, n * dim, out)


def sum_datum(p: int, present: Iterable | None = None) -> LinearDatum:
    """Sum(P): U^2 co-restricted to the complement of P in {0,1}^2."""
    base = uk(p, 2)
    if present is None:
        return base
    present = {as_label(x) for x in present}
    unknown = present - set(base.labels)
    if unknown:
        raise DatumError(f"Sum(P) needs P inside {{0,1}}^2, got {sorted(unknown)}")
    zeroed = [x for x in base.labels if x not in present]
    return corestrict(base, zeroed)[0]


def bigsum(p: int, m: int) -> LinearDatum:
    """BigSum(m): the hyperplane sum (-1)^i x_i = 0 with coordinate projections."""
    if m < 2 or m % 2:
        raise DatumError(f"BigSum needs an even m >= 2, got {m}")
    constraint = FpMatrix.row_vector(p, [(-1) ** i for i in range(m)])
    basis = kernel_basis(constraint)
    return LinearDatum(p, basis.cols, [(f"X{i}", basis.select_rows([i])) for i in range(m)])


def crs(p: int, tau: str, struck: str | None = None, missing: str | None = None) -> LinearDatum:
    """crs^tau: 00 and tau read x, the other two read y.

    ``struck=eta`` co-restricts at eta; ``missing=eta`` deletes eta.
    """
    if tau not in ("01", "10"):
        raise DatumError(f"tau must be 01 or 10, got {tau}")
    other = "10" if tau == "01" else "01"
    x = FpMatrix.row_vector(p, [1, 0])
    y = FpMatrix.row_vector(p, [0, 1])
    maps = {"00": x, tau: x, other: y, "11": y}
    base = LinearDatum(p, 2, [(w, maps[w]) for w in SQUARE])
    if struck is not None and missing is not None:
        raise DatumError("crs takes at most one of struck/missing")
    if struck is not None:
        return corestrict(base, [struck])[0]
    if missing is not None:
        return restrict(base, [w for w in SQUARE if w != missing])
    return base


# ---------------------------------------------------------------------------
# Arithmetic-gate data
# ---------------------------------------------------------------------------


def lag(p: int, a: int, side: str) -> LinearDatum:
    """lag(a, A): X = a x, Y = x.  lag(a, B): X = x, Y = a x."""
    if side == "A":
        rows = [[a], [1]]
    elif side == "B":
        rows = [[1], [a]]
    else:
        raise DatumError(f"side must be A or B, got {side}")
    return forms(p, rows, ["X", "Y"])


_AG_TABLE = {
    (0, "A"): [[1, 0], [0, 2], [1, 0], [0, 1]],
    (0, "B"): [[1, 0], [0, 1], [1, 0], [0, 2]],
    (1, "A"): [[1, 0], [-2, 2], [1, 0], [0, 1]],
    (1, "B"): [[1, 0], [0, 1], [1, 2], [0, 2]],
}


def ag(p: int, i: int, side: str, omega: bool = False) -> LinearDatum:
    """ag(i, A/B) on X1, X2, Y1, Y2; ``omega`` gives the Omega variant."""
    try:
        rows = _AG_TABLE[(i, side)]
    except KeyError:
        raise DatumError(f"no ag datum for i={i}, side={side}") from None
    datum = forms(p, rows, ["X1", "X2", "Y1", "Y2"])
    if not omega:
        return datum
    if side == "A":
        return corestrict(datum, ["Y2"])[0]
    return restrict(datum, ["X1", "X2", "Y1"])


def ag_initial(p: int, i: int, j: int, sign: int, side: str, omega: bool = False) -> LinearDatum:
    """ag(i, j, sign, A/B) on X1, Y1, Y2."""
    if i not in (0, 1) or j not in (0, 1) or sign not in (1, -1):
        raise DatumError(f"invalid ag parameters i={i}, j={j}, sign={sign}")
    c = i + 2 * j
    if side == "A":
        datum = forms(p, [[sign * c, -2 * sign], [1, 0], [0, 1]], ["X1", "Y1", "Y2"])
    elif side == "B":
        datum = forms(p, [[1], [sign * c], [2 * sign]], ["X1", "Y1", "Y2"])
    else:
        raise DatumError(f"side must be A or B, got {side}")
    if not omega:
        return datum
    if side == "A":
        return corestrict(datum, ["Y2"])[0]
    return restrict(datum, ["X1", "Y1"])


def psi_baby(p: int, a: int) -> LinearDatum:
    """The universal datum for the bilinear reformulation.

    V = F_p^4 with phi_1 = x + a z + w, phi_2 = y + z + a w,
    phi_3 = (x, y, w) and phi_4 = (x, y, z).
    """
    rows = {
        "1": [[1, 0, a, 1]],
        "2": [[0, 1, 1, a]],
        "3": [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1]],
        "4": [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 1, 0]],
    }
    return LinearDatum(p, 4, [(k, FpMatrix(p, v)) for k, v in rows.items()])


# ---------------------------------------------------------------------------
# Example systems of forms
# ---------------------------------------------------------------------------


def arithmetic_progression(p: int, length: int = 3) -> LinearDatum:
    """x, x + h, ..., x + (length-1) h."""
    return forms(p, [[1, r] for r in range(length)])


def six_forms(p: int, last: Sequence[int] = (2, 3, 6)) -> LinearDatum:
    """x, x+z, x+y, x+y+z, x+2y+3z and a configurable sixth form in (x, y, z)."""
    return forms(p, [[1, 0, 0], [1, 0, 1], [1, 1, 0], [1, 1, 1], [1, 2, 3], list(last)])


def conic_system(p: int) -> LinearDatum:
    """y + z together with r x + r^2 y + z for r = 0..7."""
    return forms(p, [[0, 1, 1]] + [[r, r * r, 1] for r in range(8)])


# ---------------------------------------------------------------------------
# Dispatch
# ---------------------------------------------------------------------------

_KINDS: dict[str, Callable[..., LinearDatum]] = {
    "trivial": trivial,
    "const": const,
    "uk": uk,
    "gc": gc,
    "sum": sum_datum,
    "bigsum": bigsum,
    "crs": crs,
    "lag": lag,
    "ag": ag,
    "ag_initial": ag_initial,
    "psi": psi_baby,
    "ap": arithmetic_progression,
    "six_forms": six_forms,
    "conic": conic_system,
    "forms": forms,
}


def standard_datum(kind: str, p: int, **params) -> LinearDatum:
    """Build a standard datum by name, e.g. ``standard_datum("gc", 5, s=2)``."""
    try:
        builder = _KINDS[kind]
    except KeyError:
        raise DatumError(f"unknown datum kind {kind!r}; known: {sorted(_KINDS)}") from None
    try:
        return builder(p, **params)
    except TypeError as exc:
        raise DatumError(f"invalid parameters for {kind}: {exc}") from exc
