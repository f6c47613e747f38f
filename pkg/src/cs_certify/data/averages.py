"""Brute-force multilinear averages and Gowers norms at desk scale.

A point of W^n is stored as a ``w_dim x n`` residue array.  Tables index
points by the row-major flattening of that array read as base-p digits,
most significant first.
"""

from __future__ import annotations

import logging
from collections.abc import Callable, Mapping

import numpy as np

from cs_certify.config import get_config, resolve_cap
from cs_certify.data.datum import LinearDatum
from cs_certify.data.standard import uk
from cs_certify.diagrams.labels import Label, as_label, fmt
from cs_certify.errors import CapExceededError, DatumError, DimensionError

logger = logging.getLogger(__name__)

_CHUNK = 1 << 16


def _powers(p: int, length: int) -> np.ndarray:
    return np.array([p ** (length - 1 - k) for k in range(length)], dtype=np.int64)


def points(p: int, dim: int, n: int, start: int = 0, stop: int | None = None) -> np.ndarray:
    """Points ``start..stop`` of (F_p^dim)^n as an array of shape (count, dim, n)."""
    length = dim * n
    stop = p**length if stop is None else stop
    idx = np.arange(start, stop, dtype=np.int64)
    digits = (idx[:, None] // _powers(p, length)[None, :]) % p
    return digits.reshape(len(idx), dim, n)


def encode(p: int, pts: np.ndarray) -> np.ndarray:
    """Table positions of points given with shape (count, dim, n)."""
    flat = pts.reshape(pts.shape[0], -1)
    if flat.shape[1] == 0:
        return np.zeros(pts.shape[0], dtype=np.int64)
    return flat @ _powers(p, flat.shape[1])


class FunctionTable:
    """A 1-bounded complex function on (F_p^w_dim)^n, stored as a flat table."""

    __slots__ = ("p", "w_dim", "n", "values")

    def __init__(self, p: int, w_dim: int, n: int, values) -> None:
        self.p = p
        self.w_dim = w_dim
        self.n = n
        values = np.asarray(values, dtype=np.complex128).reshape(-1)
        if values.shape[0] != p ** (w_dim * n):
            raise DimensionError(
                f"table of length {values.shape[0]} for {p}^{w_dim * n} points"
            )
        if np.any(np.abs(values) > 1 + get_config().tolerance):
            raise DatumError("function table is not 1-bounded")
        self.values = values

    @property
    def size(self) -> int:
        return self.values.shape[0]

    # ------------------------------------------------------------------
    # Constructors
    # ------------------------------------------------------------------

    @classmethod
    def constant(cls, p: int, w_dim: int, n: int, c: complex = 1.0) -> FunctionTable:
        return cls(p, w_dim, n, np.full(p ** (w_dim * n), c, dtype=np.complex128))

    @classmethod
    def delta(cls, p: int, w_dim: int, n: int) -> FunctionTable:
        """Indicator of the origin."""
        values = np.zeros(p ** (w_dim * n), dtype=np.complex128)
        values[0] = 1.0
        return cls(p, w_dim, n, values)

    @classmethod
    def random(cls, p: int, w_dim: int, n: int, rng: np.random.Generator) -> FunctionTable:
        """Unit-modulus values exp(2 pi i u) with u uniform in [0, 1)."""
        u = rng.random(p ** (w_dim * n))
        return cls(p, w_dim, n, np.exp(2j * np.pi * u))

    @classmethod
    def from_function(
        cls, p: int, w_dim: int, n: int, func: Callable[[np.ndarray], np.ndarray]
    ) -> FunctionTable:
        """Tabulate a vectorised function of points shaped (count, w_dim, n)."""
        return cls(p, w_dim, n, func(points(p, w_dim, n)))

    # ------------------------------------------------------------------
    # Operations
    # ------------------------------------------------------------------

    def __call__(self, pts: np.ndarray) -> np.ndarray:
        return self.values[encode(self.p, np.mod(pts, self.p))]

    def conj(self) -> FunctionTable:
        return FunctionTable(self.p, self.w_dim, self.n, np.conj(self.values))

    def translate(self, shift: np.ndarray) -> FunctionTable:
        """x -> f(x + shift) for a shift of shape (w_dim, n)."""
        shift = np.asarray(shift, dtype=np.int64).reshape(1, self.w_dim, self.n)
        pts = points(self.p, self.w_dim, self.n)
        return FunctionTable(self.p, self.w_dim, self.n, self(pts + shift))

    def is_translate_of(self, other: FunctionTable, conjugate: bool = False) -> bool:
        """Whether self equals a translate of ``other`` (or of its conjugate)."""
        base = other.conj() if conjugate else other
        tol = get_config().tolerance
        pts = points(self.p, self.w_dim, self.n)
        for k in range(self.size):
            shift = pts[k]
            if np.allclose(self.values, base(pts + shift[None]), atol=tol, rtol=0):
                return True
        return False

    def mean(self) -> complex:
        return complex(self.values.mean())

    def __repr__(self) -> str:
        return f"FunctionTable(p={self.p}, w_dim={self.w_dim}, n={self.n})"


# ---------------------------------------------------------------------------
# Averages
# ---------------------------------------------------------------------------


def lambda_eval(
    datum: LinearDatum,
    tables: Mapping,
    n: int = 1,
    *,
    cap: int | None = None,
) -> complex:
    """The average over V^n of the product of f_i(phi_i(v)), by enumeration."""
    tables = {as_label(k): t for k, t in tables.items()}
    p = datum.p
    limit = resolve_cap(cap, "lambda_cap")
    total = p ** (datum.v_dim * n)
    if total > limit:
        raise CapExceededError("multilinear average points", total, limit)
    for label in datum.labels:
        table = tables.get(label)
        if table is None:
            raise DatumError(f"no function supplied for index {fmt(label)}")
        if (table.p, table.w_dim, table.n) != (p, datum.w_dim(label), n):
            raise DimensionError(
                f"table for {fmt(label)} has (p, w_dim, n) = {(table.p, table.w_dim, table.n)}"
            )
    acc = 0j
    for start in range(0, total, _CHUNK):
        vs = points(p, datum.v_dim, n, start, min(total, start + _CHUNK))
        prod = np.ones(vs.shape[0], dtype=np.complex128)
        for label, phi in datum.items():
            images = np.mod(np.einsum("wv,cvn->cwn", phi.array, vs), p)
            prod *= tables[label](images)
        acc += prod.sum()
    return complex(acc / total)


def lambda_by_label(
    datum: LinearDatum, builder: Callable[[Label], FunctionTable], n: int = 1
) -> complex:
    return lambda_eval(datum, {x: builder(x) for x in datum.labels}, n)


def gowers_norm(f: FunctionTable, k: int, *, cap: int | None = None) -> float:
    """The U^k norm, via the cube datum with conjugation on odd |omega|."""
    if k < 1:
        raise DatumError(f"Gowers norm needs k >= 1, got {k}")
    if k == 1:
        return abs(f.mean())
    cube = uk(f.p, k, f.w_dim)
    tables = {
        omega: (f.conj() if omega[0].count("1") % 2 else f) for omega in cube.labels
    }
    value = lambda_eval(cube, tables, f.n, cap=cap)
    return float(max(value.real, 0.0) ** (1.0 / 2**k))
