"""Exact dense linear algebra over a prime field F_p.

Entries are int64 numpy arrays holding residues in [0, p).  With p < 2^31
every single product fits in 63 bits; sums of products are reduced in
chunks so that no accumulation can overflow.

All routines are deterministic: elimination uses the leftmost pivot column
and the first row with a nonzero entry, and free variables are set to 0.
"""

from __future__ import annotations

import logging
from collections.abc import Iterable, Sequence
from functools import lru_cache

import numpy as np

from cs_certify.config import resolve_cap
from cs_certify.errors import CapExceededError, DimensionError, FieldError

logger = logging.getLogger(__name__)

MAX_PRIME = 2**31
_INT63 = 2**63 - 1


# ---------------------------------------------------------------------------
# Primes
# ---------------------------------------------------------------------------


@lru_cache(maxsize=256, typed=True)
def check_prime(p: int) -> int:
    """Return ``p`` if it is a prime with 2 <= p < 2^31, else raise FieldError."""
    if not isinstance(p, (int, np.integer)) or isinstance(p, bool):
        raise FieldError(f"modulus must be an integer, got {p!r}")
    p = int(p)
    if p < 2 or p >= MAX_PRIME:
        raise FieldError(f"modulus {p} outside [2, 2^31)")
    if p < 4:
        return p
    if p % 2 == 0:
        raise FieldError(f"modulus {p} is not prime")
    d, r = p - 1, 0
    while d % 2 == 0:
        d //= 2
        r += 1
    # Deterministic for n < 3.2e9.
    for a in (2, 3, 5, 7):
        if a % p == 0:
            continue
        x = pow(a, d, p)
        if x in (1, p - 1):
            continue
        for _ in range(r - 1):
            x = x * x % p
            if x == p - 1:
                break
        else:
            raise FieldError(f"modulus {p} is not prime")
    return p


def inverse(a: int, p: int) -> int:
    """Multiplicative inverse of a nonzero residue."""
    a %= p
    if a == 0:
        raise ZeroDivisionError(f"0 has no inverse mod {p}")
    return pow(a, -1, p)


def symmetric_lift(a: int, p: int) -> int:
    """Integer representative of ``a`` in (-p/2, p/2]."""
    a %= p
    return a - p if a > p // 2 else a


def vector(p: int, values: Iterable[int]) -> np.ndarray:
    """A reduced 1-D residue vector."""
    return np.mod(np.asarray(list(values), dtype=np.int64), p)


def _mulmod(a: np.ndarray, b: np.ndarray, p: int) -> np.ndarray:
    inner = a.shape[-1]
    bound = (p - 1) ** 2
    if bound == 0 or inner == 0:
        out_shape = a.shape[:-1] + b.shape[1:]
        return np.zeros(out_shape, dtype=np.int64)
    chunk = max(1, _INT63 // bound - 1)
    if inner <= chunk:
        return np.mod(a @ b, p)
    out = None
    for start in range(0, inner, chunk):
        part = np.mod(a[..., start : start + chunk] @ b[start : start + chunk], p)
        out = part if out is None else np.mod(out + part, p)
    return out


# ---------------------------------------------------------------------------
# FpMatrix
# ---------------------------------------------------------------------------


class FpMatrix:
    """An immutable dense matrix over F_p (row-major residues)."""

    __slots__ = ("p", "_a")

    def __init__(self, p: int, entries, *, shape: tuple[int, int] | None = None) -> None:
        self.p = check_prime(p)
        a = np.asarray(entries, dtype=np.int64)
        if shape is not None:
            a = a.reshape(shape)
        if a.ndim != 2:
            raise DimensionError(f"matrix entries must be 2-D, got shape {a.shape}")
        a = np.mod(a, self.p)
        a.setflags(write=False)
        self._a = a

    # -- constructors ------------------------------------------------------

    @classmethod
    def _wrap(cls, p: int, a: np.ndarray) -> FpMatrix:
        m = object.__new__(cls)
        m.p = p
        a = np.ascontiguousarray(a, dtype=np.int64)
        a.setflags(write=False)
        m._a = a
        return m

    @classmethod
    def zeros(cls, p: int, rows: int, cols: int) -> FpMatrix:
        return cls._wrap(check_prime(p), np.zeros((rows, cols), dtype=np.int64))

    @classmethod
    def identity(cls, p: int, n: int) -> FpMatrix:
        return cls._wrap(check_prime(p), np.eye(n, dtype=np.int64))

    @classmethod
    def from_rows(cls, p: int, rows: Sequence[Sequence[int]], cols: int | None = None) -> FpMatrix:
        """Build from nested rows; ``cols`` is needed only when there are no rows."""
        if len(rows) == 0:
            return cls.zeros(p, 0, cols or 0)
        return cls(p, [list(r) for r in rows])

    @classmethod
    def row_vector(cls, p: int, values: Iterable[int]) -> FpMatrix:
        values = list(values)
        return cls(p, np.asarray(values, dtype=np.int64).reshape(1, len(values)))

    @classmethod
    def column_vector(cls, p: int, values: Iterable[int]) -> FpMatrix:
        values = list(values)
        return cls(p, np.asarray(values, dtype=np.int64).reshape(len(values), 1))

    @classmethod
    def hstack(cls, blocks: Sequence[FpMatrix], rows: int | None = None, p: int | None = None):
        if not blocks:
            return cls.zeros(p, rows or 0, 0)
        _same_field(blocks)
        heights = {b.rows for b in blocks}
        if len(heights) != 1:
            raise DimensionError(f"hstack of blocks with row counts {sorted(heights)}")
        return cls._wrap(blocks[0].p, np.hstack([b._a for b in blocks]))

    @classmethod
    def vstack(cls, blocks: Sequence[FpMatrix], cols: int | None = None, p: int | None = None):
        if not blocks:
            return cls.zeros(p, 0, cols or 0)
        _same_field(blocks)
        widths = {b.cols for b in blocks}
        if len(widths) != 1:
            raise DimensionError(f"vstack of blocks with column counts {sorted(widths)}")
        return cls._wrap(blocks[0].p, np.vstack([b._a for b in blocks]))

    @classmethod
    def block_diag(cls, blocks: Sequence[FpMatrix], p: int) -> FpMatrix:
        rows = sum(b.rows for b in blocks)
        cols = sum(b.cols for b in blocks)
        out = np.zeros((rows, cols), dtype=np.int64)
        r = c = 0
        for b in blocks:
            out[r : r + b.rows, c : c + b.cols] = b._a
            r += b.rows
            c += b.cols
        return cls._wrap(check_prime(p), out)

    # -- accessors ---------------------------------------------------------

    @property
    def array(self) -> np.ndarray:
        """Read-only int64 view of the entries."""
        return self._a

    @property
    def shape(self) -> tuple[int, int]:
        return self._a.shape

    @property
    def rows(self) -> int:
        return self._a.shape[0]

    @property
    def cols(self) -> int:
        return self._a.shape[1]

    @property
    def T(self) -> FpMatrix:
        return FpMatrix._wrap(self.p, self._a.T)

    def entries(self) -> list[int]:
        """Row-major entries as plain ints."""
        return [int(x) for x in self._a.reshape(-1)]

    def tolist(self) -> list[list[int]]:
        return [[int(x) for x in row] for row in self._a]

    def column(self, j: int) -> np.ndarray:
        return self._a[:, j].copy()

    def row(self, i: int) -> np.ndarray:
        return self._a[i].copy()

    def select_columns(self, idx: Sequence[int]) -> FpMatrix:
        return FpMatrix._wrap(self.p, self._a[:, list(idx)])

    def select_rows(self, idx: Sequence[int]) -> FpMatrix:
        return FpMatrix._wrap(self.p, self._a[list(idx), :])

    def is_zero(self) -> bool:
        return not self._a.any()

    def is_identity(self) -> bool:
        r, c = self.shape
        return r == c and np.array_equal(self._a, np.eye(r, dtype=np.int64))

    # -- arithmetic --------------------------------------------------------

    def _check(self, other: FpMatrix) -> None:
        if other.p != self.p:
            raise FieldError(f"mixed moduli {self.p} and {other.p}")

    def __matmul__(self, other):
        if isinstance(other, FpMatrix):
            self._check(other)
            if self.cols != other.rows:
                raise DimensionError(f"cannot multiply {self.shape} by {other.shape}")
            return FpMatrix._wrap(self.p, _mulmod(self._a, other._a, self.p))
        v = np.asarray(other, dtype=np.int64)
        if v.ndim != 1 or v.shape[0] != self.cols:
            raise DimensionError(f"cannot apply {self.shape} matrix to vector of shape {v.shape}")
        return _mulmod(self._a, np.mod(v, self.p).reshape(-1, 1), self.p).reshape(-1)

    def apply(self, v) -> np.ndarray:
        """Image of a vector."""
        return self @ v

    def __add__(self, other: FpMatrix) -> FpMatrix:
        self._check(other)
        if self.shape != other.shape:
            raise DimensionError(f"cannot add {self.shape} and {other.shape}")
        return FpMatrix._wrap(self.p, np.mod(self._a + other._a, self.p))

    def __sub__(self, other: FpMatrix) -> FpMatrix:
        self._check(other)
        if self.shape != other.shape:
            raise DimensionError(f"cannot subtract {self.shape} and {other.shape}")
        return FpMatrix._wrap(self.p, np.mod(self._a - other._a, self.p))

    def __neg__(self) -> FpMatrix:
        return FpMatrix._wrap(self.p, np.mod(-self._a, self.p))

    def scale(self, c: int) -> FpMatrix:
        return FpMatrix._wrap(self.p, np.mod(self._a * (int(c) % self.p), self.p))

    def __eq__(self, other) -> bool:
        if not isinstance(other, FpMatrix):
            return NotImplemented
        return self.p == other.p and self.shape == other.shape and np.array_equal(
            self._a, other._a
        )

    def __hash__(self) -> int:
        return hash((self.p, self.shape, self._a.tobytes()))

    def __repr__(self) -> str:
        return f"FpMatrix(p={self.p}, {self.tolist()})"

    # -- JSON --------------------------------------------------------------

    def to_json(self) -> dict:
        return {"p": self.p, "rows": self.rows, "cols": self.cols, "entries": self.entries()}

    @classmethod
    def from_json(cls, data: dict) -> FpMatrix:
        rows, cols = int(data["rows"]), int(data["cols"])
        entries = list(data["entries"])
        if len(entries) != rows * cols:
            raise DimensionError(f"{len(entries)} entries for a {rows}x{cols} matrix")
        if any(not 0 <= int(e) < int(data["p"]) for e in entries):
            raise FieldError("matrix entries must already be reduced")
        return cls(int(data["p"]), np.asarray(entries, dtype=np.int64).reshape(rows, cols))


def _same_field(blocks: Sequence[FpMatrix]) -> None:
    moduli = {b.p for b in blocks}
    if len(moduli) != 1:
        raise FieldError(f"mixed moduli {sorted(moduli)}")


# ---------------------------------------------------------------------------
# Elimination
# ---------------------------------------------------------------------------


def _rref_array(a: np.ndarray, p: int, stop_col: int | None = None) -> tuple[np.ndarray, list[int]]:
    a = np.array(a, dtype=np.int64, copy=True)
    rows, cols = a.shape
    limit = cols if stop_col is None else stop_col
    pivots: list[int] = []
    r = 0
    for c in range(limit):
        if r == rows:
            break
        nz = np.flatnonzero(a[r:, c])
        if nz.size == 0:
            continue
        piv = r + int(nz[0])
        if piv != r:
            a[[r, piv]] = a[[piv, r]]
        inv = pow(int(a[r, c]), -1, p)
        if inv != 1:
            a[r] = np.mod(a[r] * inv, p)
        col = a[:, c].copy()
        col[r] = 0
        others = np.flatnonzero(col)
        if others.size:
            a[others] = np.mod(a[others] - np.outer(col[others], a[r]), p)
        pivots.append(c)
        r += 1
    return a, pivots


def rref(m: FpMatrix) -> tuple[FpMatrix, list[int], int]:
    """Reduced row-echelon form, pivot columns and rank."""
    a, pivots = _rref_array(m.array, m.p)
    return FpMatrix._wrap(m.p, a), pivots, len(pivots)


def rank(m: FpMatrix) -> int:
    return rref(m)[2]


def kernel_basis(m: FpMatrix) -> FpMatrix:
    """Columns form a basis of {v : m v = 0}."""
    a, pivots = _rref_array(m.array, m.p)
    cols = m.cols
    free = [c for c in range(cols) if c not in set(pivots)]
    basis = np.zeros((cols, len(free)), dtype=np.int64)
    for k, f in enumerate(free):
        basis[f, k] = 1
        for i, pc in enumerate(pivots):
            basis[pc, k] = (-a[i, f]) % m.p
    return FpMatrix._wrap(m.p, basis)


def solve_matrix(m: FpMatrix, rhs: FpMatrix) -> FpMatrix | None:
    """Some X with m X = rhs (free variables 0), or None if inconsistent."""
    if rhs.p != m.p:
        raise FieldError(f"mixed moduli {m.p} and {rhs.p}")
    if rhs.rows != m.rows:
        raise DimensionError(f"right-hand side has {rhs.rows} rows, matrix has {m.rows}")
    n = m.cols
    aug = np.hstack([m.array, rhs.array])
    a, pivots = _rref_array(aug, m.p, stop_col=n)
    rk = len(pivots)
    if a[rk:, n:].any():
        return None
    x = np.zeros((n, rhs.cols), dtype=np.int64)
    for i, pc in enumerate(pivots):
        x[pc] = a[i, n:]
    return FpMatrix._wrap(m.p, x)


def solve(m: FpMatrix, b) -> np.ndarray | None:
    """Some x with m x = b (free variables 0), or None if inconsistent."""
    b = np.asarray(b, dtype=np.int64)
    if b.ndim != 1 or b.shape[0] != m.rows:
        raise DimensionError(f"right-hand side of length {b.shape} for {m.rows} rows")
    x = solve_matrix(m, FpMatrix._wrap(m.p, np.mod(b, m.p).reshape(-1, 1)))
    return None if x is None else x.column(0)


def right_inverse(m: FpMatrix) -> FpMatrix | None:
    """Some r with m r = identity, or None when m is not surjective."""
    r = solve_matrix(m, FpMatrix.identity(m.p, m.rows))
    if r is not None and not (m @ r).is_identity():
        raise AssertionError("right inverse failed self-check")
    return r


def image_basis(m: FpMatrix) -> FpMatrix:
    """Columns of m at its pivot positions: a basis of the column space."""
    _, pivots, _ = rref(m)
    return m.select_columns(pivots)


def row_space_basis(m: FpMatrix) -> FpMatrix:
    """Nonzero rows of rref(m)."""
    r, _, rk = rref(m)
    return r.select_rows(range(rk))


def kron_power(m: FpMatrix, t: int, cap: int | None = None) -> FpMatrix:
    """The t-fold Kronecker power; t = 0 gives the 1x1 identity."""
    if t < 0:
        raise ValueError("tensor power must be nonnegative")
    limit = resolve_cap(cap, "tensor_cap")
    size = (m.rows**t) * (m.cols**t)
    if size > limit:
        raise CapExceededError("Kronecker power", size, limit)
    out = np.ones((1, 1), dtype=np.int64)
    for _ in range(t):
        out = np.mod(np.kron(out, m.array), m.p)
    return FpMatrix._wrap(m.p, out)


def in_span(target, generators: Sequence, p: int) -> np.ndarray | None:
    """Coefficients c with sum c_j g_j = target, or None."""
    target = np.asarray(target, dtype=np.int64)
    n = target.shape[0]
    if any(len(g) != n for g in generators):
        raise DimensionError("span generators and target differ in length")
    if not generators:
        return np.zeros(0, dtype=np.int64) if not np.mod(target, p).any() else None
    g = FpMatrix(p, np.column_stack([np.asarray(v, dtype=np.int64) for v in generators]))
    return solve(g, target)


def kernel_intersection(maps: Sequence[FpMatrix], dim: int, p: int) -> FpMatrix:
    """Basis (as columns) of the common kernel of maps with ``dim`` columns."""
    if not maps:
        return FpMatrix.identity(p, dim)
    return kernel_basis(FpMatrix.vstack(list(maps)))
