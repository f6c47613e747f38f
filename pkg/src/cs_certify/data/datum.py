"""Linear data: a space V with one linear map phi_i: V -> W_i per index."""

from __future__ import annotations

import logging
from collections.abc import Iterable, Iterator, Mapping

from cs_certify.diagrams.labels import Label, as_label, check_label, fmt, prefixed
from cs_certify.errors import DatumError
from cs_certify.field.matrix import FpMatrix, check_prime, kernel_basis, rank

logger = logging.getLogger(__name__)


class LinearDatum:
    """An index set with maps ``phi[i]`` of shape ``w_dim(i) x v_dim`` over F_p.

    Index order is the insertion order of ``indices`` and is preserved by
    every construction.
    """

    __slots__ = ("p", "v_dim", "_phi")

    def __init__(self, p: int, v_dim: int, indices: Mapping | Iterable[tuple]) -> None:
        self.p = check_prime(p)
        if v_dim < 0:
            raise DatumError(f"negative dimension {v_dim}")
        self.v_dim = int(v_dim)
        items = indices.items() if isinstance(indices, Mapping) else indices
        phi: dict[Label, FpMatrix] = {}
        for raw, m in items:
            label = check_label(raw)
            if label in phi:
                raise DatumError(f"duplicate index {fmt(label)}")
            if not isinstance(m, FpMatrix):
                m = FpMatrix(self.p, m, shape=None if len(m) else (0, self.v_dim))
            if m.p != self.p:
                raise DatumError(f"index {fmt(label)}: map over F_{m.p}, datum over F_{self.p}")
            if m.cols != self.v_dim:
                raise DatumError(
                    f"index {fmt(label)}: map has {m.cols} columns, v_dim is {self.v_dim}"
                )
            phi[label] = m
        self._phi = phi

    # ------------------------------------------------------------------
    # Access
    # ------------------------------------------------------------------

    @property
    def labels(self) -> list[Label]:
        return list(self._phi)

    def __iter__(self) -> Iterator[Label]:
        return iter(self._phi)

    def __len__(self) -> int:
        return len(self._phi)

    def __contains__(self, label) -> bool:
        try:
            return as_label(label) in self._phi
        except DatumError:
            return False

    def phi(self, label: Label) -> FpMatrix:
        try:
            return self._phi[as_label(label)]
        except KeyError:
            raise DatumError(f"unknown index {fmt(as_label(label))}") from None

    def w_dim(self, label: Label) -> int:
        return self.phi(label).rows

    def items(self) -> list[tuple[Label, FpMatrix]]:
        return list(self._phi.items())

    def stacked(self, labels: Iterable[Label] | None = None) -> FpMatrix:
        """All (or the selected) maps stacked into one matrix."""
        chosen = self.labels if labels is None else [as_label(x) for x in labels]
        return FpMatrix.vstack([self.phi(x) for x in chosen], cols=self.v_dim, p=self.p)

    def joint_kernel(self) -> FpMatrix:
        """Basis columns of the common kernel K of every map."""
        return kernel_basis(self.stacked())

    def is_degenerate(self) -> bool:
        return rank(self.stacked()) < self.v_dim

    def is_surjective_at(self, label: Label) -> bool:
        m = self.phi(label)
        return rank(m) == m.rows

    # ------------------------------------------------------------------
    # Derived data
    # ------------------------------------------------------------------

    def relabel(self, mapping: Mapping[Label, Label]) -> LinearDatum:
        """Rename indices; labels missing from ``mapping`` are kept."""
        return LinearDatum(
            self.p, self.v_dim, [(mapping.get(x, x), m) for x, m in self._phi.items()]
        )

    def with_prefix(self, prefix: str | Label | None) -> LinearDatum:
        return LinearDatum(
            self.p, self.v_dim, [(prefixed(prefix, x), m) for x, m in self._phi.items()]
        )

    def precompose(self, m: FpMatrix) -> LinearDatum:
        """The datum with V replaced by the domain of ``m`` and maps phi_i m."""
        return LinearDatum(self.p, m.cols, [(x, phi @ m) for x, phi in self._phi.items()])

    # ------------------------------------------------------------------
    # Dunder
    # ------------------------------------------------------------------

    def __eq__(self, other) -> bool:
        if not isinstance(other, LinearDatum):
            return NotImplemented
        return (
            self.p == other.p
            and self.v_dim == other.v_dim
            and list(self._phi.items()) == list(other._phi.items())
        )

    def __hash__(self) -> int:
        return hash((self.p, self.v_dim, tuple(self._phi.items())))

    def __repr__(self) -> str:
        body = ", ".join(f"{fmt(x)}:{m.rows}" for x, m in self._phi.items())
        return f"LinearDatum(p={self.p}, v_dim={self.v_dim}, [{body}])"
