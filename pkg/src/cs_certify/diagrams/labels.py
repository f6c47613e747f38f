"""Label paths for indices and diagram vertices.

A label is a tuple of string tokens such as ``("L", "R", "⋄")``.  The
textual form joins tokens with ``;`` (``"L;R;⋄"``).  Joinings prefix the
labels of each side with a fresh top-level token.
"""

from __future__ import annotations

from collections.abc import Iterable, Mapping, Sequence

from cs_certify.errors import DatumError

Label = tuple[str, ...]

DIAMOND = "⋄"
TRIANGLE = "△"

# Reserved target of alpha for indices sent to the zero space.
ZEROI: Label = ("0",)

LEFT = "L"
RIGHT = "R"


def as_label(value: str | Sequence[str]) -> Label:
    """Coerce ``"L;3"``, ``("L", "3")`` or ``["L", "3"]`` to a label tuple."""
    if isinstance(value, str):
        tokens = tuple(value.split(";")) if value else ()
    else:
        tokens = tuple(str(t) for t in value)
    if not tokens or any(t == "" for t in tokens):
        raise DatumError(f"Empty label or token in {value!r}")
    return tokens


def check_label(label: Label) -> Label:
    """Validate a stored label; the zero sentinel may never be stored."""
    label = as_label(label)
    if label == ZEROI:
        raise DatumError("The label '0' is reserved for the zero index")
    return label


def fmt(label: Label) -> str:
    return ";".join(label)


def prefixed(prefix: str | Label | None, label: Label) -> Label:
    if prefix is None:
        return label
    if isinstance(prefix, str):
        return (prefix, *label)
    return (*prefix, *label)


def has_prefix(label: Label, prefix: Label) -> bool:
    return label[: len(prefix)] == prefix


def strip_prefix(label: Label, prefix: Label) -> Label:
    if not has_prefix(label, prefix):
        raise DatumError(f"{fmt(label)} does not start with {fmt(prefix)}")
    return label[len(prefix):]


def labels(*names: str) -> list[Label]:
    """Shorthand: ``labels("1", "2", "L;3")``."""
    return [as_label(n) for n in names]


def sort_key(label: Label) -> tuple:
    """Order labels token by token, numbers numerically."""
    return tuple((0, int(t), "") if t.isdigit() else (1, 0, t) for t in label)


# ---------------------------------------------------------------------------
# Rewriting
# ---------------------------------------------------------------------------


def as_prefix(value: str | Sequence[str]) -> Label:
    """Like as_label, but the empty prefix is allowed."""
    if isinstance(value, str):
        return tuple(value.split(";")) if value else ()
    return tuple(str(t) for t in value)


class PrefixRules:
    """Longest-prefix label rewriting.

    Each rule maps an old prefix to a new prefix.  A label is rewritten by
    the rule with the longest matching prefix; labels that match no rule
    are reported as unmatched (``None``).
    """

    def __init__(self, rules: Mapping[Label, Label] | Iterable[tuple[Label, Label]]) -> None:
        items = rules.items() if isinstance(rules, Mapping) else rules
        self._rules = sorted(
            ((as_prefix(a), as_prefix(b)) for a, b in items),
            key=lambda r: -len(r[0]),
        )

    @property
    def rules(self) -> list[tuple[Label, Label]]:
        return list(self._rules)

    def apply(self, label: Label) -> Label | None:
        for old, new in self._rules:
            if has_prefix(label, old):
                return new + label[len(old):]
        return None

    def __repr__(self) -> str:
        body = ", ".join(f"{fmt(a)}->{fmt(b)}" for a, b in self._rules)
        return f"PrefixRules({body})"
