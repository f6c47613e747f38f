"""Stashing: joining a dual-function copy at a leaf, discarding it, revealing it.

A stash of D at leaf i of C is the joining ``C +_{i<->j} D`` with C's labels
kept and D's labels prefixed by the single token ``stash_token(i)``.
"""

from __future__ import annotations

import logging
from collections.abc import Iterable, Mapping

from cs_certify.diagrams.constructions import join_diagrams
from cs_certify.diagrams.diagram import Diagram
from cs_certify.diagrams.labels import LEFT, RIGHT, Label, as_label, fmt, has_prefix, prefixed
from cs_certify.diagrams.morphisms import DiagramMorphism
from cs_certify.diagrams.surjectivity import section_at
from cs_certify.entailment.certificate import (
    CsStep,
    EntailmentCertificate,
    MorphStep,
    RelabelStep,
    WeakenStep,
)
from cs_certify.entailment.replay import CertificateBuilder, apply_step
from cs_certify.errors import CertificateError, DiagramError
from cs_certify.field.matrix import FpMatrix

logger = logging.getLogger(__name__)


def stash_token(leaf: Label) -> str:
    return "R:" + ".".join(leaf)


def stash(base: Diagram, extra: Diagram, i, j, *, prefix: str | None = None) -> Diagram:
    """``base +_{i<->j} extra`` keeping base labels."""
    i = base.resolve(i)
    return join_diagrams(
        base, extra, [(i, j)], left_prefix=None, right_prefix=prefix or stash_token(i)
    )


def stash_all(base: Diagram, extra: Diagram, j, leaves: Iterable) -> Diagram:
    """The iterated joining of one copy of ``extra`` at each leaf in ``leaves``."""
    out = base
    for i in leaves:
        out = stash(out, extra, i, j)
    return out


def discard_stash(
    base: Diagram,
    extra: Diagram,
    i,
    j,
    *,
    left_prefix: str | None = LEFT,
    right_prefix: str | None = RIGHT,
    section: Mapping[Label, FpMatrix] | None = None,
) -> DiagramMorphism:
    """The collapsing morphism ``base -> base +_{i<->j} extra``.

    Respects every leaf of ``base`` other than i and sends every leaf of
    the stashed copy to i.  ``section`` is a section of ``extra`` at j as
    returned by :func:`section_at`; it is computed when not given.
    """
    i, j = base.resolve(i), extra.resolve(j)
    if not base.is_leaf(i) or not extra.is_leaf(j):
        raise DiagramError("stashing joins a leaf to a leaf", kind="join", where=(i, j))
    if section is None:
        section = section_at(extra, j)
    joined = join_diagrams(
        base, extra, [(i, j)], left_prefix=left_prefix, right_prefix=right_prefix
    )
    z = base.parent_of(i)
    down = base.edge_map(z, i)

    alpha: dict[Label, Label] = {}
    theta: dict[Label, FpMatrix] = {}
    for x in base.vertices:
        if x != i:
            alpha[prefixed(left_prefix, x)] = x
            theta[prefixed(left_prefix, x)] = FpMatrix.identity(base.p, base.dim(x))
    for y in extra.vertices:
        name = joined.resolve(prefixed(right_prefix, y))
        if extra.is_leaf(y) and y != j:
            alpha[name] = i
            theta[name] = section[y]
        else:
            alpha[name] = z
            theta[name] = section[y] @ down
    return DiagramMorphism(source=base, target=joined, alpha=alpha, theta=theta)


# ---------------------------------------------------------------------------
# Revealing
# ---------------------------------------------------------------------------


def unstash(current: Diagram, i) -> Diagram:
    """Remove the copy stashed at i and make i a leaf again.

    A vertex belongs to the copy when every one of its names carries the
    stash token; the joined vertex keeps its plain names with i canonical.
    """
    i = as_label(i)
    token = stash_token(i)
    rename: dict[Label, Label] = {}
    aliases: dict[Label, Label] = {}
    for x, names in current.name_table().items():
        plain = [n for n in names if n[0] != token]
        if not plain:
            continue
        canonical = i if i in plain else plain[0]
        rename[x] = canonical
        aliases.update({n: canonical for n in plain if n != canonical})
    vertices = [
        (new, (current.dim(x), current.is_leaf(x) or new == i)) for x, new in rename.items()
    ]
    edges = [
        ((rename[x], rename[y]), m)
        for (x, y), m in current.edge_items()
        if x in rename and y in rename
    ]
    return Diagram(current.p, vertices, edges, aliases)


class _Lifter:
    """Carries the stash set through the steps of a certificate."""

    def __init__(
        self,
        extra: Diagram,
        j: Label,
        base: Diagram,
        stashed: list[Label],
        section: Mapping[Label, FpMatrix],
        into: CertificateBuilder | None = None,
    ) -> None:
        self.extra = extra
        self.j = j
        self.section = section
        self.plain = base
        self.stashed = list(stashed)
        initial = stash_all(base, extra, j, stashed)
        if into is None:
            self.builder = CertificateBuilder(initial)
        elif into.current != initial:
            raise CertificateError("builder is not at the stashed diagram")
        else:
            self.builder = into
        self.start = (len(self.builder.steps), self.builder.k)

    def discard(self, i: Label) -> None:
        """A zero-CS morph step dropping the copy stashed at i."""
        smaller = unstash(self.builder.current, i)
        morph = discard_stash(
            smaller,
            self.extra,
            i,
            self.j,
            left_prefix=None,
            right_prefix=stash_token(i),
            section=self.section,
        )
        self.builder.morph(morph)
        self.stashed.remove(i)

    def keep_only(self, keep: Iterable) -> None:
        keep = set(keep)
        for i in [x for x in self.stashed if x not in keep]:
            self.discard(i)

    def morph(self, step: MorphStep) -> None:
        morph = step.morphism
        report_gamma = apply_step(self.plain, step)[1]
        live = {i for i in self.stashed if any(t == i for t, _ in report_gamma.values())}
        self.keep_only(live)
        source_plain = morph.source
        images = {i: morph.alpha[i] for i in self.stashed}
        source = stash_all(source_plain, self.extra, self.j, images.values())
        target = self.builder.current
        alpha = {target.resolve(x): a for x, a in morph.alpha.items()}
        theta = {target.resolve(x): m for x, m in morph.theta.items()}
        for i, r in images.items():
            old, new = stash_token(i), stash_token(r)
            for y in self.extra.vertices:
                if y == self.j:
                    continue
                name = (old, *y)
                alpha[name] = (new, *y)
                theta[name] = FpMatrix.identity(target.p, self.extra.dim(y))
        lifted = DiagramMorphism(source=source, target=target, alpha=alpha, theta=theta)
        self.builder.morph(lifted)
        self.plain = source_plain
        self.stashed = list(images.values())

    def cs(self, step: CsStep) -> None:
        shared = [self.plain.resolve(x) for x in step.leaves]
        self.keep_only([i for i in self.stashed if i not in shared])
        self.builder.cs(shared)
        rules: list[tuple[Label, Label]] = [((), ())]
        new_stash = []
        for i in self.stashed:
            for side in (LEFT, RIGHT):
                moved = prefixed(side, i)
                rules.append(((side, stash_token(i)), (stash_token(moved),)))
                new_stash.append(moved)
        self.builder.relabel(rules)
        self.plain = apply_step(self.plain, step)[0]
        self.stashed = new_stash

    def relabel(self, step: RelabelStep) -> None:
        renamed, step_gamma, _ = apply_step(self.plain, step)
        rename = {old: new for new, (old, _) in step_gamma.items()}
        rules = list(step.rules) + [
            ((stash_token(i),), (stash_token(rename[i]),)) for i in self.stashed
        ]
        self.builder.relabel(rules)
        self.plain = renamed
        self.stashed = [rename[i] for i in self.stashed]

    def weaken(self, step: WeakenStep) -> None:
        if step.keep is None:
            self.builder.weaken(None, step.k)
            return
        keep = [self.plain.resolve(x) for x in step.keep]
        self.keep_only(keep)
        extra_leaves = [
            x for x in self.builder.current.leaves
            if any(has_prefix(x, (stash_token(i),)) for i in self.stashed)
        ]
        self.builder.weaken(keep + extra_leaves, step.k)


def _needed(cert: EntailmentCertificate, target_leaves: Iterable) -> list[set[Label]]:
    """For each step, the leaves before it that gamma links to one of the target leaves."""
    diagrams = [cert.initial]
    gammas = []
    for step in cert.steps:
        after, step_gamma, _ = apply_step(diagrams[-1], step)
        diagrams.append(after)
        gammas.append({after.resolve(x): v for x, v in step_gamma.items()})
    needed = [set() for _ in diagrams]
    needed[-1] = {diagrams[-1].resolve(r) for r in target_leaves}
    for t in reversed(range(len(gammas))):
        lost = [x for x in needed[t + 1] if x not in gammas[t]]
        if lost:
            raise CertificateError(f"{fmt(lost[0])} drops out of gamma", step=t)
        needed[t] = {diagrams[t].resolve(gammas[t][x][0]) for x in needed[t + 1]}
    return needed


def reveal_stash(
    cert: EntailmentCertificate,
    extra: Diagram,
    j,
    base_leaves: Iterable,
    target_leaves: Iterable,
    *,
    section: Mapping[Label, FpMatrix] | None = None,
    into: CertificateBuilder | None = None,
) -> EntailmentCertificate:
    """Lift ``C1 |=^M C2`` to the stashed diagrams over ``base_leaves`` and ``target_leaves``.

    Morph steps lift with identity maps on the stashed copies, CS steps lift
    verbatim followed by a relabelling of the doubled copies, and copies
    whose leaf drops out of gamma are discarded by collapsing morphisms.
    The CS count is unchanged.  One section of ``extra`` at j serves every
    discard; computing it checks that ``extra`` is surjective at j.

    With ``into`` the lifted steps are pushed onto that builder, which must
    stand at the stashed diagram, and its whole certificate is returned.
    """
    j = extra.resolve(j)
    if section is None:
        section = section_at(extra, j)
    plain = cert.initial
    zs = [plain.resolve(i) for i in base_leaves]
    for i in zs:
        if not plain.is_leaf(i) or plain.dim(i) != extra.dim(j):
            raise CertificateError(f"cannot stash at {fmt(i)}")
    needed = _needed(cert, target_leaves)
    if not needed[0] <= set(zs):
        raise CertificateError("a target leaf does not trace back to a stashed leaf")
    lifter = _Lifter(extra, j, plain, zs, section, into)
    for index, step in enumerate(cert.steps):
        try:
            lifter.keep_only(needed[index])
            if isinstance(step, MorphStep):
                lifter.morph(step)
            elif isinstance(step, CsStep):
                lifter.cs(step)
            elif isinstance(step, RelabelStep):
                lifter.relabel(step)
            else:
                lifter.weaken(step)
        except CertificateError as exc:
            raise CertificateError(f"cannot lift: {exc}", step=index) from exc

    final_plain = lifter.plain
    wanted = [final_plain.resolve(r) for r in target_leaves]
    missing = [r for r in wanted if r not in lifter.stashed]
    if missing:
        raise CertificateError(
            f"{fmt(missing[0])} is not in the preimage of the stashed leaves under gamma"
        )
    lifter.keep_only(wanted)
    first, k0 = lifter.start
    logger.info(
        "Revealed %d stashed copies over %d steps (k=%d)",
        len(wanted),
        len(lifter.builder.steps) - first,
        lifter.builder.k - k0,
    )
    return lifter.builder.certificate()
