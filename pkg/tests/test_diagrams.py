"""Tests for Cauchy-Schwarz diagrams, their morphisms and surjectivity."""

import pytest

from cs_certify.data.datum import LinearDatum
from cs_certify.data.morphisms import (
    identity_morphism,
    join_data,
    restrict,
    strong_isomorphism,
    verify_datum_morphism,
)
from cs_certify.data.standard import forms, gc, trivial
from cs_certify.diagrams.constructions import (
    HUB,
    datum_of,
    diagram_of,
    disjoint_union,
    join_diagrams,
    prefix_diagram,
    relabel_diagram,
    restrict_diagram,
    self_join,
    toggle_leaves,
)
from cs_certify.diagrams.diagram import Diagram, validate
from cs_certify.diagrams.labels import (
    ZEROI,
    PrefixRules,
    as_label,
    fmt,
    labels,
    sort_key,
    strip_prefix,
)
from cs_certify.diagrams.morphisms import (
    DiagramMorphism,
    compatible_basis,
    compose_diagram_morphisms,
    datum_to_diagram_morphism,
    diagram_to_datum_morphism,
    identity_diagram_morphism,
    is_compatible,
    is_strong_isomorphism,
    patch_morphisms,
    rename_morphism,
    restriction_morphism,
    transport_compatible_tuple,
    verify_diagram_morphism,
)
from cs_certify.diagrams.solver import solve_hub_morphism
from cs_certify.diagrams.surjectivity import section_at, surjective_at
from cs_certify.errors import DatumError, DiagramError, MorphismError
from cs_certify.field.matrix import FpMatrix
from tests.conftest import SQUARE_SHAPE


def _chain(*edges, p=5, leaves=()):
    """A diagram of 1-dimensional vertices joined by identity edges."""
    names = []
    for a, b in edges:
        for v in (a, b):
            if v not in names:
                names.append(v)
    vertices = [(v, (1, v in leaves)) for v in names]
    return Diagram(p, vertices, [((a, b), FpMatrix.identity(p, 1)) for a, b in edges])


# ===================================================================
# Labels
# ===================================================================


class TestLabels:
    def test_round_trip_text(self):
        assert as_label("L;R;⋄") == ("L", "R", "⋄")
        assert fmt(("L", "3")) == "L;3"

    def test_empty_label(self):
        with pytest.raises(DatumError):
            as_label("")
        with pytest.raises(DatumError):
            as_label("L;;3")

    def test_strip_prefix(self):
        assert strip_prefix(("L", "R", "1"), ("L",)) == ("R", "1")
        with pytest.raises(DatumError):
            strip_prefix(("R", "1"), ("L",))

    def test_sort_key_orders_numbers(self):
        names = labels("10", "2", "X", "1")
        assert sorted(names, key=sort_key) == labels("1", "2", "10", "X")

    def test_prefix_rules_longest_match(self):
        rules = PrefixRules({"L": "A", "L;R": "B"})
        assert rules.apply(("L", "R", "1")) == ("B", "1")
        assert rules.apply(("L", "L", "1")) == ("A", "L", "1")
        assert rules.apply(("R", "1")) is None


# ===================================================================
# Diagram and validation
# ===================================================================


class TestDiagram:
    """Tests for construction, lookups and equality."""

    def test_diagram_of_progression(self, ap3):
        d = diagram_of(ap3)
        assert d.nonleaves == [HUB]
        assert d.leaves == ap3.labels
        assert d.dim(HUB) == 2
        assert d.parent_of("3") == HUB

    def test_diagram_of_empty_datum(self):
        d = diagram_of(trivial(5, []))
        assert d.vertices == [HUB]
        assert d.leaves == []

    def test_duplicate_vertex(self):
        with pytest.raises(DiagramError):
            Diagram(5, [("a", (1, False)), ("a", (1, False))])

    def test_explicit_self_loop(self):
        with pytest.raises(DiagramError):
            Diagram(5, [("a", (1, False))], [(("a", "a"), FpMatrix.identity(5, 1))])

    def test_unknown_vertex(self):
        with pytest.raises(DiagramError):
            Diagram(5, [("a", (1, False))], [(("a", "b"), FpMatrix.identity(5, 1))])

    def test_implicit_edges(self, ap3):
        d = diagram_of(ap3)
        assert d.has_edge("1", "1")
        assert d.edge_map("1", "1").is_identity()
        assert d.edge_map(ZEROI, "1").shape == (1, 0)
        assert not d.has_edge("1", "2")

    def test_aliases(self, ap3):
        d = self_join(diagram_of(ap3), ["3"])
        assert d.resolve("R;3") == ("L", "3")
        assert d.names("L;3") == labels("L;3", "R;3")
        assert not d.is_leaf("R;3")

    def test_equality_ignores_choice_of_canonical_name(self):
        a = Diagram(5, [("x", (1, False))], aliases={"y": "x"})
        b = Diagram(5, [("y", (1, False))], aliases={"x": "y"})
        assert a == b
        assert a.fingerprint() == b.fingerprint()

    def test_topological_order(self, ap3):
        d = diagram_of(ap3)
        assert d.topological_order()[0] == HUB


class TestValidate:
    def test_valid(self, ap3):
        assert validate(diagram_of(ap3)).ok

    def test_two_paths(self):
        d = _chain(("a", "b"), ("a", "c"), ("b", "d"), ("c", "d"))
        report = validate(d)
        assert not report.ok
        assert report.problems[0].kind == "paths"

    def test_leaf_with_out_edge(self):
        d = _chain(("a", "x"), ("x", "y"), leaves=("x",))
        report = validate(d)
        assert [p.kind for p in report.problems] == ["leaf"]
        with pytest.raises(DiagramError):
            report.require()

    def test_cycle(self):
        d = _chain(("a", "b"), ("b", "a"))
        assert "cycle" in [p.kind for p in validate(d).problems]

    def test_bad_shape(self):
        vertices = [("a", (2, False)), ("b", (1, True))]
        d = Diagram(5, vertices, [(("a", "b"), FpMatrix.identity(5, 1))])
        assert validate(d).problems[0].kind == "shape"


# ===================================================================
# Functors and joinings
# ===================================================================


class TestDatumOf:
    def test_round_trip(self, ap3, u2):
        for phi in (ap3, u2, gc(5, 2)):
            datum, _ = datum_of(diagram_of(phi))
            assert strong_isomorphism(datum, phi) is not None

    def test_first_joined_diagram(self, ap3):
        datum, _ = datum_of(self_join(diagram_of(ap3), ["3"]))
        assert datum.v_dim == 3
        assert len(datum) == 4

    def test_leafless_vertex(self):
        datum, _ = datum_of(Diagram(5, [("a", (3, False))]))
        assert datum.v_dim == 3
        assert len(datum) == 0

    def test_joining_is_functorial(self, ap3, u2):
        d = join_diagrams(diagram_of(ap3), diagram_of(u2), [("3", "00")])
        datum, _ = datum_of(d)
        expected = join_data(ap3, u2, [("3", "00")])
        assert strong_isomorphism(datum, expected) is not None


class TestJoinDiagrams:
    def test_matched_leaf_becomes_non_leaf(self, ap3):
        d = self_join(diagram_of(ap3), ["3"])
        assert set(d.leaves) == set(labels("L;1", "L;2", "R;1", "R;2"))
        assert d.parents("L;3") == [("L", HUB[0]), ("R", HUB[0])]
        assert validate(d).ok

    def test_empty_matching(self, ap3):
        d = disjoint_union(diagram_of(ap3), diagram_of(ap3))
        assert len(d.leaves) == 6
        assert datum_of(d)[0].v_dim == 4

    def test_cannot_match_non_leaf(self, ap3):
        with pytest.raises(DiagramError):
            join_diagrams(diagram_of(ap3), diagram_of(ap3), [(HUB, HUB)])

    def test_dimension_mismatch(self, ap3):
        with pytest.raises(DiagramError):
            join_diagrams(diagram_of(ap3), diagram_of(gc(5, 2)), [("1", "1")])

    def test_keep_left(self, ap3):
        d = join_diagrams(diagram_of(ap3), diagram_of(ap3), [("3", "3")], left_prefix=None)
        assert set(d.leaves) == set(labels("1", "2", "R;1", "R;2"))


class TestRestrictAndToggle:
    def test_restrict_everything(self, ap3):
        d = diagram_of(ap3)
        assert restrict_diagram(d, d.vertices) == d

    def test_drop_a_leaf(self, ap3):
        sub = restrict_diagram(diagram_of(ap3), [HUB, "1", "2"])
        assert validate(sub).ok
        datum, _ = datum_of(sub)
        assert strong_isomorphism(datum, restrict(ap3, ["1", "2"])) is not None

    def test_drop_parent_of_kept_leaf(self, ap3):
        with pytest.raises(DiagramError):
            restrict_diagram(diagram_of(ap3), ["1", "2", "3"])

    def test_toggle(self, ap3):
        d = toggle_leaves(diagram_of(ap3), ["3"])
        assert d.leaves == labels("1", "2")
        assert toggle_leaves(d, ["3"]) == diagram_of(ap3)


class TestRelabel:
    def test_prefix(self, ap3):
        d = prefix_diagram(diagram_of(ap3), "Z")
        assert set(d.leaves) == set(labels("Z;1", "Z;2", "Z;3"))

    def test_renaming_is_strong_isomorphism(self, ap3):
        old = self_join(diagram_of(ap3), ["3"])
        new, rename = relabel_diagram(old, PrefixRules({"L": "A", "R": "B"}))
        assert new.resolve("B;3") == rename[("L", "3")]
        assert is_strong_isomorphism(rename_morphism(old, new, rename))

    def test_collision(self, ap3):
        d = self_join(diagram_of(ap3), ["3"])
        with pytest.raises(DiagramError):
            relabel_diagram(d, PrefixRules({"L": "A", "R": "A"}))


# ===================================================================
# Morphisms
# ===================================================================


class TestDiagramMorphism:
    """Tests for verification, composition, patching and the adjunction."""

    def test_square_morphism_verifies(self, square_morphism):
        report = verify_diagram_morphism(square_morphism)
        assert report.ok
        assert set(report.respected) == set(labels(*SQUARE_SHAPE))

    def test_sign_flip_fails(self, square_morphism):
        key = ("L", "R", HUB[0])
        theta = dict(square_morphism.theta)
        theta[key] = theta[key].scale(-1)
        broken = DiagramMorphism(
            source=square_morphism.source,
            target=square_morphism.target,
            alpha=square_morphism.alpha,
            theta=theta,
        )
        report = verify_diagram_morphism(broken)
        assert not report.ok
        assert any(f.where.startswith("L;R;⋄->") for f in report.failures)

    def test_identity(self, two_step_builder):
        d = two_step_builder.current
        report = verify_diagram_morphism(identity_diagram_morphism(d))
        assert report.ok
        assert len(report.respected) == len(d.leaves)
        assert is_strong_isomorphism(identity_diagram_morphism(d))

    def test_build_needs_non_leaf_maps(self, ap3):
        d = diagram_of(ap3)
        with pytest.raises(MorphismError):
            DiagramMorphism.build(d, d, {x: x for x in d.vertices})

    def test_leaf_to_non_leaf_rejected(self, ap3):
        d = diagram_of(ap3)
        alpha = {x: x for x in d.vertices}
        alpha[("1",)] = HUB
        theta = {x: FpMatrix.identity(5, d.dim(x)) for x in d.vertices}
        theta[("1",)] = ap3.phi("1")
        report = verify_diagram_morphism(
            DiagramMorphism(source=d, target=d, alpha=alpha, theta=theta)
        )
        assert not report.ok

    def test_compose_with_restriction(self, square_morphism):
        d2 = square_morphism.target
        keep = d2.nonleaves + [as_label("L;L;1")]
        sub = restrict_diagram(d2, keep)
        composite = compose_diagram_morphisms(restriction_morphism(d2, sub), square_morphism)
        report = verify_diagram_morphism(composite)
        assert report.ok
        assert report.respected == labels("L;L;1")

    def test_patching(self, square_morphism):
        d2 = square_morphism.target
        parts = []
        for side in (("L;L;1", "L;R;1"), ("R;L;1", "R;R;1")):
            sub = restrict_diagram(d2, d2.nonleaves + labels(*side))
            parts.append(
                compose_diagram_morphisms(restriction_morphism(d2, sub), square_morphism)
            )
        patched = patch_morphisms(d2, parts)
        assert patched.alpha == square_morphism.alpha
        assert patched.theta == square_morphism.theta
        assert verify_diagram_morphism(patched).ok

    def test_patching_single_part(self, square_morphism):
        patched = patch_morphisms(square_morphism.target, [square_morphism])
        assert patched.theta == square_morphism.theta

    def test_patching_disagreement(self, square_morphism):
        d2 = square_morphism.target
        whole = square_morphism
        theta = dict(whole.theta)
        key = ("L", "L", HUB[0])
        theta[key] = theta[key].scale(2)
        other = DiagramMorphism(source=whole.source, target=d2, alpha=whole.alpha, theta=theta)
        with pytest.raises(MorphismError):
            patch_morphisms(d2, [whole, other])

    def test_patching_uncovered(self, square_morphism):
        d2 = square_morphism.target
        sub = restrict_diagram(d2, d2.nonleaves)
        part = compose_diagram_morphisms(restriction_morphism(d2, sub), square_morphism)
        with pytest.raises(MorphismError):
            patch_morphisms(d2, [part])


class TestAdjunction:
    def test_identity_goes_to_identity(self, ap3):
        d = diagram_of(ap3)
        morph = datum_to_diagram_morphism(identity_morphism(ap3), d)
        ident = identity_diagram_morphism(d)
        assert morph.alpha == ident.alpha
        assert morph.theta == ident.theta

    def test_square_morphism_as_datum_morphism(self, square_morphism, u2):
        datum_morph = diagram_to_datum_morphism(square_morphism, u2)
        report = verify_datum_morphism(datum_morph)
        assert report.ok
        assert len(report.respected) == 4

    def test_round_trip(self, square_morphism, u2):
        there = diagram_to_datum_morphism(square_morphism, u2)
        back = datum_to_diagram_morphism(there, square_morphism.target)
        assert back.alpha == square_morphism.alpha
        assert back.theta == square_morphism.theta

    def test_wrong_source(self, square_morphism, ap3):
        with pytest.raises(MorphismError):
            diagram_to_datum_morphism(square_morphism, ap3)


class TestCompatibleTuples:
    def test_basis_is_compatible(self, two_step_builder):
        d = two_step_builder.current
        basis = compatible_basis(d)
        assert len(basis) == datum_of(d)[0].v_dim
        assert all(is_compatible(d, v) for v in basis)

    def test_transport(self, square_morphism):
        for v in compatible_basis(square_morphism.source):
            moved = transport_compatible_tuple(square_morphism, v)
            assert is_compatible(square_morphism.target, moved)

    def test_incompatible(self, ap3):
        d = diagram_of(ap3)
        values = {HUB: [1, 0], ("1",): [1], ("2",): [1], ("3",): [2]}
        assert not is_compatible(d, values)


class TestSolver:
    def test_impossible_shape(self, ap3):
        shape = {"L;L;1": "1", "L;R;1": "1", "R;L;1": "1", "R;R;1": "2"}
        phi = forms(5, [[1, 0], [0, 1]])
        target = self_join(self_join(diagram_of(ap3), ["3"]), ["L;2", "R;2"])
        assert solve_hub_morphism(phi, target, shape) is None

    def test_missing_leaf(self, ap3):
        with pytest.raises(MorphismError):
            solve_hub_morphism(ap3, diagram_of(ap3), {"1": "1"})


# ===================================================================
# Surjectivity
# ===================================================================


class TestSurjectivity:
    def test_gc_at_triangle_and_last(self):
        d = diagram_of(gc(5, 2))
        assert surjective_at(d, "△")
        assert surjective_at(d, "3")

    def test_not_surjective(self):
        d = diagram_of(LinearDatum(5, 1, [("a", [[1], [2]])]))
        cert = surjective_at(d, "a")
        assert not cert
        assert cert.method == "direct"
        with pytest.raises(DiagramError):
            section_at(d, "a")

    def test_cut_vertex_route(self):
        d = self_join(diagram_of(gc(5, 1)), ["2"])
        cert = surjective_at(d, "L;△", cap=20)
        assert cert
        assert cert.method == "cut-vertex"

    def test_component_route(self, ap3):
        d = disjoint_union(diagram_of(ap3), diagram_of(gc(5, 1)))
        cert = surjective_at(d, "L;1", cap=20)
        assert cert.method == "component"

    def test_section(self, two_step_builder):
        d = two_step_builder.current
        x = as_label("L;L;1")
        section = section_at(d, x)
        assert section[x].is_identity()
        for k in range(d.dim(x)):
            values = {y: m.column(k) for y, m in section.items()}
            assert is_compatible(d, values)
