"""Tests for linear data, their morphisms and the brute-force averages."""

import numpy as np
import pytest

from cs_certify.data.averages import FunctionTable, gowers_norm, lambda_eval
from cs_certify.data.datum import LinearDatum
from cs_certify.data.morphisms import (
    DatumMorphism,
    compose_datum_morphisms,
    corestrict,
    direct_sum,
    identity_morphism,
    is_strong_isomorphism,
    join_data,
    normalize,
    restrict,
    restriction_map,
    self_join,
    strong_isomorphism,
    verify_datum_morphism,
)
from cs_certify.data.standard import (
    ag,
    ag_initial,
    arithmetic_progression,
    bigsum,
    const,
    crs,
    forms,
    gc,
    lag,
    psi_baby,
    six_forms,
    standard_datum,
    sum_datum,
    trivial,
    uk,
)
from cs_certify.diagrams.labels import TRIANGLE, ZEROI, labels
from cs_certify.errors import CapExceededError, DatumError, MorphismError
from cs_certify.field.matrix import FpMatrix


def _theta_one(p=5):
    """The morphism from (x, x+a, a) into the square (x, x+a, x+b, x+a+b)."""
    source = forms(p, [[1, 0], [1, 1], [0, 1]])
    target = forms(p, [[1, 0, 0], [1, 1, 0], [1, 0, 1], [1, 1, 1]])
    theta = FpMatrix(p, [[1, 0], [0, 1], [-1, 1]])
    return DatumMorphism.build(
        source,
        target,
        {"1": "1", "2": "2", "3": "3", "4": "3"},
        theta,
        {"4": FpMatrix(p, [[2]])},
    )


# ===================================================================
# LinearDatum
# ===================================================================


class TestLinearDatum:
    def test_basic_access(self, ap3):
        assert ap3.labels == labels("1", "2", "3")
        assert ap3.v_dim == 2
        assert ap3.phi("3").tolist() == [[1, 2]]
        assert ap3.w_dim("2") == 1

    def test_unknown_index(self, ap3):
        with pytest.raises(DatumError):
            ap3.phi("9")

    def test_duplicate_label(self):
        with pytest.raises(DatumError):
            LinearDatum(5, 1, [("a", [[1]]), ("a", [[2]])])

    def test_reserved_label(self):
        with pytest.raises(DatumError):
            LinearDatum(5, 1, [("0", [[1]])])

    def test_column_mismatch(self):
        with pytest.raises(DatumError):
            LinearDatum(5, 2, [("a", [[1]])])

    def test_order_sensitive_equality(self):
        a = forms(5, [[1, 0], [0, 1]], ["x", "y"])
        b = LinearDatum(5, 2, [("y", a.phi("y")), ("x", a.phi("x"))])
        assert a != b
        assert a == forms(5, [[1, 0], [0, 1]], ["x", "y"])

    def test_degenerate(self):
        assert forms(5, [[1, 0, 0], [0, 1, 0]]).is_degenerate()
        assert not arithmetic_progression(5).is_degenerate()

    def test_surjective_at(self):
        phi = LinearDatum(5, 2, [("a", [[1, 0], [2, 0]]), ("b", [[1, 1]])])
        assert not phi.is_surjective_at("a")
        assert phi.is_surjective_at("b")

    def test_with_prefix(self, ap3):
        assert ap3.with_prefix("L").labels == labels("L;1", "L;2", "L;3")

    def test_multi_character_labels(self, u2):
        assert "01" in u2
        assert "0;1" not in u2
        assert "" not in u2
        assert u2.phi("01").tolist() == [[1, 0, 1]]
        assert u2.stacked(["01", "10"]).rows == 2
        assert "L;3" in arithmetic_progression(5).with_prefix("L")

    def test_precompose(self, ap3):
        swapped = ap3.precompose(FpMatrix(5, [[0, 1], [1, 0]]))
        assert swapped.phi("3").tolist() == [[2, 1]]


# ===================================================================
# Standard data
# ===================================================================


class TestStandardData:
    """Tests for the named constructions."""

    def test_u2(self, u2):
        assert u2.labels == labels("00", "01", "10", "11")
        assert u2.v_dim == 3
        assert u2.phi("01").tolist() == [[1, 0, 1]]
        assert u2.phi("11").tolist() == [[1, 1, 1]]

    def test_uk_needs_k_at_least_two(self):
        with pytest.raises(DatumError):
            uk(5, 1)

    def test_uk_dimension(self):
        phi = uk(3, 3, dim=2)
        assert len(phi) == 8
        assert phi.v_dim == 8
        assert phi.w_dim("101") == 2

    def test_gc_degree_one(self):
        phi = gc(3, 1)
        assert phi.labels == [(TRIANGLE,), ("1",), ("2",)]
        assert phi.phi(TRIANGLE).tolist() == [[1, 1]]
        assert phi.phi("1").tolist() == [[0, 1]]
        assert phi.phi("2").tolist() == [[1, 0]]

    def test_gc_shapes(self):
        phi = gc(5, 3, dim=2)
        assert phi.v_dim == 8
        assert phi.w_dim(TRIANGLE) == 2
        assert all(phi.w_dim(str(i)) == 6 for i in range(1, 5))

    def test_lag(self):
        phi = lag(17, 13, "A")
        assert phi.phi("X").tolist() == [[13]]
        assert phi.phi("Y").tolist() == [[1]]
        assert lag(17, 13, "B").phi("Y").tolist() == [[13]]

    def test_lag_bad_side(self):
        with pytest.raises(DatumError):
            lag(5, 2, "C")

    def test_trivial_and_const(self):
        t = trivial(5, ["a", "b"], dim=2)
        assert t.v_dim == 4
        assert t.phi("b").tolist() == [[0, 0, 1, 0], [0, 0, 0, 1]]
        c = const(5, ["a", "b"])
        assert c.phi("a") == c.phi("b")

    def test_sum_is_corestriction(self, u2):
        assert sum_datum(5, ["00", "01", "10"]) == corestrict(u2, ["11"])[0]
        assert sum_datum(5) == u2

    def test_sum_rejects_unknown(self):
        with pytest.raises(DatumError):
            sum_datum(5, ["00", "02"])

    def test_bigsum(self):
        phi = bigsum(5, 4)
        assert phi.labels == labels("X0", "X1", "X2", "X3")
        assert phi.v_dim == 3
        total = sum(((-1) ** i) * phi.phi(f"X{i}").array for i in range(4))
        assert not np.mod(total, 5).any()

    def test_bigsum_odd(self):
        with pytest.raises(DatumError):
            bigsum(5, 3)

    def test_crs(self):
        phi = crs(5, "01")
        assert phi.phi("00") == phi.phi("01")
        assert phi.phi("10") == phi.phi("11")
        assert crs(5, "01", missing="11").labels == labels("00", "01", "10")
        assert crs(5, "10", struck="00").v_dim == 1

    def test_ag_variants(self):
        assert ag(5, 0, "A").labels == labels("X1", "X2", "Y1", "Y2")
        assert ag(5, 1, "B", omega=True).labels == labels("X1", "X2", "Y1")
        assert ag_initial(5, 1, 0, -1, "A").phi("X1").tolist() == [[4, 2]]

    def test_psi_baby(self):
        phi = psi_baby(7, 3)
        assert phi.v_dim == 4
        assert phi.phi("1").tolist() == [[1, 0, 3, 1]]
        assert phi.phi("2").tolist() == [[0, 1, 1, 3]]
        assert phi.w_dim("3") == 3

    def test_six_forms(self, gw_system):
        assert len(gw_system) == 6
        assert gw_system.phi("6").tolist() == [[2, 3, 6]]
        assert six_forms(7, last=(1, 1, 2)).phi("6").tolist() == [[1, 1, 2]]

    def test_dispatch(self):
        assert standard_datum("gc", 5, s=2) == gc(5, 2)
        assert standard_datum("ap", 7, length=4) == arithmetic_progression(7, 4)

    def test_dispatch_unknown_kind(self):
        with pytest.raises(DatumError):
            standard_datum("bogus", 5)

    def test_dispatch_bad_parameters(self):
        with pytest.raises(DatumError):
            standard_datum("gc", 5, degree=2)


# ===================================================================
# Morphisms
# ===================================================================


class TestDatumMorphism:
    def test_worked_morphism_verifies(self):
        report = verify_datum_morphism(_theta_one())
        assert report.ok
        assert report.respected == labels("1", "2")

    def test_morphism_through_zero_index(self):
        source = forms(5, [[1, 0], [1, 1], [0, 1]])
        target = forms(5, [[1, 0, 0], [1, 1, 0], [1, 0, 1], [1, 1, 1]])
        theta = FpMatrix(5, [[1, 0], [0, 1], [-1, 0]])
        alpha = {"1": "1", "2": "2", "3": ZEROI, "4": "3"}
        morph = DatumMorphism.build(source, target, alpha, theta)
        report = verify_datum_morphism(morph)
        assert report.ok
        assert report.respected == labels("1", "2", "4")

    def test_identity_respects_everything(self, ap3):
        report = verify_datum_morphism(identity_morphism(ap3))
        assert report.ok
        assert report.respected == ap3.labels

    def test_perturbed_morphism_fails(self):
        good = _theta_one()
        bad = DatumMorphism(
            source=good.source,
            target=good.target,
            alpha=good.alpha,
            theta=FpMatrix(5, [[1, 0], [0, 1], [0, 1]]),
            sigma=good.sigma,
        )
        report = verify_datum_morphism(bad)
        assert not report.ok
        failure = {f.where: f for f in report.failures}["4"]
        assert failure.witness == [1, 0]
        with pytest.raises(MorphismError):
            report.require()

    def test_missing_sigma_for_different_dims(self):
        with pytest.raises(MorphismError):
            DatumMorphism.build(
                trivial(5, ["a"], dim=2),
                trivial(5, ["a"], dim=1),
                {"a": "a"},
                FpMatrix.zeros(5, 1, 2),
            )

    def test_zero_index(self, ap3):
        sub, inclusion = corestrict(ap3, ["3"])
        assert inclusion.alpha[("3",)] == ZEROI
        report = verify_datum_morphism(inclusion)
        assert report.ok
        assert ("3",) not in report.respected

    def test_compose_with_identities(self):
        theta = _theta_one()
        left = compose_datum_morphisms(theta, identity_morphism(theta.source))
        right = compose_datum_morphisms(identity_morphism(theta.target), theta)
        for composite in (left, right):
            assert composite.alpha == theta.alpha
            assert composite.theta == theta.theta
            assert composite.sigma == theta.sigma

    def test_compose_corestriction_and_restriction(self, ap3):
        sub, inclusion = corestrict(ap3, ["3"])
        composite = compose_datum_morphisms(restriction_map(ap3, ["1", "2"]), inclusion)
        assert composite.source == sub
        assert composite.alpha == {("1",): ("1",), ("2",): ("2",)}
        assert verify_datum_morphism(composite).ok

    def test_compose_endpoint_mismatch(self, ap3, u2):
        with pytest.raises(MorphismError):
            compose_datum_morphisms(identity_morphism(ap3), identity_morphism(u2))


class TestRestrictions:
    def test_restrict_everything(self, ap3):
        assert restrict(ap3, ap3.labels) == ap3

    def test_restrict_unknown(self, ap3):
        with pytest.raises(DatumError):
            restrict(ap3, ["4"])

    def test_corestrict_square(self, u2):
        sub, inclusion = corestrict(u2, ["00", "11"])
        assert sub.v_dim == 1
        assert sub.labels == labels("01", "10")
        assert verify_datum_morphism(inclusion).ok

    def test_restriction_map_verifies(self, u2):
        report = verify_datum_morphism(restriction_map(u2, ["00", "11"]))
        assert report.ok
        assert report.respected == labels("00", "11")


class TestJoinings:
    def test_self_join_of_progression(self, ap3):
        joined = self_join(ap3, ["3"])
        assert joined.v_dim == 3
        assert joined.labels == labels("L;1", "L;2", "R;1", "R;2")

    def test_empty_matching_is_direct_sum(self, ap3, u2):
        joined = join_data(ap3, u2, [])
        assert joined.v_dim == 5
        assert len(joined) == 7
        assert joined == direct_sum(ap3, u2)

    def test_stashed_datum(self, gw_system):
        joined = join_data(gw_system, uk(7, 3), [("6", "000")])
        assert len(joined) == 5 + 7
        assert joined.v_dim == 3 + 4 - 1

    def test_keep_left_labels(self, ap3):
        joined = join_data(ap3, ap3, [("3", "3")], left_prefix=None)
        assert joined.labels == labels("1", "2", "R;1", "R;2")

    def test_dimension_mismatch(self, ap3):
        with pytest.raises(DatumError):
            join_data(ap3, gc(5, 2), [("1", "1")])

    def test_not_a_bijection(self, ap3):
        with pytest.raises(DatumError):
            join_data(ap3, ap3, [("1", "1"), ("1", "2")])

    def test_join_commutes_with_normalization(self):
        degenerate = forms(5, [[1, 0, 0], [1, 1, 0], [1, 2, 0]])
        joined = self_join(normalize(degenerate).datum, ["3"])
        expected = normalize(self_join(degenerate, ["3"])).datum
        assert joined.v_dim == expected.v_dim
        assert strong_isomorphism(joined, expected) is not None


class TestNormalize:
    def test_already_normal(self, ap3):
        nf = normalize(ap3)
        assert nf.datum.v_dim == ap3.v_dim
        assert verify_datum_morphism(nf.to_normal).ok
        assert verify_datum_morphism(nf.from_normal).ok

    def test_drops_zero_summand(self):
        nf = normalize(forms(5, [[1, 0, 0], [0, 1, 0]]))
        assert nf.datum.v_dim == 2

    def test_difference_average(self):
        nf = normalize(forms(5, [[1, -1]]))
        assert nf.datum.v_dim == 1
        assert verify_datum_morphism(nf.to_normal).ok

    def test_shrinks_target_to_image(self):
        phi = LinearDatum(5, 1, [("a", [[1], [2]])])
        nf = normalize(phi)
        assert nf.datum.w_dim("a") == 1
        assert verify_datum_morphism(nf.to_normal).ok
        report = verify_datum_morphism(nf.from_normal)
        assert report.ok
        assert report.respected == []

    def test_from_normal_respects_every_index(self):
        nf = normalize(forms(5, [[1, 0, 0], [0, 1, 0]]))
        assert verify_datum_morphism(nf.from_normal).respected == labels("1", "2")


class TestStrongIsomorphism:
    def test_identity(self, ap3):
        morph = strong_isomorphism(ap3, ap3)
        assert morph is not None
        assert is_strong_isomorphism(morph)

    def test_change_of_coordinates(self, ap3):
        other = ap3.precompose(FpMatrix(5, [[1, 1], [0, 1]]))
        assert strong_isomorphism(ap3, other) is not None

    def test_different_data(self, ap3):
        assert strong_isomorphism(ap3, forms(5, [[1, 0], [0, 1], [4, 2]])) is not None
        assert strong_isomorphism(ap3, arithmetic_progression(5, 4)) is None


# ===================================================================
# Averages
# ===================================================================


class TestFunctionTable:
    def test_not_bounded(self):
        with pytest.raises(DatumError):
            FunctionTable(3, 1, 1, [2.0, 0.0, 0.0])

    def test_translate(self):
        rng = np.random.default_rng(0)
        f = FunctionTable.random(5, 1, 1, rng)
        g = f.translate(np.array([[2]]))
        assert g.is_translate_of(f)
        assert g.conj().is_translate_of(f, conjugate=True)

    def test_constant_mean(self):
        assert FunctionTable.constant(3, 2, 1, 0.5).mean() == pytest.approx(0.5)


class TestLambda:
    """Tests for the exhaustive multilinear average."""

    def test_trivial_is_product_of_means(self):
        rng = np.random.default_rng(1)
        phi = trivial(3, ["a", "b"])
        tables = {x: FunctionTable.random(3, 1, 1, rng) for x in ("a", "b")}
        expected = tables["a"].mean() * tables["b"].mean()
        assert lambda_eval(phi, tables) == pytest.approx(expected)

    def test_const_is_mean_of_product(self):
        rng = np.random.default_rng(2)
        phi = const(5, ["a", "b"])
        f, g = FunctionTable.random(5, 1, 1, rng), FunctionTable.random(5, 1, 1, rng)
        expected = np.mean(f.values * g.values)
        assert lambda_eval(phi, {"a": f, "b": g}) == pytest.approx(expected)

    def test_progression_of_deltas(self):
        phi = arithmetic_progression(3)
        delta = FunctionTable.delta(3, 1, 1)
        value = lambda_eval(phi, {x: delta for x in phi.labels})
        assert value == pytest.approx(1 / 9)

    def test_cap(self, u2):
        one = FunctionTable.constant(5, 1, 1)
        with pytest.raises(CapExceededError):
            lambda_eval(u2, {x: one for x in u2.labels}, cap=100)

    def test_missing_table(self, ap3):
        with pytest.raises(DatumError):
            lambda_eval(ap3, {"1": FunctionTable.constant(5, 1, 1)})

    def test_multiple_copies(self):
        phi = arithmetic_progression(3)
        delta = FunctionTable.delta(3, 1, 2)
        value = lambda_eval(phi, {x: delta for x in phi.labels}, n=2)
        assert value == pytest.approx(1 / 81)


class TestGowersNorm:
    def test_constant_one(self):
        for k in (1, 2, 3):
            assert gowers_norm(FunctionTable.constant(3, 1, 1), k) == pytest.approx(1.0)

    def test_delta(self):
        value = gowers_norm(FunctionTable.delta(3, 1, 1), 2)
        assert value == pytest.approx((1 / 27) ** 0.25)

    def test_rejects_k_zero(self):
        with pytest.raises(DatumError):
            gowers_norm(FunctionTable.constant(3, 1, 1), 0)

    @pytest.mark.parametrize("seed", range(3))
    def test_fourth_power_is_square_average(self, seed):
        rng = np.random.default_rng(seed)
        f = FunctionTable.random(5, 1, 1, rng)
        u2 = uk(5, 2)
        value = lambda_eval(u2, {"00": f, "01": f.conj(), "10": f.conj(), "11": f})
        assert abs(value) == pytest.approx(gowers_norm(f, 2) ** 4)

    def test_gowers_cauchy_schwarz(self):
        rng = np.random.default_rng(3)
        u2 = uk(5, 2)
        for _ in range(10):
            tables = {x: FunctionTable.random(5, 1, 1, rng) for x in u2.labels}
            bound = np.prod([gowers_norm(t, 2) for t in tables.values()])
            assert abs(lambda_eval(u2, tables)) <= bound + 1e-9

    def test_progression_controlled_by_u2(self):
        rng = np.random.default_rng(4)
        phi = arithmetic_progression(5)
        for _ in range(100):
            tables = {x: FunctionTable.random(5, 1, 1, rng) for x in phi.labels}
            assert abs(lambda_eval(phi, tables)) <= gowers_norm(tables[("1",)], 2) + 1e-9
