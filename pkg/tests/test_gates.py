"""Tests for gates and their assignments."""

import pytest
from pydantic import ValidationError

from cs_certify.config import override
from cs_certify.data.standard import SQUARE, arithmetic_progression, six_forms
from cs_certify.diagrams.constructions import diagram_of
from cs_certify.entailment.replay import replay
from cs_certify.errors import AssignmentError, ParameterError
from cs_certify.gates.agate import abilin, agate_gate, build_agate, digits
from cs_certify.gates.aggregate import (
    aggregate_assignment,
    aggregate_gate,
    build_aggregate,
    corner,
    cross,
    cross_table,
    sumconst,
)
from cs_certify.gates.bigagg import bigagg_gate, bigagg_sumconst, build_bigagg
from cs_certify.gates.bridge import boring, bridge_gate, build_bridge
from cs_certify.gates.gate import (
    Gate,
    GateAssignment,
    complete_permutation,
    permute_modes,
    verify_assignment,
)
from cs_certify.gates.indagate import build_indagate, indagate_gate, initial, middle, mirror
from cs_certify.gates.stargate import (
    ENTRY,
    StarGateParams,
    assign_stargate,
    build_stargate,
    choose_params,
    grow_stash,
    stargate_diagram,
    stargate_gate,
)
from cs_certify.gates.superagate import amulti, build_superagate, row_length, superagate_gate

# ===================================================================
# Aggregate
# ===================================================================


class TestAggregate:
    @pytest.mark.parametrize("s", [1, 2, 3])
    def test_certificate(self, s):
        diagram, cert = build_aggregate(5, s)
        assert cert.claimed_k == 2
        report = replay(cert)
        assert report.ok
        assert report.final == diagram
        assert cert.claimed_gamma[corner("00")] == (("△",), 0)
        assert cert.claimed_gamma[corner("01")] == (("△",), 1)
        assert cert.claimed_gamma[corner("11")] == (("△",), 0)

    def test_needs_positive_s(self):
        with pytest.raises(ParameterError):
            build_aggregate(5, 0)

    def test_gate(self):
        gate = aggregate_gate(5, 2)
        assert gate.modes == [1, 2]
        assert sorted(gate.names) == ["00", "01", "10", "11"]
        assert len(gate.toggles) == len(gate.diagram.leaves) - 4

    def test_gate_with_fewer_corners(self):
        gate = aggregate_gate(5, 2, ["00", "10", "11"])
        assert sorted(gate.names) == ["00", "10", "11"]

    def test_gate_needs_two_corners(self):
        with pytest.raises(ParameterError):
            aggregate_gate(5, 2, ["00"])

    @pytest.mark.parametrize("p", [5, 7, 13])
    @pytest.mark.parametrize("s", [2, 3])
    def test_sumconst(self, p, s):
        assert verify_assignment(aggregate_gate(p, s), sumconst(p, s)).ok

    @pytest.mark.parametrize("mode", [2, 3])
    def test_sumconst_other_modes(self, mode):
        assignment = sumconst(7, 3, mode=mode)
        assert verify_assignment(aggregate_gate(7, 3), assignment).ok

    @pytest.mark.parametrize("present", [["00", "11"], ["01", "10", "11"], ["00", "10", "11"]])
    def test_sumconst_co_restricted(self, present):
        assignment = sumconst(5, 2, present)
        assert verify_assignment(aggregate_gate(5, 2, present), assignment).ok

    @pytest.mark.parametrize("tau", ["01", "10"])
    @pytest.mark.parametrize("s", [2, 3])
    def test_cross(self, tau, s):
        assert verify_assignment(aggregate_gate(7, s), cross(7, s, tau)).ok

    @pytest.mark.parametrize("eta", ["00", "11"])
    def test_cross_dropping_a_corner(self, eta):
        present = [w for w in ("00", "01", "10", "11") if w != eta]
        assignment = cross(5, 2, "01", eta)
        assert verify_assignment(aggregate_gate(5, 2, present), assignment).ok

    @pytest.mark.parametrize("eta", ["00", "11"])
    def test_cross_ten_dropping_a_corner(self, eta):
        present = [w for w in ("00", "01", "10", "11") if w != eta]
        assignment = cross(7, 3, "10", eta)
        assert verify_assignment(aggregate_gate(7, 3, present), assignment).ok

    def test_sumconst_hubs_follow_the_table(self):
        assignment = sumconst(5, 2)
        at = aggregate_gate(5, 2).diagram.resolve
        hub = assignment.morphisms[1].theta
        assert hub[at(("00", "⋄"))].tolist() == [[1, 0, 0], [0, 0, 0], [0, 0, 0]]
        assert hub[at(("01", "⋄"))].tolist() == [[1, 0, 0], [0, 0, 0], [0, 0, 1]]
        assert hub[at(("10", "⋄"))].tolist() == [[1, 1, 0], [0, 0, 0], [0, 0, 0]]
        assert hub[at(("11", "⋄"))].tolist() == [[1, 1, 0], [0, 0, 0], [0, 0, 1]]
        const = assignment.morphisms[2].theta
        assert all(const[at((w, "⋄"))].tolist() == [[0], [1], [0]] for w in SQUARE)

    def test_cross_hubs_follow_the_table(self):
        assignment = cross(7, 2, "01")
        at = aggregate_gate(7, 2).diagram.resolve
        one = assignment.morphisms[1].theta
        assert one[at(("00", "⋄"))].tolist() == [[0, 0], [1, 0], [0, 0]]
        assert one[at(("11", "⋄"))].tolist() == [[6, 1], [1, 0], [0, 0]]
        two = assignment.morphisms[2].theta
        assert two[at(("01", "⋄"))].tolist() == [[1, 6], [0, 1], [0, 0]]
        assert two[at(("10", "⋄"))].tolist() == [[0, 0], [0, 1], [0, 0]]

    @pytest.mark.parametrize("tau", ["01", "10"])
    @pytest.mark.parametrize("r", [1, 2])
    def test_cross_table_reads_crs(self, tau, r):
        table = cross_table(3, tau, r)
        reads = {w: [sum(row[k] for row in table[w].values()) for k in (0, 1)] for w in SQUARE}
        x, y = [1, 0], [0, 1]
        assert reads["00"] == reads[tau] == x
        assert reads["11"] == y

    def test_cross_in_other_modes(self):
        assignment = cross(5, 3, "10", modes=(3, 1))
        assert verify_assignment(aggregate_gate(5, 3), assignment).ok

    def test_cross_parameters(self):
        with pytest.raises(ParameterError):
            cross(5, 2, "00")
        with pytest.raises(ParameterError):
            cross(5, 1, "01")
        with pytest.raises(ParameterError):
            cross(5, 2, "01", "10")

    def test_dispatch(self):
        assert aggregate_assignment(5, 2, "sumconst") is sumconst(5, 2)
        with pytest.raises(ParameterError):
            aggregate_assignment(5, 2, "nothing")


# ===================================================================
# Verification and mode permutation
# ===================================================================


class TestVerifyAssignment:
    def test_wrong_mode_for_a_toggle(self):
        gate = aggregate_gate(5, 2)
        good = sumconst(5, 2)
        t = gate.toggles[0]
        moved = {**good.partition, t: 3 - good.partition[t]}
        bad = GateAssignment(partition=moved, data=good.data, morphisms=good.morphisms)
        report = verify_assignment(gate, bad, max_workers=1)
        assert not report.ok
        with pytest.raises(AssignmentError):
            report.require()

    def test_missing_toggle(self):
        gate = aggregate_gate(5, 2)
        good = sumconst(5, 2)
        t = gate.toggles[0]
        partition = {x: r for x, r in good.partition.items() if x != t}
        bad = GateAssignment(partition=partition, data=good.data, morphisms=good.morphisms)
        report = verify_assignment(gate, bad)
        assert not report.ok
        assert report.failures[0].reason == "toggle has no mode"

    def test_unknown_mode(self):
        gate = aggregate_gate(5, 2)
        good = sumconst(5, 2)
        t = gate.toggles[0]
        bad = GateAssignment(
            partition={**good.partition, t: 7}, data=good.data, morphisms=good.morphisms
        )
        assert verify_assignment(gate, bad).failures[0].reason == "unknown mode"

    def test_missing_mode_datum(self):
        gate = aggregate_gate(5, 2)
        good = sumconst(5, 2)
        data = {r: d for r, d in good.data.items() if r != 2}
        bad = GateAssignment(partition=good.partition, data=data, morphisms=good.morphisms)
        report = verify_assignment(gate, bad)
        assert [f.mode for f in report.failures] == [2]

    def test_serial_and_threaded_agree(self):
        gate = aggregate_gate(5, 3)
        a = verify_assignment(gate, sumconst(5, 3), max_workers=1)
        b = verify_assignment(gate, sumconst(5, 3), max_workers=4)
        assert a.ok and b.ok
        assert a.modes_checked == b.modes_checked == [0, 1, 2, 3]

    def test_permute_modes(self):
        base = sumconst(5, 3)
        swapped = permute_modes(base, {1: 3, 3: 1})
        assert verify_assignment(aggregate_gate(5, 3), swapped).ok
        assert swapped.partition == sumconst(5, 3, mode=3).partition

    def test_not_a_permutation(self):
        with pytest.raises(ParameterError):
            permute_modes(sumconst(5, 3), {1: 2})

    def test_complete_permutation(self):
        perm = complete_permutation(range(1, 4), {1: 3, 2: 1})
        assert perm == {1: 3, 2: 1, 3: 2}

    def test_gate_modes_checked(self):
        diagram, _ = build_bridge(5, 1)
        with pytest.raises(ParameterError):
            Gate(name="bad", diagram=diagram, modes=[0, 1], names={"X": ("L", "△")})
        with pytest.raises(ParameterError):
            Gate(name="bad", diagram=diagram, modes=[1], names={"X": ("L", "2")})


# ===================================================================
# Bridge and IndAGate
# ===================================================================


class TestBridge:
    def test_certificate(self):
        _, cert = build_bridge(5, 2)
        assert cert.claimed_k == 1
        assert cert.claimed_gamma["L;△"] == (("△",), 0)
        assert cert.claimed_gamma["R;△"] == (("△",), 1)
        assert replay(cert).ok

    @pytest.mark.parametrize("s", [1, 2, 3])
    def test_boring(self, s):
        assert verify_assignment(bridge_gate(7, s), boring(7, s)).ok


class TestIndAGate:
    def test_certificate(self):
        diagram, cert = build_indagate(5, 2)
        assert cert.claimed_k == 3
        assert replay(cert).ok
        assert ("A1", "00", "△") in diagram
        assert ("B4", "00", "△") in diagram

    def test_needs_two_modes(self):
        with pytest.raises(ParameterError):
            build_indagate(5, 1)

    def test_mirror(self):
        assert mirror("A1") == "A4"
        assert mirror("B2") == "B3"

    def test_pins(self):
        assert sorted(indagate_gate(5, 2).names) == ["X1", "X2", "Y1", "Y2"]
        assert sorted(indagate_gate(5, 2, initial=True, final=True).names) == ["X1", "Y1"]

    @pytest.mark.parametrize("i", [0, 1])
    @pytest.mark.parametrize("final", [False, True])
    def test_middle(self, i, final):
        gate = indagate_gate(7, 2, final=final)
        assert verify_assignment(gate, middle(7, 2, i, final)).ok

    @pytest.mark.parametrize("i,j,sign", [(0, 0, 1), (1, 0, 1), (0, 1, -1), (1, 1, -1)])
    def test_initial(self, i, j, sign):
        gate = indagate_gate(7, 2, initial=True)
        assert verify_assignment(gate, initial(7, 2, i, j, sign)).ok

    def test_initial_final(self):
        gate = indagate_gate(5, 2, initial=True, final=True)
        assert verify_assignment(gate, initial(5, 2, 1, 0, 1, final=True)).ok

    def test_bad_parameters(self):
        with pytest.raises(ParameterError):
            middle(5, 2, 2)
        with pytest.raises(ParameterError):
            initial(5, 2, 0, 0, 0)


# ===================================================================
# AGate, BigAgg, SuperAGate
# ===================================================================


class TestAGate:
    def test_digits(self):
        assert digits(13, 5) == [1, 0, 1, 1, 0]
        assert digits(-6, 3) == [0, 1, 1]

    @pytest.mark.parametrize(
        "k, steps",
        [
            (1, 0),
            (2, 1),
            pytest.param(4, 2, marks=[pytest.mark.slow, pytest.mark.timeout(600)]),
            pytest.param(8, 3, marks=[pytest.mark.slow, pytest.mark.timeout(1200)]),
        ],
    )
    def test_certificate(self, k, steps):
        diagram, cert = build_agate(5, 2, k)
        assert cert.claimed_k == steps
        report = replay(cert)
        assert report.ok
        assert report.final == diagram
        gate = agate_gate(5, 2, k)
        assert sorted(gate.names) == ["X", "Y"]
        assert len(gate.parts) == k

    def test_k_power_of_two(self):
        with pytest.raises(ParameterError):
            build_agate(5, 2, 3)

    @pytest.mark.parametrize("a", [0, 1, -1, 2, -2, 3])
    def test_abilin_one_gate(self, a):
        assert verify_assignment(agate_gate(7, 2, 1), abilin(7, 2, 1, a)).ok

    @pytest.mark.slow
    @pytest.mark.timeout(300)
    @pytest.mark.parametrize("a", [5, -7])
    def test_abilin_two_gates(self, a):
        assert verify_assignment(agate_gate(13, 2, 2), abilin(13, 2, 2, a)).ok

    @pytest.mark.slow
    @pytest.mark.timeout(600)
    def test_abilin_thirteen(self):
        assert verify_assignment(agate_gate(17, 2, 4), abilin(17, 2, 4, 13)).ok

    def test_abilin_too_large(self):
        with pytest.raises(ParameterError):
            abilin(5, 2, 1, 4)

    def test_abilin_other_modes(self):
        assignment = abilin(7, 3, 1, 3, modes=(3, 1))
        assert verify_assignment(agate_gate(7, 3, 1), assignment).ok

    @pytest.mark.slow
    @pytest.mark.timeout(1800)
    def test_abilin_minus_hundred(self):
        assert verify_assignment(agate_gate(101, 2, 8), abilin(101, 2, 8, -100)).ok

    @pytest.mark.slow
    @pytest.mark.timeout(1200)
    @pytest.mark.parametrize(
        "k, a, modes",
        [(1, 0, (1, 2)), (1, -3, (1, 2)), (1, 2, (2, 3)), (2, 5, (1, 2)), (2, -6, (3, 1))],
    )
    def test_abilin_three_modes(self, k, a, modes):
        assignment = abilin(13, 3, k, a, modes=modes)
        assert verify_assignment(agate_gate(13, 3, k), assignment).ok

    @pytest.mark.slow
    @pytest.mark.timeout(900)
    @pytest.mark.parametrize("a", [13, -13, 6])
    def test_abilin_rails(self, a):
        p, k = 17, 4
        gate = agate_gate(p, 2, k)
        assignment = abilin(p, 2, k, a)
        bits = [(abs(a) >> j) & 1 for j in range(k + 1)]
        sign = -1 if a < 0 else 1
        # partial sums from the bottom digit, and the tails u_l = a_l + 2 u_(l+1)
        t = [sign * sum(2**j * bits[j] for j in range(ell + 1)) for ell in range(k + 1)]
        u = [0] * (k + 2)
        for ell in range(k, -1, -1):
            u[ell] = bits[ell] + 2 * u[ell + 1]
        assert t[k] == a
        assert sign * u[0] == a

        def rail(r, ell, part):
            x = gate.diagram.resolve((f"G{ell}", part, "00", "△"))
            return assignment.morphisms[r].theta[x].tolist()

        for ell in range(1, k):
            assert rail(2, ell, "A1") == [[t[ell] % p]]
            assert rail(2, ell, "B1") == [[sign * 2**ell % p]]
            assert rail(1, ell, "A1") == [[1]]
            assert rail(1, ell, "B1") == [[-2 * u[ell + 1] % p]]


class TestBigAgg:
    def test_certificate(self):
        _, cert = build_bigagg(5, 2, 4)
        assert cert.claimed_k == 2
        assert replay(cert).ok

    def test_m_power_of_two(self):
        with pytest.raises(ParameterError):
            build_bigagg(5, 2, 6)

    @pytest.mark.slow
    @pytest.mark.timeout(300)
    def test_sumconst(self):
        gate = bigagg_gate(7, 2, 4)
        assert sorted(gate.names) == ["X0", "X1", "X2", "X3"]
        assert verify_assignment(gate, bigagg_sumconst(7, 2, 4)).ok


class TestSuperAGate:
    @pytest.mark.parametrize("s,expected", [(2, 1), (3, 2), (4, 4), (5, 4), (6, 8)])
    def test_row_length(self, s, expected):
        assert row_length(s) == expected

    def test_certificate(self):
        _, cert = build_superagate(5, 3, 1, 2)
        assert cert.claimed_k == 1
        assert replay(cert).ok

    @pytest.mark.slow
    @pytest.mark.timeout(600)
    def test_amulti(self):
        gate = superagate_gate(7, 3, 1, 2)
        assert verify_assignment(gate, amulti(7, 3, 1, [2, 3])).ok

    def test_amulti_counts_multipliers(self):
        with pytest.raises(ParameterError):
            amulti(7, 3, 1, [2])


# ===================================================================
# StarGate
# ===================================================================


class TestStarGate:
    def test_params_powers_of_two(self):
        with pytest.raises(ParameterError):
            StarGateParams(s=2, k=3, m=1, n=4)

    def test_params_bounds(self):
        with pytest.raises(ValidationError):
            StarGateParams(s=2, k=1, m=1, n=2)

    def test_step_bound(self):
        params = StarGateParams(s=2, k=4, m=1, n=4)
        assert params.arm_steps == 11
        assert params.step_bound(2) == 24

    def test_choose_params(self):
        ap4 = arithmetic_progression(7, 4)
        params = choose_params(ap4, "1", 3)
        assert params.s == 3
        assert params.m == 2
        assert params.n == 4
        assert 2 ** (params.k + 1) > 2

    @pytest.mark.slow
    @pytest.mark.timeout(900)
    def test_assignment_on_progression(self):
        ap3 = arithmetic_progression(7, 3)
        params = choose_params(ap3, "1", 2)
        gate = stargate_gate(ap3, "1", params)
        assert list(gate.names) == ["1"]
        assignment = assign_stargate(ap3, "1", params, gate=gate)
        assert verify_assignment(gate, assignment).ok
        assert gate.diagram != diagram_of(ap3)

    @pytest.mark.slow
    @pytest.mark.timeout(900)
    def test_grow_stash(self):
        params = choose_params(arithmetic_progression(7, 3), "1", 2)
        grown, cert = grow_stash(7, 2, params.k, params.m)
        report = replay(cert)
        assert report.ok
        assert report.final == grown
        assert report.k <= params.arm_steps
        assert report.gamma[ENTRY][0] == ("△",)

    @pytest.mark.slow
    @pytest.mark.timeout(1800)
    def test_build_on_progression(self):
        ap3 = arithmetic_progression(7, 3)
        params = choose_params(ap3, "1", 2)
        diagram, cert = build_stargate(ap3, "1", params)
        report = replay(cert)
        assert report.ok
        assert cert.claimed_k <= params.step_bound(2)
        assert report.gamma[("F0", "1")][0] == ("1",)
        direct = stargate_diagram(ap3, "1", params)
        assert diagram.vertex_count == direct.vertex_count
        assert diagram.edge_count == direct.edge_count
        assert stargate_gate(ap3, "1", params, diagram=diagram).pins == [("F0", "1")]

    @pytest.mark.slow
    @pytest.mark.timeout(3600)
    def test_build_on_six_forms(self):
        phi = six_forms(11)
        params = StarGateParams(s=2, k=8, m=2, n=8)
        with override(store_intermediate_hashes=False):
            diagram, cert = build_stargate(phi, "1", params)
            report = replay(cert)
        assert report.ok
        assert cert.claimed_k <= params.step_bound(5)
        assert params.step_bound(5) == 68
        assert report.final == diagram
        assert report.gamma[("F0", "1")][0] == ("1",)
