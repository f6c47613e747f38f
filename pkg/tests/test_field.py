"""Tests for exact linear algebra over F_p."""

import numpy as np
import pytest

from cs_certify.config import override
from cs_certify.errors import CapExceededError, DimensionError, FieldError
from cs_certify.field.matrix import (
    FpMatrix,
    check_prime,
    image_basis,
    in_span,
    inverse,
    kernel_basis,
    kernel_intersection,
    kron_power,
    rank,
    right_inverse,
    row_space_basis,
    rref,
    solve,
    solve_matrix,
    symmetric_lift,
)
from tests.oracles import brute_rank, kernel_size, span_contains

# ===================================================================
# Primes and scalars
# ===================================================================


class TestCheckPrime:
    """Tests for the modulus check."""

    @pytest.mark.parametrize("p", [2, 3, 5, 7, 13, 17, 101, 65537, 2**31 - 1])
    def test_accepts_primes(self, p):
        assert check_prime(p) == p

    @pytest.mark.parametrize("p", [0, 1, 4, 9, 15, 561, 1105, 2**31])
    def test_rejects_non_primes(self, p):
        with pytest.raises(FieldError):
            check_prime(p)

    def test_rejects_bool(self):
        with pytest.raises(FieldError):
            check_prime(True)

    def test_rejects_float(self):
        with pytest.raises(FieldError):
            check_prime(5.0)


class TestScalars:
    def test_inverse(self):
        assert inverse(3, 7) == 5
        assert inverse(-1, 11) == 10

    def test_inverse_of_zero(self):
        with pytest.raises(ZeroDivisionError):
            inverse(0, 5)

    def test_symmetric_lift(self):
        assert symmetric_lift(4, 5) == -1
        assert symmetric_lift(2, 5) == 2
        assert symmetric_lift(3, 7) == 3
        assert symmetric_lift(1, 2) == 1


# ===================================================================
# FpMatrix
# ===================================================================


class TestFpMatrix:
    """Tests for the immutable matrix type."""

    def test_entries_are_reduced(self):
        m = FpMatrix(5, [[7, -1], [10, 3]])
        assert m.tolist() == [[2, 4], [0, 3]]

    def test_immutable(self):
        m = FpMatrix.identity(3, 2)
        with pytest.raises(ValueError):
            m.array[0, 0] = 2

    def test_not_two_dimensional(self):
        with pytest.raises(DimensionError):
            FpMatrix(5, [1, 2, 3])

    def test_matmul_and_add(self):
        a = FpMatrix(5, [[1, 2], [3, 4]])
        b = FpMatrix(5, [[0, 1], [1, 0]])
        assert (a @ b).tolist() == [[2, 1], [4, 3]]
        assert (a + b).tolist() == [[1, 3], [4, 4]]
        assert (a - a).is_zero()

    def test_apply_to_vector(self):
        a = FpMatrix(7, [[1, 1, 1]])
        assert list(a @ [3, 3, 3]) == [2]

    def test_mixed_moduli(self):
        with pytest.raises(FieldError):
            FpMatrix.identity(3, 2) @ FpMatrix.identity(5, 2)

    def test_shape_mismatch(self):
        with pytest.raises(DimensionError):
            FpMatrix.identity(3, 2) @ FpMatrix.identity(3, 3)

    def test_stacks(self):
        a = FpMatrix.row_vector(5, [1, 2])
        b = FpMatrix.row_vector(5, [3, 4])
        assert FpMatrix.vstack([a, b]).tolist() == [[1, 2], [3, 4]]
        assert FpMatrix.hstack([a, b]).tolist() == [[1, 2, 3, 4]]
        assert FpMatrix.vstack([], cols=3, p=5).shape == (0, 3)

    def test_block_diag(self):
        m = FpMatrix.block_diag([FpMatrix.identity(5, 1), FpMatrix(5, [[2]])], 5)
        assert m.tolist() == [[1, 0], [0, 2]]

    def test_equality_and_hash(self):
        a = FpMatrix(5, [[6]])
        b = FpMatrix(5, [[1]])
        assert a == b
        assert hash(a) == hash(b)
        assert a != FpMatrix(7, [[1]])

    def test_json_round_trip(self):
        m = FpMatrix(11, [[1, 2, 3], [4, 5, 6]])
        assert FpMatrix.from_json(m.to_json()) == m

    def test_json_rejects_unreduced(self):
        with pytest.raises(FieldError):
            FpMatrix.from_json({"p": 5, "rows": 1, "cols": 1, "entries": [5]})

    def test_json_rejects_wrong_count(self):
        with pytest.raises(DimensionError):
            FpMatrix.from_json({"p": 5, "rows": 2, "cols": 2, "entries": [1, 2, 3]})


# ===================================================================
# Elimination
# ===================================================================


class TestRref:
    def test_rref_example(self):
        m = FpMatrix(5, [[2, 4, 1], [1, 2, 4]])
        r, pivots, rk = rref(m)
        assert r.tolist() == [[1, 2, 0], [0, 0, 1]]
        assert pivots == [0, 2]
        assert rk == 2

    def test_zero_matrix(self):
        assert rank(FpMatrix.zeros(7, 3, 4)) == 0

    def test_rank_depends_on_p(self):
        rows = [[1, 1], [1, 3]]
        assert rank(FpMatrix(2, rows)) == 1
        assert rank(FpMatrix(5, rows)) == 2

    @pytest.mark.parametrize("seed", range(5))
    def test_rank_matches_brute_force(self, seed):
        rng = np.random.default_rng(seed)
        rows = rng.integers(0, 3, size=(3, 4)).tolist()
        assert rank(FpMatrix(3, rows)) == brute_rank(rows, 3)

    def test_row_space_basis(self):
        m = FpMatrix(3, [[1, 1], [2, 2], [0, 1]])
        assert row_space_basis(m).tolist() == [[1, 0], [0, 1]]

    def test_image_basis(self):
        m = FpMatrix(5, [[1, 2, 0], [0, 0, 1]])
        assert image_basis(m).tolist() == [[1, 0], [0, 1]]


class TestKernel:
    def test_kernel_example(self):
        m = FpMatrix(5, [[1, 1, 1]])
        k = kernel_basis(m)
        assert k.shape == (3, 2)
        assert (m @ k).is_zero()

    @pytest.mark.parametrize("seed", range(5))
    def test_kernel_dimension_matches_brute_force(self, seed):
        rng = np.random.default_rng(seed)
        rows = rng.integers(0, 5, size=(2, 4)).tolist()
        m = FpMatrix(5, rows)
        k = kernel_basis(m)
        assert 5**k.cols == kernel_size(rows, 5)
        assert (m @ k).is_zero()
        assert rank(k) == k.cols

    def test_kernel_intersection(self):
        maps = [FpMatrix.row_vector(7, [1, 0, 0]), FpMatrix.row_vector(7, [0, 1, 1])]
        k = kernel_intersection(maps, 3, 7)
        assert k.cols == 1
        assert list(k.column(0)) == [0, 6, 1]

    def test_kernel_intersection_of_nothing(self):
        assert kernel_intersection([], 2, 3).is_identity()


class TestSolve:
    def test_solve(self):
        m = FpMatrix(7, [[1, 2], [3, 4]])
        x = solve(m, [5, 6])
        assert list(m @ x) == [5, 6]

    def test_inconsistent(self):
        m = FpMatrix(5, [[1, 1], [2, 2]])
        assert solve(m, [1, 0]) is None

    def test_free_variables_are_zero(self):
        m = FpMatrix(5, [[1, 1]])
        assert list(solve(m, [3])) == [3, 0]

    def test_solve_matrix(self):
        m = FpMatrix(5, [[1, 0], [0, 2]])
        rhs = FpMatrix(5, [[1, 2], [4, 4]])
        x = solve_matrix(m, rhs)
        assert m @ x == rhs

    def test_wrong_rhs_length(self):
        with pytest.raises(DimensionError):
            solve(FpMatrix.identity(3, 2), [1, 2, 0])

    def test_right_inverse(self):
        m = FpMatrix(3, [[1, 1], [0, 1]])
        assert right_inverse(m).tolist() == [[1, 2], [0, 1]]

    def test_right_inverse_of_wide_matrix(self):
        m = FpMatrix(5, [[1, 2, 3]])
        r = right_inverse(m)
        assert (m @ r).is_identity()

    def test_no_right_inverse(self):
        assert right_inverse(FpMatrix(5, [[1, 2], [2, 4]])) is None


class TestKronAndSpan:
    def test_kron_power(self):
        v = FpMatrix.row_vector(7, [1, 2, 3])
        assert kron_power(v, 2).entries() == [1, 2, 3, 2, 4, 6, 3, 6, 2]

    def test_kron_power_zero(self):
        assert kron_power(FpMatrix(5, [[2, 3]]), 0).tolist() == [[1]]

    def test_kron_cap(self):
        v = FpMatrix.row_vector(5, [1, 2, 3])
        with pytest.raises(CapExceededError):
            kron_power(v, 3, cap=10)

    def test_kron_cap_from_config(self):
        v = FpMatrix.row_vector(5, [1, 2, 3])
        with override(tensor_cap=8):
            with pytest.raises(CapExceededError):
                kron_power(v, 2)

    def test_in_span(self):
        gens = [[1, 0, 1], [0, 1, 1]]
        c = in_span([2, 3, 5], gens, 7)
        assert c is not None
        assert list(c) == [2, 3]

    def test_not_in_span(self):
        assert in_span([0, 0, 1], [[1, 0, 1], [0, 1, 1]], 7) is None

    def test_empty_span(self):
        assert in_span([0, 0], [], 5) is not None
        assert in_span([1, 0], [], 5) is None

    @pytest.mark.parametrize("target", [[1, 2, 0], [1, 1, 1], [2, 0, 2]])
    def test_in_span_matches_brute_force(self, target):
        gens = [[1, 0, 1], [0, 1, 2]]
        assert (in_span(target, gens, 3) is not None) == span_contains(target, gens, 3)
