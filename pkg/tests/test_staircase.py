import math
import random

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import reference as ref
from boxdtw.core import ConfigError, GridCostModel, InputError, Metric
from boxdtw.staircase import (
    RIGHT,
    UP,
    UPRIGHT,
    StaircasePath,
    admissible_pairs,
    box_arrays,
    count_paths,
    decompose,
    enumerate_paths,
    L_index,
    L_position,
    pack,
    path_cost,
    R_index,
    R_position,
    shortest_paths_batch,
    shortest_paths_direct,
    sign_assignment,
    unpack,
    verify_codec,
    word_bits,
)

ADMISSIBLE_COUNTS = [5, 17, 35, 59, 89, 125, 167, 215, 269, 329, 395, 467]


ref_cost = ref.box_cost
r_positions = ref.r_positions


class TestBoundary:
    @pytest.mark.parametrize("g", range(2, 8))
    def test_orientation_and_shared_corners(self, g):
        assert L_position(g, 1) == R_position(g, 1) == (1, g)
        assert L_position(g, 2 * g - 1) == R_position(g, 2 * g - 1) == (g, 1)
        L = {L_position(g, k) for k in range(1, 2 * g)}
        R = {R_position(g, k) for k in range(1, 2 * g)}
        assert L & R == {(1, g), (g, 1)}
        assert R == r_positions(g)
        for k in range(1, 2 * g):
            assert L_index(g, L_position(g, k)) == k
            assert R_index(g, R_position(g, k)) == k
        # L runs along the bottom row towards the origin corner, then up
        assert L_position(g, g) == (1, 1) and L_position(g, g + 1) == (2, 1)
        assert R_position(g, g) == (g, g) and R_position(g, 2) == (2, g)


class TestDecompose:
    def test_n4_g3(self):
        grid = decompose([10, 20, 30, 40], [1, 2, 3, 4], 3)
        assert grid.s_rows == 2
        assert grid.group_A(1) == (None, (10,), (20,))
        assert grid.group_A(2) == ((20,), (30,), (40,))

    def test_n3_g2(self):
        grid = decompose([1, 2, 3], [1, 2, 3], 2)
        assert grid.s_rows == 3
        assert [grid.group_A(i) for i in (1, 2, 3)] == [
            (None, (1,)),
            ((1,), (2,)),
            ((2,), (3,)),
        ]

    def test_short_final_group_is_padded(self):
        grid = decompose([1, 2, 3, 4, 5], [1], 3)
        assert grid.s_rows == 3
        assert grid.group_A(3) == ((4,), (5,), None)
        assert grid.row_padded[2].tolist() == [False, False, True]
        assert grid.col_padded[0].tolist() == [True, False, True]

    def test_consecutive_groups_share_one_element(self):
        rng = random.Random(0)
        for g in range(2, 7):
            A = [rng.randint(0, 99) for _ in range(rng.randint(1, 30))]
            grid = decompose(A, A, g)
            for i in range(1, grid.s_rows):
                assert grid.group_A(i)[-1] == grid.group_A(i + 1)[0]

    @pytest.mark.parametrize("g", [1, 14])
    def test_g_out_of_range(self, g):
        with pytest.raises(ConfigError):
            decompose([1], [1], g)


class TestEnumeration:
    @pytest.mark.parametrize("g", [2, 3, 4, 5])
    def test_matches_independent_dfs(self, g):
        ends = r_positions(g)
        expected = []
        for k in range(1, 2 * g):
            start = L_position(g, k)
            expected += [(k, moves) for moves, _ in ref.box_paths(g, start, ends)]
        got = [(P.start, P.moves) for P in enumerate_paths(g)]
        assert sorted(got) == sorted(expected)
        assert len(got) == count_paths(g)

    def test_g2_bound(self):
        paths = enumerate_paths(2)
        assert len(paths) <= 3**3
        for P in paths:
            assert L_index(2, P.positions[0]) and R_index(2, P.end)
            assert len(P.moves) <= 3

    def test_single_diagonal(self):
        P = StaircasePath(2, L_index(2, (1, 1)), (UPRIGHT,))
        assert P.end == (2, 2) and R_index(2, P.end)

    @pytest.mark.parametrize("g", [2, 3, 4, 6])
    def test_structure(self, g):
        words = [P.word for P in enumerate_paths(g)]
        assert words == sorted(words) and len(set(words)) == len(words)
        for P in enumerate_paths(g):
            assert len(set(P.positions)) == len(P.positions)
            assert 1 <= len(P.moves) <= 2 * g - 2
            assert StaircasePath.from_word(g, P.word) == P

    def test_enumeration_order(self):
        paths = enumerate_paths(3)
        keys = [(P.start, P.moves) for P in paths]
        assert keys == sorted(keys)

    def test_invalid_paths(self):
        with pytest.raises(InputError):
            StaircasePath(3, L_index(3, (1, 1)), (UP,))  # (2, 1) is not on R
        with pytest.raises(InputError):
            StaircasePath(2, L_index(2, (1, 1)), (UPRIGHT, UP))


class TestCodec:
    @pytest.mark.parametrize("g", range(2, 14))
    def test_word_fits(self, g):
        assert word_bits(g) <= 64
        assert word_bits(g) == 2 * math.ceil(math.log2(2 * g - 1)) + 2 * (2 * g - 1)

    @pytest.mark.parametrize("g", range(2, 7))
    def test_round_trip_interpreted(self, g):
        res = verify_codec(g, jit=False)
        assert res["count"] == count_paths(g)
        assert res["mismatches"] == res["order_violations"] == 0

    def test_pack_unpack(self):
        w = pack(5, 3, (UP, UPRIGHT, RIGHT))
        assert unpack(5, w) == (3, (UP, UPRIGHT, RIGHT))

    def test_corrupt_word(self):
        with pytest.raises(InputError):
            unpack(3, 0)


class TestAdmissiblePairs:
    def test_counts(self):
        assert [len(admissible_pairs(g)) for g in range(2, 14)] == ADMISSIBLE_COUNTS
        for g in range(2, 14):
            assert len(admissible_pairs(g)) < 4 * g * g

    def test_examples(self):
        for g in (2, 5, 9):
            pairs = set(admissible_pairs(g))
            assert (L_index(g, (g, 1)), R_index(g, (1, g))) not in pairs
            assert (L_index(g, (1, 1)), R_index(g, (g, g))) in pairs

    @pytest.mark.parametrize("g", [2, 3, 4])
    def test_derived_from_enumeration(self, g):
        ends = r_positions(g)
        derived = set()
        for k in range(1, 2 * g):
            for _, end in ref.box_paths(g, L_position(g, k), ends):
                derived.add((k, R_index(g, end)))
        assert set(admissible_pairs(g)) == derived


class TestPathCost:
    def test_single_diagonal_dtw(self):
        grid = decompose([1, 5], [2, 9], 2)
        P = StaircasePath(2, L_index(2, (1, 1)), (UPRIGHT,))
        # box (2, 2) covers rows 1..2 and columns 1..2; (2, 2) is (p_2, q_2)
        assert path_cost(grid, 2, 2, P, GridCostModel.dtw()) == 4

    def test_two_rights_ged(self):
        grid = decompose([1, 5, 7, 3, 8], [2, 9, 4, 6, 0], 3)
        P = StaircasePath(3, L_index(3, (1, 1)), (UP, RIGHT, RIGHT))
        assert path_cost(grid, 2, 2, P, GridCostModel.ged(7)) == 3 * 7
        P = StaircasePath(3, L_index(3, (2, 1)), (RIGHT, RIGHT))
        assert path_cost(grid, 2, 2, P, GridCostModel.ged(7)) == 14

    def test_padding_is_infinite(self):
        grid = decompose([1, 2], [1, 2], 2)
        P = StaircasePath(2, L_index(2, (1, 1)), (UP,))
        assert path_cost(grid, 1, 1, P, GridCostModel.dtw()) == math.inf

    @given(st.integers(2, 4), st.integers(0, 2**32), st.sampled_from([None, 0, 3]))
    def test_random_against_raw_values(self, g, seed, rho):
        rng = random.Random(seed)
        A, B = ref.random_instance(rng, 9, -20, 20)
        grid = decompose(A, B, g)
        model = GridCostModel.dtw() if rho is None else GridCostModel.ged(rho)
        paths = enumerate_paths(g)
        for _ in range(10):
            i, j = rng.randint(1, grid.s_rows), rng.randint(1, grid.s_cols)
            P = rng.choice(paths)
            expected = ref_cost(A, B, g, i, j, P.positions[0], P.moves, rho)
            assert path_cost(grid, i, j, P, model) == expected


class TestSignAssignment:
    def test_examples(self):
        grid = decompose([5, 2, 3], [2, 5, 3], 2)
        # box (2, 2) local (2, m) is A element 2 against B elements 1, 2
        s = sign_assignment(grid, 2, 2, Metric.abs1d())
        assert s(1, 1) == +1  # A1 = 5 vs B1 = 2
        assert s(2, 2) == -1  # A2 = 2 vs B2 = 5
        assert s(2, 1) == +1  # A2 = 2 vs B1 = 2, tie rule

    @given(st.integers(2, 5), st.integers(0, 2**32))
    def test_correct_at_every_valid_cell(self, g, seed):
        rng = random.Random(seed)
        A, B = ref.random_instance(rng, 12, -5, 5)
        grid = decompose(A, B, g)
        for i in range(1, grid.s_rows + 1):
            for j in range(1, grid.s_cols + 1):
                s = sign_assignment(grid, i, j, Metric.abs1d())
                for l in range(1, g + 1):
                    for m in range(1, g + 1):
                        if grid.cell_padded(i, j, l, m):
                            assert s(l, m) == 1
                            continue
                        a = grid.group_A(i)[l - 1][0]
                        b = grid.group_B(j)[m - 1][0]
                        assert s(l, m) * (a - b) == abs(a - b)

    def test_vector_records(self):
        grid = decompose([(3, -1)], [(1, 4)], 2)
        l1 = sign_assignment(grid, 1, 1, Metric.l1(2))
        assert l1(1, 1) == (1, 1)  # padded origin cell carries the tie record
        assert l1(2, 2) == (1, -1)
        linf = sign_assignment(grid, 1, 1, Metric.linf(2))
        assert linf(2, 2) == (0, -1)  # |-1 - 4| = 5 is the maximum, negative sign


def exhaustive_best(A, B, g, i, j, vk, wk, rho=None):
    """(cost, word) of the cheapest path of a pair, ties to the smallest
    word; with no finite path this is the smallest word of the pair."""
    start, end = L_position(g, vk), R_position(g, wk)
    return min(
        (ref_cost(A, B, g, i, j, start, moves, rho), pack(g, vk, moves))
        for moves, e in ref.box_paths(g, start, r_positions(g))
        if e == end
    )


class TestShortestPaths:
    def test_diagonal_cheapest(self):
        grid = decompose([0, 5], [0, 5], 2)
        sig = shortest_paths_direct(grid, 2, 2, GridCostModel.dtw())
        p = admissible_pairs(2).index((L_index(2, (1, 1)), R_index(2, (2, 2))))
        assert sig.path(p).moves == (UPRIGHT,)

    def test_all_equal_takes_smallest_word(self):
        for g in (3, 4):
            grid = decompose([7] * 9, [7] * 9, g)
            sig = shortest_paths_direct(grid, 2, 2, GridCostModel.dtw())
            words = [[] for _ in admissible_pairs(g)]
            table = {pr: k for k, pr in enumerate(admissible_pairs(g))}
            for P in enumerate_paths(g):
                words[table[(P.start, P.end_index)]].append(P.word)
            assert list(sig.paths) == [min(ws) for ws in words]

    @given(st.integers(2, 4), st.integers(0, 2**32), st.sampled_from([None, 0, 2, 9]))
    def test_against_exhaustive_enumeration(self, g, seed, rho):
        rng = random.Random(seed)
        A, B = ref.random_instance(rng, 3 * g, -4, 4)
        grid = decompose(A, B, g)
        model = GridCostModel.dtw() if rho is None else GridCostModel.ged(rho)
        i, j = rng.randint(1, grid.s_rows), rng.randint(1, grid.s_cols)
        sig = shortest_paths_direct(grid, i, j, model)
        for p, (vk, wk) in enumerate(admissible_pairs(g)):
            cost, word = exhaustive_best(A, B, g, i, j, vk, wk, rho)
            got = sig.path(p)
            assert (got.start, got.end_index) == (vk, wk)
            assert ref_cost(A, B, g, i, j, got.positions[0], got.moves, rho) == cost
            assert sig.paths[p] == word

    @given(st.integers(2, 5), st.integers(0, 2**32), st.integers(-1000, 1000))
    def test_translation_invariance(self, g, seed, shift):
        rng = random.Random(seed)
        A, B = ref.random_instance(rng, 12, -30, 30)
        g1, g2 = decompose(A, B, g), decompose([a + shift for a in A], [b + shift for b in B], g)
        model = GridCostModel.dtw()
        for i in range(1, g1.s_rows + 1):
            for j in range(1, g1.s_cols + 1):
                assert (
                    shortest_paths_direct(g1, i, j, model).paths
                    == shortest_paths_direct(g2, i, j, model).paths
                )

    @pytest.mark.parametrize("g", [2, 3, 5, 8])
    @pytest.mark.parametrize("rho", [None, 0, 4])
    def test_compiled_kernel_matches_numpy(self, g, rho):
        rng = random.Random(g)
        A, B = ref.random_instance(rng, 40, -6, 6)
        grid = decompose(A, B, g)
        model = GridCostModel.dtw() if rho is None else GridCostModel.ged(rho)
        ii, jj = np.divmod(np.arange(grid.s_rows * grid.s_cols), grid.s_cols)
        D, valid, _ = box_arrays(grid, ii, jj, model.metric, np.float64)
        w1, c1, f1 = shortest_paths_batch(D, valid, g, model, compiled=True)
        w2, c2, f2 = shortest_paths_batch(D, valid, g, model, compiled=False)
        assert np.array_equal(w1, w2) and np.array_equal(f1, f2)
        assert np.array_equal(c1[f1], c2[f2])

    def test_exact_object_arithmetic(self):
        A = [10**17 + k for k in (3, 1, 4, 1, 5)]
        B = [10**17 + k for k in (2, 7, 1, 8)]
        grid = decompose(A, B, 3)
        assert grid.working_dtype() == object
        sig = shortest_paths_direct(grid, 2, 2, GridCostModel.dtw())
        for p, (vk, wk) in enumerate(admissible_pairs(3)):
            _, word = exhaustive_best(A, B, 3, 2, 2, vk, wk)
            assert sig.paths[p] == word
