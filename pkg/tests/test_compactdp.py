import random
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

import reference as ref
from boxdtw.compactdp import (
    BoundaryValues,
    WorkStats,
    box_propagate,
    boxed_dp,
    dtw_subquadratic,
    evaluation_bound,
    ged_subquadratic,
    minimal_pairs_dc,
)
from boxdtw.core import INF, ConfigError, GridCostModel, Metric, coupling_cost, matching_cost
from boxdtw.preprocess import preprocess_direct
from boxdtw.staircase import L_position, R_position, admissible_pairs, decompose, pair_table


def lookup_from(costs, g):
    table = pair_table(g)

    def lookup(u, w):
        p = table[u][w]
        return None if p < 0 else costs[p]

    return lookup


class TestMinimalPairs:
    def test_single_w_is_a_scan(self):
        g = 3
        costs = list(range(len(admissible_pairs(g))))
        Lv = {u: 10 * u for u in range(1, 2 * g)}
        stats = WorkStats()
        (mp,) = minimal_pairs_dc(range(1, 2 * g), [3], lookup_from(costs, g), Lv, stats=stats)
        candidates = [(Lv[u] + costs[p], u) for p, (u, w) in enumerate(admissible_pairs(g)) if w == 3]
        assert (mp.ccost, mp.u) == min(candidates)
        assert stats.candidate_evaluations == len(candidates)

    @given(st.integers(2, 6), st.integers(0, 2**32))
    def test_brute_force_argmin(self, g, seed):
        """Costs of a real box (so the Monge structure holds), random finite L."""
        rng = random.Random(seed)
        A, B = ref.random_instance(rng, 3 * g, -20, 20, n_min=2 * g)
        grid = decompose(A, B, g)
        sigs, tables = preprocess_direct(grid, GridCostModel.dtw())
        i, j = min(2, grid.s_rows), min(2, grid.s_cols)
        costs = []
        for p, (vk, wk) in enumerate(admissible_pairs(g)):
            costs.append(
                min(
                    ref.box_cost(A, B, g, i, j, L_position(g, vk), moves)
                    for moves, end in ref.box_paths(g, L_position(g, vk), ref.r_positions(g))
                    if end == R_position(g, wk)
                )
            )
        Lv = {u: rng.randint(0, 60) for u in range(1, 2 * g)}
        pairs = minimal_pairs_dc(range(1, 2 * g), range(2, 2 * g - 1), lookup_from(costs, g), Lv)
        for mp in pairs:
            best = min(
                (Lv[u] + costs[p], u) for p, (u, w) in enumerate(admissible_pairs(g)) if w == mp.w
            )
            assert mp.ccost == best[0]

    def test_single_finite_source(self):
        g = 4
        costs = [1] * len(admissible_pairs(g))
        for k in range(1, 2 * g):
            Lv = {u: (0 if u == k else INF) for u in range(1, 2 * g)}
            pairs = minimal_pairs_dc(range(1, 2 * g), range(1, 2 * g), lookup_from(costs, g), Lv)
            reachable = {w for u, w in admissible_pairs(g) if u == k}
            for mp in pairs:
                if mp.w in reachable:
                    assert (mp.u, mp.ccost) == (k, 1)
                else:
                    assert mp.ccost == INF


def border(g, i, j, k, rho):
    """Border value of L(k) of box (i, j), or None for an interior position."""
    l, m = L_position(g, k)
    r, c = (i - 1) * (g - 1) + l - 1, (j - 1) * (g - 1) + m - 1
    if r and c:
        return None
    if rho is None:
        return 0 if r == c == 0 else INF
    return rho * (r + c)


def propagate_all(A, B, g, rho):
    """Manual wavefront with box_propagate; returns R boundaries per box."""
    grid = decompose(A, B, g)
    model = GridCostModel.dtw() if rho is None else GridCostModel.ged(rho)
    sigs, tables = preprocess_direct(grid, model)
    R = {}
    for i in range(1, grid.s_rows + 1):
        for j in range(1, grid.s_cols + 1):
            vals = []
            for k in range(1, 2 * g):
                b = border(g, i, j, k, rho)
                if b is not None:
                    vals.append(b)
                elif k < g:
                    vals.append(R[i - 1, j][g + k - 1])
                elif k == g:
                    vals.append(R[i - 1, j][2 * g - 1])
                else:
                    vals.append(R[i, j - 1][k - g + 1])
            R[i, j] = box_propagate(i, j, BoundaryValues(vals), sigs, tables, model)
    return grid, R


class TestBoxPropagate:
    @given(st.integers(2, 5), st.integers(0, 2**32), st.sampled_from([None, 0, 1, 17]))
    def test_stitched_boundaries_match_quadratic_dp(self, g, seed, rho):
        rng = random.Random(seed)
        A, B = ref.random_instance(rng, 14, -30, 30)
        grid, R = propagate_all(A, B, g, rho)
        M = ref.dp_matrix(A, B, rho)
        for (i, j), Rv in R.items():
            for w in range(1, 2 * g):
                l, m = R_position(g, w)
                r, c = grid.global_row(i, l), grid.global_col(j, m)
                if r <= len(A) and c <= len(B):
                    assert Rv[w] == M[r][c], (i, j, w)

    def test_constant_sequences(self):
        g = 3
        grid = decompose([4] * 9, [4] * 9, g)
        model = GridCostModel.dtw()
        sigs, tables = preprocess_direct(grid, model)
        rng = random.Random(0)
        for _ in range(10):
            Lv = [rng.randint(0, 50) for _ in range(2 * g - 1)]
            Rv = box_propagate(2, 2, BoundaryValues(Lv), sigs, tables, model)
            # R(1) and R(2g-1) are the cells L(1) and L(2g-1) and are copied
            for w in range(2, 2 * g - 1):
                expected = min(Lv[u - 1] for u, ww in admissible_pairs(g) if ww == w)
                assert Rv[w] == expected

    def test_ged_rho_zero_exhaustive_scan(self):
        g = 3
        rng = random.Random(4)
        A, B = ref.random_instance(rng, 6, -9, 9, n_min=5)
        grid = decompose(A, B, g)
        model = GridCostModel.ged(0)
        sigs, tables = preprocess_direct(grid, model)
        for _ in range(5):
            Lv = [rng.randint(0, 20) for _ in range(2 * g - 1)]
            Rv = box_propagate(2, 2, BoundaryValues(Lv), sigs, tables, model)
            for w in range(2, 2 * g - 1):
                expected = min(
                    Lv[u - 1] + ref.box_cost(A, B, g, 2, 2, L_position(g, u), moves, 0)
                    for u in range(1, 2 * g)
                    for moves, end in ref.box_paths(g, L_position(g, u), ref.r_positions(g))
                    if end == R_position(g, w)
                )
                assert Rv[w] == expected

    def test_corners_copy_through(self):
        g = 3
        grid = decompose([1, 2, 3, 4, 5], [5, 4, 3, 2, 1], g)
        sigs, tables = preprocess_direct(grid, GridCostModel.dtw())
        Lv = [7, 1, 2, 3, 4]
        Rv = box_propagate(2, 2, BoundaryValues(Lv), sigs, tables, GridCostModel.dtw())
        assert Rv[1] == 7 and Rv[2 * g - 1] == 4

    def test_bad_box(self):
        grid = decompose([1, 2], [1, 2], 2)
        sigs, tables = preprocess_direct(grid, GridCostModel.dtw())
        with pytest.raises(ValueError):
            box_propagate(5, 1, BoundaryValues([0, 0, 0]), sigs, tables, GridCostModel.dtw())


class TestDTW:
    def test_spec_instance(self):
        A, B = [0, 3, 1, 2], [1, 1, 4, 0]
        value, C = dtw_subquadratic(A, B, 3)
        assert value == ref.dtw_brute(A, B)
        assert coupling_cost(A, B, C) == value

    def test_identical(self):
        # distinct values make the diagonal the only zero-cost coupling
        A = [5, -1, 8, 9, 2, 0, 3]
        for g in (2, 3, 4, 7):
            value, C = dtw_subquadratic(A, A, g)
            assert value == 0
            assert C.pairs == tuple((k, k) for k in range(1, 8))

    @given(
        st.lists(st.integers(-(10**6), 10**6), min_size=1, max_size=40),
        st.lists(st.integers(-(10**6), 10**6), min_size=1, max_size=40),
        st.integers(2, 13),
    )
    def test_oracle_equivalence(self, A, B, g):
        stats = WorkStats()
        value, C = dtw_subquadratic(A, B, g, stats=stats)
        M = ref.dp_matrix(A, B)
        assert value == M[len(A)][len(B)]
        assert coupling_cost(A, B, C) == value
        assert stats.monge_violations == 0
        assert stats.max_box_evaluations <= evaluation_bound(g)

    @pytest.mark.parametrize("g", [2, 3, 4])
    def test_larger_instances(self, g):
        rng = random.Random(g)
        for _ in range(3):
            A, B = ref.random_instance(rng, 256, n_min=100)
            value, C = dtw_subquadratic(A, B, g)
            assert value == ref.dp_matrix(A, B)[len(A)][len(B)]
            assert coupling_cost(A, B, C) == value

    def test_short_final_group(self):
        A, B = [3, 1, 4, 1, 5], [9, 2, 6]
        assert dtw_subquadratic(A, B, 3)[0] == ref.dtw_brute(A, B)

    def test_identical_with_repeats(self):
        # repeated values admit several zero-cost couplings; any of them is fine
        A = [5, -1, 8, 8, 2, 0, 3]
        for g in (2, 3, 4, 7):
            value, C = dtw_subquadratic(A, A, g)
            assert value == 0 == coupling_cost(A, A, C)

    def test_value_only(self):
        assert dtw_subquadratic([1, 2, 3], [2, 2], 2, traceback=False) == (2, None)

    def test_exact_big_integers(self):
        rng = random.Random(1)
        A = [rng.randint(-(10**18), 10**18) for _ in range(30)]
        B = [rng.randint(-(10**18), 10**18) for _ in range(25)]
        value, C = dtw_subquadratic(A, B, 3)
        assert value == ref.dp_matrix(A, B)[30][25]
        assert coupling_cost(A, B, C) == value

    def test_rationals(self):
        rng = random.Random(2)
        A = [Fraction(rng.randint(-50, 50), rng.randint(1, 9)) for _ in range(15)]
        B = [Fraction(rng.randint(-50, 50), rng.randint(1, 9)) for _ in range(12)]
        value, C = dtw_subquadratic(A, B, 3)
        assert isinstance(value, Fraction)
        assert value == ref.dp_matrix(A, B)[15][12] == coupling_cost(A, B, C)

    def test_floats(self):
        rng = random.Random(3)
        A = [rng.uniform(-1, 1) for _ in range(40)]
        B = [rng.uniform(-1, 1) for _ in range(33)]
        value, C = dtw_subquadratic(A, B, 4)
        assert value == pytest.approx(ref.dp_matrix(A, B)[40][33], rel=1e-9)
        assert coupling_cost(A, B, C) == pytest.approx(value, rel=1e-9)

    @pytest.mark.parametrize("kind", ["l1", "linf"])
    @pytest.mark.parametrize("d", [2, 3])
    def test_vector_metrics(self, kind, d):
        rng = random.Random(d)
        metric = Metric.parse(kind, d)
        for g in (2, 3):
            A, B = ref.random_instance(rng, 30, -100, 100, dim=d)
            value, C = dtw_subquadratic(A, B, g, metric=metric)
            assert value == ref.dp_matrix(A, B, kind=kind)[len(A)][len(B)]
            assert coupling_cost(A, B, C, metric) == value

    def test_faithful_mode(self):
        rng = random.Random(8)
        A, B = ref.random_instance(rng, 20, -50, 50)
        stats = WorkStats()
        value, _ = dtw_subquadratic(A, B, 2, mode="faithful", stats=stats)
        assert value == ref.dp_matrix(A, B)[len(A)][len(B)]
        assert stats.dominance_pairs_reported == len(A) * len(B)

    def test_faithful_needs_g2(self):
        with pytest.raises(ConfigError):
            dtw_subquadratic([1, 2, 3], [1, 2], 3, mode="faithful")


class TestGED:
    def test_spec_example(self):
        assert ged_subquadratic([0], [10], 1, 2)[0] == ref.ged_brute([0], [10], 1) == 2

    def test_free_gaps(self):
        rng = random.Random(0)
        for g in (2, 3, 5):
            A, B = ref.random_instance(rng, 30)
            assert ged_subquadratic(A, B, 0, g)[0] == 0

    @given(
        st.lists(st.integers(-50, 50), min_size=1, max_size=40),
        st.lists(st.integers(-50, 50), min_size=1, max_size=40),
        st.sampled_from([0, 1, 17]),
        st.integers(2, 13),
    )
    def test_oracle_equivalence(self, A, B, rho, g):
        stats = WorkStats()
        value, M = ged_subquadratic(A, B, rho, g, stats=stats)
        assert value == ref.dp_matrix(A, B, rho)[len(A)][len(B)]
        assert matching_cost(A, B, M, rho) == value
        assert stats.monge_violations == 0

    def test_rational_rho(self):
        A, B = [1, 5, 2, 8], [3, 3, 7]
        rho = Fraction(5, 3)
        value, M = ged_subquadratic(A, B, rho, 3)
        assert value == ref.ged_brute(A, B, rho) == matching_cost(A, B, M, rho)


class TestEngines:
    @pytest.mark.parametrize("rho", [None, 0, 3])
    @pytest.mark.parametrize("g", [2, 3, 5])
    def test_compiled_and_numpy_agree(self, g, rho):
        rng = random.Random(g * 7 + (rho or 0))
        for _ in range(4):
            A, B = ref.random_instance(rng, 60, -40, 40)
            grid = decompose(A, B, g)
            model = GridCostModel.dtw() if rho is None else GridCostModel.ged(rho)
            sigs, tables = preprocess_direct(grid, model)
            results = []
            for compiled in (True, False):
                stats = WorkStats()
                res = boxed_dp(grid, model, sigs, tables, stats=stats, compiled=compiled)
                results.append((res.value, res.steps, stats))
            assert results[0] == results[1]

    def test_work_counters(self):
        rng = random.Random(5)
        A, B = ref.random_instance(rng, 80, n_min=64)
        stats = WorkStats()
        dtw_subquadratic(A, B, 3, stats=stats)
        assert stats.boxes > 0 and stats.monge_checks > 0
        assert 0 < stats.max_box_evaluations <= evaluation_bound(3)
        assert stats.work_units() == {
            "cell_updates": stats.cell_updates,
            "candidate_evaluations": stats.candidate_evaluations,
            "dominance_pairs_reported": 0,
        }

    def test_prepared_signatures(self):
        A, B = [1, 4, 2, 8, 5], [7, 1, 3]
        grid = decompose(A, B, 3)
        prepared = preprocess_direct(grid, GridCostModel.dtw())
        assert dtw_subquadratic(A, B, 3, prepared=prepared) == dtw_subquadratic(A, B, 3)
