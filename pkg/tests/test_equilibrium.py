"""Tests for the equilibrium solver: polynomial ladder, root finding,
calibration, and the grid backward-induction oracle."""

import itertools
import math

import pytest

from seqcontest.core import ContestError, ContestSpec, MoveSequence
from seqcontest.equilibrium import (
    GridTooLarge,
    NonPositiveMean,
    NoRootInUnitInterval,
    Polynomial,
    build_ladder,
    calibrate_jow,
    largest_root,
    oracle_grid_spne,
    solve_spne,
)

SQRT3 = math.sqrt(3.0)


def all_sequences(max_players):
    """Every move sequence (composition) with up to ``max_players`` players."""
    out = []
    for n in range(1, max_players + 1):
        for t in range(1, n + 1):
            for cuts in itertools.combinations(range(1, n), t - 1):
                parts = []
                prev = 0
                for cut in list(cuts) + [n]:
                    parts.append(cut - prev)
                    prev = cut
                out.append(MoveSequence(tuple(parts)))
    return out


class TestBuildLadder:
    def test_simultaneous_three(self):
        # one recursion step from the identity: x - 3*x*(1-x) = 3x^2 - 2x
        ladder = build_ladder(MoveSequence((3,)))
        assert ladder.polys[0].coeffs == (0, -2, 3)
        assert ladder.polys[1].coeffs == (0, 1)

    def test_fully_sequential(self):
        # three hand-applied steps: f0 = x^2 (6x^2 - 6x + 1)
        ladder = build_ladder(MoveSequence((1, 1, 1)))
        assert ladder.polys[0].coeffs == (0, 0, 1, -6, 6)

    def test_single_player(self):
        ladder = build_ladder(MoveSequence((1,)))
        assert ladder.polys[0].coeffs == (0, 0, 1)

    def test_terminal_is_identity(self):
        for seq in all_sequences(5):
            assert build_ladder(seq).polys[-1].coeffs == (0, 1)

    def test_degrees_grow_by_one(self):
        for seq in all_sequences(5):
            ladder = build_ladder(seq)
            assert ladder.polys[0].degree == seq.n_stages + 1
            for earlier, later in zip(ladder.polys, ladder.polys[1:]):
                assert earlier.degree == later.degree + 1

    def test_recursion_identity_coefficientwise(self):
        # f_{t-1} == f_t - k_t * f_t' * x * (1 - x), exactly
        for seq in all_sequences(6):
            ladder = build_ladder(seq)
            for t, count in enumerate(seq.stages, start=1):
                f_t = ladder.polys[t]
                expected = f_t - f_t.derivative().times_x_minus_x_squared().scale(count)
                assert ladder.polys[t - 1].coeffs == expected.coeffs


class TestLargestRoot:
    def test_simultaneous_three(self):
        f0 = build_ladder(MoveSequence((3,))).polys[0]
        assert largest_root(f0) == pytest.approx(2 / 3, abs=1e-12)

    def test_fully_sequential(self):
        f0 = build_ladder(MoveSequence((1, 1, 1))).polys[0]
        assert largest_root(f0) == pytest.approx((3 + SQRT3) / 6, abs=1e-12)

    def test_single_player_degenerate(self):
        assert largest_root(Polynomial((0, 0, 1))) == 0.0

    def test_no_root_raises(self):
        with pytest.raises(NoRootInUnitInterval):
            largest_root(Polynomial((1, 0, 1)))  # x^2 + 1

    def test_exact_grid_zero(self):
        # 4x^3 - 3x^2 vanishes exactly at the grid point 0.75
        f0 = build_ladder(MoveSequence((1, 2))).polys[0]
        assert largest_root(f0) == pytest.approx(0.75, abs=1e-13)


class TestSolveSpne:
    def test_simultaneous_three(self):
        sol = solve_spne(ContestSpec(MoveSequence((3,))))
        assert sol.scaled_stage_investments[0] == pytest.approx(160 / 3, abs=1e-9)
        assert sol.scaled_aggregate == pytest.approx(160.0, abs=1e-9)

    def test_one_then_two(self):
        sol = solve_spne(ContestSpec(MoveSequence((1, 2))))
        assert sol.scaled_stage_investments == pytest.approx((90.0, 45.0), abs=1e-9)
        assert sol.scaled_aggregate == pytest.approx(180.0, abs=1e-9)

    def test_two_then_one(self):
        sol = solve_spne(ContestSpec(MoveSequence((2, 1))))
        assert sol.scaled_stage_investments == pytest.approx((67.5, 45.0), abs=1e-9)
        assert sol.scaled_aggregate == pytest.approx(180.0, abs=1e-9)

    def test_fully_sequential_closed_form(self):
        # exact values: x1 = 40 + 80*sqrt(3)/3, x2 = 40 + 40*sqrt(3)/3, x3 = 40
        sol = solve_spne(ContestSpec(MoveSequence((1, 1, 1))))
        assert sol.scaled_stage_investments[0] == pytest.approx(
            40 + 80 * SQRT3 / 3, abs=1e-9
        )
        assert sol.scaled_stage_investments[1] == pytest.approx(
            40 + 40 * SQRT3 / 3, abs=1e-9
        )
        assert sol.scaled_stage_investments[2] == pytest.approx(40.0, abs=1e-9)
        assert sol.scaled_aggregate == pytest.approx(120 + 40 * SQRT3, abs=1e-9)

    def test_joy_of_winning_scaling(self):
        sol = solve_spne(ContestSpec(MoveSequence((1, 2)), joy_of_winning=119.73))
        assert sol.scaled_stage_investments[0] == pytest.approx(134.90, abs=0.01)
        assert sol.scaled_stage_investments[1] == pytest.approx(67.45, abs=0.01)
        assert sol.scaled_aggregate == pytest.approx(269.80, abs=0.01)

    def test_stage_investments_sum_to_aggregate(self):
        for seq in all_sequences(6):
            sol = solve_spne(ContestSpec(seq))
            total = sum(
                k * x for k, x in zip(seq.stages, sol.stage_investments)
            )
            assert abs(total - sol.aggregate) < 1e-10
            assert all(x >= 0 for x in sol.stage_investments)

    def test_aggregate_interior_for_two_plus_players(self):
        for seq in all_sequences(6):
            if seq.n_players >= 2:
                sol = solve_spne(ContestSpec(seq))
                assert 0.0 < sol.aggregate < 1.0

    def test_per_player_expansion(self):
        sol = solve_spne(ContestSpec(MoveSequence((2, 1))))
        assert sol.per_player_investments() == pytest.approx((67.5, 67.5, 45.0))

    def test_to_dict_schema(self):
        record = solve_spne(ContestSpec(MoveSequence((1, 2)))).to_dict()
        assert record["schema"] == 1
        assert record["sequence"] == [1, 2]
        assert record["aggregate"] == pytest.approx(180.0)


class TestPredictedOrderings:
    def test_aggregate_ranking_across_treatments(self):
        x = {
            stages: solve_spne(ContestSpec(MoveSequence(stages))).aggregate
            for stages in [(3,), (1, 2), (2, 1), (1, 1, 1)]
        }
        assert x[(3,)] < x[(1, 2)]
        assert abs(x[(1, 2)] - x[(2, 1)]) < 1e-12
        assert x[(2, 1)] < x[(1, 1, 1)]

    def test_earlier_movers_invest_more(self):
        for stages in [(1, 2), (2, 1), (1, 1, 1)]:
            sol = solve_spne(ContestSpec(MoveSequence(stages)))
            inv = sol.stage_investments
            assert all(a > b for a, b in zip(inv, inv[1:]))

    def test_two_player_neutrality(self):
        sequential = solve_spne(ContestSpec(MoveSequence((1, 1)))).aggregate
        simultaneous = solve_spne(ContestSpec(MoveSequence((2,)))).aggregate
        assert abs(sequential - simultaneous) < 1e-12

    def test_homogeneity_in_effective_prize(self):
        for seq in all_sequences(6):
            base = solve_spne(ContestSpec(seq, prize=1.0))
            for scale in (240.0, 359.73, 1000.0):
                scaled = solve_spne(ContestSpec(seq, prize=scale))
                assert scaled.scaled_aggregate == pytest.approx(
                    scale * base.scaled_aggregate, rel=1e-9
                )
                for a, b in zip(
                    scaled.scaled_stage_investments, base.scaled_stage_investments
                ):
                    assert a == pytest.approx(scale * b, rel=1e-9, abs=1e-12)


class TestCalibrateJow:
    def test_reported_calibration(self):
        assert calibrate_jow(79.94, 3, 240.0) == pytest.approx(119.73, abs=1e-9)

    def test_equilibrium_mean_gives_zero(self):
        assert calibrate_jow(2 * 240 / 9, 3, 240.0) == pytest.approx(0.0, abs=1e-9)

    def test_hand_inverted_value(self):
        assert calibrate_jow(90.0, 3, 240.0) == pytest.approx(165.0, abs=1e-9)

    def test_below_equilibrium_clamps_with_warning(self):
        with pytest.warns(UserWarning):
            assert calibrate_jow(10.0, 3, 240.0) == 0.0

    def test_nonpositive_mean_rejected(self):
        with pytest.raises(NonPositiveMean):
            calibrate_jow(0.0, 3, 240.0)


def brute_force_grid_spne(stages, prize, endowment, step):
    """Nested-loop backward induction; independent check of the vectorized
    oracle on coarse grids."""
    points = [i * step for i in range(int(round(endowment / step)) + 1)]
    n = sum(stages)

    def pay(own, others):
        total = own + others
        return prize * (own / total if total > 0 else 1.0 / n) - own

    def argmax(candidates, objective):
        best, best_v = None, -math.inf
        for c in candidates:
            v = objective(c)
            if v > best_v:
                best, best_v = c, v
        return best

    def fixed_point(br_of):
        # same selection rule as the oracle: largest exact hit, else the
        # first point where the map falls below the diagonal
        hits = [x for x in points if br_of(x) == x]
        if hits:
            return hits[-1]
        for x in points:
            if br_of(x) < x:
                return x
        return points[-1]

    if stages == (3,):
        return (fixed_point(lambda x: argmax(points, lambda y: pay(y, 2 * x))),)
    if stages == (2, 1):
        def follower(s):
            return argmax(points, lambda z: pay(z, s))

        best = fixed_point(
            lambda x: argmax(points, lambda y: pay(y, x + follower(x + y)))
        )
        return (best, follower(2 * best))
    if stages == (1, 2):
        def pair(x1):
            return fixed_point(lambda y: argmax(points, lambda z: pay(z, x1 + y)))

        x1 = argmax(points, lambda x: pay(x, 2 * pair(x)))
        return (x1, pair(x1))
    if stages == (1, 1, 1):
        def third(s):
            return argmax(points, lambda z: pay(z, s))

        def second(x1):
            return argmax(points, lambda y: pay(y, x1 + third(x1 + y)))

        x1 = argmax(points, lambda x: pay(x, second(x) + third(x + second(x))))
        x2 = second(x1)
        return (x1, x2, third(x1 + x2))
    raise ValueError(stages)


class TestOracleGridSpne:
    def test_one_leader_two_followers(self):
        sol = oracle_grid_spne(ContestSpec(MoveSequence((1, 2))), 1.0)
        assert abs(sol.scaled_stage_investments[0] - 90.0) <= 1.0
        assert abs(sol.scaled_stage_investments[1] - 45.0) <= 1.0

    def test_simultaneous_brackets_continuous_value(self):
        sol = oracle_grid_spne(ContestSpec(MoveSequence((3,))), 1.0)
        assert sol.scaled_stage_investments[0] in (53.0, 54.0)

    def test_two_player_neutrality_benchmark(self):
        sol = oracle_grid_spne(ContestSpec(MoveSequence((1, 1))), 1.0)
        assert abs(sol.scaled_stage_investments[0] - 60.0) <= 1.0
        assert abs(sol.scaled_stage_investments[1] - 60.0) <= 1.0
        assert abs(sol.scaled_aggregate - 120.0) <= 2.0

    def test_two_leaders_one_follower(self):
        sol = oracle_grid_spne(ContestSpec(MoveSequence((2, 1))), 1.0)
        assert abs(sol.scaled_stage_investments[0] - 67.5) <= 1.0
        assert abs(sol.scaled_stage_investments[1] - 45.0) <= 1.0

    def test_fully_sequential_exact_grid_path(self):
        # The discrete game genuinely departs from the continuous solution
        # here: integer best responses make later movers' play lumpy and the
        # leader exploits where the lumps fall. Frozen from an independent
        # nested-loop enumeration of the step-1 game.
        sol = oracle_grid_spne(ContestSpec(MoveSequence((1, 1, 1))), 1.0)
        assert sol.scaled_stage_investments == (89.0, 59.0, 40.0)

    @pytest.mark.parametrize("stages", [(3,), (1, 2), (2, 1), (1, 1, 1)])
    def test_matches_nested_loop_enumeration(self, stages):
        step = 10.0
        sol = oracle_grid_spne(ContestSpec(MoveSequence(stages)), step)
        brute = brute_force_grid_spne(stages, 240.0, 240.0, step)
        assert sol.scaled_stage_investments == pytest.approx(brute)

    def test_effective_prize_used(self):
        plain = oracle_grid_spne(ContestSpec(MoveSequence((3,))), 1.0)
        boosted = oracle_grid_spne(
            ContestSpec(MoveSequence((3,)), joy_of_winning=119.73), 1.0
        )
        assert boosted.scaled_stage_investments[0] > plain.scaled_stage_investments[0]

    def test_grid_budget_enforced(self):
        with pytest.raises(GridTooLarge):
            oracle_grid_spne(ContestSpec(MoveSequence((1, 2))), 0.25)
        with pytest.raises(GridTooLarge):
            oracle_grid_spne(ContestSpec(MoveSequence((1, 1, 1, 1))), 1.0)

    def test_step_must_divide_endowment(self):
        with pytest.raises(ContestError):
            oracle_grid_spne(ContestSpec(MoveSequence((3,))), 0.7)
