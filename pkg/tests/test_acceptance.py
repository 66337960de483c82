"""Acceptance suite: one test per release criterion, at stated tolerances.

Each passing test prints one line; run with ``pytest -v`` (test names) or
``pytest -s`` (explicit PASS lines) to see the per-criterion outcome.

Known honest failures, analyzed in depth rather than hidden:

* Criterion 5 fails for the (1,1,1) sequence: the exact discretized game at
  step 1 has its subgame-perfect path at (89, 59, 40), 3-4 grid steps from
  the continuous solution (86.19, 63.09, 40.00). Later movers' grid best
  responses are piecewise constant; each one-cell drop in a later response
  bumps an earlier mover's expected payoff by ~0.4 points, which dominates
  the nearly flat smooth objective for several cells around its maximum, so
  the earlier mover optimally "rides the teeth". Verified independently
  with a nested-loop enumeration of the full discrete game; no tie-breaking
  convention removes the effect.

* Criterion 9 fails as stated: with 10 clusters the cluster-robust t-ratio
  is t(9)-distributed (exactly so for balanced clusters under the Gaussian
  design here), hence the +-2 SE interval covers P(|t_9| <= 2) = 92.35% of
  replications, not >= 95%. The properly calibrated t(9) 95% interval does
  attain ~95% (verified in the stats test suite).
"""

import itertools
import math
import time
from collections import defaultdict

import numpy as np
import pytest

from seqcontest.core import ContestSpec, MoveSequence, win_probabilities
from seqcontest.behavior import default_response_models, optimal_first_mover
from seqcontest.equilibrium import calibrate_jow, oracle_grid_spne, solve_spne
from seqcontest.simulate import SessionConfig, play_round, run_session
from seqcontest.behavior import EquilibriumPolicy
from seqcontest.stats import (
    cluster_ols,
    jonckheere_terpstra,
    jonckheere_terpstra_exact,
    treatment_summary,
)

TREATMENTS = [(3,), (1, 2), (2, 1), (1, 1, 1)]

TABLE_SPNE = {
    (3,): ((53.33, 53.33, 53.33), 160.0),
    (1, 2): ((90.0, 45.0, 45.0), 180.0),
    (2, 1): ((67.5, 67.5, 45.0), 180.0),
    (1, 1, 1): ((86.19, 63.09, 40.00), 189.28),
}

TABLE_JOW = {
    (1, 2): ((134.90, 67.45, 67.45), 269.80),
    (2, 1): ((101.17, 101.17, 67.45), 269.80),
    (1, 1, 1): ((129.17, 94.58, 59.97), 283.72),
}

PREEMPTION = {
    ((1, 2), 119.73): 72.03,
    ((2, 1), 119.73): 83.11,
    ((1, 1, 1), 119.73): 68.48,
    ((1, 2), 0.0): 48.06,
    ((2, 1), 0.0): 55.45,
    ((1, 1, 1), 0.0): 45.69,
}


def report(number, text):
    print(f"ACCEPTANCE CRITERION {number}: PASS - {text}")


def test_criterion_1_table_spne_reproduction():
    start = time.monotonic()
    for stages, (players, aggregate) in TABLE_SPNE.items():
        solution = solve_spne(ContestSpec(MoveSequence(stages)))
        assert solution.per_player_investments() == pytest.approx(players, abs=0.02)
        assert solution.scaled_aggregate == pytest.approx(aggregate, abs=0.02)
    elapsed = time.monotonic() - start
    assert elapsed < 1.0
    report(1, f"equilibrium table reproduced in {elapsed:.3f}s")


def test_criterion_2_joy_of_winning_calibration():
    start = time.monotonic()
    w = calibrate_jow(79.94, 3, 240.0)
    assert w == pytest.approx(119.73, abs=0.01)
    for stages, (players, aggregate) in TABLE_JOW.items():
        solution = solve_spne(ContestSpec(MoveSequence(stages), joy_of_winning=w))
        assert solution.per_player_investments() == pytest.approx(players, abs=0.05)
        assert solution.scaled_aggregate == pytest.approx(aggregate, abs=0.05)
    elapsed = time.monotonic() - start
    assert elapsed < 1.0
    report(2, f"calibrated w={w:.2f} and adjusted table reproduced in {elapsed:.3f}s")


def test_criterion_3_preemption_numbers():
    start = time.monotonic()
    for (stages, jow), expected in PREEMPTION.items():
        seq = MoveSequence(stages)
        models = default_response_models(seq)
        result = optimal_first_mover(seq, models, 240.0, jow)
        assert result.investment == pytest.approx(expected, abs=0.05), (stages, jow)

        # exhaustive grid search of the same objective, step 0.01
        p_eff = 240.0 + jow

        def scaled(model, m1, m2=None):
            c = p_eff / model.fit_effective_prize
            return c * model.mean_response(m1 / c, None if m2 is None else m2 / c)

        xs = np.arange(0.0, 240.0 + 1e-9, 0.01)
        if stages == (1, 2):
            others = 2.0 * scaled(models[2], xs)
        elif stages == (1, 1, 1):
            second = scaled(models[2], xs)
            others = second + scaled(models[3], xs, second)
        else:
            # two leaders: grid search each leader's payoff against the
            # equilibrium investment of the other
            x_other = result.investment
            m1 = (xs + x_other) / 2.0
            others = x_other + scaled(models[2], m1)
        totals = xs + others
        payoffs = np.where(totals > 0, p_eff * xs / np.where(totals > 0, totals, 1), p_eff / 3) - xs
        grid_best = float(xs[np.argmax(payoffs)])
        assert abs(result.investment - grid_best) <= 0.02, (stages, jow)
    elapsed = time.monotonic() - start
    assert elapsed < 5.0
    report(3, f"all six preemption optima and grid cross-checks in {elapsed:.2f}s")


def test_criterion_4_prediction_orderings():
    aggregates = {
        stages: solve_spne(ContestSpec(MoveSequence(stages))).aggregate
        for stages in TREATMENTS
    }
    assert aggregates[(3,)] < aggregates[(1, 2)]
    assert abs(aggregates[(1, 2)] - aggregates[(2, 1)]) < 1e-12
    assert aggregates[(2, 1)] < aggregates[(1, 1, 1)]
    for stages in [(1, 2), (2, 1), (1, 1, 1)]:
        inv = solve_spne(ContestSpec(MoveSequence(stages))).stage_investments
        assert all(a > b for a, b in zip(inv, inv[1:])), stages
    two_seq = solve_spne(ContestSpec(MoveSequence((1, 1)))).aggregate
    two_sim = solve_spne(ContestSpec(MoveSequence((2,)))).aggregate
    assert abs(two_seq - two_sim) < 1e-12
    report(4, "aggregate ranking, earlier-mover ordering, two-player neutrality")


def test_criterion_5_oracle_equivalence():
    start = time.monotonic()
    step = 1.0
    violations = []
    for stages in TREATMENTS:
        spec = ContestSpec(MoveSequence(stages))
        analytic = solve_spne(spec)
        grid = oracle_grid_spne(spec, step)
        for t, (a, b) in enumerate(
            zip(grid.scaled_stage_investments, analytic.scaled_stage_investments),
            start=1,
        ):
            if abs(a - b) > step + 1e-9:
                violations.append(
                    f"{MoveSequence(stages).label()} stage {t}: grid {a:.2f} vs "
                    f"analytic {b:.2f} (|diff| = {abs(a - b):.2f} > {step})"
                )
        if abs(grid.scaled_aggregate - analytic.scaled_aggregate) > step + 1e-9:
            violations.append(
                f"{MoveSequence(stages).label()} aggregate: grid "
                f"{grid.scaled_aggregate:.2f} vs analytic "
                f"{analytic.scaled_aggregate:.2f}"
            )
    elapsed = time.monotonic() - start
    assert elapsed < 60.0
    assert not violations, (
        "grid oracle departs from the analytic solution by more than one "
        "grid step; the step-1 discrete game's equilibrium genuinely differs "
        "(verified by independent enumeration): " + "; ".join(violations)
    )
    report(5, f"oracle within one grid step for all treatments in {elapsed:.2f}s")


def test_criterion_6_homogeneity():
    prizes = [1.0, 240.0, 359.73, 1000.0]
    sequences = []
    for n in range(1, 7):
        for t in range(1, n + 1):
            for cuts in itertools.combinations(range(1, n), t - 1):
                parts, prev = [], 0
                for cut in list(cuts) + [n]:
                    parts.append(cut - prev)
                    prev = cut
                sequences.append(tuple(parts))
    for stages in sequences:
        seq = MoveSequence(stages)
        base = solve_spne(ContestSpec(seq, prize=1.0))
        for prize in prizes[1:]:
            sol = solve_spne(ContestSpec(seq, prize=prize))
            assert sol.scaled_aggregate == pytest.approx(
                prize * base.scaled_aggregate, rel=1e-9
            )
            for a, b in zip(
                sol.scaled_stage_investments, base.scaled_stage_investments
            ):
                assert a == pytest.approx(prize * b, rel=1e-9, abs=1e-12)
    report(6, f"scaled solutions linear in effective prize for {len(sequences)} sequences")


def test_criterion_7_simulator_integrity():
    start = time.monotonic()
    expected_counts = {(3,): 2025, (1, 2): 2250, (2, 1): 2025, (1, 1, 1): 2025}
    group_layout = {(3,): 9, (1, 2): 10, (2, 1): 9, (1, 1, 1): 9}
    for stages in TREATMENTS:
        config = SessionConfig(
            spec=ContestSpec(MoveSequence(stages)),
            policies=(EquilibriumPolicy(),) * 3,
            groups=group_layout[stages],
            rounds=25,
            seed=1234,
        )
        log = run_session(config)
        assert len(log.records) == expected_counts[stages]
        triads = defaultdict(list)
        for r in log.records:
            triads[(r.group, r.round, r.triad)].append(r)
        for rs in triads.values():
            assert sum(r.won for r in rs) == 1
            balance = sum(r.payoff for r in rs) - (3 * 240 + 240 - sum(r.investment for r in rs))
            assert abs(balance) < 1e-9

    # empirical win rates over 100,000 triad-rounds vs the success function
    spec = ContestSpec(MoveSequence((1, 2)))
    policies = (EquilibriumPolicy(),) * 3
    probs = win_probabilities(solve_spne(spec).per_player_investments())
    rng = np.random.default_rng(777)
    m = 100_000
    wins = np.zeros(3)
    for _ in range(m):
        for i, record in enumerate(play_round(policies, spec, rng)):
            if record.won:
                wins[i] += 1
    freq = wins / m
    sigma = np.sqrt(probs * (1 - probs) / m)
    assert np.all(np.abs(freq - probs) < 3 * sigma), (freq, probs)
    elapsed = time.monotonic() - start
    assert elapsed < 120.0
    report(7, f"record counts, conservation, win rates {np.round(freq, 4)} in {elapsed:.1f}s")


def test_criterion_8_statistics_oracles():
    # hand-computed 2-cluster sandwich fixture, exact rational values
    fit = cluster_ols(
        [1.0, 2.0, 2.0, 4.0],
        [[1.0, 0.0], [1.0, 1.0], [1.0, 2.0], [1.0, 3.0]],
        [0, 0, 1, 1],
    )
    assert fit.params == pytest.approx((0.9, 0.9), abs=1e-10)
    assert fit.cov == pytest.approx(
        np.array([[0.135, -0.045], [-0.045, 0.015]]), abs=1e-10
    )
    assert fit.se == pytest.approx(
        (math.sqrt(0.135), math.sqrt(0.015)), abs=1e-10
    )

    # exact JT enumeration on small ordered samples (N <= 8), against an
    # independent permutation-based oracle
    def perm_oracle(groups):
        def stat(gs):
            s = 0.0
            for i in range(len(gs)):
                for j in range(i + 1, len(gs)):
                    for a in gs[i]:
                        for b in gs[j]:
                            s += (a < b) + 0.5 * (a == b)
            return s

        sizes = [len(g) for g in groups]
        pooled = [v for g in groups for v in g]
        observed = stat(groups)
        n_ge = total = 0
        for perm in itertools.permutations(pooled):
            parts, pos = [], 0
            for size in sizes:
                parts.append(perm[pos : pos + size])
                pos += size
            total += 1
            if stat(parts) >= observed - 1e-9:
                n_ge += 1
        return observed, n_ge / total

    rng = np.random.default_rng(55)
    cases = [[[1, 2], [3, 4], [5, 6]], [[2, 2], [2, 2], [2, 2]]]
    while len(cases) < 10:
        sizes = rng.integers(2, 4, 3)
        if sizes.sum() <= 8:
            cases.append([rng.integers(0, 3, s).tolist() for s in sizes])
    for groups in cases:
        observed, p_ge = perm_oracle(groups)
        approx = jonckheere_terpstra(groups)
        exact = jonckheere_terpstra_exact(groups)
        assert approx.statistic == pytest.approx(observed)
        assert exact.statistic == pytest.approx(observed)
        assert exact.pvalue_greater == pytest.approx(p_ge)

    # deterministic equilibrium-agent logs reproduce the criterion-1 table
    # with zero standard errors
    for stages, (players, aggregate) in TABLE_SPNE.items():
        config = SessionConfig(
            spec=ContestSpec(MoveSequence(stages)),
            policies=(EquilibriumPolicy(),) * 3,
            groups=3,
            rounds=10,
            seed=9,
        )
        summary = treatment_summary(run_session(config))[0]
        assert summary.role_means == pytest.approx(players, abs=0.02)
        assert summary.aggregate_mean == pytest.approx(aggregate, abs=0.02)
        assert summary.role_ses == pytest.approx((0.0,) * 3, abs=1e-9)
        assert summary.aggregate_se == pytest.approx(0.0, abs=1e-9)
    report(8, "sandwich fixture, exact JT enumeration, deterministic summaries")


def test_criterion_9_monte_carlo_coverage():
    # Data generated from the estimated second-mover response for the
    # one-leader treatment: 1,200 observations, 10 balanced clusters,
    # Gaussian noise. Count replications where the refitted intercept lies
    # within 2 cluster-robust SEs of the truth.
    rng = np.random.default_rng(20240501)
    n, g, reps = 1200, 10, 400
    beta = (62.72, 0.091, 9.6e-5)
    covered = 0
    for _ in range(reps):
        m1 = rng.uniform(0, 240, n)
        design = np.column_stack([np.ones(n), m1, m1**2])
        y = design @ beta + 60.0 * rng.standard_normal(n)
        fit = cluster_ols(y, design, np.repeat(np.arange(g), n // g))
        if abs(fit.params[0] - beta[0]) <= 2.0 * fit.se[0]:
            covered += 1
    coverage = covered / reps
    assert coverage >= 0.95, (
        f"+-2 SE coverage is {coverage:.3f}; with 10 clusters the t-ratio is "
        f"t(9)-distributed and P(|t_9| <= 2) = 0.9235, so the stated 95% bar "
        f"is unattainable for this interval (the t(9)-critical 95% interval "
        f"does attain nominal coverage; see test_stats)"
    )
    report(9, f"+-2 SE Monte Carlo coverage {coverage:.3f}")
