"""
From simulated sessions to the full statistical analysis
========================================================

Simulates all four treatments with behavioral agents: simultaneous players
follow the joy-of-winning equilibrium, sequential first movers best-respond
to the estimated response functions, and later movers play those (noisy)
responses. Then runs the analysis pipeline: treatment summary with clustered
standard errors, round trends, Wald tests against the baseline equilibrium,
and the across-treatment trend test.
"""

import numpy as np
from dataclasses import replace

from seqcontest import (
    ContestSpec,
    EmpiricalResponder,
    EquilibriumPolicy,
    MoveSequence,
    OptimizingLeader,
    SessionConfig,
    default_response_models,
    jonckheere_terpstra,
    run_session,
    solve_spne,
    treatment_summary,
    trend_by_round,
    wald_mean,
)
from seqcontest.stats import group_aggregate_means

JOW = 119.73
GROUPS = {(3,): 9, (1, 2): 10, (2, 1): 9, (1, 1, 1): 9}
NOISE_SD = 25.0


def policies_for(seq):
    if seq.n_stages == 1:
        # simultaneous movers have nothing to respond to; they play the
        # joy-of-winning equilibrium (79.94 each at these parameters)
        return (EquilibriumPolicy(use_joy_of_winning=True),) * 3
    models = default_response_models(seq)
    leader = OptimizingLeader(models=models, joy_of_winning=JOW)
    out = []
    for player in range(3):
        stage = seq.stage_of_player(player)
        if stage == 1:
            out.append(leader)
        else:
            out.append(EmpiricalResponder(replace(models[stage], noise_sd=NOISE_SD)))
    return tuple(out)


logs = []
for stages, groups in GROUPS.items():
    seq = MoveSequence(stages)
    spec = ContestSpec(seq, joy_of_winning=JOW)
    config = SessionConfig(
        spec=spec, policies=policies_for(seq), groups=groups, rounds=25,
        seed=100 + groups,
    )
    logs.append(run_session(config))

print("treatment summary (all rounds, SEs clustered by matching group)")
print(f"  {'':9s}{'x1':>16s}{'x2':>16s}{'x3':>16s}{'X':>16s}")
for summary in treatment_summary(logs):
    cells = ""
    for m, s in zip(summary.role_means, summary.role_ses):
        cells += f"{m:9.2f} ({s:4.2f})" if s == s else f"{m:9.2f}   (na)"
    cells += f"{summary.aggregate_mean:9.2f} ({summary.aggregate_se:4.2f})"
    print(f"  {summary.sequence.label():9s}{cells}")
print()

print("round trends (slope of investment on round)")
for log in logs:
    fit = trend_by_round(log)
    print(f"  {log.sequence.label():8s} slope {fit.params[1]:7.3f} (se {fit.se[1]:.3f})")
print()

print("Wald tests of aggregate investment against the no-correction equilibrium")
for log in logs:
    target = solve_spne(ContestSpec(log.sequence)).scaled_aggregate
    totals, groups_of = {}, {}
    for r in log.records:
        key = (r.group, r.round, r.triad)
        totals[key] = totals.get(key, 0.0) + r.investment
        groups_of[key] = r.group
    keys = sorted(totals)
    res = wald_mean([totals[k] for k in keys], [groups_of[k] for k in keys], target)
    flag = " [degenerate]" if res.degenerate else ""
    print(
        f"  {log.sequence.label():8s} observed {res.mean:7.2f} vs {target:7.2f}: "
        f"W = {res.statistic:10.2f}, p = {res.pvalue:.4f}{flag}"
    )
print()

print("trend across treatments (unit of observation: matching-group mean of X)")
means = [group_aggregate_means(log) for log in logs]
for log, m in zip(logs, means):
    print(f"  {log.sequence.label():8s} mean of group means = {np.mean(m):7.2f}")
jt = jonckheere_terpstra(means)
print(f"  JT = {jt.statistic:.1f}, z = {jt.zscore:.3f}, two-sided p = {jt.pvalue:.4f}")
if jt.pvalue < 0.05:
    direction = "increasing" if jt.zscore > 0 else "decreasing"
    print(f"  -> significant {direction} trend in the order listed")
else:
    print("  -> no significant monotone trend at these agent settings")
