"""
Calibrating a joy-of-winning parameter and adjusting predictions
================================================================

Observed investment in simultaneous contests usually exceeds the risk-neutral
equilibrium. A one-parameter fix posits a nonmonetary reward w for winning,
so players act as if competing for prize V + w. Matching the simultaneous
equilibrium (n-1)(V+w)/n^2 to an observed mean pins down w, and every other
sequence's prediction scales by (V+w)/V.
"""

from seqcontest import ContestSpec, MoveSequence, calibrate_jow, solve_spne

OBSERVED_SIMULTANEOUS_MEAN = 79.94
PRIZE = 240.0

w = calibrate_jow(OBSERVED_SIMULTANEOUS_MEAN, n=3, prize=PRIZE)
print(f"observed mean {OBSERVED_SIMULTANEOUS_MEAN} -> joy of winning w = {w:.2f}")
print(f"effective prize: {PRIZE + w:.2f} (about {100 * w / PRIZE:.0f}% above the cash prize)")
print()

print(f"  {'sequence':10s} {'baseline':>24s} {'adjusted':>24s}")
for stages in [(1, 2), (2, 1), (1, 1, 1)]:
    seq = MoveSequence(stages)
    base = solve_spne(ContestSpec(seq, prize=PRIZE))
    adj = solve_spne(ContestSpec(seq, prize=PRIZE, joy_of_winning=w))
    base_str = ", ".join(f"{x:.2f}" for x in base.scaled_stage_investments)
    adj_str = ", ".join(f"{x:.2f}" for x in adj.scaled_stage_investments)
    print(f"  {seq.label():10s} {base_str:>24s} {adj_str:>24s}")

print()
print("aggregate predictions with the correction:")
for stages in [(1, 2), (2, 1), (1, 1, 1)]:
    adj = solve_spne(ContestSpec(MoveSequence(stages), prize=PRIZE, joy_of_winning=w))
    print(f"  {adj.sequence.label():10s} X = {adj.scaled_aggregate:.2f}")
