"""Game primitives for sequential lottery contests.

A contest is described by a move sequence (how many players decide at each
stage), a prize, and a per-player endowment. The winner is drawn with
probability proportional to investment: p_i = x_i / sum(x), falling back to
an even split 1/n when nobody invests. All functions here are pure and
operate on plain sequences of numbers.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

__all__ = [
    "ContestError",
    "EmptySequence",
    "NonPositiveStageCount",
    "NegativeInvestment",
    "InvestmentExceedsEndowment",
    "MoveSequence",
    "ContestSpec",
    "validate_sequence",
    "win_probabilities",
    "draw_winner",
    "round_payoffs",
]


class ContestError(ValueError):
    """Base class for invalid contest inputs."""


class EmptySequence(ContestError):
    """Move sequence has no stages."""


class NonPositiveStageCount(ContestError):
    """A stage declares fewer than one deciding player."""


class NegativeInvestment(ContestError):
    """An investment is below zero."""


class InvestmentExceedsEndowment(ContestError):
    """An investment is above the per-player endowment."""


@dataclass(frozen=True)
class MoveSequence:
    """Stage structure of a contest: ``stages[t]`` players decide at stage t.

    Players are indexed 0..n-1 in order of play; all players within a stage
    decide simultaneously after observing every investment from strictly
    earlier stages.
    """

    stages: tuple[int, ...]

    def __post_init__(self):
        stages = tuple(int(k) for k in self.stages)
        object.__setattr__(self, "stages", stages)
        if len(stages) == 0:
            raise EmptySequence("a move sequence needs at least one stage")
        for k in stages:
            if k < 1:
                raise NonPositiveStageCount(
                    f"every stage needs at least one player, got {stages}"
                )

    @property
    def n_players(self) -> int:
        return sum(self.stages)

    @property
    def n_stages(self) -> int:
        return len(self.stages)

    def stage_of_player(self, player: int) -> int:
        """1-based stage at which 0-based ``player`` decides."""
        if not 0 <= player < self.n_players:
            raise IndexError(f"player index {player} out of range")
        seen = 0
        for t, k in enumerate(self.stages, start=1):
            seen += k
            if player < seen:
                return t
        raise AssertionError("unreachable")

    def players_before_stage(self, stage: int) -> int:
        """Number of players deciding strictly before 1-based ``stage``."""
        return sum(self.stages[: stage - 1])

    def label(self) -> str:
        return "(" + ",".join(str(k) for k in self.stages) + ")"


def validate_sequence(stages: Sequence[int]) -> MoveSequence:
    """Build a MoveSequence from raw stage counts, rejecting bad input."""
    return MoveSequence(tuple(stages))


@dataclass(frozen=True)
class ContestSpec:
    """Full parameterization of one contest.

    ``joy_of_winning`` is a preference parameter: it raises the prize players
    *act* as if they compete for (the effective prize), but is never paid out.
    """

    sequence: MoveSequence
    prize: float = 240.0
    endowment: float = 240.0
    joy_of_winning: float = 0.0

    def __post_init__(self):
        if self.prize <= 0:
            raise ContestError(f"prize must be positive, got {self.prize}")
        if self.endowment < 0:
            raise ContestError(f"endowment must be nonnegative, got {self.endowment}")
        if self.joy_of_winning < 0:
            raise ContestError(
                f"joy of winning must be nonnegative, got {self.joy_of_winning}"
            )

    @property
    def effective_prize(self) -> float:
        return self.prize + self.joy_of_winning


def win_probabilities(investments: Sequence[float]) -> np.ndarray:
    """Win probability of each player under the lottery success function.

    p_i = x_i / sum(x) when total investment is positive, 1/n otherwise.
    """
    x = np.asarray(investments, dtype=float)
    if x.ndim != 1 or x.size == 0:
        raise ContestError("investments must be a nonempty 1-d sequence")
    if np.any(x < 0):
        raise NegativeInvestment(f"investments must be nonnegative, got {x}")
    total = x.sum()
    if total > 0:
        return x / total
    return np.full(x.size, 1.0 / x.size)


def draw_winner(investments: Sequence[float], uniform_draw: float) -> int:
    """Resolve the contest given one uniform draw from [0, 1).

    Player i (0-based) wins iff the draw lands in the half-open interval
    [sum(p_0..p_{i-1}), sum(p_0..p_i)), so the outcome is a deterministic
    function of the draw.
    """
    if not 0.0 <= uniform_draw < 1.0:
        raise ContestError(f"uniform draw must lie in [0, 1), got {uniform_draw}")
    cum = np.cumsum(win_probabilities(investments))
    winner = int(np.searchsorted(cum, uniform_draw, side="right"))
    return min(winner, cum.size - 1)


def round_payoffs(
    spec: ContestSpec, investments: Sequence[float], winner: int
) -> np.ndarray:
    """Monetary payoffs for one round: endowment - own investment, plus the
    prize for the winner. Joy of winning is a preference term and is not paid.
    """
    x = np.asarray(investments, dtype=float)
    if np.any(x < 0):
        raise NegativeInvestment(f"investments must be nonnegative, got {x}")
    if np.any(x > spec.endowment + 1e-9):
        raise InvestmentExceedsEndowment(
            f"investments must not exceed the endowment {spec.endowment}, got {x}"
        )
    if not 0 <= winner < x.size:
        raise ContestError(f"winner index {winner} out of range for {x.size} players")
    payoffs = spec.endowment - x
    payoffs[winner] += spec.prize
    return payoffs
