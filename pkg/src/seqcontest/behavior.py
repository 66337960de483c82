"""Behavioral policies for contest agents.

Later movers are modeled with linear-quadratic response functions estimated
from observed play: a second mover invests
``intercept + m1_coef*m1 + m1_sq_coef*m1**2`` given the (average) first-stage
investment m1, and a third mover adds analogous terms in the second-stage
investment m2. First movers can best-respond to those estimated responses
("preempt optimally"), play the equilibrium recommendation, or simply imitate
what they observe.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from functools import lru_cache
from importlib import resources
from statistics import fmean
from typing import Mapping, NamedTuple, Sequence, Union

from scipy.optimize import brentq

from .core import ContestError, ContestSpec, MoveSequence
from .equilibrium import solve_spne

__all__ = [
    "InputOutOfRange",
    "RoleObservationMismatch",
    "ResponseModel",
    "PreemptionResult",
    "EquilibriumPolicy",
    "EmpiricalResponder",
    "Imitator",
    "OptimizingLeader",
    "BehaviorPolicy",
    "eval_response",
    "turning_point",
    "optimal_first_mover",
    "act",
    "default_response_models",
    "load_response_models",
    "policy_from_config",
]


class InputOutOfRange(ContestError):
    """A response-function input lies outside [0, endowment]."""


class RoleObservationMismatch(ContestError):
    """Observed investments do not match what the role should have seen."""


@dataclass(frozen=True)
class ResponseModel:
    """Linear-quadratic response of a later mover to observed investments.

    ``noise_sd`` is the scale of a zero-mean Gaussian disturbance added before
    clamping; the deterministic part is the fitted mean response.

    ``fit_effective_prize`` records the effective prize of the environment
    the model was estimated in. When set, counterfactual computations at a
    different effective prize P rescale the response homogeneously,
    r_P(m) = c * r(m / c) with c = P / fit_effective_prize, mirroring the
    degree-one homogeneity of contest best responses. Direct evaluation via
    :func:`eval_response` never rescales.
    """

    intercept: float
    m1_coef: float = 0.0
    m1_sq_coef: float = 0.0
    m2_coef: float = 0.0
    m2_sq_coef: float = 0.0
    noise_sd: float = 0.0
    fit_effective_prize: float | None = None

    def mean_response(self, m1: float, m2: float | None = None) -> float:
        """Fitted polynomial without noise or clamping."""
        value = self.intercept + self.m1_coef * m1 + self.m1_sq_coef * m1 * m1
        if m2 is not None:
            value += self.m2_coef * m2 + self.m2_sq_coef * m2 * m2
        return value


def eval_response(
    model: ResponseModel,
    m1: float,
    m2: float | None = None,
    *,
    endowment: float = 240.0,
    rng=None,
) -> float:
    """Evaluate a response model, optionally with noise, clamped to the
    feasible investment range.

    For treatments with two first movers, callers pass ``m1`` as the average
    of the two observed first-stage investments.
    """
    for name, m in (("m1", m1), ("m2", m2)):
        if m is not None and not 0.0 <= m <= endowment:
            raise InputOutOfRange(f"{name}={m} outside [0, {endowment}]")
    value = model.mean_response(m1, m2)
    if rng is not None and model.noise_sd > 0.0:
        value += model.noise_sd * rng.standard_normal()
    return float(min(max(value, 0.0), endowment))


def turning_point(
    model: ResponseModel, which: str = "m1", endowment: float = 240.0
) -> float | None:
    """Interior vertex of the response in ``m1`` or ``m2``, if one exists.

    Returns -coef / (2 * quad_coef) when the quadratic term is negative and
    the vertex lies strictly inside (0, endowment); None otherwise (convex or
    effectively linear responses have no interior peak).
    """
    if which == "m1":
        lin, quad = model.m1_coef, model.m1_sq_coef
    elif which == "m2":
        lin, quad = model.m2_coef, model.m2_sq_coef
    else:
        raise ValueError(f"which must be 'm1' or 'm2', got {which!r}")
    if quad >= 0.0:
        return None
    vertex = -lin / (2.0 * quad)
    if 0.0 < vertex < endowment:
        return float(vertex)
    return None


class PreemptionResult(NamedTuple):
    """Optimal first-stage investment plus a boundary flag."""

    investment: float
    at_boundary: bool


def _golden_max(f, lo: float, hi: float, tol: float = 1e-6) -> float:
    """Golden-section maximization of a unimodal function on [lo, hi]."""
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    return 0.5 * (a + b)


def _maximize_on_interval(f, lo: float, hi: float, coarse_step: float = 0.25):
    """Coarse grid scan followed by golden-section refinement."""
    n = int(round((hi - lo) / coarse_step))
    best_i, best_v = 0, -math.inf
    for i in range(n + 1):
        v = f(lo + i * coarse_step)
        if v > best_v:
            best_i, best_v = i, v
    a = max(lo, lo + (best_i - 1) * coarse_step)
    b = min(hi, lo + (best_i + 1) * coarse_step)
    return _golden_max(f, a, b, tol=1e-6)


def optimal_first_mover(
    treatment: MoveSequence,
    models: Mapping[int, ResponseModel],
    prize: float,
    joy_of_winning: float = 0.0,
    endowment: float = 240.0,
) -> PreemptionResult:
    """First movers' optimal investment against estimated later-mover
    responses.

    ``models`` maps stage index (2, and 3 for the three-stage treatment) to
    the responder model for that stage; only the deterministic part of each
    model is used. The effective prize is prize + joy_of_winning.

    For one leader the expected payoff is maximized directly over
    [0, endowment]. With two leaders, the symmetric equilibrium between them
    solves the first-order condition
    (V+w)*(x + R(x) - (x/2)*R'(x)) = (2x + R(x))**2, where the follower's
    response R takes the leaders' average investment as input.

    Models carrying ``fit_effective_prize`` are rescaled homogeneously when
    the effective prize here differs from the one they were estimated at, so
    removing (or varying) the joy-of-winning correction scales the optimum
    proportionally rather than pitting a shrunken prize against responses
    calibrated to a larger one.
    """
    stages = treatment.stages
    p_eff = prize + joy_of_winning
    n = treatment.n_players

    def scale_of(model: ResponseModel) -> float:
        if model.fit_effective_prize is None:
            return 1.0
        return p_eff / model.fit_effective_prize

    def response(model: ResponseModel, m1: float, m2: float | None = None) -> float:
        c = scale_of(model)
        return c * model.mean_response(m1 / c, None if m2 is None else m2 / c)

    def payoff(own: float, others: float) -> float:
        total = own + others
        if total <= 0.0:
            return p_eff / n - own
        return p_eff * own / total - own

    if stages == (1, 2):
        r2 = models[2]

        def objective(x: float) -> float:
            return payoff(x, 2.0 * response(r2, x))

        x = _maximize_on_interval(objective, 0.0, endowment)
    elif stages == (1, 1, 1):
        r2, r3 = models[2], models[3]

        def objective(x: float) -> float:
            second = response(r2, x)
            third = response(r3, x, second)
            return payoff(x, second + third)

        x = _maximize_on_interval(objective, 0.0, endowment)
    elif stages == (2, 1):
        r2 = models[2]

        def foc(x: float) -> float:
            resp = response(r2, x)
            c = scale_of(r2)
            slope = r2.m1_coef + 2.0 * r2.m1_sq_coef * (x / c)
            return p_eff * (x + resp - 0.5 * x * slope) - (2.0 * x + resp) ** 2

        xs = [i * 0.5 for i in range(int(endowment / 0.5) + 1)]
        vals = [foc(x) for x in xs]
        bracket = None
        for i in range(len(xs) - 1):
            if vals[i] == 0.0:
                bracket = (xs[i], xs[i])
                break
            if vals[i] * vals[i + 1] < 0.0:
                bracket = (xs[i], xs[i + 1])
                break
        if bracket is None:
            x = endowment if vals[0] > 0.0 else 0.0
        elif bracket[0] == bracket[1]:
            x = bracket[0]
        else:
            x = float(brentq(foc, bracket[0], bracket[1], xtol=1e-12))
    else:
        raise ContestError(
            f"optimal preemption is defined for (1,2), (2,1), (1,1,1); "
            f"got {treatment.label()}"
        )

    at_boundary = x <= 1e-6 or x >= endowment - 1e-6
    return PreemptionResult(float(x), at_boundary)


# ---------------------------------------------------------------------------
# Policies
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EquilibriumPolicy:
    """Play the solver's stage investment, with or without the joy-of-winning
    adjustment carried by the contest spec."""

    use_joy_of_winning: bool = False


@dataclass(frozen=True)
class EmpiricalResponder:
    """Later mover playing an estimated response function (optionally noisy)."""

    model: ResponseModel


@dataclass(frozen=True)
class Imitator:
    """Match the mean of observed prior investments; first movers have
    nothing to imitate and fall back to a fixed investment."""

    fallback: float


@dataclass(frozen=True)
class OptimizingLeader:
    """First mover playing the optimal preemptive investment against
    estimated responder models."""

    models: Mapping[int, ResponseModel]
    joy_of_winning: float = 0.0


BehaviorPolicy = Union[EquilibriumPolicy, EmpiricalResponder, Imitator, OptimizingLeader]


@lru_cache(maxsize=None)
def _cached_preemption(
    sequence: MoveSequence,
    model_items: tuple[tuple[int, ResponseModel], ...],
    prize: float,
    joy_of_winning: float,
    endowment: float,
) -> PreemptionResult:
    return optimal_first_mover(
        sequence, dict(model_items), prize, joy_of_winning, endowment
    )


def _observation_inputs(
    sequence: MoveSequence, stage: int, observed: Sequence[float]
) -> tuple[float, float | None]:
    """Map raw prior investments to the (m1, m2) inputs of a response model.

    m1 averages the first-stage investments (a single value in one-leader
    treatments); m2 is the second-stage investment, present only at stage 3.
    """
    k1 = sequence.stages[0]
    m1 = fmean(observed[:k1])
    m2 = observed[k1] if stage >= 3 else None
    return m1, m2


def act(
    policy: BehaviorPolicy,
    spec: ContestSpec,
    stage: int,
    observed: Sequence[float],
    rng=None,
) -> float:
    """Investment chosen by ``policy`` for a player deciding at ``stage``.

    ``observed`` must contain exactly the investments from strictly earlier
    stages, in player order. Any randomness (responder noise) is drawn from
    ``rng``; deterministic policies never touch it.
    """
    seq = spec.sequence
    expected = seq.players_before_stage(stage)
    if len(observed) != expected:
        raise RoleObservationMismatch(
            f"stage {stage} of {seq.label()} observes {expected} prior "
            f"investments, got {len(observed)}"
        )

    if isinstance(policy, EquilibriumPolicy):
        if policy.use_joy_of_winning:
            solution = solve_spne(spec)
        else:
            solution = solve_spne(
                ContestSpec(seq, spec.prize, spec.endowment, 0.0)
            )
        value = solution.scaled_stage_investments[stage - 1]
    elif isinstance(policy, EmpiricalResponder):
        if stage < 2:
            raise RoleObservationMismatch(
                "a responder needs at least one earlier stage to respond to"
            )
        m1, m2 = _observation_inputs(seq, stage, observed)
        return eval_response(
            policy.model, m1, m2, endowment=spec.endowment, rng=rng
        )
    elif isinstance(policy, Imitator):
        value = fmean(observed) if observed else policy.fallback
    elif isinstance(policy, OptimizingLeader):
        if stage != 1:
            raise RoleObservationMismatch(
                "an optimizing leader must move at stage 1"
            )
        result = _cached_preemption(
            seq,
            tuple(sorted(policy.models.items())),
            spec.prize,
            policy.joy_of_winning,
            spec.endowment,
        )
        value = result.investment
    else:
        raise TypeError(f"unknown policy {policy!r}")

    return float(min(max(value, 0.0), spec.endowment))


# ---------------------------------------------------------------------------
# Bundled response-model presets and config parsing
# ---------------------------------------------------------------------------

_MODEL_FIELDS = (
    "intercept",
    "m1_coef",
    "m1_sq_coef",
    "m2_coef",
    "m2_sq_coef",
    "noise_sd",
    "fit_effective_prize",
)


def _model_from_dict(entry: Mapping, fit_effective_prize: float | None = None) -> ResponseModel:
    unknown = set(entry) - set(_MODEL_FIELDS)
    if unknown:
        raise ContestError(f"unknown response-model keys: {sorted(unknown)}")
    if "intercept" not in entry:
        raise ContestError("response model needs an 'intercept'")
    fields = {k: float(v) for k, v in entry.items()}
    fields.setdefault(
        "fit_effective_prize",
        fit_effective_prize if fit_effective_prize is None else float(fit_effective_prize),
    )
    if fields["fit_effective_prize"] is None:
        del fields["fit_effective_prize"]
    return ResponseModel(**fields)


def load_response_models(path) -> dict[MoveSequence, dict[int, ResponseModel]]:
    """Read responder models from a JSON preset file.

    Schema: {"schema": 1, "models": {"1,2": {"2": {...}}, ...}} where the
    outer key is a comma-separated move sequence, the inner key the stage the
    responder moves at, and the leaf an object with the ResponseModel fields.
    A top-level "fit_effective_prize" applies to every model that does not
    set its own.
    """
    with open(path, encoding="utf-8") as fh:
        raw = json.load(fh)
    return _parse_model_tree(raw)


def _parse_model_tree(raw: Mapping) -> dict[MoveSequence, dict[int, ResponseModel]]:
    default_prize = raw.get("fit_effective_prize")
    out: dict[MoveSequence, dict[int, ResponseModel]] = {}
    for seq_key, stage_map in raw["models"].items():
        seq = MoveSequence(tuple(int(s) for s in seq_key.split(",")))
        out[seq] = {
            int(stage): _model_from_dict(entry, default_prize)
            for stage, entry in stage_map.items()
        }
    return out


@lru_cache(maxsize=1)
def _bundled_models() -> dict[MoveSequence, dict[int, ResponseModel]]:
    text = (
        resources.files("seqcontest.presets")
        .joinpath("response_models.json")
        .read_text(encoding="utf-8")
    )
    return _parse_model_tree(json.loads(text))


def default_response_models(sequence: MoveSequence) -> dict[int, ResponseModel]:
    """Bundled responder models for one of the sequential treatments."""
    models = _bundled_models()
    if sequence not in models:
        raise ContestError(f"no bundled response models for {sequence.label()}")
    return dict(models[sequence])


def policy_from_config(entry: Mapping, spec: ContestSpec, player: int) -> BehaviorPolicy:
    """Build a policy from one JSON config entry for the given player slot.

    Kinds: "spne", "jow-spne", "responder", "imitator", "optimizing-leader".
    Responder and leader entries may omit "model"/"models" to use the bundled
    presets for the session's treatment.
    """
    kind = str(entry.get("kind", "")).lower()
    seq = spec.sequence
    if kind == "spne":
        return EquilibriumPolicy(use_joy_of_winning=False)
    if kind == "jow-spne":
        return EquilibriumPolicy(use_joy_of_winning=True)
    if kind == "responder":
        stage = seq.stage_of_player(player)
        if "model" in entry:
            model = _model_from_dict(entry["model"])
        else:
            model = default_response_models(seq)[stage]
        if "noise_sd" in entry:
            model = replace(model, noise_sd=float(entry["noise_sd"]))
        return EmpiricalResponder(model)
    if kind == "imitator":
        return Imitator(fallback=float(entry.get("fallback", 0.0)))
    if kind == "optimizing-leader":
        if "models" in entry:
            models = {int(k): _model_from_dict(v) for k, v in entry["models"].items()}
        else:
            models = default_response_models(seq)
        jow = float(entry.get("joy_of_winning", spec.joy_of_winning))
        return OptimizingLeader(models=models, joy_of_winning=jow)
    raise ContestError(f"unknown policy kind {entry.get('kind')!r}")
