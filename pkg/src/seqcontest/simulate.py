"""Replay of the laboratory protocol with programmatic agents.

A session runs fixed matching groups of 9 subjects (3 per player role) for a
number of identical rounds. Each round every group is partitioned uniformly
at random into 3 role-complete triads; triads play the contest with stages
revealed in order, one winner is drawn per triad, and payoffs are booked.
Every (group, session) pair owns its own counter-based random stream derived
from the master seed, so logs are bit-identical across reruns and independent
of scheduling.
"""

from __future__ import annotations

import csv
import json
import os
from dataclasses import dataclass, field, replace
from typing import Mapping, Sequence

import numpy as np

from .core import ContestError, ContestSpec, MoveSequence, draw_winner, round_payoffs
from .behavior import BehaviorPolicy, act, policy_from_config

__all__ = [
    "BadGroupComposition",
    "RoundRecord",
    "SessionConfig",
    "SessionLog",
    "play_round",
    "run_session",
    "run_batch",
    "export_log",
    "load_log",
    "session_config_from_dict",
]

SUBJECTS_PER_ROLE = 3
CSV_COLUMNS = (
    "group",
    "round",
    "triad",
    "subject",
    "stage",
    "slot",
    "m1",
    "m2",
    "investment",
    "won",
    "payoff",
)


class BadGroupComposition(ContestError):
    """Matching groups cannot be formed for this configuration."""


@dataclass(frozen=True)
class RoundRecord:
    """One subject-round observation.

    ``stage``/``slot`` locate the subject's role (stage of play, position
    within the stage); ``m1``/``m2`` are the prior investments the subject's
    stage observes, encoded as in the response models: m1 is the (average)
    first-stage investment, m2 the second-stage investment for third movers.
    Both are None where the treatment reveals nothing.
    """

    group: int
    round: int
    triad: int
    subject: int
    stage: int
    slot: int
    m1: float | None
    m2: float | None
    investment: float
    won: bool
    payoff: float


@dataclass(frozen=True)
class SessionConfig:
    """Everything needed to reproduce one session run."""

    spec: ContestSpec
    policies: tuple[BehaviorPolicy, ...]
    groups: int
    rounds: int = 25
    integer_rounding: bool = False
    seed: int = 0

    def __post_init__(self):
        n = self.spec.sequence.n_players
        if len(self.policies) != n:
            raise BadGroupComposition(
                f"need one policy per player ({n}), got {len(self.policies)}"
            )
        if self.groups < 1 or self.rounds < 1:
            raise BadGroupComposition("groups and rounds must be at least 1")


@dataclass
class SessionLog:
    """All round records of one session plus the metadata to interpret them."""

    spec: ContestSpec
    groups: int
    rounds: int
    integer_rounding: bool
    seed: int
    records: list[RoundRecord] = field(default_factory=list)

    @property
    def sequence(self) -> MoveSequence:
        return self.spec.sequence


def _role_layout(sequence: MoveSequence) -> list[tuple[int, int]]:
    """(stage, slot) for each player index, both 1-based."""
    layout = []
    for stage, count in enumerate(sequence.stages, start=1):
        for slot in range(1, count + 1):
            layout.append((stage, slot))
    return layout


def _observed_inputs(
    sequence: MoveSequence, stage: int, investments: Sequence[float]
) -> tuple[float | None, float | None]:
    """(m1, m2) revealed to a player deciding at ``stage``."""
    if stage < 2:
        return None, None
    k1 = sequence.stages[0]
    m1 = float(np.mean(investments[:k1]))
    m2 = float(investments[k1]) if stage >= 3 else None
    return m1, m2


def play_round(
    policies: Sequence[BehaviorPolicy],
    spec: ContestSpec,
    rng: np.random.Generator,
    *,
    integer_rounding: bool = False,
    group: int = 1,
    round_number: int = 1,
    triad: int = 1,
    subjects: Sequence[int] = (1, 2, 3),
) -> list[RoundRecord]:
    """Play one triad through all stages, draw the winner, book payoffs.

    Stage t actors observe exactly the investments from stages before t.
    ``rng`` is consumed in a fixed order: one draw per (possibly noisy)
    policy in player order, then one uniform draw for the winner.
    """
    seq = spec.sequence
    n = seq.n_players
    if len(policies) != n or len(subjects) != n:
        raise BadGroupComposition("one policy and one subject id per player slot")

    investments: list[float] = []
    for stage, count in enumerate(seq.stages, start=1):
        observed = list(investments)
        for _ in range(count):
            player = len(investments)
            x = act(policies[player], spec, stage, observed, rng)
            if integer_rounding:
                # lab rule: whole points only; round half to even, then clamp
                x = float(min(max(round(x), 0), int(spec.endowment)))
            investments.append(x)

    winner = draw_winner(investments, float(rng.random()))
    payoffs = round_payoffs(spec, investments, winner)

    layout = _role_layout(seq)
    records = []
    for player, (stage, slot) in enumerate(layout):
        m1, m2 = _observed_inputs(seq, stage, investments)
        records.append(
            RoundRecord(
                group=group,
                round=round_number,
                triad=triad,
                subject=int(subjects[player]),
                stage=stage,
                slot=slot,
                m1=m1,
                m2=m2,
                investment=investments[player],
                won=player == winner,
                payoff=float(payoffs[player]),
            )
        )
    return records


def _group_rng(seed: int, group_index: int) -> np.random.Generator:
    # counter-based Philox keyed on (seed, group): reproducible regardless of
    # execution order across groups
    return np.random.Generator(
        np.random.Philox(np.random.SeedSequence(entropy=seed, spawn_key=(group_index,)))
    )


def run_session(config: SessionConfig) -> SessionLog:
    """Run all rounds for all matching groups of one session.

    Subjects are numbered 1..9*groups; within each group the first three hold
    player role 1, the next three role 2, the last three role 3, fixed for
    the whole session. Each round the group's 9 subjects are rematched into
    3 triads, one subject per role, uniformly at random.
    """
    seq = config.spec.sequence
    if seq.n_players != SUBJECTS_PER_ROLE:
        raise BadGroupComposition(
            f"the protocol matches groups of 9 into triads of 3; treatment "
            f"{seq.label()} has {seq.n_players} players"
        )
    n = seq.n_players
    log = SessionLog(
        spec=config.spec,
        groups=config.groups,
        rounds=config.rounds,
        integer_rounding=config.integer_rounding,
        seed=config.seed,
    )
    for g in range(config.groups):
        rng = _group_rng(config.seed, g)
        base_subject = g * n * SUBJECTS_PER_ROLE
        # role_members[r][k]: subject id of the k-th member holding role r
        role_members = [
            [base_subject + r * SUBJECTS_PER_ROLE + k + 1 for k in range(SUBJECTS_PER_ROLE)]
            for r in range(n)
        ]
        for round_number in range(1, config.rounds + 1):
            matching = [rng.permutation(SUBJECTS_PER_ROLE) for _ in range(n)]
            for triad in range(1, SUBJECTS_PER_ROLE + 1):
                subjects = [
                    role_members[r][matching[r][triad - 1]] for r in range(n)
                ]
                log.records.extend(
                    play_round(
                        config.policies,
                        config.spec,
                        rng,
                        integer_rounding=config.integer_rounding,
                        group=g + 1,
                        round_number=round_number,
                        triad=triad,
                        subjects=subjects,
                    )
                )
    return log


def _derived_seed(seed: int, replication: int) -> int:
    stream = np.random.SeedSequence(entropy=seed, spawn_key=(replication,))
    return int(stream.generate_state(1, dtype=np.uint64)[0])


def run_batch(
    configs: Sequence[SessionConfig],
    replications: int = 1,
    threads: int = 1,
) -> list[SessionLog]:
    """Run each config ``replications`` times with independently derived
    seeds. Results come back in (config, replication) order regardless of
    ``threads``.
    """
    if replications < 1:
        raise ContestError("replications must be at least 1")
    jobs = [
        replace(config, seed=_derived_seed(config.seed, rep))
        for config in configs
        for rep in range(replications)
    ]
    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(run_session, jobs))
    return [run_session(job) for job in jobs]


# ---------------------------------------------------------------------------
# Log serialization
# ---------------------------------------------------------------------------


def _float_cell(value: float | None) -> str:
    return "" if value is None else repr(float(value))


def _atomic_write_text(path, text: str) -> None:
    path = os.fspath(path)
    tmp = path + ".tmp"
    with open(tmp, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _log_meta(log: SessionLog) -> dict:
    return {
        "schema": 1,
        "sequence": list(log.sequence.stages),
        "prize": log.spec.prize,
        "endowment": log.spec.endowment,
        "joy_of_winning": log.spec.joy_of_winning,
        "groups": log.groups,
        "rounds": log.rounds,
        "integer_rounding": log.integer_rounding,
        "seed": log.seed,
    }


def export_log(log: SessionLog, format: str, path) -> None:
    """Write a session log as CSV or JSON (atomically: temp file + rename)."""
    if format == "csv":
        import io

        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for r in log.records:
            writer.writerow(
                [
                    r.group,
                    r.round,
                    r.triad,
                    r.subject,
                    r.stage,
                    r.slot,
                    _float_cell(r.m1),
                    _float_cell(r.m2),
                    repr(float(r.investment)),
                    int(r.won),
                    repr(float(r.payoff)),
                ]
            )
        _atomic_write_text(path, buf.getvalue())
    elif format == "json":
        payload = {
            "meta": _log_meta(log),
            "records": [
                {
                    "group": r.group,
                    "round": r.round,
                    "triad": r.triad,
                    "subject": r.subject,
                    "stage": r.stage,
                    "slot": r.slot,
                    "m1": r.m1,
                    "m2": r.m2,
                    "investment": r.investment,
                    "won": r.won,
                    "payoff": r.payoff,
                }
            for r in log.records],
        }
        _atomic_write_text(path, json.dumps(payload, indent=1) + "\n")
    else:
        raise ContestError(f"unknown export format {format!r}")


def _record_from_json(entry: Mapping) -> RoundRecord:
    return RoundRecord(
        group=int(entry["group"]),
        round=int(entry["round"]),
        triad=int(entry["triad"]),
        subject=int(entry["subject"]),
        stage=int(entry["stage"]),
        slot=int(entry["slot"]),
        m1=None if entry["m1"] is None else float(entry["m1"]),
        m2=None if entry["m2"] is None else float(entry["m2"]),
        investment=float(entry["investment"]),
        won=bool(entry["won"]),
        payoff=float(entry["payoff"]),
    )


def load_log(path, format: str | None = None) -> SessionLog:
    """Read back a log written by :func:`export_log`.

    CSV files carry no session metadata, so the contest parameters are rebuilt with
    defaults where the file is silent (sequence comes from the stage/slot
    columns, prize and endowment default to 240).
    """
    path = os.fspath(path)
    if format is None:
        format = "json" if path.endswith(".json") else "csv"
    if format == "json":
        with open(path, encoding="utf-8") as fh:
            payload = json.load(fh)
        meta = payload["meta"]
        if meta.get("schema") != 1:
            raise ContestError(f"unsupported log schema {meta.get('schema')!r}")
        spec = ContestSpec(
            MoveSequence(tuple(meta["sequence"])),
            prize=float(meta["prize"]),
            endowment=float(meta["endowment"]),
            joy_of_winning=float(meta["joy_of_winning"]),
        )
        log = SessionLog(
            spec=spec,
            groups=int(meta["groups"]),
            rounds=int(meta["rounds"]),
            integer_rounding=bool(meta["integer_rounding"]),
            seed=int(meta["seed"]),
        )
        log.records = [_record_from_json(entry) for entry in payload["records"]]
        return log
    if format == "csv":
        records = []
        with open(path, encoding="utf-8", newline="") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None or tuple(reader.fieldnames) != CSV_COLUMNS:
                raise ContestError(
                    f"unexpected CSV columns {reader.fieldnames!r} in {path}"
                )
            for row in reader:
                records.append(
                    RoundRecord(
                        group=int(row["group"]),
                        round=int(row["round"]),
                        triad=int(row["triad"]),
                        subject=int(row["subject"]),
                        stage=int(row["stage"]),
                        slot=int(row["slot"]),
                        m1=float(row["m1"]) if row["m1"] else None,
                        m2=float(row["m2"]) if row["m2"] else None,
                        investment=float(row["investment"]),
                        won=row["won"] == "1",
                        payoff=float(row["payoff"]),
                    )
                )
        stages: dict[int, int] = {}
        for r in records:
            stages[r.stage] = max(stages.get(r.stage, 0), r.slot)
        sequence = MoveSequence(tuple(stages[t] for t in sorted(stages)))
        groups = max((r.group for r in records), default=1)
        rounds = max((r.round for r in records), default=1)
        log = SessionLog(
            spec=ContestSpec(sequence),
            groups=groups,
            rounds=rounds,
            integer_rounding=False,
            seed=0,
        )
        log.records = records
        return log
    raise ContestError(f"unknown log format {format!r}")


def session_config_from_dict(raw: Mapping) -> SessionConfig:
    """Build a SessionConfig from one parsed JSON session object.

    Keys: treatment (stage counts), prize, endowment, joy_of_winning, groups,
    rounds, integer_rounding, seed, policies (one entry per player, see
    :func:`seqcontest.behavior.policy_from_config`).
    """
    try:
        sequence = MoveSequence(tuple(int(k) for k in raw["treatment"]))
        spec = ContestSpec(
            sequence,
            prize=float(raw.get("prize", 240.0)),
            endowment=float(raw.get("endowment", 240.0)),
            joy_of_winning=float(raw.get("joy_of_winning", 0.0)),
        )
        policy_entries = raw["policies"]
        policies = tuple(
            policy_from_config(entry, spec, player)
            for player, entry in enumerate(policy_entries)
        )
        return SessionConfig(
            spec=spec,
            policies=policies,
            groups=int(raw.get("groups", 1)),
            rounds=int(raw.get("rounds", 25)),
            integer_rounding=bool(raw.get("integer_rounding", False)),
            seed=int(raw.get("seed", 0)),
        )
    except KeyError as exc:
        raise ContestError(f"session config missing key {exc}") from exc
