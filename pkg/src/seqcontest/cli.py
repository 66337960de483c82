"""Command-line front end: solve, simulate, analyze.

Every run that writes files also writes a ``manifest.json`` next to them
recording the command, inputs, seed, package version, output paths, and wall
clock, so any artifact can be traced to exactly one invocation. Output files
are written to a temp name and renamed on success; a failing run leaves no
partial outputs.

Exit codes: 0 success, 2 invalid input or config, 3 I/O failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from importlib import metadata, resources

from .core import ContestError, ContestSpec, MoveSequence
from .equilibrium import calibrate_jow, solve_spne
from .simulate import (
    SessionLog,
    export_log,
    load_log,
    run_batch,
    session_config_from_dict,
)
from . import stats as st

_EXIT_BAD_INPUT = 2
_EXIT_IO = 3


def _version() -> str:
    try:
        return metadata.version("seqcontest")
    except metadata.PackageNotFoundError:
        return "unknown"


def _atomic_write(path: str, text: str) -> None:
    tmp = path + ".tmp"
    with open(tmp, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _write_manifest(out_dir: str, command: str, config: str | None, seed, outputs, t0: float) -> None:
    manifest = {
        "schema": 1,
        "command": command,
        "config": config,
        "master_seed": seed,
        "package_version": _version(),
        "outputs": sorted(os.path.basename(p) for p in outputs),
        "wall_clock_seconds": round(time.time() - t0, 3),
    }
    _atomic_write(os.path.join(out_dir, "manifest.json"), json.dumps(manifest, indent=1) + "\n")


def _parse_sequence(text: str) -> MoveSequence:
    try:
        return MoveSequence(tuple(int(part) for part in text.split(",")))
    except (ValueError, ContestError) as exc:
        raise ContestError(f"bad sequence {text!r}: {exc}") from exc


# ---------------------------------------------------------------------------
# solve
# ---------------------------------------------------------------------------


def cmd_solve(args) -> int:
    sequence = _parse_sequence(args.seq)
    jow = args.jow
    banner = None
    if args.calibrate_from is not None:
        jow = calibrate_jow(args.calibrate_from, sequence.n_players, args.prize)
        banner = (
            f"calibrated joy of winning w = {jow:.2f} "
            f"(mean {args.calibrate_from}, prize {args.prize:g})"
        )
    spec = ContestSpec(sequence, prize=args.prize, endowment=args.endowment, joy_of_winning=jow)
    solution = solve_spne(spec)

    if args.format == "json":
        text = json.dumps(solution.to_dict(), indent=1) + "\n"
    else:
        lines = []
        if banner:
            lines.append(banner)
        lines.append(
            f"sequence {sequence.label()}  prize {args.prize:g}  joy of winning {jow:g}"
        )
        lines.append(f"aggregate investment X = {solution.scaled_aggregate:.2f}")
        for t, x in enumerate(solution.scaled_stage_investments, start=1):
            lines.append(
                f"  stage {t}: {x:.2f} per player "
                f"({spec.sequence.stages[t - 1]} player(s))"
            )
        text = "\n".join(lines) + "\n"
    if banner and args.format == "json":
        print(banner)
    if args.out:
        try:
            _atomic_write(args.out, text)
        except OSError as exc:
            print(f"error: cannot write {args.out}: {exc}", file=sys.stderr)
            return _EXIT_IO
    else:
        sys.stdout.write(text)
    return 0


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------


def _resolve_config(name: str) -> tuple[dict, str]:
    """Load a batch config from a path or from the bundled presets."""
    if os.path.exists(name):
        with open(name, encoding="utf-8") as fh:
            return json.load(fh), name
    bundled = resources.files("seqcontest.presets").joinpath(name + ".json")
    if bundled.is_file():
        return json.loads(bundled.read_text(encoding="utf-8")), f"preset:{name}"
    raise ContestError(f"config {name!r} is neither a file nor a bundled preset")


def _threads_cap() -> int:
    raw = os.environ.get("SEQCONTEST_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _log_basename(log: SessionLog, index: int) -> str:
    label = "-".join(str(k) for k in log.sequence.stages)
    return f"session{index:02d}_seq{label}"


def cmd_simulate(args) -> int:
    t0 = time.time()
    try:
        raw, config_name = _resolve_config(args.config)
        if raw.get("schema") != 1:
            raise ContestError(f"unsupported config schema {raw.get('schema')!r}")
        sessions = raw.get("sessions")
        if not isinstance(sessions, list) or not sessions:
            raise ContestError("config needs a nonempty 'sessions' list")
        configs = [session_config_from_dict(entry) for entry in sessions]
        if args.seed is not None:
            configs = [
                type(cfg)(
                    spec=cfg.spec,
                    policies=cfg.policies,
                    groups=cfg.groups,
                    rounds=cfg.rounds,
                    integer_rounding=cfg.integer_rounding,
                    seed=args.seed + i,
                )
                for i, cfg in enumerate(configs)
            ]
        replications = int(raw.get("replications", 1))
    except (ContestError, ValueError, KeyError, json.JSONDecodeError) as exc:
        print(f"error: invalid config: {exc}", file=sys.stderr)
        return _EXIT_BAD_INPUT
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return _EXIT_IO

    logs = run_batch(configs, replications=replications, threads=_threads_cap())

    formats = ["csv", "json"] if args.format == "both" else [args.format]
    try:
        os.makedirs(args.out, exist_ok=True)
        outputs = []
        for i, log in enumerate(logs):
            base = os.path.join(args.out, _log_basename(log, i))
            for fmt in formats:
                path = f"{base}.{fmt}"
                export_log(log, fmt, path)
                outputs.append(path)
        seeds = [cfg.seed for cfg in configs]
        _write_manifest(args.out, "simulate", config_name, seeds, outputs, t0)
    except OSError as exc:
        print(f"error: cannot write outputs: {exc}", file=sys.stderr)
        return _EXIT_IO
    print(f"wrote {len(outputs)} log file(s) to {args.out}")
    return 0


# ---------------------------------------------------------------------------
# analyze
# ---------------------------------------------------------------------------


def _csv_label(sequence) -> str:
    return "-".join(str(k) for k in sequence.stages)


def _summary_csv(summaries) -> str:
    lines = ["treatment,role,mean,se,n_obs,clusters,rounds"]
    for s in summaries:
        label = _csv_label(s.sequence)
        for i, (mean, se) in enumerate(zip(s.role_means, s.role_ses), start=1):
            lines.append(
                f"{label},x{i},{mean:.6f},{se:.6f},{s.nobs},{s.n_clusters},{s.n_rounds}"
            )
        lines.append(
            f"{label},X,{s.aggregate_mean:.6f},{s.aggregate_se:.6f},"
            f"{s.nobs},{s.n_clusters},{s.n_rounds}"
        )
    return "\n".join(lines) + "\n"


def _summary_text(summaries) -> list[str]:
    lines = ["Treatment summary (means, clustered SEs in parentheses)"]
    header = f"{'':10s}" + "".join(f"{s.sequence.label():>18s}" for s in summaries)
    lines.append(header)
    n_roles = max(len(s.role_means) for s in summaries)
    for i in range(n_roles):
        row = f"{'x' + str(i + 1):10s}"
        for s in summaries:
            if i < len(s.role_means):
                row += f"{s.role_means[i]:>10.2f} ({s.role_ses[i]:.2f})".rjust(18)
            else:
                row += " " * 18
        lines.append(row)
    row = f"{'X':10s}"
    for s in summaries:
        row += f"{s.aggregate_mean:>10.2f} ({s.aggregate_se:.2f})".rjust(18)
    lines.append(row)
    return lines


def cmd_analyze(args) -> int:
    t0 = time.time()
    try:
        logs = [load_log(path) for path in args.logs]
    except OSError as exc:
        print(f"error: cannot read log: {exc}", file=sys.stderr)
        return _EXIT_IO
    except (ContestError, ValueError, KeyError, json.JSONDecodeError) as exc:
        print(f"error: bad log file: {exc}", file=sys.stderr)
        return _EXIT_BAD_INPUT

    tests = [t.strip() for t in args.tests.split(",") if t.strip()]
    unknown = set(tests) - {"summary", "trend", "jt", "wald"}
    if unknown:
        print(f"error: unknown tests {sorted(unknown)}", file=sys.stderr)
        return _EXIT_BAD_INPUT

    last_k = args.last_rounds
    report: list[str] = [
        f"analysis of {len(logs)} log(s)"
        + (f", last {last_k} rounds" if last_k else ", all rounds")
    ]
    outputs = []
    try:
        os.makedirs(args.out, exist_ok=True)

        if "summary" in tests:
            summaries = st.treatment_summary(logs, last_k_rounds=last_k)
            path = os.path.join(args.out, "summary.csv")
            _atomic_write(path, _summary_csv(summaries))
            outputs.append(path)
            report.extend([""] + _summary_text(summaries))

        if "trend" in tests:
            lines = ["treatment,slope,se,n_obs,clusters"]
            report += ["", "Round trend (investment on round, clustered SEs)"]
            for log in logs:
                records = log.records
                fit = st.trend_by_round(records)
                lines.append(
                    f"{_csv_label(log.sequence)},{fit.params[1]:.6f},"
                    f"{fit.se[1]:.6f},{fit.nobs},{fit.n_clusters}"
                )
                report.append(
                    f"  {log.sequence.label():8s} slope {fit.params[1]:8.4f}"
                    f"  (se {fit.se[1]:.4f})"
                )
            path = os.path.join(args.out, "trend.csv")
            _atomic_write(path, "\n".join(lines) + "\n")
            outputs.append(path)

        test_lines = ["test,treatment,quantity,statistic,pvalue,detail"]
        if "wald" in tests:
            report += ["", "Wald tests of observed means against the equilibrium"]
            for log in logs:
                solution = solve_spne(
                    ContestSpec(log.sequence, log.spec.prize, log.spec.endowment, 0.0)
                )
                records = st._filter_last_rounds(log.records, last_k)
                totals: dict[tuple[int, int, int], float] = {}
                groups_of: dict[tuple[int, int, int], int] = {}
                for r in records:
                    key = (r.group, r.round, r.triad)
                    totals[key] = totals.get(key, 0.0) + r.investment
                    groups_of[key] = r.group
                keys = sorted(totals)
                res = st.wald_mean(
                    [totals[k] for k in keys],
                    [groups_of[k] for k in keys],
                    solution.scaled_aggregate,
                )
                test_lines.append(
                    f"wald,{_csv_label(log.sequence)},X,{res.statistic:.6g},"
                    f"{res.pvalue:.6g},h0={solution.scaled_aggregate:.4f}"
                )
                report.append(
                    f"  {log.sequence.label():8s} X vs {solution.scaled_aggregate:7.2f}: "
                    f"W = {res.statistic:.3f}, p = {res.pvalue:.4f}"
                    + ("  [degenerate]" if res.degenerate else "")
                )

        if "jt" in tests:
            if len(logs) < 3:
                print("error: the JT test needs at least 3 logs", file=sys.stderr)
                return _EXIT_BAD_INPUT
            group_means = [st.group_aggregate_means(log, last_k) for log in logs]
            res = st.jonckheere_terpstra(group_means)
            test_lines.append(
                f"jt,all,X,{res.statistic:.6g},{res.pvalue:.6g},z={res.zscore:.4f}"
            )
            verdict = "yes" if res.pvalue < args.alpha else "no"
            report += [
                "",
                "Jonckheere-Terpstra trend across treatments "
                "(matching-group means of X, in the order given)",
                f"  JT = {res.statistic:.1f}, z = {res.zscore:.3f}, "
                f"p = {res.pvalue:.4f}; significant at alpha={args.alpha:g}: {verdict}",
            ]

        if "wald" in tests or "jt" in tests:
            path = os.path.join(args.out, "tests.csv")
            _atomic_write(path, "\n".join(test_lines) + "\n")
            outputs.append(path)

        report_path = os.path.join(args.out, "report.txt")
        _atomic_write(report_path, "\n".join(report) + "\n")
        outputs.append(report_path)
        _write_manifest(args.out, "analyze", None, None, outputs, t0)
    except st.EmptyLog as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _EXIT_BAD_INPUT
    except OSError as exc:
        print(f"error: cannot write outputs: {exc}", file=sys.stderr)
        return _EXIT_IO

    sys.stdout.write("\n".join(report) + "\n")
    return 0


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="seqcontest",
        description="Sequential lottery contests: equilibria, simulation, analysis.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="compute equilibrium investments")
    p_solve.add_argument("--seq", required=True, help="move sequence, e.g. 1,2")
    p_solve.add_argument("--prize", type=float, default=240.0)
    p_solve.add_argument("--endowment", type=float, default=240.0)
    p_solve.add_argument("--jow", type=float, default=0.0, help="joy of winning")
    p_solve.add_argument(
        "--calibrate-from",
        type=float,
        default=None,
        metavar="MEAN",
        help="calibrate joy of winning from this observed simultaneous-contest mean",
    )
    p_solve.add_argument("--format", choices=["text", "json"], default="text")
    p_solve.add_argument("--out", default=None, help="write output to this file")
    p_solve.set_defaults(func=cmd_solve)

    p_sim = sub.add_parser("simulate", help="run sessions from a config file")
    p_sim.add_argument(
        "--config", required=True, help="config path or bundled preset name"
    )
    p_sim.add_argument("--seed", type=int, default=None, help="override session seeds")
    p_sim.add_argument("--out", default="out", help="output directory")
    p_sim.add_argument("--format", choices=["csv", "json", "both"], default="both")
    p_sim.set_defaults(func=cmd_simulate)

    p_an = sub.add_parser("analyze", help="summaries and tests over session logs")
    p_an.add_argument("logs", nargs="+", help="log files (CSV or JSON)")
    p_an.add_argument("--last-rounds", type=int, default=None, metavar="K")
    p_an.add_argument(
        "--tests", default="summary,trend,jt,wald", help="comma list of tests to run"
    )
    p_an.add_argument("--alpha", type=float, default=0.05)
    p_an.add_argument("--out", default="analysis", help="output directory")
    p_an.add_argument("--format", choices=["csv"], default="csv")
    p_an.set_defaults(func=cmd_analyze)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ContestError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _EXIT_BAD_INPUT


if __name__ == "__main__":
    sys.exit(main())
