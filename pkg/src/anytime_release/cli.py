"""Command-line interface.

Exit codes: 0 success, 1 usage error, 2 malformed input, 3 internal invariant
violation. With ``--out PATH`` the report is written to PATH and figures are
written next to it as ``PATH`` stem plus a ``.png`` suffix.
"""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

from . import __version__
from .cohort import METHODS, emit_report, evaluate_cohort, run_method
from .errors import BadConfig, InputError, InvariantViolation, IoFailure, MalformedRecord
from .evidence import (
    DEFAULT_ALPHA,
    DEFAULT_ETA,
    DEFAULT_T_MAX,
    DEFAULT_TRUNC,
    calibrator_new,
    run_wrapper,
)
from .gain import gain_decomposition, stepwise_feasible_summary
from .oracles import (
    NullSimConfig,
    drift_upper_bound,
    naive_stopping_lower_bound,
    power_lower_bound,
    rout_upper_bound,
    simulate_feasible,
    simulate_naive,
    simulate_null,
)
from .pool import (
    DEFAULT_GRID,
    ScoredCandidate,
    UpperTailRule,
    collect_hard_negatives,
    load_pool,
    pool_diagnostic,
    pool_to_dict,
)
from .report import dumps_machine, render_table
from .trajectory import load_trajectories, read_records

EXIT_USAGE, EXIT_INPUT, EXIT_INVARIANT = 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        sys.exit(EXIT_USAGE)


def _float_list(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _common(p, *, pool=True, traj=True, betting=True, alpha_multi=False):
    if pool:
        p.add_argument("--pool", required=True, help="reference pool file")
    if traj:
        p.add_argument("--trajectories", required=True, help="line-delimited trajectory records")
    if betting:
        if alpha_multi:
            p.add_argument("--alpha", type=_float_list, action="append",
                           help="level(s); repeat or comma-separate (default 0.2,0.1,0.05)")
        else:
            p.add_argument("--alpha", type=float, default=DEFAULT_ALPHA)
        p.add_argument("--eta", type=float, default=DEFAULT_ETA)
        p.add_argument("--trunc", type=float, default=DEFAULT_TRUNC, help="truncation level M")
        p.add_argument("--t-max", type=int, default=DEFAULT_T_MAX)
    p.add_argument("--format", choices=("table", "machine"), default="table")
    p.add_argument("--out", help="write the report here and figures alongside")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="anytime-release", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("build-pool", help="build a hard-negative pool from adjudicated candidates")
    p.add_argument("--trajectories", required=True,
                   help="records with task_id, score and correct (or adjudication 0/1)")
    p.add_argument("--q", type=float, default=0.55, help="retained upper fraction (default 0.55)")
    p.add_argument("--out", help="pool file to write (default: stdout)")

    p = sub.add_parser("diagnose-pool", help="held-out ECDF diagnostic of one or more pools")
    p.add_argument("--pool", required=True, action="append", help="pool file; repeat to compare")
    p.add_argument("--trajectories", required=True, help="held-out records; incorrect steps are used")
    p.add_argument("--grid", type=_float_list, default=list(DEFAULT_GRID))
    p.add_argument("--slack", type=float, default=0.0)
    _common(p, pool=False, traj=False, betting=False)

    p = sub.add_parser("run", help="per-step p-value and wealth trace of single trajectories")
    _common(p)
    p.add_argument("--task", action="append", help="task id to trace (default: all)")
    p.add_argument("--n-test", type=int, default=30, help="visible tests, for the stability rule")
    p.add_argument("--entropy-threshold", type=float)

    p = sub.add_parser("evaluate", help="cohort metrics for all methods")
    _common(p, alpha_multi=True)
    p.add_argument("--method", action="append", choices=METHODS)
    p.add_argument("--n-test", type=int, default=30)
    p.add_argument("--entropy-threshold", type=float)

    p = sub.add_parser("gain", help="calibrated-gain decompositions")
    _common(p)

    p = sub.add_parser("simulate", help="Monte Carlo checks of the theory bounds")
    p.add_argument("--mode", choices=("null", "naive", "feasible"), default="null")
    p.add_argument("--reps", type=int, default=10_000)
    p.add_argument("--horizon", "--t-max", dest="horizon", type=int, default=10)
    p.add_argument("--n-pool", type=int, default=200)
    p.add_argument("--pool-law", default="uniform")
    p.add_argument("--stream-law", default="empirical")
    p.add_argument("--eps", type=float, default=0.0, help="per-step drift (total variation)")
    p.add_argument("--c", type=float, default=0.05, help="per-step crossing probability (naive mode)")
    p.add_argument("--pi", type=float, default=0.9, help="per-step correct probability (feasible mode)")
    p.add_argument("--correct-score", type=float, default=1.0)
    p.add_argument("--incorrect-score", type=float)
    p.add_argument("--pool", help="pool file (required for feasible mode, optional for null)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--alpha", type=float, default=DEFAULT_ALPHA)
    p.add_argument("--eta", type=float, default=DEFAULT_ETA)
    p.add_argument("--trunc", type=float, default=DEFAULT_TRUNC)
    p.add_argument("--format", choices=("table", "machine"), default="table")
    p.add_argument("--out")

    p = sub.add_parser("bounds", help="closed-form bound calculators")
    p.add_argument("--kind", choices=("rout", "naive", "power", "drift"), required=True)
    p.add_argument("--q", type=float, help="failure rate among feasible releases (rout)")
    p.add_argument("--pi0", type=float, help="infeasible fraction (rout)")
    p.add_argument("--beta", type=float, help="feasible release probability (rout)")
    p.add_argument("--alpha", type=float, default=DEFAULT_ALPHA)
    p.add_argument("--c", type=_float_list, help="per-step crossing probabilities (naive)")
    p.add_argument("--horizon", "--t-max", dest="horizon", type=int, default=10)
    p.add_argument("--b", type=float, help="supplied correct-candidate gain (power)")
    p.add_argument("--a", type=float, help="required gain (power)")
    p.add_argument("--z-max", type=float, default=math.log(10), help="largest one-step gain (power)")
    p.add_argument("--trunc", type=float, default=DEFAULT_TRUNC)
    p.add_argument("--eps", type=float, default=0.0)
    p.add_argument("--format", choices=("table", "machine"), default="table")
    p.add_argument("--out")
    return parser


# ------------------------------------------------------------------ output

def _figure_path(out: str, suffix: str = "") -> Path:
    path = Path(out)
    return path.with_name(path.stem + suffix + ".png")


def _write(args, text: str) -> None:
    if args.out:
        try:
            Path(args.out).write_text(text, encoding="utf-8")
        except OSError as exc:
            raise IoFailure(f"cannot write {args.out}: {exc}") from exc
    else:
        sys.stdout.write(text)


def _emit(args, headers, rows, machine_doc, title: str = "") -> None:
    if args.format == "machine":
        _write(args, dumps_machine(machine_doc))
    else:
        _write(args, (title + "\n" if title else "") + render_table(headers, rows))


# ------------------------------------------------------------------ commands

def cmd_build_pool(args) -> int:
    candidates = []
    for lineno, obj in read_records(args.trajectories):
        if not isinstance(obj, dict) or "score" not in obj or "task_id" not in obj:
            raise MalformedRecord(f"line {lineno}: need task_id and score")
        if "adjudication" in obj:
            adj = obj["adjudication"]
        elif "correct" in obj:
            adj = int(bool(obj["correct"]))
        else:
            raise MalformedRecord(f"line {lineno}: need correct or adjudication")
        score = obj["score"]
        if isinstance(score, bool) or not isinstance(score, (int, float)) or not math.isfinite(score):
            raise MalformedRecord(f"line {lineno}: score must be a finite number")
        if adj not in (0, 1):
            raise MalformedRecord(f"line {lineno}: adjudication must be 0 or 1")
        candidates.append(ScoredCandidate(str(obj["task_id"]), float(score), int(adj)))
    try:
        rule = UpperTailRule(args.q)
    except ValueError as exc:
        raise BadConfig(str(exc)) from exc
    pool = collect_hard_negatives(candidates, rule, {"source": str(args.trajectories)})
    _write(args, dumps_machine(pool_to_dict(pool)))
    print(f"pool: n={pool.n} from {pool.meta['n_incorrect']} incorrect candidates, "
          f"cutoff={pool.meta['cutoff']:.6g}", file=sys.stderr)
    return 0


def cmd_diagnose_pool(args) -> int:
    trajectories = load_trajectories(args.trajectories)
    steps = [st for t in trajectories for st in t.steps]
    if any(st.correct is not None for st in steps):
        steps = [st for st in steps if st.correct is False]
    held = [st.score for st in steps]
    diags = {}
    for path in args.pool:
        diags[Path(path).stem] = (load_pool(path), None)
    rows, doc = [], []
    for name, (pool, _) in diags.items():
        d = pool_diagnostic(pool, held, args.grid, args.slack)
        diags[name] = (pool, d)
        rows.append([name, pool.n, *d.ecdf, d.mean_p, d.passed])
        doc.append({"pool": name, "n": pool.n, "grid": list(d.grid), "ecdf": list(d.ecdf),
                    "mean_p": d.mean_p, "pass": d.passed, "slack": d.slack, "n_heldout": len(held)})
    headers = ["Pool", "n", *[f"P(p<={u:g})" for u in sorted(args.grid)], "mean(p)", "pass"]
    _emit(args, headers, rows, {"diagnostics": doc}, f"held-out scores: {len(held)}")
    if args.out:
        from .plotting import plot_pool_diagnostic

        plot_pool_diagnostic({k: d for k, (_, d) in diags.items()}, _figure_path(args.out))
    return 0


def cmd_run(args) -> int:
    pool = load_pool(args.pool)
    cal = calibrator_new(args.eta, args.trunc)
    trajectories = load_trajectories(args.trajectories)
    if args.task:
        wanted = set(args.task)
        trajectories = [t for t in trajectories if t.task_id in wanted]
        missing = wanted - {t.task_id for t in trajectories}
        if missing:
            raise BadConfig(f"task(s) not found: {sorted(missing)}")
    headers = ["Task", "Step", "Score", "Correct", "p_t", "Wealth E_t", "Outcome"]
    rows, doc, wealth = [], [], {}
    for traj in trajectories:
        out = run_wrapper(traj, pool, cal, args.alpha, args.t_max, continue_after_release=True)
        wealth[traj.task_id] = out
        events: dict[int, list[str]] = {}
        methods = ["ours", "first_p", "stability"]
        if args.entropy_threshold is not None and all(e is not None for e in traj.entropies):
            methods.append("entropy")
        decisions = {}
        for m in methods:
            o = out if m == "ours" else run_method(m, traj, pool, cal, args.alpha, args.t_max,
                                                   args.n_test, args.entropy_threshold)
            decisions[m] = o.release_step
            if o.released:
                events.setdefault(o.release_step, []).append(f"{m}: release")
        last = len(out.p_trace)
        for m, step in decisions.items():
            if step is None:
                events.setdefault(last, []).append(f"{m}: no release")
        for t in range(1, last + 1):
            st = traj.steps[t - 1]
            rows.append([traj.task_id, t, st.score, st.correct, out.p_trace[t - 1],
                         out.wealth_trace[t - 1], "; ".join(events.get(t, [])) or None])
        doc.append({"task_id": traj.task_id, "decision": out.decision, "release_step": out.release_step,
                    "p": list(out.p_trace), "wealth": list(out.wealth_trace),
                    "log_wealth": list(out.log_wealth_trace), "baselines": decisions})
    _emit(args, headers, rows, {"alpha": args.alpha, "eta": args.eta, "trunc": args.trunc,
                                "t_max": args.t_max, "trajectories": doc})
    if args.out:
        from .plotting import plot_wealth

        plot_wealth(wealth, args.alpha, _figure_path(args.out))
    return 0


def cmd_evaluate(args) -> int:
    pool = load_pool(args.pool)
    cal = calibrator_new(args.eta, args.trunc)
    trajectories = load_trajectories(args.trajectories)
    alphas = [a for group in (args.alpha or [[0.2, 0.1, 0.05]]) for a in group]
    methods = args.method or [m for m in METHODS if m != "entropy" or args.entropy_threshold is not None]
    report = evaluate_cohort(trajectories, methods, pool, cal, alphas, args.t_max, args.n_test,
                             args.entropy_threshold)
    _write(args, emit_report(report, args.format))
    if args.out:
        from .plotting import plot_cohort

        plot_cohort(report, _figure_path(args.out))
    return 0


def cmd_gain(args) -> int:
    pool = load_pool(args.pool)
    cal = calibrator_new(args.eta, args.trunc)
    trajectories = [t for t in load_trajectories(args.trajectories) if t.labeled]
    if not trajectories:
        raise BadConfig("gain diagnostics need trajectories with correctness labels")
    traces = [gain_decomposition(t, pool, cal, args.alpha, args.t_max) for t in trajectories]
    bad = [tr.task_id for tr in traces if not tr.release_agrees]
    if bad:
        raise InvariantViolation(f"wrapper decision disagrees with the gain crossing test for {bad}")
    rows, per_task = [], []
    for traj, tr in zip(trajectories, traces):
        rel = None
        if tr.release_step is not None:
            ok = traj.steps[tr.release_step - 1].correct
            rel = f"{tr.release_step} ({'correct' if ok else 'error'})"
        rows.append([tr.task_id, rel, tr.g_total, tr.g_plus_total, tr.a[-1], tr.margin, tr.margin_plus])
        per_task.append({"task_id": tr.task_id, "release_step": tr.release_step, "z": list(tr.z),
                         "g": list(tr.g), "g_plus": list(tr.g_plus), "a": list(tr.a),
                         "margin": tr.margin, "margin_plus": tr.margin_plus, "z_max": tr.z_max})
    feasible = [t for t in trajectories if t.feasible]
    summary = stepwise_feasible_summary(feasible, pool, cal, args.alpha, args.t_max) if feasible else None
    doc = {"alpha": args.alpha, "eta": args.eta, "trunc": args.trunc, "trajectories": per_task}
    if args.format == "machine":
        if summary is not None:
            doc["feasible_summary"] = {
                "pi_hat": list(summary.pi_hat), "zbar_hat": list(summary.zbar_hat),
                "yz_hat": list(summary.yz_hat), "cum_yz": list(summary.cum_yz),
                "a": list(summary.a), "n_tasks": list(summary.n_tasks)}
        _write(args, dumps_machine(doc))
    else:
        text = render_table(["Task", "Release", "G_T", "G_T+", "A_T", "M", "M+"], rows)
        if summary is not None:
            srows = [[t + 1, summary.pi_hat[t], summary.zbar_hat[t], summary.yz_hat[t],
                      summary.cum_yz[t], summary.a[t]] for t in range(summary.steps)]
            text += f"\nfeasible tasks: {len(feasible)}\n"
            text += render_table(["t", "pi_hat", "Zbar_hat", "E(YZ)", "cum E(YZ)", "A_t"], srows)
        _write(args, text)
    if args.out:
        from .plotting import plot_feasible_summary, plot_gain_traces

        plot_gain_traces(traces, _figure_path(args.out))
        if summary is not None:
            plot_feasible_summary(summary, _figure_path(args.out, "_feasible"))
    return 0


def cmd_simulate(args) -> int:
    cal = calibrator_new(args.eta, args.trunc)
    pool = load_pool(args.pool) if args.pool else None
    cfg = NullSimConfig(args.n_pool, args.pool_law, args.stream_law, args.horizon, args.reps,
                        args.seed, args.eps, args.alpha)
    if args.mode == "null":
        rep = simulate_null(cfg, cal, pool, workers=args.workers)
    elif args.mode == "naive":
        rep = simulate_naive(cfg, args.c, workers=args.workers)
    else:
        if pool is None:
            raise BadConfig("feasible mode needs --pool")
        incorrect = args.incorrect_score if args.incorrect_score is not None else pool.scores[-1] - 1.0
        rep = simulate_feasible(pool, cal, args.alpha, args.horizon, args.reps, args.seed, args.pi,
                                args.correct_score, incorrect, workers=args.workers)
    doc = {"name": rep.name, "empirical": rep.empirical, "stderr": rep.stderr, "bound": rep.bound,
           "direction": rep.direction, "satisfied": rep.satisfied, "reps": rep.reps, "extra": rep.extra}
    _emit(args, ["Check", "Empirical", "Std. err.", "Bound", "Direction", "Satisfied", "Reps"],
          [[rep.name, rep.empirical, rep.stderr, rep.bound, rep.direction, rep.satisfied, rep.reps]], doc)
    return 0


def _need(args, *names):
    missing = [n for n in names if getattr(args, n.replace("-", "_")) is None]
    if missing:
        raise UsageError(f"--kind {args.kind} needs " + ", ".join(f"--{n}" for n in missing))


def cmd_bounds(args) -> int:
    if args.kind == "rout":
        _need(args, "q", "pi0", "beta")
        value = rout_upper_bound(args.q, args.pi0, args.alpha, args.beta)
    elif args.kind == "naive":
        _need(args, "c")
        cs = args.c * args.horizon if len(args.c) == 1 else args.c
        value = naive_stopping_lower_bound(cs, args.horizon)
    elif args.kind == "power":
        _need(args, "b", "a")
        value = power_lower_bound(args.b, args.a, args.z_max, args.horizon)
    else:
        value = drift_upper_bound(args.alpha, args.trunc, args.eps, args.horizon)
    _emit(args, ["Bound", "Value"], [[args.kind, value]], {"kind": args.kind, "value": value})
    return 0


COMMANDS = {
    "build-pool": cmd_build_pool,
    "diagnose-pool": cmd_diagnose_pool,
    "run": cmd_run,
    "evaluate": cmd_evaluate,
    "gain": cmd_gain,
    "simulate": cmd_simulate,
    "bounds": cmd_bounds,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"anytime-release: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except InvariantViolation as exc:
        print(f"anytime-release: invariant violation: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except InputError as exc:
        print(f"anytime-release: error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
