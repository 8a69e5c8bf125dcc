"""Command-line surface.

Subcommands cover the whole workflow: feasibility checks, stochastic
simulation, the two allocation programs, the proportional baseline,
budget sweeps, synthetic network experiments, and centrality tables.
Every randomized command takes --seed and prints the seed it used, so any
emitted artifact can be regenerated exactly. Output lands in --out (or
$PDOPT_OUT, or ./pdopt-out), and existing files are only replaced with
--force.

Exit codes: 0 success, 2 infeasible performance target, 3 parse or
invariant error, 4 calibration failure.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import numpy as np

from .errors import Infeasible, InvariantViolation, MalformedFile, Uncalibratable
from .model import ProjectState, project_matrix
from .netgen import (
    GRAPH_MODELS,
    ExtendedDsm,
    aggregate_investment_by_task,
    centralities,
    run_boundary_experiment,
)
from .optimize import (
    baseline_allocation,
    solve_budget_constrained,
    solve_performance_constrained,
    sweep_budget,
)
from .project_io import ProjectFile
from .reports import emit_reports
from .simulate import completion_time, monte_carlo_completion, run_trajectory
from .spectral import perron_pair, spectral_radius
from .errors import DegenerateSpectrum

_DEFAULT_SEED = 0


def _out_dir(args) -> Path:
    if args.out is not None:
        return Path(args.out)
    return Path(os.environ.get("PDOPT_OUT", "pdopt-out"))


def _add_output_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--out", help="output directory (default: $PDOPT_OUT or ./pdopt-out)")
    parser.add_argument("--force", action="store_true", help="overwrite existing report files")


def _parse_focus(text: str) -> set[int]:
    try:
        return {int(part) for part in text.split(",") if part.strip() != ""}
    except ValueError:
        raise InvariantViolation("focus", "must be a comma-separated list of task numbers") from None


def _print_written(paths) -> None:
    for path in paths:
        print(f"wrote {path}")


def _cmd_feasibility(args) -> int:
    pf = ProjectFile.load(args.project)
    mat = project_matrix(pf.dsms, pf.dist)
    rho = spectral_radius(mat)
    print(f"feasibility index rho(M) = {rho!r}")
    print(f"feasible: {'yes' if rho < 1 else 'no'}")
    try:
        pair = perron_pair(mat)
        with np.printoptions(precision=6, suppress=True):
            print(f"right Perron vector: {pair.v}")
            print(f"left Perron vector:  {pair.u}")
    except DegenerateSpectrum as exc:
        print(f"Perron vectors unavailable: {exc}")
    return 0


def _cmd_simulate(args) -> int:
    pf = ProjectFile.load(args.project)
    gamma = args.gamma if args.gamma is not None else (
        pf.defaults.gamma if pf.defaults.gamma is not None else 1.0
    )
    x0 = pf.defaults.initial_state or ProjectState.uniform_start(pf.m)
    print(f"seed: {args.seed}")
    traj = run_trajectory(pf.dsms, pf.dist, x0, args.horizon, args.seed)
    results = {"trajectory": traj}
    done = completion_time(traj, gamma)
    print(
        f"single run: completion at step {done}" if done is not None
        else "single run: not completed within horizon"
    )
    if args.runs > 1:
        counts = monte_carlo_completion(
            pf.dsms, pf.dist, x0, gamma, args.horizon, args.runs, args.seed
        )
        completed = sum(v for k, v in counts.items() if k is not None)
        print(f"monte carlo: {completed}/{args.runs} runs completed (gamma={gamma!r})")
        results.update({"completion": counts, "gamma": gamma, "horizon": args.horizon})
    _print_written(emit_reports(results, _out_dir(args), args.force))
    return 0


def _cmd_optimize_budget(args) -> int:
    pf = ProjectFile.load(args.project)
    result = solve_budget_constrained(pf.dsms, pf.dist, pf.cost, args.budget)
    print(f"rho before: {result.rho_before!r}")
    print(f"rho after:  {result.rho_after!r}")
    print(f"total cost: {result.total_cost!r} (budget {args.budget!r})")
    print(f"converged:  {result.converged}")
    _print_written(
        emit_reports(
            {"allocation": result, "omega": pf.cost.omega}, _out_dir(args), args.force
        )
    )
    return 0


def _cmd_optimize_performance(args) -> int:
    pf = ProjectFile.load(args.project)
    result = solve_performance_constrained(pf.dsms, pf.dist, pf.cost, args.target)
    print(f"rho before: {result.rho_before!r}")
    print(f"rho after:  {result.rho_after!r} (target {args.target!r})")
    print(f"total cost: {result.total_cost!r}")
    print(f"converged:  {result.converged}")
    _print_written(
        emit_reports(
            {"allocation": result, "omega": pf.cost.omega}, _out_dir(args), args.force
        )
    )
    return 0


def _cmd_baseline(args) -> int:
    pf = ProjectFile.load(args.project)
    focus = _parse_focus(args.focus)
    result = baseline_allocation(pf.dsms, pf.dist, pf.cost, args.budget, focus)
    print(f"rho before: {result.rho_before!r}")
    print(f"rho after:  {result.rho_after!r}")
    print(f"total cost: {result.total_cost!r} (budget {args.budget!r})")
    print(f"unspent:    {result.diagnostics['unspent']!r}")
    _print_written(
        emit_reports(
            {"allocation": result, "omega": pf.cost.omega}, _out_dir(args), args.force
        )
    )
    return 0


def _cmd_sweep_budget(args) -> int:
    pf = ProjectFile.load(args.project)
    if args.steps < 2:
        raise InvariantViolation("steps", "need at least 2 budget levels")
    budgets = np.linspace(args.start, args.to, args.steps)
    focus = _parse_focus(args.focus) if args.focus is not None else None
    records = sweep_budget(pf.dsms, pf.dist, pf.cost, budgets, focus)
    last = records[-1]
    print(f"budgets: {args.start!r} .. {args.to!r} in {args.steps} steps")
    print(f"rho at max budget: optimized {last['rho_optimized']!r}" + (
        f", baseline {last['rho_baseline']!r}" if last["rho_baseline"] is not None else ""
    ))
    _print_written(emit_reports({"sweep": records}, _out_dir(args), args.force))
    return 0


def _cmd_synth(args) -> int:
    print(f"seed: {args.seed}")
    result = run_boundary_experiment(
        args.model,
        args.m,
        seed=args.seed,
        epsilon=args.epsilon,
        budget_fraction=args.budget_frac,
        cost_exponent_p=args.cost_exponent,
        diag_value=args.diag,
        edge_prob=args.edge_prob,
        ring_degree=args.ring_degree,
        rewire_prob=args.rewire_prob,
        attach=args.attach,
    )
    alloc = result.allocation
    print(f"coupling c: {result.coupling!r}")
    print(f"budget: {result.budget!r}")
    print(f"rho before: {alloc.rho_before!r}, after: {alloc.rho_after!r}")
    total = result.investment.sum()
    if total > 0:
        decile = max(1, (2 * args.m) // 10)
        top = np.sort(result.investment)[-decile:].sum()
        print(f"top-decile tasks hold {100 * top / total:.1f}% of investment")
    _print_written(emit_reports({"boundary": result}, _out_dir(args), args.force))
    return 0


def _cmd_centrality(args) -> int:
    pf = ProjectFile.load(args.project)
    ext = ExtendedDsm.from_dsms(pf.dsms)
    report = centralities(ext)
    if args.budget > 0:
        allocation = solve_budget_constrained(pf.dsms, pf.dist, pf.cost, args.budget)
        investment = aggregate_investment_by_task(allocation, pf.m)
        print(f"rho after optimization: {allocation.rho_after!r}")
    else:
        investment = np.zeros(2 * pf.m)
    rows = [
        (
            t + 1,
            "L" if t < pf.m else "S",
            float(report.betweenness[t]),
            float(report.pagerank[t]),
            float(report.hub[t]),
            float(investment[t]),
        )
        for t in range(2 * pf.m)
    ]
    _print_written(emit_reports({"centrality_rows": rows}, _out_dir(args), args.force))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pdopt",
        description="Feasibility analysis and dependency-investment optimization "
        "for asynchronous two-team development projects.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("feasibility", help="spectral feasibility of a project")
    p.add_argument("project")
    p.set_defaults(func=_cmd_feasibility)

    p = sub.add_parser("simulate", help="simulate the switched work dynamics")
    p.add_argument("project")
    p.add_argument("--runs", type=int, default=1)
    p.add_argument("--horizon", type=int, default=500)
    p.add_argument("--gamma", type=float, default=None, help="completion threshold")
    p.add_argument("--seed", type=int, default=_DEFAULT_SEED)
    _add_output_options(p)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("optimize", help="convex dependency optimization")
    opt_sub = p.add_subparsers(dest="program", required=True)
    pb = opt_sub.add_parser("budget", help="minimize rho under a budget")
    pb.add_argument("project")
    pb.add_argument("--budget", type=float, required=True)
    _add_output_options(pb)
    pb.set_defaults(func=_cmd_optimize_budget)
    pp = opt_sub.add_parser("performance", help="cheapest allocation reaching a target rho")
    pp.add_argument("project")
    pp.add_argument("--target", type=float, required=True)
    _add_output_options(pp)
    pp.set_defaults(func=_cmd_optimize_performance)

    p = sub.add_parser("baseline", help="proportional baseline allocation")
    p.add_argument("project")
    p.add_argument("--budget", type=float, required=True)
    p.add_argument("--focus", required=True, help="comma-separated focus tasks, e.g. 2,3,6")
    _add_output_options(p)
    p.set_defaults(func=_cmd_baseline)

    p = sub.add_parser("sweep-budget", help="optimized vs baseline rho across budgets")
    p.add_argument("project")
    p.add_argument("--from", dest="start", type=float, default=0.0)
    p.add_argument("--to", type=float, default=1.5)
    p.add_argument("--steps", type=int, default=30)
    p.add_argument("--focus", default=None, help="focus tasks for the baseline column")
    _add_output_options(p)
    p.set_defaults(func=_cmd_sweep_budget)

    p = sub.add_parser("synth", help="synthetic network experiment at the feasibility boundary")
    p.add_argument("--model", choices=GRAPH_MODELS, required=True)
    p.add_argument("--m", type=int, default=10)
    p.add_argument("--seed", type=int, default=_DEFAULT_SEED)
    p.add_argument("--epsilon", type=float, default=0.5)
    p.add_argument("--budget-frac", type=float, default=0.1)
    p.add_argument("--cost-exponent", type=float, default=1.0)
    p.add_argument("--diag", type=float, default=1.0, help="completion coefficient")
    p.add_argument("--edge-prob", type=float, default=None, help="ER edge probability")
    p.add_argument("--ring-degree", type=int, default=4, help="WS ring degree (even)")
    p.add_argument("--rewire-prob", type=float, default=0.1, help="WS rewiring probability")
    p.add_argument("--attach", type=int, default=2, help="BA attachment count")
    _add_output_options(p)
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("centrality", help="centrality table of the dependency network")
    p.add_argument("project")
    p.add_argument("--budget", type=float, default=0.0, help="also invest and tabulate spends")
    _add_output_options(p)
    p.set_defaults(func=_cmd_centrality)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except Infeasible as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return 2
    except (MalformedFile, InvariantViolation) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except Uncalibratable as exc:
        print(f"calibration failed: {exc}", file=sys.stderr)
        return 4
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
