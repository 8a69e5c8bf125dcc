"""Report emission: delimited data files plus rendered figures.

Every writer produces a CSV or JSON artifact in the format consumed by
downstream analysis, and a PNG figure of the same data next to it. Output
is byte-reproducible: floats use the shortest round-trip representation,
rows follow deterministic orders, and figures carry fixed metadata.
"""

from __future__ import annotations

import csv
import json
from collections import Counter
from pathlib import Path
from typing import Iterable, Mapping

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .model import Coordinate
from .netgen import BoundaryResult
from .optimize import AllocationResult
from .simulate import Trajectory

_FIG_DPI = 150
_FIG_METADATA = {"Software": "pdopt"}
_SIGMA_ORDER = {"L": 0, "S": 1, "LS": 2, "SL": 3}


def _check_target(path: Path, force: bool) -> Path:
    if path.exists() and not force:
        raise FileExistsError(f"{path} exists; pass force to overwrite")
    return path


def _save_figure(fig, path: Path) -> None:
    fig.savefig(path, dpi=_FIG_DPI, metadata=_FIG_METADATA)
    plt.close(fig)


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _write_csv(path: Path, header: list[str], rows: Iterable[tuple]) -> None:
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def _coord_key(coord: Coordinate):
    sigma, i, j = coord
    return (_SIGMA_ORDER[sigma], i, j)


def write_trajectory(traj: Trajectory, out_dir: Path, force: bool = False) -> list[Path]:
    """trajectory.csv (k, L_1..L_m, S_1..S_m, H_1..H_m, total_unfinished)
    plus a log-scale decay figure."""
    m = traj.m
    csv_path = _check_target(out_dir / "trajectory.csv", force)
    png_path = _check_target(out_dir / "trajectory.png", force)
    header = (
        ["k"]
        + [f"L_{i}" for i in range(1, m + 1)]
        + [f"S_{i}" for i in range(1, m + 1)]
        + [f"H_{i}" for i in range(1, m + 1)]
        + ["total_unfinished"]
    )
    totals = traj.total_unfinished
    rows = (
        (k, *(float(v) for v in traj.states[k]), float(totals[k]))
        for k in range(len(traj))
    )
    _write_csv(csv_path, header, rows)

    fig, ax = plt.subplots(figsize=(7, 4.5))
    steps = np.arange(len(traj))
    positive = totals > 0
    ax.semilogy(steps[positive], totals[positive], color="tab:blue", lw=1.5)
    for t in traj.feedback_times:
        ax.axvline(t, color="tab:gray", lw=0.4, alpha=0.4)
    ax.set_xlabel("step k")
    ax.set_ylabel("total unfinished work")
    ax.set_title("Unfinished work per step (vertical lines: feedback)")
    fig.tight_layout()
    _save_figure(fig, png_path)
    return [csv_path, png_path]


def write_histogram(
    completions: Counter,
    out_dir: Path,
    force: bool = False,
    gamma: float | None = None,
    horizon: int | None = None,
) -> list[Path]:
    """histogram.csv (completion_time, count) over completed runs, a
    summary JSON with the never-completed tally, and a bar figure."""
    csv_path = _check_target(out_dir / "histogram.csv", force)
    json_path = _check_target(out_dir / "histogram_summary.json", force)
    png_path = _check_target(out_dir / "histogram.png", force)
    completed = {k: v for k, v in completions.items() if k is not None}
    rows = sorted(completed.items())
    _write_csv(csv_path, ["completion_time", "count"], rows)
    summary = {
        "runs": int(sum(completions.values())),
        "completed": int(sum(completed.values())),
        "not_completed": int(completions.get(None, 0)),
    }
    if gamma is not None:
        summary["gamma"] = float(gamma)
    if horizon is not None:
        summary["horizon"] = int(horizon)
    json_path.write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n", encoding="utf-8")

    fig, ax = plt.subplots(figsize=(7, 4.5))
    if rows:
        ax.bar([k for k, _ in rows], [v for _, v in rows], width=1.0, color="tab:blue")
    ax.set_xlabel("completion time (steps)")
    ax.set_ylabel("runs")
    ax.set_title("Completion times")
    fig.tight_layout()
    _save_figure(fig, png_path)
    return [csv_path, json_path, png_path]


def allocation_payload(result: AllocationResult, omega: Mapping[Coordinate, float]) -> dict:
    """JSON-ready view of an allocation: one record per tunable
    dependency plus the headline numbers."""
    records = []
    for coord in sorted(result.psi, key=_coord_key):
        sigma, i, j = coord
        records.append(
            {
                "matrix": sigma,
                "i": i,
                "j": j,
                "omega": float(omega[coord]),
                "psi": float(result.psi[coord]),
                "spend": float(result.spend[coord]),
            }
        )
    return {
        "records": records,
        "rho_before": float(result.rho_before),
        "rho_after": float(result.rho_after),
        "total_cost": float(result.total_cost),
        "converged": bool(result.converged),
    }


def write_allocation(
    result: AllocationResult,
    omega: Mapping[Coordinate, float],
    out_dir: Path,
    force: bool = False,
) -> list[Path]:
    """allocation.json plus a bar chart of the largest spends."""
    json_path = _check_target(out_dir / "allocation.json", force)
    png_path = _check_target(out_dir / "allocation.png", force)
    payload = allocation_payload(result, omega)
    json_path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")

    spends = sorted(
        ((rec["spend"], f"{rec['matrix']}[{rec['i']},{rec['j']}]") for rec in payload["records"]),
        reverse=True,
    )[:20]
    fig, ax = plt.subplots(figsize=(8, 4.5))
    if spends and spends[0][0] > 0:
        labels = [name for _, name in spends]
        ax.bar(range(len(spends)), [s for s, _ in spends], color="tab:orange")
        ax.set_xticks(range(len(spends)))
        ax.set_xticklabels(labels, rotation=60, ha="right", fontsize=7)
    ax.set_ylabel("investment")
    ax.set_title(
        f"Largest investments (rho {result.rho_before:.4f} -> {result.rho_after:.4f})"
    )
    fig.tight_layout()
    _save_figure(fig, png_path)
    return [json_path, png_path]


def write_sweep(records: list[dict], out_dir: Path, force: bool = False) -> list[Path]:
    """sweep.csv (budget, rho_optimized, rho_baseline, cost_optimized)
    plus the budget-vs-feasibility curves."""
    csv_path = _check_target(out_dir / "sweep.csv", force)
    png_path = _check_target(out_dir / "sweep.png", force)
    rows = [
        (
            rec["budget"],
            rec["rho_optimized"],
            "" if rec.get("rho_baseline") is None else rec["rho_baseline"],
            rec["cost_optimized"],
        )
        for rec in records
    ]
    _write_csv(csv_path, ["budget", "rho_optimized", "rho_baseline", "cost_optimized"], rows)

    fig, ax = plt.subplots(figsize=(7, 4.5))
    budgets = [rec["budget"] for rec in records]
    ax.plot(budgets, [rec["rho_optimized"] for rec in records], "o-", label="optimized", ms=3)
    if any(rec.get("rho_baseline") is not None for rec in records):
        ax.plot(
            budgets,
            [rec["rho_baseline"] for rec in records],
            "s--",
            label="baseline",
            ms=3,
        )
    ax.axhline(1.0, color="tab:red", lw=0.8, alpha=0.6)
    ax.set_xlabel("budget")
    ax.set_ylabel("feasibility index")
    ax.legend()
    ax.set_title("Feasibility index vs budget")
    fig.tight_layout()
    _save_figure(fig, png_path)
    return [csv_path, png_path]


def write_centrality_investment(
    rows: list[tuple],
    out_dir: Path,
    force: bool = False,
    title: str = "Investment vs centrality",
) -> list[Path]:
    """centrality_investment.csv (task_id, team, betweenness, pagerank,
    hub, investment) plus scatter panels per measure."""
    csv_path = _check_target(out_dir / "centrality_investment.csv", force)
    png_path = _check_target(out_dir / "centrality_investment.png", force)
    _write_csv(
        csv_path,
        ["task_id", "team", "betweenness", "pagerank", "hub", "investment"],
        rows,
    )

    fig, axes = plt.subplots(1, 3, figsize=(10.5, 3.6), sharey=True)
    invest = [row[5] for row in rows]
    for ax, idx, name in zip(axes, (2, 3, 4), ("betweenness", "pagerank", "hub")):
        ax.scatter([row[idx] for row in rows], invest, s=12, color="tab:blue", alpha=0.7)
        ax.set_xlabel(name)
    axes[0].set_ylabel("investment")
    fig.suptitle(title)
    fig.tight_layout()
    _save_figure(fig, png_path)
    return [csv_path, png_path]


def write_boundary(result: BoundaryResult, out_dir: Path, force: bool = False) -> list[Path]:
    title = f"{result.model.upper()} network, m={result.m}, seed={result.seed}"
    return write_centrality_investment(list(result.rows()), out_dir, force, title=title)


def emit_reports(results: Mapping[str, object], out_dir: str | Path, force: bool = False) -> list[Path]:
    """Write every recognized artifact in ``results`` under ``out_dir``.

    Known keys: "trajectory" (Trajectory), "completion" (Counter, with
    optional "gamma"/"horizon" context), "allocation" (AllocationResult,
    requires "omega" mapping), "sweep" (record list), "boundary"
    (BoundaryResult), "centrality_rows" (pre-built table rows). Existing
    files are only replaced when ``force`` is set.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    if "trajectory" in results:
        written += write_trajectory(results["trajectory"], out_dir, force)
    if "completion" in results:
        written += write_histogram(
            results["completion"],
            out_dir,
            force,
            gamma=results.get("gamma"),
            horizon=results.get("horizon"),
        )
    if "allocation" in results:
        written += write_allocation(results["allocation"], results["omega"], out_dir, force)
    if "sweep" in results:
        written += write_sweep(results["sweep"], out_dir, force)
    if "boundary" in results:
        written += write_boundary(results["boundary"], out_dir, force)
    if "centrality_rows" in results:
        written += write_centrality_investment(results["centrality_rows"], out_dir, force)
    return written
