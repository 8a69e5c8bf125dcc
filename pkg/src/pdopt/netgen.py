"""Synthetic PD-network experiments: random graph generation, calibration
of an extended DSM to the feasibility boundary ρ(M) = 1, centrality
measures of the dependency network, and centrality-vs-investment tables.

A network of 2m nodes hosts the m local tasks (nodes 1..m) and the m
system tasks (nodes m+1..2m). The extended DSM stacks the four coupling
matrices as [[Ω_L, Ω_LS], [Ω_SL, Ω_S]]; its entries double as the
adjacency weights of the directed dependency network, with an edge j→i
for every nonzero Ω_ij (self-loops from completion coefficients are not
dependencies and are left out of the network).
"""

from __future__ import annotations

from dataclasses import dataclass

import networkx as nx
import numpy as np

from .errors import InvariantViolation, Uncalibratable
from .model import (
    DsmSet,
    FeedbackDistribution,
    FloatArray,
    assemble_transitions,
    build_wtms,
    generalized_wtm,
)
from .optimize import AllocationResult, CostModel, solve_budget_constrained
from .spectral import _power_iteration, spectral_radius

GRAPH_MODELS = ("er", "ws", "ba")

_CALIBRATION_TOL = 1e-8
_CENTRALITY_TOL = 1e-12


def default_interval_distribution() -> FeedbackDistribution:
    """Feedback-interval pmf used when an experiment does not fix one:
    mass 1/2 on 6 steps, 1/8 on each of 4, 5, 7, 8."""
    return FeedbackDistribution({4: 0.125, 5: 0.125, 6: 0.5, 7: 0.125, 8: 0.125})


def generate_graph(
    model: str,
    n: int,
    seed: int = 0,
    *,
    edge_prob: float | None = None,
    ring_degree: int = 4,
    rewire_prob: float = 0.1,
    attach: int = 2,
) -> FloatArray:
    """Adjacency matrix of a random undirected simple graph.

    Models: "er" (each edge independently with probability ``edge_prob``,
    defaulting to mean degree 4), "ws" (ring lattice of even degree
    ``ring_degree`` with rewiring probability ``rewire_prob``), "ba"
    (preferential attachment adding ``attach`` edges per node, seeded from
    a complete graph on attach+1 nodes). Deterministic per seed.
    """
    if n < 2:
        raise InvariantViolation("n", "need at least 2 nodes")
    if model == "er":
        if edge_prob is None:
            edge_prob = min(1.0, 4.0 / (n - 1))
        if not (0 <= edge_prob <= 1):
            raise InvariantViolation("edge_prob", "must lie in [0, 1]")
        graph = nx.gnp_random_graph(n, edge_prob, seed=seed)
    elif model == "ws":
        if ring_degree % 2 != 0 or not (2 <= ring_degree < n):
            raise InvariantViolation("ring_degree", "must be even and in [2, n)")
        if not (0 <= rewire_prob <= 1):
            raise InvariantViolation("rewire_prob", "must lie in [0, 1]")
        graph = nx.watts_strogatz_graph(n, ring_degree, rewire_prob, seed=seed)
    elif model == "ba":
        if not (1 <= attach < n):
            raise InvariantViolation("attach", "must lie in [1, n)")
        graph = nx.barabasi_albert_graph(
            n, attach, seed=seed, initial_graph=nx.complete_graph(attach + 1)
        )
    else:
        raise InvariantViolation("model", f"unknown graph model {model!r}")
    adj = nx.to_numpy_array(graph, nodelist=range(n), dtype=np.float64)
    np.fill_diagonal(adj, 0.0)
    adj.setflags(write=False)
    return adj


@dataclass(frozen=True)
class ExtendedDsm:
    """2m-by-2m dependency matrix [[Ω_L, Ω_LS], [Ω_SL, Ω_S]]."""

    omega: FloatArray

    def __post_init__(self):
        omega = np.array(self.omega, dtype=np.float64)
        if omega.ndim != 2 or omega.shape[0] != omega.shape[1] or omega.shape[0] % 2 != 0:
            raise InvariantViolation("omega", "must be square with even dimension")
        if not np.all(np.isfinite(omega)) or np.any(omega < 0):
            raise InvariantViolation("omega", "entries must be finite and nonnegative")
        omega.setflags(write=False)
        object.__setattr__(self, "omega", omega)

    @property
    def m(self) -> int:
        return self.omega.shape[0] // 2

    @classmethod
    def from_dsms(cls, dsms: DsmSet) -> "ExtendedDsm":
        top = np.hstack([dsms.omega_l, dsms.omega_ls])
        bottom = np.hstack([dsms.omega_sl, dsms.omega_s])
        return cls(np.vstack([top, bottom]))

    def to_dsms(self) -> DsmSet:
        m = self.m
        return DsmSet(
            self.omega[:m, :m],
            self.omega[m:, m:],
            self.omega[:m, m:],
            self.omega[m:, :m],
        )


def _rho_of_extended(ext_omega: FloatArray, dist: FeedbackDistribution, warm=None):
    dsms = ExtendedDsm(ext_omega).to_dsms()
    mat = generalized_wtm(assemble_transitions(build_wtms(dsms)), dist)
    start = warm if warm is not None else np.ones(mat.shape[0])
    out = _power_iteration(mat, start, 1e-13, 5000)
    if out is not None:
        return out[0], out[1]
    return spectral_radius(mat), None


def calibrate_extended_dsm(
    adj: FloatArray,
    dist: FeedbackDistribution,
    diag_value: float = 1.0,
) -> tuple[ExtendedDsm, float]:
    """Scale a network's couplings so the project sits on the feasibility
    boundary.

    Off-diagonal dependencies are c·adj with the completion coefficients
    pinned at ``diag_value``; c is bisected until |ρ(M) − 1| ≤ 1e−8,
    which is sound because ρ grows monotonically in c. Raises
    :class:`Uncalibratable` when no scaling reaches ρ = 1 (e.g. an empty
    graph).
    """
    adj = np.asarray(adj, dtype=np.float64)
    if adj.ndim != 2 or adj.shape[0] != adj.shape[1] or adj.shape[0] % 2 != 0:
        raise InvariantViolation("adj", "must be square with even dimension")
    if not np.array_equal(adj, adj.T):
        raise InvariantViolation("adj", "must be symmetric")
    if np.any(np.diag(adj) != 0):
        raise InvariantViolation("adj", "diagonal must be zero")
    if np.any(adj < 0) or not np.all(np.isfinite(adj)):
        raise InvariantViolation("adj", "entries must be finite and nonnegative")
    if not (0 < diag_value <= 1):
        raise InvariantViolation("diag_value", "must lie in (0, 1]")

    def omega_at(c: float) -> FloatArray:
        ext = c * adj
        np.fill_diagonal(ext, diag_value)
        return ext

    warm = None

    def rho_at(c: float) -> float:
        nonlocal warm
        rho, vec = _rho_of_extended(omega_at(c), dist, warm)
        if vec is not None:
            warm = vec
        return rho

    c_lo = 1e-8
    c_hi = 1e-8
    rho_hi = rho_at(c_hi)
    doublings = 0
    while rho_hi <= 1.0:
        c_lo = c_hi
        c_hi *= 2.0
        doublings += 1
        if doublings > 64:
            raise Uncalibratable(
                "spectral radius stays below 1 for all coupling scales "
                "(degenerate or empty dependency network)"
            )
        rho_hi = rho_at(c_hi)
    for _ in range(200):
        c_mid = 0.5 * (c_lo + c_hi)
        rho_mid = rho_at(c_mid)
        if abs(rho_mid - 1.0) <= _CALIBRATION_TOL:
            return ExtendedDsm(omega_at(c_mid)), c_mid
        if rho_mid < 1.0:
            c_lo = c_mid
        else:
            c_hi = c_mid
    raise Uncalibratable("bisection failed to pin the spectral radius at 1")


@dataclass(frozen=True)
class CentralityReport:
    """Betweenness, PageRank, and hub scores per network node, each
    rescaled to sum to the node count (2m); an identically zero measure
    stays zero."""

    betweenness: FloatArray
    pagerank: FloatArray
    hub: FloatArray

    def __post_init__(self):
        arrays = {}
        size = None
        for name in ("betweenness", "pagerank", "hub"):
            arr = np.array(getattr(self, name), dtype=np.float64)
            if arr.ndim != 1:
                raise InvariantViolation(name, "must be a vector")
            if size is None:
                size = arr.shape[0]
            elif arr.shape[0] != size:
                raise InvariantViolation(name, "length mismatch")
            if np.any(arr < 0) or not np.all(np.isfinite(arr)):
                raise InvariantViolation(name, "entries must be finite and nonnegative")
            total = arr.sum()
            if total != 0 and abs(total - size) > 1e-9:
                raise InvariantViolation(name, f"must sum to {size} (got {total!r})")
            arr.setflags(write=False)
            arrays[name] = arr
        for name, arr in arrays.items():
            object.__setattr__(self, name, arr)

    @property
    def n(self) -> int:
        return self.betweenness.shape[0]


def _normalized(values: FloatArray, n: int) -> FloatArray:
    total = values.sum()
    return values * (n / total) if total > 0 else values


def _hub_scores(outgoing: FloatArray, tol: float, max_iter: int) -> FloatArray:
    """Hub vector of the weighted digraph with edge matrix ``outgoing``
    (entry (a, b) = weight of a→b): dominant eigenvector of A Aᵀ.

    Power iteration from a uniform start, 1-normalized per sweep, stopping
    when the L1 sweep change drops below ``tol``. scipy-backed HITS draws
    a random start vector, which dithers the trailing bits between
    processes; a fixed start keeps reports byte-reproducible.
    """
    n = outgoing.shape[0]
    hub_matrix = outgoing @ outgoing.T
    h = np.full(n, 1.0 / n)
    for _ in range(max_iter):
        nxt = hub_matrix @ h
        total = nxt.sum()
        if total <= 0:
            return np.zeros(n)
        nxt /= total
        if np.abs(nxt - h).sum() < tol:
            return nxt
        h = nxt
    return h


def centralities(ext: ExtendedDsm) -> CentralityReport:
    """Centrality measures of the directed dependency network of ``ext``.

    A nonzero Ω_ij (i ≠ j) becomes an edge j→i weighted by its strength.
    Betweenness counts unweighted shortest paths with endpoints excluded;
    PageRank uses damping 0.85; hub scores come from the HITS fixed
    point.
    """
    n = 2 * ext.m
    weights = np.array(ext.omega)
    np.fill_diagonal(weights, 0.0)
    # from_numpy_array reads entry (a, b) as edge a->b, so transpose to
    # get edge j->i for omega[i, j]
    graph = nx.from_numpy_array(weights.T, create_using=nx.DiGraph)
    btw = nx.betweenness_centrality(graph, normalized=False, weight=None)
    pr = nx.pagerank(graph, alpha=0.85, tol=_CENTRALITY_TOL, max_iter=10_000)
    hubs = _hub_scores(weights.T, tol=_CENTRALITY_TOL, max_iter=10_000)
    order = range(n)
    return CentralityReport(
        betweenness=_normalized(np.array([btw[i] for i in order]), n),
        pagerank=_normalized(np.array([pr[i] for i in order]), n),
        hub=_normalized(hubs, n),
    )


def aggregate_investment_by_task(result: AllocationResult, m: int) -> FloatArray:
    """Total investment touching each of the 2m tasks.

    A dependency between two tasks contributes its full spend to both ends
    (extended indexing: local 1..m, system m+1..2m, matching the block
    layout of :class:`ExtendedDsm`).
    """
    out = np.zeros(2 * m)
    for (sigma, i, j), spend in result.spend.items():
        if sigma == "L":
            row, col = i - 1, j - 1
        elif sigma == "S":
            row, col = m + i - 1, m + j - 1
        elif sigma == "LS":
            row, col = i - 1, m + j - 1
        else:
            row, col = m + i - 1, j - 1
        out[row] += spend
        if col != row:
            out[col] += spend
    return out


@dataclass(frozen=True)
class BoundaryResult:
    """Joined centrality/investment table for one calibrated random
    network, plus everything needed to audit it."""

    model: str
    m: int
    seed: int
    coupling: float
    budget: float
    extended: ExtendedDsm
    centrality: CentralityReport
    allocation: AllocationResult
    investment: FloatArray

    def rows(self):
        """(task_id, team, betweenness, pagerank, hub, investment) per task."""
        for t in range(2 * self.m):
            yield (
                t + 1,
                "L" if t < self.m else "S",
                float(self.centrality.betweenness[t]),
                float(self.centrality.pagerank[t]),
                float(self.centrality.hub[t]),
                float(self.investment[t]),
            )


def run_boundary_experiment(
    model: str,
    m: int,
    seed: int = 0,
    epsilon: float = 0.5,
    budget_fraction: float = 0.1,
    dist: FeedbackDistribution | None = None,
    *,
    cost_exponent_p: float = 1.0,
    diag_value: float = 1.0,
    edge_prob: float | None = None,
    ring_degree: int = 4,
    rewire_prob: float = 0.1,
    attach: int = 2,
) -> BoundaryResult:
    """Generate, calibrate, optimize, and correlate one synthetic network.

    Draws a 2m-node graph, scales its couplings to the feasibility
    boundary ρ(M) = 1, then solves the budget-constrained allocation with
    budget equal to ``budget_fraction`` of the full-investment cost and
    joins per-task investments with centrality measures.
    """
    if m < 2:
        raise InvariantViolation("m", "need at least 2 tasks")
    if budget_fraction < 0:
        raise InvariantViolation("budget_fraction", "must be >= 0")
    if dist is None:
        dist = default_interval_distribution()
    adj = generate_graph(
        model,
        2 * m,
        seed,
        edge_prob=edge_prob,
        ring_degree=ring_degree,
        rewire_prob=rewire_prob,
        attach=attach,
    )
    ext, coupling = calibrate_extended_dsm(adj, dist, diag_value)
    dsms = ext.to_dsms()
    cost = CostModel.from_dsms(dsms, epsilon, cost_exponent_p)
    budget = budget_fraction * sum(cost.full_cost(c) for c in cost.coords)
    allocation = solve_budget_constrained(dsms, dist, cost, budget)
    report = centralities(ext)
    investment = aggregate_investment_by_task(allocation, m)
    return BoundaryResult(
        model=model,
        m=m,
        seed=seed,
        coupling=coupling,
        budget=budget,
        extended=ext,
        centrality=report,
        allocation=allocation,
        investment=investment,
    )
