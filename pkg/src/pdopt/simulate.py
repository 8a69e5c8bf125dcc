"""Stochastic simulation of the switched work dynamics, the expected epoch
recursion, and completion-time statistics.

Work evolves per step as x(k+1) = a1·x(k) when feedback occurs at k and
x(k+1) = a2·x(k) otherwise. Feedback happens at times τ_0 = 0 < τ_1 < ...
whose gaps are i.i.d. draws from a :class:`FeedbackDistribution`. Averaging
over the gap distribution turns the per-step process into the epoch
recursion z(ℓ+1) = M·z(ℓ) on expected states.

Randomness comes from a counter-based generator (Philox) keyed by a seed;
per-run streams are derived with distinct spawn keys so that Monte Carlo
results do not depend on scheduling or run order.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Callable, Iterable, Iterator

import numpy as np

from .errors import InvariantViolation
from .model import (
    DsmSet,
    FeedbackDistribution,
    FloatArray,
    ProjectState,
    TransitionPair,
    assemble_transitions,
    build_wtms,
    generalized_wtm,
)

PmfSampler = Callable[[np.random.Generator], FeedbackDistribution]


def _rng(seed: int, spawn_key: tuple[int, ...] = ()) -> np.random.Generator:
    seq = np.random.SeedSequence(entropy=seed, spawn_key=spawn_key)
    return np.random.Generator(np.random.Philox(seq))


@dataclass(frozen=True)
class Trajectory:
    """Realized per-step states plus the feedback times that shaped them.

    ``states`` has shape (horizon+1, 3m); row k is [L(k); S(k); H(k)].
    Iterating yields :class:`ProjectState` objects.
    """

    states: FloatArray
    feedback_times: tuple[int, ...]

    def __post_init__(self):
        states = np.asarray(self.states, dtype=np.float64)
        if states.ndim != 2 or states.shape[1] % 3 != 0:
            raise InvariantViolation("states", "must be (steps, 3m)")
        times = tuple(int(t) for t in self.feedback_times)
        if times and (times[0] != 0 or any(b <= a for a, b in zip(times, times[1:]))):
            raise InvariantViolation("feedback_times", "must start at 0 and increase")
        states.setflags(write=False)
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "feedback_times", times)

    @property
    def horizon(self) -> int:
        return self.states.shape[0] - 1

    @property
    def m(self) -> int:
        return self.states.shape[1] // 3

    def state(self, k: int) -> ProjectState:
        return ProjectState.from_vector(self.states[k])

    def __len__(self) -> int:
        return self.states.shape[0]

    def __iter__(self) -> Iterator[ProjectState]:
        return (ProjectState.from_vector(row) for row in self.states)

    @property
    def total_unfinished(self) -> FloatArray:
        """Σ L + Σ S per step; H is finished work awaiting transfer."""
        m = self.m
        return self.states[:, : 2 * m].sum(axis=1)


def _draw_feedback_times(dist: FeedbackDistribution, horizon: int, rng) -> tuple[int, ...]:
    """τ_0 = 0 plus every later feedback time up to and including horizon."""
    if horizon <= 0:
        return (0,)
    count = horizon // dist.h_min + 1
    gaps = dist.sample_intervals(rng, count)
    times = np.concatenate([[0], np.cumsum(gaps)])
    return tuple(int(t) for t in times[times <= horizon])


def _step_states(pair: TransitionPair, x0: FloatArray, horizon: int, feedback) -> FloatArray:
    states = np.empty((horizon + 1, pair.n))
    states[0] = x0
    fb = set(feedback)
    for k in range(horizon):
        mat = pair.a1 if k in fb else pair.a2
        states[k + 1] = mat @ states[k]
    return states


def run_trajectory(
    dsms: DsmSet,
    dist: FeedbackDistribution,
    x0: ProjectState | None = None,
    horizon: int = 0,
    seed: int = 0,
) -> Trajectory:
    """Simulate one realization of the switched dynamics.

    Feedback occurs at k = 0 and then after i.i.d. gaps drawn from
    ``dist``. Deterministic for a fixed seed. ``x0`` defaults to one unit
    of unfinished work per task on both teams.
    """
    if horizon < 0:
        raise InvariantViolation("horizon", "must be >= 0")
    if x0 is None:
        x0 = ProjectState.uniform_start(dsms.m)
    if x0.m != dsms.m:
        raise InvariantViolation("x0", "task count mismatch")
    pair = assemble_transitions(build_wtms(dsms))
    feedback = _draw_feedback_times(dist, horizon, _rng(seed))
    states = _step_states(pair, x0.as_vector(), horizon, feedback)
    return Trajectory(states, feedback)


def expected_epoch_states(
    dsms: DsmSet,
    dist: FeedbackDistribution,
    z0: FloatArray,
    num_epochs: int,
) -> FloatArray:
    """Expected states at feedback epochs: rows z(ℓ) = M^ℓ·z0, ℓ = 0..num_epochs."""
    if num_epochs < 0:
        raise InvariantViolation("num_epochs", "must be >= 0")
    z0 = np.asarray(z0, dtype=np.float64)
    mat = generalized_wtm(assemble_transitions(build_wtms(dsms)), dist)
    out = np.empty((num_epochs + 1, z0.shape[0]))
    out[0] = z0
    for ell in range(num_epochs):
        out[ell + 1] = mat @ out[ell]
    return out


def completion_time(traj: Trajectory, gamma: float) -> int | None:
    """First step k at which unfinished work Σ L(k) + Σ S(k) drops to
    ``gamma`` or below; None when the trajectory never gets there."""
    if gamma < 0:
        raise InvariantViolation("gamma", "must be >= 0")
    below = np.nonzero(traj.total_unfinished <= gamma)[0]
    return int(below[0]) if below.size else None


def sample_interval_pmf(
    seed: int | np.random.Generator,
    h_support: Iterable[int],
) -> FeedbackDistribution:
    """Random interval pmf, uniform on the probability simplex.

    Normalized unit-exponential variates over the support, i.e. a
    Dirichlet(1, ..., 1) draw. ``seed`` may be a generator to draw from an
    existing stream.
    """
    support = sorted({int(h) for h in h_support})
    if not support:
        raise InvariantViolation("h_support", "must be nonempty")
    rng = seed if isinstance(seed, np.random.Generator) else _rng(seed)
    raw = rng.standard_exponential(len(support))
    probs = raw / raw.sum()
    return FeedbackDistribution(dict(zip(support, probs)))


def monte_carlo_completion(
    dsms: DsmSet,
    dist: FeedbackDistribution | PmfSampler,
    x0: ProjectState | None = None,
    gamma: float = 1.0,
    horizon: int = 1000,
    runs: int = 1,
    seed: int = 0,
) -> Counter:
    """Completion-time multiset over independent runs.

    ``dist`` is either a fixed interval distribution or a callable drawing
    one from a per-run generator (the random-distribution protocol). Each
    run uses a stream derived from (seed, run index), so the result is
    independent of execution order. Keys are completion steps; None counts
    runs that never complete within the horizon.
    """
    if runs < 1:
        raise InvariantViolation("runs", "must be >= 1")
    if x0 is None:
        x0 = ProjectState.uniform_start(dsms.m)
    pair = assemble_transitions(build_wtms(dsms))
    x0_vec = x0.as_vector()
    out: Counter = Counter()
    for run in range(runs):
        rng = _rng(seed, (run,))
        run_dist = dist(rng) if callable(dist) else dist
        feedback = _draw_feedback_times(run_dist, horizon, rng)
        states = _step_states(pair, x0_vec, horizon, feedback)
        out[completion_time(Trajectory(states, feedback), gamma)] += 1
    return out


def mean_trajectory(
    dsms: DsmSet,
    dist: FeedbackDistribution,
    x0: ProjectState | None = None,
    horizon: int = 0,
    runs: int = 1,
    seed: int = 0,
) -> FloatArray:
    """Monte Carlo estimate of E[x(k)], k = 0..horizon, batched over runs.

    Uses the same per-run seed derivation as :func:`monte_carlo_completion`
    but steps all runs together, which is much faster when only the mean
    path matters.
    """
    if runs < 1:
        raise InvariantViolation("runs", "must be >= 1")
    if x0 is None:
        x0 = ProjectState.uniform_start(dsms.m)
    pair = assemble_transitions(build_wtms(dsms))
    fb = np.zeros((runs, horizon + 1), dtype=bool)
    for run in range(runs):
        times = _draw_feedback_times(dist, horizon, _rng(seed, (run,)))
        fb[run, list(times)] = True
    states = np.tile(x0.as_vector(), (runs, 1))
    mean = np.empty((horizon + 1, pair.n))
    mean[0] = states.mean(axis=0)
    a1_t = pair.a1.T
    a2_t = pair.a2.T
    for k in range(horizon):
        mask = fb[:, k]
        nxt = states @ a2_t
        if mask.any():
            nxt[mask] = states[mask] @ a1_t
        states = nxt
        mean[k + 1] = states.mean(axis=0)
    return mean
