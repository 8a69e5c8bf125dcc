"""Project data model: DSMs/IDMs, feedback-interval distribution, and the
work-transformation matrices of the asynchronous two-team dynamics.

Conventions
-----------
A project has m tasks, each split into a local (development) and a system
(integration) part. Four nonnegative m-by-m matrices give the nominal
couplings:

* ``omega_l``, ``omega_s`` -- DSMs within the local and system teams.
  Diagonal entries are work completion coefficients in (0, 1]; off-diagonal
  entry (i, j) is the rework fraction created for task i per unit of work
  done on task j.
* ``omega_ls``, ``omega_sl`` -- inter-team dependency matrices (IDMs).
  ``omega_ls[i, j]`` is the rework created for system task i per unit of
  work done on local task j; ``omega_sl`` reads the other way round.

Dependencies that management can weaken ("tunable coordinates") are the
nonzero IDM entries plus the nonzero off-diagonal DSM entries; completion
coefficients are never tunable. Coordinates are addressed as
``(sigma, i, j)`` tuples with sigma in {"L", "S", "LS", "SL"} and 1-based
task indices, so ("L", 1, 2) names the matrix entry ``omega_l[0, 1]``.

The per-step state is x = [L; S; H] (unfinished local work, unfinished
system work, finished-but-untransferred system work) of dimension n = 3m.
A feedback step applies ``a1``; any other step applies ``a2``. Averaging
the step-to-step transition over the feedback-interval distribution yields
the generalized work transformation matrix whose spectral radius is the
project's feasibility index.
"""

from __future__ import annotations

from dataclasses import dataclass
from types import MappingProxyType
from typing import Mapping

import numpy as np
from numpy.typing import NDArray

from .errors import InvariantViolation

FloatArray = NDArray[np.float64]

#: (sigma, i, j) with 1-based task indices.
Coordinate = tuple[str, int, int]

_MATRIX_ATTR = {"L": "omega_l", "S": "omega_s", "LS": "omega_ls", "SL": "omega_sl"}

PMF_SUM_TOL = 1e-12
_BOX_SLACK = 1e-12


def _frozen_matrix(value, field: str, m: int | None = None) -> FloatArray:
    arr = np.array(value, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise InvariantViolation(field, "must be a square matrix")
    if m is not None and arr.shape[0] != m:
        raise InvariantViolation(field, f"must be {m}x{m}")
    if not np.all(np.isfinite(arr)):
        raise InvariantViolation(field, "entries must be finite")
    if np.any(arr < 0):
        i, j = np.argwhere(arr < 0)[0]
        raise InvariantViolation(f"{field}[{i}][{j}]", "nonnegative")
    arr.setflags(write=False)
    return arr


def _frozen_vector(value, field: str, m: int) -> FloatArray:
    arr = np.array(value, dtype=np.float64)
    if arr.shape != (m,):
        raise InvariantViolation(field, f"must be a length-{m} vector")
    if not np.all(np.isfinite(arr)):
        raise InvariantViolation(field, "entries must be finite")
    if np.any(arr < 0):
        raise InvariantViolation(field, "entries must be nonnegative")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class DsmSet:
    """Nominal boundary conditions of a project: two DSMs and two IDMs."""

    omega_l: FloatArray
    omega_s: FloatArray
    omega_ls: FloatArray
    omega_sl: FloatArray

    def __post_init__(self):
        ol = _frozen_matrix(self.omega_l, "omega_l")
        m = ol.shape[0]
        os_ = _frozen_matrix(self.omega_s, "omega_s", m)
        ols = _frozen_matrix(self.omega_ls, "omega_ls", m)
        osl = _frozen_matrix(self.omega_sl, "omega_sl", m)
        for name, mat in (("omega_l", ol), ("omega_s", os_)):
            d = np.diag(mat)
            if np.any((d <= 0) | (d > 1)):
                i = int(np.argwhere((d <= 0) | (d > 1))[0][0])
                raise InvariantViolation(
                    f"{name}[{i}][{i}]", "completion coefficient must lie in (0, 1]"
                )
        object.__setattr__(self, "omega_l", ol)
        object.__setattr__(self, "omega_s", os_)
        object.__setattr__(self, "omega_ls", ols)
        object.__setattr__(self, "omega_sl", osl)

    @property
    def m(self) -> int:
        return self.omega_l.shape[0]

    def matrix(self, sigma: str) -> FloatArray:
        return getattr(self, _MATRIX_ATTR[sigma])

    def value(self, coord: Coordinate) -> float:
        sigma, i, j = coord
        return float(self.matrix(sigma)[i - 1, j - 1])


@dataclass(frozen=True)
class FeedbackDistribution:
    """Probability mass function of the interval between feedback epochs."""

    pmf: Mapping[int, float]

    def __post_init__(self):
        items = {}
        for h, p in dict(self.pmf).items():
            hi = int(h)
            if hi != h or hi < 1:
                raise InvariantViolation("interval_pmf", f"interval {h!r} must be an integer >= 1")
            pf = float(p)
            if not np.isfinite(pf) or pf < 0:
                raise InvariantViolation(f"interval_pmf[{hi}]", "probability must be >= 0")
            if pf > 0:
                items[hi] = pf
        if not items:
            raise InvariantViolation("interval_pmf", "must have nonempty support")
        total = sum(items.values())
        if abs(total - 1.0) > PMF_SUM_TOL:
            raise InvariantViolation("interval_pmf", f"must sum to 1 (got {total!r})")
        object.__setattr__(self, "pmf", MappingProxyType(dict(sorted(items.items()))))

    @property
    def h_min(self) -> int:
        return next(iter(self.pmf))

    @property
    def h_max(self) -> int:
        return next(reversed(self.pmf))

    @property
    def support(self) -> FloatArray:
        return np.array(list(self.pmf), dtype=np.int64)

    @property
    def probabilities(self) -> FloatArray:
        return np.array(list(self.pmf.values()), dtype=np.float64)

    def sample_intervals(self, rng: np.random.Generator, size: int) -> NDArray[np.int64]:
        """Draw i.i.d. feedback intervals."""
        return rng.choice(self.support, size=size, p=self.probabilities)


@dataclass(frozen=True)
class WtmSet:
    """Work transformation matrices derived from a :class:`DsmSet`."""

    w_l: FloatArray
    w_s: FloatArray
    w_ls: FloatArray
    w_sl: FloatArray
    w_sh: FloatArray

    def __post_init__(self):
        wl = _frozen_matrix(self.w_l, "w_l")
        m = wl.shape[0]
        ws = _frozen_matrix(self.w_s, "w_s", m)
        wls = _frozen_matrix(self.w_ls, "w_ls", m)
        wsl = _frozen_matrix(self.w_sl, "w_sl", m)
        wsh = _frozen_matrix(self.w_sh, "w_sh", m)
        if not np.array_equal(wsh, wsl):
            raise InvariantViolation("w_sh", "must equal w_sl entrywise")
        for name, mat in (("w_l", wl), ("w_s", ws), ("w_ls", wls), ("w_sl", wsl), ("w_sh", wsh)):
            object.__setattr__(self, name, mat)

    @property
    def m(self) -> int:
        return self.w_l.shape[0]


@dataclass(frozen=True)
class TransitionPair:
    """Switched step transitions: ``a1`` with feedback, ``a2`` without."""

    a1: FloatArray
    a2: FloatArray

    def __post_init__(self):
        a1 = _frozen_matrix(self.a1, "a1")
        n = a1.shape[0]
        if n % 3 != 0:
            raise InvariantViolation("a1", "dimension must be 3m")
        a2 = _frozen_matrix(self.a2, "a2", n)
        m = n // 3
        if np.any(a1[2 * m:, :] != 0):
            raise InvariantViolation("a1", "bottom block-row must be zero")
        if np.any(a2[:m, m:] != 0) or np.any(a2[m: 2 * m, 2 * m:] != 0):
            raise InvariantViolation("a2", "upper blocks (1,2), (1,3), (2,3) must be zero")
        if not np.array_equal(a2[2 * m:, 2 * m:], np.eye(m)):
            raise InvariantViolation("a2", "block (3,3) must be the identity")
        object.__setattr__(self, "a1", a1)
        object.__setattr__(self, "a2", a2)

    @property
    def n(self) -> int:
        return self.a1.shape[0]

    @property
    def m(self) -> int:
        return self.n // 3


@dataclass(frozen=True)
class ProjectState:
    """Unfinished local work L, unfinished system work S, finished but
    untransferred system work H."""

    l: FloatArray
    s: FloatArray
    h: FloatArray

    def __post_init__(self):
        l = np.atleast_1d(np.asarray(self.l, dtype=np.float64))
        m = l.shape[0]
        object.__setattr__(self, "l", _frozen_vector(l, "L", m))
        object.__setattr__(self, "s", _frozen_vector(np.atleast_1d(self.s), "S", m))
        object.__setattr__(self, "h", _frozen_vector(np.atleast_1d(self.h), "H", m))

    @property
    def m(self) -> int:
        return self.l.shape[0]

    def as_vector(self) -> FloatArray:
        return np.concatenate([self.l, self.s, self.h])

    @classmethod
    def from_vector(cls, x: FloatArray) -> "ProjectState":
        x = np.asarray(x, dtype=np.float64)
        m = x.shape[0] // 3
        return cls(x[:m], x[m: 2 * m], x[2 * m:])

    @classmethod
    def uniform_start(cls, m: int) -> "ProjectState":
        """One unit of unfinished work per task on both teams, nothing queued."""
        return cls(np.ones(m), np.ones(m), np.zeros(m))

    @property
    def total_unfinished(self) -> float:
        """Unfinished work only: H is finished work awaiting transfer."""
        return float(self.l.sum() + self.s.sum())


def build_wtms(dsms: DsmSet) -> WtmSet:
    """Derive the five work transformation matrices from the DSMs/IDMs.

    Within a team, W_ii = 1 - Omega_ii and W_ij = Omega_ij * Omega_jj for
    i != j; across teams, W_LS_ij = Omega_LS_ij * Omega_L_jj and
    W_SL_ij = Omega_SL_ij * Omega_S_jj, with W_SH = W_SL.
    """
    dl = np.diag(dsms.omega_l)
    ds = np.diag(dsms.omega_s)

    def team_wtm(omega, diag):
        w = omega * diag[np.newaxis, :]
        np.fill_diagonal(w, 1.0 - diag)
        return w

    w_l = team_wtm(dsms.omega_l, dl)
    w_s = team_wtm(dsms.omega_s, ds)
    w_ls = dsms.omega_ls * dl[np.newaxis, :]
    w_sl = dsms.omega_sl * ds[np.newaxis, :]
    return WtmSet(w_l, w_s, w_ls, w_sl, w_sl.copy())


def assemble_transitions(wtms: WtmSet) -> TransitionPair:
    """Place the WTMs into the two 3m-by-3m step transition matrices."""
    m = wtms.m
    eye = np.eye(m)
    zero = np.zeros((m, m))
    a1 = np.block([
        [wtms.w_l, wtms.w_sl, eye],
        [wtms.w_ls, wtms.w_s, zero],
        [zero, zero, zero],
    ])
    a2 = np.block([
        [wtms.w_l, zero, zero],
        [wtms.w_ls, wtms.w_s, zero],
        [zero, wtms.w_sh, eye],
    ])
    return TransitionPair(a1, a2)


def generalized_wtm(pair: TransitionPair, dist: FeedbackDistribution) -> FloatArray:
    """Expected epoch-to-epoch work transformation under random intervals.

    Returns sum_h p_h * a2^(h-1) * a1. Powers are formed by iterated
    multiplication, which keeps every entry exactly nonnegative.
    """
    n = pair.n
    weighted = np.zeros((n, n))
    power = np.eye(n)
    current = 1
    for h, p in dist.pmf.items():
        while current < h:
            power = power @ pair.a2
            current += 1
        weighted += p * power
    return weighted @ pair.a1


def project_matrix(
    dsms: DsmSet,
    dist: FeedbackDistribution,
    psi: Mapping[Coordinate, float] | None = None,
) -> FloatArray:
    """Generalized WTM of the project, optionally after tuning ``psi``."""
    if psi:
        dsms = apply_allocation(dsms, psi)
    return generalized_wtm(assemble_transitions(build_wtms(dsms)), dist)


def tunable_coordinates(dsms: DsmSet) -> tuple[Coordinate, ...]:
    """Coordinates that investment may weaken, in a fixed deterministic order.

    These are the nonzero off-diagonal DSM entries and every nonzero IDM
    entry (IDM diagonals couple the local and system halves of one task and
    are legitimate investment targets). Zero nominal entries and completion
    coefficients are never tunable.
    """
    coords: list[Coordinate] = []
    for sigma in ("L", "S", "LS", "SL"):
        mat = dsms.matrix(sigma)
        for i, j in np.argwhere(mat != 0):
            if sigma in ("L", "S") and i == j:
                continue
            coords.append((sigma, int(i) + 1, int(j) + 1))
    return tuple(coords)


def apply_allocation(dsms: DsmSet, psi: Mapping[Coordinate, float]) -> DsmSet:
    """Return a copy of ``dsms`` with tunable coordinates replaced by ``psi``.

    Every key must name a tunable coordinate and every value must be
    positive and at most the nominal dependency (a hair of floating slack
    is tolerated and clamped). Completion coefficients cannot be touched.
    """
    mats = {sigma: np.array(dsms.matrix(sigma)) for sigma in _MATRIX_ATTR}
    for coord, value in psi.items():
        sigma, i, j = coord
        if sigma not in _MATRIX_ATTR:
            raise InvariantViolation(f"psi[{coord}]", "unknown matrix name")
        m = dsms.m
        if not (1 <= i <= m and 1 <= j <= m):
            raise InvariantViolation(f"psi[{coord}]", "task index out of range")
        if sigma in ("L", "S") and i == j:
            raise InvariantViolation(f"psi[{coord}]", "completion coefficients are not tunable")
        nominal = dsms.value(coord)
        if nominal == 0:
            raise InvariantViolation(f"psi[{coord}]", "zero nominal dependencies are not tunable")
        v = float(value)
        if not np.isfinite(v) or v <= 0:
            raise InvariantViolation(f"psi[{coord}]", "tuned value must be positive")
        if v > nominal * (1.0 + _BOX_SLACK):
            raise InvariantViolation(
                f"psi[{coord}]", f"tuned value {v!r} exceeds nominal {nominal!r}"
            )
        mats[sigma][i - 1, j - 1] = min(v, nominal)
    return DsmSet(mats["L"], mats["S"], mats["LS"], mats["SL"])
