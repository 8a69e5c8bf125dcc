"""Feasibility index ρ(M), Perron vectors, and the gradient of log ρ with
respect to log-dependency variables.

The feasibility index is the spectral radius of the generalized work
transformation matrix M. Expected unfinished work contracts over feedback
epochs if and only if ρ(M) < 1. Because every entry of M is a posynomial
in the tunable dependency values Ψ, log ρ(M) is convex in Ξ = log Ψ, and
its gradient has a closed form through the Perron vectors of M.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateSpectrum
from .model import (
    Coordinate,
    DsmSet,
    FeedbackDistribution,
    FloatArray,
    apply_allocation,
    assemble_transitions,
    build_wtms,
    generalized_wtm,
    tunable_coordinates,
)

#: ρ below this is treated as this value before logarithms (a nilpotent M
#: finishes in finitely many epochs, which is trivially feasible).
RHO_FLOOR = 1e-12

_POWER_TOL = 1e-12
_POWER_MAX_ITER = 10_000
_RESIDUAL_TOL = 1e-9


def spectral_radius(mat: FloatArray) -> float:
    """Largest eigenvalue magnitude, via a dense eigensolver."""
    mat = np.asarray(mat, dtype=np.float64)
    if mat.size == 0:
        return 0.0
    return float(np.max(np.abs(np.linalg.eigvals(mat))))


@dataclass(frozen=True)
class PerronPair:
    """Spectral radius with left/right Perron vectors, scaled so uᵀv = 1."""

    rho: float
    u: FloatArray
    v: FloatArray
    method: str = "power"
    iterations: int = 0

    def residuals(self, mat: FloatArray) -> tuple[float, float]:
        """Max-norm eigen-residuals of (u, v) against ``mat``."""
        left = float(np.max(np.abs(mat.T @ self.u - self.rho * self.u)))
        right = float(np.max(np.abs(mat @ self.v - self.rho * self.v)))
        return left, right


def _power_iteration(mat, start, tol, max_iter):
    """Return (rho, unit vector, iterations) or None when stalled."""
    v = np.abs(np.asarray(start, dtype=np.float64))
    norm = np.linalg.norm(v)
    if norm == 0:
        return None
    v = v / norm
    for it in range(max_iter):
        w = mat @ v
        rho = float(v @ w)
        if np.max(np.abs(w - rho * v)) <= tol * max(abs(rho), 1.0):
            return rho, v, it
        norm = np.linalg.norm(w)
        if norm <= 1e-300:
            return None
        v = w / norm
    return None


def _dense_eigvec(mat):
    """Real eigenvector for the Perron root from the dense QR eigensolver."""
    eigvals, eigvecs = np.linalg.eig(mat)
    rho = float(np.max(np.abs(eigvals)))
    slack = _RESIDUAL_TOL * max(rho, 1.0)
    best = None
    for k in np.argsort(-eigvals.real):
        lam = eigvals[k]
        if abs(abs(lam) - rho) > slack or abs(lam.imag) > slack:
            continue
        vec = eigvecs[:, k]
        if np.max(np.abs(vec.imag)) > slack * np.max(np.abs(vec)):
            continue
        vec = vec.real
        if vec.sum() < 0:
            vec = -vec
        negativity = float(-np.min(vec)) if np.min(vec) < 0 else 0.0
        if best is None or negativity < best[2]:
            best = (rho, vec, negativity)
    if best is None:
        return rho, None
    return best[0], best[1] / np.linalg.norm(best[1])


def _one_sided(mat, start, tol, max_iter):
    out = _power_iteration(mat, start, tol, max_iter)
    if out is not None:
        rho, vec, its = out
        return rho, vec, its, "power"
    rho, vec = _dense_eigvec(mat)
    return rho, vec, max_iter, "dense"


def perron_pair(
    mat: FloatArray,
    v0: FloatArray | None = None,
    u0: FloatArray | None = None,
    tol: float = _POWER_TOL,
    max_iter: int = _POWER_MAX_ITER,
) -> PerronPair:
    """Left and right Perron vectors of a nonnegative matrix.

    Power iteration on ``mat`` and ``mat.T`` (warm-startable through ``v0``
    and ``u0``), falling back to a dense eigendecomposition when it stalls.
    Raises :class:`DegenerateSpectrum` when neither route produces a pair
    with small eigen-residuals and uᵀv bounded away from zero, as happens
    when the Perron root sits in a non-trivial Jordan block.
    """
    mat = np.asarray(mat, dtype=np.float64)
    n = mat.shape[0]
    ones = np.ones(n)
    rho_r, v, its_r, method_r = _one_sided(mat, ones if v0 is None else v0, tol, max_iter)
    rho_l, u, its_l, method_l = _one_sided(mat.T, ones if u0 is None else u0, tol, max_iter)
    if v is None or u is None:
        raise DegenerateSpectrum("no real nonnegative Perron eigenvector found")
    rho = max(rho_r, rho_l)
    slack = _RESIDUAL_TOL * max(rho, 1.0)
    if abs(rho_r - rho_l) > slack:
        raise DegenerateSpectrum(
            f"left/right spectral radius estimates disagree: {rho_r!r} vs {rho_l!r}"
        )
    # Perron vectors are nonnegative up to roundoff; anything clearly
    # negative means we latched onto a non-Perron eigenvector.
    for vec in (u, v):
        floor = -slack * max(np.max(np.abs(vec)), 1.0)
        if np.min(vec) < floor:
            raise DegenerateSpectrum("eigenvector has significantly negative entries")
        np.clip(vec, 0.0, None, out=vec)
    v_norm = np.linalg.norm(v)
    u_norm = np.linalg.norm(u)
    if v_norm == 0 or u_norm == 0:
        raise DegenerateSpectrum("eigenvector vanished after clipping")
    v = v / v_norm
    dot = float(u @ v)
    if dot <= 1e-12 * u_norm:
        raise DegenerateSpectrum("left/right eigenvectors are orthogonal (non-simple root)")
    u = u / dot
    pair = PerronPair(
        rho=rho,
        u=u,
        v=v,
        method=method_r if method_r == method_l else "mixed",
        iterations=max(its_r, its_l),
    )
    left, right = pair.residuals(mat)
    if left > slack or right > slack:
        raise DegenerateSpectrum(f"eigen-residuals too large: left={left!r} right={right!r}")
    return pair


@dataclass(frozen=True)
class CoordinateLayout:
    """Where each tunable coordinate lands in the step transitions.

    A dependency (σ, i, j) contributes the entry κ·Ψ to one position of
    ``a1`` and one of ``a2``; κ is the completion coefficient of the
    source task. The two positions coincide except for σ = "SL", whose
    feedback entry sits in the L rows of ``a1`` while its accumulation
    entry sits in the H rows of ``a2``.
    """

    coords: tuple[Coordinate, ...]
    kappa: FloatArray
    a1_rows: np.ndarray
    a1_cols: np.ndarray
    a2_rows: np.ndarray
    a2_cols: np.ndarray

    @classmethod
    def from_dsms(cls, dsms: DsmSet, coords: tuple[Coordinate, ...] | None = None):
        if coords is None:
            coords = tunable_coordinates(dsms)
        m = dsms.m
        kappa = np.empty(len(coords))
        a1_rows = np.empty(len(coords), dtype=np.intp)
        a1_cols = np.empty(len(coords), dtype=np.intp)
        a2_rows = np.empty(len(coords), dtype=np.intp)
        a2_cols = np.empty(len(coords), dtype=np.intp)
        for c, (sigma, i, j) in enumerate(coords):
            if sigma == "L":
                pos = (i - 1, j - 1)
                kappa[c] = dsms.omega_l[j - 1, j - 1]
            elif sigma == "S":
                pos = (m + i - 1, m + j - 1)
                kappa[c] = dsms.omega_s[j - 1, j - 1]
            elif sigma == "LS":
                pos = (m + i - 1, j - 1)
                kappa[c] = dsms.omega_l[j - 1, j - 1]
            else:
                pos = (i - 1, m + j - 1)
                kappa[c] = dsms.omega_s[j - 1, j - 1]
            a1_rows[c], a1_cols[c] = pos
            if sigma == "SL":
                a2_rows[c], a2_cols[c] = 2 * m + i - 1, m + j - 1
            else:
                a2_rows[c], a2_cols[c] = pos
        kappa.setflags(write=False)
        return cls(tuple(coords), kappa, a1_rows, a1_cols, a2_rows, a2_cols)


def gradient_components(
    layout: CoordinateLayout,
    dist: FeedbackDistribution,
    a1: FloatArray,
    a2: FloatArray,
    pair: PerronPair,
    psi_values: FloatArray,
) -> FloatArray:
    """∂ log ρ / ∂Ξ_c for every coordinate of ``layout``, given Perron data.

    Uses dρ = uᵀ(dM)v with M = Σ_h p_h·a2^{h−1}·a1 expanded by the product
    rule. The inner sums collapse onto the vector families uᵀa2^s and
    a2^t·(a1 v), so the whole gradient costs O(h_max·n²).
    """
    h_max = dist.h_max
    n = a1.shape[0]
    u, v, rho = pair.u, pair.v, max(pair.rho, RHO_FLOOR)
    alphas = np.empty((h_max, n))
    alphas[0] = u
    for s in range(1, h_max):
        alphas[s] = a2.T @ alphas[s - 1]
    q = np.zeros(n)
    for h, p in dist.pmf.items():
        q += p * alphas[h - 1]
    direct = q[layout.a1_rows] * v[layout.a1_cols]
    if h_max >= 2:
        betas = np.empty((h_max - 1, n))
        betas[0] = a1 @ v
        for t in range(1, h_max - 1):
            betas[t] = a2 @ betas[t - 1]
        # weights[s, t] = p_{s+t+2}: probability that the split a2^s·E·a2^t
        # arises inside a2^{h-1} for an interval of length h
        weights = np.zeros((h_max - 1, h_max - 1))
        for h, p in dist.pmf.items():
            if h >= 2:
                idx = np.arange(h - 1)
                weights[idx, h - 2 - idx] = p
        accumulated = np.einsum(
            "sc,st,tc->c",
            alphas[: h_max - 1][:, layout.a2_rows],
            weights,
            betas[:, layout.a2_cols],
        )
    else:
        accumulated = 0.0
    return psi_values * layout.kappa * (direct + accumulated) / rho


def _psi_vector(dsms: DsmSet, effective: DsmSet, coords) -> FloatArray:
    return np.array([effective.value(c) for c in coords])


def grad_log_rho(
    dsms: DsmSet,
    dist: FeedbackDistribution,
    psi: dict[Coordinate, float] | None = None,
) -> dict[Coordinate, float]:
    """Gradient of log ρ(M) in the log-dependency variables Ξ = log Ψ.

    Evaluated at the tuned point ``psi`` (nominal where absent). Raises
    :class:`DegenerateSpectrum` when the Perron pair cannot be computed
    reliably; callers then fall back to finite differences, see
    :func:`fd_grad_log_rho`.
    """
    effective = apply_allocation(dsms, psi) if psi else dsms
    coords = tunable_coordinates(dsms)
    layout = CoordinateLayout.from_dsms(dsms, coords)
    pair = assemble_transitions(build_wtms(effective))
    pp = perron_pair(generalized_wtm(pair, dist))
    grads = gradient_components(
        layout, dist, pair.a1, pair.a2, pp, _psi_vector(dsms, effective, coords)
    )
    return {c: float(g) for c, g in zip(coords, grads)}


def _with_values(dsms: DsmSet, coords, values) -> DsmSet:
    """DsmSet with the given coordinate values written in, no box checks.

    Finite differencing needs to step a hair outside [εΩ, Ω]; the result
    is still a valid nonnegative dependency structure.
    """
    mats = {
        "L": np.array(dsms.omega_l),
        "S": np.array(dsms.omega_s),
        "LS": np.array(dsms.omega_ls),
        "SL": np.array(dsms.omega_sl),
    }
    for (sigma, i, j), value in zip(coords, values):
        mats[sigma][i - 1, j - 1] = value
    return DsmSet(mats["L"], mats["S"], mats["LS"], mats["SL"])


def log_rho_at(
    dsms: DsmSet,
    dist: FeedbackDistribution,
    coords,
    values,
) -> float:
    """log ρ(M) with the given coordinate values substituted, floored at
    log(RHO_FLOOR)."""
    tuned = _with_values(dsms, coords, values)
    mat = generalized_wtm(assemble_transitions(build_wtms(tuned)), dist)
    return float(np.log(max(spectral_radius(mat), RHO_FLOOR)))


def fd_grad_log_rho(
    dsms: DsmSet,
    dist: FeedbackDistribution,
    psi: dict[Coordinate, float] | None = None,
    step: float = 1e-6,
) -> dict[Coordinate, float]:
    """Central finite differences of log ρ in Ξ; the degenerate-spectrum
    fallback for :func:`grad_log_rho`."""
    effective = apply_allocation(dsms, psi) if psi else dsms
    coords = tunable_coordinates(dsms)
    base = np.array([effective.value(c) for c in coords])
    out: dict[Coordinate, float] = {}
    for k, coord in enumerate(coords):
        hi = base.copy()
        lo = base.copy()
        hi[k] = base[k] * np.exp(step)
        lo[k] = base[k] * np.exp(-step)
        out[coord] = (
            log_rho_at(dsms, dist, coords, hi) - log_rho_at(dsms, dist, coords, lo)
        ) / (2 * step)
    return out
