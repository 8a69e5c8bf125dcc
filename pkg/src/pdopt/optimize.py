"""Resource allocation over dependency strengths: posynomial cost model,
proportional baseline strategy, and the two convex programs (budget- and
performance-constrained) solved as barrier methods in log-variables.

Investing in a tunable dependency weakens it from its nominal value Ω down
to at most εΩ. The price of holding a dependency at Ψ is
f(Ψ) = c·(Ψ^(−p) − Ω^(−p)) with c chosen so f(εΩ) = Ω: fully buying out a
dependency costs exactly its nominal strength. Both the total positive
cost part C⁺ and the feasibility index ρ(M) are posynomial-shaped in Ψ,
so both programs are convex in Ξ = log Ψ and a log-barrier method with
analytic gradients solves them to first-order stationarity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Mapping, NamedTuple

import numpy as np
from scipy.optimize import brentq

from .errors import DegenerateSpectrum, Infeasible, InvariantViolation
from .model import (
    Coordinate,
    DsmSet,
    FeedbackDistribution,
    FloatArray,
    assemble_transitions,
    build_wtms,
    generalized_wtm,
    tunable_coordinates,
)
from .spectral import (
    RHO_FLOOR,
    CoordinateLayout,
    _power_iteration,
    _with_values,
    gradient_components,
    perron_pair,
    spectral_radius,
)

_BOX_SLACK = 1e-12
_MU_SCHEDULE = tuple(10.0 ** -k for k in range(9))  # 1.0 down to 1e-8
_ARMIJO = 1e-4
_SHRINK = 0.5
_PHI_TOL = 1e-10
_INNER_CAP = 100
_MAX_BACKTRACKS = 70
_SNAP_TOL = 1e-6
_ACTIVE_TOL = 1e-8
_PGRAD_TOL = 1e-6


def _check_box(value: float, lower: float, upper: float, what: str) -> float:
    slack = _BOX_SLACK * max(upper, 1.0)
    if not (lower - slack <= value <= upper + slack):
        raise InvariantViolation(what, f"value {value!r} outside [{lower!r}, {upper!r}]")
    return min(max(value, lower), upper)


@dataclass(frozen=True)
class CostModel:
    """Power-law investment cost f(Ψ) = c·(Ψ^(−p) − Ω^(−p)) per coordinate.

    ``c`` is pinned to Ω^(p+1)/(ε^(−p) − 1), which makes f(εΩ) = Ω and
    f(Ω) = 0 exactly. Build with :meth:`from_dsms`.
    """

    epsilon: float
    p: float
    c: Mapping[Coordinate, float]
    omega: Mapping[Coordinate, float]

    def __post_init__(self):
        if not (0 < self.epsilon < 1):
            raise InvariantViolation("epsilon", "must lie in (0, 1)")
        if not (self.p > 0 and math.isfinite(self.p)):
            raise InvariantViolation("cost_exponent_p", "must be positive and finite")
        c = dict(self.c)
        omega = dict(self.omega)
        if set(c) != set(omega):
            raise InvariantViolation("c", "must have the same coordinates as omega")
        denom = math.expm1(self.p * math.log(1.0 / self.epsilon))  # eps^(-p) - 1
        for coord, w in omega.items():
            if not (w > 0 and math.isfinite(w)):
                raise InvariantViolation(f"omega[{coord}]", "must be positive")
            expected = w ** (self.p + 1) / denom
            if not math.isclose(c[coord], expected, rel_tol=1e-9, abs_tol=1e-300):
                raise InvariantViolation(
                    f"c[{coord}]", "must equal omega^(p+1)/(epsilon^(-p) - 1)"
                )
        object.__setattr__(self, "c", MappingProxyType(c))
        object.__setattr__(self, "omega", MappingProxyType(omega))
        object.__setattr__(self, "_coords", tuple(omega))
        arr = np.array([omega[k] for k in omega])
        arr.setflags(write=False)
        object.__setattr__(self, "_omega_arr", arr)
        object.__setattr__(self, "_denom", denom)

    @classmethod
    def from_dsms(cls, dsms: DsmSet, epsilon: float, p: float) -> "CostModel":
        """Cost model over every tunable coordinate of ``dsms``."""
        if not (0 < epsilon < 1):
            raise InvariantViolation("epsilon", "must lie in (0, 1)")
        if not (p > 0 and math.isfinite(p)):
            raise InvariantViolation("cost_exponent_p", "must be positive and finite")
        denom = math.expm1(p * math.log(1.0 / epsilon))
        omega = {coord: dsms.value(coord) for coord in tunable_coordinates(dsms)}
        c = {coord: w ** (p + 1) / denom for coord, w in omega.items()}
        return cls(epsilon, p, c, omega)

    @property
    def coords(self) -> tuple[Coordinate, ...]:
        return self._coords

    def omega_vector(self) -> FloatArray:
        return self._omega_arr

    def lower_of(self, coord: Coordinate) -> float:
        return self.epsilon * self.omega[coord]

    def cost_of(self, coord: Coordinate, value: float) -> float:
        """Investment needed to hold ``coord`` at ``value``; 0 at nominal.

        Evaluated as Ω·expm1(p·log(Ω/Ψ))/(ε^(−p) − 1), which is exact at
        both box ends and immune to overflow for large p.
        """
        w = self.omega[coord]
        value = _check_box(value, self.epsilon * w, w, f"psi[{coord}]")
        return w * math.expm1(self.p * math.log(w / value)) / self._denom

    def full_cost(self, coord: Coordinate) -> float:
        """Cost of weakening ``coord`` all the way to εΩ (equals Ω)."""
        return self.omega[coord]

    def invert_cost(self, coord: Coordinate, spend: float) -> float:
        """Dependency value whose cost equals ``spend``."""
        w = self.omega[coord]
        spend = _check_box(spend, 0.0, w, f"spend[{coord}]")
        if spend == 0.0:
            return w
        if spend == w:
            return self.epsilon * w
        return w * math.exp(-math.log1p(spend * self._denom / w) / self.p)

    def positive_cost(self, values: FloatArray) -> float:
        """C⁺(Ψ) = Σ c·Ψ^(−p) over coordinates, aligned with ``coords``."""
        terms = self._omega_arr * np.exp(self.p * np.log(self._omega_arr / values))
        return float(terms.sum()) / self._denom

    def positive_cost_grad_xi(self, values: FloatArray) -> FloatArray:
        """∂C⁺/∂Ξ per coordinate at Ψ = exp(Ξ)."""
        terms = self._omega_arr * np.exp(self.p * np.log(self._omega_arr / values))
        return -self.p * terms / self._denom

    @property
    def c_minus(self) -> float:
        """C⁻ = C⁺ at the nominal point; the constant part of the cost."""
        return float(self._omega_arr.sum()) / self._denom


@dataclass(frozen=True)
class PosynomialCostModel:
    """Generalized cost: per coordinate a posynomial f⁺(Ψ) = Σ a_k·Ψ^(b_k)
    with a_k > 0 and b_k ≤ 0, so cost f = f⁺(Ψ) − f⁺(Ω) is decreasing and
    log C⁺ stays convex in log-variables."""

    epsilon: float
    omega: Mapping[Coordinate, float]
    monomials: Mapping[Coordinate, tuple[tuple[float, float], ...]]

    def __post_init__(self):
        if not (0 < self.epsilon < 1):
            raise InvariantViolation("epsilon", "must lie in (0, 1)")
        omega = dict(self.omega)
        mono = {k: tuple((float(a), float(b)) for a, b in v) for k, v in dict(self.monomials).items()}
        if set(mono) != set(omega):
            raise InvariantViolation("monomials", "must cover exactly the omega coordinates")
        for coord, terms in mono.items():
            if not (omega[coord] > 0 and math.isfinite(omega[coord])):
                raise InvariantViolation(f"omega[{coord}]", "must be positive")
            if not terms or not any(b < 0 for _, b in terms):
                raise InvariantViolation(
                    f"monomials[{coord}]", "needs at least one decreasing term"
                )
            for a, b in terms:
                if a <= 0:
                    raise InvariantViolation(f"monomials[{coord}]", "coefficients must be > 0")
                if b > 0:
                    raise InvariantViolation(f"monomials[{coord}]", "exponents must be <= 0")
        object.__setattr__(self, "omega", MappingProxyType(omega))
        object.__setattr__(self, "monomials", MappingProxyType(mono))
        coords = tuple(omega)
        object.__setattr__(self, "_coords", coords)
        arr = np.array([omega[k] for k in coords])
        arr.setflags(write=False)
        object.__setattr__(self, "_omega_arr", arr)
        owner, coef, expo = [], [], []
        for idx, coord in enumerate(coords):
            for a, b in mono[coord]:
                owner.append(idx)
                coef.append(a)
                expo.append(b)
        object.__setattr__(self, "_owner", np.array(owner, dtype=np.intp))
        object.__setattr__(self, "_coef", np.array(coef))
        object.__setattr__(self, "_expo", np.array(expo))

    @property
    def coords(self) -> tuple[Coordinate, ...]:
        return self._coords

    def omega_vector(self) -> FloatArray:
        return self._omega_arr

    def lower_of(self, coord: Coordinate) -> float:
        return self.epsilon * self.omega[coord]

    def _fplus(self, coord: Coordinate, value: float) -> float:
        return sum(a * value**b for a, b in self.monomials[coord])

    def cost_of(self, coord: Coordinate, value: float) -> float:
        w = self.omega[coord]
        value = _check_box(value, self.epsilon * w, w, f"psi[{coord}]")
        return self._fplus(coord, value) - self._fplus(coord, w)

    def full_cost(self, coord: Coordinate) -> float:
        return self.cost_of(coord, self.epsilon * self.omega[coord])

    def invert_cost(self, coord: Coordinate, spend: float) -> float:
        w = self.omega[coord]
        cap = self.full_cost(coord)
        spend = _check_box(spend, 0.0, cap, f"spend[{coord}]")
        if spend == 0.0:
            return w
        if spend == cap:
            return self.epsilon * w
        return float(
            brentq(lambda v: self.cost_of(coord, v) - spend, self.epsilon * w, w, xtol=1e-15)
        )

    def positive_cost(self, values: FloatArray) -> float:
        return float(np.sum(self._coef * values[self._owner] ** self._expo))

    def positive_cost_grad_xi(self, values: FloatArray) -> FloatArray:
        terms = self._coef * values[self._owner] ** self._expo * self._expo
        return np.bincount(self._owner, weights=terms, minlength=len(self._coords))

    @property
    def c_minus(self) -> float:
        return self.positive_cost(self._omega_arr)


class CostSplit(NamedTuple):
    total: float
    c_plus: float
    c_minus: float


def cost_of(model, coord: Coordinate, psi_value: float) -> float:
    """Investment on one coordinate held at ``psi_value``."""
    return model.cost_of(coord, psi_value)


def total_cost(model, psi: Mapping[Coordinate, float]) -> CostSplit:
    """Total investment C = C⁺ − C⁻ over all coordinates of the model.

    Coordinates absent from ``psi`` sit at their nominal value and cost
    nothing.
    """
    values = np.array([psi.get(coord, model.omega[coord]) for coord in model.coords])
    lo = model.epsilon * model.omega_vector()
    hi = model.omega_vector()
    slack = _BOX_SLACK * np.maximum(hi, 1.0)
    if np.any(values < lo - slack) or np.any(values > hi + slack):
        bad = int(np.argmax((values < lo - slack) | (values > hi + slack)))
        raise InvariantViolation(f"psi[{model.coords[bad]}]", "outside the [epsilon*omega, omega] box")
    values = np.clip(values, lo, hi)
    c_plus = model.positive_cost(values)
    c_minus = model.c_minus
    return CostSplit(c_plus - c_minus, c_plus, c_minus)


@dataclass(frozen=True)
class AllocationResult:
    """Outcome of an allocation strategy: tuned dependencies, spends, and
    the feasibility index before/after."""

    psi: Mapping[Coordinate, float]
    spend: Mapping[Coordinate, float]
    total_cost: float
    rho_before: float
    rho_after: float
    iterations: int
    converged: bool
    diagnostics: Mapping[str, object] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "psi", MappingProxyType(dict(self.psi)))
        object.__setattr__(self, "spend", MappingProxyType(dict(self.spend)))
        object.__setattr__(self, "diagnostics", MappingProxyType(dict(self.diagnostics)))


class _SpectralObjective:
    """log ρ(M) and its Ξ-gradient over the tunable coordinates, with warm-
    started eigenvector iterations and a finite-difference fallback."""

    def __init__(self, dsms: DsmSet, dist: FeedbackDistribution, coords):
        self.dsms = dsms
        self.dist = dist
        self.coords = tuple(coords)
        self.layout = CoordinateLayout.from_dsms(dsms, self.coords)
        self._v = None
        self._u = None
        self.fd_fallbacks = 0
        self.evaluations = 0

    def _matrices(self, psi_values):
        tuned = _with_values(self.dsms, self.coords, psi_values)
        pair = assemble_transitions(build_wtms(tuned))
        return pair, generalized_wtm(pair, self.dist)

    def _rho_of(self, mat) -> float:
        start = self._v if self._v is not None else np.ones(mat.shape[0])
        out = _power_iteration(mat, start, 1e-12, 3000)
        if out is not None:
            rho, v, _ = out
            self._v = v
            return rho
        return spectral_radius(mat)

    def value(self, xi: FloatArray) -> float:
        self.evaluations += 1
        _, mat = self._matrices(np.exp(xi))
        return math.log(max(self._rho_of(mat), RHO_FLOOR))

    def value_and_grad(self, xi: FloatArray) -> tuple[float, FloatArray]:
        self.evaluations += 1
        psi = np.exp(xi)
        pair, mat = self._matrices(psi)
        try:
            pp = perron_pair(mat, v0=self._v, u0=self._u)
        except DegenerateSpectrum:
            self.fd_fallbacks += 1
            return self.value(xi), self._fd_grad(xi)
        self._v, self._u = pp.v, pp.u
        grad = gradient_components(self.layout, self.dist, pair.a1, pair.a2, pp, psi)
        return math.log(max(pp.rho, RHO_FLOOR)), grad

    def _fd_grad(self, xi: FloatArray, step: float = 1e-6) -> FloatArray:
        grad = np.empty(len(self.coords))
        for k in range(len(self.coords)):
            hi = xi.copy()
            lo = xi.copy()
            hi[k] += step
            lo[k] -= step
            grad[k] = (self.value(hi) - self.value(lo)) / (2 * step)
        return grad


def _barrier_minimize(x0, lo, hi, f_eval, g_eval):
    """Minimize f over {lo < x < hi, g < 0} by a descending log-barrier.

    ``f_eval(x, grad)`` and ``g_eval(x, grad)`` return (value, gradient or
    None). Fixed Armijo backtracking (1e-4, shrink 0.5); barrier weight
    steps down tenfold per stage from 1 to 1e-8; a stage ends when the
    barrier objective moves less than 1e-10.
    """
    x = np.asarray(x0, dtype=np.float64).copy()
    total = 0

    def barrier(fx, gx, point):
        return fx - float(
            np.log(point - lo).sum() + np.log(hi - point).sum() + math.log(-gx)
        ) * mu

    for mu in _MU_SCHEDULE:
        t_start = 1.0
        for _ in range(_INNER_CAP):
            fx, fgrad = f_eval(x, True)
            gx, ggrad = g_eval(x, True)
            phi = barrier(fx, gx, x)
            grad = fgrad - mu * (1.0 / (x - lo) - 1.0 / (hi - x)) - mu * ggrad / gx
            slope = -float(grad @ grad)
            if slope == 0.0:
                break
            t = t_start
            accepted = False
            phi_t = phi
            for _ in range(_MAX_BACKTRACKS):
                trial = x - t * grad
                if np.all(trial > lo) and np.all(trial < hi):
                    gt = g_eval(trial, False)[0]
                    if gt < 0:
                        ft = f_eval(trial, False)[0]
                        phi_t = barrier(ft, gt, trial)
                        if math.isfinite(phi_t) and phi_t <= phi + _ARMIJO * t * slope:
                            accepted = True
                            break
                t *= _SHRINK
            if not accepted:
                break
            x = trial
            total += 1
            t_start = min(1.0, 2.0 * t)
            if abs(phi_t - phi) < _PHI_TOL:
                break
    return x, total


def _feasible_start(lo, hi, g_value, toward_upper: bool):
    """Strictly interior point with g < 0: box center halved toward the
    feasible corner until the constraint clears."""
    margin = 1e-9 * (hi - lo)
    target = (hi - margin) if toward_upper else (lo + margin)
    x = 0.5 * (lo + hi)
    for _ in range(200):
        if g_value(x) < -1e-12:
            return x
        x = 0.5 * (x + target)
    return None


def _activate_constraint(x, lo, hi, g_eval, near: float = 1e-2):
    """Walk a nearly-active constraint the last stretch onto g = 0.

    The barrier leaves the iterate a distance of order mu/lambda inside an
    active constraint; closing that gap along the constraint gradient
    (free coordinates only) changes the objective by O(mu). Points whose
    constraint slack exceeds ``near`` are left alone.
    """
    gx, ggrad = g_eval(x, True)
    if gx >= -1e-10 or gx < -near:
        return x
    free = ((x - lo) > 1e-12) & ((hi - x) > 1e-12)
    direction = np.zeros_like(x)
    direction[free] = ggrad[free]
    denom = float(direction @ direction)
    if denom <= 0:
        return x
    t_lo, t_hi = 0.0, None
    t = -gx / denom
    for _ in range(4):
        cand = np.clip(x + t * direction, lo, hi)
        g_c = g_eval(cand, False)[0]
        if g_c > 0:
            t_hi = t
            break
        t_lo = t
        if g_c >= -1e-10:
            return cand
        t += -g_c / denom
    if t_hi is None:
        return np.clip(x + t_lo * direction, lo, hi)
    for _ in range(80):
        mid = 0.5 * (t_lo + t_hi)
        cand = np.clip(x + mid * direction, lo, hi)
        g_c = g_eval(cand, False)[0]
        if -1e-10 <= g_c <= 0:
            return cand
        if g_c > 0:
            t_hi = mid
        else:
            t_lo = mid
    return np.clip(x + t_lo * direction, lo, hi)


def _restore_constraint(x, lo, hi, g_eval):
    """Newton steps along the constraint gradient until g lands in
    [-1e-10, 1e-12]; returns (point, g value)."""
    gx = None
    for _ in range(8):
        gx, ggrad = g_eval(x, True)
        if -1e-10 <= gx <= 1e-12:
            return x, gx
        free = ((x - lo) > 1e-15) & ((hi - x) > 1e-15)
        direction = np.zeros_like(x)
        direction[free] = ggrad[free]
        denom = float(direction @ direction)
        if denom <= 0:
            return x, gx
        x = np.clip(x - (gx / denom) * direction, lo, hi)
    return x, g_eval(x, False)[0]


def _constrained_polish(x, lo, hi, f_eval, g_eval, rounds: int = 50):
    """Reduced-gradient finisher: descend f along the box faces and the
    active-constraint tangent, restoring g <= 0 after every trial step.
    Plain gradient descent reaches the active set quickly but crawls
    along it; this closes the last stretch."""
    x = x.copy()
    fx = f_eval(x, False)[0]
    for _ in range(rounds):
        _, fgrad = f_eval(x, True)
        gx, ggrad = g_eval(x, True)
        at_lo = (x - lo) <= 1e-12
        at_hi = (hi - x) <= 1e-12
        d = -fgrad
        if gx >= -_ACTIVE_TOL:
            mask = ~(at_lo | at_hi)
            normal = np.where(mask, ggrad, 0.0)
            nn = float(normal @ normal)
            if nn > 0:
                d = d - (float(d @ normal) / nn) * normal
        d[at_lo & (d < 0)] = 0.0
        d[at_hi & (d > 0)] = 0.0
        dd = float(d @ d)
        if dd <= 1e-24:
            break
        improved = False
        t = 1.0
        for _ in range(40):
            cand = np.clip(x + t * d, lo, hi)
            cand, g_c = _restore_constraint(cand, lo, hi, g_eval)
            if g_c <= 1e-12:
                f_c = f_eval(cand, False)[0]
                if f_c <= fx - _ARMIJO * t * dd:
                    x, fx = cand, f_c
                    improved = True
                    break
            t *= _SHRINK
        if not improved:
            break
    return x


def _projected_grad_norm(grad, at_lo, at_hi) -> float:
    pg = grad.copy()
    pg[at_lo] = np.minimum(grad[at_lo], 0.0)
    pg[at_hi] = np.maximum(grad[at_hi], 0.0)
    return float(np.linalg.norm(pg))


def _kkt_converged(f_grad, g_val, g_grad, x, lo, hi):
    """First-order check: small projected gradient, or active constraint
    with a nonnegative least-squares multiplier."""
    at_lo = (x - lo) <= _ACTIVE_TOL
    at_hi = (hi - x) <= _ACTIVE_TOL
    pnorm = _projected_grad_norm(f_grad, at_lo, at_hi)
    details = {
        "projected_grad_norm": pnorm,
        "constraint_value": float(g_val),
        "multiplier": None,
    }
    if pnorm <= _PGRAD_TOL:
        return True, details
    if g_val >= -_ACTIVE_TOL:
        free = ~(at_lo | at_hi)
        denom = float(g_grad[free] @ g_grad[free])
        lam = -float(f_grad[free] @ g_grad[free]) / denom if denom > 0 else 0.0
        details["multiplier"] = lam
        if lam >= -_ACTIVE_TOL:
            return True, details
    return False, details


def _snap_to_bounds(x, lo, hi):
    snapped = x.copy()
    snapped[x - lo <= _SNAP_TOL] = lo[x - lo <= _SNAP_TOL]
    snapped[hi - x <= _SNAP_TOL] = hi[hi - x <= _SNAP_TOL]
    return snapped


def _finalize(x, lo, hi, f_eval, g_eval, relax_upward: bool):
    """Shared post-barrier pipeline: land on the constraint, polish along
    it, snap near-bound coordinates, and grade the KKT conditions.
    ``relax_upward`` names the bound a snap may safely touch without
    risking constraint violation (upper for the budget program, lower for
    the performance program)."""
    x = _activate_constraint(x, lo, hi, g_eval)
    x = _constrained_polish(x, lo, hi, f_eval, g_eval)
    snapped = _snap_to_bounds(x, lo, hi)
    if g_eval(snapped, False)[0] > _ACTIVE_TOL:
        keep = (snapped > x) if relax_upward else (snapped < x)
        snapped = x.copy()
        safe = hi if relax_upward else lo
        snapped[keep] = safe[keep]
    snapped = _activate_constraint(snapped, lo, hi, g_eval)
    _, f_grad = f_eval(snapped, True)
    g_val, g_grad = g_eval(snapped, True)
    converged, kkt = _kkt_converged(f_grad, g_val, g_grad, snapped, lo, hi)
    return snapped, converged, kkt


def _rho_nominal(dsms: DsmSet, dist: FeedbackDistribution) -> float:
    return spectral_radius(generalized_wtm(assemble_transitions(build_wtms(dsms)), dist))


def _model_coords(dsms: DsmSet, model) -> tuple[Coordinate, ...]:
    coords = tuple(model.coords)
    if set(coords) != set(tunable_coordinates(dsms)):
        raise InvariantViolation(
            "model", "cost model coordinates do not match the tunable dependencies"
        )
    return coords


def _result_at(dsms, dist, model, psi_values, rho_before, iterations, converged, diagnostics):
    coords = tuple(model.coords)
    omega = model.omega_vector()
    lo = model.epsilon * omega
    psi_values = np.clip(psi_values, lo, omega)
    psi = {coord: float(v) for coord, v in zip(coords, psi_values)}
    spend = {coord: model.cost_of(coord, psi[coord]) for coord in coords}
    split = total_cost(model, psi)
    rho_after = spectral_radius(
        generalized_wtm(
            assemble_transitions(build_wtms(_with_values(dsms, coords, psi_values))), dist
        )
    )
    diag = dict(diagnostics)
    diag.update({"c_plus": split.c_plus, "c_minus": split.c_minus})
    return AllocationResult(
        psi=psi,
        spend=spend,
        total_cost=split.total,
        rho_before=rho_before,
        rho_after=rho_after,
        iterations=iterations,
        converged=converged,
        diagnostics=diag,
    )


def solve_budget_constrained(
    dsms: DsmSet,
    dist: FeedbackDistribution,
    model,
    budget: float,
) -> AllocationResult:
    """Minimize the feasibility index subject to spending at most ``budget``.

    Solves min log ρ(M(Ξ)) over log(εΩ) ≤ Ξ ≤ log Ω with
    log C⁺(Ξ) ≤ log(budget + C⁻), which is convex in Ξ. A zero budget
    returns the nominal project unchanged.
    """
    if not (budget >= 0 and math.isfinite(budget)):
        raise InvariantViolation("budget", "must be a finite value >= 0")
    coords = _model_coords(dsms, model)
    rho_before = _rho_nominal(dsms, dist)
    omega = model.omega_vector()
    if not coords:
        return _result_at(dsms, dist, model, omega, rho_before, 0, True, {"note": "no tunable"})
    capacity = sum(model.full_cost(c) for c in coords)
    if budget <= _BOX_SLACK * max(capacity, 1.0):
        return _result_at(dsms, dist, model, omega, rho_before, 0, True, {"note": "zero budget"})
    if budget >= capacity * (1.0 - _BOX_SLACK):
        # enough to buy every dependency out; monotonicity pins the corner
        return _result_at(
            dsms, dist, model, model.epsilon * omega, rho_before, 0, True,
            {"note": "budget covers full investment"},
        )
    lo = np.log(model.epsilon * omega)
    hi = np.log(omega)
    spectral = _SpectralObjective(dsms, dist, coords)
    log_cap = math.log(budget + model.c_minus)

    def g_eval(xi, need_grad):
        values = np.exp(xi)
        c_plus = model.positive_cost(values)
        val = math.log(c_plus) - log_cap
        if not need_grad:
            return val, None
        return val, model.positive_cost_grad_xi(values) / c_plus

    def f_eval(xi, need_grad):
        if need_grad:
            return spectral.value_and_grad(xi)
        return spectral.value(xi), None

    x0 = _feasible_start(lo, hi, lambda x: g_eval(x, False)[0], toward_upper=True)
    if x0 is None:
        return _result_at(
            dsms, dist, model, omega, rho_before, 0, True,
            {"note": "budget too small for an interior point"},
        )
    x, iters = _barrier_minimize(x0, lo, hi, f_eval, g_eval)
    snapped, converged, kkt = _finalize(x, lo, hi, f_eval, g_eval, relax_upward=True)
    diagnostics = {
        "fd_fallbacks": spectral.fd_fallbacks,
        "spectral_evaluations": spectral.evaluations,
        **kkt,
    }
    return _result_at(
        dsms, dist, model, np.exp(snapped), rho_before, iters, converged, diagnostics
    )


def solve_performance_constrained(
    dsms: DsmSet,
    dist: FeedbackDistribution,
    model,
    target: float,
) -> AllocationResult:
    """Cheapest allocation achieving feasibility index at most ``target``.

    Solves min log C⁺(Ξ) over the box with log ρ(M(Ξ)) ≤ log target.
    Raises :class:`Infeasible` when even full investment (Ψ = εΩ) leaves
    ρ above the target.
    """
    if not (0 <= target < 1):
        raise InvariantViolation("target", "must lie in [0, 1)")
    coords = _model_coords(dsms, model)
    rho_before = _rho_nominal(dsms, dist)
    omega = model.omega_vector()
    if rho_before <= target:
        return _result_at(
            dsms, dist, model, omega, rho_before, 0, True, {"note": "nominal already meets target"}
        )
    if not coords:
        raise Infeasible(
            f"feasibility index {rho_before!r} exceeds target {target!r} "
            "and no dependency is tunable"
        )
    corner = model.epsilon * omega
    spectral = _SpectralObjective(dsms, dist, coords)
    log_target = math.log(max(target, RHO_FLOOR))
    rho_corner = spectral_radius(
        generalized_wtm(
            assemble_transitions(build_wtms(_with_values(dsms, coords, corner))), dist
        )
    )
    if rho_corner > target:
        raise Infeasible(
            f"target {target!r} is unreachable: full investment still gives "
            f"feasibility index {rho_corner!r}"
        )
    lo = np.log(corner)
    hi = np.log(omega)
    if log_target - math.log(max(rho_corner, RHO_FLOOR)) <= _ACTIVE_TOL:
        # the feasible set is (numerically) the full-investment corner
        return _result_at(
            dsms, dist, model, corner, rho_before, 0, True, {"note": "corner-thin target"}
        )

    def f_eval(xi, need_grad):
        values = np.exp(xi)
        c_plus = model.positive_cost(values)
        val = math.log(c_plus)
        if not need_grad:
            return val, None
        return val, model.positive_cost_grad_xi(values) / c_plus

    def g_eval(xi, need_grad):
        if need_grad:
            val, grad = spectral.value_and_grad(xi)
            return val - log_target, grad
        return spectral.value(xi) - log_target, None

    x0 = _feasible_start(lo, hi, lambda x: g_eval(x, False)[0], toward_upper=False)
    if x0 is None:
        return _result_at(
            dsms, dist, model, corner, rho_before, 0, True, {"note": "target-thin interior"}
        )
    x, iters = _barrier_minimize(x0, lo, hi, f_eval, g_eval)
    snapped, converged, kkt = _finalize(x, lo, hi, f_eval, g_eval, relax_upward=False)
    diagnostics = {
        "fd_fallbacks": spectral.fd_fallbacks,
        "spectral_evaluations": spectral.evaluations,
        **kkt,
    }
    return _result_at(
        dsms, dist, model, np.exp(snapped), rho_before, iters, converged, diagnostics
    )


def eligible_baseline_coordinates(
    dsms: DsmSet, focus_tasks: set[int]
) -> tuple[Coordinate, ...]:
    """Tunable dependencies the proportional baseline invests in: local DSM
    entries touching a focus task, cross-team rows/columns anchored there."""
    m = dsms.m
    for t in focus_tasks:
        if not (1 <= int(t) <= m) or int(t) != t:
            raise InvariantViolation("focus_tasks", f"task {t!r} outside 1..{m}")
    focus = {int(t) for t in focus_tasks}
    out = []
    for coord in tunable_coordinates(dsms):
        sigma, i, j = coord
        if sigma == "L" and (i in focus or j in focus):
            out.append(coord)
        elif sigma == "LS" and j in focus:
            out.append(coord)
        elif sigma == "SL" and i in focus:
            out.append(coord)
    return tuple(out)


def baseline_allocation(
    dsms: DsmSet,
    dist: FeedbackDistribution,
    model,
    budget: float,
    focus_tasks: set[int],
) -> AllocationResult:
    """Proportional benchmark strategy centered on a set of focus tasks.

    Spreads the budget over the eligible dependencies proportionally to
    their nominal strengths, capping each at its full-investment cost and
    redistributing any surplus among the uncapped ones; budget beyond the
    eligible capacity stays unspent.
    """
    if not (budget >= 0 and math.isfinite(budget)):
        raise InvariantViolation("budget", "must be a finite value >= 0")
    coords = _model_coords(dsms, model)
    rho_before = _rho_nominal(dsms, dist)
    eligible = eligible_baseline_coordinates(dsms, focus_tasks)
    caps = {c: model.full_cost(c) for c in eligible}
    weights = {c: model.omega[c] for c in eligible}
    spend = {c: 0.0 for c in eligible}
    active = list(eligible)
    left = float(budget)
    rounds = 0
    while active and left > 0:
        rounds += 1
        total_w = sum(weights[c] for c in active)
        share = {c: left * weights[c] / total_w for c in active}
        over = [c for c in active if share[c] >= caps[c] * (1.0 - 1e-15)]
        if not over:
            for c in active:
                spend[c] = share[c]
            left = 0.0
            break
        for c in over:
            spend[c] = caps[c]
            left -= caps[c]
            active.remove(c)
        left = max(left, 0.0)
    psi_values = np.array(
        [
            model.invert_cost(c, spend[c]) if c in spend and spend[c] > 0 else model.omega[c]
            for c in coords
        ]
    )
    unspent = max(budget - sum(spend.values()), 0.0)
    diagnostics = {
        "eligible": len(eligible),
        "capped": sum(1 for c in eligible if spend[c] >= caps[c] * (1.0 - 1e-12)),
        "unspent": unspent,
    }
    return _result_at(dsms, dist, model, psi_values, rho_before, rounds, True, diagnostics)


def sweep_budget(
    dsms: DsmSet,
    dist: FeedbackDistribution,
    model,
    budgets,
    focus_tasks: set[int] | None = None,
) -> list[dict]:
    """Optimized vs baseline feasibility index across budget levels.

    Returns one record per budget with keys budget, rho_optimized,
    rho_baseline (None when no focus tasks are given), and cost_optimized.
    """
    records = []
    for budget in budgets:
        opt = solve_budget_constrained(dsms, dist, model, float(budget))
        rec = {
            "budget": float(budget),
            "rho_optimized": opt.rho_after,
            "cost_optimized": opt.total_cost,
            "rho_baseline": None,
        }
        if focus_tasks is not None:
            base = baseline_allocation(dsms, dist, model, float(budget), focus_tasks)
            rec["rho_baseline"] = base.rho_after
        records.append(rec)
    return records
