"""Shared instance factories for the test suite."""
from pathlib import Path

import numpy as np
import pytest

from pdopt.model import (
    DsmSet, FeedbackDistribution, assemble_transitions, build_wtms,
    generalized_wtm,
)

DATA_DIR = Path(__file__).resolve().parent.parent / "data"


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy=seed)))


def random_dsms(rng: np.random.Generator, m: int, density: float = 0.5,
                coupling: float = 0.3) -> DsmSet:
    """Random valid instance; IDM diagonals always present so a
    cross-team loop exists."""
    def offdiag(scale):
        mat = rng.uniform(0.05, scale, size=(m, m))
        mat *= rng.random(size=(m, m)) < density
        np.fill_diagonal(mat, 0.0)
        return mat

    omega_l = offdiag(coupling)
    np.fill_diagonal(omega_l, rng.uniform(0.25, 0.95, size=m))
    omega_s = offdiag(coupling)
    np.fill_diagonal(omega_s, rng.uniform(0.25, 0.95, size=m))
    omega_ls = offdiag(coupling)
    np.fill_diagonal(omega_ls, rng.uniform(0.1, coupling + 0.3, size=m))
    omega_sl = offdiag(coupling)
    np.fill_diagonal(omega_sl, rng.uniform(0.1, coupling + 0.3, size=m))
    return DsmSet(omega_l=omega_l, omega_s=omega_s,
                  omega_ls=omega_ls, omega_sl=omega_sl)


def random_pmf(rng: np.random.Generator) -> FeedbackDistribution:
    support = sorted(rng.choice(np.arange(1, 7), size=rng.integers(1, 4),
                                replace=False).tolist())
    probs = rng.dirichlet(np.ones(len(support)))
    return FeedbackDistribution({int(h): float(p) for h, p in zip(support, probs)})


def rho_of(dsms: DsmSet, dist: FeedbackDistribution) -> float:
    mat = generalized_wtm(assemble_transitions(build_wtms(dsms)), dist)
    return float(np.abs(np.linalg.eigvals(mat)).max())


def rescale_couplings(dsms: DsmSet, s: float) -> DsmSet:
    """Scale every tunable dependency by s, keeping completion
    coefficients fixed."""
    def off(mat):
        out = mat * s
        np.fill_diagonal(out, np.diag(mat))
        return out

    return DsmSet(omega_l=off(dsms.omega_l), omega_s=off(dsms.omega_s),
                  omega_ls=dsms.omega_ls * s, omega_sl=dsms.omega_sl * s)


def instance_in_band(rng: np.random.Generator, m: int,
                     dist: FeedbackDistribution, lo: float, hi: float,
                     max_tries: int = 60) -> DsmSet | None:
    """Draw an instance and rescale its couplings until rho lands in
    [lo, hi]; rho is entrywise monotone so bisection works."""
    for _ in range(max_tries):
        dsms = random_dsms(rng, m, density=0.6, coupling=0.4)
        s_hi = 1.0
        tries = 0
        while rho_of(rescale_couplings(dsms, s_hi), dist) < lo:
            s_hi *= 2.0
            tries += 1
            if tries > 40:
                break
        else:
            s_lo = 0.0
            for _ in range(80):
                mid = 0.5 * (s_lo + s_hi)
                r = rho_of(rescale_couplings(dsms, mid), dist)
                if r < lo:
                    s_lo = mid
                elif r > hi:
                    s_hi = mid
                else:
                    return rescale_couplings(dsms, mid)
        continue
    return None


@pytest.fixture
def m3_instance():
    """Fixed coupled m=3 instance, rho about 0.70."""
    dsms = DsmSet(
        omega_l=np.array([[0.5, 0.3, 0.0], [0.0, 0.6, 0.2], [0.25, 0.0, 0.55]]),
        omega_s=np.array([[0.5, 0.0, 0.1], [0.15, 0.7, 0.0], [0.0, 0.2, 0.5]]),
        omega_ls=np.array([[0.6, 0.0, 0.0], [0.0, 0.5, 0.2], [0.0, 0.0, 0.4]]),
        omega_sl=np.array([[0.45, 0.1, 0.0], [0.0, 0.5, 0.0], [0.2, 0.0, 0.35]]),
    )
    dist = FeedbackDistribution({2: 0.25, 3: 0.5, 4: 0.25})
    return dsms, dist


@pytest.fixture
def m2_instance():
    """Small instance where both cross couplings matter."""
    dsms = DsmSet(
        omega_l=np.array([[0.5, 0.2], [0.15, 0.6]]),
        omega_s=np.array([[0.55, 0.0], [0.1, 0.7]]),
        omega_ls=np.array([[0.6, 0.25], [0.0, 0.45]]),
        omega_sl=np.array([[0.5, 0.1], [0.2, 0.4]]),
    )
    dist = FeedbackDistribution({1: 0.3, 2: 0.4, 3: 0.3})
    return dsms, dist
