"""Distribution, moments and tail diagnostics of the first hyperbolic time.

All ensemble quantities are built from integer counts over uniform initial
points, so they do not depend on the order in which samples are processed.
Censored samples (no hyperbolic time up to the cutoff) are counted, never
imputed.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .dynamics import MapModel, chunk_bounds
from .errors import DomainError, InsufficientDataError
from .hyperbolic import CENSORED, INVALID, EnsembleScan, HTParams
from .measures import CHUNK, sample_valid

__all__ = [
    "HHistogram",
    "MomentReport",
    "h_samples",
    "h_histogram",
    "lp_moment",
    "tail_double_sum",
    "tail_exponent_fit",
    "growth_diagnostic",
    "power_law_histogram",
]


@dataclass(frozen=True)
class HHistogram:
    """``mass[k - 1]`` is the fraction of the ensemble with ``h = k``."""

    T: int
    mass: np.ndarray
    censored: float
    n_samples: int
    seed: Optional[int] = None

    @classmethod
    def from_h(cls, h: np.ndarray, T: int, seed=None) -> "HHistogram":
        """Histogram of first times; 0 (censored) and values above ``T`` count
        as censored at ``T``."""
        h = np.asarray(h)
        seen = (h != CENSORED) & (h <= T)
        counts = np.bincount(h[seen], minlength=T + 1)[1:T + 1]
        n = h.size
        return cls(T=T, mass=counts / n, censored=float(np.count_nonzero(~seen) / n),
                   n_samples=n, seed=seed)

    def k(self) -> np.ndarray:
        return np.arange(1, self.T + 1)


@dataclass(frozen=True)
class MomentReport:
    truncated_moment: float
    lower_bound: bool
    censored_contribution: float


def power_law_histogram(p: float, T: int) -> HHistogram:
    """Synthetic histogram with ``mass(k)`` proportional to ``k^-p`` on ``1..T``."""
    w = np.arange(1, T + 1, dtype=float) ** -p
    return HHistogram(T=T, mass=w / w.sum(), censored=0.0, n_samples=0)


def h_samples(fmap: MapModel, params: HTParams, n_samples: int, T: int, seed: int = 0) -> np.ndarray:
    """First hyperbolic time for ``n_samples`` uniform points; 0 means ``h > T``."""
    if T < 1:
        raise DomainError("cutoff T must be at least 1")
    scan = EnsembleScan(fmap, params)

    def run(x0):
        h = scan.first_times(x0, T)
        return h, h == INVALID

    out = np.empty(n_samples, dtype=np.int64)
    for chunk, lo, hi in chunk_bounds(n_samples, CHUNK):
        _, out[lo:hi] = sample_valid(fmap, hi - lo, seed, chunk, run)
    return out


def h_histogram(fmap: MapModel, params: HTParams, n_samples: int, T: int,
                seed: int = 0) -> HHistogram:
    """Empirical masses ``m(h = k)`` for ``k <= T`` plus the censored fraction."""
    return HHistogram.from_h(h_samples(fmap, params, n_samples, T, seed), T, seed)


def lp_moment(hist: HHistogram, p: float) -> MomentReport:
    """``sum_{k<=T} k^p mass(k)``.

    A lower bound for ``E[h^p]`` whenever mass is censored; the censored part
    is worth at least ``T^p * censored``, reported separately.
    """
    if not p >= 1:
        raise DomainError(f"moment order p must be at least 1, got {p}")
    moment = float(np.sum(hist.k().astype(float) ** p * hist.mass))
    return MomentReport(
        truncated_moment=moment,
        lower_bound=hist.censored > 0,
        censored_contribution=float(hist.T) ** p * hist.censored,
    )


def tail_double_sum(hist: HHistogram, i_max: int) -> float:
    """``sum_{i=2}^{i_max} (i + 1) sum_{k=i}^{T} k mass(k)``."""
    if i_max > hist.T:
        raise DomainError(f"i_max = {i_max} exceeds the cutoff T = {hist.T}")
    if i_max < 2:
        return 0.0
    k = hist.k().astype(float)
    tail = np.cumsum((k * hist.mass)[::-1])[::-1]  # tail[i-1] = sum_{k>=i}
    i = np.arange(2, i_max + 1)
    return float(np.sum((i + 1) * tail[i - 1]))


def tail_exponent_fit(hist: HHistogram, k_min: int = 1) -> float:
    """Empirical tail exponent: minus the slope of ``log mass`` vs ``log k``
    over nonzero masses with ``k >= k_min``."""
    k = hist.k()
    sel = (k >= k_min) & (hist.mass > 0)
    if np.count_nonzero(sel) < 5:
        raise InsufficientDataError(
            f"only {np.count_nonzero(sel)} nonzero masses at k >= {k_min}; need 5")
    slope, _ = np.polyfit(np.log(k[sel]), np.log(hist.mass[sel]), 1)
    return float(-slope)


def growth_diagnostic(fmap: MapModel, params: HTParams, n_samples: int, T_grid,
                      seed: int = 0) -> list:
    """``[(T, E[min(h, T)]), ...]`` over one shared ensemble.

    Censored samples count as ``T`` at every grid point, so the curve is
    non-decreasing by construction.
    """
    grid = [int(t) for t in T_grid]
    if not grid or any(b <= a for a, b in zip(grid, grid[1:])):
        raise DomainError("T_grid must be a non-empty increasing sequence")
    h = h_samples(fmap, params, n_samples, grid[-1], seed)
    h_eff = np.where(h == CENSORED, np.iinfo(np.int64).max, h)
    return [(T, float(np.minimum(h_eff, T).sum() / h.size)) for T in grid]
