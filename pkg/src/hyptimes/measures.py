"""Push-forward histograms, Ulam densities, Birkhoff averages and
nearby-orbit checks at hyperbolic times."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import numpy as np

from .dynamics import (MapModel, OrbitTrace, dist_to_singular, iterate, orbit_traces,
                       seeded_rng, uniform_points, chunk_bounds, HIT_TOLERANCE)
from .errors import (ConvergenceError, DiscretizationError, DomainError, InconclusiveCheck,
                     SamplingError)
from .hyperbolic import EnsembleScan, HTParams

__all__ = [
    "DensityHistogram",
    "UlamOperator",
    "HTDensityReport",
    "pushforward_histogram",
    "ulam_matrix",
    "stationary_density",
    "ht_density_bound",
    "birkhoff_expansion",
    "birkhoff_recurrence",
    "suggest_sigma",
    "contraction_check",
    "distortion_check",
    "sample_valid",
    "CHUNK",
]

# samples per RNG substream; results do not depend on how chunks are scheduled
CHUNK = 8192
MAX_RETRIES = 10


@dataclass(frozen=True)
class DensityHistogram:
    edges: np.ndarray
    mass: np.ndarray
    counts: Optional[np.ndarray] = None

    @property
    def bins(self) -> int:
        return len(self.mass)

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.edges)

    @property
    def density(self) -> np.ndarray:
        return self.mass / self.widths

    @classmethod
    def from_counts(cls, edges, counts) -> "DensityHistogram":
        counts = np.asarray(counts, dtype=np.int64)
        total = counts.sum()
        if total == 0:
            raise DomainError("cannot normalize an empty histogram")
        return cls(edges=np.asarray(edges, dtype=float), mass=counts / total, counts=counts)


@dataclass(frozen=True)
class UlamOperator:
    """Row-stochastic transition matrix between ``k`` equal cells."""

    matrix: np.ndarray
    edges: np.ndarray

    @property
    def k(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True)
class HTDensityReport:
    histogram: Optional[DensityHistogram]
    sup_density: float
    mass: float

    @property
    def zero_mass(self) -> bool:
        return self.histogram is None


def _edges(fmap: MapModel, bins: int) -> np.ndarray:
    return np.linspace(fmap.lo, fmap.hi, bins + 1)


def _bin_counts(fmap: MapModel, x: np.ndarray, bins: int) -> np.ndarray:
    idx = np.floor((x - fmap.lo) / fmap.length * bins).astype(np.int64)
    np.clip(idx, 0, bins - 1, out=idx)
    return np.bincount(idx.ravel(), minlength=bins)


def sample_valid(fmap: MapModel, n: int, seed: int, chunk: int, run):
    """Draw chunk ``chunk`` of ``n`` uniform points and apply ``run``.

    ``run(x0)`` returns ``(result, invalid)``, where ``result`` is an array
    (or tuple of arrays) indexed by sample.  Samples whose orbits hit S are
    redrawn from a dedicated substream, up to ``MAX_RETRIES`` rounds.
    """
    x0 = uniform_points(fmap, n, seeded_rng(seed, chunk))
    result, invalid = run(x0)
    single = not isinstance(result, tuple)
    parts = [result] if single else list(result)
    todo = np.flatnonzero(invalid)
    for attempt in range(1, MAX_RETRIES + 1):
        if todo.size == 0:
            break
        x0[todo] = uniform_points(fmap, todo.size, seeded_rng(seed, chunk, attempt))
        sub, bad = run(x0[todo])
        sub = [sub] if single else list(sub)
        for part, new in zip(parts, sub):
            part[todo] = new
        todo = todo[bad]
    if todo.size:
        raise SamplingError(f"{todo.size} orbits still hit S after {MAX_RETRIES} redraws")
    return x0, (parts[0] if single else tuple(parts))


def pushforward_histogram(fmap: MapModel, n: int, n_samples: int, bins: int,
                          seed: int = 0) -> DensityHistogram:
    """Histogram of ``mu_n = (1/n) sum_{j<n} f^j_* m`` from uniform samples.

    Every sample contributes its orbit points ``x_0..x_{n-1}`` with equal
    weight; masses are exact integer counts divided by ``n * n_samples``.
    """
    if n < 1:
        raise DomainError("n must be at least 1")
    if n_samples < bins:
        raise DomainError("n_samples must be at least bins")

    def run(x0):
        X, hit_at = iterate(fmap, x0, n - 1)
        return X.T.copy(), hit_at >= 0

    counts = np.zeros(bins, dtype=np.int64)
    for chunk, lo, hi in chunk_bounds(n_samples, CHUNK):
        _, orbits = sample_valid(fmap, hi - lo, seed, chunk, run)
        counts += _bin_counts(fmap, orbits, bins)
    return DensityHistogram.from_counts(_edges(fmap, bins), counts)


def _branch_matrix(fmap: MapModel, edges: np.ndarray) -> np.ndarray:
    k = len(edges) - 1
    width = edges[1] - edges[0]
    P = np.zeros((k, k))
    lo_i, hi_i = edges[:-1, None], edges[1:, None]
    for br in fmap.branches:
        a = np.clip(edges[:-1], br.image_lo, br.image_hi)
        b = np.clip(edges[1:], br.image_lo, br.image_hi)
        ga, gb = br.inverse(a), br.inverse(b)
        u, v = np.minimum(ga, gb), np.maximum(ga, gb)
        overlap = np.minimum(v[None, :], hi_i) - np.maximum(u[None, :], lo_i)
        P += np.maximum(overlap, 0.0)
    return P / width


def ulam_matrix(fmap: MapModel, k: int, samples_per_cell: int = 1000, seed: int = 0,
                method: str = "auto") -> UlamOperator:
    """Ulam discretization of the transfer operator on ``k`` equal cells.

    ``method="branches"`` integrates inverse branches exactly;
    ``"montecarlo"`` maps ``samples_per_cell`` uniform points per cell;
    ``"auto"`` uses branches when the map declares them.
    """
    if k < 2:
        raise DomainError("Ulam partition needs k >= 2")
    if method == "auto":
        method = "branches" if fmap.branches else "montecarlo"
    edges = _edges(fmap, k)
    if method == "branches":
        if not fmap.branches:
            raise DomainError(f"{fmap.name} declares no inverse branches")
        return UlamOperator(_branch_matrix(fmap, edges), edges)
    if method != "montecarlo":
        raise DomainError(f"unknown Ulam method {method!r}")
    P = np.zeros((k, k))
    width = edges[1] - edges[0]
    for i in range(k):
        rng = seeded_rng(seed, i)
        x = edges[i] + width * rng.random(samples_per_cell)
        x = x[dist_to_singular(fmap, x) > HIT_TOLERANCE]
        if x.size == 0:
            raise DiscretizationError(f"cell {i} has no valid samples")
        counts = _bin_counts(fmap, fmap.step(x), k)
        P[i] = counts / x.size
    return UlamOperator(P, edges)


def stationary_density(op: UlamOperator, tol: float = 1e-12, max_iter: int = 100000,
                       start: Optional[np.ndarray] = None) -> DensityHistogram:
    """Left fixed vector of the Ulam matrix by power iteration.

    Stops when ``||pi P - pi||_1 <= tol``.  Starts from the uniform vector
    unless ``start`` is given.
    """
    k = op.k
    pi = np.full(k, 1.0 / k) if start is None else np.asarray(start, dtype=float) / np.sum(start)
    residual = math.inf
    for _ in range(max_iter):
        nxt = pi @ op.matrix
        nxt /= nxt.sum()
        residual = float(np.abs(nxt - pi).sum())
        pi = nxt
        if residual <= tol:
            return DensityHistogram(edges=op.edges, mass=pi)
    raise ConvergenceError(f"power iteration stalled at L1 residual {residual:.3e}", residual)


def ht_density_bound(fmap: MapModel, params: HTParams, n: int, n_samples: int, bins: int,
                     seed: int = 0) -> HTDensityReport:
    """Density of ``f^n`` pushed from the points for which ``n`` is hyperbolic.

    The histogram is normalized by the mass of that set, so ``sup_density``
    is an empirical stand-in for the uniform density bound at hyperbolic
    times.  ``mass`` is the fraction of samples in the set.
    """
    if n < 1:
        raise DomainError("n must be at least 1")
    scan = EnsembleScan(fmap, params)

    def run(x0):
        flags, xn, invalid = scan.flags_at(x0, n)
        return (flags, xn), invalid

    counts = np.zeros(bins, dtype=np.int64)
    members = 0
    for chunk, lo, hi in chunk_bounds(n_samples, CHUNK):
        _, (flags, xn) = sample_valid(fmap, hi - lo, seed, chunk, run)
        counts += _bin_counts(fmap, xn[flags], bins)
        members += int(flags.sum())
    if members == 0:
        return HTDensityReport(histogram=None, sup_density=0.0, mass=0.0)
    hist = DensityHistogram.from_counts(_edges(fmap, bins), counts)
    return HTDensityReport(histogram=hist, sup_density=float(hist.density.max()),
                           mass=members / n_samples)


def _exact_mean(values: np.ndarray) -> float:
    # Correctly rounded mean: exact dyadic sum, one rounding at the end.
    if values.size == 0:
        raise DomainError("mean of an empty sequence")
    mant, expo = np.frexp(values)
    ints = (mant * 2.0**53).astype(np.int64)
    shift = expo - 53
    base = int(shift.min())
    total = sum(int(m) << int(s - base) for m, s in zip(ints.tolist(), shift.tolist()))
    return float(Fraction(total, values.size) * Fraction(2) ** base)


def birkhoff_expansion(trace: OrbitTrace, n: Optional[int] = None) -> float:
    """``(1/n) sum_{j<n} log 1/|f'(x_j)|``."""
    n = len(trace) if n is None else n
    if not 1 <= n <= len(trace):
        raise DomainError(f"n = {n} outside 1..{len(trace)}")
    return _exact_mean(np.asarray(trace.a[:n]))


def birkhoff_recurrence(trace: OrbitTrace, n: Optional[int] = None) -> float:
    """``(1/n) sum_{j<n} -log dist_delta(x_j, S)``; 0 when S is empty."""
    n = len(trace) if n is None else n
    if not 1 <= n <= len(trace):
        raise DomainError(f"n = {n} outside 1..{len(trace)}")
    return _exact_mean(-np.asarray(trace.c[:n]))


def suggest_sigma(fmap: MapModel, n: int = 100000, n_orbits: int = 4, seed: int = 0):
    """``(sigma, lyapunov)`` with ``sigma = exp(-lyapunov / 2)``.

    The Lyapunov exponent is minus the mean expansion average over
    ``n_orbits`` random orbits of length ``n``.
    """
    def run(x0):
        X, hit_at = iterate(fmap, x0, n)
        return x0.copy(), hit_at >= 0

    x0, _ = sample_valid(fmap, n_orbits, seed, 0, run)
    traces = orbit_traces(fmap, x0, n, delta=1.0)
    lyap = -float(np.mean([birkhoff_expansion(t) for t in traces]))
    if not lyap > 0:
        raise DomainError(f"{fmap.name} shows no expansion (lyapunov estimate {lyap:.3g})")
    return math.exp(-lyap / 2.0), lyap


def _arc(fmap: MapModel, y, z):
    d = np.abs(np.asarray(y) - np.asarray(z))
    if fmap.circle:
        d = np.minimum(d, fmap.length - d)
    return d


def _straddles(fmap: MapModel, y: np.ndarray, z: np.ndarray) -> bool:
    """Whether some pair segment ``[y_j, z_j]`` (short arc) contains a point of S."""
    if not fmap.singular_set:
        return False
    sep = _arc(fmap, y, z)
    return bool(np.any(dist_to_singular(fmap, y) + dist_to_singular(fmap, z) <= sep + 1e-300))


def _pair(fmap: MapModel, x: float, n: int, eps: float, image_radius: Optional[float]):
    """Orbits of ``x - e, x, x + e`` with ``e <= eps`` halved until the pairs
    track the orbit: no segment crosses S before time ``n`` and, when given,
    the image separation stays within ``image_radius``.

    Strongly expanding orbits can need ``e`` below double resolution; the
    search then continues in long double, where available.
    """
    dtypes = [float]
    if np.finfo(np.longdouble).eps < np.finfo(float).eps:
        dtypes.append(np.longdouble)
    e = eps
    for dtype in dtypes:
        floor = 1e3 * float(np.finfo(dtype).eps) * fmap.length
        while e >= floor:
            xd = dtype(x)
            pts = np.array([xd - dtype(e), xd, xd + dtype(e)], dtype=dtype)
            if fmap.circle:
                pts = fmap.wrap(pts)
            elif pts[0] < fmap.lo or pts[2] > fmap.hi:
                e /= 2
                continue
            X, hit_at = iterate(fmap, pts, n, dtype=dtype)
            ok = np.all(np.isfinite(X)) and np.all(hit_at < 0)
            ok = ok and not _straddles(fmap, X[:n, 0], X[:n, 1]) \
                and not _straddles(fmap, X[:n, 1], X[:n, 2])
            if ok and image_radius is not None:
                ok = max(_arc(fmap, X[n, 0], X[n, 1]), _arc(fmap, X[n, 1], X[n, 2])) <= image_radius
            if ok:
                return X, e
            e /= 2
    raise InconclusiveCheck(f"no separation >= {floor:g} tracks the orbit of {x} up to n = {n}")


def contraction_check(fmap: MapModel, x: float, n: int, params: HTParams, eps: float = 1e-9,
                      image_radius: Optional[float] = None) -> float:
    """Largest ratio ``dist(f^{n-k} y, f^{n-k} z) / (sigma^{k/2} dist(f^n y, f^n z))``
    over ``k = 1..n-1`` and the two symmetric pairs around ``x``.

    Values ``<= 1`` mean backward contraction held along the pair.  The
    image separation is kept within ``image_radius`` (default ``delta``).
    """
    if n < 2:
        raise DomainError("contraction needs n >= 2 (k ranges over 1..n-1)")
    X, _ = _pair(fmap, x, n, eps, params.delta if image_radius is None else image_radius)
    k = np.arange(1, n)
    worst = 0.0
    for lo, hi in ((0, 1), (1, 2)):
        d = _arc(fmap, X[:, lo], X[:, hi])
        ratio = d[n - k] / (params.sigma ** (k / 2.0) * d[n])
        worst = max(worst, float(ratio.max()))
    return worst


def distortion_check(fmap: MapModel, x: float, n: int, params: HTParams, eps: float = 1e-9,
                     image_radius: Optional[float] = None) -> float:
    """Largest ``|Df^n(y)| / |Df^n(z)|`` over pairs from ``{x - e, x, x + e}``.

    The separation ``e`` starts at ``eps`` and is halved until the images
    lie within ``image_radius`` (default ``delta``); passing a large ``eps``
    therefore fixes the image neighbourhood size across different ``n``.
    """
    X, _ = _pair(fmap, x, n, eps, params.delta if image_radius is None else image_radius)
    with np.errstate(divide="ignore"):
        logd = np.log(np.abs(np.asarray(fmap.deriv(X[:n].ravel()), dtype=float))).reshape(n, 3)
    totals = logd.sum(axis=0)
    return float(math.exp(totals.max() - totals.min()))
