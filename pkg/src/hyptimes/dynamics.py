"""One-dimensional maps with a finite singular set, and orbits along them.

Maps act on numpy arrays.  Every orbit in the package, single or ensemble,
is produced by :func:`iterate`, so a point evolved alone and the same point
evolved inside a large batch give bit-identical values.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import DomainError, NumericError, SingularityError

__all__ = [
    "Branch",
    "MapModel",
    "OrbitTrace",
    "HIT_TOLERANCE",
    "eval_map",
    "inv_deriv_norm",
    "dist_to_singular",
    "dist_delta",
    "orbit_trace",
    "orbit_traces",
    "estimate_beta",
    "uniform_points",
    "iterate",
]

# An orbit point this close to S invalidates the trace from that index on.
HIT_TOLERANCE = 1e-15

ArrayMap = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class Branch:
    """A monotone inverse branch ``inverse: [image_lo, image_hi] -> domain``."""

    inverse: ArrayMap
    image_lo: float
    image_hi: float


@dataclass(frozen=True)
class MapModel:
    """A map of an interval ``[lo, hi]`` or of the circle ``[lo, hi)``.

    ``func`` and ``deriv`` must accept and return float arrays.  ``beta`` is
    the declared power-law exponent of ``|f'|`` near ``singular_set``
    (zero when the derivative stays bounded).  ``branches``, when given,
    enumerate the inverse branches and enable exact Ulam matrices.
    """

    name: str
    func: ArrayMap
    deriv: ArrayMap
    lo: float
    hi: float
    circle: bool = False
    singular_set: tuple = ()
    beta: float = 0.0
    branches: tuple = field(default=(), repr=False)

    def __post_init__(self):
        if not self.hi > self.lo:
            raise DomainError(f"{self.name}: empty domain [{self.lo}, {self.hi}]")
        if self.beta < 0:
            raise DomainError(f"{self.name}: beta must be non-negative, got {self.beta}")
        object.__setattr__(self, "singular_set", tuple(float(s) for s in self.singular_set))
        for s in self.singular_set:
            if not self.contains(s):
                raise DomainError(f"{self.name}: singular point {s} outside the domain")

    @property
    def length(self) -> float:
        return self.hi - self.lo

    def contains(self, x) -> bool:
        x = np.asarray(x, dtype=float)
        if self.circle:
            return bool(np.all((x >= self.lo) & (x < self.hi)))
        return bool(np.all((x >= self.lo) & (x <= self.hi)))

    def wrap(self, v: np.ndarray) -> np.ndarray:
        """Reduce circle coordinates to ``[lo, hi)``; identity on intervals.

        Values already in range are returned untouched so that wrapping never
        adds rounding error to in-range points.
        """
        if not self.circle:
            return v
        out = (v < self.lo) | (v >= self.hi)
        if not out.any():
            return v
        v = v.copy()
        v[out] = self.lo + np.mod(v[out] - self.lo, self.length)
        # np.mod can round up to the period itself
        v[v >= self.hi] = self.lo
        return v

    def step(self, x: np.ndarray) -> np.ndarray:
        # long double input stays long double (used for fine pair separations)
        dtype = np.longdouble if np.asarray(x).dtype == np.longdouble else float
        return self.wrap(np.asarray(self.func(x), dtype=dtype))

    def check(self, grid_size: int = 1001, tol: float = 1e-12) -> None:
        """Check self-mapping and ``f' != 0`` off S on a uniform grid."""
        if self.circle:
            grid = np.linspace(self.lo, self.hi, grid_size, endpoint=False)
        else:
            grid = np.linspace(self.lo, self.hi, grid_size)
        grid = grid[dist_to_singular(self, grid) > HIT_TOLERANCE]
        with np.errstate(all="ignore"):
            raw = np.asarray(self.func(grid), dtype=float)
            slope = np.asarray(self.deriv(grid), dtype=float)
        if not self.circle:
            bad = (raw < self.lo - tol) | (raw > self.hi + tol)
            if bad.any():
                x = grid[np.argmax(bad)]
                raise DomainError(f"{self.name}: f({x}) leaves [{self.lo}, {self.hi}]")
        if not np.all(np.abs(slope) > 0):
            x = grid[np.argmax(~(np.abs(slope) > 0))]
            raise DomainError(f"{self.name}: f'({x}) vanishes off the singular set")


@dataclass(frozen=True)
class OrbitTrace:
    """A finite orbit ``x_0..x_N`` with its two log sequences.

    ``a[j] = -log|f'(x_j)|`` and ``c[j] = log dist_delta(x_j, S)``, both in
    nats.  When the orbit hits S at index ``j`` the trace is cut there:
    ``x`` ends with the hitting point, ``a`` and ``c`` have length ``j`` and
    ``valid`` is False.
    """

    x: np.ndarray
    a: np.ndarray
    c: np.ndarray
    delta: float
    valid: bool
    has_singular_set: bool
    map_name: str = ""

    def __post_init__(self):
        for arr in (self.x, self.a, self.c):
            arr.setflags(write=False)

    def __len__(self) -> int:
        return len(self.a)

    @property
    def hit_index(self) -> Optional[int]:
        """Index of the orbit point that hit S, or None for valid traces."""
        return None if self.valid else len(self.x) - 1


def _as_array(x) -> np.ndarray:
    return np.atleast_1d(np.asarray(x, dtype=float))


def eval_map(fmap: MapModel, x):
    """Return ``f(x)`` wrapped into the domain; scalar in, scalar out."""
    arr = _as_array(x)
    if not fmap.contains(arr):
        raise DomainError(f"{x} is outside the domain of {fmap.name}")
    out = fmap.step(arr)
    return float(out[0]) if np.ndim(x) == 0 else out


def dist_to_singular(fmap: MapModel, x) -> np.ndarray:
    """Distance to the nearest singular point (arc metric on circles).

    Returns ``inf`` everywhere when S is empty.
    """
    x = np.asarray(x, dtype=float)
    if not fmap.singular_set:
        return np.full(x.shape, np.inf)
    d = np.stack([np.abs(x - s) for s in fmap.singular_set])
    if fmap.circle:
        d = np.mod(d, fmap.length)
        d = np.minimum(d, fmap.length - d)
    return d.min(axis=0)


def inv_deriv_norm(fmap: MapModel, x):
    """``1/|f'(x)|``; raises :class:`SingularityError` on S."""
    arr = _as_array(x)
    if np.any(dist_to_singular(fmap, arr) == 0.0):
        raise SingularityError(f"{x} lies on the singular set of {fmap.name}")
    out = 1.0 / np.abs(np.asarray(fmap.deriv(arr), dtype=float))
    return float(out[0]) if np.ndim(x) == 0 else out


def _truncate(d: np.ndarray, delta: float) -> np.ndarray:
    return np.where(d <= delta, d, 1.0)


def dist_delta(x, fmap: MapModel, delta: float):
    """Distance to S when it is at most ``delta``, and 1 otherwise."""
    if not delta > 0:
        raise DomainError(f"delta must be positive, got {delta}")
    arr = _as_array(x)
    out = _truncate(dist_to_singular(fmap, arr), delta)
    return float(out[0]) if np.ndim(x) == 0 else out


def log_terms(fmap: MapModel, x: np.ndarray, delta: float):
    """Per-point ``(a, c, hit)`` for an array of orbit points."""
    d = dist_to_singular(fmap, x)
    hit = d <= HIT_TOLERANCE
    with np.errstate(divide="ignore", invalid="ignore"):
        a = -np.log(np.abs(np.asarray(fmap.deriv(x), dtype=float)))
    c = np.log(_truncate(d, delta))
    return a, c, hit


def iterate(fmap: MapModel, x0: np.ndarray, n_steps: int, dtype=float):
    """Evolve a batch for ``n_steps``; returns ``(X, hit_at)``.

    ``X`` has shape ``(n_steps + 1, m)`` and the given ``dtype`` (float, or
    ``np.longdouble`` for maps written with dtype-preserving numpy calls).  ``hit_at[i]`` is the first index at
    which orbit ``i`` came within :data:`HIT_TOLERANCE` of S, or -1.  Orbits
    keep being evolved after a hit; callers truncate.
    """
    x = np.array(x0, dtype=dtype, ndmin=1)
    X = np.empty((n_steps + 1, x.size), dtype=dtype)
    X[0] = x
    with np.errstate(all="ignore"):
        for j in range(n_steps):
            x = fmap.step(x)
            X[j + 1] = x
    hits = dist_to_singular(fmap, X) <= HIT_TOLERANCE
    hit_at = np.where(hits.any(axis=0), hits.argmax(axis=0), -1)
    return X, hit_at


def orbit_traces(fmap: MapModel, x0s, N: int, delta: float) -> list:
    """:func:`orbit_trace` for many initial points at once."""
    x0s = _as_array(x0s)
    if not fmap.contains(x0s):
        raise DomainError(f"initial points outside the domain of {fmap.name}")
    if N < 0:
        raise DomainError(f"orbit length must be non-negative, got {N}")
    if not delta > 0:
        raise DomainError(f"delta must be positive, got {delta}")
    X, hit_at = iterate(fmap, x0s, N)
    traces = []
    for i in range(x0s.size):
        stop = N if hit_at[i] < 0 else hit_at[i]
        x = X[: stop + 1, i].copy()
        a, c, _ = log_terms(fmap, x[:stop], delta)
        bad = ~np.isfinite(x)
        if bad.any():
            raise NumericError(f"non-finite orbit value at index {bad.argmax()}", int(bad.argmax()))
        bad = ~(np.isfinite(a) & np.isfinite(c))
        if bad.any():
            raise NumericError(f"non-finite log term at index {bad.argmax()}", int(bad.argmax()))
        traces.append(OrbitTrace(
            x=x, a=a, c=c, delta=float(delta), valid=bool(hit_at[i] < 0),
            has_singular_set=bool(fmap.singular_set), map_name=fmap.name,
        ))
    return traces


def orbit_trace(fmap: MapModel, x0: float, N: int, delta: float) -> OrbitTrace:
    """Orbit of ``x0`` with ``N`` steps plus the ``a`` and ``c`` sequences."""
    return orbit_traces(fmap, [x0], N, delta)[0]


def estimate_beta(fmap: MapModel, n_samples: int = 200, radius: float = 1e-2,
                  decades: float = 8.0) -> float:
    """Pooled slope of ``log|f'|`` against ``-log dist(x, S)`` near S.

    Sample distances are log-uniform on ``(radius * 10**-decades, radius)``
    on both sides of every singular point; sides falling outside an interval
    domain are skipped.
    """
    if not fmap.singular_set:
        raise DomainError(f"{fmap.name} has no singular set; beta is not defined")
    if not 0 < radius < fmap.length / 2:
        raise DomainError(f"radius {radius} must lie in (0, {fmap.length / 2})")
    dist = radius * np.logspace(-decades, 0, n_samples, endpoint=False)
    xs, ds = [], []
    for s in fmap.singular_set:
        for side in (-1.0, 1.0):
            pts = s + side * dist
            if fmap.circle:
                pts = fmap.wrap(pts)
            elif (side < 0 and s - radius < fmap.lo) or (side > 0 and s + radius > fmap.hi):
                continue
            xs.append(pts)
            ds.append(dist)
    x = np.concatenate(xs)
    d = np.concatenate(ds)
    logd = np.log(np.abs(np.asarray(fmap.deriv(x), dtype=float)))
    slope, _ = np.polyfit(-np.log(d), logd, 1)
    return float(slope)


def uniform_points(fmap: MapModel, n: int, rng: np.random.Generator) -> np.ndarray:
    """``n`` points distributed by normalized Lebesgue measure on the domain."""
    x = fmap.lo + fmap.length * rng.random(n)
    if fmap.circle:
        x = fmap.wrap(x)
    else:
        np.clip(x, fmap.lo, fmap.hi, out=x)
    return x


def seeded_rng(seed: int, *stream: int) -> np.random.Generator:
    """Generator for substream ``stream`` of ``seed``."""
    return np.random.default_rng([int(seed), *map(int, stream)])


def chunk_bounds(n: int, chunk: int) -> Sequence[tuple]:
    return [(i, lo, min(lo + chunk, n)) for i, lo in enumerate(range(0, n, chunk))]
