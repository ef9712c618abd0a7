"""Detection of (sigma, delta)-hyperbolic times.

Time ``n`` is hyperbolic for ``x`` when, for every ``1 <= k <= n``,

    sum_{j=n-k}^{n-1} (a_j - log sigma) <= 0          (backward expansion)
    c_{n-k} >= b * k * log sigma                        (slow recurrence to S)

with ``a_j = -log|f'(x_j)|`` and ``c_j = log dist_delta(x_j, S)``.  When S is
empty only the first condition applies.

Both conditions reduce to running minima.  With ``P_0 = 0`` and
``P_n = P_{n-1} + (a_{n-1} - log sigma)`` the first holds iff
``P_n <= min_{m<n} P_m``.  Substituting ``j = n - k`` in the second gives
``c_j + b j log sigma >= b n log sigma`` for all ``j < n``, i.e.
``min_{j<n} Q_j >= b n log sigma`` with ``Q_j = c_j + b j log sigma``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Union

import numba
import numpy as np

from .dynamics import MapModel, OrbitTrace, log_terms
from .errors import DomainError, InvalidOrbitError, ParameterError

__all__ = [
    "HTParams",
    "HTScanResult",
    "Censored",
    "FrequencyReport",
    "b_bound",
    "is_hyperbolic_time_naive",
    "naive_flags",
    "scan_hyperbolic_times",
    "first_ht",
    "frequency_estimate",
    "EnsembleScan",
    "CENSORED",
    "INVALID",
]


def b_bound(beta: float) -> float:
    """Upper bound ``min{1/2, 1/(4 beta)}`` on the recurrence exponent."""
    return 0.5 if beta <= 0 else min(0.5, 1.0 / (4.0 * beta))


@dataclass(frozen=True)
class HTParams:
    sigma: float
    delta: float
    b: float
    beta: float

    def __post_init__(self):
        problems = self.violations(self.sigma, self.delta, self.b, self.beta)
        if problems:
            raise ParameterError("; ".join(problems))

    @staticmethod
    def violations(sigma, delta, b, beta) -> list:
        out = []
        if not 0 < sigma < 1:
            out.append(f"sigma must lie in (0,1), got {sigma}")
        if not delta > 0:
            out.append(f"delta must be positive, got {delta}")
        if not beta >= 0:
            out.append(f"beta must be non-negative, got {beta}")
        elif not 0 < b < b_bound(beta):
            out.append(f"b must satisfy 0 < b < min{{1/2, 1/(4*beta)}} = {b_bound(beta):g} "
                       f"for beta = {beta:g}, got {b}")
        return out

    @classmethod
    def for_map(cls, fmap: MapModel, sigma: float, delta: float,
                b: Optional[float] = None) -> "HTParams":
        """Parameters with ``beta`` taken from the map.

        ``b`` defaults to 99% of its upper bound.
        """
        if b is None:
            b = 0.99 * b_bound(fmap.beta)
        return cls(sigma=sigma, delta=delta, b=b, beta=fmap.beta)

    @property
    def log_sigma(self) -> float:
        return math.log(self.sigma)

    @property
    def b_log_sigma(self) -> float:
        return self.b * math.log(self.sigma)


@dataclass(frozen=True)
class Censored:
    """No hyperbolic time within the first ``at`` iterates."""

    at: int

    def __str__(self):
        return f">{self.at}"


@dataclass(frozen=True)
class HTScanResult:
    """Scan of one orbit; ``flags[n - 1]`` tells whether ``n`` is hyperbolic."""

    flags: np.ndarray
    times: np.ndarray
    first: Union[int, Censored]
    prefix: np.ndarray
    cond2_margin: np.ndarray

    @property
    def N(self) -> int:
        return len(self.flags)


@dataclass(frozen=True)
class FrequencyReport:
    theta_at_N: float
    trailing_min: float


def _check_trace(trace: OrbitTrace, params: HTParams):
    if trace.delta != params.delta:
        raise DomainError(f"trace built with delta={trace.delta}, params use delta={params.delta}")


def is_hyperbolic_time_naive(trace: OrbitTrace, n: int, params: HTParams) -> bool:
    """Check both conditions for every ``k = 1..n`` directly."""
    _check_trace(trace, params)
    if not 1 <= n <= len(trace):
        raise DomainError(f"n = {n} outside 1..{len(trace)}")
    log_sigma = params.log_sigma
    bls = params.b_log_sigma
    total = 0.0
    for k in range(1, n + 1):
        j = n - k
        total += trace.a[j] - log_sigma
        if total > 0.0:
            return False
        if trace.has_singular_set and trace.c[j] < bls * k:
            return False
    return True


@numba.njit(cache=True)
def _naive_kernel(a, c, log_sigma, bls, use_c):
    N = a.size
    flags = np.zeros(N, dtype=np.bool_)
    for n in range(1, N + 1):
        total = 0.0
        ok = True
        for k in range(1, n + 1):
            j = n - k
            total += a[j] - log_sigma
            if total > 0.0:
                ok = False
                break
            if use_c and c[j] < bls * k:
                ok = False
                break
        flags[n - 1] = ok
    return flags


def naive_flags(trace: OrbitTrace, params: HTParams) -> np.ndarray:
    """:func:`is_hyperbolic_time_naive` for every ``n``, compiled.  O(N^2)."""
    _check_trace(trace, params)
    return _naive_kernel(np.ascontiguousarray(trace.a), np.ascontiguousarray(trace.c),
                         params.log_sigma, params.b_log_sigma, trace.has_singular_set)


def scan_hyperbolic_times(trace: OrbitTrace, params: HTParams) -> HTScanResult:
    """All hyperbolic times of a trace in O(N) via two running minima.

    Invalid traces are scanned up to their truncation index.
    """
    _check_trace(trace, params)
    N = len(trace)
    P = np.empty(N + 1)
    P[0] = 0.0
    np.cumsum(trace.a - params.log_sigma, out=P[1:])
    flags = P[1:] <= np.minimum.accumulate(P[:-1])
    if trace.has_singular_set:
        bls = params.b_log_sigma
        q_min = np.minimum.accumulate(trace.c + bls * np.arange(N))
        margin = q_min - bls * np.arange(1, N + 1)
        flags &= margin >= 0
    else:
        margin = np.full(N, np.inf)
    times = np.flatnonzero(flags) + 1
    first = int(times[0]) if times.size else Censored(N)
    return HTScanResult(flags=flags, times=times, first=first, prefix=P[1:], cond2_margin=margin)


def first_ht(trace: OrbitTrace, params: HTParams) -> Union[int, Censored]:
    """First hyperbolic time, or :class:`Censored` at the trace length.

    A trace cut short by a hit on S raises :class:`InvalidOrbitError` unless a
    hyperbolic time occurred before the hit.
    """
    result = scan_hyperbolic_times(trace, params)
    if isinstance(result.first, Censored) and not trace.valid:
        raise InvalidOrbitError(f"orbit hit S at index {trace.hit_index} before any "
                                f"hyperbolic time", trace.hit_index)
    return result.first


def frequency_estimate(result: HTScanResult, N: int) -> FrequencyReport:
    """Fraction of ``1..N`` that are hyperbolic times, and its minimum over
    ``M in [N/2, N]`` as a finite-N stand-in for the liminf."""
    if N <= 0:
        raise DomainError("frequency needs N >= 1")
    if N > result.N:
        raise DomainError(f"N = {N} exceeds scan length {result.N}")
    counts = np.cumsum(result.flags[:N], dtype=np.int64)
    M = np.arange(max(1, math.ceil(N / 2)), N + 1)
    return FrequencyReport(
        theta_at_N=float(counts[N - 1] / N),
        trailing_min=float(np.min(counts[M - 1] / M)),
    )


# first-time codes used by ensemble scans
CENSORED = 0
INVALID = -1


class EnsembleScan:
    """Stream the prefix conditions over a batch of orbits at once.

    Produces exactly the floats :func:`scan_hyperbolic_times` would produce
    on each orbit's trace, without storing orbits.
    """

    def __init__(self, fmap: MapModel, params: HTParams):
        self.fmap = fmap
        self.params = params

    def first_times(self, x0: np.ndarray, T: int) -> np.ndarray:
        """First hyperbolic time per point; :data:`CENSORED` beyond ``T``,
        :data:`INVALID` when the orbit hit S first."""
        fmap, delta = self.fmap, self.params.delta
        ls, bls = self.params.log_sigma, self.params.b_log_sigma
        singular = bool(fmap.singular_set)
        out = np.full(np.size(x0), CENSORED, dtype=np.int64)
        idx = np.arange(out.size)
        x = np.array(x0, dtype=float, ndmin=1)
        P = np.zeros(out.size)
        p_min = np.full(out.size, np.inf)
        q_min = np.full(out.size, np.inf)
        with np.errstate(all="ignore"):
            for n in range(1, T + 1):
                if idx.size == 0:
                    break
                a, c, hit = log_terms(fmap, x, delta)
                p_min = np.minimum(p_min, P)
                P = P + (a - ls)
                ok = P <= p_min
                if singular:
                    q_min = np.minimum(q_min, c + bls * (n - 1))
                    ok &= q_min >= bls * n
                out[idx[hit]] = INVALID
                ok &= ~hit
                out[idx[ok]] = n
                keep = ~(ok | hit)
                if n == T:
                    break
                idx, P, p_min, q_min = idx[keep], P[keep], p_min[keep], q_min[keep]
                x = fmap.step(x[keep])
        return out

    def flags_at(self, x0: np.ndarray, n: int):
        """Whether ``n`` is hyperbolic for each point, plus ``f^n(x)``.

        Returns ``(flags, x_n, invalid)``; ``invalid`` marks orbits that hit
        S among ``x_0..x_n``.
        """
        fmap, delta = self.fmap, self.params.delta
        ls, bls = self.params.log_sigma, self.params.b_log_sigma
        singular = bool(fmap.singular_set)
        x = np.array(x0, dtype=float, ndmin=1)
        P = np.zeros(x.size)
        p_min = np.full(x.size, np.inf)
        q_min = np.full(x.size, np.inf)
        invalid = np.zeros(x.size, dtype=bool)
        with np.errstate(all="ignore"):
            for j in range(n):
                a, c, hit = log_terms(fmap, x, delta)
                invalid |= hit
                p_min = np.minimum(p_min, P)
                P = P + (a - ls)
                if singular:
                    q_min = np.minimum(q_min, c + bls * j)
                x = fmap.step(x)
            _, _, hit = log_terms(fmap, x, delta)
        invalid |= hit
        flags = P <= p_min
        if singular:
            flags &= q_min >= bls * n
        return flags & ~invalid, x, invalid
