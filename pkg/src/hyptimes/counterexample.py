"""Exact and floating checks on the square-root circle map.

The map ``f(x) = 2 sqrt(x) - 1`` (``x >= 0``), ``1 - 2 sqrt|x|`` (``x < 0``)
has the inverse branch ``g(x) = (1 + x)^2 / 4`` from ``(-1, 1)`` onto
``(0, 1)``.  The points ``x_n = g^n(0)`` increase to the neutral fixed point
1, and ``sum_n n (x_{n+1} - x_n)`` bounds the integral of the first
hyperbolic time from below.  Its partial sums grow like ``4 log N``.

Floating values use ``y_n = 1 - x_n``, which obeys
``y_{n+1} = y_n - y_n^2 / 4`` because ``1 - g(x) = (1 - x)(3 + x) / 4``; this
avoids the cancellation in ``1 - x_n`` near 1.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from fractions import Fraction
from typing import Union

import numpy as np

from .dynamics import eval_map
from .errors import DomainError, InvalidOrbitError
from .maps import paper_sqrt

__all__ = [
    "ExactBudgetWarning",
    "RationalSequence",
    "inverse_branch_g",
    "xn_sequence",
    "y_sequence",
    "series_partial",
    "series_partial_sums",
    "branch_derivative_sum",
    "CheckResult",
    "verify",
]

BIT_BUDGET = 10**6


class ExactBudgetWarning(UserWarning):
    """Exact iteration stopped because values outgrew the bit budget."""


def inverse_branch_g(y):
    """``(1 + y)^2 / 4``; exact for :class:`~fractions.Fraction` input."""
    if isinstance(y, (Fraction, int)):
        y = Fraction(y)
        if not -1 < y < 1:
            raise DomainError(f"g is defined on (-1, 1), got {y}")
        return (1 + y) ** 2 / 4
    arr = np.asarray(y, dtype=float)
    if np.any((arr <= -1) | (arr >= 1)):
        raise DomainError("g is defined on (-1, 1)")
    out = (1.0 + arr) ** 2 / 4.0
    return float(out) if np.ndim(y) == 0 else out


@dataclass(frozen=True)
class RationalSequence:
    """``exact[n - 1] = x_n`` while within budget; ``y[n - 1] = 1 - x_n`` always."""

    exact: tuple
    y: np.ndarray

    @property
    def x(self) -> np.ndarray:
        return 1.0 - self.y

    def __len__(self):
        return len(self.y)


def _bits(q: Fraction) -> int:
    return q.numerator.bit_length() + q.denominator.bit_length()


def y_sequence(N: int) -> np.ndarray:
    """``y_n = 1 - x_n`` for ``n = 1..N`` in double precision."""
    if N < 1:
        raise DomainError("N must be at least 1")
    y = np.empty(N)
    v = 1.0
    for i in range(N):
        v = v - v * v / 4.0
        y[i] = v
    return y


def xn_sequence(N: int, mode: str = "exact", bit_budget: int = BIT_BUDGET) -> RationalSequence:
    """``x_n = g^n(0)`` for ``n = 1..N``.

    In exact mode rationals are kept until one exceeds ``bit_budget`` bits
    (numerator plus denominator); iteration then continues in floating point
    only and an :class:`ExactBudgetWarning` is issued.
    """
    if N < 1:
        raise DomainError("N must be at least 1")
    if mode not in ("exact", "float"):
        raise DomainError(f"mode must be exact or float, got {mode!r}")
    exact = []
    if mode == "exact":
        x = Fraction(0)
        for n in range(1, N + 1):
            x = (1 + x) ** 2 / 4
            if _bits(x) > bit_budget:
                warnings.warn(f"exact x_n exceeds {bit_budget} bits at n = {n}; "
                              f"continuing in floating point", ExactBudgetWarning, stacklevel=2)
                break
            exact.append(x)
    return RationalSequence(exact=tuple(exact), y=y_sequence(N))


def series_partial_sums(N: int) -> np.ndarray:
    """Floating partial sums ``S_M = sum_{n<=M} n (x_{n+1} - x_n)``, ``M = 1..N``."""
    y = y_sequence(N)
    n = np.arange(1, N + 1)
    return np.cumsum(n * (y * y / 4.0))


def series_partial(N: int, mode: str = "auto", bit_budget: int = BIT_BUDGET) -> Union[Fraction, float]:
    """``sum_{n=1}^{N} n (x_{n+1} - x_n)``.

    ``mode="exact"`` returns a Fraction (warning and falling back to float
    past the bit budget), ``"float"`` a float, ``"auto"`` exact for
    ``N <= 12``.
    """
    if N < 1:
        raise DomainError("N must be at least 1")
    if mode == "auto":
        mode = "exact" if N <= 12 else "float"
    if mode == "exact":
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", ExactBudgetWarning)
            seq = xn_sequence(N + 1, "exact", bit_budget)
        if len(seq.exact) == N + 1:
            xs = seq.exact
            return sum((n * (xs[n] - xs[n - 1]) for n in range(1, N + 1)), Fraction(0))
        for w in caught:
            warnings.warn(w.message, ExactBudgetWarning, stacklevel=2)
    elif mode != "float":
        raise DomainError(f"mode must be auto, exact or float, got {mode!r}")
    return float(series_partial_sums(N)[-1])


def branch_derivative_sum(y):
    """``|g_+'(y)| + |g_-'(y)|`` for the two inverse branches
    ``g_+(y) = (1 + y)^2 / 4`` and ``g_-(y) = -(1 - y)^2 / 4``.

    Identically 1, which is the statement that the transfer operator fixes
    the constant density.
    """
    arr = np.asarray(y, dtype=float)
    if np.any((arr <= -1) | (arr >= 1)):
        raise DomainError("only one inverse branch exists at y = +-1")
    out = np.abs((1.0 + arr) / 2.0) + np.abs((1.0 - arr) / 2.0)
    return float(out) if np.ndim(y) == 0 else out


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str
    enforced: bool = True


def _entry_time(x: np.ndarray, radius: float) -> int:
    inside = np.flatnonzero(np.abs(x) <= radius)
    return int(inside[0]) if inside.size else len(x)


def verify(seed: int = 0, n_orbits: int = 300, sigma: float = math.exp(-0.25),
           delta: float = 0.1) -> list:
    """Run the invariant suite for the square-root map.

    Returns one :class:`CheckResult` per invariant.  Results with
    ``enforced=False`` are reported for information only.
    """
    # imported here to keep this module light for exact-only use
    from .dynamics import orbit_traces
    from .hyperbolic import HTParams, first_ht, Censored
    from .measures import stationary_density, ulam_matrix

    results = []

    def record(name, passed, detail, enforced=True):
        results.append(CheckResult(name, bool(passed), detail, enforced))

    seq = xn_sequence(3)
    record("exact x_1, x_2, x_3",
           seq.exact == (Fraction(1, 4), Fraction(25, 64), Fraction(7921, 16384)),
           f"got {[str(q) for q in seq.exact]}")
    s1 = series_partial(1, "exact")
    record("series_partial(1) = 9/64", s1 == Fraction(9, 64), f"got {s1}")

    rng = np.random.default_rng(seed)
    ok = True
    for _ in range(200):
        q = Fraction(int(rng.integers(-10**6 + 1, 10**6)), 10**6)
        ok &= 1 - inverse_branch_g(q) == (1 - q) * (3 + q) / 4
    record("1 - g(x) = (1 - x)(3 + x)/4 on random rationals", ok, "exact equality")

    seq = xn_sequence(15)
    exact = np.array([float(q) for q in seq.exact])
    rel = np.max(np.abs(seq.x[: len(exact)] - exact) / exact)
    record("exact and floating x_n agree", rel <= 1e-10, f"max relative error {rel:.2e}")
    record("x_n strictly increasing in (0, 1)",
           all(0 < a < b < 1 for a, b in zip(seq.exact, seq.exact[1:])), "exact comparison")

    y = y_sequence(10**4)
    prod = 10**4 * y[-1]
    record("n (1 - x_n) at n = 1e4 in [3.8, 4.0]", 3.8 <= prod <= 4.0, f"{prod:.6f}")

    sums = series_partial_sums(10**5)
    Ns = np.unique(np.logspace(2, 5, 60).astype(int))
    slope = np.polyfit(np.log(Ns), sums[Ns - 1], 1)[0]
    record("partial sums grow like 4 ln N", abs(slope - 4) <= 0.4, f"slope {slope:.4f}")
    record("partial sums strictly increasing", bool(np.all(np.diff(sums) > 0)), "float path")

    grid = np.linspace(-1, 1, 1002)[1:-1]
    err = np.max(np.abs(branch_derivative_sum(grid) - 1.0))
    record("branch derivative sum = 1", err <= 1e-12, f"max deviation {err:.1e}")

    ys = np.array([-0.5, 0.0, 0.5])
    back = np.array([eval_map(paper_sqrt(), inverse_branch_g(v)) for v in ys])
    err = np.max(np.abs(back - ys))
    record("f(g(y)) = y", err <= 1e-14, f"max deviation {err:.1e}")

    fmap = paper_sqrt()
    dens = stationary_density(ulam_matrix(fmap, 256)).density
    err = np.max(np.abs(dens / 0.5 - 1.0))
    record("uniform density fixed by the Ulam operator", err <= 2 / 256, f"max deviation {err:.1e}")

    params = HTParams.for_map(fmap, sigma, delta)
    x0 = rng.uniform(-1.0, 1.0, n_orbits)
    strict_bad = loose_bad = checked = 0
    for tr in orbit_traces(fmap, x0, 2000, delta):
        try:
            h = first_ht(tr, params)
        except InvalidOrbitError:
            continue
        if isinstance(h, Censored):
            continue
        checked += 1
        # k = 1 in the expansion condition forces |x_{h-1}| <= sigma^2
        strict_bad += h < 1 + _entry_time(tr.x, sigma**2)
        loose_bad += h < _entry_time(tr.x, delta)
    record(f"h >= 1 + first entry into |x| <= sigma^2 ({checked} orbits)", strict_bad == 0,
           f"{strict_bad} violations")
    record(f"h >= first entry into |x| <= delta ({checked} orbits)", loose_bad == 0,
           f"{loose_bad} discrepancies", enforced=False)
    return results
