import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from hyptimes.dynamics import orbit_trace, seeded_rng, uniform_points
from hyptimes.errors import DomainError, InsufficientDataError, InvalidOrbitError
from hyptimes.hstats import (HHistogram, growth_diagnostic, h_histogram, h_samples, lp_moment,
                             power_law_histogram, tail_double_sum, tail_exponent_fit)
from hyptimes.hyperbolic import Censored, HTParams, first_ht
from hyptimes.measures import CHUNK


def hist_of(masses, T=None, censored=0.0):
    T = T or max(masses)
    mass = np.zeros(T)
    for k, m in masses.items():
        mass[k - 1] = m
    return HHistogram(T=T, mass=mass, censored=censored, n_samples=0)


def test_from_h_counts():
    hist = HHistogram.from_h(np.array([1, 1, 2, 0, 5]), 3, seed=4)
    np.testing.assert_array_equal(hist.mass, [0.4, 0.2, 0.0])
    assert hist.censored == pytest.approx(0.4)  # the 0 and the 5 > T
    assert hist.n_samples == 5 and hist.seed == 4


def test_from_h_is_order_free(rng):
    h = rng.integers(0, 50, 1000)
    a, b = HHistogram.from_h(h, 40), HHistogram.from_h(rng.permutation(h), 40)
    np.testing.assert_array_equal(a.mass, b.mass)
    assert a.censored == b.censored


@pytest.mark.parametrize("masses, p, expected", [
    ({1: 0.5, 2: 0.5}, 2, 2.5),
    ({2: 1.0}, 1, 2.0),
    ({1: 0.25, 3: 0.75}, 1, 2.5),
])
def test_lp_moment_examples(masses, p, expected):
    rep = lp_moment(hist_of(masses), p)
    assert rep.truncated_moment == pytest.approx(expected)
    assert not rep.lower_bound and rep.censored_contribution == 0.0


def test_lp_moment_with_censoring():
    rep = lp_moment(hist_of({1: 0.5}, T=4, censored=0.5), 2)
    assert rep.truncated_moment == 0.5
    assert rep.lower_bound
    assert rep.censored_contribution == 8.0


def test_lp_moment_rejects_small_p():
    with pytest.raises(DomainError):
        lp_moment(hist_of({1: 1.0}), 0.5)


def test_tail_double_sum_single_atom():
    # (2 + 1) * (2 * 1)
    assert tail_double_sum(hist_of({2: 1.0}), 2) == 6.0


@given(st.lists(st.floats(0.0, 1.0), min_size=2, max_size=30), st.data())
def test_tail_double_sum_matches_double_loop(weights, data):
    w = np.array(weights)
    if w.sum() == 0:
        w[0] = 1.0
    hist = HHistogram(T=w.size, mass=w / w.sum(), censored=0.0, n_samples=0)
    i_max = data.draw(st.integers(2, w.size))
    ref = sum((i + 1) * sum(k * hist.mass[k - 1] for k in range(i, hist.T + 1))
              for i in range(2, i_max + 1))
    assert tail_double_sum(hist, i_max) == pytest.approx(ref, rel=1e-12)


def test_tail_double_sum_bounds():
    hist = hist_of({1: 1.0}, T=5)
    assert tail_double_sum(hist, 1) == 0.0
    with pytest.raises(DomainError):
        tail_double_sum(hist, 6)


@pytest.mark.parametrize("p", [1.5, 2.0, 3.0, 5.0])
def test_tail_fit_recovers_power_law(p):
    assert tail_exponent_fit(power_law_histogram(p, 1000), k_min=1) == pytest.approx(p, abs=1e-9)


def test_tail_fit_needs_data():
    with pytest.raises(InsufficientDataError):
        tail_exponent_fit(hist_of({1: 0.5, 3: 0.5}, T=10))


@given(st.floats(1.0, 4.0), st.floats(1.0, 4.0))
def test_lp_moment_monotone_in_p(p1, p2):
    hist = HHistogram.from_h(np.random.default_rng(1).integers(0, 30, 500), 25)
    lo, hi = sorted((p1, p2))
    assert lp_moment(hist, lo).truncated_moment <= lp_moment(hist, hi).truncated_moment


def test_lp_moment_monotone_in_T(rng):
    h = rng.integers(0, 200, 2000)
    vals = [lp_moment(HHistogram.from_h(h, T), 1.5).truncated_moment for T in (10, 50, 100, 200)]
    assert vals == sorted(vals)


def test_h_samples_match_trace_oracle(sqrt_map):
    p = HTParams.for_map(sqrt_map, math.exp(-0.25), 0.1)
    h = h_samples(sqrt_map, p, 500, 300, seed=2)
    x0 = uniform_points(sqrt_map, 500, seeded_rng(2, 0))
    for x, got in zip(x0, h):
        try:
            ref = first_ht(orbit_trace(sqrt_map, x, 300, 0.1), p)
        except InvalidOrbitError:
            continue  # this sample was redrawn
        assert got == (0 if isinstance(ref, Censored) else ref)


def test_h_samples_chunk_prefix(sqrt_map):
    p = HTParams.for_map(sqrt_map, math.exp(-0.25), 0.1)
    short = h_samples(sqrt_map, p, CHUNK, 50, seed=1)
    long = h_samples(sqrt_map, p, CHUNK + 100, 50, seed=1)
    np.testing.assert_array_equal(short, long[:CHUNK])


def test_h_samples_rejects_bad_cutoff(sqrt_map):
    with pytest.raises(DomainError):
        h_samples(sqrt_map, HTParams.for_map(sqrt_map, 0.7, 0.1), 10, 0)


def test_doubling_h_is_one(doubling_map):
    hist = h_histogram(doubling_map, HTParams.for_map(doubling_map, 0.5, 0.1), 2000, 10)
    assert hist.mass[0] == 1.0 and hist.censored == 0.0
    hist = h_histogram(doubling_map, HTParams.for_map(doubling_map, 0.4, 0.1), 2000, 10)
    assert hist.mass.sum() == 0.0 and hist.censored == 1.0


def test_h_monotone_in_sigma_without_singular_set(skew_tent):
    h1 = h_samples(skew_tent, HTParams(0.6, 0.1, 0.25, 0.0), 3000, 200, seed=0)
    h2 = h_samples(skew_tent, HTParams(0.8, 0.1, 0.25, 0.0), 3000, 200, seed=0)
    both = (h1 > 0) & (h2 > 0)
    assert both.sum() > 1000
    assert np.all(h2[both] <= h1[both])
    assert not np.any((h1 > 0) & (h2 == 0))


def test_growth_diagnostic(sqrt_map, doubling_map):
    p = HTParams.for_map(sqrt_map, math.exp(-0.25), 0.1)
    grid = [8, 16, 32, 64]
    g = growth_diagnostic(sqrt_map, p, 3000, grid, seed=0)
    assert [t for t, _ in g] == grid
    vals = [v for _, v in g]
    assert vals == sorted(vals)
    h = h_samples(sqrt_map, p, 3000, 64, seed=0)
    eff = np.where(h == 0, 64, h)
    assert vals[-1] == pytest.approx(eff.mean())
    flat = growth_diagnostic(doubling_map, HTParams.for_map(doubling_map, 0.5, 0.1), 500, grid)
    assert [v for _, v in flat] == [1.0] * 4


def test_growth_grid_must_increase(sqrt_map):
    p = HTParams.for_map(sqrt_map, 0.7, 0.1)
    with pytest.raises(DomainError):
        growth_diagnostic(sqrt_map, p, 10, [8, 8])
    with pytest.raises(DomainError):
        growth_diagnostic(sqrt_map, p, 10, [])
