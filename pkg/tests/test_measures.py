import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from hyptimes.dynamics import MapModel, orbit_trace, seeded_rng, uniform_points
from hyptimes.errors import (ConvergenceError, DiscretizationError, DomainError, InconclusiveCheck,
                             SamplingError)
from hyptimes.hyperbolic import HTParams, is_hyperbolic_time_naive
from hyptimes.maps import from_spec, identity
from hyptimes.measures import (CHUNK, DensityHistogram, _exact_mean, birkhoff_expansion,
                               birkhoff_recurrence, contraction_check, distortion_check,
                               ht_density_bound, pushforward_histogram, sample_valid,
                               stationary_density, suggest_sigma, ulam_matrix)


def test_histogram_from_counts():
    h = DensityHistogram.from_counts([0.0, 0.5, 1.0], [1, 3])
    np.testing.assert_array_equal(h.mass, [0.25, 0.75])
    np.testing.assert_array_equal(h.density, [0.5, 1.5])
    assert h.bins == 2
    with pytest.raises(DomainError):
        DensityHistogram.from_counts([0.0, 1.0], [0])


def test_identity_pushforward_is_the_uniform_sample():
    n_samples, bins = CHUNK + 1000, 16
    h = pushforward_histogram(identity(), 1, n_samples, bins, seed=3)
    x = np.concatenate([uniform_points(identity(), CHUNK, seeded_rng(3, 0)),
                        uniform_points(identity(), 1000, seeded_rng(3, 1))])
    ref, _ = np.histogram(x, bins=bins, range=(0.0, 1.0))
    np.testing.assert_array_equal(h.counts, ref)


def test_doubling_pushforward_uniform(doubling_map):
    n_samples = 100_000
    h = pushforward_histogram(doubling_map, 20, n_samples, 10, seed=0)
    assert np.max(np.abs(h.density - 1.0)) <= 3 / math.sqrt(n_samples)


def test_pushforward_is_deterministic(sqrt_map):
    a = pushforward_histogram(sqrt_map, 10, 5000, 20, seed=7)
    b = pushforward_histogram(sqrt_map, 10, 5000, 20, seed=7)
    np.testing.assert_array_equal(a.counts, b.counts)


def test_pushforward_argument_checks(sqrt_map):
    with pytest.raises(DomainError):
        pushforward_histogram(sqrt_map, 0, 100, 10)
    with pytest.raises(DomainError):
        pushforward_histogram(sqrt_map, 5, 5, 10)


def test_sample_valid_redraws_from_substream(sqrt_map):
    calls = []

    def run(x0):
        calls.append(x0.copy())
        invalid = np.zeros(x0.size, dtype=bool)
        if len(calls) == 1:
            invalid[:3] = True
        return x0 * 2, invalid

    x0, out = sample_valid(sqrt_map, 10, 5, 2, run)
    redraw = uniform_points(sqrt_map, 3, seeded_rng(5, 2, 1))
    np.testing.assert_array_equal(x0[:3], redraw)
    np.testing.assert_array_equal(out, x0 * 2)


def test_sample_valid_gives_up(sqrt_map):
    def run(x0):
        return x0, np.ones(x0.size, dtype=bool)

    with pytest.raises(SamplingError):
        sample_valid(sqrt_map, 4, 0, 0, run)


def test_ulam_doubling_exact(doubling_map):
    P = ulam_matrix(doubling_map, 8).matrix
    ref = np.zeros((8, 8))
    for i in range(8):
        ref[i, (2 * i) % 8] = ref[i, (2 * i + 1) % 8] = 0.5
    np.testing.assert_allclose(P, ref, atol=1e-14)


def test_ulam_tent_exact(tent_map):
    P = ulam_matrix(tent_map, 4).matrix
    ref = np.array([[.5, .5, 0, 0], [0, 0, .5, .5], [0, 0, .5, .5], [.5, .5, 0, 0]])
    np.testing.assert_allclose(P, ref, atol=1e-14)


def test_ulam_sqrt_rows_stochastic(sqrt_map):
    P = ulam_matrix(sqrt_map, 64).matrix
    np.testing.assert_allclose(P.sum(axis=1), 1.0, atol=1e-13)
    np.testing.assert_allclose(P.sum(axis=0), 1.0, atol=1e-13)  # Lebesgue invariance


def test_ulam_montecarlo_agrees_with_branches(sqrt_map):
    exact = ulam_matrix(sqrt_map, 16, method="branches").matrix
    mc = ulam_matrix(sqrt_map, 16, samples_per_cell=20_000, method="montecarlo").matrix
    se = np.sqrt(exact * (1 - exact) / 20_000)
    assert np.all(np.abs(mc - exact) <= 5 * se + 1e-12)


def test_ulam_errors(sqrt_map):
    with pytest.raises(DomainError):
        ulam_matrix(sqrt_map, 1)
    with pytest.raises(DomainError):
        ulam_matrix(sqrt_map, 8, method="bogus")
    bare = MapModel("no-branches", func=np.copy, deriv=np.ones_like, lo=0.0, hi=1.0)
    with pytest.raises(DomainError):
        ulam_matrix(bare, 8, method="branches")


def test_ulam_cell_without_valid_samples():
    fmap = from_spec({"name": "doubling", "singular_points": (0.0,)})
    with pytest.raises(DiscretizationError):
        ulam_matrix(fmap, 2, samples_per_cell=0, method="montecarlo")


def test_stationary_density_from_random_start(sqrt_map):
    op = ulam_matrix(sqrt_map, 64)
    start = np.random.default_rng(0).random(64) + 0.1
    h = stationary_density(op, tol=1e-13, max_iter=10**6, start=start)
    np.testing.assert_allclose(h.density, 0.5, atol=1e-8)


def test_stationary_density_reports_stall(sqrt_map):
    op = ulam_matrix(sqrt_map, 64)
    with pytest.raises(ConvergenceError) as err:
        stationary_density(op, tol=1e-13, max_iter=3, start=np.arange(1.0, 65.0))
    assert err.value.residual > 1e-13


def test_ht_density_zero_mass(doubling_map):
    rep = ht_density_bound(doubling_map, HTParams.for_map(doubling_map, 0.4, 0.1), 5, 1000, 10)
    assert rep.zero_mass and rep.sup_density == 0.0 and rep.mass == 0.0


def test_ht_density_doubling(doubling_map):
    rep = ht_density_bound(doubling_map, HTParams.for_map(doubling_map, 0.5, 0.1), 5, 50_000, 10)
    assert rep.mass == 1.0
    assert rep.sup_density == pytest.approx(1.0, abs=3 / math.sqrt(5000))


def test_birkhoff_doubling_exact(doubling_map, tent_map):
    assert birkhoff_expansion(orbit_trace(doubling_map, 0.3, 1000, 0.1)) == -math.log(2)
    assert birkhoff_expansion(orbit_trace(tent_map, 0.3, 1000, 0.1)) == -math.log(2)
    assert birkhoff_recurrence(orbit_trace(tent_map, 0.3, 1000, 0.1)) == 0.0


def test_birkhoff_sqrt_closed_forms(sqrt_map):
    tr = orbit_trace(sqrt_map, 0.123456, 100_000, 0.1)
    # int -1/2 log|x| dx/2 over [-1, 1] = -1/2
    assert birkhoff_expansion(tr) == pytest.approx(-0.5, abs=0.02)
    # int_{|x| <= d} -log|x| dx/2 = d (1 - log d)
    assert birkhoff_recurrence(tr) == pytest.approx(0.1 * (1 - math.log(0.1)), abs=0.03)


def test_birkhoff_additivity(sqrt_map):
    tr = orbit_trace(sqrt_map, 0.3, 3000, 0.1)
    n, m = 1000, 2000
    rest = orbit_trace(sqrt_map, tr.x[n], m, 0.1)
    for avg in (birkhoff_expansion, birkhoff_recurrence):
        whole = avg(tr, n + m) * (n + m)
        parts = avg(tr, n) * n + avg(rest, m) * m
        assert whole == pytest.approx(parts, rel=1e-12, abs=1e-12)


def test_birkhoff_range(sqrt_map):
    tr = orbit_trace(sqrt_map, 0.3, 10, 0.1)
    with pytest.raises(DomainError):
        birkhoff_expansion(tr, 0)
    with pytest.raises(DomainError):
        birkhoff_recurrence(tr, 11)


@given(st.lists(st.floats(-1e6, 1e6, allow_subnormal=True), min_size=1, max_size=50))
def test_exact_mean_is_correctly_rounded(values):
    ref = float(sum((Fraction(v) for v in values), Fraction(0)) / len(values))
    assert _exact_mean(np.array(values)) == ref


def test_suggest_sigma(sqrt_map, doubling_map):
    sigma, lyap = suggest_sigma(sqrt_map, n=100_000, n_orbits=4)
    assert lyap == pytest.approx(0.5, abs=0.03)
    assert sigma == pytest.approx(math.exp(-lyap / 2))
    sigma, lyap = suggest_sigma(doubling_map, n=200)
    assert lyap == math.log(2)
    with pytest.raises(DomainError):
        suggest_sigma(identity(), n=100)


def test_contraction_doubling_closed_form(doubling_map):
    # distances shrink by exactly 2 per backward step: worst ratio 2^-1 / 0.5^(1/2)
    p = HTParams.for_map(doubling_map, 0.5, 0.1)
    assert contraction_check(doubling_map, 0.3, 10, p) == pytest.approx(2 ** -0.5, rel=1e-6)
    assert distortion_check(doubling_map, 0.3, 10, p) == 1.0


def _some_ht(fmap, params, n, rng):
    for x in rng.uniform(-1, 1, 20_000):
        tr = orbit_trace(fmap, x, n, params.delta)
        if tr.valid and is_hyperbolic_time_naive(tr, n, params):
            return x
    raise AssertionError("no hyperbolic time found")


def test_contraction_at_hyperbolic_time(sqrt_map, rng):
    p = HTParams.for_map(sqrt_map, math.exp(-0.25), 0.1)
    for n in (5, 10):
        x = _some_ht(sqrt_map, p, n, rng)
        assert contraction_check(sqrt_map, x, n, p) <= 1.05


def test_distortion_tends_to_one(sqrt_map, rng):
    p = HTParams.for_map(sqrt_map, math.exp(-0.25), 0.1)
    x = _some_ht(sqrt_map, p, 10, rng)
    vals = [distortion_check(sqrt_map, x, 10, p, eps=e) for e in (1e-3, 1e-6, 1e-9, 1e-12)]
    assert all(v >= 1.0 for v in vals)
    assert vals[-1] - 1.0 <= 1e-6
    assert vals[-1] <= vals[0]


def test_checks_argument_errors(sqrt_map):
    p = HTParams.for_map(sqrt_map, math.exp(-0.25), 0.1)
    with pytest.raises(DomainError):
        contraction_check(sqrt_map, 0.3, 1, p)
    with pytest.raises(InconclusiveCheck):
        distortion_check(sqrt_map, 1e-17, 3, p)
