import warnings
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from hyptimes.counterexample import (ExactBudgetWarning, branch_derivative_sum, inverse_branch_g,
                                     series_partial, series_partial_sums, verify, xn_sequence,
                                     y_sequence)
from hyptimes.dynamics import eval_map
from hyptimes.errors import DomainError


def test_first_terms_exact():
    seq = xn_sequence(3)
    assert seq.exact == (Fraction(1, 4), Fraction(25, 64), Fraction(7921, 16384))


def test_series_partial_exact_values():
    assert series_partial(1, "exact") == Fraction(9, 64)
    # 9/64 + 2 (7921/16384 - 25/64)
    assert series_partial(2, "exact") == Fraction(2673, 8192)


def test_series_partial_auto_mode():
    assert isinstance(series_partial(12), Fraction)
    assert isinstance(series_partial(13), float)
    assert float(series_partial(10, "exact")) == pytest.approx(series_partial(10, "float"), rel=1e-12)


@given(st.fractions(min_value=Fraction(-999, 1000), max_value=Fraction(999, 1000),
                    max_denominator=10**6))
def test_one_minus_g_identity(q):
    assert 1 - inverse_branch_g(q) == (1 - q) * (3 + q) / 4


def test_g_is_inverse_of_f(sqrt_map):
    for y in (-0.9, -0.25, 0.0, 0.6):
        assert eval_map(sqrt_map, inverse_branch_g(y)) == pytest.approx(y, abs=1e-14)


@pytest.mark.parametrize("y", [Fraction(1), Fraction(-1), 1.0, -1.5])
def test_g_domain(y):
    with pytest.raises(DomainError):
        inverse_branch_g(y)


def test_float_path_tracks_exact():
    seq = xn_sequence(15)
    exact_y = np.array([float(1 - q) for q in seq.exact])
    np.testing.assert_allclose(seq.y, exact_y, rtol=1e-12)
    assert all(0 < a < b < 1 for a, b in zip(seq.exact, seq.exact[1:]))


def test_float_mode_has_no_rationals():
    seq = xn_sequence(100, mode="float")
    assert seq.exact == () and len(seq) == 100
    assert np.all(np.diff(seq.x) > 0)


def test_bit_budget_falls_back_to_float():
    with pytest.warns(ExactBudgetWarning):
        seq = xn_sequence(30, bit_budget=200)
    assert 0 < len(seq.exact) < 30
    assert len(seq.y) == 30
    with pytest.warns(ExactBudgetWarning):
        value = series_partial(30, "exact", bit_budget=200)
    assert isinstance(value, float)


def test_no_warning_within_budget():
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        series_partial(12, "exact")


def test_neutral_approach_rate():
    y = y_sequence(10**4)
    assert 3.8 <= 10**4 * y[-1] <= 4.0


def test_partial_sums_consistent():
    sums = series_partial_sums(50)
    assert sums[-1] == series_partial(50, "float")
    assert np.all(np.diff(sums) > 0)


@pytest.mark.parametrize("N", [0, -3])
def test_sequence_length_checked(N):
    with pytest.raises(DomainError):
        xn_sequence(N)
    with pytest.raises(DomainError):
        series_partial(N)


def test_bad_modes():
    with pytest.raises(DomainError):
        xn_sequence(3, mode="symbolic")
    with pytest.raises(DomainError):
        series_partial(3, mode="symbolic")


def test_branch_derivative_sum():
    grid = np.linspace(-1, 1, 1002)[1:-1]
    np.testing.assert_allclose(branch_derivative_sum(grid), 1.0, atol=1e-12)
    assert branch_derivative_sum(0.3) == pytest.approx(1.0)
    for y in (1.0, -1.0):
        with pytest.raises(DomainError):
            branch_derivative_sum(y)


def test_verify_suite_passes():
    results = verify(n_orbits=100)
    enforced = [r for r in results if r.enforced]
    assert enforced and all(r.passed for r in enforced), [r for r in enforced if not r.passed]
    assert any(not r.enforced for r in results)
