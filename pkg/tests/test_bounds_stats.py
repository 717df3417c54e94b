"""Тесты аналитических оценок и статистики."""

import math

import numpy as np
import pytest

from processors.bounds_stats import (
    FCurve,
    chernoff_abort_bound,
    classical_escape_probability,
    estimate_bias,
    f_of_eps,
    hoeffding_false_abort_bound,
    honest_failure_budget,
    mermin_value,
    one_shot_length,
    required_rounds,
    required_rounds_robust,
    robust_rounds_for_value,
    robust_threshold,
    rounds_for_value,
    scaling_factor,
    wilson_interval,
)
from processors.errors import InvalidInputError, OutOfRangeError, UndefinedRoundsError

SAMPLE_CURVE = FCurve(points=((0.01, 0.999), (0.05, 0.99), (0.1, 0.97), (0.3, 0.88)))


def test_mermin_value():
    uniform = (0.25,) * 4
    assert mermin_value((1, 1, 1, 1), uniform) == 1.0
    assert mermin_value((1, 1, 1, 0), uniform) == 0.75
    assert mermin_value((1, 0, 0, 0), (1, 0, 0, 0)) == 1.0
    with pytest.raises(InvalidInputError):
        mermin_value((1, 1, 1), uniform)
    with pytest.raises(InvalidInputError):
        mermin_value((1, 1, 1, 1), (0.5, 0.5, 0.5, 0.5))


def test_f_of_eps_step_rule():
    assert f_of_eps(SAMPLE_CURVE, 0.05) == 0.99
    assert f_of_eps(SAMPLE_CURVE, 0.2) == 0.97
    assert f_of_eps(SAMPLE_CURVE, 0.3) == 0.88
    with pytest.raises(OutOfRangeError):
        f_of_eps(SAMPLE_CURVE, 0.005)
    with pytest.raises(OutOfRangeError):
        f_of_eps(SAMPLE_CURVE, 0.4)


def test_curve_validation():
    with pytest.raises(InvalidInputError):
        FCurve(points=((0.1, 0.7),))
    with pytest.raises(InvalidInputError):
        FCurve(points=((0.1, 0.9), (0.2, 0.95)))
    with pytest.raises(InvalidInputError):
        FCurve(points=((0.2, 0.9), (0.1, 0.8)))


@pytest.mark.parametrize(
    "f, delta, expected",
    [(0.99, 1e-6, 1375), (0.75, 0.75, 2), (0.5, 0.25, 3), (0.75, 0.5625, 3), (0.5, 0.3, 2)],
)
def test_rounds_for_value(f, delta, expected):
    rounds = rounds_for_value(f, delta)
    assert rounds == expected
    assert f ** rounds < delta
    assert rounds == 1 or f ** (rounds - 1) >= delta


@pytest.mark.parametrize(
    "f, delta, expected",
    [(0.99, 1e-6, 11053), (0.9, math.exp(-1), 81), (0.5, math.exp(-1), 17), (0.75, 0.5, 23)],
)
def test_robust_rounds_for_value(f, delta, expected):
    rounds = robust_rounds_for_value(f, delta)
    assert rounds == expected
    assert math.exp(-(1 - f) * rounds / 8) < delta
    assert math.exp(-(1 - f) * (rounds - 1) / 8) >= delta


def test_required_rounds_from_curve():
    curve = FCurve.constant(0.05, 0.99)
    assert required_rounds(0.05, 1e-6, curve) == 1375
    assert required_rounds_robust(0.05, 1e-6, curve) == 11053
    ratio = required_rounds_robust(0.05, 1e-6, curve) / required_rounds(0.05, 1e-6, curve)
    assert ratio == pytest.approx(scaling_factor(0.99), rel=1e-2)


def test_robust_rounds_at_inverse_e():
    curve = FCurve.constant(0.1, 0.9)
    assert required_rounds_robust(0.1, math.exp(-1), curve) == 81


def test_rounds_undefined_at_one():
    with pytest.raises(UndefinedRoundsError):
        rounds_for_value(1.0, 0.1)
    with pytest.raises(UndefinedRoundsError):
        required_rounds(0.1, 0.1, FCurve.constant(0.1, 1.0))


def test_one_shot_length():
    curve = FCurve.constant(0.05, 0.99)
    assert one_shot_length(0.5, 0.05, 1e-6, curve) == 5499
    assert one_shot_length(1.0, 0.05, 1e-6, curve) == 2750


def test_scaling_factor():
    assert scaling_factor(0.99) == pytest.approx(8.0403, abs=1e-4)
    assert scaling_factor(0.9) == pytest.approx(8.4288, abs=1e-4)
    assert scaling_factor(1.0) == 8.0


def test_robust_threshold():
    assert robust_threshold(0.9, 100) == 5
    assert robust_threshold(0.99, 11053) == 55
    assert robust_threshold(0.9, 19) == 0


def test_chernoff_examples():
    assert chernoff_abort_bound(0.9, 80).bound == pytest.approx(math.exp(-1))
    assert chernoff_abort_bound(0.9, 0).bound == 1.0
    assert chernoff_abort_bound(0.9, 0).exact == 1.0


@pytest.mark.parametrize("f", [0.76, 0.8, 0.9, 0.95, 0.99, 0.999])
@pytest.mark.parametrize("rounds", [1, 10, 100, 1000, 10000])
def test_chernoff_dominates_exact(f, rounds):
    tail = chernoff_abort_bound(f, rounds)
    assert tail.exact <= tail.bound + 1e-12


def test_hoeffding_examples():
    assert hoeffding_false_abort_bound(0.9, 10, 8000).bound == pytest.approx(math.exp(-1))
    assert honest_failure_budget(0.99, 1) == pytest.approx(0.0025)


@pytest.mark.parametrize("f", [0.8, 0.9, 0.99])
@pytest.mark.parametrize("m", [1, 5])
@pytest.mark.parametrize("rounds", [1, 10, 100, 1000])
def test_hoeffding_dominates_exact(f, m, rounds):
    tail = hoeffding_false_abort_bound(f, m, rounds)
    assert tail.exact <= tail.bound + 1e-12


def test_bounds_decrease_with_rounds():
    chernoff = [chernoff_abort_bound(0.9, l).bound for l in range(1, 50)]
    hoeffding = [hoeffding_false_abort_bound(0.9, 3, l).bound for l in range(1, 50)]
    assert all(b < a for a, b in zip(chernoff, chernoff[1:]))
    assert all(b < a for a, b in zip(hoeffding, hoeffding[1:]))


def test_classical_escape():
    assert classical_escape_probability(4) == pytest.approx(0.31640625)


def test_estimate_bias():
    assert estimate_bias([0] * 100).bias == 0.5
    with pytest.raises(InvalidInputError):
        estimate_bias([])
    rng = np.random.default_rng(17)
    estimate = estimate_bias(rng.integers(0, 2, size=10 ** 5))
    assert estimate.bias <= 0.0079


def test_wilson_interval_contains_rate():
    low, high = wilson_interval(30, 100)
    assert low < 0.3 < high
    assert wilson_interval(0, 50)[0] == pytest.approx(0.0, abs=1e-12)
