import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dpagnostic.dp_core import (
    PrivacyBudget,
    SensitivitySpec,
    exp_mech_probabilities,
    exponential_mechanism,
    laplace_mechanism,
    laplace_sample,
    make_rng,
    sample_index,
)
from dpagnostic.errors import BudgetError, ParameterError

scores_st = st.lists(st.floats(-50, 50, allow_nan=False), min_size=1, max_size=12)


def test_make_rng_is_order_independent():
    a = make_rng(7, 2, 3).random(5)
    make_rng(7, 0, 0).random(100)
    b = make_rng(7, 2, 3).random(5)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, make_rng(7, 3, 2).random(5))


def test_laplace_sign_balance_and_tail():
    rng = make_rng(1)
    draws = np.array([laplace_sample(1.0, rng) for _ in range(200_000)])
    frac_pos = (draws > 0).mean()
    assert abs(frac_pos - 0.5) <= 3 * math.sqrt(0.25 / draws.size)
    # ln(1/beta) * delta / eps with beta = 0.05
    assert math.log(20) == pytest.approx(2.9957, abs=1e-4)
    assert (np.abs(draws) <= math.log(20)).mean() >= 0.945


def test_laplace_stream_is_deterministic():
    a = [laplace_sample(2.0, r) for r in [make_rng(3)] for _ in range(50)]
    r = make_rng(3)
    b = [laplace_sample(2.0, r) for _ in range(50)]
    assert a == b


def test_laplace_rejects_bad_scale():
    with pytest.raises(ParameterError):
        laplace_sample(0.0, make_rng(0))


def test_laplace_mechanism_zero_sensitivity_and_budget():
    b = PrivacyBudget(1.0)
    assert laplace_mechanism(3.5, SensitivitySpec(0.0), 0.5, make_rng(0), b) == 3.5
    assert b.remaining == pytest.approx(0.5)
    laplace_mechanism(1.0, 1.0, 0.5, make_rng(0), b)
    with pytest.raises(BudgetError):
        laplace_mechanism(1.0, 1.0, 0.1, make_rng(0), b)


def test_laplace_mechanism_accuracy():
    rng = make_rng(5)
    out = np.array([laplace_mechanism(1.0, 1.0, 1.0, rng) for _ in range(50_000)])
    assert (np.abs(out - 1.0) <= 2.9957).mean() >= 0.945


def test_infinite_epsilon_is_noiseless():
    assert laplace_mechanism(0.25, 1.0, math.inf, make_rng(0)) == 0.25
    p = exp_mech_probabilities([3, 1, 1, 2], 1.0, math.inf)
    assert p.tolist() == [0, 0.5, 0.5, 0]


def test_exp_mech_examples():
    assert exp_mech_probabilities([0, 0], 1.0, 3.0).tolist() == [0.5, 0.5]
    assert exp_mech_probabilities([0, math.log(4)], 1.0, 2.0) == pytest.approx([0.8, 0.2], abs=1e-15)
    assert exp_mech_probabilities([0, 5, 9], 1.0, 0.0) == pytest.approx([1 / 3] * 3)


def test_exp_mech_errors():
    with pytest.raises(ParameterError):
        exp_mech_probabilities([], 1.0, 1.0)
    with pytest.raises(ParameterError):
        exp_mech_probabilities([0, 1], 0.0, 1.0)
    assert exp_mech_probabilities([2, 2], 0.0, 1.0).tolist() == [0.5, 0.5]
    with pytest.raises(ParameterError):
        SensitivitySpec(-1)


def test_exponential_mechanism_single_candidate():
    out = exponential_mechanism([4.2], 1.0, 1.0, make_rng(0))
    assert (out.index, out.probability) == (0, 1.0)


def test_exponential_mechanism_budget():
    b = PrivacyBudget(1.0)
    exponential_mechanism([0, 1], 1.0, 1.0, make_rng(0), b)
    with pytest.raises(BudgetError):
        exponential_mechanism([0, 1], 1.0, 1e-3, make_rng(0), b)


def test_exponential_mechanism_utility_bound():
    # utility bound: score(out) <= min + (2 delta / eps) ln(|H| / beta) except w.p. beta
    rng = make_rng(9)
    beta, eps, delta, k = 0.1, 1.0, 1.0, 20
    bound = 2 * delta / eps * math.log(k / beta)
    bad = 0
    for _ in range(5000):
        s = rng.uniform(0, 30, size=k)
        out = exponential_mechanism(s, delta, eps, rng)
        bad += s[out.index] > s.min() + bound
    assert bad / 5000 <= beta


def test_sample_index_matches_probabilities():
    rng = make_rng(2)
    p = np.array([0.1, 0.0, 0.6, 0.3])
    counts = np.bincount([sample_index(p, rng) for _ in range(40_000)], minlength=4)
    assert counts[1] == 0
    assert np.allclose(counts / counts.sum(), p, atol=0.01)


@given(scores_st, st.floats(0.01, 5), st.floats(0.1, 3))
def test_exp_mech_normalized(scores, eps, delta):
    p = exp_mech_probabilities(scores, delta, eps)
    assert abs(p.sum() - 1) <= 1e-12 and (p >= 0).all()


@given(scores_st, st.floats(-100, 100), st.floats(0.01, 5))
def test_exp_mech_shift_invariant(scores, c, eps):
    p = exp_mech_probabilities(scores, 1.0, eps)
    q = exp_mech_probabilities([s + c for s in scores], 1.0, eps)
    assert np.allclose(p, q, rtol=1e-9, atol=1e-300)


@given(st.data(), st.floats(0.05, 4), st.floats(0.1, 3))
def test_exp_mech_ratio_bound(data, eps, delta):
    scores = data.draw(st.lists(st.floats(0, 20), min_size=1, max_size=10))
    shifts = data.draw(st.lists(st.floats(-1, 1), min_size=len(scores), max_size=len(scores)))
    other = [s + delta * d for s, d in zip(scores, shifts)]
    p = exp_mech_probabilities(scores, delta, eps)
    q = exp_mech_probabilities(other, delta, eps)
    assert np.abs(np.log(p) - np.log(q)).max() <= eps + 1e-9


@given(st.lists(st.floats(0.001, 1.0), min_size=1, max_size=8), st.floats(0.5, 3))
def test_budget_basic_composition(spends, total):
    b = PrivacyBudget(total)
    fits = sum(spends) <= total * (1 + 1e-9)
    try:
        for e in spends:
            b.spend(e)
        ok = True
    except BudgetError:
        ok = False
    assert ok == fits or abs(sum(spends) - total) < 1e-6


def test_budget_allocate_and_validation():
    b = PrivacyBudget(2.0)
    child = b.allocate(1.5)
    assert child.epsilon == 1.5 and b.remaining == pytest.approx(0.5)
    for _ in range(12):
        child.spend(1.5 / 12)
    assert child.remaining == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(ParameterError):
        PrivacyBudget(0.0)
    with pytest.raises(ParameterError):
        b.spend(-0.1)
    inf = PrivacyBudget(math.inf)
    inf.spend(1e9)
    assert inf.remaining == math.inf
