import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from crossloss.loss import (
    WEBSTER, DomainError, LossParams, Observation, PredictionSet, bias_ranking, component_loss,
    component_losses, fellegi_components, fellegi_loss, signed_loss, total_loss, webster_params)
from crossloss.metrics import TABLE1

from conftest import make_set

positive = st.floats(min_value=1e-2, max_value=1e6, allow_nan=False, allow_infinity=False)
exponent_p = st.floats(min_value=0.1, max_value=4.0)
exponent_q = st.floats(min_value=-3.0, max_value=-0.05)


def test_component_loss_table1_cells():
    assert component_loss(Observation(1, 100000, 102000), LossParams(2, -1)) == pytest.approx(40.0)
    assert component_loss(Observation(6, 100, 110), WEBSTER) == pytest.approx(1.0)
    assert component_loss(Observation(1, 100000, 101000), webster_params()) == pytest.approx(10.0)


@pytest.mark.parametrize("params", [WEBSTER, LossParams(1, -1), LossParams(0.5, -0.2)])
def test_exact_prediction_has_zero_loss(params):
    assert component_loss(Observation("x", 5000, 5000), params) == 0.0


def test_observation_rejects_nonpositive_actual():
    with pytest.raises(DomainError):
        Observation("x", 0.0, 10.0)
    with pytest.raises(DomainError):
        Observation("x", 10.0, -1.0)
    Observation("x", 10.0, 0.0)  # zero prediction is allowed


def test_loss_params_admissibility():
    assert webster_params() == LossParams(2, -1)
    assert webster_params().admissible()
    assert not LossParams(1, -1).admissible()
    assert LossParams(2, 0).admissible()
    with pytest.raises(DomainError):
        LossParams(0, -1)


def test_total_loss_is_additive():
    s = make_set([100000, 50000], [102000, 49000])
    assert total_loss(s, WEBSTER) == pytest.approx(60.0)
    assert total_loss(make_set([3.0, 4.0], [3.0, 4.0]), WEBSTER) == 0.0


def test_total_loss_table1_scenario1():
    s1 = TABLE1.prediction_set("Scenario 1")
    assert total_loss(s1, WEBSTER) == pytest.approx(66.44, abs=1e-9)
    assert total_loss(s1, WEBSTER) / 6 == pytest.approx(11.0733, abs=1e-4)


def test_prediction_set_validation():
    with pytest.raises(DomainError):
        PredictionSet("e", [], [], [])
    with pytest.raises(DomainError):
        PredictionSet("d", ["a", "a"], [1, 2], [1, 2])
    with pytest.raises(DomainError):
        PredictionSet("z", ["a", "b"], [1, 0], [1, 2])
    s = make_set([1.0, 2.0], [1.5, 2.5])
    assert [o.predicted for o in s.observations] == [1.5, 2.5]
    assert PredictionSet.from_observations("s", s.observations) == s


def _fellegi_oracle(actuals, predicted):
    # exact rational arithmetic, term by term
    from fractions import Fraction
    a = [Fraction(x) for x in actuals]
    p = [Fraction(x) for x in predicted]
    sa, sp = sum(a), sum(p)
    return float(sum((pi / sp - ai / sa) ** 2 for ai, pi in zip(a, p)) / sa)


def test_fellegi_hand_example():
    s = make_set([100, 300], [110, 290])
    assert _fellegi_oracle([100, 300], [110, 290]) == pytest.approx(3.125e-6, rel=1e-15)
    assert fellegi_loss(s) == pytest.approx(3.125e-6, rel=1e-12)
    assert fellegi_components(s).sum() == pytest.approx(fellegi_loss(s), rel=1e-15)


def test_fellegi_zero_and_scale_invariance():
    a = [100, 300, 2500]
    assert fellegi_loss(make_set(a, [7 * x for x in a])) == pytest.approx(0.0, abs=1e-20)
    base = fellegi_loss(make_set([100, 300], [110, 290]))
    assert fellegi_loss(make_set([100, 300], [220, 580])) == pytest.approx(base, rel=1e-12)
    with pytest.raises(DomainError):
        fellegi_loss(make_set([1, 2], [0, 0]))


@given(st.lists(positive, min_size=2, max_size=20), st.data())
@settings(max_examples=100, deadline=None)
def test_fellegi_matches_oracle_and_is_scale_invariant(actuals, data):
    predicted = data.draw(st.lists(positive, min_size=len(actuals), max_size=len(actuals)))
    c = data.draw(st.floats(min_value=1e-3, max_value=1e3))
    s = make_set(actuals, predicted)
    ref = _fellegi_oracle(actuals, predicted)
    # nearly equal shares cancel; rounding in the sums then bounds the absolute error
    floor = 1e-14 / sum(actuals)
    assert fellegi_loss(s) == pytest.approx(ref, rel=1e-9, abs=floor)
    scaled = make_set(actuals, [c * x for x in predicted])
    assert fellegi_loss(scaled) == pytest.approx(fellegi_loss(s), rel=1e-9, abs=floor)


def test_signed_loss_sign_convention():
    over = signed_loss(Observation(1, 100000, 102000), WEBSTER)
    under = signed_loss(Observation(1, 100000, 98000), WEBSTER)
    assert over.signed_loss == pytest.approx(40.0)
    assert under.signed_loss == pytest.approx(-40.0)
    assert over.magnitude == under.magnitude
    assert signed_loss(Observation(1, 7, 7), WEBSTER).signed_loss == 0.0


def test_bias_ranking_order():
    s = PredictionSet("b", ["x", "y", "z"], [100000, 100000, 100000], [102000, 100000, 98586])
    ranked = bias_ranking(s, WEBSTER)
    assert [r.id for r in ranked] == ["x", "y", "z"]
    assert ranked[0].signed_loss > 0 and ranked[1].signed_loss == 0 and ranked[2].signed_loss < 0

    perfect = PredictionSet("p", ["c", "a", "b"], [1, 2, 3], [1, 2, 3])
    assert [r.id for r in bias_ranking(perfect, WEBSTER)] == ["a", "b", "c"]


def test_bias_ranking_table1_overpredictions():
    ranked = bias_ranking(TABLE1.prediction_set("Scenario 1"), WEBSTER)
    assert all(r.signed_loss > 0 for r in ranked)
    assert ranked[0].id == 1 and ranked[0].signed_loss == pytest.approx(40.0)
    assert [r.id for r in ranked] == [1, 2, 3, 4, 5, 6]


# relative error fractions; tiny nonzero fractions would only measure rounding in A +/- eps
fractions = st.one_of(st.just(0.0), st.floats(1e-3, 0.999))


@given(positive, fractions, exponent_p, st.floats(-3, 3))
def test_symmetry(a, frac, p, q):
    eps = frac * a
    params = LossParams(p, q)
    hi = component_loss(Observation(0, a, a + eps), params)
    lo = component_loss(Observation(0, a, a - eps), params)
    assert hi == pytest.approx(lo, rel=1e-9, abs=0)


@given(positive, exponent_p, exponent_q, st.floats(1e-3, 0.4), st.floats(1.01, 2.0))
def test_increasing_in_error(a, p, q, frac, growth):
    params = LossParams(p, q)
    small = component_loss(Observation(0, a, a + frac * a), params)
    large = component_loss(Observation(0, a, a + growth * frac * a), params)
    assert large > small


@given(st.floats(1e-2, 1e3), exponent_p, exponent_q, st.floats(1.01, 10.0))
def test_decreasing_in_actual(eps, p, q, growth):
    params = LossParams(p, q)
    a = eps * 2
    assert component_loss(Observation(0, a * growth, a * growth + eps), params) < \
        component_loss(Observation(0, a, a + eps), params)


@given(st.lists(st.tuples(positive, fractions), min_size=1, max_size=30))
def test_signed_loss_is_odd_and_matches_magnitude(rows):
    for a, frac in rows:
        up = signed_loss(Observation(0, a, a * (1 + frac)), WEBSTER)
        down = signed_loss(Observation(0, a, a * (1 - frac)), WEBSTER)
        assert up.magnitude == component_loss(Observation(0, a, a * (1 + frac)), WEBSTER)
        assert abs(up.signed_loss) == up.magnitude
        assert up.signed_loss == pytest.approx(-down.signed_loss, rel=1e-9)


@given(st.lists(st.tuples(positive, st.floats(0, 0.9)), min_size=1, max_size=25))
def test_fisher_consistency(rows):
    a = [r[0] for r in rows]
    p = [r[0] * (1 + r[1]) for r in rows]
    s = make_set(a, p)
    assert (total_loss(s, WEBSTER) == 0) == all(x == y for x, y in zip(a, s.predicted))


def test_component_losses_vector_matches_scalar(rng):
    a = rng.uniform(1, 1e5, 50)
    p = np.maximum(0, a + rng.normal(0, 100, 50))
    s = make_set(a, p)
    params = LossParams(1.5, -0.7)
    vec = component_losses(s, params)
    for o, v in zip(s.observations, vec):
        assert v == pytest.approx(component_loss(o, params), rel=1e-14)
    assert total_loss(s, params) == pytest.approx(math.fsum(vec), rel=1e-13)
