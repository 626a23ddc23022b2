import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from nptasmc.examples import ABT_QUERIES, gen_abt
from nptasmc.model import validate
from nptasmc.sampling import QueryRunner, outcomes, paired_outcomes
from nptasmc.stats import (H0, H1, INDIFFERENT, PROCESS1, PROCESS2, UNDECIDED, CompareParams, CompareState,
                           EstimateParams, SourceExhausted, SprtParams, compare, compare_param, count_form,
                           estimate, required_samples, sprt, wald_bounds)
from nptasmc.text import parse_query


def bernoulli(p, seed):
    rng = np.random.default_rng(seed)
    while True:
        yield from (rng.random(256) < p).tolist()


def pairs(p1, p2, seed):
    return zip(bernoulli(p1, (seed, 1)), bernoulli(p2, (seed, 2)))


# -- estimation ------------------------------------------------------------------


def test_required_samples():
    assert required_samples(EstimateParams(0.05, 0.05)) == 4794
    assert required_samples(EstimateParams(0.01, 0.1)) == 1843
    assert required_samples(EstimateParams(1.0, 0.1)) == 0


def test_estimate_examples():
    r = estimate(itertools.repeat(True), EstimateParams(0.1, 0.1))
    assert r.p_hat == 1.0 and r.samples == required_samples(EstimateParams(0.1, 0.1))
    assert estimate(iter(()), EstimateParams(1.0, 0.5)).p_hat is None
    with pytest.raises(SourceExhausted):
        estimate(iter([True] * 10), EstimateParams(0.05, 0.05))


def test_estimate_consumes_exactly_n():
    src = bernoulli(0.5, 0)
    estimate(src, EstimateParams(0.05, 0.05))
    rest = bernoulli(0.5, 0)
    for _ in range(4794):
        next(rest)
    assert next(src) == next(rest)


def test_fair_coin_estimates():
    inside = sum(0.45 <= estimate(bernoulli(0.5, s), EstimateParams(0.05, 0.05)).p_hat <= 0.55
                 for s in range(200))
    assert inside >= 0.95 * 200


def test_estimate_on_abt(abt):
    doc, m = abt
    runner = QueryRunner(m, parse_query(ABT_QUERIES[0], doc))
    r = estimate(outcomes(runner, 1), EstimateParams(0.05, 0.02))
    assert 0.73 <= r.p_hat <= 0.77


@pytest.mark.parametrize("bad", [dict(delta=0), dict(delta=1.5), dict(epsilon=0), dict(epsilon=1)])
def test_estimate_params_validation(bad):
    with pytest.raises(ValueError):
        EstimateParams(**bad)


# -- hypothesis testing ---------------------------------------------------------------


def test_sprt_arithmetic():
    p = SprtParams(0.5, 0.1, 0.1)
    lo, hi = p.bounds
    assert lo == pytest.approx(-2.9444, abs=1e-4) and hi == pytest.approx(2.9444, abs=1e-4)
    v = sprt(itertools.repeat(True), p)
    assert v.decision == H0 and v.samples == 8
    assert v.llr == pytest.approx(-3.244, abs=1e-3)
    v = sprt(itertools.repeat(False), p)
    assert v.decision == H1 and v.samples == 8


def test_sprt_cap_and_exhaustion():
    p = SprtParams(0.5, 0.01, 0.01)
    assert sprt(itertools.cycle([True, False]), p, max_samples=1000).decision == UNDECIDED
    with pytest.raises(SourceExhausted):
        sprt(iter([True, False]), p)


def test_sprt_calibration_at_p0():
    p = SprtParams(0.5, 0.1, 0.1)
    wins = sum(sprt(bernoulli(p.p0, s), p).decision == H0 for s in range(200))
    assert wins >= (1 - p.alpha) * 200


@pytest.mark.parametrize("bad", [dict(theta=0.005), dict(theta=0.995), dict(theta=0.5, alpha=0),
                                 dict(theta=0.5, beta=1)])
def test_sprt_params_validation(bad):
    with pytest.raises(ValueError):
        SprtParams(**bad)


@pytest.mark.slow
def test_sprt_error_frequencies():
    p = SprtParams(0.5, 0.05, 0.05)
    wrong_at_p0 = sum(sprt(bernoulli(p.p0, s), p).decision == H1 for s in range(500)) / 500
    wrong_at_p1 = sum(sprt(bernoulli(p.p1, 10_000 + s), p).decision == H0 for s in range(500)) / 500
    assert wrong_at_p0 <= p.alpha + 0.03
    assert wrong_at_p1 <= p.beta + 0.03


@pytest.mark.slow
def test_estimate_coverage():
    params = EstimateParams(0.05, 0.05)
    for p in (0.1, 0.5, 0.83):
        covered = 0
        for s in range(500):
            lo, hi = estimate(bernoulli(p, (s, int(p * 100))), params).interval
            covered += lo <= p <= hi
        assert covered / 500 >= 1 - params.delta - 0.03


# -- comparison ----------------------------------------------------------------------------


def test_compare_constants():
    p = CompareParams()
    assert p.w0 == pytest.approx(1 / 3) and p.w1 == pytest.approx(2 / 3)
    assert p.a == pytest.approx(math.log(0.05 / 0.95) / math.log(4))
    assert p.r == pytest.approx(math.log(0.95 / 0.05) / math.log(4))
    assert p.c == pytest.approx(0.5)
    with pytest.raises(ValueError):
        CompareParams(u0=1.0, u1=1.0)
    with pytest.raises(ValueError):
        CompareParams(p0eq=0.9, p1eq=0.95)


def test_identical_sources_are_indifferent():
    p = CompareParams(p0eq=0.95, p1eq=0.85)
    same = ((x, x) for x in bernoulli(0.9, 3))
    v = compare(same, p)
    assert v.value == INDIFFERENT and v.informative == 0


def test_compare_orientation():
    p = CompareParams()
    assert compare(pairs(0.75, 0.5, 0), p).value == PROCESS1
    assert compare(pairs(0.5, 0.75, 0), p).value == PROCESS2
    assert compare(itertools.repeat((False, True)), p).value == PROCESS2
    assert compare(iter([(True, False)] * 2), p).value == UNDECIDED


def test_compare_on_abt_models():
    queries = []
    for v in ("ABT", "AB_T"):
        doc = gen_abt(v)
        queries.append(QueryRunner(validate(doc), parse_query(ABT_QUERIES[0], doc)))
    wins = sum(compare(paired_outcomes(*queries, seed), CompareParams()).value == PROCESS1 for seed in range(30))
    assert wins >= 27


@pytest.mark.invariant
@given(st.lists(st.tuples(st.booleans(), st.booleans()), max_size=200), st.floats(0.1, 0.9), st.floats(1.1, 5))
def test_llr_and_count_form_agree(stream, u0, u1):
    params = CompareParams(u0=u0, u1=u1)
    lo, hi = wald_bounds(params.alpha, params.beta)
    win, loss = math.log(params.w1 / params.w0), math.log((1 - params.w1) / (1 - params.w0))
    llr = 0.0
    n = t = 0
    for x1, x2 in stream:
        if x1 == x2:
            continue
        n += 1
        t += x2
        llr += win if x2 else loss
        llr_decision = PROCESS2 if llr >= hi else PROCESS1 if llr <= lo else None
        # the two forms are algebraically equal; only sub-ulp boundary ties may differ
        if min(abs(llr - hi), abs(llr - lo)) > 1e-9:
            assert count_form(t, n, params) == llr_decision
        if llr_decision:
            break


@pytest.mark.invariant
@given(st.lists(st.tuples(st.booleans(), st.booleans()), max_size=300))
def test_compare_state_matches_count_form_without_precheck(stream):
    params = CompareParams()
    state = CompareState(params)
    state.precheck = False
    n = t = 0
    for y1, y2 in stream:
        result = state.update(int(y1), int(y2))
        if y1 != y2:
            n += 1
            t += y2
        assert state.informative == n and state.wins == t
        if result is not None:
            assert result == count_form(t, n, params)
            break


def test_deterministic_replay():
    p = CompareParams()
    assert compare(pairs(0.6, 0.4, 9), p) == compare(pairs(0.6, 0.4, 9), p)
    s = SprtParams(0.5)
    assert sprt(bernoulli(0.45, 2), s) == sprt(bernoulli(0.45, 2), s)


# -- parametrized comparison --------------------------------------------------------------------


def cost_pairs(seed):
    """Process 1 hits at cost U[4.5,5.5], process 2 at U[0,10]; curves cross at 5."""
    rng = np.random.default_rng(seed)
    while True:
        a = rng.uniform(4.5, 5.5, 256)
        b = rng.uniform(0, 10, 256)
        yield from (((True, float(x)), (True, float(y))) for x, y in zip(a, b))


def test_compare_param_single_bound_reduces_to_compare():
    p = CompareParams()
    r = compare_param(cost_pairs(4), 8.0, 1, p)
    v = compare(((x[1] <= 8.0, y[1] <= 8.0) for x, y in cost_pairs(4)), p)
    assert r.verdicts == (v.value,)
    assert r.pairs == v.total


def test_compare_param_crossing_curves():
    p = CompareParams(p0eq=0.995, p1eq=0.98)
    r = compare_param(cost_pairs(1), 8.0, 20, p)
    res = r.results
    assert None not in res
    assert res[0] == 1.0 and res[-1] == 0.0
    assert all(a >= b for a, b in zip(res, res[1:]))


@pytest.mark.invariant
@given(st.floats(0, 10), st.floats(0, 10), st.booleans(), st.booleans(), st.integers(1, 30))
def test_y_is_monotone_in_index(h1, h2, s1, s2, n):
    bounds = [i * 10 / n for i in range(1, n + 1)]
    ys = [(int(s1 and h1 <= b), int(s2 and h2 <= b)) for b in bounds]
    for (a1, a2), (b1, b2) in zip(ys, ys[1:]):
        assert a1 <= b1 and a2 <= b2


def test_compare_param_replay():
    p = CompareParams(p0eq=0.995, p1eq=0.98)
    assert compare_param(cost_pairs(2), 8.0, 20, p) == compare_param(cost_pairs(2), 8.0, 20, p)


def test_compare_param_exhaustion_leaves_undecided():
    r = compare_param(itertools.islice(cost_pairs(0), 3), 8.0, 4, CompareParams())
    assert r.pairs == 3 and set(r.verdicts) == {UNDECIDED}
    with pytest.raises(ValueError):
        compare_param(cost_pairs(0), 8.0, 0, CompareParams())
