import math
from dataclasses import replace

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nptasmc.examples import ABT_EXACT, ABT_QUERIES, ABT_VARIANTS, DpaSpec, dpa_query, gen_abt, gen_dpa
from nptasmc.model import validate
from nptasmc.oracle import DepthExceeded, UnsupportedStructure, adaptive_simpson, exact_probability
from nptasmc.text import parse_model, parse_query


def model_of(body):
    return validate(parse_model("network N\n" + body))


def racers(a, b):
    return model_of(f"""\
automaton P
  clock x
  action out p
  location L inv x<={a}
  location M
  initial L
  edge L -> M on p!
end
automaton Q
  clock y
  action out q
  location L inv y<={b}
  location M
  initial L
  edge L -> M on q!
end
""")


def test_adaptive_simpson():
    v, err = adaptive_simpson(math.sin, 0, math.pi, 1e-10)
    assert v == pytest.approx(2.0, abs=1e-9) and err < 1e-8
    v, _ = adaptive_simpson(lambda t: 1.0 if t < 0.3 else 0.0, 0, 1, 1e-9)
    assert v == pytest.approx(0.3, abs=1e-8)
    assert adaptive_simpson(math.exp, 1, 1, 1e-6) == (0.0, 0.0)


@pytest.mark.parametrize("variant", ABT_VARIANTS)
@pytest.mark.parametrize("qi", [0, 1])
def test_abt_closed_forms(variant, qi):
    doc = gen_abt(variant)
    r = exact_probability(validate(doc), parse_query(ABT_QUERIES[qi], doc))
    assert r.probability == pytest.approx(ABT_EXACT[variant][qi], abs=1e-6)
    assert r.error_bound < 1e-6


def test_published_values():
    doc = gen_abt("ABT")
    assert exact_probability(validate(doc), parse_query(ABT_QUERIES[0], doc)).probability == pytest.approx(
        0.75, abs=1e-3)
    doc = gen_abt("ABrT")
    p = exact_probability(validate(doc), parse_query(ABT_QUERIES[0], doc)).probability
    assert p == pytest.approx(0.419, abs=1e-3)
    assert p == pytest.approx(2 * (1 - math.exp(-0.5)) - math.exp(-1), abs=1e-9)


@pytest.mark.parametrize("a,b", [(1, 2), (2, 3), (3, 1), (2, 2), (1, 5)])
def test_uniform_racers(a, b):
    m = racers(a, b)
    q = parse_query(f"Pr[time<={a + b}](<> P.M && Q.L)")
    expected = 1 - a / (2 * b) if a <= b else b / (2 * a)
    assert exact_probability(m, q, tolerance=1e-8).probability == pytest.approx(expected, abs=1e-6)


def test_certain_output():
    m = model_of("""\
automaton P
  clock x
  action out a
  location L inv x<=1
  location M
  initial L
  edge L -> M on a!
end
""")
    assert exact_probability(m, parse_query("Pr[time<=2](<> P.M)")).probability == pytest.approx(1.0, abs=1e-9)
    # box of the complement
    assert exact_probability(m, parse_query("Pr[time<=2]([] P.L)")).probability == pytest.approx(0.0, abs=1e-9)
    early = replace(parse_query("Pr[time<=1](<> P.M)"), bound=0.5)
    assert exact_probability(m, early).probability == pytest.approx(0.5, abs=1e-9)


def test_exponential_delay():
    m = model_of("""\
automaton P
  action out a
  location L exprate 1/2
  location M
  initial L
  edge L -> M on a!
end
""")
    r = exact_probability(m, parse_query("Pr[time<=2](<> P.M)"))
    assert r.probability == pytest.approx(1 - math.exp(-1), abs=1e-6)


def test_clock_property_inside_delay():
    m = racers(2, 4)
    # P is still waiting when x reaches 1 exactly when it fires after time 1
    r = exact_probability(m, parse_query("Pr[time<=3](<> P.L && x>=1)"))
    assert r.probability == pytest.approx(0.5, abs=1e-6)


def test_small_dpa():
    spec = DpaSpec(1, 1, 0, capacities=(), durations=(((1, 3),),), demands=(((),),), priority=(0,))
    doc = gen_dpa(spec)
    r = exact_probability(validate(doc), parse_query(dpa_query(1, 2), doc))
    assert r.probability == pytest.approx(0.5, abs=1e-6)


def test_cycles_and_depth():
    loop = model_of("""\
automaton P
  clock x
  action out a
  location L inv x<=1
  initial L
  edge L -> L on a! reset x
end
""")
    with pytest.raises(UnsupportedStructure):
        exact_probability(loop, parse_query("Pr[time<=5](<> false)"))
    chain = model_of("""\
automaton P
  clock x
  action out a
  location L0 inv x<=1
  location L1 inv x<=1
  location L2 inv x<=1
  location L3
  initial L0
  edge L0 -> L1 on a! reset x
  edge L1 -> L2 on a! reset x
  edge L2 -> L3 on a! reset x
end
""")
    q = parse_query("Pr[time<=5](<> P.L3)")
    assert exact_probability(chain, q).probability == pytest.approx(1.0, abs=1e-6)
    with pytest.raises(DepthExceeded):
        exact_probability(chain, q, depth=2)
    with pytest.raises(ValueError):
        exact_probability(chain, q, tolerance=0)


@pytest.mark.invariant
@settings(max_examples=25)
@given(st.sampled_from(ABT_VARIANTS), st.integers(0, 1), st.integers(0, 12))
def test_probability_bounds_and_monotonicity(variant, qi, c):
    doc = gen_abt(variant)
    m = validate(doc)
    observer = "time" if qi == 0 else "C"
    q = parse_query(f"Pr[{observer}<=1](<> T.T3)", doc)
    p = [exact_probability(m, replace(q, bound=b)).probability for b in (c / 2, (c + 1) / 2)]
    assert all(-1e-6 <= x <= 1 + 1e-6 for x in p)
    assert p[0] <= p[1] + 1e-6
