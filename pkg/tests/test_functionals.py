import itertools
import json
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import I3_TERMS, I3P_TERMS, K3_TEN, K3P_TEN, W3_TEN
from qutrit_bell import functionals as fn
from qutrit_bell.prob_core import (
    JointDistribution,
    deterministic_distribution,
    flat_index,
    mix,
    pr_box_qutrit,
    uniform_distribution,
)


def as_flat(pairs, i, j):
    return sorted(flat_index(i, j, a, b) for a, b in pairs)


def test_modular_difference_terms():
    A, B = fn.Direction.A_MINUS_B, fn.Direction.B_MINUS_A
    assert as_flat(fn.modular_difference_term(1, 1, A, 0), 1, 1) == [1, 5, 9]
    assert as_flat(fn.modular_difference_term(2, 1, B, 1), 2, 1) == [20, 24, 25]
    assert as_flat(fn.modular_difference_term(2, 2, A, 2), 2, 2) == [29, 33, 34]


def test_i3_and_i3p_match_explicit_terms():
    assert fn.i3_functional().flat_terms() == I3_TERMS
    assert fn.i3_prime_functional().flat_terms() == I3P_TERMS


def test_cglmp_enumeration_count():
    raw = list(itertools.product((-1, 0, 1), repeat=4))
    brute = [c for c in raw if sum(c) % 3]
    assert len(raw) - len(brute) == 27
    choices = fn.enumerate_cglmp()
    assert len(choices) == 54 and [tuple(c) for c in choices] == brute
    assert (0, 1, 0, 0) in choices and (0, 0, 0, 1) in choices


@pytest.mark.parametrize("bad", [(0, 0, 0, 0), (1, 1, 1, 0), (2, 0, 0, 0)])
def test_cglmp_invalid(bad):
    with pytest.raises(ValueError):
        fn.cglmp_functional(bad)


def test_cglmp_members_are_24_terms_of_unit_weight():
    for c in fn.enumerate_cglmp():
        terms = fn.cglmp_functional(c).flat_terms()
        assert len(terms) == 24 and set(terms.values()) == {1, -1}


@pytest.mark.parametrize("build,ten", [
    (lambda: fn.expand_marginals(fn.k3_functional(), fn.K3_EXPANSION), K3_TEN),
    (lambda: fn.expand_marginals(fn.k3_prime_functional(), fn.K3P_EXPANSION), K3P_TEN),
    (lambda: fn.expand_marginals(fn.w3_functional(), fn.W3_EXPANSION), W3_TEN),
])
def test_ten_term_expansions(build, ten):
    assert build().flat_terms() == ten


def test_expand_needs_every_side():
    with pytest.raises(KeyError):
        fn.expand_marginals(fn.k3_functional(), {})


def test_values_on_named_distributions():
    u, box = uniform_distribution(), pr_box_qutrit()
    assert fn.evaluate(fn.i3_functional(), box) == 4
    assert fn.evaluate(fn.i3_functional(), u) == 0
    assert fn.evaluate(fn.k3_functional(), u) == Fraction(-2, 3)
    assert fn.evaluate(fn.w3_functional(), u) == Fraction(-2, 3)
    assert fn.evaluate(fn.k3_functional(), box) == Fraction(2, 3)
    for w in fn.enumerate_w_family():
        assert fn.evaluate(fn.w_family_functional(w), u) == Fraction(-2, 3)


def test_w_family():
    members = fn.enumerate_w_family()
    assert len(members) == 36
    assert fn.w_family_functional((0, 0, 0, 0)) == fn.w3_functional()
    forms = {json.dumps(fn.w_family_functional(w).to_json_obj()["joint"], sort_keys=True)
             for w in members}
    assert len(forms) == 36


def test_i3_on_strategies_is_integer_at_most_two():
    values = {fn.evaluate(fn.i3_functional(), deterministic_distribution(*s))
              for s in itertools.product((1, 2, 3), repeat=4)}
    assert all(v.denominator == 1 and -4 <= v <= 2 for v in values)
    assert max(values) == 2


def test_signaling_input_rejected_only_with_marginals():
    def prob(i, j, a, b):
        return Fraction(int(a == b == 1)) if (i, j) == (1, 1) else Fraction(1, 9)

    d = JointDistribution.from_function(prob)
    fn.evaluate(fn.i3_functional(), d)
    with pytest.raises(fn.NoSignalingRequired):
        fn.evaluate(fn.k3_functional(), d)


def test_json_round_trip():
    for f in (fn.i3_functional(), fn.k3_functional(), fn.w_family_functional((1, 0, 2, 1))):
        g = fn.BellFunctional.from_json(f.to_json())
        assert g == f and g.name == f.name


def test_by_name():
    assert fn.by_name("I3") == fn.i3_functional()
    assert fn.by_name("CGLMP(0,1,0,0)").same_form(fn.i3_functional())
    assert fn.by_name("W(0,0,0,0)").same_form(fn.w3_functional())
    with pytest.raises(KeyError):
        fn.by_name("I4")


_strategy = st.tuples(*[st.integers(1, 3)] * 4)


@given(_strategy, _strategy, st.fractions(0, 1, max_denominator=30),
       st.sampled_from(fn.enumerate_cglmp() + fn.enumerate_w_family()))
def test_evaluation_is_affine_in_the_distribution(s1, s2, w, choice):
    if isinstance(choice, fn.CGLMPChoice):
        f = fn.cglmp_functional(choice)
    else:
        f = fn.w_family_functional(choice)
    d1, d2 = deterministic_distribution(*s1), deterministic_distribution(*s2)
    lhs = fn.evaluate(f, mix(d1, d2, w))
    assert lhs == w * fn.evaluate(f, d1) + (1 - w) * fn.evaluate(f, d2)
    # every expansion agrees on no-signaling data
    assert fn.evaluate(fn.expand_marginals(f), mix(d1, d2, w)) == lhs
