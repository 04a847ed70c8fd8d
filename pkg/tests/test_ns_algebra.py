import itertools
import random
from fractions import Fraction

import pytest
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import ELIMINATION, I3_REDUCED, I3_REDUCTION_TARGETS, SOLVED, W3_RESIDUAL, parse_scaled, sympy_rank, sympy_solve
from qutrit_bell import functionals as fn
from qutrit_bell import ns_algebra as ns
from qutrit_bell.prob_core import ALL_KEYS, flat_index, pr_box_qutrit, uniform_distribution


@pytest.fixture(scope="module")
def system():
    return ns.build_constraints()


def test_shape_and_rank(system):
    assert system.shape == (16, 36)
    assert ns.rank(system.matrix) == 12
    assert sympy_rank() == 12


def test_row_layout(system):
    # normalisation of pair (2,1) sits on row 3
    assert [k + 1 for k, c in enumerate(system.matrix[2]) if c] == list(range(19, 28))
    # first Alice row: P(1,1,1,n) - P(1,2,1,n)
    row = system.matrix[4]
    assert row[flat_index(1, 1, 1, 2) - 1] == 1
    assert row[flat_index(1, 2, 1, 2) - 1] == -1
    assert system.rhs == (1, 1, 1, 1) + (0,) * 12


def test_uniform_and_pr_box_satisfy_constraints(system):
    assert system.satisfied_by(uniform_distribution())
    assert system.satisfied_by(pr_box_qutrit())


@pytest.mark.parametrize("targets", list(SOLVED))
def test_solutions_match_reference(system, targets):
    solved = ns.solve_for(system, targets)
    for t, text in SOLVED[targets].items():
        const, coeffs = parse_scaled(text)
        assert solved[t].constant == const
        assert solved[t].coeffs == coeffs


@pytest.mark.parametrize("targets", list(SOLVED))
def test_solutions_match_sympy(system, targets):
    ours = ns.solve_for(system, targets)
    theirs, p = sympy_solve(targets)
    for t in targets:
        expr = sympy.Rational(ours[t].constant.numerator, ours[t].constant.denominator)
        expr += sum(sympy.Rational(c.numerator, c.denominator) * p[k - 1]
                    for k, c in ours[t].coeffs.items())
        assert sympy.expand(expr - theirs[t]) == 0


def test_dependent_selection_names_subset(system):
    with pytest.raises(ns.UnsolvableSelection) as exc:
        ns.solve_for(system, range(1, 13))
    dep = exc.value.dependent
    assert set(dep) <= set(range(1, 13))
    # the named columns really are dependent
    cols = [[row[k - 1] for k in dep] for row in system.matrix]
    assert ns.rank(cols) < len(dep)


@pytest.mark.parametrize("bad", [range(1, 12), [1] * 12, range(30, 42)])
def test_malformed_targets(system, bad):
    with pytest.raises(ValueError):
        ns.solve_for(system, bad)


def test_solvability_matches_rank_oracle(system):
    rng = random.Random(7)
    for _ in range(40):
        targets = rng.sample(range(1, 37), 12)
        cols = [[row[k - 1] for k in targets] for row in system.matrix]
        ok = ns.rank(cols) == 12
        try:
            ns.solve_for(system, targets)
            solved = True
        except ns.UnsolvableSelection:
            solved = False
        assert solved == ok


def test_solved_expressions_reproduce_distributions(system):
    for dist in (pr_box_qutrit(), uniform_distribution()):
        for targets in SOLVED:
            solved = ns.solve_for(system, targets)
            for t, expr in solved.items():
                assert expr.evaluate(dist) == dist.p[t - 1]


def test_render():
    e = ns.AffineExpression(Fraction(1, 3), {1: Fraction(-2, 3), 5: Fraction(1)})
    assert e.render(2) == "p2 = 1/3 - 2/3*p1 + p5"
    assert ns.AffineExpression(0, {1: -1, 2: 1}).render() == "-p1 + p2"
    assert ns.AffineExpression().render() == "0"
    obj = e.to_json_obj(2)
    assert obj["target"] == 2 and obj["terms"][0] == {"var": 1, "c": "-2/3"}


def test_equivalences_exact(system):
    assert ns.affine_relation(fn.i3_functional(), fn.expand_marginals(
        fn.k3_functional(), fn.K3_EXPANSION), system) == (3, 2)
    assert ns.affine_relation(fn.i3_prime_functional(), fn.expand_marginals(
        fn.k3_prime_functional(), fn.K3P_EXPANSION), system) == (3, 2)


def test_k3_residual_zero_for_any_expansion():
    k3 = fn.k3_functional()
    for partners in itertools.product((1, 2), repeat=4):
        choice = dict(zip(fn.K3_EXPANSION, partners))
        k = fn.expand_marginals(k3, choice)
        assert ns.residual(k, fn.i3_functional(), Fraction(1, 3), Fraction(-2, 3),
                           ELIMINATION).is_zero()


def test_w3_not_equivalent_and_residual():
    i3 = fn.i3_functional()
    w3 = fn.expand_marginals(fn.w3_functional(), fn.W3_EXPANSION)
    assert ns.affine_relation(i3, w3) is None
    assert ns.relation_candidate(i3, w3) == (Fraction(1, 3), Fraction(-2, 3))
    res = ns.residual(w3, i3, Fraction(1, 3), Fraction(-2, 3), ELIMINATION)
    assert res.constant == 0 and res.coeffs == W3_RESIDUAL


def test_i3_reduction_over_elimination_set():
    red = ns.reduce_functional(fn.i3_functional(), I3_REDUCTION_TARGETS)
    _, coeffs = parse_scaled(I3_REDUCED, denom=1)
    assert red.constant == 2 and red.coeffs == coeffs


def test_w_family_vs_cglmp_search():
    # every one of the 36 x 54 pairs is inequivalent modulo no-signaling
    sys = ns.build_constraints()
    ws = [fn.expand_marginals(fn.w_family_functional(w)) for w in fn.enumerate_w_family()]
    cs = [fn.cglmp_functional(c) for c in fn.enumerate_cglmp()]
    found = [(w.name, c.name) for w in ws for c in cs if ns.affine_relation(c, w, sys)]
    assert found == []


_vectors = st.lists(st.integers(-3, 3), min_size=36, max_size=36)


@settings(max_examples=30, deadline=None)
@given(_vectors, st.sampled_from(list(SOLVED)), st.sampled_from(list(SOLVED)))
def test_reduction_agrees_across_target_sets(vec, t1, t2):
    # two reductions of the same functional coincide on every constrained point
    r1 = ns.reduce_vector(vec, t1)
    r2 = ns.reduce_vector(vec, t2)
    for dist in (pr_box_qutrit(), uniform_distribution()):
        direct = sum(c * p for c, p in zip(vec, dist.p))
        assert r1.evaluate(dist) == direct == r2.evaluate(dist)


@settings(max_examples=30, deadline=None)
@given(st.sampled_from(fn.enumerate_cglmp()),
       st.integers(-4, 4).filter(bool), st.integers(-5, 5))
def test_affine_relation_inverts(c, a, b):
    f = fn.cglmp_functional(c)
    sys = ns.build_constraints()
    # g = a*f + b, with b spread evenly since the 36 entries sum to 4
    g = fn.BellFunctional("g", 0, {key: a * f.joint.get(key, 0) + Fraction(b, 4)
                                   for key in ALL_KEYS})
    assert ns.affine_relation(g, f, sys) == (a, b)
    assert ns.affine_relation(f, g, sys) == (Fraction(1, a), Fraction(-b, a))

