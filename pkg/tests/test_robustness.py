import math
from fractions import Fraction

import numpy as np
import pytest
from scipy.optimize import brentq

from qutrit_bell import functionals as fn
from qutrit_bell import robustness as rb
from qutrit_bell.prob_core import (
    SETTING_PAIRS,
    JointDistribution,
    Party,
    pr_box_qutrit,
    uniform_distribution,
)
from qutrit_bell.quantum import (
    I3_MAX,
    K3_MAX,
    THETA_MAX,
    THETA_VIOLATION_MIN,
    born_distribution,
    family_state,
    i3_optimal,
    k3_optimal,
    max_violation_state,
    optimal_settings,
)

SQRT33 = math.sqrt(33)
ETAS = [k / 10 for k in range(11)]


@pytest.fixture(scope="module")
def d_mv():
    return born_distribution(max_violation_state(), optimal_settings())


def test_noisy_distribution_endpoints():
    box = pr_box_qutrit()
    assert rb.noisy_distribution(box, 1) == box
    assert rb.noisy_distribution(box, 0) == uniform_distribution()
    mixed = rb.noisy_distribution(box, Fraction(1, 2))
    assert mixed.numeric == "rational"
    with pytest.raises(ValueError):
        rb.noisy_distribution(box, 1.5)


@pytest.mark.parametrize("lam", [0.0, 0.3, 0.686, 1.0])
def test_noise_scales_i3(d_mv, lam):
    i3 = fn.i3_functional()
    assert fn.evaluate(i3, rb.noisy_distribution(d_mv, lam)) == pytest.approx(
        lam * fn.evaluate(i3, d_mv), abs=1e-12)


def test_noise_threshold():
    assert rb.noise_threshold(I3_MAX) == pytest.approx((SQRT33 - 3) / 4, abs=1e-12)
    assert 1 - rb.noise_threshold(I3_MAX) == pytest.approx((7 - SQRT33) / 4, abs=1e-12)
    me = (12 + 8 * math.sqrt(3)) / 9
    assert rb.noise_threshold(me) == pytest.approx(18 / (12 + 8 * math.sqrt(3)), abs=1e-12)
    assert rb.noise_threshold(me) == pytest.approx(0.696, abs=5e-4)
    with pytest.raises(rb.NoViolation):
        rb.noise_threshold(2.0)


def test_eta_scaled_values():
    assert rb.eta_scaled_values(I3_MAX, K3_MAX, 1.0) == pytest.approx((I3_MAX, K3_MAX))
    assert rb.eta_scaled_values(I3_MAX, K3_MAX, 0.0) == (0.0, 0.0)
    for eta in ETAS:
        i3e, k3e = rb.eta_scaled_values(I3_MAX, K3_MAX, eta)
        assert i3e - 3 * k3e - 4 * eta + 2 * eta**2 == pytest.approx(0, abs=1e-12)
        # discrepancy from the ideal relation
        assert i3e - (2 + 3 * k3e) == pytest.approx(4 * eta - 2 * eta**2 - 2, abs=1e-12)
    with pytest.raises(ValueError):
        rb.eta_scaled_values(I3_MAX, 0.0, 0.5)


def test_efficiency_thresholds():
    assert rb.efficiency_threshold_chsh(I3_MAX) == pytest.approx(
        math.sqrt(SQRT33 - 3) / 2, abs=1e-12)
    assert rb.efficiency_threshold_ch(I3_MAX) == pytest.approx((9 - SQRT33) / 4, abs=1e-12)
    assert rb.efficiency_threshold_chsh(4) == pytest.approx(1 / math.sqrt(2))
    assert rb.efficiency_threshold_ch(4) == pytest.approx(2 / 3)
    for i3 in np.linspace(2.001, 4, 50):
        assert rb.efficiency_threshold_chsh(i3) > rb.efficiency_threshold_ch(i3)
    for f in (rb.efficiency_threshold_ch, rb.efficiency_threshold_chsh):
        with pytest.raises(rb.NoViolation):
            f(1.9)


@pytest.mark.parametrize("theta", [0.8, THETA_MAX, 1.3])
def test_thresholds_by_root_bracketing(theta):
    i3, k3 = i3_optimal(theta), k3_optimal(theta)
    eta_chsh = brentq(lambda e: rb.eta_scaled_values(i3, k3, e)[0] - 2, 0.01, 1, xtol=1e-14)
    eta_ch = brentq(lambda e: rb.eta_scaled_values(i3, k3, e)[1], 0.01, 1, xtol=1e-14)
    assert eta_chsh == pytest.approx(rb.efficiency_threshold_chsh(i3), abs=1e-9)
    assert eta_ch == pytest.approx(rb.efficiency_threshold_ch(i3), abs=1e-9)


def test_extended_distribution_limits(d_mv):
    full = rb.extended_distribution(d_mv, 1.0)
    for i, j, a, b in full.q:
        if a is rb.NO_CLICK or b is rb.NO_CLICK:
            assert full[i, j, a, b] == 0
        else:
            assert full[i, j, a, b] == pytest.approx(d_mv[i, j, a, b])
    none = rb.extended_distribution(d_mv, 0.0)
    for i, j in SETTING_PAIRS:
        assert none[i, j, rb.NO_CLICK, rb.NO_CLICK] == 1


@pytest.mark.parametrize("eta", ETAS)
@pytest.mark.parametrize("source", ["quantum", "box", "uniform"])
def test_extended_distribution_is_valid(d_mv, eta, source):
    dist = {"quantum": d_mv, "box": pr_box_qutrit(), "uniform": uniform_distribution()}[source]
    ext = rb.extended_distribution(dist, eta)
    assert ext.is_valid(1e-12)
    doubles = {ext[i, j, rb.NO_CLICK, rb.NO_CLICK] for i, j in SETTING_PAIRS}
    assert doubles == {(1 - eta) ** 2}
    assert ext.marginal(Party.ALICE, 1, rb.NO_CLICK, 1) == pytest.approx(1 - eta)


def test_extended_rejects_signaling():
    def prob(i, j, a, b):
        return Fraction(int(a == b == 1)) if (i, j) == (1, 1) else Fraction(1, 9)

    with pytest.raises(ValueError):
        rb.extended_distribution(JointDistribution.from_function(prob), 0.5)


@pytest.mark.parametrize("eta", ETAS)
def test_structural_and_analytic_models_agree(d_mv, eta):
    ext = rb.extended_distribution(d_mv, eta)
    i3e, k3e = rb.eta_scaled_values(I3_MAX, K3_MAX, eta)
    assert rb.evaluate_extended(fn.i3_functional(), ext) == pytest.approx(i3e, abs=1e-12)
    assert rb.evaluate_extended(fn.k3_functional(), ext) == pytest.approx(k3e, abs=1e-12)
    assert rb.s3_value(ext) == pytest.approx(eta**2 * I3_MAX + 2 * (1 - eta) ** 2, abs=1e-12)


def test_s3_violation_threshold(d_mv):
    eta0 = rb.efficiency_threshold_ch(I3_MAX)
    assert rb.s3_value(rb.extended_distribution(d_mv, 1.0)) == pytest.approx(I3_MAX)
    assert rb.s3_value(rb.extended_distribution(d_mv, eta0 + 1e-6)) > 2
    assert rb.s3_value(rb.extended_distribution(d_mv, eta0 - 1e-6)) < 2


def test_threshold_report():
    r = rb.threshold_report(THETA_MAX)
    assert r.i3 == pytest.approx(I3_MAX, abs=1e-12)
    assert r.lambda_min == pytest.approx((SQRT33 - 3) / 4, abs=1e-12)
    assert r.eta_ch == pytest.approx((9 - SQRT33) / 4, abs=1e-12)
    assert r.eta_chsh == pytest.approx(math.sqrt(SQRT33 - 3) / 2, abs=1e-12)
    for bad in (0.1, THETA_VIOLATION_MIN, math.pi / 2, 2.0):
        with pytest.raises(rb.NoViolation, match="interval"):
            rb.threshold_report(bad)


def test_threshold_curves_symmetric_in_i3():
    # two angles on either side of the maximiser with equal I3 share thresholds
    left = 0.9
    right = brentq(lambda t: i3_optimal(t) - i3_optimal(left), THETA_MAX, math.pi / 2 - 1e-9)
    a, b = rb.threshold_report(left), rb.threshold_report(right)
    assert (a.eta_ch, a.eta_chsh) == pytest.approx((b.eta_ch, b.eta_chsh), abs=1e-12)


def test_family_state_noise_linearity():
    d = born_distribution(family_state(1.0), optimal_settings(0.3))
    assert fn.evaluate(fn.i3_functional(), rb.noisy_distribution(d, 0.42)) == pytest.approx(
        0.42 * i3_optimal(1.0), abs=1e-12)
