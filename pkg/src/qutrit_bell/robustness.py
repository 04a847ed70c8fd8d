"""Resistance of the CH/CHSH pair to white noise and to inefficient detectors.

Detector inefficiency is handled two ways: the analytic scaling of the
ideal I3/K3 values, and an explicit distribution over the enlarged
outcome alphabet {1, 2, 3, no-click}.  The second turns the
efficiency-aware S3 inequality into an ordinary evaluation.

Efficiency is assumed equal for every detector on both sides, and the
source always emits a pair.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple

from .functionals import BellFunctional, i3_functional
from .prob_core import (
    FLOAT_TOL,
    OUTCOMES,
    SETTING_PAIRS,
    SETTINGS,
    JointDistribution,
    MarginalSide,
    Party,
    check_no_signaling,
    marginal,
)
from .quantum import THETA_VIOLATION_MIN, i3_optimal, k3_optimal

NO_CLICK = None
EXT_OUTCOMES = (1, 2, 3, NO_CLICK)


class NoViolation(ValueError):
    pass


def _check_unit(name: str, x: float) -> float:
    if not 0 <= x <= 1:
        raise ValueError(f"{name} must lie in [0, 1], got {x!r}")
    return x


# -- white noise ----------------------------------------------------------


def noisy_distribution(dist: JointDistribution, lam) -> JointDistribution:
    """Mix with the maximally mixed state: ``lam*p + (1-lam)/9`` entrywise.

    Stays exact if both ``dist`` and ``lam`` are rational.
    """
    _check_unit("lambda", lam)
    if dist.numeric == "rational" and not isinstance(lam, float):
        lam = Fraction(lam)
        return JointDistribution(tuple(lam * p + (1 - lam) / 9 for p in dist.p), "rational")
    lam = float(lam)
    return JointDistribution(tuple(lam * float(p) + (1 - lam) / 9 for p in dist.p), "float")


def noise_threshold(i3_value: float) -> float:
    """Smallest visibility at which I3 is still violated."""
    if i3_value <= 2:
        raise NoViolation(f"I3 = {i3_value} <= 2: no violation at any lambda")
    return 2 / i3_value


# -- detector efficiency, analytic ----------------------------------------


def eta_scaled_values(i3_value: float, k3_value: float, eta: float) -> tuple[float, float]:
    """``(I3, K3)`` seen with detector efficiency ``eta``.

    Joint probabilities scale with eta^2 and single-party ones with eta,
    which is why the two functionals drift apart below eta = 1.
    """
    _check_unit("eta", eta)
    if abs(k3_value - (i3_value - 2) / 3) > FLOAT_TOL:
        raise ValueError("k3_value must equal (i3_value - 2)/3 at ideal efficiency")
    return eta**2 * i3_value, eta**2 * k3_value + 4 / 3 * eta * (eta - 1)


def efficiency_threshold_chsh(i3_value: float) -> float:
    if i3_value <= 2:
        raise NoViolation(f"I3 = {i3_value} <= 2: no violation at any eta")
    return math.sqrt(2 / i3_value)


def efficiency_threshold_ch(i3_value: float) -> float:
    if i3_value <= 2:
        raise NoViolation(f"I3 = {i3_value} <= 2: no violation at any eta")
    return 4 / (2 + i3_value)


# -- detector efficiency, explicit ----------------------------------------


@dataclass(frozen=True)
class ExtendedDistribution:
    """Joint probabilities over outcomes {1, 2, 3, NO_CLICK} for each setting pair."""

    q: dict  # (i, j, a, b) -> float, a/b may be NO_CLICK

    def __getitem__(self, key) -> float:
        return self.q[key]

    def marginal(self, party: Party, setting: int, outcome, partner_setting: int) -> float:
        if party is Party.ALICE:
            return sum(self.q[setting, partner_setting, outcome, b] for b in EXT_OUTCOMES)
        return sum(self.q[partner_setting, setting, a, outcome] for a in EXT_OUTCOMES)

    def normalization_errors(self) -> list[float]:
        return [sum(self.q[i, j, a, b] for a in EXT_OUTCOMES for b in EXT_OUTCOMES) - 1
                for i, j in SETTING_PAIRS]

    def signaling_errors(self) -> list[float]:
        errs = []
        for party in Party:
            for s in SETTINGS:
                for o in EXT_OUTCOMES:
                    errs.append(self.marginal(party, s, o, 1) - self.marginal(party, s, o, 2))
        return errs

    def is_valid(self, tol: float = FLOAT_TOL) -> bool:
        return (all(v >= -tol for v in self.q.values())
                and all(abs(e) <= tol for e in self.normalization_errors())
                and all(abs(e) <= tol for e in self.signaling_errors()))


def extended_distribution(dist: JointDistribution, eta: float,
                          tol: float = FLOAT_TOL) -> ExtendedDistribution:
    """Independent detection with probability ``eta`` on each side."""
    _check_unit("eta", eta)
    report = check_no_signaling(dist, tol)
    if not report.passed:
        raise ValueError(f"distribution signals (worst mismatch {report.worst})")
    miss = 1 - eta
    q = {}
    for i, j in SETTING_PAIRS:
        for a in OUTCOMES:
            for b in OUTCOMES:
                q[i, j, a, b] = eta**2 * float(dist[i, j, a, b])
            q[i, j, a, NO_CLICK] = eta * miss * float(
                marginal(dist, MarginalSide(Party.ALICE, i, a), j))
        for b in OUTCOMES:
            q[i, j, NO_CLICK, b] = eta * miss * float(
                marginal(dist, MarginalSide(Party.BOB, j, b), i))
        q[i, j, NO_CLICK, NO_CLICK] = miss**2
    return ExtendedDistribution(q)


def evaluate_extended(f: BellFunctional, ext: ExtendedDistribution) -> float:
    """Evaluate ``f`` counting no-click events as failures.

    Joint terms read the detected block; single-party terms read the full
    marginal, which includes events where the partner did not click.
    """
    total = sum(float(c) * ext[key] for key, c in f.joint.items())
    for (s, o), c in f.alice.items():
        total += float(c) * ext.marginal(Party.ALICE, s, o, 1)
    for (s, o), c in f.bob.items():
        total += float(c) * ext.marginal(Party.BOB, s, o, 1)
    return total


def s3_value(ext: ExtendedDistribution) -> float:
    """I3 on the detected block plus half the total double no-click weight."""
    body = evaluate_extended(i3_functional(), ext)
    return body + 0.5 * sum(ext[i, j, NO_CLICK, NO_CLICK] for i, j in SETTING_PAIRS)


# -- reports --------------------------------------------------------------


class ThresholdReport(NamedTuple):
    theta: float
    i3: float
    k3: float
    lambda_min: float
    eta_ch: float
    eta_chsh: float


def threshold_report(theta: float) -> ThresholdReport:
    """Noise and efficiency thresholds for the family state under optimal phases."""
    if not THETA_VIOLATION_MIN < theta < math.pi / 2:
        raise NoViolation(
            f"theta = {theta!r} lies outside the violation interval "
            f"(arctan(sqrt(3/8)), pi/2) = ({THETA_VIOLATION_MIN:.6f}, {math.pi / 2:.6f})"
        )
    i3 = i3_optimal(theta)
    return ThresholdReport(
        theta, i3, k3_optimal(theta), noise_threshold(i3),
        efficiency_threshold_ch(i3), efficiency_threshold_chsh(i3),
    )
