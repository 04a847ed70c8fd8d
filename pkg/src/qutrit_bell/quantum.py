"""Quantum predictions for two qutrits measured through six-port beam splitters.

States of the family

    cos(theta) |22> + sin(theta)/sqrt(2) (|11> + |33>)

are measured after phase-parametrised unitaries on each side.  Joint
probabilities are available both from the general Born rule and from the
closed trigonometric form; the two must agree to 1e-12.

Angles are radians throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy import optimize

from .prob_core import SETTING_PAIRS, JointDistribution, Party

OMEGA = np.exp(2j * np.pi / 3)  # lambda; mu = OMEGA**2 = conj(OMEGA)
SQRT2, SQRT3 = math.sqrt(2), math.sqrt(3)
I3_MAX = 1 + math.sqrt(11 / 3)
K3_MAX = (math.sqrt(11 / 3) - 1) / 3
# tan(2 theta) = -sqrt(8/3) with 2 theta in the second quadrant
THETA_MAX = (math.pi - math.atan(math.sqrt(8 / 3))) / 2
THETA_MAX_ENTANGLED = math.acos(1 / math.sqrt(3))
# lower end of the violation interval; the upper end is pi/2
THETA_VIOLATION_MIN = math.atan(math.sqrt(3 / 8))
STATE_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class TwoQutritState:
    """Pure state with amplitudes ``amplitudes[a-1, b-1]`` on ``|a>|b>``."""

    amplitudes: np.ndarray

    def __post_init__(self):
        amp = np.asarray(self.amplitudes, dtype=complex)
        if amp.shape == (9,):
            amp = amp.reshape(3, 3)
        if amp.shape != (3, 3):
            raise ValueError(f"expected 3x3 amplitudes, got shape {amp.shape}")
        norm = float(np.sum(np.abs(amp) ** 2))
        if abs(norm - 1) > STATE_TOL:
            raise ValueError(f"state is not normalised (norm^2 = {norm!r})")
        amp.setflags(write=False)
        object.__setattr__(self, "amplitudes", amp)

    def amplitude(self, a: int, b: int) -> complex:
        return complex(self.amplitudes[a - 1, b - 1])

    @property
    def vector(self) -> np.ndarray:
        return self.amplitudes.reshape(9)


class PhaseSettings(NamedTuple):
    alpha1: float
    alpha2: float
    beta1: float
    beta2: float

    def alpha(self, a: int) -> float:
        return (self.alpha1, self.alpha2)[a - 1]

    def beta(self, b: int) -> float:
        return (self.beta1, self.beta2)[b - 1]

    def phi(self, a: int, b: int) -> float:
        return self.alpha(a) + self.beta(b)


def family_state(theta: float) -> TwoQutritState:
    amp = np.zeros((3, 3), dtype=complex)
    amp[1, 1] = math.cos(theta)
    amp[0, 0] = amp[2, 2] = math.sin(theta) / SQRT2
    return TwoQutritState(amp)


def max_violation_state() -> TwoQutritState:
    """The state maximising I3 under the optimal phase settings."""
    r33 = math.sqrt(33)
    amp = np.zeros((3, 3), dtype=complex)
    amp[1, 1] = math.sqrt((11 - r33) / 22)
    amp[0, 0] = amp[2, 2] = math.sqrt((11 + r33) / 44)
    return TwoQutritState(amp)


def sixport_unitary(side: Party | str, phase: float) -> np.ndarray:
    """Six-port beam-splitter unitary with a single phase parameter.

    Row m, column k is ``w^{(m-1)(k-1)} e^{i(k-1) phase} / sqrt(3)`` with
    ``w = lambda`` for Alice and ``w = mu`` for Bob.
    """
    side = Party(side)
    w = OMEGA if side is Party.ALICE else OMEGA.conjugate()
    m = np.arange(3)[:, None]
    k = np.arange(3)[None, :]
    return w ** (m * k) * np.exp(1j * k * phase) / SQRT3


def born_distribution(state: TwoQutritState, s: PhaseSettings) -> JointDistribution:
    """``|<m n| U_A^i (x) U_B^j |psi>|^2`` for the four setting pairs."""
    values = []
    for i, j in SETTING_PAIRS:
        u = np.kron(sixport_unitary(Party.ALICE, s.alpha(i)),
                    sixport_unitary(Party.BOB, s.beta(j)))
        values.extend((np.abs(u @ state.vector) ** 2).tolist())
    return JointDistribution(tuple(values), "float")


def _closed_form_values(theta: float, phi: float) -> tuple[float, float, float]:
    """(equal, b = a+1, b = a-1) outcome probabilities for one setting pair."""
    s2 = math.sin(theta) ** 2
    sd = math.sin(2 * theta)
    c1, s1 = math.cos(phi), math.sin(phi)
    c2, sn2 = math.cos(2 * phi), math.sin(2 * phi)
    equal = 1 + s2 * c2 + SQRT2 * sd * c1
    plus = 1 - 0.5 * s2 * (c2 + SQRT3 * sn2) - sd / SQRT2 * (c1 - SQRT3 * s1)
    minus = 1 - 0.5 * s2 * (c2 - SQRT3 * sn2) - sd / SQRT2 * (c1 + SQRT3 * s1)
    return equal / 9, plus / 9, minus / 9


def closed_form_distribution(theta: float, s: PhaseSettings) -> JointDistribution:
    values = []
    for i, j in SETTING_PAIRS:
        equal, plus, minus = _closed_form_values(theta, s.phi(i, j))
        for a in range(3):
            for b in range(3):
                values.append((equal, plus, minus)[(b - a) % 3])
    return JointDistribution(tuple(values), "float")


def _i3_phase_sums(phi11, phi12, phi21, phi22):
    """Angular sums multiplying sin^2(theta) and sin(2 theta) in I3.

    Works elementwise on numpy arrays.
    """
    c2 = (SQRT3 * np.cos(2 * phi11) + np.sin(2 * phi11)
          + SQRT3 * np.cos(2 * phi12) - np.sin(2 * phi12)
          - SQRT3 * np.cos(2 * phi21) - np.sin(2 * phi21)
          + SQRT3 * np.cos(2 * phi22) + np.sin(2 * phi22))
    c1 = (SQRT3 * np.cos(phi11) - np.sin(phi11)
          + SQRT3 * np.cos(phi12) + np.sin(phi12)
          - SQRT3 * np.cos(phi21) + np.sin(phi21)
          + SQRT3 * np.cos(phi22) - np.sin(phi22))
    return SQRT3 / 6 * c2, c1 / math.sqrt(6)


def i3_of_phases(theta: float, s: PhaseSettings) -> float:
    """Closed-form I3 for a family state and arbitrary phases."""
    a, b = _i3_phase_sums(s.phi(1, 1), s.phi(1, 2), s.phi(2, 1), s.phi(2, 2))
    return float(math.sin(theta) ** 2 * a + math.sin(2 * theta) * b)


def optimal_settings(alpha1: float = 0.0) -> PhaseSettings:
    return PhaseSettings(alpha1, alpha1 + math.pi / 3,
                         -alpha1 + math.pi / 6, -alpha1 - math.pi / 6)


def i3_optimal(theta: float) -> float:
    """I3 of the family state under :func:`optimal_settings` (any alpha1)."""
    return 2 * math.sin(theta) ** 2 + 2 * math.sqrt(2 / 3) * math.sin(2 * theta)


def k3_optimal(theta: float) -> float:
    return 2 / 3 * (math.sqrt(2 / 3) * math.sin(2 * theta) - math.cos(theta) ** 2)


class Maximum(NamedTuple):
    theta: float
    settings: PhaseSettings
    i3: float


def _maximize_optimal_family() -> Maximum:
    res = optimize.minimize_scalar(
        lambda t: -i3_optimal(t), bracket=(0.0, math.pi / 4, math.pi / 2),
        method="golden", tol=1e-12,
    )
    theta = float(res.x)
    return Maximum(theta, optimal_settings(0.0), i3_optimal(theta))


def _wrap_phase(x: float) -> float:
    return float(np.mod(x, 2 * math.pi))


def _maximize_free_phases(phase_step: float = math.pi / 60,
                          theta_step: float = math.radians(0.5)) -> Maximum:
    # I3 depends on the phases only through alpha_a + beta_b, so alpha1 = 0
    # loses nothing.
    grid = np.arange(0.0, 2 * math.pi - 1e-12, phase_step)
    a2 = grid[:, None, None]
    b1 = grid[None, :, None]
    b2 = grid[None, None, :]
    coef_s2, coef_sd = _i3_phase_sums(b1, b2, a2 + b1, a2 + b2)

    best = (-math.inf, None, None)
    n_theta = int(round((math.pi / 2) / theta_step))
    for n in range(1, n_theta):
        theta = n * theta_step
        vals = math.sin(theta) ** 2 * coef_s2 + math.sin(2 * theta) * coef_sd
        idx = int(np.argmax(vals))
        if vals.flat[idx] > best[0]:
            best = (float(vals.flat[idx]), theta, np.unravel_index(idx, vals.shape))
    _, theta0, (i, j, k) = best
    x0 = np.array([theta0, grid[i], grid[j], grid[k]])

    def neg(x):
        return -i3_of_phases(x[0], PhaseSettings(0.0, x[1], x[2], x[3]))

    res = optimize.minimize(neg, x0, method="Powell",
                            options={"xtol": 1e-10, "ftol": 1e-15, "maxiter": 20000})
    theta, a2v, b1v, b2v = (float(v) for v in res.x)
    settings = PhaseSettings(0.0, _wrap_phase(a2v), _wrap_phase(b1v), _wrap_phase(b2v))
    return Maximum(theta, settings, i3_of_phases(theta, settings))


def maximize_violation(phase_family: str = "optimal_settings") -> Maximum:
    """Maximise I3 over the state angle (and, for ``free_4_phase``, the phases)."""
    if phase_family == "optimal_settings":
        return _maximize_optimal_family()
    if phase_family == "free_4_phase":
        return _maximize_free_phases()
    raise ValueError(f"unknown phase family {phase_family!r}")
