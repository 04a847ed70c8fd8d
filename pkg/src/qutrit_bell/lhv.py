"""Local hidden-variable models: deterministic strategies and the local polytope.

The local polytope is the convex hull of the 81 deterministic-strategy
distributions.  Classical bounds are found by brute force over those
vertices; membership is decided by a phase-1 simplex over the mixing
weights (exact in rational arithmetic, tolerance-based for floats).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple

from .functionals import BellFunctional, evaluate
from .prob_core import (
    FLOAT_TOL,
    OUTCOMES,
    JointDistribution,
    check_no_signaling,
    deterministic_distribution,
)


class DeterministicStrategy(NamedTuple):
    a1: int
    a2: int
    b1: int
    b2: int

    def __str__(self):
        return f"A1={self.a1} A2={self.a2} B1={self.b1} B2={self.b2}"


class IllConditioned(ValueError):
    pass


def enumerate_strategies() -> list[DeterministicStrategy]:
    return [DeterministicStrategy(*s) for s in itertools.product(OUTCOMES, repeat=4)]


def strategy_distribution(s: DeterministicStrategy) -> JointDistribution:
    return deterministic_distribution(*s)


_VERTICES: list | None = None


def _vertices() -> list[JointDistribution]:
    global _VERTICES
    if _VERTICES is None:
        _VERTICES = [strategy_distribution(s) for s in enumerate_strategies()]
    return _VERTICES


def classical_bound(f: BellFunctional) -> tuple[Fraction, list[DeterministicStrategy]]:
    """Exact maximum of ``f`` over deterministic strategies, with every maximiser."""
    values = [evaluate(f, d) for d in _vertices()]
    best = max(values)
    return best, [s for s, v in zip(enumerate_strategies(), values) if v == best]


# -- phase-1 simplex ------------------------------------------------------


def _phase_one(A, b, tol):
    """Minimise the sum of artificials for ``A x = b, x >= 0`` (``b >= 0``).

    Bland's rule for both entering and leaving choices.  Returns
    ``(objective, x)``.  ``tol`` is 0 for exact arithmetic.
    """
    m, n = len(A), len(A[0])
    zero = b[0] * 0
    # tableau rows: [A | I | b]
    T = [list(A[r]) + [zero + (1 if c == r else 0) for c in range(m)] + [b[r]]
         for r in range(m)]
    basis = [n + r for r in range(m)]
    width = n + m
    # reduced costs of minimising sum(artificials): -(column sums) on structurals
    cost = [-sum(T[r][c] for r in range(m)) if c < n else zero for c in range(width)]

    while True:
        enter = next((c for c in range(width) if cost[c] < -tol), None)
        if enter is None:
            break
        leave, best_ratio = None, None
        for r in range(m):
            a = T[r][enter]
            if a > tol:
                ratio = T[r][width] / a
                if (best_ratio is None or ratio < best_ratio - tol
                        or (abs(ratio - best_ratio) <= tol and basis[r] < basis[leave])):
                    leave, best_ratio = r, ratio
        if leave is None:  # unbounded cannot happen in phase 1
            break
        piv = T[leave][enter]
        T[leave] = [x / piv for x in T[leave]]
        for r in range(m):
            if r != leave and T[r][enter] != 0:
                f = T[r][enter]
                T[r] = [x - f * y for x, y in zip(T[r], T[leave])]
        f = cost[enter]
        cost = [x - f * y for x, y in zip(cost, T[leave][:width])]
        basis[leave] = enter

    x = [zero] * n
    for r, var in enumerate(basis):
        if var < n:
            x[var] = T[r][width]
    return sum(T[r][width] for r in range(m) if basis[r] >= n), x


@dataclass(frozen=True)
class MembershipResult:
    local: bool
    weights: dict | None  # strategy -> weight, nonzero entries only
    infeasibility: object  # phase-1 optimum; 0 when local
    witness_available: bool = False


def lp_membership(dist: JointDistribution, tol: float = FLOAT_TOL) -> MembershipResult:
    """Decide whether ``dist`` is a convex mixture of deterministic strategies.

    Rational input is decided exactly.  For float input a phase-1 optimum
    in the band ``(tol, 100*tol]``, or a mixture that fails to reproduce
    the input to ``100*tol``, raises :class:`IllConditioned`.
    """
    exact = dist.numeric == "rational"
    report = check_no_signaling(dist, tol)
    if not report.passed:
        raise ValueError(f"distribution signals (worst mismatch {report.worst})")

    verts = _vertices()
    strategies = enumerate_strategies()
    conv = (lambda x: x) if exact else float
    A = [[conv(v.p[k]) for v in verts] for k in range(36)]
    A.append([conv(1)] * len(verts))
    b = [conv(x) for x in dist.p] + [conv(1)]
    eps = 0 if exact else tol * 1e-3

    obj, x = _phase_one(A, b, eps)
    if exact:
        local = obj == 0
    else:
        if tol < obj <= 100 * tol:
            raise IllConditioned(
                f"phase-1 optimum {obj:.3g} is too close to the tolerance; "
                "supply the distribution as exact rationals"
            )
        local = obj <= tol
    if not local:
        return MembershipResult(False, None, obj)

    support = [(s, v, w) for s, v, w in zip(strategies, verts, x) if w != 0]
    weights = {s: w for s, _, w in support}
    recon = [sum(w * v.p[k] for _, v, w in support) for k in range(36)]
    err = max(abs(r - p) for r, p in zip(recon, dist.p))
    if exact:
        assert err == 0
    elif err > 100 * tol:
        raise IllConditioned(
            f"recovered mixture misses the input by {err:.3g}; "
            "supply the distribution as exact rationals"
        )
    return MembershipResult(True, weights, obj)
