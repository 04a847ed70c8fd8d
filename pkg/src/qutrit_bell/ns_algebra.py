"""Exact linear algebra over the normalisation + no-signaling constraints.

The 16 constraints on the 36 joint probabilities have rank 12, so any
solvable choice of 12 target variables can be written as an affine
function of the remaining 24.  Everything here is done in
:class:`fractions.Fraction`; there is no tolerance anywhere.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .functionals import BellFunctional, evaluate
from .prob_core import (
    OUTCOMES,
    SETTING_PAIRS,
    SETTINGS,
    JointDistribution,
    flat_index,
    format_fraction,
    uniform_distribution,
)

ZERO = Fraction(0)


class UnsolvableSelection(ValueError):
    """The chosen target variables cannot all be eliminated."""

    def __init__(self, targets, dependent):
        self.targets = tuple(sorted(targets))
        self.dependent = tuple(sorted(dependent))
        names = ", ".join(f"p{k}" for k in self.dependent)
        super().__init__(
            f"unsolvable selection: columns {{{names}}} of the constraint "
            f"matrix are linearly dependent"
        )


@dataclass(frozen=True)
class ConstraintSystem:
    matrix: tuple  # 16 rows of 36 Fractions
    rhs: tuple

    @property
    def shape(self) -> tuple[int, int]:
        return len(self.matrix), len(self.matrix[0])

    def residuals(self, dist: JointDistribution) -> list:
        """``A p - rhs`` row by row."""
        return [sum(c * x for c, x in zip(row, dist.p)) - r
                for row, r in zip(self.matrix, self.rhs)]

    def satisfied_by(self, dist: JointDistribution, tol: float = 0.0) -> bool:
        if dist.numeric == "rational":
            return all(r == 0 for r in self.residuals(dist))
        return all(abs(r) <= tol for r in self.residuals(dist))


def build_constraints() -> ConstraintSystem:
    """Rows 1-4 normalisation, 5-10 Alice marginals, 11-16 Bob marginals."""
    rows, rhs = [], []

    def row():
        return [ZERO] * 36

    for i, j in SETTING_PAIRS:
        r = row()
        for a in OUTCOMES:
            for b in OUTCOMES:
                r[flat_index(i, j, a, b) - 1] = Fraction(1)
        rows.append(r)
        rhs.append(Fraction(1))
    for i in SETTINGS:
        for m in OUTCOMES:
            r = row()
            for n in OUTCOMES:
                r[flat_index(i, 1, m, n) - 1] += 1
                r[flat_index(i, 2, m, n) - 1] -= 1
            rows.append(r)
            rhs.append(ZERO)
    for j in SETTINGS:
        for n in OUTCOMES:
            r = row()
            for m in OUTCOMES:
                r[flat_index(1, j, m, n) - 1] += 1
                r[flat_index(2, j, m, n) - 1] -= 1
            rows.append(r)
            rhs.append(ZERO)
    return ConstraintSystem(tuple(tuple(r) for r in rows), tuple(rhs))


# -- generic exact elimination --------------------------------------------


def row_reduce(rows: Sequence[Sequence], pivot_order: Iterable[int]):
    """Gauss-Jordan elimination restricted to the given pivot columns.

    Columns are visited in ``pivot_order``; for each, the first row (in
    row order) not yet used as a pivot row and having a nonzero entry
    becomes the pivot.  Returns ``(reduced_rows, pivots)`` where
    ``pivots`` maps column -> pivot row index.
    """
    m = [[Fraction(x) for x in r] for r in rows]
    pivots: dict[int, int] = {}
    used: set[int] = set()
    for col in pivot_order:
        prow = next((r for r in range(len(m)) if r not in used and m[r][col] != 0), None)
        if prow is None:
            continue
        used.add(prow)
        pivots[col] = prow
        inv = 1 / m[prow][col]
        m[prow] = [x * inv for x in m[prow]]
        for r in range(len(m)):
            if r != prow and m[r][col] != 0:
                f = m[r][col]
                m[r] = [x - f * y for x, y in zip(m[r], m[prow])]
    return m, pivots


def rank(rows: Sequence[Sequence]) -> int:
    _, pivots = row_reduce(rows, range(len(rows[0])))
    return len(pivots)


# -- affine expressions ---------------------------------------------------


@dataclass(frozen=True)
class AffineExpression:
    """``constant + sum coeffs[k] * p_k`` with exact, nonzero coefficients."""

    constant: Fraction = ZERO
    coeffs: Mapping = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "constant", Fraction(self.constant))
        object.__setattr__(
            self, "coeffs",
            {k: Fraction(c) for k, c in sorted(self.coeffs.items()) if c != 0},
        )

    def __hash__(self):
        return hash((self.constant, tuple(self.coeffs.items())))

    @classmethod
    def from_vector(cls, vec: Sequence, constant=ZERO) -> "AffineExpression":
        return cls(constant, {k: c for k, c in enumerate(vec, start=1) if c != 0})

    def is_zero(self) -> bool:
        return self.constant == 0 and not self.coeffs

    def variables(self) -> list[int]:
        return list(self.coeffs)

    def __add__(self, other: "AffineExpression") -> "AffineExpression":
        coeffs = dict(self.coeffs)
        for k, c in other.coeffs.items():
            coeffs[k] = coeffs.get(k, ZERO) + c
        return AffineExpression(self.constant + other.constant, coeffs)

    def __neg__(self) -> "AffineExpression":
        return self.scale(-1)

    def __sub__(self, other: "AffineExpression") -> "AffineExpression":
        return self + (-other)

    def scale(self, factor) -> "AffineExpression":
        factor = Fraction(factor)
        return AffineExpression(self.constant * factor,
                                {k: c * factor for k, c in self.coeffs.items()})

    def shift(self, offset) -> "AffineExpression":
        return AffineExpression(self.constant + Fraction(offset), self.coeffs)

    def evaluate(self, values):
        """Evaluate at a distribution or a ``{flat index: value}`` mapping."""
        if isinstance(values, JointDistribution):
            values = values.as_dict()
        return self.constant + sum(c * values[k] for k, c in self.coeffs.items())

    def render(self, target: int | None = None) -> str:
        parts = []
        if self.constant != 0 or not self.coeffs:
            parts.append(format_fraction(self.constant))
        for k, c in self.coeffs.items():
            mag = abs(c)
            term = f"p{k}" if mag == 1 else f"{format_fraction(mag)}*p{k}"
            if not parts:
                parts.append(term if c > 0 else f"-{term}")
            else:
                parts.append(f"+ {term}" if c > 0 else f"- {term}")
        body = " ".join(parts)
        return body if target is None else f"p{target} = {body}"

    def __str__(self):
        return self.render()

    def to_json_obj(self, target: int | None = None) -> dict:
        obj = {
            "constant": format_fraction(self.constant),
            "terms": [{"var": k, "c": format_fraction(c)} for k, c in self.coeffs.items()],
        }
        if target is not None:
            obj = {"target": target, **obj}
        return obj

    def to_json(self, target: int | None = None, **kwargs) -> str:
        return json.dumps(self.to_json_obj(target), **kwargs)


# -- solving and reduction ------------------------------------------------


def _check_targets(targets) -> list[int]:
    ts = sorted(set(int(t) for t in targets))
    if len(ts) != len(list(targets)) or any(not 1 <= t <= 36 for t in ts):
        raise ValueError(f"targets must be distinct flat indices in 1..36: {targets!r}")
    if len(ts) != 12:
        raise ValueError(f"exactly 12 targets are needed, got {len(ts)}")
    return ts


def solve_for(sys: ConstraintSystem, targets: Iterable[int]) -> dict[int, AffineExpression]:
    """Express each target as an affine function of the 24 free variables."""
    ts = _check_targets(list(targets))
    aug = [list(row) + [r] for row, r in zip(sys.matrix, sys.rhs)]
    reduced, pivots = row_reduce(aug, [t - 1 for t in ts])

    missing = [t for t in ts if t - 1 not in pivots]
    if missing:
        t = missing[0]
        dependent = {t} | {
            p + 1 for p, r in pivots.items() if reduced[r][t - 1] != 0
        }
        raise UnsolvableSelection(ts, dependent)

    free = [k for k in range(1, 37) if k not in ts]
    pivot_rows = set(pivots.values())
    for r, row in enumerate(reduced):
        if r not in pivot_rows and any(row):
            # only possible if the constraints tied free variables together
            raise UnsolvableSelection(ts, [k for k in free if row[k - 1] != 0])

    solved = {}
    for t in ts:
        row = reduced[pivots[t - 1]]
        solved[t] = AffineExpression(row[36], {k: -row[k - 1] for k in free})
    return solved


def reduce_vector(vec: Sequence, targets: Iterable[int],
                  sys: ConstraintSystem | None = None) -> AffineExpression:
    """Substitute the solved targets into ``sum vec[k-1] p_k``."""
    sys = sys or build_constraints()
    solved = solve_for(sys, targets)
    out = AffineExpression.from_vector(
        [c if k not in solved else ZERO for k, c in enumerate(vec, start=1)]
    )
    for t, expr in solved.items():
        c = vec[t - 1]
        if c != 0:
            out = out + expr.scale(c)
    return out


def reduce_functional(f: BellFunctional, targets: Iterable[int],
                      sys: ConstraintSystem | None = None) -> AffineExpression:
    """Rewrite a joint-only functional over the free variables."""
    if not f.is_joint_only:
        raise ValueError(f"{f.name} has single-party terms; expand them first")
    return reduce_vector(f.joint_vector(), targets, sys)


def residual(f: BellFunctional, g: BellFunctional, scale, offset,
             targets: Iterable[int], sys: ConstraintSystem | None = None) -> AffineExpression:
    """Reduced form of ``f - scale*g - offset``; zero iff the relation holds."""
    scale = Fraction(scale)
    vec = [x - scale * y for x, y in zip(f.joint_vector(), g.joint_vector())]
    return reduce_vector(vec, targets, sys).shift(-Fraction(offset))


def solve_linear(rows: Sequence[Sequence], rhs: Sequence):
    """One exact solution of ``rows @ x = rhs`` (free unknowns set to 0), or None."""
    n = len(rows[0])
    aug = [list(r) + [b] for r, b in zip(rows, rhs)]
    reduced, pivots = row_reduce(aug, range(n))
    pivot_rows = set(pivots.values())
    for r, row in enumerate(reduced):
        if r not in pivot_rows and row[n] != 0:
            return None
    x = [ZERO] * n
    for col, r in pivots.items():
        x[col] = reduced[r][n]
    return x


def affine_relation(f: BellFunctional, g: BellFunctional,
                    sys: ConstraintSystem | None = None):
    """Find ``(scale, offset)`` with ``f = scale*g + offset`` on every
    distribution obeying the constraints, or ``None``.

    Solves ``f = a*g + sum_r mu_r A_r`` for ``(a, mu)`` in one exact linear
    system; the offset is then ``sum_r mu_r rhs_r``.
    """
    sys = sys or build_constraints()
    fv, gv = f.joint_vector(), g.joint_vector()
    # unknowns: a, mu_1..mu_16; one equation per flat index
    rows = [[gv[k]] + [sys.matrix[r][k] for r in range(len(sys.matrix))] for k in range(36)]
    sol = solve_linear(rows, fv)
    if sol is None:
        return None
    a, mu = sol[0], sol[1:]
    b = sum((m * r for m, r in zip(mu, sys.rhs)), ZERO)
    return a, b


def relation_candidate(f: BellFunctional, g: BellFunctional) -> tuple[Fraction, Fraction]:
    """Affine map taking ``f`` to ``g`` that agrees at the classical bound and
    at the uniform distribution.

    Used to report a residual when no exact relation exists.  Falls back to
    ``scale = 1`` when ``f`` is already at its bound on the uniform point.
    """
    u = uniform_distribution()
    fu, gu = evaluate(f, u), evaluate(g, u)
    if f.bound == fu:
        return Fraction(1), g.bound - f.bound
    scale = (g.bound - gu) / (f.bound - fu)
    return scale, gu - scale * fu
