"""Bell functionals: linear forms over joint and single-party probabilities.

Every functional is normalised to the convention ``value <= bound``; a
value above the bound is a violation.  Coefficients are exact rationals.
Marginal terms stay symbolic until :func:`expand_marginals` rewrites them as
sums of joint probabilities through a chosen partner setting.
"""

from __future__ import annotations

import enum
import itertools
import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, NamedTuple

from .prob_core import (
    FLOAT_TOL,
    OUTCOMES,
    JointDistribution,
    MarginalSide,
    Party,
    check_no_signaling,
    check_outcome,
    check_setting,
    flat_index,
    format_fraction,
    marginal,
    parse_fraction,
    wrap_outcome,
    wrap_setting,
)


class Direction(enum.Enum):
    A_MINUS_B = "AminusB"
    B_MINUS_A = "BminusA"


class CGLMPChoice(NamedTuple):
    c1: int
    c2: int
    c3: int
    c4: int

    def validate(self) -> "CGLMPChoice":
        if any(c not in (-1, 0, 1) for c in self):
            raise ValueError(f"CGLMP coefficients must be -1, 0 or +1: {tuple(self)}")
        if sum(self) % 3 == 0:
            raise ValueError(f"c1+c2+c3+c4 must not vanish mod 3: {tuple(self)}")
        return self


class WFamilyChoice(NamedTuple):
    alpha: int
    beta: int
    x: int
    y: int

    def validate(self) -> "WFamilyChoice":
        if self.alpha not in (0, 1) or self.beta not in (0, 1):
            raise ValueError("alpha and beta must be 0 or 1")
        if self.x not in (0, 1, 2) or self.y not in (0, 1, 2):
            raise ValueError("x and y must be 0, 1 or 2")
        return self


class NoSignalingRequired(ValueError):
    """Marginal terms are ambiguous on a signaling distribution."""


def _clean(coeffs: Mapping) -> dict:
    return {k: Fraction(v) for k, v in sorted(coeffs.items()) if v != 0}


@dataclass(frozen=True, eq=False)
class BellFunctional:
    """``sum joint[i,j,a,b] P^{ij}(a,b) + sum alice[i,a] P^i(a) + sum bob[j,b] Q^j(b)``."""

    name: str
    bound: Fraction
    joint: Mapping = field(default_factory=dict)
    alice: Mapping = field(default_factory=dict)
    bob: Mapping = field(default_factory=dict)

    def __post_init__(self):
        for key in self.joint:
            i, j, a, b = key
            check_setting(i), check_setting(j), check_outcome(a), check_outcome(b)
        for key in itertools.chain(self.alice, self.bob):
            s, o = key
            check_setting(s), check_outcome(o)
        object.__setattr__(self, "bound", Fraction(self.bound))
        object.__setattr__(self, "joint", _clean(self.joint))
        object.__setattr__(self, "alice", _clean(self.alice))
        object.__setattr__(self, "bob", _clean(self.bob))

    def __eq__(self, other):
        if not isinstance(other, BellFunctional):
            return NotImplemented
        return self.same_form(other) and self.bound == other.bound

    def same_form(self, other: "BellFunctional") -> bool:
        """Identical coefficients, ignoring name and bound."""
        return (self.joint == other.joint and self.alice == other.alice
                and self.bob == other.bob)

    @property
    def is_joint_only(self) -> bool:
        return not self.alice and not self.bob

    def marginal_sides(self) -> list[MarginalSide]:
        return ([MarginalSide(Party.ALICE, s, o) for s, o in self.alice]
                + [MarginalSide(Party.BOB, s, o) for s, o in self.bob])

    def joint_vector(self) -> list[Fraction]:
        """Coefficients over the 36 flat indices (requires joint-only form)."""
        if not self.is_joint_only:
            raise ValueError(f"{self.name} still has marginal terms; expand them first")
        vec = [Fraction(0)] * 36
        for key, c in self.joint.items():
            vec[flat_index(*key) - 1] = c
        return vec

    def flat_terms(self) -> dict[int, Fraction]:
        return {flat_index(*k): c for k, c in self.joint.items()}

    def renamed(self, name: str) -> "BellFunctional":
        return BellFunctional(name, self.bound, self.joint, self.alice, self.bob)

    # -- JSON -------------------------------------------------------------

    def to_json_obj(self) -> dict:
        return {
            "name": self.name,
            "bound": format_fraction(self.bound),
            "joint": [
                {"i": i, "j": j, "a": a, "b": b, "c": format_fraction(c)}
                for (i, j, a, b), c in self.joint.items()
            ],
            "alice_marg": [
                {"setting": s, "outcome": o, "c": format_fraction(c)}
                for (s, o), c in self.alice.items()
            ],
            "bob_marg": [
                {"setting": s, "outcome": o, "c": format_fraction(c)}
                for (s, o), c in self.bob.items()
            ],
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_json_obj(), **kwargs)

    @classmethod
    def from_json_obj(cls, obj: Mapping) -> "BellFunctional":
        try:
            joint = {}
            for t in obj.get("joint", []):
                key = (int(t["i"]), int(t["j"]), int(t["a"]), int(t["b"]))
                joint[key] = joint.get(key, 0) + parse_fraction(t["c"])
            marg = {}
            for side in ("alice_marg", "bob_marg"):
                d = {}
                for t in obj.get(side, []):
                    key = (int(t["setting"]), int(t["outcome"]))
                    d[key] = d.get(key, 0) + parse_fraction(t["c"])
                marg[side] = d
            return cls(str(obj["name"]), parse_fraction(obj["bound"]), joint,
                       marg["alice_marg"], marg["bob_marg"])
        except (KeyError, TypeError, ValueError, ZeroDivisionError) as exc:
            raise ValueError(f"malformed functional JSON: {exc}") from None

    @classmethod
    def from_json(cls, text: str) -> "BellFunctional":
        return cls.from_json_obj(json.loads(text))


# -- building blocks ------------------------------------------------------


def modular_difference_term(i: int, j: int, direction: Direction, k: int) -> frozenset:
    """Outcome pairs (a, b) with ``a - b = k`` (or ``b - a = k``) mod 3."""
    check_setting(i), check_setting(j)
    direction = Direction(direction)
    pairs = set()
    for a in OUTCOMES:
        b = wrap_outcome(a - k) if direction is Direction.A_MINUS_B else wrap_outcome(a + k)
        pairs.add((a, b))
    return frozenset(pairs)


def _add_term(joint: dict, i: int, j: int, direction: Direction, k: int, sign: int):
    for a, b in modular_difference_term(i, j, direction, k):
        joint[i, j, a, b] = joint.get((i, j, a, b), 0) + sign


def cglmp_functional(c) -> BellFunctional:
    """Member of the 54-element CGLMP family, bound 2."""
    c1, c2, c3, c4 = CGLMPChoice(*c).validate()
    A, B = Direction.A_MINUS_B, Direction.B_MINUS_A
    joint: dict = {}
    # P(A1 = B1 + c1) + P(B1 = A2 + c2) + P(A2 = B2 + c3) + P(B2 = A1 + c4)
    _add_term(joint, 1, 1, A, c1, +1)
    _add_term(joint, 2, 1, B, c2, +1)
    _add_term(joint, 2, 2, A, c3, +1)
    _add_term(joint, 1, 2, B, c4, +1)
    _add_term(joint, 1, 1, A, -(c2 + c3 + c4), -1)
    _add_term(joint, 2, 1, B, -(c1 + c3 + c4), -1)
    _add_term(joint, 2, 2, A, -(c1 + c2 + c4), -1)
    _add_term(joint, 1, 2, B, -(c1 + c2 + c3), -1)
    return BellFunctional(f"CGLMP({c1},{c2},{c3},{c4})", Fraction(2), joint)


def enumerate_cglmp() -> list[CGLMPChoice]:
    """The 54 valid choices, lexicographic in (-1, 0, +1)."""
    return [CGLMPChoice(*c) for c in itertools.product((-1, 0, 1), repeat=4)
            if sum(c) % 3 != 0]


def i3_functional() -> BellFunctional:
    return cglmp_functional((0, 1, 0, 0)).renamed("I3")


def i3_prime_functional() -> BellFunctional:
    return cglmp_functional((0, 0, 0, 1)).renamed("I3p")


def _ch_functional(name, joint_terms, alice_terms, bob_terms) -> BellFunctional:
    joint: dict = {}
    for sign, (i, j, a, b) in joint_terms:
        joint[i, j, a, b] = joint.get((i, j, a, b), 0) + sign
    return BellFunctional(
        name, Fraction(0), joint,
        {k: -1 for k in alice_terms}, {k: -1 for k in bob_terms},
    )


def k3_functional() -> BellFunctional:
    """CH-type partner of I3, bound 0."""
    terms = [
        (+1, (1, 1, 1, 1)), (+1, (1, 2, 1, 1)), (-1, (2, 1, 1, 1)), (+1, (2, 2, 1, 1)),
        (+1, (1, 1, 2, 2)), (+1, (1, 2, 2, 2)), (-1, (2, 1, 2, 2)), (+1, (2, 2, 2, 2)),
        (+1, (1, 1, 2, 1)), (+1, (1, 2, 1, 2)), (-1, (2, 1, 2, 1)), (+1, (2, 2, 2, 1)),
    ]
    return _ch_functional("K3", terms, [(1, 1), (1, 2)], [(2, 1), (2, 2)])


def k3_prime_functional() -> BellFunctional:
    """CH-type partner of I3p, bound 0."""
    terms = [
        (+1, (1, 1, 1, 1)), (-1, (1, 2, 1, 1)), (+1, (2, 1, 1, 1)), (+1, (2, 2, 1, 1)),
        (+1, (1, 1, 2, 2)), (-1, (1, 2, 2, 2)), (+1, (2, 1, 2, 2)), (+1, (2, 2, 2, 2)),
        (+1, (1, 1, 2, 1)), (-1, (1, 2, 2, 1)), (+1, (2, 1, 1, 2)), (+1, (2, 2, 2, 1)),
    ]
    return _ch_functional("K3p", terms, [(2, 1), (2, 2)], [(1, 1), (1, 2)])


def w_family_functional(w) -> BellFunctional:
    """One of the 36 relabelled CH-type functionals; ``(0,0,0,0)`` is W3."""
    alpha, beta, x, y = WFamilyChoice(*w).validate()

    def s(k):
        return wrap_setting(k + alpha)

    def t(k):
        return wrap_setting(k + beta)

    def o(k, shift):
        return wrap_outcome(k + shift)

    signs = {(1, 1): +1, (1, 2): +1, (2, 1): -1, (2, 2): +1}
    rows = [
        {pair: (2, 1) for pair in signs},
        {pair: (1, 2) for pair in signs},
        {(1, 1): (2, 2), (1, 2): (1, 1), (2, 1): (2, 2), (2, 2): (2, 2)},
    ]
    terms = []
    for row in rows:
        for (i, j), (a, b) in row.items():
            terms.append((signs[i, j], (s(i), t(j), o(a, x), o(b, y))))
    alice = [(s(1), o(1, x)), (s(1), o(2, x))]
    bob = [(t(2), o(1, y)), (t(2), o(2, y))]
    return _ch_functional(f"W({alpha},{beta},{x},{y})", terms, alice, bob)


def w3_functional() -> BellFunctional:
    return w_family_functional((0, 0, 0, 0)).renamed("W3")


def enumerate_w_family() -> list[WFamilyChoice]:
    return [WFamilyChoice(*w) for w in itertools.product((0, 1), (0, 1), (0, 1, 2), (0, 1, 2))]


# Partner settings that write K3, K3p and W3 with ten joint terms each.
K3_EXPANSION = {
    MarginalSide(Party.ALICE, 1, 1): 2,
    MarginalSide(Party.ALICE, 1, 2): 1,
    MarginalSide(Party.BOB, 2, 1): 2,
    MarginalSide(Party.BOB, 2, 2): 2,
}
K3P_EXPANSION = {
    MarginalSide(Party.ALICE, 2, 1): 1,
    MarginalSide(Party.ALICE, 2, 2): 2,
    MarginalSide(Party.BOB, 1, 1): 1,
    MarginalSide(Party.BOB, 1, 2): 2,
}
W3_EXPANSION = {
    MarginalSide(Party.ALICE, 1, 1): 2,
    MarginalSide(Party.ALICE, 1, 2): 1,
    MarginalSide(Party.BOB, 2, 1): 1,
    MarginalSide(Party.BOB, 2, 2): 2,
}


def expand_marginals(f: BellFunctional, choice: Mapping | None = None) -> BellFunctional:
    """Replace every single-party term by a 3-term joint sum.

    ``choice`` maps each :class:`MarginalSide` of ``f`` to the partner
    setting used for the sum.  With ``choice=None`` partner setting 1 is
    used throughout; on no-signaling data every choice gives the same
    value.
    """
    if choice is None:
        choice = {m: 1 for m in f.marginal_sides()}
    joint = dict(f.joint)
    for m in f.marginal_sides():
        if m not in choice:
            raise KeyError(f"no partner setting chosen for {m}")
        partner = check_setting(choice[m])
        if m.party is Party.ALICE:
            c = f.alice[m.setting, m.outcome]
            keys = [(m.setting, partner, m.outcome, b) for b in OUTCOMES]
        else:
            c = f.bob[m.setting, m.outcome]
            keys = [(partner, m.setting, a, m.outcome) for a in OUTCOMES]
        for key in keys:
            joint[key] = joint.get(key, 0) + c
    return BellFunctional(f.name, f.bound, joint)


def evaluate(f: BellFunctional, dist: JointDistribution, tol: float = FLOAT_TOL):
    """Value of ``f`` on ``dist``; exact when ``dist`` is rational."""
    exact = dist.numeric == "rational"
    total = Fraction(0) if exact else 0.0
    for key, c in f.joint.items():
        total += (c if exact else float(c)) * dist[key]
    if f.is_joint_only:
        return total
    report = check_no_signaling(dist, tol)
    if not report.passed:
        raise NoSignalingRequired(
            f"{f.name} has single-party terms but the distribution signals "
            f"(worst marginal mismatch {report.worst})"
        )
    for m in f.marginal_sides():
        coeffs = f.alice if m.party is Party.ALICE else f.bob
        c = coeffs[m.setting, m.outcome]
        total += (c if exact else float(c)) * marginal(dist, m, 1)
    return total


NAMED = {
    "I3": i3_functional,
    "I3p": i3_prime_functional,
    "K3": k3_functional,
    "K3p": k3_prime_functional,
    "W3": w3_functional,
}


def by_name(name: str) -> BellFunctional:
    """Resolve ``I3``, ``I3p``, ``K3``, ``K3p``, ``W3``, ``CGLMP(c1,c2,c3,c4)``
    or ``W(alpha,beta,x,y)``."""
    name = name.strip()
    if name in NAMED:
        return NAMED[name]()
    for prefix, build in (("CGLMP(", cglmp_functional), ("W(", w_family_functional)):
        if name.startswith(prefix) and name.endswith(")"):
            try:
                args = tuple(int(x) for x in name[len(prefix):-1].split(","))
            except ValueError:
                break
            if len(args) == 4:
                return build(args)
    raise KeyError(f"unknown functional {name!r}")
