"""Two-party, two-setting, three-outcome probability tables.

Joint probabilities ``P^{ij}(a, b)`` are stored flat, 36 entries, in the
order::

    k = 9 * (2*(i-1) + (j-1)) + 3*(a-1) + (b-1) + 1

so that ``p1 = P^11(1,1)``, ``p10 = P^12(1,1)``, ``p19 = P^21(1,1)`` and
``p36 = P^22(3,3)``.  Settings and outcomes are 1-based everywhere in the
public API.

A distribution is either *rational* (every entry a :class:`fractions.Fraction`)
or *float*.  Rational data may be converted to float, never the reverse.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Rational, Real
from typing import Iterable, Mapping, NamedTuple, Union

SETTINGS = (1, 2)
OUTCOMES = (1, 2, 3)
SETTING_PAIRS = ((1, 1), (1, 2), (2, 1), (2, 2))

#: Default absolute tolerance for float validity checks.
FLOAT_TOL = 1e-9

Number = Union[Fraction, float]


class Party(enum.Enum):
    ALICE = "A"
    BOB = "B"


class MarginalSide(NamedTuple):
    """One single-party probability ``P^i(a)`` (Alice) or ``Q^j(b)`` (Bob)."""

    party: Party
    setting: int
    outcome: int


class InvalidDistribution(ValueError):
    pass


def check_setting(i: int) -> int:
    if i not in SETTINGS:
        raise ValueError(f"setting must be 1 or 2, got {i!r}")
    return i


def check_outcome(a: int) -> int:
    if a not in OUTCOMES:
        raise ValueError(f"outcome must be 1, 2 or 3, got {a!r}")
    return a


def wrap_outcome(value: int) -> int:
    """Reduce an integer outcome label into {1, 2, 3} modulo 3."""
    return (value - 1) % 3 + 1


def wrap_setting(value: int) -> int:
    return (value - 1) % 2 + 1


def flat_index(i: int, j: int, a: int, b: int) -> int:
    """Flat 1-based index of ``P^{ij}(a, b)``."""
    check_setting(i)
    check_setting(j)
    check_outcome(a)
    check_outcome(b)
    return 9 * (2 * (i - 1) + (j - 1)) + 3 * (a - 1) + (b - 1) + 1


def unflat_index(k: int) -> tuple[int, int, int, int]:
    """Inverse of :func:`flat_index`."""
    if not 1 <= k <= 36:
        raise ValueError(f"flat index must be in 1..36, got {k!r}")
    pair, rest = divmod(k - 1, 9)
    i, j = divmod(pair, 2)
    a, b = divmod(rest, 3)
    return i + 1, j + 1, a + 1, b + 1


ALL_KEYS = tuple(unflat_index(k) for k in range(1, 37))


def _as_number(x, numeric: str) -> Number:
    if numeric == "rational":
        if isinstance(x, bool) or not isinstance(x, Rational):
            raise TypeError(
                f"rational distributions need exact entries, got {type(x).__name__}"
            )
        return Fraction(x)
    if not isinstance(x, Real):
        raise TypeError(f"expected a real number, got {type(x).__name__}")
    return float(x)


def _infer_numeric(values) -> str:
    if all(isinstance(v, Rational) and not isinstance(v, bool) for v in values):
        return "rational"
    return "float"


@dataclass(frozen=True)
class JointDistribution:
    """Immutable table of the 36 joint probabilities.

    Construction validates nonnegativity and per-setting-pair
    normalisation.  Float entries within ``-tol`` of zero are clamped to
    zero; anything more negative is rejected.  Rational data is checked
    exactly.
    """

    p: tuple
    numeric: str = field(default="")
    tol: float = field(default=FLOAT_TOL, compare=False, repr=False)

    def __post_init__(self):
        values = tuple(self.p)
        if len(values) != 36:
            raise InvalidDistribution(f"expected 36 probabilities, got {len(values)}")
        numeric = self.numeric or _infer_numeric(values)
        if numeric not in ("rational", "float"):
            raise ValueError(f"numeric must be 'rational' or 'float', got {numeric!r}")
        values = tuple(_as_number(v, numeric) for v in values)

        if numeric == "float":
            clamped = []
            for k, v in enumerate(values, start=1):
                if v != v or v in (float("inf"), float("-inf")):
                    raise InvalidDistribution(f"p{k} is not finite")
                if v < 0:
                    if v < -self.tol:
                        raise InvalidDistribution(f"p{k} = {v!r} is negative")
                    v = 0.0
                clamped.append(v)
            values = tuple(clamped)
        else:
            for k, v in enumerate(values, start=1):
                if v < 0:
                    raise InvalidDistribution(f"p{k} = {v} is negative")

        for n, (i, j) in enumerate(SETTING_PAIRS):
            total = sum(values[9 * n : 9 * n + 9])
            off = abs(total - 1)
            if (numeric == "rational" and off != 0) or (numeric == "float" and off > self.tol):
                raise InvalidDistribution(
                    f"setting pair ({i},{j}) sums to {total}, not 1"
                )

        object.__setattr__(self, "p", values)
        object.__setattr__(self, "numeric", numeric)

    # -- access -----------------------------------------------------------

    def __getitem__(self, key) -> Number:
        """``dist[i, j, a, b]`` or ``dist[k]`` with a flat index k."""
        if isinstance(key, tuple):
            return self.p[flat_index(*key) - 1]
        if not 1 <= key <= 36:
            raise IndexError(f"flat index must be in 1..36, got {key!r}")
        return self.p[key - 1]

    def block(self, i: int, j: int) -> list[list[Number]]:
        """3x3 table ``[[P^{ij}(a, b) for b] for a]``."""
        return [[self[i, j, a, b] for b in OUTCOMES] for a in OUTCOMES]

    def as_dict(self) -> dict[int, Number]:
        return {k: v for k, v in enumerate(self.p, start=1)}

    def to_float(self) -> "JointDistribution":
        if self.numeric == "float":
            return self
        return JointDistribution(tuple(float(v) for v in self.p), "float", self.tol)

    # -- construction -----------------------------------------------------

    @classmethod
    def from_function(cls, prob, numeric: str = "") -> "JointDistribution":
        """Build from a callable ``prob(i, j, a, b)``."""
        return cls(tuple(prob(*key) for key in ALL_KEYS), numeric)

    @classmethod
    def from_blocks(cls, blocks: Mapping[tuple[int, int], Iterable[Iterable]],
                    numeric: str = "") -> "JointDistribution":
        """Build from ``{(i, j): 3x3 table}``."""
        values = []
        for pair in SETTING_PAIRS:
            rows = [list(r) for r in blocks[pair]]
            values.extend(rows[a][b] for a in range(3) for b in range(3))
        return cls(tuple(values), numeric)

    # -- JSON -------------------------------------------------------------

    def to_json_obj(self) -> dict:
        if self.numeric == "rational":
            entries = [format_fraction(v) for v in self.p]
        else:
            entries = list(self.p)
        return {"p": entries, "numeric": self.numeric}

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_json_obj(), **kwargs)

    @classmethod
    def from_json_obj(cls, obj: Mapping) -> "JointDistribution":
        if not isinstance(obj, Mapping) or "p" not in obj:
            raise InvalidDistribution("distribution JSON needs a 'p' array")
        numeric = obj.get("numeric", "float")
        raw = obj["p"]
        if not isinstance(raw, list):
            raise InvalidDistribution("'p' must be an array")
        if numeric == "rational":
            try:
                values = tuple(parse_fraction(v) for v in raw)
            except (TypeError, ValueError, ZeroDivisionError) as exc:
                raise InvalidDistribution(f"bad rational entry: {exc}") from None
        elif numeric == "float":
            if not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in raw):
                raise InvalidDistribution("float distributions need numeric entries")
            values = tuple(float(v) for v in raw)
        else:
            raise InvalidDistribution(f"unknown numeric kind {numeric!r}")
        return cls(values, numeric)

    @classmethod
    def from_json(cls, text: str) -> "JointDistribution":
        return cls.from_json_obj(json.loads(text))


def format_fraction(x: Fraction) -> str:
    x = Fraction(x)
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def parse_fraction(s) -> Fraction:
    if isinstance(s, bool):
        raise TypeError("booleans are not numbers")
    if isinstance(s, int):
        return Fraction(s)
    if not isinstance(s, str):
        raise TypeError(f"expected an 'n/d' string, got {type(s).__name__}")
    return Fraction(s.strip())


# -- marginals and no-signaling -------------------------------------------


def marginal(dist: JointDistribution, m: MarginalSide, partner_setting: int) -> Number:
    """Single-party probability computed through the partner's setting."""
    check_setting(m.setting)
    check_outcome(m.outcome)
    check_setting(partner_setting)
    if m.party is Party.ALICE:
        return sum(dist[m.setting, partner_setting, m.outcome, b] for b in OUTCOMES)
    return sum(dist[partner_setting, m.setting, a, m.outcome] for a in OUTCOMES)


ALL_MARGINAL_SIDES = tuple(
    MarginalSide(party, s, o)
    for party in (Party.ALICE, Party.BOB)
    for s in SETTINGS
    for o in OUTCOMES
)


@dataclass(frozen=True)
class NSReport:
    passed: bool
    worst: Number
    violations: tuple  # ((MarginalSide, difference), ...)


def check_no_signaling(dist: JointDistribution, tol: float = FLOAT_TOL) -> NSReport:
    """Check the 12 marginal-equality conditions.

    For rational distributions the comparison is exact and ``tol`` is
    ignored.
    """
    exact = dist.numeric == "rational"
    worst = Fraction(0) if exact else 0.0
    bad = []
    for m in ALL_MARGINAL_SIDES:
        diff = marginal(dist, m, 1) - marginal(dist, m, 2)
        if abs(diff) > worst:
            worst = abs(diff)
        if (exact and diff != 0) or (not exact and abs(diff) > tol):
            bad.append((m, diff))
    return NSReport(not bad, worst, tuple(bad))


def single_marginal(dist: JointDistribution, m: MarginalSide,
                    tol: float = FLOAT_TOL) -> Number:
    """Partner-independent marginal; raises if the two routes disagree."""
    x1 = marginal(dist, m, 1)
    x2 = marginal(dist, m, 2)
    if dist.numeric == "rational":
        if x1 != x2:
            raise InvalidDistribution(f"marginal {m} depends on the partner setting")
        return x1
    if abs(x1 - x2) > tol:
        raise InvalidDistribution(f"marginal {m} depends on the partner setting")
    return 0.5 * (x1 + x2)


# -- named distributions --------------------------------------------------

PR_BOX_SUPPORT = (1, 5, 9, 10, 14, 18, 20, 24, 25, 28, 32, 36)


def pr_box_qutrit() -> JointDistribution:
    """No-signaling box reaching the algebraic maximum ``I3 = 4``."""
    third = Fraction(1, 3)
    return JointDistribution(
        tuple(third if k in PR_BOX_SUPPORT else Fraction(0) for k in range(1, 37)),
        "rational",
    )


def uniform_distribution() -> JointDistribution:
    return JointDistribution((Fraction(1, 9),) * 36, "rational")


def deterministic_distribution(a1: int, a2: int, b1: int, b2: int) -> JointDistribution:
    """Point-mass distribution: Alice outputs ``a_i`` for setting i, Bob ``b_j``."""
    alice = {1: check_outcome(a1), 2: check_outcome(a2)}
    bob = {1: check_outcome(b1), 2: check_outcome(b2)}
    return JointDistribution.from_function(
        lambda i, j, a, b: Fraction(int(alice[i] == a and bob[j] == b)), "rational"
    )


def mix(d1: JointDistribution, d2: JointDistribution, weight) -> JointDistribution:
    """Entrywise ``weight*d1 + (1-weight)*d2``; exact if all inputs are."""
    values = [weight * x + (1 - weight) * y for x, y in zip(d1.p, d2.p)]
    numeric = "rational" if _infer_numeric(values) == "rational" else "float"
    if numeric == "float":
        values = [float(v) for v in values]
    return JointDistribution(tuple(values), numeric)

