"""Two-party channels: joint distributions of (view, output) pairs.

A channel is a finite distribution over atoms ``(va, oa, vb, ob)`` where each
party's output bit is a function of its own view.  Views are opaque hashable
tokens; transformed channels build structured tokens with :func:`join_tokens`.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable

from .dist import (
    FLOAT_TOL,
    Dist,
    Epsilon,
    Weight,
    eps_max,
    log_ratio_epsilon,
    num_from_json,
    statistical_distance,
    _num_to_json,
)
from .errors import (
    DegenerateAgreementError,
    DegenerateConditioningError,
    DegenerateOutputError,
    DomainError,
    NotSymmetricError,
    ValidationError,
)

PARTIES = ("A", "B")


def join_tokens(*parts) -> str:
    """Structured view token; the brackets and ``;`` are reserved."""
    return "[" + ";".join(str(p) for p in parts) + "]"


class Channel:
    """Joint distribution of ``((va, oa), (vb, ob))``.

    Args:
        atoms: iterable of ``(va, oa, vb, ob, weight)``.
        check: validate weights and the view-determines-output rule.
    """

    __slots__ = ("dist",)

    def __init__(self, atoms: Iterable, *, check: bool = True):
        rows = list(atoms)
        merged: dict = {}
        for row in rows:
            if len(row) != 5:
                raise ValidationError(f"atom needs 5 fields, got {row!r}")
            va, oa, vb, ob, w = row
            if oa not in (0, 1) or ob not in (0, 1) or isinstance(oa, bool) or isinstance(ob, bool):
                raise ValidationError(f"outputs must be bits 0/1, got {row!r}")
            key = (va, int(oa), vb, int(ob))
            merged[key] = merged.get(key, 0) + w if key in merged else w
        self.dist = Dist(merged.items(), check=check)
        if check:
            _check_determined(self.dist)

    @classmethod
    def from_dist(cls, d: Dist, check: bool = True) -> "Channel":
        c = cls.__new__(cls)
        c.dist = d
        if check:
            _check_determined(d)
        return c

    @property
    def exact(self) -> bool:
        return self.dist.exact

    def atoms(self) -> list:
        return [(va, oa, vb, ob, w) for (va, oa, vb, ob), w in self.dist.items()]

    def __len__(self):
        return len(self.dist)

    def __repr__(self):
        return f"Channel({len(self)} atoms, exact={self.exact})"


def _check_determined(d: Dist):
    seen = ({}, {})
    for (va, oa, vb, ob), _ in d.items():
        for table, view, out, name in ((seen[0], va, oa, "A"), (seen[1], vb, ob, "B")):
            prev = table.setdefault(view, out)
            if prev != out:
                raise ValidationError(
                    f"party {name} view {view!r} maps to both outputs 0 and 1"
                )


def _index(party: str) -> int:
    if party not in PARTIES:
        raise ValidationError(f"party must be 'A' or 'B', got {party!r}")
    return 0 if party == "A" else 1


def _view(atom, party_index: int):
    return atom[0] if party_index == 0 else atom[2]


def agreement(c: Channel) -> Weight:
    eq = c.dist.total(a for a in c.dist.support() if a[1] == a[3])
    return eq - (Fraction(1, 2) if c.exact else 0.5)


def output_one_prob(c: Channel, party: str) -> Weight:
    k = 1 if party == "A" else 3
    _index(party)
    return c.dist.total(a for a in c.dist.support() if a[k] == 1)


def _split_on_agreement(c: Channel):
    eq_mass = c.dist.total(a for a in c.dist.support() if a[1] == a[3])
    neq_mass = c.dist.total(a for a in c.dist.support() if a[1] != a[3])
    if eq_mass <= 0 or neq_mass <= 0:
        raise DegenerateAgreementError(
            f"agreement is {agreement(c)}; leakage needs both outputs-equal and "
            "outputs-differ events to have positive probability"
        )


def conditioned_views(c: Channel, party: str) -> tuple[Dist, Dist]:
    """The party's view given ``oa == ob`` and given ``oa != ob``."""
    i = _index(party)
    _split_on_agreement(c)
    view = lambda a: _view(a, i)
    eq = _marginal(c.dist, lambda a: a[1] == a[3], view)
    neq = _marginal(c.dist, lambda a: a[1] != a[3], view)
    return eq, neq


def _marginal(d: Dist, event, f) -> Dist:
    out: dict = {}
    mass = 0
    for a, w in d.items():
        if w > 0 and event(a):
            key = f(a)
            out[key] = out.get(key, 0) + w
            mass += w
    if mass <= 0:
        raise DegenerateConditioningError("conditioning event has probability zero")
    return Dist(((k, v / mass) for k, v in out.items()), check=False)


@dataclass(frozen=True)
class LeakageProfile:
    eps_a: Epsilon
    eps_b: Epsilon
    eps_max: Epsilon
    at_delta: Weight


def leakage(c: Channel, delta=0) -> LeakageProfile:
    """Minimal log-ratio eps at ``delta`` between each party's view on agree vs disagree."""
    eps = []
    for party in PARTIES:
        eq, neq = conditioned_views(c, party)
        eps.append(log_ratio_epsilon(eq, neq, delta))
    return LeakageProfile(eps[0], eps[1], eps_max(*eps), delta)


def leakage_wrt_output(c: Channel, party: str) -> Epsilon:
    """Log-ratio eps of ``(view, out)`` of ``party`` given the other output is 0 vs 1."""
    i = _index(party)
    other = 3 if i == 0 else 1
    own = (lambda a: (a[0], a[1])) if i == 0 else (lambda a: (a[2], a[3]))
    try:
        d0 = _marginal(c.dist, lambda a: a[other] == 0, own)
        d1 = _marginal(c.dist, lambda a: a[other] == 1, own)
    except DegenerateConditioningError as exc:
        raise DegenerateOutputError(
            f"the output of the party other than {party} is constant"
        ) from exc
    return log_ratio_epsilon(d0, d1, 0)


def _half(c: Channel):
    return Fraction(1, 2) if c.exact else 0.5


def _close(a, b, exact: bool, tol: float = FLOAT_TOL) -> bool:
    return a == b if exact else abs(a - b) <= tol


def is_balanced(c: Channel, tol: float = FLOAT_TOL) -> bool:
    h = _half(c)
    return all(_close(output_one_prob(c, p), h, c.exact, tol) for p in PARTIES)


def balance(c: Channel) -> Channel:
    """Channel induced by XORing both outputs with a public uniform bit ``r``.

    The bit is appended to both views, so each new view still determines its
    output.
    """
    h = _half(c)
    atoms = []
    for (va, oa, vb, ob), w in c.dist.items():
        for r in (0, 1):
            atoms.append((join_tokens(va, r), oa ^ r, join_tokens(vb, r), ob ^ r, w * h))
    return Channel.from_dist(
        Dist((((a, b, c_, d), w) for a, b, c_, d, w in atoms), check=False), check=False
    )


def normalize_agreement(c: Channel) -> Channel:
    """Flip B's output when agreement is negative; otherwise return ``c``."""
    if agreement(c) >= 0:
        return c
    d = Dist((((va, oa, vb, 1 - ob), w) for (va, oa, vb, ob), w in c.dist.items()), check=False)
    return Channel.from_dist(d, check=False)


@dataclass(frozen=True)
class SWBSCParams:
    eps0: Weight
    p: Weight


@dataclass(frozen=True)
class WBSCParams:
    mu: Weight
    eps0: Weight
    eps1: Weight
    p: Weight
    q: Weight


def _flip_rate_given(c: Channel, b: int) -> Weight:
    given = c.dist.total(a for a in c.dist.support() if a[1] == b)
    if given <= 0:
        raise DegenerateConditioningError(f"Pr[oa = {b}] is zero")
    flips = c.dist.total(a for a in c.dist.support() if a[1] == b and a[3] != b)
    return flips / given


def swbsc_params(c: Channel, tol: float = FLOAT_TOL) -> SWBSCParams:
    h = _half(c)
    if not _close(output_one_prob(c, "A"), h, c.exact, tol):
        raise NotSymmetricError(
            f"Pr[oa = 0] is {1 - output_one_prob(c, 'A')}, not 1/2"
        )
    r0, r1 = _flip_rate_given(c, 0), _flip_rate_given(c, 1)
    if not _close(r0, r1, c.exact, tol):
        raise NotSymmetricError(
            f"Pr[ob != oa | oa = b] differs across b: {r0} vs {r1}"
        )
    eps0 = c.dist.total(a for a in c.dist.support() if a[1] != a[3])
    dists = []
    for party in PARTIES:
        eq, neq = conditioned_views(c, party)
        dists.append(statistical_distance(eq, neq))
    return SWBSCParams(eps0, max(dists))


def wbsc_params(c: Channel) -> WBSCParams:
    """The five WBSC parameters, each the tightest value the channel meets."""
    pr_a0 = 1 - output_one_prob(c, "A")
    mu = abs(1 - 2 * pr_a0)
    rates = [_flip_rate_given(c, 0), _flip_rate_given(c, 1)]
    _split_on_agreement(c)
    own_a = lambda a: (a[0], a[1])
    p = statistical_distance(
        _marginal(c.dist, lambda a: a[1] == a[3], own_a),
        _marginal(c.dist, lambda a: a[1] != a[3], own_a),
    )
    qs = []
    for b in (0, 1):
        view_b = lambda a: a[2]
        d0 = _marginal(c.dist, lambda a, b=b: a[3] == b and a[1] == 0, view_b)
        d1 = _marginal(c.dist, lambda a, b=b: a[3] == b and a[1] == 1, view_b)
        qs.append(statistical_distance(d0, d1))
    return WBSCParams(mu, min(rates), max(rates), p, max(qs))


def swbsc_to_wbsc(s: SWBSCParams) -> WBSCParams:
    return WBSCParams(0 * s.eps0, s.eps0, s.eps0, 2 * s.p, 2 * s.p)


@dataclass(frozen=True)
class WullschlegerReport:
    eps0: float
    p: float
    lhs: float
    rhs: float
    holds: bool
    boundary: bool
    note: str = ""


def wullschleger_condition(eps0, p) -> WullschlegerReport:
    """Evaluate ``150(1-(1-p)^2) < (1 - 2e^2/(e^2+(1-e)^2))^2`` at ``e = eps0``.

    Values on the boundary of ``eps0 in (0, 1/2)``, ``p in (0, 1)`` are plugged
    into the same expression (both sides are continuous there) and flagged.
    A distance bound ``p > 1`` says nothing beyond ``p = 1``, so it is
    evaluated at 1; the polynomial would otherwise turn back down past 1.
    """
    e, pp = float(eps0), float(p)
    if pp < 0:
        raise DomainError(f"p must be non-negative, got {pp}")
    note = ""
    if pp > 1:
        note = f"p = {pp} exceeds 1 and is vacuous; evaluated at p = 1"
        pp = 1.0
    lhs = 150 * (1 - (1 - pp) ** 2)
    rhs = (1 - 2 * e * e / (e * e + (1 - e) ** 2)) ** 2
    boundary = not (0 < e < 0.5 and 0 < pp < 1)
    if boundary and not note:
        note = "evaluated at a boundary value by continuity"
    return WullschlegerReport(e, pp, lhs, rhs, lhs < rhs, boundary, note)


def channel_to_json(c: Channel) -> dict:
    return {
        "atoms": [
            {"va": str(va), "oa": oa, "vb": str(vb), "ob": ob, "p": _num_to_json(w)}
            for va, oa, vb, ob, w in c.atoms()
        ]
    }


def channel_from_json(obj) -> Channel:
    if isinstance(obj, str):
        obj = json.loads(obj)
    if not isinstance(obj, dict) or not isinstance(obj.get("atoms"), list):
        raise ValidationError('channel JSON needs an "atoms" list')
    raw = obj["atoms"]
    exact = any(isinstance(a.get("p"), str) for a in raw if isinstance(a, dict))
    rows = []
    first_view = ({}, {})
    for i, a in enumerate(raw):
        if not isinstance(a, dict):
            raise ValidationError(f"atom {i} is not an object")
        missing = [k for k in ("va", "oa", "vb", "ob", "p") if k not in a]
        if missing:
            raise ValidationError(f"atom {i} is missing {', '.join(missing)}")
        va, vb = str(a["va"]), str(a["vb"])
        oa, ob = a["oa"], a["ob"]
        if oa not in (0, 1) or ob not in (0, 1):
            raise ValidationError(f"atom {i}: outputs must be 0 or 1")
        for table, view, out, name in ((first_view[0], va, oa, "va"), (first_view[1], vb, ob, "vb")):
            if view in table and table[view][1] != out:
                raise ValidationError(
                    f"atoms {table[view][0]} and {i} share {name}={view!r} "
                    "but have different outputs"
                )
            table.setdefault(view, (i, out))
        rows.append((va, oa, vb, ob, num_from_json(a["p"], exact)))
    return Channel(rows)
