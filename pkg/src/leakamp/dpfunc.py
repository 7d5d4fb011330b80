"""Finite two-party functionalities and their privacy and accuracy.

A functionality maps each input pair ``(x, y)`` of ``n``-bit strings to a
distribution over view pairs ``(va, vb)``.  The designated output of a view
token is the field before its first ``:``, which must be ``0`` or ``1``.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Optional

from .channel import Channel, join_tokens, leakage_wrt_output
from .dist import (
    CLOSED_FORM_TOL,
    INFINITE,
    Dist,
    Epsilon,
    Weight,
    eps_le,
    log_ratio,
    num_from_json,
    _num_to_json,
)
from .errors import DomainError, ImperfectAgreementError, ValidationError


def token_output(token: str) -> int:
    head = str(token).split(":", 1)[0]
    if head not in ("0", "1"):
        raise ValidationError(f"view token {token!r} does not start with an output bit")
    return int(head)


def bitstrings(n: int) -> list[str]:
    return [format(i, f"0{n}b") for i in range(2**n)] if n else [""]


def hamming(a: str, b: str) -> int:
    return sum(x != y for x, y in zip(a, b))


class Functionality:
    """Map from input pairs to distributions over ``(va, vb)`` token pairs.

    Args:
        n: input length in bits, per party.
        cells: mapping ``(x, y) -> Dist`` over ``(va, vb)`` pairs.
        target: optional Boolean function ``g(x, y)`` the outputs aim to compute.
    """

    def __init__(self, n: int, cells: dict, target: Optional[Callable] = None):
        if not isinstance(n, int) or n < 1:
            raise ValidationError(f"input length must be a positive integer, got {n!r}")
        domain = bitstrings(n)
        missing = [(x, y) for x in domain for y in domain if (x, y) not in cells]
        if missing:
            raise ValidationError(f"no cell for input pair {missing[0]}")
        extra = [k for k in cells if k[0] not in domain or k[1] not in domain]
        if extra:
            raise ValidationError(f"cell {extra[0]} is outside the {n}-bit domain")
        for key, d in cells.items():
            if not isinstance(d, Dist):
                raise ValidationError(f"cell {key} is not a distribution")
            for sym in d.symbols():
                if not (isinstance(sym, tuple) and len(sym) == 2):
                    raise ValidationError(f"cell {key}: symbol {sym!r} is not a (va, vb) pair")
                token_output(sym[0])
                token_output(sym[1])
        self.n = n
        self.cells = dict(cells)
        self.target = target

    @property
    def exact(self) -> bool:
        return all(d.exact for d in self.cells.values())

    def domain(self) -> list[str]:
        return bitstrings(self.n)

    def view_dist(self, x: str, y: str, party: str) -> Dist:
        i = 0 if party == "A" else 1
        out: dict = {}
        for pair, w in self.cells[(x, y)].items():
            if w > 0:
                out[pair[i]] = out.get(pair[i], 0) + w
        return Dist(out.items(), check=False)

    def __repr__(self):
        return f"Functionality(n={self.n}, exact={self.exact})"


@dataclass(frozen=True)
class DPWitness:
    party: str
    inputs: tuple
    neighbor: tuple
    view: str


@dataclass(frozen=True)
class DPReport:
    eps_measured: Epsilon
    neighbor_witness: Optional[DPWitness]
    avg_agreement: Weight
    avg_correctness_beta: Optional[Weight] = None
    worst_case_correctness: Optional[Weight] = None


@dataclass(frozen=True)
class Accuracy:
    avg_agreement: Weight
    avg_correctness_beta: Weight
    worst_case_correctness: Weight


def _neighbors(s: str):
    for i in range(len(s)):
        yield s[:i] + ("1" if s[i] == "0" else "0") + s[i + 1 :]


def check_eps_dp(f: Functionality, g: Optional[Callable] = None) -> DPReport:
    """Measured pure-DP epsilon over Hamming-1 neighbours.

    B's view is compared across neighbouring ``x`` with ``y`` fixed, and A's
    view across neighbouring ``y`` with ``x`` fixed.
    """
    best: Epsilon = 0.0
    witness = None
    domain = f.domain()
    for party in ("A", "B"):
        for x in domain:
            for y in domain:
                moved = _neighbors(y) if party == "A" else _neighbors(x)
                base = f.view_dist(x, y, party)
                for other in moved:
                    nxt = (x, other) if party == "A" else (other, y)
                    if nxt < (x, y):
                        continue
                    alt = f.view_dist(*nxt, party)
                    for v in set(base.support()) | set(alt.support()):
                        a, b = base.prob(v), alt.prob(v)
                        if a == 0 or b == 0:
                            value = INFINITE
                        else:
                            value = abs(log_ratio(a, b))
                        if not eps_le(value, best):
                            best = value
                            witness = DPWitness(party, (x, y), nxt, str(v))
                        if best is INFINITE:
                            break
    acc = measure_accuracy(f, g or f.target) if (g or f.target) else None
    if acc is None:
        return DPReport(best, witness, _avg_agreement(f))
    return DPReport(
        best, witness, acc.avg_agreement, acc.avg_correctness_beta, acc.worst_case_correctness
    )


def _half(f: Functionality):
    return Fraction(1, 2) if f.exact else 0.5


def _avg_agreement(f: Functionality) -> Weight:
    total = 0
    for d in f.cells.values():
        total += d.total(s for s in d.support() if token_output(s[0]) == token_output(s[1]))
    return total / len(f.cells) - _half(f)


def _target_table(g, n: int) -> Callable[[str, str], int]:
    if callable(g):
        return g
    if hasattr(g, "value"):
        if g.n != n:
            raise ValidationError(f"truth table is over {g.n} bits, functionality over {n}")
        return g.value
    raise ValidationError(f"cannot use {g!r} as a Boolean function")


def measure_accuracy(f: Functionality, g) -> Accuracy:
    """Average agreement, average correctness and worst-case correctness w.r.t. ``g``."""
    gv = _target_table(g, f.n)
    half = _half(f)
    correct_total = 0
    worst = None
    for (x, y), d in f.cells.items():
        want = int(gv(x, y))
        ok = d.total(
            s for s in d.support() if token_output(s[0]) == token_output(s[1]) == want
        )
        correct_total += ok
        worst = ok if worst is None or ok < worst else worst
    return Accuracy(
        _avg_agreement(f), correct_total / len(f.cells) - half, worst - half
    )


def group_privacy(eps, hamming_distance: int):
    if eps < 0:
        raise DomainError(f"eps must be non-negative, got {eps}")
    if not isinstance(hamming_distance, int) or hamming_distance < 1:
        raise DomainError(f"hamming distance must be a positive integer, got {hamming_distance!r}")
    return hamming_distance * eps


def restrict_functionality(f: Functionality, x0: str, x1: str, y0: str, y1: str) -> Functionality:
    """One-bit functionality with cell ``(b, c)`` equal to ``f(x_b, y_c)``."""
    domain = set(f.domain())
    for s in (x0, x1, y0, y1):
        if s not in domain:
            raise DomainError(f"{s!r} is not an {f.n}-bit input")
    xs, ys = (x0, x1), (y0, y1)
    cells = {
        (str(b), str(c)): f.cells[(xs[b], ys[c])] for b in (0, 1) for c in (0, 1)
    }
    target = None
    if f.target is not None:
        gt = f.target
        target = lambda b, c: gt(xs[int(b)], ys[int(c)])
    return Functionality(1, cells, target)


def _check_perfect_agreement(f: Functionality):
    for key, d in f.cells.items():
        bad = d.total(s for s in d.support() if token_output(s[0]) != token_output(s[1]))
        if (bad != 0) if d.exact else (bad > 1e-12):
            raise ImperfectAgreementError(
                f"cell {key}: outputs differ with probability {bad}"
            )


def dp_xor_to_channel(f: Functionality) -> Channel:
    """Channel induced by one joint call to ``f`` on uniform input bits.

    A outputs ``i_A xor r`` and B outputs ``out_B xor i_B xor r`` where ``r``
    is a public uniform bit sent by A.
    """
    if f.n != 1:
        raise ValidationError(f"needs 1-bit inputs, functionality has {f.n}")
    _check_perfect_agreement(f)
    eighth = Fraction(1, 8) if f.exact else 0.125
    rows = []
    for ia, ib, r in itertools.product((0, 1), repeat=3):
        for (va, vb), w in f.cells[(str(ia), str(ib))].items():
            if w == 0:
                continue
            rows.append(
                (
                    join_tokens(ia, va, r),
                    ia ^ r,
                    join_tokens(ib, vb, r),
                    token_output(vb) ^ ib ^ r,
                    w * eighth,
                )
            )
    return Channel(rows, check=False)


@dataclass(frozen=True)
class OutputLeakage:
    eps_a: Epsilon
    eps_b: Epsilon
    eps_dp: Epsilon
    holds: bool


def leakage_wrt_outputs_check(f: Functionality, tol: float = CLOSED_FORM_TOL) -> OutputLeakage:
    c = dp_xor_to_channel(f)
    ea = leakage_wrt_output(c, "A")
    eb = leakage_wrt_output(c, "B")
    dp = check_eps_dp(f).eps_measured
    holds = eps_le(ea, dp, tol) and eps_le(eb, dp, tol)
    return OutputLeakage(ea, eb, dp, holds)


def functionality_to_json(f: Functionality) -> dict:
    out = {
        "n": f.n,
        "cells": [
            {
                "x": x,
                "y": y,
                "atoms": [
                    {"va": str(va), "vb": str(vb), "p": _num_to_json(w)}
                    for (va, vb), w in f.cells[(x, y)].items()
                ],
            }
            for x in f.domain()
            for y in f.domain()
        ],
    }
    if f.target is not None:
        out["g"] = ["".join(str(int(f.target(x, y))) for y in f.domain()) for x in f.domain()]
    return out


def functionality_from_json(obj) -> Functionality:
    if isinstance(obj, str):
        obj = json.loads(obj)
    if not isinstance(obj, dict) or "n" not in obj or not isinstance(obj.get("cells"), list):
        raise ValidationError('functionality JSON needs "n" and a "cells" list')
    n = obj["n"]
    exact = any(
        isinstance(a.get("p"), str) for cell in obj["cells"] for a in cell.get("atoms", [])
    )
    cells = {}
    for i, cell in enumerate(obj["cells"]):
        try:
            key = (str(cell["x"]), str(cell["y"]))
            atoms = [
                ((str(a["va"]), str(a["vb"])), num_from_json(a["p"], exact))
                for a in cell["atoms"]
            ]
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"cell {i} is malformed: missing {exc}") from exc
        if key in cells:
            raise ValidationError(f"cell {i} repeats input pair {key}")
        try:
            cells[key] = Dist(atoms)
        except ValidationError as exc:
            raise ValidationError(f"cell {i} ({key}): {exc}") from exc
    target = None
    if "g" in obj:
        rows = obj["g"]
        domain = bitstrings(n)
        target = lambda x, y: int(rows[domain.index(x)][domain.index(y)])
    return Functionality(n, cells, target)
