"""Finite probability distributions and the distances between them.

Weights are either all :class:`fractions.Fraction` (the exact backend) or all
``float`` (the binary64 backend).  Mixing the two silently degrades to floats.

The central quantity is the hockey-stick divergence::

    delta(eps) = max over b of  sum_x max(0, P_b(x) - e^eps * P_{1-b}(x))

which is the smallest ``delta`` for which ``P`` and ``Q`` are
``(eps, delta)``-log-ratio close.  The subset supremum in the definition is
attained on the likelihood-ratio threshold set, so a linear scan suffices.
"""

from __future__ import annotations

import enum
import itertools
import json
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Hashable, Iterable, Iterator, Mapping, Union

from .errors import (
    DegenerateConditioningError,
    DomainError,
    EnumerationCapError,
    InfeasibleProjectionError,
    SupportError,
    UndefinedSymbolError,
    ValidationError,
)

Weight = Union[Fraction, float]

FLOAT_TOL = 1e-9
CLOSED_FORM_TOL = 1e-12
DEFAULT_CAP = 2_000_000

BISECT_ITERATIONS = 200
BISECT_WIDTH = 1e-12


class Infinite(enum.Enum):
    """The distinguished "no finite epsilon works" outcome."""

    INFINITE = "infinite"

    def __repr__(self):
        return "INFINITE"

    def __str__(self):
        return "infinite"


INFINITE = Infinite.INFINITE
Epsilon = Union[float, Infinite]


def is_infinite(eps) -> bool:
    return eps is INFINITE


def eps_to_float(eps: Epsilon) -> float:
    return math.inf if eps is INFINITE else float(eps)


def eps_max(*values: Epsilon) -> Epsilon:
    if any(v is INFINITE for v in values):
        return INFINITE
    return max(values)


def eps_le(a: Epsilon, b: Epsilon, tol: float = 0.0) -> bool:
    """``a <= b + tol`` with INFINITE ordered above every real."""
    if b is INFINITE:
        return True
    if a is INFINITE:
        return False
    return a <= b + tol


def as_weight(x) -> Weight:
    if isinstance(x, bool):
        raise ValidationError(f"boolean is not a probability: {x!r}")
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        try:
            return Fraction(x.strip())
        except ValueError as exc:
            raise ValidationError(f"not a probability: {x!r}") from exc
    return float(x)


def exp_factor(eps, exact: bool) -> Weight:
    """``e^eps`` in the backend's number type.

    On the exact backend the binary64 value of ``e^eps`` is rationalised once,
    so every later comparison is an exact rational comparison.
    """
    if eps < 0:
        raise DomainError(f"eps must be non-negative, got {eps}")
    if eps == 0:
        return Fraction(1) if exact else 1.0
    if eps > 700:
        return math.inf
    value = math.exp(eps)
    return Fraction(value) if exact else value


def log_ratio(a: Weight, b: Weight) -> float:
    """``ln(a / b)`` for positive ``a``, ``b``; exact ratios go through big ints."""
    if isinstance(a, Fraction) and isinstance(b, Fraction):
        r = a / b
        return math.log(r.numerator) - math.log(r.denominator)
    return math.log(a) - math.log(b)


class Dist:
    """An immutable finite distribution over hashable symbols.

    Zero-weight atoms are kept (so related distributions can share a symbol
    universe) but every distance evaluator ignores them.
    """

    __slots__ = ("_w", "_exact")

    def __init__(self, atoms: Union[Mapping, Iterable], *, check: bool = True):
        pairs = list(atoms.items()) if isinstance(atoms, Mapping) else list(atoms)
        weights = [as_weight(w) for _, w in pairs]
        exact = all(isinstance(w, Fraction) for w in weights)
        if not exact:
            weights = [float(w) for w in weights]
        table = {}
        for (sym, _), w in zip(pairs, weights):
            if sym in table:
                raise ValidationError(f"duplicate symbol {sym!r}")
            if check and w < 0:
                raise ValidationError(f"negative weight {w} on symbol {sym!r}")
            table[sym] = w
        if check:
            total = sum(weights, Fraction(0) if exact else 0.0)
            if exact and total != 1:
                raise ValidationError(f"weights sum to {total}, not 1")
            if not exact and abs(total - 1.0) > FLOAT_TOL:
                raise ValidationError(f"weights sum to {total!r}, not 1")
        self._w = table
        self._exact = exact

    @classmethod
    def uniform(cls, symbols: Iterable[Hashable], exact: bool = True) -> "Dist":
        symbols = list(symbols)
        w = Fraction(1, len(symbols)) if exact else 1.0 / len(symbols)
        return cls((s, w) for s in symbols)

    @classmethod
    def point(cls, symbol: Hashable) -> "Dist":
        return cls([(symbol, Fraction(1))])

    @property
    def exact(self) -> bool:
        return self._exact

    def prob(self, symbol) -> Weight:
        return self._w.get(symbol, self._zero())

    def _zero(self) -> Weight:
        return Fraction(0) if self._exact else 0.0

    def items(self):
        return self._w.items()

    def symbols(self) -> list:
        return list(self._w)

    def support(self) -> list:
        return [s for s, w in self._w.items() if w > 0]

    def total(self, symbols: Iterable) -> Weight:
        return sum((self.prob(s) for s in symbols), self._zero())

    def to_float(self) -> "Dist":
        return Dist(((s, float(w)) for s, w in self._w.items()), check=False)

    def __iter__(self) -> Iterator:
        return iter(self._w)

    def __len__(self) -> int:
        return len(self._w)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Dist):
            return NotImplemented
        keys = set(self.support()) | set(other.support())
        return all(self.prob(k) == other.prob(k) for k in keys)

    def isclose(self, other: "Dist", tol: float = FLOAT_TOL) -> bool:
        keys = set(self.support()) | set(other.support())
        return all(abs(self.prob(k) - other.prob(k)) <= tol for k in keys)

    def __repr__(self):
        inner = ", ".join(f"{s!r}: {w}" for s, w in self._w.items())
        return f"Dist({{{inner}}})"


def _exact_pair(p: Dist, q: Dist) -> bool:
    return p.exact and q.exact


def _union(p: Dist, q: Dist) -> list:
    seen = dict.fromkeys(p.support())
    seen.update(dict.fromkeys(q.support()))
    return list(seen)


def statistical_distance(p: Dist, q: Dist) -> Weight:
    zero = Fraction(0) if _exact_pair(p, q) else 0.0
    total = sum((abs(p.prob(x) - q.prob(x)) for x in _union(p, q)), zero)
    return total / 2


def hockey_stick(p: Dist, q: Dist, eps) -> Weight:
    """One-directional divergence ``sum_x max(0, p(x) - e^eps q(x))``."""
    exact = _exact_pair(p, q)
    factor = exp_factor(eps, exact)
    total = Fraction(0) if exact else 0.0
    for x in p.support():
        px, qx = p.prob(x), q.prob(x)
        if qx == 0:
            total += px
        elif factor != math.inf:
            d = px - factor * qx
            if d > 0:
                total += d
    return total


def log_ratio_delta(p: Dist, q: Dist, eps) -> Weight:
    """Smallest delta such that ``p`` and ``q`` are (eps, delta)-log-ratio close."""
    return max(hockey_stick(p, q, eps), hockey_stick(q, p, eps))


def _max_finite_log_ratio(p: Dist, q: Dist) -> float:
    best = 0.0
    for x in _union(p, q):
        px, qx = p.prob(x), q.prob(x)
        if px > 0 and qx > 0:
            best = max(best, abs(log_ratio(px, qx)))
    return best


def log_ratio_epsilon(p: Dist, q: Dist, delta=0) -> Epsilon:
    """Smallest eps with ``log_ratio_delta(p, q, eps) <= delta``.

    At ``delta == 0`` this is the closed form max |ln p(x)/q(x)| over the
    common support; otherwise a bisection on the monotone map eps -> delta(eps).
    Returns :data:`INFINITE` when uncovered one-sided mass exceeds ``delta``.
    """
    if not 0 <= delta <= 1:
        raise DomainError(f"delta must lie in [0, 1], got {delta}")
    exact = _exact_pair(p, q)
    if delta == 0:
        for x in _union(p, q):
            if p.prob(x) == 0 or q.prob(x) == 0:
                return INFINITE
        return _max_finite_log_ratio(p, q)

    tol = 0 if exact else CLOSED_FORM_TOL
    if log_ratio_delta(p, q, 0) <= delta + tol:
        return 0.0
    uncovered = max(
        sum((p.prob(x) for x in p.support() if q.prob(x) == 0), 0),
        sum((q.prob(x) for x in q.support() if p.prob(x) == 0), 0),
    )
    if uncovered > delta + tol:
        return INFINITE
    hi = _max_finite_log_ratio(p, q)
    # e^hi is rounded, so the top of the bracket may sit a hair short.
    for _ in range(64):
        if log_ratio_delta(p, q, hi) <= delta + tol:
            break
        hi = hi * (1 + 1e-12) + 1e-15
    else:
        return INFINITE
    lo = 0.0
    for _ in range(BISECT_ITERATIONS):
        if hi - lo < BISECT_WIDTH:
            break
        mid = (lo + hi) / 2
        if log_ratio_delta(p, q, mid) <= delta + tol:
            hi = mid
        else:
            lo = mid
    return hi


def _check_cap(required: int, cap: int):
    if required > cap:
        raise EnumerationCapError(required, cap)


def product(p: Dist, ell: int, cap: int = DEFAULT_CAP) -> Dist:
    """Distribution of ``ell`` independent samples, over ``ell``-tuples."""
    if ell < 1:
        raise DomainError(f"ell must be positive, got {ell}")
    support = p.support()
    _check_cap(len(support) ** ell, cap)
    one = Fraction(1) if p.exact else 1.0
    atoms = []
    for tup in itertools.product(support, repeat=ell):
        w = one
        for s in tup:
            w *= p.prob(s)
        atoms.append((tup, w))
    return Dist(atoms, check=False)


def _compositions(total: int, parts: int) -> Iterator[tuple]:
    if parts == 1:
        yield (total,)
        return
    for first in range(total, -1, -1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


def product_types(
    p: Dist, ell: int, universe: list | None = None, cap: int = DEFAULT_CAP
) -> Dist:
    """The ``ell``-fold product compressed to multiset types.

    A type is the tuple of ``(symbol, count)`` pairs with positive count.  The
    type is a sufficient statistic for every i.i.d. product, so likelihood
    ratios (hence all hockey-stick and statistical distances between two
    products over the same ``universe``) are preserved exactly.
    """
    if ell < 1:
        raise DomainError(f"ell must be positive, got {ell}")
    universe = list(p.support()) if universe is None else list(universe)
    k = len(universe)
    _check_cap(math.comb(ell + k - 1, k - 1), cap)
    probs = [p.prob(s) for s in universe]
    atoms = []
    if p.exact:
        for counts in _compositions(ell, k):
            w = Fraction(_multinomial(ell, counts))
            for pr, n in zip(probs, counts):
                if n:
                    w *= pr**n
            atoms.append((_type_symbol(universe, counts), w))
    else:
        logs = [math.log(pr) if pr > 0 else None for pr in probs]
        head = math.lgamma(ell + 1)
        for counts in _compositions(ell, k):
            if any(n and lg is None for n, lg in zip(counts, logs)):
                w = 0.0
            else:
                lw = head
                for lg, n in zip(logs, counts):
                    if n:
                        lw += n * lg - math.lgamma(n + 1)
                w = math.exp(lw)
            atoms.append((_type_symbol(universe, counts), w))
    return Dist(atoms, check=False)


def _multinomial(ell: int, counts) -> int:
    out, left = 1, ell
    for n in counts:
        out *= math.comb(left, n)
        left -= n
    return out


def _type_symbol(universe, counts) -> tuple:
    return tuple((s, n) for s, n in zip(universe, counts) if n)


def compress_pair(p: Dist, q: Dist) -> tuple[Dist, Dist]:
    """Merge symbols that share a likelihood ratio ``p(x)/q(x)``.

    Returns two distributions over class labels ``0..k-1``.  Merging equal-ratio
    symbols leaves every hockey-stick divergence unchanged.  Float ratios are
    matched on 13 significant digits of the log ratio.
    """
    exact = _exact_pair(p, q)
    classes: dict = {}
    for x in _union(p, q):
        px, qx = p.prob(x), q.prob(x)
        if qx == 0:
            key = ("inf",)
        elif px == 0:
            key = ("zero",)
        elif exact:
            key = ("r", px / qx)
        else:
            key = ("r", f"{log_ratio(px, qx):.12e}")
        acc = classes.setdefault(key, [0, 0])
        acc[0] += px
        acc[1] += qx
    merged = list(classes.values())
    pd = Dist(((i, a) for i, (a, _) in enumerate(merged)), check=False)
    qd = Dist(((i, b) for i, (_, b) in enumerate(merged)), check=False)
    return pd, qd


def product_pair(p: Dist, q: Dist, ell: int, cap: int = DEFAULT_CAP) -> tuple[Dist, Dist]:
    """``(p^ell, q^ell)`` reduced to a shared, distance-preserving type space."""
    pc, qc = compress_pair(p, q)
    universe = list(pc.symbols())
    return (
        product_types(pc, ell, universe, cap),
        product_types(qc, ell, universe, cap),
    )


def condition(p: Dist, event: Callable[[Hashable], bool]) -> Dist:
    kept = [(s, w) for s, w in p.items() if event(s)]
    mass = sum((w for _, w in kept), p._zero())
    if mass <= 0:
        raise DegenerateConditioningError("conditioning event has probability zero")
    return Dist(((s, w / mass) for s, w in kept), check=False)


def pushforward(p: Dist, f) -> Dist:
    """Image of ``p`` under a map.

    ``f`` may be a mapping, a function returning a symbol, or a function
    returning a :class:`Dist` (a randomised kernel).
    """
    out: dict = {}
    for s, w in p.items():
        if w == 0:
            continue
        if isinstance(f, Mapping):
            if s not in f:
                raise UndefinedSymbolError(f"map undefined on symbol {s!r}")
            image = f[s]
        else:
            image = f(s)
        if isinstance(image, Dist):
            for t, v in image.items():
                out[t] = out.get(t, 0) + w * v
        else:
            out[image] = out.get(image, 0) + w
    return Dist(out.items(), check=False)


def kl_divergence(p: Dist, q: Dist) -> float:
    total = 0.0
    for x in p.support():
        qx = q.prob(x)
        if qx == 0:
            raise SupportError(f"p has mass on {x!r} where q has none")
        total += float(p.prob(x)) * log_ratio(p.prob(x), qx)
    return total


@dataclass(frozen=True)
class LogRatioBudget:
    eps: float
    delta: Weight

    def __post_init__(self):
        if self.eps < 0:
            raise DomainError(f"eps must be non-negative, got {self.eps}")
        if not 0 <= self.delta <= 1:
            raise DomainError(f"delta must lie in [0, 1], got {self.delta}")


@dataclass(frozen=True)
class RepetitionBound:
    eps: float
    delta: Weight
    ell: int
    delta_prime: float
    eta: float
    delta_out: Weight


def repetition_bound(eps, delta, ell: int, delta_prime) -> RepetitionBound:
    """Budget that ``ell`` independent repetitions of an (eps, delta) pair meet.

    ``eta = ell*eps*(e^eps - 1) + eps*sqrt(2*ell*ln(1/delta'))`` and
    ``delta_out = ell*delta + delta'``.
    """
    LogRatioBudget(eps, delta)
    if not isinstance(ell, int) or ell < 1:
        raise DomainError(f"ell must be a positive integer, got {ell!r}")
    if not 0 < delta_prime < 1:
        raise DomainError(f"delta_prime must lie in (0, 1), got {delta_prime}")
    eta = ell * eps * math.expm1(eps) + eps * math.sqrt(2 * ell * math.log(1 / delta_prime))
    return RepetitionBound(eps, delta, ell, delta_prime, eta, ell * delta + delta_prime)


def project_to_eps_ball(d_b: Dist, d_other: Dist, eps) -> Dist:
    """Move ``d_b`` by at most delta so it becomes (eps, 0)-close to ``d_other``.

    Points where ``d_b`` is too heavy are clipped to ``e^eps d_other``; points
    where it is too light are raised to ``e^-eps d_other``.  The net mass change
    is absorbed inside the band ``[d_other, ...]`` on the side that has slack,
    which never pushes a point out of the ``e^{+-eps}`` band.
    """
    exact = _exact_pair(d_b, d_other)
    up = exp_factor(eps, exact)
    down = (1 / up) if up != math.inf else 0
    zero = Fraction(0) if exact else 0.0
    universe = _union(d_b, d_other)
    new = {x: d_b.prob(x) for x in universe}

    removed = zero
    added = zero
    for x in universe:
        b, o = d_b.prob(x), d_other.prob(x)
        if b > up * o:
            new[x] = up * o
            removed += b - up * o
        elif b < down * o:
            new[x] = down * o
            added += down * o - b

    excess = removed - added
    if excess > 0:
        # Mass is missing: raise points where d_other > d_b, up to d_other.
        for x in sorted(universe, key=repr):
            if excess <= 0:
                break
            o = d_other.prob(x)
            if o > d_b.prob(x):
                room = o - new[x]
                if room > 0:
                    step = min(room, excess)
                    new[x] += step
                    excess -= step
    elif excess < 0:
        # Too much mass: lower points where d_b > d_other, down to d_other.
        need = -excess
        for x in sorted(universe, key=repr):
            if need <= 0:
                break
            o = d_other.prob(x)
            if d_b.prob(x) > o:
                room = new[x] - o
                if room > 0:
                    step = min(room, need)
                    new[x] -= step
                    need -= step
        excess = -need
    tol = 0 if exact else FLOAT_TOL
    if abs(excess) > tol:
        raise InfeasibleProjectionError(
            f"cannot rebalance {excess} of mass inside the eps band"
        )
    return Dist(new.items(), check=False)


def dist_to_json(p: Dist) -> dict:
    return {"atoms": [{"sym": str(s), "p": _num_to_json(w)} for s, w in p.items()]}


def dist_from_json(obj) -> Dist:
    if isinstance(obj, str):
        obj = json.loads(obj)
    try:
        raw = obj["atoms"]
    except (KeyError, TypeError) as exc:
        raise ValidationError('distribution JSON needs an "atoms" list') from exc
    exact = any(isinstance(a.get("p"), str) for a in raw)
    atoms = []
    for i, a in enumerate(raw):
        if "sym" not in a or "p" not in a:
            raise ValidationError(f"atom {i} needs 'sym' and 'p'")
        atoms.append((str(a["sym"]), num_from_json(a["p"], exact)))
    return Dist(atoms)


def num_from_json(value, exact: bool) -> Weight:
    if isinstance(value, bool) or not isinstance(value, (int, float, str)):
        raise ValidationError(f"not a number: {value!r}")
    if exact:
        return as_weight(value if isinstance(value, str) else str(value))
    return float(value)


def _num_to_json(w):
    if isinstance(w, Fraction):
        return f"{w.numerator}/{w.denominator}"
    return w
