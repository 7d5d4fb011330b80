"""Concrete channels and functionalities.

Parameters given as ``Fraction``, ``int`` or ``"a/b"`` strings build exact
channels; floats build float channels.  Constructions whose weights are
transcendental in ``eps`` take an ``exact`` flag, in which case ``e^eps`` is
rationalised once and every weight is an exact function of that rational.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction

from .channel import Channel
from .dist import Dist, Weight, as_weight
from .dpfunc import Functionality, bitstrings
from .errors import DomainError


@dataclass(frozen=True)
class NoiseSpec:
    """A biased coin, stored as ``Pr[coin = 1]``."""

    one_prob: Weight

    def __post_init__(self):
        if not 0 <= self.one_prob <= 1:
            raise DomainError(f"coin probability must lie in [0, 1], got {self.one_prob}")

    @classmethod
    def half_minus(cls, bias) -> "NoiseSpec":
        """The coin ``U_{1/2 - bias}``."""
        b = as_weight(bias)
        half = Fraction(1, 2) if isinstance(b, Fraction) else 0.5
        return cls(half - b)

    def dist(self) -> list:
        return [(0, 1 - self.one_prob), (1, self.one_prob)]


def _half(x: Weight) -> Weight:
    return Fraction(1, 2) if isinstance(x, Fraction) else 0.5


def _exp(eps, exact: bool) -> Weight:
    if eps <= 0:
        raise DomainError(f"eps must be positive, got {eps}")
    e = math.exp(float(eps))
    return Fraction(e) if exact else e


def bsc_channel(p) -> Channel:
    """Uniform ``oa``; ``ob = oa xor Bernoulli(p)``; each view is its own output."""
    p = as_weight(p)
    if not 0 <= p <= 1:
        raise DomainError(f"flip probability must lie in [0, 1], got {p}")
    h = _half(p)
    rows = []
    for oa in (0, 1):
        for flip, w in ((0, 1 - p), (1, p)):
            ob = oa ^ flip
            rows.append((str(oa), oa, str(ob), ob, h * w))
    return Channel(rows)


def noisy_example_channel(alpha, noise_eps) -> Channel:
    """Correlated bits where each party also sees a noisy hint of the other's bit.

    ``ob = oa xor U_{1/2-alpha}``; A's view is ``(oa, ob xor U_{1/2-noise_eps})``
    and B's view is ``(ob, oa xor U_{1/2-noise_eps})`` with independent coins.
    """
    alpha, noise = as_weight(alpha), as_weight(noise_eps)
    if isinstance(alpha, Fraction) != isinstance(noise, Fraction):
        alpha, noise = float(alpha), float(noise)
    if not 0 <= alpha <= _half(alpha):
        raise DomainError(f"alpha must lie in [0, 1/2], got {alpha}")
    if not 0 <= noise <= _half(noise):
        raise DomainError(f"noise_eps must lie in [0, 1/2], got {noise}")
    corr = NoiseSpec.half_minus(alpha)
    hint = NoiseSpec.half_minus(noise)
    h = _half(alpha)
    rows = []
    for oa in (0, 1):
        for (c, wc), (ha, wa), (hb, wb) in itertools.product(
            corr.dist(), hint.dist(), hint.dist()
        ):
            ob = oa ^ c
            va = f"{oa}{ob ^ ha}"
            vb = f"{ob}{oa ^ hb}"
            rows.append((va, oa, vb, ob, h * wc * wa * wb))
    return Channel(rows)


def rr_flip_probability(eps, exact: bool = True, calibrated: bool = False) -> Weight:
    """Flip rate of the randomized-response messages.

    The standard rate is ``1/(1+e^eps)``.  The calibrated rate
    ``1/(1+sqrt(2e^eps - 1))`` is the largest-agreement rate at which the
    channel below has leakage exactly ``eps``.
    """
    e = _exp(eps, exact)
    if not calibrated:
        return 1 / (1 + e)
    s = math.sqrt(2 * float(e) - 1)
    rho = 1 / (1 + s)
    return Fraction(rho) if exact else rho


def randomized_response_channel(eps, calibrated: bool = False, exact: bool = True) -> Channel:
    """Two-message randomized response.

    A draws a uniform bit ``a`` and sends ``a xor fa``; B draws ``b`` and sends
    ``b xor fb``, with independent flips of rate :func:`rr_flip_probability`.
    A outputs ``a xor (b xor fb)``, B outputs ``(a xor fa) xor b``.  Views hold
    the own bit, the own flip and the received message.  Outputs agree exactly
    when ``fa == fb``.
    """
    rho = rr_flip_probability(eps, exact, calibrated)
    quarter = Fraction(1, 4) if exact else 0.25
    flip = [(0, 1 - rho), (1, rho)]
    rows = []
    for a, b in itertools.product((0, 1), repeat=2):
        for (fa, wa), (fb, wb) in itertools.product(flip, flip):
            ma, mb = a ^ fa, b ^ fb
            oa, ob = a ^ mb, ma ^ b
            rows.append((f"{a}{fa}{mb}", oa, f"{b}{fb}{ma}", ob, quarter * wa * wb))
    return Channel(rows)


def rr_agreement(eps, calibrated: bool = False, exact: bool = True) -> Weight:
    """Closed-form agreement ``(1 - 2 rho)^2 / 2`` of :func:`randomized_response_channel`."""
    rho = rr_flip_probability(eps, exact, calibrated)
    return (1 - 2 * rho) ** 2 / 2


def _cells(n: int, fn) -> dict:
    return {(x, y): Dist(fn(x, y)) for x in bitstrings(n) for y in bitstrings(n)}


def _xor(x: str, y: str) -> int:
    return int(x, 2) ^ int(y, 2)


def _parity(s: str) -> int:
    return s.count("1") % 2


def rr_xor_functionality(eps, beta_target=None, exact: bool = True) -> Functionality:
    """XOR by randomized response, reconciled so both parties output the same bit.

    Each party flips its input with rate ``1/(1+e^eps)`` and the two noisy bits
    are XORed into a common output.  With ``beta_target`` a public coin from A
    additionally flips the common output, lowering the correctness to exactly
    ``beta_target`` without touching privacy.
    """
    rho = rr_flip_probability(eps, exact)
    one = Fraction(1) if exact else 1.0
    natural = (1 - 2 * rho) ** 2 / 2
    if beta_target is None:
        coin = [(None, one)]
    else:
        t = as_weight(beta_target)
        if exact:
            t = Fraction(t)
        else:
            t = float(t)
        if not 0 <= t <= natural:
            raise DomainError(f"beta_target must lie in [0, {float(natural)}], got {float(t)}")
        pc = (1 - t / natural) / 2
        coin = [(0, 1 - pc), (1, pc)]
    flip = [(0, 1 - rho), (1, rho)]

    def cell(x, y):
        atoms: dict = {}
        for (fa, wa), (fb, wb), (c, wc) in itertools.product(flip, flip, coin):
            ma, mb = int(x) ^ fa, int(y) ^ fb
            o = ma ^ mb ^ (c or 0)
            tail = "" if c is None else str(c)
            key = (f"{o}:{x}{fa}{mb}{tail}", f"{o}:{y}{fb}{ma}{tail}")
            atoms[key] = atoms.get(key, 0) + wa * wb * wc
        return atoms.items()

    return Functionality(1, _cells(1, cell), _xor)


def noisy_xor_functionality(alpha) -> Functionality:
    """Both parties get the same bit ``x xor y xor U_{1/2-alpha}``."""
    alpha = as_weight(alpha)
    half = _half(alpha)
    if not 0 <= alpha <= half:
        raise DomainError(f"alpha must lie in [0, 1/2], got {alpha}")
    coin = NoiseSpec.half_minus(alpha)

    def cell(x, y):
        atoms = {}
        for c, w in coin.dist():
            o = _xor(x, y) ^ c
            key = (f"{o}:", f"{o}:")
            atoms[key] = atoms.get(key, 0) + w
        return atoms.items()

    return Functionality(1, _cells(1, cell), _xor)


def exact_xor_functionality() -> Functionality:
    return noisy_xor_functionality(Fraction(1, 2))


def constant_functionality(n: int = 1, bit: int = 0) -> Functionality:
    return Functionality(
        n, _cells(n, lambda x, y: [((f"{bit}:", f"{bit}:"), Fraction(1))]), _xor if n == 1 else None
    )


def parity_functionality(n: int) -> Functionality:
    """Deterministic ``parity(x) xor parity(y)``, given to both parties."""
    g = lambda x, y: _parity(x) ^ _parity(y)
    return Functionality(
        n, _cells(n, lambda x, y: [((f"{g(x, y)}:", f"{g(x, y)}:"), Fraction(1))]), g
    )


def revealing_xor_functionality() -> Functionality:
    """Exact XOR where each view also carries the other party's raw input."""

    def cell(x, y):
        o = _xor(x, y)
        return [((f"{o}:{x}{y}", f"{o}:{x}{y}"), Fraction(1))]

    return Functionality(1, _cells(1, cell), _xor)
