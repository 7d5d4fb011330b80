"""Monotone-under-relabeling tests and embedded-XOR extraction.

Row ``x`` of a truth table has zero-set ``Z_x = {y : g(x, y) = 0}``.  The
function is monotone under relabeling exactly when the row zero-sets form a
chain under inclusion (and then so do the column zero-sets).  Two incomparable
rows ``x0, x1`` give ``y0 in Z_x0 - Z_x1`` and ``y1 in Z_x1 - Z_x0``, and those
four inputs reproduce the XOR table.

Zero-sets are stored as integer bitmasks, bit ``j`` standing for input ``j``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Callable, Optional

from .dist import CLOSED_FORM_TOL, INFINITE, eps_le
from .dpfunc import Functionality, check_eps_dp, group_privacy, hamming, restrict_functionality
from .errors import DomainError, NoWitnessError, ValidationError

DEFAULT_MAX_BITS = 10


def _bits(i: int, n: int) -> str:
    return format(i, f"0{n}b")


class TruthTable:
    """A Boolean function ``g(x, y)`` on ``n``-bit inputs, as a 2^n by 2^n table."""

    __slots__ = ("n", "rows")

    def __init__(self, n: int, rows):
        if not isinstance(n, int) or n < 1:
            raise ValidationError(f"n must be a positive integer, got {n!r}")
        size = 2**n
        rows = [tuple(int(v) for v in r) for r in rows]
        if len(rows) != size or any(len(r) != size for r in rows):
            raise ValidationError(f"table must be {size}x{size} for n={n}")
        if any(v not in (0, 1) for r in rows for v in r):
            raise ValidationError("table entries must be 0 or 1")
        self.n = n
        self.rows = tuple(rows)

    @classmethod
    def from_function(cls, n: int, g: Callable[[str, str], int]) -> "TruthTable":
        size = 2**n
        return cls(n, [[g(_bits(i, n), _bits(j, n)) for j in range(size)] for i in range(size)])

    def value(self, x: str, y: str) -> int:
        return self.rows[int(x, 2)][int(y, 2)]

    def transpose(self) -> "TruthTable":
        return TruthTable(self.n, list(zip(*self.rows)))

    def relabel(self, sx, sy) -> "TruthTable":
        """Table with row ``i`` equal to row ``sx[i]`` and column ``j`` to column ``sy[j]``."""
        ix = [int(s, 2) for s in sx]
        iy = [int(s, 2) for s in sy]
        return TruthTable(self.n, [[self.rows[i][j] for j in iy] for i in ix])

    def __eq__(self, other):
        return isinstance(other, TruthTable) and self.rows == other.rows

    def __repr__(self):
        return f"TruthTable(n={self.n})"

    def to_text(self) -> str:
        return "\n".join([str(self.n)] + ["".join(map(str, r)) for r in self.rows]) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "TruthTable":
        lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
        if not lines:
            raise ValidationError("empty truth table file")
        try:
            n = int(lines[0])
        except ValueError as exc:
            raise ValidationError(f"line 1: expected n, got {lines[0]!r}") from exc
        for k, ln in enumerate(lines[1:], start=2):
            if set(ln) - {"0", "1"}:
                raise ValidationError(f"line {k}: only 0/1 characters allowed")
        return cls(n, [list(ln) for ln in lines[1:]])

    def to_json(self) -> dict:
        return {"n": self.n, "rows": ["".join(map(str, r)) for r in self.rows]}

    @classmethod
    def from_json(cls, obj) -> "TruthTable":
        if isinstance(obj, str):
            obj = json.loads(obj)
        if not isinstance(obj, dict) or "n" not in obj or "rows" not in obj:
            raise ValidationError('truth table JSON needs "n" and "rows"')
        return cls(obj["n"], [list(r) for r in obj["rows"]])


def load_table(text: str) -> TruthTable:
    stripped = text.lstrip()
    if stripped.startswith("{"):
        return TruthTable.from_json(stripped)
    return TruthTable.from_text(text)


@dataclass(frozen=True)
class XorWitness:
    x0: str
    x1: str
    y0: str
    y1: str

    def verify(self, t: TruthTable) -> bool:
        xs, ys = (self.x0, self.x1), (self.y0, self.y1)
        return all(t.value(xs[b], ys[c]) == b ^ c for b in (0, 1) for c in (0, 1))

    def distances(self) -> tuple[int, int]:
        return hamming(self.x0, self.x1), hamming(self.y0, self.y1)


@dataclass(frozen=True)
class MonotoneVerdict:
    monotone: bool
    sigma_x: Optional[tuple] = None
    sigma_y: Optional[tuple] = None
    axis: Optional[str] = None
    violating_pair: Optional[tuple] = None


def _zero_masks(rows) -> list[int]:
    masks = []
    for r in rows:
        m = 0
        for j, v in enumerate(r):
            if v == 0:
                m |= 1 << j
        masks.append(m)
    return masks


def _chain_order(masks: list[int]):
    """Indices sorted by zero-set size, largest first, plus the first broken link."""
    order = sorted(range(len(masks)), key=lambda i: -bin(masks[i]).count("1"))
    for a, b in zip(order, order[1:]):
        if masks[b] & ~masks[a]:
            return order, (a, b)
    return order, None


def _check_size(t: TruthTable, max_bits: int):
    if t.n > max_bits:
        raise DomainError(f"table over {t.n} bits exceeds the cap of {max_bits}")


def is_monotone_under_relabeling(t: TruthTable, max_bits: int = DEFAULT_MAX_BITS) -> MonotoneVerdict:
    """Relabelings ``(sigma_x, sigma_y)`` making ``g`` non-decreasing, or a refusal.

    ``sigma_x[i]`` is the input placed at position ``i``.
    """
    _check_size(t, max_bits)
    n = t.n
    row_order, bad = _chain_order(_zero_masks(t.rows))
    if bad:
        return MonotoneVerdict(False, axis="x", violating_pair=(_bits(bad[0], n), _bits(bad[1], n)))
    col_order, bad = _chain_order(_zero_masks(list(zip(*t.rows))))
    if bad:
        return MonotoneVerdict(False, axis="y", violating_pair=(_bits(bad[0], n), _bits(bad[1], n)))
    return MonotoneVerdict(
        True, tuple(_bits(i, n) for i in row_order), tuple(_bits(j, n) for j in col_order)
    )


def verify_monotone(t: TruthTable, sigma_x, sigma_y) -> bool:
    r = t.relabel(sigma_x, sigma_y).rows
    rows_ok = all(list(row) == sorted(row) for row in r)
    cols_ok = all(list(col) == sorted(col) for col in zip(*r))
    return rows_ok and cols_ok


def _lowest_bit(m: int) -> int:
    return (m & -m).bit_length() - 1


def _witness(masks, a: int, b: int, n: int) -> XorWitness:
    y0 = _lowest_bit(masks[a] & ~masks[b])
    y1 = _lowest_bit(masks[b] & ~masks[a])
    return XorWitness(_bits(a, n), _bits(b, n), _bits(y0, n), _bits(y1, n))


def find_embedded_xor(
    t: TruthTable, exhaustive: bool = False, max_bits: int = DEFAULT_MAX_BITS
) -> Optional[XorWitness]:
    """An embedded XOR, or ``None`` exactly when ``t`` is monotone under relabeling.

    By default the first broken link of the size-sorted row chain is used and
    the smallest ``y`` on each side is taken.  With ``exhaustive`` every row
    pair and every choice of ``y`` is scanned and the witness with the smallest
    Hamming spread ``max(Ham(x0, x1), Ham(y0, y1))`` is returned.
    """
    _check_size(t, max_bits)
    n = t.n
    masks = _zero_masks(t.rows)
    _, bad = _chain_order(masks)
    if bad is None:
        return None
    if not exhaustive:
        w = _witness(masks, bad[0], bad[1], n)
        assert w.verify(t)
        return w
    best, best_key = None, None
    size = len(masks)
    for a in range(size):
        for b in range(a + 1, size):
            left, right = masks[a] & ~masks[b], masks[b] & ~masks[a]
            if not left or not right:
                continue
            dx = hamming(_bits(a, n), _bits(b, n))
            for y0 in _iter_bits(left):
                for y1 in _iter_bits(right):
                    w = XorWitness(_bits(a, n), _bits(b, n), _bits(y0, n), _bits(y1, n))
                    key = (max(dx, hamming(w.y0, w.y1)), dx + hamming(w.y0, w.y1))
                    if best_key is None or key < best_key:
                        best, best_key = w, key
    assert best is not None and best.verify(t)
    return best


def _iter_bits(m: int):
    while m:
        low = m & -m
        yield low.bit_length() - 1
        m ^= low


@dataclass(frozen=True)
class ReductionReport:
    witness: XorWitness
    n: int
    eps: float
    beta: float
    c: float
    hamming_x: int
    hamming_y: int
    inflation: int
    inflated_eps: float
    blanket_eps: float
    verdict: bool
    blanket_verdict: bool
    restricted_eps: Optional[float] = None
    restricted_within_bound: Optional[bool] = None


def reduction_report(
    t: TruthTable,
    eps,
    beta,
    c: float = 1.0,
    functionality: Optional[Functionality] = None,
    exhaustive: bool = False,
) -> ReductionReport:
    """Privacy cost of computing XOR through an embedded copy in ``t``.

    The inflation factor is the larger of the two witness Hamming distances;
    the blanket ``n`` factor is reported alongside.
    """
    w = find_embedded_xor(t, exhaustive=exhaustive)
    if w is None:
        raise NoWitnessError("function is monotone under relabeling; no embedded XOR")
    dx, dy = w.distances()
    d = max(dx, dy)
    inflated = group_privacy(eps, d)
    blanket = group_privacy(eps, t.n)
    r_eps = within = None
    if functionality is not None:
        restricted = restrict_functionality(functionality, w.x0, w.x1, w.y0, w.y1)
        r_eps = check_eps_dp(restricted).eps_measured
        src = check_eps_dp(functionality).eps_measured
        bound = src if src is INFINITE else d * src
        within = eps_le(r_eps, bound, CLOSED_FORM_TOL)
    return ReductionReport(
        w, t.n, eps, beta, c, dx, dy, d, inflated, blanket,
        beta >= c * inflated**2, beta >= c * blanket**2, r_eps, within,
    )
