"""Agreement amplification.

``Delta_ell`` calls a channel ``ell`` times per round and keeps the round only
when the pattern ``oa_i xor ob_i`` is constant across the calls (event ``E``).
A then announces ``S = {oa, oa xor 1^ell}`` and each party outputs the index
of its own tuple in ``S`` under lexicographic order, which is just the first
bit of its tuple.  Outputs agree exactly when every call agreed.

``Lambda_d`` is ``Delta_2`` run over ``Lambda_{d-1}``, with ``Lambda_0`` a
single channel call.  It has the output statistics of ``Delta_{2^d}`` at an
expected cost of at most ``4^d`` calls.

Exact routes:

* :func:`delta_exact` enumerates the ``E``-restricted tuples and returns the
  induced channel of the final round.
* :func:`amplified_views` uses that, given agreement, the amplified view is the
  ``ell``-fold product of the one-call view given agreement (likewise for
  disagreement), and compresses the product to multiset types.
"""

from __future__ import annotations

import bisect
import itertools
import math
import random
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Optional

from .channel import (
    Channel,
    LeakageProfile,
    SWBSCParams,
    agreement,
    balance,
    conditioned_views,
    is_balanced,
    join_tokens,
    leakage,
    swbsc_params,
    swbsc_to_wbsc,
    wullschleger_condition,
)
from .dist import (
    DEFAULT_CAP,
    INFINITE,
    Dist,
    Weight,
    eps_max,
    log_ratio_delta,
    log_ratio_epsilon,
    product_pair,
    repetition_bound,
    statistical_distance,
)
from .errors import (
    EnumerationCapError,
    LeakampError,
    NegativeAgreementError,
    ParameterWindowError,
)

DEFAULT_MAX_ITERATIONS = 10**6
WINDOW = (Fraction(1, 32), Fraction(3, 8))


# Closed forms


def predicted_agreement(alpha, ell: int):
    """Agreement of ``Delta_ell`` over a channel with agreement ``alpha``."""
    if not abs(alpha) < 0.5:
        raise ParameterWindowError(f"|alpha| must be below 1/2, got {alpha}")
    half = Fraction(1, 2) if isinstance(alpha, (Fraction, int)) else 0.5
    # ratio form, so float powers do not underflow at large ell
    r = (half - alpha) / (half + alpha)
    return 1 / (1 + r**ell) - half


def agreement_bracket(alpha, ell: int) -> Optional[tuple]:
    """``[alpha*ell/2, 3*alpha*ell/2]``, valid when ``0 <= alpha*ell < 1/4``."""
    if alpha < 0 or alpha * ell >= 0.25:
        return None
    return (alpha * ell / 2, 3 * alpha * ell / 2)


def success_probability(alpha, ell: int):
    """``Pr[E]`` for one round of ``Delta_ell``."""
    half = Fraction(1, 2) if isinstance(alpha, (Fraction, int)) else 0.5
    return (half + alpha) ** ell + (half - alpha) ** ell


def expected_calls_delta(alpha, ell: int):
    if isinstance(alpha, (Fraction, int)):
        return ell / success_probability(alpha, ell)
    # log space: Pr[E] underflows for large ell
    log_q = ell * math.log(0.5 + alpha) + math.log1p(((0.5 - alpha) / (0.5 + alpha)) ** ell)
    try:
        return ell * math.exp(-log_q)
    except OverflowError:
        return math.inf


def expected_calls_lambda(alpha, depth: int):
    """Exact expected channel calls of ``Lambda_depth``.

    ``E_0 = 1`` and ``E_d = 2 E_{d-1} / (1/2 + 2 a_{d-1}^2)`` where ``a_{d-1}``
    is the agreement of ``Lambda_{d-1}``.
    """
    calls, a = 1, alpha
    for _ in range(depth):
        calls = 2 * calls / success_probability(a, 2)
        a = predicted_agreement(a, 2)
    return calls


@dataclass(frozen=True)
class AmplifyParams:
    ell: int
    depth: int
    alpha_max: float


def gap_amplification_params(alpha, alpha_max) -> AmplifyParams:
    """``ell = 2^(floor(log2(1/alpha_max)) - 2)`` for ``alpha`` in ``[alpha_max/2, alpha_max]``."""
    if not 0 < alpha_max < Fraction(1, 8):
        raise ParameterWindowError(f"alpha_max must lie in (0, 1/8), got {alpha_max}")
    if not alpha_max / 2 <= alpha <= alpha_max:
        raise ParameterWindowError(
            f"alpha = {alpha} is outside [alpha_max/2, alpha_max] = [{alpha_max / 2}, {alpha_max}]"
        )
    # floor(log2(x)) == floor(log2(floor(x))) for x >= 1, and the latter is exact.
    k = math.floor(1 / Fraction(alpha_max)).bit_length() - 1
    return AmplifyParams(2 ** (k - 2), k - 2, alpha_max)


# Exact channel transforms


def _require_nonnegative(c: Channel):
    a = agreement(c)
    if a < 0:
        raise NegativeAgreementError(f"agreement is {a}; flip one output first")
    return a


def _split_atoms(c: Channel):
    eq = [a for a in c.atoms() if a[4] > 0 and a[1] == a[3]]
    neq = [a for a in c.atoms() if a[4] > 0 and a[1] != a[3]]
    return eq, neq


def delta_exact_size(c: Channel, ell: int) -> int:
    eq, neq = _split_atoms(c)
    return len(eq) ** ell + len(neq) ** ell


def delta_exact(c: Channel, ell: int, cap: int = DEFAULT_CAP) -> Channel:
    """Induced channel of the final round of ``Delta_ell``.

    Views are ``[v_1;...;v_ell;S]`` where ``S`` lists the two candidate output
    tuples in lexicographic order.
    """
    if ell < 1:
        raise ParameterWindowError(f"ell must be positive, got {ell}")
    _require_nonnegative(c)
    eq, neq = _split_atoms(c)
    _check_cap(len(eq) ** ell + len(neq) ** ell, cap)
    zero = Fraction(0) if c.exact else 0.0
    p_eq = sum((a[4] for a in eq), zero)
    p_neq = sum((a[4] for a in neq), zero)
    mass = p_eq**ell + p_neq**ell
    rows = []
    for group in (eq, neq):
        for tup in itertools.product(group, repeat=ell):
            w = tup[0][4]
            for a in tup[1:]:
                w *= a[4]
            oa = "".join(str(a[1]) for a in tup)
            ob = "".join(str(a[3]) for a in tup)
            comp = "".join("1" if ch == "0" else "0" for ch in oa)
            s = join_tokens(*sorted((oa, comp)))
            va = join_tokens(*(a[0] for a in tup), s)
            vb = join_tokens(*(a[2] for a in tup), s)
            rows.append((va, int(oa[0]), vb, int(ob[0]), w / mass))
    return Channel(rows, check=False)


def _check_cap(required: int, cap: int):
    if required > cap:
        raise EnumerationCapError(required, cap)


def amplified_views(c: Channel, ell: int, party: str, cap: int = DEFAULT_CAP) -> tuple[Dist, Dist]:
    """Type-compressed ``(V|agree)^ell`` and ``(V|disagree)^ell`` for ``party``.

    These carry the same log-ratio and statistical distances as the amplified
    channel's conditioned views.
    """
    _require_nonnegative(c)
    eq, neq = conditioned_views(c, party)
    return product_pair(eq, neq, ell, cap)


def amplified_leakage(c: Channel, ell: int, delta=0, cap: int = DEFAULT_CAP) -> LeakageProfile:
    eps = [log_ratio_epsilon(*amplified_views(c, ell, p, cap), delta) for p in ("A", "B")]
    return LeakageProfile(eps[0], eps[1], eps_max(*eps), delta)


def amplified_sd(c: Channel, ell: int, cap: int = DEFAULT_CAP) -> Weight:
    """``max`` over parties of the SD between amplified views on agree vs disagree."""
    return max(statistical_distance(*amplified_views(c, ell, p, cap)) for p in ("A", "B"))


def delta_output_pairs(c: Channel, ell: int) -> Dist:
    """Exact distribution of the output pair ``(oa, ob)`` of ``Delta_ell``.

    The first call fixes the output pair; the other ``ell - 1`` calls only need
    to repeat its xor pattern.
    """
    _require_nonnegative(c)
    one = Fraction(1) if c.exact else 1.0
    joint = {(a, b): 0 * one for a in (0, 1) for b in (0, 1)}
    for va, oa, vb, ob, w in c.atoms():
        joint[(oa, ob)] += w
    pattern = {0: joint[(0, 0)] + joint[(1, 1)], 1: joint[(0, 1)] + joint[(1, 0)]}
    mass = pattern[0] ** ell + pattern[1] ** ell
    return Dist(
        ((k, v * pattern[k[0] ^ k[1]] ** (ell - 1) / mass) for k, v in joint.items()),
        check=False,
    )


def bounded_output_distribution(c: Channel, ell: int, step_cap: int) -> tuple[Dist, Weight]:
    """Output pairs of ``Delta_ell`` aborted once ``step_cap`` calls are used.

    A run completes only if one of its first ``floor(step_cap/ell)`` rounds
    hits ``E``; otherwise both parties output independent uniform bits.
    Returns the mixture and the truncation probability.
    """
    exact = delta_output_pairs(c, ell)
    q = success_probability(agreement(c), ell)
    t = (1 - q) ** (step_cap // ell)
    quarter = Fraction(1, 4) if c.exact else 0.25
    return (
        Dist(((k, (1 - t) * w + t * quarter) for k, w in exact.items()), check=False),
        t,
    )


# Monte Carlo


class _Truncated(Exception):
    pass


class _Budget:
    __slots__ = ("calls", "cap")

    def __init__(self, cap):
        self.calls = 0
        self.cap = cap


class ChannelSampler:
    """Draws output pairs of a channel by inverse-CDF lookup."""

    def __init__(self, c: Channel):
        self.pairs = []
        self.cdf = []
        acc = 0.0
        for va, oa, vb, ob, w in c.atoms():
            if w > 0:
                acc += float(w)
                self.pairs.append((oa, ob))
                self.cdf.append(acc)
        self.cdf[-1] = max(self.cdf[-1], 1.0)

    def draw(self, rng: random.Random, budget: _Budget):
        if budget.cap is not None and budget.calls + 1 > budget.cap:
            raise _Truncated
        budget.calls += 1
        return self.pairs[bisect.bisect_right(self.cdf, rng.random())]


class DeltaStage:
    """One ``Delta_ell`` layer over an inner drawer."""

    def __init__(self, inner, ell: int, max_iterations: int = DEFAULT_MAX_ITERATIONS):
        self.inner = inner
        self.ell = ell
        self.max_iterations = max_iterations

    def draw(self, rng: random.Random, budget: _Budget):
        for _ in range(self.max_iterations):
            first = self.inner.draw(rng, budget)
            pattern = first[0] ^ first[1]
            ok = True
            for _ in range(self.ell - 1):
                oa, ob = self.inner.draw(rng, budget)
                if oa ^ ob != pattern:
                    ok = False
            if ok:
                return first
        raise _Truncated


@dataclass(frozen=True)
class RunResult:
    oa: int
    ob: int
    calls: int
    truncated: bool


class Simulator:
    """A protocol ready to be run: ``run(rng, cap)`` plays one execution."""

    def __init__(self, top, label: str, min_calls: int):
        self.top = top
        self.label = label
        self.min_calls = min_calls

    def run(self, rng: random.Random, cap: Optional[int] = None) -> RunResult:
        budget = _Budget(cap)
        try:
            oa, ob = self.top.draw(rng, budget)
            return RunResult(oa, ob, budget.calls, False)
        except _Truncated:
            return RunResult(rng.getrandbits(1), rng.getrandbits(1), budget.calls, True)


class BoundedSimulator:
    """Aborts with independent uniform outputs once ``step_cap`` calls would be exceeded."""

    def __init__(self, sim: Simulator, step_cap: int):
        if step_cap < 1:
            raise ParameterWindowError(f"step_cap must be positive, got {step_cap}")
        self.sim = sim
        self.step_cap = step_cap
        self.label = f"{sim.label}|cap={step_cap}"
        self.min_calls = sim.min_calls

    def run(self, rng: random.Random, cap: Optional[int] = None) -> RunResult:
        eff = self.step_cap if cap is None else min(cap, self.step_cap)
        return self.sim.run(rng, eff)


def delta_simulator(c: Channel, ell: int, max_iterations: int = DEFAULT_MAX_ITERATIONS) -> Simulator:
    _require_nonnegative(c)
    return Simulator(DeltaStage(ChannelSampler(c), ell, max_iterations), f"delta[{ell}]", ell)


def lambda_simulator(c: Channel, depth: int, max_iterations: int = DEFAULT_MAX_ITERATIONS) -> Simulator:
    _require_nonnegative(c)
    node = ChannelSampler(c)
    for _ in range(depth):
        node = DeltaStage(node, 2, max_iterations)
    return Simulator(node, f"lambda[{depth}]", 2**depth)


def bounded_execution(sim: Simulator, step_cap: int) -> BoundedSimulator:
    return BoundedSimulator(sim, step_cap)


@dataclass
class SimStats:
    runs: int
    agree_count: int
    mean_channel_calls: float
    max_channel_calls: int
    seed: int
    truncated: int = 0
    total_calls: int = 0
    pair_counts: dict = field(default_factory=lambda: {"00": 0, "01": 0, "10": 0, "11": 0})
    label: str = ""

    @property
    def agreement_estimate(self) -> float:
        return self.agree_count / self.runs - 0.5

    @property
    def truncation_rate(self) -> float:
        return self.truncated / self.runs

    def merge(self, other: "SimStats") -> "SimStats":
        runs = self.runs + other.runs
        total = self.total_calls + other.total_calls
        pairs = {k: self.pair_counts[k] + other.pair_counts[k] for k in self.pair_counts}
        return SimStats(
            runs,
            self.agree_count + other.agree_count,
            total / runs,
            max(self.max_channel_calls, other.max_channel_calls),
            self.seed,
            self.truncated + other.truncated,
            total,
            pairs,
            self.label,
        )

    def to_json(self) -> dict:
        out = asdict(self)
        out["agreement_estimate"] = self.agreement_estimate
        out["truncation_rate"] = self.truncation_rate
        return out


def run_rng(seed: int, run: int) -> random.Random:
    """Per-run generator; string seeds are hashed with SHA-512, so streams are
    independent of scheduling and stable across processes."""
    return random.Random(f"{seed}:{run}")


def _simulate_range(sim, seed: int, start: int, stop: int, cap) -> SimStats:
    pairs = {"00": 0, "01": 0, "10": 0, "11": 0}
    agree = trunc = total = peak = 0
    for i in range(start, stop):
        r = sim.run(run_rng(seed, i), cap)
        pairs[f"{r.oa}{r.ob}"] += 1
        agree += r.oa == r.ob
        trunc += r.truncated
        total += r.calls
        peak = max(peak, r.calls)
    n = stop - start
    return SimStats(n, agree, total / n if n else 0.0, peak, seed, trunc, total, pairs, sim.label)


def simulate(sim, runs: int, seed: int, cap: Optional[int] = None, workers: int = 1) -> SimStats:
    """Run ``sim`` ``runs`` times; results depend only on ``seed``, not on ``workers``."""
    if runs < 1:
        raise ParameterWindowError(f"runs must be positive, got {runs}")
    if workers <= 1:
        return _simulate_range(sim, seed, 0, runs, cap)
    step = -(-runs // workers)
    bounds = [(s, min(s + step, runs)) for s in range(0, runs, step)]
    with ProcessPoolExecutor(workers) as pool:
        parts = list(pool.map(_simulate_range, *zip(*[(sim, seed, a, b, cap) for a, b in bounds])))
    out = parts[0]
    for p in parts[1:]:
        out = out.merge(p)
    return out


def delta_simulate(
    c: Channel,
    ell: int,
    runs: int,
    seed: int,
    max_iterations: int = DEFAULT_MAX_ITERATIONS,
    cap: Optional[int] = None,
    workers: int = 1,
) -> SimStats:
    return simulate(delta_simulator(c, ell, max_iterations), runs, seed, cap, workers)


def lambda_simulate(
    c: Channel, depth: int, runs: int, seed: int, cap: Optional[int] = None, workers: int = 1
) -> SimStats:
    return simulate(lambda_simulator(c, depth), runs, seed, cap, workers)


# Pipeline


@dataclass
class PipelineReport:
    input: dict = field(default_factory=dict)
    balance: dict = field(default_factory=dict)
    params: dict = field(default_factory=dict)
    repetition: dict = field(default_factory=dict)
    amplify: dict = field(default_factory=dict)
    leakage: dict = field(default_factory=dict)
    swbsc: dict = field(default_factory=dict)
    wbsc: dict = field(default_factory=dict)
    wullschleger: dict = field(default_factory=dict)
    amplified_channel: Optional[Channel] = None

    @property
    def passed(self) -> bool:
        return bool(self.wullschleger.get("holds"))

    def stages(self) -> dict:
        return {
            k: getattr(self, k)
            for k in ("input", "balance", "params", "repetition", "amplify",
                      "leakage", "swbsc", "wbsc", "wullschleger")
        }


class _Stage:
    def __init__(self, name):
        self.name = name

    def __enter__(self):
        return self

    def __exit__(self, typ, exc, tb):
        if isinstance(exc, LeakampError) and not getattr(exc, "stage", None):
            exc.stage = self.name
            exc.args = (f"stage {self.name}: {exc}",)
        return False


def full_pipeline(
    c: Channel,
    alpha_max,
    delta_prime=None,
    delta=0,
    cap: int = DEFAULT_CAP,
    route: str = "auto",
) -> PipelineReport:
    """Amplify ``c`` to constant agreement and test the WBSC precondition.

    ``route`` is ``"exact"`` (enumerate the amplified channel), ``"product"``
    (type-compressed products) or ``"auto"`` (exact when within ``cap``).
    ``delta_prime`` defaults to ``ell * delta`` when that is positive.
    """
    rep = PipelineReport()
    with _Stage("input"):
        alpha = _require_nonnegative(c)
        base = leakage(c, delta)
        rep.input = {"agreement": alpha, "leakage": asdict(base), "atoms": len(c)}
    with _Stage("balance"):
        bal = balance(c)
        rep.balance = {
            "balanced_before": is_balanced(c),
            "balanced_after": is_balanced(bal),
            "agreement_after": agreement(bal),
        }
    with _Stage("params"):
        params = gap_amplification_params(alpha, alpha_max)
        rep.params = asdict(params)
        ell = params.ell
    with _Stage("repetition"):
        if delta_prime is None and delta > 0:
            delta_prime = ell * delta
        if delta_prime is not None and base.eps_max is not INFINITE:
            bound = repetition_bound(base.eps_max, delta, ell, delta_prime)
            rep.repetition = asdict(bound)
        else:
            bound = None
            rep.repetition = {"skipped": "no delta_prime" if delta_prime is None else "infinite leakage"}
    with _Stage("amplify"):
        size = delta_exact_size(c, ell)
        use_exact = route == "exact" or (route == "auto" and size <= cap)
        if use_exact:
            amp = delta_exact(c, ell, cap)
            rep.amplified_channel = amp
            amp_alpha = agreement(amp)
        else:
            amp = None
            amp_alpha = predicted_agreement(alpha, ell)
        lo, hi = WINDOW
        rep.amplify = {
            "route": "exact" if use_exact else "product",
            "ell": ell,
            "enumerated_atoms": size if use_exact else None,
            "agreement": amp_alpha,
            "predicted_agreement": predicted_agreement(alpha, ell),
            "window": [lo, hi],
            "in_window": bool(lo <= amp_alpha <= hi),
            "expected_calls_delta": expected_calls_delta(alpha, ell),
            "expected_calls_lambda": expected_calls_lambda(alpha, params.depth),
        }
    with _Stage("leakage"):
        if amp is not None:
            prof = leakage(amp, delta)
        else:
            prof = amplified_leakage(c, ell, delta, cap)
        rep.leakage = {"profile": asdict(prof)}
        if bound is not None:
            measured = max(
                log_ratio_delta(*amplified_views(c, ell, p, cap), bound.eta) for p in ("A", "B")
            )
            rep.leakage["delta_at_eta"] = measured
            rep.leakage["within_repetition_bound"] = bool(measured <= bound.delta_out)
    with _Stage("swbsc"):
        if amp is not None:
            s = swbsc_params(balance(amp))
        else:
            half = Fraction(1, 2) if c.exact else 0.5
            s = SWBSCParams(half - amp_alpha, amplified_sd(c, ell, cap))
        rep.swbsc = asdict(s)
    with _Stage("wbsc"):
        w = swbsc_to_wbsc(s)
        rep.wbsc = asdict(w)
    with _Stage("wullschleger"):
        rep.wullschleger = asdict(wullschleger_condition(w.eps0, w.p))
    return rep


# Threshold sweep


@dataclass(frozen=True)
class SweepRow:
    eps: float
    triviality_alpha: float
    min_passing_alpha: Optional[float]
    triv_ratio: float
    pass_ratio: Optional[float]


SWEEP_HEADER = ("eps", "triviality_alpha", "min_passing_alpha", "triv_ratio", "pass_ratio")


def leaky_channel(alpha: float, eps: float) -> Channel:
    """A channel with agreement ``alpha`` and leakage exactly ``eps``.

    Each party sees a hint of the other's bit with bias ``tanh(eps/2)/2``.
    """
    from .constructions import noisy_example_channel

    return noisy_example_channel(float(alpha), math.tanh(eps / 2) / 2)


def sweep_threshold(eps_grid, alpha_grid, delta_prime=None, cap: int = DEFAULT_CAP) -> list[SweepRow]:
    """For each ``eps``: the agreement the randomized-response construction
    reaches with leakage ``eps``, and the smallest grid ``alpha`` whose
    amplified channel passes the WBSC precondition at leakage ``eps``.
    """
    from .constructions import rr_agreement

    eps_grid = [float(e) for e in eps_grid]
    alphas = sorted(float(a) for a in alpha_grid)
    if not eps_grid or not alphas:
        raise ParameterWindowError("eps and alpha grids must be non-empty")
    rows = []
    for eps in eps_grid:
        triv = float(rr_agreement(eps, calibrated=True, exact=False))
        passing = None
        for a in alphas:
            if not 0 < a < 0.125:
                continue
            ch = leaky_channel(a, eps)
            # the measured agreement can differ from ``a`` in the last ulp
            rep = full_pipeline(ch, agreement(ch), delta_prime=delta_prime, cap=cap, route="product")
            if rep.passed:
                passing = a
                break
        rows.append(
            SweepRow(
                eps,
                triv,
                passing,
                triv / eps**2,
                None if passing is None else passing / eps**2,
            )
        )
    return rows


def sweep_to_csv(rows: list[SweepRow]) -> str:
    lines = [",".join(SWEEP_HEADER)]
    for r in rows:
        cells = [r.eps, r.triviality_alpha, r.min_passing_alpha, r.triv_ratio, r.pass_ratio]
        lines.append(",".join("" if v is None else repr(float(v)) for v in cells))
    return "\n".join(lines) + "\n"
