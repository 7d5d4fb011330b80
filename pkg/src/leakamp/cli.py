"""Command-line driver.

Exit codes: 0 success, 2 validation or usage error, 3 enumeration cap
exceeded, 4 degenerate mathematics (undefined conditioning and the like).
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import asdict, is_dataclass
from fractions import Fraction
from pathlib import Path

from . import amplify as amp
from . import constructions as cons
from .channel import (
    agreement,
    channel_from_json,
    channel_to_json,
    is_balanced,
    leakage,
    output_one_prob,
    swbsc_params,
    wbsc_params,
)
from .dist import DEFAULT_CAP, INFINITE, Infinite, dist_from_json, log_ratio_delta, log_ratio_epsilon, product, repetition_bound
from .dpfunc import (
    check_eps_dp,
    dp_xor_to_channel,
    functionality_from_json,
    functionality_to_json,
    leakage_wrt_outputs_check,
)
from .errors import LeakampError, ValidationError
from .fanalysis import find_embedded_xor, is_monotone_under_relabeling, load_table, reduction_report

SCHEMA_VERSION = "1"


class UsageError(ValidationError):
    pass


def to_jsonable(x):
    if isinstance(x, Fraction):
        return f"{x.numerator}/{x.denominator}"
    if isinstance(x, Infinite):
        return "infinite"
    if isinstance(x, float) and math.isinf(x):
        return "infinite"
    if is_dataclass(x) and not isinstance(x, type):
        return to_jsonable(asdict(x))
    if isinstance(x, dict):
        return {str(k): to_jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [to_jsonable(v) for v in x]
    return x


def _number(text: str, backend: str):
    text = str(text).strip()
    try:
        if backend == "rational":
            return Fraction(text)
        return float(Fraction(text)) if "/" in text else float(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise UsageError(f"not a number: {text!r}") from exc


def _grid(text: str, backend: str = "float") -> list:
    """Comma list, or ``lin:lo:hi:n`` / ``geom:lo:hi:n``."""
    text = (text or "").strip()
    if not text:
        return []
    if text.startswith(("lin:", "geom:")):
        kind, lo, hi, n = text.split(":")
        lo, hi, n = float(lo), float(hi), int(n)
        if n < 1:
            return []
        if n == 1:
            return [lo]
        if kind == "lin":
            return [lo + (hi - lo) * i / (n - 1) for i in range(n)]
        return [lo * (hi / lo) ** (i / (n - 1)) for i in range(n)]
    return [_number(t, backend) for t in text.split(",") if t.strip()]


def _read_json(path: str):
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: line {exc.lineno}: {exc.msg}") from exc
    except OSError as exc:
        raise ValidationError(f"{path}: {exc.strerror}") from exc


def _emit(args, payload, text: str | None = None):
    if text is None:
        body = json.dumps(to_jsonable({"schema_version": SCHEMA_VERSION, **payload}), indent=2) + "\n"
    else:
        body = text
    if args.out:
        Path(args.out).write_text(body)
    else:
        sys.stdout.write(body)


def _require_seed(args):
    if args.seed is None:
        raise UsageError("Monte Carlo commands need an explicit --seed")
    return args.seed


# generate

REQUIRED = {
    "bsc": ("p",),
    "noisy": ("alpha", "noise"),
    "rr": ("eps",),
    "rr-xor": ("eps",),
    "noisy-xor": ("alpha",),
}


def cmd_generate(args):
    b = args.backend
    exact = b == "rational"
    kind = args.kind
    for key in REQUIRED.get(kind, ()):
        if getattr(args, key) is None:
            raise UsageError(f"generate {kind} needs --{key}")
    params = {"kind": kind}
    if kind == "bsc":
        obj = channel_to_json(cons.bsc_channel(_number(args.p, b)))
        params["p"] = args.p
    elif kind == "noisy":
        obj = channel_to_json(cons.noisy_example_channel(_number(args.alpha, b), _number(args.noise, b)))
        params.update(alpha=args.alpha, noise=args.noise)
    elif kind == "rr":
        obj = channel_to_json(
            cons.randomized_response_channel(float(args.eps), calibrated=args.calibrated, exact=exact)
        )
        params.update(eps=args.eps, calibrated=args.calibrated)
    elif kind == "rr-xor":
        bt = None if args.beta_target is None else _number(args.beta_target, b)
        obj = functionality_to_json(cons.rr_xor_functionality(float(args.eps), bt, exact=exact))
        params.update(eps=args.eps, beta_target=args.beta_target)
    elif kind == "noisy-xor":
        obj = functionality_to_json(cons.noisy_xor_functionality(_number(args.alpha, b)))
        params["alpha"] = args.alpha
    elif kind == "xor":
        obj = functionality_to_json(cons.exact_xor_functionality())
    elif kind == "constant":
        obj = functionality_to_json(cons.constant_functionality(args.n))
        params["n"] = args.n
    elif kind == "parity":
        obj = functionality_to_json(cons.parity_functionality(args.n))
        params["n"] = args.n
    elif kind == "reveal":
        obj = functionality_to_json(cons.revealing_xor_functionality())
    else:  # pragma: no cover - argparse restricts choices
        raise UsageError(f"unknown kind {kind}")
    obj["params"] = params
    _emit(args, obj, json.dumps(obj, indent=2) + "\n")


# analyze


def _profile_json(c, delta):
    try:
        return to_jsonable(leakage(c, delta))
    except LeakampError as exc:
        return {"error": str(exc)}


def cmd_analyze(args):
    raw = _read_json(args.channel)
    c = channel_from_json(raw)
    deltas = _grid(args.delta, args.backend) or [0]
    report = {
        "declared": raw.get("params") if isinstance(raw, dict) else None,
        "atoms": len(c),
        "backend": "rational" if c.exact else "float",
        "agreement": agreement(c),
        "pr_oa_1": output_one_prob(c, "A"),
        "pr_ob_1": output_one_prob(c, "B"),
        "balanced": is_balanced(c),
        "leakage": [_profile_json(c, d) for d in deltas],
    }
    for name, fn in (("swbsc", swbsc_params), ("wbsc", wbsc_params)):
        try:
            report[name] = fn(c)
        except LeakampError as exc:
            report[name] = {"error": str(exc)}
    _emit(args, report)


# amplify


def cmd_amplify(args):
    c = channel_from_json(_read_json(args.channel))
    alpha = agreement(c)
    if args.ell is not None:
        ell = args.ell
        depth = ell.bit_length() - 1 if ell & (ell - 1) == 0 else None
    elif args.alpha_max is not None:
        params = amp.gap_amplification_params(alpha, _number(args.alpha_max, args.backend))
        ell, depth = params.ell, params.depth
    else:
        raise UsageError("amplify needs --ell or --alpha-max")
    report = {"mode": args.mode, "ell": ell, "input_agreement": alpha,
              "predicted_agreement": amp.predicted_agreement(alpha, ell)}
    if args.mode == "exact":
        out = amp.delta_exact(c, ell, args.cap)
        report["agreement"] = agreement(out)
        report["atoms"] = len(out)
        if args.channel_out:
            Path(args.channel_out).write_text(json.dumps(channel_to_json(out), indent=2) + "\n")
            report["channel_file"] = args.channel_out
    else:
        seed = _require_seed(args)
        if args.protocol == "lambda":
            if depth is None:
                raise UsageError("lambda protocol needs ell to be a power of two")
            sim = amp.lambda_simulator(c, depth)
            report["depth"] = depth
            report["expected_calls"] = amp.expected_calls_lambda(alpha, depth)
        else:
            sim = amp.delta_simulator(c, ell)
            report["expected_calls"] = amp.expected_calls_delta(alpha, ell)
        if args.step_cap:
            sim = amp.bounded_execution(sim, args.step_cap)
        stats = amp.simulate(sim, args.runs, seed, workers=args.workers)
        report["stats"] = stats.to_json()
    _emit(args, report)


# pipeline


def cmd_pipeline(args):
    c = channel_from_json(_read_json(args.channel))
    dp = None if args.delta_prime is None else float(args.delta_prime)
    rep = amp.full_pipeline(
        c,
        _number(args.alpha_max, args.backend),
        delta_prime=dp,
        delta=float(args.delta),
        cap=args.cap,
        route=args.route,
    )
    payload = {"stages": rep.stages(), "passed": rep.passed}
    if args.format == "text":
        _emit(args, None, _text_report(to_jsonable(payload)))
    else:
        _emit(args, payload)


def _text_report(payload: dict) -> str:
    lines = []
    for stage, body in payload["stages"].items():
        lines.append(f"[{stage}]")
        flat = _flatten(body)
        width = max((len(k) for k in flat), default=0)
        for k, v in flat.items():
            lines.append(f"  {k.ljust(width)}  {v}")
    lines.append(f"passed  {payload['passed']}")
    return "\n".join(lines) + "\n"


def _flatten(d, prefix=""):
    out = {}
    for k, v in d.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            out.update(_flatten(v, key + "."))
        else:
            out[key] = v
    return out


# sweep


def cmd_sweep(args):
    eps_grid = _grid(args.eps_grid)
    alpha_grid = _grid(args.alpha_grid)
    if not eps_grid or not alpha_grid:
        raise UsageError("sweep-threshold needs non-empty --eps-grid and --alpha-grid")
    dp = None if args.delta_prime is None else float(args.delta_prime)
    rows = amp.sweep_threshold(eps_grid, alpha_grid, delta_prime=dp, cap=args.cap)
    _emit(args, None, amp.sweep_to_csv(rows))


# dpxor / embedded-xor / rep-check


def cmd_dpxor(args):
    f = functionality_from_json(_read_json(args.functionality))
    dp = check_eps_dp(f)
    report = {"n": f.n, "dp": dp}
    if f.n == 1:
        try:
            ch = dp_xor_to_channel(f)
            prof = leakage(ch, 0)
            bound = INFINITE if dp.eps_measured is INFINITE else 2 * dp.eps_measured
            ok = bound is INFINITE or (
                prof.eps_max is not INFINITE and prof.eps_max <= bound + 1e-12
            )
            report["channel"] = {
                "agreement": agreement(ch),
                "leakage": prof,
                "two_eps_bound": bound,
                "two_eps_bound_holds": ok,
                "output_leakage": leakage_wrt_outputs_check(f),
            }
        except LeakampError as exc:
            report["channel"] = {"error": str(exc)}
    _emit(args, report)


def cmd_embedded_xor(args):
    try:
        text = Path(args.table).read_text()
    except OSError as exc:
        raise ValidationError(f"{args.table}: {exc.strerror}") from exc
    t = load_table(text)
    verdict = is_monotone_under_relabeling(t)
    report = {"n": t.n, "verdict": "monotone" if verdict.monotone else "embedded-xor"}
    if verdict.monotone:
        report["sigma_x"] = verdict.sigma_x
        report["sigma_y"] = verdict.sigma_y
    else:
        report["violation"] = {"axis": verdict.axis, "pair": verdict.violating_pair}
        report["witness"] = find_embedded_xor(t, exhaustive=args.exhaustive)
        if args.eps is not None and args.beta is not None:
            report["reduction"] = reduction_report(
                t, float(args.eps), float(args.beta), float(args.c), exhaustive=args.exhaustive
            )
    _emit(args, report)


def cmd_rep_check(args):
    b = args.backend
    eps = float(args.eps) if args.eps is not None else None
    delta = _number(args.delta, b)
    report = {}
    if args.p and args.q:
        p = dist_from_json(_read_json(args.p))
        q = dist_from_json(_read_json(args.q))
        if eps is None:
            eps = log_ratio_epsilon(p, q, delta)
            if eps is INFINITE:
                raise UsageError("the pair has no finite eps at this delta")
        measured = log_ratio_delta(p, q, eps)
        report["measured_delta"] = measured
    if eps is None:
        raise UsageError("rep-check needs --eps, or --p and --q")
    bound = repetition_bound(eps, delta, args.ell, float(args.delta_prime))
    report["bound"] = bound
    if args.p and args.q:
        pl, ql = product(p, args.ell, args.cap), product(q, args.ell, args.cap)
        d = log_ratio_delta(pl, ql, bound.eta)
        report["product_delta_at_eta"] = d
        report["holds"] = bool(d <= bound.delta_out)
    _emit(args, report)


# parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--backend", choices=("rational", "float"), default="rational")
    common.add_argument("--cap", type=int, default=DEFAULT_CAP, help="enumeration cap in atoms")
    common.add_argument("--seed", type=int, default=None, help="seed for Monte Carlo commands")
    common.add_argument("--out", default=None, help="write the report here instead of stdout")

    parser = argparse.ArgumentParser(prog="leakamp", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", parents=[common], help="write a channel or functionality file")
    g.add_argument("kind", choices=("bsc", "noisy", "rr", "rr-xor", "noisy-xor", "xor", "constant", "parity", "reveal"))
    g.add_argument("--p")
    g.add_argument("--alpha")
    g.add_argument("--noise")
    g.add_argument("--eps")
    g.add_argument("--beta-target")
    g.add_argument("--calibrated", action="store_true")
    g.add_argument("--n", type=int, default=1)
    g.set_defaults(func=cmd_generate)

    a = sub.add_parser("analyze", parents=[common], help="agreement, balance and leakage of a channel")
    a.add_argument("channel")
    a.add_argument("--delta", default="0", help="comma-separated delta grid")
    a.set_defaults(func=cmd_analyze)

    m = sub.add_parser("amplify", parents=[common], help="exact or Monte Carlo amplification")
    m.add_argument("channel")
    m.add_argument("--mode", choices=("exact", "mc"), default="exact")
    m.add_argument("--protocol", choices=("delta", "lambda"), default="delta")
    m.add_argument("--ell", type=int)
    m.add_argument("--alpha-max")
    m.add_argument("--runs", type=int, default=10**4)
    m.add_argument("--step-cap", type=int, default=None)
    m.add_argument("--workers", type=int, default=1)
    m.add_argument("--channel-out", default=None, help="where to write the induced channel")
    m.set_defaults(func=cmd_amplify)

    p = sub.add_parser("pipeline", parents=[common], help="amplify, balance and test the WBSC precondition")
    p.add_argument("channel")
    p.add_argument("--alpha-max", required=True)
    p.add_argument("--delta", default="0")
    p.add_argument("--delta-prime", default=None)
    p.add_argument("--route", choices=("auto", "exact", "product"), default="auto")
    p.add_argument("--format", choices=("json", "text"), default="json")
    p.set_defaults(func=cmd_pipeline)

    s = sub.add_parser("sweep-threshold", parents=[common], help="CSV of the agreement threshold per eps")
    s.add_argument("--eps-grid", required=True)
    s.add_argument("--alpha-grid", required=True, help="comma list or lin:lo:hi:n / geom:lo:hi:n")
    s.add_argument("--delta-prime", default=None)
    s.set_defaults(func=cmd_sweep)

    d = sub.add_parser("dpxor", parents=[common], help="DP and channel report for a functionality")
    d.add_argument("functionality")
    d.set_defaults(func=cmd_dpxor)

    e = sub.add_parser("embedded-xor", parents=[common], help="monotone verdict or embedded XOR of a table")
    e.add_argument("table")
    e.add_argument("--exhaustive", action="store_true")
    e.add_argument("--eps")
    e.add_argument("--beta")
    e.add_argument("--c", default="1")
    e.set_defaults(func=cmd_embedded_xor)

    r = sub.add_parser("rep-check", parents=[common], help="repetition bound, optionally measured")
    r.add_argument("--eps")
    r.add_argument("--delta", default="0")
    r.add_argument("--ell", type=int, required=True)
    r.add_argument("--delta-prime", required=True)
    r.add_argument("--p", help="distribution JSON")
    r.add_argument("--q", help="distribution JSON")
    r.set_defaults(func=cmd_rep_check)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except LeakampError as exc:
        print(f"leakamp {args.command}: {exc}", file=sys.stderr)
        return exc.exit_code
    except ValueError as exc:
        print(f"leakamp {args.command}: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
