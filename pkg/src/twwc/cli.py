"""Command-line front end.

Every subcommand prints a JSON document (default) or CSV rows. Output
always records the seed and the units, and is a pure function of the
inputs and the seed, so reruns are byte-identical.

Exit codes: 0 on success, 1 on invalid input, 2 when a verification
fixture does not match its reference result.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .channel import Channel, InputDistribution, from_function, load_channel, load_distribution, noiseless_exchange
from .errors import TwwcError
from .info import channel_joint, shannon_quantities

DEFAULT_SEED = 20240601
DEFAULT_CHANNEL = "builtin:bsc"

EXIT_OK, EXIT_INVALID, EXIT_MISMATCH = 0, 1, 2


class _Mismatch(Exception):
    """Raised after output is written when a fixture check fails."""


# ---------------------------------------------------------------------------
# inputs


def _default_additive():
    from .correlation import AdditiveSpec

    return AdditiveSpec(2, (1, 1, 1), (1, 1, 1), [0.9, 0.1], [0.9, 0.1], [0.8, 0.2])


def _bsc_channel(eps=0.05):
    """Binary symmetric links between the users, uniform noise at the eavesdropper."""

    def row(a, b):
        y1 = np.array([1 - eps, eps])[[b ^ 0, b ^ 1]]
        y2 = np.array([1 - eps, eps])[[a ^ 0, a ^ 1]]
        return np.einsum("i,j,k->ijk", y1, y2, [0.5, 0.5])

    return from_function((2, 2, 2, 2, 2), row)


def _builtin(name: str) -> Channel:
    if name == "bsc":
        return _bsc_channel()
    if name == "noiseless":
        return noiseless_exchange(2)
    if name == "additive":
        from .correlation import build_additive

        return build_additive(_default_additive())
    raise ValueError(f"unknown builtin channel {name!r} (bsc, noiseless, additive)")


def _channel(arg: str) -> Channel:
    if arg.startswith("builtin:"):
        return _builtin(arg.split(":", 1)[1])
    return load_channel(arg)


def _dist(arg, ch: Channel) -> InputDistribution:
    return InputDistribution.uniform_identity(ch) if arg is None else load_distribution(arg)


def _floats(text: str, count=None, name="value"):
    try:
        vals = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ValueError(f"bad {name} list {text!r}") from None
    if count is not None and len(vals) != count:
        raise ValueError(f"{name} needs {count} comma-separated numbers, got {len(vals)}")
    return vals


def _ints(text: str, count=None, name="value"):
    vals = _floats(text, count, name)
    if any(v != int(v) for v in vals):
        raise ValueError(f"{name} must be integers: {text!r}")
    return [int(v) for v in vals]


def parse_s_grid(text):
    """``start:stop:step`` with ``stop`` included, or a comma list."""
    if text is None:
        return None
    if ":" not in text:
        return _floats(text, name="s-grid")
    try:
        start, stop, step = (float(v) for v in text.split(":"))
    except ValueError:
        raise ValueError(f"s-grid must be start:stop:step, got {text!r}") from None
    if step <= 0 or stop < start:
        raise ValueError(f"empty or descending s-grid {text!r}")
    count = int(math.floor((stop - start) / step + 1e-9)) + 1
    return [round(start + k * step, 12) for k in range(count)]


# ---------------------------------------------------------------------------
# output


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v + 0.0 if math.isfinite(v) else str(v)  # folds -0.0
    return obj


def _flatten(obj, prefix=""):
    if isinstance(obj, dict):
        for k, v in obj.items():
            yield from _flatten(v, f"{prefix}.{k}" if prefix else str(k))
    elif isinstance(obj, list):
        for i, v in enumerate(obj):
            yield from _flatten(v, f"{prefix}[{i}]")
    else:
        yield prefix, obj


def _render(payload: dict, rows, fmt: str) -> str:
    payload = _clean(payload)
    if fmt == "json":
        return json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if fmt == "table":
        width = max((len(k) for k, _ in _flatten(payload)), default=0)
        return "".join(f"{k:<{width}}  {v}\n" for k, v in _flatten(payload))
    # csv
    if rows is None:
        rows = [{"key": k, "value": v} for k, v in _flatten(payload) if k not in ("seed", "units")]
    rows = [_clean(r) for r in rows]
    cols = []
    for r in rows:
        cols += [c for c in r if c not in cols]
    cols += ["units", "seed"]
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({**r, "units": payload.get("units", "nats"), "seed": payload["seed"]})
    return buf.getvalue()


# ---------------------------------------------------------------------------
# subcommands


def cmd_measures(args):
    from .exponents import renyi_measures
    from .regions import measure_bundle

    ch = _channel(args.channel)
    d = _dist(args.dist, ch)
    bundle = measure_bundle(ch, d)
    out = {"shannon": dict(vars(bundle))}
    rows = [{"quantity": k, "s": "", "value": v} for k, v in vars(bundle).items()]
    if args.query:
        joint = channel_joint(ch, d)
        out["queries"] = {q: shannon_quantities(joint, q) for q in args.query}
        rows += [{"quantity": q, "s": "", "value": v} for q, v in out["queries"].items()]
    grid = parse_s_grid(args.s_grid)
    if grid:
        out["renyi"] = []
        for s in grid:
            rm = dict(vars(renyi_measures(ch, d, s)))
            out["renyi"].append({"s": s, **rm})
            rows += [{"quantity": f"renyi_{k}", "s": s, "value": v} for k, v in rm.items()]
    return out, rows


def _rate_maker(args, ch, d):
    from .exponents import NonAdaptiveRates, RateSplit, adaptive_bounds, nonadaptive_bounds

    if args.mode == "nonadaptive":
        rates = NonAdaptiveRates(*_floats(args.rates, 4, "--rates"))
        return (lambda n, s: nonadaptive_bounds(ch, d, rates, n, s)), vars(rates)
    split = RateSplit(*_floats(args.split, 8, "--split"))
    return (lambda n, s: adaptive_bounds(ch, d, split, n, args.t, s)), vars(split)


def cmd_exponents(args):
    from .exponents import default_grid, optimize_order, threshold_blocklength

    ch = _channel(args.channel)
    d = _dist(args.dist, ch)
    make, rates = _rate_maker(args, ch, d)
    grid = parse_s_grid(args.s_grid) or default_grid()
    ns = _ints(args.n, name="--n")
    fields = ("error_bound", "joint_leak_bound", "ind_leak_bound_1", "ind_leak_bound_2", "error_bound_individual")
    sweep, best = [], []
    for n in ns:
        for s in grid:
            sweep.append(make(n, s).to_dict())
        row = {"n": n}
        for f in fields:
            s_star, v = optimize_order(lambda s: getattr(make(n, s), f), grid)
            row[f] = v
            row[f"s_{f}"] = s_star
        best.append(row)
    out = {"mode": args.mode, "t": args.t if args.mode == "adaptive" else 1, "rates": rates,
           "s_grid": grid, "best": best}
    if args.sweep:
        out["sweep"] = sweep
    if args.threshold:
        out["threshold_n"] = threshold_blocklength(make, n_max=args.n_max, grid=grid)
    return out, (sweep if args.sweep else best)


def cmd_region(args):
    from .regions import SearchConfig, measure_bundle, region_from_measures, search_union

    ch = _channel(args.channel)
    if args.search == "none":
        d = _dist(args.dist, ch)
        reg = region_from_measures(measure_bundle(ch, d), args.kind)
        source = {"dist": args.dist or "uniform-identity"}
    else:
        cfg = SearchConfig(mode=args.search, samples=args.samples, resolution=args.resolution, seed=args.seed,
                           v_extra=args.v_extra, refine_steps=args.refine,
                           max_samples=args.budget if args.budget else SearchConfig.max_samples)
        reg = search_union(ch, args.kind, cfg)
        source = {"search": args.search, "samples": args.samples, "resolution": args.resolution}
    body = reg.to_dict(bits=args.bits)
    out = {"kind": args.kind, "source": source, **body}
    scale = 1 / math.log(2) if args.bits else 1.0
    rows = [{"R1": v.R1 * scale, "R2": v.R2 * scale} for v in reg.vertices]
    return out, rows


def cmd_fm(args):
    from .fm import load_fixture, parse_system, run_pipeline, same_inequalities

    if bool(args.fixture) == bool(args.file):
        raise ValueError("give exactly one of --fixture or --file")
    sys_ = load_fixture(args.fixture) if args.fixture else parse_system(Path(args.file).read_text(), args.file)
    order = [v.strip() for v in args.order.split(",")] if args.order else None
    result = run_pipeline(sys_, order)
    rate = result.rate_part()
    out = {
        "system": sys_.name or args.fixture or args.file,
        "eliminated": order or sys_.eliminate_order,
        "inequalities": [q.pretty() for q in rate],
        "conditions": [q.pretty() for q in result.conditions()],
    }
    match = None
    if sys_.expected:
        expected = sys_.copy(sys_.expected)
        match = same_inequalities(rate, expected.rate_part())
        out["expected"] = [q.pretty() for q in expected.rate_part()]
    out["match"] = match
    rows = [{"kind": "result", "inequality": s} for s in out["inequalities"]]
    rows += [{"kind": "condition", "inequality": s} for s in out["conditions"]]
    if match is False:
        raise _Mismatch(out, rows)
    return out, rows


def _bound_comparison(ch, d, n, M1, L1, M2, L2):
    from .exponents import NonAdaptiveRates, best_report, nonadaptive_bounds

    rates = NonAdaptiveRates(math.log(M1) / n, math.log(M2) / n, math.log(L1) / n, math.log(L2) / n)
    err = best_report(lambda s: nonadaptive_bounds(ch, d, rates, n, s), "error_bound")
    leak = best_report(lambda s: nonadaptive_bounds(ch, d, rates, n, s), "joint_leak_bound")
    return {"error_bound": err.error_bound, "s_error": err.s_used,
            "joint_leak_bound": leak.joint_leak_bound, "s_leak": leak.s_used}


def cmd_simulate(args):
    from . import protocol as P

    ch = _channel(args.channel)
    d = _dist(args.dist, ch)
    code_seed, sim_seed = (int(v) for v in np.random.SeedSequence(args.seed).generate_state(2))
    budget = args.budget or P.DEFAULT_BUDGET
    if args.mode == "nonadaptive":
        M1, L1, M2, L2 = _ints(args.sizes, 4, "--sizes")
        cb = P.build_code(ch, d, P.CodeParams(args.n, M1, L1, M2, L2, code_seed))
        rep = P.simulate_nonadaptive(ch, d, cb, args.trials, sim_seed, args.workers)
        if args.leakage:
            rep.exact_leakage_nats = P.exact_leakage(ch, d, cb, budget=budget)
        rep.bound_comparison = _bound_comparison(ch, d, args.n, M1, L1, M2, L2)
    else:
        u1 = P.UserSplit(*_ints(args.split1, 4, "--split1"))
        u2 = P.UserSplit(*_ints(args.split2, 4, "--split2"))
        sess = P.AdaptiveSession(args.t, u1, u2)
        cb = P.build_code(ch, d, sess.code_params(args.n, code_seed))
        rep = P.run_adaptive_session(ch, d, cb, sess, args.trials, sim_seed, args.workers)
        if args.leakage:
            rep.extra["leakage"] = P.adaptive_exact_leakage(ch, d, cb, sess, budget=budget).to_dict()
            rep.exact_leakage_nats = rep.extra["leakage"]["joint"]
    out = {"mode": args.mode, "n": args.n, **rep.to_dict()}
    out["seed"] = args.seed
    out["code_seed"], out["sim_seed"] = code_seed, sim_seed
    return out, None


def cmd_additive(args):
    from .correlation import (AdditiveSpec, InnerCode, build_additive, closed_form_report, secrecy_advantage,
                              simulate_two_stage, virtual_mac_difference)

    spec = AdditiveSpec.from_dict(json.loads(Path(args.spec).read_text())) if args.spec else _default_additive()
    ch = build_additive(spec)
    u = np.full(spec.q, 1 / spec.q)
    parts = args.what.split(",") if args.what != "all" else ["closed", "advantage", "virtual", "two-stage"]
    out = {"spec": spec.to_dict()}
    for part in parts:
        if part == "closed":
            out["closed_forms"] = closed_form_report(spec).to_dict()
        elif part == "advantage":
            out["advantage"] = secrecy_advantage(ch, u, u).to_dict()
        elif part == "virtual":
            out["virtual_mac"] = virtual_mac_difference(ch, u, u).to_dict()
        elif part == "two-stage":
            inner = InnerCode(args.inner, args.r)
            rep = simulate_two_stage(ch, u, u, args.n1, args.M, inner, args.trials, args.seed,
                                     args.direction, args.workers)
            out["two_stage"] = rep.to_dict()
        else:
            raise ValueError(f"unknown part {part!r} (closed, advantage, virtual, two-stage)")
    return out, None


# ---------------------------------------------------------------------------
# argument parsing


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--channel", default=DEFAULT_CHANNEL,
                        help="channel JSON path or builtin:{bsc,noiseless,additive} (default %(default)s)")
    common.add_argument("--dist", help="input distribution JSON (default: uniform, V_i = X_i)")
    common.add_argument("--seed", type=int, default=DEFAULT_SEED, help="RNG seed (default %(default)s)")
    common.add_argument("--trials", type=int, default=1000)
    common.add_argument("--s-grid", help="start:stop:step or comma list of orders in (0, 1]")
    common.add_argument("--format", choices=("json", "csv", "table"), default="json")
    common.add_argument("--out", help="write to this path instead of stdout")
    common.add_argument("--workers", type=int, default=1)
    common.add_argument("--budget", type=int, default=0, help="cap on enumeration size (0: module default)")

    ap = argparse.ArgumentParser(prog="twwc", description="Two-way wiretap channel secrecy toolkit.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("measures", parents=[common], help="Shannon and Renyi measures of a channel and input law")
    p.add_argument("--query", action="append", help="expression such as 'I(Z;X1)' or 'I(Y1;V2|X1) - I(Z;V2)'")
    p.set_defaults(func=cmd_measures)

    p = sub.add_parser("exponents", parents=[common], help="error and leakage bounds over n and s")
    p.add_argument("--mode", choices=("nonadaptive", "adaptive"), default="nonadaptive")
    p.add_argument("--rates", default="0.05,0.05,0.05,0.05", help="R1,R2,R1r,R2r in nats")
    p.add_argument("--split", default="0.02,0.02,0.02,0.02,0.02,0.02,0.02,0.02",
                   help="R1s,R1k,R1e,R1o,R2s,R2k,R2e,R2o in nats")
    p.add_argument("--t", type=int, default=2)
    p.add_argument("--n", default="100,1000,10000", help="comma list of block lengths")
    p.add_argument("--sweep", action="store_true", help="emit every (n, s) point")
    p.add_argument("--threshold", action="store_true", help="smallest n with all bounds below 1")
    p.add_argument("--n-max", type=int, default=10**6)
    p.set_defaults(func=cmd_exponents)

    p = sub.add_parser("region", parents=[common], help="achievable rate regions")
    p.add_argument("--kind", default="joint-nonadaptive",
                   choices=("joint-adaptive", "individual-adaptive", "joint-nonadaptive", "individual-nonadaptive"))
    p.add_argument("--search", choices=("none", "random", "grid"), default="none")
    p.add_argument("--samples", type=int, default=200)
    p.add_argument("--resolution", type=int, default=8)
    p.add_argument("--refine", type=int, default=0, help="coordinate-ascent steps per sample")
    p.add_argument("--v-extra", action="store_true", help="auxiliary alphabets one larger than inputs")
    p.add_argument("--bits", action="store_true", help="report rates in bits")
    p.set_defaults(func=cmd_region)

    p = sub.add_parser("fm", parents=[common], help="Fourier-Motzkin elimination of inequality files")
    p.add_argument("--fixture", choices=("appendix-a", "appendix-b"))
    p.add_argument("--file")
    p.add_argument("--order", help="comma list overriding the #eliminate order")
    p.set_defaults(func=cmd_fm)

    p = sub.add_parser("simulate", parents=[common], help="Monte-Carlo coding sessions")
    p.add_argument("--mode", choices=("nonadaptive", "adaptive"), default="nonadaptive")
    p.add_argument("--n", type=int, default=3)
    p.add_argument("--sizes", default="2,2,2,2", help="M1,L1,M2,L2")
    p.add_argument("--t", type=int, default=2)
    p.add_argument("--split1", default="2,2,2,2", help="Ms,Mk,Me,Mo of user 1")
    p.add_argument("--split2", default="2,2,2,2", help="Ms,Mk,Me,Mo of user 2")
    p.add_argument("--leakage", action="store_true", help="also compute the exact leakage")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("additive", parents=[common], help="additive-noise channels over prime fields")
    p.add_argument("--spec", help="JSON with q, a, b, n1, n2, n3 (default: binary, noise .1/.1/.2)")
    p.add_argument("--what", default="closed,advantage,virtual",
                   help="comma list from closed, advantage, virtual, two-stage, or 'all'")
    p.add_argument("--n1", type=int, default=8)
    p.add_argument("--M", type=int, default=4)
    p.add_argument("--inner", choices=("ideal", "repetition"), default="ideal")
    p.add_argument("--r", type=int, default=3)
    p.add_argument("--direction", type=int, default=1)
    p.set_defaults(func=cmd_additive)
    return ap


def _emit(args, payload, rows):
    payload = {"command": args.command, **payload, "seed": args.seed, "units": payload.get("units", "nats")}
    text = _render(payload, rows, args.format)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.workers < 1 or args.trials < 1:
            raise ValueError("--workers and --trials must be positive")
        payload, rows = args.func(args)
    except _Mismatch as exc:
        _emit(args, *exc.args)
        print("error: result does not match the reference inequalities", file=sys.stderr)
        return EXIT_MISMATCH
    except (TwwcError, ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    _emit(args, payload, rows)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
