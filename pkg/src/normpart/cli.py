"""Command-line front end.

Thin shells over the library operations: space descriptors come in as JSON,
results go out as a human table on stdout and optionally as CSV/JSON (same
record schema as the sweep module).  Every stochastic run echoes its seed.
Exit codes: 0 success, 2 input error, 3 unsupported capability.
"""

import argparse
import json
import sys

import numpy as np

from .space import (CapabilityError, InputError, SpaceDescriptor,
                    loglacunary_decompose, space)
from . import geometry as geo
from . import partition as part
from . import sepmod
from . import extension as ext
from .sepmod import SweepRecord, records_to_csv, records_to_json


def _parse_space(text):
    if text is None:
        raise InputError("--space is required for this command")
    return space(SpaceDescriptor.from_json(text))


def _parse_vector(text, name):
    if text is None:
        raise InputError("--%s is required for this command" % name)
    try:
        return np.array([float(t) for t in text.split(",")], dtype=float)
    except ValueError:
        raise InputError("could not parse --%s as comma-separated floats"
                         % name)


def _record(desc, n, quantity, value, stderr=0.0, lower=None, upper=None,
            seed=0):
    return SweepRecord(descriptor=desc, n=n, quantity=quantity,
                       value=float(value), stderr=float(stderr),
                       lower=lower, upper=upper, seed=seed)


def _print_table(records, seed):
    print("# seed=%d" % seed)
    header = "%-10s %4s %-18s %16s %12s %12s %12s" % (
        "kind", "n", "quantity", "value", "stderr", "lower", "upper")
    print(header)
    for r in records:
        print("%-10s %4d %-18s %16.8g %12.4g %12s %12s" % (
            r.descriptor.kind, r.n, r.quantity, r.value, r.stderr,
            "" if r.lower is None else "%.6g" % r.lower,
            "" if r.upper is None else "%.6g" % r.upper))


def _emit(records, args):
    seed = getattr(args, "seed", 0)
    if args.format == "csv":
        text = "# seed=%d\n" % seed + records_to_csv(records)
    elif args.format == "json":
        text = json.dumps({"seed": seed,
                           "records": [r.row() for r in records]}, indent=2)
    else:
        text = None
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text if text is not None else records_to_csv(records))
        _print_table(records, seed)
    elif text is not None:
        print(text)
    else:
        _print_table(records, seed)


def _cmd_vol(args):
    s = _parse_space(args.space)
    if args.mc:
        est = geo.volume_mc(s, trials=args.trials, seed=args.seed,
                            workers=args.workers, force=True)
    else:
        est = geo.volume_of(s, trials=args.trials, seed=args.seed)
    return [_record(s.descriptor, s.dim, "volume", est.value, est.stderr,
                    seed=args.seed)]


def _cmd_iq(args):
    s = _parse_space(args.space)
    exact = None
    if not args.mc:
        try:
            exact = geo.iq_exact(s)
        except CapabilityError:
            exact = None
    if exact is not None:
        return [_record(s.descriptor, s.dim, "iq", exact, 0.0,
                        seed=args.seed)]
    est = geo.iq(s, samples=args.trials, seed=args.seed, workers=args.workers)
    return [_record(s.descriptor, s.dim, "iq", est.value, est.stderr,
                    seed=args.seed)]


def _cmd_psi(args):
    s = _parse_space(args.space)
    w = _parse_vector(args.w, "w")
    est = geo.psi(s, w, samples=args.trials, seed=args.seed,
                  workers=args.workers, closed_form=not args.mc)
    return [_record(s.descriptor, s.dim, "psi", est.value, est.stderr,
                    seed=args.seed)]


def _cmd_maxproj(args):
    s = _parse_space(args.space)
    z, est = geo.maxproj(s, restarts=args.restarts, samples=args.trials,
                         seed=args.seed)
    print("# direction=%s" % ",".join("%.10g" % v for v in z))
    return [_record(s.descriptor, s.dim, "maxproj", est.value, est.stderr,
                    seed=args.seed)]


def _cmd_cone(args):
    s = _parse_space(args.space)
    cs = geo.cone_sample(s, args.trials, seed=args.seed)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write("# seed=%d\n" % args.seed)
            fh.write(",".join("x%d" % i for i in range(s.dim)) + ",weight\n")
            for pt, w in zip(cs.points, cs.weights):
                fh.write(",".join("%r" % v for v in pt) + ",%r\n" % w)
    mean_abs = float(np.abs(cs.points[:, 0]).mean())
    return [_record(s.descriptor, s.dim, "cone_abs_coord_mean", mean_abs,
                    float(np.abs(cs.points[:, 0]).std()
                          / np.sqrt(len(cs.points))), seed=args.seed)]


def _cmd_meanwidth(args):
    s = _parse_space(args.space)
    est = geo.mean_width_dual(s, samples=args.trials, seed=args.seed,
                              workers=args.workers)
    return [_record(s.descriptor, s.dim, "mean_width_dual", est.value,
                    est.stderr, seed=args.seed)]


def _cmd_sep_prob(args):
    s = _parse_space(args.space)
    u = _parse_vector(args.u, "u")
    v = _parse_vector(args.v, "v")
    if args.exact:
        est = part.separation_prob_exact(s, u, v, args.delta,
                                         trials=args.trials, seed=args.seed,
                                         workers=args.workers)
    else:
        est = part.separation_prob_mc(s, u, v, args.delta,
                                      trials=args.trials, seed=args.seed,
                                      workers=args.workers)
    return [_record(s.descriptor, s.dim, "sep_prob", est.value, est.stderr,
                    seed=args.seed)]


def _cmd_pad_prob(args):
    s = _parse_space(args.space)
    if args.exact:
        return [_record(s.descriptor, s.dim, "pad_prob",
                        part.padding_prob_exact(s, args.rho), 0.0,
                        seed=args.seed)]
    est = part.padding_prob_mc(s, args.rho, trials=args.trials,
                               seed=args.seed, workers=args.workers)
    return [_record(s.descriptor, s.dim, "pad_prob", est.value, est.stderr,
                    seed=args.seed)]


def _cmd_sep_bounds(args):
    s = _parse_space(args.space)
    y = _parse_space(args.space_y) if args.space_y else s
    lower = sepmod.sep_lower_evr(s)
    upper = sepmod.sep_upper_two_norm(s, y, restarts=args.restarts,
                                      samples=args.trials, seed=args.seed,
                                      workers=args.workers)
    return [_record(s.descriptor, s.dim, "sep_lower", lower, 0.0,
                    lower=lower, upper=upper.value, seed=args.seed),
            _record(y.descriptor, s.dim, "sep_upper", upper.value,
                    upper.stderr, lower=lower, upper=upper.value,
                    seed=args.seed)]


def _cmd_sweep(args):
    dims = tuple(int(t) for t in args.dims.split(","))
    p = float("inf") if args.p == "inf" else float(args.p)
    records = sepmod.sweep(family="lp", p=p, dims=dims,
                           companion=args.companion, samples=args.trials,
                           restarts=args.restarts, seed=args.seed,
                           workers=args.workers)
    slopes = sepmod.sweep_slopes(records)
    for q in sorted(slopes):
        records.append(_record(records[0].descriptor, 0, "slope_" + q,
                               slopes[q], 0.0, seed=args.seed))
    return records


def _cmd_extend(args):
    s = _parse_space(args.space)
    with open(args.anchors) as fh:
        payload = json.load(fh)
    try:
        anchors = payload["anchors"]
        values = payload["values"]
    except (TypeError, KeyError):
        raise InputError("anchor file must be JSON with 'anchors'/'values'")
    op = ext.build_extension(s, anchors, values, mc_rounds=args.mc_rounds,
                             seed=args.seed)
    x = _parse_vector(args.point, "point")
    value, weights = ext.evaluate(op, x)
    print("# seed=%d" % args.seed)
    print("value: " + ",".join("%r" % v for v in value))
    print("weights: " + ",".join("%r" % w for w in weights))
    return None


def _cmd_lw_check(args):
    rng = np.random.default_rng(np.random.SeedSequence(args.seed))
    records = []
    holds = True
    for i in range(args.trials):
        n = int(rng.integers(2, 4))
        count = int(rng.integers(1, 25))
        pts = {tuple(p) for p in rng.integers(0, 5, size=(count, n))}
        avg, floor = part.loomis_whitney_boundary(sorted(pts))
        holds &= avg >= floor - 1e-9
    records.append(_record(SpaceDescriptor(kind="lp", n=1, p=1.0), 0,
                           "loomis_whitney_holds", 1.0 if holds else 0.0,
                           seed=args.seed))
    return records


def _cmd_decompose(args):
    if args.n is None:
        raise InputError("--n is required for decompose")
    factors, remainder = loglacunary_decompose(args.n)
    print("n=%d factors=%s remainder=%d"
          % (args.n, ",".join(str(f) for f in factors) or "-", remainder))
    return None


COMMANDS = {
    "vol": _cmd_vol, "iq": _cmd_iq, "psi": _cmd_psi, "maxproj": _cmd_maxproj,
    "cone": _cmd_cone, "meanwidth": _cmd_meanwidth, "sep-prob": _cmd_sep_prob,
    "pad-prob": _cmd_pad_prob, "sep-bounds": _cmd_sep_bounds,
    "sweep": _cmd_sweep, "extend": _cmd_extend, "lw-check": _cmd_lw_check,
    "decompose": _cmd_decompose,
}


def build_parser():
    parser = argparse.ArgumentParser(
        prog="normpart",
        description="Randomized partitions, volumes, and separation bounds "
                    "for finite-dimensional normed spaces.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--space", help="space descriptor JSON")
        p.add_argument("--space-y", dest="space_y",
                       help="auxiliary space descriptor JSON")
        p.add_argument("--delta", type=float, default=2.0)
        p.add_argument("--rho", type=float, default=0.5)
        p.add_argument("--r", type=float, default=None)
        p.add_argument("--n", type=int, default=None)
        p.add_argument("--p", default="2")
        p.add_argument("--dims", default="4,8,16,32")
        p.add_argument("--w", help="direction, comma-separated floats")
        p.add_argument("--u", help="point, comma-separated floats")
        p.add_argument("--v", help="point, comma-separated floats")
        p.add_argument("--point", help="point, comma-separated floats")
        p.add_argument("--anchors", help="JSON file with anchors/values")
        p.add_argument("--trials", type=int, default=100_000)
        p.add_argument("--restarts", type=int, default=8)
        p.add_argument("--mc-rounds", dest="mc_rounds", type=int, default=64)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--workers", type=int, default=1)
        p.add_argument("--companion", action="store_true")
        p.add_argument("--exact", action="store_true")
        p.add_argument("--mc", action="store_true")
        p.add_argument("--out", default=None)
        p.add_argument("--format", choices=("csv", "json", "table"),
                       default="table")
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        records = COMMANDS[args.command](args)
    except InputError as exc:
        print("input error: %s" % exc, file=sys.stderr)
        return 2
    except (json.JSONDecodeError, ValueError) as exc:
        print("input error: %s" % exc, file=sys.stderr)
        return 2
    except CapabilityError as exc:
        print("capability error: %s" % exc, file=sys.stderr)
        return 3
    if records is not None:
        _emit(records, args)
    return 0


if __name__ == "__main__":
    sys.exit(main())
