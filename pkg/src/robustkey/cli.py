"""Command-line front end.

Exit codes: 0 success, 1 verification counterexample, 2 parameter error,
3 capacity cap exceeded.  Every output starts with a header record holding
the tool version and the fully resolved configuration, and all output is
deterministic given ``--seed``.
"""

from __future__ import annotations

import argparse
import csv
import io
import itertools
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__, cbs, codes, rates
from .adversary import verify_zero_error
from .errors import CapacityError, ParameterError, RobustKeyError
from .protocol import EpsParams, SchemeParams, preset, simulate_eps_cell, sweep_count_pairs

EXIT_OK, EXIT_COUNTEREXAMPLE, EXIT_PARAM, EXIT_CAP = 0, 1, 2, 3


class _ArgumentError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _ArgumentError(message)


# ----------------------------------------------------------------- output


def _emit(args, rows: list[dict], columns: list[str] | None = None) -> None:
    header = {"tool": "robustkey", "version": __version__, "config": _resolved(args)}
    buf = io.StringIO()
    if args.format == "csv":
        buf.write("# " + json.dumps(header, sort_keys=True) + "\n")
        columns = columns or (list(rows[0]) if rows else [])
        writer = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n", extrasaction="ignore")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: _fmt(row.get(k)) for k in columns})
    else:
        buf.write(json.dumps({"header": header}, sort_keys=True) + "\n")
        for row in rows:
            buf.write(json.dumps(row, sort_keys=True, default=_json_default) + "\n")
    text = buf.getvalue()
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def _fmt(v):
    if isinstance(v, float):
        return format(v, ".12g")
    if isinstance(v, (dict, list)):
        return json.dumps(v, sort_keys=True)
    return "" if v is None else v


def _json_default(v):
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, np.floating):
        return float(v)
    raise TypeError(f"cannot serialize {type(v).__name__}")


def _resolved(args) -> dict:
    skip = {"func", "config", "out"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def _diag(msg: str) -> None:
    sys.stderr.write(f"robustkey: {msg}\n")


# --------------------------------------------------------------- commands


def cmd_codes_build(args) -> int:
    if args.construction == "repetition":
        cb = codes.build_repetition(args.n, args.m, cap=args.cap)
    elif args.construction == "full":
        cb = codes.build_full(args.n, args.m, cap=args.cap)
    else:
        if args.d is None:
            raise ParameterError("--d is required for the mds construction")
        cb = codes.build_mds(args.n, args.d, args.m, cap=args.cap)
    verified = None
    if cb.size >= 2 and cb.size * cb.size <= codes.PAIR_CAP:
        verified = codes.min_distance(cb)
        if verified != cb.declared_min_distance:
            _diag(f"declared distance {cb.declared_min_distance} but found {verified}")
            return EXIT_COUNTEREXAMPLE
    text = codes.dumps(cb)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    sys.stderr.write(
        f"{cb.construction} n={cb.n} m={cb.m} size={cb.size} "
        f"d={cb.declared_min_distance} verified={verified}\n"
    )
    return EXIT_OK


def cmd_codes_inspect(args) -> int:
    cb = codes.loads(Path(args.file).read_text(), cap=args.cap)
    found = codes.min_distance(cb) if cb.size >= 2 else None
    row = {
        "n": cb.n,
        "m": cb.m,
        "declared_min_distance": cb.declared_min_distance,
        "construction": cb.construction,
        "field_poly": None if cb.field_poly is None else hex(cb.field_poly),
        "size": cb.size,
        "log2_size": cb.log2_size,
        "min_distance": found,
    }
    _emit(args, [row])
    if found is not None and found != cb.declared_min_distance:
        return EXIT_COUNTEREXAMPLE
    return EXIT_OK


def cmd_verify(args) -> int:
    if args.preset:
        scheme, params = preset(args.preset, args.m)
    else:
        missing = [k for k in ("n1", "n2", "t", "d") if getattr(args, k) is None]
        if missing:
            raise ParameterError(f"without --preset, give {', '.join('--' + k for k in missing)}")
        scheme = args.scheme
        params = SchemeParams(args.m, args.n1, args.n2, args.t, args.d)
    report = verify_zero_error(params, scheme, cap=args.enum_cap)
    _emit(args, [report.to_record()])
    return EXIT_OK if report.ok else EXIT_COUNTEREXAMPLE


def cmd_rates(args) -> int:
    rows = []
    if args.bound == "t1":
        for n1, n2, t in itertools.product(args.n1, args.n2, args.t):
            guard = rates.theorem1_guard(n1, n2, t)
            rows.append({"n1": n1, "n2": n2, "t": t, "capacity_zero": guard})
        cols = ["n1", "n2", "t", "capacity_zero"]
    elif args.bound == "t2":
        for m, n1, n2, t in itertools.product(args.m, args.n1, args.n2, args.t):
            b = rates.theorem2_bound(m, n1, n2, t)
            rows.append({
                "m": m, "n1": n1, "n2": n2, "t": t, "bound": b.value, "argmax": b.argmax_d,
                "omega_clean": b.omega_clean, "omega_detect": b.omega_detect,
            })
        cols = ["m", "n1", "n2", "t", "bound", "argmax", "omega_clean", "omega_detect"]
    elif args.bound == "t3":
        for m, t in itertools.product(args.m, args.t):
            ns = args.n
            rows.append({"w": len(ns), "n": " ".join(map(str, ns)), "t": t, "m": m,
                         "bound": rates.theorem3_bound(len(ns), ns, t, m)})
        cols = ["w", "n", "t", "m", "bound"]
    else:
        for l1, l2, tau in itertools.product(args.l1, args.l2, args.tau):
            value, xi = rates.theorem4_bound(rates.AsymParams(l1, l2, tau, step=args.step))
            rows.append({"lambda1": l1, "lambda2": l2, "tau": tau, "bound": value, "argmax": xi})
        cols = ["lambda1", "lambda2", "tau", "bound", "argmax"]
    _emit(args, rows, cols)
    return EXIT_OK


def cmd_simulate(args) -> int:
    rows = []
    bound, _ = rates.theorem4_bound(rates.AsymParams(args.l1, args.l2, args.tau))
    for r in sorted(args.r):
        eps = EpsParams(args.l1, args.l2, args.tau, r, args.xi, backoff=args.backoff)
        for counts in sweep_count_pairs(eps.t):
            cell = simulate_eps_cell(eps, counts, args.trials, args.seed)
            rows.append({
                "r": r, "n1": eps.n1, "n2": eps.n2, "t": eps.t,
                "forward": counts[0], "backward": counts[1], "trials": cell.trials,
                "disagreement_rate": cell.disagreement_rate,
                "key_entropy": cell.key_entropy,
                "rate_per_r": cell.mean_key_bits / r,
                "theorem4_bound": bound,
            })
    cols = ["r", "n1", "n2", "t", "forward", "backward", "trials", "disagreement_rate",
            "key_entropy", "rate_per_r", "theorem4_bound"]
    _emit(args, rows, cols)
    return EXIT_OK


def cmd_cbs_estimate(args) -> int:
    rows = []
    for n, s, xi, eps in itertools.product(sorted(args.n), args.s, args.xi, args.eps):
        rng = np.random.default_rng(np.random.SeedSequence((args.seed, n, len(rows))))
        channel = cbs.CbsChannel(n, eps)
        est = cbs.estimate_failures_ensemble(n, s, xi, channel, args.trials, rng, codes=args.codes)
        rows.append({
            "n": n, "s": s, "xi": xi, "epsilon": eps, "trials": est.trials,
            "p_correction": est.p_correction, "ci_correction": est.ci_correction,
            "p_detection": est.p_detection, "ci_detection": est.ci_detection,
        })
    _emit(args, rows, list(rows[0]) if rows else None)
    return EXIT_OK


# ----------------------------------------------------------------- parser


def _global_flags() -> argparse.ArgumentParser:
    p = _Parser(add_help=False)
    p.add_argument("--seed", type=int, default=0, help="master seed")
    p.add_argument("--out", default=None, help="output file (default stdout)")
    p.add_argument("--format", choices=("csv", "jsonl"), default="jsonl")
    p.add_argument("--cap", type=int, default=codes.MATERIALIZE_CAP,
                   help="largest codebook materialized for enumeration")
    p.add_argument("--config", default=None, help="JSON file supplying any flag")
    return p


def build_parser():
    g = _global_flags()
    parser = _Parser(prog="robustkey", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"robustkey {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    leaves = {}

    p_codes = sub.add_parser("codes", help="build or inspect codebooks")
    csub = p_codes.add_subparsers(dest="action", required=True)
    p = csub.add_parser("build", parents=[g])
    p.add_argument("--construction", choices=("repetition", "full", "mds"), default="mds")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--d", type=int, default=None)
    p.add_argument("--m", type=int, required=True)
    p.set_defaults(func=cmd_codes_build)
    leaves[("codes", "build")] = p
    p = csub.add_parser("inspect", parents=[g])
    p.add_argument("file")
    p.set_defaults(func=cmd_codes_inspect)
    leaves[("codes", "inspect")] = p

    p = sub.add_parser("verify", parents=[g], help="exhaustive zero-error check")
    p.add_argument("--preset", choices=("example1", "example2", "example3"))
    p.add_argument("--scheme", choices=("theorem2", "direct"), default="theorem2")
    p.add_argument("--m", type=int, default=2)
    for k in ("n1", "n2", "t", "d"):
        p.add_argument(f"--{k}", type=int, default=None)
    p.add_argument("--enum-cap", type=int, default=10**7)
    p.set_defaults(func=cmd_verify)
    leaves[("verify",)] = p

    p_rates = sub.add_parser("rates", help="rate-bound calculators")
    rsub = p_rates.add_subparsers(dest="bound", required=True)
    p = rsub.add_parser("t1", parents=[g])
    for k in ("n1", "n2", "t"):
        p.add_argument(f"--{k}", type=int, nargs="+", required=True)
    leaves[("rates", "t1")] = p
    p = rsub.add_parser("t2", parents=[g])
    for k in ("m", "n1", "n2", "t"):
        p.add_argument(f"--{k}", type=int, nargs="+", required=True)
    leaves[("rates", "t2")] = p
    p = rsub.add_parser("t3", parents=[g])
    p.add_argument("--n", type=int, nargs="+", required=True, help="links per round")
    p.add_argument("--t", type=int, nargs="+", required=True)
    p.add_argument("--m", type=int, nargs="+", required=True)
    leaves[("rates", "t3")] = p
    p = rsub.add_parser("t4", parents=[g])
    p.add_argument("--l1", type=float, nargs="+", required=True)
    p.add_argument("--l2", type=float, nargs="+", required=True)
    p.add_argument("--tau", type=float, nargs="+", required=True)
    p.add_argument("--step", type=float, default=1e-4)
    leaves[("rates", "t4")] = p
    for key in ("t1", "t2", "t3", "t4"):
        leaves[("rates", key)].set_defaults(func=cmd_rates)

    p = sub.add_parser("simulate", parents=[g], help="random-attack protocol sweep")
    p.add_argument("--l1", type=float, default=1.0)
    p.add_argument("--l2", type=float, default=1.0)
    p.add_argument("--tau", type=float, default=0.1)
    p.add_argument("--xi", type=float, default=0.05)
    p.add_argument("--r", type=int, nargs="+", default=[16, 24, 32])
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--backoff", type=float, default=0.5)
    p.set_defaults(func=cmd_simulate)
    leaves[("simulate",)] = p

    p_cbs = sub.add_parser("cbs", help="random-code failure estimates")
    bsub = p_cbs.add_subparsers(dest="action", required=True)
    p = bsub.add_parser("estimate", parents=[g])
    p.add_argument("--n", type=int, nargs="+", default=[12, 16, 20])
    p.add_argument("--s", type=float, nargs="+", default=[0.25])
    p.add_argument("--xi", type=float, nargs="+", default=[0.2])
    p.add_argument("--eps", type=float, nargs="+", default=[0.15])
    p.add_argument("--trials", type=int, default=10**5)
    p.add_argument("--codes", type=int, default=1000, help="random codes averaged per cell")
    p.set_defaults(func=cmd_cbs_estimate)
    leaves[("cbs", "estimate")] = p
    return parser, leaves


def _leaf_key(args) -> tuple:
    key = (args.command,)
    for attr in ("action", "bound"):
        if getattr(args, attr, None):
            key += (getattr(args, attr),)
    return key


def _config_path(argv) -> str | None:
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config", default=None)
    known, _ = pre.parse_known_args(argv)
    return known.config


def _load_config(path: str) -> dict:
    try:
        cfg = json.loads(Path(path).read_text())
    except (OSError, ValueError) as exc:
        raise ParameterError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ParameterError("config file must hold a JSON object")
    return cfg


def parse(argv):
    """Parse ``argv``; a ``--config`` JSON file supplies defaults for any flag."""
    parser, leaves = build_parser()
    path = _config_path(argv)
    cfg = _load_config(path) if path else {}
    if cfg:
        # config values become defaults, so explicit flags still win
        for leaf in leaves.values():
            known = {a.dest: a for a in leaf._actions}
            for key in cfg.keys() & known.keys():
                known[key].required = False
            leaf.set_defaults(**{k: v for k, v in cfg.items() if k in known})
    args = parser.parse_args(argv)
    if cfg:
        known = {a.dest for a in leaves[_leaf_key(args)]._actions}
        unknown = sorted(set(cfg) - known)
        if unknown:
            raise ParameterError(f"unknown config keys for this command: {unknown}")
    return args


def main(argv=None) -> int:
    try:
        args = parse(sys.argv[1:] if argv is None else argv)
        return args.func(args)
    except _ArgumentError as exc:
        _diag(str(exc))
        return EXIT_PARAM
    except CapacityError as exc:
        _diag(f"capacity exceeded: {exc}")
        return EXIT_CAP
    except (ParameterError, RobustKeyError) as exc:
        _diag(str(exc))
        return EXIT_PARAM


if __name__ == "__main__":
    sys.exit(main())
