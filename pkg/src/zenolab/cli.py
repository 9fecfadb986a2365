"""Command-line front end: zenolab {simulate,sweep,bound,fit,verify,deficit}."""
from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import zenobounds as zb
from .artifacts import __version__, csv_text, parse_state, parse_values, write_artifact
from .config import DEFAULT_SEED, TOL
from .opalg import random_pure
from .scenarios import METRICS, builtin, initial_deficit, model_scenario, sweep, verify_revclsi
from .semigroup import spec_from_model
from .tomofit import fit_params, load_choi


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _existing_file(path: str) -> str:
    if not os.path.isfile(path):
        raise argparse.ArgumentTypeError(f"no such file: {path}")
    return path


def _model_args(p):
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--model", type=_existing_file, help="model JSON file")
    src.add_argument("--builtin", help="chain{n}, twoqubit, basisdrift or phik")


def _out_args(p):
    p.add_argument("--out", help="output path (CSV or JSON); stdout when omitted")
    p.add_argument("--json", action="store_true", help="print JSON instead of CSV/plain text")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="zenolab", description=__doc__)
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    for name, axis_default in (("simulate", "t"), ("sweep", "gamma")):
        p = sub.add_parser(name)
        _model_args(p)
        if name == "sweep":
            p.add_argument("--axis", choices=("gamma", "t", "k"), default=axis_default)
        p.add_argument("--values", required=True,
                       help="comma list, linspace:a:b:n or logspace:a:b:n")
        p.add_argument("--t", type=float, default=1.0)
        p.add_argument("--gamma", type=float, default=1.0)
        p.add_argument("--k", type=int, default=None)
        p.add_argument("--metric", action="append", choices=METRICS)
        p.add_argument("--input-state", help="site string over 0,1,+,-,m or matrix JSON file")
        p.add_argument("--keep", help="comma list of kept subsystems for state metrics")
        _out_args(p)

    p = sub.add_parser("bound")
    p.add_argument("name", choices=("phi-k", "beta-lower", "epsultimate", "discretefinal",
                                     "ctsfinal", "zfromdecay", "zvscmlsi", "epsilongeneral",
                                     "hsandwich"))
    for flag, typ in (("k", int), ("q", int), ("g", int), ("w", int), ("gamma", float),
                      ("eps", float), ("l-norm", float), ("ele-norm", float), ("t", float),
                      ("c", float), ("zeta", float), ("lam", float), ("b", float),
                      ("b0", float), ("lam0", float), ("c-eps", float), ("alpha", float)):
        p.add_argument(f"--{flag}", type=typ)
    p.add_argument("--kind", choices=("continuous", "discrete"), default="continuous")
    _out_args(p)

    p = sub.add_parser("fit")
    p.add_argument("--in", dest="inp", type=_existing_file, required=True,
                   help="Choi matrix JSON or CSV of 16 complex entries")
    _out_args(p)

    p = sub.add_parser("verify")
    _model_args(p)
    p.add_argument("--gamma", type=float, default=1.0)
    p.add_argument("--values", default="0.1,0.5,1,2", help="t grid")
    p.add_argument("--states", type=int, default=50, help="number of random pure states")
    p.add_argument("--orientation", choices=("backward", "forward"), default="backward")
    _out_args(p)

    p = sub.add_parser("deficit")
    _model_args(p)
    p.add_argument("--gamma", type=float, default=1.0)
    p.add_argument("--values", required=True, help="t samples")
    p.add_argument("--input-state", required=True)
    _out_args(p)
    return ap


def _scenario(args):
    if args.model:
        with open(args.model) as fh:
            return model_scenario(json.load(fh), os.path.splitext(os.path.basename(args.model))[0])
    return builtin(args.builtin)


def _spec(args):
    if args.model:
        with open(args.model) as fh:
            return spec_from_model(json.load(fh)).with_weights(args.gamma)
    sc = builtin(args.builtin)
    if sc.spec_builder is None:
        raise ValueError(f"builtin {args.builtin!r} has no generator")
    return sc.spec_builder(args.gamma)


def _emit(args, config, header, rows, payload=None):
    files = [f for f in (getattr(args, "model", None), getattr(args, "inp", None)) if f]
    if args.json or payload is not None and not header:
        text = json.dumps(payload if payload is not None else
                          [dict(zip(header, r)) for r in rows], indent=2, default=float) + "\n"
    else:
        text = csv_text(header, rows)
    if args.out:
        write_artifact(args.out, text, config, TOL, args.seed, files)
    else:
        sys.stdout.write(text)


def cmd_sweep(args, config):
    sc = _scenario(args)
    axis = getattr(args, "axis", "t")
    if sc.model_id == "phik" and axis != "k":
        raise ValueError("the phik builtin only supports the k axis")
    rho = parse_state(args.input_state or sc.default_state, sc.space.total_dim)
    keep = tuple(int(x) for x in args.keep.split(",")) if args.keep else None
    values = parse_values(args.values)
    if axis == "k":
        values = [int(v) for v in values]
    res = sweep(sc, axis, values, rho, args.metric or ["rel-entropy"], t=args.t,
                gamma=args.gamma, k=args.k, keep=keep, seed=args.seed)
    header = [axis, "metric", "lower", "upper", "value", "error"]
    rows = [(r.param, r.metric, r.lower, r.upper, r.value, r.error) for r in res.rows]
    _emit(args, config, header, rows)


def cmd_bound(args, config):
    a = vars(args)

    def need(*names):
        missing = [n for n in names if a.get(n.replace("-", "_")) is None]
        if missing:
            raise ValueError(f"bound {args.name} needs " + ", ".join("--" + n for n in missing))
        return [a[n.replace("-", "_")] for n in names]

    name = args.name
    if name == "phi-k":
        payload = {"value": zb.phi_k_bound(*need("k"))}
    elif name == "beta-lower":
        payload = {"value": zb.beta_lower(*need("c", "zeta"))}
    elif name == "epsultimate":
        payload = zb.epsultimate_bound(*need("k", "q", "gamma", "eps", "l-norm", "ele-norm")).to_dict()
    elif name == "discretefinal":
        payload = zb.discretefinal_bound(*need("k", "g", "w", "eps", "l-norm", "ele-norm")).to_dict()
    elif name == "ctsfinal":
        payload = zb.ctsfinal_bound(*need("gamma", "w", "eps", "l-norm")).to_dict()
    elif name == "zfromdecay":
        lam, b, eps, c_eps, w, l_norm = need("lam", "b", "eps", "c-eps", "w", "l-norm")
        payload = zb.zfromdecay_bound(args.kind, lam, b, eps, c_eps, w, l_norm,
                                      args.ele_norm or 0.0, args.k).to_dict()
    elif name == "zvscmlsi":
        payload = zb.zvscmlsi_cap(*need("lam0", "b0", "b", "eps", "c-eps", "alpha", "l-norm")).to_dict()
    elif name == "epsilongeneral":
        payload = zb.epsilongeneral_bound(*need("k", "t", "eps", "l-norm", "ele-norm")).to_dict()
    else:
        payload = zb.hsandwich_bound(*need("k", "t", "l-norm", "ele-norm")).to_dict()
    if args.json or args.out:
        _emit(args, config, None, None, payload)
    else:
        print(format(payload["value"], ".17g"))


def cmd_fit(args, config):
    p = fit_params(load_choi(args.inp))
    _emit(args, config, None, None, p.to_dict())


def cmd_verify(args, config):
    spec = _spec(args)
    rng = np.random.default_rng(args.seed)
    d = spec.space.total_dim
    states = []
    for _ in range(args.states):
        v = random_pure(d, rng)
        states.append(np.outer(v, v.conj()))
    res = verify_revclsi(spec, states, parse_values(args.values), args.orientation)
    header = ["t", "worst_margin", "mean_margin"]
    rows = [(t, float(m.min()), float(m.mean())) for t, m in zip(res.t, res.margins)]
    _emit(args, config, header, rows)


def cmd_deficit(args, config):
    spec = _spec(args)
    rho = parse_state(args.input_state, spec.space.total_dim)
    rows = initial_deficit(spec, rho, parse_values(args.values))
    _emit(args, config, ["t", "deficit_bits"], rows)


COMMANDS = {"simulate": cmd_sweep, "sweep": cmd_sweep, "bound": cmd_bound, "fit": cmd_fit,
            "verify": cmd_verify, "deficit": cmd_deficit}


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        config = {k: v for k, v in sorted(vars(args).items()) if k not in ("out", "json")}
        COMMANDS[args.command](args, config)
    except SystemExit as exc:  # --help and --version
        return int(exc.code or 0)
    except Exception as exc:
        err = {"error": type(exc).__name__, "message": str(exc)}
        sys.stderr.write(json.dumps(err) + "\n")
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
