"""Command-line front end.

Exit codes: 0 success, 1 a verification check failed, 2 usage or config
error, 3 numeric failure (quadrature, root finding, non-finite values).
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from typing import Sequence

import numpy as np

from . import catalog, engine, fitting, invariance, radial, sampling
from .errors import (BracketError, DomainError, FitNonConvergedError, IntegrationError, InvScalesError,
                     MultiModalError, NonFiniteError)

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3

_NUMERIC = (IntegrationError, NonFiniteError, BracketError, MultiModalError, FloatingPointError,
            OverflowError, ZeroDivisionError)


class UsageError(Exception):
    pass


# --------------------------------------------------------------------------
# config handling
# --------------------------------------------------------------------------

def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def apply_overrides(cfg: dict, pairs: Sequence[str]) -> dict:
    """Apply ``key=value`` pairs; dotted keys reach into nested objects.

    Values are parsed as JSON when possible, else kept as strings.  A
    ``null`` value removes the key.
    """
    out = json.loads(json.dumps(cfg))
    for pair in pairs or ():
        if "=" not in pair:
            raise UsageError(f"--set expects key=value, got {pair!r}")
        key, value = pair.split("=", 1)
        parts = key.strip().split(".")
        node = out
        for p in parts[:-1]:
            nxt = node.get(p)
            if nxt is None:
                nxt = node[p] = {}
            if not isinstance(nxt, dict):
                raise UsageError(f"cannot set {key!r}: {p!r} is not an object")
            node = nxt
        parsed = _parse_value(value.strip())
        if parsed is None:
            node.pop(parts[-1], None)
        else:
            node[parts[-1]] = parsed
    return out


def load_config(path: str | None, overrides: Sequence[str]) -> dict:
    if path is None:
        raise UsageError("--config is required for this command")
    try:
        with open(path, encoding="utf-8") as fh:
            cfg = json.load(fh)
    except OSError as err:
        raise UsageError(f"cannot read config {path!r}: {err.strerror}") from err
    except json.JSONDecodeError as err:
        raise UsageError(f"config {path!r} is not valid JSON: {err}") from err
    if not isinstance(cfg, dict):
        raise UsageError("config must be a JSON object")
    return apply_overrides(cfg, overrides)


def distribution_from_config(cfg: dict) -> engine.Distribution:
    """Either a catalog entry {family, params[, quad]} or a distribution spec."""
    if "family" in cfg:
        unknown = set(cfg) - {"family", "params", "quad"}
        if unknown:
            raise UsageError(f"unknown keys in family config: {sorted(unknown)}")
        fam = catalog.NamedFamily(cfg["family"], cfg.get("params", {}))
        quad = engine.quad_from_dict(cfg.get("quad"))
        return catalog.build(fam, quad)
    return engine.distribution_from_spec(cfg)


# --------------------------------------------------------------------------
# output
# --------------------------------------------------------------------------

def _num(x):
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if not math.isfinite(x):
            return None if math.isnan(x) else ("inf" if x > 0 else "-inf")
    return x


def _json(obj) -> str:
    def clean(o):
        if isinstance(o, dict):
            return {k: clean(v) for k, v in o.items()}
        if isinstance(o, (list, tuple)):
            return [clean(v) for v in o]
        if isinstance(o, np.ndarray):
            return [clean(v) for v in o.tolist()]
        if isinstance(o, (np.integer,)):
            return int(o)
        return _num(o)
    return json.dumps(clean(obj), indent=2) + "\n"


def _g17(x) -> str:
    return "%.17g" % x


def _emit(text: str, out_path: str | None):
    if out_path:
        with open(out_path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# --------------------------------------------------------------------------
# commands
# --------------------------------------------------------------------------

def summary(d: engine.Distribution) -> dict:
    avg = engine.average_T(d)
    return {
        "k": d.k,
        "log_k": d.log_k,
        "lambda": d.lam,
        "avg_T": avg,
        "lambda_avg_T": d.lam * avg,
        "entropy": engine.entropy(d),
        "measure": d.measure.value,
    }


def cmd_build(args, cfg) -> int:
    d = distribution_from_config(cfg)
    out = summary(d)
    out["spec"] = engine.distribution_to_spec(d)
    if args.format == "csv":
        keys = ["k", "log_k", "lambda", "avg_T", "lambda_avg_T", "entropy"]
        _emit(",".join(keys) + "\n" + ",".join(_g17(out[k]) for k in keys) + "\n", args.out)
    else:
        _emit(_json(out), args.out)
    return EXIT_OK


def cmd_verify(args, cfg) -> int:
    d = distribution_from_config(cfg)
    results = invariance.verify_distribution(d, tol=args.tol)
    ok = all(r.passed for _, r in results)
    if args.format == "json":
        payload = {"passed": ok, "checks": [dict(name=n, **r.to_dict()) for n, r in results]}
        _emit(_json(payload), args.out)
    elif args.format == "csv":
        lines = ["check,max_residual,tolerance,passed"]
        lines += [f"{n},{_g17(r.max_residual)},{_g17(r.tolerance)},{str(r.passed).lower()}" for n, r in results]
        _emit("\n".join(lines) + "\n", args.out)
    else:
        width = max(len(n) for n, _ in results)
        lines = [f"{'check':<{width}}  {'residual':>10}  {'tol':>8}  result"]
        lines += [f"{n:<{width}}  {r.max_residual:>10.3e}  {r.tolerance:>8.1e}  {'PASS' if r.passed else 'FAIL'}"
                  for n, r in results]
        lines.append(f"{'all checks':<{width}}  {'':>10}  {'':>8}  {'PASS' if ok else 'FAIL'}")
        _emit("\n".join(lines) + "\n", args.out)
    return EXIT_OK if ok else EXIT_FAIL


def _parse_grid(text: str | None):
    if text is None:
        return None
    try:
        lo, hi, n = text.split(":")
        return np.linspace(float(lo), float(hi), int(n))
    except ValueError as err:
        raise UsageError(f"--grid expects lo:hi:n, got {text!r}") from err


def cmd_curves(args, cfg) -> int:
    d = distribution_from_config(cfg)
    table = radial.parametric_curves(d, _parse_grid(args.grid))
    _emit(table.to_json() if args.format == "json" else table.to_csv(), args.out)
    return EXIT_OK


def cmd_report(args, cfg) -> int:
    d = distribution_from_config(cfg)
    out = summary(d)
    out["entropy_direct"] = engine.entropy_direct(d)
    mean_z = engine.mean_of(d, lambda z: z)
    out["mean_z"] = mean_z
    out["var_z"] = engine.mean_of(d, lambda z: (z - mean_z) ** 2)
    try:
        out["conserved"] = engine.conserved_check(d)
    except (IntegrationError, DomainError) as err:
        out["conserved"] = None
        out["conserved_note"] = str(err)
    if args.format == "csv":
        keys = [k for k, v in out.items() if isinstance(v, float)]
        _emit(",".join(keys) + "\n" + ",".join(_g17(out[k]) for k in keys) + "\n", args.out)
    else:
        _emit(_json(out), args.out)
    return EXIT_OK


def cmd_sample(args, cfg) -> int:
    d = distribution_from_config(cfg)
    z = sampling.sample(d, args.n, seed=args.seed)
    if args.format == "csv":
        _emit("z\n" + "".join(_g17(v) + "\n" for v in z), args.out)
    else:
        _emit("[" + ",\n ".join(_g17(v) for v in z) + "]\n", args.out)
    return EXIT_OK


def cmd_fit(args, cfg) -> int:
    if "family" not in cfg:
        raise UsageError("fit needs a config with 'family' and 'params' (the starting point)")
    if args.data is None:
        raise UsageError("fit needs --data")
    try:
        data = fitting.read_data_file(args.data)
    except OSError as err:
        raise UsageError(f"cannot read data {args.data!r}: {err.strerror}") from err
    try:
        res = fitting.mle_fit(cfg["family"], data, cfg.get("params", {}), args.max_iter)
    except FitNonConvergedError as err:
        _emit(err.result.to_json() + "\n", args.out)
        raise
    _emit(res.to_json() + "\n", args.out)
    return EXIT_OK


def cmd_catalog(args, cfg) -> int:
    rows = catalog.families()
    if args.format == "csv":
        lines = ["family,params,scale_kind,measure,domain_lo,domain_hi"]
        lines += [f"{r['family']},{' '.join(r['params_schema'])},{r['scale_kind']},{r['measure']},"
                  f"{r['domain'][0]},{r['domain'][1]}" for r in rows]
        _emit("\n".join(lines) + "\n", args.out)
    else:
        _emit(_json(rows), args.out)
    return EXIT_OK


COMMANDS = {
    "build": cmd_build,
    "verify": cmd_verify,
    "curves": cmd_curves,
    "report": cmd_report,
    "sample": cmd_sample,
    "fit": cmd_fit,
    "catalog": cmd_catalog,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="distribution spec or {family, params} JSON file")
    common.add_argument("--out", help="write output here instead of stdout")
    common.add_argument("--format", choices=["json", "csv"], default=None)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override a config entry (dotted keys, repeatable; null removes)")
    common.add_argument("--tol", type=float, default=None, help="tolerance for every verify check")

    p = argparse.ArgumentParser(prog="invscales", description="Invariance-built probability distributions.")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("build", parents=[common], help="normalize and summarize a distribution")
    sub.add_parser("verify", parents=[common], help="run the invariance and identity checks")
    c = sub.add_parser("curves", parents=[common], help="parametric curves in z, T and R")
    c.add_argument("--grid", help="lo:hi:n (default: probe grid over the domain)")
    sub.add_parser("report", parents=[common], help="entropy and moments")
    s = sub.add_parser("sample", parents=[common], help="deterministic draws")
    s.add_argument("-n", type=int, default=1000)
    f = sub.add_parser("fit", parents=[common], help="maximum-likelihood fit")
    f.add_argument("--data", help="one value per line, or single-column CSV with header")
    f.add_argument("--max-iter", type=int, default=2000)
    k = sub.add_parser("catalog", parents=[common], help="list the named families")
    k.add_argument("action", nargs="?", choices=["list"], default="list")
    return p


def run(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse already printed its message
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    if args.format is None:
        args.format = "csv" if args.command == "curves" else ("table" if args.command == "verify" else "json")
    try:
        if args.tol is not None and not args.tol > 0:
            raise UsageError("--tol must be > 0")
        cfg = {} if args.command == "catalog" else load_config(args.config, args.set)
        return COMMANDS[args.command](args, cfg)
    except _NUMERIC as err:
        return _fail(EXIT_NUMERIC, err)
    except (UsageError, ValueError, KeyError, TypeError) as err:
        return _fail(EXIT_USAGE, err)
    except InvScalesError as err:
        return _fail(EXIT_NUMERIC, err)
    except OSError as err:
        return _fail(EXIT_USAGE, err)


def _fail(code: int, err: BaseException) -> int:
    msg = " ".join(str(err).split()) or type(err).__name__
    sys.stderr.write(f"invscales: error: {type(err).__name__}: {msg}\n")
    return code


def main(argv: Sequence[str] | None = None) -> int:
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
