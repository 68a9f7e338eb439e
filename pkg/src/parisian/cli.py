"""Command line: ``parisian {price,density,verify,version}``.

Exit codes: 0 success, 1 verification failure, 2 invalid input,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import tempfile
from importlib import metadata

import numpy as np

from .config import RunConfig, dump_config, load_config
from .errors import ConfigError, DomainError, NumericalError, RangeError
from .mc import mc_exit_time_transform, mc_hb_lemma_estimate, mc_price_refinement, sample_exit
from .model import derive_params
from .pricing import hb_density, paris_down_in_call, paris_down_out_call
from .special import psi
from .transforms import ExcursionSpec, exit_time_transform, hb_transform

EXIT_OK, EXIT_VERIFY, EXIT_INPUT, EXIT_NUMERIC = 0, 1, 2, 3
Z_LIMIT = 3.0
KEY_RELATION_Z = (0.5, 1.0, 2.0, 5.0)
TRANSFORM_Z = (0.5, 1.0, 2.0)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_INPUT)


def _jsonable(value):
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    if isinstance(value, complex):
        return [value.real, value.imag]
    return value


def _emit(record: dict, fmt: str, out) -> None:
    if fmt == "json-lines":
        out.write(json.dumps(_jsonable(record), sort_keys=True) + "\n")
    else:
        out.write("  ".join(f"{k}={_text(v)}" for k, v in record.items()) + "\n")


def _text(value) -> str:
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, dict):
        return json.dumps(_jsonable(value), sort_keys=True)
    return str(value)


def _excursion(run: RunConfig) -> ExcursionSpec:
    return ExcursionSpec.from_derived(derive_params(run.market, run.contract))


# -- subcommands ---------------------------------------------------------------

def cmd_price(args, out) -> int:
    run = load_config(args.config, args.set)
    if args.dump_config:
        out.write(dump_config(run))
        return EXIT_OK
    pricer = paris_down_out_call if args.option == "down-out" else paris_down_in_call
    result = pricer(run.market, run.contract, run.numerics)
    record = {"option": args.option, "value": result.value, "method": result.method}
    if args.format == "json-lines":
        record["diagnostics"] = result.diagnostics
        _emit(record, args.format, out)
    else:
        _emit(record, args.format, out)
        for key, value in result.diagnostics.items():
            out.write(f"  {key}: {_text(value)}\n")
    return EXIT_OK


def _parse_grid(text: str) -> np.ndarray:
    try:
        lo, hi, count = text.split(":")
        lo, hi, count = float(lo), float(hi), int(count)
    except ValueError:
        raise ConfigError(f"--y-grid must be min:max:count, got {text!r}") from None
    if count < 1 or (count > 1 and not hi > lo):
        raise ConfigError(f"--y-grid needs count >= 1 and max > min, got {text!r}")
    return np.linspace(lo, hi, count)


def cmd_density(args, out) -> int:
    run = load_config(args.config, args.set)
    ys = _parse_grid(args.y_grid)
    if run.contract.barrier == 0:
        values = np.zeros_like(ys)
    else:
        values = np.atleast_1d(hb_density(_excursion(run), args.time, ys, run.numerics))
    target_dir = os.path.dirname(os.path.abspath(args.out))
    fd, tmp = tempfile.mkstemp(dir=target_dir, prefix=".density-", suffix=".csv")
    try:
        with os.fdopen(fd, "w", encoding="ascii", newline="\n") as fh:
            fh.write("y,h_b\n")
            for y, h in zip(ys, values):
                fh.write("%.12g,%.12g\n" % (y, h))
        os.replace(tmp, args.out)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    out.write(f"wrote {ys.size} rows to {args.out}\n")
    return EXIT_OK


def _check(name, analytic, estimate) -> dict:
    zr, zi = estimate.z_score(analytic)
    record = {
        "check": name,
        "analytic": complex(analytic),
        "mc": complex(estimate.mean),
        "std_error": estimate.std_error,
        "std_error_imag": estimate.std_error_imag,
        "z_re": zr,
        "z_im": zi,
    }
    record["pass"] = abs(zr) <= Z_LIMIT and abs(zi) <= Z_LIMIT
    return record


def _suite_key_relation(run: RunConfig) -> list[dict]:
    window = run.contract.window
    spec = ExcursionSpec(0.0, window)
    records = []
    for z in KEY_RELATION_Z:
        product = complex(exit_time_transform(spec, z)) * psi(math.sqrt(2 * window * z))
        records.append({"check": f"identity z={z}", "value": product,
                        "pass": abs(product - 1.0) <= 1e-12})
    sample = sample_exit(spec, run.mc, 40.0 / min(KEY_RELATION_Z))
    for z in KEY_RELATION_Z:
        est = mc_exit_time_transform(spec, z, run.mc, sample=sample)
        scale = psi(math.sqrt(2 * window * z))
        # E[e^{-zH}] Psi(sqrt(2Dz)) against 1, with the standard error scaled alike.
        scaled = type(est)(est.mean * scale, est.std_error * abs(scale), est.paths, est.seed,
                           est.std_error_imag * abs(scale))
        records.append(_check(f"key relation z={z}", 1.0, scaled))
    return records


def _suite_transforms(run: RunConfig, ys: list[float]) -> list[dict]:
    spec = _excursion(run)
    sample = sample_exit(spec, run.mc, 40.0 / min(TRANSFORM_Z))
    records = []
    for z in TRANSFORM_Z:
        est = mc_exit_time_transform(spec, z, run.mc, sample=sample)
        records.append(_check(f"exit transform z={z}", exit_time_transform(spec, z), est))
    for y in ys:
        evaluator = hb_transform(spec, y, run.numerics.quad_tol)
        for z in TRANSFORM_Z:
            est = mc_hb_lemma_estimate(spec, y, z, run.mc, sample=sample)
            records.append(_check(f"density transform y={y} z={z}", complex(evaluator(z)), est))
    return records


def _suite_price(run: RunConfig) -> list[dict]:
    analytic = paris_down_in_call(run.market, run.contract, run.numerics).value
    ref = mc_price_refinement(run.market, run.contract, run.mc)
    est = ref.coarse
    lo = est.mean - Z_LIMIT * est.std_error - ref.bias
    hi = est.mean + Z_LIMIT * est.std_error
    return [{
        "check": "down-in price",
        "analytic": analytic,
        "mc": est.mean,
        "mc_half_step": ref.fine.mean,
        "std_error": est.std_error,
        "bias_allowance": ref.bias,
        "z_re": (analytic - est.mean) / est.std_error if est.std_error > 0 else 0.0,
        "pass": lo <= analytic <= hi,
    }]


def cmd_verify(args, out) -> int:
    run = load_config(args.config, args.set, require_seed=True)
    if run.mc is None:
        raise ConfigError("verify needs mc settings")
    if args.suite == "key-relation":
        records = _suite_key_relation(run)
    elif args.suite == "transforms":
        records = _suite_transforms(run, args.y)
    else:
        records = _suite_price(run)
    for record in records:
        record = dict(record, result="PASS" if record["pass"] else "FAIL")
        record.pop("pass")
        _emit(record, args.format, out)
    ok = all(r["pass"] for r in records)
    out.write(f"suite {args.suite}: {'PASS' if ok else 'FAIL'}\n")
    return EXIT_OK if ok else EXIT_VERIFY


def cmd_version(args, out) -> int:
    try:
        version = metadata.version("artifact")
    except metadata.PackageNotFoundError:
        version = "unknown"
    out.write(f"parisian {version}\n")
    return EXIT_OK


# -- entry point -----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="parisian", description="Parisian down-and-in call pricing")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p):
        p.add_argument("config", nargs="?", help="config file (section.key = value lines)")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override a config entry; repeatable")
        p.add_argument("--format", choices=("text", "json-lines"), default="text")

    p = sub.add_parser("price", help="price a Parisian down-and-in (or down-out) call")
    common(p)
    p.add_argument("--option", choices=("down-in", "down-out"), default="down-in")
    p.add_argument("--dump-config", action="store_true", help="print the effective config and exit")
    p.set_defaults(func=cmd_price)

    p = sub.add_parser("density", help="write h_b(u, y) on a grid of y as CSV")
    common(p)
    p.add_argument("--time", type=float, required=True, help="time u")
    p.add_argument("--y-grid", required=True, help="min:max:count")
    p.add_argument("--out", required=True, help="output CSV path")
    p.set_defaults(func=cmd_density)

    p = sub.add_parser("verify", help="compare analytics with Monte Carlo")
    common(p)
    p.add_argument("--suite", choices=("key-relation", "transforms", "price"), required=True)
    p.add_argument("--y", type=float, action="append", default=None,
                   help="density transform point for the transforms suite; repeatable (default 0.1)")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("version", help="print the package version")
    p.set_defaults(func=cmd_version)
    return parser


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if getattr(args, "y", None) is None:
        args.y = [0.1]
    try:
        return args.func(args, out)
    except (ConfigError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (NumericalError, RangeError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    raise SystemExit(main())
