"""Command-line entry point: ``circulaw <subcommand> ...``.

Exit codes: 0 on success, 2 for invalid arguments or configuration, 3 for a
numerical failure (any records produced before it are still written).
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from typing import List, Optional

import numpy as np

from . import equilibrium, ginibre
from .harness import EXPERIMENTS, ConfigError, ExperimentAborted, ExperimentConfig, run_experiment
from .records import records_to_csv, records_to_json

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _complex_arg(text: str) -> complex:
    try:
        parts = text.split(",")
        if len(parts) == 2:
            return complex(float(parts[0]), float(parts[1]))
        return complex(text.replace(" ", ""))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected re,im but got {text!r}") from None


def _finite_or_none(x: float):
    return x if math.isfinite(x) else None


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="circulaw", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("mc-solve", help="limiting Stieltjes transform m_c(E + i eta, z)")
    s.add_argument("--e", type=float, required=True, help="energy E")
    s.add_argument("--eta", type=float, required=True, help="imaginary part eta >= 0")
    s.add_argument("--z", type=_complex_arg, required=True, help="shift z as re,im")

    s = sub.add_parser("density", help="limiting density rho_c(x, z) on a uniform x grid (CSV)")
    s.add_argument("--z", type=_complex_arg, required=True)
    s.add_argument("--xmin", type=float, required=True)
    s.add_argument("--xmax", type=float, required=True)
    s.add_argument("--points", type=int, default=101)

    s = sub.add_parser("kernel", help="Ginibre kernel K_n(z1, z2)")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--z1", type=_complex_arg, required=True)
    s.add_argument("--z2", type=_complex_arg, required=True)

    for name in EXPERIMENTS:
        s = sub.add_parser(name, help=f"run the {name} experiment")
        s.add_argument("--config", required=True, help="ExperimentConfig as JSON")
        s.add_argument("--out", default=None, help="output path (default: config out_path or stdout)")
        s.add_argument("--format", choices=("csv", "json"), default=None)
    return p


def _emit(text: str, path: Optional[str]) -> None:
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
        if not text.endswith("\n"):
            sys.stdout.write("\n")


def _mc_solve(args) -> int:
    if args.eta < 0:
        print("circulaw: error: --eta must be >= 0", file=sys.stderr)
        return EXIT_CONFIG
    val = equilibrium.equilibrium_value(equilibrium.SpectralPoint(args.e, args.eta, args.z))
    w = complex(args.e, args.eta)
    out = {
        "E": args.e,
        "eta": args.eta,
        "z": [args.z.real, args.z.imag],
        "m_c": [val.m_c.real, val.m_c.imag],
        "rho": val.rho,
        "alpha": val.params.alpha,
        "lambda_minus": _finite_or_none(val.params.lambda_minus),
        "lambda_plus": val.params.lambda_plus,
        "kappa": val.params.kappa,
        "residual": abs(equilibrium.residual(val.m_c, w, args.z)),
    }
    _emit(json.dumps(out, indent=1), None)
    return EXIT_OK


def _density(args) -> int:
    if args.points < 1 or not args.xmax >= args.xmin:
        print("circulaw: error: need --points >= 1 and --xmax >= --xmin", file=sys.stderr)
        return EXIT_CONFIG
    x = np.linspace(args.xmin, args.xmax, args.points)
    rho = np.atleast_1d(equilibrium.rho_c(x, args.z))
    lines = ["x,rho"] + [f"{xi:.17g},{ri:.17g}" for xi, ri in zip(x, rho)]
    _emit("\n".join(lines), None)
    return EXIT_OK


def _kernel(args) -> int:
    if args.n < 1:
        print("circulaw: error: --n must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    k = ginibre.kernel(args.n, args.z1, args.z2)
    out = {"n": k.n, "z1": [k.z1.real, k.z1.imag], "z2": [k.z2.real, k.z2.imag],
           "value": [k.value.real, k.value.imag], "abs": abs(k.value)}
    _emit(json.dumps(out, indent=1), None)
    return EXIT_OK


def _experiment(args) -> int:
    try:
        with open(args.config, encoding="utf-8") as fh:
            config = ExperimentConfig.from_json(fh.read(), experiment=args.command)
    except (OSError, ConfigError) as exc:
        print(f"circulaw: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    fmt = args.format or config.format
    path = args.out if args.out is not None else (config.out_path or None)
    serialize = records_to_csv if fmt == "csv" else records_to_json
    try:
        result = run_experiment(config)
    except ConfigError as exc:
        print(f"circulaw: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ExperimentAborted as exc:
        _emit(serialize(exc.records), path)
        print(f"circulaw: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    _emit(serialize(result.records), path)
    return EXIT_OK


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "mc-solve":
            return _mc_solve(args)
        if args.command == "density":
            return _density(args)
        if args.command == "kernel":
            return _kernel(args)
        return _experiment(args)
    except ArithmeticError as exc:
        print(f"circulaw: numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
