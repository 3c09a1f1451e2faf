"""Command-line driver: ``nonvanishing <command> [options]``.

Exit codes: 0 success, 2 a hard check failed, 3 configuration error.
Records go to ``--output`` if given, else into ``$NONVANISHING_OUTPUT_DIR``
(file named after the command) if that is set, else to stdout.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
from datetime import datetime, timezone
from pathlib import Path

from .errors import ConfigError, NonvanishingError
from .experiments import COMMANDS, ExperimentConfig, run

EXIT_OK, EXIT_CHECK, EXIT_CONFIG = 0, 2, 3
OUTPUT_DIR_ENV = "NONVANISHING_OUTPUT_DIR"

# Fixed CSV column order per record type; nested fields use dotted paths.
CSV_COLUMNS = {
    "moments": ["p", "method", "S1.re", "S1.im", "S1_predicted", "S1_deviation", "S2", "S2_predicted",
                "S2_ratio", "ratio", "proportion_predicted", "empirical_proportion", "min_abs_L",
                "decomposition.cross", "decomposition.cross_predicted", "decomposition.square_long",
                "decomposition.square_long_predicted", "decomposition.square_short",
                "decomposition.square_short_predicted", "decomposition.gap", "path_gap_S1", "path_gap_S2"],
    "moments_trend": ["primes", "S1_deviation", "strictly_decreasing"],
    "optimize": ["theta", "alpha", "c1", "c2", "combined_length", "combined_length_bound", "proportion",
                 "proportion_float", "delta", "grid.combined_length", "grid.gap"],
    "kloosterman": ["p", "weil_max_ratio", "weil_bound", "symmetry_max_error", "scaling_max_error",
                    "four_product.tuples", "four_product.max_ratio_p52", "four_product.envelope",
                    "four_product.degenerate_max_ratio_p3", "four_product.degenerate_bound_p3"],
    "four_product_trend": ["primes", "max_ratio_p52", "non_increasing"],
    "bilinear": ["p", "index", "spec.M1", "spec.M2", "spec.N1", "spec.N2", "B.re", "B.im", "B_dual.re",
                 "B_dual.im", "relative_gap", "gap_bound", "k0_stratum", "envelope_poisson", "ratio_poisson",
                 "envelope_bilinear", "ratio_bilinear"],
    "nu": ["p", "sum_nu", "sum_nu_sq", "divisor_count", "products_below_p", "relation"],
    "identities": ["p", "pairs", "even_pair_max_error", "gauss_twisted_max_error", "tolerance",
                   "gauss_vs_cos_max_gap", "gauss_vs_cos_bound", "gauss_modulus_rel_error"],
    "afe-check": ["p", "family_size", "compared", "max_relative_gap", "tolerance", "min_abs_L"],
    "holder": ["p", "index", "blocks.N1", "blocks.N2", "blocks.M1", "blocks.M2", "stage_a",
               "stage_nu_weighted", "stage_b", "envelope_c", "ratio_b_over_c", "holds"],
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: config error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_CONFIG)


def _add_common(sp: argparse.ArgumentParser) -> None:
    sp.add_argument("--config", type=Path, help="JSON file of config keys; flags override it")
    sp.add_argument("--p", "--primes", dest="primes", type=int, nargs="+", help="prime(s) to run")
    sp.add_argument("--theta", type=float)
    sp.add_argument("--alpha", type=float)
    sp.add_argument("--c1", type=float)
    sp.add_argument("--c2", type=float)
    sp.add_argument("--sigma", type=float, help="contour abscissa for the Mellin kernels")
    sp.add_argument("--height", type=float, help="initial quadrature height")
    sp.add_argument("--step", type=float, help="quadrature step")
    sp.add_argument("--tail-tol", dest="tail_tol", type=float)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--threads", type=int)
    sp.add_argument("--format", choices=["json", "csv"])
    sp.add_argument("--output", "-o", help="output file")
    sp.add_argument("--verbose", "-v", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="nonvanishing", description="Reproducible experiments on mollified L-function moments.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    helps = {
        "moments": "mollified first and second moments per prime",
        "optimize": "exact maximization of the combined mollifier length",
        "kloosterman": "Weil bound sweep and four-product ratio table",
        "bilinear": "bilinear form vs its Poisson dual and analytic envelopes",
        "nu": "representation counts and the divisor-equation check",
        "identities": "exact orthogonality and Gauss-sum checks",
        "afe-check": "cross-formula central value validation",
        "holder": "stages of the Hoelder chain on sampled windows",
    }
    for name in COMMANDS:
        sp = sub.add_parser(name, help=helps[name])
        _add_common(sp)
        if name == "optimize":
            sp.add_argument("--delta", dest="opt_delta", help="slack, rational string such as 1/16")
            sp.add_argument("--alpha-zero", dest="alpha_zero", action="store_true", default=None)
        if name in ("bilinear", "holder"):
            sp.add_argument("--delta", dest="delta", type=float, help="epsilon stand-in for range conditions")
            sp.add_argument("--count", type=int)
        if name == "moments":
            sp.add_argument("--naive-max-p", dest="naive_max_p", type=int)
        if name == "kloosterman":
            sp.add_argument("--m-max", dest="m_max", type=int)
        if name == "identities":
            sp.add_argument("--pairs", type=int)
        if name == "nu":
            sp.add_argument("--n-window", dest="n_window", type=int, nargs=2)
            sp.add_argument("--k-window", dest="k_window", type=int, nargs=2)
            sp.add_argument("--m1-window", dest="m1_window", type=int, nargs=2)
    return parser


def resolve_config(args: argparse.Namespace) -> ExperimentConfig:
    data: dict = {}
    if args.config is not None:
        try:
            data = json.loads(args.config.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError("config", str(exc)) from None
        if not isinstance(data, dict):
            raise ConfigError("config", "top level must be an object")
        if data.get("command", args.command) != args.command:
            raise ConfigError("command", f"file says {data['command']!r}, command line says {args.command!r}")
    data["command"] = args.command
    skip = {"config", "verbose", "command"}
    for key, value in vars(args).items():
        if key not in skip and value is not None:
            data[key] = value
    try:
        return ExperimentConfig.from_dict(data)
    except TypeError as exc:
        raise ConfigError("config", str(exc)) from None


def _clean(obj):
    """Make a record strict-JSON safe: non-finite floats become strings."""
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    if hasattr(obj, "item") and not isinstance(obj, (str, bytes)):
        return _clean(obj.item())
    return obj


def _lookup(rec: dict, path: str):
    cur = rec
    for part in path.split("."):
        if not isinstance(cur, dict) or part not in cur:
            return ""
        cur = cur[part]
    if isinstance(cur, list):
        return " ".join(str(v) for v in cur)
    return "" if cur is None else cur


def render(records: list[dict], fmt: str) -> str:
    if fmt == "json":
        return "".join(json.dumps(r, sort_keys=True) + "\n" for r in records)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    current = None
    for rec in records:
        kind = rec["record"]
        cols = CSV_COLUMNS[kind]
        if kind != current:
            writer.writerow(["record", *cols])
            current = kind
        writer.writerow([kind, *(_lookup(rec, c) for c in cols)])
    return buf.getvalue()


def _destination(cfg: ExperimentConfig) -> Path | None:
    if cfg.output:
        return Path(cfg.output)
    outdir = os.environ.get(OUTPUT_DIR_ENV)
    if outdir:
        ext = "jsonl" if cfg.format == "json" else "csv"
        return Path(outdir) / f"{cfg.command}.{ext}"
    return None


def execute(cfg: ExperimentConfig, stream=None, timestamp: str | None = None) -> int:
    records, ok = run(cfg)
    stamp = timestamp or datetime.now(timezone.utc).isoformat()
    resolved = cfg.to_dict()
    records = [_clean({**r, "config": resolved, "timestamp": stamp}) for r in records]
    text = render(records, cfg.format)
    dest = _destination(cfg)
    if dest is None:
        (stream or sys.stdout).write(text)
    else:
        dest.parent.mkdir(parents=True, exist_ok=True)
        dest.write_text(text)
    return EXIT_OK if ok else EXIT_CHECK


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = resolve_config(args)
        return execute(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NonvanishingError as exc:
        # invalid inputs such as a composite p are configuration problems
        print(f"config error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except AssertionError as exc:
        print(f"check failed: {exc}", file=sys.stderr)
        return EXIT_CHECK


if __name__ == "__main__":
    sys.exit(main())
