"""Command line driver: ``pathrelax {run,eps-study,grid-study,coupling-study,check}``."""

import argparse
import csv
import dataclasses
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import experiments as ex
from .errors import CFLViolation, GridMismatch, InvalidParam, NoConvergence, NonAdmissibleState

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_IO = 0, 1, 2, 3

log = logging.getLogger("pathrelax")

CSV_HELP = """\
output files (all CSVs have a header row, floats with 17 significant digits):
  run             <out>/run_<preset>.csv
                    SWE presets:   x, h1, q1, h2, q2
                    blood-coupled: x, a, u, Q, p  (left vessel rows first, interface at x=0)
                    custom blood:  x, a, u
  eps-study       <out>/eps_study.csv       epsilon, E_rel_h1, eoc_E_rel_h1, E_rel_h2, eoc_E_rel_h2
  grid-study      <out>/grid_study.csv      n_cells, E_N_h1, eoc_E_N_h1, E_N_h2, eoc_E_N_h2
  coupling-study  <out>/coupling_study.csv  n_cells, E_psi_1, eoc_E_psi_1, E_psi_2, eoc_E_psi_2
  check           <out>/check.csv           name, value, tolerance, passed
every CSV has a <name>.meta.json sidecar with the full configuration, dx, dt
and the reference convention; PNG figures are written alongside unless
--no-figures is given.  EOC cells are empty on the first row.

config file: flat 'key = value' lines, '#' starts a comment; keys are the
RunConfig fields (preset, scheme, n_cells, cfl, mu, mu_left, mu_right,
epsilon, t_end, alpha, x_left, x_right, model, state_left, state_right,
x_jump, flux_jacobian_diagonal, out, debug).  States are comma lists.
Command-line flags override the file.

exit codes: 0 ok, 1 config error, 2 numerical failure, 3 I/O error
"""


class ConfigError(Exception):
    pass


# -- config ---------------------------------------------------------------

_FIELDS = {f.name: f for f in dataclasses.fields(ex.RunConfig)}
_INT_KEYS = {"n_cells"}
_BOOL_KEYS = {"flux_jacobian_diagonal", "debug"}
_STR_KEYS = {"preset", "scheme", "model", "out"}
_STATE_KEYS = {"state_left", "state_right"}


def _convert(key, raw):
    raw = raw.strip()
    try:
        if key in _INT_KEYS:
            return int(raw)
        if key in _BOOL_KEYS:
            low = raw.lower()
            if low not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError(raw)
            return low in ("true", "1", "yes")
        if key in _STR_KEYS:
            return raw
        if key in _STATE_KEYS:
            return tuple(float(v) for v in raw.split(","))
        return float(raw)
    except ValueError:
        raise ConfigError(f"bad value for {key}: {raw!r}") from None


def parse_config_text(text):
    """Parse flat ``key = value`` lines into a dict of typed RunConfig fields."""
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, raw = line.split("=", 1)
        key = key.strip().replace("-", "_")
        if key not in _FIELDS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        values[key] = _convert(key, raw)
    return values


def load_config(path):
    try:
        text = Path(path).read_text()
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    return parse_config_text(text)


def build_config(args, defaults=None):
    values = dict(defaults or {})
    if args.config:
        values.update(load_config(args.config))
    overrides = {
        "preset": args.preset, "n_cells": args.n_cells, "cfl": args.cfl, "epsilon": args.epsilon,
        "t_end": args.t_end, "alpha": args.alpha, "out": args.out, "scheme": args.scheme,
    }
    values.update({k: v for k, v in overrides.items() if v is not None})
    if args.debug:
        values["debug"] = True
    return ex.RunConfig(**values)


# -- output ---------------------------------------------------------------


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}"
    return str(v)


def write_csv(path, columns, rows, meta):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])
    meta_path = path.with_suffix(".meta.json")
    meta_path.write_text(json.dumps(meta, indent=2, default=_json_default) + "\n")
    return path


def _json_default(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, tuple):
        return list(obj)
    return str(obj)


def _figure(fn, obj, path, enabled):
    if not enabled:
        return None
    fn(obj, path)
    return path


# -- subcommands ----------------------------------------------------------


def cmd_run(args):
    from .plotting import plot_run

    cfg = build_config(args)
    result = ex.simulate(cfg)
    out = Path(result.config.out)
    path = write_csv(out / f"run_{result.config.preset}.csv", result.columns, result.table.tolist(),
                     result.metadata())
    _figure(plot_run, result, path.with_suffix(".png"), args.figures)
    print(f"wrote {path} ({len(result.table)} rows, {result.steps} steps, dt={result.dt:.6g})")
    if "coupling_error" in result.extras:
        e = result.extras["coupling_error"]
        print("coupling error: " + ", ".join(f"{v:.3e}" for v in e))
    return EXIT_OK


def _report_out(report, name, cfg, figures):
    from .plotting import plot_report

    meta = dict(report.meta)
    meta["config"] = cfg.to_dict()
    path = write_csv(Path(cfg.out) / f"{name}.csv", report.columns, report.rows(), meta)
    _figure(plot_report, report, path.with_suffix(".png"), figures)
    print(report)
    print(f"wrote {path}")
    return EXIT_OK


def _int_list(text):
    try:
        return [int(v) for v in text.split(",")]
    except ValueError:
        raise ConfigError(f"expected a comma list of integers, got {text!r}") from None


def cmd_eps_study(args):
    cfg = build_config(args, {"preset": "swe-smooth", "n_cells": 1000, "cfl": 0.1, "t_end": 0.33})
    report = ex.eps_study(cfg.n_cells, _int_list(args.exponents), cfg.cfl, cfg.t_end)
    return _report_out(report, "eps_study", cfg, args.figures)


def cmd_grid_study(args):
    cfg = build_config(args, {"preset": "swe-smooth", "cfl": 0.1, "t_end": 0.33})
    report = ex.grid_study(_int_list(args.levels), args.n_ref, cfg.cfl, cfg.t_end)
    return _report_out(report, "grid_study", cfg, args.figures)


def cmd_coupling_study(args):
    cfg = build_config(args, {"preset": "blood-coupled", "cfl": 0.02, "t_end": 12.0})
    half = args.half_length if args.half_length is not None else ex.BLOOD_HALF_LENGTH
    if not half > 0:
        raise InvalidParam("half-length must be positive")
    report = ex.coupling_study(_int_list(args.levels), cfg.alpha, cfg.cfl, cfg.t_end, half,
                               cfg.mu if cfg.mu is not None else 0.16)
    return _report_out(report, "coupling_study", cfg, args.figures)


def cmd_check(args):
    from .checks import run_checks, scan_interface

    cfg = build_config(args)
    results = run_checks(cfg)
    for r in results:
        print(r)
    rows = [[r.name, r.value, r.tolerance, r.passed] for r in results]
    write_csv(Path(cfg.resolved().out) / "check.csv", ["name", "value", "tolerance", "passed"], rows,
              {"config": cfg.to_dict()})
    if args.scan:
        roots, norms = scan_interface(cfg)
        print(f"interface root scan: {len(roots)} distinct root(s)")
        for p, nrm in zip(roots, norms):
            print("  sigma=" + ", ".join(f"{v:+.6e}" for v in p) + f"  |R|={nrm:.1e}")
    return EXIT_OK if all(r.passed for r in results) else EXIT_NUMERICAL


# -- entry point ----------------------------------------------------------


def build_parser():
    parser = argparse.ArgumentParser(
        prog="pathrelax",
        description="Relaxation schemes for nonconservative hyperbolic systems and their coupling.",
        epilog=CSV_HELP,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="flat key = value config file")
        p.add_argument("--preset", choices=ex.PRESETS)
        p.add_argument("--scheme", help="relaxed | relaxation(eps) | coupled-relaxed")
        p.add_argument("--n-cells", type=int)
        p.add_argument("--cfl", type=float)
        p.add_argument("--epsilon", type=float)
        p.add_argument("--t-end", type=float)
        p.add_argument("--alpha", type=float)
        p.add_argument("--out", help="output directory (default: out)")
        p.add_argument("--no-figures", dest="figures", action="store_false", help="skip PNG figures")
        p.add_argument("--debug", action="store_true", help="assert invariants every step")
        return p

    kw = dict(epilog=CSV_HELP, formatter_class=argparse.RawDescriptionHelpFormatter)
    common(sub.add_parser("run", help="run one preset", **kw)).set_defaults(func=cmd_run)
    p = common(sub.add_parser("eps-study", help="relaxation-rate convergence (SWE)", **kw))
    p.add_argument("--exponents", default="7,8,9,10", help="epsilon = 2^-k for these k")
    p.set_defaults(func=cmd_eps_study)
    p = common(sub.add_parser("grid-study", help="mesh convergence of the relaxed scheme (SWE)", **kw))
    p.add_argument("--levels", default="250,500,1000,2000")
    p.add_argument("--n-ref", type=int, default=4000)
    p.set_defaults(func=cmd_grid_study)
    p = common(sub.add_parser("coupling-study", help="coupling-error convergence (blood)", **kw))
    p.add_argument("--levels", default="250,500,1000")
    p.add_argument("--half-length", type=float, help=f"vessel length (default {ex.BLOOD_HALF_LENGTH})")
    p.set_defaults(func=cmd_coupling_study)
    p = common(sub.add_parser("check", help="invariant suite", **kw))
    p.add_argument("--scan", action="store_true", help="brute-force scan for interface roots")
    p.set_defaults(func=cmd_check)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors; usage errors are config errors here
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, InvalidParam, GridMismatch) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NonAdmissibleState, NoConvergence, CFLViolation, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
