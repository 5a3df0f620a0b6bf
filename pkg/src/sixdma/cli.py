"""Command-line entry point.

Subcommands::

    sixdma run PLAN.ini [--format csv|json] [--output PATH] [--set section.key=value ...]
    sixdma solve [--config FILE] [--scheme NAME] [--seed N] [--mode uni|dual] [...]
    sixdma trace [--config FILE] [--seed N] [--mode uni|dual] [--output PATH]

Errors print a single JSON object ``{"error": ..., "message": ...}`` on stderr
and exit with status 2 (bad input) or 1 (runtime failure).
"""
from __future__ import annotations

import argparse
import configparser
import logging
import os
import sys

import numpy as np

from . import io
from .experiment import (emit, load_plan, plan_from_sections, resolve_output, run_plan)
from .scene import ConfigError, generate_scenario, sample_link_paths
from .solver import SCHEMES, run_scheme

log = logging.getLogger("sixdma")

# flag name -> (section, key)
_FLAG_KEYS = {
    "m": ("scenario", "m"), "k": ("scenario", "k"), "l": ("scenario", "l"),
    "power_dbm": ("scenario", "power_dbm"), "noise_dbm": ("scenario", "noise_dbm"),
    "mode": ("solver", "mode"), "max_outer": ("solver", "max_outer"),
    "prv_error": ("solver", "prv_error"),
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def _read_sections(path):
    if path is None:
        return {}
    parser = configparser.ConfigParser()
    with open(path, encoding="utf-8") as fh:
        parser.read_file(fh)
    return {s: dict(parser[s]) for s in parser.sections()}


def _overrides(args):
    out = {}
    for item in getattr(args, "set", None) or []:
        if "=" not in item or "." not in item.split("=", 1)[0]:
            raise ConfigError(f"--set expects section.key=value, got {item!r}")
        key, value = item.split("=", 1)
        out[key.strip()] = value.strip()
    for flag, (sec, key) in _FLAG_KEYS.items():
        value = getattr(args, flag, None)
        if value is not None:
            out[f"{sec}.{key}"] = str(value)
    return out


def _single_run_inputs(args):
    sections = _read_sections(args.config)
    sections.pop("plan", None)
    plan = plan_from_sections(sections, _overrides(args))
    seed = args.seed
    sc = plan.scenario.replace(seed=seed)
    scenario = generate_scenario(sc)
    paths = sample_link_paths(scenario, np.random.default_rng([seed, 1]))
    return plan, scenario, paths


def _write_text(text, output):
    if output is None:
        sys.stdout.write(text)
        return None
    path = resolve_output(output)
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)
    return path


def cmd_run(args):
    plan = load_plan(args.plan, _overrides(args))
    fmt = args.format or plan.format
    results = run_plan(plan, progress=lambda job, out: log.info(
        "%s=%s %s seed %s: %s", plan.axis, job[0], job[1], job[2],
        "failed" if out[1] else f"{out[0]['wsr_bps_hz']:.4f} bps/Hz"))
    path = emit(results, args.output or plan.output, fmt)
    sys.stdout.write(io.dumps({"output": path, "rows": len(results.rows),
                               "failures": len(results.failures)}))
    return 0


def cmd_solve(args):
    plan, scenario, paths = _single_run_inputs(args)
    res = run_scheme(args.scheme, scenario, paths, plan.solver, seed=args.seed)
    out = {"scheme": res.scheme, "seed": args.seed, "mode": plan.solver.mode,
           "wsr_bps_hz": float(res.wsr), "rates": [float(r) for r in res.rates],
           "outer_iters": int(res.outer_iters), "wall_ms": float(res.wall_ms),
           "poses": [io.pose_to_dict(p) for p in res.poses]}
    _write_text(io.dumps(out), args.output)
    return 0


def cmd_trace(args):
    plan, scenario, paths = _single_run_inputs(args)
    res = run_scheme(args.scheme, scenario, paths, plan.solver, seed=args.seed)
    if res.trace is None:
        raise ConfigError(f"scheme {args.scheme!r} produces no solve trace")
    doc = {"scheme": args.scheme, "seed": args.seed,
           "scenario": io.scenario_to_dict(scenario), "paths": io.paths_to_dict(paths),
           "trace": res.trace.to_dict()}
    _write_text(io.dumps(doc), args.output)
    return 0


def build_parser():
    p = _Parser(prog="sixdma", description="6D movable-antenna multi-AP uplink experiments")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = sub.add_parser("run", help="run an experiment plan file")
    run.add_argument("plan")
    run.add_argument("--format", choices=("csv", "json"))
    run.add_argument("--output")

    def single(name, help_text, default_scheme):
        sp = sub.add_parser(name, help=help_text)
        sp.add_argument("--config")
        sp.add_argument("--scheme", default=default_scheme, choices=SCHEMES)
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--mode", choices=("uni", "dual"))
        sp.add_argument("--m", type=int)
        sp.add_argument("--k", type=int)
        sp.add_argument("--l", type=int)
        sp.add_argument("--power-dbm", dest="power_dbm", type=float)
        sp.add_argument("--noise-dbm", dest="noise_dbm", type=float)
        sp.add_argument("--max-outer", dest="max_outer", type=int)
        sp.add_argument("--prv-error", dest="prv_error", type=float)
        sp.add_argument("--output")
        return sp

    for sp in (run, single("solve", "design one scenario and print metrics", "6dma"),
               single("trace", "dump the alternating-optimization trace", "6dma")):
        sp.add_argument("--set", action="append", metavar="SECTION.KEY=VALUE",
                        help="override a config key (repeatable)")
    return p


def main(argv=None):
    handlers = {"run": cmd_run, "solve": cmd_solve, "trace": cmd_trace}
    try:
        args = build_parser().parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(message)s")
        return handlers[args.command](args)
    except (ConfigError, configparser.Error, FileNotFoundError, ValueError) as exc:
        sys.stderr.write(io.dumps({"error": type(exc).__name__, "message": str(exc)}))
        return 2
    except Exception as exc:    # noqa: BLE001 - reported as machine-readable JSON
        sys.stderr.write(io.dumps({"error": type(exc).__name__, "message": str(exc)}))
        return 1


if __name__ == "__main__":
    sys.exit(main())
