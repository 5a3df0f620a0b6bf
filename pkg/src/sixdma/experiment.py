"""Experiment plans: config files, sweeps over seeds and one axis, result tables.

Config files are INI with three optional sections::

    [scenario]   m, k, l, fc_ghz, lambda_m, region_side_lambda, rician_factor,
                 noise_dbm, power_dbm, weights, hotspot_fraction, hotspot_radius,
                 ap_radius, ap_height, ut_height
    [solver]     eps1, eps2, eps3, max_outer, max_position_iters,
                 max_orientation_iters, mode, offline_samples, es_positions,
                 es_orientations, es_max_sweeps, prv_error, fd_step
    [plan]       axis, values, schemes, seeds, output, format, jobs, fair_ap_count

The wavelength is ``lambda_m`` if given, else derived from ``fc_ghz``, else
0.125 m.
"""
from __future__ import annotations

import configparser
import csv
import io as _io
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import io
from .scene import ConfigError, ScenarioConfig, generate_scenario, sample_link_paths
from .solver import SCHEMES, SolverConfig, run_scheme

SPEED_OF_LIGHT = 299_792_458.0
AXES = ("num_uts", "num_aps", "tx_power_dbm", "prv_error_var", "mode")
BASE_COLUMNS = ("scheme", "axis_name", "axis_value", "seed", "wsr_bps_hz", "outer_iters",
                "wall_ms")
OUTPUT_ENV = "SIXDMA_OUTPUT_DIR"

_SCENARIO_KEYS = {
    "m": ("num_aps", int), "k": ("num_uts", int), "l": ("paths_per_link", int),
    "region_side_lambda": ("region_side", float), "rician_factor": ("rician_factor", float),
    "noise_dbm": ("noise_dbm", float), "power_dbm": ("power_dbm", float),
    "hotspot_fraction": ("hotspot_fraction", float), "hotspot_radius": ("hotspot_radius", float),
    "ap_radius": ("ap_radius", float), "ap_height": ("ap_height", float),
    "ut_height": ("ut_height", float),
}
_SOLVER_KEYS = {
    "eps1": float, "eps2": float, "eps3": float, "max_outer": int,
    "max_position_iters": int, "max_orientation_iters": int, "mode": str,
    "offline_samples": int, "es_positions": int, "es_orientations": int,
    "es_max_sweeps": int, "prv_error": float, "fd_step": float,
}


def _split(text):
    return [t.strip() for t in str(text).replace(";", ",").split(",") if t.strip()]


def parse_seeds(text):
    """'0-4' -> [0..4]; '1, 3, 5' -> [1, 3, 5]; ranges and items may mix."""
    out = []
    for tok in _split(text):
        if "-" in tok[1:]:
            lo, hi = tok.split("-", 1) if not tok.startswith("-") else (tok, tok)
            lo, hi = int(lo), int(hi)
            if hi < lo:
                raise ConfigError(f"empty seed range {tok!r}")
            out.extend(range(lo, hi + 1))
        else:
            out.append(int(tok))
    return out


def scenario_config(values: dict, base: ScenarioConfig | None = None) -> ScenarioConfig:
    """Build a ScenarioConfig from config-file keys (unknown keys are rejected)."""
    base = ScenarioConfig() if base is None else base
    changes = {}
    for key, raw in values.items():
        if key in _SCENARIO_KEYS:
            name, conv = _SCENARIO_KEYS[key]
            changes[name] = conv(raw)
        elif key == "weights":
            changes["weights"] = tuple(float(x) for x in _split(raw))
        elif key not in ("fc_ghz", "lambda_m"):
            raise ConfigError(f"unknown scenario key {key!r}")
    if "lambda_m" in values:
        changes["wavelength"] = float(values["lambda_m"])
    elif "fc_ghz" in values:
        changes["wavelength"] = SPEED_OF_LIGHT / (float(values["fc_ghz"]) * 1e9)
    try:
        return base.replace(**changes)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def solver_config(values: dict, base: SolverConfig | None = None) -> SolverConfig:
    base = SolverConfig() if base is None else base
    changes = {}
    for key, raw in values.items():
        if key not in _SOLVER_KEYS:
            raise ConfigError(f"unknown solver key {key!r}")
        changes[key] = _SOLVER_KEYS[key](raw)
    return base.replace(**changes)


@dataclass(frozen=True)
class ExperimentPlan:
    scenario: ScenarioConfig = ScenarioConfig()
    solver: SolverConfig = SolverConfig()
    axis: str = "num_uts"
    values: tuple = (6,)
    schemes: tuple = ("fa", "6dma")
    seeds: tuple = tuple(range(100))
    output: str = "results.csv"
    format: str = "csv"
    jobs: int = 1
    fair_ap_count: bool = True    # uni-pol runs use twice the APs on the mode axis

    def __post_init__(self):
        if self.axis not in AXES:
            raise ConfigError(f"unknown sweep axis {self.axis!r}; expected one of {AXES}")
        if not self.values or not self.schemes or not self.seeds:
            raise ConfigError("plan needs non-empty values, schemes and seeds")
        for s in self.schemes:
            if s not in SCHEMES:
                raise ConfigError(f"unknown scheme {s!r}")
        if self.format not in ("csv", "json"):
            raise ConfigError(f"unknown output format {self.format!r}")
        if self.jobs < 1:
            raise ConfigError("jobs must be >= 1")
        if self.axis == "mode" and any(v not in ("uni", "dual") for v in self.values):
            raise ConfigError("mode axis values must be 'uni' or 'dual'")

    def configs(self, value, seed):
        """(ScenarioConfig, SolverConfig) for one axis value and seed."""
        sc, so = self.scenario.replace(seed=int(seed)), self.solver
        if self.axis == "num_uts":
            sc = sc.replace(num_uts=int(value))
        elif self.axis == "num_aps":
            sc = sc.replace(num_aps=int(value))
        elif self.axis == "tx_power_dbm":
            sc = sc.replace(power_dbm=float(value))
        elif self.axis == "prv_error_var":
            so = so.replace(prv_error=float(value))
        else:
            so = so.replace(mode=value)
            if value == "uni" and self.fair_ap_count:
                sc = sc.replace(num_aps=2 * sc.num_aps)
        return sc, so


def _convert_axis_value(axis, raw):
    if axis in ("num_uts", "num_aps"):
        return int(raw)
    if axis == "mode":
        return str(raw)
    return float(raw)


def load_plan(path, overrides: dict | None = None) -> ExperimentPlan:
    """Read an INI plan; ``overrides`` maps 'section.key' to a string value."""
    parser = configparser.ConfigParser()
    with open(path, encoding="utf-8") as fh:
        parser.read_file(fh)
    return plan_from_sections({s: dict(parser[s]) for s in parser.sections()}, overrides)


def plan_from_sections(sections: dict, overrides: dict | None = None) -> ExperimentPlan:
    sections = {k: dict(v) for k, v in sections.items()}
    for dotted, value in (overrides or {}).items():
        sec, key = dotted.split(".", 1)
        sections.setdefault(sec, {})[key] = value
    unknown = set(sections) - {"scenario", "solver", "plan"}
    if unknown:
        raise ConfigError(f"unknown config sections {sorted(unknown)}")
    sc = scenario_config(sections.get("scenario", {}))
    so = solver_config(sections.get("solver", {}))
    p = sections.get("plan", {})
    known = {"axis", "values", "schemes", "seeds", "output", "format", "jobs", "fair_ap_count"}
    if set(p) - known:
        raise ConfigError(f"unknown plan keys {sorted(set(p) - known)}")
    axis = p.get("axis", "num_uts")
    kw = {"scenario": sc, "solver": so, "axis": axis}
    if "values" in p:
        kw["values"] = tuple(_convert_axis_value(axis, v) for v in _split(p["values"]))
    elif axis == "num_uts":
        kw["values"] = (sc.num_uts,)
    elif axis == "num_aps":
        kw["values"] = (sc.num_aps,)
    elif axis == "tx_power_dbm":
        kw["values"] = (sc.power_dbm,)
    elif axis == "prv_error_var":
        kw["values"] = (so.prv_error,)
    else:
        kw["values"] = (so.mode,)
    if "schemes" in p:
        kw["schemes"] = tuple(_split(p["schemes"]))
    if "seeds" in p:
        kw["seeds"] = tuple(parse_seeds(p["seeds"]))
    for key in ("output", "format"):
        if key in p:
            kw[key] = p[key]
    if "jobs" in p:
        kw["jobs"] = int(p["jobs"])
    if "fair_ap_count" in p:
        kw["fair_ap_count"] = p["fair_ap_count"].strip().lower() in ("1", "true", "yes", "on")
    return ExperimentPlan(**kw)


@dataclass
class Results:
    axis_name: str
    rows: list = field(default_factory=list)       # dicts, raw rows then aggregate rows
    failures: list = field(default_factory=list)

    @property
    def num_rate_columns(self):
        return max((len(r["rates"]) for r in self.rows), default=1) or 1

    def raw_rows(self):
        return [r for r in self.rows if r["seed"] not in ("mean", "stderr")]


def run_single(plan: ExperimentPlan, value, scheme, seed):
    """One (axis value, scheme, seed) run; returns a raw row dict."""
    sc, so = plan.configs(value, seed)
    scenario = generate_scenario(sc)
    paths = sample_link_paths(scenario, np.random.default_rng([int(seed), 1]))
    res = run_scheme(scheme, scenario, paths, so, seed=int(seed))
    return {"scheme": scheme, "axis_name": plan.axis, "axis_value": value, "seed": int(seed),
            "wsr_bps_hz": float(res.wsr), "outer_iters": int(res.outer_iters),
            "wall_ms": float(res.wall_ms), "rates": [float(x) for x in res.rates]}


def _guarded(args):
    plan, value, scheme, seed = args
    try:
        return run_single(plan, value, scheme, seed), None
    except Exception as exc:                  # recorded, the plan continues
        return None, f"{type(exc).__name__}: {exc}"


def _aggregate(rows, axis, value, scheme):
    ok = [r for r in rows if r["wsr_bps_hz"] is not None]
    if not ok:
        return []
    n = len(ok)
    width = max(len(r["rates"]) for r in ok)

    def stats(vals):
        vals = np.asarray(vals, dtype=float)
        mean = float(np.mean(vals))
        se = float(np.std(vals, ddof=1) / math.sqrt(n)) if n > 1 else 0.0
        return mean, se

    cols = {k: stats([r[k] for r in ok]) for k in ("wsr_bps_hz", "outer_iters", "wall_ms")}
    rate_stats = [stats([r["rates"][i] for r in ok if i < len(r["rates"])]) for i in range(width)]
    out = []
    for idx, flag in enumerate(("mean", "stderr")):
        row = {"scheme": scheme, "axis_name": axis, "axis_value": value, "seed": flag}
        row.update({k: v[idx] for k, v in cols.items()})
        row["rates"] = [s[idx] for s in rate_stats]
        out.append(row)
    return out


def run_plan(plan: ExperimentPlan, progress=None) -> Results:
    """Run every (axis value, scheme, seed) combination in deterministic order.

    Each (value, scheme) block of raw rows is followed by its mean and
    standard-error rows (``seed`` column 'mean' / 'stderr'). Failed runs keep
    a row with empty metrics and an entry in ``failures``.
    """
    jobs = [(plan, v, s, seed) for v in plan.values for s in plan.schemes for seed in plan.seeds]
    if plan.jobs > 1:
        with ProcessPoolExecutor(max_workers=plan.jobs) as pool:
            outcomes = list(pool.map(_guarded, jobs))
    else:
        outcomes = []
        for job in jobs:
            outcomes.append(_guarded(job))
            if progress is not None:
                progress(job[1:], outcomes[-1])
    results = Results(plan.axis)
    i = 0
    for v in plan.values:
        for s in plan.schemes:
            block = []
            for seed in plan.seeds:
                row, err = outcomes[i]
                i += 1
                if err is not None:
                    results.failures.append({"scheme": s, "axis_value": v, "seed": int(seed),
                                             "error": err})
                    row = {"scheme": s, "axis_name": plan.axis, "axis_value": v,
                           "seed": int(seed), "wsr_bps_hz": None, "outer_iters": None,
                           "wall_ms": None, "rates": []}
                block.append(row)
            results.rows.extend(block)
            results.rows.extend(_aggregate(block, plan.axis, v, s))
    return results


def columns(results: Results):
    return list(BASE_COLUMNS) + [f"rate_ut{i + 1}" for i in range(results.num_rate_columns)]


def _flat(row, width):
    out = [row[c] for c in BASE_COLUMNS]
    rates = list(row["rates"]) + [None] * (width - len(row["rates"]))
    return out + rates


def to_json_dict(results: Results):
    width = results.num_rate_columns
    return {"columns": columns(results),
            "rows": [_flat(r, width) for r in results.rows],
            "failures": list(results.failures)}


def from_json_dict(data) -> Results:
    cols = data["columns"]
    nbase = len(BASE_COLUMNS)
    if tuple(cols[:nbase]) != BASE_COLUMNS:
        raise ValueError("unexpected column layout")
    res = Results(data["rows"][0][1] if data["rows"] else "", failures=list(data["failures"]))
    for flat in data["rows"]:
        row = dict(zip(BASE_COLUMNS, flat[:nbase]))
        rates = flat[nbase:]
        while rates and rates[-1] is None:
            rates = rates[:-1]
        row["rates"] = list(rates)
        res.rows.append(row)
    return res


def _csv_cell(x):
    if x is None:
        return ""
    if isinstance(x, float):
        return repr(x)
    return str(x)


def to_csv_text(results: Results):
    buf = _io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns(results))
    width = results.num_rate_columns
    for r in results.rows:
        writer.writerow([_csv_cell(x) for x in _flat(r, width)])
    return buf.getvalue()


def resolve_output(path):
    """Place ``path`` under $SIXDMA_OUTPUT_DIR when that variable is set."""
    path = os.fspath(path)
    root = os.environ.get(OUTPUT_ENV)
    if root:
        return os.path.join(root, os.path.basename(path))
    return path


def emit(results: Results, path, fmt="csv"):
    """Write ``results`` as CSV or JSON; returns the path written.

    CSV output gets a ``<path>.failures.json`` sidecar when any run failed.
    """
    if not results.rows:
        raise ValueError("no result rows to emit")
    path = resolve_output(path)
    parent = os.path.dirname(os.path.abspath(path))
    os.makedirs(parent, exist_ok=True)
    if fmt == "json":
        text = io.dumps(to_json_dict(results))
    elif fmt == "csv":
        text = to_csv_text(results)
    else:
        raise ValueError(f"unknown format {fmt!r}")
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    if fmt == "csv" and results.failures:
        with open(path + ".failures.json", "w", encoding="utf-8") as fh:
            fh.write(io.dumps(results.failures))
    return path
