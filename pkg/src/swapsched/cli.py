"""Command-line interface: ``swapsched {estimate,metrics,optimize,baseline,compare,replay}``.

Every command writes ``manifest.json`` next to its outputs. The manifest holds
the fully resolved parameters and input digests; ``swapsched replay`` re-runs
it and reproduces the outputs byte for byte. Wall-clock timings vary between
runs, so they go to ``timing.json`` and stdout, never into the reproducible
files.

Defaults for any option can be supplied in a JSON file named by ``--config``
or the ``SWAPSCHED_CONFIG`` environment variable (keys are option names with
underscores, e.g. ``{"m_a": 6, "seed": 7}``).

Exit codes: 0 success, 1 usage, 2 data validation, 3 internal error.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import logging
import os
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor
from importlib.metadata import PackageNotFoundError, version

import numpy as np

from . import ga as ga_mod
from ._validation import DataValidationError
from .demand import DemandProfile, ModelParams, estimate_demand_series, split_by_type
from .ingest import PriceSeries, load_prices, parse_sessions
from .metrics import evaluate_dataset
from .station import StationConfig, immediate_plan, plan_record
from .synthetic import BENCHMARK_REGION_SEEDS, make_region

logger = logging.getLogger("swapsched")

EXIT_USAGE, EXIT_DATA, EXIT_INTERNAL = 1, 2, 3
CONFIG_ENV = "SWAPSCHED_CONFIG"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def tool_version():
    try:
        return version("artifact")
    except PackageNotFoundError:
        return "0+unknown"


# -- small parsers for list-valued options ---------------------------------

def _floats(text):
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _ints(text):
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _strings(text):
    return [x.strip() for x in text.split(",") if x.strip()]


def _schema(text):
    out = {}
    for part in _strings(text):
        key, sep, col = part.partition("=")
        if not sep:
            raise argparse.ArgumentTypeError(f"schema entries look like key=column, got {part!r}")
        out[key.strip()] = col.strip()
    return out


# -- file helpers -----------------------------------------------------------

def sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 16), b""):
            h.update(block)
    return h.hexdigest()


def _json_text(obj):
    return json.dumps(obj, indent=2, sort_keys=False, allow_nan=False) + "\n"


def _csv_text(header, rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def _fmt(x):
    return repr(float(x))


def write_outputs(out_dir, files):
    """Write all files or none: each goes to a temp file first, then is renamed."""
    os.makedirs(out_dir, exist_ok=True)
    staged = []
    try:
        for name, text in files.items():
            fd, tmp = tempfile.mkstemp(dir=out_dir, prefix=f".{name}.")
            with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
            staged.append((tmp, os.path.join(out_dir, name)))
    except BaseException:
        for tmp, _ in staged:
            os.unlink(tmp)
        raise
    for tmp, final in staged:
        os.replace(tmp, final)
    return [final for _, final in staged]


def manifest(command, params, inputs):
    return {
        "command": command,
        "version": tool_version(),
        "params": params,
        "inputs": {os.path.abspath(p): sha256(p) for p in inputs if p},
    }


def read_demand_csv(path, start=0, horizon=24, prices=None):
    """Load a ``demand.csv`` window as a DemandProfile."""
    if not os.path.isfile(path):
        raise FileNotFoundError(f"demand file not found: {path}")
    cols = {"expected": [], "demand_a": [], "demand_b": [], "price": []}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        missing = set(cols) - set(reader.fieldnames or [])
        if missing:
            raise DataValidationError(f"{path}: missing columns {sorted(missing)}")
        for row in reader:
            try:
                for k in cols:
                    cols[k].append(float(row[k]))
            except (TypeError, ValueError):
                raise DataValidationError(f"{path} line {reader.line_num}: bad number") from None
    n = len(cols["expected"])
    if start < 0 or start + horizon > n:
        raise DataValidationError(f"{path}: has {n} hours, window {start}+{horizon} requested")
    window = slice(start, start + horizon)
    price = (np.array(cols["price"][window]) if prices is None
             else prices.window(start, horizon))
    return DemandProfile(np.array(cols["demand_a"][window]),
                         np.array(cols["demand_b"][window]), price)


def read_demand_column(path, column):
    if not os.path.isfile(path):
        raise FileNotFoundError(f"demand file not found: {path}")
    values = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if column not in (reader.fieldnames or []):
            raise DataValidationError(f"{path}: no column {column!r}")
        for row in reader:
            try:
                values.append(float(row[column]))
            except (TypeError, ValueError):
                raise DataValidationError(f"{path} line {reader.line_num}: bad number") from None
    return np.array(values)


def _station(p):
    return StationConfig(p["m_a"], p["m_b"], p["tau_s"], p["tau_1"], p["satisfaction_term"])


def _ga(p, strategy=None, seed=None):
    return ga_mod.GaConfig(
        population_size=p["population_size"],
        crossover_prob=p["crossover_prob"],
        mutation_rate=p["mutation_rate"],
        max_iterations=p["max_iterations"],
        tournament_size=p["tournament_size"],
        elitism_count=p["elitism_count"],
        seed=p["seed"] if seed is None else seed,
        strategy=p.get("strategy", "lru") if strategy is None else strategy,
    )


def _prices(p):
    if not p.get("prices"):
        return None
    return load_prices(p["prices"], daily=not p.get("prices_horizon", False))


# -- commands -----------------------------------------------------------------

def cmd_estimate(p):
    sessions = parse_sessions(
        p["sessions"], p["schema"], time_format=p["time_format"], region=p["region"],
        max_reject_fraction=p["max_reject"],
    )
    if not sessions:
        raise DataValidationError(f"{p['sessions']}: no sessions left after filtering")
    series = estimate_demand_series(
        sessions, ModelParams(tuple(p["theta"]), p["swap_time"]), p["lambda_smoothing"]
    )
    prices = _prices(p) or PriceSeries.flat()
    n = len(series)
    # Daily tariffs are indexed by clock hour, so shift by the origin's hour.
    offset = series.origin.hour if prices.daily else 0
    price = prices.window(offset, n)
    d_a, d_b = split_by_type(series.rounded, p["ratio_a"])
    rows = [[h, _fmt(series.expected[h]), int(d_a[h]), int(d_b[h]), _fmt(price[h])]
            for h in range(n)]
    files = {
        "demand.csv": _csv_text(["hour", "expected", "demand_a", "demand_b", "price"], rows),
        "manifest.json": _json_text(manifest(
            "estimate", {**p, "origin": series.origin.isoformat()}, [p["sessions"], p.get("prices")]
        )),
    }
    summary = (f"{len(sessions)} sessions -> {n} hours from {series.origin.isoformat()}, "
               f"total expected swaps {series.expected.sum():.2f}")
    return files, summary, None


def cmd_metrics(p):
    series = read_demand_column(p["demand"], p["column"])
    report = evaluate_dataset(series, p["window"], p["periods"], p["top_k"])
    record = report.to_dict()
    files = {
        "metrics.json": _json_text(record),
        "manifest.json": _json_text(manifest("metrics", p, [p["demand"]])),
    }
    summary = (f"S_m = {report.s_m:.6g}\nP_m = {report.p_m:.4%}\nO_m = {report.o_m:.4%}\n"
               + json.dumps(record))
    return files, summary, None


def _load_profile(p):
    return read_demand_csv(p["demand"], p["start"], p["horizon"], _prices(p))


def cmd_optimize(p):
    profile = _load_profile(p)
    station = _station(p)
    result = ga_mod.run(profile, station, _ga(p))
    plan = plan_record(result.best_individual, profile, station)
    plan.update(strategy=p["strategy"], seed=p["seed"], f_best=result.best_fitness,
                g_f_best=result.best_generation, mean_best_fitness=result.mean_best_fitness)
    curve = [[g, _fmt(f)] for g, f in enumerate(result.best_fitness_per_generation)]
    files = {
        "plan.json": _json_text(plan),
        "convergence.csv": _csv_text(["generation", p["strategy"]], curve),
        "manifest.json": _json_text(manifest("optimize", p, [p["demand"], p.get("prices")])),
    }
    timing = {"per_iteration_seconds": result.per_iteration_seconds}
    summary = (f"C_is = {plan['c_is']:.4f}  C_ours = {plan['c_ours']:.4f}  "
               f"r_opt = {plan['r_opt']:.2%}  gamma = {plan['gamma']:.2%}  "
               f"tau = {result.per_iteration_seconds:.4f} s/iter")
    return files, summary, timing


def cmd_baseline(p):
    profile = _load_profile(p)
    station = _station(p)
    genes, cost = immediate_plan(profile, station)
    plan = plan_record(genes, profile, station)
    plan["strategy"] = "immediate"
    files = {
        "plan.json": _json_text(plan),
        "manifest.json": _json_text(manifest("baseline", p, [p["demand"], p.get("prices")])),
    }
    return files, f"immediate cost = {cost:.4f}  gamma = {plan['gamma']:.2%}", None


def _compare_task(args):
    profile, station, ga_cfg = args
    return ga_mod.run(profile, station, ga_cfg)


def cmd_compare(p):
    station = _station(p)
    regions = {}
    for path in p["demand"] or []:
        name = os.path.splitext(os.path.basename(path))[0]
        if name in regions:
            raise DataValidationError(f"duplicate region name {name!r}")
        regions[name] = read_demand_csv(path, p["start"], p["horizon"], _prices(p))
    for seed in p["synthetic_seeds"] or []:
        regions[f"synthetic-{seed}"] = make_region(seed, station.m_a, station.m_b)
    if not regions:
        raise UsageError("compare needs --demand files and/or --synthetic-seeds")
    strategies = p["strategies"]
    if len(strategies) != 2:
        raise UsageError("--strategies takes exactly two names")
    unique = list(dict.fromkeys(strategies))
    tasks = [(name, s, seed) for name in regions for s in unique for seed in p["seeds"]]
    payload = [(regions[n], station, _ga(p, s, seed)) for n, s, seed in tasks]
    if p["jobs"] > 1:
        with ProcessPoolExecutor(max_workers=p["jobs"]) as pool:
            results = list(pool.map(_compare_task, payload))
    else:
        results = [_compare_task(x) for x in payload]
    by_task = dict(zip(tasks, results))

    reports, rows = {}, []
    totals = {s: 0 for s in unique}
    totals["ties"] = 0
    timing = {}
    for name in regions:
        rep = ga_mod.ComparisonReport(tuple(strategies), tuple(p["seeds"]))
        for s in unique:
            rep.runs[s] = [by_task[(name, s, seed)] for seed in p["seeds"]]
        reports[name] = rep.to_dict()
        winner = rep.median_winner()
        totals[winner if winner else "ties"] += 1
        for k, seed in enumerate(p["seeds"]):
            curves = [rep.runs[s][k].best_fitness_per_generation for s in unique]
            for g in range(len(curves[0])):
                rows.append([name, seed, g] + [_fmt(c[g]) for c in curves])
        timing[name] = {s: rep.mean_iteration_seconds(s) for s in unique}
    n = len(regions)
    doc = {
        "regions": reports,
        "summary": {
            "n_regions": n,
            "n_seeds": len(p["seeds"]),
            "median_wins": totals,
            "win_rate": {k: v / n for k, v in totals.items()},
        },
    }
    files = {
        "comparison.json": _json_text(doc),
        "convergence.csv": _csv_text(["region", "seed", "generation"] + unique, rows),
        "manifest.json": _json_text(manifest("compare", p, list(p["demand"] or [])
                                             + [p.get("prices")])),
    }
    summary = "\n".join(
        [f"{name}: median winner {r['median_winner'] or 'tie'}" for name, r in reports.items()]
        + [f"median-f_best wins over {n} regions: {totals}"]
    )
    return files, summary, {"mean_per_iteration_seconds": timing}


COMMANDS = {
    "estimate": cmd_estimate,
    "metrics": cmd_metrics,
    "optimize": cmd_optimize,
    "baseline": cmd_baseline,
    "compare": cmd_compare,
}


def execute(command, params, out_dir):
    files, summary, timing = COMMANDS[command](params)
    if timing is not None:
        files = {**files, "timing.json": _json_text(timing)}
    written = write_outputs(out_dir, files)
    print(summary)
    for path in written:
        logger.info("wrote %s", path)
    return written


def cmd_replay(manifest_path, out_dir=None, check_inputs=True):
    with open(manifest_path, encoding="utf-8") as fh:
        doc = json.load(fh)
    command = doc.get("command")
    if command not in COMMANDS:
        raise DataValidationError(f"{manifest_path}: unknown command {command!r}")
    if check_inputs:
        for path, digest in doc.get("inputs", {}).items():
            if not os.path.isfile(path):
                raise FileNotFoundError(f"manifest input missing: {path}")
            if sha256(path) != digest:
                raise DataValidationError(f"manifest input changed since the run: {path}")
    params = dict(doc["params"])
    params.pop("origin", None)
    out_dir = out_dir or os.path.dirname(os.path.abspath(manifest_path))
    return execute(command, params, out_dir)


# -- argument parsing -------------------------------------------------------------

def _station_opts(sp):
    g = sp.add_argument_group("station")
    g.add_argument("--m-a", type=int, default=5, help="type A inventory")
    g.add_argument("--m-b", type=int, default=8, help="type B inventory")
    g.add_argument("--tau-s", type=float, default=0.9, help="satisfaction floor")
    g.add_argument("--tau-1", type=float, default=2.0, help="penalty below the floor")
    g.add_argument("--satisfaction-term", choices=["literal_gamma", "one_minus_gamma"],
                   default="literal_gamma")


def _ga_opts(sp):
    g = sp.add_argument_group("genetic algorithm")
    g.add_argument("--population-size", type=int, default=100)
    g.add_argument("--crossover-prob", type=float, default=0.8)
    g.add_argument("--mutation-rate", type=float, default=0.005)
    g.add_argument("--max-iterations", type=int, default=500)
    g.add_argument("--tournament-size", type=int, default=3)
    g.add_argument("--elitism-count", type=int, default=1)
    g.add_argument("--seed", type=int, default=0)


def _profile_opts(sp, multiple=False):
    if multiple:
        sp.add_argument("--demand", action="append", default=[],
                        help="demand.csv per region (repeatable)")
    else:
        sp.add_argument("--demand", required=True, help="demand.csv from `estimate`")
    sp.add_argument("--start", type=int, default=0, help="first hour of the planning window")
    sp.add_argument("--horizon", type=int, default=24, help="planning window length in hours")
    sp.add_argument("--prices", help="hour,price CSV overriding the demand file's prices")
    sp.add_argument("--prices-horizon", action="store_true",
                    help="prices file is a full horizon rather than 24 daily hours")


def build_parser():
    parser = _Parser(prog="swapsched", description=__doc__.split("\n")[0])
    parser.add_argument("--config", help=f"JSON defaults (else ${CONFIG_ENV})")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sp = sub.add_parser("estimate", help="hourly swap demand from charging sessions")
    sp.add_argument("--sessions", required=True)
    sp.add_argument("--schema", type=_schema, default={},
                    help="column map, e.g. start=begin,end=finish,energy=kwh")
    sp.add_argument("--time-format", help="strptime format for timestamps (default ISO-8601)")
    sp.add_argument("--region", help="keep only sessions with this region label")
    sp.add_argument("--max-reject", type=float, default=0.1,
                    help="largest tolerated fraction of malformed rows")
    sp.add_argument("--theta", type=_floats, default=[0.08, 0.08, -0.8])
    sp.add_argument("--swap-time", type=float, default=5.0, help="minutes")
    sp.add_argument("--lambda-smoothing", action="store_true",
                    help="average each hour with the same hour-of-week")
    sp.add_argument("--ratio-a", type=float, default=5 / 13)
    sp.add_argument("--prices")
    sp.add_argument("--prices-horizon", action="store_true")
    sp.add_argument("--out", required=True)

    sp = sub.add_parser("metrics", help="S_m, P_m and O_m of a demand series")
    sp.add_argument("--demand", required=True)
    sp.add_argument("--column", default="expected")
    sp.add_argument("--window", type=int, default=24)
    sp.add_argument("--periods", type=_floats, default=[24.0, 168.0])
    sp.add_argument("--top-k", type=int, default=2)
    sp.add_argument("--out", required=True)

    sp = sub.add_parser("optimize", help="GA charging plan for one demand window")
    _profile_opts(sp)
    _station_opts(sp)
    _ga_opts(sp)
    sp.add_argument("--strategy", choices=list(ga_mod.STRATEGIES), default="lru")
    sp.add_argument("--out", required=True)

    sp = sub.add_parser("baseline", help="immediate swap-and-charge plan")
    _profile_opts(sp)
    _station_opts(sp)
    sp.add_argument("--out", required=True)

    sp = sub.add_parser("compare", help="uniform GA vs LRU GA over regions and seeds")
    _profile_opts(sp, multiple=True)
    sp.add_argument("--synthetic-seeds", type=_ints, default=[],
                    help=f"add synthetic regions by seed (benchmark set: "
                         f"{BENCHMARK_REGION_SEEDS[0]}-{BENCHMARK_REGION_SEEDS[-1]})")
    _station_opts(sp)
    _ga_opts(sp)
    sp.add_argument("--seeds", type=_ints, default=[0, 1, 2, 3, 4])
    sp.add_argument("--strategies", type=_strings, default=["uniform", "lru"])
    sp.add_argument("--jobs", type=int, default=1)
    sp.add_argument("--out", required=True)

    sp = sub.add_parser("replay", help="re-run a manifest.json")
    sp.add_argument("manifest")
    sp.add_argument("--out", help="output directory (default: the manifest's)")
    return parser


def _apply_config(parser, argv):
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    path = known.config or os.environ.get(CONFIG_ENV)
    if not path:
        return
    with open(path, encoding="utf-8") as fh:
        defaults = json.load(fh)
    if not isinstance(defaults, dict):
        raise UsageError(f"{path}: config must be a JSON object")
    subparsers = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    for sp in subparsers.choices.values():
        dests = {a.dest for a in sp._actions}
        sp.set_defaults(**{k: v for k, v in defaults.items() if k in dests})


def main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    try:
        _apply_config(parser, argv)
    except (OSError, ValueError, UsageError) as exc:
        print(f"swapsched: config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "replay":
            cmd_replay(args.manifest, args.out)
        else:
            params = {k: v for k, v in vars(args).items()
                      if k not in ("command", "config", "verbose", "out")}
            for key in ("sessions", "prices"):
                if params.get(key):
                    params[key] = os.path.abspath(params[key])
            if isinstance(params.get("demand"), list):
                params["demand"] = [os.path.abspath(x) for x in params["demand"]]
            elif params.get("demand"):
                params["demand"] = os.path.abspath(params["demand"])
            execute(args.command, params, args.out)
    except UsageError as exc:
        print(f"swapsched: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataValidationError, FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"swapsched: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception as exc:  # noqa: BLE001 - surfaced as exit code 3
        logger.exception("internal error")
        print(f"swapsched: internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    return 0


if __name__ == "__main__":
    sys.exit(main())
