"""Command line interface.

Every subcommand accepts ``--config FILE`` with a JSON object of option
values (keys use underscores, e.g. ``"h_mu"``); explicit flags override the
file. Module errors exit with status 1 and a JSON error record on stderr;
usage errors exit with status 2.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from ._parallel import default_workers
from .dataset import load_csv, make_grid, save_csv, save_json
from .exceptions import FDAError
from .export import write_curve, write_eigen, write_sigma2, write_surface
from .fpca import decompose
from .kernels import KERNELS, get_kernel
from .ratestudy import SHIPPED_SCENARIOS, load_scenario, run_scenario
from .reproduce import INF, run_study, write_outputs
from .simgen import DesignSpec, MODELS, generate, model_from_json
from .smooth1d import estimate_mean
from .smooth2d import estimate_covariance, estimate_raw_covariance, estimate_sigma2

DEFAULT_SEED = 2010
FULL_REPLICATES = 200

# option -> (default, required-for-commands)
OPTIONS = {
    "input": (None, {"estimate-mean", "estimate-cov", "fpca", "sigma2"}),
    "output": (None, {"estimate-mean", "estimate-cov", "fpca", "sigma2", "simulate", "rate-study", "reproduce-sim1", "reproduce-sim2"}),
    "h_mu": (None, {"estimate-mean", "estimate-cov", "fpca"}),
    "h_r": (None, {"estimate-cov", "fpca", "sigma2"}),
    "h_v": (None, {"sigma2"}),
    "kernel": ("epanechnikov", set()),
    "grid_size": (None, set()),
    "domain": (None, set()),
    "n_components": (3, set()),
    "seed": (DEFAULT_SEED, set()),
    "workers": (None, set()),
    "replicates": (None, set()),
    "full": (False, set()),
    "model": ("sim1", set()),
    "model_file": (None, set()),
    "n": (200, set()),
    "m": (5, set()),
    "sigma2": (None, set()),
    "scenario": (None, set()),
    "scenario_file": (None, set()),
    "include_m1": (False, set()),
}
DEFAULT_GRID = {"estimate-mean": 101, "sigma2": 101, "estimate-cov": 51, "fpca": 51}


def _add_common(p):
    p.add_argument("--config", help="JSON file with option values")
    p.add_argument("--output", "-o", help="output file (estimates, simulate) or directory (studies)")
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int, help="worker processes (default: $FDASMOOTH_WORKERS or 1)")


def _add_estimation(p, bandwidths):
    p.add_argument("--input", "-i", help="CSV with header curve_id,t,y")
    p.add_argument("--kernel", choices=sorted(KERNELS))
    p.add_argument("--grid-size", type=int)
    p.add_argument("--domain", type=float, nargs=2, metavar=("A", "B"))
    for name in bandwidths:
        p.add_argument(f"--{name.replace('_', '-')}", type=float, dest=name)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fdasmooth", description="Local-linear smoothing for functional data.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("estimate-mean", help="local-linear mean function")
    _add_common(p)
    _add_estimation(p, ["h_mu"])

    p = sub.add_parser("estimate-cov", help="covariance surface")
    _add_common(p)
    _add_estimation(p, ["h_mu", "h_r"])

    p = sub.add_parser("fpca", help="functional principal components")
    _add_common(p)
    _add_estimation(p, ["h_mu", "h_r"])
    p.add_argument("--n-components", type=int)

    p = sub.add_parser("sigma2", help="measurement error variance")
    _add_common(p)
    _add_estimation(p, ["h_r", "h_v"])

    p = sub.add_parser("simulate", help="write a simulated dataset")
    _add_common(p)
    p.add_argument("--model", choices=sorted(MODELS))
    p.add_argument("--model-file", help="JSON model file {\"model\": key, \"sigma2\": value}")
    p.add_argument("--n", type=int)
    p.add_argument("--m", type=int)
    p.add_argument("--sigma2", type=float)

    p = sub.add_parser("rate-study", help="Monte Carlo convergence-rate study")
    _add_common(p)
    p.add_argument("--scenario", choices=sorted(SHIPPED_SCENARIOS))
    p.add_argument("--scenario-file", help="JSON scenario definition")
    p.add_argument("--replicates", type=int)

    for name, help_ in (("reproduce-sim1", "three-component model study"), ("reproduce-sim2", "Brownian motion study")):
        p = sub.add_parser(name, help=help_)
        _add_common(p)
        p.add_argument("--replicates", type=int, help="default 50")
        p.add_argument("--full", action="store_true", help=f"use {FULL_REPLICATES} replicates")
        p.add_argument("--n", type=int)
        p.add_argument("--kernel", choices=sorted(KERNELS))
        if name == "reproduce-sim1":
            p.add_argument("--include-m1", action="store_true", help="add a mean-only arm with m=1")
    return parser


def resolve(args, parser) -> dict:
    """Merge flags over the config file over defaults; enforce required options."""
    config = {}
    if getattr(args, "config", None):
        try:
            config = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except (OSError, ValueError) as exc:
            parser.error(f"cannot read config {args.config}: {exc}")
        if not isinstance(config, dict):
            parser.error("config file must hold a JSON object")
    opts = {}
    for key, (default, required_for) in OPTIONS.items():
        value = getattr(args, key, None)
        if value is None or value is False:
            value = config.get(key, config.get(key.replace("h_r", "h_R").replace("h_v", "h_V"), value))
        if value is None:
            value = default
        if value is None and args.command in required_for:
            parser.error(f"{args.command} requires --{key.replace('_', '-')}")
        opts[key] = value
    for key in ("h_mu", "h_r", "h_v"):
        if opts[key] is not None and not float(opts[key]) > 0:
            parser.error(f"--{key.replace('_', '-')} must be positive")
    if opts["grid_size"] is None:
        opts["grid_size"] = DEFAULT_GRID.get(args.command, 101)
    if opts["workers"] is None:
        opts["workers"] = default_workers()
    return opts


def cmd_estimate(command: str, o: dict) -> None:
    data = load_csv(o["input"], domain=o["domain"])
    kernel = get_kernel(o["kernel"])
    grid = make_grid(data.domain, o["grid_size"])
    meta = {"kernel": kernel.family}
    if command == "estimate-mean":
        est = estimate_mean(data, kernel, o["h_mu"], grid)
        write_curve(grid, est.values, o["output"], h_mu=o["h_mu"], **meta)
        return
    if command == "sigma2":
        est = estimate_sigma2(data, kernel, o["h_r"], o["h_v"], grid)
        write_sigma2(est, o["output"], h_R=o["h_r"], h_V=o["h_v"], **meta)
        return
    cov = estimate_covariance(
        estimate_raw_covariance(data, kernel, o["h_r"], grid),
        estimate_mean(data, kernel, o["h_mu"], grid),
    )
    if command == "estimate-cov":
        write_surface(grid, cov.values, o["output"], h_mu=o["h_mu"], h_R=o["h_r"], **meta)
    else:
        eig = decompose(cov, o["n_components"])
        write_eigen(eig, o["output"], h_mu=o["h_mu"], h_R=o["h_r"], **meta)


def cmd_simulate(o: dict) -> None:
    if o["model_file"]:
        model = model_from_json(o["model_file"])
    else:
        spec = {"model": o["model"]}
        if o["sigma2"] is not None:
            spec["sigma2"] = o["sigma2"]
        model = model_from_json(spec)
    data = generate(model, DesignSpec(int(o["n"]), int(o["m"])), int(o["seed"]))
    if str(o["output"]).lower().endswith(".json"):
        save_json(data, o["output"])
    else:
        save_csv(data, o["output"])


def cmd_rate_study(o: dict, parser) -> None:
    if o["scenario_file"]:
        scenario = load_scenario(o["scenario_file"])
    elif o["scenario"]:
        scenario = SHIPPED_SCENARIOS[o["scenario"]]
    else:
        parser.error("rate-study requires --scenario or --scenario-file")
    if o["replicates"]:
        scenario = type(scenario).from_dict({**scenario.to_dict(), "replicates": int(o["replicates"])})
    report = run_scenario(scenario, int(o["seed"]), workers=o["workers"])
    report.write(o["output"])


def cmd_reproduce(study: str, o: dict) -> None:
    replicates = FULL_REPLICATES if o["full"] else int(o["replicates"] or 50)
    arms = (5, 10, 50, INF) if study == "sim1" else (5, 10, 50)
    if study == "sim1" and o["include_m1"]:
        arms = (1,) + arms
    result = run_study(
        study, replicates=replicates, seed=int(o["seed"]), n=int(o["n"]), arms=arms,
        workers=o["workers"], kernel=o["kernel"],
    )
    write_outputs(result, o["output"])


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    o = resolve(args, parser)
    try:
        if args.command in ("estimate-mean", "estimate-cov", "fpca", "sigma2"):
            cmd_estimate(args.command, o)
        elif args.command == "simulate":
            cmd_simulate(o)
        elif args.command == "rate-study":
            cmd_rate_study(o, parser)
        else:
            cmd_reproduce("sim1" if args.command == "reproduce-sim1" else "sim2", o)
    except FDAError as exc:
        print(json.dumps(exc.to_record()), file=sys.stderr)
        return 1
    except (OSError, ValueError) as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
