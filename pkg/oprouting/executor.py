# -----------------------------------------------------------------------------
# MIT License
#
# Copyright (c) 2024 OpRouting Team
#
# Permission is hereby granted, free of charge, to any person obtaining a copy
# of this software and associated documentation files (the "Software"), to deal
# in the Software without restriction, including without limitation the rights
# to use, copy, modify, merge, publish, distribute, sublicense, and/or sell
# copies of the Software, and to permit persons to whom the Software is
# furnished to do so, subject to the following conditions:
#
# The above copyright notice and this permission notice shall be included in all
# copies or substantial portions of the Software.
#
# THE SOFTWARE IS PROVIDED "AS IS", WITHOUT WARRANTY OF ANY KIND, EXPRESS OR
# IMPLIED, INCLUDING BUT NOT LIMITED TO THE WARRANTIES OF MERCHANTABILITY,
# FITNESS FOR A PARTICULAR PURPOSE AND NONINFRINGEMENT. IN NO EVENT SHALL THE
# AUTHORS OR COPYRIGHT HOLDERS BE LIABLE FOR ANY CLAIM, DAMAGES OR OTHER
# LIABILITY, WHETHER IN AN ACTION OF CONTRACT, TORT OR OTHERWISE, ARISING FROM,
# OUT OF OR IN CONNECTION WITH THE SOFTWARE OR THE USE OR OTHER DEALINGS IN THE
# SOFTWARE.
# -----------------------------------------------------------------------------

"""Command implementations behind the ``oprouting`` CLI."""
import json
import logging
import os
import sys
from itertools import product
from multiprocessing import Pool
from typing import Dict, List, Optional

import numpy as np
import pandas as pd
import yaml

from .capacity import scale_to_boundary, stability_lp_feasible
from .cones import lyapunov_value, resolve_cone, resolve_cone_pc
from .exceptions import ConfigError
from .model import NetworkModel, model_to_config, network_from_config
from .network_generator import builtin_network, example_four_node
from .policies import policy_from_spec
from .sim import ArrivalProcess, SimConfig, arrivals_from_config, run
from .utils import create_experiment_folder
from .utils.static_funcs import atomic_write_csv, atomic_write_json, parse_float_list, to_builtin
from .verification import VerificationSuite
from .weights import weight_from_config

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VERIFICATION_FAILED = 1
EXIT_USAGE = 2


def load_config(path: Optional[str]) -> Dict:
    """Read a YAML experiment configuration; ``None`` gives an empty one.

    Raises:
        ConfigError: Missing file, invalid YAML or a top level that is not a mapping.
    """
    if path is None:
        return dict()
    try:
        with open(path) as fh:
            cfg = yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigError(f"Cannot read configuration {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"Invalid YAML in {path}: {exc}") from exc
    if cfg is None:
        return dict()
    if not isinstance(cfg, dict):
        raise ConfigError(f"Configuration {path} must be a mapping at the top level")
    logger.debug("Loaded configuration %s with sections %s", path, sorted(cfg))
    return cfg


def _option(args, name: str, section: Dict, key: Optional[str] = None, default=None):
    """A CLI flag when given, else the configuration field, else ``default``."""
    value = getattr(args, name, None)
    if value is not None:
        return value
    return section.get(key or name, default)


def build_model(args, cfg: Dict) -> NetworkModel:
    if getattr(args, "network", None):
        return builtin_network(args.network, seed=getattr(args, "network_seed", None),
                               n_relays=getattr(args, "n_relays", None))
    if "network" in cfg:
        return network_from_config(cfg["network"])
    return example_four_node()


def build_weight(args, cfg: Dict, n_max: int):
    if getattr(args, "K", None) is not None:
        return weight_from_config({"family": "geometric", "K": args.K}, n_max)
    return weight_from_config(cfg.get("weight"), n_max)


def build_arrivals(args, cfg: Dict, n_relays: int) -> ArrivalProcess:
    section = dict(cfg.get("arrivals") or {})
    if getattr(args, "arrival_kind", None):
        section["kind"] = args.arrival_kind
    if getattr(args, "a_max", None) is not None:
        section["a_max"] = args.a_max
    if getattr(args, "lam", None):
        section.pop("direction", None)
        section["rates"] = parse_float_list(args.lam)
    return arrivals_from_config(section, n_relays)


def _direction(args, cfg: Dict, n_relays: int) -> np.ndarray:
    """Direction of the arrival sweep: ``--direction``, then the configured direction or rates, then all ones."""
    if getattr(args, "direction", None):
        d = np.asarray(parse_float_list(args.direction))
    else:
        section = cfg.get("arrivals") or {}
        d = np.asarray(section.get("direction", section.get("rates", np.ones(n_relays))), dtype=float)
    if len(d) != n_relays or (d < 0).any() or d.sum() <= 0:
        raise ConfigError(f"Direction must be {n_relays} non-negative numbers, not all zero; got {d.tolist()}")
    return d


def _print_json(obj):
    print(json.dumps(to_builtin(obj), indent=2, sort_keys=True))


def cmd_resolve(args, cfg: Dict) -> int:
    """Print the cone ordering of ``--q``, its boundary flag and the Lyapunov value."""
    try:
        q = np.asarray(parse_float_list(args.q))
    except ValueError as exc:
        raise ConfigError(f"Cannot parse backlog vector '{args.q}': {exc}") from exc
    if len(q) == 0 or (q < 0).any() or not np.isfinite(q).all():
        raise ConfigError(f"Backlogs must be finite non-negative numbers, got '{args.q}'")
    f = build_weight(args, cfg, len(q))
    if args.path_connected:
        m = build_model(args, cfg)
        if m.n_relays != len(q):
            raise ConfigError(f"Backlog vector has {len(q)} entries, the network has {m.n_relays} relays")
        resolution = resolve_cone_pc(q, f, m)
    else:
        resolution = resolve_cone(q, f)
    out = resolution.to_dict()
    out["lyapunov_value"] = lyapunov_value(q, f, resolution.ordering)
    _print_json(out)
    return EXIT_OK


def _simulation_settings(args, cfg: Dict) -> Dict:
    section = cfg.get("simulation") or {}
    horizon = int(_option(args, "horizon", section, default=10_000))
    warmup = _option(args, "warmup", section)
    return {"horizon": horizon,
            "warmup": None if warmup is None else int(warmup),
            "seed": int(_option(args, "seed", section, default=0)),
            "trace": bool(section.get("trace", False)) or bool(getattr(args, "trace_out", None))}


def _write_run(stats, out_dir: str, trace_path: Optional[str] = None, extra: Optional[Dict] = None) -> Dict:
    summary = stats.to_summary()
    summary.update(extra or {})
    atomic_write_json(to_builtin(summary), os.path.join(out_dir, "summary.json"))
    if stats.trace is not None:
        atomic_write_csv(stats.trace, trace_path or os.path.join(out_dir, "trace.csv"))
    return summary


def cmd_simulate(args, cfg: Dict) -> int:
    """One run; writes ``summary.json`` (and ``trace.csv`` when tracing) into the output directory."""
    m = build_model(args, cfg)
    f = build_weight(args, cfg, m.n_relays)
    arrivals = build_arrivals(args, cfg, m.n_relays)
    policy = policy_from_spec(_option(args, "policy", cfg, default="fpolicy"), m, f,
                              _option(args, "tie", cfg, default="lowest-index"))
    settings = _simulation_settings(args, cfg)
    stats = run(SimConfig(m, policy, arrivals, settings["horizon"], settings["warmup"], settings["seed"],
                          settings["trace"], verbose=args.verbose))
    out_dir = args.out or create_experiment_folder()[0]
    summary = _write_run(stats, out_dir, getattr(args, "trace_out", None),
                         {"arrival_rates": arrivals.rates.tolist(), "arrival_kind": arrivals.kind})
    logger.info("Wrote run outputs to %s", out_dir)
    _print_json(summary)
    return EXIT_OK


def cmd_capacity(args, cfg: Dict) -> int:
    """Capacity program for the arrival rates and the boundary scaling along ``--direction``."""
    m = build_model(args, cfg)
    rates = build_arrivals(args, cfg, m.n_relays).rates
    solver = args.solver
    result = stability_lp_feasible(m, rates, solver)
    direction = _direction(args, cfg, m.n_relays) if getattr(args, "direction", None) or rates.sum() == 0 \
        else rates
    out = {"feasible": result.feasible,
           "slack": result.slack,
           "theta_star": scale_to_boundary(m, direction, solver=solver),
           "direction": direction.tolist(),
           "rates": rates.tolist()}
    if args.witness:
        out["witness"] = result.to_dict()["witness"]
    logger.info("Capacity: feasible=%s slack=%.17g theta*=%.17g", result.feasible, result.slack, out["theta_star"])
    _print_json(out)
    return EXIT_OK


def cmd_verify(args, cfg: Dict) -> int:
    """Run the property suites; exit 1 when one fails outside of its expected-fail conditions."""
    section = dict(cfg.get("verify") or {})
    m = build_model(args, cfg)
    k_values = parse_float_list(args.k_values) if args.k_values else section.get("k_values", (2.0, 3.0, 10.0))
    suite = VerificationSuite(model=m,
                              k_values=k_values,
                              max_relays=int(_option(args, "max_relays", section, default=4)),
                              samples=section.get("samples"),
                              seed=int(_option(args, "seed", section, default=0)),
                              broken=args.broken_weight or bool(section.get("broken_weight", False)),
                              orcd_K=_option(args, "orcd_K", section),
                              policies=section.get("policies", ('fpolicy', 'pc-fpolicy', 'backpressure', 'orcd')),
                              verbose=args.verbose)
    reports = suite.run(args.suites or section.get("suites"))
    print(suite.report_results(reports), file=sys.stderr)
    payload = {"suites": [r.to_dict() for r in reports], "passed": all(r.ok for r in reports)}
    if args.report:
        atomic_write_json(to_builtin(payload), args.report)
    _print_json(payload)
    return EXIT_OK if payload["passed"] else EXIT_VERIFICATION_FAILED


def _sweep_point(task: Dict) -> Dict:
    """Worker body: one ``(policy, scale, seed)`` grid point, rebuilt from plain configuration data."""
    m = network_from_config(task["network"])
    f = weight_from_config(task["weight"], m.n_relays)
    policy = policy_from_spec(task["policy"], m, f, task["tie"])
    arrivals = ArrivalProcess(task["kind"], np.asarray(task["rates"]), task["a_max"])
    stats = run(SimConfig(m, policy, arrivals, task["horizon"], task["warmup"], task["seed"], task["trace"]))
    summary = _write_run(stats, task["out_dir"], extra={"arrival_rates": task["rates"], "scale": task["scale"],
                                                        "policy_spec": task["policy"]})
    return {"index": task["index"], "policy": task["policy"], "scale": task["scale"], "seed": task["seed"],
            "avg_total_backlog": summary["avg_total_backlog"], "mean_delay": summary["mean_delay"],
            "delivered": summary["delivered"], "throughput": summary["throughput"],
            "final_total_backlog": summary["final_total_backlog"], "path": task["out_dir"]}


def sweep_tasks(args, cfg: Dict, out_dir: str) -> List[Dict]:
    """Expand the policy x scale x seed grid into picklable task dictionaries."""
    section = cfg.get("sweep") or {}
    m = build_model(args, cfg)
    f = build_weight(args, cfg, m.n_relays)
    base = build_arrivals(args, cfg, m.n_relays)
    direction = _direction(args, cfg, m.n_relays)
    if args.relative or section.get("relative", False):
        theta = scale_to_boundary(m, direction)
        logger.info("Sweep scales are relative to theta*=%.10g", theta)
        direction = direction * theta
    policies = args.policies or section.get("policies") or [cfg.get("policy", "fpolicy")]
    scales = parse_float_list(args.scales) if args.scales else section.get("scales")
    seeds = [int(s) for s in parse_float_list(args.seeds)] if args.seeds else section.get("seeds", [0])
    if not policies or not scales:
        raise ConfigError("A sweep needs at least one policy and one scale")
    settings = _simulation_settings(args, cfg)
    network, weight = model_to_config(m), f.describe()
    tasks = []
    for index, (policy, scale, seed) in enumerate(product(policies, scales, seeds)):
        tasks.append({"index": index, "policy": policy, "scale": float(scale), "seed": int(seed),
                      "rates": (direction * float(scale)).tolist(), "kind": base.kind, "a_max": base.a_max,
                      "network": network, "weight": weight, "tie": _option(args, "tie", cfg, default="lowest-index"),
                      "horizon": settings["horizon"], "warmup": settings["warmup"], "trace": settings["trace"],
                      "out_dir": os.path.join(out_dir, f"point_{index:04d}")})
    return tasks


def cmd_sweep(args, cfg: Dict) -> int:
    """Run the grid in a process pool and index the grid points in ``sweep.csv``."""
    out_dir = args.out or create_experiment_folder()[0]
    tasks = sweep_tasks(args, cfg, out_dir)
    workers = int(_option(args, "workers", cfg.get("sweep") or {}, default=1))
    logger.info("Sweeping %d grid points with %d workers into %s", len(tasks), workers, out_dir)
    if workers > 1:
        with Pool(processes=workers) as pool:
            rows = pool.map(_sweep_point, tasks)
    else:
        rows = [_sweep_point(t) for t in tasks]
    table = pd.DataFrame(sorted(rows, key=lambda r: r["index"]))
    atomic_write_csv(table, os.path.join(out_dir, "sweep.csv"))
    _print_json({"points": len(rows), "out": out_dir})
    return EXIT_OK


commands = {'resolve': cmd_resolve,
            'simulate': cmd_simulate,
            'verify': cmd_verify,
            'capacity': cmd_capacity,
            'sweep': cmd_sweep}


def execute(args) -> int:
    """Dispatch a parsed command line; configuration and input errors give exit code 2."""
    try:
        cfg = load_config(getattr(args, "config", None))
        return commands[args.command](args, cfg)
    except ValueError as exc:
        logger.error("%s: %s", type(exc).__name__, exc)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
