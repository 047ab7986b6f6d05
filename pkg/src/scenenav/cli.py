"""Batch runner and comparison harness.

Subcommands:
  run       execute a seeds x methods x scenarios matrix, write one
            JSONL log per episode plus per-episode and aggregate CSVs
  describe  print (or dump) a built-in scenario's inventory
  replay    print the per-tick trace of a recorded log

The run config is a single JSON document; every flag has a config
equivalent and wins on conflict. SCENENAV_OUT and SCENENAV_WORKERS
override the output directory and parallelism only.
"""

import argparse
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

from .planner import PlannerConfig, Weights
from .scenarios import (
    build_scenario,
    inventory_checksum,
    scenario_inventory,
    world_from_config,
    world_to_config,
)
from .sensors import GridParams, LidarParams
from .sim import (
    LEGGED_ROBOT,
    METHODS,
    WHEELED_ROBOT,
    SimConfig,
    check_method,
    compute_metrics,
    run_episode,
)
from .switching import Thresholds

ROBOTS = {"Wheeled": WHEELED_ROBOT, "Legged": LEGGED_ROBOT}


class ConfigError(Exception):
    pass


def _update_dataclass(obj, overrides, nested=()):
    kwargs = {}
    for key, val in overrides.items():
        if not hasattr(obj, key):
            raise ConfigError(f"unknown option {key!r} for {type(obj).__name__}")
        if key in nested:
            kwargs[key] = _update_dataclass(getattr(obj, key), val, nested)
        else:
            kwargs[key] = val
    return replace(obj, **kwargs)


def sim_config_from_dict(d):
    """Build a SimConfig from a nested override dict."""
    cfg = SimConfig()
    d = dict(d or {})
    if "lidar" in d:
        cfg = replace(cfg, lidar=_update_dataclass(LidarParams(), d.pop("lidar")))
    if "grid" in d:
        cfg = replace(cfg, grid=_update_dataclass(GridParams(), d.pop("grid")))
    if "planner" in d:
        p = dict(d.pop("planner"))
        weights = Weights(**p.pop("weights")) if "weights" in p else None
        pc = _update_dataclass(PlannerConfig(), p)
        if weights is not None:
            pc = replace(pc, weights=weights)
        cfg = replace(cfg, planner=pc)
    if "thresholds" in d:
        cfg = replace(cfg, thresholds=_update_dataclass(Thresholds(), d.pop("thresholds")))
    return _update_dataclass(cfg, d)


def _load_config_file(path):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc


def _resolve_setup(cfg, scenario_id, seed):
    if cfg.get("world_file"):
        setup = world_from_config(_load_config_file(cfg["world_file"]))
        return setup
    return build_scenario(scenario_id, seed)


def _run_one(job):
    """Worker entry: one (scenario, method, seed) episode."""
    cfg, scenario_id, method, seed = job
    setup = _resolve_setup(cfg, scenario_id, seed)
    robot_kind = cfg.get("robot") or setup.robot_kind
    robot = ROBOTS[robot_kind]
    sim_cfg = sim_config_from_dict(cfg.get("overrides"))
    log = run_episode(setup.world, setup.start, setup.goal, robot, sim_cfg,
                      seed=seed, method=method)
    met = compute_metrics(log)
    row = {
        "scenario": scenario_id,
        "method": method,
        "seed": seed,
        "outcome": log.outcome,
        "success": met.success,
        "path_length": log.path_length(),
        "elapsed": log.elapsed(),
        "mean_velocity": met.mean_velocity,
        "instability_cost": met.instability_cost,
        "elevation_gradient": met.elevation_gradient,
        "odometry_drift": log.odometry_drift(),
        "final_distance": log.final_distance(),
    }
    return row, log.to_jsonl()


def _atomic_write(path, text):
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)


def _fmt(x):
    return repr(float(x))


def run(cfg):
    """Execute the configured matrix; returns a process exit code."""
    try:
        scenarios = cfg.get("scenarios") or [cfg.get("scenario", 1)]
        scenarios = [int(s) for s in scenarios]
        methods = cfg.get("methods") or ["adventr"]
        seeds = cfg.get("seeds") or list(range(int(cfg.get("n_seeds", 5))))
        seeds = [int(s) for s in seeds]
        out_dir = Path(os.environ.get("SCENENAV_OUT") or cfg.get("out_dir") or "runs")
        workers = int(os.environ.get("SCENENAV_WORKERS") or cfg.get("workers", 1))

        for m in methods:
            if m not in METHODS:
                raise ConfigError(f"unknown method {m!r}; expected one of {METHODS}")
        # refuse incompatible method/robot pairs before any episode runs
        for sid in scenarios:
            setup_kind = (cfg.get("robot")
                          or _resolve_setup(cfg, sid, seeds[0]).robot_kind)
            for m in methods:
                try:
                    check_method(m, setup_kind)
                except ValueError as exc:
                    raise ConfigError(f"scenario {sid}: {exc}") from exc
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    out_dir.mkdir(parents=True, exist_ok=True)
    jobs = [(cfg, sid, m, seed) for sid in scenarios for m in methods for seed in seeds]

    results = {}
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for job, (row, jsonl) in zip(jobs, pool.map(_run_one, jobs)):
                results[(job[1], job[2], job[3])] = (row, jsonl)
    else:
        for job in jobs:
            row, jsonl = _run_one(job)
            results[(job[1], job[2], job[3])] = (row, jsonl)

    rows = []
    for key in sorted(results, key=lambda k: (k[0], k[1], k[2])):
        row, jsonl = results[key]
        rows.append(row)
        sid, method, seed = key
        _atomic_write(out_dir / f"scenario{sid}_{method}_seed{seed}.jsonl", jsonl)

    ep_header = ("scenario,method,seed,outcome,path_length,elapsed,mean_velocity,"
                 "instability_cost,elevation_gradient,odometry_drift,final_distance")
    ep_lines = [ep_header]
    for r in rows:
        ep_lines.append(",".join([
            str(r["scenario"]), r["method"], str(r["seed"]), r["outcome"],
            _fmt(r["path_length"]), _fmt(r["elapsed"]), _fmt(r["mean_velocity"]),
            _fmt(r["instability_cost"]), _fmt(r["elevation_gradient"]),
            _fmt(r["odometry_drift"]), _fmt(r["final_distance"]),
        ]))
    _atomic_write(out_dir / "episodes.csv", "\n".join(ep_lines) + "\n")

    agg_lines = ["method,scenario,success_rate,mean_velocity,instability_cost,elevation_gradient"]
    groups = {}
    for r in rows:
        groups.setdefault((r["method"], r["scenario"]), []).append(r)
    for (method, sid) in sorted(groups, key=lambda k: (str(k[0]), k[1])):
        grp = groups[(method, sid)]
        n = len(grp)
        agg_lines.append(",".join([
            method, str(sid),
            _fmt(sum(1 for g in grp if g["success"]) / n),
            _fmt(sum(g["mean_velocity"] for g in grp) / n),
            _fmt(sum(g["instability_cost"] for g in grp) / n),
            _fmt(sum(g["elevation_gradient"] for g in grp) / n),
        ]))
    _atomic_write(out_dir / "summary.csv", "\n".join(agg_lines) + "\n")
    print(f"wrote {len(rows)} episode logs and 2 CSVs to {out_dir}")
    return 0


def describe(scenario_id, seed=0, dump=None):
    setup = build_scenario(scenario_id, seed)
    inv = scenario_inventory(setup.world)
    print(f"scenario {scenario_id} (seed {seed}), robot kind {setup.robot_kind}")
    print(f"  start {setup.start}  goal {setup.goal}")
    print(f"  regions: {inv['regions']}")
    print(f"  vegetation: {inv['vegetation']}")
    print(f"  obstacles: {inv['obstacles']}  bumps: {inv['bumps']}  steps: {inv['steps']}")
    print(f"  inventory checksum: {inventory_checksum(setup.world)}")
    if dump:
        Path(dump).write_text(json.dumps(world_to_config(setup), indent=2) + "\n")
        print(f"  wrote world config to {dump}")
    return 0


def replay(log_path):
    lines = Path(log_path).read_text().splitlines()
    if not lines:
        print("empty log", file=sys.stderr)
        return 2
    head = json.loads(lines[0])
    if head.get("format") != "scenenav-log-v1":
        print("not a scenenav episode log", file=sys.stderr)
        return 2
    print(f"method {head['method']} seed {head['seed']} outcome {head['outcome']}")
    last_active = None
    for line in lines[1:]:
        rec = json.loads(line)
        active = ",".join(rec["active"]) or "-"
        mark = " <- switch" if active != last_active else ""
        last_active = active
        gait = rec.get("gait") or "-"
        print(f"t={rec['t']:7.2f}  x={rec['state'][0]:7.2f} y={rec['state'][1]:7.2f} "
              f"v={rec['command'][0]:5.2f} w={rec['command'][1]:6.2f} "
              f"gait={gait:<10} active={active}{mark}")
    return 0


def _parse_seeds(text):
    if "," in text:
        return [int(s) for s in text.split(",") if s]
    return list(range(int(text)))


def main(argv=None):
    parser = argparse.ArgumentParser(prog="scenenav",
                                     description="terrain-aware navigation benchmark runner")
    sub = parser.add_subparsers(dest="cmd", required=True)

    p_run = sub.add_parser("run", help="run an episode matrix")
    p_run.add_argument("--config", help="JSON run config")
    p_run.add_argument("--scenario", type=int)
    p_run.add_argument("--scenarios", help="comma-separated scenario ids")
    p_run.add_argument("--methods", help="comma-separated method names")
    p_run.add_argument("--robot", choices=sorted(ROBOTS))
    p_run.add_argument("--seeds", help="a count, or comma-separated seed list")
    p_run.add_argument("--out")
    p_run.add_argument("--workers", type=int)

    p_desc = sub.add_parser("describe", help="print a scenario inventory")
    p_desc.add_argument("scenario", type=int)
    p_desc.add_argument("--seed", type=int, default=0)
    p_desc.add_argument("--dump", help="write the world config JSON here")

    p_rep = sub.add_parser("replay", help="print a recorded episode trace")
    p_rep.add_argument("log")

    args = parser.parse_args(argv)
    if args.cmd == "describe":
        return describe(args.scenario, args.seed, args.dump)
    if args.cmd == "replay":
        return replay(args.log)

    cfg = {}
    if args.config:
        try:
            cfg = _load_config_file(args.config)
        except ConfigError as exc:
            print(f"config error: {exc}", file=sys.stderr)
            return 2
    if args.scenario is not None:
        cfg["scenario"] = args.scenario
        cfg.pop("scenarios", None)
    if args.scenarios:
        cfg["scenarios"] = [int(s) for s in args.scenarios.split(",") if s]
    if args.methods:
        cfg["methods"] = [m for m in args.methods.split(",") if m]
    if args.robot:
        cfg["robot"] = args.robot
    if args.seeds:
        cfg["seeds"] = _parse_seeds(args.seeds)
    if args.out:
        cfg["out_dir"] = args.out
    if args.workers is not None:
        cfg["workers"] = args.workers
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
