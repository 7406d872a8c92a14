"""``zenoline`` command line.

Exit codes: 0 success, 1 numerical failure, 2 usage or configuration error.
Every data file starts with '#' lines carrying the config hash and seed;
wall-clock metadata goes to a separate ``run.meta.json``.
"""
from __future__ import annotations

import argparse
import csv
import datetime
import hashlib
import json
import math
import os
import platform
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .config import (
    ConfigError,
    build_device,
    build_model,
    config_hash,
    get_dotted,
    load_config,
    parse_config,
    set_dotted,
)
from .evolution import NumericalError, compute_gamma, evolve
from .link_planner import memory_loop, plan_link, scan_device_counts, write_link_csv, write_memory_csv
from .qnd_device import homodyne_discriminate, polarization_fidelity
from .regime_analysis import (
    detect_departure,
    fit_decay,
    read_transmission_csv,
    tq_experiment,
    write_tq_csv,
)
from .zeno_protocol import ZenoConfig, analytic_survival, run_ensemble, run_monte_carlo, write_record_csv

COMMANDS = ("simulate", "zeno", "tq", "qnd", "plan", "memory", "sweep")


def _header(command: str, cfg: dict) -> list[str]:
    return [f"zenoline {command}", f"config_sha256={config_hash(cfg)} seed={cfg['protocol']['seed']}"]


def _write_json(path: Path, payload: dict, command: str, cfg: dict) -> None:
    doc = {"_meta": {"command": command, "config_sha256": config_hash(cfg), "seed": cfg["protocol"]["seed"]}}
    doc.update(payload)
    path.write_text(json.dumps(doc, sort_keys=True, indent=2, allow_nan=True) + "\n")


def _wants(cfg: dict, fmt: str) -> bool:
    return fmt in cfg["output"]["formats"]


def _finite_or_none(x):
    return None if x is None or not math.isfinite(x) else float(x)


def cmd_simulate(cfg: dict, out: Path, workers: int) -> None:
    _, bg, H, state = build_model(cfg)
    pr = cfg["protocol"]
    traj = evolve(state, H, pr["t_final"], pr["n_steps"], method=pr["method"])
    hdr = _header("simulate", cfg)
    if _wants(cfg, "csv"):
        with open(out / "trajectory.csv", "w", newline="") as fh:
            for line in hdr:
                fh.write(f"# {line}\n")
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t", "P_s"])
            for t, p in zip(traj.times, traj.survival):
                w.writerow([repr(float(t)), repr(float(p))])
    if _wants(cfg, "json"):
        _write_json(out / "simulate.json", {
            "gamma": compute_gamma(H, state),
            "recurrence_time": _finite_or_none(bg.recurrence_time),
            "final_survival": float(traj.survival[-1]),
        }, "simulate", cfg)


def cmd_zeno(cfg: dict, out: Path, workers: int) -> None:
    _, _, H, state = build_model(cfg)
    pr = cfg["protocol"]
    device = build_device(cfg) if pr["use_device"] else None
    zc = ZenoConfig(pr["tau"], pr["N"], device)
    if pr["trials"] > 0:
        rec = run_monte_carlo(state, H, zc, pr["trials"], pr["seed"], workers=workers)
    else:
        rec = run_ensemble(state, H, zc)
    gamma = compute_gamma(H, state)
    hdr = _header("zeno", cfg)
    if _wants(cfg, "csv"):
        write_record_csv(rec, out / "zeno.csv", hdr)
    if _wants(cfg, "json"):
        payload = {
            "tau": zc.tau,
            "N": zc.n,
            "T": zc.total_time,
            "gamma": gamma,
            "gamma_eff": _finite_or_none(rec.gamma_eff),
            "final_survival": rec.final_survival,
        }
        if gamma * zc.tau < 1:
            exact, approx = analytic_survival(gamma, zc.tau, zc.total_time)
            payload["analytic"] = {"exact_product": exact, "exponential_approx": approx}
        if rec.final_state is not None:
            payload["polarization_fidelity"] = polarization_fidelity(state.polarization, rec.final_state.polarization)
        if rec.trials is not None:
            payload["monte_carlo"] = {
                "successes": rec.trials.successes,
                "trials": rec.trials.trials,
                "seed": rec.trials.seed,
                "fraction": rec.trials.fraction,
            }
        _write_json(out / "zeno.json", payload, "zeno", cfg)


def cmd_tq(cfg: dict, out: Path, workers: int) -> None:
    an = cfg["analysis"]
    hdr = _header("tq", cfg)
    payload = {}
    if "transmission_csv" in an:
        lengths, trans = read_transmission_csv(an["transmission_csv"])
        table = detect_departure(lengths, trans, an["v_f"], an["tolerance"], an.get("n_baseline"))
    else:
        if "lengths" not in an:
            raise ConfigError("config key 'analysis.lengths': required by the tq command")
        _, bg, H, state = build_model(cfg)
        lengths = sorted(an["lengths"], reverse=True)
        table = tq_experiment(H, state, lengths, an["v_f"], an["tolerance"], an.get("n_baseline"))
        pr = cfg["protocol"]
        traj = evolve(state, H, pr["t_final"], pr["n_steps"], method=pr["method"])
        try:
            fit = fit_decay(traj, an["quad_window"], an["exp_window"], an["tolerance"], bg.recurrence_time)
            payload["decay_fit"] = {
                "gamma_fit": fit.gamma_fit,
                "gamma_exp": fit.gamma_exp,
                "prefactor": fit.prefactor,
                "T_q": fit.t_q,
                "quadratic_found": fit.quadratic_found,
                "exponential_found": fit.exponential_found,
            }
        except ValueError as exc:
            payload["decay_fit"] = {"error": str(exc)}
    if _wants(cfg, "csv"):
        write_tq_csv(table, out / "tq.csv", hdr)
    if _wants(cfg, "json"):
        payload.update({
            "T_q_estimate": table.t_q_estimate,
            "flagged_length": table.flagged_length,
            "baseline_gamma_exp": table.gamma_exp,
            "baseline_prefactor": table.prefactor,
        })
        _write_json(out / "tq.json", payload, "tq", cfg)


def cmd_qnd(cfg: dict, out: Path, workers: int) -> None:
    dev = build_device(cfg)
    report = homodyne_discriminate(dev.alpha_p, dev.theta, cfg["analysis"]["quadrature_angle"])
    (out / "qnd.json").write_text(report.to_json() + "\n")


def _plan_gamma(cfg: dict) -> float:
    if "gamma" in cfg["plan"]:
        return cfg["plan"]["gamma"]
    _, _, H, state = build_model(cfg)
    return compute_gamma(H, state)


def _require(cfg: dict, *keys: str):
    for k in keys:
        get_dotted(cfg, k)


def cmd_plan(cfg: dict, out: Path, workers: int) -> None:
    _require(cfg, "plan.L", "plan.T_q")
    pl = cfg["plan"]
    gamma = _plan_gamma(cfg)
    device = build_device(cfg)
    kw = dict(gamma_exp=pl.get("gamma_exp"), m_max=pl["m_max"], segment_transmission=pl["segment_transmission"])
    plan = plan_link(pl["L"], pl["v_f"], gamma, pl["T_q"], device, pl["M"], **kw)
    hdr = _header("plan", cfg)
    if _wants(cfg, "json"):
        _write_json(out / "plan.json", {"gamma": gamma, "plan": plan.to_dict()}, "plan", cfg)
    if _wants(cfg, "csv"):
        ms, _ = scan_device_counts(pl["L"], pl["v_f"], gamma, pl["T_q"], device.eta, pl["m_max"],
                                   pl["segment_transmission"])
        rows = [plan_link(pl["L"], pl["v_f"], gamma, pl["T_q"], device, int(m), **kw) for m in ms]
        write_link_csv(rows, out / "plan.csv", hdr)


def cmd_memory(cfg: dict, out: Path, workers: int) -> None:
    _require(cfg, "plan.loop_time")
    pl = cfg["plan"]
    mem = memory_loop(pl["loop_time"], pl["K"], _plan_gamma(cfg), build_device(cfg))
    hdr = _header("memory", cfg)
    if _wants(cfg, "json"):
        _write_json(out / "memory.json", mem.to_dict(), "memory", cfg)
    if _wants(cfg, "csv"):
        write_memory_csv(mem, out / "memory.csv", hdr)


HANDLERS = {
    "simulate": cmd_simulate,
    "zeno": cmd_zeno,
    "tq": cmd_tq,
    "qnd": cmd_qnd,
    "plan": cmd_plan,
    "memory": cmd_memory,
}


def derive_seed(seed: int, index: int) -> int:
    """Seed for sweep run `index`: seed XOR a hash of the index (independent of pool size)."""
    h = int.from_bytes(hashlib.sha256(str(index).encode()).digest()[:8], "little") & (2**63 - 1)
    return int(seed) ^ h


def _run_one(command: str, cfg: dict, out: str, workers: int) -> None:
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    HANDLERS[command](cfg, path, workers)


def _pool_size(requested: int) -> int:
    cap = os.environ.get("ZENOLINE_THREADS")
    n = max(1, requested)
    if cap:
        try:
            n = min(n, max(1, int(cap)))
        except ValueError:
            raise ConfigError(f"ZENOLINE_THREADS must be an integer, got {cap!r}")
    return n


def cmd_sweep(cfg: dict, out: Path, workers: int, key: str, values: list, command: str) -> None:
    if command not in HANDLERS:
        raise ConfigError(f"sweep command must be one of {sorted(HANDLERS)}")
    get_dotted(parse_config(set_dotted(cfg, key, values[0])), key)
    jobs = []
    for i, v in enumerate(values):
        run_cfg = parse_config(set_dotted(cfg, key, v))
        run_cfg["protocol"]["seed"] = derive_seed(cfg["protocol"]["seed"], i)
        jobs.append((command, run_cfg, str(out / f"run_{i:03d}"), 1))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for fut in [pool.submit(_run_one, *job) for job in jobs]:
                fut.result()
    else:
        for job in jobs:
            _run_one(*job)
    with open(out / "sweep.csv", "w", newline="") as fh:
        for line in _header("sweep", cfg):
            fh.write(f"# {line}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["index", "key", "value", "seed", "directory"])
        for i, (v, job) in enumerate(zip(values, jobs)):
            w.writerow([i, key, json.dumps(v), job[1]["protocol"]["seed"], f"run_{i:03d}"])


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="zenoline", description="Zeno suppression of single-photon loss.")
    parser.add_argument("--version", action="version", version=f"zenoline {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="{" + ",".join(COMMANDS) + "}")
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="JSON run configuration")
        p.add_argument("--seed", type=int, help="override protocol.seed")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override one config value by dotted path (repeatable)")
        p.add_argument("--out", help="output directory (overrides output.directory)")
        p.add_argument("--workers", type=int, default=1, help="worker pool size (capped by ZENOLINE_THREADS)")
        if name == "sweep":
            p.add_argument("--key", required=True, help="dotted config key to vary")
            p.add_argument("--values", required=True, help="JSON list of values")
            p.add_argument("--command", dest="sweep_command", default="zeno", choices=sorted(HANDLERS))
    return parser


def _effective_config(args) -> dict:
    cfg = load_config(args.config)
    raw = cfg
    for item in args.set:
        if "=" not in item:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        k, v = item.split("=", 1)
        raw = set_dotted(raw, k.strip(), v)
    if args.seed is not None:
        raw = set_dotted(raw, "protocol.seed", args.seed)
    if args.out is not None:
        raw = set_dotted(raw, "output.directory", args.out)
    return parse_config(raw)


def _write_meta(out: Path, argv: list[str], cfg: dict) -> None:
    meta = {
        "argv": argv,
        "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat(),
        "zenoline": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "config_sha256": config_hash(cfg),
        "config": cfg,
    }
    (out / "run.meta.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")


def run_cli(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else 0
    try:
        cfg = _effective_config(args)
        out = Path(cfg["output"]["directory"])
        out.mkdir(parents=True, exist_ok=True)
        workers = _pool_size(args.workers)
        if args.command == "sweep":
            try:
                values = json.loads(args.values)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"--values must be a JSON list: {exc}") from exc
            if not isinstance(values, list) or not values:
                raise ConfigError("--values must be a non-empty JSON list")
            cmd_sweep(cfg, out, workers, args.key, values, args.sweep_command)
        else:
            HANDLERS[args.command](cfg, out, workers)
        _write_meta(out, argv, cfg)
    except ConfigError as exc:
        print(f"zenoline: {exc}", file=sys.stderr)
        return 2
    except (NumericalError, FloatingPointError) as exc:
        print(f"zenoline: numerical failure: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"zenoline: invalid parameters: {exc}", file=sys.stderr)
        return 2
    return 0


def main() -> None:
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
