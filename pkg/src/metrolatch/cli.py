"""Command-line front end.

Subcommands:
  simulate    integrate a configured assembly, write trajectory CSV + plot spec
  experiment  run a canned scenario (sync | shil | latch) and write its report
  sweep       lock-range scan over detuning x platform mass
  calibrate   tune a pendulum length to a target frequency
  serve       live websocket bench for the browser UI
"""
from __future__ import annotations

import argparse
import asyncio
import json
import math
import os
import sys

from .assembly import AssemblyConfig, MetronomeParams, build_assembly
from .calibrate import calibrate_frequency, measure_limit_cycle
from .config import ConfigError, parse_config
from .csvio import (write_plot_spec, write_report_json, write_sweep_csv,
                    write_trajectory_csv)
from .engine import integrate
from .events import Event, EventSchedule
from .experiments import (LatchProtocol, SweepGrid, initial_state,
                          run_latch_experiment, run_shil_demo, run_sync_demo,
                          sweep_arnold_tongue)
from .serve import LiveBench


def _load_config(path: str | None, default_preset: str | None = None) -> AssemblyConfig:
    if path is None:
        if default_preset is None:
            raise SystemExit("error: --config is required for this command")
        return AssemblyConfig(preset=default_preset)
    with open(path) as fh:
        return parse_config(fh.read())


def _load_events(path: str | None) -> EventSchedule:
    if path is None:
        return EventSchedule()
    with open(path) as fh:
        raw = json.load(fh)
    events = []
    for i, ev in enumerate(raw):
        kw = {}
        for key in ("duration", "fraction", "d_theta_dot"):
            if key in ev:
                kw[key] = float(ev[key])
        events.append(Event(float(ev["time"]), ev["target"], ev["kind"], **kw))
    return EventSchedule(tuple(events))


def _ensure_out(args) -> str:
    os.makedirs(args.out_dir, exist_ok=True)
    return args.out_dir


def cmd_simulate(args) -> int:
    cfg = _load_config(args.config)
    assembly = build_assembly(cfg)
    state = initial_state(assembly, args.seed if args.seed is not None else cfg.seed)
    schedule = _load_events(args.events)
    traj = integrate(assembly, state, schedule, 0.0, args.duration,
                     args.dt, args.sample_rate)
    out = _ensure_out(args)
    csv_path = write_trajectory_csv(traj, os.path.join(out, "trajectory.csv"))
    spec_path = write_plot_spec(out, "trajectory", traj)
    print(f"wrote {csv_path} ({len(traj.times)} samples) and {spec_path}")
    return 0


def cmd_experiment(args) -> int:
    seed = args.seed if args.seed is not None else 1
    if args.name == "sync":
        report = run_sync_demo(seed=seed, duration=args.duration or 120.0,
                               fixed_platform=args.fixed_platform)
    elif args.name == "shil":
        report = run_shil_demo(seed=seed, duration=args.duration or 60.0,
                               fixed_platform=args.fixed_platform)
    elif args.name == "latch":
        protocol = LatchProtocol() if args.duration is None else \
            LatchProtocol(t_end=args.duration)
        report = run_latch_experiment(protocol, seed=seed)
    else:
        raise SystemExit(f"unknown experiment {args.name!r}")
    out = _ensure_out(args)
    if report.trajectory is not None:
        csv_path = write_trajectory_csv(
            report.trajectory, os.path.join(out, f"{args.name}.csv"))
        report.artifacts["trajectory_csv"] = csv_path
        write_plot_spec(out, args.name, report.trajectory)
    path = write_report_json(report, os.path.join(out, f"{args.name}.report.json"))
    print(f"{args.name}: ok={report.ok} checks="
          f"{sum(report.checks.values())}/{len(report.checks)} -> {path}")
    return 0 if report.ok else 1


def cmd_sweep(args) -> int:
    grid = SweepGrid(
        detunings_hz=tuple(float(x) for x in args.detunings.split(",")),
        platform_masses=tuple(float(x) for x in args.masses.split(",")),
        duration=args.duration or 60.0,
        seed=args.seed if args.seed is not None else 7,
    )
    sweep_arnold_tongue(grid)
    out = _ensure_out(args)
    path = write_sweep_csv(grid, os.path.join(out, "sweep.csv"))
    widths = grid.lock_width_by_mass()
    for mass, width in zip(grid.platform_masses, widths):
        print(f"  M={mass:g} kg: lock width {width:g} Hz")
    print(f"wrote {path}")
    return 0


def cmd_calibrate(args) -> int:
    params = MetronomeParams(
        id="cal", length_L=1.0, damping_gamma=args.damping,
        escapement_eps=args.eps, ref_angle_theta_ref=math.radians(args.theta_ref_deg))
    tuned = calibrate_frequency(params, args.target_f, tol=args.tol)
    cycle = measure_limit_cycle(tuned)
    print(json.dumps({
        "target_frequency_hz": args.target_f,
        "length_m": tuned.length_L,
        "measured_frequency_hz": cycle.frequency,
        "limit_cycle_amplitude_rad": cycle.amplitude,
    }, indent=2))
    return 0


def cmd_serve(args) -> int:
    cfg = _load_config(args.config, default_preset="paper_latch")
    assembly = build_assembly(cfg)
    seed = args.seed if args.seed is not None else cfg.seed
    bench = LiveBench(assembly, seed=seed, dt=args.dt,
                      stream_rate=args.sample_rate, speed=args.speed,
                      t_end=args.duration)
    print(f"serving ws://127.0.0.1:{args.port} "
          f"(speed x{args.speed}, stream {args.sample_rate} Hz); Ctrl-C stops")
    try:
        asyncio.run(bench.run_forever(port=args.port))
    except KeyboardInterrupt:
        pass
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="metrolatch",
        description="coupled-metronome bench: simulation, experiments, live serve")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, duration_default=None):
        p.add_argument("--config", help="assembly config JSON")
        p.add_argument("--out-dir", default="out", help="output directory")
        p.add_argument("--dt", type=float, default=1e-3)
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--duration", type=float, default=duration_default)
        p.add_argument("--sample-rate", type=float, default=60.0)

    p = sub.add_parser("simulate", help="integrate and dump a trajectory")
    common(p, duration_default=60.0)
    p.add_argument("--events", help="event schedule JSON "
                   '(array of {"time", "target", "kind", ...})')
    p.set_defaults(fn=cmd_simulate)

    p = sub.add_parser("experiment", help="run a canned scenario")
    p.add_argument("name", choices=["sync", "shil", "latch"])
    common(p)
    p.add_argument("--fixed-platform", action="store_true",
                   help="control variant with the platform bolted down")
    p.set_defaults(fn=cmd_experiment)

    p = sub.add_parser("sweep", help="lock range over detuning x platform mass")
    common(p)
    p.add_argument("--detunings", default="-0.04,-0.02,0,0.02,0.04",
                   help="comma-separated injector detunings in Hz")
    p.add_argument("--masses", default="0.3,0.34,0.38,0.45,0.6",
                   help="comma-separated platform masses in kg")
    p.set_defaults(fn=cmd_sweep)

    p = sub.add_parser("calibrate", help="tune pendulum length to a frequency")
    p.add_argument("--target-f", type=float, required=True)
    p.add_argument("--tol", type=float, default=1e-4)
    p.add_argument("--eps", type=float, default=0.5)
    p.add_argument("--damping", type=float, default=0.01)
    p.add_argument("--theta-ref-deg", type=float, default=30.0)
    p.set_defaults(fn=cmd_calibrate)

    p = sub.add_parser("serve", help="live websocket bench")
    common(p)
    p.add_argument("--port", type=int, default=8765)
    p.add_argument("--speed", type=float, default=1.0,
                   help="sim seconds per wall second (0 pauses)")
    p.set_defaults(fn=cmd_serve)

    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
