"""Deterministic flat-file output: trajectory CSV, report JSON, plot specs.

Numbers are written as '%.9e' text so output is byte-stable across runs
and platforms and round-trips well inside 1e-9 relative error.
"""
from __future__ import annotations

import json
import os

import numpy as np

from .engine import Trajectory
from .experiments import ExperimentReport, SweepGrid

__all__ = ["write_trajectory_csv", "read_trajectory_csv", "write_report_json",
           "write_sweep_csv", "write_plot_spec", "FMT"]

FMT = "%.9e"


def trajectory_header(traj: Trajectory) -> str:
    cols = ["t"]
    for met_id in traj.ids:
        cols += [f"{met_id}_theta", f"{met_id}_tip_x", f"{met_id}_tip_y"]
    cols += ["plat_x", "plat_y"]
    return ",".join(cols)


def write_trajectory_csv(traj: Trajectory, path: str) -> str:
    """One row per sample: time, per-metronome angle and tip position,
    platform position. Byte-stable for identical trajectories."""
    tip = traj.tip
    n_s, n_m = traj.theta.shape
    cols = [traj.times]
    for j in range(n_m):
        cols += [traj.theta[:, j], tip[:, j, 0], tip[:, j, 1]]
    cols += [traj.platform_pos[:, 0], traj.platform_pos[:, 1]]
    table = np.column_stack(cols)
    with open(path, "w", newline="\n") as fh:
        fh.write(trajectory_header(traj) + "\n")
        for row in table:
            fh.write(",".join(FMT % v for v in row) + "\n")
    return path


def read_trajectory_csv(path: str) -> tuple[list[str], np.ndarray]:
    """(column names, data array); inverse of write_trajectory_csv."""
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    if data.size == 0:
        data = data.reshape(0, len(header))
    return header, data


def write_report_json(report: ExperimentReport, path: str) -> str:
    with open(path, "w") as fh:
        json.dump(report.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def write_sweep_csv(grid: SweepGrid, path: str) -> str:
    """Long-format sweep table: platform_mass, detuning_hz, verdict, psi."""
    with open(path, "w", newline="\n") as fh:
        fh.write("platform_mass,detuning_hz,verdict,psi\n")
        for i, mass in enumerate(grid.platform_masses):
            for j, det in enumerate(grid.detunings_hz):
                psi = grid.psi[i][j]
                fh.write("%s,%s,%s,%s\n" % (FMT % mass, FMT % det,
                                            grid.verdicts[i][j],
                                            FMT % psi if psi is not None else ""))
    return path


def write_plot_spec(out_dir: str, name: str, traj: Trajectory,
                    extra_plots: list[dict] | None = None) -> str:
    """Small JSON description of suggested plots over the emitted CSV;
    rendering is left to external tools."""
    csv_name = f"{name}.csv"
    plots = [
        {"title": "tip coordinates", "kind": "line", "x": "t",
         "y": [f"{mid}_tip_x" for mid in traj.ids]},
        {"title": "platform orbit", "kind": "scatter", "x": "plat_x",
         "y": ["plat_y"]},
    ]
    if len(traj.ids) >= 2:
        a, b = traj.ids[0], traj.ids[1]
        plots.append({"title": f"lissajous {a} vs {b}", "kind": "scatter",
                      "x": f"{a}_tip_x", "y": [f"{b}_tip_y"]})
    spec = {"csv": csv_name, "sample_rate": traj.sample_rate,
            "plots": plots + (extra_plots or [])}
    path = os.path.join(out_dir, f"{name}.plot.json")
    with open(path, "w") as fh:
        json.dump(spec, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path
