#!/usr/bin/env python3
"""Render a swarm run directory (trajectory.csv / center.csv / series.csv)
into two PNGs: agent trajectories with the center path, and dispersion
against the rho^2 bound.

Usage: plot_swarm.py RUN_DIR [--out-dir docs] [--name NAME]

Only the first two coordinates are drawn; higher-dimensional runs are
projected. The scenario name defaults to the run directory's basename.
"""

import argparse
import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np


def read_csv(path: Path) -> tuple[list[str], np.ndarray]:
    with path.open(newline="") as fh:
        rows = list(csv.reader(fh))
    header, data = rows[0], rows[1:]
    return header, np.array(data, dtype=float)


def load_run(run_dir: Path):
    _, traj = read_csv(run_dir / "trajectory.csv")
    _, center = read_csv(run_dir / "center.csv")
    _, series = read_csv(run_dir / "series.csv")
    agents = traj[:, 1].astype(int)
    n_agents = agents.max() + 1
    # Row blocks are (sample, agent); reshape to (samples, agents, dim).
    positions = traj[:, 2:].reshape(-1, n_agents, traj.shape[1] - 2)
    return positions, center, series


def plot_trajectories(positions, center, name: str, out: Path):
    fig, ax = plt.subplots(figsize=(6.4, 6.4))
    n_agents = positions.shape[1]
    cmap = plt.get_cmap("viridis")
    for i in range(n_agents):
        ax.plot(
            positions[:, i, 0],
            positions[:, i, 1],
            color=cmap(i / max(n_agents - 1, 1)),
            linewidth=0.7,
            alpha=0.6,
        )
    ax.scatter(
        positions[0, :, 0], positions[0, :, 1],
        marker="o", s=18, facecolors="none", edgecolors="gray", label="start",
    )
    ax.scatter(
        positions[-1, :, 0], positions[-1, :, 1],
        marker="o", s=18, color="black", label="end",
    )
    ax.plot(center[:, 1], center[:, 2], color="crimson", linewidth=1.8, label="center")
    ax.set_xlabel("x0")
    ax.set_ylabel("x1")
    ax.set_title(f"{name}: agent trajectories")
    ax.set_aspect("equal", adjustable="datalim")
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(out, dpi=150)
    plt.close(fig)


def plot_dispersion(series, name: str, out: Path):
    t, dispersion, rho_sq = series[:, 0], series[:, 2], series[:, 3]
    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    ax.plot(t, dispersion, color="tab:blue", label="dispersion")
    ax.axhline(rho_sq[0], color="crimson", linestyle="--", label=r"$\rho^2$ bound")
    ax.set_yscale("log")
    ax.set_xlabel("t [s]")
    ax.set_ylabel("sum of squared distances to center")
    ax.set_title(f"{name}: dispersion vs bound")
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(out, dpi=150)
    plt.close(fig)


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("run_dir", type=Path)
    parser.add_argument("--out-dir", type=Path, default=Path("docs"))
    parser.add_argument("--name", default=None)
    args = parser.parse_args()

    name = args.name or args.run_dir.name
    positions, center, series = load_run(args.run_dir)
    args.out_dir.mkdir(parents=True, exist_ok=True)

    traj_png = args.out_dir / f"{name}-trajectories.png"
    disp_png = args.out_dir / f"{name}-dispersion.png"
    plot_trajectories(positions, center, name, traj_png)
    plot_dispersion(series, name, disp_png)
    print(traj_png)
    print(disp_png)


if __name__ == "__main__":
    main()
