"""
CSV, SVG and manifest emission for one experiment directory.

CSV columns
-----------
trajectory.csv : t, y_<i>_<k> (agent i, component k), mu_<i>_<j>, g_sum_<j>,
                 cost, disagreement, overshoot_<i>
metrics.csv    : t, regret, fit, fit_over_t, F_<j>, cost, cost_star,
                 disagreement, energy, bound_<curve>_<name>
triggers.csv   : agent, step, t   (event-triggered runs only)
zeno.csv       : agent, count, min_gap, mean_gap, saturated
"""
from pathlib import Path
from typing import Dict, Iterable, Optional
import json
import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import networkx as nx
import numpy as np
import pandas as pd

sys.path.append(str(Path(__file__).parent.parent))
from scripts.controller import Mode
from scripts.metrics import MetricsReport, zeno_frame, zeno_report
from scripts.scenario import ScenarioSpec, scenario_hash
from scripts.sim import Trajectory


def trajectory_frame(traj: Trajectory) -> pd.DataFrame:
    data = {"t": traj.times}
    for i, y in enumerate(traj.outputs):
        for k in range(y.shape[1]):
            data[f"y_{i}_{k}"] = y[:, k]
    for i in range(traj.N):
        for j in range(traj.multipliers.shape[2]):
            data[f"mu_{i}_{j}"] = traj.multipliers[:, i, j]
    for j in range(traj.aggregated_constraint.shape[1]):
        data[f"g_sum_{j}"] = traj.aggregated_constraint[:, j]
    data["cost"] = traj.cost
    data["disagreement"] = traj.disagreement
    for i in range(traj.N):
        data[f"overshoot_{i}"] = traj.overshoot[:, i]
    return pd.DataFrame(data)


def triggers_frame(traj: Trajectory) -> pd.DataFrame:
    rows = [
        {"agent": i, "step": int(s), "t": float(s * traj.step)}
        for i, steps in enumerate(traj.trigger_steps)
        for s in steps
    ]
    return pd.DataFrame(rows, columns=["agent", "step", "t"])


def write_frame(frame: pd.DataFrame, path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False)
    return path


def _svg_metadata(title: str, data: dict) -> dict:
    return {"Title": title, "Description": json.dumps(data, sort_keys=True)}


def plot_regret_fit(report: MetricsReport, path: Path, title: str = "") -> Path:
    """Regret and F^T/T side by side, with the regret/fit guarantees dashed."""
    fig, (ax_r, ax_f) = plt.subplots(1, 2, figsize=(11, 4))
    ax_r.plot(report.times, report.regret_curve, label="regret")
    ax_f.plot(report.times, report.fit_over_time, label="fit / T")
    for name, bound in report.bound_overlays.items():
        curve, label = name.split(":", 1)
        if curve == "regret":
            ax_r.plot(report.times, bound, "--", linewidth=1, label=f"bound ({label})")
        elif curve == "fit":
            scaled = np.zeros_like(bound)
            scaled[1:] = bound[1:] / report.times[1:]
            ax_f.plot(report.times[1:], scaled[1:], "--", linewidth=1, label=f"bound / T ({label})")
    ax_r.set_xlabel("$T$")
    ax_r.set_ylabel("$R^T$")
    ax_f.set_xlabel("$T$")
    ax_f.set_ylabel("$F^T / T$")
    ax_f.set_yscale("symlog", linthresh=1e-3)
    for ax in (ax_r, ax_f):
        ax.grid(True, alpha=0.3)
        ax.legend(fontsize=8)
    fig.suptitle(title or f"Regret and fit ({report.mode.value})")
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata=_svg_metadata("regret_fit", report.summary()))
    plt.close(fig)
    return Path(path)


def plot_triggers(traj: Trajectory, path: Path) -> Path:
    """Raster of broadcast instants, one row per agent."""
    fig, ax = plt.subplots(figsize=(10, 0.5 + 0.6 * traj.N))
    for i, instants in enumerate(traj.trigger_times):
        if instants.size:
            ax.eventplot(instants, lineoffsets=i, linelengths=0.7, linewidths=0.6)
    ax.set_yticks(np.arange(traj.N))
    ax.set_yticklabels([f"agent {i}" for i in range(traj.N)])
    ax.set_xlim(0.0, traj.horizon)
    ax.set_xlabel("$t$")
    ax.set_title("Triggering instants")
    fig.tight_layout()
    counts = {"trigger_counts": traj.trigger_counts.tolist(), "step": traj.step}
    fig.savefig(path, format="svg", metadata=_svg_metadata("triggers", counts))
    plt.close(fig)
    return Path(path)


def plot_topology(spec: ScenarioSpec, path: Path) -> Path:
    fig, ax = plt.subplots(figsize=(4, 4))
    g = spec.graph.to_networkx()
    labels = {a.index: a.name for a in spec.agents}
    nx.draw_networkx(g, pos=nx.circular_layout(g), labels=labels, ax=ax, node_color="#cfe2f3", font_size=8)
    ax.set_axis_off()
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata=_svg_metadata("topology", {"edges": spec.graph.edges}))
    plt.close(fig)
    return Path(path)


def write_run(
    out_dir: Path,
    traj: Trajectory,
    report: MetricsReport,
    plot: bool = True,
    prefix: str = "",
) -> Dict[str, Path]:
    """
    Emit one mode's CSVs (and SVGs) into out_dir.

    prefix distinguishes the two modes when both share a directory.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    files = {
        "trajectory": write_frame(trajectory_frame(traj), out_dir / f"{prefix}trajectory.csv"),
        "metrics": write_frame(report.to_frame(), out_dir / f"{prefix}metrics.csv"),
    }
    if traj.mode is Mode.EVENT_TRIGGERED:
        files["triggers"] = write_frame(triggers_frame(traj), out_dir / f"{prefix}triggers.csv")
        files["zeno"] = write_frame(zeno_frame(zeno_report(traj)), out_dir / f"{prefix}zeno.csv")
    if plot:
        files["regret_fit"] = plot_regret_fit(report, out_dir / f"{prefix}regret_fit.svg")
        if traj.mode is Mode.EVENT_TRIGGERED:
            files["triggers_plot"] = plot_triggers(traj, out_dir / f"{prefix}triggers.svg")
    return files


def write_manifest(
    out_dir: Path,
    spec: ScenarioSpec,
    seed: int,
    modes: Iterable[str],
    oracle: Optional[dict] = None,
    summaries: Optional[dict] = None,
    files: Optional[Iterable[Path]] = None,
) -> Path:
    """
    manifest.json: scenario hash, seed, modes, resolved parameters, oracle
    result, per-mode summaries, emitted files and the canonical scenario echo
    (loadable again with load_scenario).
    """
    params = spec.params
    manifest = {
        "scenario_name": spec.name,
        "scenario_hash": scenario_hash(spec),
        "seed": seed,
        "modes": list(modes),
        "parameters": {
            "epsilon": params.epsilon,
            "k_mu": params.k_mu,
            "k_mu_auto": spec.k_mu_auto,
            "sigma": params.sigma,
            "iota": params.iota,
            "horizon": spec.horizon,
            "step": spec.step,
            "K_f": spec.K_f,
            "K_g": spec.K_g,
        },
        "oracle": oracle,
        "summaries": summaries or {},
        "files": sorted(Path(f).name for f in (files or [])),
        "scenario": spec.to_dict(),
    }
    path = Path(out_dir) / "manifest.json"
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(manifest, f, indent=2, sort_keys=True)
    return path
