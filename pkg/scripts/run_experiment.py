"""
Command-line entry point: validate a scenario, run one or both communication
modes, compare them, or sweep the trigger parameters.

    python scripts/run_experiment.py validate [scenario.json]
    python scripts/run_experiment.py run [scenario.json] --mode event --seed 7 --out data/runs/demo
    python scripts/run_experiment.py compare [scenario.json]
    python scripts/run_experiment.py sweep [scenario.json] --plot off

Exit codes: 0 success, 2 validation failure, 3 runtime abort.
"""
from pathlib import Path
from typing import Optional, Tuple
import argparse
import sys

import numpy as np
import pandas as pd

sys.path.append(str(Path(__file__).parent.parent))
from config import DEFAULT_SCENARIO, RUNS_DIR, SHOW_PROGRESS, USE_ORACLE_CACHE
from scripts.artifacts import plot_topology, write_frame, write_manifest, write_run
from scripts.controller import Mode
from scripts.errors import GridMismatch, InfeasibleProgram, ScenarioError, ScenarioValidationError, SimulationAbort
from scripts.metrics import MetricsReport, compute_metrics
from scripts.oracle import OracleResult, build_program, cached_result, cross_check, solve_clairvoyant, store_result
from scripts.scenario import ScenarioSpec, load_scenario, oracle_key
from scripts.sim import Trajectory, run

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_ABORT = 3


def _grid_cross_check(prog, result: OracleResult, resolution: float):
    """Lattice search on small programs; disagreement is reported, not fatal."""
    try:
        check = cross_check(prog, result, resolution)
    except InfeasibleProgram as e:
        print(f"Warning: grid cross-check found no feasible lattice point: {e}")
        return
    if check is None:
        return
    result.grid_objective = check.grid.objective
    if check.agrees:
        print(f"  grid cross-check at resolution {resolution:g}: objective {check.grid.objective:.6g} (agrees)")
    else:
        print(
            f"Warning: grid objective {check.grid.objective:.6g} differs from the solver by "
            f"{check.difference:.3g}, more than the resolution gap {check.gap:.3g}"
        )


def solve_oracle(spec: ScenarioSpec, progress: bool = SHOW_PROGRESS, use_cache: bool = USE_ORACLE_CACHE) -> Tuple[OracleResult, bool]:
    """Clairvoyant y* for the scenario; returns (result, loaded_from_cache)."""
    key = oracle_key(spec)
    if use_cache:
        cached = cached_result(key)
        if cached is not None:
            print(f"Loaded clairvoyant benchmark from cache ({key[:12]})")
            return cached, True

    settings = spec.source.oracle
    print(f"Solving clairvoyant benchmark ({spec.oracle_samples} samples, {settings.iterations} iterations)...")
    prog = build_program(spec.costs, spec.constraints, spec.boxes, spec.horizon, spec.oracle_samples)
    result = solve_clairvoyant(prog, iters=settings.iterations, seed=settings.seed, progress=progress)
    print(f"  objective {result.objective:.6g}, max violation {result.max_violation:.2e}")
    _grid_cross_check(prog, result, settings.resolution)
    if use_cache:
        store_result(key, result)
    return result, False


def run_mode(spec: ScenarioSpec, mode, y_star, seed: Optional[int] = None, progress: bool = SHOW_PROGRESS) -> Tuple[Trajectory, MetricsReport]:
    traj = run(spec, mode=mode, seed=seed, progress=progress)
    report = compute_metrics(traj, y_star, spec, oracle_horizon=spec.horizon)
    return traj, report


def _report_line(report: MetricsReport) -> str:
    checks = report.bound_checks()
    held = sum(checks.values())
    return (
        f"  {report.mode.value}: regret {report.final_regret:.4g}, fit {report.final_fit:.4g}, "
        f"broadcasts {report.broadcasts}, bounds held {held}/{len(checks)}"
    )


def default_out_dir(spec: ScenarioSpec, label: str, seed: int) -> Path:
    return RUNS_DIR / f"{spec.name}_{label}_seed{seed}"


def run_experiment(
    spec: ScenarioSpec,
    mode="continuous",
    out_dir: Optional[Path] = None,
    seed: Optional[int] = None,
    plot: bool = True,
    progress: bool = SHOW_PROGRESS,
) -> int:
    """
    Oracle solve (cached), simulation, metrics and emission for one mode,
    or for both modes when mode == "both".

    Returns:
        EXIT_OK; module errors propagate to the caller
    """
    seed = spec.seed if seed is None else seed
    if mode == "both":
        compare_modes(spec, out_dir, seed=seed, plot=plot, progress=progress)
        return EXIT_OK

    mode = Mode.parse(mode)
    out_dir = Path(out_dir) if out_dir else default_out_dir(spec, mode.value, seed)
    oracle, from_cache = solve_oracle(spec, progress=progress)

    print(f"Running {spec.name} ({mode.value}, seed {seed})...")
    traj, report = run_mode(spec, mode, oracle.y_star, seed=seed, progress=progress)
    print(_report_line(report))

    files = list(write_run(out_dir, traj, report, plot=plot).values())
    if plot:
        files.append(plot_topology(spec, out_dir / "topology.svg"))
    manifest = write_manifest(
        out_dir, spec, seed, [mode.value],
        oracle={**oracle.to_dict(), "cached": from_cache, "samples": spec.oracle_samples},
        summaries={mode.value: report.summary()},
        files=files,
    )
    print(f"Saved outputs to: {out_dir}")
    print(f"Saved manifest to: {manifest}")
    return EXIT_OK


def compare_modes(
    spec: ScenarioSpec,
    out_dir: Optional[Path] = None,
    seed: Optional[int] = None,
    plot: bool = True,
    progress: bool = SHOW_PROGRESS,
) -> pd.DataFrame:
    """
    Both modes on identical initial states. Continuous mode counts one
    broadcast per agent per step; savings = 1 - triggered / continuous.
    """
    seed = spec.seed if seed is None else seed
    out_dir = Path(out_dir) if out_dir else default_out_dir(spec, "compare", seed)
    oracle, from_cache = solve_oracle(spec, progress=progress)

    rows, summaries, files = [], {}, []
    for mode in (Mode.CONTINUOUS, Mode.EVENT_TRIGGERED):
        print(f"Running {spec.name} ({mode.value}, seed {seed})...")
        traj, report = run_mode(spec, mode, oracle.y_star, seed=seed, progress=progress)
        print(_report_line(report))
        files.extend(write_run(out_dir, traj, report, plot=plot, prefix=f"{mode.value}_").values())
        summaries[mode.value] = report.summary()
        rows.append({
            "mode": mode.value,
            "final_regret": report.final_regret,
            "final_fit": report.final_fit,
            "final_fit_over_t": float(report.fit_over_time[-1]),
            "broadcasts": report.broadcasts,
        })

    table = pd.DataFrame(rows)
    baseline = table.loc[table["mode"] == Mode.CONTINUOUS.value, "broadcasts"].iloc[0]
    table["broadcast_ratio"] = table["broadcasts"] / baseline if baseline else np.nan
    table["savings_ratio"] = 1.0 - table["broadcast_ratio"]
    files.append(write_frame(table, out_dir / "comparison.csv"))
    if plot:
        files.append(plot_topology(spec, out_dir / "topology.svg"))
    write_manifest(
        out_dir, spec, seed, [m.value for m in Mode],
        oracle={**oracle.to_dict(), "cached": from_cache, "samples": spec.oracle_samples},
        summaries=summaries,
        files=files,
    )
    print(table.to_string(index=False))
    print(f"Saved comparison to: {out_dir / 'comparison.csv'}")
    return table


def sweep(
    spec: ScenarioSpec,
    out_dir: Optional[Path] = None,
    seed: Optional[int] = None,
    plot: bool = True,
    progress: bool = SHOW_PROGRESS,
) -> pd.DataFrame:
    """Event-triggered runs over the scenario's sigma x iota grid."""
    seed = spec.seed if seed is None else seed
    out_dir = Path(out_dir) if out_dir else default_out_dir(spec, "sweep", seed)
    oracle, from_cache = solve_oracle(spec, progress=progress)
    continuous_broadcasts = spec.N * spec.steps

    rows, files = [], []
    grid = [(s, i) for s in spec.source.sweep.sigma for i in spec.source.sweep.iota]
    for sigma, iota in grid:
        variant = spec.with_params(sigma=sigma, iota=iota)
        print(f"Running {spec.name} (event_triggered, sigma {sigma:g}, iota {iota:g})...")
        traj, report = run_mode(variant, Mode.EVENT_TRIGGERED, oracle.y_star, seed=seed, progress=progress)
        checks = report.bound_checks()
        rows.append({
            "sigma": sigma,
            "iota": iota,
            "final_regret": report.final_regret,
            "final_fit": report.final_fit,
            "broadcasts": report.broadcasts,
            "savings_ratio": 1.0 - report.broadcasts / continuous_broadcasts,
            "regret_bound_held": checks.get("regret:event_triggered", False),
            "fit_bound_held": checks.get("fit:event_triggered", False),
        })
        if plot:
            files.extend(write_run(out_dir, traj, report, plot=True, prefix=f"sigma{sigma:g}_iota{iota:g}_").values())

    table = pd.DataFrame(rows)
    files.append(write_frame(table, out_dir / "sweep.csv"))
    write_manifest(
        out_dir, spec, seed, [Mode.EVENT_TRIGGERED.value],
        oracle={**oracle.to_dict(), "cached": from_cache, "samples": spec.oracle_samples},
        summaries={"sweep": rows},
        files=files,
    )
    print(table.to_string(index=False))
    print(f"Saved sweep to: {out_dir / 'sweep.csv'}")
    return table


def validate(path) -> ScenarioSpec:
    spec = load_scenario(path)
    print(f"✅ {path}: {spec.N} agents, q = {spec.q}, output dims {tuple(spec.output_dims)}")
    print(f"   K_f = {spec.K_f:.6g}, K_g = {spec.K_g:.6g}, K_mu = {spec.params.k_mu:.6g}"
          f"{' (auto)' if spec.k_mu_auto else ''}, {spec.steps} steps of {spec.step:g}")
    return spec


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description="Distributed online saddle-point controller experiments")
    verbs = parser.add_subparsers(dest="verb", required=True)

    for name, help_text in (
        ("validate", "Parse the scenario and check every standing assumption"),
        ("run", "Run one communication mode (or both) and emit CSV/SVG outputs"),
        ("compare", "Run both modes on identical seeds and tabulate broadcast savings"),
        ("sweep", "Run the event-triggered mode over the scenario's sigma/iota grid"),
    ):
        sub = verbs.add_parser(name, help=help_text)
        sub.add_argument("scenario", nargs="?", default=str(DEFAULT_SCENARIO), help="Scenario JSON file")
        if name == "validate":
            continue
        if name == "run":
            sub.add_argument("--mode", choices=["continuous", "event", "both"], default=None,
                             help="Communication mode (default: the scenario's)")
        sub.add_argument("--seed", type=int, default=None, help="Initial-state seed (default: the scenario's)")
        sub.add_argument("--out", type=Path, default=None, help="Output directory")
        sub.add_argument("--plot", choices=["on", "off"], default="on", help="Emit SVG plots")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        spec = validate(args.scenario)
    except (FileNotFoundError, ScenarioError, ScenarioValidationError) as e:
        print(f"❌ {e}")
        return EXIT_INVALID
    if args.verb == "validate":
        return EXIT_OK

    if args.seed is not None and args.seed < 0:
        print(f"❌ seed must be nonnegative, got {args.seed}")
        return EXIT_INVALID

    plot = args.plot == "on"
    try:
        if args.verb == "run":
            mode = args.mode or spec.params.mode.value
            return run_experiment(spec, mode, args.out, seed=args.seed, plot=plot)
        if args.verb == "compare":
            compare_modes(spec, args.out, seed=args.seed, plot=plot)
        else:
            sweep(spec, args.out, seed=args.seed, plot=plot)
        return EXIT_OK
    except (SimulationAbort, InfeasibleProgram, GridMismatch) as e:
        print(f"❌ Run aborted: {e}")
        return EXIT_ABORT


if __name__ == "__main__":
    sys.exit(main())
