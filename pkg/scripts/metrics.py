"""
Regret, fit and communication statistics of a simulated trajectory.

regret R^T = int_0^T (f(t, y(t)) - f(t, y*)) dt
fit    F^T = || [ int_0^T sum_i g_i(t, y_i(t)) dt ]_+ ||

Integrals use the trapezoid rule on the simulation grid.
"""
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional
import sys

import numpy as np
import pandas as pd
from scipy.integrate import cumulative_trapezoid

sys.path.append(str(Path(__file__).parent.parent))
from config import BOUND_DISCRETIZATION_C, BOUND_RELATIVE_SLACK
from scripts.controller import Mode
from scripts.errors import GridMismatch


@dataclass(eq=False)
class ZenoStats:
    agent: int
    count: int
    gaps: np.ndarray
    saturated: bool
    one_step_share: Optional[float] = None  # fraction of gaps equal to a single step

    @property
    def min_gap(self) -> Optional[float]:
        return float(self.gaps.min()) if self.gaps.size else None

    @property
    def mean_gap(self) -> Optional[float]:
        return float(self.gaps.mean()) if self.gaps.size else None


@dataclass(eq=False)
class MetricsReport:
    mode: Mode
    times: np.ndarray
    regret_curve: np.ndarray
    fit_curve: np.ndarray
    fit_components: np.ndarray        # (K+1, q), before the positive part
    cost: np.ndarray
    cost_star: np.ndarray
    disagreement: np.ndarray
    energy: np.ndarray
    trigger_counts: np.ndarray
    min_gaps: List[Optional[float]]
    broadcasts: int
    bound_overlays: Dict[str, np.ndarray] = field(default_factory=dict)
    step: float = 0.0

    @property
    def fit_over_time(self) -> np.ndarray:
        """F^T / T, with 0 at T = 0."""
        out = np.zeros_like(self.fit_curve)
        out[1:] = self.fit_curve[1:] / self.times[1:]
        return out

    @property
    def final_regret(self) -> float:
        return float(self.regret_curve[-1])

    @property
    def final_fit(self) -> float:
        return float(self.fit_curve[-1])

    def slack(self, bound: np.ndarray) -> np.ndarray:
        """Allowance for the Euler discretization: a relative share plus C h T."""
        return BOUND_RELATIVE_SLACK * np.abs(bound) + BOUND_DISCRETIZATION_C * self.step * self.times

    def bound_checks(self) -> Dict[str, bool]:
        """Whether each overlay dominates its curve (plus slack) at every grid point."""
        curves = {"regret": self.regret_curve, "fit": self.fit_curve, "negative_regret": -self.regret_curve}
        checks = {}
        for name, bound in self.bound_overlays.items():
            curve = curves[name.split(":", 1)[0]]
            checks[name] = bool(np.all(curve <= bound + self.slack(bound)))
        return checks

    def to_frame(self) -> pd.DataFrame:
        data = {
            "t": self.times,
            "regret": self.regret_curve,
            "fit": self.fit_curve,
            "fit_over_t": self.fit_over_time,
        }
        for j in range(self.fit_components.shape[1]):
            data[f"F_{j + 1}"] = self.fit_components[:, j]
        data["cost"] = self.cost
        data["cost_star"] = self.cost_star
        data["disagreement"] = self.disagreement
        data["energy"] = self.energy
        for name, bound in self.bound_overlays.items():
            data[f"bound_{name.replace(':', '_')}"] = bound
        return pd.DataFrame(data)

    def summary(self) -> dict:
        return {
            "mode": self.mode.value,
            "final_regret": self.final_regret,
            "final_fit": self.final_fit,
            "final_fit_over_t": float(self.fit_over_time[-1]),
            "broadcasts": self.broadcasts,
            "trigger_counts": self.trigger_counts.tolist(),
            "min_gaps": self.min_gaps,
            "bound_checks": self.bound_checks(),
        }


def bound_overlays(y0, y_star, scenario, mode: Mode, times: np.ndarray) -> Dict[str, np.ndarray]:
    """
    Right-hand sides of the regret and fit guarantees on the grid.

    Keys are "<curve>:<name>", where curve is the quantity the bound caps.
    """
    eps = scenario.params.epsilon
    N = scenario.N
    dist = float(np.linalg.norm(np.asarray(y0) - np.asarray(y_star)))
    ones = np.ones_like(times)

    regret = dist ** 2 / (2.0 * eps) * ones
    fit = np.sqrt(N) * dist / eps + 2.0 * N * np.sqrt(scenario.K_f / eps) * np.sqrt(times)
    overlays = {
        "regret:continuous": regret,
        "fit:continuous": fit,
        "negative_regret:cost_gap": 2.0 * N * scenario.K_f * times,
    }
    if mode is Mode.EVENT_TRIGGERED:
        sigma, iota = scenario.params.sigma, scenario.params.iota
        overlays["regret:event_triggered"] = regret + sigma / iota
        overlays["fit:event_triggered"] = fit + np.sqrt(2.0 * N * sigma / (eps * iota))
    return overlays


def compute_metrics(traj, y_star, scenario, oracle_horizon: Optional[float] = None) -> MetricsReport:
    """
    Args:
        traj: Trajectory from sim.run
        y_star: stacked clairvoyant output, length sum_i p_i
        scenario: the ScenarioSpec traj was run on
        oracle_horizon: horizon the oracle program was sampled on, if known

    Raises:
        GridMismatch: trajectory grid differs from the scenario's, or the oracle
            was solved on another horizon
    """
    expected = scenario.times
    if traj.times.shape != expected.shape or not np.allclose(traj.times, expected, rtol=0, atol=1e-9):
        raise GridMismatch(
            f"trajectory has {traj.times.size} grid points up to {traj.horizon:g}, "
            f"scenario expects {expected.size} up to {scenario.horizon:g}"
        )
    if oracle_horizon is not None and not np.isclose(oracle_horizon, traj.horizon, rtol=0, atol=1e-9):
        raise GridMismatch(f"oracle sampled [0, {oracle_horizon:g}], trajectory covers [0, {traj.horizon:g}]")

    y_star = np.asarray(y_star, dtype=float).reshape(-1)
    if y_star.size != sum(scenario.output_dims):
        raise ValueError(f"y_star has {y_star.size} entries, expected {sum(scenario.output_dims)}")

    times = traj.times
    edges = np.concatenate([[0], np.cumsum(scenario.output_dims)])
    star_parts = [y_star[a:b] for a, b in zip(edges[:-1], edges[1:])]
    cost_star = np.sum([agent.cost.values_along(times, ys) for agent, ys in zip(scenario.agents, star_parts)], axis=0)

    regret = cumulative_trapezoid(traj.cost - cost_star, times, initial=0.0)
    components = cumulative_trapezoid(traj.aggregated_constraint, times, axis=0, initial=0.0)
    fit = np.linalg.norm(np.maximum(components, 0.0), axis=1)

    Y = traj.stacked_outputs()
    energy = 0.5 * np.sum((Y - y_star) ** 2, axis=1) + 0.5 * np.sum(traj.multipliers ** 2, axis=(1, 2))

    stats = zeno_report(traj)
    return MetricsReport(
        mode=traj.mode,
        times=times,
        regret_curve=regret,
        fit_curve=fit,
        fit_components=components,
        cost=traj.cost,
        cost_star=cost_star,
        disagreement=traj.disagreement,
        energy=energy,
        trigger_counts=traj.trigger_counts,
        min_gaps=[s.min_gap for s in stats],
        broadcasts=traj.broadcasts,
        bound_overlays=bound_overlays(traj.initial_output, y_star, scenario, traj.mode, times),
        step=traj.step,
    )


def zeno_report(traj) -> List[ZenoStats]:
    """
    Inter-event statistics per agent. An agent is flagged saturated when it
    fired on every step, which this grid cannot tell apart from continuous
    communication. one_step_share shows how close to that it came.
    """
    report = []
    for i, steps in enumerate(traj.trigger_steps):
        step_gaps = np.diff(steps)
        report.append(ZenoStats(
            agent=i,
            count=int(steps.size),
            gaps=step_gaps * traj.step,
            saturated=steps.size >= traj.steps,
            one_step_share=float(np.mean(step_gaps == 1)) if step_gaps.size else None,
        ))
    return report


def zeno_frame(stats: List[ZenoStats]) -> pd.DataFrame:
    return pd.DataFrame(
        [
            {"agent": s.agent, "count": s.count, "min_gap": s.min_gap, "mean_gap": s.mean_gap,
             "one_step_share": s.one_step_share, "saturated": s.saturated}
            for s in stats
        ]
    )
