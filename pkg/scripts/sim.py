"""
Synchronous-round simulation of all agents' closed loops.

Every round reads one immutable snapshot of the multipliers (continuous
mode) or of the broadcast copies (event-triggered mode), computes each
agent's primal and dual directions against it, and advances plants and
multipliers by one forward-Euler step.
"""
from dataclasses import dataclass, replace
from pathlib import Path
from typing import List, Optional
import sys

import numpy as np
from tqdm import tqdm

sys.path.append(str(Path(__file__).parent.parent))
from config import SHOW_PROGRESS
from scripts.controller import Mode, MultiplierState, SaddlePointController, maybe_trigger, neighbor_snapshot
from scripts.convex import project_box
from scripts.errors import SimulationAbort
from scripts.plant import step_state


@dataclass(eq=False)
class Trajectory:
    mode: Mode
    step: float
    seed: int
    times: np.ndarray                 # (K+1,)
    outputs: List[np.ndarray]         # per agent, (K+1, p_i), clamped to the box
    raw_outputs: List[np.ndarray]     # per agent, (K+1, p_i), C x as integrated
    directions: List[np.ndarray]      # per agent, (K+1, p_i), primal direction at each grid point
    multipliers: np.ndarray           # (K+1, N, q)
    trigger_steps: List[np.ndarray]   # per agent, strictly increasing step indices
    aggregated_constraint: np.ndarray # (K+1, q)
    cost: np.ndarray                  # (K+1,)
    disagreement: np.ndarray          # (K+1,)
    overshoot: np.ndarray             # (K+1, N), distance of the raw output from the box
    clamp_deficit: np.ndarray         # (K+1, N), largest negative entry of mu + h d removed by the clamp
    broadcasts: int

    @property
    def steps(self) -> int:
        return self.times.size - 1

    @property
    def N(self) -> int:
        return self.multipliers.shape[1]

    @property
    def horizon(self) -> float:
        return float(self.times[-1])

    @property
    def trigger_times(self) -> List[np.ndarray]:
        return [steps * self.step for steps in self.trigger_steps]

    @property
    def trigger_counts(self) -> np.ndarray:
        return np.array([s.size for s in self.trigger_steps], dtype=int)

    def stacked_outputs(self) -> np.ndarray:
        """All agents' outputs side by side, (K+1, p)."""
        return np.concatenate(self.outputs, axis=1)

    @property
    def initial_output(self) -> np.ndarray:
        return self.stacked_outputs()[0]


def _disagreement_series(adjacency: np.ndarray, mus: np.ndarray) -> np.ndarray:
    diffs = np.abs(mus[:, :, None, :] - mus[:, None, :, :]).sum(axis=3)
    return np.einsum("ij,tij->t", adjacency, diffs)


def run(scenario, mode=None, seed: Optional[int] = None, progress: bool = SHOW_PROGRESS) -> Trajectory:
    """
    Integrate the closed loops over [0, T] on the grid t_k = k h.

    Args:
        scenario: validated ScenarioSpec
        mode: continuous / event_triggered (default: the scenario's mode)
        seed: initial-state seed (default: the scenario's seed)

    Raises:
        SimulationAbort: non-finite directions or states, or a state above the ceiling
    """
    mode = scenario.params.mode if mode is None else Mode.parse(mode)
    seed = scenario.seed if seed is None else int(seed)
    params = replace(scenario.params, mode=mode)
    controller = SaddlePointController(scenario.graph, scenario.costs, scenario.constraints, scenario.boxes, params)
    triggered = mode is Mode.EVENT_TRIGGERED

    N, q, K, h = scenario.N, scenario.q, scenario.steps, scenario.step
    times = scenario.times
    boxes = scenario.boxes
    gains = [a.gains for a in scenario.agents]
    plants = [a.plant.with_state(x0) for a, x0 in zip(scenario.agents, scenario.initial_states(seed))]

    raw = [np.empty((K + 1, p)) for p in scenario.output_dims]
    directions = [np.empty((K + 1, p)) for p in scenario.output_dims]
    mus = np.zeros((K + 1, N, q))
    deficit = np.zeros((K + 1, N))
    states = [MultiplierState.zeros(q) for _ in range(N)]
    fired: List[List[int]] = [[] for _ in range(N)]

    for i, plant in enumerate(plants):
        raw[i][0] = plant.output()

    for k in tqdm(range(K + 1), desc=f"Simulating ({mode.value})", disable=not progress, leave=False):
        t = times[k]
        mu_now, mu_hat_now = neighbor_snapshot(states)
        ys = [project_box(box, raw[i][k]) for i, box in enumerate(boxes)]
        for i in range(N):
            directions[i][k] = controller.primal_direction(i, t, ys[i], mu_now[i])
        if k == K:
            break

        for i in range(N):
            if triggered:
                d = controller.dual_direction_triggered(i, t, ys[i], mu_now[i], mu_hat_now[i], mu_hat_now)
            else:
                d = controller.dual_direction_continuous(i, t, ys[i], mu_now[i], mu_now)
            v = directions[i][k]
            if not (np.all(np.isfinite(v)) and np.all(np.isfinite(d))):
                raise SimulationAbort(f"agent {i}: non-finite direction at t = {t:g}")
            raw[i][k + 1] = step_state(plants[i], gains[i], v, h)
            if np.max(np.abs(plants[i].x)) > scenario.state_ceiling:
                raise SimulationAbort(
                    f"agent {i}: |x| exceeded {scenario.state_ceiling:g} at t = {times[k + 1]:g}"
                )
            stepped = mu_now[i] + h * d
            deficit[k + 1, i] = max(0.0, -float(stepped.min()))
            states[i].mu = np.maximum(stepped, 0.0)
            mus[k + 1, i] = states[i].mu

        if triggered:
            t_next = times[k + 1]
            _, hats = neighbor_snapshot(states)
            thresholds = [controller.trigger_threshold(i, t_next, hats, hats[i]) for i in range(N)]
            for i in range(N):
                states[i], did_fire = maybe_trigger(states[i], thresholds[i], t_next)
                if did_fire:
                    fired[i].append(k + 1)

    outputs = [np.clip(r, box.lower, box.upper) for r, box in zip(raw, boxes)]
    overshoot = np.stack([np.linalg.norm(r - y, axis=1) for r, y in zip(raw, outputs)], axis=1)
    cost = np.sum([a.cost.values_along(times, y) for a, y in zip(scenario.agents, outputs)], axis=0)
    aggregated = np.sum([a.constraint.values_along(times, y) for a, y in zip(scenario.agents, outputs)], axis=0)
    trigger_steps = [np.array(f, dtype=int) for f in fired]
    broadcasts = int(sum(s.size for s in trigger_steps)) if triggered else N * K

    return Trajectory(
        mode=mode,
        step=h,
        seed=seed,
        times=times,
        outputs=outputs,
        raw_outputs=raw,
        directions=directions,
        multipliers=mus,
        trigger_steps=trigger_steps,
        aggregated_constraint=aggregated.reshape(K + 1, q),
        cost=cost,
        disagreement=_disagreement_series(scenario.graph.adjacency, mus),
        overshoot=overshoot,
        clamp_deficit=deficit,
        broadcasts=broadcasts,
    )
