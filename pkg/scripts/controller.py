"""
Distributed saddle-point control laws.

Per agent, the primal flow descends the local Lagrangian
    H_i(t, y_i, mu_i) = f_i(t, y_i) + mu_i^T g_i(t, y_i) - K_mu * sum_j a_ij ||mu_i - mu_j||_1
inside the output box, and the dual flow ascends it inside the nonnegative
orthant. With event-triggered communication, neighbors only see the last
broadcast multipliers mu_hat, and an agent rebroadcasts when its measurement
error crosses a decaying threshold.
"""
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import List, Sequence, Tuple
import sys

import numpy as np

sys.path.append(str(Path(__file__).parent.parent))
from scripts.convex import (
    BoxSet,
    ConstraintFamily,
    CostFamily,
    constraint_value_and_jacobian,
    cost_value_and_subgrad,
    dir_project_box,
    dir_project_orthant,
    sign_vec,
)
from scripts.graph import CommGraph


class Mode(str, Enum):
    CONTINUOUS = "continuous"
    EVENT_TRIGGERED = "event_triggered"

    @classmethod
    def parse(cls, value) -> "Mode":
        """Accept the enum, its value, or the CLI shorthand 'event'."""
        if isinstance(value, Mode):
            return value
        if value == "event":
            return cls.EVENT_TRIGGERED
        return cls(value)


@dataclass
class MultiplierState:
    """Local multiplier mu_i, its last broadcast copy mu_hat_i and the time of that broadcast."""

    mu: np.ndarray
    mu_hat: np.ndarray
    last_trigger_time: float = 0.0

    @classmethod
    def zeros(cls, q: int) -> "MultiplierState":
        return cls(mu=np.zeros(q), mu_hat=np.zeros(q))

    @property
    def error(self) -> np.ndarray:
        """Measurement error e_i = mu_hat_i - mu_i."""
        return self.mu_hat - self.mu


@dataclass(frozen=True)
class AlgorithmParams:
    epsilon: float
    k_mu: float
    sigma: float = 0.5
    iota: float = 0.1
    mode: Mode = Mode.CONTINUOUS

    def __post_init__(self):
        for name in ("epsilon", "k_mu", "sigma", "iota"):
            value = getattr(self, name)
            if not value > 0:
                raise ValueError(f"{name} must be positive, got {value}")
        object.__setattr__(self, "mode", Mode.parse(self.mode))


class SaddlePointController:
    """
    Control laws for all agents of one network.

    Operations take the agent index i and the agent's local quantities; the
    multiplier arguments named neighbor_* are (N, q) arrays indexed by agent,
    of which only rows with a_ij = 1 are read.
    """

    def __init__(
        self,
        graph: CommGraph,
        costs: Sequence[CostFamily],
        constraints: Sequence[ConstraintFamily],
        boxes: Sequence[BoxSet],
        params: AlgorithmParams,
    ):
        if not (len(costs) == len(constraints) == len(boxes) == graph.node_count):
            raise ValueError("Need one cost, constraint and box per agent")
        rows = {g.rows for g in constraints}
        if len(rows) != 1:
            raise ValueError(f"All agents must share one constraint dimension q, got {sorted(rows)}")
        self.graph = graph
        self.costs = list(costs)
        self.constraints = list(constraints)
        self.boxes = list(boxes)
        self.params = params
        self.q = rows.pop()

    @property
    def N(self) -> int:
        return self.graph.node_count

    def _weights(self, i: int) -> np.ndarray:
        return self.graph.adjacency[i]

    def disagreement(self, i: int, mu_i, neighbor_mus) -> float:
        """h_i = sum_j a_ij ||mu_i - mu_j||_1"""
        diffs = np.abs(np.asarray(mu_i) - np.asarray(neighbor_mus)).sum(axis=1)
        return float(self._weights(i) @ diffs)

    def _sign_sum(self, i: int, mu_i, neighbor_mus) -> np.ndarray:
        """sum_j a_ij sgn(mu_i - mu_j)"""
        signs = sign_vec(np.ravel(np.asarray(mu_i) - np.asarray(neighbor_mus))).reshape(np.shape(neighbor_mus))
        return self._weights(i) @ signs

    def lagrangian_value(self, i: int, t: float, y_i, mu_i, neighbor_mus) -> float:
        """Local Lagrangian H_i; diagnostic only."""
        f, _ = cost_value_and_subgrad(self.costs[i], t, y_i)
        g, _ = constraint_value_and_jacobian(self.constraints[i], t, y_i)
        return f + float(np.dot(mu_i, g)) - self.params.k_mu * self.disagreement(i, mu_i, neighbor_mus)

    def primal_direction(self, i: int, t: float, y_i, mu_i) -> np.ndarray:
        """Pi_{Y_i}[y_i, -eps * (grad f_i + Jac g_i^T mu_i)]; shared by both modes."""
        _, grad = cost_value_and_subgrad(self.costs[i], t, y_i)
        _, jac = constraint_value_and_jacobian(self.constraints[i], t, y_i)
        drive = -self.params.epsilon * (grad + jac.T @ np.asarray(mu_i, dtype=float))
        return dir_project_box(self.boxes[i], y_i, drive)

    def dual_direction_continuous(self, i: int, t: float, y_i, mu_i, neighbor_mus) -> np.ndarray:
        """Pi_{R+^q}[mu_i, eps * (g_i - K_mu * sum_j a_ij sgn(mu_i - mu_j))]"""
        g, _ = constraint_value_and_jacobian(self.constraints[i], t, y_i)
        drive = self.params.epsilon * (g - self.params.k_mu * self._sign_sum(i, mu_i, neighbor_mus))
        return dir_project_orthant(mu_i, drive)

    def dual_direction_triggered(self, i: int, t: float, y_i, mu_i, mu_hat_i, neighbor_mu_hats) -> np.ndarray:
        """Pi_{R+^q}[mu_i, eps * g_i - 2 eps K_mu * sum_j a_ij sgn(mu_hat_i - mu_hat_j)]"""
        g, _ = constraint_value_and_jacobian(self.constraints[i], t, y_i)
        eps = self.params.epsilon
        drive = eps * g - 2.0 * eps * self.params.k_mu * self._sign_sum(i, mu_hat_i, neighbor_mu_hats)
        return dir_project_orthant(mu_i, drive)

    def trigger_threshold(self, i: int, t: float, neighbor_mu_hats, mu_hat_i) -> float:
        """
        Right-hand side of the broadcast rule:
        (1 / (6 N sqrt(q))) * sum_j a_ij ||mu_hat_i - mu_hat_j||_1 + sigma e^{-iota t} / (3 N^2 K_mu sqrt(q))
        """
        return trigger_threshold(
            self._weights(i), t, neighbor_mu_hats, mu_hat_i, self.params, self.N, self.q
        )


def trigger_threshold(weights, t: float, neighbor_mu_hats, mu_hat_i, params: AlgorithmParams, N: int, q: int) -> float:
    root_q = np.sqrt(q)
    spread = float(np.asarray(weights) @ np.abs(np.asarray(mu_hat_i) - np.asarray(neighbor_mu_hats)).sum(axis=1))
    decay = params.sigma * np.exp(-params.iota * t) / (3.0 * N ** 2 * params.k_mu * root_q)
    return spread / (6.0 * N * root_q) + float(decay)


def maybe_trigger(state: MultiplierState, threshold: float, t: float) -> Tuple[MultiplierState, bool]:
    """Broadcast when ||mu_hat - mu||_2 >= threshold; the error resets to zero."""
    if np.linalg.norm(state.error) >= threshold:
        return MultiplierState(mu=state.mu.copy(), mu_hat=state.mu.copy(), last_trigger_time=t), True
    return state, False


def network_disagreement(graph: CommGraph, mus) -> float:
    """h(mu) = sum_i sum_j a_ij ||mu_i - mu_j||_1 (each edge counted in both directions)."""
    mus = np.asarray(mus)
    diffs = np.abs(mus[:, None, :] - mus[None, :, :]).sum(axis=2)
    return float(np.sum(graph.adjacency * diffs))


def consensus_violation_bound(params: AlgorithmParams, graph: CommGraph, q: int, K_g: float, h: float) -> float:
    """
    Largest possible negative excursion of mu in one Euler step before the
    orthant clamp. The triggered law doubles the sign penalty.
    """
    penalty = 2.0 if params.mode is Mode.EVENT_TRIGGERED else 1.0
    return h * params.epsilon * (penalty * params.k_mu * graph.max_degree * np.sqrt(q) + K_g)


def neighbor_snapshot(states: List[MultiplierState]) -> Tuple[np.ndarray, np.ndarray]:
    """(N, q) arrays of the current multipliers and broadcast copies."""
    return np.stack([s.mu for s in states]), np.stack([s.mu_hat for s in states])
