"""
Heterogeneous linear agent dynamics and output-tracking gain synthesis.

Each agent follows x' = A x + B u, y = C x. The gains K_alpha, K_beta solve
C B K_alpha = C A and C B K_beta = I, so that with
u = -K_alpha x + K_beta v the output obeys y' = v.
"""
from dataclasses import dataclass, field
from pathlib import Path
from typing import Tuple
import sys

import numpy as np

sys.path.append(str(Path(__file__).parent.parent))
from config import RANK_TOLERANCE, GAIN_TOLERANCE
from scripts.errors import AssumptionViolation, SimulationAbort


@dataclass
class AgentPlant:
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    x: np.ndarray = field(default=None)

    def __post_init__(self):
        self.A = np.atleast_2d(np.asarray(self.A, dtype=float))
        self.B = np.atleast_2d(np.asarray(self.B, dtype=float))
        self.C = np.atleast_2d(np.asarray(self.C, dtype=float))
        n = self.A.shape[0]
        if self.A.shape != (n, n):
            raise ValueError(f"A must be square, got shape {self.A.shape}")
        if self.B.shape[0] != n:
            raise ValueError(f"B has {self.B.shape[0]} rows, expected {n}")
        if self.C.shape[1] != n:
            raise ValueError(f"C has {self.C.shape[1]} columns, expected {n}")
        self.x = np.zeros(n) if self.x is None else np.asarray(self.x, dtype=float).reshape(-1)
        if self.x.shape != (n,):
            raise ValueError(f"State has length {self.x.size}, expected {n}")

    @property
    def dims(self) -> Tuple[int, int, int]:
        """(n_i, m_i, p_i)"""
        return self.A.shape[0], self.B.shape[1], self.C.shape[0]

    def output(self) -> np.ndarray:
        return self.C @ self.x

    def with_state(self, x) -> "AgentPlant":
        return AgentPlant(self.A, self.B, self.C, np.array(x, dtype=float))


@dataclass(frozen=True, eq=False)
class GainPair:
    K_alpha: np.ndarray
    K_beta: np.ndarray

    def residuals(self, plant: AgentPlant) -> Tuple[float, float]:
        """Elementwise max residuals of C B K_alpha = C A and C B K_beta = I."""
        CB = plant.C @ plant.B
        r_alpha = np.max(np.abs(CB @ self.K_alpha - plant.C @ plant.A), initial=0.0)
        r_beta = np.max(np.abs(CB @ self.K_beta - np.eye(CB.shape[0])), initial=0.0)
        return float(r_alpha), float(r_beta)


def numerical_rank(M: np.ndarray, tol: float = RANK_TOLERANCE) -> int:
    """Rank from singular values above tol times the largest one."""
    if M.size == 0:
        return 0
    return int(np.linalg.matrix_rank(M, tol=tol * np.linalg.norm(M, 2)))


def controllability_matrix(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Kalman matrix [B, AB, ..., A^{n-1}B]."""
    blocks = [B]
    for _ in range(A.shape[0] - 1):
        blocks.append(A @ blocks[-1])
    return np.hstack(blocks)


def check_assumption4(plant: AgentPlant) -> bool:
    """rank(CB) = p and (A, B) controllable."""
    n, _, p = plant.dims
    if numerical_rank(plant.C @ plant.B) != p:
        return False
    return numerical_rank(controllability_matrix(plant.A, plant.B)) == n


def synthesize_gains(plant: AgentPlant) -> GainPair:
    """
    Minimum-Frobenius-norm solutions of the gain equations.

    K_alpha = (CB)^+ C A and K_beta = (CB)^+ with the Moore-Penrose pseudoinverse.

    Raises:
        AssumptionViolation: rank(CB) < p, so no exact solution exists
    """
    _, _, p = plant.dims
    CB = plant.C @ plant.B
    rank = numerical_rank(CB)
    if rank != p:
        raise AssumptionViolation(4, f"rank(CB) = {rank} < p = {p}")

    CB_pinv = np.linalg.pinv(CB)
    gains = GainPair(K_alpha=CB_pinv @ plant.C @ plant.A, K_beta=CB_pinv)

    r_alpha, r_beta = gains.residuals(plant)
    scale = max(1.0, float(np.max(np.abs(plant.C @ plant.A), initial=0.0)))
    if r_alpha > GAIN_TOLERANCE * scale or r_beta > GAIN_TOLERANCE:
        print(f"Warning: gain residuals ({r_alpha:.2e}, {r_beta:.2e}) exceed {GAIN_TOLERANCE:.0e}")
    return gains


def step_state(plant: AgentPlant, gains: GainPair, v: np.ndarray, h: float) -> np.ndarray:
    """
    One forward-Euler step of x' = (A - B K_alpha) x + B K_beta v.

    Updates plant.x in place and returns the new output C x.

    Raises:
        SimulationAbort: the new state has non-finite entries
    """
    drift = (plant.A - plant.B @ gains.K_alpha) @ plant.x + plant.B @ (gains.K_beta @ v)
    x_next = plant.x + h * drift
    if not np.all(np.isfinite(x_next)):
        raise SimulationAbort(f"non-finite state after Euler step: {x_next}")
    plant.x = x_next
    return plant.output()
