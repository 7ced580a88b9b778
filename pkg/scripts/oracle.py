"""
Clairvoyant benchmark: the best fixed feasible output over the horizon.

The "for all t" coupled constraint is enforced at sample times, giving a
finite convex program that is solved by a projected primal-dual subgradient
iteration. A brute-force lattice search cross-checks small instances.
"""
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence
import json
import sys

import numpy as np
from tqdm import tqdm

sys.path.append(str(Path(__file__).parent.parent))
from config import (
    GRID_CROSSCHECK_MAX_ENTRIES,
    GRID_ORACLE_CHUNK,
    GRID_ORACLE_MAX_DIM,
    ORACLE_CACHE_DIR,
    ORACLE_FEASIBILITY_TOLERANCE,
    ORACLE_ITERATIONS,
    SHOW_PROGRESS,
)
from scripts.convex import AffineConstraint, BoxSet, CostFamily, product_box
from scripts.errors import InfeasibleProgram


class SampledProgram:
    """
    minimize    sum_m sum_i f_i(t_m, y_i)
    subject to  sum_i g_i(t_m, y_i) <= 0  for every sample time t_m
                y in the product box
    """

    def __init__(
        self,
        sample_times,
        costs: Sequence[CostFamily],
        constraints: Sequence[AffineConstraint],
        boxes: Sequence[BoxSet],
    ):
        times = np.asarray(sample_times, dtype=float)
        if times.ndim != 1 or times.size < 2:
            raise ValueError("Need at least two sample times")
        if times[0] != 0.0 or np.any(np.diff(times) <= 0):
            raise ValueError("Sample times must start at 0 and increase strictly")
        if not (len(costs) == len(constraints) == len(boxes)):
            raise ValueError("Need one cost, constraint and box per agent")

        self.sample_times = times
        self.costs = list(costs)
        self.constraints = list(constraints)
        self.boxes = list(boxes)
        self.box = product_box(boxes)

        self.dims = [b.dim for b in boxes]
        edges = np.concatenate([[0], np.cumsum(self.dims)])
        self.slices = [slice(int(a), int(b)) for a, b in zip(edges[:-1], edges[1:])]

        q = constraints[0].rows
        # aggregated coefficient rows per sample: (M, q, p)
        self.G = np.concatenate([g.coefficients(times) for g in constraints], axis=2).reshape(times.size, q, -1)
        self.R = np.sum([g.offset for g in constraints], axis=0)
        self._objectives = [c.sampled_objective(times) for c in costs]

    @property
    def samples(self) -> int:
        return self.sample_times.size

    @property
    def q(self) -> int:
        return self.R.size

    @property
    def horizon(self) -> float:
        return float(self.sample_times[-1])

    def objective_and_grad(self, y):
        y = np.asarray(y, dtype=float)
        value = np.zeros(y.shape[:-1])
        grad = np.empty_like(y)
        for sl, evaluate in zip(self.slices, self._objectives):
            v, g = evaluate(y[..., sl])
            value = value + v
            grad[..., sl] = g
        return value, grad

    def objective(self, y) -> float:
        return float(self.objective_and_grad(y)[0])

    def constraint_values(self, y) -> np.ndarray:
        """Aggregated rows sum_i g_i(t_m, y_i), shape (M, q)."""
        return self.G @ np.asarray(y, dtype=float) - self.R

    def max_violation(self, y) -> float:
        return float(self.constraint_values(y).max())

    def split(self, y) -> List[np.ndarray]:
        return [np.asarray(y)[sl] for sl in self.slices]


@dataclass
class OracleResult:
    y_star: np.ndarray
    objective: float
    max_violation: float
    dual_certificate: Optional[np.ndarray] = None
    method: str = "primal_dual"
    grid_objective: Optional[float] = None  # lattice optimum when the cross-check ran

    def to_dict(self) -> dict:
        return {
            "y_star": self.y_star.tolist(),
            "objective": self.objective,
            "max_violation": self.max_violation,
            "dual_certificate": None if self.dual_certificate is None else self.dual_certificate.tolist(),
            "method": self.method,
            "grid_objective": self.grid_objective,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "OracleResult":
        dual = data.get("dual_certificate")
        return cls(
            y_star=np.asarray(data["y_star"], dtype=float),
            objective=float(data["objective"]),
            max_violation=float(data["max_violation"]),
            dual_certificate=None if dual is None else np.asarray(dual, dtype=float),
            method=data.get("method", "primal_dual"),
            grid_objective=data.get("grid_objective"),
        )


def build_program(costs, constraints, boxes, horizon: float, samples: int) -> SampledProgram:
    """Sample [0, horizon] uniformly at `samples` points."""
    return SampledProgram(np.linspace(0.0, horizon, samples), costs, constraints, boxes)


def _restore_feasibility(prog: SampledProgram, anchor: np.ndarray, target: np.ndarray, rounds: int = 60):
    """
    Point closest to target on the segment from anchor with no sampled
    violation at all. anchor itself must satisfy every sampled row.
    """
    if prog.max_violation(target) <= 0.0:
        return target
    low, high = 0.0, 1.0
    for _ in range(rounds):
        mid = 0.5 * (low + high)
        if prog.max_violation(anchor + mid * (target - anchor)) <= 0.0:
            low = mid
        else:
            high = mid
    return anchor + low * (target - anchor)


def solve_clairvoyant(
    prog: SampledProgram,
    iters: int = ORACLE_ITERATIONS,
    seed: Optional[int] = 0,
    tol: float = ORACLE_FEASIBILITY_TOLERANCE,
    progress: bool = SHOW_PROGRESS,
) -> OracleResult:
    """
    Projected primal-dual subgradient iteration with steps c / sqrt(k),
    c = box diameter / sqrt(iters).

    The objective is scaled by 1/M inside the iteration. Iterates within tol
    are accepted; the best one with no violation at all anchors the final
    pull-back: the best accepted iterate, the step-weighted average over the
    second half of the run and the last iterate are moved towards the anchor
    until every sampled row holds, and the lowest objective wins. Only when
    no iterate is strictly feasible is the best tolerance-feasible one
    returned as is.

    Raises:
        InfeasibleProgram: no iterate satisfies all sampled constraints within tol
    """
    if iters < 1:
        raise ValueError(f"iters must be positive, got {iters}")
    rng = np.random.default_rng(seed)
    lo, hi = prog.box.lower, prog.box.upper
    M, q = prog.samples, prog.q
    G = prog.G.reshape(M * q, -1)
    R = np.tile(prog.R, M)

    y = rng.uniform(lo, hi)
    lam = np.zeros(M * q)
    c = prog.box.diameter / np.sqrt(iters)

    best_y, best_obj = None, np.inf
    strict_y, strict_obj = None, np.inf
    least_y, least_viol = y.copy(), np.inf
    y_sum, weight_sum = np.zeros_like(y), 0.0

    for k in tqdm(range(1, iters + 1), desc="Clairvoyant solve", disable=not progress, leave=False):
        viol = G @ y - R
        value, grad = prog.objective_and_grad(y)
        worst = viol.max()
        if worst <= tol and value < best_obj:
            best_y, best_obj = y.copy(), float(value)
        if worst <= 0.0 and value < strict_obj:
            strict_y, strict_obj = y.copy(), float(value)
        if worst < least_viol:
            least_y, least_viol = y.copy(), float(worst)
        if c == 0.0:
            break

        alpha = c / np.sqrt(k)
        y = np.clip(y - alpha * (grad / M + G.T @ lam), lo, hi)
        lam = np.maximum(lam + alpha * viol, 0.0)
        if k > iters // 2:
            y_sum += alpha * y
            weight_sum += alpha

    if best_y is None:
        raise InfeasibleProgram(
            f"no iterate satisfies the sampled constraints within {tol:g}; "
            f"least violation {least_viol:.3e} at y = {np.array2string(least_y, precision=4)}"
        )

    if strict_y is None:
        candidates = [best_y]
    else:
        candidates = [strict_y]
        for point in (best_y, y_sum / weight_sum if weight_sum > 0 else None, y):
            if point is not None:
                candidates.append(_restore_feasibility(prog, strict_y, np.clip(point, lo, hi)))

    objectives = [prog.objective(p) for p in candidates]
    winner = candidates[int(np.argmin(objectives))]
    return OracleResult(
        y_star=winner,
        objective=prog.objective(winner),
        max_violation=prog.max_violation(winner),
        dual_certificate=lam * M,
        method="primal_dual",
    )


def _lattice_counts(box: BoxSet, resolution: float) -> np.ndarray:
    return np.floor((box.upper - box.lower) / resolution + 1e-9).astype(int) + 1


def grid_oracle(
    prog: SampledProgram,
    resolution: float,
    tol: float = ORACLE_FEASIBILITY_TOLERANCE,
) -> OracleResult:
    """
    Exhaustive search over the box lattice lower + resolution * k.

    Raises:
        ValueError: total output dimension above the grid guard
        InfeasibleProgram: no lattice point is feasible
    """
    if resolution <= 0:
        raise ValueError(f"resolution must be positive, got {resolution}")
    box = prog.box
    if box.dim > GRID_ORACLE_MAX_DIM:
        raise ValueError(f"grid oracle supports at most {GRID_ORACLE_MAX_DIM} output dimensions, got {box.dim}")

    counts = _lattice_counts(box, resolution)
    axes = [lo + resolution * np.arange(n) for lo, n in zip(box.lower, counts)]
    M, q = prog.samples, prog.q
    G = prog.G.reshape(M * q, -1)
    R = np.tile(prog.R, M)

    total = int(np.prod(counts))
    batch = max(1, GRID_ORACLE_CHUNK // (M * q))
    best_y, best_obj = None, np.inf
    for start in range(0, total, batch):
        flat = np.arange(start, min(start + batch, total))
        idx = np.unravel_index(flat, tuple(counts))
        Y = np.stack([axis[i] for axis, i in zip(axes, idx)], axis=1)
        feasible = (Y @ G.T - R).max(axis=1) <= tol
        if not feasible.any():
            continue
        values, _ = prog.objective_and_grad(Y[feasible])
        k = int(np.argmin(values))
        if values[k] < best_obj:
            best_y, best_obj = Y[feasible][k], float(values[k])

    if best_y is None:
        raise InfeasibleProgram(f"no feasible lattice point at resolution {resolution:g}")
    return OracleResult(
        y_star=best_y,
        objective=best_obj,
        max_violation=prog.max_violation(best_y),
        method="grid",
    )


def lattice_size(box: BoxSet, resolution: float) -> int:
    """Number of points lower + resolution * k inside the box."""
    return int(np.prod(_lattice_counts(box, resolution)))


def resolution_gap(prog: SampledProgram, y: np.ndarray, resolution: float) -> float:
    """
    Objective change across one lattice cell around y plus a 1e-3 relative
    slack; the costs are separable quadratics, so one shifted gradient gives
    the curvature.
    """
    value, grad = prog.objective_and_grad(y)
    _, shifted = prog.objective_and_grad(y + resolution)
    curvature = np.abs(shifted - grad) / resolution
    cell = float(np.abs(grad).sum() * resolution + curvature.sum() * resolution ** 2)
    return cell + 1e-3 * max(1.0, abs(float(value)))


@dataclass
class GridCrossCheck:
    grid: OracleResult
    gap: float
    difference: float

    @property
    def agrees(self) -> bool:
        return self.difference <= self.gap


def cross_check(prog: SampledProgram, result: OracleResult, resolution: float) -> Optional[GridCrossCheck]:
    """
    Compare a solver result with the lattice search. None when the lattice
    times the sampled rows exceeds the cross-check budget.

    Raises:
        InfeasibleProgram: no lattice point is feasible at this resolution
    """
    if prog.box.dim > GRID_ORACLE_MAX_DIM:
        return None
    if lattice_size(prog.box, resolution) * prog.samples * prog.q > GRID_CROSSCHECK_MAX_ENTRIES:
        return None
    grid = grid_oracle(prog, resolution)
    return GridCrossCheck(
        grid=grid,
        gap=resolution_gap(prog, grid.y_star, resolution),
        difference=abs(result.objective - grid.objective),
    )


def cached_result(key: str) -> Optional[OracleResult]:
    path = ORACLE_CACHE_DIR / f"{key}.json"
    if not path.exists():
        return None
    try:
        with open(path, "r", encoding="utf-8") as f:
            return OracleResult.from_dict(json.load(f))
    except (json.JSONDecodeError, KeyError) as e:
        print(f"Warning: ignoring unreadable oracle cache {path}: {e}")
        return None


def store_result(key: str, result: OracleResult) -> Path:
    path = ORACLE_CACHE_DIR / f"{key}.json"
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(result.to_dict(), f, indent=2)
    return path
