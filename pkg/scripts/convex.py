"""
Convex sets, projections and the time-varying cost/constraint families.

Boxes hold the agents' admissible outputs; the nonnegative orthant holds the
Lagrange multipliers. Costs and constraints are evaluated together with
their (sub)gradients, and closed-form bounds K_f, K_g are derived from the
box and the horizon.
"""
from abc import ABC, abstractmethod
from dataclasses import dataclass
from pathlib import Path
from typing import Tuple
import sys

import numpy as np

sys.path.append(str(Path(__file__).parent.parent))
from config import BOUNDARY_TOLERANCE

POSITIVE_FLOOR = np.finfo(float).tiny


def _vec(values) -> np.ndarray:
    return np.atleast_1d(np.asarray(values, dtype=float))


def _check_dim(x: np.ndarray, d: int, what: str = "vector"):
    if x.shape != (d,):
        raise ValueError(f"{what} has shape {x.shape}, expected ({d},)")


@dataclass(frozen=True, eq=False)
class BoxSet:
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lower, upper = _vec(self.lower), _vec(self.upper)
        if lower.shape != upper.shape:
            raise ValueError(f"Box bounds differ in shape: {lower.shape} vs {upper.shape}")
        if not (np.all(np.isfinite(lower)) and np.all(np.isfinite(upper))):
            raise ValueError("Box must be bounded (finite lower and upper limits)")
        if np.any(lower > upper):
            raise ValueError(f"Box lower {lower} exceeds upper {upper}")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @property
    def dim(self) -> int:
        return self.lower.size

    @property
    def diameter(self) -> float:
        return float(np.linalg.norm(self.upper - self.lower))

    def contains(self, x, tol: float = BOUNDARY_TOLERANCE) -> bool:
        x = _vec(x)
        return bool(np.all(x >= self.lower - tol) and np.all(x <= self.upper + tol))


def product_box(boxes) -> BoxSet:
    return BoxSet(np.concatenate([b.lower for b in boxes]), np.concatenate([b.upper for b in boxes]))


def project_box(s: BoxSet, x) -> np.ndarray:
    """Euclidean projection onto a box: componentwise clamp."""
    x = _vec(x)
    _check_dim(x, s.dim, "point")
    return np.clip(x, s.lower, s.upper)


def dir_project_box(s: BoxSet, x, v) -> np.ndarray:
    """
    Directional projection of v at x onto the tangent cone of the box.

    Components pushing outward through an active face are zeroed; all other
    components pass unchanged.
    """
    x, v = _vec(x), _vec(v)
    _check_dim(x, s.dim, "point")
    _check_dim(v, s.dim, "direction")
    if not s.contains(x):
        raise ValueError(f"Point {x} lies outside the box [{s.lower}, {s.upper}]")
    at_lower = np.abs(x - s.lower) <= BOUNDARY_TOLERANCE
    at_upper = np.abs(x - s.upper) <= BOUNDARY_TOLERANCE
    blocked = (at_lower & (v < 0)) | (at_upper & (v > 0))
    return np.where(blocked, 0.0, v)


def dir_project_orthant(x, v) -> np.ndarray:
    """Directional projection onto the nonnegative orthant at x >= 0."""
    x, v = _vec(x), _vec(v)
    _check_dim(v, x.size, "direction")
    if np.any(x < -BOUNDARY_TOLERANCE):
        raise ValueError(f"Multiplier {x} has negative entries")
    blocked = (np.abs(x) <= BOUNDARY_TOLERANCE) & (v < 0)
    return np.where(blocked, 0.0, v)


def sign_vec(z) -> np.ndarray:
    """Componentwise sign with the selection 0 at exactly zero."""
    return np.sign(_vec(z))


def cos_range(theta_max: float) -> Tuple[float, float]:
    """Range of cos over [0, theta_max]."""
    low = -1.0 if theta_max >= np.pi else float(np.cos(theta_max))
    return low, 1.0


def sin_range(theta_max: float) -> Tuple[float, float]:
    """Range of sin over [0, theta_max]."""
    high = 1.0 if theta_max >= np.pi / 2 else float(np.sin(theta_max))
    if theta_max <= np.pi:
        low = 0.0
    elif theta_max >= 1.5 * np.pi:
        low = -1.0
    else:
        low = float(np.sin(theta_max))
    return low, high


def _scaled_range(scale: np.ndarray, low: np.ndarray, high: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    a, b = scale * low, scale * high
    return np.minimum(a, b), np.maximum(a, b)


class CostFamily(ABC):
    """Convex time-varying cost f(t, y) on one agent's outputs."""

    dim: int

    @abstractmethod
    def value_and_subgrad(self, t: float, y: np.ndarray) -> Tuple[float, np.ndarray]:
        ...

    @abstractmethod
    def values_along(self, times: np.ndarray, y: np.ndarray) -> np.ndarray:
        """f(t, y) for each t in times; y is fixed (d,) or one row per time (len(times), d)."""

    @abstractmethod
    def bound(self, box: BoxSet, horizon: float) -> float:
        """Upper bound on |f(t, y)| over box x [0, horizon]."""

    @abstractmethod
    def sampled_objective(self, times: np.ndarray):
        """Callable y -> (sum_m f(t_m, y), sum_m grad f(t_m, y)), vectorized over leading axes of y."""


class ConstraintFamily(ABC):
    """Convex time-varying constraint rows g(t, y) <= 0 on one agent's outputs."""

    dim: int
    rows: int

    @abstractmethod
    def value_and_jacobian(self, t: float, y: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        ...

    @abstractmethod
    def bound(self, box: BoxSet, horizon: float) -> float:
        """Upper bound on ||g(t, y)|| over box x [0, horizon]."""


@dataclass(frozen=True, eq=False)
class QuadraticCost(CostFamily):
    """f(t, y) = sum_k w_k (y_k - amp_k cos(freq_k t) - b_k)^2"""

    weights: np.ndarray
    base: np.ndarray
    amplitude: np.ndarray
    frequency: np.ndarray

    def __post_init__(self):
        arrays = [_vec(a) for a in (self.weights, self.base, self.amplitude, self.frequency)]
        if len({a.shape for a in arrays}) != 1:
            raise ValueError("Cost weights, base, amplitude and frequency must share one length")
        if np.any(arrays[0] < 0):
            raise ValueError(f"Cost weights must be nonnegative, got {arrays[0]}")
        for name, a in zip(("weights", "base", "amplitude", "frequency"), arrays):
            object.__setattr__(self, name, a)

    @property
    def dim(self) -> int:
        return self.weights.size

    def targets(self, t):
        """Tracking targets at time t (scalar) or at each time of an array, shape (..., d)."""
        t = np.asarray(t, dtype=float)
        return self.amplitude * np.cos(np.multiply.outer(t, self.frequency)) + self.base

    def value_and_subgrad(self, t: float, y) -> Tuple[float, np.ndarray]:
        y = _vec(y)
        _check_dim(y, self.dim, "output")
        dev = y - self.targets(t)
        return float(np.sum(self.weights * dev ** 2)), 2.0 * self.weights * dev

    def values_along(self, times, y) -> np.ndarray:
        dev = _vec(y) - self.targets(np.asarray(times, dtype=float))
        return np.sum(self.weights * dev ** 2, axis=-1)

    def target_interval(self, horizon: float) -> Tuple[np.ndarray, np.ndarray]:
        ranges = np.array([cos_range(abs(f) * horizon) for f in self.frequency]).reshape(-1, 2)
        low, high = _scaled_range(self.amplitude, ranges[:, 0], ranges[:, 1])
        return self.base + low, self.base + high

    def bound(self, box: BoxSet, horizon: float) -> float:
        c_low, c_high = self.target_interval(horizon)
        corners = np.stack([
            np.abs(box.lower - c_low), np.abs(box.lower - c_high),
            np.abs(box.upper - c_low), np.abs(box.upper - c_high),
        ])
        worst = corners.max(axis=0)
        return float(np.sum(self.weights * worst ** 2))

    def sampled_objective(self, times):
        targets = self.targets(np.asarray(times, dtype=float)).reshape(-1, self.dim)
        count = targets.shape[0]
        first = targets.sum(axis=0)
        second = (targets ** 2).sum(axis=0)
        w = self.weights

        def evaluate(y):
            y = np.asarray(y, dtype=float)
            value = np.sum(w * (count * y ** 2 - 2.0 * y * first + second), axis=-1)
            return value, 2.0 * w * (count * y - first)

        return evaluate


@dataclass(frozen=True, eq=False)
class AffineConstraint(ConstraintFamily):
    """Row j: g_j(t, y) = sum_k (ca_jk sin(cf_jk t) + cb_jk) y_k - r_j"""

    base: np.ndarray
    amplitude: np.ndarray
    frequency: np.ndarray
    offset: np.ndarray

    def __post_init__(self):
        base = np.atleast_2d(np.asarray(self.base, dtype=float))
        amplitude = np.atleast_2d(np.asarray(self.amplitude, dtype=float))
        frequency = np.atleast_2d(np.asarray(self.frequency, dtype=float))
        offset = _vec(self.offset)
        if not (base.shape == amplitude.shape == frequency.shape):
            raise ValueError("Constraint base, amplitude and frequency must share one shape")
        if offset.shape != (base.shape[0],):
            raise ValueError(f"Constraint offset has {offset.size} entries, expected {base.shape[0]}")
        object.__setattr__(self, "base", base)
        object.__setattr__(self, "amplitude", amplitude)
        object.__setattr__(self, "frequency", frequency)
        object.__setattr__(self, "offset", offset)

    @property
    def rows(self) -> int:
        return self.base.shape[0]

    @property
    def dim(self) -> int:
        return self.base.shape[1]

    def coefficients(self, t):
        """Coefficient matrix at time t, shape (q, d), or (len(t), q, d) for an array."""
        t = np.asarray(t, dtype=float)
        return self.amplitude * np.sin(np.multiply.outer(t, self.frequency)) + self.base

    def value_and_jacobian(self, t: float, y) -> Tuple[np.ndarray, np.ndarray]:
        y = _vec(y)
        _check_dim(y, self.dim, "output")
        jac = self.coefficients(t)
        return jac @ y - self.offset, jac

    def values_along(self, times, y) -> np.ndarray:
        """Rows g(t, y) for each t in times; y is fixed (d,) or one row per time."""
        coef = self.coefficients(np.asarray(times, dtype=float))
        y = _vec(y)
        if y.ndim == 1:
            return coef @ y - self.offset
        return np.einsum("tqd,td->tq", coef, y) - self.offset

    def coefficient_magnitude(self, horizon: float) -> np.ndarray:
        """Largest |coefficient| over [0, horizon], shape (q, d)."""
        theta = np.abs(self.frequency) * horizon
        low = np.empty_like(theta)
        high = np.empty_like(theta)
        for idx, th in np.ndenumerate(theta):
            low[idx], high[idx] = sin_range(th)
        s_low, s_high = _scaled_range(self.amplitude * np.sign(self.frequency), low, high)
        return np.maximum(np.abs(self.base + s_low), np.abs(self.base + s_high))

    def bound(self, box: BoxSet, horizon: float) -> float:
        reach = np.maximum(np.abs(box.lower), np.abs(box.upper))
        row_bounds = self.coefficient_magnitude(horizon) @ reach + np.abs(self.offset)
        if row_bounds.size == 0:
            return 0.0
        return float(np.sqrt(self.rows) * row_bounds.max())


@dataclass(frozen=True, eq=False)
class FunctionBounds:
    K_f: float
    K_g: float


def cost_value_and_subgrad(c: CostFamily, t: float, y) -> Tuple[float, np.ndarray]:
    return c.value_and_subgrad(t, y)


def constraint_value_and_jacobian(g: ConstraintFamily, t: float, y) -> Tuple[np.ndarray, np.ndarray]:
    return g.value_and_jacobian(t, y)


def compute_bounds(c: CostFamily, g: ConstraintFamily, s: BoxSet, horizon: float) -> FunctionBounds:
    """
    Closed-form over-approximations of K_f and K_g on box x [0, horizon].

    Both are floored at the smallest positive float, since the bounds must be
    strictly positive even for identically zero functions.
    """
    if horizon < 0:
        raise ValueError(f"Horizon must be nonnegative, got {horizon}")
    if c.dim != s.dim or g.dim != s.dim:
        raise ValueError(f"Function dimensions ({c.dim}, {g.dim}) do not match box dimension {s.dim}")
    return FunctionBounds(
        K_f=max(c.bound(s, horizon), POSITIVE_FLOOR),
        K_g=max(g.bound(s, horizon), POSITIVE_FLOOR),
    )
