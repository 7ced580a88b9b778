"""
Checks for projections, the cost/constraint families and their bounds,
including randomized property suites of 10^4 draws each.
"""
import sys
from pathlib import Path

import numpy as np

sys.path.append(str(Path(__file__).parent.parent))

from config import DEFAULT_SCENARIO
from scripts.convex import (
    POSITIVE_FLOOR,
    AffineConstraint,
    BoxSet,
    QuadraticCost,
    compute_bounds,
    cos_range,
    dir_project_box,
    dir_project_orthant,
    project_box,
    sign_vec,
    sin_range,
)
from scripts.scenario import load_scenario

DRAWS = 10_000


def _benchmark():
    return load_scenario(DEFAULT_SCENARIO)


def test_directional_projection_blocks_outward_components_only():
    box = BoxSet([-1.0, -1.0, -1.0], [5.0, 5.0, 5.0])
    x = np.array([-1.0, 5.0, 2.0])
    v = np.array([-3.0, 2.0, -4.0])
    assert np.array_equal(dir_project_box(box, x, v), [0.0, 0.0, -4.0])
    assert np.array_equal(dir_project_box(box, x, -v), [3.0, -2.0, 4.0])


def test_directional_projection_rejects_outside_point():
    box = BoxSet([0.0], [1.0])
    try:
        dir_project_box(box, [1.5], [1.0])
    except ValueError:
        return
    raise AssertionError("point outside the box was accepted")


def test_orthant_projection_and_sign():
    assert np.array_equal(dir_project_orthant([0.0, 2.0], [-1.0, -1.0]), [0.0, -1.0])
    assert np.array_equal(dir_project_orthant([0.0, 0.0], [1.0, 0.0]), [1.0, 0.0])
    assert np.array_equal(sign_vec([-2.0, 0.0, 3.0]), [-1.0, 0.0, 1.0])


def test_box_rejects_unbounded_and_inverted():
    for lower, upper in (([0.0], [np.inf]), ([1.0], [0.0]), ([0.0, 0.0], [1.0])):
        try:
            BoxSet(lower, upper)
        except ValueError:
            continue
        raise AssertionError(f"BoxSet accepted {lower}, {upper}")


def test_projection_inequality_property():
    """(x - P(x)) . (z - P(x)) <= 0 for every z in the set."""
    rng = np.random.default_rng(11)
    box = BoxSet([-1.0, 0.0, -2.0], [5.0, 1.0, 2.0])
    x = rng.normal(scale=6.0, size=(DRAWS, 3))
    z = rng.uniform(box.lower, box.upper, size=(DRAWS, 3))
    p = np.clip(x, box.lower, box.upper)
    assert np.allclose(p[0], project_box(box, x[0]))
    assert np.max(np.sum((x - p) * (z - p), axis=1)) <= 1e-12

    mu = rng.normal(size=(DRAWS, 2))
    w = np.abs(rng.normal(size=(DRAWS, 2)))
    p_mu = np.maximum(mu, 0.0)
    assert np.max(np.sum((mu - p_mu) * (w - p_mu), axis=1)) <= 1e-12


def test_directional_projection_inequality_property():
    """(x - y) . Pi_s[x, v] <= (x - y) . v for x, y in the box."""
    rng = np.random.default_rng(17)
    for _ in range(DRAWS):
        d = int(rng.integers(1, 5))
        lower = rng.uniform(-5.0, 0.0, size=d)
        box = BoxSet(lower, lower + rng.uniform(0.1, 6.0, size=d))
        x = rng.uniform(box.lower, box.upper)
        # put some coordinates on a face so the projection has something to block
        face = rng.integers(0, 3, size=d)
        x = np.where(face == 1, box.lower, np.where(face == 2, box.upper, x))
        y = rng.uniform(box.lower, box.upper)
        v = rng.normal(scale=3.0, size=d)
        assert (x - y) @ dir_project_box(box, x, v) <= (x - y) @ v + 1e-12


def test_sign_is_l1_subgradient_property():
    """||z||_1 >= ||x||_1 + sgn(x) . (z - x), zeros included."""
    rng = np.random.default_rng(18)
    x = rng.normal(size=(DRAWS, 3))
    x[rng.random((DRAWS, 3)) < 0.3] = 0.0
    z = rng.normal(size=(DRAWS, 3))
    s = np.stack([sign_vec(row) for row in x])
    gap = np.abs(z).sum(axis=1) - np.abs(x).sum(axis=1) - np.sum(s * (z - x), axis=1)
    assert gap.min() >= -1e-12


def test_gradients_match_finite_differences():
    rng = np.random.default_rng(19)
    step = 1e-5
    for agent in _benchmark().agents:
        cost, g, box = agent.cost, agent.constraint, agent.box
        eye = np.eye(box.dim)
        for _ in range(200):
            t = rng.uniform(0.0, 30.0)
            y = rng.uniform(box.lower, box.upper)
            _, grad = cost.value_and_subgrad(t, y)
            _, jac = g.value_and_jacobian(t, y)
            fd_grad = np.array([
                (cost.value_and_subgrad(t, y + step * e)[0] - cost.value_and_subgrad(t, y - step * e)[0]) / (2 * step)
                for e in eye
            ])
            fd_jac = np.stack([
                (g.value_and_jacobian(t, y + step * e)[0] - g.value_and_jacobian(t, y - step * e)[0]) / (2 * step)
                for e in eye
            ], axis=1)
            assert np.allclose(grad, fd_grad, rtol=1e-6, atol=1e-6), (grad, fd_grad)
            assert np.allclose(jac, fd_jac, rtol=1e-6, atol=1e-6), (jac, fd_jac)


def test_compute_bounds_reference_values():
    cost = QuadraticCost([1.0], [1.0], [0.0], [0.0])
    constraint = AffineConstraint([[2.0]], [[0.0]], [[0.0]], [1.0])
    assert compute_bounds(cost, constraint, BoxSet([0.0], [1.0]), 10.0).K_f == 1.0

    box = BoxSet([-1.0], [5.0])
    bounds = compute_bounds(cost, constraint, box, 10.0)
    assert bounds.K_g == 11.0
    grid = np.linspace(-1.0, 5.0, 601)
    values = constraint.values_along(np.linspace(0.0, 10.0, 601), grid[:, None])
    assert np.abs(values).max() <= bounds.K_g
    # attained at y = 5; the offset term makes the bound loose
    assert np.isclose(np.abs(values).max(), 9.0)


def test_directional_projection_is_limit_of_projected_steps():
    rng = np.random.default_rng(12)
    box = BoxSet([-1.0, -1.0], [5.0, 5.0])
    xi = 1e-9
    for _ in range(DRAWS // 10):
        x = rng.uniform(box.lower, box.upper)
        snap = rng.random(2) < 0.5
        x = np.where(snap, np.where(rng.random(2) < 0.5, box.lower, box.upper), x)
        v = rng.normal(size=2)
        limit = (project_box(box, x + xi * v) - x) / xi
        assert np.allclose(dir_project_box(box, x, v), limit, atol=1e-5)


def test_quadratic_subgradient_inequality_property():
    rng = np.random.default_rng(13)
    for agent in _benchmark().agents:
        cost, box = agent.cost, agent.box
        t = rng.uniform(0.0, 30.0, size=DRAWS // 5)
        y = rng.uniform(box.lower, box.upper, size=(t.size, box.dim))
        z = rng.uniform(box.lower, box.upper, size=(t.size, box.dim))
        for k in range(t.size):
            fy, gy = cost.value_and_subgrad(t[k], y[k])
            fz, _ = cost.value_and_subgrad(t[k], z[k])
            assert fz >= fy + gy @ (z[k] - y[k]) - 1e-9


def test_affine_constraint_is_exactly_linear_property():
    rng = np.random.default_rng(14)
    for agent in _benchmark().agents:
        g, box = agent.constraint, agent.box
        t = rng.uniform(0.0, 30.0, size=DRAWS // 5)
        y = rng.uniform(box.lower, box.upper, size=(t.size, box.dim))
        z = rng.uniform(box.lower, box.upper, size=(t.size, box.dim))
        for k in range(t.size):
            gy, J = g.value_and_jacobian(t[k], y[k])
            gz, _ = g.value_and_jacobian(t[k], z[k])
            assert np.allclose(gz, gy + J @ (z[k] - y[k]), atol=1e-9)


def test_compute_bounds_soundness_property():
    rng = np.random.default_rng(15)
    spec = _benchmark()
    for agent in spec.agents:
        box = agent.box
        t = rng.uniform(0.0, spec.horizon, size=DRAWS)
        y = rng.uniform(box.lower, box.upper, size=(DRAWS, box.dim))
        # corners stress the bound harder than interior points
        y[: DRAWS // 4] = np.where(rng.random((DRAWS // 4, box.dim)) < 0.5, box.lower, box.upper)
        f = np.sum(agent.cost.weights * (y - agent.cost.targets(t)) ** 2, axis=1)
        g = agent.constraint.values_along(t, y)
        assert np.max(np.abs(f)) <= agent.bounds.K_f
        assert np.max(np.linalg.norm(g, axis=1)) <= agent.bounds.K_g


def test_horizon_aware_ranges():
    assert cos_range(0.0) == (1.0, 1.0)
    assert cos_range(4.0) == (-1.0, 1.0)
    low, high = sin_range(1.0)
    assert low == 0.0 and np.isclose(high, np.sin(1.0))
    assert sin_range(10.0) == (-1.0, 1.0)


def test_zero_functions_get_positive_floor():
    box = BoxSet([-1.0], [1.0])
    cost = QuadraticCost([0.0], [0.0], [0.0], [0.0])
    constraint = AffineConstraint([[0.0]], [[0.0]], [[0.0]], [0.0])
    bounds = compute_bounds(cost, constraint, box, 10.0)
    assert bounds.K_f == POSITIVE_FLOOR and bounds.K_g == POSITIVE_FLOOR
    assert bounds.K_f > 0 and bounds.K_g > 0


def test_cost_family_validation():
    for args in (([-1.0], [0.0], [0.0], [0.0]), ([1.0, 1.0], [0.0], [0.0], [0.0])):
        try:
            QuadraticCost(*args)
        except ValueError:
            continue
        raise AssertionError(f"QuadraticCost accepted {args}")


def test_sampled_objective_matches_direct_sum():
    spec = _benchmark()
    times = np.linspace(0.0, 30.0, 301)
    rng = np.random.default_rng(16)
    for agent in spec.agents:
        evaluate = agent.cost.sampled_objective(times)
        y = rng.uniform(agent.box.lower, agent.box.upper)
        value, grad = evaluate(y)
        assert np.isclose(value, np.sum(agent.cost.values_along(times, y)))
        direct = sum(agent.cost.value_and_subgrad(t, y)[1] for t in times)
        assert np.allclose(grad, direct)


if __name__ == "__main__":
    from scripts.checks import run_module

    run_module(globals(), "Projection and Function Family Checks")
