"""
Checks for the saddle-point control laws and the broadcast rule, with
hand-computed values on a three-agent path.
"""
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

sys.path.append(str(Path(__file__).parent.parent))

from scripts.controller import (
    AlgorithmParams,
    Mode,
    MultiplierState,
    SaddlePointController,
    consensus_violation_bound,
    maybe_trigger,
    network_disagreement,
    trigger_threshold,
)
from scripts.convex import AffineConstraint, BoxSet, QuadraticCost
from scripts.graph import build_graph


def _path_controller(**overrides) -> SaddlePointController:
    """Three scalar agents on 0-1-2 with f = y^2, g = y - 1, box [-2, 2]."""
    graph = build_graph([(0, 1), (1, 2)], 3)
    costs = [QuadraticCost([1.0], [0.0], [0.0], [0.0]) for _ in range(3)]
    constraints = [AffineConstraint([[1.0]], [[0.0]], [[0.0]], [1.0]) for _ in range(3)]
    boxes = [BoxSet([-2.0], [2.0]) for _ in range(3)]
    params = AlgorithmParams(**{"epsilon": 0.5, "k_mu": 2.0, "sigma": 0.5, "iota": 0.1, **overrides})
    return SaddlePointController(graph, costs, constraints, boxes, params)


def test_disagreement_metrics():
    ctrl = _path_controller()
    mus = np.array([[0.0], [1.0], [3.0]])
    assert ctrl.disagreement(1, mus[1], mus) == 3.0
    # each edge counted from both ends
    assert network_disagreement(ctrl.graph, mus) == 2 * (1.0 + 2.0)


def test_continuous_dual_direction():
    ctrl = _path_controller()
    mus = np.array([[0.0], [1.0], [3.0]])
    y = np.array([0.5])
    # middle agent: sgn(1 - 0) + sgn(1 - 3) = 0, so only eps * g = 0.5 * (-0.5)
    assert np.allclose(ctrl.dual_direction_continuous(1, 0.0, y, mus[1], mus), [-0.25])
    # end agent: eps * (g - K_mu * sgn(0 - 1)) = 0.5 * (-0.5 + 2)
    assert np.allclose(ctrl.dual_direction_continuous(0, 0.0, y, mus[0], mus), [0.75])


def test_dual_direction_blocked_at_zero():
    ctrl = _path_controller()
    mus = np.zeros((3, 1))
    assert np.array_equal(ctrl.dual_direction_continuous(1, 0.0, np.array([0.0]), mus[1], mus), [0.0])


def test_triggered_dual_direction_uses_broadcast_copies():
    ctrl = _path_controller()
    hats = np.array([[0.2], [0.1], [0.0]])
    mu_0 = np.array([0.5])
    # eps * g - 2 eps K_mu * sgn(0.2 - 0.1) = -0.25 - 2
    d = ctrl.dual_direction_triggered(0, 0.0, np.array([0.5]), mu_0, hats[0], hats)
    assert np.allclose(d, [-2.25])


def test_primal_direction_respects_box():
    ctrl = _path_controller()
    # inward drive at the upper face passes
    assert np.allclose(ctrl.primal_direction(0, 0.0, np.array([2.0]), np.array([0.0])), [-2.0])
    # -eps * (2y + mu) = -0.5 * (-4 + 10) pushes through the lower face
    assert np.allclose(ctrl.primal_direction(0, 0.0, np.array([-2.0]), np.array([10.0])), [0.0])
    assert np.allclose(ctrl.primal_direction(0, 0.0, np.array([1.0]), np.array([1.0])), [-1.5])


def test_trigger_threshold_value():
    ctrl = _path_controller()
    hats = np.array([[0.2], [0.1], [0.0]])
    expected = 0.1 / 18.0 + 0.5 / 54.0
    assert np.isclose(ctrl.trigger_threshold(0, 0.0, hats, hats[0]), expected)
    # decaying term shrinks with e^{-iota t}
    later = ctrl.trigger_threshold(0, 10.0, hats, hats[0])
    assert np.isclose(later, 0.1 / 18.0 + 0.5 * np.exp(-1.0) / 54.0)


def test_trigger_threshold_monotonicity():
    rng = np.random.default_rng(11)
    weights = np.array([0.0, 1.0, 1.0])
    for _ in range(1000):
        hats = rng.uniform(0.0, 3.0, size=(3, 2))
        sigma, iota, k_mu = rng.uniform(0.1, 2.0, size=3)
        t = rng.uniform(0.0, 20.0)
        params = AlgorithmParams(epsilon=1.0, k_mu=k_mu, sigma=sigma, iota=iota)
        base = trigger_threshold(weights, t, hats, hats[0], params, 3, 2)

        spread = hats.copy()
        spread[1:] += hats[1:] - hats[0]
        assert trigger_threshold(weights, t, spread, spread[0], params, 3, 2) >= base
        assert trigger_threshold(weights, t, hats, hats[0], replace(params, sigma=2 * sigma), 3, 2) >= base
        assert trigger_threshold(weights, t + 1.0, hats, hats[0], params, 3, 2) <= base
        assert trigger_threshold(weights, t, hats, hats[0], params, 4, 2) <= base
        assert trigger_threshold(weights, t, hats, hats[0], replace(params, k_mu=2 * k_mu), 3, 2) <= base


def test_dual_laws_agree_at_consensus():
    ctrl = _path_controller()
    mus = np.full((3, 1), 0.7)
    for i in range(3):
        for y in ([-1.5], [0.5], [1.9]):
            y = np.array(y)
            continuous = ctrl.dual_direction_continuous(i, 0.3, y, mus[i], mus)
            triggered = ctrl.dual_direction_triggered(i, 0.3, y, mus[i], mus[i], mus)
            assert np.allclose(continuous, triggered)
            assert np.allclose(continuous, ctrl.params.epsilon * (y - 1.0))


def test_clamp_deficit_bound_by_hand():
    """Middle agent just above zero, both neighbors at zero, g = -0.5, h = 0.01."""
    ctrl = _path_controller()
    h, K_g = 0.01, 3.0  # |y - 1| <= 3 on [-2, 2]
    mus = np.array([[0.0], [1e-6], [0.0]])
    y = np.array([0.5])

    # eps * (g - K_mu * 2) = 0.5 * (-0.5 - 4)
    d = ctrl.dual_direction_continuous(1, 0.0, y, mus[1], mus)
    assert np.allclose(d, [-2.25])
    continuous_bound = consensus_violation_bound(ctrl.params, ctrl.graph, 1, K_g, h)
    assert np.isclose(continuous_bound, 0.01 * 0.5 * (2.0 * 2.0 + 3.0))
    assert -(mus[1] + h * d).min() <= continuous_bound

    # eps * g - 2 eps K_mu * 2 = -0.25 - 4 needs the doubled penalty
    d = ctrl.dual_direction_triggered(1, 0.0, y, mus[1], mus[1], mus)
    assert np.allclose(d, [-4.25])
    deficit = -(mus[1] + h * d).min()
    triggered_params = replace(ctrl.params, mode=Mode.EVENT_TRIGGERED)
    assert deficit > continuous_bound
    assert deficit <= consensus_violation_bound(triggered_params, ctrl.graph, 1, K_g, h)


def test_broadcast_fires_at_equality_and_resets():
    state = MultiplierState(mu=np.array([0.3]), mu_hat=np.array([0.0]))
    new, fired = maybe_trigger(state, 0.3, 1.5)
    assert fired
    assert np.array_equal(new.mu_hat, new.mu) and new.last_trigger_time == 1.5
    assert np.array_equal(new.error, [0.0])

    same, fired = maybe_trigger(state, 0.31, 1.5)
    assert not fired and same is state


def test_lagrangian_value():
    ctrl = _path_controller()
    mus = np.array([[0.0], [1.0], [3.0]])
    # y^2 + mu (y - 1) - K_mu * h_i = 1 + 0 - 2 * 3
    assert np.isclose(ctrl.lagrangian_value(1, 0.0, np.array([1.0]), mus[1], mus), -5.0)


def test_params_validation_and_mode_parsing():
    for bad in ({"epsilon": 0.0}, {"k_mu": -1.0}, {"sigma": 0.0}, {"iota": -0.1}):
        try:
            _path_controller(**bad)
        except ValueError:
            continue
        raise AssertionError(f"AlgorithmParams accepted {bad}")
    assert Mode.parse("event") is Mode.EVENT_TRIGGERED
    assert Mode.parse("continuous") is Mode.CONTINUOUS
    assert AlgorithmParams(epsilon=1.0, k_mu=1.0, mode="event_triggered").mode is Mode.EVENT_TRIGGERED


def test_mixed_constraint_dimensions_rejected():
    graph = build_graph([(0, 1)], 2)
    costs = [QuadraticCost([1.0], [0.0], [0.0], [0.0]) for _ in range(2)]
    constraints = [
        AffineConstraint([[1.0]], [[0.0]], [[0.0]], [1.0]),
        AffineConstraint([[1.0], [2.0]], [[0.0], [0.0]], [[0.0], [0.0]], [1.0, 1.0]),
    ]
    boxes = [BoxSet([-1.0], [1.0]) for _ in range(2)]
    try:
        SaddlePointController(graph, costs, constraints, boxes, AlgorithmParams(epsilon=1.0, k_mu=1.0))
    except ValueError:
        return
    raise AssertionError("agents with different q were accepted")


if __name__ == "__main__":
    from scripts.checks import run_module

    run_module(globals(), "Saddle-Point Controller Checks")
