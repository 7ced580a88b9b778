"""
Checks for agent dynamics and output-tracking gain synthesis.
"""
import sys
import time
from pathlib import Path

import numpy as np

sys.path.append(str(Path(__file__).parent.parent))

from config import DEFAULT_SCENARIO
from scripts.errors import AssumptionViolation, SimulationAbort
from scripts.plant import (
    AgentPlant,
    check_assumption4,
    controllability_matrix,
    numerical_rank,
    step_state,
    synthesize_gains,
)
from scripts.scenario import load_scenario

A12 = [[1, 0], [0, 2]]
B12 = [[0, 1], [1, 3]]
C12 = [[2, 0], [0, 1]]
A3 = [[0, 2], [-1, 1]]
B3 = [[2, 1], [1, 0]]
C3 = [[2, 1], [-1, 0]]
A45 = [[2, 1, 0], [0, 1, 1], [1, 0, 2]]
B45 = np.eye(3)
C45 = [[3, 0, 0], [0, 1, 0], [0, 1, 2]]


def test_benchmark_gains_match_reference_values():
    start = time.perf_counter()
    g12 = synthesize_gains(AgentPlant(A12, B12, C12))
    g3 = synthesize_gains(AgentPlant(A3, B3, C3))
    g45 = synthesize_gains(AgentPlant(A45, B45, C45))
    elapsed = time.perf_counter() - start

    tol = 5e-3
    assert np.allclose(g12.K_alpha, [[-3, 2], [1, 0]], atol=tol)
    assert np.allclose(g12.K_beta, [[-1.5, 1], [0.5, 0]], atol=tol)
    assert np.allclose(g3.K_alpha, [[-1, 1], [2, 0]], atol=tol)
    assert np.allclose(g3.K_beta, [[1, 2], [-2, -5]], atol=tol)
    assert np.allclose(g45.K_alpha, A45, atol=tol)
    assert np.allclose(g45.K_beta, [[0.333, 0, 0], [0, 1, 0], [0, -0.5, 0.5]], atol=tol)
    assert elapsed < 1.0, f"gain synthesis took {elapsed:.3f}s"


def test_gain_equations_hold_on_shipped_scenario():
    spec = load_scenario(DEFAULT_SCENARIO)
    for agent in spec.agents:
        plant, gains = agent.plant, agent.gains
        r_alpha, r_beta = gains.residuals(plant)
        assert r_alpha < 1e-9 and r_beta < 1e-9, agent.name
        # output dynamics reduce to y' = v
        assert np.allclose(plant.C @ (plant.A - plant.B @ gains.K_alpha), 0.0, atol=1e-9)
        assert np.allclose(plant.C @ plant.B @ gains.K_beta, np.eye(plant.dims[2]), atol=1e-9)


def test_rank_deficient_cb_rejected():
    plant = AgentPlant([[1, 0], [0, 1]], [[1, 0], [0, 1]], [[1, 0], [1, 0]])
    assert not check_assumption4(plant)
    try:
        synthesize_gains(plant)
    except AssumptionViolation as e:
        assert e.assumption == 4
    else:
        raise AssertionError("rank-deficient C B was accepted")


def test_zero_input_matrix_fails_assumption4():
    plant = AgentPlant([[0, 1], [0, 0]], [[0], [0]], [[1, 0]])
    assert not check_assumption4(plant)


def test_uncontrollable_pair_fails_assumption4():
    # C B has full rank but the second state is unreachable
    plant = AgentPlant([[1, 0], [0, 2]], [[1], [0]], [[1, 0]])
    assert numerical_rank(plant.C @ plant.B) == 1
    assert numerical_rank(controllability_matrix(plant.A, plant.B)) == 1
    assert not check_assumption4(plant)


def test_numerical_rank():
    assert numerical_rank(np.zeros((2, 2))) == 0
    assert numerical_rank(np.eye(3)) == 3
    assert numerical_rank(np.array([[1.0, 2.0], [2.0, 4.0 + 1e-14]])) == 1
    assert numerical_rank(np.zeros((0, 0))) == 0
    # tolerance is relative to the largest singular value
    assert numerical_rank(1e-20 * np.eye(2)) == 2
    assert numerical_rank(np.diag([1.0, 1e-12])) == 1


def test_plant_dimension_checks():
    for args in (
        ([[1, 0, 0], [0, 1, 0]], [[1], [0]], [[1, 0]]),   # A not square
        ([[1, 0], [0, 1]], [[1]], [[1, 0]]),              # B rows
        ([[1, 0], [0, 1]], [[1], [0]], [[1, 0, 0]]),      # C columns
    ):
        try:
            AgentPlant(*args)
        except ValueError:
            continue
        raise AssertionError(f"AgentPlant accepted {args}")


def test_euler_step_moves_output_by_h_times_v():
    rng = np.random.default_rng(3)
    for A, B, C in ((A12, B12, C12), (A3, B3, C3), (A45, B45, C45)):
        plant = AgentPlant(A, B, C, rng.uniform(-5, 5, size=len(A)))
        gains = synthesize_gains(plant)
        for _ in range(20):
            y = plant.output()
            v = rng.normal(size=y.size)
            y_next = step_state(plant, gains, v, 1e-3)
            assert np.allclose(y_next, y + 1e-3 * v, atol=1e-12)


def test_non_finite_step_aborts():
    plant = AgentPlant(A12, B12, C12, [1.0, 1.0])
    gains = synthesize_gains(plant)
    try:
        step_state(plant, gains, np.array([np.inf, 0.0]), 1e-3)
    except SimulationAbort:
        assert np.allclose(plant.x, [1.0, 1.0])
    else:
        raise AssertionError("non-finite input was integrated")


if __name__ == "__main__":
    from scripts.checks import run_module

    run_module(globals(), "Plant and Gain Synthesis Checks")
