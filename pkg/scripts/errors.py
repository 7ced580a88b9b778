"""
Exceptions raised by the simulator modules.
"""
from typing import List, Optional

ASSUMPTION_NAMES = {
    1: "communication graph is undirected and connected",
    2: "output sets are compact and cost/constraint functions are convex and bounded",
    3: "the set of feasible outputs is non-empty",
    4: "rank(C_i B_i) = p_i and (A_i, B_i) is controllable",
}


class ScenarioError(ValueError):
    """Scenario file could not be parsed or does not match the schema."""

    def __init__(self, message: str, line: Optional[int] = None, column: Optional[int] = None):
        self.line = line
        self.column = column
        if line is not None:
            message = f"{message} (line {line}, column {column})"
        super().__init__(message)


class AssumptionViolation(ValueError):
    """A standing assumption of the controller does not hold."""

    def __init__(self, assumption: int, message: str, agent: Optional[int] = None):
        self.assumption = assumption
        self.agent = agent
        where = f"agent {agent}: " if agent is not None else ""
        super().__init__(f"Assumption {assumption} violated ({ASSUMPTION_NAMES.get(assumption, 'unnamed')}): {where}{message}")


class ScenarioValidationError(ValueError):
    """All violations found while validating one scenario."""

    def __init__(self, violations: List[Exception]):
        self.violations = violations
        lines = "\n".join(f"  - {v}" for v in violations)
        super().__init__(f"{len(violations)} scenario violation(s):\n{lines}")


class SimulationAbort(RuntimeError):
    """Numerical blow-up or non-finite values during a run."""


class InfeasibleProgram(RuntimeError):
    """No candidate point satisfies every sampled constraint."""


class GridMismatch(ValueError):
    """Trajectory, oracle and scenario time grids disagree."""
