"""
Scenario files: parsing, schema validation and assumption checks.

A scenario is one JSON document holding the graph, every agent's plant,
output box, cost and constraint, the algorithm parameters, the oracle
settings and the sigma/iota sweep. It is the single source of truth for a
run; the command line only picks mode, seed and output directory.
"""
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Literal, Optional, Tuple, Union
import hashlib
import json
import sys

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, PositiveFloat, PositiveInt, ValidationError

sys.path.append(str(Path(__file__).parent.parent))
from config import (
    DEFAULT_EPSILON,
    DEFAULT_HORIZON,
    DEFAULT_IOTA,
    DEFAULT_SEED,
    DEFAULT_SIGMA,
    DEFAULT_STEP,
    INIT_MAX_ATTEMPTS,
    INIT_RANGE,
    ORACLE_ITERATIONS,
    ORACLE_RESOLUTION,
    ORACLE_SOLVER_REVISION,
    STATE_CEILING,
)
from scripts.controller import AlgorithmParams, Mode
from scripts.convex import AffineConstraint, BoxSet, FunctionBounds, QuadraticCost, compute_bounds
from scripts.errors import AssumptionViolation, ScenarioError, ScenarioValidationError
from scripts.graph import CommGraph, build_graph
from scripts.plant import AgentPlant, GainPair, check_assumption4, synthesize_gains


# ---------------------------------------------------------------------------
# File schema
# ---------------------------------------------------------------------------

class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


class GraphSection(_Section):
    nodes: PositiveInt
    edges: List[Tuple[int, int]]


class BoxSection(_Section):
    lower: List[float]
    upper: List[float]


class CostSection(_Section):
    family: Literal["quadratic"] = "quadratic"
    weights: List[float]
    base: List[float]
    amplitude: List[float]
    frequency: List[float]


class ConstraintRowSection(_Section):
    base: List[float]
    amplitude: List[float]
    frequency: List[float]
    offset: float


class ConstraintSection(_Section):
    family: Literal["affine"] = "affine"
    rows: List[ConstraintRowSection] = Field(min_length=1)


class AgentSection(_Section):
    name: Optional[str] = None
    A: List[List[float]]
    B: List[List[float]]
    C: List[List[float]]
    x0: Optional[List[float]] = None
    init_range: Tuple[float, float] = INIT_RANGE
    box: BoxSection
    cost: CostSection
    constraint: ConstraintSection


class ParamsSection(_Section):
    epsilon: PositiveFloat = DEFAULT_EPSILON
    k_mu: Union[Literal["auto"], PositiveFloat] = "auto"
    sigma: PositiveFloat = DEFAULT_SIGMA
    iota: PositiveFloat = DEFAULT_IOTA
    horizon: PositiveFloat = DEFAULT_HORIZON
    step: PositiveFloat = DEFAULT_STEP
    mode: Literal["continuous", "event_triggered"] = "continuous"
    seed: int = DEFAULT_SEED
    state_ceiling: PositiveFloat = STATE_CEILING


class OracleSection(_Section):
    samples: Optional[int] = Field(default=None, ge=2)  # None: one sample per grid point
    iterations: PositiveInt = ORACLE_ITERATIONS
    resolution: PositiveFloat = ORACLE_RESOLUTION
    seed: int = 0


class SweepSection(_Section):
    sigma: List[PositiveFloat] = [0.1, 0.5, 2.0]
    iota: List[PositiveFloat] = [DEFAULT_IOTA]


class ScenarioFile(_Section):
    name: str
    description: str = ""
    graph: GraphSection
    agents: List[AgentSection] = Field(min_length=1)
    params: ParamsSection = ParamsSection()
    oracle: OracleSection = OracleSection()
    sweep: SweepSection = SweepSection()


# ---------------------------------------------------------------------------
# Validated scenario
# ---------------------------------------------------------------------------

@dataclass(eq=False)
class AgentSpec:
    index: int
    name: str
    plant: AgentPlant
    gains: GainPair
    box: BoxSet
    cost: QuadraticCost
    constraint: AffineConstraint
    bounds: FunctionBounds
    init_range: Tuple[float, float]
    x0: Optional[np.ndarray] = None

    @property
    def output_dim(self) -> int:
        return self.box.dim


@dataclass(eq=False)
class ScenarioSpec:
    name: str
    graph: CommGraph
    agents: List[AgentSpec]
    params: AlgorithmParams
    horizon: float
    step: float
    seed: int
    state_ceiling: float
    K_f: float
    K_g: float
    source: ScenarioFile
    description: str = ""
    k_mu_auto: bool = field(default=False)

    @property
    def N(self) -> int:
        return self.graph.node_count

    @property
    def q(self) -> int:
        return self.agents[0].constraint.rows

    @property
    def steps(self) -> int:
        return int(round(self.horizon / self.step))

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.steps + 1) * self.step

    @property
    def output_dims(self) -> List[int]:
        return [a.output_dim for a in self.agents]

    @property
    def costs(self):
        return [a.cost for a in self.agents]

    @property
    def constraints(self):
        return [a.constraint for a in self.agents]

    @property
    def boxes(self):
        return [a.box for a in self.agents]

    @property
    def oracle_samples(self) -> int:
        return self.source.oracle.samples or self.steps + 1

    def initial_states(self, seed: Optional[int] = None) -> List[np.ndarray]:
        """
        x_i(0) per agent: the explicit x0 when given, otherwise uniform draws
        in init_range, repeated until C_i x_i(0) lies in the output box.
        """
        rng = np.random.default_rng(self.seed if seed is None else seed)
        states = []
        for agent in self.agents:
            if agent.x0 is not None:
                states.append(agent.x0.copy())
                continue
            n = agent.plant.dims[0]
            low, high = agent.init_range
            for _ in range(INIT_MAX_ATTEMPTS):
                x = rng.uniform(low, high, size=n)
                if agent.box.contains(agent.plant.C @ x):
                    states.append(x)
                    break
            else:
                raise ScenarioError(
                    f"agent {agent.index}: no initial state in [{low}, {high}]^{n} maps into the output box "
                    f"after {INIT_MAX_ATTEMPTS} draws"
                )
        return states

    def with_params(self, **changes) -> "ScenarioSpec":
        """Same scenario with some params-section entries replaced (re-validated)."""
        params = self.source.params.model_copy(update=changes)
        return build_spec(self.source.model_copy(update={"params": params}), quiet=True)

    def to_dict(self) -> dict:
        return self.source.model_dump(mode="json")


def _matrix(rows) -> np.ndarray:
    return np.array(rows, dtype=float) if rows else np.zeros((0, 0))


def _build_agent(i: int, section: AgentSection, horizon: float, violations: list) -> Optional[AgentSpec]:
    count = len(violations)
    try:
        plant = AgentPlant(_matrix(section.A), _matrix(section.B), _matrix(section.C))
    except ValueError as e:
        violations.append(ScenarioError(f"agent {i}: {e}"))
        return None

    gains = None
    if not check_assumption4(plant):
        violations.append(AssumptionViolation(4, "rank(C B) != p or (A, B) not controllable", agent=i))
    else:
        gains = synthesize_gains(plant)

    _, _, p = plant.dims
    box = cost = constraint = None
    try:
        box = BoxSet(section.box.lower, section.box.upper)
        if box.dim != p:
            raise ValueError(f"box has dimension {box.dim}, output dimension is {p}")
    except ValueError as e:
        violations.append(AssumptionViolation(2, str(e), agent=i))

    c = section.cost
    try:
        cost = QuadraticCost(c.weights, c.base, c.amplitude, c.frequency)
        if cost.dim != p:
            raise ValueError(f"cost has dimension {cost.dim}, output dimension is {p}")
    except ValueError as e:
        violations.append(AssumptionViolation(2, str(e), agent=i))

    rows = section.constraint.rows
    try:
        constraint = AffineConstraint(
            [r.base for r in rows], [r.amplitude for r in rows], [r.frequency for r in rows], [r.offset for r in rows]
        )
        if constraint.dim != p:
            raise ValueError(f"constraint has dimension {constraint.dim}, output dimension is {p}")
    except ValueError as e:
        violations.append(AssumptionViolation(2, str(e), agent=i))

    x0 = None
    if section.x0 is not None:
        x0 = np.array(section.x0, dtype=float)
        if x0.shape != (plant.dims[0],):
            violations.append(ScenarioError(f"agent {i}: x0 has length {x0.size}, expected {plant.dims[0]}"))
        elif box is not None and box.dim == p and not box.contains(plant.C @ x0):
            violations.append(ScenarioError(f"agent {i}: initial output C x0 = {plant.C @ x0} lies outside the box"))

    low, high = section.init_range
    if low > high:
        violations.append(ScenarioError(f"agent {i}: init_range lower {low} exceeds upper {high}"))

    if len(violations) > count:
        return None
    return AgentSpec(
        index=i,
        name=section.name or f"agent_{i}",
        plant=plant,
        gains=gains,
        box=box,
        cost=cost,
        constraint=constraint,
        bounds=compute_bounds(cost, constraint, box, horizon),
        init_range=(low, high),
        x0=x0,
    )


def build_spec(file: ScenarioFile, quiet: bool = False) -> ScenarioSpec:
    """
    Validate a parsed scenario against the standing assumptions.

    Raises:
        ScenarioValidationError: listing every violation found
    """
    violations: list = []
    params = file.params

    graph = None
    try:
        graph = build_graph(file.graph.edges, file.graph.nodes)
    except (AssumptionViolation, ValueError) as e:
        violations.append(e if isinstance(e, AssumptionViolation) else AssumptionViolation(1, str(e)))

    if len(file.agents) != file.graph.nodes:
        violations.append(ScenarioError(f"graph has {file.graph.nodes} nodes but {len(file.agents)} agents are listed"))

    agents = [_build_agent(i, a, params.horizon, violations) for i, a in enumerate(file.agents)]

    rows = {a.constraint.rows for a in agents if a is not None}
    if len(rows) > 1:
        violations.append(ScenarioError(f"agents disagree on the constraint dimension q: {sorted(rows)}"))

    ratio = params.horizon / params.step
    if abs(ratio - round(ratio)) > 1e-6 * max(1.0, ratio):
        violations.append(ScenarioError(f"horizon {params.horizon} is not a whole number of steps {params.step}"))

    if violations:
        raise ScenarioValidationError(violations)

    K_f = max(a.bounds.K_f for a in agents)
    K_g = max(a.bounds.K_g for a in agents)
    N = graph.node_count
    auto = params.k_mu == "auto"
    k_mu = N * K_g if auto else float(params.k_mu)
    if not auto and k_mu < N * K_g and not quiet:
        print(f"Warning: K_mu = {k_mu:g} is below N*K_g = {N * K_g:g}; the regret/fit bounds are not guaranteed")

    return ScenarioSpec(
        name=file.name,
        description=file.description,
        graph=graph,
        agents=agents,
        params=AlgorithmParams(
            epsilon=params.epsilon, k_mu=k_mu, sigma=params.sigma, iota=params.iota, mode=Mode(params.mode)
        ),
        horizon=params.horizon,
        step=params.step,
        seed=params.seed,
        state_ceiling=params.state_ceiling,
        K_f=K_f,
        K_g=K_g,
        source=file,
        k_mu_auto=auto,
    )


def _format_validation(e: ValidationError) -> str:
    lines = []
    for err in e.errors():
        loc = ".".join(str(part) for part in err["loc"])
        lines.append(f"  - {loc}: {err['msg']}")
    return "\n".join(lines)


def parse_scenario(raw: Dict, origin: str = "<scenario>") -> ScenarioSpec:
    """Validate an already-decoded scenario document (or a run manifest embedding one)."""
    if isinstance(raw, dict) and "scenario" in raw and "scenario_hash" in raw:
        raw = raw["scenario"]
    try:
        file = ScenarioFile.model_validate(raw)
    except ValidationError as e:
        raise ScenarioError(f"Scenario {origin} does not match the schema:\n{_format_validation(e)}")
    return build_spec(file)


def load_scenario(path) -> ScenarioSpec:
    """
    Load and validate a scenario file.

    Args:
        path: JSON scenario file, or a manifest.json written by a run

    Raises:
        FileNotFoundError: missing file
        ScenarioError: malformed JSON (with line and column) or schema mismatch
        ScenarioValidationError: assumption violations naming agent and assumption
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Scenario file not found: {path}")
    with open(path, "r", encoding="utf-8") as f:
        text = f.read()
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as e:
        raise ScenarioError(f"Malformed scenario {path}: {e.msg}", line=e.lineno, column=e.colno)
    return parse_scenario(raw, origin=str(path))


def _source(spec_or_file) -> ScenarioFile:
    return spec_or_file.source if isinstance(spec_or_file, ScenarioSpec) else spec_or_file


def dump_scenario(spec_or_file, path=None) -> str:
    """Canonical JSON (sorted keys); written to path when given."""
    text = json.dumps(_source(spec_or_file).model_dump(mode="json"), indent=2, sort_keys=True)
    if path is not None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8") as f:
            f.write(text + "\n")
    return text


def _digest(payload) -> str:
    text = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def scenario_hash(spec_or_file) -> str:
    return _digest(_source(spec_or_file).model_dump(mode="json"))


def oracle_key(spec: ScenarioSpec) -> str:
    """Hash of everything the clairvoyant program depends on."""
    data = spec.source.model_dump(mode="json")
    payload = {
        "agents": [{k: a[k] for k in ("box", "cost", "constraint")} for a in data["agents"]],
        "horizon": spec.horizon,
        "samples": spec.oracle_samples,
        "iterations": data["oracle"]["iterations"],
        "seed": data["oracle"]["seed"],
        "resolution": data["oracle"]["resolution"],
        "solver": ORACLE_SOLVER_REVISION,
    }
    return _digest(payload)
