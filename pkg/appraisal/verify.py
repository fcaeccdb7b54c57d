"""Random admissible networks, brute-force oracles and the executable check suites."""
import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable, Dict, FrozenSet, Iterable, List, Optional, Sequence

import numpy as np

from .dynamics import (
    alpha_threshold,
    boundary_derivative,
    phi_r,
    phi_r_rate,
    vector_field,
    vertex_threshold,
)
from .equilibrium import (
    balance_residual,
    jacobian,
    mu_upper,
    psi,
    root_block_equilibrium,
    scaled_coefficients,
    solve_equilibrium,
)
from .network import (
    MIN_OUT_DEGREE,
    WEIGHT_CAP,
    AppraisalError,
    NetworkError,
    NetworkModel,
    RawNetwork,
    enumerate_paths,
    path_weight,
    support_structure,
    supporting_set,
    validate_network,
)
from .simulation import IntegratorConfig, Trajectory, integrate

logger = logging.getLogger(__name__)

__all__ = [
    "BoundaryCase",
    "Failure",
    "GeneratorSpec",
    "SUITES",
    "SuiteReport",
    "chain_into_triad",
    "path_weight",
    "random_network",
    "reachability_oracle",
    "run_all",
    "run_suite",
    "sample_boundary_state",
    "sample_simplex",
]

MIN_N = 3
MAX_N = 12
ORACLE_MAX_N = 7
ORACLE_MAX_LAYER = 4
REPELLER_SAMPLES = 1000
INVARIANCE_STARTS = 3
CONVERGENCE_INTERIOR_STARTS = 3
CONVERGENCE_BOUNDARY_STARTS = 2
MIN_DRAW_WEIGHT = 0.1


class GeneratorError(AppraisalError):
    """Raised when a random network or state cannot be produced."""


class InfeasibleSpecError(GeneratorError):
    pass


class UnknownSuiteError(AppraisalError):
    def __init__(self, name: str):
        self.name = name
        super().__init__(f"unknown suite {name!r}; choose from {', '.join(SUITES)} or all")


@dataclass(frozen=True)
class GeneratorSpec:
    n: int
    non_root_count: int = 0
    seed: int = 0
    min_out_degree: int = MIN_OUT_DEGREE

    @classmethod
    def strongly_connected(cls, n: int, seed: int = 0, min_out_degree: int = MIN_OUT_DEGREE):
        return cls(n=n, non_root_count=0, seed=seed, min_out_degree=min_out_degree)

    @classmethod
    def rooted_with_leaves(
        cls, n: int, non_root_count: int, seed: int = 0, min_out_degree: int = MIN_OUT_DEGREE
    ):
        return cls(n=n, non_root_count=non_root_count, seed=seed, min_out_degree=min_out_degree)

    @property
    def topology(self) -> str:
        if self.non_root_count == 0:
            return "StronglyConnected"
        return f"RootedWithLeaves({self.non_root_count})"

    @property
    def core_size(self) -> int:
        return self.n - self.non_root_count

    def check(self) -> None:
        if self.n < MIN_N:
            raise InfeasibleSpecError(f"n must be >= {MIN_N}, got {self.n}")
        if not 0 <= self.non_root_count <= self.n - MIN_N:
            raise InfeasibleSpecError(
                f"non_root_count must lie in [0, {self.n - MIN_N}], got {self.non_root_count}"
            )
        if self.min_out_degree < MIN_OUT_DEGREE:
            raise InfeasibleSpecError(f"min_out_degree must be >= {MIN_OUT_DEGREE}")
        if self.min_out_degree > self.core_size - 1:
            raise InfeasibleSpecError(
                f"a root core of {self.core_size} vertices cannot give out-degree "
                f"{self.min_out_degree}"
            )
        if not 0 <= self.seed < 2**64:
            raise InfeasibleSpecError(f"seed must be a 64-bit unsigned integer, got {self.seed}")


def _capped_weights(rng: np.random.Generator, degree: int) -> List[float]:
    """Uniform draws normalised to sum one, then clipped at the cap with the
    excess spread over the unclipped entries until none exceeds it."""
    weights = rng.uniform(MIN_DRAW_WEIGHT, 1.0, size=degree)
    weights /= weights.sum()
    # each pass caps at least one more entry, so this ends within `degree` passes
    while True:
        over = weights > WEIGHT_CAP
        if not over.any():
            break
        excess = float(np.sum(weights[over] - WEIGHT_CAP))
        weights[over] = WEIGHT_CAP
        free = weights < WEIGHT_CAP
        if not free.any():
            break
        weights[free] += excess * weights[free] / weights[free].sum()
    values = [min(float(w), WEIGHT_CAP) for w in weights]
    # absorb rounding into the smallest entry, which is furthest from the cap
    smallest = int(np.argmin(values))
    values[smallest] += 1.0 - math.fsum(values)
    return values


def random_network(spec: GeneratorSpec) -> NetworkModel:
    """A random network satisfying every model assumption.

    The root core is a Hamiltonian cycle plus random extra edges; each leaf
    sends at least min_out_degree edges into the core and may also listen to
    one earlier leaf. Vertex labels are shuffled.
    """
    spec.check()
    rng = np.random.default_rng(spec.seed)
    labels = [int(v) for v in rng.permutation(spec.n)]
    core, leaves = labels[: spec.core_size], labels[spec.core_size :]
    k = len(core)

    targets: Dict[int, List[int]] = {}
    for t, vertex in enumerate(core):
        successor = core[(t + 1) % k]
        degree = int(rng.integers(spec.min_out_degree, k))
        candidates = [u for u in core if u not in (vertex, successor)]
        extra = rng.choice(candidates, size=degree - 1, replace=False)
        targets[vertex] = [successor, *(int(u) for u in extra)]

    for t, leaf in enumerate(leaves):
        degree = int(rng.integers(spec.min_out_degree, k + 1))
        chosen = [int(u) for u in rng.choice(core, size=degree, replace=False)]
        if t > 0 and rng.random() < 0.5:
            chosen.append(int(rng.choice(leaves[:t])))
        targets[leaf] = chosen

    edges = []
    for src in sorted(targets):
        row = sorted(targets[src])
        for dst, weight in zip(row, _capped_weights(rng, len(row))):
            edges.append((src, dst, weight))

    try:
        return validate_network(RawNetwork(n=spec.n, edges=tuple(edges)))
    except NetworkError as exc:
        raise GeneratorError(f"generator produced an invalid network for {spec}: {exc}") from exc


def sample_simplex(rng: np.random.Generator, n: int) -> np.ndarray:
    """Uniform point on the unit simplex from normalised exponentials."""
    draws = rng.exponential(size=n)
    return draws / draws.sum()


def sample_boundary_state(
    rng: np.random.Generator, model: NetworkModel, zero_set: Iterable[int]
) -> np.ndarray:
    """Uniform simplex sample with the given coordinates set to zero and renormalised."""
    zeros = sorted(set(zero_set))
    if len(zeros) >= model.n - 1:
        raise GeneratorError("a boundary state needs at least two positive coordinates")
    x = sample_simplex(rng, model.n)
    x[zeros] = 0.0
    return x / x.sum()


@dataclass(frozen=True, eq=False)
class BoundaryCase:
    model: NetworkModel
    state: np.ndarray
    target: int
    order: int
    leading_value: float


def chain_into_triad(chain_length: int) -> BoundaryCase:
    """K3 on 0, 1, 2 with a chain of leaves 3, 4, ... hanging off it.

    Leaf 3 listens to 0 and 1; every later leaf listens to its predecessor and
    to 0, all weights 1/2. The state is zero on the first chain_length leaves
    and uniform on the rest, so the leading derivative at leaf 3 has order
    chain_length and value (1/2)**chain_length * (1 - 1/4) / 4.
    """
    if chain_length < 1:
        raise GeneratorError(f"chain length must be >= 1, got {chain_length}")
    n = 3 + chain_length + 1
    edges = [(0, 1, 0.5), (0, 2, 0.5), (1, 0, 0.5), (1, 2, 0.5), (2, 0, 0.5), (2, 1, 0.5)]
    edges += [(3, 0, 0.5), (3, 1, 0.5)]
    for leaf in range(4, n):
        edges += [(leaf, 0, 0.5), (leaf, leaf - 1, 0.5)]
    model = validate_network(RawNetwork(n=n, edges=tuple(edges)))

    state = np.zeros(n)
    positive = [0, 1, 2, n - 1]
    state[positive] = 1.0 / len(positive)
    share = 1.0 / len(positive)
    return BoundaryCase(
        model=model,
        state=state,
        target=3,
        order=chain_length,
        leading_value=0.5**chain_length * (1.0 - share) * share,
    )


def reachability_oracle(model: NetworkModel) -> FrozenSet[int]:
    """Root set from the Warshall transitive closure: vertices every vertex reaches."""
    n = model.n
    reach = np.eye(n, dtype=bool)
    for src, dst, _ in model.edges:
        reach[src, dst] = True
    for k in range(n):
        reach |= reach[:, k, np.newaxis] & reach[np.newaxis, k, :]
    return frozenset(int(i) for i in np.flatnonzero(reach.all(axis=0)))


def alpha_by_paths(model: NetworkModel, j: int, i: int, k: int) -> float:
    """Sum of path weights over every simple path of length k from j to i."""
    return math.fsum(path_weight(model, path) for path in enumerate_paths(model, j, i, k))


@dataclass
class Failure:
    case: int
    seed: int
    invariant: str
    magnitude: Optional[float]
    spec: Optional[Dict[str, int]] = None
    state: Optional[List[float]] = None

    def as_dict(self) -> Dict:
        return asdict(self)


@dataclass
class SuiteReport:
    suite: str
    cases: int
    seed: int
    failures: List[Failure] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures

    def as_dict(self) -> Dict:
        return {
            "suite": self.suite,
            "cases": self.cases,
            "seed": self.seed,
            "passed": self.passed,
            "failures": [failure.as_dict() for failure in self.failures],
        }

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), sort_keys=True, indent=2)


@dataclass
class _Case:
    index: int
    seed: int
    horizon: float
    rng: np.random.Generator = field(init=False)
    failures: List[Failure] = field(default_factory=list)
    spec: Optional[GeneratorSpec] = None

    def __post_init__(self):
        self.rng = np.random.default_rng(self.seed)

    def draw_spec(self, max_n: int = MAX_N) -> GeneratorSpec:
        n = int(self.rng.integers(MIN_N, max_n + 1))
        leaves = int(self.rng.integers(0, n - MIN_N + 1))
        self.spec = GeneratorSpec(
            n=n, non_root_count=leaves, seed=int(self.rng.integers(0, 2**63))
        )
        return self.spec

    def draw_network(self, max_n: int = MAX_N) -> NetworkModel:
        return random_network(self.draw_spec(max_n))

    def fail(
        self, invariant: str, magnitude: Optional[float], state: Optional[Sequence[float]] = None
    ):
        logger.warning("[case %d] %s violated by %s", self.index, invariant, magnitude)
        self.failures.append(
            Failure(
                case=self.index,
                seed=self.seed,
                invariant=invariant,
                magnitude=None if magnitude is None else float(magnitude),
                spec=asdict(self.spec) if self.spec is not None else None,
                state=[float(v) for v in state] if state is not None else None,
            )
        )

    def expect(self, ok: bool, invariant: str, magnitude: float, state=None) -> None:
        if not ok:
            self.fail(invariant, magnitude, state)


def _non_vertex_start(case: _Case, model: NetworkModel) -> np.ndarray:
    return sample_simplex(case.rng, model.n)


def _random_boundary_start(case: _Case, model: NetworkModel) -> np.ndarray:
    size = int(case.rng.integers(1, model.n - 1))
    zeros = case.rng.choice(model.n, size=size, replace=False)
    return sample_boundary_state(case.rng, model, zeros)


def _check_phi_monotone(case: _Case, model: NetworkModel, states: np.ndarray) -> None:
    values = phi_r(model, states)
    drops = np.diff(values)
    if drops.size:
        case.expect(drops.min() >= -1e-9, "phi_r non-decreasing", -float(drops.min()))
    rates = phi_r_rate(model, states)
    case.expect(float(np.min(rates)) >= 0.0, "phi_r rate non-negative", -float(np.min(rates)))


def _check_simplex(case: _Case, traj: Trajectory, x0: np.ndarray) -> None:
    case.expect(traj.max_simplex_drift <= 1e-8, "simplex sum drift", traj.max_simplex_drift, x0)
    case.expect(traj.min_component >= -1e-8, "simplex non-negativity", -traj.min_component, x0)


def _suite_invariance(case: _Case) -> None:
    model = case.draw_network()
    cfg = IntegratorConfig(horizon=min(case.horizon, 200.0), stop_on_convergence=True)

    for _ in range(INVARIANCE_STARTS):
        x0 = _non_vertex_start(case, model)
        conservation = abs(math.fsum(vector_field(model, x0)))
        case.expect(conservation <= 1e-12, "vector field sums to zero", conservation, x0)
        traj = integrate(model, x0, cfg)
        _check_simplex(case, traj, x0)
        _check_phi_monotone(case, model, traj.states)

    on_roots = np.zeros(model.n)
    on_roots[list(model.roots)] = sample_simplex(case.rng, len(model.roots))
    traj = integrate(model, on_roots, cfg)
    _check_simplex(case, traj, on_roots)
    leak = float(np.max(traj.states[:, ~model.root_mask], initial=0.0))
    case.expect(leak <= 1e-10, "root face invariance", leak, on_roots)

    if model.non_roots:
        leaf = int(case.rng.choice(model.non_roots))
        support = sorted(supporting_set(model, [leaf]))
        if len(support) < model.n - 1:
            x0 = sample_boundary_state(case.rng, model, support)
            traj = integrate(model, x0, cfg)
            _check_simplex(case, traj, x0)
            leak = float(np.max(traj.states[:, support]))
            case.expect(leak <= 1e-10, "supporting-set complement invariance", leak, x0)


def _suite_repeller(case: _Case) -> None:
    model = case.draw_network()
    n = model.n
    per_vertex = max(1, REPELLER_SAMPLES // n)
    for i in range(n):
        low = vertex_threshold(model, i) + 1e-6
        high = 1.0 - 1e-6
        x_i = case.rng.uniform(low, high, size=per_vertex)
        rest = case.rng.exponential(size=(per_vertex, n - 1))
        rest /= rest.sum(axis=1, keepdims=True)
        states = np.insert(rest * (1.0 - x_i)[:, np.newaxis], i, x_i, axis=1)
        f_i = vector_field(model, states)[:, i]
        worst = int(np.argmax(f_i))
        case.expect(f_i[worst] < 0.0, f"repeller sign at vertex {i}", float(f_i[worst]), states[worst])


def _suite_convergence(case: _Case) -> None:
    model = case.draw_network()
    report = solve_equilibrium(model)
    cfg = IntegratorConfig(horizon=case.horizon, stop_on_convergence=True)
    starts = [_non_vertex_start(case, model) for _ in range(CONVERGENCE_INTERIOR_STARTS)]
    starts += [_random_boundary_start(case, model) for _ in range(CONVERGENCE_BOUNDARY_STARTS)]
    for x0 in starts:
        traj = integrate(model, x0, cfg)
        if traj.converged_at is None:
            case.fail("converges within horizon", float(np.max(np.abs(vector_field(model, traj.final_state)))), x0)
            continue
        distance = float(np.sum(np.abs(traj.final_state - report.x_star)))
        case.expect(distance < 1e-6, "converges to the equilibrium", distance, x0)
        case.expect(traj.q_entry_time is not None, "enters Q in finite time", 1.0, x0)
        if model.non_roots:
            residue = float(np.max(traj.final_state[~model.root_mask]))
            case.expect(residue < 1e-6, "non-root appraisals decay", residue, x0)
        _check_phi_monotone(case, model, traj.states)
        logger.info("[case %d] converged at t=%.3f", case.index, traj.converged_at)


def _suite_equilibrium(case: _Case) -> None:
    model = case.draw_network()
    report = solve_equilibrium(model)
    x_star = report.x_star
    roots = model.root_mask

    case.expect(report.residual <= 1e-10, "equilibrium residual", report.residual)
    off_root = float(np.max(np.abs(x_star[~roots]), initial=0.0))
    case.expect(off_root == 0.0, "equilibrium zero off the roots", off_root)
    cap = alpha_threshold(model.n)
    case.expect(float(np.min(x_star[roots])) > 0.0, "equilibrium positive on roots", float(np.min(x_star[roots])))
    case.expect(float(np.max(x_star)) <= cap, "equilibrium inside Q", float(np.max(x_star)) - cap)
    case.expect(report.zero_eig_count == 1, "single zero eigenvalue", float(report.zero_eig_count))
    case.expect(report.stable, "equilibrium stable", report.max_other_real_part)

    v = report.stationary.v
    case.expect(float(np.max(v)) <= 1.0 / 3.0 + 1e-12, "stationary entries at most 1/3", float(np.max(v)))
    upper = mu_upper(v)
    top = psi(v, upper)
    case.expect(top > 1.0, "psi exceeds one at mu_1", top)
    grid = [psi(v, mu) for mu in np.linspace(0.0, upper, 100)]
    steps = np.diff(grid)
    case.expect(bool(np.all(steps > 0.0)), "psi strictly increasing", float(np.min(steps)))

    balance = balance_residual(model, x_star)
    case.expect(balance <= 1e-10, "balance identity", balance)
    try:
        scaled_coefficients(model, x_star)
    except AppraisalError as exc:
        case.fail(f"scaled coefficient row sums: {exc}", 1.0)
    restricted = root_block_equilibrium(model)
    gap = float(np.max(np.abs(restricted - x_star)))
    case.expect(gap <= 1e-10, "root block consistency", gap)

    h = 1e-6
    exact = jacobian(model, x_star)
    columns = []
    for j in range(model.n):
        step = np.zeros(model.n)
        step[j] = h
        columns.append((vector_field(model, x_star + step) - vector_field(model, x_star - step)) / (2 * h))
    numeric = np.column_stack(columns)
    error = float(np.max(np.abs(numeric - exact)) / max(1.0, float(np.max(np.abs(exact)))))
    case.expect(error <= 1e-5, "finite-difference jacobian", error)


def _suite_boundary(case: _Case) -> None:
    model = case.draw_network()
    if model.non_roots and case.rng.random() < 0.5:
        leaf = int(case.rng.choice(model.non_roots))
        zeros = supporting_set(model, [leaf])
        target = leaf
    else:
        size = int(case.rng.integers(1, model.n - 1))
        zeros = {int(u) for u in case.rng.choice(model.n, size=size, replace=False)}
        target = int(case.rng.choice(sorted(zeros)))
    if len(zeros) >= model.n - 1:
        return
    x0 = sample_boundary_state(case.rng, model, zeros)

    leading = boundary_derivative(model, x0, target)
    if leading is None:
        structure = support_structure(model, target)
        stray = float(np.max(x0[sorted(structure.supporting_set)]))
        case.expect(stray == 0.0, "no supporting path means a zero supporting set", stray, x0)
        traj = integrate(model, x0, IntegratorConfig(horizon=min(case.horizon, 50.0)))
        held = float(np.max(traj.states[:, target]))
        case.expect(held <= 1e-12, "always-zero coordinate stays zero", held, x0)
    else:
        case.expect(leading.value > 0.0, "leading derivative positive", -leading.value, x0)
        layer = support_structure(model, target).layer_of(leading.path[0])
        case.expect(layer == leading.order, "critical path starts in its layer", float(leading.order), x0)

    chain = chain_into_triad(1 + case.index % 3)
    t = 1e-2
    traj = integrate(chain.model, chain.state, IntegratorConfig(step=1e-3, horizon=t))
    predicted = chain.leading_value * t**chain.order / math.factorial(chain.order)
    observed = float(traj.final_state[chain.target])
    relative = abs(observed - predicted) / predicted
    case.expect(relative < 0.1, f"leading order {chain.order} fit", relative, chain.state)


def _check_support(case: _Case, model: NetworkModel) -> None:
    oracle_roots = reachability_oracle(model)
    case.expect(oracle_roots == model.root_set, "root set matches reachability", float(len(oracle_roots ^ model.root_set)))

    for i in model.roots:
        escaped = [j for j in model.out_neighbors(i) if j not in model.root_set]
        case.expect(not escaped, "roots listen only to roots", float(len(escaped)))

    for i in range(model.n):
        structure = support_structure(model, i)
        for k, fresh in enumerate(structure.differences):
            if k == 0 or k > ORACLE_MAX_LAYER:
                continue
            previous = structure.layers[k - 1]
            for j in sorted(fresh):
                gap = abs(structure.alpha[j] - alpha_by_paths(model, j, i, k))
                case.expect(gap <= 1e-12, f"path coefficient {j}->{i}", gap)
                reach_back = {u for u in model.out_neighbors(j) if u in previous}
                ok = bool(reach_back) and reach_back <= structure.differences[k - 1]
                case.expect(ok, f"layer structure at {j}->{i}", float(k))


def _suite_support_oracle(case: _Case) -> None:
    _check_support(case, case.draw_network(max_n=ORACLE_MAX_N))
    # leaf chains reach layers 3 and 4
    _check_support(case, chain_into_triad(ORACLE_MAX_LAYER - case.index % 2).model)


SUITES: Dict[str, Callable[[_Case], None]] = {
    "invariance": _suite_invariance,
    "repeller": _suite_repeller,
    "convergence": _suite_convergence,
    "equilibrium": _suite_equilibrium,
    "boundary": _suite_boundary,
    "support_oracle": _suite_support_oracle,
}


def case_seeds(seed: int, count: int) -> List[int]:
    if not 0 <= seed < 2**64:
        raise GeneratorError(f"seed must be a 64-bit unsigned integer, got {seed}")
    return [int(s) for s in np.random.SeedSequence(seed).generate_state(count, dtype=np.uint64)]


def _run_case(check: Callable[[_Case], None], index: int, seed: int, horizon: float) -> List[Failure]:
    case = _Case(index=index, seed=seed, horizon=horizon)
    try:
        check(case)
    except AppraisalError as exc:
        case.fail(f"{type(exc).__name__}: {exc}", None)
    return case.failures


def run_suite(
    name: str,
    count: int,
    seed: int = 0,
    workers: int = 1,
    horizon: float = 500.0,
) -> SuiteReport:
    """Run `count` independent cases of one suite; failures are reported, not raised."""
    if name not in SUITES:
        raise UnknownSuiteError(name)
    if count < 0:
        raise GeneratorError(f"count must be non-negative, got {count}")
    check = SUITES[name]
    seeds = case_seeds(seed, count)
    indices = range(count)
    horizons = [horizon] * count
    checks = [check] * count
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_case, checks, indices, seeds, horizons))
    else:
        results = list(map(_run_case, checks, indices, seeds, horizons))

    report = SuiteReport(suite=name, cases=count, seed=seed)
    for failures in results:
        report.failures.extend(failures)
    logger.info("suite %s: %d cases, %d failures", name, count, len(report.failures))
    return report


def run_all(count: int, seed: int = 0, workers: int = 1, horizon: float = 500.0) -> List[SuiteReport]:
    return [run_suite(name, count, seed, workers, horizon) for name in SUITES]
