import logging
import math
from dataclasses import dataclass
from typing import Any, Dict, Iterable, List, Optional, Tuple, Union

import numpy as np
from scipy import optimize

from .dynamics import DimensionMismatchError, vector_field
from .network import AppraisalError, NetworkModel

logger = logging.getLogger(__name__)

STATIONARY_CLAMP = 1e-13
STATIONARY_RESIDUAL_TOL = 1e-10
STATIONARY_BOUND = 1.0 / 3.0
SQRT_CLAMP = 1e-15
BISECTION_RTOL = 1e-14
BISECTION_MAXITER = 200
RESIDUAL_TOL = 1e-10
ZERO_EIG_TOL = 1e-8
NEGATIVE_MARGIN = 1e-10
ROW_SUM_TOL = 1e-10


class EquilibriumError(AppraisalError):
    """Raised when the equilibrium machinery meets an inconsistent model."""


class SingularSystemError(EquilibriumError):
    pass


class SignPatternViolationError(EquilibriumError):
    pass


class MuOutOfRangeError(EquilibriumError):
    def __init__(self, mu: float, upper: float):
        self.mu, self.upper = mu, upper
        super().__init__(f"mu={mu!r} is outside [0, {upper!r}]")


class BisectionFailedError(EquilibriumError):
    pass


class EigenFailureError(EquilibriumError):
    pass


class NotAnEquilibriumError(EquilibriumError):
    pass


@dataclass(frozen=True, eq=False)
class StationaryVector:
    """Left null vector of C normalised to sum 1; zero off the root set."""

    v: np.ndarray

    @property
    def mu_upper(self) -> float:
        return mu_upper(self)


@dataclass(frozen=True, eq=False)
class StabilityReport:
    spectrum: np.ndarray
    zero_eig_count: int
    max_other_real_part: float
    stable: bool


@dataclass(frozen=True, eq=False)
class EquilibriumReport:
    x_star: np.ndarray
    mu: float
    residual: float
    jacobian_spectrum: np.ndarray
    zero_eig_count: int
    max_other_real_part: float
    stable: bool
    stationary: StationaryVector

    def as_dict(self) -> Dict[str, Any]:
        return {
            "x_star": [float(value) for value in self.x_star],
            "mu": float(self.mu),
            "residual": float(self.residual),
            "spectrum": [[float(eig.real), float(eig.imag)] for eig in self.jacobian_spectrum],
            "zero_eig_count": int(self.zero_eig_count),
            "max_other_real_part": float(self.max_other_real_part),
            "stable": bool(self.stable),
        }


@dataclass(frozen=True, eq=False)
class RootBlocks:
    """C reordered roots-first: [[C11, 0], [C21, C22]]."""

    roots: Tuple[int, ...]
    non_roots: Tuple[int, ...]
    c11: np.ndarray
    c12: np.ndarray
    c21: np.ndarray
    c22: np.ndarray


@dataclass(frozen=True, eq=False)
class VertexEquilibrium:
    vertex: int
    spectrum: np.ndarray
    max_real_part: float

    @property
    def unstable(self) -> bool:
        return self.max_real_part > NEGATIVE_MARGIN


def _null_vector(matrix: np.ndarray) -> np.ndarray:
    """Solve matrix^T v = 0 with the last equation replaced by sum(v) = 1."""
    size = matrix.shape[0]
    system = matrix.T.copy()
    system[-1, :] = 1.0
    rhs = np.zeros(size)
    rhs[-1] = 1.0
    try:
        v = np.linalg.solve(system, rhs)
    except np.linalg.LinAlgError as exc:
        raise SingularSystemError(f"stationary system is singular: {exc}") from exc
    v[np.abs(v) < STATIONARY_CLAMP] = 0.0
    return v


def stationary_vector(model: NetworkModel) -> StationaryVector:
    """The left null vector of C (C^T v = 0), normalised to sum one."""
    matrix = model.coefficient_matrix
    v = _null_vector(matrix)

    residual = float(np.max(np.abs(matrix.T @ v)))
    if residual > STATIONARY_RESIDUAL_TOL:
        raise SingularSystemError(f"stationary residual {residual:.3e} exceeds tolerance")
    roots = model.root_mask
    if np.any(v[roots] <= 0.0):
        raise SignPatternViolationError("stationary vector is not positive on the root set")
    if np.any(v[~roots] != 0.0):
        raise SignPatternViolationError("stationary vector is nonzero off the root set")
    if np.max(v) > STATIONARY_BOUND + 1e-12:
        raise SignPatternViolationError(f"stationary entry {np.max(v)!r} exceeds 1/3")
    return StationaryVector(v=v)


def _weights(v: Union[StationaryVector, np.ndarray]) -> np.ndarray:
    return v.v if isinstance(v, StationaryVector) else np.asarray(v, dtype=float)


def mu_upper(v: Union[StationaryVector, np.ndarray]) -> float:
    """mu_1 = 1/(4 max v): the largest multiplier keeping every square root real."""
    return 1.0 / (4.0 * float(np.max(_weights(v))))


def _appraisals(weights: np.ndarray, mu: float) -> np.ndarray:
    # (1 - sqrt(1 - 4 mu v)) / 2 written without the cancellation
    radicand = 1.0 - 4.0 * mu * weights
    radicand = np.where((radicand < 0.0) & (radicand >= -SQRT_CLAMP), 0.0, radicand)
    return 2.0 * mu * weights / (1.0 + np.sqrt(radicand))


def psi(v: Union[StationaryVector, np.ndarray], mu: float) -> float:
    """Sum over roots of the appraisal x_i(mu) solving (1 - x_i) x_i = mu v_i."""
    weights = _weights(v)
    upper = mu_upper(weights)
    if not 0.0 <= mu <= upper * (1.0 + 1e-15):
        raise MuOutOfRangeError(mu, upper)
    return math.fsum(_appraisals(weights, min(mu, upper)))


def _solve_multiplier(weights: np.ndarray) -> Tuple[float, np.ndarray]:
    upper = mu_upper(weights)
    top = psi(weights, upper)
    if top <= 1.0:
        raise BisectionFailedError(f"psi(mu_1) = {top!r} does not exceed 1")
    try:
        mu = optimize.bisect(
            lambda m: psi(weights, m) - 1.0,
            0.0,
            upper,
            xtol=np.finfo(float).tiny,
            rtol=BISECTION_RTOL,
            maxiter=BISECTION_MAXITER,
        )
    except (ValueError, RuntimeError) as exc:
        raise BisectionFailedError(str(exc)) from exc
    return float(mu), _appraisals(weights, mu)


def jacobian(model: NetworkModel, x) -> np.ndarray:
    """J(x) = C^T (I - 2X)."""
    x = np.asarray(x, dtype=float)
    if x.shape != (model.n,):
        raise DimensionMismatchError(model.n, x.shape)
    return model.coefficient_matrix.T * (1.0 - 2.0 * x)[np.newaxis, :]


def _spectrum(matrix: np.ndarray) -> np.ndarray:
    try:
        eigenvalues = np.linalg.eigvals(matrix)
    except np.linalg.LinAlgError as exc:
        raise EigenFailureError(f"eigendecomposition failed: {exc}") from exc
    return np.sort_complex(eigenvalues.astype(complex))


def stability_report(model: NetworkModel, x_star) -> StabilityReport:
    """Classify x* from the spectrum of J(x*): one zero mode, the rest strictly stable."""
    spectrum = _spectrum(jacobian(model, x_star))
    zero = np.abs(spectrum) < ZERO_EIG_TOL
    others = spectrum[~zero]
    max_other = float(np.max(others.real)) if others.size else -math.inf
    zero_count = int(np.count_nonzero(zero))
    return StabilityReport(
        spectrum=spectrum,
        zero_eig_count=zero_count,
        max_other_real_part=max_other,
        stable=zero_count == 1 and max_other < -NEGATIVE_MARGIN,
    )


def solve_equilibrium(model: NetworkModel) -> EquilibriumReport:
    """The unique non-vertex equilibrium from (I - X*) x* = mu v with psi(mu) = 1."""
    stationary = stationary_vector(model)
    mu, x_star = _solve_multiplier(stationary.v)
    residual = float(np.max(np.abs(vector_field(model, x_star))))
    if residual > RESIDUAL_TOL:
        raise NotAnEquilibriumError(f"solver residual {residual:.3e} exceeds {RESIDUAL_TOL:.0e}")
    stability = stability_report(model, x_star)
    logger.info(
        "equilibrium mu=%.17g residual=%.3e stable=%s", mu, residual, stability.stable
    )
    return EquilibriumReport(
        x_star=x_star,
        mu=mu,
        residual=residual,
        jacobian_spectrum=stability.spectrum,
        zero_eig_count=stability.zero_eig_count,
        max_other_real_part=stability.max_other_real_part,
        stable=stability.stable,
        stationary=stationary,
    )


def balance_residual(model: NetworkModel, x) -> float:
    """max_i |(1 - x_i) x_i - sum_{j in V_i^+} c_ji (1 - x_j) x_j|."""
    return float(np.max(np.abs(vector_field(model, x))))


def scaled_coefficients(model: NetworkModel, x_star) -> Dict[Tuple[int, int], float]:
    """c~_ji = c_ji (1 - x*_j) x*_j / ((1 - x*_i) x*_i) on edges j->i between roots.

    At the equilibrium the coefficients into every root sum to one.
    """
    x_star = np.asarray(x_star, dtype=float)
    if x_star.shape != (model.n,):
        raise DimensionMismatchError(model.n, x_star.shape)
    appraisal = (1.0 - x_star) * x_star
    scaled: Dict[Tuple[int, int], float] = {}
    for i in model.roots:
        if appraisal[i] <= 0.0:
            raise NotAnEquilibriumError(f"root {i} has zero appraisal")
        row = []
        for j, weight in model.in_adjacency[i]:
            if j not in model.root_set:
                continue
            value = weight * appraisal[j] / appraisal[i]
            scaled[(j, i)] = value
            row.append(value)
        total = math.fsum(row)
        if abs(total - 1.0) > ROW_SUM_TOL:
            raise NotAnEquilibriumError(f"scaled coefficients into root {i} sum to {total!r}")
    return scaled


def root_block(model: NetworkModel) -> RootBlocks:
    roots = model.roots
    non_roots = model.non_roots
    order = list(roots) + list(non_roots)
    permuted = model.coefficient_matrix[np.ix_(order, order)]
    k = len(roots)
    return RootBlocks(
        roots=roots,
        non_roots=non_roots,
        c11=permuted[:k, :k],
        c12=permuted[:k, k:],
        c21=permuted[k:, :k],
        c22=permuted[k:, k:],
    )


def root_block_equilibrium(model: NetworkModel) -> np.ndarray:
    """x* rebuilt from the root block C11 alone, zero on non-roots."""
    blocks = root_block(model)
    mu, on_roots = _solve_multiplier(_null_vector(blocks.c11))
    x_star = np.zeros(model.n)
    x_star[list(blocks.roots)] = on_roots
    logger.debug("root-block equilibrium mu=%.17g", mu)
    return x_star


def vertex_equilibria(model: NetworkModel) -> List[VertexEquilibrium]:
    """The n simplex vertices, each an equilibrium, with their linearisations."""
    found = []
    for i in range(model.n):
        vertex = np.zeros(model.n)
        vertex[i] = 1.0
        spectrum = _spectrum(jacobian(model, vertex))
        found.append(
            VertexEquilibrium(vertex=i, spectrum=spectrum, max_real_part=float(np.max(spectrum.real)))
        )
    return found


def equilibrium_points(
    model: NetworkModel,
    samples: int = 200,
    seed: int = 0,
    starts: Optional[Iterable] = None,
    residual_tol: float = 1e-8,
    merge_tol: float = 1e-6,
) -> List[np.ndarray]:
    """Equilibria inside the simplex reached by Newton refinement.

    Unless starts are given, refinement begins at the n vertices, the
    barycentre and `samples` uniform draws on the simplex. Each start is refined
    on (f_1, ..., f_{n-1}, sum(x) - 1); points that land in the simplex with
    residual below residual_tol are merged when closer than merge_tol.
    """
    n = model.n
    if starts is None:
        rng = np.random.default_rng(seed)
        starts = [*np.eye(n), np.full(n, 1.0 / n), *rng.dirichlet(np.ones(n), size=samples)]
    ones = np.ones(n)

    def system(x: np.ndarray) -> np.ndarray:
        return np.append(vector_field(model, x)[:-1], x.sum() - 1.0)

    def system_jacobian(x: np.ndarray) -> np.ndarray:
        return np.vstack([jacobian(model, x)[:-1], ones])

    found: List[np.ndarray] = []
    for start in starts:
        result = optimize.root(
            system, np.asarray(start, dtype=float), jac=system_jacobian, method="hybr"
        )
        x = result.x
        if not np.all(np.isfinite(x)):
            continue
        if np.min(x) < -1e-9 or abs(x.sum() - 1.0) > 1e-9:
            continue
        if np.max(np.abs(vector_field(model, x))) >= residual_tol:
            continue
        x = np.clip(x, 0.0, None)
        x /= x.sum()
        if not any(np.max(np.abs(x - known)) < merge_tol for known in found):
            found.append(x)
    return sorted(found, key=lambda point: tuple(-point))
