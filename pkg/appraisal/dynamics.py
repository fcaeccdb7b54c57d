import logging
import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple, Union

import numpy as np

from .network import (
    ZERO_TOL,
    AppraisalError,
    NetworkModel,
    _check_vertex,
    critical_supporting_path,
    support_structure,
)

logger = logging.getLogger(__name__)

SIMPLEX_TOL = 1e-9
DEFAULT_REPELLER_EPS = 0.5


class DynamicsError(AppraisalError):
    """Raised for states or parameters the self-appraisal flow cannot take."""


class DimensionMismatchError(DynamicsError):
    def __init__(self, expected: int, got):
        self.expected, self.got = expected, got
        super().__init__(f"state has shape {got}, expected length {expected}")


class NotInSimplexError(DynamicsError):
    pass


class VertexStateError(DynamicsError):
    def __init__(self, vertex: int):
        self.vertex = vertex
        super().__init__(f"state is the simplex vertex e_{vertex}")


class NTooSmallError(DynamicsError):
    def __init__(self, n: int):
        self.n = n
        super().__init__(f"threshold needs n >= 3, got {n}")


@dataclass(frozen=True)
class LeadingDerivative:
    """First non-vanishing time derivative of x_i at a boundary state."""

    order: int
    value: float
    path: Tuple[int, ...]


def _as_vector(model: NetworkModel, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape[-1:] != (model.n,):
        raise DimensionMismatchError(model.n, x.shape)
    return x


def simplex_state(values: Sequence[float], n: Optional[int] = None) -> np.ndarray:
    """Validate a point of the unit simplex and return it as a float array."""
    x = np.asarray(values, dtype=float)
    if x.ndim != 1 or (n is not None and x.shape[0] != n):
        raise DimensionMismatchError(n if n is not None else -1, x.shape)
    if not np.all(np.isfinite(x)):
        raise NotInSimplexError("state has non-finite entries")
    if np.any(x < -SIMPLEX_TOL) or np.any(x > 1.0 + SIMPLEX_TOL):
        raise NotInSimplexError("state entries must lie in [0, 1]")
    total = math.fsum(x)
    if abs(total - 1.0) > SIMPLEX_TOL:
        raise NotInSimplexError(f"state sums to {total!r}, not 1")
    return x


def importance_of_others(model: NetworkModel, x) -> np.ndarray:
    """(1 - x_i) x_i: how much agent i takes from the agents it listens to."""
    x = _as_vector(model, x)
    return (1.0 - x) * x


def importance_to_others(model: NetworkModel, x) -> np.ndarray:
    """sum over j in V_i^+ of c_ji (1 - x_j) x_j: how much the listeners of i take from it."""
    x = _as_vector(model, x)
    src, dst, weight = model.edge_arrays
    appraisal = (1.0 - x) * x
    return np.bincount(dst, weights=weight * appraisal[src], minlength=model.n)


def vector_field(model: NetworkModel, x) -> np.ndarray:
    """f_i(x) = -(1 - x_i) x_i + sum_{j in V_i^+} c_ji (1 - x_j) x_j."""
    x = _as_vector(model, x)
    if x.ndim != 1:
        return vector_field_matrix(model, x)
    src, dst, weight = model.edge_arrays
    appraisal = (1.0 - x) * x
    inflow = np.bincount(dst, weights=weight * appraisal[src], minlength=model.n)
    return inflow - appraisal


def vector_field_matrix(model: NetworkModel, x) -> np.ndarray:
    """C^T (I - X) x; accepts a batch of states along leading axes."""
    x = _as_vector(model, x)
    return ((1.0 - x) * x) @ model.coefficient_matrix


def alpha_threshold(n: int) -> float:
    """The cap alpha = 1/2 - 1/(4(2n - 3)) shared by every vertex of an n-vertex network."""
    if n < 3:
        raise NTooSmallError(n)
    return 0.5 - 1.0 / (4.0 * (2 * n - 3))


def repeller_eps(model: NetworkModel, i: int) -> float:
    """Largest weight c_ji on an edge into i; the tightest eps for vertex_threshold."""
    _check_vertex(model, i)
    return model.max_incoming_weight(i)


def vertex_threshold(model: NetworkModel, i: int, eps: float = DEFAULT_REPELLER_EPS) -> float:
    """alpha_i(eps) = eps - eps(1 - eps) / (2(d_i - eps)), with d_i the in-degree of i.

    Valid whenever every c_ji <= eps. With no incoming edges f_i < 0 on all of
    x_i in (0, 1), so the threshold is 0.
    """
    _check_vertex(model, i)
    if not 0.0 < eps < 1.0:
        raise DynamicsError(f"eps must lie in (0, 1), got {eps!r}")
    d_i = model.in_degree(i)
    if d_i == 0:
        return 0.0
    return eps - 0.5 * eps * (1.0 - eps) / (d_i - eps)


def in_Q(model: NetworkModel, x) -> bool:
    x = _as_vector(model, x)
    return bool(np.all(x <= alpha_threshold(model.n)))


def in_Q_r(model: NetworkModel, x) -> bool:
    x = _as_vector(model, x)
    return in_Q(model, x) and bool(np.all(x[~model.root_mask] <= ZERO_TOL))


def in_repeller(model: NetworkModel, x, i: int, eps: float) -> bool:
    x = _as_vector(model, x)
    _check_vertex(model, i)
    return bool(x[i] >= eps)


def phi_r(model: NetworkModel, x) -> Union[float, np.ndarray]:
    """Total appraisal held by the root set; one value per state for a batch."""
    x = _as_vector(model, x)
    total = np.sum(x[..., model.root_mask], axis=-1)
    return float(total) if x.ndim == 1 else total


def phi_r_rate(model: NetworkModel, x) -> Union[float, np.ndarray]:
    """Time derivative of phi_r: inflow along edges from non-roots into roots."""
    x = _as_vector(model, x)
    src, dst, weight = model.edge_arrays
    crossing = ~model.root_mask[src] & model.root_mask[dst]
    upstream = x[..., src[crossing]]
    rate = ((1.0 - upstream) * upstream) @ weight[crossing]
    return float(rate) if x.ndim == 1 else rate


def boundary_derivative(model: NetworkModel, x, i: int) -> Optional[LeadingDerivative]:
    """Leading derivative of x_i(t) at t = 0 for a state with x_i = 0.

    Returns None when no supporting path reaches i, in which case x_i stays 0
    for all time. Otherwise the order is the critical supporting path length k
    and the value is sum over j in D_i(k) of alpha_ji (1 - x_j) x_j.
    """
    x = _as_vector(model, x)
    _check_vertex(model, i)
    top = int(np.argmax(x))
    if x[top] >= 1.0 - ZERO_TOL:
        raise VertexStateError(top)

    critical = critical_supporting_path(model, x, i)
    if critical is None:
        logger.debug("[vertex %d] no supporting path, x_i stays at zero", i)
        return None

    order, path = critical
    structure = support_structure(model, i)
    value = math.fsum(
        structure.alpha[j] * (1.0 - x[j]) * x[j] for j in sorted(structure.differences[order])
    )
    return LeadingDerivative(order=order, value=value, path=tuple(path))
