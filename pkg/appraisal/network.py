import itertools
import logging
import math
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple, Union

import networkx as nx
import numpy as np

logger = logging.getLogger(__name__)

WEIGHT_CAP = 0.5
ROW_SUM_TOL = 1e-12
ZERO_TOL = 1e-12
MIN_OUT_DEGREE = 2
MIN_ROOTS = 3

Edge = Tuple[int, int, float]
Adjacency = Tuple[Tuple[Tuple[int, float], ...], ...]


class AppraisalError(Exception):
    """Base class for every domain error raised by the toolkit."""


class NetworkError(AppraisalError):
    """Raised when a network or a vertex query is not admissible."""


class VertexIndexError(NetworkError):
    def __init__(self, vertex, n: int):
        self.vertex = vertex
        super().__init__(f"vertex {vertex} is outside [0, {n})")


class SelfLoopError(NetworkError):
    def __init__(self, vertex: int):
        self.vertex = vertex
        super().__init__(f"self loop on vertex {vertex}")


class DuplicateEdgeError(NetworkError):
    def __init__(self, src: int, dst: int):
        self.src, self.dst = src, dst
        super().__init__(f"duplicate edge {src}->{dst}")


class OutDegreeTooSmallError(NetworkError):
    def __init__(self, vertex: int, degree: int):
        self.vertex, self.degree = vertex, degree
        super().__init__(
            f"vertex {vertex} has out-degree {degree}, needs at least {MIN_OUT_DEGREE}"
        )


class RowSumViolationError(NetworkError):
    def __init__(self, vertex: int, total: float):
        self.vertex, self.total = vertex, total
        super().__init__(f"weights leaving vertex {vertex} sum to {total!r}, not 1")


class WeightOutOfRangeError(NetworkError):
    def __init__(self, src: int, dst: int, weight: float):
        self.src, self.dst, self.weight = src, dst, weight
        super().__init__(f"weight {weight!r} on edge {src}->{dst} is outside (0, 1/2]")


class NotRootedError(NetworkError):
    def __init__(self, sink_components: int):
        self.sink_components = sink_components
        super().__init__(
            f"digraph is not rooted: condensation has {sink_components} sink components"
        )


class TooFewRootsError(NetworkError):
    def __init__(self, roots: int):
        self.roots = roots
        super().__init__(f"root set has {roots} vertices, needs at least {MIN_ROOTS}")


class TargetNotZeroError(NetworkError):
    def __init__(self, vertex: int, value: float):
        self.vertex, self.value = vertex, value
        super().__init__(f"x[{vertex}] = {value!r} is not zero")


class InvalidNetworkError(NetworkError):
    """Carries every defect found while validating one network."""

    def __init__(self, errors: Sequence[NetworkError]):
        self.errors = list(errors)
        super().__init__("; ".join(str(err) for err in self.errors))


@dataclass(frozen=True)
class RawNetwork:
    n: int
    edges: Tuple[Edge, ...]


@dataclass(frozen=True)
class SupportStructure:
    target: int
    layers: Tuple[FrozenSet[int], ...]
    differences: Tuple[FrozenSet[int], ...]
    alpha: Dict[int, float] = field(hash=False)

    @property
    def supporting_set(self) -> FrozenSet[int]:
        return self.layers[-1]

    def layer_of(self, vertex: int) -> Optional[int]:
        for k, fresh in enumerate(self.differences):
            if vertex in fresh:
                return k
        return None


@dataclass(frozen=True)
class NetworkModel:
    """A validated network: adjacency in both directions plus its root set.

    Vertex i listens to j when the edge i->j exists; c_ij is stored on
    out_adjacency[i] and mirrored as c_ij on in_adjacency[j].
    """

    n: int
    out_adjacency: Adjacency
    in_adjacency: Adjacency
    root_set: FrozenSet[int]
    _support_cache: Dict[int, SupportStructure] = field(
        default_factory=dict, init=False, repr=False, compare=False, hash=False
    )

    @property
    def edges(self) -> List[Edge]:
        return [
            (src, dst, weight)
            for src, row in enumerate(self.out_adjacency)
            for dst, weight in row
        ]

    @property
    def roots(self) -> Tuple[int, ...]:
        return tuple(sorted(self.root_set))

    @property
    def non_roots(self) -> Tuple[int, ...]:
        return tuple(i for i in range(self.n) if i not in self.root_set)

    def out_neighbors(self, i: int) -> List[int]:
        return [dst for dst, _ in self.out_adjacency[i]]

    def in_neighbors(self, i: int) -> List[int]:
        return [src for src, _ in self.in_adjacency[i]]

    def in_degree(self, i: int) -> int:
        return len(self.in_adjacency[i])

    def max_incoming_weight(self, i: int) -> float:
        return max((weight for _, weight in self.in_adjacency[i]), default=0.0)

    def weight(self, src: int, dst: int) -> float:
        for neighbor, weight in self.out_adjacency[src]:
            if neighbor == dst:
                return weight
        return 0.0

    def to_raw(self) -> RawNetwork:
        return RawNetwork(n=self.n, edges=tuple(self.edges))

    @cached_property
    def edge_arrays(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        edges = self.edges
        src = np.array([e[0] for e in edges], dtype=np.intp)
        dst = np.array([e[1] for e in edges], dtype=np.intp)
        weight = np.array([e[2] for e in edges], dtype=float)
        return src, dst, weight

    @cached_property
    def coefficient_matrix(self) -> np.ndarray:
        """The infinitesimally stochastic matrix C (off-diagonal c_ij, zero row sums)."""
        matrix = np.zeros((self.n, self.n))
        src, dst, weight = self.edge_arrays
        matrix[src, dst] = weight
        matrix[np.diag_indices(self.n)] = -matrix.sum(axis=1)
        return matrix

    @cached_property
    def root_mask(self) -> np.ndarray:
        mask = np.zeros(self.n, dtype=bool)
        mask[list(self.root_set)] = True
        return mask


def _digraph(n: int, edges: Iterable[Edge]) -> nx.DiGraph:
    graph = nx.DiGraph()
    graph.add_nodes_from(range(n))
    graph.add_weighted_edges_from(edges)
    return graph


def _roots_from_edges(n: int, edges: Iterable[Edge]) -> FrozenSet[int]:
    condensed = nx.condensation(_digraph(n, edges))
    sinks = [c for c in condensed.nodes if condensed.out_degree(c) == 0]
    if len(sinks) != 1:
        raise NotRootedError(len(sinks))
    return frozenset(condensed.nodes[sinks[0]]["members"])


def root_set(network: Union[RawNetwork, NetworkModel]) -> FrozenSet[int]:
    """Vertices reachable from every vertex: the unique sink component of the condensation."""
    if isinstance(network, NetworkModel):
        return network.root_set
    if network.n < 1:
        raise NetworkError("network has no vertices")
    return _roots_from_edges(network.n, network.edges)


def validate_network(raw: RawNetwork) -> NetworkModel:
    """Check every model assumption on a raw network, reporting all defects at once."""
    n = raw.n
    if not isinstance(n, int) or n < 1:
        raise InvalidNetworkError([NetworkError(f"vertex count {n!r} must be an integer >= 1")])

    errors: List[NetworkError] = []
    seen = set()
    kept: List[Edge] = []
    for src, dst, weight in raw.edges:
        if not (0 <= src < n):
            errors.append(VertexIndexError(src, n))
            continue
        if not (0 <= dst < n):
            errors.append(VertexIndexError(dst, n))
            continue
        if src == dst:
            errors.append(SelfLoopError(src))
            continue
        if (src, dst) in seen:
            errors.append(DuplicateEdgeError(src, dst))
            continue
        seen.add((src, dst))
        weight = float(weight)
        if not (0.0 < weight <= WEIGHT_CAP):
            errors.append(WeightOutOfRangeError(src, dst, weight))
        kept.append((src, dst, weight))

    out_rows: List[List[Tuple[int, float]]] = [[] for _ in range(n)]
    in_rows: List[List[Tuple[int, float]]] = [[] for _ in range(n)]
    for src, dst, weight in kept:
        out_rows[src].append((dst, weight))
        in_rows[dst].append((src, weight))

    for i, row in enumerate(out_rows):
        if len(row) < MIN_OUT_DEGREE:
            errors.append(OutDegreeTooSmallError(i, len(row)))
        total = math.fsum(weight for _, weight in row)
        if abs(total - 1.0) > ROW_SUM_TOL:
            errors.append(RowSumViolationError(i, total))

    roots: FrozenSet[int] = frozenset()
    try:
        roots = _roots_from_edges(n, kept)
    except NotRootedError as exc:
        errors.append(exc)
    else:
        if len(roots) < MIN_ROOTS:
            errors.append(TooFewRootsError(len(roots)))

    if errors:
        raise InvalidNetworkError(errors)

    model = NetworkModel(
        n=n,
        out_adjacency=tuple(tuple(sorted(row)) for row in out_rows),
        in_adjacency=tuple(tuple(sorted(row)) for row in in_rows),
        root_set=roots,
    )
    logger.debug("validated network n=%d edges=%d roots=%s", n, len(kept), model.roots)
    return model


def _check_vertex(model: NetworkModel, i: int) -> None:
    if not isinstance(i, (int, np.integer)) or not (0 <= i < model.n):
        raise VertexIndexError(i, model.n)


def supporting_layers(model: NetworkModel, vertices: Iterable[int]) -> List[FrozenSet[int]]:
    """D_{V'}(k) for k = 0, 1, ...: vertices whose shortest path into V' has length k."""
    start = frozenset(vertices)
    for i in start:
        _check_vertex(model, i)
    if not start:
        return []
    layers = [start]
    seen = set(start)
    frontier = start
    while True:
        fresh = frozenset(
            src for u in frontier for src, _ in model.in_adjacency[u] if src not in seen
        )
        if not fresh:
            return layers
        layers.append(fresh)
        seen.update(fresh)
        frontier = fresh


def supporting_set(model: NetworkModel, vertices: Iterable[int]) -> FrozenSet[int]:
    """S_{V'}: every vertex with a directed path into V', plus V' itself."""
    return frozenset().union(*supporting_layers(model, vertices))


def support_structure(model: NetworkModel, i: int) -> SupportStructure:
    """Layers S_i(k), fresh layers D_i(k) and path coefficients alpha_ji for target i.

    alpha follows the layered recursion: alpha_ii = 1 and for j in D_i(k),
    alpha_ji = sum of c_jj' * alpha_j'i over out-neighbours j' of j in D_i(k-1).
    Computed once per target and cached on the model.
    """
    _check_vertex(model, i)
    cached = model._support_cache.get(i)
    if cached is not None:
        return cached

    differences = supporting_layers(model, [i])
    alpha: Dict[int, float] = {i: 1.0}
    for previous, fresh in zip(differences, differences[1:]):
        for j in sorted(fresh):
            alpha[j] = math.fsum(
                weight * alpha[dst]
                for dst, weight in model.out_adjacency[j]
                if dst in previous
            )

    layers = []
    running: FrozenSet[int] = frozenset()
    for fresh in differences:
        running = running | fresh
        layers.append(running)

    structure = SupportStructure(
        target=i,
        layers=tuple(layers),
        differences=tuple(differences),
        alpha=alpha,
    )
    model._support_cache[i] = structure
    return structure


def path_weight(model: NetworkModel, path: Sequence[int]) -> float:
    """Product of c along consecutive edges of a path; 0 if an edge is missing."""
    product = 1.0
    for src, dst in zip(path, path[1:]):
        product *= model.weight(src, dst)
    return product


def enumerate_paths(model: NetworkModel, j: int, i: int, k: int) -> List[List[int]]:
    """All directed paths j -> ... -> i of exactly k edges with pairwise distinct vertices.

    Exhaustive search over vertex sequences; meant as an oracle for small graphs.
    """
    _check_vertex(model, j)
    _check_vertex(model, i)
    if k < 1:
        raise NetworkError(f"path length must be >= 1, got {k}")
    if j == i:
        return []
    edge_set = {(src, dst) for src, dst, _ in model.edges}
    others = [v for v in range(model.n) if v not in (i, j)]
    paths = []
    for middle in itertools.permutations(others, k - 1):
        sequence = (j, *middle, i)
        if all(pair in edge_set for pair in zip(sequence, sequence[1:])):
            paths.append(list(sequence))
    return sorted(paths)


def critical_supporting_path(
    model: NetworkModel, x: Sequence[float], i: int
) -> Optional[Tuple[int, List[int]]]:
    """Shortest path into a zero vertex i that starts at a positive vertex and only
    crosses zero vertices. Returns (length, path) or None when no such path exists.

    Among shortest paths the lexicographically smallest vertex sequence wins.
    """
    _check_vertex(model, i)
    x = np.asarray(x, dtype=float)
    if x[i] > ZERO_TOL:
        raise TargetNotZeroError(i, float(x[i]))
    zero = x <= ZERO_TOL

    # distance to i, expanding only through zero vertices
    distance = {i: 0}
    starts: List[int] = []
    queue = deque([i])
    while queue:
        u = queue.popleft()
        if starts and distance[u] + 1 > distance[starts[0]]:
            break
        for src, _ in model.in_adjacency[u]:
            if src in distance:
                continue
            distance[src] = distance[u] + 1
            if zero[src]:
                queue.append(src)
            else:
                starts.append(src)
    if not starts:
        return None

    start = min(starts)
    length = distance[start]
    path = [start]
    current = start
    for remaining in range(length - 1, -1, -1):
        current = min(
            dst
            for dst, _ in model.out_adjacency[current]
            if distance.get(dst) == remaining and zero[dst]
        )
        path.append(current)
    logger.debug("[vertex %d] critical supporting path %s", i, path)
    return length, path


def is_invariant_face(model: NetworkModel, vertices: Iterable[int]) -> bool:
    """Whether the face Sp[V'] is positively invariant under the self-appraisal flow."""
    face = frozenset(vertices)
    for i in face:
        _check_vertex(model, i)
    if not face:
        return False
    if len(face) == 1:
        return True
    outside = set(range(model.n)) - face
    return all(src in outside for u in outside for src, _ in model.in_adjacency[u])


def coefficient_matrix(model: NetworkModel) -> np.ndarray:
    """C with c_ij off the diagonal and zero row sums; computed once per model."""
    return model.coefficient_matrix
