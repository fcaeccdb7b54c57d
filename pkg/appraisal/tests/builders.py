from pathlib import Path

from appraisal.network import RawNetwork, validate_network

DATA_DIR = Path(__file__).resolve().parent / "data"

K3_EDGES = ((0, 1, 0.5), (0, 2, 0.5), (1, 0, 0.5), (1, 2, 0.5), (2, 0, 0.5), (2, 1, 0.5))


def k3():
    return validate_network(RawNetwork(n=3, edges=K3_EDGES))


def k3_leaf():
    """K3 plus vertex 3 listening to 0 and 1."""
    return validate_network(RawNetwork(n=4, edges=K3_EDGES + ((3, 0, 0.5), (3, 1, 0.5))))


def k3_two_leaves():
    """k3_leaf plus vertex 4 listening to 3 and 1."""
    edges = K3_EDGES + ((3, 0, 0.5), (3, 1, 0.5), (4, 1, 0.5), (4, 3, 0.5))
    return validate_network(RawNetwork(n=5, edges=edges))


def four_roots():
    """Strongly connected on four vertices with unequal weights."""
    edges = (
        (0, 1, 0.5), (0, 2, 0.3), (0, 3, 0.2),
        (1, 2, 0.5), (1, 3, 0.5),
        (2, 0, 0.4), (2, 3, 0.4), (2, 1, 0.2),
        (3, 0, 0.5), (3, 1, 0.5),
    )
    return validate_network(RawNetwork(n=4, edges=edges))
