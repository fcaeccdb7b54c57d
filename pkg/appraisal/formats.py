import json
import math
import re
from pathlib import Path
from typing import Any, Dict, List, Optional, TextIO, Union

import numpy as np

from .dynamics import simplex_state
from .network import AppraisalError, NetworkModel, RawNetwork, validate_network
from .simulation import OpinionTrajectory, Trajectory

PathLike = Union[str, Path]


class NetworkFileError(AppraisalError):
    """Raised for unreadable network, state or output files."""


class NetworkParseError(NetworkFileError):
    def __init__(self, message: str, line: Optional[int] = None, column: Optional[int] = None):
        self.line, self.column = line, column
        where = f" at line {line} column {column}" if line is not None else ""
        super().__init__(f"{message}{where}")


def _position(text: str, offset: int):
    line = text.count("\n", 0, offset) + 1
    column = offset - (text.rfind("\n", 0, offset) + 1) + 1
    return line, column


def _reject_constant(token: str):
    raise ValueError(token)


def _finite_float(token: str) -> float:
    value = float(token)
    if not math.isfinite(value):
        raise ValueError(token)
    return value


def _decode(text: str) -> Any:
    try:
        return json.loads(text, parse_constant=_reject_constant, parse_float=_finite_float)
    except json.JSONDecodeError as exc:
        raise NetworkParseError(f"invalid JSON: {exc.msg}", exc.lineno, exc.colno) from exc
    except ValueError as exc:
        # parse hooks carry the offending token but not its offset
        token = str(exc)
        match = re.search(r"(?<![\w.])" + re.escape(token) + r"(?![\w.])", text)
        line, column = _position(text, match.start()) if match else (None, None)
        raise NetworkParseError(f"non-finite number {token!r}", line, column) from exc


def _require(container: Dict[str, Any], key: str) -> Any:
    if key not in container:
        raise NetworkParseError(f"missing field {key!r}")
    return container[key]


def _number(value: Any, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise NetworkParseError(f"{where} must be a number, got {type(value).__name__}")
    try:
        return float(value)
    except OverflowError:
        raise NetworkParseError(f"{where} is too large for a float") from None


def _index(value: Any, where: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise NetworkParseError(f"{where} must be an integer, got {value!r}")
    return value


def parse_raw_network(text: str) -> RawNetwork:
    """Decode `{"n": <int>, "edges": [[src, dst, weight], ...]}` without validating it."""
    document = _decode(text)
    if not isinstance(document, dict):
        raise NetworkParseError("network document must be a JSON object")
    n = _index(_require(document, "n"), "n")
    edges = _require(document, "edges")
    if not isinstance(edges, list):
        raise NetworkParseError("edges must be a list")

    parsed = []
    for k, entry in enumerate(edges):
        if not isinstance(entry, list):
            raise NetworkParseError(f"edges[{k}] must be a [src, dst, weight] list")
        if len(entry) < 3:
            raise NetworkParseError(f"missing field edges[{k}][{len(entry)}]")
        if len(entry) > 3:
            raise NetworkParseError(f"edges[{k}] has {len(entry)} fields, expected 3")
        src = _index(entry[0], f"edges[{k}][0]")
        dst = _index(entry[1], f"edges[{k}][1]")
        weight = _number(entry[2], f"edges[{k}][2]")
        parsed.append((src, dst, weight))
    return RawNetwork(n=n, edges=tuple(parsed))


def parse_network(text: str) -> NetworkModel:
    return validate_network(parse_raw_network(text))


def load_network(path: PathLike) -> NetworkModel:
    network_path = Path(path)
    if not network_path.exists():
        raise FileNotFoundError(f"Network file not found at {network_path}")
    return parse_network(network_path.read_text(encoding="utf-8"))


def dump_network(model: Union[NetworkModel, RawNetwork]) -> str:
    raw = model.to_raw() if isinstance(model, NetworkModel) else model
    payload = {"n": raw.n, "edges": [[src, dst, weight] for src, dst, weight in raw.edges]}
    return json.dumps(payload, indent=2) + "\n"


def write_network(model: Union[NetworkModel, RawNetwork], path: PathLike) -> None:
    Path(path).write_text(dump_network(model), encoding="utf-8")


def parse_state(spec: str, n: int) -> np.ndarray:
    """Initial appraisals from `uniform`, `random:SEED` or a comma separated list."""
    spec = spec.strip()
    if spec == "uniform":
        return np.full(n, 1.0 / n)
    if spec.startswith("random:"):
        from .verify import sample_simplex

        seed_text = spec.split(":", 1)[1]
        try:
            seed = int(seed_text)
        except ValueError as exc:
            raise NetworkFileError(f"random seed must be an integer, got {seed_text!r}") from exc
        if seed < 0:
            raise NetworkFileError(f"random seed must be non-negative, got {seed}")
        return sample_simplex(np.random.default_rng(seed), n)
    try:
        values = [float(part) for part in spec.split(",")]
    except ValueError as exc:
        raise NetworkFileError(f"cannot read state {spec!r}: {exc}") from exc
    return simplex_state(values, n)


def parse_opinions(spec: str, n: int) -> np.ndarray:
    try:
        values = np.array([float(part) for part in spec.split(",")])
    except ValueError as exc:
        raise NetworkFileError(f"cannot read opinions {spec!r}: {exc}") from exc
    if values.shape != (n,):
        raise NetworkFileError(f"expected {n} opinions, got {values.shape[0]}")
    if not np.all(np.isfinite(values)):
        raise NetworkFileError("opinions must be finite")
    return values


def format_float(value: float) -> str:
    return format(float(value), ".17g")


def _write_rows(fp: TextIO, prefix: str, times: np.ndarray, rows: np.ndarray) -> None:
    width = rows.shape[1]
    fp.write(",".join(["t"] + [f"{prefix}{i}" for i in range(width)]) + "\n")
    for t, row in zip(times, rows):
        fp.write(",".join(format_float(v) for v in (t, *row)) + "\n")


def write_trajectory_csv(trajectory: Trajectory, fp: TextIO) -> None:
    _write_rows(fp, "x", trajectory.times, trajectory.states)
    if trajectory.q_entry_time is not None:
        fp.write(f"# q_entry={format_float(trajectory.q_entry_time)}\n")
    if trajectory.converged_at is not None:
        fp.write(f"# converged={format_float(trajectory.converged_at)}\n")


def write_opinions_csv(opinions: OpinionTrajectory, fp: TextIO) -> None:
    _write_rows(fp, "z", opinions.times, opinions.values)


def read_trajectory_csv(fp: TextIO) -> Dict[str, Any]:
    """Inverse of write_trajectory_csv: times, states and event comments."""
    times: List[float] = []
    states: List[List[float]] = []
    events: Dict[str, float] = {}
    header = fp.readline()
    if not header.startswith("t,"):
        raise NetworkFileError("trajectory CSV must start with a t,x0,... header")
    for line in fp:
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            key, _, value = line[1:].strip().partition("=")
            events[key] = float(value)
            continue
        values = [float(part) for part in line.split(",")]
        times.append(values[0])
        states.append(values[1:])
    return {"times": np.array(times), "states": np.array(states), "events": events}
