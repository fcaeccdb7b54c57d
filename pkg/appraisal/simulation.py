import logging
import math
from dataclasses import dataclass, replace
from typing import Callable, ClassVar, Optional

import numpy as np
from django.conf import settings

from .dynamics import (
    DynamicsError,
    DimensionMismatchError,
    alpha_threshold,
    simplex_state,
    vector_field,
)
from .network import NetworkModel

logger = logging.getLogger(__name__)


class ConfigError(DynamicsError):
    """Raised when integrator settings are out of range."""


class DriftExceededError(DynamicsError):
    def __init__(self, time: float, drift: float):
        self.time, self.drift = time, drift
        super().__init__(f"state left the simplex by {drift:.3e} at t={time:.6g}")


class NonFiniteStateError(DynamicsError):
    def __init__(self, time: float):
        self.time = time
        super().__init__(f"state became non-finite at t={time:.6g}")


class HorizonMismatchError(DynamicsError):
    def __init__(self, requested: float, available: float):
        self.requested, self.available = requested, available
        super().__init__(
            f"appraisal trajectory ends at t={available:.6g}, opinions requested to t={requested:.6g}"
        )


@dataclass(frozen=True)
class IntegratorConfig:
    step: float = 0.01
    horizon: float = 200.0
    record_every: int = 1
    convergence_tol: float = 1e-10
    drift_tol: float = 1e-6
    clamp_tol: float = 1e-10
    stop_on_convergence: bool = False

    MAX_STEP: ClassVar[float] = 0.1

    def __post_init__(self):
        if not 0.0 < self.step <= self.MAX_STEP:
            raise ConfigError(f"step must lie in (0, {self.MAX_STEP}], got {self.step!r}")
        if not self.horizon > 0.0:
            raise ConfigError(f"horizon must be positive, got {self.horizon!r}")
        if self.record_every < 1:
            raise ConfigError(f"record_every must be >= 1, got {self.record_every!r}")
        for name in ("convergence_tol", "drift_tol", "clamp_tol"):
            if not getattr(self, name) > 0.0:
                raise ConfigError(f"{name} must be positive")

    @classmethod
    def from_settings(cls, **overrides) -> "IntegratorConfig":
        config = cls(
            step=settings.APPRAISAL_STEP,
            horizon=settings.APPRAISAL_HORIZON,
            record_every=settings.APPRAISAL_RECORD_EVERY,
            convergence_tol=settings.APPRAISAL_CONVERGENCE_TOL,
            drift_tol=settings.APPRAISAL_DRIFT_TOL,
            clamp_tol=settings.APPRAISAL_CLAMP_TOL,
        )
        return replace(config, **overrides)


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    q_entry_time: Optional[float]
    converged_at: Optional[float]
    max_simplex_drift: float
    min_component: float
    steps: int

    def __len__(self) -> int:
        return len(self.times)

    @property
    def final_state(self) -> np.ndarray:
        return self.states[-1]

    def state_at(self, t: float) -> np.ndarray:
        """Linear interpolation between recorded states."""
        if t <= self.times[0]:
            return self.states[0]
        if t >= self.times[-1]:
            return self.states[-1]
        idx = int(np.searchsorted(self.times, t, side="right")) - 1
        span = self.times[idx + 1] - self.times[idx]
        ratio = (t - self.times[idx]) / span
        return self.states[idx] + ratio * (self.states[idx + 1] - self.states[idx])


@dataclass
class OpinionTrajectory:
    times: np.ndarray
    values: np.ndarray

    @property
    def final_spread(self) -> float:
        final = self.values[-1]
        return float(final.max() - final.min())


def _rk4_step(
    field: Callable[[float, np.ndarray], np.ndarray],
    t: float,
    y: np.ndarray,
    h: float,
    k1: Optional[np.ndarray] = None,
) -> np.ndarray:
    if k1 is None:
        k1 = field(t, y)
    k2 = field(t + 0.5 * h, y + 0.5 * h * k1)
    k3 = field(t + 0.5 * h, y + 0.5 * h * k2)
    k4 = field(t + h, y + h * k3)
    return y + (h / 6.0) * (k1 + 2.0 * (k2 + k3) + k4)


def _q_entry_time(model: NetworkModel, times: np.ndarray, states: np.ndarray) -> Optional[float]:
    inside = np.all(states <= alpha_threshold(model.n), axis=1)
    if not inside[-1]:
        return None
    outside = np.flatnonzero(~inside)
    first_for_good = 0 if outside.size == 0 else int(outside[-1]) + 1
    return float(times[first_for_good])


def integrate(
    model: NetworkModel, x0, cfg: Optional[IntegratorConfig] = None
) -> Trajectory:
    """Classical fixed-step RK4 on the simplex.

    After every step, negative round-off is clamped to zero and the state is
    rescaled to sum to one; the pre-correction drift is tracked and must stay
    below cfg.drift_tol. The last step is cut short so the trajectory ends
    exactly at cfg.horizon.
    """
    cfg = cfg or IntegratorConfig()
    x = simplex_state(x0, model.n).copy()
    h = cfg.step
    total_steps = int(math.ceil(cfg.horizon / h - 1e-9))

    def field(_t: float, y: np.ndarray) -> np.ndarray:
        return vector_field(model, y)

    slope = field(0.0, x)
    converged_at = 0.0 if np.max(np.abs(slope)) < cfg.convergence_tol else None
    times = [0.0]
    states = [x.copy()]
    max_drift = 0.0
    min_component = float(x.min())
    steps = 0

    for step in range(1, total_steps + 1):
        if cfg.stop_on_convergence and converged_at is not None:
            break
        t_prev = (step - 1) * h
        t = min(step * h, cfg.horizon)
        x = _rk4_step(field, t_prev, x, t - t_prev, k1=slope)
        if not np.all(np.isfinite(x)):
            raise NonFiniteStateError(t)

        drift = abs(math.fsum(x) - 1.0)
        max_drift = max(max_drift, drift)
        lowest = float(x.min())
        min_component = min(min_component, lowest)
        if drift > cfg.drift_tol:
            raise DriftExceededError(t, drift)
        if lowest < -cfg.drift_tol:
            raise DriftExceededError(t, -lowest)
        if lowest < -cfg.clamp_tol:
            logger.warning("[t=%.6g] clamping component %.3e below the round-off band", t, lowest)

        np.maximum(x, 0.0, out=x)
        x /= x.sum()
        steps = step

        slope = field(t, x)
        if converged_at is None and np.max(np.abs(slope)) < cfg.convergence_tol:
            converged_at = t
            logger.info("[t=%.6g] residual below %.1e", t, cfg.convergence_tol)

        last = step == total_steps or (cfg.stop_on_convergence and converged_at is not None)
        if step % cfg.record_every == 0 or last:
            times.append(t)
            states.append(x.copy())

    times_arr = np.array(times)
    states_arr = np.array(states)
    return Trajectory(
        times=times_arr,
        states=states_arr,
        q_entry_time=_q_entry_time(model, times_arr, states_arr),
        converged_at=converged_at,
        max_simplex_drift=max_drift,
        min_component=min_component,
        steps=steps,
    )


def simulate_consensus(
    model: NetworkModel,
    appraisal_traj: Trajectory,
    z0,
    horizon: Optional[float] = None,
    step: Optional[float] = None,
    record_every: int = 1,
) -> OpinionTrajectory:
    """Opinion process driven by the appraisals:
    z_i' = (1 - x_i(t)) (-z_i + sum_{j in V_i^-} c_ij z_j).

    x(t) is read off the appraisal trajectory by linear interpolation. Past its
    last sample the final state is held, which is only allowed when that
    trajectory has converged.
    """
    z = np.asarray(z0, dtype=float).copy()
    if z.shape != (model.n,):
        raise DimensionMismatchError(model.n, z.shape)
    if not np.all(np.isfinite(z)):
        raise DynamicsError("initial opinions must be finite")

    available = float(appraisal_traj.times[-1])
    horizon = available if horizon is None else float(horizon)
    if horizon > available + 1e-12 and appraisal_traj.converged_at is None:
        raise HorizonMismatchError(horizon, available)
    if step is None:
        times = appraisal_traj.times
        step = float(times[1] - times[0]) if len(times) > 1 else 0.01
    step = min(step, IntegratorConfig.MAX_STEP)

    src, dst, weight = model.edge_arrays

    def field(t: float, y: np.ndarray) -> np.ndarray:
        x = appraisal_traj.state_at(t)
        neighbors = np.bincount(src, weights=weight * y[dst], minlength=model.n)
        return (1.0 - x) * (neighbors - y)

    total_steps = int(math.ceil(horizon / step - 1e-9))
    times = [0.0]
    values = [z.copy()]
    for k in range(1, total_steps + 1):
        t_prev = (k - 1) * step
        t = min(k * step, horizon)
        z = _rk4_step(field, t_prev, z, t - t_prev)
        if not np.all(np.isfinite(z)):
            raise NonFiniteStateError(t)
        if k % record_every == 0 or k == total_steps:
            times.append(t)
            values.append(z.copy())
    return OpinionTrajectory(times=np.array(times), values=np.array(values))
