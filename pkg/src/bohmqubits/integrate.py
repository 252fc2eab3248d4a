"""Adaptive trajectory integration with guaranteed sample times.

Trajectories follow dx/dt = v(x, y, t) with the velocity field of the
two-qubit state.  The stepper is an embedded 5(4) pair; states at the
requested sample times come from the quartic dense-output interpolant,
so the step sequence (and therefore the trajectory itself) never
depends on how finely the caller wants it sampled.

Near a moving node the velocity field is stiff and nearly singular.
Two guards keep the integration honest there: steps whose displacement
would exceed a quarter of the local node spacing are capped while the
trajectory is within one spacing of the node line, and any stage
evaluation landing below the density floor rejects the step.  If the
step size collapses below dt_min anyway, the record comes back flagged
``aborted_near_node`` with the samples collected so far.
"""

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import _kernels
from .errors import ConfigError
from .params import SINGULARITY_FLOOR, PhasePoint, WaveParams
from .parallel import apply_workers

FLAG_NAMES = {
    _kernels.FLAG_COMPLETED: "completed",
    _kernels.FLAG_ABORTED_NEAR_NODE: "aborted_near_node",
    _kernels.FLAG_LEFT_WINDOW: "left_window",
}


@dataclass(frozen=True)
class IntegratorConfig:
    """Step-control settings for one integration run.

    t_final is the physical end time; it must sit on the sample grid
    (an integer number of sample_dt away from the start time).  Runs
    backward when t_final < t0.
    """

    t_final: float = 10.0
    sample_dt: float = 0.05
    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    dt_init: float = 1e-3
    dt_min: float = 1e-12
    dt_max: float = 0.05
    node_guard: bool = True

    def __post_init__(self):
        if not (self.sample_dt > 0.0 and math.isfinite(self.sample_dt)):
            raise ConfigError("sample_dt must be positive and finite")
        if not (0.0 < self.dt_min <= self.dt_max):
            raise ConfigError("need 0 < dt_min <= dt_max")
        if self.dt_init <= 0.0:
            raise ConfigError("dt_init must be positive")
        if self.rel_tol <= 0.0 or self.abs_tol <= 0.0:
            raise ConfigError("tolerances must be positive")
        if not math.isfinite(self.t_final):
            raise ConfigError("t_final must be finite")

    def time_grid(self, t0: float) -> np.ndarray:
        """Sample times from t0 to t_final, exact sample_dt multiples."""
        span = self.t_final - t0
        if span == 0.0:
            raise ConfigError("t_final equals the start time")
        n = int(round(abs(span) / self.sample_dt))
        if n < 1 or not math.isclose(n * self.sample_dt, abs(span),
                                     rel_tol=0.0, abs_tol=1e-9):
            raise ConfigError(
                "t_final must be a whole number of sample_dt intervals "
                f"from the start time (got span {span}, dt {self.sample_dt})")
        step = math.copysign(self.sample_dt, span)
        return t0 + np.arange(n + 1) * step


@dataclass
class TrajectoryRecord:
    """One trajectory: sampled positions plus integration bookkeeping.

    positions holds only the samples actually produced; for a completed
    run that is the full grid, for an aborted run a prefix of it.
    """

    x0: float
    y0: float
    t0: float
    sample_dt: float  # signed: negative for backward runs
    positions: np.ndarray
    flag: str
    n_accepted: int
    n_rejected: int
    min_density: float
    chi: Optional[np.ndarray] = None
    stats: dict = field(init=False)

    def __post_init__(self):
        self.stats = {
            "flag": self.flag,
            "n_accepted": self.n_accepted,
            "n_rejected": self.n_rejected,
            "min_density": self.min_density,
            "n_samples": len(self.positions),
        }

    @property
    def completed(self) -> bool:
        return self.flag == "completed"

    @property
    def times(self) -> np.ndarray:
        return self.t0 + np.arange(len(self.positions)) * self.sample_dt

    @property
    def final_position(self):
        if len(self.positions) == 0:
            return None
        return self.positions[-1].copy()

    @property
    def final_time(self) -> float:
        if len(self.positions) == 0:
            return self.t0
        return self.t0 + (len(self.positions) - 1) * self.sample_dt


def _start_point(start) -> PhasePoint:
    if isinstance(start, PhasePoint):
        return start
    vals = tuple(float(v) for v in start)
    if len(vals) == 2:
        return PhasePoint(vals[0], vals[1], 0.0)
    if len(vals) == 3:
        return PhasePoint(*vals)
    raise ConfigError("start must be (x, y) or (x, y, t)")


def integrate(params: WaveParams, start, config: IntegratorConfig,
              ) -> TrajectoryRecord:
    """Propagate one trajectory and sample it on the config time grid."""
    p = _start_point(start)
    ts = config.time_grid(p.t)
    out = np.empty((len(ts), 2))
    flag, n_emit, nacc, nrej, minp2 = _kernels._integrate_times(
        params.c1, params.c2, params.omega_x, params.omega_y, params.a0,
        p.x, p.y, p.t, ts,
        config.rel_tol, config.abs_tol, config.dt_init, config.dt_min,
        config.dt_max, SINGULARITY_FLOOR, config.node_guard, out)
    step = ts[1] - ts[0] if len(ts) > 1 else config.sample_dt
    return TrajectoryRecord(
        x0=p.x, y0=p.y, t0=p.t, sample_dt=step,
        positions=out[:n_emit].copy(), flag=FLAG_NAMES[flag],
        n_accepted=nacc, n_rejected=nrej, min_density=minp2)


def integrate_with_deviation(params: WaveParams, start,
                             config: IntegratorConfig,
                             deviation0=(1.0, 0.0),
                             renorm_hi: float = 1e8,
                             renorm_lo: float = 1e-8) -> TrajectoryRecord:
    """Trajectory plus linearized deviation growth.

    The deviation vector obeys dq/dt = J(x, y, t) q along the orbit,
    with periodic renormalization so no overflow occurs over long
    horizons.  record.chi[i] holds log(|q(t_i)| / |q(t_0)|) / (t_i - t0)
    (0 at the start sample); the value is independent of the magnitude
    of deviation0.
    """
    p = _start_point(start)
    dq = tuple(float(v) for v in deviation0)
    if len(dq) != 2 or math.hypot(*dq) == 0.0:
        raise ConfigError("deviation0 must be a nonzero 2-vector")
    ts = config.time_grid(p.t)
    out = np.empty((len(ts), 2))
    chi = np.empty(len(ts))
    flag, n_emit, nacc, nrej, minp2 = _kernels._integrate_deviation_times(
        params.c1, params.c2, params.omega_x, params.omega_y, params.a0,
        p.x, p.y, p.t, dq[0], dq[1], ts,
        config.rel_tol, config.abs_tol, config.dt_init, config.dt_min,
        config.dt_max, SINGULARITY_FLOOR, config.node_guard,
        renorm_hi, renorm_lo, out, chi)
    step = ts[1] - ts[0] if len(ts) > 1 else config.sample_dt
    return TrajectoryRecord(
        x0=p.x, y0=p.y, t0=p.t, sample_dt=step,
        positions=out[:n_emit].copy(), flag=FLAG_NAMES[flag],
        n_accepted=nacc, n_rejected=nrej, min_density=minp2,
        chi=chi[:n_emit].copy())


def snapshot_positions(params: WaveParams, starts, times,
                       config: Optional[IntegratorConfig] = None,
                       workers=None):
    """Positions of many trajectories at the given times, in parallel.

    starts is (n, 2): initial positions at t = 0.  times must be
    increasing and start at a value >= 0; a leading 0 simply echoes the
    start.  Returns (positions (n, len(times), 2), flags list of str).
    Rows of trajectories that abort are NaN from the failure onward.
    """
    cfg = config or IntegratorConfig()
    starts = np.ascontiguousarray(np.asarray(starts, dtype=np.float64))
    if starts.ndim != 2 or starts.shape[1] != 2:
        raise ConfigError("starts must be an (n, 2) array")
    ts = np.asarray(times, dtype=np.float64)
    if ts.ndim != 1 or len(ts) == 0 or np.any(np.diff(ts) <= 0.0):
        raise ConfigError("times must be a strictly increasing 1-d array")
    if ts[0] < 0.0:
        raise ConfigError("snapshot times start at t >= 0")
    apply_workers(workers)
    out = np.empty((starts.shape[0], len(ts), 2))
    flags = np.empty(starts.shape[0], dtype=np.int64)
    _kernels._ensemble_snapshots(
        params.c1, params.c2, params.omega_x, params.omega_y, params.a0,
        starts, ts, cfg.rel_tol, cfg.abs_tol, cfg.dt_init, cfg.dt_min,
        cfg.dt_max, SINGULARITY_FLOOR, cfg.node_guard, out, flags)
    return out, [FLAG_NAMES[int(f)] for f in flags]
