"""Point-pattern grids, Frobenius distances, dumps, and image rendering.

A pattern is the 360x360 count matrix of trajectory samples over the
[-9, 9]^2 window (cell width 0.05, lower edge inclusive).  Distances
between patterns are Frobenius norms of the normalized count matrices;
with the default unit_frobenius convention each matrix is scaled to
unit Frobenius norm first, which makes the distance dimensionless and
invariant to the total number of samples.

Count accumulation runs over a fixed partition of the ensemble into
batches with private grids merged by integer summation, so results are
bit-identical for any worker count.
"""

import json
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from . import _kernels
from .errors import ConfigError, GeometryMismatch, SampleDtMismatch
from .integrate import FLAG_NAMES, IntegratorConfig, TrajectoryRecord
from .params import GRID_N, SINGULARITY_FLOOR, WINDOW_HALF, WaveParams
from .parallel import apply_workers

#: fixed ensemble partition for parallel count accumulation; results are
#: identical for any thread count because the partition never changes
N_BATCHES = 16

_PGRID_MAGIC = "pattern-grid-v1"


@dataclass
class PatternGrid:
    """Sample counts over the window, plus the bookkeeping to compare runs."""

    counts: np.ndarray  # (GRID_N, GRID_N) int64; [i, j] = x-cell i, y-cell j
    extent: float = WINDOW_HALF
    sample_dt: float = 0.05
    t_range: Tuple[float, float] = (0.0, 0.0)
    n_trajectories: int = 0
    overflow: int = 0  # samples outside the window (tallied, not dropped)

    @classmethod
    def empty(cls, sample_dt: float, t_range=(0.0, 0.0),
              extent: float = WINDOW_HALF, n: int = GRID_N) -> "PatternGrid":
        return cls(counts=np.zeros((n, n), dtype=np.int64), extent=extent,
                   sample_dt=sample_dt, t_range=tuple(t_range))

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def cell_edges(self) -> np.ndarray:
        return np.linspace(-self.extent, self.extent,
                           self.counts.shape[0] + 1)

    def copy(self) -> "PatternGrid":
        return PatternGrid(counts=self.counts.copy(), extent=self.extent,
                           sample_dt=self.sample_dt,
                           t_range=tuple(self.t_range),
                           n_trajectories=self.n_trajectories,
                           overflow=self.overflow)


@dataclass(frozen=True)
class PatternDistance:
    value: float
    normalization: str


def _same_geometry(a: PatternGrid, b: PatternGrid) -> bool:
    return (a.counts.shape == b.counts.shape
            and math.isclose(a.extent, b.extent, rel_tol=0.0, abs_tol=1e-12))


def accumulate(pattern: PatternGrid, record: TrajectoryRecord
               ) -> PatternGrid:
    """Bin every sample of `record` into `pattern` (mutates and returns it).

    The record must have been sampled with the pattern's sample_dt.
    Aborted records are accepted as-is (their collected prefix is
    binned); ensemble drivers exclude them before calling this.
    """
    if not math.isclose(abs(record.sample_dt), pattern.sample_dt,
                        rel_tol=1e-9, abs_tol=0.0):
        raise SampleDtMismatch(
            f"record sampled at {record.sample_dt}, pattern expects "
            f"{pattern.sample_dt}")
    pts = np.ascontiguousarray(record.positions, dtype=np.float64)
    over = _kernels._bin_points(pts, len(pts), pattern.extent,
                                pattern.counts.shape[0], pattern.counts)
    pattern.overflow += int(over)
    pattern.n_trajectories += 1
    lo = min(pattern.t_range[0], record.t0)
    hi = max(pattern.t_range[1], record.final_time)
    pattern.t_range = (lo, hi)
    return pattern


def merge(a: PatternGrid, b: PatternGrid) -> PatternGrid:
    """Sum of two patterns (commutative, associative on counts)."""
    if not _same_geometry(a, b):
        raise GeometryMismatch("patterns cover different grids")
    if not math.isclose(a.sample_dt, b.sample_dt, rel_tol=1e-9,
                        abs_tol=0.0):
        raise SampleDtMismatch("patterns use different sample steps")
    return PatternGrid(counts=a.counts + b.counts, extent=a.extent,
                       sample_dt=a.sample_dt,
                       t_range=(min(a.t_range[0], b.t_range[0]),
                                max(a.t_range[1], b.t_range[1])),
                       n_trajectories=a.n_trajectories + b.n_trajectories,
                       overflow=a.overflow + b.overflow)


def _normalize(counts: np.ndarray, normalization: str) -> np.ndarray:
    m = counts.astype(np.float64)
    if normalization == "unit_frobenius":
        nrm = math.sqrt(float((m * m).sum()))
    elif normalization == "unit_mass":
        nrm = float(m.sum())
    else:
        raise ConfigError(f"unknown normalization {normalization!r}")
    if nrm == 0.0:
        raise ValueError("cannot normalize an empty pattern")
    return m / nrm


def frobenius_distance(a: PatternGrid, b: PatternGrid,
                       normalization: str = "unit_frobenius"
                       ) -> PatternDistance:
    """Frobenius norm of the difference of the normalized count matrices."""
    if not _same_geometry(a, b):
        raise GeometryMismatch("patterns cover different grids")
    d = _normalize(a.counts, normalization) \
        - _normalize(b.counts, normalization)
    return PatternDistance(value=math.sqrt(float((d * d).sum())),
                           normalization=normalization)


def distance_curve(grids_a: Sequence[PatternGrid],
                   grids_b: Sequence[PatternGrid],
                   normalization: str = "unit_frobenius"
                   ) -> List[Tuple[float, float]]:
    """(t, D) rows for two matched sequences of cumulative patterns.

    Both sequences must come from the same checkpoint list (ascending);
    each entry is compared at its own checkpoint, taken from t_range.
    The last row holds the final distance D_F.
    """
    if len(grids_a) != len(grids_b):
        raise GeometryMismatch("checkpoint sequences differ in length")
    out = []
    for ga, gb in zip(grids_a, grids_b):
        t = ga.t_range[1]
        out.append((t, frobenius_distance(ga, gb, normalization).value))
    return out


def _checkpoint_bounds(checkpoints: Sequence[float], sample_dt: float
                       ) -> np.ndarray:
    """Largest sample index per checkpoint; validates grid alignment."""
    bounds = []
    for cp in checkpoints:
        n = int(round(cp / sample_dt))
        if not math.isclose(n * sample_dt, cp, rel_tol=0.0, abs_tol=1e-9):
            raise ConfigError(
                f"checkpoint {cp} is not a multiple of sample_dt "
                f"{sample_dt}")
        bounds.append(n)
    arr = np.asarray(bounds, dtype=np.int64)
    if len(arr) == 0 or np.any(np.diff(arr) <= 0) or arr[0] < 0:
        raise ConfigError("checkpoints must be ascending non-negative")
    return arr


def ensemble_patterns(params: WaveParams, starts, checkpoints,
                      config: Optional[IntegratorConfig] = None,
                      workers=None):
    """Evolve an ensemble and return cumulative patterns per checkpoint.

    starts: (n, 2) initial positions at t = 0.  checkpoints: ascending
    times, multiples of sample_dt; the last one is the horizon.
    Returns (grids, report) where grids[j] holds all samples with
    t <= checkpoints[j] and report carries per-trajectory flags and
    step statistics.  Trajectories that do not complete contribute no
    counts and are listed in the report.
    """
    cfg = config or IntegratorConfig(t_final=float(checkpoints[-1]))
    starts = np.ascontiguousarray(np.asarray(starts, dtype=np.float64))
    if starts.ndim != 2 or starts.shape[1] != 2:
        raise ConfigError("starts must be an (n, 2) array")
    cps = [float(c) for c in checkpoints]
    if not math.isclose(cps[-1], cfg.t_final, rel_tol=0.0, abs_tol=1e-9):
        raise ConfigError("last checkpoint must equal t_final")
    bounds = _checkpoint_bounds(cps, cfg.sample_dt)
    ts = np.arange(bounds[-1] + 1) * cfg.sample_dt
    apply_workers(workers)

    ntraj = starts.shape[0]
    nseg = len(bounds)
    grids = np.zeros((N_BATCHES, nseg, GRID_N, GRID_N), dtype=np.int64)
    overflow = np.zeros((N_BATCHES, nseg), dtype=np.int64)
    flags = np.empty(ntraj, dtype=np.int64)
    accepted = np.empty(ntraj, dtype=np.int64)
    rejected = np.empty(ntraj, dtype=np.int64)
    minp2 = np.empty(ntraj, dtype=np.float64)
    _kernels._ensemble_bin(
        params.c1, params.c2, params.omega_x, params.omega_y, params.a0,
        starts, ts, bounds, cfg.rel_tol, cfg.abs_tol, cfg.dt_init,
        cfg.dt_min, cfg.dt_max, SINGULARITY_FLOOR, cfg.node_guard,
        N_BATCHES, WINDOW_HALF, GRID_N, grids, overflow, flags,
        accepted, rejected, minp2)

    seg_counts = grids.sum(axis=0)
    seg_over = overflow.sum(axis=0)
    cum_counts = np.cumsum(seg_counts, axis=0)
    cum_over = np.cumsum(seg_over)
    n_completed = int(np.sum(flags == _kernels.FLAG_COMPLETED))
    out = []
    for j, cp in enumerate(cps):
        out.append(PatternGrid(counts=cum_counts[j].copy(),
                               extent=WINDOW_HALF,
                               sample_dt=cfg.sample_dt, t_range=(0.0, cp),
                               n_trajectories=n_completed,
                               overflow=int(cum_over[j])))
    report = {
        "n_trajectories": ntraj,
        "n_completed": n_completed,
        "n_aborted_near_node": int(np.sum(
            flags == _kernels.FLAG_ABORTED_NEAR_NODE)),
        "n_left_window": int(np.sum(flags == _kernels.FLAG_LEFT_WINDOW)),
        "flags": [FLAG_NAMES[int(f)] for f in flags],
        "steps_accepted": int(accepted.sum()),
        "steps_rejected": int(rejected.sum()),
        "min_density": float(minp2.min()) if ntraj else math.nan,
    }
    return out, report


def single_pattern(params: WaveParams, start, checkpoints,
                   config: Optional[IntegratorConfig] = None,
                   window_samples: int = 200_000):
    """Cumulative patterns of one long trajectory at each checkpoint.

    Integrates in restartable windows of at most window_samples samples
    so arbitrarily long horizons use bounded memory.  Returns
    (grids, report) like ensemble_patterns (n_trajectories is 1).
    """
    cfg = config or IntegratorConfig(t_final=float(checkpoints[-1]))
    cps = [float(c) for c in checkpoints]
    if not math.isclose(cps[-1], cfg.t_final, rel_tol=0.0, abs_tol=1e-9):
        raise ConfigError("last checkpoint must equal t_final")
    bounds = _checkpoint_bounds(cps, cfg.sample_dt)
    x = float(start[0])
    y = float(start[1])

    grid = np.zeros((GRID_N, GRID_N), dtype=np.int64)
    overflow = 0
    out: List[PatternGrid] = []
    flag = _kernels.FLAG_COMPLETED
    nacc_total = 0
    nrej_total = 0
    minp2 = math.inf
    n_done = -1  # last emitted sample index
    t_cur = 0.0
    aborted = False
    for j, cp in enumerate(cps):
        seg_end = int(bounds[j])
        while n_done < seg_end and not aborted:
            lo = n_done + 1
            hi = min(seg_end, lo + window_samples - 1)
            ts = np.arange(lo, hi + 1) * cfg.sample_dt
            if lo == 0:
                # seed the run: the kernel emits ts[0] only when it
                # equals the start time, so give it t0 = 0 explicitly
                t_start, xs, ys = 0.0, x, y
            else:
                t_start, xs, ys = t_cur, x, y
            buf = np.empty((len(ts), 2))
            f, n_emit, nacc, nrej, mp = _kernels._integrate_times(
                params.c1, params.c2, params.omega_x, params.omega_y,
                params.a0, xs, ys, t_start, ts, cfg.rel_tol, cfg.abs_tol,
                cfg.dt_init, cfg.dt_min, cfg.dt_max, SINGULARITY_FLOOR,
                cfg.node_guard, buf)
            overflow += _kernels._bin_points(buf, n_emit, WINDOW_HALF,
                                             GRID_N, grid)
            nacc_total += nacc
            nrej_total += nrej
            minp2 = min(minp2, mp)
            if f != _kernels.FLAG_COMPLETED:
                flag = f
                aborted = True
                n_done += n_emit
            else:
                n_done = hi
                x, y = buf[n_emit - 1]
                t_cur = ts[-1]
        out.append(PatternGrid(counts=grid.copy(), extent=WINDOW_HALF,
                               sample_dt=cfg.sample_dt, t_range=(0.0, cp),
                               n_trajectories=1, overflow=overflow))
        if aborted:
            # later checkpoints repeat the truncated pattern
            continue
    report = {
        "n_trajectories": 1,
        "n_completed": int(flag == _kernels.FLAG_COMPLETED),
        "flag": FLAG_NAMES[flag],
        "steps_accepted": nacc_total,
        "steps_rejected": nrej_total,
        "min_density": minp2,
        "samples_emitted": n_done + 1,
    }
    return out, report


# -- serialization ---------------------------------------------------------

def dump_pattern(pattern: PatternGrid, path) -> None:
    """Write a pattern dump: one JSON header line + raw int64 counts.

    The payload is little-endian, C-order; the header records geometry
    and provenance so dumps are self-describing.
    """
    header = {
        "format": _PGRID_MAGIC,
        "shape": list(pattern.counts.shape),
        "extent": pattern.extent,
        "sample_dt": pattern.sample_dt,
        "t_range": list(pattern.t_range),
        "n_trajectories": pattern.n_trajectories,
        "overflow": pattern.overflow,
        "dtype": "<i8",
    }
    with open(path, "wb") as fh:
        fh.write(json.dumps(header, sort_keys=True).encode("ascii"))
        fh.write(b"\n")
        fh.write(np.ascontiguousarray(pattern.counts,
                                      dtype="<i8").tobytes())


def load_pattern(path) -> PatternGrid:
    with open(path, "rb") as fh:
        header = json.loads(fh.readline().decode("ascii"))
        if header.get("format") != _PGRID_MAGIC:
            raise ConfigError(f"{path} is not a pattern dump")
        shape = tuple(header["shape"])
        raw = fh.read(shape[0] * shape[1] * 8)
        counts = np.frombuffer(raw, dtype="<i8").reshape(shape)
    return PatternGrid(counts=counts.astype(np.int64),
                       extent=float(header["extent"]),
                       sample_dt=float(header["sample_dt"]),
                       t_range=tuple(header["t_range"]),
                       n_trajectories=int(header["n_trajectories"]),
                       overflow=int(header["overflow"]))


# -- rendering -------------------------------------------------------------

#: anchor colors for the spectral map, dark-to-hot
_SPECTRAL_ANCHORS = (
    (0, 0, 60), (0, 0, 255), (0, 200, 255), (0, 230, 80),
    (255, 255, 0), (255, 128, 0), (230, 0, 0),
)


def _spectral_lut() -> np.ndarray:
    anchors = np.asarray(_SPECTRAL_ANCHORS, dtype=np.float64)
    n = 256
    pos = np.linspace(0.0, 1.0, len(anchors))
    xs = np.linspace(0.0, 1.0, n)
    lut = np.empty((n, 3), dtype=np.uint8)
    for c in range(3):
        lut[:, c] = np.clip(np.round(np.interp(xs, pos, anchors[:, c])),
                            0, 255).astype(np.uint8)
    return lut


_COLORBAR_W = 20
_COLORBAR_GAP = 2


def render(pattern: PatternGrid, path, scale: str = "log") -> None:
    """Write the pattern as a binary PPM image plus a sidecar text file.

    Pixel format: P6 (24-bit RGB), origin-lower (row 0 of the image is
    the top of the window, y = +extent).  A vertical colorbar strip is
    appended on the right.  Identical counts give identical bytes.
    """
    if scale not in ("log", "linear"):
        raise ConfigError("scale must be 'log' or 'linear'")
    counts = pattern.counts
    n = counts.shape[0]
    cmax = float(counts.max())
    if cmax <= 0.0:
        level = np.zeros_like(counts, dtype=np.float64)
    elif scale == "log":
        level = np.log1p(counts.astype(np.float64)) / math.log1p(cmax)
    else:
        level = counts.astype(np.float64) / cmax
    lut = _spectral_lut()
    idx = np.clip((level * 255.0).round().astype(np.int64), 0, 255)
    # counts[i, j]: i = x cell, j = y cell -> image row = top-down y
    img = lut[idx.T[::-1]]

    bar = np.zeros((n, _COLORBAR_GAP + _COLORBAR_W, 3), dtype=np.uint8)
    ramp = np.linspace(1.0, 0.0, n)
    bar_idx = np.clip((ramp * 255.0).round().astype(np.int64), 0, 255)
    bar[:, _COLORBAR_GAP:, :] = lut[bar_idx][:, None, :]
    full = np.concatenate([img, bar], axis=1)

    with open(path, "wb") as fh:
        fh.write(f"P6\n{full.shape[1]} {full.shape[0]}\n255\n"
                 .encode("ascii"))
        fh.write(full.tobytes())

    sidecar = str(path) + ".txt"
    with open(sidecar, "w") as fh:
        fh.write("pattern image annotation\n")
        fh.write(f"window: [{-pattern.extent}, {pattern.extent}]^2, "
                 f"x left-to-right, y bottom-to-top (origin lower)\n")
        fh.write(f"grid: {n} x {n}, cell width "
                 f"{2 * pattern.extent / n}\n")
        fh.write(f"time range: [{pattern.t_range[0]}, "
                 f"{pattern.t_range[1]}], sample step "
                 f"{pattern.sample_dt}\n")
        fh.write(f"trajectories: {pattern.n_trajectories}\n")
        fh.write(f"total samples: {pattern.total} "
                 f"(+{pattern.overflow} outside window)\n")
        fh.write(f"color scale: {scale}, max cell count {int(cmax)}; "
                 f"colorbar right edge, top = max\n")
