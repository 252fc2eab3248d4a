"""Initial-condition ensembles: Born-rule and engineered two-blob mixtures.

At t = 0 the density is two nearly disjoint Gaussian blobs (cross terms
are suppressed by exp(-4 a0^2)), so mixtures can be drawn exactly from
the per-term Gaussians, while faithful Born samples come from rejection
sampling of the full |Psi_0|^2 over the [-9, 9]^2 window.  All sampling
is single-threaded and driven by one seeded generator, so a seed pins
the ensemble bit for bit.
"""

import csv
import math
from dataclasses import dataclass
from typing import List, Tuple

import numpy as np
from scipy import stats

from .errors import ConfigError
from .params import (SINGULARITY_FLOOR, WINDOW_HALF, PhasePoint, WaveParams)
from .wavefunction import blob_centers, density

ENVELOPE_GRID = 721  # envelope maximization grid ([-9,9] at 0.025 pitch)
ENVELOPE_SAFETY = 1.001


@dataclass(frozen=True)
class EnsembleSpec:
    """Recipe for an initial ensemble.

    kind "born" ignores p1/p2 (fractions land wherever |Psi_0|^2 puts
    them); "two_blob_mixture" places round(n*p1) points on the
    upper-left blob and the rest on the lower-right one;
    "custom_blob" distributes points over arbitrary centers by weight.
    """

    kind: str = "born"
    n_particles: int = 2400
    p1: float = 0.5
    p2: float = 0.5
    custom_centers: Tuple[Tuple[Tuple[float, float], float], ...] = ()
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("born", "two_blob_mixture", "custom_blob"):
            raise ConfigError(f"unknown ensemble kind {self.kind!r}")
        if self.n_particles <= 0:
            raise ConfigError("n_particles must be positive")
        if self.kind == "two_blob_mixture":
            if not (0.0 <= self.p1 <= 1.0 and 0.0 <= self.p2 <= 1.0):
                raise ConfigError("blob fractions must lie in [0, 1]")
            if abs(self.p1 + self.p2 - 1.0) > 1e-9:
                raise ConfigError("blob fractions must sum to 1")
        if self.kind == "custom_blob":
            if not self.custom_centers:
                raise ConfigError("custom_blob needs at least one center")
            wsum = sum(w for _, w in self.custom_centers)
            if any(w < 0 for _, w in self.custom_centers) \
                    or abs(wsum - 1.0) > 1e-9:
                raise ConfigError("custom weights must be >= 0, summing to 1")


@dataclass
class ParticleSet:
    """Sampled initial conditions (all at t = 0) with provenance tags."""

    points: np.ndarray  # (n, 2) float64
    provenance: List[str]  # per-particle blob tag
    seed: int
    kind: str

    def __len__(self) -> int:
        return len(self.points)

    def phase_points(self) -> List[PhasePoint]:
        return [PhasePoint(float(x), float(y), 0.0) for x, y in self.points]


def born_envelope(params: WaveParams) -> float:
    """Grid-maximized |Psi_0|^2 bound used by the rejection sampler."""
    ax = np.linspace(-WINDOW_HALF, WINDOW_HALF, ENVELOPE_GRID)
    xs, ys = np.meshgrid(ax, ax, indexing="ij")
    rho = density(params, xs, ys, 0.0)
    return float(rho.max()) * ENVELOPE_SAFETY


def _blob_tag_centers(params: WaveParams) -> Tuple[np.ndarray, np.ndarray]:
    main, secondary = blob_centers(params, 0.0)
    return (np.array([main.x, main.y]),
            np.array([secondary.x, secondary.y]))


def _tag_points(params: WaveParams, pts: np.ndarray) -> List[str]:
    cm, cs = _blob_tag_centers(params)
    dm = np.sum((pts - cm) ** 2, axis=1)
    ds = np.sum((pts - cs) ** 2, axis=1)
    return ["main" if m <= s else "secondary" for m, s in zip(dm, ds)]


def sample_born(params: WaveParams, n: int, seed: int = 0,
                return_acceptance: bool = False):
    """Rejection-sample n points from |Psi_0|^2 over the [-9, 9]^2 window.

    Acceptance order is draw order, so the result is reproducible for a
    given seed regardless of batching.
    """
    if n <= 0:
        raise ConfigError("sample size must be positive")
    rng = np.random.default_rng(seed)
    env = born_envelope(params)
    pts = np.empty((n, 2))
    got = 0
    proposed = 0
    batch = max(8192, 4 * n)
    while got < n:
        cand = rng.uniform(-WINDOW_HALF, WINDOW_HALF, size=(batch, 2))
        u = rng.uniform(0.0, env, size=batch)
        rho = density(params, cand[:, 0], cand[:, 1], 0.0)
        keep = cand[u < rho]
        take = min(n - got, len(keep))
        pts[got:got + take] = keep[:take]
        got += take
        # count only proposals up to and including the last accepted one,
        # so the empirical acceptance rate is unbiased
        if take == len(keep):
            proposed += batch
        else:
            idx = np.flatnonzero(u < rho)[take - 1]
            proposed += int(idx) + 1
    pset = ParticleSet(points=pts, provenance=_tag_points(params, pts),
                       seed=seed, kind="born")
    if return_acceptance:
        return pset, got / proposed
    return pset


def _blob_sigmas(params: WaveParams) -> Tuple[float, float]:
    # exact single-term (coherent state) standard deviations
    return (1.0 / math.sqrt(2.0 * params.omega_x),
            1.0 / math.sqrt(2.0 * params.omega_y))


def sample_mixture(params: WaveParams, spec: EnsembleSpec) -> ParticleSet:
    """Draw an ensemble per spec; see EnsembleSpec for the conventions.

    Blob draws use the exact per-term Gaussians (the t = 0 coherent
    state of each axis), with deterministic per-blob counts round(n*p).
    """
    n = spec.n_particles
    rng = np.random.default_rng(spec.seed)
    sx, sy = _blob_sigmas(params)

    if spec.kind == "born":
        return sample_born(params, n, spec.seed)

    if spec.kind == "two_blob_mixture":
        cm, cs = _blob_tag_centers(params)
        n1 = int(round(n * spec.p1))
        n1 = min(n1, n)
        n2 = n - n1
        upper = rng.normal(loc=cs, scale=(sx, sy), size=(n1, 2))
        lower = rng.normal(loc=cm, scale=(sx, sy), size=(n2, 2))
        pts = np.vstack([upper, lower]) if n1 and n2 else \
            (upper if n1 else lower)
        tags = ["secondary"] * n1 + ["main"] * n2
        return ParticleSet(points=pts, provenance=tags, seed=spec.seed,
                           kind=spec.kind)

    # custom_blob: weighted centers, remainder goes to the last one
    counts = [int(round(n * w)) for _, w in spec.custom_centers]
    counts[-1] = n - sum(counts[:-1])
    if counts[-1] < 0:
        raise ConfigError("custom weights round to more than n particles")
    chunks = []
    tags: List[str] = []
    for i, ((cx, cy), _w) in enumerate(spec.custom_centers):
        ni = counts[i]
        if ni == 0:
            continue
        chunks.append(rng.normal(loc=(cx, cy), scale=(sx, sy),
                                 size=(ni, 2)))
        tags.extend([f"blob{i}"] * ni)
    pts = np.vstack(chunks)
    return ParticleSet(points=pts, provenance=tags, seed=spec.seed,
                       kind=spec.kind)


def sample(params: WaveParams, spec: EnsembleSpec) -> ParticleSet:
    """Dispatch on spec.kind; the single entry point used by experiments."""
    if spec.kind == "born":
        return sample_born(params, spec.n_particles, spec.seed)
    return sample_mixture(params, spec)


def verify_positive_density(params: WaveParams, pset: ParticleSet) -> bool:
    """Every start must carry usable density (non-degenerate trajectory)."""
    rho = density(params, pset.points[:, 0], pset.points[:, 1], 0.0)
    return bool(np.all(rho > SINGULARITY_FLOOR))


def chisquare_against_density(points: np.ndarray, params: WaveParams,
                              t: float = 0.0, bins: int = 60,
                              min_expected: float = 5.0):
    """Chi-square goodness of fit of points against |Psi(t)|^2.

    Bins the window into bins x bins cells, integrates the density per
    cell with a 3x3 Gauss-Legendre rule, pools cells with expected
    count below min_expected (plus all out-of-window mass) into one
    class, and returns (statistic, p_value, dof).
    """
    pts = np.asarray(points, dtype=float)
    n = len(pts)
    edges = np.linspace(-WINDOW_HALF, WINDOW_HALF, bins + 1)
    counts, _, _ = np.histogram2d(pts[:, 0], pts[:, 1], bins=(edges, edges))
    n_outside = n - int(counts.sum())

    # 3-point Gauss-Legendre nodes/weights on [-1, 1]
    gl_x = np.array([-math.sqrt(0.6), 0.0, math.sqrt(0.6)])
    gl_w = np.array([5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0])
    h = edges[1] - edges[0]
    centers = 0.5 * (edges[:-1] + edges[1:])
    # tensor evaluation grid: (bins*3) per axis
    ax = (centers[:, None] + 0.5 * h * gl_x[None, :]).ravel()
    wts = np.tile(0.5 * h * gl_w, bins)
    xs, ys = np.meshgrid(ax, ax, indexing="ij")
    rho = density(params, xs, ys, t)
    wgrid = np.outer(wts, wts)
    cellp = rho * wgrid
    cellp = cellp.reshape(bins, 3, bins, 3).sum(axis=(1, 3))

    expected = cellp.ravel() * n
    observed = counts.ravel()
    big = expected >= min_expected
    obs = list(observed[big])
    exp = list(expected[big])
    # pooled class: small cells plus everything outside the window
    pool_exp = float(expected[~big].sum()) + max(0.0, 1.0 - cellp.sum()) * n
    pool_obs = float(observed[~big].sum()) + n_outside
    if pool_exp > 0.0:
        obs.append(pool_obs)
        exp.append(pool_exp)
    obs_arr = np.asarray(obs, dtype=float)
    exp_arr = np.asarray(exp, dtype=float)
    # chisquare requires matching totals; renormalize expected to n
    exp_arr *= obs_arr.sum() / exp_arr.sum()
    stat, pval = stats.chisquare(obs_arr, exp_arr)
    return float(stat), float(pval), len(obs_arr) - 1


def particles_csv(pset: ParticleSet, path) -> None:
    """Write (index, x0, y0, blob_tag) rows."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["index", "x0", "y0", "blob_tag"])
        for i, ((x, y), tag) in enumerate(zip(pset.points,
                                              pset.provenance)):
            w.writerow([i, repr(float(x)), repr(float(y)), tag])
