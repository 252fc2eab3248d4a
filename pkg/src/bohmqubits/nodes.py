"""Nodal lattice of the entangled state and its companion X-points.

For c1*c2 != 0 the zeros of Psi form an infinite lattice of points on a
straight line that moves and rotates in time.  Everything about that
line (positions, spacing, inclination, distance from the origin) is
closed-form; only the X-points, the hyperbolic stagnation points of the
flow in the frame moving with a node, need root-finding.

Whenever sin((omega_x - omega_y) t) crosses zero the whole lattice
retreats to infinity; those instants are reported, never extrapolated.
"""

import csv
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import (NearNodeSingularity, NoNodes, NodesAtInfinity,
                     NotHyperbolic, XPointNotFound)
from .params import PhasePoint, WaveParams
from .wavefunction import cross_term_envelope, velocity, velocity_jacobian

#: |sin(omega_xy t)| below this means the lattice is effectively at infinity
INFINITY_WINDOW = 1e-9

#: nodes landing outside |x|,|y| <= WINDOW_LIMIT are flagged, not dropped
WINDOW_LIMIT = 12.0

DEFAULT_K_RANGE = (-15, 15)

X_POINT_TOL = 1e-10
X_POINT_MAX_ITER = 100

#: cross-term envelope (density convention) above this marks a collision
COLLISION_THRESHOLD = 0.01


@dataclass(frozen=True)
class NodalPoint:
    k: int
    position: PhasePoint
    parity: str  # "even" or "odd", fixed by sgn(c1 c2)
    in_window: bool


@dataclass(frozen=True)
class NodeLatticeFrame:
    """Geometry of the node line at one instant.

    inclination is dy/dx of the line (+-inf when vertical); spacing is
    the distance between neighbouring lattice points (k to k+2, the
    smallest same-parity step); origin_distance is the perpendicular
    distance of the line from the origin.  valid is False at the
    lattice-at-infinity instants, where the other fields are inf.
    """

    t: float
    inclination: float
    spacing: float
    origin_distance: float
    valid: bool


@dataclass(frozen=True)
class XPoint:
    position: PhasePoint
    paired_node: int
    eigenvalues: Tuple[float, float]


@dataclass(frozen=True)
class CollisionEpoch:
    """Interval where the blob cross-term envelope exceeds the threshold."""

    t_start: float
    t_end: float
    t_peak: float
    envelope_peak: float


def _require_nodes(params: WaveParams, t: float) -> None:
    if params.c1 * params.c2 == 0.0:
        raise NoNodes("product state (c1*c2 = 0) has no nodal lattice")
    if abs(math.sin((params.omega_x - params.omega_y) * t)) < INFINITY_WINDOW:
        raise NodesAtInfinity(
            f"node lattice at infinity near t = {t} "
            f"(multiple of pi/|omega_x - omega_y|)")


def node_position(params: WaveParams, t: float, k: int) -> Tuple[float, float]:
    """Raw lattice-point coordinates for index k (no parity/window check)."""
    _require_nodes(params, t)
    wx, wy, a0 = params.omega_x, params.omega_y, params.a0
    sn = math.sin((wx - wy) * t)
    ell = math.log(abs(params.c1 / params.c2))
    x = math.sqrt(2.0) * (k * math.pi * math.cos(wy * t)
                          + math.sin(wy * t) * ell) \
        / (4.0 * math.sqrt(wx) * a0 * sn)
    y = math.sqrt(2.0) * (k * math.pi * math.cos(wx * t)
                          + math.sin(wx * t) * ell) \
        / (4.0 * math.sqrt(wy) * a0 * sn)
    return x, y


def node_velocity(params: WaveParams, t: float, k: int) -> Tuple[float, float]:
    """Exact d/dt of the node-k position (the lattice drift velocity)."""
    _require_nodes(params, t)
    wx, wy, a0 = params.omega_x, params.omega_y, params.a0
    wxy = wx - wy
    sn = math.sin(wxy * t)
    dsn = wxy * math.cos(wxy * t)
    ell = math.log(abs(params.c1 / params.c2))
    fx = math.sqrt(2.0) / (4.0 * math.sqrt(wx) * a0)
    fy = math.sqrt(2.0) / (4.0 * math.sqrt(wy) * a0)
    ux = k * math.pi * math.cos(wy * t) + ell * math.sin(wy * t)
    dux = wy * (-k * math.pi * math.sin(wy * t) + ell * math.cos(wy * t))
    uy = k * math.pi * math.cos(wx * t) + ell * math.sin(wx * t)
    duy = wx * (-k * math.pi * math.sin(wx * t) + ell * math.cos(wx * t))
    vx = fx * (dux * sn - ux * dsn) / (sn * sn)
    vy = fy * (duy * sn - uy * dsn) / (sn * sn)
    return vx, vy


def _parity(params: WaveParams) -> Tuple[str, int]:
    """Allowed k parity: odd k for c1 c2 > 0, even k for c1 c2 < 0."""
    name = params.parity
    return name, (1 if name == "odd" else 0)


def nodes_at(params: WaveParams, t: float,
             k_range: Tuple[int, int] = DEFAULT_K_RANGE) -> List[NodalPoint]:
    """All lattice points with index in k_range (inclusive) at time t.

    Only indices of the parity selected by sgn(c1 c2) carry nodes.
    Points beyond |x| or |y| > 12 are still returned, flagged
    in_window=False.
    """
    _require_nodes(params, t)
    name, rem = _parity(params)
    k_lo, k_hi = int(k_range[0]), int(k_range[1])
    out = []
    for k in range(k_lo, k_hi + 1):
        if k % 2 != rem % 2:
            continue
        x, y = node_position(params, t, k)
        inside = abs(x) <= WINDOW_LIMIT and abs(y) <= WINDOW_LIMIT
        out.append(NodalPoint(k=k, position=PhasePoint(x, y, t),
                              parity=name, in_window=inside))
    return out


def lattice_frame(params: WaveParams, t: float) -> NodeLatticeFrame:
    """Spacing, inclination and origin distance of the node line at t."""
    if params.c1 * params.c2 == 0.0:
        raise NoNodes("product state (c1*c2 = 0) has no nodal lattice")
    wx, wy, a0 = params.omega_x, params.omega_y, params.a0
    sn = math.sin((wx - wy) * t)
    if abs(sn) < INFINITY_WINDOW:
        return NodeLatticeFrame(t=t, inclination=math.inf, spacing=math.inf,
                                origin_distance=math.inf, valid=False)
    cx = math.cos(wx * t)
    cy = math.cos(wy * t)
    spacing = (math.pi / (a0 * abs(sn))) \
        * math.sqrt((wx * cx * cx + wy * cy * cy) / (2.0 * wx * wy))
    if cy == 0.0:
        incl = math.inf if cx > 0 else -math.inf
    else:
        incl = math.sqrt(wx / wy) * cx / cy
    ell = abs(math.log(abs(params.c1 / params.c2)))
    d_no = math.sqrt(2.0) * ell \
        / (4.0 * a0 * math.sqrt(wx * cx * cx + wy * cy * cy))
    return NodeLatticeFrame(t=t, inclination=incl, spacing=spacing,
                            origin_distance=d_no, valid=True)


def min_origin_distance(params: WaveParams) -> float:
    """Smallest origin distance the node line ever reaches (at t = 0)."""
    if params.c1 * params.c2 == 0.0:
        raise NoNodes("product state (c1*c2 = 0) has no nodal lattice")
    ell = abs(math.log(abs(params.c1 / params.c2)))
    return math.sqrt(2.0) * ell \
        / (4.0 * params.a0 * math.sqrt(params.omega_x + params.omega_y))


def _relative_field(params: WaveParams, x: float, y: float, t: float,
                    nvx: float, nvy: float) -> Tuple[float, float]:
    vx, vy = velocity(params, x, y, t)
    return float(vx) - nvx, float(vy) - nvy


def find_x_point(params: WaveParams, node: NodalPoint) -> XPoint:
    """Hyperbolic stagnation point of the flow co-moving with `node`.

    Seeds halfway toward the adjacent lattice point (k+2) and runs a
    damped Newton iteration on u(p) = v(p) - v_node, confined to the
    node-centered square of side one lattice spacing.  The converged
    point is accepted only if the flow Jacobian there has real
    eigenvalues of opposite sign.
    """
    t = node.position.t
    frame = lattice_frame(params, t)
    if not frame.valid:
        raise NodesAtInfinity(f"lattice frame invalid at t = {t}")
    k = node.k
    nx, ny = node.position.x, node.position.y
    ax, ay = node_position(params, t, k + 2)
    nvx, nvy = node_velocity(params, t, k)
    half = 0.5 * frame.spacing

    px = nx + 0.5 * (ax - nx)
    py = ny + 0.5 * (ay - ny)
    fd = max(1e-7, 1e-6 * frame.spacing)

    def field(qx, qy):
        try:
            return _relative_field(params, qx, qy, t, nvx, nvy)
        except NearNodeSingularity as exc:
            raise XPointNotFound(
                "density below floor while tracing the relative field "
                f"near node k={k}, t={t}") from exc

    ux, uy = field(px, py)
    for _ in range(X_POINT_MAX_ITER):
        res = math.hypot(ux, uy)
        if res < X_POINT_TOL:
            break
        # numerical Jacobian of the relative field, central differences
        uxp = field(px + fd, py)
        uxm = field(px - fd, py)
        uyp = field(px, py + fd)
        uym = field(px, py - fd)
        j00 = (uxp[0] - uxm[0]) / (2.0 * fd)
        j10 = (uxp[1] - uxm[1]) / (2.0 * fd)
        j01 = (uyp[0] - uym[0]) / (2.0 * fd)
        j11 = (uyp[1] - uym[1]) / (2.0 * fd)
        det = j00 * j11 - j01 * j10
        if det == 0.0 or not math.isfinite(det):
            raise XPointNotFound(
                f"singular Jacobian in X-point search at node k={k}, t={t}")
        dx = -(j11 * ux - j01 * uy) / det
        dy = -(-j10 * ux + j00 * uy) / det
        lam = 1.0
        while True:
            qx, qy = px + lam * dx, py + lam * dy
            if abs(qx - nx) <= half and abs(qy - ny) <= half:
                tux, tuy = field(qx, qy)
                if math.hypot(tux, tuy) < res or lam < 1e-4:
                    break
            lam *= 0.5
            if lam < 1e-12:
                raise XPointNotFound(
                    f"damped Newton stalled at node k={k}, t={t}")
        px, py, ux, uy = qx, qy, tux, tuy
    else:
        raise XPointNotFound(
            f"no convergence in {X_POINT_MAX_ITER} iterations "
            f"at node k={k}, t={t}")

    jac = velocity_jacobian(params, px, py, t)
    tr = jac[0, 0] + jac[1, 1]
    det = jac[0, 0] * jac[1, 1] - jac[0, 1] * jac[1, 0]
    disc = tr * tr - 4.0 * det
    if det >= 0.0 or disc <= 0.0:
        raise NotHyperbolic(
            f"stagnation point at ({px:.6f}, {py:.6f}) is not hyperbolic "
            f"(det={det:.3e}, disc={disc:.3e})")
    root = math.sqrt(disc)
    lo, hi = 0.5 * (tr - root), 0.5 * (tr + root)
    return XPoint(position=PhasePoint(float(px), float(py), t),
                  paired_node=k, eigenvalues=(float(lo), float(hi)))


def collision_epochs(params: WaveParams, t_max: float,
                     threshold: float = COLLISION_THRESHOLD,
                     scan_dt: float = 2e-3) -> List[CollisionEpoch]:
    """Intervals in [0, t_max] where the blobs overlap appreciably.

    Uses the density-convention cross-term envelope; edges are refined
    by bisection and the in-interval peak by bounded scalar
    minimization, so the result does not depend on the scan grid.
    """
    if t_max <= 0.0:
        return []
    if params.c1 * params.c2 == 0.0:
        # single product term: nothing to collide with
        return []

    def env(t):
        return float(cross_term_envelope(params, t, kind="density"))

    ts = np.arange(0.0, t_max + scan_dt, scan_dt)
    ts[-1] = min(ts[-1], t_max)
    vals = np.array([env(t) for t in ts])
    above = vals >= threshold
    epochs: List[CollisionEpoch] = []
    i = 0
    n = len(ts)
    while i < n:
        if not above[i]:
            i += 1
            continue
        j = i
        while j + 1 < n and above[j + 1]:
            j += 1
        # refine edges by bisection against the threshold
        t_lo = ts[i]
        if i > 0:
            a, b = ts[i - 1], ts[i]
            for _ in range(60):
                m = 0.5 * (a + b)
                if env(m) >= threshold:
                    b = m
                else:
                    a = m
            t_lo = b
        t_hi = ts[j]
        if j + 1 < n:
            a, b = ts[j], ts[j + 1]
            for _ in range(60):
                m = 0.5 * (a + b)
                if env(m) >= threshold:
                    a = m
                else:
                    b = m
            t_hi = a
        res = minimize_scalar(lambda t: -env(t), bounds=(t_lo, t_hi),
                              method="bounded",
                              options={"xatol": 1e-10})
        t_peak = float(res.x)
        epochs.append(CollisionEpoch(t_start=float(t_lo), t_end=float(t_hi),
                                     t_peak=t_peak,
                                     envelope_peak=env(t_peak)))
        i = j + 1
    return epochs


def spacing_minima(params: WaveParams, t_max: float,
                   scan_dt: float = 1e-3) -> List[Tuple[float, float]]:
    """(t, spacing) at every local minimum of the node spacing in (0, t_max).

    Instants where the lattice is at infinity split the scan into
    branches; minima are refined by bounded scalar minimization.
    """
    def sp(t):
        f = lattice_frame(params, t)
        return f.spacing if f.valid else math.inf

    ts = np.arange(scan_dt, t_max, scan_dt)
    vals = np.array([sp(t) for t in ts])
    out: List[Tuple[float, float]] = []
    for i in range(1, len(ts) - 1):
        if not (math.isfinite(vals[i - 1]) and math.isfinite(vals[i])
                and math.isfinite(vals[i + 1])):
            continue
        if vals[i] <= vals[i - 1] and vals[i] <= vals[i + 1]:
            res = minimize_scalar(sp, bounds=(ts[i - 1], ts[i + 1]),
                                  method="bounded",
                                  options={"xatol": 1e-12})
            t_min = float(res.x)
            out.append((t_min, sp(t_min)))
    # merge refinements that collapsed onto the same minimum
    dedup: List[Tuple[float, float]] = []
    for t_min, v in out:
        if dedup and abs(t_min - dedup[-1][0]) < 10 * scan_dt:
            if v < dedup[-1][1]:
                dedup[-1] = (t_min, v)
        else:
            dedup.append((t_min, v))
    return dedup


def nodes_csv(params: WaveParams, times: Sequence[float], path,
              k_range: Tuple[int, int] = DEFAULT_K_RANGE) -> None:
    """Write (t, k, x_nod, y_nod, spacing, inclination, d_no) rows.

    Times where the lattice is at infinity are skipped (no rows).
    """
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "k", "x_nod", "y_nod", "spacing", "inclination",
                    "d_no"])
        for t in times:
            frame = lattice_frame(params, float(t))
            if not frame.valid:
                continue
            for nd in nodes_at(params, float(t), k_range):
                w.writerow([repr(float(t)), nd.k, repr(nd.position.x),
                            repr(nd.position.y), repr(frame.spacing),
                            repr(frame.inclination),
                            repr(frame.origin_distance)])
