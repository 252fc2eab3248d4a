"""Compiled scalar kernels: field evaluation and adaptive integration.

Everything here mirrors the closed forms of `wavefunction` but as numba
scalar kernels for the integrator hot loop (the velocity is evaluated
billions of times over the long horizons).  The stepper is an embedded
Dormand-Prince 5(4) pair with the standard quartic dense-output
interpolant, extended with two robustness devices for the near-node
passages:

* any stage landing at |Psi|^2 <= floor rejects the step and halves h;
* while within one lattice spacing of the node line, the displacement
  per step is capped at spacing/4 so an X-point cannot be jumped over.

Batch drivers parallelize over trajectories (or fixed trajectory
batches when accumulating shared count grids, so results are identical
for any worker count).
"""

import math

import numpy as np
from numba import njit, prange

FLAG_COMPLETED = 0
FLAG_ABORTED_NEAR_NODE = 1
FLAG_LEFT_WINDOW = 2

#: hard sanity bound: nothing physical lives this far out ([-9,9] window,
#: blob excursions ~7); a sample beyond it marks the record left_window.
HARD_BOUND = 60.0

NODES_AT_INFINITY_TOL = 1e-9

# Dormand-Prince 5(4) tableau
_A21 = 1.0 / 5.0
_A31, _A32 = 3.0 / 40.0, 9.0 / 40.0
_A41, _A42, _A43 = 44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0
_A51, _A52, _A53, _A54 = (
    19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0,
)
_A61, _A62, _A63, _A64, _A65 = (
    9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0,
    -5103.0 / 18656.0,
)
_B1, _B3, _B4, _B5, _B6 = (
    35.0 / 384.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0,
)
# y5 - y4 error weights (B - Bhat)
_E1 = _B1 - 5179.0 / 57600.0
_E3 = _B3 - 7571.0 / 16695.0
_E4 = _B4 - 393.0 / 640.0
_E5 = _B5 + 92097.0 / 339200.0
_E6 = _B6 - 187.0 / 2100.0
_E7 = -1.0 / 40.0
_C2, _C3, _C4, _C5 = 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0
# dense-output coefficients
_D1 = -12715105075.0 / 11282082432.0
_D3 = 87487479700.0 / 32700410799.0
_D4 = -10690763975.0 / 1880347072.0
_D5 = 701980252875.0 / 199316789632.0
_D6 = -1453857185.0 / 822651844.0
_D7 = 69997945.0 / 29380423.0


@njit(cache=True, inline="always")
def _psi_terms(c1, c2, wx, wy, a0, x, y, t):
    """Both product terms and the four log-derivative factors."""
    cx = math.sqrt(2.0 / wx) * a0 * math.cos(wx * t)
    sx = math.sqrt(2.0 * wx) * a0 * math.sin(wx * t)
    gx = 0.5 * (a0 * a0 * math.sin(2.0 * wx * t) - wx * t)
    cy = math.sqrt(2.0 / wy) * a0 * math.cos(wy * t)
    sy = math.sqrt(2.0 * wy) * a0 * math.sin(wy * t)
    gy = 0.5 * (a0 * a0 * math.sin(2.0 * wy * t) - wy * t)
    pref = (wx / np.pi) ** 0.25 * (wy / np.pi) ** 0.25
    drx = x - cx
    dlx = x + cx
    dry = y - cy
    dly = y + cy
    # term 1: R(x) L(y), term 2: L(x) R(y)
    m1 = pref * math.exp(-0.5 * (wx * drx * drx + wy * dly * dly))
    m2 = pref * math.exp(-0.5 * (wx * dlx * dlx + wy * dry * dry))
    ph1 = -sx * x + sy * y + gx + gy
    ph2 = sx * x - sy * y + gx + gy
    t1 = c1 * m1 * complex(math.cos(ph1), math.sin(ph1))
    t2 = c2 * m2 * complex(math.cos(ph2), math.sin(ph2))
    d1x = complex(-wx * drx, -sx)
    d1y = complex(-wy * dly, sy)
    d2x = complex(-wx * dlx, sx)
    d2y = complex(-wy * dry, -sy)
    return t1, t2, d1x, d1y, d2x, d2y


@njit(cache=True, inline="always")
def _velocity(c1, c2, wx, wy, a0, x, y, t):
    """(vx, vy, |Psi|^2); velocities are garbage when psi2 is 0 or tiny."""
    t1, t2, d1x, d1y, d2x, d2y = _psi_terms(c1, c2, wx, wy, a0, x, y, t)
    psi = t1 + t2
    psi2 = psi.real * psi.real + psi.imag * psi.imag
    if psi2 <= 0.0:
        return 0.0, 0.0, psi2
    px = d1x * t1 + d2x * t2
    py = d1y * t1 + d2y * t2
    vx = (px.imag * psi.real - px.real * psi.imag) / psi2
    vy = (py.imag * psi.real - py.real * psi.imag) / psi2
    return vx, vy, psi2


@njit(cache=True, inline="always")
def _velocity_jac(c1, c2, wx, wy, a0, x, y, t):
    """Velocity plus its symmetric spatial Jacobian (j00, j01, j11)."""
    t1, t2, d1x, d1y, d2x, d2y = _psi_terms(c1, c2, wx, wy, a0, x, y, t)
    psi = t1 + t2
    psi2 = psi.real * psi.real + psi.imag * psi.imag
    if psi2 <= 0.0:
        return 0.0, 0.0, 0.0, 0.0, 0.0, psi2
    inv = 1.0 / psi
    gx = (d1x * t1 + d2x * t2) * inv
    gy = (d1y * t1 + d2y * t2) * inv
    hxx = ((d1x * d1x - wx) * t1 + (d2x * d2x - wx) * t2) * inv
    hyy = ((d1y * d1y - wy) * t1 + (d2y * d2y - wy) * t2) * inv
    hxy = (d1x * d1y * t1 + d2x * d2y * t2) * inv
    j00 = (hxx - gx * gx).imag
    j01 = (hxy - gx * gy).imag
    j11 = (hyy - gy * gy).imag
    return gx.imag, gy.imag, j00, j01, j11, psi2


@njit(cache=True, inline="always")
def _node_line(c1, c2, wx, wy, a0, t):
    """Node-line anchor point, direction (one lattice step), and spacing.

    Valid only when c1*c2 != 0 and |sin((wx - wy) t)| is not tiny; the
    caller checks both.  The direction vector is the displacement from
    node k to node k+2, so its length IS the lattice spacing.
    """
    sn = math.sin((wx - wy) * t)
    ell = math.log(abs(c1 / c2))
    fx = math.sqrt(2.0) / (4.0 * math.sqrt(wx) * a0 * sn)
    fy = math.sqrt(2.0) / (4.0 * math.sqrt(wy) * a0 * sn)
    p0x = fx * math.sin(wy * t) * ell
    p0y = fy * math.sin(wx * t) * ell
    dx = fx * 2.0 * np.pi * math.cos(wy * t)
    dy = fy * 2.0 * np.pi * math.cos(wx * t)
    return p0x, p0y, dx, dy, math.hypot(dx, dy)


@njit(cache=True)
def _integrate_times(c1, c2, wx, wy, a0, x0, y0, t0, ts,
                     rtol, atol, h0, hmin, hmax, floor, use_guard, out_xy):
    """Propagate one trajectory, emitting dense-output states at `ts`.

    `ts` must move monotonically away from t0 (either direction);
    ts[0] == t0 is allowed.  Fills out_xy[i] for each emitted target.
    Returns (flag, n_emitted, n_accepted, n_rejected, min_psi2).
    """
    n_targets = ts.shape[0]
    t_end = ts[n_targets - 1]
    direction = 1.0 if t_end >= t0 else -1.0
    guard = use_guard and (c1 * c2 != 0.0)
    if c1 * c2 == 0.0:
        # a single product term has no nodes: low density out in the
        # tail is not a singularity, so only guard against underflow
        floor = 0.0

    x = x0
    y = y0
    t = t0
    vx, vy, p2 = _velocity(c1, c2, wx, wy, a0, x, y, t)
    minp2 = p2
    if p2 <= floor:
        return FLAG_ABORTED_NEAR_NODE, 0, 0, 0, minp2

    n_emit = 0
    if ts[0] == t0:
        out_xy[0, 0] = x
        out_xy[0, 1] = y
        n_emit = 1

    naccept = 0
    nreject = 0
    h = direction * min(abs(h0), hmax)
    k1x, k1y = vx, vy

    while n_emit < n_targets:
        if direction * (t + h - t_end) > 0.0:
            h = t_end - t
        if guard:
            sn = math.sin((wx - wy) * t)
            if abs(sn) >= NODES_AT_INFINITY_TOL:
                p0x, p0y, dlx, dly, sp = _node_line(c1, c2, wx, wy, a0, t)
                dist = abs((x - p0x) * dly - (y - p0y) * dlx) / sp
                if dist < sp:
                    vmag = math.hypot(k1x, k1y)
                    if vmag * abs(h) > 0.25 * sp:
                        h = direction * 0.25 * sp / vmag
        if abs(h) < hmin:
            h = direction * hmin

        # stage slots (assigned conditionally below; numba wants them bound)
        k3x = k3y = k4x = k4y = k5x = k5y = 0.0
        k6x = k6y = k7x = k7y = 0.0
        xn = x
        yn = y

        # stages (k1 is FSAL from the previous step)
        ok = True
        x2 = x + h * _A21 * k1x
        y2 = y + h * _A21 * k1y
        k2x, k2y, p2 = _velocity(c1, c2, wx, wy, a0, x2, y2, t + _C2 * h)
        if p2 < minp2:
            minp2 = p2
        if p2 <= floor:
            ok = False
        if ok:
            x3 = x + h * (_A31 * k1x + _A32 * k2x)
            y3 = y + h * (_A31 * k1y + _A32 * k2y)
            k3x, k3y, p2 = _velocity(c1, c2, wx, wy, a0, x3, y3, t + _C3 * h)
            if p2 < minp2:
                minp2 = p2
            if p2 <= floor:
                ok = False
        if ok:
            x4 = x + h * (_A41 * k1x + _A42 * k2x + _A43 * k3x)
            y4 = y + h * (_A41 * k1y + _A42 * k2y + _A43 * k3y)
            k4x, k4y, p2 = _velocity(c1, c2, wx, wy, a0, x4, y4, t + _C4 * h)
            if p2 < minp2:
                minp2 = p2
            if p2 <= floor:
                ok = False
        if ok:
            x5 = x + h * (_A51 * k1x + _A52 * k2x + _A53 * k3x + _A54 * k4x)
            y5 = y + h * (_A51 * k1y + _A52 * k2y + _A53 * k3y + _A54 * k4y)
            k5x, k5y, p2 = _velocity(c1, c2, wx, wy, a0, x5, y5, t + _C5 * h)
            if p2 < minp2:
                minp2 = p2
            if p2 <= floor:
                ok = False
        if ok:
            x6 = x + h * (_A61 * k1x + _A62 * k2x + _A63 * k3x + _A64 * k4x
                          + _A65 * k5x)
            y6 = y + h * (_A61 * k1y + _A62 * k2y + _A63 * k3y + _A64 * k4y
                          + _A65 * k5y)
            k6x, k6y, p2 = _velocity(c1, c2, wx, wy, a0, x6, y6, t + h)
            if p2 < minp2:
                minp2 = p2
            if p2 <= floor:
                ok = False
        if ok:
            xn = x + h * (_B1 * k1x + _B3 * k3x + _B4 * k4x + _B5 * k5x
                          + _B6 * k6x)
            yn = y + h * (_B1 * k1y + _B3 * k3y + _B4 * k4y + _B5 * k5y
                          + _B6 * k6y)
            k7x, k7y, p2 = _velocity(c1, c2, wx, wy, a0, xn, yn, t + h)
            if p2 < minp2:
                minp2 = p2
            if p2 <= floor:
                ok = False

        if not ok:
            h *= 0.5
            nreject += 1
            if abs(h) < hmin:
                return (FLAG_ABORTED_NEAR_NODE, n_emit, naccept, nreject,
                        minp2)
            continue

        ex = h * (_E1 * k1x + _E3 * k3x + _E4 * k4x + _E5 * k5x + _E6 * k6x
                  + _E7 * k7x)
        ey = h * (_E1 * k1y + _E3 * k3y + _E4 * k4y + _E5 * k5y + _E6 * k6y
                  + _E7 * k7y)
        swx = atol + rtol * max(abs(x), abs(xn))
        swy = atol + rtol * max(abs(y), abs(yn))
        err = math.sqrt(0.5 * ((ex / swx) ** 2 + (ey / swy) ** 2))

        if err <= 1.0:
            # dense output over (t, t+h]
            dxs = xn - x
            dys = yn - y
            c3x = h * k1x - dxs
            c3y = h * k1y - dys
            c4x = dxs - h * k7x - c3x
            c4y = dys - h * k7y - c3y
            c5x = h * (_D1 * k1x + _D3 * k3x + _D4 * k4x + _D5 * k5x
                       + _D6 * k6x + _D7 * k7x)
            c5y = h * (_D1 * k1y + _D3 * k3y + _D4 * k4y + _D5 * k5y
                       + _D6 * k6y + _D7 * k7y)
            while n_emit < n_targets:
                tgt = ts[n_emit]
                if direction * (tgt - (t + h)) > 0.0:
                    break
                th = (tgt - t) / h
                th1 = 1.0 - th
                xs = x + th * (dxs + th1 * (c3x + th * (c4x + th1 * c5x)))
                ys = y + th * (dys + th1 * (c3y + th * (c4y + th1 * c5y)))
                out_xy[n_emit, 0] = xs
                out_xy[n_emit, 1] = ys
                n_emit += 1
                if abs(xs) > HARD_BOUND or abs(ys) > HARD_BOUND:
                    return (FLAG_LEFT_WINDOW, n_emit, naccept, nreject,
                            minp2)
            t = t + h
            x = xn
            y = yn
            k1x = k7x
            k1y = k7y
            naccept += 1
            fac = 5.0 if err == 0.0 else min(5.0, max(0.2, 0.9 * err ** -0.2))
            h = direction * min(abs(h) * fac, hmax)
        else:
            nreject += 1
            h = h * max(0.2, 0.9 * err ** -0.2)
            if abs(h) < hmin:
                return (FLAG_ABORTED_NEAR_NODE, n_emit, naccept, nreject,
                        minp2)

    return FLAG_COMPLETED, n_emit, naccept, nreject, minp2


@njit(cache=True)
def _integrate_deviation_times(c1, c2, wx, wy, a0, x0, y0, t0, qx0, qy0, ts,
                               rtol, atol, h0, hmin, hmax, floor, use_guard,
                               renorm_hi, renorm_lo, out_xy, out_chi):
    """Co-integrate (x, y) with a deviation vector q, q' = J(x, y, t) q.

    The deviation magnitude is folded back to 1 whenever it leaves
    [renorm_lo, renorm_hi], accumulating log|q|; out_chi[i] receives
    (accumulated log stretch) / (t - t0) at each emitted target (0 at
    t = t0).  The reported stretch is relative to |q(t0)|, so scaling
    the initial deviation leaves the history unchanged.
    """
    n_targets = ts.shape[0]
    t_end = ts[n_targets - 1]
    direction = 1.0 if t_end >= t0 else -1.0
    guard = use_guard and (c1 * c2 != 0.0)
    if c1 * c2 == 0.0:
        # same convention as _integrate_times: nodeless states only
        # abort on a true density underflow
        floor = 0.0

    x = x0
    y = y0
    t = t0
    qn0 = math.hypot(qx0, qy0)
    qx = qx0 / qn0
    qy = qy0 / qn0
    logacc = 0.0

    vx, vy, j00, j01, j11, p2 = _velocity_jac(c1, c2, wx, wy, a0, x, y, t)
    minp2 = p2
    if p2 <= floor:
        return FLAG_ABORTED_NEAR_NODE, 0, 0, 0, minp2
    k1x, k1y = vx, vy
    k1qx = j00 * qx + j01 * qy
    k1qy = j01 * qx + j11 * qy

    n_emit = 0
    if ts[0] == t0:
        out_xy[0, 0] = x
        out_xy[0, 1] = y
        out_chi[0] = 0.0
        n_emit = 1

    naccept = 0
    nreject = 0
    h = direction * min(abs(h0), hmax)

    while n_emit < n_targets:
        if direction * (t + h - t_end) > 0.0:
            h = t_end - t
        if guard:
            sn = math.sin((wx - wy) * t)
            if abs(sn) >= NODES_AT_INFINITY_TOL:
                p0x, p0y, dlx, dly, sp = _node_line(c1, c2, wx, wy, a0, t)
                dist = abs((x - p0x) * dly - (y - p0y) * dlx) / sp
                if dist < sp:
                    vmag = math.hypot(k1x, k1y)
                    if vmag * abs(h) > 0.25 * sp:
                        h = direction * 0.25 * sp / vmag
        if abs(h) < hmin:
            h = direction * hmin

        k3x = k3y = k4x = k4y = k5x = k5y = 0.0
        k6x = k6y = k7x = k7y = 0.0
        k3qx = k3qy = k4qx = k4qy = k5qx = k5qy = 0.0
        k6qx = k6qy = k7qx = k7qy = 0.0
        xn = x
        yn = y
        qxn = qx
        qyn = qy

        ok = True
        x2 = x + h * _A21 * k1x
        y2 = y + h * _A21 * k1y
        qx2 = qx + h * _A21 * k1qx
        qy2 = qy + h * _A21 * k1qy
        vx, vy, j00, j01, j11, p2 = _velocity_jac(c1, c2, wx, wy, a0, x2, y2,
                                                  t + _C2 * h)
        if p2 < minp2:
            minp2 = p2
        if p2 <= floor:
            ok = False
        k2x, k2y = vx, vy
        k2qx = j00 * qx2 + j01 * qy2
        k2qy = j01 * qx2 + j11 * qy2
        if ok:
            x3 = x + h * (_A31 * k1x + _A32 * k2x)
            y3 = y + h * (_A31 * k1y + _A32 * k2y)
            qx3 = qx + h * (_A31 * k1qx + _A32 * k2qx)
            qy3 = qy + h * (_A31 * k1qy + _A32 * k2qy)
            vx, vy, j00, j01, j11, p2 = _velocity_jac(c1, c2, wx, wy, a0,
                                                      x3, y3, t + _C3 * h)
            if p2 < minp2:
                minp2 = p2
            if p2 <= floor:
                ok = False
            k3x, k3y = vx, vy
            k3qx = j00 * qx3 + j01 * qy3
            k3qy = j01 * qx3 + j11 * qy3
        if ok:
            x4 = x + h * (_A41 * k1x + _A42 * k2x + _A43 * k3x)
            y4 = y + h * (_A41 * k1y + _A42 * k2y + _A43 * k3y)
            qx4 = qx + h * (_A41 * k1qx + _A42 * k2qx + _A43 * k3qx)
            qy4 = qy + h * (_A41 * k1qy + _A42 * k2qy + _A43 * k3qy)
            vx, vy, j00, j01, j11, p2 = _velocity_jac(c1, c2, wx, wy, a0,
                                                      x4, y4, t + _C4 * h)
            if p2 < minp2:
                minp2 = p2
            if p2 <= floor:
                ok = False
            k4x, k4y = vx, vy
            k4qx = j00 * qx4 + j01 * qy4
            k4qy = j01 * qx4 + j11 * qy4
        if ok:
            x5 = x + h * (_A51 * k1x + _A52 * k2x + _A53 * k3x + _A54 * k4x)
            y5 = y + h * (_A51 * k1y + _A52 * k2y + _A53 * k3y + _A54 * k4y)
            qx5 = qx + h * (_A51 * k1qx + _A52 * k2qx + _A53 * k3qx
                            + _A54 * k4qx)
            qy5 = qy + h * (_A51 * k1qy + _A52 * k2qy + _A53 * k3qy
                            + _A54 * k4qy)
            vx, vy, j00, j01, j11, p2 = _velocity_jac(c1, c2, wx, wy, a0,
                                                      x5, y5, t + _C5 * h)
            if p2 < minp2:
                minp2 = p2
            if p2 <= floor:
                ok = False
            k5x, k5y = vx, vy
            k5qx = j00 * qx5 + j01 * qy5
            k5qy = j01 * qx5 + j11 * qy5
        if ok:
            x6 = x + h * (_A61 * k1x + _A62 * k2x + _A63 * k3x + _A64 * k4x
                          + _A65 * k5x)
            y6 = y + h * (_A61 * k1y + _A62 * k2y + _A63 * k3y + _A64 * k4y
                          + _A65 * k5y)
            qx6 = qx + h * (_A61 * k1qx + _A62 * k2qx + _A63 * k3qx
                            + _A64 * k4qx + _A65 * k5qx)
            qy6 = qy + h * (_A61 * k1qy + _A62 * k2qy + _A63 * k3qy
                            + _A64 * k4qy + _A65 * k5qy)
            vx, vy, j00, j01, j11, p2 = _velocity_jac(c1, c2, wx, wy, a0,
                                                      x6, y6, t + h)
            if p2 < minp2:
                minp2 = p2
            if p2 <= floor:
                ok = False
            k6x, k6y = vx, vy
            k6qx = j00 * qx6 + j01 * qy6
            k6qy = j01 * qx6 + j11 * qy6
        if ok:
            xn = x + h * (_B1 * k1x + _B3 * k3x + _B4 * k4x + _B5 * k5x
                          + _B6 * k6x)
            yn = y + h * (_B1 * k1y + _B3 * k3y + _B4 * k4y + _B5 * k5y
                          + _B6 * k6y)
            qxn = qx + h * (_B1 * k1qx + _B3 * k3qx + _B4 * k4qx + _B5 * k5qx
                            + _B6 * k6qx)
            qyn = qy + h * (_B1 * k1qy + _B3 * k3qy + _B4 * k4qy + _B5 * k5qy
                            + _B6 * k6qy)
            vx, vy, j00, j01, j11, p2 = _velocity_jac(c1, c2, wx, wy, a0,
                                                      xn, yn, t + h)
            if p2 < minp2:
                minp2 = p2
            if p2 <= floor:
                ok = False
            k7x, k7y = vx, vy
            k7qx = j00 * qxn + j01 * qyn
            k7qy = j01 * qxn + j11 * qyn

        if not ok:
            h *= 0.5
            nreject += 1
            if abs(h) < hmin:
                return (FLAG_ABORTED_NEAR_NODE, n_emit, naccept, nreject,
                        minp2)
            continue

        ex = h * (_E1 * k1x + _E3 * k3x + _E4 * k4x + _E5 * k5x + _E6 * k6x
                  + _E7 * k7x)
        ey = h * (_E1 * k1y + _E3 * k3y + _E4 * k4y + _E5 * k5y + _E6 * k6y
                  + _E7 * k7y)
        eqx = h * (_E1 * k1qx + _E3 * k3qx + _E4 * k4qx + _E5 * k5qx
                   + _E6 * k6qx + _E7 * k7qx)
        eqy = h * (_E1 * k1qy + _E3 * k3qy + _E4 * k4qy + _E5 * k5qy
                   + _E6 * k6qy + _E7 * k7qy)
        swx = atol + rtol * max(abs(x), abs(xn))
        swy = atol + rtol * max(abs(y), abs(yn))
        swqx = atol + rtol * max(abs(qx), abs(qxn))
        swqy = atol + rtol * max(abs(qy), abs(qyn))
        err = math.sqrt(0.25 * ((ex / swx) ** 2 + (ey / swy) ** 2
                                + (eqx / swqx) ** 2 + (eqy / swqy) ** 2))

        if err <= 1.0:
            dxs = xn - x
            dys = yn - y
            dqxs = qxn - qx
            dqys = qyn - qy
            c3x = h * k1x - dxs
            c3y = h * k1y - dys
            c3qx = h * k1qx - dqxs
            c3qy = h * k1qy - dqys
            c4x = dxs - h * k7x - c3x
            c4y = dys - h * k7y - c3y
            c4qx = dqxs - h * k7qx - c3qx
            c4qy = dqys - h * k7qy - c3qy
            c5x = h * (_D1 * k1x + _D3 * k3x + _D4 * k4x + _D5 * k5x
                       + _D6 * k6x + _D7 * k7x)
            c5y = h * (_D1 * k1y + _D3 * k3y + _D4 * k4y + _D5 * k5y
                       + _D6 * k6y + _D7 * k7y)
            c5qx = h * (_D1 * k1qx + _D3 * k3qx + _D4 * k4qx + _D5 * k5qx
                        + _D6 * k6qx + _D7 * k7qx)
            c5qy = h * (_D1 * k1qy + _D3 * k3qy + _D4 * k4qy + _D5 * k5qy
                        + _D6 * k6qy + _D7 * k7qy)
            while n_emit < n_targets:
                tgt = ts[n_emit]
                if direction * (tgt - (t + h)) > 0.0:
                    break
                th = (tgt - t) / h
                th1 = 1.0 - th
                xs = x + th * (dxs + th1 * (c3x + th * (c4x + th1 * c5x)))
                ys = y + th * (dys + th1 * (c3y + th * (c4y + th1 * c5y)))
                qxs = qx + th * (dqxs + th1 * (c3qx + th * (c4qx
                                                            + th1 * c5qx)))
                qys = qy + th * (dqys + th1 * (c3qy + th * (c4qy
                                                            + th1 * c5qy)))
                out_xy[n_emit, 0] = xs
                out_xy[n_emit, 1] = ys
                dt_run = tgt - t0
                if dt_run != 0.0:
                    out_chi[n_emit] = (logacc
                                       + math.log(math.hypot(qxs, qys))) \
                        / dt_run
                else:
                    out_chi[n_emit] = 0.0
                n_emit += 1
                if abs(xs) > HARD_BOUND or abs(ys) > HARD_BOUND:
                    return (FLAG_LEFT_WINDOW, n_emit, naccept, nreject,
                            minp2)
            t = t + h
            x = xn
            y = yn
            qx = qxn
            qy = qyn
            qn = math.hypot(qx, qy)
            if qn > renorm_hi or qn < renorm_lo:
                logacc += math.log(qn)
                qx /= qn
                qy /= qn
                k7qx /= qn
                k7qy /= qn
            k1x = k7x
            k1y = k7y
            k1qx = k7qx
            k1qy = k7qy
            naccept += 1
            fac = 5.0 if err == 0.0 else min(5.0, max(0.2, 0.9 * err ** -0.2))
            h = direction * min(abs(h) * fac, hmax)
        else:
            nreject += 1
            h = h * max(0.2, 0.9 * err ** -0.2)
            if abs(h) < hmin:
                return (FLAG_ABORTED_NEAR_NODE, n_emit, naccept, nreject,
                        minp2)

    return FLAG_COMPLETED, n_emit, naccept, nreject, minp2


@njit(cache=True)
def _escape_scan(c1, c2, wx, wy, a0, x0, y0, t0, n_samples, sample_dt,
                 box_xlo, box_xhi, box_ylo, box_yhi,
                 rtol, atol, h0, hmin, hmax, floor, use_guard):
    """Integrate and watch for the first sampled point outside the box.

    Returns (flag, escaped, t_escape).  Stops at the first escape, so
    strongly chaotic trajectories cost only a fraction of the horizon.
    """
    chunk = 256
    buf = np.empty((chunk, 2))
    ts = np.empty(chunk)
    n_done = 0  # samples fully checked (t0 sample included below)
    x = x0
    y = y0
    t = t0
    if x < box_xlo or x > box_xhi or y < box_ylo or y > box_yhi:
        return FLAG_COMPLETED, True, t0
    n_done = 1
    while n_done <= n_samples:
        m = min(chunk, n_samples - n_done + 1)
        for i in range(m):
            ts[i] = t0 + (n_done + i) * sample_dt
        flag, n_emit, naccept, nreject, minp2 = _integrate_times(
            c1, c2, wx, wy, a0, x, y, t, ts[:m],
            rtol, atol, h0, hmin, hmax, floor, use_guard, buf[:m])
        for i in range(n_emit):
            if (buf[i, 0] < box_xlo or buf[i, 0] > box_xhi
                    or buf[i, 1] < box_ylo or buf[i, 1] > box_yhi):
                return flag, True, ts[i]
        if flag != FLAG_COMPLETED:
            return flag, False, -1.0
        n_done += m
        x = buf[m - 1, 0]
        y = buf[m - 1, 1]
        t = ts[m - 1]
    return FLAG_COMPLETED, False, -1.0


@njit(cache=True, parallel=True)
def _batch_escape(c1, c2, wx, wy, a0, starts, n_samples, sample_dt, boxes,
                  rtol, atol, h0, hmin, hmax, floor, use_guard,
                  escaped_out, t_escape_out, flags_out):
    for i in prange(starts.shape[0]):
        flag, esc, t_esc = _escape_scan(
            c1, c2, wx, wy, a0, starts[i, 0], starts[i, 1], 0.0,
            n_samples, sample_dt,
            boxes[i, 0], boxes[i, 1], boxes[i, 2], boxes[i, 3],
            rtol, atol, h0, hmin, hmax, floor, use_guard)
        escaped_out[i] = esc
        t_escape_out[i] = t_esc
        flags_out[i] = flag


@njit(cache=True, parallel=True)
def _batch_deviation(c1, c2, wx, wy, a0, starts, ts, rtol, atol, h0, hmin,
                     hmax, floor, use_guard, renorm_hi, renorm_lo,
                     chi_out, flags_out):
    for i in prange(starts.shape[0]):
        buf = np.empty((ts.shape[0], 2))
        flag, n_emit, naccept, nreject, minp2 = _integrate_deviation_times(
            c1, c2, wx, wy, a0, starts[i, 0], starts[i, 1], 0.0, 1.0, 0.0,
            ts, rtol, atol, h0, hmin, hmax, floor, use_guard,
            renorm_hi, renorm_lo, buf, chi_out[i])
        for j in range(n_emit, ts.shape[0]):
            chi_out[i, j] = np.nan
        flags_out[i] = flag


@njit(cache=True, parallel=True)
def _ensemble_bin(c1, c2, wx, wy, a0, starts, ts, seg_bounds,
                  rtol, atol, h0, hmin, hmax, floor, use_guard,
                  n_batches, half, ngrid, grids_out, overflow_out,
                  flags_out, accept_out, reject_out, minp2_out):
    """Integrate an ensemble and bin samples into per-batch count grids.

    grids_out has shape (n_batches, n_segments, ngrid, ngrid); sample
    index n belongs to segment j when n <= seg_bounds[j] (first match).
    The trajectory->batch map is a fixed block partition, so the merged
    counts are identical for any number of threads.  Trajectories that
    do not complete are excluded from the counts entirely.
    """
    ntraj = starts.shape[0]
    nseg = seg_bounds.shape[0]
    per = (ntraj + n_batches - 1) // n_batches
    cell = ngrid / (2.0 * half)
    for b in prange(n_batches):
        lo = b * per
        hi = min(lo + per, ntraj)
        if lo >= hi:
            continue
        buf = np.empty((ts.shape[0], 2))
        for i in range(lo, hi):
            flag, n_emit, naccept, nreject, minp2 = _integrate_times(
                c1, c2, wx, wy, a0, starts[i, 0], starts[i, 1], 0.0, ts,
                rtol, atol, h0, hmin, hmax, floor, use_guard, buf)
            flags_out[i] = flag
            accept_out[i] = naccept
            reject_out[i] = nreject
            minp2_out[i] = minp2
            if flag != FLAG_COMPLETED:
                continue
            seg = 0
            for n in range(n_emit):
                while n > seg_bounds[seg]:
                    seg += 1
                gx = int((buf[n, 0] + half) * cell)
                gy = int((buf[n, 1] + half) * cell)
                if (0 <= gx < ngrid and 0 <= gy < ngrid
                        and buf[n, 0] >= -half and buf[n, 1] >= -half):
                    grids_out[b, seg, gx, gy] += 1
                else:
                    overflow_out[b, seg] += 1
    return


@njit(cache=True, parallel=True)
def _ensemble_snapshots(c1, c2, wx, wy, a0, starts, ts, rtol, atol, h0,
                        hmin, hmax, floor, use_guard, out_xy, flags_out):
    """Positions of every trajectory at the given snapshot times."""
    for i in prange(starts.shape[0]):
        flag, n_emit, naccept, nreject, minp2 = _integrate_times(
            c1, c2, wx, wy, a0, starts[i, 0], starts[i, 1], 0.0, ts,
            rtol, atol, h0, hmin, hmax, floor, use_guard, out_xy[i])
        for j in range(n_emit, ts.shape[0]):
            out_xy[i, j, 0] = np.nan
            out_xy[i, j, 1] = np.nan
        flags_out[i] = flag


@njit(cache=True)
def _bin_points(buf, n_points, half, ngrid, grid):
    """Bin n_points rows of buf into grid; returns out-of-window count."""
    cell = ngrid / (2.0 * half)
    overflow = 0
    for n in range(n_points):
        gx = int((buf[n, 0] + half) * cell)
        gy = int((buf[n, 1] + half) * cell)
        if (0 <= gx < ngrid and 0 <= gy < ngrid
                and buf[n, 0] >= -half and buf[n, 1] >= -half):
            grid[gx, gy] += 1
        else:
            overflow += 1
    return overflow
