"""Adaptive trajectory integrator: accuracy, reversibility, determinism.

The product state (c2=0) has an exact solution: each blob center rides a
rigid cosine translation, and every trajectory is carried along with it.
That closed form is the primary oracle here; entangled runs are checked
by self-consistency (tolerance sweeps, time reversal, grid invariance).
"""

from __future__ import annotations

import math

import numpy as np
import pytest

from bohmqubits import (
    IntegratorConfig,
    WaveParams,
    integrate,
    integrate_with_deviation,
    snapshot_positions,
    velocity,
)
from bohmqubits.errors import ConfigError

SQRT2 = math.sqrt(2.0)


def rigid_translation(p: WaveParams, x0: float, y0: float, t):
    """Closed-form product-state trajectory through (x0, y0) at t=0."""
    ax = SQRT2 / math.sqrt(p.omega_x) * p.a0
    ay = SQRT2 / math.sqrt(p.omega_y) * p.a0
    x = x0 + ax * (np.cos(p.omega_x * np.asarray(t)) - 1.0)
    y = y0 - ay * (np.cos(p.omega_y * np.asarray(t)) - 1.0)
    return x, y


class TestProductState:
    def test_matches_rigid_translation(self):
        p = WaveParams.from_c2(0.0)
        cfg = IntegratorConfig(t_final=10.0, sample_dt=0.05)
        rec = integrate(p, (3.0, -2.2), cfg)
        assert rec.completed
        x_ref, y_ref = rigid_translation(p, 3.0, -2.2, rec.times)
        err = np.hypot(rec.positions[:, 0] - x_ref,
                       rec.positions[:, 1] - y_ref)
        assert err.max() < 1e-7

    def test_deviation_vector_stays_put(self):
        # product-state velocity field is a pure translation, so the
        # flow Jacobian vanishes and chi collapses to round-off
        p = WaveParams.from_c2(0.0)
        cfg = IntegratorConfig(t_final=100.0, sample_dt=0.5, dt_max=0.5)
        rec = integrate_with_deviation(p, (3.0, -2.2), cfg)
        assert rec.completed
        assert abs(rec.chi[-1]) < 1e-12


class TestAccuracy:
    def test_tolerance_sweep_converges(self):
        p = WaveParams.from_c2(0.5)
        start = (1.8, -2.4)
        tight = IntegratorConfig(t_final=20.0, sample_dt=0.1,
                                 rel_tol=1e-12, abs_tol=1e-13)
        loose = IntegratorConfig(t_final=20.0, sample_dt=0.1,
                                 rel_tol=1e-8, abs_tol=1e-10)
        a = integrate(p, start, tight)
        b = integrate(p, start, loose)
        assert a.completed and b.completed
        gap = np.hypot(*(a.positions - b.positions).T).max()
        assert gap < 1e-5

    def test_time_reversal_closure(self):
        p = WaveParams.from_c2(0.5)
        fwd = integrate(p, (1.8, -2.4),
                        IntegratorConfig(t_final=8.0, sample_dt=0.05))
        assert fwd.completed
        xf, yf = fwd.final_position
        back = integrate(p, (xf, yf, 8.0),
                         IntegratorConfig(t_final=0.0, sample_dt=0.05))
        assert back.completed
        xb, yb = back.final_position
        assert math.hypot(xb - 1.8, yb + 2.4) < 1e-5

    def test_sample_grid_invariance(self):
        # halving sample_dt must not disturb the positions at shared times
        p = WaveParams.from_c2(0.2)
        coarse = integrate(p, (2.5, -2.0),
                           IntegratorConfig(t_final=10.0, sample_dt=0.1))
        fine = integrate(p, (2.5, -2.0),
                         IntegratorConfig(t_final=10.0, sample_dt=0.05))
        gap = np.hypot(*(coarse.positions - fine.positions[::2]).T).max()
        assert gap < 1e-6

    def test_velocity_kernel_matches_reference(self):
        from bohmqubits import _kernels
        from bohmqubits import density

        p = WaveParams.from_c2(0.5)
        rng = np.random.default_rng(3)
        pts = rng.uniform(-5, 5, size=(400, 2))
        ts = rng.uniform(0.0, 10.0, size=400)
        keep = density(p, pts[:, 0], pts[:, 1], ts) > 1e-12
        assert keep.sum() > 100
        for (x, y), t in zip(pts[keep], ts[keep]):
            vx_ref, vy_ref = velocity(p, x, y, t)
            vx, vy, psi2 = _kernels._velocity(
                p.c1, p.c2, p.omega_x, p.omega_y, p.a0, x, y, t)
            scale = abs(vx_ref) + abs(vy_ref) + 1.0
            assert abs(vx - vx_ref) / scale < 1e-11
            assert abs(vy - vy_ref) / scale < 1e-11


class TestDeterminism:
    def test_bitwise_repeatable(self):
        p = WaveParams.from_c2(0.5)
        cfg = IntegratorConfig(t_final=30.0, sample_dt=0.05)
        a = integrate(p, (1.8, -2.4), cfg)
        b = integrate(p, (1.8, -2.4), cfg)
        assert np.array_equal(a.positions, b.positions)
        assert a.stats == b.stats

    def test_deviation_scale_invariance(self):
        # the deviation vector is normalized on entry, so any positive
        # rescaling of the seed direction is bit-identical
        p = WaveParams.from_c2(0.5)
        cfg = IntegratorConfig(t_final=50.0, sample_dt=0.5, dt_max=0.5)
        a = integrate_with_deviation(p, (2.0, -2.0), cfg,
                                     deviation0=(1.0, 0.3))
        b = integrate_with_deviation(p, (2.0, -2.0), cfg,
                                     deviation0=(250.0, 75.0))
        assert np.array_equal(a.chi, b.chi)
        assert np.array_equal(a.positions, b.positions)


class TestNodeHandling:
    def test_start_on_dead_zone_aborts_immediately(self):
        # (9, 9) carries no measurable density at t=0
        p = WaveParams.from_c2(0.5)
        rec = integrate(p, (9.0, 9.0),
                        IntegratorConfig(t_final=1.0, sample_dt=0.05))
        assert rec.flag == "aborted_near_node"
        assert not rec.completed
        assert len(rec.times) < 21

    def test_guard_preserves_smooth_runs(self):
        p = WaveParams.from_c2(0.5)
        on = IntegratorConfig(t_final=10.0, sample_dt=0.05,
                              node_guard=True)
        off = IntegratorConfig(t_final=10.0, sample_dt=0.05,
                               node_guard=False)
        a = integrate(p, (2.2, -1.6), on)
        b = integrate(p, (2.2, -1.6), off)
        assert a.completed and b.completed
        gap = np.hypot(*(a.positions - b.positions).T).max()
        assert gap < 1e-6

    def test_collision_epoch_crossing_completes(self):
        # the first blob collision squeezes the node lattice through the
        # support; a generic trajectory must cross it without aborting
        p = WaveParams.from_c2(0.5)
        rec = integrate(p, (3.0, -2.5),
                        IntegratorConfig(t_final=6.0, sample_dt=0.05))
        assert rec.completed
        assert rec.min_density > 0.0

    def test_stats_accounting(self):
        p = WaveParams.from_c2(0.2)
        rec = integrate(p, (2.0, -2.0),
                        IntegratorConfig(t_final=10.0, sample_dt=0.05))
        assert rec.n_accepted > 100
        assert rec.n_rejected >= 0
        assert rec.stats["flag"] == "completed"
        assert len(rec.times) == 201
        assert rec.final_time == pytest.approx(10.0)


class TestSnapshots:
    def test_matches_single_runs(self):
        p = WaveParams.from_c2(0.5)
        starts = np.array([[2.0, -2.0], [3.2, -2.8], [1.5, -3.0]])
        times = [2.0, 5.0]
        pos, flags = snapshot_positions(p, starts, times)
        assert pos.shape == (3, 2, 2)
        assert flags == ["completed"] * 3
        cfg = IntegratorConfig(t_final=5.0, sample_dt=0.05)
        for i, (x0, y0) in enumerate(starts):
            rec = integrate(p, (float(x0), float(y0)), cfg)
            for j, t in enumerate(times):
                k = int(round(t / 0.05))
                ref = rec.positions[k]
                assert math.hypot(pos[i, j, 0] - ref[0],
                                  pos[i, j, 1] - ref[1]) < 1e-9

    def test_rejects_unsorted_times(self):
        p = WaveParams.from_c2(0.5)
        with pytest.raises(ConfigError):
            snapshot_positions(p, np.zeros((1, 2)), [5.0, 2.0])


class TestConfigValidation:
    def test_rejects_incommensurate_grid(self):
        with pytest.raises(ConfigError):
            IntegratorConfig(t_final=1.03, sample_dt=0.05).time_grid(0.0)

    def test_rejects_bad_tolerances(self):
        with pytest.raises(ConfigError):
            IntegratorConfig(rel_tol=-1e-10)
        with pytest.raises(ConfigError):
            IntegratorConfig(abs_tol=0.0)

    def test_rejects_bad_steps(self):
        with pytest.raises(ConfigError):
            IntegratorConfig(dt_min=1.0, dt_max=0.1)
        with pytest.raises(ConfigError):
            IntegratorConfig(sample_dt=0.0)
