"""Pattern grids, Frobenius distances, dumps, and rendering.

Distance properties are brute-forced on tiny matrices; the grid
machinery is checked by exact count conservation and bit-level
reproducibility, which is what the experiment manifests rely on.
"""

from __future__ import annotations

import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bohmqubits import (
    IntegratorConfig,
    PatternGrid,
    WaveParams,
    accumulate,
    distance_curve,
    dump_pattern,
    ensemble_patterns,
    frobenius_distance,
    integrate,
    load_pattern,
    merge,
    render,
    single_pattern,
)
from bohmqubits.errors import GeometryMismatch, SampleDtMismatch
from bohmqubits.sampling import sample_born

counts_3x3 = st.lists(
    st.integers(min_value=0, max_value=9), min_size=9, max_size=9
).map(lambda v: np.array(v, dtype=np.int64).reshape(3, 3))


def tiny_grid(counts: np.ndarray) -> PatternGrid:
    g = PatternGrid.empty(0.05)
    g.counts = counts
    return g


class TestDistanceProperties:
    def test_identical_patterns_give_zero(self):
        g = tiny_grid(np.arange(9, dtype=np.int64).reshape(3, 3))
        assert frobenius_distance(g, g).value == 0.0

    def test_orthogonal_unit_cells(self):
        a = np.zeros((3, 3), dtype=np.int64)
        b = np.zeros((3, 3), dtype=np.int64)
        a[0, 0] = 7
        b[2, 2] = 3
        d = frobenius_distance(tiny_grid(a), tiny_grid(b))
        assert abs(d.value - math.sqrt(2.0)) < 1e-15

    @settings(max_examples=200, deadline=None)
    @given(a=counts_3x3, b=counts_3x3)
    def test_symmetry_and_oracle(self, a, b):
        if a.sum() == 0 or b.sum() == 0:
            return
        dab = frobenius_distance(tiny_grid(a), tiny_grid(b)).value
        dba = frobenius_distance(tiny_grid(b), tiny_grid(a)).value
        assert dab == dba
        an = a / np.linalg.norm(a)
        bn = b / np.linalg.norm(b)
        assert abs(dab - float(np.linalg.norm(an - bn))) < 1e-12

    @settings(max_examples=100, deadline=None)
    @given(a=counts_3x3, b=counts_3x3, c=counts_3x3)
    def test_triangle_inequality(self, a, b, c):
        if a.sum() == 0 or b.sum() == 0 or c.sum() == 0:
            return
        ab = frobenius_distance(tiny_grid(a), tiny_grid(b)).value
        bc = frobenius_distance(tiny_grid(b), tiny_grid(c)).value
        ac = frobenius_distance(tiny_grid(a), tiny_grid(c)).value
        assert ac <= ab + bc + 1e-12

    @settings(max_examples=100, deadline=None)
    @given(a=counts_3x3, b=counts_3x3,
           scale=st.integers(min_value=2, max_value=50))
    def test_count_scale_invariance(self, a, b, scale):
        # unit_frobenius compares shapes, not magnitudes
        if a.sum() == 0 or b.sum() == 0:
            return
        d1 = frobenius_distance(tiny_grid(a), tiny_grid(b)).value
        d2 = frobenius_distance(tiny_grid(a * scale), tiny_grid(b)).value
        assert abs(d1 - d2) < 1e-12

    def test_unit_mass_normalization_selectable(self):
        a = np.zeros((3, 3), dtype=np.int64)
        b = np.zeros((3, 3), dtype=np.int64)
        a[0, 0] = 10
        b[0, 0] = 5
        b[1, 1] = 5
        d = frobenius_distance(tiny_grid(a), tiny_grid(b),
                               normalization="unit_mass")
        assert abs(d.value - math.hypot(0.5, 0.5)) < 1e-15
        assert d.normalization == "unit_mass"

    def test_geometry_mismatch_raises(self):
        a = tiny_grid(np.zeros((3, 3), dtype=np.int64))
        b = PatternGrid.empty(0.05)
        b.counts = np.zeros((4, 4), dtype=np.int64)
        a.counts[0, 0] = 1
        b.counts[0, 0] = 1
        with pytest.raises(GeometryMismatch):
            frobenius_distance(a, b)

    def test_empty_pattern_rejected(self):
        a = tiny_grid(np.zeros((3, 3), dtype=np.int64))
        b = tiny_grid(np.ones((3, 3), dtype=np.int64))
        with pytest.raises(ValueError):
            frobenius_distance(a, b)


class TestAccumulation:
    def test_count_conservation(self):
        p = WaveParams.from_c2(0.5)
        cfg = IntegratorConfig(t_final=20.0, sample_dt=0.05)
        rec = integrate(p, (2.0, -2.0), cfg)
        g = PatternGrid.empty(0.05, (0.0, 20.0))
        accumulate(g, rec)
        assert g.total + g.overflow == len(rec.positions)
        assert g.n_trajectories == 1

    def test_sample_dt_mismatch(self):
        p = WaveParams.from_c2(0.5)
        rec = integrate(p, (2.0, -2.0),
                        IntegratorConfig(t_final=1.0, sample_dt=0.1))
        g = PatternGrid.empty(0.05)
        with pytest.raises(SampleDtMismatch):
            accumulate(g, rec)

    def test_merge_adds_counts(self):
        p = WaveParams.from_c2(0.5)
        cfg = IntegratorConfig(t_final=5.0, sample_dt=0.05)
        ra = integrate(p, (2.0, -2.0), cfg)
        rb = integrate(p, (3.0, -2.5), cfg)
        ga = PatternGrid.empty(0.05, (0.0, 5.0))
        gb = PatternGrid.empty(0.05, (0.0, 5.0))
        accumulate(ga, ra)
        accumulate(gb, rb)
        m = merge(ga, gb)
        assert m.total == ga.total + gb.total
        assert m.n_trajectories == 2
        both = PatternGrid.empty(0.05, (0.0, 5.0))
        accumulate(both, ra)
        accumulate(both, rb)
        assert np.array_equal(m.counts, both.counts)


class TestEnsemblePatterns:
    def test_cumulative_checkpoints(self):
        p = WaveParams.from_c2(0.5)
        starts = sample_born(p, 40, seed=19).points
        cfg = IntegratorConfig(t_final=10.0, sample_dt=0.05)
        grids, report = ensemble_patterns(p, starts, [5.0, 10.0], cfg)
        assert len(grids) == 2
        assert grids[0].t_range == (0.0, 5.0)
        assert grids[1].t_range == (0.0, 10.0)
        # cumulative: later checkpoint dominates cell-wise
        assert np.all(grids[1].counts >= grids[0].counts)
        n_done = report["n_completed"]
        assert grids[1].total + grids[1].overflow == n_done * 201
        assert report["n_trajectories"] == 40

    def test_bitwise_deterministic(self):
        p = WaveParams.from_c2(0.5)
        starts = sample_born(p, 30, seed=23).points
        cfg = IntegratorConfig(t_final=5.0, sample_dt=0.05)
        a, _ = ensemble_patterns(p, starts, [5.0], cfg)
        b, _ = ensemble_patterns(p, starts, [5.0], cfg)
        assert np.array_equal(a[0].counts, b[0].counts)

    def test_distance_curve_timestamps(self):
        p = WaveParams.from_c2(0.5)
        sa = sample_born(p, 30, seed=29).points
        sb = sample_born(p, 30, seed=31).points
        cfg = IntegratorConfig(t_final=10.0, sample_dt=0.05)
        ga, _ = ensemble_patterns(p, sa, [5.0, 10.0], cfg)
        gb, _ = ensemble_patterns(p, sb, [5.0, 10.0], cfg)
        curve = distance_curve(ga, gb)
        assert [t for t, _ in curve] == [5.0, 10.0]
        assert all(d > 0.0 for _, d in curve)
        zero = distance_curve(ga, ga)
        assert all(d == 0.0 for _, d in zero)


class TestSinglePattern:
    def test_windowed_equals_direct(self):
        # the windowed long-run driver must reproduce plain integration
        p = WaveParams.from_c2(0.2)
        start = (-2.52027, 2.17529)
        cfg = IntegratorConfig(t_final=40.0, sample_dt=0.05)
        grids, rep = single_pattern(p, start, [20.0, 40.0], cfg,
                                    window_samples=130)
        rec = integrate(p, start, cfg)
        direct = PatternGrid.empty(0.05, (0.0, 40.0))
        accumulate(direct, rec)
        assert rep["flag"] == "completed"
        assert np.array_equal(grids[1].counts, direct.counts)

    def test_requires_final_checkpoint_match(self):
        p = WaveParams.from_c2(0.2)
        cfg = IntegratorConfig(t_final=10.0, sample_dt=0.05)
        grids, _ = single_pattern(p, (2.0, -2.0), [5.0, 10.0], cfg)
        assert grids[-1].t_range == (0.0, 10.0)


class TestDumpAndRender:
    def test_dump_round_trip(self, tmp_path):
        p = WaveParams.from_c2(0.5)
        starts = sample_born(p, 25, seed=37).points
        cfg = IntegratorConfig(t_final=5.0, sample_dt=0.05)
        grids, _ = ensemble_patterns(p, starts, [5.0], cfg)
        path = tmp_path / "g.pgrid"
        dump_pattern(grids[0], path)
        back = load_pattern(path)
        assert np.array_equal(back.counts, grids[0].counts)
        assert back.t_range == grids[0].t_range
        assert back.n_trajectories == grids[0].n_trajectories
        assert back.sample_dt == grids[0].sample_dt
        header = path.read_bytes().split(b"\n", 1)[0]
        meta = json.loads(header)
        assert meta["shape"] == [360, 360]

    def test_dump_deterministic(self, tmp_path):
        g = PatternGrid.empty(0.05, (0.0, 1.0))
        g.counts[10, 20] = 5
        f1, f2 = tmp_path / "a.pgrid", tmp_path / "b.pgrid"
        dump_pattern(g, f1)
        dump_pattern(g, f2)
        assert f1.read_bytes() == f2.read_bytes()

    def test_render_is_valid_ppm_and_deterministic(self, tmp_path):
        g = PatternGrid.empty(0.05, (0.0, 1.0))
        rng = np.random.default_rng(41)
        g.counts[:] = rng.integers(0, 500, size=g.counts.shape)
        f1, f2 = tmp_path / "a.ppm", tmp_path / "b.ppm"
        render(g, f1)
        render(g, f2)
        raw = f1.read_bytes()
        assert raw == f2.read_bytes()
        assert raw.startswith(b"P6\n")
        w, h = (int(v) for v in raw.split(b"\n")[1].split())
        assert h == 360 and w > 360    # image plus colorbar strip
        sidecar = (str(f1) + ".txt")
        with open(sidecar) as fh:
            body = fh.read()
        assert "360" in body and "scale" in body

    def test_render_linear_scale_differs(self, tmp_path):
        g = PatternGrid.empty(0.05, (0.0, 1.0))
        g.counts[:180] = 1
        g.counts[5, 5] = 100000
        a, b = tmp_path / "log.ppm", tmp_path / "lin.ppm"
        render(g, a, scale="log")
        render(g, b, scale="linear")
        assert a.read_bytes() != b.read_bytes()
