"""Tests for the ordered/chaotic classifiers and the proportion algebra."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bohmqubits.chaos import (ChaosLabel, b_curve, box_half_widths,
                              classification_csv, classify_escape,
                              classify_escape_batch, classify_lcn,
                              classify_lcn_batch, escape_box,
                              proportion_report, ratio_identity_residual)
from bohmqubits.errors import ConfigError, HorizonTooShort
from bohmqubits.integrate import IntegratorConfig, integrate
from bohmqubits.params import WaveParams
from bohmqubits.sampling import ParticleSet, sample_born

RNG_SEED = 20240816


def _synthetic_pset(n_main, n_sec):
    pts = np.zeros((n_main + n_sec, 2))
    tags = ["main"] * n_main + ["secondary"] * n_sec
    return ParticleSet(points=pts, provenance=tags, seed=0, kind="synthetic")


def _labels(n_ch_main, n_main, n_sec, n_undet_main=0):
    labs = []
    for i in range(n_main):
        if i < n_ch_main:
            labs.append(ChaosLabel("chaotic", "escape_box", escape_time=1.0))
        elif i < n_ch_main + n_undet_main:
            labs.append(ChaosLabel("undetermined", "escape_box"))
        else:
            labs.append(ChaosLabel("ordered", "escape_box"))
    labs += [ChaosLabel("chaotic", "escape_box", escape_time=2.0)] * n_sec
    return labs


class TestEscapeBoxGeometry:
    def test_half_widths_match_translation_amplitudes(self):
        params = WaveParams.from_c2(0.2)
        w, h = box_half_widths(params)
        assert w == pytest.approx(2.0 * params.a0 * math.sqrt(2.0), rel=1e-15)
        assert h == pytest.approx(
            2.0 * params.a0 * math.sqrt(2.0 / math.sqrt(3.0)), rel=1e-15)

    def test_start_sits_at_lower_right_corner(self):
        params = WaveParams.from_c2(0.2)
        w, h = box_half_widths(params)
        xlo, xhi, ylo, yhi = escape_box(params, 1.0, -2.0, margin=0.0)
        assert (xlo, xhi) == (1.0 - w, 1.0)
        assert (ylo, yhi) == (-2.0, -2.0 + h)

    def test_margin_inflates_every_side(self):
        params = WaveParams.from_c2(0.2)
        w, h = box_half_widths(params)
        tight = escape_box(params, 0.0, 0.0, margin=0.0)
        fat = escape_box(params, 0.0, 0.0, margin=0.3)
        assert fat[0] == pytest.approx(tight[0] - 0.3 * w)
        assert fat[1] == pytest.approx(tight[1] + 0.3 * w)
        assert fat[2] == pytest.approx(tight[2] - 0.3 * h)
        assert fat[3] == pytest.approx(tight[3] + 0.3 * h)


class TestEscapeClassifier:
    def test_product_state_all_ordered(self):
        # ordered by construction: every trajectory rides its Lissajous box
        params = WaveParams.from_c2(0.0)
        pset = sample_born(params, 40, seed=RNG_SEED)
        labels = classify_escape_batch(params, pset.points, horizon=200.0)
        assert all(lab.label == "ordered" for lab in labels)
        assert all(lab.escape_time is None for lab in labels)

    def test_maximal_entanglement_mostly_escapes(self):
        params = WaveParams.from_c2(math.sqrt(0.5))
        pset = sample_born(params, 30, seed=RNG_SEED)
        main = pset.points[[t == "main" for t in pset.provenance]]
        labels = classify_escape_batch(params, main, horizon=1000.0)
        frac = np.mean([lab.label == "chaotic" for lab in labels])
        assert frac >= 0.85

    def test_escape_times_within_horizon(self):
        params = WaveParams.from_c2(math.sqrt(0.5))
        pset = sample_born(params, 20, seed=RNG_SEED + 1)
        labels = classify_escape_batch(params, pset.points, horizon=400.0)
        for lab in labels:
            if lab.label == "chaotic":
                assert 0.0 <= lab.escape_time <= 400.0
                assert lab.chi_final is None

    def test_monotone_in_margin(self):
        # nested boxes: an escape from a larger box is an escape from
        # every smaller one, no later than it
        params = WaveParams.from_c2(0.5)
        pset = sample_born(params, 25, seed=RNG_SEED + 2)
        margins = [0.1, 0.25, 0.5, 1.0]
        runs = [classify_escape_batch(params, pset.points, horizon=300.0,
                                      margin=m) for m in margins]
        for tight, loose in zip(runs, runs[1:]):
            for lab_t, lab_l in zip(tight, loose):
                if lab_l.label == "chaotic":
                    assert lab_t.label == "chaotic"
                    assert lab_t.escape_time <= lab_l.escape_time + 1e-12
            n_t = sum(lab.label == "chaotic" for lab in tight)
            n_l = sum(lab.label == "chaotic" for lab in loose)
            assert n_t >= n_l

    def test_batch_deterministic(self):
        params = WaveParams.from_c2(0.5)
        pset = sample_born(params, 15, seed=RNG_SEED + 3)
        a = classify_escape_batch(params, pset.points, horizon=250.0)
        b = classify_escape_batch(params, pset.points, horizon=250.0)
        assert a == b

    def test_batch_agrees_with_single_record_classifier(self):
        params = WaveParams.from_c2(0.5)
        pset = sample_born(params, 8, seed=RNG_SEED + 4)
        cfg = IntegratorConfig(t_final=250.0)
        batch = classify_escape_batch(params, pset.points, horizon=250.0,
                                      config=cfg)
        for (x0, y0), lab_b in zip(pset.points, batch):
            rec = integrate(params, (float(x0), float(y0)), cfg)
            lab_s = classify_escape(rec, params=params, horizon=250.0)
            assert lab_s.label == lab_b.label
            if lab_b.label == "chaotic":
                assert lab_s.escape_time == pytest.approx(lab_b.escape_time,
                                                          abs=1e-9)

    def test_short_record_raises_for_ordered_call(self):
        params = WaveParams.from_c2(0.0)
        cfg = IntegratorConfig(t_final=50.0)
        rec = integrate(params, (3.0, -2.0), cfg)
        with pytest.raises(HorizonTooShort):
            classify_escape(rec, params=params, horizon=1000.0)

    def test_horizon_grid_mismatch_rejected(self):
        params = WaveParams.from_c2(0.5)
        with pytest.raises(ConfigError):
            classify_escape_batch(params, [(2.0, -2.0)], horizon=100.0333)


class TestLcnClassifier:
    def test_known_chaotic_start(self):
        params = WaveParams.from_c2(0.2)
        lab = classify_lcn(params, (-2.52027, 2.17529), horizon=2000.0)
        assert lab.label == "chaotic"
        assert lab.method == "lcn"
        assert lab.chi_final > 1e-3

    def test_known_ordered_start(self):
        # main-blob center: the ordered core of the ensemble
        params = WaveParams.from_c2(0.2)
        lab = classify_lcn(params, (3.5355, -2.6865), horizon=2000.0)
        assert lab.label == "ordered"

    def test_sticky_start_needs_the_full_horizon(self):
        # (2, -2) leaves its box at t = 21 but its deviation growth
        # stays sublinear until past t = 2000; the default horizon is
        # long enough to catch it
        params = WaveParams.from_c2(0.2)
        early = classify_lcn(params, (2.0, -2.0), horizon=2000.0)
        assert early.label == "ordered"
        late = classify_lcn(params, (2.0, -2.0), horizon=10000.0)
        assert late.label == "chaotic"
        assert late.chi_final > 1e-2

    def test_product_state_all_ordered(self):
        params = WaveParams.from_c2(0.0)
        pset = sample_born(params, 10, seed=RNG_SEED)
        labels = classify_lcn_batch(params, pset.points, horizon=1000.0)
        assert all(lab.label == "ordered" for lab in labels)

    def test_agrees_with_escape_on_small_sample(self):
        params = WaveParams.from_c2(0.5)
        pset = sample_born(params, 20, seed=RNG_SEED + 5)
        esc = classify_escape_batch(params, pset.points, horizon=1000.0)
        lcn = classify_lcn_batch(params, pset.points, horizon=4000.0)
        pairs = [(e.label, l.label) for e, l in zip(esc, lcn)
                 if "undetermined" not in (e.label, l.label)]
        agree = sum(e == l for e, l in pairs) / len(pairs)
        assert agree >= 0.8

    def test_batch_matches_single(self):
        params = WaveParams.from_c2(0.5)
        starts = [(2.0, -2.0), (-3.5, 2.6)]
        batch = classify_lcn_batch(params, starts, horizon=1000.0)
        for start, lab_b in zip(starts, batch):
            lab_s = classify_lcn(params, start, horizon=1000.0)
            assert lab_s.label == lab_b.label
            assert lab_s.chi_final == pytest.approx(lab_b.chi_final,
                                                    rel=1e-6, abs=1e-12)


class TestProportionAlgebra:
    @given(n_main=st.integers(2, 400), n_sec=st.integers(0, 200),
           frac=st.floats(0.0, 1.0, exclude_max=True))
    @settings(max_examples=60, deadline=None)
    def test_ratio_identity(self, n_main, n_sec, frac):
        n_ch = int(frac * n_main)
        pset = _synthetic_pset(n_main, n_sec)
        rep = proportion_report(pset, _labels(n_ch, n_main, n_sec))
        assert rep.b == pytest.approx(n_ch / n_main, abs=1e-15)
        assert ratio_identity_residual(rep) < 1e-12
        assert rep.P_ch + rep.P_or == pytest.approx(1.0, abs=1e-12)

    def test_population_split(self):
        pset = _synthetic_pset(300, 100)
        rep = proportion_report(pset, _labels(60, 300, 100))
        assert rep.p1 == pytest.approx(0.25)
        assert rep.p2 == pytest.approx(0.75)
        assert rep.b == pytest.approx(0.2)
        assert rep.ratio == pytest.approx((100 / 300 + 0.2) / 0.8)
        assert rep.secondary_chaotic_fraction == 1.0

    def test_undetermined_excluded_from_b(self):
        pset = _synthetic_pset(100, 0)
        rep = proportion_report(pset, _labels(40, 100, 0, n_undet_main=20))
        assert rep.n_undetermined == 20
        assert rep.b == pytest.approx(40 / 80)

    def test_fully_chaotic_main_blob_gives_infinite_ratio(self):
        pset = _synthetic_pset(50, 10)
        rep = proportion_report(pset, _labels(50, 50, 10))
        assert math.isinf(rep.ratio)
        assert ratio_identity_residual(rep) == 0.0

    def test_label_count_mismatch_rejected(self):
        pset = _synthetic_pset(5, 0)
        with pytest.raises(ConfigError):
            proportion_report(pset, _labels(1, 4, 0))


class TestBCurve:
    def test_endpoints_and_rough_shape(self):
        curve = b_curve([0.0, 0.45, math.sqrt(0.5)], n_per_point=80,
                        horizon=1000.0, seed=RNG_SEED)
        c2s = [c for c, _ in curve]
        bs = [b for _, b in curve]
        assert c2s == pytest.approx([0.0, 0.45, math.sqrt(0.5)])
        assert bs[0] == 0.0
        assert bs[2] >= 0.9
        # sampling noise at this n allows small dips, nothing more
        assert bs[1] >= bs[0] - 0.08
        assert bs[2] >= bs[1] - 0.08

    def test_deterministic_in_seed(self):
        a = b_curve([0.35], n_per_point=40, horizon=200.0, seed=5)
        b = b_curve([0.35], n_per_point=40, horizon=200.0, seed=5)
        assert a == b


class TestClassificationCsv:
    def test_format_and_determinism(self, tmp_path):
        params = WaveParams.from_c2(0.5)
        pset = sample_born(params, 12, seed=RNG_SEED + 6)
        labels = classify_escape_batch(params, pset.points, horizon=200.0)
        path = tmp_path / "classification.csv"
        classification_csv(pset, labels, path)
        lines = path.read_text().splitlines()
        assert lines[0] == ("index,x0,y0,blob,label,method,"
                            "chi_final,escape_time")
        assert len(lines) == 13
        first = lines[1].split(",")
        assert int(first[0]) == 0
        assert float(first[1]) == pset.points[0, 0]
        assert first[4] in ("ordered", "chaotic", "undetermined")
        path2 = tmp_path / "again.csv"
        classification_csv(pset, labels, path2)
        assert path.read_bytes() == path2.read_bytes()
