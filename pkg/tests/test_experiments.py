"""Experiment driver, config schema, presets, and CLI round trips."""

import json
import math
import os

import pytest

from bohmqubits import cli, experiments, presets
from bohmqubits.errors import ConfigError
from bohmqubits.experiments import (EXPERIMENTS, config_from_dict,
                                    config_to_dict, load_config, run,
                                    validate)


def _base(experiment, outdir, **overrides):
    cfg = {
        "experiment": experiment,
        "output_dir": str(outdir),
        "params": {"c2": 0.2},
        "ensemble": {"n_particles": 30, "seed": 3},
        "integrator": {"t_final": 2.0},
        "checkpoints": [1.0, 2.0],
    }
    cfg.update(overrides)
    return cfg


def _run_ok(raw):
    manifest = run(raw)
    outdir = manifest["config"]["output_dir"]
    assert os.path.exists(os.path.join(outdir, "manifest.json"))
    for name in manifest["artifacts"]:
        assert os.path.exists(os.path.join(outdir, name)), name
    assert manifest["artifacts"] == sorted(manifest["artifacts"])
    assert manifest["wall_time_s"] >= 0.0
    return manifest


class TestConfigSchema:
    def test_round_trip(self, tmp_path):
        raw = _base("born_self_distance", tmp_path, seed=9)
        cfg = config_from_dict(raw)
        again = config_from_dict(config_to_dict(cfg))
        assert again == cfg

    def test_manifest_unwraps(self, tmp_path):
        raw = _base("born_evolution", tmp_path)
        wrapped = {"config": config_to_dict(config_from_dict(raw)),
                   "experiment": "born_evolution", "artifacts": []}
        cfg = config_from_dict(wrapped)
        assert cfg.experiment == "born_evolution"

    def test_unknown_keys_rejected(self, tmp_path):
        for broken in (
            _base("born_evolution", tmp_path, typo_key=1),
            _base("born_evolution", tmp_path,
                  params={"c2": 0.2, "hbar": 2.0}),
            _base("born_evolution", tmp_path,
                  ensemble={"n_particles": 5, "flavor": "x"}),
            _base("born_evolution", tmp_path,
                  integrator={"t_final": 1.0, "step": 0.1}),
        ):
            with pytest.raises(ConfigError):
                config_from_dict(broken)

    def test_unknown_experiment_rejected(self, tmp_path):
        with pytest.raises(ConfigError):
            config_from_dict(_base("born_exodus", tmp_path))

    def test_missing_required_keys(self):
        with pytest.raises(ConfigError):
            config_from_dict({"experiment": "born_evolution"})


class TestValidate:
    def test_clean_config_has_no_errors(self, tmp_path):
        assert validate(_base("born_self_distance", tmp_path)) == []

    def test_error_messages(self, tmp_path):
        def errs(raw):
            return [d["message"] for d in validate(raw)
                    if d["level"] == "error"]

        bad_norm = _base("born_evolution", tmp_path,
                         params={"c1": 0.9, "c2": 0.9})
        assert any("expected 1" in m for m in errs(bad_norm))

        off_grid = _base("born_evolution", tmp_path,
                         integrator={"t_final": 1.9997})
        assert any("multiple of sample_dt" in m for m in errs(off_grid))

        late_cp = _base("born_self_distance", tmp_path,
                        checkpoints=[1.0, 5.0])
        assert any("exceeds t_final" in m for m in errs(late_cp))

        unsorted_cp = _base("born_self_distance", tmp_path,
                            checkpoints=[2.0, 1.0])
        assert any("ascending" in m for m in errs(unsorted_cp))

        no_cp = _base("born_self_distance", tmp_path, checkpoints=[])
        assert any("checkpoints" in m for m in errs(no_cp))

    def test_warnings_do_not_block(self, tmp_path):
        raw = _base("born_evolution", tmp_path, checkpoints=[0.507])
        diags = validate(raw)
        assert any(d["level"] == "warning" for d in diags)
        assert not any(d["level"] == "error" for d in diags)

    def test_broken_schema_reported_not_raised(self, tmp_path):
        diags = validate(_base("no_such_thing", tmp_path))
        assert diags and diags[0]["level"] == "error"


class TestExperimentBodies:
    def test_born_evolution(self, tmp_path):
        raw = _base("born_evolution", tmp_path, checkpoints=[0.0, 1.0])
        m = _run_ok(raw)
        assert m["summary"]["snapshot_times"] == [0.0, 1.0]
        assert "particles.csv" in m["artifacts"]
        assert "snapshot_t1.csv" in m["artifacts"]
        assert "snapshot_t0.ppm" in m["artifacts"]

    def test_born_self_distance(self, tmp_path):
        raw = _base("born_self_distance", tmp_path,
                    ensemble={"n_particles": 40, "seed": 1})
        m = _run_ok(raw)
        curve = m["summary"]["distance_curve"]
        assert [t for t, _ in curve] == [1.0, 2.0]
        assert all(d >= 0.0 for _, d in curve)
        assert "distance_curve.csv" in m["artifacts"]
        assert "pattern_a.pgrid" in m["artifacts"]

    def test_cross_c2_finalpattern(self, tmp_path):
        raw = _base("cross_c2_finalpattern", tmp_path,
                    options={"c2_values": [0.0, 0.2]})
        m = _run_ok(raw)
        assert m["summary"]["reference_c2"] == pytest.approx(
            math.sqrt(0.5))
        dists = m["summary"]["distances"]
        assert [c for c, _ in dists] == [0.0, 0.2]
        assert all(d > 0.0 for _, d in dists)
        assert "cross_distance.csv" in m["artifacts"]

    def test_single_chaotic_ergodicity(self, tmp_path):
        raw = _base("single_chaotic_ergodicity", tmp_path,
                    checkpoints=[5.0, 10.0],
                    integrator={"t_final": 10.0})
        m = _run_ok(raw)
        assert len(m["summary"]["distance_curve"]) == 2
        assert m["summary"]["flags"] == ["completed", "completed"]

    def test_b_curve(self, tmp_path):
        raw = _base("b_curve", tmp_path, checkpoints=[],
                    ensemble={"n_particles": 25, "seed": 2},
                    options={"c2_values": [0.0, 0.5], "horizon": 200.0})
        m = _run_ok(raw)
        curve = m["summary"]["b_curve"]
        assert tuple(curve[0]) == (0.0, 0.0)
        assert 0.0 <= curve[1][1] <= 1.0

    def test_proportion_law(self, tmp_path):
        raw = _base("proportion_law", tmp_path, checkpoints=[],
                    params={"c2": 0.5},
                    ensemble={"n_particles": 40, "seed": 4},
                    options={"horizon": 200.0, "lcn_check_n": 4,
                             "lcn_horizon": 1000.0})
        m = _run_ok(raw)
        s = m["summary"]
        assert s["identity_residual"] < 1e-12
        assert s["p1"] + s["p2"] == pytest.approx(1.0)
        assert s["lcn_check_n"] == 4
        assert "classification.csv" in m["artifacts"]
        data = json.load(open(os.path.join(tmp_path, "proportions.json")))
        assert data["b"] == s["b"]

    def test_nonborn_mixture(self, tmp_path):
        raw = _base("nonborn_mixture", tmp_path,
                    options={"mixtures": [[0.5, 0.5]]})
        m = _run_ok(raw)
        assert "mixture_distance.csv" in m["artifacts"]
        assert len(m["summary"]["final_distances"]) == 1

    def test_collision_snapshots(self, tmp_path):
        raw = _base("collision_snapshots", tmp_path, checkpoints=[],
                    integrator={"t_final": 5.0},
                    options={"t_max": 5.0})
        m = _run_ok(raw)
        peaks = [row[1] for row in m["summary"]["epochs"]]
        assert any(abs(p - 4.58) < 0.05 for p in peaks)
        assert "envelope_curve.csv" in m["artifacts"]

    def test_node_geometry(self, tmp_path):
        raw = _base("node_geometry", tmp_path, checkpoints=[],
                    options={"t_max": 3.0})
        m = _run_ok(raw)
        assert m["summary"]["n_x_points"] > 0
        assert "frame_curves.csv" in m["artifacts"]
        assert "spacing_minima.csv" in m["artifacts"]

    def test_product_state_collision_free(self, tmp_path):
        raw = _base("collision_snapshots", tmp_path, checkpoints=[],
                    params={"c2": 0.0}, integrator={"t_final": 5.0},
                    options={"t_max": 5.0})
        m = _run_ok(raw)
        assert m["summary"]["epochs"] == []


class TestManifestRerun:
    def test_rerun_reproduces_every_artifact(self, tmp_path):
        first = tmp_path / "first"
        raw = _base("born_self_distance", first,
                    ensemble={"n_particles": 40, "seed": 5})
        m1 = run(raw)
        second = tmp_path / "second"
        m2 = run(os.path.join(first, "manifest.json"),
                 output_dir=second)
        assert m1["artifacts"] == m2["artifacts"]
        for name in m1["artifacts"]:
            b1 = open(os.path.join(first, name), "rb").read()
            b2 = open(os.path.join(second, name), "rb").read()
            assert b1 == b2, f"{name} differs on rerun"
        assert m1["summary"] == m2["summary"]


class TestPresets:
    def test_every_experiment_has_a_runnable_preset(self, tmp_path):
        for name in EXPERIMENTS:
            cfg = presets.config_for(name, scale="desk",
                                     output_dir=str(tmp_path / name))
            diags = validate(cfg)
            assert [d for d in diags if d["level"] == "error"] == [], name

    def test_long_scale_is_longer(self, tmp_path):
        desk = presets.config_for("born_self_distance", "desk",
                                  output_dir=str(tmp_path))
        full = presets.config_for("born_self_distance", "long",
                                  output_dir=str(tmp_path))
        assert full["integrator"]["t_final"] > \
            desk["integrator"]["t_final"]

    def test_unknown_scale_rejected(self, tmp_path):
        with pytest.raises(ConfigError):
            presets.config_for("b_curve", "galactic",
                               output_dir=str(tmp_path))

    def test_preset_files_load(self, tmp_path):
        paths = presets.write_preset_files(tmp_path, scale="desk")
        # nine experiments plus the two engineered-blob variants
        assert len(paths) == len(EXPERIMENTS) + 2
        for p in paths:
            cfg = load_config(p)
            assert cfg.experiment in EXPERIMENTS

    def test_custom_blob_variants_differ(self, tmp_path):
        lower = presets.custom_blob_config("desk", "lower",
                                           output_dir=str(tmp_path))
        right = presets.custom_blob_config("desk", "right",
                                           output_dir=str(tmp_path))
        assert lower["ensemble"]["custom_centers"] != \
            right["ensemble"]["custom_centers"]


class TestCli:
    def _write(self, tmp_path, raw):
        p = tmp_path / "config.json"
        p.write_text(json.dumps(raw))
        return str(p)

    def test_run_verb(self, tmp_path, capsys):
        raw = _base("born_evolution", tmp_path / "out",
                    ensemble={"n_particles": 15, "seed": 0},
                    integrator={"t_final": 0.5},
                    checkpoints=[0.0, 0.5])
        code = cli.main(["run", self._write(tmp_path, raw)])
        assert code == 0
        assert (tmp_path / "out" / "manifest.json").exists()
        assert "born_evolution" in capsys.readouterr().out

    def test_run_verb_out_override(self, tmp_path):
        raw = _base("node_geometry", tmp_path / "a", checkpoints=[],
                    options={"t_max": 1.5})
        code = cli.main(["run", self._write(tmp_path, raw),
                         "--out", str(tmp_path / "b")])
        assert code == 0
        assert (tmp_path / "b" / "manifest.json").exists()
        assert not (tmp_path / "a").exists()

    def test_validate_verb(self, tmp_path, capsys):
        good = _base("born_self_distance", tmp_path)
        assert cli.main(["validate", self._write(tmp_path, good)]) == 0
        assert "ok" in capsys.readouterr().out
        bad = _base("born_evolution", tmp_path,
                    params={"c1": 0.9, "c2": 0.9})
        assert cli.main(["validate", self._write(tmp_path, bad)]) == 1
        assert "error" in capsys.readouterr().out

    def test_validate_missing_file(self, tmp_path):
        assert cli.main(["validate", str(tmp_path / "nope.json")]) == 1

    def test_render_and_distance_verbs(self, tmp_path, capsys):
        raw = _base("born_self_distance", tmp_path / "out",
                    ensemble={"n_particles": 20, "seed": 6},
                    integrator={"t_final": 1.0}, checkpoints=[1.0])
        assert cli.main(["run", self._write(tmp_path, raw)]) == 0
        capsys.readouterr()
        ga = str(tmp_path / "out" / "pattern_a.pgrid")
        gb = str(tmp_path / "out" / "pattern_b.pgrid")
        img = str(tmp_path / "render.ppm")
        assert cli.main(["render", ga, "-o", img]) == 0
        assert os.path.exists(img)
        capsys.readouterr()
        assert cli.main(["distance", ga, gb]) == 0
        d = float(capsys.readouterr().out.strip())
        assert d > 0.0
        assert cli.main(["distance", ga, ga]) == 0
        assert float(capsys.readouterr().out.strip()) == 0.0

    def test_distance_normalization_flag(self, tmp_path, capsys):
        raw = _base("born_self_distance", tmp_path / "out",
                    ensemble={"n_particles": 20, "seed": 6},
                    integrator={"t_final": 1.0}, checkpoints=[1.0])
        assert cli.main(["run", self._write(tmp_path, raw)]) == 0
        capsys.readouterr()
        ga = str(tmp_path / "out" / "pattern_a.pgrid")
        gb = str(tmp_path / "out" / "pattern_b.pgrid")
        assert cli.main(["distance", ga, gb,
                         "--normalization", "unit_mass"]) == 0
        d_mass = float(capsys.readouterr().out.strip())
        assert cli.main(["distance", ga, gb]) == 0
        d_frob = float(capsys.readouterr().out.strip())
        assert d_mass != d_frob

    def test_render_missing_pattern(self, tmp_path):
        assert cli.main(["render", str(tmp_path / "no.pgrid")]) == 1

    def test_bad_usage_is_validation_failure(self):
        assert cli.main(["run"]) == 1
        assert cli.main(["no-such-verb"]) == 1
        assert cli.main(["distance", "a", "b",
                         "--normalization", "bogus"]) == 1

    def test_experiment_listing_is_stable(self):
        assert len(EXPERIMENTS) == 9
        assert len(set(EXPERIMENTS)) == 9
