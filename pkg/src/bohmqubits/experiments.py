"""Config-driven experiment runner.

Each experiment wires the library into one reproducible pipeline: it
reads a declarative JSON config, runs the sampling/integration/analysis
chain, and writes CSV tables, pattern dumps, images, and a manifest.
The manifest embeds the full config, so feeding a manifest back to
``run`` reproduces the run; all numeric artifacts are byte-identical
across reruns (floats are serialized with repr, counts are exact).
"""

import json
import math
import os
import time
from dataclasses import dataclass, field as dc_field, replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import __version__, chaos, nodes, patterns
from .errors import BohmError, ConfigError
from .integrate import IntegratorConfig, snapshot_positions
from .params import WINDOW_HALF, WaveParams
from .sampling import EnsembleSpec, ParticleSet, particles_csv, sample
from .wavefunction import cross_term_envelope

EXPERIMENTS = (
    "born_evolution",
    "born_self_distance",
    "cross_c2_finalpattern",
    "single_chaotic_ergodicity",
    "b_curve",
    "proportion_law",
    "nonborn_mixture",
    "collision_snapshots",
    "node_geometry",
)

_MAX_ENT = math.sqrt(0.5)


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    params: WaveParams
    ensemble: EnsembleSpec
    integrator: IntegratorConfig
    checkpoints: Tuple[float, ...]
    output_dir: str
    seed: int = 0
    workers: Optional[int] = None
    options: Dict = dc_field(default_factory=dict)


def _params_from_dict(d: Dict) -> WaveParams:
    if not isinstance(d, dict):
        raise ConfigError("params must be a mapping")
    allowed = {"c1", "c2", "omega_x", "omega_y", "a0"}
    unknown = set(d) - allowed
    if unknown:
        raise ConfigError(f"unknown params keys: {sorted(unknown)}")
    kwargs = {k: float(v) for k, v in d.items()}
    if "c1" in kwargs:
        return WaveParams(**kwargs)
    c2 = kwargs.pop("c2", 0.0)
    return WaveParams.from_c2(c2, **kwargs)


def _ensemble_from_dict(d: Dict) -> EnsembleSpec:
    if not isinstance(d, dict):
        raise ConfigError("ensemble must be a mapping")
    allowed = {"kind", "n_particles", "p1", "p2", "custom_centers", "seed"}
    unknown = set(d) - allowed
    if unknown:
        raise ConfigError(f"unknown ensemble keys: {sorted(unknown)}")
    d = dict(d)
    if "custom_centers" in d:
        d["custom_centers"] = tuple(
            ((float(c[0][0]), float(c[0][1])), float(c[1]))
            for c in d["custom_centers"])
    return EnsembleSpec(**d)


def _integrator_from_dict(d: Dict) -> IntegratorConfig:
    if not isinstance(d, dict):
        raise ConfigError("integrator must be a mapping")
    allowed = {"t_final", "sample_dt", "rel_tol", "abs_tol", "dt_init",
               "dt_min", "dt_max", "node_guard"}
    unknown = set(d) - allowed
    if unknown:
        raise ConfigError(f"unknown integrator keys: {sorted(unknown)}")
    return IntegratorConfig(**d)


def config_from_dict(raw: Dict) -> ExperimentConfig:
    """Build a validated ExperimentConfig from parsed JSON.

    Accepts either a bare config or a run manifest (anything holding a
    "config" mapping with an "experiment" key is unwrapped first).
    """
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    if "config" in raw and isinstance(raw["config"], dict) \
            and "experiment" in raw["config"]:
        raw = raw["config"]
    required = {"experiment", "output_dir"}
    missing = required - set(raw)
    if missing:
        raise ConfigError(f"missing config keys: {sorted(missing)}")
    allowed = {"experiment", "params", "ensemble", "integrator",
               "checkpoints", "output_dir", "seed", "workers", "options"}
    unknown = set(raw) - allowed
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    name = raw["experiment"]
    if name not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {name!r}; choose from "
                          f"{', '.join(EXPERIMENTS)}")
    params = _params_from_dict(raw.get("params", {"c2": 0.0}))
    ensemble = _ensemble_from_dict(raw.get("ensemble", {}))
    integrator = _integrator_from_dict(raw.get("integrator", {}))
    checkpoints = tuple(float(c) for c in raw.get("checkpoints", ()))
    options = raw.get("options", {})
    if not isinstance(options, dict):
        raise ConfigError("options must be a mapping")
    workers = raw.get("workers")
    if workers is not None:
        workers = int(workers)
    return ExperimentConfig(
        experiment=name, params=params, ensemble=ensemble,
        integrator=integrator, checkpoints=checkpoints,
        output_dir=str(raw["output_dir"]), seed=int(raw.get("seed", 0)),
        workers=workers, options=dict(options))


def config_to_dict(cfg: ExperimentConfig) -> Dict:
    """Canonical JSON-ready echo of a config (manifest embedding)."""
    return {
        "experiment": cfg.experiment,
        "params": {"c1": cfg.params.c1, "c2": cfg.params.c2,
                   "omega_x": cfg.params.omega_x,
                   "omega_y": cfg.params.omega_y, "a0": cfg.params.a0},
        "ensemble": {
            "kind": cfg.ensemble.kind,
            "n_particles": cfg.ensemble.n_particles,
            "p1": cfg.ensemble.p1, "p2": cfg.ensemble.p2,
            "custom_centers": [[[c[0][0], c[0][1]], c[1]]
                               for c in cfg.ensemble.custom_centers],
            "seed": cfg.ensemble.seed,
        },
        "integrator": {k: getattr(cfg.integrator, k) for k in
                       ("t_final", "sample_dt", "rel_tol", "abs_tol",
                        "dt_init", "dt_min", "dt_max", "node_guard")},
        "checkpoints": list(cfg.checkpoints),
        "output_dir": cfg.output_dir,
        "seed": cfg.seed,
        "workers": cfg.workers,
        "options": cfg.options,
    }


def load_config(path) -> ExperimentConfig:
    with open(path) as fh:
        return config_from_dict(json.load(fh))


def validate(raw) -> List[Dict[str, str]]:
    """Schema and physics diagnostics for a config dict (or manifest).

    Returns a list of {"level": "error"|"warning", "message": ...};
    an empty list (or warnings only) means the config is runnable.
    """
    diags: List[Dict[str, str]] = []

    def err(msg):
        diags.append({"level": "error", "message": msg})

    def warn(msg):
        diags.append({"level": "warning", "message": msg})

    try:
        cfg = config_from_dict(raw)
    except (ConfigError, BohmError, TypeError, ValueError) as exc:
        err(str(exc))
        return diags

    norm = cfg.params.c1 ** 2 + cfg.params.c2 ** 2
    if abs(norm - 1.0) > 1e-9:
        err(f"amplitudes not normalized: c1^2+c2^2 = {norm}")
    it = cfg.integrator
    n = round(it.t_final / it.sample_dt)
    if not math.isclose(n * it.sample_dt, it.t_final, rel_tol=0.0,
                        abs_tol=1e-9):
        err(f"t_final {it.t_final} is not a multiple of sample_dt "
            f"{it.sample_dt}")
    for cp in cfg.checkpoints:
        k = round(cp / it.sample_dt)
        if not math.isclose(k * it.sample_dt, cp, rel_tol=0.0,
                            abs_tol=1e-9):
            warn(f"checkpoint {cp} does not sit on the sample grid "
                 f"(step {it.sample_dt}); nearest is {k * it.sample_dt}")
        if cp > it.t_final + 1e-9:
            err(f"checkpoint {cp} exceeds t_final {it.t_final}")
    if cfg.checkpoints and list(cfg.checkpoints) != \
            sorted(cfg.checkpoints):
        err("checkpoints must be ascending")
    for (cx, cy), _w in cfg.ensemble.custom_centers:
        if abs(cx) > WINDOW_HALF or abs(cy) > WINDOW_HALF:
            warn(f"custom center ({cx}, {cy}) lies outside the "
                 f"[-{WINDOW_HALF}, {WINDOW_HALF}] window")
    if cfg.experiment in ("born_self_distance", "nonborn_mixture",
                          "cross_c2_finalpattern",
                          "single_chaotic_ergodicity") \
            and not cfg.checkpoints:
        err(f"{cfg.experiment} needs a checkpoints list")
    return diags


# -- shared helpers ---------------------------------------------------------

def _write_csv(path, header: Sequence[str], rows) -> None:
    import csv
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([repr(v) if isinstance(v, float) else v
                        for v in row])


def _positions_csv(path, pts: np.ndarray) -> None:
    _write_csv(path, ["index", "x", "y"],
               ((i, float(x), float(y)) for i, (x, y) in enumerate(pts)))


def _bin_instant(pts: np.ndarray, sample_dt: float, t: float
                 ) -> patterns.PatternGrid:
    """Histogram a single snapshot of positions as a PatternGrid."""
    g = patterns.PatternGrid.empty(sample_dt, (t, t))
    finite = pts[np.all(np.isfinite(pts), axis=1)]
    from . import _kernels
    over = _kernels._bin_points(np.ascontiguousarray(finite),
                                len(finite), g.extent,
                                g.counts.shape[0], g.counts)
    g.overflow = int(over)
    g.n_trajectories = len(finite)
    return g


def _born_starts(cfg: ExperimentConfig, seed: int) -> ParticleSet:
    spec = replace(cfg.ensemble, seed=seed)
    return sample(cfg.params, spec)


def _fmt_t(t: float) -> str:
    s = f"{t:g}"
    return s.replace(".", "p").replace("-", "m")


# -- experiment bodies ------------------------------------------------------

def _exp_born_evolution(cfg: ExperimentConfig, outdir: str):
    """Ensemble snapshots at the configured times (blob exchange movie)."""
    times = list(cfg.checkpoints) or [0.0, 1.05, 4.6, 6.0]
    pset = _born_starts(cfg, cfg.ensemble.seed)
    artifacts = []
    particles_csv(pset, os.path.join(outdir, "particles.csv"))
    artifacts.append("particles.csv")
    ts = [t for t in times if t > 0.0]
    pos, flags = snapshot_positions(cfg.params, pset.points, ts,
                                    cfg.integrator, workers=cfg.workers)
    all_times = ([0.0] if 0.0 in times or not ts else []) + ts
    snaps = {0.0: pset.points} if 0.0 in all_times else {}
    for j, t in enumerate(ts):
        snaps[t] = pos[:, j, :]
    for t in sorted(snaps):
        tag = _fmt_t(t)
        f_csv = f"snapshot_t{tag}.csv"
        _positions_csv(os.path.join(outdir, f_csv), snaps[t])
        artifacts.append(f_csv)
        g = _bin_instant(snaps[t], cfg.integrator.sample_dt, t)
        f_img = f"snapshot_t{tag}.ppm"
        patterns.render(g, os.path.join(outdir, f_img))
        artifacts.extend([f_img, f_img + ".txt"])
    aborted = sum(1 for f in flags if f != "completed")
    return {"snapshot_times": sorted(snaps),
            "n_particles": len(pset),
            "n_aborted": aborted}, artifacts


def _run_pattern_set(cfg, pts, checkpoints):
    it = cfg.integrator
    if not math.isclose(it.t_final, checkpoints[-1], rel_tol=0.0,
                        abs_tol=1e-9):
        it = replace(it, t_final=float(checkpoints[-1]))
    return patterns.ensemble_patterns(cfg.params, pts, checkpoints, it,
                                      workers=cfg.workers)


def _exp_born_self_distance(cfg: ExperimentConfig, outdir: str):
    """Distance between two independent Born ensembles vs time."""
    cps = list(cfg.checkpoints)
    a = _born_starts(cfg, cfg.ensemble.seed)
    b = _born_starts(cfg, cfg.ensemble.seed + 1)
    ga, ra = _run_pattern_set(cfg, a.points, cps)
    gb, rb = _run_pattern_set(cfg, b.points, cps)
    curve = patterns.distance_curve(ga, gb)
    artifacts = []
    _write_csv(os.path.join(outdir, "distance_curve.csv"), ["t", "D"],
               curve)
    artifacts.append("distance_curve.csv")
    for name, g in (("pattern_a.pgrid", ga[-1]), ("pattern_b.pgrid",
                                                  gb[-1])):
        patterns.dump_pattern(g, os.path.join(outdir, name))
        artifacts.append(name)
    patterns.render(ga[-1], os.path.join(outdir, "pattern_a.ppm"))
    artifacts.extend(["pattern_a.ppm", "pattern_a.ppm.txt"])
    return {"distance_curve": curve,
            "n_aborted": ra["n_aborted_near_node"]
            + rb["n_aborted_near_node"],
            "final_distance": curve[-1][1]}, artifacts


def _exp_cross_c2_finalpattern(cfg: ExperimentConfig, outdir: str):
    """Final patterns across entanglements vs the maximal-entanglement one."""
    cps = list(cfg.checkpoints)
    c2_values = [float(v) for v in
                 cfg.options.get("c2_values", [0.0, 0.2, 0.5])]
    ref_c2 = float(cfg.options.get("reference_c2", _MAX_ENT))
    artifacts = []

    def final_pattern(c2, seed):
        p = WaveParams.from_c2(c2, omega_x=cfg.params.omega_x,
                               omega_y=cfg.params.omega_y, a0=cfg.params.a0)
        pset = sample(p, replace(cfg.ensemble, seed=seed))
        sub = replace(cfg, params=p)
        grids, rep = _run_pattern_set(sub, pset.points, cps)
        return grids[-1], rep

    ref_grid, ref_rep = final_pattern(ref_c2, cfg.ensemble.seed + 7777)
    patterns.dump_pattern(ref_grid,
                          os.path.join(outdir, "pattern_reference.pgrid"))
    artifacts.append("pattern_reference.pgrid")
    rows = []
    aborted = ref_rep["n_aborted_near_node"]
    for i, c2 in enumerate(c2_values):
        g, rep = final_pattern(c2, cfg.ensemble.seed + i)
        aborted += rep["n_aborted_near_node"]
        d = patterns.frobenius_distance(g, ref_grid).value
        rows.append((c2, d))
        name = f"pattern_c2_{_fmt_t(c2)}.pgrid"
        patterns.dump_pattern(g, os.path.join(outdir, name))
        artifacts.append(name)
    _write_csv(os.path.join(outdir, "cross_distance.csv"),
               ["c2", "D_final_vs_reference"], rows)
    artifacts.append("cross_distance.csv")
    return {"reference_c2": ref_c2, "distances": rows,
            "n_aborted": aborted}, artifacts


def _exp_single_chaotic_ergodicity(cfg: ExperimentConfig, outdir: str):
    """Two long chaotic trajectories converging to the same pattern."""
    cps = list(cfg.checkpoints)
    starts = [tuple(map(float, s)) for s in
              cfg.options.get("starts",
                              [(-2.52027, 2.17529), (2.0, -2.0)])]
    if len(starts) != 2:
        raise ConfigError("single_chaotic_ergodicity needs two starts")
    it = cfg.integrator
    if not math.isclose(it.t_final, cps[-1], rel_tol=0.0, abs_tol=1e-9):
        it = replace(it, t_final=float(cps[-1]))
    grids = []
    reports = []
    artifacts = []
    for i, start in enumerate(starts):
        gs, rep = patterns.single_pattern(cfg.params, start, cps, it)
        grids.append(gs)
        reports.append(rep)
        name = f"pattern_start{i}.pgrid"
        patterns.dump_pattern(gs[-1], os.path.join(outdir, name))
        patterns.render(gs[-1], os.path.join(outdir,
                                             f"pattern_start{i}.ppm"))
        artifacts.extend([name, f"pattern_start{i}.ppm",
                          f"pattern_start{i}.ppm.txt"])
    curve = patterns.distance_curve(grids[0], grids[1])
    _write_csv(os.path.join(outdir, "ergodicity_curve.csv"), ["t", "D"],
               curve)
    artifacts.append("ergodicity_curve.csv")
    return {"starts": starts, "distance_curve": curve,
            "final_distance": curve[-1][1],
            "flags": [r["flag"] for r in reports]}, artifacts


def _exp_b_curve(cfg: ExperimentConfig, outdir: str):
    """Chaotic fraction of the main blob across the entanglement range."""
    c2_values = [float(v) for v in
                 cfg.options.get("c2_values",
                                 [0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6,
                                  _MAX_ENT])]
    horizon = float(cfg.options.get("horizon", chaos.ESCAPE_HORIZON))
    margin = float(cfg.options.get("margin", chaos.ESCAPE_MARGIN))
    curve = chaos.b_curve(c2_values, n_per_point=cfg.ensemble.n_particles,
                          horizon=horizon, margin=margin,
                          seed=cfg.ensemble.seed, config=None,
                          workers=cfg.workers)
    _write_csv(os.path.join(outdir, "b_curve.csv"), ["c2", "b"], curve)
    return {"b_curve": curve, "horizon": horizon,
            "margin": margin}, ["b_curve.csv"]


def _exp_proportion_law(cfg: ExperimentConfig, outdir: str):
    """Escape-box census of one Born ensemble plus the proportion algebra."""
    horizon = float(cfg.options.get("horizon", chaos.ESCAPE_HORIZON))
    margin = float(cfg.options.get("margin", chaos.ESCAPE_MARGIN))
    pset = _born_starts(cfg, cfg.ensemble.seed)
    labels = chaos.classify_escape_batch(cfg.params, pset.points,
                                         horizon=horizon, margin=margin,
                                         workers=cfg.workers)
    report = chaos.proportion_report(pset, labels)
    artifacts = []
    chaos.classification_csv(pset, labels,
                             os.path.join(outdir, "classification.csv"))
    artifacts.append("classification.csv")
    summary = {
        "b": report.b, "p1": report.p1, "p2": report.p2,
        "P_ch": report.P_ch, "P_or": report.P_or, "ratio": report.ratio,
        "n_undetermined": report.n_undetermined,
        "secondary_chaotic_fraction": report.secondary_chaotic_fraction,
        "identity_residual": chaos.ratio_identity_residual(report),
        "horizon": horizon, "margin": margin,
    }
    n_lcn = int(cfg.options.get("lcn_check_n", 0))
    if n_lcn > 0:
        sub = pset.points[:n_lcn]
        lcn_labels = chaos.classify_lcn_batch(
            cfg.params, sub,
            horizon=float(cfg.options.get("lcn_horizon",
                                          chaos.LCN_HORIZON)),
            workers=cfg.workers)
        esc = [l.label for l in labels[:n_lcn]]
        lcn = [l.label for l in lcn_labels]
        both = [(e, l) for e, l in zip(esc, lcn)
                if e != "undetermined" and l != "undetermined"]
        agree = (sum(1 for e, l in both if e == l) / len(both)
                 if both else math.nan)
        summary["lcn_agreement"] = agree
        summary["lcn_check_n"] = n_lcn
    with open(os.path.join(outdir, "proportions.json"), "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
    artifacts.append("proportions.json")
    return summary, artifacts


def _exp_nonborn_mixture(cfg: ExperimentConfig, outdir: str):
    """Relaxation of engineered mixtures toward the Born-evolved pattern."""
    cps = list(cfg.checkpoints)
    ref_seed = cfg.ensemble.seed + 1000
    born_spec = EnsembleSpec(kind="born",
                             n_particles=cfg.ensemble.n_particles,
                             seed=ref_seed)
    ref = sample(cfg.params, born_spec)
    gref, rep_ref = _run_pattern_set(cfg, ref.points, cps)
    artifacts = []
    aborted = rep_ref["n_aborted_near_node"]
    rows = []
    finals = []
    if cfg.ensemble.kind == "custom_blob":
        scenarios = [("custom", cfg.ensemble)]
    else:
        mixtures = cfg.options.get(
            "mixtures", [[0.96, 0.04], [0.5, 0.5],
                         [1.0 / 3.0, 2.0 / 3.0], [0.21, 0.79],
                         [0.08, 0.92]])
        scenarios = []
        for p1, p2 in mixtures:
            spec = EnsembleSpec(kind="two_blob_mixture",
                                n_particles=cfg.ensemble.n_particles,
                                p1=float(p1), p2=float(p2),
                                seed=cfg.ensemble.seed)
            scenarios.append((f"p1_{_fmt_t(float(p1))}", spec))
    for i, (tag, spec) in enumerate(scenarios):
        pset = sample(cfg.params, replace(spec, seed=spec.seed + i))
        grids, rep = _run_pattern_set(cfg, pset.points, cps)
        aborted += rep["n_aborted_near_node"]
        curve = patterns.distance_curve(grids, gref)
        for t, d in curve:
            rows.append((spec.p1 if spec.kind == "two_blob_mixture"
                         else math.nan,
                         spec.p2 if spec.kind == "two_blob_mixture"
                         else math.nan, t, d))
        finals.append((tag, curve[-1][1]))
        name = f"pattern_{tag}.pgrid"
        patterns.dump_pattern(grids[-1], os.path.join(outdir, name))
        artifacts.append(name)
    patterns.dump_pattern(gref[-1],
                          os.path.join(outdir, "pattern_born_ref.pgrid"))
    artifacts.append("pattern_born_ref.pgrid")
    _write_csv(os.path.join(outdir, "mixture_distance.csv"),
               ["p1", "p2", "t", "D_vs_born"], rows)
    artifacts.append("mixture_distance.csv")
    return {"final_distances": finals, "n_aborted": aborted}, artifacts


def _exp_collision_snapshots(cfg: ExperimentConfig, outdir: str):
    """Blob-collision bookkeeping plus ensemble snapshots at the epochs."""
    t_max = float(cfg.options.get("t_max", 10.0))
    threshold = float(cfg.options.get("threshold",
                                      nodes.COLLISION_THRESHOLD))
    epochs = nodes.collision_epochs(cfg.params, t_max, threshold=threshold)
    artifacts = []
    _write_csv(os.path.join(outdir, "epochs.csv"),
               ["t_start", "t_peak", "t_end", "envelope_peak"],
               ((e.t_start, e.t_peak, e.t_end, e.envelope_peak)
                for e in epochs))
    artifacts.append("epochs.csv")
    tgrid = np.arange(0.0, t_max + 1e-12, 0.01)
    rows = []
    for t in tgrid:
        fr = nodes.lattice_frame(cfg.params, float(t)) \
            if cfg.params.c2 != 0.0 else None
        rows.append((float(t),
                     float(cross_term_envelope(cfg.params, t,
                                               kind="amplitude")),
                     float(cross_term_envelope(cfg.params, t,
                                               kind="density")),
                     fr.spacing if fr and fr.valid else math.inf,
                     fr.origin_distance if fr and fr.valid else math.inf))
    _write_csv(os.path.join(outdir, "envelope_curve.csv"),
               ["t", "E_amplitude", "E_density", "node_spacing",
                "node_origin_distance"], rows)
    artifacts.append("envelope_curve.csv")
    snap_times = sorted({round(e.t_peak, 2) for e in epochs}
                        | set(float(t) for t in cfg.checkpoints))
    snap_times = [t for t in snap_times if t > 0.0]
    if snap_times:
        pset = _born_starts(cfg, cfg.ensemble.seed)
        pos, flags = snapshot_positions(cfg.params, pset.points,
                                        snap_times, cfg.integrator,
                                        workers=cfg.workers)
        for j, t in enumerate(snap_times):
            tag = _fmt_t(t)
            f_csv = f"snapshot_t{tag}.csv"
            _positions_csv(os.path.join(outdir, f_csv), pos[:, j, :])
            artifacts.append(f_csv)
    return {"epochs": [[e.t_start, e.t_peak, e.t_end, e.envelope_peak]
                       for e in epochs],
            "snapshot_times": snap_times}, artifacts


def _exp_node_geometry(cfg: ExperimentConfig, outdir: str):
    """Node-line geometry curves, node tables, and an X-point example."""
    t_max = float(cfg.options.get("t_max", 10.0))
    dt = float(cfg.options.get("dt", 0.01))
    from .wavefunction import origin_distance
    artifacts = []
    rows = []
    for t in np.arange(dt, t_max + 1e-12, dt):
        fr = nodes.lattice_frame(cfg.params, float(t))
        rows.append((float(t),
                     fr.spacing if fr.valid else math.inf,
                     fr.inclination if fr.valid else math.inf,
                     fr.origin_distance if fr.valid else math.inf,
                     float(origin_distance(cfg.params, float(t))),
                     int(fr.valid)))
    _write_csv(os.path.join(outdir, "frame_curves.csv"),
               ["t", "spacing", "inclination", "node_origin_distance",
                "blob_origin_distance", "valid"], rows)
    artifacts.append("frame_curves.csv")
    node_times = [float(t) for t in
                  cfg.options.get("node_times", [1.0, 2.46])]
    nodes.nodes_csv(cfg.params, node_times,
                    os.path.join(outdir, "nodes.csv"))
    artifacts.append("nodes.csv")
    xrows = []
    for t in node_times:
        try:
            for nd in nodes.nodes_at(cfg.params, t, (-3, 3)):
                try:
                    xp = nodes.find_x_point(cfg.params, nd)
                except BohmError:
                    continue
                xrows.append((t, nd.k, xp.position.x, xp.position.y,
                              xp.eigenvalues[0], xp.eigenvalues[1]))
        except BohmError:
            continue
    _write_csv(os.path.join(outdir, "x_points.csv"),
               ["t", "k", "x", "y", "eig_lo", "eig_hi"], xrows)
    artifacts.append("x_points.csv")
    minima = nodes.spacing_minima(cfg.params, t_max)
    _write_csv(os.path.join(outdir, "spacing_minima.csv"),
               ["t", "spacing"], minima)
    artifacts.append("spacing_minima.csv")
    return {"n_x_points": len(xrows),
            "spacing_minima": [[t, v] for t, v in minima]}, artifacts


_BODIES = {
    "born_evolution": _exp_born_evolution,
    "born_self_distance": _exp_born_self_distance,
    "cross_c2_finalpattern": _exp_cross_c2_finalpattern,
    "single_chaotic_ergodicity": _exp_single_chaotic_ergodicity,
    "b_curve": _exp_b_curve,
    "proportion_law": _exp_proportion_law,
    "nonborn_mixture": _exp_nonborn_mixture,
    "collision_snapshots": _exp_collision_snapshots,
    "node_geometry": _exp_node_geometry,
}


def run(config, output_dir: Optional[str] = None) -> Dict:
    """Execute an experiment and write its artifacts plus manifest.json.

    `config` may be an ExperimentConfig, a config dict, a manifest dict,
    or a path to either JSON file.  `output_dir` overrides the config's
    destination (used to rerun a manifest into a fresh directory).
    """
    if isinstance(config, (str, os.PathLike)):
        cfg = load_config(config)
    elif isinstance(config, ExperimentConfig):
        cfg = config
    else:
        cfg = config_from_dict(config)
    if output_dir is not None:
        cfg = replace(cfg, output_dir=str(output_dir))
    diags = validate(config_to_dict(cfg))
    errors = [d["message"] for d in diags if d["level"] == "error"]
    if errors:
        raise ConfigError("; ".join(errors))
    outdir = cfg.output_dir
    os.makedirs(outdir, exist_ok=True)
    t0 = time.time()
    summary, artifacts = _BODIES[cfg.experiment](cfg, outdir)
    manifest = {
        "config": config_to_dict(cfg),
        "experiment": cfg.experiment,
        "version": __version__,
        "summary": summary,
        "artifacts": sorted(artifacts),
        "wall_time_s": round(time.time() - t0, 3),
    }
    with open(os.path.join(outdir, "manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
    return manifest
