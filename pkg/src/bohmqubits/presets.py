"""Ready-made experiment configs at two scales.

`desk` keeps every run short enough for a laptop session (ensembles to
t=500, single trajectories to 1e5).  `long` is the long-horizon scale
(ensembles to t=5000, single trajectories to 2e6) and can take hours;
use it to push the convergence floors well below the desk-scale
values.
"""

import json
import math
import os
from typing import Dict, Optional

from .errors import ConfigError
from .experiments import EXPERIMENTS

_MAX_ENT = math.sqrt(0.5)

_SCALES = {
    "desk": {"t_ensemble": 500.0, "t_single": 1.0e5},
    "long": {"t_ensemble": 5000.0, "t_single": 2.0e6},
}

# Engineered initial distributions that start far from the Born weights
# and still relax toward the Born-evolved pattern.  The two custom-blob
# variants place a single Gaussian on either side of the main diagonal.
CUSTOM_BLOB_LOWER = (((-3.54, -1.69), 1.0),)
CUSTOM_BLOB_RIGHT = (((3.54, -1.0), 1.0),)


def _integrator(t_final: float, rel_tol: float = 1e-10,
                abs_tol: float = 1e-12) -> Dict:
    return {"t_final": t_final, "sample_dt": 0.05,
            "rel_tol": rel_tol, "abs_tol": abs_tol}


def _log_checkpoints(t_final: float, n: int = 6) -> list:
    """Geometric checkpoint ladder ending exactly at t_final."""
    first = t_final / 10.0 ** (n - 1)
    pts = [first * 10.0 ** i for i in range(n)]
    pts = [round(p / 0.05) * 0.05 for p in pts if p >= 1.0]
    return sorted(set(pts + [t_final]))


def config_for(experiment: str, scale: str = "desk",
               output_dir: Optional[str] = None) -> Dict:
    """Return a runnable config dict for one experiment at one scale."""
    if experiment not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {experiment!r}")
    if scale not in _SCALES:
        raise ConfigError(f"unknown scale {scale!r}; choose desk or long")
    tens = _SCALES[scale]["t_ensemble"]
    tsing = _SCALES[scale]["t_single"]
    out = output_dir or os.path.join("out", f"{experiment}_{scale}")
    cfg: Dict = {
        "experiment": experiment,
        "params": {"c2": 0.5},
        "ensemble": {"kind": "born", "n_particles": 2400, "seed": 11},
        "integrator": _integrator(tens),
        "checkpoints": [],
        "output_dir": out,
        "seed": 11,
        "options": {},
    }
    if experiment == "born_evolution":
        cfg["params"] = {"c2": 0.2}
        cfg["integrator"] = _integrator(6.0)
        cfg["checkpoints"] = [0.0, 1.05, 4.6, 6.0]
    elif experiment == "born_self_distance":
        cfg["params"] = {"c2": 0.2}
        cfg["checkpoints"] = [tens / 10.0, tens / 5.0, 2.0 * tens / 5.0,
                              3.0 * tens / 5.0, 4.0 * tens / 5.0, tens]
    elif experiment == "cross_c2_finalpattern":
        cfg["checkpoints"] = [tens]
        cfg["options"] = {"c2_values": [0.0, 0.1, 0.2, 0.3, 0.5],
                          "reference_c2": _MAX_ENT}
    elif experiment == "single_chaotic_ergodicity":
        cfg["params"] = {"c2": 0.2}
        cfg["integrator"] = _integrator(tsing, rel_tol=1e-9,
                                        abs_tol=1e-11)
        cfg["checkpoints"] = _log_checkpoints(tsing)
        cfg["options"] = {"starts": [[-2.52027, 2.17529], [2.0, -2.0]]}
    elif experiment == "b_curve":
        cfg["ensemble"] = {"kind": "born", "n_particles": 500, "seed": 11}
        cfg["options"] = {"c2_values": [0.0, 0.1, 0.2, 0.3, 0.4, 0.5,
                                        0.6, _MAX_ENT],
                          "horizon": 1.0e3}
    elif experiment == "proportion_law":
        cfg["ensemble"]["n_particles"] = 500
        cfg["options"] = {"horizon": 1.0e3, "lcn_check_n": 0}
    elif experiment == "nonborn_mixture":
        cfg["params"] = {"c2": 0.5}
        cfg["checkpoints"] = [tens / 10.0, tens / 5.0, 2.0 * tens / 5.0,
                              3.0 * tens / 5.0, 4.0 * tens / 5.0, tens]
        cfg["options"] = {"mixtures": [[0.96, 0.04], [0.5, 0.5],
                                       [1.0 / 3.0, 2.0 / 3.0],
                                       [0.21, 0.79], [0.08, 0.92]]}
    elif experiment == "collision_snapshots":
        cfg["params"] = {"c2": 0.5}
        cfg["integrator"] = _integrator(10.0)
        cfg["checkpoints"] = [4.6, 8.1]
        cfg["options"] = {"t_max": 10.0}
    elif experiment == "node_geometry":
        cfg["params"] = {"c2": 0.5}
        cfg["integrator"] = _integrator(10.0)
        cfg["options"] = {"t_max": 10.0, "node_times": [1.0, 2.46]}
    return cfg


def custom_blob_config(scale: str = "desk", variant: str = "lower",
                       output_dir: Optional[str] = None) -> Dict:
    """Single off-diagonal Gaussian relaxing toward the Born pattern."""
    centers = {"lower": CUSTOM_BLOB_LOWER, "right": CUSTOM_BLOB_RIGHT}
    if variant not in centers:
        raise ConfigError("variant must be 'lower' or 'right'")
    cfg = config_for("nonborn_mixture", scale, output_dir)
    cfg["ensemble"] = {
        "kind": "custom_blob", "n_particles": 2400, "seed": 11,
        "custom_centers": [[[cx, cy], w] for (cx, cy), w
                           in centers[variant]],
    }
    cfg["options"] = {}
    if output_dir is None:
        cfg["output_dir"] = os.path.join(
            "out", f"nonborn_custom_{variant}_{scale}")
    return cfg


def write_preset_files(directory: str, scale: str = "desk") -> list:
    """Write every preset as a JSON config file; returns the paths."""
    os.makedirs(directory, exist_ok=True)
    paths = []
    for name in EXPERIMENTS:
        cfg = config_for(name, scale)
        path = os.path.join(directory, f"{name}_{scale}.json")
        with open(path, "w") as fh:
            json.dump(cfg, fh, indent=2, sort_keys=True)
        paths.append(path)
    for variant in ("lower", "right"):
        cfg = custom_blob_config(scale, variant)
        path = os.path.join(directory,
                            f"nonborn_custom_{variant}_{scale}.json")
        with open(path, "w") as fh:
            json.dump(cfg, fh, indent=2, sort_keys=True)
        paths.append(path)
    return paths
