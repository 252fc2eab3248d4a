"""Bohmian trajectories and Born-rule statistics for a two-qubit oscillator system."""

__version__ = "0.1.0"

from .params import (
    A0,
    GRID_N,
    OMEGA_X,
    OMEGA_Y,
    SAMPLE_DT,
    SINGULARITY_FLOOR,
    WINDOW_HALF,
    PhasePoint,
    WaveParams,
)
from .wavefunction import (
    BlobCenter,
    blob_centers,
    blob_top_residual,
    continuity_residual,
    cross_term_envelope,
    density,
    eval_component,
    eval_psi,
    eval_psi_gradient,
    eval_psi_second,
    eval_psi_time_derivative,
    origin_distance,
    schrodinger_residual,
    velocity,
    velocity_jacobian,
)
from .integrate import (
    IntegratorConfig,
    TrajectoryRecord,
    integrate,
    integrate_with_deviation,
    snapshot_positions,
)
from .nodes import (
    CollisionEpoch,
    NodalPoint,
    NodeLatticeFrame,
    XPoint,
    collision_epochs,
    find_x_point,
    lattice_frame,
    min_origin_distance,
    node_position,
    node_velocity,
    nodes_at,
    spacing_minima,
)
from .sampling import (
    EnsembleSpec,
    ParticleSet,
    born_envelope,
    chisquare_against_density,
    sample,
    sample_born,
    sample_mixture,
)
from .patterns import (
    PatternDistance,
    PatternGrid,
    accumulate,
    distance_curve,
    dump_pattern,
    ensemble_patterns,
    frobenius_distance,
    load_pattern,
    merge,
    render,
    single_pattern,
)
from .chaos import (
    ChaosLabel,
    ProportionReport,
    b_curve,
    classify_escape,
    classify_escape_batch,
    classify_lcn,
    classify_lcn_batch,
    escape_box,
    proportion_report,
    ratio_identity_residual,
)
from .experiments import (
    EXPERIMENTS,
    ExperimentConfig,
    config_from_dict,
    load_config,
)
from .experiments import run as run_experiment
from .experiments import validate as validate_config
from .presets import config_for, custom_blob_config
from .errors import (
    BohmError,
    ConfigError,
    GeometryMismatch,
    HorizonTooShort,
    NearNodeSingularity,
    NoNodes,
    NodesAtInfinity,
    NotHyperbolic,
    SampleDtMismatch,
    StepUnderflow,
    XPointNotFound,
)
