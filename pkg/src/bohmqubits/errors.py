"""Exception types shared across the package."""


class BohmError(Exception):
    """Base class for all package-specific errors."""


class NearNodeSingularity(BohmError):
    """|Psi|^2 fell below the singularity floor at an evaluation point."""


class StepUnderflow(BohmError):
    """Adaptive step size hit dt_min with the error still above tolerance."""


class NodesAtInfinity(BohmError):
    """sin(omega_xy * t) is (numerically) zero: the nodal lattice is at infinity."""


class NoNodes(BohmError):
    """Product state (c2 = 0): the wavefunction has no nodal lattice."""


class XPointNotFound(BohmError):
    """X-point root search failed to converge inside its search box."""


class NotHyperbolic(BohmError):
    """Converged stagnation point has complex or equal-sign eigenvalues."""


class HorizonTooShort(BohmError):
    """Trajectory record is too short for the requested classification."""


class SampleDtMismatch(BohmError):
    """Trajectory record sampled with a different sample_dt than the pattern."""


class GeometryMismatch(BohmError):
    """Pattern grids with different window or resolution cannot be compared."""


class ConfigError(BohmError):
    """Experiment configuration failed validation."""
