"""Physical parameters of the entangled two-qubit oscillator system.

The guiding wavefunction is a two-term superposition of products of
displaced coherent states of two independent 1D harmonic oscillators,

    Psi(x, y, t) = c1 * Y_R(x, t; wx) * Y_L(y, t; wy)
                 + c2 * Y_L(x, t; wx) * Y_R(y, t; wy),

with real amplitudes c1, c2 normalized as c1**2 + c2**2 = 1.  Y_R and
Y_L are Gaussian wavepackets whose centers oscillate harmonically with
initial displacement +sqrt(2/w)*a0 (R, "right") or -sqrt(2/w)*a0
(L, "left").  c2 = 0 is a product state (no entanglement); c2 = c1 =
sqrt(2)/2 is the maximally entangled case.

Every default constant of the model is fixed here, in one place:
hbar = m_x = m_y = 1, omega_x = 1, omega_y = sqrt(3), a0 = 5/2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

OMEGA_X = 1.0
OMEGA_Y = math.sqrt(3.0)
A0 = 2.5
HBAR = 1.0
MASS = 1.0

#: |Psi|^2 below this is treated as a node hit: Im(grad Psi / Psi) is
#: numerically meaningless in double precision past this point.
SINGULARITY_FLOOR = 1e-24

#: Pattern window is [-WINDOW_HALF, WINDOW_HALF]^2 split into GRID_N
#: cells per axis (cell width 0.05), sampled every SAMPLE_DT.
WINDOW_HALF = 9.0
GRID_N = 360
SAMPLE_DT = 0.05

_NORM_TOL = 1e-12


class PhasePoint(NamedTuple):
    """A configuration-space point with a time stamp."""

    x: float
    y: float
    t: float


@dataclass(frozen=True)
class WaveParams:
    """Amplitudes and oscillator constants defining Psi.

    Parameters
    ----------
    c1, c2 : float
        Real superposition amplitudes, c1**2 + c2**2 = 1.
    omega_x, omega_y : float
        Oscillator angular frequencies.  The defaults 1 and sqrt(3)
        are incommensurate, which is what makes ordered trajectories
        quasi-periodic rather than closed.
    a0 : float
        Dimensionless coherent-state displacement (> 0).
    hbar, m_x, m_y : float
        Kept for dimensional bookkeeping; only the value 1 is
        supported by the closed-form expressions used throughout.
    """

    c1: float
    c2: float
    omega_x: float = OMEGA_X
    omega_y: float = OMEGA_Y
    a0: float = A0
    hbar: float = HBAR
    m_x: float = MASS
    m_y: float = MASS

    def __post_init__(self) -> None:
        vals = (self.c1, self.c2, self.omega_x, self.omega_y, self.a0)
        if not all(math.isfinite(v) for v in vals):
            raise ValueError("parameters must be finite")
        norm = self.c1 * self.c1 + self.c2 * self.c2
        if abs(norm - 1.0) > _NORM_TOL:
            raise ValueError(f"c1^2 + c2^2 = {norm!r}, expected 1 within {_NORM_TOL}")
        if self.a0 <= 0.0:
            raise ValueError("a0 must be positive")
        if self.omega_x <= 0.0 or self.omega_y <= 0.0:
            raise ValueError("frequencies must be positive")
        if (self.hbar, self.m_x, self.m_y) != (1.0, 1.0, 1.0):
            raise ValueError("only hbar = m_x = m_y = 1 is supported")

    @classmethod
    def from_c2(cls, c2: float, **kwargs) -> "WaveParams":
        """Build params with c1 = sqrt(1 - c2**2) >= 0."""
        if not 0.0 <= abs(c2) <= 1.0:
            raise ValueError("need |c2| <= 1")
        return cls(c1=math.sqrt(1.0 - c2 * c2), c2=c2, **kwargs)

    @property
    def sign_convention(self) -> int:
        """Sign of c1*c2; selects the nodal-lattice index parity."""
        prod = self.c1 * self.c2
        return 0 if prod == 0.0 else (1 if prod > 0.0 else -1)

    @property
    def parity(self) -> str:
        """Lattice index parity: 'odd' for c1*c2 > 0, 'even' for < 0."""
        s = self.sign_convention
        if s == 0:
            raise ValueError("product state has no nodal lattice")
        return "odd" if s > 0 else "even"
