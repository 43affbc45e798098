"""Ornstein-Uhlenbeck Dyson dynamics and the exactly solvable polynomial flow.

With N eigenvalues in 1/N scaling, the rescaled reverse characteristic
polynomial of the OU Dyson flow becomes deterministic in the limit and solves
the first-order equation  d/dt D = -(z^2/2) D - c z d/dz D,  whose solution is
``D_0(z e^{-ct}) exp(-z^2 (1 - e^{-2ct})/(4c))``.  On Hadamard coordinates the
same flow reads: zeros decay like e^{-ct}, gamma like e^{-ct}, and delta
relaxes to 1/(2c).  These closed forms make the module an end-to-end
validation target for the simulators.
"""

from __future__ import annotations

import numpy as np

from .charpoly import UpsilonPoint, eval_lp_full
from .sde_core import dyson_drift_vector  # re-exported model surface

__all__ = [
    "dyson_drift_vector",
    "explicit_solution",
    "parameter_flow",
    "pde_residual",
]

# below |c| t < this, use the series limit of (1 - e^{-2ct})/(2c) to avoid
# cancellation in the c -> 0 branch
C_ZERO_SWITCH = 1e-8


def _relaxation(c: float, t: float, half: bool) -> float:
    """(1 - e^{-2ct}) / (4c) if half else / (2c), with the c->0 series limit."""
    scale = 0.5 if half else 1.0
    if abs(c) * t < C_ZERO_SWITCH:
        return scale * t
    return scale * (1.0 - np.exp(-2.0 * c * t)) / (2.0 * c)


def explicit_solution(D0, c: float, t: float, z) -> complex:
    """D0(z e^{-ct}) * exp(-z^2 (1 - e^{-2ct})/(4c)); at c=0 the removable limit."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    z = complex(z)
    return complex(D0(z * np.exp(-c * t)) * np.exp(-z * z * _relaxation(c, t, half=True)))


def parameter_flow(u0: UpsilonPoint, c: float, t: float) -> UpsilonPoint:
    """Flow on Hadamard coordinates: x+- and gamma decay, delta relaxes to 1/(2c)."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    rho = float(np.exp(-c * t))
    return UpsilonPoint(
        xs_plus=u0.xs_plus * rho,
        xs_minus=u0.xs_minus * rho,
        gamma=u0.gamma * rho,
        delta=_relaxation(c, t, half=False) + u0.delta * rho * rho,
    )


def pde_residual(D, c: float, t: float, z, h_z: float = 1e-4, h_t: float = 1e-4) -> complex:
    """d/dt D + (z^2/2) D + c z d/dz D by central differences on D(t, z)."""
    z = complex(z)
    d_t = (D(t + h_t, z) - D(t - h_t, z)) / (2.0 * h_t)
    d_z = (D(t, z + h_z) - D(t, z - h_z)) / (2.0 * h_z)
    return complex(d_t + 0.5 * z * z * D(t, z) + c * z * d_z)


def flowed_lp(u0: UpsilonPoint, c: float, t: float, z) -> complex:
    """Evaluate the Hadamard form of the flowed coordinates (identity check helper)."""
    return eval_lp_full(parameter_flow(u0, c, t), z)
