"""Rescaled reverse characteristic polynomials and their limiting entire functions.

The central objects are products ``prod_i (1 - x_i z / N)`` built from ordered
particle configurations, their Hadamard-product limits parametrized by
truncated boundary coordinates, and the drift/covariation functionals that
govern their Ito evolution.  All evaluation is by exact sum formulas, never by
numerically differentiating a floating product: derivative formulas cancel
pole-adjacent terms analytically.

Conventions for the full (two-sided) Hadamard class: writing S for the sum of
squared coordinates, ``log E(z) = -gamma z - (delta - S) z^2 / 2 + sum log
factors``, so that gamma = -(log E)'(0) and delta = -(log E)''(0) exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "PoleError",
    "UpsilonPlusPoint",
    "UpsilonPoint",
    "LPFunction",
    "eval_revcharpoly",
    "eval_lp_plus",
    "eval_lp_full",
    "gl_spde_drift",
    "rv_spde_drift",
    "hp_spde_drift",
    "hp_spde_drift_finiteN",
    "covariation_kernel",
    "hp_cov_error",
    "stieltjes_psi",
    "psi_drift",
    "derivatives_revcharpoly",
]

# relative tail-size bound used when truncating coordinate sequences
TAIL_TOL = 1e-10

# switch to the analytic z->w continuation of the covariation below this gap
CONTINUATION_TOL = 1e-6


class PoleError(ZeroDivisionError):
    """Evaluation requested at (or too close to) a reciprocal zero."""


def _nonincreasing_nonnegative(xs, name):
    xs = np.asarray(xs, dtype=float)
    if xs.ndim != 1:
        raise ValueError(f"{name} must be a vector")
    if xs.size and (np.any(xs < 0) or np.any(np.diff(xs) > 0)):
        raise ValueError(f"{name} must be nonincreasing and nonnegative")
    return xs


@dataclass(frozen=True)
class UpsilonPlusPoint:
    """Truncated coordinates (x_1 >= x_2 >= ... >= 0, gamma) with sum(x) <= gamma."""

    xs: np.ndarray
    gamma: float

    def __post_init__(self):
        xs = _nonincreasing_nonnegative(self.xs, "xs")
        object.__setattr__(self, "xs", xs)
        if self.gamma < 0:
            raise ValueError("gamma must be nonnegative")
        if xs.sum() > self.gamma * (1 + 1e-12) + 1e-15:
            raise ValueError("sum of coordinates exceeds gamma")

    @classmethod
    def from_sequence(cls, xs, gamma) -> "UpsilonPlusPoint":
        """Truncate so the discarded tail sums to < TAIL_TOL * gamma."""
        xs = _nonincreasing_nonnegative(xs, "xs")
        if xs.size:
            tail = np.cumsum(xs[::-1])[::-1]
            keep = tail > TAIL_TOL * max(gamma, 1e-300)
            xs = xs[: (np.max(np.flatnonzero(keep)) + 1) if keep.any() else 0]
        return cls(xs=xs, gamma=float(gamma))


@dataclass(frozen=True)
class UpsilonPoint:
    """Two-sided truncated coordinates with sum of squares bounded by delta."""

    xs_plus: np.ndarray
    xs_minus: np.ndarray
    gamma: float
    delta: float

    def __post_init__(self):
        xp = _nonincreasing_nonnegative(self.xs_plus, "xs_plus")
        xm = _nonincreasing_nonnegative(self.xs_minus, "xs_minus")
        object.__setattr__(self, "xs_plus", xp)
        object.__setattr__(self, "xs_minus", xm)
        if self.delta < 0:
            raise ValueError("delta must be nonnegative")
        if self.square_sum() > self.delta * (1 + 1e-12) + 1e-15:
            raise ValueError("sum of squared coordinates exceeds delta")

    def square_sum(self) -> float:
        return float(np.sum(self.xs_plus**2) + np.sum(self.xs_minus**2))

    @classmethod
    def from_sequences(cls, xs_plus, xs_minus, gamma, delta) -> "UpsilonPoint":
        """Truncate so the discarded square-sum tail is < TAIL_TOL * delta."""
        def cut(xs):
            xs = _nonincreasing_nonnegative(xs, "xs")
            if not xs.size:
                return xs
            tail = np.cumsum(xs[::-1] ** 2)[::-1]
            keep = tail > TAIL_TOL * max(delta, 1e-300)
            return xs[: (np.max(np.flatnonzero(keep)) + 1) if keep.any() else 0]

        return cls(cut(xs_plus), cut(xs_minus), float(gamma), float(delta))


def eval_revcharpoly(x: np.ndarray, N: int, z) -> np.ndarray | complex:
    """prod_i (1 - x_i z / N); the same formula serves every model."""
    x = np.asarray(x, dtype=float)
    if x.size != N:
        raise ValueError(f"configuration length {x.size} != N={N}")
    z = np.asarray(z, dtype=complex)
    val = np.prod(1.0 - np.multiply.outer(x / N, z), axis=0)
    return val if val.ndim else complex(val)


def eval_lp_plus(v: UpsilonPlusPoint, z) -> complex:
    """exp(-(gamma - sum x) z) * prod (1 - z x_i); equals 1 at z=0.

    Satisfies |value| <= exp(3 gamma |z|).
    """
    z = complex(z)
    val = np.exp(-(v.gamma - v.xs.sum()) * z)
    if v.xs.size:
        val *= np.prod(1.0 - z * v.xs)
    return complex(val)


def eval_lp_full(u: UpsilonPoint, z) -> complex:
    """Two-sided Hadamard product with convergence factors; equals 1 at z=0."""
    z = complex(z)
    # quadratic exponent (delta - S)/2: makes -(log E)''(0) = delta exactly
    val = np.exp(-u.gamma * z - 0.5 * (u.delta - u.square_sum()) * z * z)
    if u.xs_plus.size:
        val *= np.prod((1.0 - z * u.xs_plus) * np.exp(z * u.xs_plus))
    if u.xs_minus.size:
        val *= np.prod((1.0 + z * u.xs_minus) * np.exp(-z * u.xs_minus))
    return complex(val)


@dataclass(frozen=True)
class LPFunction:
    """Entire function in Hadamard form, callable at complex arguments."""

    kind: str  # "plus" | "full"
    coords: UpsilonPlusPoint | UpsilonPoint

    def __post_init__(self):
        if self.kind == "plus":
            if not isinstance(self.coords, UpsilonPlusPoint):
                raise TypeError("plus-kind requires UpsilonPlusPoint coordinates")
        elif self.kind == "full":
            if not isinstance(self.coords, UpsilonPoint):
                raise TypeError("full-kind requires UpsilonPoint coordinates")
        else:
            raise ValueError(f"unknown kind {self.kind!r}")

    def __call__(self, z) -> complex:
        if self.kind == "plus":
            return eval_lp_plus(self.coords, z)
        return eval_lp_full(self.coords, z)


# ---------------------------------------------------------------------------
# drift functionals of the evolution equations
# ---------------------------------------------------------------------------


def gl_spde_drift(f, fp, fpp, z, theta: float) -> complex:
    """(theta/2) z f' - (z^2/2) f''."""
    z = complex(z)
    return 0.5 * theta * z * fp - 0.5 * z * z * fpp


def rv_spde_drift(f, fp, fpp, z, nu: float) -> complex:
    """-(z/2) f - (nu/2) z f' - (z^2/2) f''."""
    z = complex(z)
    return -0.5 * z * f - 0.5 * nu * z * fp - 0.5 * z * z * fpp


def hp_spde_drift(f, fp, fpp, z, s: complex) -> complex:
    """-(2 Im(s) z + z^2) f - 2 Re(s) z f' - z^2 f''."""
    z, s = complex(z), complex(s)
    return -(2.0 * s.imag * z + z * z) * f - 2.0 * s.real * z * fp - z * z * fpp


def hp_spde_drift_finiteN(f, fp, fpp, z, s: complex, N: int) -> complex:
    """Finite-N drift: the limit operator plus its 1/N correction."""
    if N < 1:
        raise ValueError("N must be >= 1")
    z, s = complex(z), complex(s)
    corr = (
        -z * z * f
        + (2.0 * z * z * s.imag + 2.0 * z**3 - 2.0 * z**3 / N) * fp
        - fpp / N
    )
    return hp_spde_drift(f, fp, fpp, z, s) + corr / N


def covariation_kernel(
    z, w, f_z, f_w, fp_z, fp_w, fpp_z=None, factor: float = 1.0
) -> complex:
    """factor * z w / (z - w) * (f(z) f'(w) - f(w) f'(z)), continued across z=w.

    Inside |z - w| < 1e-6 (1 + |z|) the analytic continuation
    factor * z^2 ((f')^2 - f f'') is used; it needs ``fpp_z``.
    """
    z, w = complex(z), complex(w)
    if abs(z - w) < CONTINUATION_TOL * (1.0 + abs(z)):
        if fpp_z is None:
            raise ValueError("fpp_z required for the z=w continuation branch")
        return factor * z * z * (fp_z * fp_z - f_z * fpp_z)
    return factor * z * w / (z - w) * (f_z * fp_w - f_w * fp_z)


def hp_cov_error(y: np.ndarray, N: int, z, w, f_z, f_w) -> complex:
    """Finite-N covariation correction (2 z w / N^2) sum_i f(z) f(w) / ((1 - y_i z/N)(1 - y_i w/N))."""
    y = np.asarray(y, dtype=float)
    z, w = complex(z), complex(w)
    dz = 1.0 - y * z / N
    dw = 1.0 - y * w / N
    if np.any(np.abs(dz) < 1e-12) or np.any(np.abs(dw) < 1e-12):
        raise PoleError("z or w hits a rescaled reciprocal zero")
    return 2.0 * z * w / (N * N) * f_z * f_w * np.sum(1.0 / (dz * dw))


def stieltjes_psi(x: np.ndarray, z) -> complex:
    """sum_i -x_i / (1 - x_i z) for an already-rescaled configuration."""
    x = np.asarray(x, dtype=float)
    z = complex(z)
    den = 1.0 - x * z
    if np.any(np.abs(den) < 1e-12 * (1.0 + np.abs(x * z))):
        raise PoleError("z at a reciprocal of a coordinate")
    return complex(np.sum(-x / den))


def psi_drift(psi, dpsi, z, theta: float) -> complex:
    """(theta/2)(psi + z psi') - (z psi^2 + z^2 psi psi')."""
    z = complex(z)
    return 0.5 * theta * (psi + z * dpsi) - (z * psi * psi + z * z * psi * dpsi)


def derivatives_revcharpoly(x: np.ndarray, N: int, z) -> tuple[complex, complex, complex]:
    """(f, f', f'') of the rescaled reverse characteristic polynomial at z.

    Exact sum formulas with x_hat = x/N:
    f' = -f sum u_i,  f'' = f ((sum u_i)^2 - sum u_i^2),  u_i = x_hat_i/(1 - x_hat_i z).
    """
    x = np.asarray(x, dtype=float)
    if x.size != N:
        raise ValueError(f"configuration length {x.size} != N={N}")
    z = complex(z)
    xh = x / N
    den = 1.0 - xh * z
    if np.any(np.abs(den) < 1e-12 * (1.0 + np.abs(xh * z))):
        raise PoleError("z at a rescaled reciprocal zero")
    f = complex(np.prod(den))
    u = xh / den
    su = np.sum(u)
    fp = -f * su
    fpp = f * (su * su - np.sum(u * u))
    return f, complex(fp), complex(fpp)
