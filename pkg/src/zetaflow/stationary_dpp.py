"""Determinantal stationary measures: kernels, discretization, and sampling.

Two point processes appear as long-time laws of the rescaled particle
systems:

* the inverse-Bessel process on (0, inf) — the image of the hard-edge Bessel
  process under x = 4/u, so its points sit near 4/j_{nu,k}^2 with j the Bessel
  zeros;
* the Hua-Pickrell process on R \\ {0} — for parameter 0 the image of the
  sine process under inversion, with unit mean spacing pi on the 1/x scale.

``inverse_bessel_kernel`` returns the correlation kernel in the
positive-semidefinite normalization that matches those laws (verified against
the hard-edge scaling of the finite-N invariant measures); ``hp_kernel``
returns the classical Gamma-prefactor display form, whose intensity is half
of the dynamical one, so the sampler applies ``HP_INTENSITY_FACTOR``.

Sampling uses the spectral method: eigendecompose the weighted discretization
W^(1/2) K W^(1/2) on Gauss-Legendre panels, thin eigenfunctions by Bernoulli
draws, then sample points sequentially from the projection.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import special

__all__ = [
    "bessel_j",
    "hp_kernel",
    "hp_kernel_prefactor",
    "inverse_bessel_kernel",
    "discretize_kernel",
    "DiscretizedKernel",
    "sample_dpp",
    "PointConfiguration",
    "eval_zeta_bessel",
    "eval_zeta_hp",
    "HP_INTENSITY_FACTOR",
    "ClippingWarning",
]

# dynamical intensity of the Hua-Pickrell process is twice the display form
HP_INTENSITY_FACTOR = 2.0

# eigenvalue clipping tolerated before refining / warning
CLIP_TOL = 0.05

_DIAG_SWITCH = 1e-8


class ClippingWarning(RuntimeWarning):
    """Eigenvalues fell outside [0,1] by more than the tolerated magnitude."""


def bessel_j(alpha: float, x) -> np.ndarray | float:
    """Bessel function of the first kind J_alpha(x) for x >= 0."""
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise ValueError("x must be nonnegative")
    out = special.jv(alpha, x)
    return float(out) if out.ndim == 0 else out


def hp_kernel_prefactor(s: float) -> float:
    """2^(4s-1)/pi * Gamma(s+1)^2 Gamma(s+1/2) Gamma(s+3/2) / (Gamma(2s+1) Gamma(2s+2))."""
    g = special.gamma
    return (
        2.0 ** (4.0 * s - 1.0)
        / np.pi
        * g(s + 1.0) ** 2
        * g(s + 0.5)
        * g(s + 1.5)
        / (g(2.0 * s + 1.0) * g(2.0 * s + 2.0))
    )


def hp_kernel(s: float, x: float, y: float) -> float:
    """Hua-Pickrell kernel in display form, with the diagonal taken as a limit.

    Arguments of the Bessel factors are 1/|x| and 1/|y|; valid for s > -1/2
    and nonzero x, y.  The diagonal uses the analytic derivative of the
    numerator rather than a divided difference.
    """
    if s <= -0.5:
        raise ValueError("need s > -1/2")
    if x == 0.0 or y == 0.0:
        raise ValueError("x and y must be nonzero")
    pref = hp_kernel_prefactor(s)
    a, b = s - 0.5, s + 0.5
    if abs(x - y) < _DIAG_SWITCH * (1.0 + abs(x)):
        u = 1.0 / abs(x)
        du = -np.sign(x) / (x * x)  # d(1/|x|)/dx
        A, B = special.jv(a, u), special.jv(b, u)
        Ap, Bp = special.jvp(a, u) * du, special.jvp(b, u) * du
        return pref * (Ap * B - A * Bp) / abs(x)
    A_x, A_y = special.jv(a, 1.0 / abs(x)), special.jv(a, 1.0 / abs(y))
    B_x, B_y = special.jv(b, 1.0 / abs(x)), special.jv(b, 1.0 / abs(y))
    return pref * (A_x * B_y - A_y * B_x) / ((x - y) * np.sqrt(abs(x) * abs(y)))


def inverse_bessel_kernel(nu: float, x: float, y: float) -> float:
    """Correlation kernel of the inverse-Bessel process on (0, inf).

    Image of the hard-edge Bessel kernel under u = 4/x: with b_x = 2/sqrt(x),
    K(x,y) = [b_x J_{nu+1}(b_x) J_nu(b_y) - b_y J_{nu+1}(b_y) J_nu(b_x)]
             / (2 (y - x)),
    symmetric, positive on the diagonal (limit form), decaying as x -> inf.
    """
    if nu <= -1.0:
        raise ValueError("need nu > -1")
    if x <= 0.0 or y <= 0.0:
        raise ValueError("x and y must be positive")
    bx, by = 2.0 / np.sqrt(x), 2.0 / np.sqrt(y)
    if abs(x - y) < _DIAG_SWITCH * (1.0 + abs(x)):
        # K(x,x) = (F G' - F' G)/2 with F(x)=b J_{nu+1}(b), G(x)=J_nu(b)
        db = -(x ** -1.5)  # d(2/sqrt(x))/dx
        F = bx * special.jv(nu + 1.0, bx)
        G = special.jv(nu, bx)
        Fp = db * special.jv(nu + 1.0, bx) + bx * special.jvp(nu + 1.0, bx) * db
        Gp = special.jvp(nu, bx) * db
        return 0.5 * (F * Gp - Fp * G)
    num = bx * special.jv(nu + 1.0, bx) * special.jv(nu, by) - by * special.jv(
        nu + 1.0, by
    ) * special.jv(nu, bx)
    return num / (2.0 * (y - x))


# ---------------------------------------------------------------------------
# discretization and spectral sampling
# ---------------------------------------------------------------------------


@dataclass
class DiscretizedKernel:
    """Weighted symmetric discretization with its clipped spectrum."""

    grid: np.ndarray
    weights: np.ndarray
    matrix: np.ndarray
    kernel_id: str = "kernel"
    domain: tuple = ()
    eigenvalues: np.ndarray = field(init=False)
    eigenvectors: np.ndarray = field(init=False)
    clip_magnitude: float = field(init=False)

    def __post_init__(self):
        m = self.matrix
        asym = float(np.max(np.abs(m - m.T))) if m.size else 0.0
        if asym > 1e-12:
            raise ValueError(f"matrix asymmetric by {asym:.2e}")
        vals, vecs = np.linalg.eigh(m)
        clip = max(0.0, float(-vals.min(initial=0.0)), float(vals.max(initial=0.0) - 1.0))
        self.eigenvalues = np.clip(vals, 0.0, 1.0)
        self.eigenvectors = vecs
        self.clip_magnitude = clip

    @property
    def expected_count(self) -> float:
        return float(self.eigenvalues.sum())


def _panel_nodes(a: float, b: float, n_nodes: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes on geometric panels of [a, b] (a > 0)."""
    n_panels = max(4, int(np.ceil(2.0 * np.log2(b / a))))
    gx, gw = np.polynomial.legendre.leggauss(n_nodes)
    edges = np.geomspace(a, b, n_panels + 1)
    xs, ws = [], []
    for lo, hi in zip(edges[:-1], edges[1:]):
        xs.append(0.5 * (hi - lo) * gx + 0.5 * (hi + lo))
        ws.append(0.5 * (hi - lo) * gw)
    return np.concatenate(xs), np.concatenate(ws)


def discretize_kernel(
    kernel,
    domain,
    n_nodes: int = 24,
    kernel_id: str = "kernel",
    auto_refine: bool = True,
) -> DiscretizedKernel:
    """Build W^(1/2) K W^(1/2) on Gauss-Legendre panels over the domain.

    ``domain`` is one (a, b) interval or a list of disjoint intervals (each
    bounded away from 0; negative intervals are mapped through |.| for node
    placement).  If the spectrum leaves [0,1] by more than CLIP_TOL the
    resolution is doubled once.
    """
    intervals = [domain] if np.isscalar(domain[0]) else list(domain)
    xs, ws = [], []
    for a, b in intervals:
        if a >= b:
            raise ValueError("intervals must be increasing")
        if a > 0:
            x, w = _panel_nodes(a, b, n_nodes)
        elif b < 0:
            x, w = _panel_nodes(-b, -a, n_nodes)
            x = -x[::-1]
            w = w[::-1]
        else:
            raise ValueError("intervals must not contain 0")
        xs.append(x)
        ws.append(w)
    grid = np.concatenate(xs)
    weights = np.concatenate(ws)
    order = np.argsort(grid)
    grid, weights = grid[order], weights[order]

    n = grid.size
    mat = np.empty((n, n))
    for i in range(n):
        for j in range(i, n):
            mat[i, j] = mat[j, i] = kernel(grid[i], grid[j])
    root_w = np.sqrt(weights)
    dk = DiscretizedKernel(
        grid=grid,
        weights=weights,
        matrix=root_w[:, None] * mat * root_w[None, :],
        kernel_id=kernel_id,
        domain=tuple(tuple(iv) for iv in intervals),
    )
    if auto_refine and dk.clip_magnitude > CLIP_TOL:
        dk = discretize_kernel(
            kernel, domain, 2 * n_nodes, kernel_id, auto_refine=False
        )
    return dk


@dataclass
class PointConfiguration:
    """Finite point sample with the kernel/grid metadata that produced it."""

    points: np.ndarray
    source: dict

    def __post_init__(self):
        self.points = np.sort(np.asarray(self.points, dtype=float))

    def to_json(self) -> str:
        payload = dict(self.source)
        payload["points"] = self.points.tolist()
        return json.dumps(payload, indent=2)


def sample_dpp(dk: DiscretizedKernel, rng: np.random.Generator) -> PointConfiguration:
    """Spectral sampling: Bernoulli thinning then sequential projection draws."""
    if dk.clip_magnitude > CLIP_TOL:
        warnings.warn(
            f"eigenvalue clipping {dk.clip_magnitude:.3f} exceeds {CLIP_TOL}",
            ClippingWarning,
        )
    lam = dk.eigenvalues
    sel = rng.random(lam.size) < lam
    V = dk.eigenvectors[:, sel].copy()
    chosen: list[int] = []
    for remaining in range(V.shape[1], 0, -1):
        p = np.einsum("ij,ij->i", V, V)
        p = np.clip(p, 0.0, None)
        p /= p.sum()
        j = int(rng.choice(p.size, p=p))
        chosen.append(j)
        c = int(np.argmax(np.abs(V[j])))
        col = V[:, c] / V[j, c]
        V = np.delete(V, c, axis=1)
        V -= np.outer(col, V[j, :])
        if V.shape[1]:
            V, _ = np.linalg.qr(V)
    idx = np.asarray(sorted(set(chosen)), dtype=int)
    if idx.size != len(chosen):
        raise RuntimeError("projection sampler produced a repeated grid point")
    return PointConfiguration(
        points=dk.grid[idx],
        source={
            "kernel": dk.kernel_id,
            "domain": dk.domain,
            "n_nodes": int(dk.grid.size),
            "clip_magnitude": dk.clip_magnitude,
        },
    )


# ---------------------------------------------------------------------------
# stochastic zeta functions over sampled configurations
# ---------------------------------------------------------------------------


def eval_zeta_bessel(cfg: PointConfiguration, z) -> complex:
    """prod (1 - z x) over the sampled points (domain truncation understood)."""
    z = complex(z)
    if cfg.points.size == 0:
        return 1.0 + 0.0j
    return complex(np.prod(1.0 - z * cfg.points))


def eval_zeta_hp(cfg: PointConfiguration, z, cutoff_k: int) -> tuple[complex, complex]:
    """Cutoff-regularized product over |x| > cutoff_k^(-2).

    Returns (value, increment from the previous cutoff) so callers can watch
    convergence in k without asserting it.
    """
    if cutoff_k < 1:
        raise ValueError("cutoff_k must be >= 1")
    z = complex(z)

    def prod_above(k):
        mask = np.abs(cfg.points) > 1.0 / (k * k)
        pts = cfg.points[mask]
        return complex(np.prod(1.0 - z * pts)) if pts.size else 1.0 + 0.0j

    value = prod_above(cutoff_k)
    prev = prod_above(cutoff_k - 1) if cutoff_k > 1 else value
    return value, value - prev
