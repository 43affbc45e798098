"""Collision-safe integrators for interacting particle diffusions.

Four models share one stepping engine, all with state in an ordered chamber
(coordinates strictly decreasing whenever a drift is evaluated):

* ``GL``    -- multiplicative flow ``dx = x dw + (theta/2) x dt + sum_j x x_j/(x - x_j) dt``
              on positive coordinates,
* ``RV``    -- Rider-Valko model ``dz = z dw - (nu/2) z dt + dt/2 + interaction dt``,
* ``HP``    -- Hua-Pickrell / dynamical Cauchy model on the whole line with
              state-dependent diffusion ``sqrt(2(y^2+1))``,
* ``DYSON`` -- Ornstein-Uhlenbeck Dyson flow ``dd = dw - c d dt + sum_j 1/(d - d_j) dt``.

Positivity of GL/RV is preserved by stepping the multiplicative part in
logarithmic coordinates (for RV the additive ``dt/2`` is applied in the
original coordinates afterwards).  Collisions of the discretized paths are
handled by rejecting a step whose output violates the ordering/gap guard and
retrying with a halved step size, up to a configurable number of halvings.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

MODELS = ("GL", "RV", "HP", "DYSON")

# chamber-time t maps to matrix-time t/4 for the multiplicative Brownian
# motion; every conversion between the two clocks goes through here.
MATRIX_TIME_FACTOR = 0.25


class DegenerateConfigurationError(ValueError):
    """Coordinates coincide (or violate ordering) where a drift is needed."""


class InvalidBoundaryDataError(ValueError):
    """Boundary coordinates are inconsistent (e.g. gamma < sum of particles)."""


class InvalidConfigurationError(ValueError):
    """Configuration outside the admissible set for the requested operation."""


class StepRejectedError(RuntimeError):
    """Proposed Euler step violated ordering or the collision guard."""


class StiffFailureError(RuntimeError):
    """Adaptive halving exhausted; reports which path and time failed."""

    def __init__(self, path: int, time: float, dt: float):
        self.path = path
        self.time = time
        self.dt = dt
        super().__init__(
            f"step size underflow on path {path} at t={time:.6g} (dt={dt:.3g})"
        )


@dataclass(frozen=True)
class ModelParams:
    """Parameters of the selected model; fields of other models are ignored."""

    model: str
    theta: float = 0.0
    nu: float = 0.0
    s: complex = 0j
    c: float = 0.0

    def __post_init__(self):
        if self.model not in MODELS:
            raise InvalidConfigurationError(f"unknown model {self.model!r}")

    @property
    def positive(self) -> bool:
        """Whether coordinates are constrained to (0, inf)."""
        return self.model in ("GL", "RV")

    def as_dict(self) -> dict:
        return {
            "model": self.model,
            "theta": self.theta,
            "nu": self.nu,
            "s_re": self.s.real,
            "s_im": self.s.imag,
            "c": self.c,
        }


@dataclass(frozen=True)
class IntegratorConfig:
    dt_max: float = 1e-3
    dt_min: float = 1e-12
    collision_guard: float = 1e-6
    max_substeps: int = 40
    seed: int = 0

    def __post_init__(self):
        if not (0 < self.dt_min <= self.dt_max):
            raise InvalidConfigurationError("need 0 < dt_min <= dt_max")
        if self.collision_guard <= 0:
            raise InvalidConfigurationError("collision_guard must be positive")


@dataclass
class PathEnsemble:
    """Trajectories on a shared output grid.

    ``paths`` has shape (n_paths, n_times, n_particles) with particle 0 the
    largest coordinate at every time.
    """

    times: np.ndarray
    paths: np.ndarray
    params: ModelParams
    seed: int = 0

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.paths = np.asarray(self.paths, dtype=float)
        if self.paths.ndim != 3:
            raise InvalidConfigurationError("paths must be (n_paths, n_times, n)")
        if self.paths.shape[1] != self.times.size:
            raise InvalidConfigurationError("paths/times length mismatch")
        if self.times.size > 1 and not np.all(np.diff(self.times) > 0):
            raise InvalidConfigurationError("times must be strictly increasing")

    @property
    def n_paths(self) -> int:
        return self.paths.shape[0]

    @property
    def n_particles(self) -> int:
        return self.paths.shape[2]

    def ordered_everywhere(self) -> bool:
        if self.n_particles < 2:
            return True
        return bool(np.all(np.diff(self.paths, axis=2) < 0))

    def header(self) -> dict:
        return {
            "params": self.params.as_dict(),
            "seed": self.seed,
            "grid": self.times.tolist(),
            "n_paths": int(self.n_paths),
            "n_particles": int(self.n_particles),
        }

    def write_csv(self, csv_path, header_path=None) -> None:
        """Serialize as long-format CSV (path, t, i, value) plus JSON header."""
        with open(csv_path, "w") as fh:
            fh.write("path,t,i,value\n")
            for p in range(self.n_paths):
                for k, t in enumerate(self.times):
                    for i in range(self.n_particles):
                        fh.write(f"{p},{t:.12g},{i},{self.paths[p, k, i]:.16g}\n")
        if header_path is not None:
            with open(header_path, "w") as fh:
                json.dump(self.header(), fh, indent=2)


# ---------------------------------------------------------------------------
# drift and diffusion coefficients
# ---------------------------------------------------------------------------


def check_chamber(x: np.ndarray, positive: bool, strict: bool = True) -> np.ndarray:
    """Validate an ordered configuration; returns it as a float array."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.size == 0:
        raise InvalidConfigurationError("configuration must be a nonempty vector")
    if strict and x.size > 1 and not np.all(np.diff(x) < 0):
        raise DegenerateConfigurationError(f"coordinates not strictly decreasing: {x}")
    if positive and not np.all(x > 0):
        raise InvalidConfigurationError("coordinates must be strictly positive")
    return x


def _inv_gaps(x: np.ndarray) -> np.ndarray:
    """Pairwise 1/(x_i - x_j) with zeroed diagonal, batch-safe over leading axes."""
    diff = x[..., :, None] - x[..., None, :]
    n = x.shape[-1]
    idx = np.arange(n)
    diff[..., idx, idx] = np.inf
    return 1.0 / diff


def gl_drift_vector(x: np.ndarray, theta: float) -> np.ndarray:
    """Drift (theta/2) x_i + sum_{j != i} x_i x_j / (x_i - x_j)."""
    x = check_chamber(x, positive=True)
    inter = x * ((_inv_gaps(x) * x[None, :]).sum(axis=-1))
    return 0.5 * theta * x + inter


def rv_drift_vector(x: np.ndarray, nu: float) -> np.ndarray:
    """Drift -(nu/2) x_i + 1/2 + sum_{j != i} x_i x_j / (x_i - x_j)."""
    x = check_chamber(x, positive=True)
    inter = x * ((_inv_gaps(x) * x[None, :]).sum(axis=-1))
    return -0.5 * nu * x + 0.5 + inter


def hp_drift_vector(y: np.ndarray, s: complex) -> np.ndarray:
    """Drift 2[-Re(s) y_i + Im(s)] + 2 sum_{j != i} (y_i y_j + 1)/(y_i - y_j)."""
    y = check_chamber(y, positive=False)
    s = complex(s)
    num = y[:, None] * y[None, :] + 1.0
    inter = 2.0 * (num * _inv_gaps(y)).sum(axis=-1)
    return 2.0 * (-s.real * y + s.imag) + inter


def hp_diffusion_vector(y: np.ndarray) -> np.ndarray:
    """Diffusion coefficient sqrt(2 (y_i^2 + 1))."""
    y = np.asarray(y, dtype=float)
    return np.sqrt(2.0 * (y * y + 1.0))


def dyson_drift_vector(d: np.ndarray, c: float) -> np.ndarray:
    """Drift -c d_i + sum_{j != i} 1/(d_i - d_j)."""
    d = check_chamber(d, positive=False)
    return -c * d + _inv_gaps(d).sum(axis=-1)


def truncated_isde_drift(x: np.ndarray, theta: float, gamma: float) -> np.ndarray:
    """Drift of the K-particle truncation of the infinite positive-chamber system.

    Per coordinate: (theta/2) x_i + (gamma - sum_j x_j) + sum_{j != i}
    x_i x_j / (x_i - x_j).  With gamma equal to the particle sum the
    additive term vanishes and the drift coincides with ``gl_drift_vector``.
    """
    x = check_chamber(x, positive=True)
    excess = gamma - x.sum()
    if excess < -1e-12 * max(1.0, abs(gamma)):
        raise InvalidBoundaryDataError(
            f"gamma={gamma} smaller than particle sum {x.sum()}"
        )
    return gl_drift_vector(x, theta) + excess


def hp_isde_drift_residual(
    y: np.ndarray, s: complex, gamma_hp: float, delta: float
) -> np.ndarray:
    """Limit drift of the reciprocal-zero system of the Cauchy model.

    Returns, per coordinate,
    ``-2(Re(s)+1) y_i + 2 sum_{j != i} y_j^2/(y_i - y_j)
    + 2 [gamma_hp + (delta - sum_j y_j^2)/y_i]``
    for a finite two-sided truncation ``y``.  Used as a diagnostic against
    simulated finite-N drifts; makes no convergence claim by itself.
    """
    y = check_chamber(y, positive=False)
    if np.any(y == 0.0):
        raise InvalidConfigurationError("coordinates must be nonzero")
    s = complex(s)
    inter = 2.0 * ((y * y)[None, :] * _inv_gaps(y)).sum(axis=-1)
    tail = 2.0 * (gamma_hp + (delta - np.sum(y * y)) / y)
    return -2.0 * (s.real + 1.0) * y + inter + tail


# ---------------------------------------------------------------------------
# single-step updates
# ---------------------------------------------------------------------------


def _raw_step(x: np.ndarray, params: ModelParams, dt: float, g: np.ndarray) -> np.ndarray:
    """One unchecked Euler update; x and g may carry leading batch axes."""
    sq = np.sqrt(dt)
    if params.model == "GL":
        log_drift = 0.5 * (params.theta - 1.0) + (_inv_gaps(x) * x[..., None, :]).sum(axis=-1)
        return x * np.exp(log_drift * dt + sq * g)
    if params.model == "RV":
        log_drift = -0.5 * params.nu - 0.5 + (_inv_gaps(x) * x[..., None, :]).sum(axis=-1)
        return x * np.exp(log_drift * dt + sq * g) + 0.5 * dt
    if params.model == "HP":
        s = complex(params.s)
        num = x[..., :, None] * x[..., None, :] + 1.0
        drift = 2.0 * (-s.real * x + s.imag) + 2.0 * (num * _inv_gaps(x)).sum(axis=-1)
        return x + drift * dt + hp_diffusion_vector(x) * sq * g
    # DYSON
    drift = -params.c * x + _inv_gaps(x).sum(axis=-1)
    return x + drift * dt + sq * g


def _rows_ok(x: np.ndarray, positive: bool, guard: float) -> np.ndarray:
    """Boolean acceptance mask over leading axes of x."""
    ok = np.all(np.isfinite(x), axis=-1)
    if positive:
        ok &= np.all(x > 0.0, axis=-1)
    if x.shape[-1] > 1:
        gaps = x[..., :-1] - x[..., 1:]
        scale = np.maximum(np.abs(x[..., :-1]), np.abs(x[..., 1:]))
        ok &= np.all(gaps > guard * scale, axis=-1)
    return ok


def step_euler(
    x: np.ndarray,
    params: ModelParams,
    dt: float,
    gaussians: np.ndarray,
    collision_guard: float = 1e-6,
) -> np.ndarray:
    """One Euler-Maruyama step; raises ``StepRejectedError`` on bad output.

    ``gaussians`` must hold one standard normal draw per coordinate.  GL steps
    entirely in log coordinates; RV steps its multiplicative part in logs and
    adds the dt/2 term in the original coordinates; HP and Dyson step plainly.
    """
    x = check_chamber(x, positive=params.positive)
    g = np.asarray(gaussians, dtype=float)
    if g.shape != x.shape:
        raise InvalidConfigurationError("one gaussian per coordinate required")
    if dt < 0:
        raise InvalidConfigurationError("dt must be nonnegative")
    if dt == 0.0:
        return x.copy()
    out = _raw_step(x, params, dt, g)
    if not _rows_ok(out, params.positive, collision_guard):
        raise StepRejectedError(f"ordering/guard violated at dt={dt:.3g}")
    return out


def step_matrix_gl(
    Y: np.ndarray, theta: float, dt: float, gaussian_matrix: np.ndarray
) -> np.ndarray:
    """Euler step Y + Y dB + theta Y dt of the matrix-valued multiplicative flow.

    ``gaussian_matrix`` is the complex increment dB itself: real and imaginary
    entry parts each N(0, dt).
    """
    Y = np.asarray(Y, dtype=complex)
    dB = np.asarray(gaussian_matrix, dtype=complex)
    if Y.shape != dB.shape or Y.shape[-1] != Y.shape[-2]:
        raise InvalidConfigurationError("Y and gaussian_matrix must be square and congruent")
    return Y + Y @ dB + theta * Y * dt


def matrix_time(t: float) -> float:
    """Matrix-clock time corresponding to chamber-clock time t."""
    return MATRIX_TIME_FACTOR * t


def rescale_edge(sing_sq: np.ndarray, t: float, N: int) -> np.ndarray:
    """Map squared singular values at matrix-time t/4 to the edge-rescaled scale.

    x_i = exp(-N t / 2) * xi_i; preserves ordering (common positive factor).
    """
    sing_sq = np.asarray(sing_sq, dtype=float)
    return np.exp(-0.5 * N * t) * sing_sq


def truncated_isde_step(
    x: np.ndarray,
    theta: float,
    gamma: float,
    dt: float,
    gaussians: np.ndarray,
    collision_guard: float = 1e-6,
) -> tuple[np.ndarray, float]:
    """Euler step of the K-particle truncated infinite system plus its gamma.

    The multiplicative part (drift (theta/2) x + interaction, noise x dw) is
    stepped in log coordinates; the nonnegative additive excess
    (gamma - sum x) dt is applied in the original coordinates.  gamma follows
    d gamma = (theta/2) gamma dt + sum_i x_i dw_i, which keeps gamma = sum x
    exact to first order when started there.
    """
    x = check_chamber(x, positive=True)
    excess = gamma - x.sum()
    if excess < -1e-12 * max(1.0, abs(gamma)):
        raise InvalidBoundaryDataError(f"gamma={gamma} below particle sum {x.sum()}")
    g = np.asarray(gaussians, dtype=float)
    if dt == 0.0:
        return x.copy(), gamma
    sq = np.sqrt(dt)
    log_drift = 0.5 * (theta - 1.0) + (_inv_gaps(x) * x[None, :]).sum(axis=-1)
    out = x * np.exp(log_drift * dt + sq * g) + max(excess, 0.0) * dt
    gamma_out = gamma + 0.5 * theta * gamma * dt + float(np.dot(x, g)) * sq
    if not _rows_ok(out, True, collision_guard):
        raise StepRejectedError(f"ordering/guard violated at dt={dt:.3g}")
    return out, gamma_out


# ---------------------------------------------------------------------------
# ensemble generation
# ---------------------------------------------------------------------------


def path_rng(seed: int, path: int) -> np.random.Generator:
    """Independent, reproducible stream for one path: keyed by (seed, path)."""
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(path,)))


def _advance_adaptive(
    x: np.ndarray,
    params: ModelParams,
    cfg: IntegratorConfig,
    t0: float,
    t1: float,
    rng: np.random.Generator,
    path_index: int,
) -> np.ndarray:
    t = t0
    dt = cfg.dt_max
    rejections = 0
    while t < t1 - 1e-15 * max(1.0, abs(t1)):
        step_dt = min(dt, t1 - t)
        g = rng.standard_normal(x.size)
        try:
            x = step_euler(x, params, step_dt, g, cfg.collision_guard)
        except StepRejectedError:
            rejections += 1
            dt *= 0.5
            if rejections > cfg.max_substeps or dt < cfg.dt_min:
                raise StiffFailureError(path_index, t, dt) from None
            continue
        rejections = 0
        t += step_dt
        if dt < cfg.dt_max:
            dt = min(2.0 * dt, cfg.dt_max)
    return x


def simulate_ensemble(
    initial: np.ndarray,
    params: ModelParams,
    cfg: IntegratorConfig,
    times: np.ndarray,
    n_paths: int,
) -> PathEnsemble:
    """Simulate independent trajectories recorded on ``times``.

    Each path owns its RNG stream (keyed by the configured seed and the path
    index), so results are bitwise reproducible and independent of any
    execution order across paths.  ``times[0]`` is the initial time.
    """
    times = np.asarray(times, dtype=float)
    if times.size < 1 or (times.size > 1 and not np.all(np.diff(times) > 0)):
        raise InvalidConfigurationError("times must be nonempty and strictly increasing")
    x0 = check_chamber(initial, positive=params.positive, strict=False)
    paths = np.empty((n_paths, times.size, x0.size))
    for p in range(n_paths):
        rng = path_rng(cfg.seed, p)
        x = x0.copy()
        paths[p, 0] = x
        for k in range(times.size - 1):
            x = _advance_adaptive(x, params, cfg, times[k], times[k + 1], rng, p)
            paths[p, k + 1] = x
    return PathEnsemble(times=times, paths=paths, params=params, seed=cfg.seed)


# ---------------------------------------------------------------------------
# lockstep batch simulation (internal plumbing for the experiment drivers)
# ---------------------------------------------------------------------------


def _advance_row(x, params, dt, rng, guard, depth, max_depth, path, t):
    """Adaptive fallback for a single row that rejected the lockstep proposal."""
    if depth > max_depth:
        raise StiffFailureError(path, t, dt)
    g = rng.standard_normal(x.size)
    out = _raw_step(x, params, dt, g)
    if _rows_ok(out, params.positive, guard):
        return out
    half = 0.5 * dt
    out = _advance_row(x, params, half, rng, guard, depth + 1, max_depth, path, t)
    return _advance_row(out, params, half, rng, guard, depth + 1, max_depth, path, t + half)


def batch_paths(
    X0: np.ndarray,
    params: ModelParams,
    times: np.ndarray,
    dt_max: float,
    rng: np.random.Generator,
    collision_guard: float = 1e-6,
    max_halvings: int = 40,
) -> np.ndarray:
    """All-paths-in-lockstep Euler driver sharing a single RNG.

    ``X0`` is (n_paths, n) (or (n,), broadcast to one path).  Rows whose
    proposal violates the guard fall back to per-row halved substeps with
    fresh draws.  Returns (n_paths, n_times, n).
    """
    X = np.atleast_2d(np.asarray(X0, dtype=float)).copy()
    times = np.asarray(times, dtype=float)
    out = np.empty((X.shape[0], times.size, X.shape[1]))
    out[:, 0] = X
    for k in range(times.size - 1):
        t, t1 = times[k], times[k + 1]
        while t < t1 - 1e-15 * max(1.0, abs(t1)):
            dt = min(dt_max, t1 - t)
            G = rng.standard_normal(X.shape)
            prop = _raw_step(X, params, dt, G)
            ok = _rows_ok(prop, params.positive, collision_guard)
            if not np.all(ok):
                for i in np.flatnonzero(~ok):
                    prop[i] = _advance_row(
                        X[i], params, dt, rng, collision_guard, 1, max_halvings, i, t
                    )
            X = prop
            t += dt
        out[:, k + 1] = X
    return out


def batch_endpoints(
    X0: np.ndarray,
    params: ModelParams,
    t: float,
    dt_max: float,
    rng: np.random.Generator,
    collision_guard: float = 1e-6,
    max_halvings: int = 40,
) -> np.ndarray:
    """Endpoint-only variant of :func:`batch_paths`."""
    if t == 0.0:
        return np.atleast_2d(np.asarray(X0, dtype=float)).copy()
    return batch_paths(
        X0, params, np.array([0.0, t]), dt_max, rng, collision_guard, max_halvings
    )[:, -1]
