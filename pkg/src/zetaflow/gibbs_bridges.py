"""Bridge sampling and Gibbs block resampling for ordered line ensembles.

Brownian bridges are drawn exactly on a grid by sequential conditioning
(the conditional one-step law given the terminal pin is Gaussian with mean
``v + dt/(b-s) (y-v)`` and variance ``dt (b-u)/(b-s)``); exponential bridges
exponentiate a Brownian bridge between log endpoints.  Non-intersection
between an upper and a lower barrier is imposed by rejection on grid points
only: the continuous-time conditioning is approximated by refining the grid,
which is exposed to the caller.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .sde_core import InvalidConfigurationError, PathEnsemble

__all__ = [
    "BridgeSpec",
    "BoundaryData",
    "AvoidingBridgeSample",
    "AcceptanceStarvationError",
    "sample_brownian_bridge",
    "sample_exp_bridge",
    "sample_avoiding_bridges",
    "gibbs_resample",
]

# below this acceptance rate the rejection sampler declares starvation
ACCEPTANCE_FLOOR = 1e-4


class AcceptanceStarvationError(RuntimeError):
    def __init__(self, attempts: int, acceptance_rate: float):
        self.attempts = attempts
        self.acceptance_rate = acceptance_rate
        super().__init__(
            f"no accepted configuration in {attempts} attempts "
            f"(acceptance rate < {acceptance_rate:.2e})"
        )


@dataclass(frozen=True)
class BridgeSpec:
    """One bridge: endpoints (a, x) -> (b, y) sampled on ``grid``."""

    a: float
    b: float
    x: float
    y: float
    grid: np.ndarray

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=float)
        object.__setattr__(self, "grid", grid)
        if not self.a < self.b:
            raise InvalidConfigurationError("need a < b")
        if grid.size < 2 or grid[0] != self.a or grid[-1] != self.b:
            raise InvalidConfigurationError("grid must run from a to b")
        if np.any(np.diff(grid) <= 0):
            raise InvalidConfigurationError("grid must be strictly increasing")


@dataclass(frozen=True)
class BoundaryData:
    """Endpoints and barriers for k ordered bridges on a common grid.

    ``upper``/``lower`` are tabulated on the grid; +-inf entries disable the
    corresponding barrier.
    """

    x_vec: np.ndarray
    y_vec: np.ndarray
    grid: np.ndarray
    upper: np.ndarray
    lower: np.ndarray

    def __post_init__(self):
        xv = np.asarray(self.x_vec, dtype=float)
        yv = np.asarray(self.y_vec, dtype=float)
        grid = np.asarray(self.grid, dtype=float)
        up = np.asarray(self.upper, dtype=float)
        lo = np.asarray(self.lower, dtype=float)
        for name, arr in (("x_vec", xv), ("y_vec", yv)):
            if arr.size > 1 and np.any(np.diff(arr) >= 0):
                raise InvalidConfigurationError(f"{name} must be strictly decreasing")
        if xv.size != yv.size:
            raise InvalidConfigurationError("endpoint vectors must match in length")
        if grid.size < 2 or np.any(np.diff(grid) <= 0):
            raise InvalidConfigurationError("grid must be strictly increasing")
        if up.shape != grid.shape or lo.shape != grid.shape:
            raise InvalidConfigurationError("barriers must be tabulated on the grid")
        if not np.all(up > lo):
            raise InvalidConfigurationError("upper barrier must exceed lower")
        if not (up[0] > xv[0] and up[-1] > yv[0] and lo[0] < xv[-1] and lo[-1] < yv[-1]):
            raise InvalidConfigurationError("barriers must clear the endpoints")
        for name, arr in (("x_vec", xv), ("y_vec", yv), ("grid", grid),
                          ("upper", up), ("lower", lo)):
            object.__setattr__(self, name, arr)

    @property
    def k(self) -> int:
        return self.x_vec.size


@dataclass
class AvoidingBridgeSample:
    paths: np.ndarray  # (k, n_grid)
    attempts: int
    acceptance_rate: float


def _bridges_on_grid(grid, x, y, rng) -> np.ndarray:
    """k independent Brownian bridges, exact at all grid points; (k, n_grid)."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    n = grid.size
    b = grid[-1]
    out = np.empty((x.size, n))
    out[:, 0] = x
    v = x.copy()
    for j in range(1, n - 1):
        s, u = grid[j - 1], grid[j]
        mean = v + (u - s) / (b - s) * (y - v)
        var = (u - s) * (b - u) / (b - s)
        v = mean + np.sqrt(var) * rng.standard_normal(x.size)
        out[:, j] = v
    out[:, -1] = y
    return out


def sample_brownian_bridge(spec: BridgeSpec, rng: np.random.Generator) -> np.ndarray:
    """Exact Brownian bridge on the grid; endpoints are hit exactly."""
    return _bridges_on_grid(spec.grid, spec.x, spec.y, rng)[0]


def sample_exp_bridge(spec: BridgeSpec, rng: np.random.Generator) -> np.ndarray:
    """Exponential of a Brownian bridge between the log endpoints."""
    if spec.x <= 0 or spec.y <= 0:
        raise InvalidConfigurationError("exponential bridge needs positive endpoints")
    log_path = _bridges_on_grid(spec.grid, np.log(spec.x), np.log(spec.y), rng)[0]
    return np.exp(log_path)


def sample_avoiding_bridges(
    bd: BoundaryData,
    rng: np.random.Generator,
    max_attempts: int = int(1 / ACCEPTANCE_FLOOR),
) -> AvoidingBridgeSample:
    """Rejection sampling of k bridges strictly ordered between the barriers.

    A draw is accepted iff at every grid point
    upper > path_1 > ... > path_k > lower (all strict).
    """
    if max_attempts < 1:
        raise InvalidConfigurationError("max_attempts must be positive")
    for attempt in range(1, max_attempts + 1):
        paths = _bridges_on_grid(bd.grid, bd.x_vec, bd.y_vec, rng)
        stacked = np.vstack([bd.upper[None, :], paths, bd.lower[None, :]])
        if np.all(stacked[:-1] > stacked[1:]):
            return AvoidingBridgeSample(
                paths=paths, attempts=attempt, acceptance_rate=1.0 / attempt
            )
    raise AcceptanceStarvationError(max_attempts, 1.0 / max_attempts)


def gibbs_resample(
    ensemble: PathEnsemble,
    index_lo: int,
    k: int,
    a: float,
    b: float,
    rng: np.random.Generator,
    max_attempts: int = int(1 / ACCEPTANCE_FLOOR),
) -> PathEnsemble:
    """Resample lines [index_lo, index_lo+k) of every path on the window (a, b).

    The ensemble must be in log coordinates (line 0 on top).  Boundary data is
    read off the ensemble itself: endpoint values at times a and b, the line
    above as the upper barrier and the line below as the lower barrier, with
    +-inf beyond the extreme lines.  Everything outside the block is
    unchanged; a and b must be grid times.
    """
    times = ensemble.times
    n_lines = ensemble.n_particles
    if not (0 <= index_lo and index_lo + k <= n_lines and k >= 1):
        raise InvalidConfigurationError("line block out of range")
    ia = int(np.argmin(np.abs(times - a)))
    ib = int(np.argmin(np.abs(times - b)))
    if abs(times[ia] - a) > 1e-12 * max(1.0, abs(a)) or abs(times[ib] - b) > 1e-12 * max(1.0, abs(b)):
        raise InvalidConfigurationError("a and b must be ensemble grid times")
    if not ia < ib:
        raise InvalidConfigurationError("need a < b inside the time range")

    grid = times[ia : ib + 1]
    new_paths = ensemble.paths.copy()
    for p in range(ensemble.n_paths):
        block = ensemble.paths[p]
        upper = (
            block[ia : ib + 1, index_lo - 1]
            if index_lo > 0
            else np.full(grid.size, np.inf)
        )
        lower = (
            block[ia : ib + 1, index_lo + k]
            if index_lo + k < n_lines
            else np.full(grid.size, -np.inf)
        )
        bd = BoundaryData(
            x_vec=block[ia, index_lo : index_lo + k],
            y_vec=block[ib, index_lo : index_lo + k],
            grid=grid,
            upper=upper,
            lower=lower,
        )
        res = sample_avoiding_bridges(bd, rng, max_attempts)
        new_paths[p, ia + 1 : ib, index_lo : index_lo + k] = res.paths[:, 1:-1].T
    return PathEnsemble(
        times=times, paths=new_paths, params=ensemble.params, seed=ensemble.seed
    )
