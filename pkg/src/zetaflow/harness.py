"""Statistical test battery, report records, and experiment configuration.

Every experiment emits ``TestReport`` rows with a uniform pass convention:
``passed == (value <= threshold)``.  Informational rows (convergence tables,
diagnostics that are explicitly not pass/fail) carry an infinite threshold.
"""

from __future__ import annotations

import json
import os
import time
from dataclasses import dataclass, field

import numpy as np
from scipy import stats as sps

__all__ = [
    "ks_two_sample",
    "ks_one_sample",
    "ks_critical_two_sample",
    "ks_critical_one_sample",
    "realized_covariation",
    "bootstrap_increase_upper",
    "TestReport",
    "ExperimentConfig",
    "worker_count",
]

THREADS_ENV = "ZETAFLOW_THREADS"


def worker_count() -> int:
    """Thread-count knob; the only environment variable the package reads."""
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


def ks_two_sample(a: np.ndarray, b: np.ndarray) -> tuple[float, float]:
    """Two-sample Kolmogorov-Smirnov statistic with asymptotic p-value."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    res = sps.ks_2samp(a, b, method="asymp")
    return float(res.statistic), float(res.pvalue)


def ks_one_sample(samples: np.ndarray, cdf) -> float:
    """One-sample KS statistic against a callable CDF."""
    return float(sps.kstest(np.asarray(samples, dtype=float), cdf).statistic)


def _ks_c(alpha: float) -> float:
    return float(np.sqrt(-0.5 * np.log(alpha / 2.0)))


def ks_critical_two_sample(alpha: float, n: int, m: int) -> float:
    """Asymptotic critical value of the two-sample KS statistic at level alpha."""
    return _ks_c(alpha) * np.sqrt((n + m) / (n * m))


def ks_critical_one_sample(alpha: float, n: int) -> float:
    return _ks_c(alpha) / np.sqrt(n)


def realized_covariation(a: np.ndarray, b: np.ndarray) -> complex:
    """Sum of increment products along a shared grid (bilinear, no conjugation)."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise ValueError("paths must share the grid")
    val = np.sum(np.diff(a) * np.diff(b))
    return complex(val) if np.iscomplexobj(val) else float(val)


def bootstrap_increase_upper(
    before: np.ndarray,
    after: np.ndarray,
    rng: np.random.Generator,
    n_boot: int = 2000,
    level: float = 0.95,
) -> float:
    """Lower end of the (level) bootstrap CI for E[after] - E[before].

    Paired resampling over paths.  A strictly positive return value means the
    data shows a statistically significant increase at that level.
    """
    before = np.asarray(before, dtype=float)
    after = np.asarray(after, dtype=float)
    n = before.size
    diffs = np.empty(n_boot)
    for k in range(n_boot):
        idx = rng.integers(0, n, size=n)
        diffs[k] = after[idx].mean() - before[idx].mean()
    return float(np.quantile(diffs, (1.0 - level) / 2.0))


@dataclass
class TestReport:
    """One named statistic with its threshold; passed <=> value <= threshold."""

    experiment: str
    statistic: str
    value: float
    threshold: float
    sample_sizes: tuple = ()
    seed: int = 0
    wall_time: float = 0.0
    passed: bool = field(init=False)

    def __post_init__(self):
        self.passed = bool(self.value <= self.threshold)

    def as_dict(self) -> dict:
        return {
            "experiment": self.experiment,
            "statistic": self.statistic,
            "value": self.value,
            "threshold": self.threshold,
            "pass": self.passed,
            "sample_sizes": list(self.sample_sizes),
            "seed": self.seed,
            "wall_time": self.wall_time,
        }

    def line(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        return (
            f"[{verdict}] {self.experiment}/{self.statistic}: "
            f"value={self.value:.6g} threshold={self.threshold:.6g}"
        )


@dataclass
class ExperimentConfig:
    """Validated experiment invocation: id, seed, options, output directory."""

    experiment: str
    seed: int = 0
    out_dir: str | None = None
    options: dict = field(default_factory=dict)

    @classmethod
    def from_json(cls, path: str, defaults: dict) -> "ExperimentConfig":
        with open(path) as fh:
            raw = json.load(fh)
        known = {"experiment", "seed", "out_dir", "options"}
        unknown = set(raw) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        opts = raw.get("options", {})
        bad = set(opts) - set(defaults)
        if bad:
            raise ValueError(f"unknown option keys: {sorted(bad)}")
        return cls(
            experiment=raw["experiment"],
            seed=int(raw.get("seed", 0)),
            out_dir=raw.get("out_dir"),
            options=opts,
        )


def write_report(reports: list[TestReport], out_dir: str, experiment: str) -> str:
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, f"{experiment}_report.json")
    with open(path, "w") as fh:
        json.dump([r.as_dict() for r in reports], fh, indent=2)
    return path


def write_csv(rows: list[dict], out_dir: str, name: str) -> str:
    """One CSV per data product with stable field names."""
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, f"{name}.csv")
    if rows:
        keys = list(rows[0].keys())
        with open(path, "w") as fh:
            fh.write(",".join(keys) + "\n")
            for row in rows:
                fh.write(",".join(str(row[k]) for k in keys) + "\n")
    else:
        open(path, "w").close()
    return path


class Stopwatch:
    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.t0
        return False
