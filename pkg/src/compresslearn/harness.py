"""Seeded experiment orchestration with deterministic CSV/JSON reporting.

Per-trial seeds derive from (master seed, grid index, trial index) through
a fixed splitmix-style 64-bit mix, so any trial can be reproduced in
isolation and worker scheduling cannot change results.  Output rows are
buffered and written in (grid, trial) order; wall-clock timings are kept
on the row objects but written as empty CSV cells so files are
byte-identical across runs and worker counts.
"""

from __future__ import annotations

import json
import math
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
import scipy

from . import __version__
from ._kernels import backend_name
from .compression import codec_for
from .distances import kl_gaussians, tv_1d, tv_mc
from .errors import CompressLearnError, ValidationError
from .gaussmodels import Gaussian, dist_from_json, sample
from .learners import learn_gaussian_efficient
from .lowerbound import kl_pair, make_lb_family, tv_pair_lower
from .nets import hull_contains_ball
from .utils import as_generator

EXPERIMENTS = ("scheme_roundtrip", "learn_curve", "lowerbound_audit",
               "hull_probe")
ROWS_SCHEMA = "compresslearn-rows-v1"
SUMMARY_SCHEMA = "compresslearn-summary-v1"
MANIFEST_SCHEMA = "compresslearn-run-manifest-v1"

# splitmix64 mixing constants
_MASK64 = (1 << 64) - 1
_GOLDEN_GAMMA = 0x9E3779B97F4A7C15
_MIX_MUL_1 = 0xBF58476D1CE4E5B9
_MIX_MUL_2 = 0x94D049BB133111EB


def _splitmix64(x: int) -> int:
    x = (x + _GOLDEN_GAMMA) & _MASK64
    x = ((x ^ (x >> 30)) * _MIX_MUL_1) & _MASK64
    x = ((x ^ (x >> 27)) * _MIX_MUL_2) & _MASK64
    return x ^ (x >> 31)


def derive_seed(master: int, grid_idx: int, trial_idx: int) -> int:
    """Per-trial seed: chained splitmix64 over master, grid, and trial.

    ``splitmix64(splitmix64(splitmix64(master) ^ (grid_idx+1)) ^ (trial_idx+1))``;
    stable across versions, documented so single trials can be replayed.
    """
    state = _splitmix64(master & _MASK64)
    state = _splitmix64(state ^ (grid_idx + 1))
    return _splitmix64(state ^ (trial_idx + 1))


@dataclass(frozen=True)
class ExperimentConfig:
    """What to run: experiment name, grid, trial count, master seed.

    ``grid_kind`` says what the grid values mean: accuracy targets
    (``eps``) or sample counts (``n``).  ``target`` is a distribution in
    its JSON form; ``params`` carries experiment-specific knobs
    (``n_mc``, ``d``, ``r``, ``m_family``, ``rho``, ``contamination``,
    ``junk_scale``).
    """

    experiment: str
    grid_kind: str
    grid: tuple
    trials: int
    seed: int
    scheme: Optional[str] = None
    target: Optional[dict] = None
    budget: Optional[int] = None
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ValidationError(
                f"config field 'experiment': unknown value {self.experiment!r}")
        if self.grid_kind not in ("eps", "n"):
            raise ValidationError("config field 'grid_kind': must be eps or n")
        if len(self.grid) == 0:
            raise ValidationError("config field 'grid': must be nonempty")
        object.__setattr__(self, "grid", tuple(float(g) for g in self.grid))
        if self.trials < 1:
            raise ValidationError("config field 'trials': must be >= 1")
        want_kind = {"scheme_roundtrip": "eps", "learn_curve": "n",
                     "lowerbound_audit": "eps", "hull_probe": "n"}
        if self.grid_kind != want_kind[self.experiment]:
            raise ValidationError(
                f"config field 'grid_kind': {self.experiment} sweeps "
                f"{want_kind[self.experiment]!r}")
        if self.experiment in ("scheme_roundtrip", "learn_curve"):
            if self.target is None:
                raise ValidationError(
                    f"config field 'target': required for {self.experiment}")
            dist_from_json(self.target)  # raises with details if malformed
        if self.experiment == "scheme_roundtrip" and self.scheme is None:
            raise ValidationError(
                "config field 'scheme': required for scheme_roundtrip")

    def to_dict(self) -> dict:
        return {
            "experiment": self.experiment,
            "grid_kind": self.grid_kind,
            "grid": list(self.grid),
            "trials": self.trials,
            "seed": self.seed,
            "scheme": self.scheme,
            "target": self.target,
            "budget": self.budget,
            "params": self.params,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = {"experiment", "grid_kind", "grid", "trials", "seed",
                 "scheme", "target", "budget", "params"}
        unknown = set(data) - known
        if unknown:
            raise ValidationError(f"config fields unknown: {sorted(unknown)}")
        missing = {"experiment", "grid_kind", "grid", "trials", "seed"} \
            - set(data)
        if missing:
            raise ValidationError(f"config fields missing: {sorted(missing)}")
        return cls(
            experiment=data["experiment"], grid_kind=data["grid_kind"],
            grid=tuple(data["grid"]), trials=int(data["trials"]),
            seed=int(data["seed"]), scheme=data.get("scheme"),
            target=data.get("target"), budget=data.get("budget"),
            params=dict(data.get("params", {})))


@dataclass(frozen=True)
class ExperimentRow:
    """One trial's outcome; ``tv_error``/``kl_error`` are NaN on failure."""

    experiment: str
    grid_value: float
    trial: int
    seed: int
    success: bool
    tv_error: float
    kl_error: float
    wall_ms: float


def _tv_between(p, q, n_mc: int, rng) -> float:
    if p.dim == 1:
        return tv_1d(p, q).value
    return tv_mc(p, q, n_mc, rng).value


def _trial_scheme_roundtrip(cfg: ExperimentConfig, eps: float,
                            seed: int) -> tuple:
    target = dist_from_json(cfg.target)
    codec = codec_for(cfg.scheme, target)
    rng = as_generator(seed)
    samp = sample(target, codec.spec.m_samples(eps), rng)
    outcome = codec.encode(target, samp, eps)
    if not outcome.ok:
        return False, math.nan, math.nan
    decoded = codec.decode(outcome.message, samp.points, eps)
    tv = _tv_between(decoded, target, int(cfg.params.get("n_mc", 20000)), rng)
    kl = math.nan
    if isinstance(decoded, Gaussian) and isinstance(target, Gaussian):
        kl = kl_gaussians(target, decoded)
    return True, tv, kl


def _trial_learn_curve(cfg: ExperimentConfig, n_value: float,
                       seed: int) -> tuple:
    target = dist_from_json(cfg.target)
    if not isinstance(target, Gaussian):
        raise ValidationError("learn_curve needs a Gaussian target")
    rng = as_generator(seed)
    n = 2 * (int(n_value) // 2)
    samp = sample(target, n, rng)
    try:
        est = learn_gaussian_efficient(samp)
    except CompressLearnError:
        return False, math.nan, math.nan
    tv = _tv_between(est, target, int(cfg.params.get("n_mc", 20000)), rng)
    return True, tv, kl_gaussians(target, est)


def _trial_lowerbound_audit(cfg: ExperimentConfig, eps: float,
                            seed: int) -> tuple:
    d = int(cfg.params.get("d", 18))
    r = int(cfg.params.get("r", 9))
    m_family = int(cfg.params.get("m_family", 8))
    try:
        fam = make_lb_family(d, r, eps, m_family, seed)
    except ValidationError:
        return False, math.nan, math.nan
    max_kl = 0.0
    min_sep = math.inf
    for a in range(fam.size):
        for b in range(a + 1, fam.size):
            max_kl = max(max_kl, kl_pair(fam, a, b))
            min_sep = min(min_sep, tv_pair_lower(fam, a, b))
    if fam.size < 2:
        min_sep = 0.0
    # the separation is a Frobenius certificate, clamped into TV range
    return True, min(1.0, min_sep), max_kl


def _trial_hull_probe(cfg: ExperimentConfig, n_value: float,
                      seed: int) -> tuple:
    d = int(cfg.params.get("d", 3))
    rho = float(cfg.params.get("rho", 1.0 / 20.0))
    contamination = float(cfg.params.get("contamination", 0.0))
    junk_scale = float(cfg.params.get("junk_scale", 30.0))
    rng = as_generator(seed)
    pts = rng.standard_normal((int(n_value), d))
    if contamination > 0.0:
        junk = rng.random(pts.shape[0]) < contamination
        pts[junk] = junk_scale * rng.standard_normal((int(junk.sum()), d))
    kept = pts[np.linalg.norm(pts, axis=1) <= 4.0 * math.sqrt(d)]
    if kept.shape[0] == 0:
        return False, math.nan, math.nan
    ok, _ = hull_contains_ball(kept, rho)
    return bool(ok), math.nan, math.nan


_TRIALS = {
    "scheme_roundtrip": _trial_scheme_roundtrip,
    "learn_curve": _trial_learn_curve,
    "lowerbound_audit": _trial_lowerbound_audit,
    "hull_probe": _trial_hull_probe,
}


def _run_one(args: tuple) -> tuple:
    cfg_dict, grid_idx, trial_idx = args
    cfg = ExperimentConfig.from_dict(cfg_dict)
    grid_value = cfg.grid[grid_idx]
    seed = derive_seed(cfg.seed, grid_idx, trial_idx)
    start = time.perf_counter()
    success, tv, kl = _TRIALS[cfg.experiment](cfg, grid_value, seed)
    wall_ms = 1000.0 * (time.perf_counter() - start)
    return grid_idx, trial_idx, seed, success, tv, kl, wall_ms


def run_experiment(cfg: ExperimentConfig, workers: int = 1) -> list:
    """Run every grid point x trial and return rows in deterministic order.

    ``workers > 1`` fans trials out to a process pool; results are sorted
    back into (grid, trial) order, so worker count cannot change output.
    """
    if workers < 1:
        raise ValidationError("workers must be >= 1")
    tasks = [(cfg.to_dict(), g, t)
             for g in range(len(cfg.grid)) for t in range(cfg.trials)]
    if workers == 1:
        results = [_run_one(task) for task in tasks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_one, tasks, chunksize=8))
    results.sort(key=lambda r: (r[0], r[1]))
    return [
        ExperimentRow(
            experiment=cfg.experiment, grid_value=cfg.grid[g], trial=t,
            seed=seed, success=success, tv_error=tv, kl_error=kl,
            wall_ms=wall_ms)
        for g, t, seed, success, tv, kl, wall_ms in results
    ]


@dataclass(frozen=True)
class SummaryRow:
    """Per-grid-point aggregate over trials."""

    experiment: str
    grid_value: float
    n_trials: int
    success_rate: float
    tv_mean: float
    tv_std: float
    kl_mean: float
    kl_std: float


def _nan_stats(values: np.ndarray) -> tuple:
    if np.all(np.isnan(values)):
        return math.nan, math.nan
    return float(np.nanmean(values)), float(np.nanstd(values))


def summarize(rows, grid_kind: str = "eps"):
    """Group rows by grid value; fit a log-log slope on n-sweeps.

    Returns ``(summary_rows, slope)`` where the slope is the least-squares
    gradient of ``log(tv_mean)`` against ``log(n)`` (None unless the sweep
    is over n with at least two usable points).
    """
    if not rows:
        raise ValidationError("summarize needs at least one row")
    order = []
    for row in rows:
        if row.grid_value not in order:
            order.append(row.grid_value)
    out = []
    for gv in order:
        group = [r for r in rows if r.grid_value == gv]
        tvs = np.array([r.tv_error for r in group])
        kls = np.array([r.kl_error for r in group])
        tv_mean, tv_std = _nan_stats(tvs)
        kl_mean, kl_std = _nan_stats(kls)
        out.append(SummaryRow(
            experiment=group[0].experiment, grid_value=gv,
            n_trials=len(group),
            success_rate=float(np.mean([r.success for r in group])),
            tv_mean=tv_mean, tv_std=tv_std,
            kl_mean=kl_mean, kl_std=kl_std))
    slope = None
    if grid_kind == "n":
        pts = [(s.grid_value, s.tv_mean) for s in out
               if s.tv_mean > 0.0 and math.isfinite(s.tv_mean)]
        if len(pts) >= 2:
            xs = np.log([p[0] for p in pts])
            ys = np.log([p[1] for p in pts])
            slope = float(np.polyfit(xs, ys, 1)[0])
    return out, slope


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def rows_to_csv(rows) -> str:
    lines = [f"# {ROWS_SCHEMA}",
             "experiment,grid_value,trial,seed,success,tv_error,kl_error,wall_ms"]
    for r in rows:
        # wall_ms cell stays empty: timings vary run to run and the file
        # must be byte-identical for a fixed config and seed
        lines.append(",".join([
            r.experiment, _fmt(r.grid_value), str(r.trial), str(r.seed),
            _fmt(r.success), _fmt(r.tv_error), _fmt(r.kl_error), ""]))
    return "\n".join(lines) + "\n"


def summary_to_csv(summary_rows, slope) -> str:
    lines = [f"# {SUMMARY_SCHEMA}",
             "experiment,grid_value,n_trials,success_rate,tv_mean,tv_std,"
             "kl_mean,kl_std,loglog_slope"]
    slope_cell = "" if slope is None else repr(float(slope))
    for s in summary_rows:
        lines.append(",".join([
            s.experiment, _fmt(s.grid_value), str(s.n_trials),
            _fmt(s.success_rate), _fmt(s.tv_mean), _fmt(s.tv_std),
            _fmt(s.kl_mean), _fmt(s.kl_std), slope_cell]))
    return "\n".join(lines) + "\n"


def run_manifest(cfg: ExperimentConfig) -> dict:
    return {
        "schema": MANIFEST_SCHEMA,
        "config": cfg.to_dict(),
        "seed": cfg.seed,
        "versions": {
            "package": __version__,
            "python": sys.version.split()[0],
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "kernel_backend": backend_name(),
        },
    }


def write_outputs(cfg: ExperimentConfig, rows, out_dir) -> dict:
    """Write rows.csv, summary.csv, and run-manifest.json under ``out_dir``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    summary_rows, slope = summarize(rows, cfg.grid_kind)
    paths = {
        "rows": out / "rows.csv",
        "summary": out / "summary.csv",
        "manifest": out / "run-manifest.json",
    }
    paths["rows"].write_text(rows_to_csv(rows))
    paths["summary"].write_text(summary_to_csv(summary_rows, slope))
    paths["manifest"].write_text(
        json.dumps(run_manifest(cfg), indent=2, sort_keys=True) + "\n")
    return paths
