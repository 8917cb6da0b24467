"""Seeded Monte Carlo experiment driver.

A config names a preset, a grid of (n, m) cells, a value distribution, and a
trial count. Every trial runs on its own stream derived from (master_seed,
cell_index, trial), so results are a pure function of the config: the same
CSV bytes come out at any thread count, and any single trial can be replayed
in isolation.

Preset success criteria:
  ef-sweep          allocation exists and is envy-free
  prop-sweep        allocation exists and is proportional
  efx-sweep         allocation exists and is EFX
  assign-threshold  greedy assignment found (statistic: max_t Y_t / m)
  wormald           statistic = scaled chain-vs-ODE deviation, success <= 0.02
  lemma4-ks         one KS statistic per cell between generative and real
                    first-pick values, success (all-or-none) iff KS <= 0.01
"""

from __future__ import annotations

import csv
import io
import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, fields, replace

import numpy as np

from . import allocators
from .assignment import greedy_assignment, simulate_markov, trajectory_deviation
from .distributions import Distribution, parse_distribution, sample_conditional_max
from .model import fairness_report, sample_instance, sample_profile
from .rng import RngStream, derive_seed


class ConfigError(ValueError):
    """Invalid configuration; `key` names the offending field."""

    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    n_values: tuple[int, ...]
    trials: int
    master_seed: int
    m_values: tuple[int, ...] | None = None
    ratio_values: tuple[float, ...] | None = None
    distribution: str = "uniform"
    algorithm: str | None = None
    threads: int = 1
    out_path: str | None = None

    def __post_init__(self):
        if self.experiment not in PRESETS:
            raise ConfigError("experiment", f"unknown preset {self.experiment!r}")
        if (self.m_values is None) == (self.ratio_values is None):
            raise ConfigError("m_values", "exactly one of m_values / ratio_values required")
        if not self.n_values or any(n < 1 for n in self.n_values):
            raise ConfigError("n_values", "need a nonempty list of counts >= 1")
        if self.m_values is not None and any(m < 1 for m in self.m_values):
            raise ConfigError("m_values", "item counts must be >= 1")
        if self.ratio_values is not None and any(r <= 0 for r in self.ratio_values):
            raise ConfigError("ratio_values", "ratios must be positive")
        if self.trials < 1:
            raise ConfigError("trials", "need trials >= 1")
        if self.threads < 1:
            raise ConfigError("threads", "need threads >= 1")
        preset = PRESETS[self.experiment]
        if self.algorithm is not None:
            if not preset.takes_allocator:
                raise ConfigError("algorithm", f"preset {self.experiment!r} has a fixed algorithm")
            if self.algorithm not in ALLOCATORS:
                raise ConfigError("algorithm", f"unknown allocator {self.algorithm!r}")
        try:
            parse_distribution(self.distribution)
        except ValueError as e:
            raise ConfigError("distribution", str(e)) from e

    def cells(self) -> list[tuple[int, int]]:
        """(n, m) grid in config order: n-major, m-axis minor."""
        out = []
        for n in self.n_values:
            if self.m_values is not None:
                out.extend((n, m) for m in self.m_values)
            else:
                out.extend((n, math.ceil(r * n)) for r in self.ratio_values)
        return out


@dataclass(frozen=True)
class TrialOutcome:
    success: bool
    statistic: float | None = None
    fallback_used: bool = False
    wall_micros: int = 0

    def __post_init__(self):
        if self.statistic is not None and not math.isfinite(self.statistic):
            raise ValueError("statistic must be finite when present")


# ---------------------------------------------------------------------------
# Allocator registry: uniform (instance, alpha) -> AllocatorResult signatures.

ALLOCATORS = {
    "rr": lambda inst, alpha: allocators.round_robin(inst)[0],
    "rr-rev": lambda inst, alpha: allocators.round_robin_reversed_last(inst)[0],
    "threshold": lambda inst, alpha: allocators.threshold_matching(
        inst, allocators.default_two_stage_tau(inst.n, alpha), range(inst.n)
    ),
    "two-stage": lambda inst, alpha: allocators.two_stage_matching(inst, alpha=alpha),
    "efx-via-ef": lambda inst, alpha: allocators.efx_via_ef(inst, alpha),
    "max-assign": lambda inst, alpha: allocators.maximum_assignment_efx(inst, alpha=alpha),
    "efx-auto": lambda inst, alpha: allocators.efx_dispatch(inst, alpha),
    "prop-auto": lambda inst, alpha: allocators.prop_dispatch(inst, alpha),
}


def _fairness_trial(flag: str):
    def trial(n: int, m: int, dist: Distribution, algorithm: str, rng: RngStream):
        inst = sample_instance(n, m, dist, rng)
        result = ALLOCATORS[algorithm](inst, dist.alpha)
        if result.allocation is None:
            return TrialOutcome(False, None, result.fallback_used), None
        ok = bool(fairness_report(inst, result.allocation).flags()[flag])
        return TrialOutcome(ok, None, result.fallback_used), None

    return trial


def _assign_trial(n: int, m: int, dist: Distribution, algorithm: str, rng: RngStream):
    profile = sample_profile(n, m, rng)
    assignment, trace = greedy_assignment(profile)
    return TrialOutcome(assignment is not None, trace.max_y() / m), None


def _wormald_trial(n: int, m: int, dist: Distribution, algorithm: str, rng: RngStream):
    dev = trajectory_deviation(simulate_markov(m, rng))
    return TrialOutcome(dev <= 0.02, dev), None


def _lemma4_trial(n: int, m: int, dist: Distribution, algorithm: str, rng: RngStream):
    # Generative side: the first pick is the max of m fresh values (the
    # closed-form entry [0, 0, 0] of the generative tensor; tests pin the two
    # bit-exactly). Real side: run round-robin on a sampled instance.
    sim = sample_conditional_max(dist, m, 1.0, rng)
    inst = sample_instance(n, m, dist, rng)
    _result, trace = allocators.round_robin(inst)
    real = trace.picks[0][3]
    return TrialOutcome(True, None), (sim, real)


def ks_statistic(a, b) -> float:
    """Two-sample Kolmogorov-Smirnov distance max|F_a - F_b|."""
    a = np.sort(np.asarray(a, dtype=np.float64))
    b = np.sort(np.asarray(b, dtype=np.float64))
    if a.size == 0 or b.size == 0:
        raise ValueError("need nonempty samples")
    grid = np.concatenate([a, b])
    fa = np.searchsorted(a, grid, side="right") / a.size
    fb = np.searchsorted(b, grid, side="right") / b.size
    return float(np.max(np.abs(fa - fb)))


def _lemma4_aggregate(outcomes, extras):
    pairs = np.asarray(extras, dtype=np.float64)
    ks = ks_statistic(pairs[:, 0], pairs[:, 1])
    successes = len(outcomes) if ks <= 0.01 else 0
    return successes, ks


@dataclass(frozen=True)
class _Preset:
    algorithm_label: str  # row label when no allocator is configurable
    takes_allocator: bool
    trial: object
    aggregate: object = None  # optional (outcomes, extras) -> (successes, mean_stat)


PRESETS = {
    "ef-sweep": _Preset("rr", True, _fairness_trial("envy_free")),
    "prop-sweep": _Preset("prop-auto", True, _fairness_trial("proportional")),
    "efx-sweep": _Preset("efx-auto", True, _fairness_trial("efx")),
    "assign-threshold": _Preset("greedy", False, _assign_trial),
    "wormald": _Preset("markov", False, _wormald_trial),
    "lemma4-ks": _Preset("rr", False, _lemma4_trial, _lemma4_aggregate),
}


def wilson_interval(successes: int, trials: int) -> tuple[float, float]:
    """95% Wilson score interval for a binomial proportion (z = 1.96)."""
    if trials < 1 or not 0 <= successes <= trials:
        raise ValueError("need 0 <= successes <= trials, trials >= 1")
    z = 1.96
    p = successes / trials
    denom = 1.0 + z * z / trials
    center = (p + z * z / (2 * trials)) / denom
    half = z * math.sqrt(p * (1.0 - p) / trials + z * z / (4.0 * trials * trials)) / denom
    return max(0.0, center - half), min(1.0, center + half)


@dataclass(frozen=True)
class CellResult:
    experiment: str
    algorithm: str
    distribution: str
    n: int
    m: int
    trials: int
    successes: int
    p_hat: float
    ci95_low: float
    ci95_high: float
    mean_stat: float | None
    fallback_count: int
    seed: int
    wall_ms: float


def _run_cell(cfg: ExperimentConfig, cell_index: int, n: int, m: int, pool) -> CellResult:
    preset = PRESETS[cfg.experiment]
    dist = parse_distribution(cfg.distribution)
    algorithm = cfg.algorithm if cfg.algorithm is not None else preset.algorithm_label

    def one(k: int):
        rng = RngStream(derive_seed(cfg.master_seed, cell_index, k))
        start = time.perf_counter_ns()
        outcome, extra = preset.trial(n, m, dist, algorithm, rng)
        micros = (time.perf_counter_ns() - start) // 1000
        return replace(outcome, wall_micros=int(micros)), extra

    results = list(pool.map(one, range(cfg.trials)))
    outcomes = [r[0] for r in results]
    successes = sum(o.success for o in outcomes)
    stats = [o.statistic for o in outcomes if o.statistic is not None]
    mean_stat = float(np.mean(stats)) if stats else None
    if preset.aggregate is not None:
        successes, mean_stat = preset.aggregate(outcomes, [r[1] for r in results])
    low, high = wilson_interval(successes, cfg.trials)
    return CellResult(
        experiment=cfg.experiment,
        algorithm=algorithm,
        distribution=cfg.distribution,
        n=n,
        m=m,
        trials=cfg.trials,
        successes=successes,
        p_hat=successes / cfg.trials,
        ci95_low=low,
        ci95_high=high,
        mean_stat=mean_stat,
        fallback_count=sum(o.fallback_used for o in outcomes),
        seed=cfg.master_seed,
        wall_ms=sum(o.wall_micros for o in outcomes) / 1000.0,
    )


def run_experiment(cfg: ExperimentConfig) -> list[CellResult]:
    """Run every cell of the config; rows come back sorted by (experiment, n, m).

    Trials fan out over a thread pool; per-trial streams are derived from
    (master_seed, cell_index, trial) with cell_index in config order, so the
    rows do not depend on the thread count.
    """
    rows = []
    with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
        for cell_index, (n, m) in enumerate(cfg.cells()):
            rows.append(_run_cell(cfg, cell_index, n, m, pool))
    rows.sort(key=lambda r: (r.experiment, r.n, r.m))
    return rows


CSV_COLUMNS = (
    "experiment", "algorithm", "distribution", "n", "m", "trials", "successes",
    "p_hat", "ci95_low", "ci95_high", "mean_stat", "fallback_count", "seed",
    "wall_ms",
)


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return f"{value:.6g}"
    return str(value)


def render_csv(rows: list[CellResult]) -> str:
    """CSV text: exact column order, LF endings, 6 significant digits."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for r in rows:
        writer.writerow([_fmt(getattr(r, c)) for c in CSV_COLUMNS])
    return buf.getvalue()


def write_csv(rows: list[CellResult], path: str | None) -> str:
    """Render rows; write to `path` when given. Returns the text either way."""
    text = render_csv(rows)
    if path is not None:
        with open(path, "w", encoding="utf-8", newline="") as f:
            f.write(text)
    return text


_CONFIG_KEYS = {f.name for f in fields(ExperimentConfig)}
_LIST_KEYS = {"n_values", "m_values", "ratio_values"}


def parse_config(path: str | None = None, overrides: dict | None = None) -> ExperimentConfig:
    """Load a JSON config file, then apply overrides field-by-field.

    Unknown keys, malformed JSON, and invariant violations raise ConfigError
    naming the offending key; file-system problems raise OSError.
    """
    raw: dict = {}
    if path is not None:
        with open(path, "r", encoding="utf-8") as f:
            try:
                raw = json.load(f)
            except json.JSONDecodeError as e:
                raise ConfigError("config", f"malformed JSON in {path}: {e}") from e
        if not isinstance(raw, dict):
            raise ConfigError("config", "top-level JSON value must be an object")
    for key, value in (overrides or {}).items():
        if value is not None:
            raw[key] = value
    for key in raw:
        if key not in _CONFIG_KEYS:
            raise ConfigError(key, "unknown config key")
    for key in ("experiment", "n_values", "trials", "master_seed"):
        if key not in raw:
            raise ConfigError(key, "missing required key")
    kwargs = {}
    for key, value in raw.items():
        if key in _LIST_KEYS and value is not None:
            if not isinstance(value, (list, tuple)) or not value:
                raise ConfigError(key, "must be a nonempty list")
            kwargs[key] = tuple(value)
        else:
            kwargs[key] = value
    for key in ("trials", "master_seed", "threads"):
        if key in kwargs and not isinstance(kwargs[key], int):
            raise ConfigError(key, "must be an integer")
    try:
        return ExperimentConfig(**kwargs)
    except TypeError as e:
        raise ConfigError("config", str(e)) from e
