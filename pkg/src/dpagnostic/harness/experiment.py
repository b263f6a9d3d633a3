"""Trial sweeps with exact population oracles and deterministic CSV output."""

from __future__ import annotations

import csv
import io
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Callable, Iterable

import numpy as np

from ..dp_core import make_rng
from ..learners import LearnParams, learn_item, learn_user, private_min_error
from ..model import (
    HypothesisClass,
    best_population_error,
    item_error_counts,
    population_error,
    sample_dataset,
)
from ..threshold import learn_threshold
from .config import ExperimentConfig, SweepPoint, build_class, generate_distribution

CSV_COLUMNS = (
    "row_type", "sweep_index", "trial", "learner", "n", "m", "alpha", "beta", "epsilon",
    "mode", "output", "empirical_excess", "population_excess", "success", "success_rate",
)
TRIAL = "trial"
AGGREGATE = "aggregate"


@dataclass(frozen=True)
class TrialRecord:
    sweep_index: int
    trial: int
    point: SweepPoint
    output: str
    empirical_excess: float
    population_excess: float
    success: bool
    wall_time: float = 0.0  # kept off the CSV so reruns stay byte-identical


def run_trial(config: ExperimentConfig, point: SweepPoint, trial: int) -> TrialRecord:
    """One independent trial; its generator depends only on ``(seed, sweep index, trial)``."""
    start = time.perf_counter()
    rng = make_rng(config.seed, point.index, trial)
    D = generate_distribution(config.distribution, config.domain_size)
    concepts = build_class(config.concept_class, config.domain_size)
    z = sample_dataset(D, point.n, point.m, rng)
    params = LearnParams(point.alpha, config.beta, point.epsilon, config.constants_mode, config.slack_scale)
    eta = best_population_error(D, concepts)
    errs = item_error_counts(z, concepts)
    eta_z = int(errs.min()) / (z.n * z.m)

    if config.learner == "min_error":
        est = private_min_error(z, concepts, point.epsilon, point.alpha, config.beta, rng,
                                constants=params.constants)
        output = f"eta_hat={est.eta_hat!r}"
        emp, pop = abs(est.eta_hat - eta_z), abs(est.eta_hat - eta)
    else:
        if config.learner == "item":
            h = learn_item(z, concepts, None, params, rng)
        elif config.learner == "user":
            h = learn_user(z, concepts, None, params, rng)
        else:
            h = learn_threshold(z, params, rng)
        output = h.id
        emp = int(item_error_counts(z, HypothesisClass([h]))[0]) / (z.n * z.m) - eta_z
        pop = population_error(D, h) - eta
    return TrialRecord(point.index, trial, point, output, emp, pop, bool(pop <= point.alpha),
                       time.perf_counter() - start)


def _trial_job(args) -> TrialRecord:
    return run_trial(*args)


def run_trials(config: ExperimentConfig, parallel: int = 1) -> list[TrialRecord]:
    jobs = [(config, p, t) for p in config.points() for t in range(config.trials)]
    if parallel > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=parallel) as pool:
            records = list(pool.map(_trial_job, jobs, chunksize=max(1, len(jobs) // (8 * parallel))))
    else:
        records = [_trial_job(j) for j in jobs]
    return sorted(records, key=lambda r: (r.sweep_index, r.trial))


def _num(v: float) -> str:
    return repr(float(v))


def _base_row(config: ExperimentConfig, p: SweepPoint) -> dict:
    return {
        "sweep_index": p.index, "learner": config.learner, "n": p.n, "m": p.m,
        "alpha": _num(p.alpha), "beta": _num(config.beta), "epsilon": _num(p.epsilon),
        "mode": config.constants_mode,
    }


def rows(config: ExperimentConfig, records: Iterable[TrialRecord]) -> list[dict]:
    """Trial rows followed, per sweep point, by one aggregate row."""
    out = []
    by_point: dict[int, list[TrialRecord]] = {}
    for r in records:
        by_point.setdefault(r.sweep_index, []).append(r)
    for p in config.points():
        recs = by_point.get(p.index, [])
        for r in recs:
            row = _base_row(config, p)
            row.update(row_type=TRIAL, trial=r.trial, output=r.output,
                       empirical_excess=_num(r.empirical_excess),
                       population_excess=_num(r.population_excess),
                       success=int(r.success), success_rate="")
            out.append(row)
        if recs:
            rate = sum(r.success for r in recs) / len(recs)
            row = _base_row(config, p)
            row.update(row_type=AGGREGATE, trial=len(recs), output="",
                       empirical_excess=_num(np.mean([r.empirical_excess for r in recs])),
                       population_excess=_num(np.mean([r.population_excess for r in recs])),
                       success="", success_rate=_num(rate))
            out.append(row)
    return out


def to_csv(table: list[dict]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
    writer.writeheader()
    writer.writerows(table)
    return buf.getvalue()


def run_experiment(config: ExperimentConfig, parallel: int = 1) -> str:
    """Full sweep as CSV text (header first, UTF-8 safe)."""
    return to_csv(rows(config, run_trials(config, parallel)))


def success_rate(config: ExperimentConfig, parallel: int = 1) -> float:
    recs = run_trials(config, parallel)
    return sum(r.success for r in recs) / len(recs)


def exponential_search(success: Callable[[int], float], n0: int, target: float,
                       n_max: int = 1 << 20, refine: int = 4) -> tuple[int, dict[int, float]]:
    """Smallest ``n`` with ``success(n) >= target``: double from ``n0``, then bisect.

    Bisection runs ``refine`` steps inside the final doubling bracket.  Returns
    the answer and every evaluated ``n`` with its success rate.
    """
    seen: dict[int, float] = {}

    def f(n: int) -> float:
        if n not in seen:
            seen[n] = success(n)
        return seen[n]

    hi = n0
    while f(hi) < target:
        if hi >= n_max:
            raise RuntimeError(f"success never reached {target} up to n = {n_max}")
        hi *= 2
    if hi == n0:
        return hi, seen
    lo = hi // 2
    for _ in range(refine):
        if hi - lo <= 1:
            break
        mid = (lo + hi) // 2
        if f(mid) >= target:
            hi = mid
        else:
            lo = mid
    return hi, seen
