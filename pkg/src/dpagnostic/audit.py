"""Exact and Monte Carlo privacy audits over swap-neighbor dataset pairs."""

from __future__ import annotations

import itertools
import math
import warnings
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from typing import Callable, Hashable, Iterable, Sequence

import numpy as np

from .dp_core import laplace_mechanism, make_rng
from .errors import ParameterError
from .learners import LearnParams
from .model import UserDataset
from .threshold import learn_threshold

EXACT = "exact"
EMPIRICAL = "empirical"
MIN_TRIALS = 10_000
MIN_COUNT = 10
# trials per generator; fixed so results do not depend on the worker count
CHUNK = 10_000
_SUM_ATOL = 1e-12


class LowCoverageWarning(UserWarning):
    """Too few outputs were seen often enough on both sides to compare."""


@dataclass
class AuditReport:
    epsilon_declared: float
    epsilon_measured: float
    method: str
    trials: int
    worst_pair: str
    violation: bool = False
    outputs_compared: int = 0
    slack: float = 0.0
    note: str = ""

    CSV_FIELDS = (
        "method", "epsilon_declared", "epsilon_measured", "trials",
        "worst_pair", "violation", "outputs_compared", "slack", "passed",
    )

    @property
    def passed(self) -> bool:
        return not self.violation and self.epsilon_measured <= self.epsilon_declared + self.slack

    def _values(self) -> dict:
        d = asdict(self)
        d["passed"] = self.passed
        return d

    def to_text(self) -> str:
        d = self._values()
        lines = [f"{k}: {_fmt(d[k])}" for k in self.CSV_FIELDS]
        if self.note:
            lines.append(f"note: {self.note}")
        return "\n".join(lines) + "\n"

    @classmethod
    def csv_header(cls) -> str:
        return ",".join(cls.CSV_FIELDS)

    def csv_row(self) -> str:
        d = self._values()
        return ",".join(_fmt(d[k]) for k in self.CSV_FIELDS)


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v) if math.isfinite(v) else ("inf" if v > 0 else "-inf")
    return str(v)


# --------------------------------------------------------------------------
# exact
# --------------------------------------------------------------------------

def _check_distribution(p: np.ndarray) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if p.ndim != 1 or (p < 0).any() or abs(p.sum() - 1.0) > _SUM_ATOL * max(1, p.size):
        raise ParameterError("oracle must return a probability vector summing to 1")
    return p


def max_log_ratio(p: np.ndarray, q: np.ndarray) -> tuple[float, bool]:
    """``max_i |log p_i - log q_i|`` with 0/0 as ratio 1; support mismatch is a violation."""
    if p.shape != q.shape:
        raise ParameterError("probability vectors have different lengths")
    both = (p > 0) & (q > 0)
    if ((p > 0) != (q > 0)).any():
        return math.inf, True
    if not both.any():
        return 0.0, False
    return float(np.abs(np.log(p[both]) - np.log(q[both])).max()), False


def exact_dp_check(oracle: Callable[[UserDataset], np.ndarray], neighbor_pairs: Iterable,
                   epsilon: float, labels: Sequence[str] | None = None) -> AuditReport:
    """Worst exact log-ratio of ``oracle`` outputs across the given neighbor pairs."""
    cache: dict = {}

    def probs(z):
        key = (z.xs.tobytes(), z.ys.tobytes(), z.xs.shape)
        if key not in cache:
            cache[key] = _check_distribution(oracle(z))
        return cache[key]

    worst, worst_id, count, violation = 0.0, "none", 0, False
    for i, (z, z2) in enumerate(neighbor_pairs):
        r, bad = max_log_ratio(probs(z), probs(z2))
        count += 1
        if bad:
            violation = True
        if r > worst or (bad and worst_id == "none"):
            worst = r
            worst_id = labels[i] if labels is not None else str(i)
    return AuditReport(epsilon, worst, EXACT, count, worst_id, violation, slack=1e-9,
                       note="exact probabilities; trials counts neighbor pairs")


def all_datasets(domain_size: int, n: int, m: int = 1) -> Iterable[UserDataset]:
    """Every dataset of ``n`` users with ``m`` labeled points each (ordered)."""
    cells = [(x, y) for x in range(1, domain_size + 1) for y in (0, 1)]
    users = list(itertools.product(cells, repeat=m))
    for combo in itertools.product(users, repeat=n):
        xs = [[c[0] for c in u] for u in combo]
        ys = [[c[1] for c in u] for u in combo]
        yield UserDataset(xs, ys, domain_size)


def swap_neighbor_pairs(domain_size: int, n: int, m: int = 1):
    """All ordered swap pairs ``(z, z')`` differing in exactly one user's block."""
    cells = [(x, y) for x in range(1, domain_size + 1) for y in (0, 1)]
    users = list(itertools.product(cells, repeat=m))
    for z in all_datasets(domain_size, n, m):
        for i in range(n):
            current = tuple(zip(z.xs[i].tolist(), z.ys[i].tolist()))
            for u in users:
                if u == current:
                    continue
                yield z, z.replace_user(i, [c[0] for c in u], [c[1] for c in u])


# --------------------------------------------------------------------------
# empirical
# --------------------------------------------------------------------------

Sampler = Callable[[UserDataset, np.random.Generator], Hashable]


def _run_chunk(args) -> Counter:
    sampler, dataset, seed, side, chunk, size = args
    rng = make_rng(seed, side, chunk)
    return Counter(sampler(dataset, rng) for _ in range(size))


def sample_counts(sampler: Sampler, dataset, trials: int, seed: int, side: int = 0,
                  workers: int = 1) -> Counter:
    """Output frequencies over ``trials`` runs, merged by summation."""
    jobs = [
        (sampler, dataset, seed, side, c, min(CHUNK, trials - c * CHUNK))
        for c in range(math.ceil(trials / CHUNK))
    ]
    total = Counter()
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for part in pool.map(_run_chunk, jobs):
                total.update(part)
    else:
        for job in jobs:
            total.update(_run_chunk(job))
    return total


def log_ratio_estimate(f: Counter, g: Counter, min_count: int = MIN_COUNT) -> tuple[float, Hashable, int]:
    """Plug-in ``max |log(f/g)|`` over outputs seen ``min_count`` times on both sides."""
    nf, ng = sum(f.values()), sum(g.values())
    best, arg, compared = 0.0, None, 0
    for key in sorted(set(f) & set(g), key=repr):
        if f[key] < min_count or g[key] < min_count:
            continue
        compared += 1
        r = abs(math.log((f[key] / nf) / (g[key] / ng)))
        if r > best:
            best, arg = r, key
    return best, arg, compared


def empirical_dp_estimate(sampler: Sampler, pair, epsilon: float, trials: int, seed: int = 0,
                          workers: int = 1, min_count: int = MIN_COUNT,
                          slack: float | None = None) -> AuditReport:
    """Monte Carlo estimate of the privacy loss on one neighbor pair.

    An estimate, not a certificate: no confidence correction is applied.
    ``passed`` allows ``slack`` above epsilon for sampling error (default 10%).
    """
    if trials < MIN_TRIALS:
        raise ParameterError(f"empirical audits need at least {MIN_TRIALS} trials, got {trials}")
    z, z2 = pair
    f = sample_counts(sampler, z, trials, seed, 0, workers)
    g = sample_counts(sampler, z2, trials, seed, 1, workers)
    est, arg, compared = log_ratio_estimate(f, g, min_count)
    note = "plug-in estimate with a minimum-count filter, not a certificate"
    if compared < 2:
        warnings.warn(
            f"only {compared} output(s) reached {min_count} hits on both sides", LowCoverageWarning
        )
        note += "; low coverage"
    return AuditReport(epsilon, est, EMPIRICAL, trials, f"output={arg!r}",
                       outputs_compared=compared,
                       slack=0.1 * epsilon if slack is None else slack, note=note)


# --------------------------------------------------------------------------
# samplers (module-level classes so they pickle for worker processes)
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class LaplaceBins:
    """Laplace mechanism on a scalar, reported as one of ``bins`` cells.

    ``bins - 2`` equal cells cover ``[lo, hi]``; the two tails are one cell each.
    """

    epsilon: float
    sensitivity: float = 1.0
    bins: int = 64
    lo: float = 0.0
    hi: float = 1.0

    def __call__(self, value: float, rng: np.random.Generator) -> int:
        out = laplace_mechanism(value, self.sensitivity, self.epsilon, rng)
        if out < self.lo:
            return 0
        if out >= self.hi:
            return self.bins - 1
        inner = self.bins - 2
        return 1 + min(inner - 1, int((out - self.lo) / (self.hi - self.lo) * inner))


@dataclass(frozen=True)
class UniformOutput:
    """A mechanism that ignores its input: every output equally likely."""

    k: int = 8

    def __call__(self, _data, rng: np.random.Generator) -> int:
        return int(rng.integers(self.k))


@dataclass(frozen=True)
class ThresholdLearnerSampler:
    params: LearnParams

    def __call__(self, z: UserDataset, rng: np.random.Generator) -> int:
        return learn_threshold(z, self.params, rng).threshold
