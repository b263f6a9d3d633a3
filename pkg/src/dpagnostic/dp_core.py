"""Randomness, budget accounting, and the Laplace and exponential mechanisms.

Every mechanism takes an explicit ``numpy.random.Generator``; nothing here
touches global random state.  ``epsilon = math.inf`` is accepted everywhere as
the noiseless testing switch: Laplace noise becomes zero and the exponential
mechanism picks uniformly among the minimum-score candidates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from .errors import BudgetError, ParameterError

# Relative slack when comparing accumulated float spends against a budget, so
# that e.g. 4T spends of eps/(4T) fit exactly into eps.
_BUDGET_RTOL = 1e-9


def make_rng(seed, *spawn_key: int) -> np.random.Generator:
    """Generator for ``(seed, *spawn_key)``, independent of execution order."""
    ss = np.random.SeedSequence(entropy=seed, spawn_key=tuple(int(k) for k in spawn_key))
    return np.random.Generator(np.random.PCG64(ss))


class PrivacyBudget:
    """Basic-composition accountant for pure epsilon-DP.

    >>> b = PrivacyBudget(1.0)
    >>> b.spend(0.25); b.spend(0.75); b.remaining
    0.0
    """

    def __init__(self, epsilon: float):
        epsilon = float(epsilon)
        if not epsilon > 0:
            raise ParameterError(f"epsilon must be positive, got {epsilon}")
        self.epsilon = epsilon
        self.remaining = epsilon
        self.spent = 0.0

    def spend(self, epsilon: float) -> None:
        epsilon = float(epsilon)
        if epsilon < 0 or math.isnan(epsilon):
            raise ParameterError(f"cannot spend a negative epsilon ({epsilon})")
        if math.isinf(self.epsilon):
            self.spent += epsilon
            return
        if epsilon > self.remaining + _BUDGET_RTOL * self.epsilon:
            raise BudgetError(
                f"requested epsilon={epsilon:.6g} but only {self.remaining:.6g} "
                f"of {self.epsilon:.6g} remains"
            )
        self.spent += epsilon
        self.remaining = max(0.0, self.remaining - epsilon)

    def allocate(self, epsilon: float) -> "PrivacyBudget":
        """Spend ``epsilon`` here and hand it out as a separate sub-budget."""
        self.spend(epsilon)
        return PrivacyBudget(epsilon)

    def __repr__(self):
        return f"PrivacyBudget(epsilon={self.epsilon!r}, remaining={self.remaining!r})"


@dataclass(frozen=True)
class SensitivitySpec:
    delta: float

    def __post_init__(self):
        if not self.delta >= 0:
            raise ParameterError(f"sensitivity must be nonnegative, got {self.delta}")


@dataclass(frozen=True)
class MechanismOutcome:
    index: int
    probability: float


SensitivityLike = Union[SensitivitySpec, float, int]


def _delta(sens: SensitivityLike) -> float:
    if isinstance(sens, SensitivitySpec):
        return float(sens.delta)
    return SensitivitySpec(float(sens)).delta


def laplace_sample(scale: float, rng: np.random.Generator) -> float:
    """One Laplace(0, scale) draw by inverting the CDF of a single uniform."""
    if not scale > 0:
        raise ParameterError(f"Laplace scale must be positive, got {scale}")
    u = rng.random()
    while u == 0.0:  # probability 2**-53
        u = rng.random()
    if u < 0.5:
        return scale * math.log(2.0 * u)
    return -scale * math.log(2.0 * (1.0 - u))


def laplace_mechanism(
    value: float,
    sens: SensitivityLike,
    epsilon: float,
    rng: np.random.Generator,
    budget: PrivacyBudget | None = None,
) -> float:
    """Release ``value + Lap(delta/epsilon)``, charging ``epsilon`` to ``budget``."""
    delta = _delta(sens)
    if not epsilon > 0:
        raise ParameterError(f"epsilon must be positive, got {epsilon}")
    if budget is not None:
        budget.spend(epsilon)
    scale = delta / epsilon
    if scale == 0.0:
        return float(value)
    return float(value) + laplace_sample(scale, rng)


def exp_mech_probabilities(
    scores: Sequence[float] | np.ndarray, sens: SensitivityLike, epsilon: float
) -> np.ndarray:
    """Exact output distribution of the exponential mechanism (lower score is better).

    p_i is proportional to ``exp(-epsilon * score_i / (2 * delta))``, evaluated
    after subtracting the minimum score.
    """
    scores = np.asarray(scores, dtype=float)
    if scores.ndim != 1 or scores.size == 0:
        raise ParameterError("exponential mechanism needs a nonempty 1-d score vector")
    if np.isnan(scores).any():
        raise ParameterError("scores contain NaN")
    delta = _delta(sens)
    if epsilon < 0:
        raise ParameterError(f"epsilon must be nonnegative, got {epsilon}")
    shifted = scores - scores.min()
    k = scores.size
    if epsilon == 0 or not shifted.any():
        return np.full(k, 1.0 / k)
    if delta == 0:
        raise ParameterError("sensitivity 0 is only valid when all scores are equal")
    if math.isinf(epsilon):
        best = shifted == 0.0
        return best / best.sum()
    logw = -epsilon * shifted / (2.0 * delta)
    w = np.exp(logw)
    return w / w.sum()


def sample_index(probs: np.ndarray, rng: np.random.Generator) -> int:
    """Inverse-CDF draw from a normalized probability vector."""
    cdf = np.cumsum(probs)
    u = rng.random() * cdf[-1]
    idx = int(np.searchsorted(cdf, u, side="right"))
    if idx >= probs.size:
        idx = probs.size - 1
    while probs[idx] == 0.0:  # land on a zero-width step only via rounding
        idx -= 1
    return idx


def exponential_mechanism(
    scores: Sequence[float] | np.ndarray,
    sens: SensitivityLike,
    epsilon: float,
    rng: np.random.Generator,
    budget: PrivacyBudget | None = None,
) -> MechanismOutcome:
    probs = exp_mech_probabilities(scores, sens, epsilon)
    if budget is not None:
        budget.spend(epsilon)
    idx = sample_index(probs, rng)
    return MechanismOutcome(idx, float(probs[idx]))
