"""Agnostic learners over finite classes: item level and user level.

Exponential-mechanism scores are kept as integer counts (``n * m`` times the
item surrogate, ``n`` times the user surrogate) so the sensitivity in count
units is exactly 2.  This is the same distribution as rates with ``2/n``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .binomial import (
    Constants,
    as_constants,
    binom_tail,
    choose_compare_threshold,
    choose_s,
    choose_t,
)
from .dp_core import PrivacyBudget, exp_mech_probabilities, exponential_mechanism, laplace_mechanism
from .errors import ParameterError
from .model import (
    HypothesisClass,
    UserDataset,
    surrogate_score_counts,
    user_error_counts,
    user_surrogate_score_counts,
)
from .representation import Representation, sample_class, trivial_representation

# count-unit sensitivity of both surrogate scores
SCORE_SENSITIVITY = 2.0


@dataclass(frozen=True)
class LearnParams:
    alpha: float
    beta: float
    epsilon: float
    constants_mode: str = "theory"
    slack_scale: float | None = None

    def __post_init__(self):
        if not 0 < self.alpha < 1:
            raise ParameterError(f"alpha must lie in (0, 1), got {self.alpha}")
        if not 0 < self.beta < 1:
            raise ParameterError(f"beta must lie in (0, 1), got {self.beta}")
        if not self.epsilon > 0:
            raise ParameterError(f"epsilon must be positive, got {self.epsilon}")
        self.constants  # validates the mode

    @property
    def constants(self) -> Constants:
        return Constants(self.constants_mode, self.slack_scale)


@dataclass(frozen=True)
class MinErrorEstimate:
    eta_hat: float
    interval: tuple[float, float]
    iterations: int
    bits: tuple[int, ...] = field(default=())


def max_user_samples(alpha: float) -> int:
    """``ceil(1 / alpha^2)``, robust to the float rounding of ``alpha``."""
    return max(1, math.ceil(1.0 / (alpha * alpha) - 1e-9))


def _budget(budget: PrivacyBudget | None, epsilon: float) -> PrivacyBudget:
    return PrivacyBudget(epsilon) if budget is None else budget


def _check_representation(rep: Representation, alpha: float, beta: float, constants: Constants) -> None:
    # only the accuracy target is a slack margin; the failure probability is not scaled
    if rep.alpha > constants.margin(alpha, 1.0) + 1e-15 or rep.beta > beta + 1e-15:
        raise ParameterError(
            f"representation is only ({rep.alpha:.3g}, {rep.beta:.3g}); "
            f"the learner needs ({alpha:.3g}, {beta:.3g})"
        )


def learn_item(z: UserDataset, concepts: HypothesisClass, rep: Representation | None,
               params: LearnParams, rng: np.random.Generator,
               budget: PrivacyBudget | None = None, info: dict | None = None):
    """Item-level learner: exponential mechanism on the surrogate score over ``H ~ rep``."""
    if z.m != 1:
        raise ParameterError(f"the item-level learner takes m = 1, got m = {z.m}")
    rep = trivial_representation(concepts) if rep is None else rep
    _check_representation(rep, params.alpha / 18.0, params.beta / 5.0, params.constants)
    budget = _budget(budget, params.epsilon)
    hyps = sample_class(rep, rng)
    scores = surrogate_score_counts(z, concepts, hyps)
    out = exponential_mechanism(scores, SCORE_SENSITIVITY, params.epsilon, rng, budget)
    if info is not None:
        info.update(hyps_size=len(hyps), probability=out.probability)
    return hyps[out.index]


def item_output_probabilities(z: UserDataset, concepts: HypothesisClass, hyps: HypothesisClass,
                              epsilon: float) -> np.ndarray:
    """Exact output distribution of :func:`learn_item` conditioned on ``H = hyps``."""
    return exp_mech_probabilities(surrogate_score_counts(z, concepts, hyps), SCORE_SENSITIVITY, epsilon)


def private_compare(z: UserDataset, concepts: HypothesisClass, epsilon: float, eta_tilde: float,
                    alpha: float, rng: np.random.Generator, budget: PrivacyBudget | None = None,
                    constants: Constants | str | None = None) -> int:
    """One private bit: 0 suggests ``eta_tilde >= eta - alpha/2``, 1 suggests ``eta_tilde <= eta + alpha/2``.

    ``eta`` is the best item-level population error in ``concepts``.
    """
    c = as_constants(constants)
    if not 0.0 <= eta_tilde <= 1.0:
        raise ParameterError(f"eta_tilde must lie in [0, 1], got {eta_tilde}")
    m = z.m
    half = c.margin(math.sqrt(m) * alpha, 2800.0)
    if eta_tilde >= 1.0:
        # every concept errs on at most a 1 fraction of users: no cut is needed
        t, margin = 0, half
    else:
        split = choose_compare_threshold(m, float(eta_tilde), float(alpha), c)
        t = max(split.threshold, 0)
        # in theory mode the achieved gap is >= 2 * half, so this is a no-op there
        margin = min(half, split.gap / 2.0)
    best = int(user_error_counts(z, concepts, t).min())
    noisy = laplace_mechanism(best / z.n, 1.0 / z.n, epsilon, rng, budget)
    return 0 if noisy <= binom_tail(m, eta_tilde, t) + margin else 1


def private_min_error(z: UserDataset, concepts: HypothesisClass, epsilon: float, alpha: float,
                      beta: float, rng: np.random.Generator, budget: PrivacyBudget | None = None,
                      constants: Constants | str | None = None) -> MinErrorEstimate:
    """Private binary search for ``min_c err_D(c)`` to within ``alpha``.

    Spends ``epsilon / T`` on each of ``T = ceil(log2(2/alpha))`` comparisons.
    ``beta`` enters only the sample-size analysis, not the computation.
    """
    if not 0 < alpha <= 1:
        raise ParameterError(f"alpha must lie in (0, 1], got {alpha}")
    if not 0 < beta < 1:
        raise ParameterError(f"beta must lie in (0, 1), got {beta}")
    budget = _budget(budget, epsilon)
    z = z.truncate(max_user_samples(alpha))
    T = math.ceil(math.log2(2.0 / alpha))
    eps_step = epsilon / T
    lo, hi = 0.0, 1.0
    bits = []
    for _ in range(T):
        mid = (lo + hi) / 2.0
        sigma = private_compare(z, concepts, eps_step, mid, alpha, rng, budget, constants)
        bits.append(sigma)
        if sigma == 0:
            hi = mid
        else:
            lo = mid
    return MinErrorEstimate(eta_hat=lo, interval=(lo, hi), iterations=T, bits=tuple(bits))


def learn_user(z: UserDataset, concepts: HypothesisClass, rep: Representation | None,
               params: LearnParams, rng: np.random.Generator,
               budget: PrivacyBudget | None = None, info: dict | None = None):
    """User-level learner: estimate ``eta``, pick ``(t, s)``, then the exponential mechanism."""
    alpha, c = params.alpha, params.constants
    rep = trivial_representation(concepts) if rep is None else rep
    z = z.truncate(max_user_samples(alpha))
    m = z.m
    _check_representation(rep, alpha / (134400.0 * math.sqrt(m)), params.beta / 7.0, c)
    budget = _budget(budget, params.epsilon)
    half = params.epsilon / 2.0

    est = private_min_error(z, concepts, half, alpha / 6.0, params.beta / 7.0, rng,
                            budget.allocate(half), c)
    eta_hat = min(max(est.eta_hat, 0.0), 1.0 - alpha / 3.0)
    t = max(choose_t(m, eta_hat, alpha, 4200.0, c).threshold, 0)
    psi_hat = binom_tail(m, min(eta_hat + alpha / 6.0, 1.0), t)
    s = choose_s(m, alpha, c).threshold

    hyps = sample_class(rep, rng)
    scores = user_surrogate_score_counts(z, concepts, hyps, t, s)
    out = exponential_mechanism(scores, SCORE_SENSITIVITY, half, rng, budget.allocate(half))
    if info is not None:
        info.update(eta_hat=eta_hat, t=t, s=s, psi_hat=psi_hat, m_used=m, hyps_size=len(hyps))
    return hyps[out.index]
