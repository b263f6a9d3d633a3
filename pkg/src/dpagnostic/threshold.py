"""Private binary search over thresholds ``f_u(x) = 1[x > u]`` on ``1..|X|``."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .binomial import Constants, as_constants, choose_median_split, choose_t
from .dp_core import PrivacyBudget, exponential_mechanism, laplace_mechanism
from .errors import ParameterError
from .learners import LearnParams, max_user_samples, private_min_error
from .model import Hypothesis, HypothesisClass, UserDataset, threshold_user_error_curve

THETA = 2.0 / 3.0
# median score: one user moves each side count by at most one
MEDIAN_SENSITIVITY = 1.0


def default_iterations(alpha: float, theta: float = THETA) -> int:
    """``ceil(log_{1/theta}(2/alpha))``."""
    return max(1, math.ceil(math.log(2.0 / alpha) / math.log(1.0 / theta) - 1e-12))


@dataclass(frozen=True)
class ThresholdConfig:
    """Iteration count ``T``, decay ``theta``, and mistake threshold ``t``.

    ``epsilon_prime`` is filled in from the run's epsilon when left unset.
    """

    T: int
    theta: float = THETA
    t: int = 0
    epsilon_prime: float | None = None

    def __post_init__(self):
        if int(self.T) != self.T or self.T < 1:
            raise ParameterError(f"T must be a positive integer, got {self.T}")
        if not 0 < self.theta < 1:
            raise ParameterError(f"theta must lie in (0, 1), got {self.theta}")
        if self.t < 0:
            raise ParameterError(f"t must be nonnegative, got {self.t}")

    def step_epsilon(self, epsilon: float) -> float:
        step = epsilon / (4 * self.T)
        if self.epsilon_prime is not None and not math.isclose(self.epsilon_prime, step, rel_tol=1e-9):
            raise ParameterError(
                f"epsilon_prime {self.epsilon_prime} does not equal epsilon / (4T) = {step}"
            )
        return step


def median_scores(z: UserDataset, l: int, r: int, alpha_k: float,
                  constants: Constants | str | None = None) -> tuple[np.ndarray, int]:
    """Integer median scores for ``u`` in ``l..r`` and the cut ``s`` behind them.

    Users keep their first ``min(m, floor(1/alpha_k))`` examples, the regime
    where the ``m alpha / 4200`` separation holds.
    """
    if not 0 < alpha_k <= 1:
        raise ParameterError(f"alpha_k must lie in (0, 1], got {alpha_k}")
    if not 0 <= l <= r <= z.domain_size:
        raise ParameterError(f"need 0 <= l <= r <= {z.domain_size}, got l={l}, r={r}")
    m_k = max(1, min(z.m, math.floor(1.0 / alpha_k + 1e-9)))
    zk = z.truncate(m_k)
    s = max(choose_median_split(m_k, float(alpha_k), as_constants(constants)).threshold, 0)
    left, right = _kernels.median_counts(zk.sorted_xs, l, r, s)
    return np.maximum(left, right), s


def private_median(z: UserDataset, epsilon: float, l: int, r: int, alpha_k: float,
                   rng: np.random.Generator, budget: PrivacyBudget | None = None,
                   constants: Constants | str | None = None) -> int:
    """Pick ``u`` in ``l..r`` leaving little mass strictly on either side."""
    if l > r:
        raise ParameterError(f"empty range l={l} > r={r}")
    scores, _ = median_scores(z, l, r, alpha_k, constants)
    out = exponential_mechanism(scores, MEDIAN_SENSITIVITY, epsilon, rng, budget)
    return l + out.index


def _range_min(curve: np.ndarray, a: int, b: int) -> float:
    return float(curve[a:b + 1].min()) if a <= b else math.inf


def private_threshold(z: UserDataset, epsilon: float, config: ThresholdConfig,
                      rng: np.random.Generator, budget: PrivacyBudget | None = None,
                      constants: Constants | str | None = None, trace: list | None = None) -> Hypothesis:
    """Noisy binary descent; each round spends ``epsilon / (4T)`` four times.

    ``trace`` (optional) receives one ``(l, r, mid, v_mid, v_l, v_r)`` tuple per round.
    """
    step = config.step_epsilon(epsilon)
    budget = PrivacyBudget(epsilon) if budget is None else budget
    n = z.n
    curve = threshold_user_error_curve(z, config.t)  # users with > t mistakes, per u
    lo, hi = 0, z.domain_size
    for k in range(config.T):
        if lo == hi:
            break
        mid = private_median(z, step, lo, hi, config.theta ** k, rng, budget, constants)
        # +inf stays +inf under noise, so an empty side never wins a comparison
        v_mid = laplace_mechanism(curve[mid] / n, 1.0 / n, step, rng, budget)
        v_l = laplace_mechanism(_range_min(curve, lo, mid - 1) / n, 1.0 / n, step, rng, budget)
        v_r = laplace_mechanism(_range_min(curve, mid + 1, hi) / n, 1.0 / n, step, rng, budget)
        if trace is not None:
            trace.append((lo, hi, mid, v_mid, v_l, v_r))
        if v_mid < min(v_l, v_r):
            return Hypothesis.threshold_at(mid, z.domain_size)
        if v_l < v_r:
            hi = mid - 1
        else:
            lo = mid + 1
    return Hypothesis.threshold_at(lo, z.domain_size)


def learn_threshold(z: UserDataset, params: LearnParams, rng: np.random.Generator,
                    budget: PrivacyBudget | None = None, info: dict | None = None,
                    T: int | None = None) -> Hypothesis:
    """End-to-end user-level threshold learner (half the budget each to ``eta`` and the descent)."""
    alpha, c = params.alpha, params.constants
    z = z.truncate(max_user_samples(alpha))
    m = z.m
    budget = PrivacyBudget(params.epsilon) if budget is None else budget
    half = params.epsilon / 2.0
    concepts = HypothesisClass.thresholds(z.domain_size)

    est = private_min_error(z, concepts, half, alpha / 6.0, params.beta / 4.0, rng,
                            budget.allocate(half), c)
    eta_hat = min(max(est.eta_hat, 0.0), 1.0 - alpha / 3.0)
    t = max(choose_t(m, eta_hat, alpha, 4200.0, c).threshold, 0)
    config = ThresholdConfig(T=default_iterations(alpha) if T is None else T, theta=THETA, t=t)
    h = private_threshold(z, half, config, rng, budget.allocate(half), c)
    if info is not None:
        info.update(eta_hat=eta_hat, t=t, T=config.T, m_used=m)
    return h
