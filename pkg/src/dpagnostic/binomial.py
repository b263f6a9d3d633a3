"""Exact binomial tails, total variation, and separating-threshold selection.

The user-level learners turn an item-level error gap into a gap between the
tails ``Pr[Bin(m, p) > l]`` and ``Pr[Bin(m, q) > l]``.  This module picks the
cut ``l`` and certifies the achieved gap against the margins the learners rely
on.  Margins are written as ``numerator / denominator`` with the published
denominators (700, 1400, 2100, 2800, 4200, ...); :class:`Constants` divides
every denominator by one global slack scale.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import InfeasibleError, ParameterError

THEORY = "theory"
PRACTICAL = "practical"
# Default slack scale for practical mode.  Half of the 700 in the TV lower
# bound, so every scaled requirement stays below the gaps binomials actually
# achieve at m = 1 (where the bound is tight).
PRACTICAL_SLACK = 350.0


@dataclass(frozen=True)
class Constants:
    """Margin constants: ``theory`` uses the literal denominators."""

    mode: str = THEORY
    slack_scale: float | None = None

    def __post_init__(self):
        if self.mode not in (THEORY, PRACTICAL):
            raise ParameterError(f"constants mode must be 'theory' or 'practical', got {self.mode!r}")
        if self.slack_scale is not None and not self.slack_scale > 0:
            raise ParameterError("slack_scale must be positive")

    @property
    def scale(self) -> float:
        if self.slack_scale is not None:
            return float(self.slack_scale)
        return 1.0 if self.mode == THEORY else PRACTICAL_SLACK

    def margin(self, numerator: float, denominator: float) -> float:
        return numerator * self.scale / denominator


THEORY_CONSTANTS = Constants(THEORY)
PRACTICAL_CONSTANTS = Constants(PRACTICAL)


def as_constants(c) -> Constants:
    if c is None:
        return THEORY_CONSTANTS
    if isinstance(c, Constants):
        return c
    return Constants(str(c))


@dataclass(frozen=True)
class BinomialSplit:
    threshold: int
    gap: float
    k_bound: float


def _check_prob(p: float, name: str = "p") -> float:
    p = float(p)
    if not 0.0 <= p <= 1.0:
        raise ParameterError(f"{name} must lie in [0, 1], got {p}")
    return p


def _check_m(m: int) -> int:
    if int(m) != m or m < 1:
        raise ParameterError(f"m must be a positive integer, got {m}")
    return int(m)


def binom_pmf(m: int, p: float) -> np.ndarray:
    """pmf of Bin(m, p) on 0..m.

    Starts at the mode (log-space via lgamma) and walks outward with the
    ratio recurrence, so every term is formed from a larger neighbour and
    nothing overflows for m up to 10^4 and beyond.
    """
    m = _check_m(m)
    p = _check_prob(p)
    out = np.zeros(m + 1)
    if p == 0.0:
        out[0] = 1.0
        return out
    if p == 1.0:
        out[m] = 1.0
        return out
    q = 1.0 - p
    mode = min(m, int(math.floor((m + 1) * p)))
    log_mode = (
        math.lgamma(m + 1) - math.lgamma(mode + 1) - math.lgamma(m - mode + 1)
        + mode * math.log(p) + (m - mode) * math.log1p(-p)
    )
    out[mode] = math.exp(log_mode)
    odds = p / q
    if mode < m:
        k = np.arange(mode, m)
        out[mode + 1:] = out[mode] * np.cumprod((m - k) / (k + 1) * odds)
    if mode > 0:
        k = np.arange(mode, 0, -1)
        out[:mode] = (out[mode] * np.cumprod(k / (m - k + 1) / odds))[::-1]
    # every entry carries the lgamma rounding of the mode term; renormalizing cancels it
    return out / out.sum()


def _tails_from_pmf(pmf: np.ndarray) -> np.ndarray:
    """``Pr[X > l]`` for l = -1..m-1, each summed from its small end."""
    upper = np.cumsum(pmf[::-1])[::-1]  # upper[k] = Pr[X >= k]
    lower = np.cumsum(pmf)  # lower[k] = Pr[X <= k]
    # entry i is l = i - 1, i.e. Pr[X >= i]; take whichever side is smaller
    tails = np.where(upper <= 0.5, upper, 1.0 - np.concatenate(([0.0], lower[:-1])))
    tails[0] = 1.0
    return np.clip(tails, 0.0, 1.0)


def binom_tail(m: int, p: float, ell: int) -> float:
    """``Pr[Bin(m, p) > ell]``."""
    m = _check_m(m)
    p = _check_prob(p)
    ell = int(ell)
    if ell < 0:
        return 1.0
    if ell >= m:
        return 0.0
    return float(_tails_from_pmf(binom_pmf(m, p))[ell + 1])


def binom_tails(m: int, p: float) -> np.ndarray:
    """Vector of ``Pr[Bin(m, p) > l]`` for l = -1, 0, ..., m-1."""
    return _tails_from_pmf(binom_pmf(m, p))


def binom_tv(m: int, p: float, q: float) -> float:
    m = _check_m(m)
    a = binom_pmf(m, _check_prob(p, "p"))
    b = binom_pmf(m, _check_prob(q, "q"))
    return float(min(1.0, 0.5 * np.abs(a - b).sum()))


def tv_k_bound(m: int, p: float, q: float) -> float:
    """``K = min(m|p-q|, sqrt(m)|p-q| / sqrt(p(1-p)), 1)``."""
    d = abs(p - q)
    var = p * (1.0 - p)
    mid = math.sqrt(m) * d / math.sqrt(var) if var > 0 else math.inf
    return min(m * d, mid, 1.0)


def find_separating_threshold(m: int, p: float, q: float, required_gap: float) -> BinomialSplit:
    """Cut ``l`` in -1..m-1 maximizing ``Pr[Bin(m,q) > l] - Pr[Bin(m,p) > l]``.

    Ties go to the smallest ``l``.  Raises :class:`InfeasibleError` when the
    best cut falls short of ``required_gap``.
    """
    m = _check_m(m)
    p = _check_prob(p, "p")
    q = _check_prob(q, "q")
    if p > q:
        raise ParameterError(f"need p <= q, got p={p}, q={q}")
    gaps = binom_tails(m, q) - binom_tails(m, p)
    i = int(np.argmax(gaps))
    gap = max(0.0, float(gaps[i]))
    if gap < required_gap:
        raise InfeasibleError(
            f"no tail cut separates Bin({m}, {p:.6g}) from Bin({m}, {q:.6g}) by "
            f"{required_gap:.6g}; best achievable gap is {gap:.6g}",
            achieved=gap,
            required=required_gap,
        )
    return BinomialSplit(threshold=i - 1, gap=gap, k_bound=tv_k_bound(m, p, q))


@lru_cache(maxsize=4096)
def choose_t(m: int, eta_hat: float, alpha: float, gap_constant: float = 4200.0,
             constants: Constants | str | None = None) -> BinomialSplit:
    """Mistake threshold separating ``eta_hat + alpha/6`` from ``eta_hat + alpha/3``."""
    c = as_constants(constants)
    if eta_hat < 0:
        raise ParameterError(f"eta_hat must be nonnegative, got {eta_hat}")
    p = min(eta_hat + alpha / 6.0, 1.0)
    q = min(eta_hat + alpha / 3.0, 1.0)
    return find_separating_threshold(m, p, q, c.margin(math.sqrt(m) * alpha, gap_constant))


@lru_cache(maxsize=4096)
def choose_compare_threshold(m: int, eta_tilde: float, alpha: float,
                             constants: Constants | str | None = None) -> BinomialSplit:
    """Threshold used by the private comparison: ``eta~`` against ``eta~ + alpha/2``."""
    c = as_constants(constants)
    p = _check_prob(eta_tilde, "eta_tilde")
    q = min(p + alpha / 2.0, 1.0)
    return find_separating_threshold(m, p, q, c.margin(math.sqrt(m) * alpha, 1400.0))


@lru_cache(maxsize=4096)
def choose_s(m: int, alpha: float, constants: Constants | str | None = None) -> BinomialSplit:
    """Disagreement threshold for the generic user-level learner; always 0.

    Verifies ``Pr[Bin(m, alpha/3) > 0] >= sqrt(m) alpha / 2100`` numerically.
    """
    c = as_constants(constants)
    if not 0 < alpha <= 1:
        raise ParameterError(f"alpha must lie in (0, 1], got {alpha}")
    m = _check_m(m)
    gap = binom_tail(m, alpha / 3.0, 0)  # Bin(m, 0) never exceeds 0
    required = c.margin(math.sqrt(m) * alpha, 2100.0)
    if gap < required:
        raise InfeasibleError(
            f"s = 0 gives gap {gap:.6g} < {required:.6g} at m={m}, alpha={alpha}",
            achieved=gap,
            required=required,
        )
    return BinomialSplit(threshold=0, gap=gap, k_bound=tv_k_bound(m, 0.0, alpha / 3.0))


@lru_cache(maxsize=4096)
def choose_median_split(m: int, alpha: float, constants: Constants | str | None = None) -> BinomialSplit:
    """Cut separating ``Bin(m, alpha/2)`` from ``Bin(m, 2 alpha/3)`` by ``m alpha / 4200``.

    The gap is only guaranteed for ``m <= 1/alpha``; callers truncate users first.
    """
    c = as_constants(constants)
    if not 0 < alpha <= 1:
        raise ParameterError(f"alpha must lie in (0, 1], got {alpha}")
    return find_separating_threshold(m, alpha / 2.0, 2.0 * alpha / 3.0, c.margin(m * alpha, 4200.0))
