"""Probabilistic representations: distributions over finite hypothesis classes."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import ParameterError
from .model import HypothesisClass

Sampler = Callable[[np.random.Generator], HypothesisClass]


@dataclass(frozen=True)
class Representation:
    """A seeded sampler of hypothesis classes with declared ``(alpha, beta)``.

    ``size_bound`` caps ``ln |H|`` over the support and is checked on every
    draw.  The declared parameters are a contract the constructor of the
    representation vouches for; learners compare them with what they need.
    """

    sampler: Sampler
    size_bound: float
    alpha: float
    beta: float
    name: str = "custom"

    def __post_init__(self):
        if self.size_bound < 0:
            raise ParameterError("size_bound must be nonnegative")
        if not (0 <= self.alpha <= 1 and 0 <= self.beta <= 1):
            raise ParameterError("representation alpha and beta must lie in [0, 1]")

    def sample(self, rng: np.random.Generator) -> HypothesisClass:
        return sample_class(self, rng)


def trivial_representation(concepts: HypothesisClass) -> Representation:
    """The point mass on ``concepts`` itself: a (0, 0)-representation."""
    if len(concepts) == 0:
        raise ParameterError("empty class")
    return Representation(
        sampler=lambda rng: concepts,
        size_bound=math.log(len(concepts)),
        alpha=0.0,
        beta=0.0,
        name="trivial",
    )


def random_subset_representation(concepts: HypothesisClass, k: int, alpha: float, beta: float) -> Representation:
    """Uniformly random ``k``-subsets of ``concepts`` under a caller-declared ``(alpha, beta)``.

    Nothing is inferred about coverage; the declared pair must be justified
    by the caller (see :func:`coverage_rate` for a Monte Carlo check).
    """
    if not 1 <= k <= len(concepts):
        raise ParameterError(f"subset size must be in [1, {len(concepts)}]")

    def sampler(rng: np.random.Generator) -> HypothesisClass:
        idx = np.sort(rng.choice(len(concepts), size=k, replace=False))
        return HypothesisClass(concepts[i] for i in idx)

    return Representation(sampler, math.log(k), alpha, beta, name=f"subset{k}")


def sample_class(rep: Representation, rng: np.random.Generator) -> HypothesisClass:
    hyps = rep.sampler(rng)
    if not isinstance(hyps, HypothesisClass):
        hyps = HypothesisClass(hyps)
    if math.log(len(hyps)) > rep.size_bound + 1e-12:
        raise ParameterError(
            f"sampled class has ln|H| = {math.log(len(hyps)):.6g} above size_bound {rep.size_bound:.6g}"
        )
    return hyps


def coverage_rate(rep: Representation, concept, marginal, trials: int, rng: np.random.Generator) -> float:
    """Fraction of draws ``H`` holding some ``h`` within ``rep.alpha`` of ``concept`` under ``marginal``."""
    marginal = np.asarray(marginal, dtype=float)
    hits = 0
    for _ in range(trials):
        hyps = sample_class(rep, rng)
        dis = (hyps.table != concept.table[None, :]) @ marginal
        hits += bool(dis.min() <= rep.alpha + 1e-12)
    return hits / trials
