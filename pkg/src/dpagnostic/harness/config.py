"""Strict JSON experiment configuration and synthetic distributions."""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any

import numpy as np

from ..binomial import PRACTICAL, THEORY
from ..errors import ConfigError, ParameterError
from ..model import DiscreteJointDistribution, HypothesisClass

LEARNERS = ("item", "user", "threshold", "min_error")
SWEEP_AXES = ("n", "m", "epsilon", "alpha")

_TOP_KEYS = {
    "learner", "domain_size", "distribution", "concept_class", "n", "m", "alpha",
    "beta", "epsilon", "trials", "seed", "constants_mode", "slack_scale", "sweep",
}
_DIST_KEYS = {
    "noisy_threshold": {"kind", "u_star", "rho", "marginal"},
    "uniform_label": {"kind", "marginal"},
    "point_mass": {"kind", "x", "y"},
    "table": {"kind", "probs"},
}
_CLASS_KEYS = {"thresholds": {"kind"}, "table": {"kind", "rows"}}


def _check_keys(obj: Any, allowed: set, where: str) -> dict:
    if not isinstance(obj, dict):
        raise ConfigError(f"{where} must be a JSON object")
    unknown = sorted(set(obj) - allowed)
    if unknown:
        raise ConfigError(f"unknown key(s) in {where}: {', '.join(unknown)}")
    return obj


def _marginal(spec, domain_size: int) -> np.ndarray:
    if spec in (None, "uniform"):
        return np.full(domain_size, 1.0 / domain_size)
    arr = np.asarray(spec, dtype=float)
    if arr.shape != (domain_size,) or (arr < 0).any() or abs(arr.sum() - 1.0) > 1e-12:
        raise ConfigError("marginal must be 'uniform' or a probability list over the domain")
    return arr


def generate_distribution(spec: dict, domain_size: int) -> DiscreteJointDistribution:
    """Exact joint table for a distribution spec."""
    kind = spec.get("kind") if isinstance(spec, dict) else None
    if kind not in _DIST_KEYS:
        raise ConfigError(f"distribution kind must be one of {sorted(_DIST_KEYS)}, got {kind!r}")
    _check_keys(spec, _DIST_KEYS[kind], "distribution")
    probs = np.zeros((domain_size, 2))
    if kind == "noisy_threshold":
        u_star = spec.get("u_star", domain_size // 2)
        rho = float(spec.get("rho", 0.0))
        if not 0 <= u_star <= domain_size or not 0 <= rho <= 1:
            raise ConfigError("noisy_threshold needs 0 <= u_star <= domain_size and 0 <= rho <= 1")
        mu = _marginal(spec.get("marginal"), domain_size)
        label = (np.arange(1, domain_size + 1) > u_star).astype(int)
        rows = np.arange(domain_size)
        probs[rows, label] = (1.0 - rho) * mu
        probs[rows, 1 - label] = rho * mu
    elif kind == "uniform_label":
        mu = _marginal(spec.get("marginal"), domain_size)
        probs[:, 0] = probs[:, 1] = mu / 2.0
    elif kind == "point_mass":
        x, y = spec.get("x", 1), spec.get("y", 1)
        if not (1 <= x <= domain_size and y in (0, 1)):
            raise ConfigError("point_mass needs 1 <= x <= domain_size and y in {0, 1}")
        probs[x - 1, y] = 1.0
    else:
        probs = np.asarray(spec.get("probs"), dtype=float)
        if probs.shape != (domain_size, 2):
            raise ConfigError(f"table probs must have shape ({domain_size}, 2)")
    try:
        return DiscreteJointDistribution(probs)
    except ParameterError as exc:
        raise ConfigError(str(exc)) from exc


def build_class(spec: dict | None, domain_size: int) -> HypothesisClass:
    spec = {"kind": "thresholds"} if spec is None else spec
    kind = spec.get("kind") if isinstance(spec, dict) else None
    if kind not in _CLASS_KEYS:
        raise ConfigError(f"concept_class kind must be one of {sorted(_CLASS_KEYS)}")
    _check_keys(spec, _CLASS_KEYS[kind], "concept_class")
    if kind == "thresholds":
        return HypothesisClass.thresholds(domain_size)
    try:
        cls = HypothesisClass.from_table(spec.get("rows"))
    except (ParameterError, ValueError, TypeError) as exc:
        raise ConfigError(f"bad concept_class rows: {exc}") from exc
    if cls.domain_size != domain_size:
        raise ConfigError("concept_class rows must have one bit per domain point")
    return cls


@dataclass(frozen=True)
class SweepPoint:
    index: int
    n: int
    m: int
    epsilon: float
    alpha: float


@dataclass(frozen=True)
class ExperimentConfig:
    learner: str = "threshold"
    domain_size: int = 1024
    distribution: dict = field(default_factory=lambda: {"kind": "noisy_threshold", "rho": 0.1})
    concept_class: dict | None = None
    n: int = 1000
    m: int = 1
    alpha: float = 0.1
    beta: float = 0.1
    epsilon: float = 1.0
    trials: int = 100
    seed: int = 0
    constants_mode: str = PRACTICAL
    slack_scale: float | None = None
    sweep: dict = field(default_factory=dict)

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if self.learner not in LEARNERS:
            raise ConfigError(f"learner must be one of {LEARNERS}, got {self.learner!r}")
        if not _is_int(self.domain_size) or self.domain_size < 1:
            raise ConfigError("domain_size must be a positive integer")
        if not _is_int(self.trials) or self.trials < 1:
            raise ConfigError("trials must be a positive integer")
        if not _is_int(self.seed) or self.seed < 0:
            raise ConfigError("seed must be a nonnegative integer")
        if self.constants_mode not in (THEORY, PRACTICAL):
            raise ConfigError("constants_mode must be 'theory' or 'practical'")
        if self.slack_scale is not None and not (_is_num(self.slack_scale) and self.slack_scale > 0):
            raise ConfigError("slack_scale must be a positive number")
        if not 0 < self.beta < 1:
            raise ConfigError("beta must lie in (0, 1)")
        _check_keys(self.sweep, set(SWEEP_AXES), "sweep")
        for axis, values in self.sweep.items():
            if not isinstance(values, list) or not values:
                raise ConfigError(f"sweep axis {axis!r} must be a nonempty list")
        for p in self.points():
            if not _is_int(p.n) or p.n < 1:
                raise ConfigError(f"n must be a positive integer, got {p.n}")
            if not _is_int(p.m) or p.m < 1:
                raise ConfigError(f"m must be a positive integer, got {p.m}")
            if not (_is_num(p.alpha) and 0 < p.alpha < 1):
                raise ConfigError(f"alpha must lie in (0, 1), got {p.alpha}")
            if not (_is_num(p.epsilon) and p.epsilon > 0):
                raise ConfigError(f"epsilon must be positive, got {p.epsilon}")
            if self.learner == "item" and p.m != 1:
                raise ConfigError("the item learner needs m = 1")
        if self.learner == "threshold" and self.concept_class not in (None, {"kind": "thresholds"}):
            raise ConfigError("the threshold learner only supports the threshold class")
        generate_distribution(self.distribution, self.domain_size)
        build_class(self.concept_class, self.domain_size)

    def points(self) -> list[SweepPoint]:
        axes = [self.sweep.get(a, [getattr(self, a)]) for a in SWEEP_AXES]
        return [
            SweepPoint(i, int(n), int(m), float(eps), float(alpha))
            for i, (n, m, eps, alpha) in enumerate(itertools.product(*axes))
        ]

    def with_overrides(self, **kw) -> "ExperimentConfig":
        kw = {k: v for k, v in kw.items() if v is not None}
        return replace(self, **kw) if kw else self

    def swept_axes(self) -> list[str]:
        return [a for a in SWEEP_AXES if a in self.sweep]


def _is_int(v) -> bool:
    return isinstance(v, (int, np.integer)) and not isinstance(v, bool)


def _is_num(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool) and not math.isnan(v)


def parse_config(data: Any) -> ExperimentConfig:
    _check_keys(data, _TOP_KEYS, "config")
    try:
        return ExperimentConfig(**data)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path: str | Path) -> ExperimentConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    return parse_config(data)
