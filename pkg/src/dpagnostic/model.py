"""Domains, hypotheses, user-grouped datasets, and exact error statistics.

Empirical statistics are integer counts first; rates are derived by one final
division so that sensitivity arguments can be checked in exact arithmetic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Iterator, Sequence

import numpy as np

from . import _kernels
from .binomial import binom_tail
from .errors import ParameterError

_PROB_ATOL = 1e-12


@dataclass(frozen=True)
class Domain:
    """Points ``1..size``."""

    size: int

    def __post_init__(self):
        if int(self.size) != self.size or self.size < 1:
            raise ParameterError(f"domain size must be a positive integer, got {self.size}")

    def points(self) -> np.ndarray:
        return np.arange(1, self.size + 1)


def _domain_size(domain) -> int:
    return domain.size if isinstance(domain, Domain) else Domain(int(domain)).size


# --------------------------------------------------------------------------
# hypotheses
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Hypothesis:
    """A {0,1}-valued function on ``1..domain_size``.

    Either a threshold ``f_u`` (``x > u``) or an explicit bit table.  Build
    through :meth:`threshold_at` or :meth:`from_table`.
    """

    domain_size: int
    threshold: int | None = None
    bits: bytes | None = None

    def __post_init__(self):
        if (self.threshold is None) == (self.bits is None):
            raise ParameterError("a hypothesis is either a threshold or a table")
        if self.threshold is not None and not 0 <= self.threshold <= self.domain_size:
            raise ParameterError(
                f"threshold {self.threshold} outside [0, {self.domain_size}]"
            )
        if self.bits is not None and len(self.bits) != self.domain_size:
            raise ParameterError("table length must equal the domain size")

    @classmethod
    def threshold_at(cls, u: int, domain) -> "Hypothesis":
        return cls(_domain_size(domain), threshold=int(u))

    @classmethod
    def from_table(cls, table) -> "Hypothesis":
        arr = np.asarray(table)
        if arr.ndim != 1 or arr.size == 0 or not np.isin(arr, (0, 1)).all():
            raise ParameterError("table must be a nonempty 0/1 vector")
        return cls(arr.size, bits=arr.astype(np.uint8).tobytes())

    @property
    def is_threshold(self) -> bool:
        return self.threshold is not None

    @cached_property
    def table(self) -> np.ndarray:
        if self.bits is not None:
            arr = np.frombuffer(self.bits, dtype=np.uint8)
        else:
            arr = (np.arange(1, self.domain_size + 1) > self.threshold).astype(np.uint8)
        arr.flags.writeable = False
        return arr

    def __call__(self, x):
        return self.table[np.asarray(x) - 1]

    def complement(self) -> "Hypothesis":
        return Hypothesis.from_table(1 - self.table)

    @property
    def id(self) -> str:
        if self.threshold is not None:
            return f"u={self.threshold}"
        return "table:" + self.bits.hex()

    def __repr__(self):
        if self.threshold is not None:
            return f"Hypothesis(threshold={self.threshold}, domain_size={self.domain_size})"
        return f"Hypothesis(table={self.table.tolist()})"


class HypothesisClass(Sequence):
    """Finite, nonempty, ordered collection of hypotheses on one domain."""

    def __init__(self, members: Iterable[Hypothesis]):
        self.members = tuple(members)
        if not self.members:
            raise ParameterError("a hypothesis class must be nonempty")
        sizes = {h.domain_size for h in self.members}
        if len(sizes) != 1:
            raise ParameterError("all hypotheses in a class must share one domain")
        self.domain_size = sizes.pop()

    @classmethod
    def thresholds(cls, domain, us: Iterable[int] | None = None) -> "HypothesisClass":
        size = _domain_size(domain)
        us = range(size + 1) if us is None else us
        return cls(Hypothesis.threshold_at(u, size) for u in us)

    @classmethod
    def from_table(cls, table) -> "HypothesisClass":
        return cls(Hypothesis.from_table(row) for row in np.asarray(table))

    def __len__(self):
        return len(self.members)

    def __getitem__(self, i):
        return self.members[i]

    def __iter__(self) -> Iterator[Hypothesis]:
        return iter(self.members)

    def __repr__(self):
        kind = "thresholds" if self.is_thresholds else "tables"
        return f"HypothesisClass({len(self)} {kind}, domain_size={self.domain_size})"

    @cached_property
    def is_thresholds(self) -> bool:
        return all(h.is_threshold for h in self.members)

    @cached_property
    def threshold_values(self) -> np.ndarray:
        if not self.is_thresholds:
            raise ParameterError("class contains non-threshold hypotheses")
        return np.array([h.threshold for h in self.members], dtype=np.int64)

    @cached_property
    def table(self) -> np.ndarray:
        return np.stack([h.table for h in self.members]).astype(np.uint8)


# --------------------------------------------------------------------------
# datasets and distributions
# --------------------------------------------------------------------------

class UserDataset:
    """``n`` users, each holding exactly ``m`` labeled examples.

    Arrays are copied and frozen on construction; derived datasets are new
    objects.
    """

    def __init__(self, xs, ys, domain_size: int):
        xs = np.array(xs, dtype=np.int64, ndmin=2)
        ys = np.array(ys, dtype=np.uint8, ndmin=2)
        self.domain_size = _domain_size(domain_size)
        if xs.ndim != 2 or xs.shape != ys.shape:
            raise ParameterError("xs and ys must be matching (n, m) arrays")
        n, m = xs.shape
        if n < 1 or m < 1:
            raise ParameterError("a dataset needs n >= 1 users with m >= 1 examples")
        if xs.min() < 1 or xs.max() > self.domain_size:
            raise ParameterError(f"points must lie in 1..{self.domain_size}")
        if ys.max() > 1:
            raise ParameterError("labels must be 0 or 1")
        xs.flags.writeable = False
        ys.flags.writeable = False
        self.xs = xs
        self.ys = ys

    @property
    def n(self) -> int:
        return self.xs.shape[0]

    @property
    def m(self) -> int:
        return self.xs.shape[1]

    def __eq__(self, other):
        if not isinstance(other, UserDataset):
            return NotImplemented
        return (
            self.domain_size == other.domain_size
            and np.array_equal(self.xs, other.xs)
            and np.array_equal(self.ys, other.ys)
        )

    __hash__ = None

    def __repr__(self):
        return f"UserDataset(n={self.n}, m={self.m}, domain_size={self.domain_size})"

    @cached_property
    def _order(self) -> np.ndarray:
        return np.argsort(self.xs, axis=1, kind="stable")

    @cached_property
    def sorted_xs(self) -> np.ndarray:
        return np.ascontiguousarray(np.take_along_axis(self.xs, self._order, axis=1))

    @cached_property
    def sorted_ys(self) -> np.ndarray:
        return np.ascontiguousarray(np.take_along_axis(self.ys, self._order, axis=1))

    @cached_property
    def point_counts(self) -> np.ndarray:
        """Examples per domain point, indexed 0..|X| (index 0 unused)."""
        return np.bincount(self.xs.ravel(), minlength=self.domain_size + 1)

    def truncate(self, m: int) -> "UserDataset":
        """Keep each user's first ``m`` examples."""
        if m >= self.m:
            return self
        if m < 1:
            raise ParameterError("cannot truncate below one example per user")
        return UserDataset(self.xs[:, :m], self.ys[:, :m], self.domain_size)

    def replace_user(self, i: int, xs_row, ys_row) -> "UserDataset":
        """Swap neighbor: user ``i`` replaced by a new block of ``m`` examples."""
        xs = self.xs.copy()
        ys = self.ys.copy()
        xs[i] = xs_row
        ys[i] = ys_row
        return UserDataset(xs, ys, self.domain_size)

    def to_text(self) -> str:
        lines = [f"# domain_size={self.domain_size}"]
        for xr, yr in zip(self.xs.tolist(), self.ys.tolist()):
            lines.append(",".join(f"{x}:{y}" for x, y in zip(xr, yr)))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str, domain_size: int | None = None) -> "UserDataset":
        xs, ys = [], []
        for raw in text.splitlines():
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                key, _, val = line[1:].strip().partition("=")
                if key.strip() == "domain_size" and domain_size is None:
                    domain_size = int(val)
                continue
            try:
                pairs = [tok.split(":") for tok in line.split(",")]
                xs.append([int(x) for x, _ in pairs])
                ys.append([int(y) for _, y in pairs])
            except ValueError as exc:
                raise ParameterError(f"malformed dataset line {raw!r}") from exc
        if not xs:
            raise ParameterError("empty dataset text")
        if len({len(r) for r in xs}) != 1:
            raise ParameterError("every user must hold the same number of examples")
        if domain_size is None:
            domain_size = max(max(r) for r in xs)
        return cls(xs, ys, domain_size)


class DiscreteJointDistribution:
    """Exact probability table over ``X x {0,1}``; row ``x - 1``, column ``y``."""

    def __init__(self, probs):
        probs = np.array(probs, dtype=float)
        if probs.ndim != 2 or probs.shape[1] != 2 or probs.shape[0] < 1:
            raise ParameterError("probs must have shape (|X|, 2)")
        if (probs < 0).any():
            raise ParameterError("probabilities must be nonnegative")
        total = probs.sum()
        if abs(total - 1.0) > _PROB_ATOL:
            raise ParameterError(f"probabilities sum to {total!r}, not 1")
        probs.flags.writeable = False
        self.probs = probs

    @property
    def domain_size(self) -> int:
        return self.probs.shape[0]

    @cached_property
    def marginal(self) -> np.ndarray:
        return self.probs.sum(axis=1)

    def __repr__(self):
        return f"DiscreteJointDistribution(domain_size={self.domain_size})"


def _marginal(dist) -> np.ndarray:
    if isinstance(dist, DiscreteJointDistribution):
        return dist.marginal
    arr = np.asarray(dist, dtype=float)
    if arr.ndim != 1 or (arr < 0).any() or abs(arr.sum() - 1.0) > _PROB_ATOL:
        raise ParameterError("marginal must be a probability vector over the domain")
    return arr


@dataclass(frozen=True)
class UserErrorParams:
    t: int
    s: int
    gap_t: float = 0.0
    gap_s: float = 0.0

    def __post_init__(self):
        if self.t < -1 or self.s < -1:
            raise ParameterError("mistake thresholds must be >= 0")
        if self.gap_t < 0 or self.gap_s < 0:
            raise ParameterError("gaps must be nonnegative")


def sample_dataset(D: DiscreteJointDistribution, n: int, m: int, rng: np.random.Generator) -> UserDataset:
    """``n * m`` i.i.d. draws from ``D`` by inverse CDF, grouped by user."""
    if n < 1 or m < 1:
        raise ParameterError("n and m must be positive")
    flat = D.probs.ravel()
    cdf = np.cumsum(flat)
    u = rng.random(n * m) * cdf[-1]
    idx = np.searchsorted(cdf, u, side="right")
    idx = np.minimum(idx, flat.size - 1)
    # a zero-mass cell can only be hit at the clamp; step back to a live one
    while (flat[idx] == 0).any():
        bad = flat[idx] == 0
        idx[bad] -= 1
    xs = (idx // 2 + 1).reshape(n, m)
    ys = (idx % 2).reshape(n, m)
    return UserDataset(xs, ys, D.domain_size)


# --------------------------------------------------------------------------
# statistics
# --------------------------------------------------------------------------

def _check_domain(z: UserDataset, *hs: Hypothesis) -> None:
    for h in hs:
        if h.domain_size != z.domain_size:
            raise ParameterError(
                f"hypothesis domain {h.domain_size} does not match dataset domain {z.domain_size}"
            )


def _user_mistakes(z: UserDataset, h: Hypothesis) -> np.ndarray:
    return (h.table[z.xs - 1] != z.ys).sum(axis=1)


def _user_disagreements(z: UserDataset, c: Hypothesis, h: Hypothesis) -> np.ndarray:
    return (c.table[z.xs - 1] != h.table[z.xs - 1]).sum(axis=1)


def empirical_error(z: UserDataset, h: Hypothesis) -> tuple[int, float]:
    _check_domain(z, h)
    count = int(_user_mistakes(z, h).sum())
    return count, count / (z.n * z.m)


def empirical_disagreement(x: UserDataset, c: Hypothesis, h: Hypothesis) -> tuple[int, float]:
    """Disagreement on the unlabeled points of ``x`` (labels ignored)."""
    _check_domain(x, c, h)
    count = int(_user_disagreements(x, c, h).sum())
    return count, count / (x.n * x.m)


def _check_cut(t: int, m: int, name: str) -> None:
    if int(t) != t or not 0 <= t <= m:
        raise ParameterError(f"{name} must be an integer in [0, {m}], got {t}")


def user_error(z: UserDataset, c: Hypothesis, t: int) -> tuple[int, float]:
    """Users on whose examples ``c`` makes more than ``t`` mistakes."""
    _check_domain(z, c)
    _check_cut(t, z.m, "t")
    count = int((_user_mistakes(z, c) > t).sum())
    return count, count / z.n


def user_disagreement(x: UserDataset, c: Hypothesis, h: Hypothesis, s: int) -> tuple[int, float]:
    _check_domain(x, c, h)
    _check_cut(s, x.m, "s")
    count = int((_user_disagreements(x, c, h) > s).sum())
    return count, count / x.n


def population_error(D: DiscreteJointDistribution, h: Hypothesis) -> float:
    if h.domain_size != D.domain_size:
        raise ParameterError("hypothesis and distribution domains differ")
    rows = np.arange(D.domain_size)
    return float(D.probs[rows, 1 - h.table].sum())


def population_disagreement(D_X, c: Hypothesis, h: Hypothesis) -> float:
    marg = _marginal(D_X)
    if not (c.domain_size == h.domain_size == marg.size):
        raise ParameterError("hypothesis and distribution domains differ")
    return float(marg[c.table != h.table].sum())


def population_user_error(D: DiscreteJointDistribution, c: Hypothesis, t: int, m: int) -> float:
    """``Pr[Bin(m, err_D(c)) > t]``: a user's mistake count is binomial."""
    _check_cut(t, m, "t")
    return binom_tail(m, min(1.0, population_error(D, c)), t)


def population_user_disagreement(D_X, c: Hypothesis, h: Hypothesis, s: int, m: int) -> float:
    _check_cut(s, m, "s")
    return binom_tail(m, min(1.0, population_disagreement(D_X, c, h)), s)


def best_population_error(D: DiscreteJointDistribution, concepts: HypothesisClass) -> float:
    """``min_c err_D(c)`` over a finite class."""
    rows = np.arange(D.domain_size)
    wrong = D.probs[rows, 1 - concepts.table]  # (k, |X|)
    return float(wrong.sum(axis=1).min())


# --------------------------------------------------------------------------
# class-wide counts used by the learners
# --------------------------------------------------------------------------

def item_error_counts(z: UserDataset, concepts: HypothesisClass) -> np.ndarray:
    """Total mistakes over all ``n * m`` examples, one entry per concept."""
    _check_domain(z, concepts[0])
    if concepts.is_thresholds:
        ones = np.bincount(z.xs[z.ys == 1], minlength=z.domain_size + 1)
        zeros = np.bincount(z.xs[z.ys == 0], minlength=z.domain_size + 1)
        by_u = int(zeros.sum()) + np.cumsum(ones - zeros)
        return by_u[concepts.threshold_values]
    hist = z.point_counts[1:]
    ones = np.bincount(z.xs[z.ys == 1], minlength=z.domain_size + 1)[1:]
    zeros = hist - ones
    tab = concepts.table.astype(np.int64)
    return tab @ zeros + (1 - tab) @ ones


def user_error_counts(z: UserDataset, concepts: HypothesisClass, t: int) -> np.ndarray:
    """Users with more than ``t`` mistakes, one entry per concept."""
    _check_domain(z, concepts[0])
    if concepts.is_thresholds:
        by_u = _kernels.threshold_user_errors(z.sorted_xs, z.sorted_ys, int(t), z.domain_size)
        return by_u[concepts.threshold_values]
    mistakes = _kernels.table_user_mistakes(concepts.table, z.xs, z.ys)
    return (mistakes > t).sum(axis=1)


def threshold_user_error_curve(z: UserDataset, t: int) -> np.ndarray:
    """``count of users with > t mistakes`` for every threshold ``u`` in 0..|X|."""
    return _kernels.threshold_user_errors(z.sorted_xs, z.sorted_ys, int(t), z.domain_size)


def surrogate_score(z: UserDataset, concepts: HypothesisClass, h: Hypothesis) -> tuple[float, tuple[int, int]]:
    """``min_c err_z(c) + dis_x(c, h)`` with the minimizing concept's counts.

    Ties go to the lowest concept index.
    """
    _check_domain(z, h)
    err = item_error_counts(z, concepts)
    diff = (concepts.table != h.table).astype(np.int64)
    dis = diff @ z.point_counts[1:]
    total = err + dis
    i = int(np.argmin(total))
    return total[i] / (z.n * z.m), (int(err[i]), int(dis[i]))


def surrogate_score_counts(z: UserDataset, concepts: HypothesisClass, hyps: HypothesisClass) -> np.ndarray:
    """Integer surrogate score (times ``n*m``) for every member of ``hyps``."""
    _check_domain(z, hyps[0])
    err = item_error_counts(z, concepts)
    if concepts.is_thresholds and hyps.is_thresholds:
        # dis(f_u, f_v) = |P[u] - P[v]| with P the prefix count of points
        prefix = np.cumsum(z.point_counts)
        cu = concepts.threshold_values
        order = np.argsort(cu, kind="stable")
        cu_s = cu[order]
        a = err[order] - prefix[cu_s]
        b = err[order] + prefix[cu_s]
        pre_min = np.minimum.accumulate(a)
        suf_min = np.minimum.accumulate(b[::-1])[::-1]
        hv = hyps.threshold_values
        pv = prefix[hv]
        k_le = np.searchsorted(cu_s, hv, side="right")  # concepts with u <= v
        big = np.iinfo(np.int64).max // 4
        left = np.where(k_le > 0, pre_min[np.maximum(k_le - 1, 0)] + pv, big)
        right = np.where(k_le < cu_s.size, suf_min[np.minimum(k_le, cu_s.size - 1)] - pv, big)
        return np.minimum(left, right)
    diff = concepts.table[:, None, :] != hyps.table[None, :, :]  # (kc, kh, |X|)
    dis = diff.astype(np.int64) @ z.point_counts[1:]
    return (err[:, None] + dis).min(axis=0)


def user_surrogate_score(z: UserDataset, concepts: HypothesisClass, h: Hypothesis,
                         params: UserErrorParams) -> float:
    """``min_c err^t_z(c) + dis^s_x(c, h)`` from integer user counts."""
    _check_domain(z, h)
    _check_cut(params.t, z.m, "t")
    _check_cut(params.s, z.m, "s")
    err = user_error_counts(z, concepts, params.t)
    dis = np.array(
        [(_user_disagreements(z, c, h) > params.s).sum() for c in concepts], dtype=np.int64
    )
    return int((err + dis).min()) / z.n


def user_surrogate_score_counts(z: UserDataset, concepts: HypothesisClass, hyps: HypothesisClass,
                                t: int, s: int) -> np.ndarray:
    """Integer user-level surrogate score (times ``n``) for every member of ``hyps``."""
    _check_domain(z, hyps[0])
    err = user_error_counts(z, concepts, t)
    if concepts.is_thresholds and hyps.is_thresholds:
        return _kernels.threshold_user_surrogate(
            z.sorted_xs, concepts.threshold_values, err.astype(np.int64),
            hyps.threshold_values, int(s), z.domain_size,
        )
    dis = _kernels.table_user_disagreements(concepts.table, hyps.table, z.xs, int(s))
    return (err[:, None] + dis).min(axis=0)


def log_class_size(hyps: HypothesisClass) -> float:
    return math.log(len(hyps))
