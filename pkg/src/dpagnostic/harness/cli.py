"""Command-line entry point.

Exit codes: 0 success, 2 configuration error, 3 infeasible binomial gap,
4 privacy-budget error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import dataclass
from pathlib import Path

from ..audit import (
    AuditReport,
    ThresholdLearnerSampler,
    empirical_dp_estimate,
    exact_dp_check,
    LaplaceBins,
    swap_neighbor_pairs,
)
from ..binomial import PRACTICAL, THEORY
from ..dp_core import make_rng
from ..errors import BudgetError, ConfigError, InfeasibleError, ParameterError
from ..learners import LearnParams, item_output_probabilities, learn_item, learn_user
from ..model import HypothesisClass, UserDataset, sample_dataset
from ..threshold import learn_threshold
from .config import _check_keys, build_class, generate_distribution, load_config
from .experiment import run_experiment
from .plot import emit_plot_script

log = logging.getLogger("dpagnostic")

EXIT_OK, EXIT_CONFIG, EXIT_INFEASIBLE, EXIT_BUDGET = 0, 2, 3, 4

LEARNER_COMMANDS = {"learn-item": "item", "learn-user": "user", "learn-threshold": "threshold",
                    "min-error": "min_error"}


def _write(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
        log.info("wrote %s", out)
    else:
        sys.stdout.write(text)


def _experiment_config(args, learner: str | None):
    if not args.config:
        raise ConfigError("--config is required")
    cfg = load_config(args.config)
    return cfg.with_overrides(learner=learner, seed=args.seed, constants_mode=args.mode)


def cmd_learner(args) -> int:
    learner = LEARNER_COMMANDS[args.command]
    cfg = _experiment_config(args, learner)
    if getattr(args, "data", None):
        if learner == "min_error":
            raise ConfigError("--data is not supported for min-error")
        try:
            z = UserDataset.from_text(Path(args.data).read_text(encoding="utf-8"))
        except OSError as exc:
            raise ConfigError(f"cannot read dataset {args.data}: {exc}") from exc
        params = LearnParams(cfg.alpha, cfg.beta, cfg.epsilon, cfg.constants_mode, cfg.slack_scale)
        rng = make_rng(cfg.seed)
        concepts = build_class(cfg.concept_class, z.domain_size)
        if learner == "item":
            h = learn_item(z, concepts, None, params, rng)
        elif learner == "user":
            h = learn_user(z, concepts, None, params, rng)
        else:
            h = learn_threshold(z, params, rng)
        _write(f"hypothesis: {h.id}\n", args.out)
        return EXIT_OK
    _write(run_experiment(cfg, args.parallel), args.out)
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = _experiment_config(args, None)
    _write(run_experiment(cfg, args.parallel), args.out)
    return EXIT_OK


@dataclass(frozen=True)
class AuditConfig:
    kind: str = "empirical_threshold"
    epsilon: float = 2.0
    domain_size: int = 8
    n: int = 20
    m: int = 2
    alpha: float = 0.25
    beta: float = 0.1
    trials: int = 100_000
    seed: int = 0
    constants_mode: str = PRACTICAL

    KINDS = ("exact_item", "empirical_threshold", "empirical_laplace")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ConfigError(f"audit kind must be one of {self.KINDS}")
        if self.constants_mode not in (THEORY, PRACTICAL):
            raise ConfigError("constants_mode must be 'theory' or 'practical'")
        if self.kind == "exact_item" and self.domain_size ** self.n > 10 ** 5:
            raise ConfigError("exact audit enumeration is too large; shrink domain_size or n")


def load_audit_config(path: str | None, seed, mode) -> AuditConfig:
    data = {}
    if path:
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot load audit config {path}: {exc}") from exc
    _check_keys(data, set(AuditConfig.__dataclass_fields__), "audit config")
    if seed is not None:
        data["seed"] = seed
    if mode is not None:
        data["constants_mode"] = mode
    try:
        return AuditConfig(**data)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def threshold_audit_pair(cfg: AuditConfig):
    """A sampled dataset and its neighbor with user 0 replaced by ``m`` copies of ``(|X|, 0)``."""
    D = generate_distribution({"kind": "uniform_label"}, cfg.domain_size)
    z = sample_dataset(D, cfg.n, cfg.m, make_rng(cfg.seed, 0))
    return z, z.replace_user(0, [cfg.domain_size] * cfg.m, [0] * cfg.m)


def run_audit(cfg: AuditConfig, workers: int = 1) -> AuditReport:
    if cfg.kind == "exact_item":
        concepts = HypothesisClass.thresholds(cfg.domain_size)
        return exact_dp_check(
            lambda z: item_output_probabilities(z, concepts, concepts, cfg.epsilon),
            swap_neighbor_pairs(cfg.domain_size, cfg.n, 1), cfg.epsilon,
        )
    if cfg.kind == "empirical_laplace":
        return empirical_dp_estimate(LaplaceBins(cfg.epsilon), (0.0, 1.0), cfg.epsilon,
                                     cfg.trials, cfg.seed, workers)
    params = LearnParams(cfg.alpha, cfg.beta, cfg.epsilon, cfg.constants_mode)
    return empirical_dp_estimate(ThresholdLearnerSampler(params), threshold_audit_pair(cfg),
                                 cfg.epsilon, cfg.trials, cfg.seed, workers)


def cmd_audit(args) -> int:
    cfg = load_audit_config(args.config, args.seed, args.mode)
    report = run_audit(cfg, args.parallel)
    sys.stdout.write(report.to_text())
    if args.out:
        Path(args.out).write_text(AuditReport.csv_header() + "\n" + report.csv_row() + "\n",
                                  encoding="utf-8")
    return EXIT_OK


def cmd_plot(args) -> int:
    if not args.csv:
        raise ConfigError("plot-script needs a CSV path")
    out = emit_plot_script(args.csv, args.out)
    sys.stdout.write(f"{out}\n")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dpagnostic", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in (*LEARNER_COMMANDS, "sweep", "audit", "plot-script"):
        p = sub.add_parser(name)
        p.add_argument("--config", help="JSON configuration file")
        p.add_argument("--seed", type=int, help="override the master seed")
        p.add_argument("--out", help="output path (default: stdout)")
        p.add_argument("--mode", choices=(THEORY, PRACTICAL), help="override the constants mode")
        p.add_argument("--parallel", type=int, default=1, metavar="N", help="worker processes")
        if name in ("learn-item", "learn-user", "learn-threshold"):
            p.add_argument("--data", help="dataset text file; runs one learner call on it")
        if name == "plot-script":
            p.add_argument("csv", nargs="?", help="sweep CSV with aggregate rows")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    handlers = {"sweep": cmd_sweep, "audit": cmd_audit, "plot-script": cmd_plot}
    handler = handlers.get(args.command, cmd_learner)
    try:
        if args.parallel < 1:
            raise ConfigError("--parallel must be at least 1")
        return handler(args)
    except (ConfigError, ParameterError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InfeasibleError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except BudgetError as exc:
        print(f"budget error: {exc}", file=sys.stderr)
        return EXIT_BUDGET


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
