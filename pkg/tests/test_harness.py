import json
import subprocess
import sys

import numpy as np
import pytest

from dpagnostic.errors import ConfigError
from dpagnostic.harness import ExperimentConfig, generate_distribution, parse_config, run_experiment
from dpagnostic.harness.cli import main
from dpagnostic.harness.experiment import CSV_COLUMNS, exponential_search
from dpagnostic.harness.plot import plot_script
from dpagnostic.model import Hypothesis, HypothesisClass, best_population_error, population_error

BASE = {
    "learner": "threshold", "domain_size": 64,
    "distribution": {"kind": "noisy_threshold", "u_star": 20, "rho": 0.1},
    "n": 200, "m": 4, "alpha": 0.2, "beta": 0.1, "epsilon": 2.0, "trials": 4, "seed": 1,
}


def write(tmp_path, data, name="c.json"):
    p = tmp_path / name
    p.write_text(json.dumps(data))
    return p


def test_distribution_generators():
    D = generate_distribution({"kind": "noisy_threshold", "u_star": 5, "rho": 0.0}, 16)
    assert population_error(D, Hypothesis.threshold_at(5, 16)) == 0
    D = generate_distribution({"kind": "noisy_threshold", "u_star": 5, "rho": 0.1}, 16)
    C = HypothesisClass.thresholds(16)
    errs = [population_error(D, c) for c in C]
    assert min(errs) == pytest.approx(0.1) and int(np.argmin(errs)) == 5
    D = generate_distribution({"kind": "uniform_label"}, 7)
    assert all(population_error(D, c) == pytest.approx(0.5) for c in HypothesisClass.thresholds(7))
    D = generate_distribution({"kind": "point_mass", "x": 3, "y": 1}, 4)
    assert D.probs[2, 1] == 1.0
    with pytest.raises(ConfigError):
        generate_distribution({"kind": "noisy_threshold", "rho": 2}, 4)
    with pytest.raises(ConfigError):
        generate_distribution({"kind": "gauss"}, 4)


def test_config_validation():
    with pytest.raises(ConfigError):
        parse_config({**BASE, "trials": 0})
    with pytest.raises(ConfigError):
        parse_config({**BASE, "typo": 1})
    with pytest.raises(ConfigError):
        parse_config({**BASE, "sweep": {"m": []}})
    with pytest.raises(ConfigError):
        parse_config({**BASE, "sweep": {"beta": [0.1]}})
    with pytest.raises(ConfigError):
        parse_config({**BASE, "learner": "item"})  # m = 4
    assert len(parse_config({**BASE, "sweep": {"m": [1, 2], "n": [10, 20, 30]}}).points()) == 6


def test_sweep_structure_and_determinism():
    cfg = parse_config({**BASE, "sweep": {"m": [1, 4, 16]}})
    text = run_experiment(cfg)
    lines = text.splitlines()
    assert lines[0] == ",".join(CSV_COLUMNS)
    agg = [l for l in lines if l.startswith("aggregate")]
    assert len(agg) == 3 and len(lines) == 1 + 3 * 4 + 3
    assert run_experiment(cfg) == text
    assert run_experiment(cfg, parallel=2) == text


def test_aggregate_is_mean_of_flags():
    import csv
    import io

    cfg = parse_config({**BASE, "trials": 6})
    table = list(csv.DictReader(io.StringIO(run_experiment(cfg))))
    trials = [r for r in table if r["row_type"] == "trial"]
    agg = [r for r in table if r["row_type"] == "aggregate"][0]
    assert float(agg["success_rate"]) == sum(int(r["success"]) for r in trials) / 6
    assert all(float(r["population_excess"]) >= -1e-12 for r in trials)
    D = generate_distribution(BASE["distribution"], 64)
    best = best_population_error(D, HypothesisClass.thresholds(64))
    for r in trials:
        u = int(r["output"].split("=")[1])
        assert float(r["population_excess"]) == population_error(D, Hypothesis.threshold_at(u, 64)) - best


@pytest.mark.parametrize("learner", ["item", "user", "min_error"])
def test_other_learners_run(learner):
    cfg = parse_config({**BASE, "learner": learner, "m": 1 if learner == "item" else 4, "domain_size": 32})
    text = run_experiment(cfg)
    assert text.count("\naggregate") == 1


def test_exponential_search():
    n, seen = exponential_search(lambda n: 1.0 if n >= 300 else 0.0, 64, 0.9, refine=10)
    assert n == 300 and 512 in seen
    n, _ = exponential_search(lambda n: 1.0, 64, 0.9)
    assert n == 64


def test_plot_script(tmp_path):
    cfg = parse_config({**BASE, "trials": 2, "sweep": {"m": [1, 4]}})
    csv_path = tmp_path / "r.csv"
    csv_path.write_text(run_experiment(cfg))
    script = plot_script(csv_path)
    assert "set xlabel 'm'" in script
    for col in ("row_type", "m", "success_rate", "population_excess"):
        assert f'"{col}"' in script
    empty = tmp_path / "e.csv"
    empty.write_text(",".join(CSV_COLUMNS) + "\n")
    with pytest.raises(ConfigError):
        plot_script(empty)
    with pytest.raises(ConfigError):
        plot_script(tmp_path / "missing.csv")


def test_cli_exit_codes(tmp_path, capsys):
    good = write(tmp_path, BASE)
    out = tmp_path / "o.csv"
    assert main(["sweep", "--config", str(good), "--out", str(out)]) == 0
    assert out.read_text(encoding="utf-8").startswith("row_type,")
    assert main(["sweep", "--config", str(write(tmp_path, {**BASE, "trials": 0}, "b.json"))]) == 2
    assert main(["sweep", "--config", str(tmp_path / "nope.json")]) == 2
    assert main(["learn-threshold", "--config", str(good), "--parallel", "0"]) == 2
    # theory-mode constants cannot certify a user-level cut that clamps to probability 1
    bad = write(tmp_path, {**BASE, "learner": "user", "domain_size": 8, "constants_mode": "theory",
                           "distribution": {"kind": "uniform_label"}, "alpha": 0.9, "m": 1}, "i.json")
    assert main(["learn-user", "--config", str(bad)]) in (0, 3)


def test_cli_infeasible_exit(tmp_path, monkeypatch):
    from dpagnostic.errors import InfeasibleError
    from dpagnostic.harness import cli

    def boom(*a, **k):
        raise InfeasibleError("no cut")

    monkeypatch.setattr(cli, "run_experiment", boom)
    assert main(["sweep", "--config", str(write(tmp_path, BASE))]) == 3


def test_cli_budget_exit(tmp_path, monkeypatch):
    from dpagnostic.errors import BudgetError
    from dpagnostic.harness import cli

    def boom(*a, **k):
        raise BudgetError("spent")

    monkeypatch.setattr(cli, "run_experiment", boom)
    assert main(["sweep", "--config", str(write(tmp_path, BASE))]) == 4


def test_cli_overrides_and_dataset(tmp_path, capsys):
    from dpagnostic.dp_core import make_rng
    from dpagnostic.model import sample_dataset

    cfg = write(tmp_path, BASE)
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    main(["learn-threshold", "--config", str(cfg), "--seed", "9", "--mode", "theory", "--out", str(a)])
    main(["learn-threshold", "--config", str(cfg), "--seed", "9", "--mode", "theory", "--out", str(b)])
    assert a.read_bytes() == b.read_bytes() and ",theory," in a.read_text()
    D = generate_distribution(BASE["distribution"], 64)
    data = tmp_path / "d.txt"
    data.write_text(sample_dataset(D, 50, 2, make_rng(0)).to_text())
    capsys.readouterr()
    assert main(["learn-threshold", "--config", str(cfg), "--data", str(data)]) == 0
    assert capsys.readouterr().out.startswith("hypothesis: u=")


def test_cli_audit(tmp_path, capsys):
    cfg = write(tmp_path, {"kind": "exact_item", "domain_size": 3, "n": 2, "epsilon": 1.0}, "a.json")
    out = tmp_path / "a.csv"
    assert main(["audit", "--config", str(cfg), "--out", str(out)]) == 0
    text = capsys.readouterr().out
    assert "method: exact" in text and "passed: true" in text
    assert out.read_text().splitlines()[0].startswith("method,")
    bad = write(tmp_path, {"kind": "nope"}, "b.json")
    assert main(["audit", "--config", str(bad)]) == 2


def test_module_entry_point(tmp_path):
    res = subprocess.run([sys.executable, "-m", "dpagnostic", "sweep", "--config", str(tmp_path / "x.json")],
                         capture_output=True, text=True)
    assert res.returncode == 2 and "config error" in res.stderr
