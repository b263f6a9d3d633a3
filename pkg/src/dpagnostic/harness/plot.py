"""Emit a gnuplot script for the aggregate rows of a sweep CSV."""

from __future__ import annotations

import csv
from pathlib import Path

from ..errors import ConfigError
from .experiment import AGGREGATE

AXES = ("n", "m", "epsilon", "alpha")
Y_COLUMNS = ("success_rate", "population_excess")


def _read(csv_path: Path) -> tuple[list[str], list[dict]]:
    try:
        with open(csv_path, newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            header = reader.fieldnames or []
            table = list(reader)
    except OSError as exc:
        raise ConfigError(f"cannot read {csv_path}: {exc}") from exc
    if "row_type" not in header:
        raise ConfigError(f"{csv_path} is missing the row_type column")
    return header, table


def plot_script(csv_path: str | Path) -> str:
    csv_path = Path(csv_path)
    header, table = _read(csv_path)
    agg = [r for r in table if r.get("row_type") == AGGREGATE]
    if not agg:
        raise ConfigError(f"{csv_path} has no aggregate rows to plot")
    missing = [c for c in Y_COLUMNS if c not in header]
    if missing:
        raise ConfigError(f"{csv_path} lacks column(s) {', '.join(missing)}")
    varying = [a for a in AXES if a in header and len({r[a] for r in agg}) > 1]
    x = varying[0] if varying else "sweep_index"
    logscale = "set logscale x 2\n" if x in ("n", "m") and len(agg) > 2 else ""
    select = f'(strcol("row_type") eq "{AGGREGATE}" ? column("{x}") : NaN)'
    return (
        f"# plots aggregate rows of {csv_path.name}; x axis: {x}\n"
        "set datafile separator ','\n"
        "set datafile columnheaders\n"
        f"set xlabel '{x}'\n"
        "set ylabel 'success rate'\n"
        "set y2label 'mean population excess error'\n"
        "set ytics nomirror\n"
        "set y2tics\n"
        "set yrange [0:1.05]\n"
        f"{logscale}"
        "set key bottom right\n"
        f"plot '{csv_path.name}' using {select}:(column(\"success_rate\")) "
        "with linespoints title 'success rate', \\\n"
        f"     '' using {select}:(column(\"population_excess\")) axes x1y2 "
        "with linespoints title 'population excess'\n"
    )


def emit_plot_script(csv_path: str | Path, out_path: str | Path | None = None) -> Path:
    csv_path = Path(csv_path)
    out = Path(out_path) if out_path else csv_path.with_suffix(".gp")
    out.write_text(plot_script(csv_path), encoding="utf-8")
    return out
