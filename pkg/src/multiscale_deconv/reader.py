from __future__ import annotations

import json
from pathlib import Path
from typing import TextIO, Union

import numpy as np

from .errors import ConfigurationError, DataParseError
from .primitives import QuantileEstimate
from .scenario import Scenario


def parse_data(f: TextIO) -> np.ndarray:
    """One decimal real per line; blank lines are skipped."""
    values = []
    for line_number, line in enumerate(f, start=1):
        text = line.strip()
        if not text:
            continue
        try:
            value = float(text)
        except ValueError:
            raise DataParseError(f"not a decimal number: {text!r}", line_number) from None
        if not np.isfinite(value):
            raise DataParseError(f"non-finite value {text!r}", line_number)
        values.append(value)
    return np.array(values, dtype=float)


def read_data(path: Union[str, Path]) -> np.ndarray:
    path = Path(path)
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = parse_data(f)
    except UnicodeDecodeError as exc:
        raise DataParseError(f"{path} is not UTF-8 text") from exc
    if data.size == 0:
        raise DataParseError(f"{path} contains no observations")
    return data


def read_scenario(path: Union[str, Path]) -> Scenario:
    with open(path, "r", encoding="utf-8") as f:
        return Scenario.loads(f.read())


def read_quantiles(path: Union[str, Path]) -> dict:
    """Quantile table written by the quantiles command."""
    with open(path, "r", encoding="utf-8") as f:
        try:
            table = json.load(f)
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"{path} is not a quantile table: {exc}") from exc
    for key in ("scenario_hash", "alpha_grid", "quantiles", "reps", "seed", "mc_stderr"):
        if key not in table:
            raise ConfigurationError(f"{path} is missing {key!r}")
    return table


def quantile_for(table: dict, alpha: float) -> QuantileEstimate:
    for i, level in enumerate(table["alpha_grid"]):
        if abs(level - alpha) < 1e-12:
            return QuantileEstimate(
                alpha=level,
                value=table["quantiles"][i],
                reps=table["reps"],
                mc_stderr=table["mc_stderr"][i],
                scenario_hash=table["scenario_hash"],
                seed=table["seed"],
            )
    raise ConfigurationError(f"alpha={alpha} is not on the calibrated grid {table['alpha_grid']}")
