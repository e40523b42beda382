import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional

import numpy as np

from .densities import Mixture
from .error_models import sample
from .errors import CalibrationError, ConfigurationError, InsufficientRepsError, MultiscaleError
from .experiments import SUMMARY_COLUMNS, coverage, fig2, quantile10k
from .gaussian_sim import quantile, simulate_statistic
from .inference import extract_report, rectangles, report_document
from .output import write_csv, write_data, write_json, write_rectangles
from .reader import quantile_for, read_data, read_quantiles, read_scenario
from .scenario import ALPHA_GRID, Scenario, window_transform
from .teststat import reconstruction, statistics_over_set

logger = logging.getLogger(__name__)

MIN_REPORTED_REPS = 1000


def cmd_quantiles(scenario: Scenario, out: Path, workers: int = 1) -> Path:
    """Simulate the Gaussian statistic and write the quantile table for the alpha grid."""
    if scenario.reps < MIN_REPORTED_REPS:
        raise InsufficientRepsError(
            f"{scenario.reps} replications are too few to report quantiles; use at least {MIN_REPORTED_REPS}"
        )
    path = out / "quantiles.json"
    key = (scenario.scenario_hash, scenario.reps, scenario.seed)
    if path.exists():
        try:
            cached = read_quantiles(path)
        except ConfigurationError:
            cached = None
        if cached is not None and (cached["scenario_hash"], cached["reps"], cached["seed"]) == key:
            print(f"Using cached {path}")
            return path

    config = scenario.config()
    index_set = scenario.build_index_set()
    samples = simulate_statistic(config, index_set, scenario.mode, scenario.reps, scenario.seed, workers)
    estimates = [quantile(samples, alpha) for alpha in ALPHA_GRID]
    write_json(path, {
        "scenario_hash": scenario.scenario_hash,
        "alpha_grid": list(ALPHA_GRID),
        "quantiles": [e.value for e in estimates],
        "mc_stderr": [e.mc_stderr for e in estimates],
        "reps": scenario.reps,
        "seed": scenario.seed,
        "mode": scenario.mode,
        "pairs": len(index_set),
    })
    return path


def cmd_analyze(data_file: Path, scenario: Scenario, quantile_file: Path, out: Path, workers: int = 1) -> List[Path]:
    """Statistics, rectangles, qualitative report and kernel reconstruction for one dataset."""
    raw = read_data(data_file)
    table = read_quantiles(quantile_file)
    if table["scenario_hash"] != scenario.scenario_hash:
        raise CalibrationError(
            f"{quantile_file} was calibrated for scenario {table['scenario_hash'][:12]}, "
            f"not {scenario.scenario_hash[:12]}"
        )
    if table.get("mode", scenario.mode) != scenario.mode:
        raise CalibrationError(f"{quantile_file} holds {table['mode']} quantiles, scenario asks for {scenario.mode}")
    q = quantile_for(table, scenario.alpha)

    shift, scale = window_transform(raw, scenario.window)
    data = (raw - shift) / scale
    if raw.size != scenario.n:
        logger.warning("data file has %d observations, scenario was set up for n=%d", raw.size, scenario.n)

    config = scenario.config()
    index_set = scenario.build_index_set()
    stats_table = statistics_over_set(data, index_set, config, workers=workers)
    rects = rectangles(stats_table, q, expected_hash=scenario.scenario_hash)
    metadata = {
        "data_file": str(data_file),
        "n": int(data.size),
        "transform": {"shift": shift, "scale": scale},
        "q_alpha": q.value,
        "quantile_reps": q.reps,
    }
    report = extract_report(rects, scenario.alpha, metadata)
    curves = reconstruction(data, config, scenario.reconstruction_h)

    paths = [out / "report.json", out / "rectangles.csv", out / "reconstruction.csv"]
    write_json(paths[0], report_document(report, rects, scenario.nu, scenario.mode, scenario.scenario_hash))
    write_rectangles(paths[1], rects)
    write_csv(paths[2], ("h", "t", "estimate"),
              ((h, t, e) for h, ts, es in curves for t, e in zip(ts.tolist(), es.tolist())))
    return paths


def cmd_synthesize(scenario: Scenario, out: Path, seed: Optional[int] = None) -> List[Path]:
    """n draws of X + eps from the scenario's density and error model, plus a JSON sidecar."""
    mixture: Mixture = scenario.mixture()
    err = scenario.error_model()
    seed = scenario.seed if seed is None else seed
    rng = np.random.default_rng(np.random.SeedSequence([seed, 2]))
    values = mixture.sample(scenario.n, rng) + sample(err, scenario.n, rng)
    paths = [out / "data.txt", out / "data.json"]
    write_data(paths[0], values)
    write_json(paths[1], {"density": mixture.to_dict(), "error": scenario.error, "n": scenario.n, "seed": seed})
    return paths


def cmd_reproduce(figure: str, out: Path, reps: Optional[int] = None, seed: int = 0, workers: int = 1) -> List[Path]:
    if figure == "fig2":
        rows = fig2(reps or 10_000, seed, workers)
        path = out / "fig2.csv"
        write_csv(path, SUMMARY_COLUMNS, ([row[c] for c in SUMMARY_COLUMNS] for row in rows))
        return [path]
    if figure == "quantile10k":
        estimate = quantile10k(reps or 10_000, seed, workers)
        path = out / "quantile10k.csv"
        write_csv(path, ("alpha", "value", "mc_stderr", "reps", "seed"),
                  [(estimate.alpha, estimate.value, estimate.mc_stderr, estimate.reps, estimate.seed)])
        return [path]
    if figure == "coverage":
        result = coverage(reps or 300, seed=seed, workers=workers)
        summary, runs = out / "coverage.csv", out / "coverage_runs.csv"
        write_csv(summary, ("reps", "q_alpha", "coverage", "no_artefact_rate", "implication_held", "true_modes"),
                  [(result.reps, result.q_alpha, result.coverage, result.no_artefact_rate,
                    result.implication_held, result.true_modes)])
        columns = ("rep", "covered", "maxima_lower_bound", "mode_count_lower_bound", "increases", "decreases")
        write_csv(runs, columns, ([run[c] for c in columns] for run in result.per_run))
        return [summary, runs]
    raise ConfigurationError(f"unknown figure {figure!r}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description="Multiscale confidence statements for deconvolution problems")
    parser.add_argument("-v", "--verbose", action="store_true", help="Debug logging")
    subparsers = parser.add_subparsers(dest="command", required=True)

    p = subparsers.add_parser("quantiles", help="Calibrate quantiles of the Gaussian statistic")
    p.add_argument("--scenario", required=True, type=Path)
    p.add_argument("--out", required=True, type=Path)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--seed", type=int, help="Override the scenario seed")

    p = subparsers.add_parser("analyze", help="Confidence statements for a dataset")
    p.add_argument("--scenario", required=True, type=Path)
    p.add_argument("--data", required=True, type=Path)
    p.add_argument("--quantiles", required=True, type=Path)
    p.add_argument("--out", required=True, type=Path)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--rescale", action="store_true", help="Map the data range onto [0, 1]")

    p = subparsers.add_parser("synthesize", help="Draw a synthetic dataset from the scenario density")
    p.add_argument("--scenario", required=True, type=Path)
    p.add_argument("--out", required=True, type=Path)
    p.add_argument("--seed", type=int)

    p = subparsers.add_parser("reproduce", help="Reproduction tables")
    p.add_argument("figure", choices=("fig2", "quantile10k", "coverage"))
    p.add_argument("--out", required=True, type=Path)
    p.add_argument("--reps", type=int)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    return parser


def run(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")

    if args.command == "reproduce":
        cmd_reproduce(args.figure, args.out, args.reps, args.seed, args.workers)
        print("Done.")
        return 0

    scenario = read_scenario(args.scenario)
    if args.command == "quantiles":
        if args.seed is not None:
            scenario.seed = args.seed
        cmd_quantiles(scenario, args.out, args.workers)
    elif args.command == "analyze":
        if args.rescale:
            scenario.window = "auto"
        cmd_analyze(args.data, scenario, args.quantiles, args.out, args.workers)
    elif args.command == "synthesize":
        cmd_synthesize(scenario, args.out, args.seed)
    print("Done.")
    return 0


def main(argv: Optional[List[str]] = None) -> int:
    try:
        return run(argv)
    except MultiscaleError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return ConfigurationError.exit_code
