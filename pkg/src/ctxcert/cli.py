"""Command-line front end: experiments, persistence, plot-data emission.

Every run writes into a subdirectory named by the content hash of its
configuration, so identical configurations land in identical places with
byte-identical deterministic payloads; timing and environment details are
quarantined in a separate meta file.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import os
import sys
import time
from dataclasses import asdict
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .fragment import FragmentError, build_fragment, fragment_to_json, load_fragment
from .lp import certify_fragment, classify
from .pom import PomTaskSpec, pom_report
from .sampling import SamplerConfig, fixed_projective_grid
from .typicality import (
    ScenarioError,
    ScenarioSpec,
    calibrate_grid,
    estimate_typicality,
    largest_clean_threshold,
    minimal_preparations,
)

REPORT_SCHEMA_VERSION = 1

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_SCENARIO = 3
EXIT_NUMERICS = 4

SWEEP_CSV_COLUMNS = ("n", "m", "d", "N", "N_s", "t", "wilson_lower", "mean_r", "std_r")


def _config_hash(config: dict) -> str:
    blob = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:12]


def _run_dir(args, command: str, config: dict) -> Path:
    base = Path(args.output_dir or os.environ.get("CTXCERT_OUTPUT_DIR", "runs"))
    path = base / f"{command}-{_config_hash(config)}"
    path.mkdir(parents=True, exist_ok=True)
    return path


def _write_json(path: Path, command: str, config: dict, results: dict, diagnostics: dict):
    payload = {
        "version": REPORT_SCHEMA_VERSION,
        "command": command,
        "config": config,
        "results": results,
        "diagnostics": diagnostics,
    }
    path.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n")


def _write_meta(path: Path, config: dict, wall_time: float, workers: int):
    meta = {
        "timestamp": datetime.now(timezone.utc).isoformat(),
        "wall_time": wall_time,
        "workers": workers,
        "ctxcert_version": __version__,
        "config_hash": _config_hash(config),
    }
    path.write_text(json.dumps(meta, sort_keys=True, indent=2) + "\n")


def _write_csv(path: Path, config: dict, columns, rows):
    with open(path, "w", newline="") as fh:
        fh.write("# config: " + json.dumps(config, sort_keys=True, separators=(",", ":")) + "\n")
        writer = csv.writer(fh)
        writer.writerow(columns)
        writer.writerows(rows)


def _fmt(x) -> str:
    return repr(float(x)) if isinstance(x, (float, np.floating)) else str(x)


def _add_output_flags(p: argparse.ArgumentParser):
    p.add_argument("-o", "--output-dir", default=None,
                   help="base output directory (default: $CTXCERT_OUTPUT_DIR or ./runs)")
    p.add_argument("--formats", default="json,csv",
                   help="comma list from json,csv,jsonl (default json,csv)")


def _add_stochastic_flags(p: argparse.ArgumentParser):
    p.add_argument("--seed", type=int, default=0, help="base seed for all trial streams")
    p.add_argument("--threshold", type=float, default=1e-7,
                   help="classicality threshold on the robustness r")
    p.add_argument("--workers", type=int, default=1, help="worker-pool size")
    p.add_argument("--confidence", type=float, default=0.99,
                   help="confidence level for Wilson bounds")


def _add_sampling_flags(p: argparse.ArgumentParser):
    states = p.add_mutually_exclusive_group()
    states.add_argument("--pure-states", dest="pure_states", action="store_true", default=True)
    states.add_argument("--mixed-states", dest="pure_states", action="store_false")
    p.add_argument("--purity-lower", type=float, default=0.0)
    p.add_argument("--purity-upper", type=float, default=1.0)
    effects = p.add_mutually_exclusive_group()
    effects.add_argument("--projective", dest="effect_kind", action="store_const",
                         const="random_projective", default="random_projective")
    effects.add_argument("--povm", dest="effect_kind", action="store_const",
                         const="random_povm")
    effects.add_argument("--fixed-grid", dest="effect_kind", action="store_const",
                         const="fixed_grid")
    effects.add_argument("--effects-file", default=None,
                         help="fragment-schema JSON whose measurements are used in every trial")
    p.add_argument("--sharpness-lower", type=float, default=0.0)
    p.add_argument("--sharpness-upper", type=float, default=1.0)
    p.add_argument("--max-rejections", type=int, default=10**6,
                   help="rejection budget for purity-windowed sampling")


def _scenario_from_args(args, n: int, m: int) -> ScenarioSpec:
    mode = args.effect_kind
    fixed = ()
    if args.effects_file is not None:
        mode = "fixed_list"
        _, fixed = load_fragment(args.effects_file)
    state_sampler = SamplerConfig(dim=args.d, pure=args.pure_states,
                                  purity_lower=args.purity_lower,
                                  purity_upper=args.purity_upper,
                                  max_rejections=args.max_rejections)
    effect_sampler = SamplerConfig(dim=args.d, pure=(mode == "random_projective"),
                                   purity_lower=args.sharpness_lower,
                                   purity_upper=args.sharpness_upper,
                                   max_rejections=args.max_rejections)
    return ScenarioSpec(n=n, m=m, d=args.d, trials=args.trials,
                        state_sampler=state_sampler, effect_mode=mode,
                        effect_sampler=effect_sampler, fixed_effects=fixed,
                        threshold=args.threshold, base_seed=args.seed)


def _scenario_config(args, spec: ScenarioSpec, command: str) -> dict:
    return {
        "command": command,
        "n": spec.n, "m": spec.m, "d": spec.d, "N": spec.trials,
        "effect_mode": spec.effect_mode,
        "state_sampler": asdict(spec.state_sampler),
        "effect_sampler": asdict(spec.effect_sampler),
        "effects_file": args.effects_file,
        "threshold": spec.threshold,
        "confidence": args.confidence,
        "seed": spec.base_seed,
    }


def _report_results(report) -> dict:
    results = {
        "typicality": report.typicality,
        "wilson_lower": report.wilson_lower,
        "contextual_count": report.contextual_count,
        "valid_trials": report.valid_trials,
        "mean_r": report.mean_r,
        "std_r": report.std_r,
    }
    return results


def _parse_range(text: str) -> list[int]:
    if ".." in text:
        lo, hi = text.split("..", 1)
        values = list(range(int(lo), int(hi) + 1))
    else:
        values = [int(v) for v in text.split(",")]
    if not values or any(v < 1 for v in values):
        raise argparse.ArgumentTypeError(f"bad range {text!r}")
    return values


# ---------------------------------------------------------------- commands


def cmd_embed(args) -> int:
    try:
        if args.fragment is not None:
            states, measurements = load_fragment(args.fragment)
        elif args.states_file and args.effects_file:
            states, _ = load_fragment(args.states_file)
            _, measurements = load_fragment(args.effects_file)
        else:
            print("embed needs a fragment file, or --states-file with --effects-file",
                  file=sys.stderr)
            return EXIT_INPUT
        frag = build_fragment(states, measurements)
    except (FragmentError, OSError, ValueError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT

    config = {
        "command": "embed",
        "fragment": args.fragment or args.states_file,
        "threshold": args.threshold,
        "solver": args.solver,
        "n": frag.n_states, "m": frag.n_measurements, "d": frag.dim,
    }
    run_dir = _run_dir(args, "embed", config)
    solver = None if args.solver == "auto" else args.solver
    result = certify_fragment(frag, solver=solver)
    if not result.ok:
        print("numerical failure: both solve paths failed the residual checks",
              file=sys.stderr)
        return EXIT_NUMERICS
    verdict = classify(result, args.threshold)
    word = "contextual" if verdict.contextual else "noncontextual"
    print(f"r = {result.r:.6g}  [{word} at threshold {args.threshold:g}]")
    print(f"solver: {result.solver_status}  residual: {result.residual:.3g}")

    results = {"r": result.r, "contextual": verdict.contextual,
               "solver_status": result.solver_status}
    _write_json(run_dir / "report.json", "embed", config, results,
                {"residual_max": result.residual, "failed_trials": 0})
    _write_meta(run_dir / "meta.json", config, result.wall_time, 1)
    if args.dump_cones:
        _, h_states, h_effects = _cones_for_dump(frag)
        np.savetxt(run_dir / "H_states.csv", h_states.facets, delimiter=",")
        np.savetxt(run_dir / "H_effects.csv", h_effects.facets, delimiter=",")
    print(f"wrote {run_dir}")
    return EXIT_OK


def _cones_for_dump(frag):
    from .lp import cones_of_fragment

    return cones_of_fragment(frag)


def cmd_typicality(args) -> int:
    spec = _scenario_from_args(args, args.n, args.m)
    config = _scenario_config(args, spec, "typicality")
    run_dir = _run_dir(args, "typicality", config)
    formats = set(args.formats.split(","))
    t0 = time.perf_counter()
    jsonl = run_dir / "trials.jsonl" if "jsonl" in formats else None
    header = {"type": "config", "version": REPORT_SCHEMA_VERSION, "config": config}
    report = estimate_typicality(spec, workers=args.workers,
                                 confidence=args.confidence, jsonl_path=jsonl,
                                 jsonl_header=header)
    wall = time.perf_counter() - t0
    if report.error is not None:
        print(f"numerical failure: {report.error}", file=sys.stderr)
        return EXIT_NUMERICS
    print(f"typicality t = {report.typicality:.4f}  "
          f"(Wilson lower bound {report.wilson_lower:.4f} at {args.confidence:.0%})")
    print(f"contextual {report.contextual_count}/{report.valid_trials} valid trials; "
          f"mean r = {report.mean_r:.4f}, std {report.std_r:.4f}")
    diagnostics = {"failed_trials": report.failed_trials,
                   "residual_max": report.residual_max}
    if "json" in formats:
        _write_json(run_dir / "report.json", "typicality", config,
                    _report_results(report), diagnostics)
    if "csv" in formats:
        row = (spec.n, spec.m, spec.d, spec.trials, report.valid_trials,
               report.typicality, report.wilson_lower, report.mean_r, report.std_r)
        _write_csv(run_dir / "report.csv", config, SWEEP_CSV_COLUMNS,
                   [[_fmt(v) for v in row]])
    _write_meta(run_dir / "meta.json", config, wall, args.workers)
    print(f"wrote {run_dir}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    ns = args.n
    ms = args.m
    spec0 = _scenario_from_args(args, ns[0], ms[0])
    config = _scenario_config(args, spec0, "sweep")
    config["n"] = ns
    config["m"] = ms
    run_dir = _run_dir(args, "sweep", config)
    formats = set(args.formats.split(","))
    rows = []
    cells = {}
    failed_total = 0
    residual_max = 0.0
    t0 = time.perf_counter()
    for n in ns:
        for m in ms:
            spec = _scenario_from_args(args, n, m)
            report = estimate_typicality(spec, workers=args.workers,
                                         confidence=args.confidence)
            if report.error is not None:
                print(f"numerical failure at (n={n}, m={m}): {report.error}",
                      file=sys.stderr)
                return EXIT_NUMERICS
            failed_total += report.failed_trials
            residual_max = max(residual_max, report.residual_max)
            rows.append([_fmt(v) for v in (
                n, spec.m, spec.d, spec.trials, report.valid_trials,
                report.typicality, report.wilson_lower, report.mean_r, report.std_r)])
            cells[f"n={n},m={spec.m}"] = _report_results(report)
            print(f"n={n:3d} m={spec.m:3d}  t={report.typicality:.4f}  "
                  f"mean_r={report.mean_r:.4f}")
    wall = time.perf_counter() - t0
    if "csv" in formats:
        _write_csv(run_dir / "report.csv", config, SWEEP_CSV_COLUMNS, rows)
    if "json" in formats:
        _write_json(run_dir / "report.json", "sweep", config, {"cells": cells},
                    {"failed_trials": failed_total, "residual_max": residual_max})
    _write_meta(run_dir / "meta.json", config, wall, args.workers)
    print(f"wrote {run_dir}")
    return EXIT_OK


def cmd_minimal_preps(args) -> int:
    if args.m < 2:
        print("warning: a single binary measurement can never reveal contextuality; "
              "the search would not terminate", file=sys.stderr)
        return EXIT_SCENARIO
    spec = _scenario_from_args(args, args.n_start, args.m)
    config = _scenario_config(args, spec, "minimal-preps")
    config.update({"target_t": args.target_t, "n_start": args.n_start, "n_max": args.n_max})
    run_dir = _run_dir(args, "minimal-preps", config)
    t0 = time.perf_counter()
    try:
        n = minimal_preparations(spec, target_t=args.target_t, n_start=args.n_start,
                                 n_max=args.n_max, workers=args.workers)
    except ScenarioError as exc:
        print(f"scenario error: {exc}", file=sys.stderr)
        return EXIT_SCENARIO
    wall = time.perf_counter() - t0
    print(f"minimal preparations: n = {n}")
    _write_json(run_dir / "report.json", "minimal-preps", config,
                {"minimal_n": n}, {"failed_trials": 0})
    _write_meta(run_dir / "meta.json", config, wall, args.workers)
    print(f"wrote {run_dir}")
    return EXIT_OK


def cmd_pom(args) -> int:
    case = args.case.replace("-", "_")
    if case == "rf":
        case = "rf_misalignment"
    trials = 1 if case == "optimal" else args.trials
    spec = PomTaskSpec(case=case, trials=trials, threshold=args.threshold,
                       base_seed=args.seed, state_variant=args.state_variant)
    config = {
        "command": "pom", "case": case, "N": trials, "threshold": args.threshold,
        "seed": args.seed, "confidence": args.confidence,
        "state_variant": args.state_variant,
    }
    run_dir = _run_dir(args, "pom", config)
    report = pom_report(spec, workers=args.workers, confidence=args.confidence)
    if report.error is not None:
        print(f"numerical failure: {report.error}", file=sys.stderr)
        return EXIT_NUMERICS
    print(f"case {case}: t = {report.typicality:.4f}, mean r = {report.mean_r:.4f}, "
          f"mean s = {report.mean_s:.4f}, advantage = {report.mean_advantage * 100:.2f}%")
    results = {k: v for k, v in asdict(report).items()
               if k not in ("wall_time", "error", "residual_max")}
    formats = set(args.formats.split(","))
    if "json" in formats:
        _write_json(run_dir / "report.json", "pom", config, results,
                    {"failed_trials": report.failed_trials,
                     "residual_max": report.residual_max})
    if "csv" in formats:
        columns = ("strategy", "typicality", "mean_robustness", "mean_advantage",
                   "std_s", "std_r", "N_s")
        row = (case, report.typicality, report.mean_r, report.mean_advantage,
               report.std_s, report.std_r, report.valid_trials)
        _write_csv(run_dir / "report.csv", config, columns, [[_fmt(v) for v in row]])
    _write_meta(run_dir / "meta.json", config, report.wall_time, args.workers)
    print(f"wrote {run_dir}")
    return EXIT_OK


def cmd_calibrate(args) -> int:
    thresholds = tuple(float(v) for v in args.thresholds.split(","))
    trial_counts = tuple(int(v) for v in args.trial_counts.split(","))
    samplings = ("pure", "mixed") if args.sampling == "both" else (args.sampling,)
    config = {
        "command": "calibrate", "thresholds": sorted(thresholds),
        "trial_counts": sorted(trial_counts), "sampling": sorted(samplings),
        "seed": args.seed, "d": args.d,
    }
    run_dir = _run_dir(args, "calibrate", config)
    t0 = time.perf_counter()
    rows = []
    for sampling in samplings:
        rows.extend(calibrate_grid(thresholds=thresholds, trial_counts=trial_counts,
                                   d=args.d, pure=(sampling == "pure"),
                                   base_seed=args.seed, workers=args.workers))
    wall = time.perf_counter() - t0
    clean = largest_clean_threshold(rows)
    print(f"{'solver':8s} {'sampling':8s} {'N':>6s} {'threshold':>10s} "
          f"{'typicality':>10s} {'max_r':>10s} {'time/s':>8s}")
    for row in rows:
        print(f"{row['solver']:8s} {row['sampling']:8s} {row['N']:6d} "
              f"{row['threshold']:10.0e} {row['typicality']:10.4f} "
              f"{row['max_r']:10.2e} {row['wall_time']:8.2f}")
    print(f"largest threshold with typicality exactly 0 in all cells: {clean}")
    formats = set(args.formats.split(","))
    if "csv" in formats:
        columns = ("solver", "sampling", "N", "threshold", "typicality", "max_r")
        _write_csv(run_dir / "report.csv", config, columns,
                   [[row["solver"], row["sampling"], row["N"], _fmt(row["threshold"]),
                     _fmt(row["typicality"]), _fmt(row["max_r"])] for row in rows])
    if "json" in formats:
        results = {
            "largest_clean_threshold": clean,
            "rows": [{k: v for k, v in row.items() if k != "wall_time"} for row in rows],
        }
        _write_json(run_dir / "report.json", "calibrate", config, results,
                    {"failed_trials": 0})
    _write_meta(run_dir / "meta.json", config, wall, args.workers)
    print(f"wrote {run_dir}")
    return EXIT_OK


def cmd_grid_info(args) -> int:
    measurements, report = fixed_projective_grid()
    print(f"raw kets:            {report.raw_kets}")
    print(f"distinct projectors: {report.distinct_projectors}")
    print(f"measurements:        {report.measurements}")
    print(f"effects:             {report.effects}")
    print(f"duplicates removed:  {report.duplicates_removed}")
    if args.save_effects:
        doc = fragment_to_json([], measurements)
        Path(args.save_effects).write_text(json.dumps(doc))
        print(f"wrote {args.save_effects}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ctxcert",
        description="Certify contextuality of prepare-and-measure fragments and "
                    "estimate how typical contextuality is under random sampling.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("embed", help="certify one fragment file")
    p.add_argument("fragment", nargs="?", default=None,
                   help="fragment-schema JSON with states and measurements")
    p.add_argument("--states-file", default=None)
    p.add_argument("--effects-file", default=None)
    p.add_argument("--threshold", type=float, default=1e-7)
    p.add_argument("--solver", choices=("auto", "ds", "ipm"), default="auto")
    p.add_argument("--dump-cones", action="store_true",
                   help="also write the facet matrices as CSV")
    _add_output_flags(p)
    p.set_defaults(func=cmd_embed)

    p = sub.add_parser("typicality", help="Monte Carlo typicality of one scenario")
    p.add_argument("-n", type=int, required=True, help="number of preparations")
    p.add_argument("-m", type=int, default=2, help="number of dichotomic measurements")
    p.add_argument("-d", type=int, default=2, help="Hilbert space dimension")
    p.add_argument("-N", "--trials", type=int, default=1000)
    _add_sampling_flags(p)
    _add_stochastic_flags(p)
    _add_output_flags(p)
    p.set_defaults(func=cmd_typicality)

    p = sub.add_parser("sweep", help="typicality over (n, m) ranges, CSV per cell")
    p.add_argument("-n", type=_parse_range, required=True, help="range like 4..10")
    p.add_argument("-m", type=_parse_range, required=True, help="range like 2..10")
    p.add_argument("-d", type=int, default=2)
    p.add_argument("-N", "--trials", type=int, default=1000)
    _add_sampling_flags(p)
    _add_stochastic_flags(p)
    _add_output_flags(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("minimal-preps",
                       help="smallest n with typicality above the target")
    p.add_argument("-m", type=int, required=True)
    p.add_argument("-d", type=int, default=2)
    p.add_argument("-N", "--trials", type=int, default=1000)
    p.add_argument("--target-t", type=float, default=0.99)
    p.add_argument("--n-start", type=int, default=4)
    p.add_argument("--n-max", type=int, default=25)
    _add_sampling_flags(p)
    _add_stochastic_flags(p)
    _add_output_flags(p)
    p.set_defaults(func=cmd_minimal_preps)

    p = sub.add_parser("pom", help="parity-oblivious multiplexing case studies")
    p.add_argument("--case", default="optimal",
                   choices=("optimal", "random-projective", "random-povm",
                            "rf", "rf-misalignment"))
    p.add_argument("-N", "--trials", type=int, default=1000)
    p.add_argument("--state-variant", choices=("symmetric", "printed"),
                   default="symmetric")
    _add_stochastic_flags(p)
    _add_output_flags(p)
    p.set_defaults(func=cmd_pom)

    p = sub.add_parser("calibrate",
                       help="threshold calibration on the (n=4, m=2) sanity scenario")
    p.add_argument("-d", type=int, default=2)
    p.add_argument("--thresholds", default="1e-5,1e-6,1e-7,1e-8,1e-9")
    p.add_argument("--trial-counts", default="100,1000,10000")
    p.add_argument("--sampling", choices=("pure", "mixed", "both"), default="both")
    _add_stochastic_flags(p)
    _add_output_flags(p)
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("grid-info", help="report the fixed projective grid counts")
    p.add_argument("--save-effects", default=None,
                   help="write the grid as a fragment-schema effects file")
    p.set_defaults(func=cmd_grid_info)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ScenarioError as exc:
        print(f"scenario error: {exc}", file=sys.stderr)
        return EXIT_SCENARIO
    except FragmentError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
