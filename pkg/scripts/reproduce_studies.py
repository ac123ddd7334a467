"""Run every committed study config and collect reports under one directory.

Each study writes report.csv, report.json, and per-figure plot-data series
into results/<study-name>/. All studies are seeded, so rerunning this script
reproduces the committed numbers byte for byte (except the timings study,
which records wall-clock seconds by design).

Run from anywhere: python scripts/reproduce_studies.py [--out-dir DIR]
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

from ellipsoid_icp import config_from_file, run_experiment

CONFIG_DIR = Path(__file__).resolve().parent / "configs"

STUDIES = (
    "multiplicative",
    "additive",
    "occlusion",
    "superpose",
    "no_init_comparison",
    "timings",
)


def run_study(name: str, out_dir: Path, trials: int | None) -> None:
    config = config_from_file(CONFIG_DIR / f"{name}.toml")
    if trials is not None:
        import dataclasses

        config = dataclasses.replace(config, trials=trials)
    t0 = time.perf_counter()
    report = run_experiment(config, out_dir / name)
    elapsed = time.perf_counter() - t0
    print(f"== {name} ({config.trials} trials/cell, {elapsed:.1f}s) ==")
    for cell in report.cells:
        p = cell.parameters
        label = (
            f"mult={p.multiplicative_sigma:g} add={p.additive_sigma:g} "
            f"occl={p.occlusion_alpha:g}"
        )
        line = (
            f"  {label}: tau={cell.stats.tau:.2f} "
            f"median_delta_spec={cell.stats.median['delta_spec']:.4f} "
            f"median_delta_o={cell.stats.median['delta_o']:.4f}"
        )
        if cell.identity_stats is not None:
            line += f" | identity-init tau={cell.identity_stats.tau:.2f}"
        if config.timings:
            line += f" | mean_seconds={cell.stats.mean_seconds:.4f}"
        print(line)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument(
        "--out-dir", type=Path, default=Path("results"), help="report root (default results/)"
    )
    parser.add_argument(
        "--only", choices=STUDIES, action="append",
        help="run just this study (repeatable; default all)",
    )
    parser.add_argument(
        "--trials", type=int, default=None,
        help="override trials per cell, e.g. 10 for a quick smoke run",
    )
    args = parser.parse_args(argv)
    for name in args.only or STUDIES:
        run_study(name, args.out_dir, args.trials)
    print(f"reports written under {args.out_dir}/")
    return 0


if __name__ == "__main__":
    sys.exit(main())
