"""Command-line interface: register two clouds, synthesize clouds, run batches.

Exit codes: 0 on success, 2 for parse/config errors, 3 for numerical
failures (degenerate inputs, non-converging decompositions).
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

from ._version import __version__
from .cloud_io import load_cloud, save_cloud
from .core import RigidMotion
from .errors import (
    DegenerateCloudError,
    DegenerateCorrespondenceError,
    InvalidInputError,
    NumericalFailureError,
    ParseError,
)
from .harness import config_from_file, run_experiment
from .icp import IcpParams, RegistrationResult, icp, register
from .perturb import Rng, random_cloud


def _parse_bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("true", "1", "yes"):
        return True
    if lowered in ("false", "0", "no"):
        return False
    raise argparse.ArgumentTypeError(f"expected true or false, got {text!r}")


def _motion_dict(motion: RigidMotion) -> dict:
    return {
        "rotation": motion.rotation.tolist(),
        "translation": motion.translation.tolist(),
    }


def _cmd_register(args) -> int:
    source = load_cloud(args.source)
    target = load_cloud(args.target)
    params = IcpParams(allow_reflections=args.allow_reflections)
    if args.no_init:
        identity = RigidMotion.identity(source.d)
        result = RegistrationResult(None, icp(source, target, init=identity, params=params), identity)
    else:
        result = register(source, target, group=args.group, params=params)
    payload = {
        "source": args.source,
        "target": args.target,
        "group": None if args.no_init else args.group,
        "initial_motion": _motion_dict(result.initial_motion),
        "final_motion": _motion_dict(result.final_motion),
        "iterations": result.icp.iterations,
        "converged": result.icp.converged,
        "cost_trace": list(result.icp.cost_trace),
        "final_cost": min(result.icp.cost_trace),
        "warnings": list(result.initialization.warnings) if result.initialization else [],
    }
    if result.initialization is not None:
        payload["chosen_element"] = result.initialization.chosen_element.tolist()
    with open(args.out, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    for warning in payload["warnings"]:
        print(f"warning: {warning}", file=sys.stderr)
    print(f"registered {args.source} -> {args.target}: cost {payload['final_cost']:.6g} "
          f"after {payload['iterations']} iterations; wrote {args.out}")
    return 0


def _cmd_synth(args) -> int:
    cloud = random_cloud(args.n, args.d, args.half_width, Rng(args.seed))
    save_cloud(args.out, cloud)
    print(f"wrote {args.n} uniform points (d={args.d}, half width {args.half_width}) to {args.out}")
    return 0


def _cmd_experiment(args) -> int:
    config = config_from_file(args.config)
    if args.seed is not None:
        config = dataclasses.replace(config, seed=args.seed)
    if args.timings:
        config = dataclasses.replace(config, timings=True)
    report = run_experiment(config, args.out_dir)
    for cell in report.cells:
        p = cell.parameters
        label = (
            f"mult={p.multiplicative_sigma:g} add={p.additive_sigma:g} "
            f"occl={p.occlusion_alpha:g}"
        )
        line = f"{label}: tau={cell.stats.tau:.2f}"
        if cell.identity_stats is not None:
            line += f" (identity-init tau={cell.identity_stats.tau:.2f})"
        print(line)
    print(f"wrote report.csv, report.json, and plot data to {Path(args.out_dir)}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ellipsoid-icp",
        description="Rigid point-cloud registration with covariance-ellipsoid "
        "initialization, plus a seeded experiment harness.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_register = sub.add_parser("register", help="register a source cloud onto a target cloud")
    p_register.add_argument("--source", required=True, help="source cloud file (xyz/csv/ply)")
    p_register.add_argument("--target", required=True, help="target cloud file (xyz/csv/ply)")
    p_register.add_argument(
        "--group",
        choices=("ref", "bd"),
        default="ref",
        help="candidate set for initialization: axis reflections (ref) or "
        "signed permutations (bd)",
    )
    p_register.add_argument(
        "--no-init", action="store_true", help="skip initialization, start ICP from identity"
    )
    p_register.add_argument(
        "--allow-reflections",
        type=_parse_bool,
        default=True,
        metavar="true|false",
        help="estimate over all orthogonal matrices (true) or proper rotations only (false)",
    )
    p_register.add_argument("--out", required=True, help="output json path")
    p_register.set_defaults(func=_cmd_register)

    p_synth = sub.add_parser("synth", help="write a uniform random cloud")
    p_synth.add_argument("--n", type=int, required=True, help="number of points")
    p_synth.add_argument("--d", type=int, default=3, help="dimension (default 3)")
    p_synth.add_argument(
        "--half-width", type=float, default=20.0, help="cube half width (default 20)"
    )
    p_synth.add_argument("--seed", type=int, required=True, help="generator seed")
    p_synth.add_argument("--out", required=True, help="output cloud file (xyz/csv/ply)")
    p_synth.set_defaults(func=_cmd_synth)

    for name, help_text in (
        ("experiment", "run the batch or paired-comparison experiment in a config file"),
        ("sweep", "alias of experiment for parameter-grid configs"),
    ):
        p_exp = sub.add_parser(name, help=help_text)
        p_exp.add_argument("--config", required=True, help="toml or json experiment config")
        p_exp.add_argument("--out-dir", required=True, help="directory for reports and plot data")
        p_exp.add_argument("--seed", type=int, default=None, help="override the config seed")
        p_exp.add_argument(
            "--timings",
            action="store_true",
            help="write wall-clock timings into reports (breaks byte-identical reruns)",
        )
        p_exp.set_defaults(func=_cmd_experiment)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ParseError, InvalidInputError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (NumericalFailureError, DegenerateCloudError, DegenerateCorrespondenceError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
