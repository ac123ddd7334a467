"""Seeded Monte-Carlo experiment batches over corruption parameter grids.

A batch runs `trials` independent scenes per grid cell: draw a random scene
from the configured cloud, corrupt the target, register, and score. Every
trial's randomness is keyed by (seed, cell index, trial index), so reports
are byte-reproducible from (config, seed) and independent of execution
order. Wall-clock timings are always measured in memory but only written to
report files when explicitly enabled, since they would break byte-identical
reproduction.
"""

from __future__ import annotations

import csv
import dataclasses
import json
import math
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:
    import tomli as tomllib

from ._version import __version__
from .cloud_io import load_cloud
from .core import PointCloud, RigidMotion
from .errors import InvalidInputError, ParseError
from .icp import IcpParams, RegistrationResult, icp as run_icp
from .initialization import ellipsoid_init
from .metrics import TrialRecord, evaluate, success_rate
from .perturb import CorruptionSpec, Rng, corrupt_scene, random_cloud, random_scene

SCHEMA_VERSION = 1

METRIC_FIELDS = ("nu", "delta", "delta_spec", "delta_o", "delta_h", "delta_icp", "delta_icp_o")

_KINDS = ("batch", "compare_no_init")
_CORRUPTION_KINDS = ("none", "multiplicative", "additive", "occlusion", "superpose")


@dataclass(frozen=True)
class SyntheticCloudSpec:
    """Uniform-cube source cloud drawn per batch (one cloud, fixed by the seed)."""

    n: int
    d: int = 3
    half_width: float = 20.0

    def __post_init__(self):
        if self.n < 1 or self.d < 1:
            raise InvalidInputError("synthetic cloud needs n >= 1 and d >= 1")
        if self.half_width <= 0.0:
            raise InvalidInputError("synthetic cloud half_width must be positive")


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything that determines a batch: cloud, corruption grid, solver, seed."""

    seed: int
    kind: str = "batch"
    trials: int = 100
    group: str = "ref"
    success_threshold: float = 0.05
    score_sample: int | None = None
    cloud_path: str | None = None
    synthetic: SyntheticCloudSpec | None = None
    corruption_kind: str = "none"
    cells: tuple = (CorruptionSpec(),)
    icp_params: IcpParams = IcpParams()
    timings: bool = False

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise InvalidInputError(f"kind must be one of {_KINDS}, got {self.kind!r}")
        if self.trials < 1:
            raise InvalidInputError("trials must be at least 1")
        if self.group not in ("ref", "bd"):
            raise InvalidInputError(f"group must be 'ref' or 'bd', got {self.group!r}")
        if self.success_threshold <= 0.0:
            raise InvalidInputError("success_threshold must be positive")
        if not self.cells:
            raise InvalidInputError("corruption grid is empty")
        if (self.cloud_path is None) == (self.synthetic is None):
            raise InvalidInputError(
                "configure exactly one cloud source: a file path or a synthetic spec"
            )


@dataclass(frozen=True)
class CellStats:
    """Aggregates of one cell's trial records."""

    n_trials: int
    tau: float
    mean: dict
    median: dict
    mean_seconds: float


@dataclass(frozen=True, eq=False)
class CellReport:
    """One grid cell: its corruption parameters, aggregates, and raw records.

    The identity fields are populated only by paired comparison runs, where
    every scene is solved twice: initialized registration vs ICP started
    from the identity motion.
    """

    parameters: CorruptionSpec
    stats: CellStats
    records: tuple
    identity_stats: CellStats | None = None
    identity_records: tuple | None = None


@dataclass(frozen=True, eq=False)
class BatchReport:
    """Full experiment output: config echo plus per-cell results."""

    kind: str
    seed: int
    config: dict
    cells: tuple
    schema_version: int = SCHEMA_VERSION
    version: str = __version__


def _require_keys(section: dict, allowed, where: str) -> None:
    unknown = sorted(set(section) - set(allowed))
    if unknown:
        raise ParseError(f"unknown {where} keys: {', '.join(unknown)}")


def _cells_from_section(section: dict) -> tuple[str, tuple]:
    _require_keys(section, ("kind", "grid", "cells"), "corruption")
    kind = section.get("kind", "none")
    if kind not in _CORRUPTION_KINDS:
        raise ParseError(f"corruption kind must be one of {_CORRUPTION_KINDS}, got {kind!r}")
    if kind == "none":
        if "grid" in section or "cells" in section:
            raise ParseError("corruption kind 'none' takes no grid or cells")
        return kind, (CorruptionSpec(),)
    if kind == "superpose":
        rows = section.get("cells")
        if not rows:
            raise ParseError("corruption kind 'superpose' needs a nonempty cells list")
        cells = []
        for row in rows:
            _require_keys(
                row,
                ("multiplicative_sigma", "additive_sigma", "occlusion_alpha"),
                "corruption cell",
            )
            cells.append(CorruptionSpec(**{k: float(v) for k, v in row.items()}))
        return kind, tuple(cells)
    grid = section.get("grid")
    if not grid:
        raise ParseError(f"corruption kind {kind!r} needs a nonempty grid of parameters")
    field = {
        "multiplicative": "multiplicative_sigma",
        "additive": "additive_sigma",
        "occlusion": "occlusion_alpha",
    }[kind]
    return kind, tuple(CorruptionSpec(**{field: float(v)}) for v in grid)


def config_from_dict(data: dict, base_dir=None) -> ExperimentConfig:
    """Build a validated config from parsed toml/json data.

    Relative cloud paths are resolved against `base_dir` (the config file's
    directory when loaded from disk).
    """
    _require_keys(
        data,
        (
            "kind",
            "trials",
            "seed",
            "group",
            "success_threshold",
            "score_sample",
            "cloud",
            "corruption",
            "icp",
            "output",
        ),
        "config",
    )
    if "seed" not in data:
        raise ParseError("config must set a seed")
    cloud = data.get("cloud")
    if not isinstance(cloud, dict):
        raise ParseError("config must have a [cloud] section with 'path' or 'synthetic'")
    _require_keys(cloud, ("path", "synthetic"), "cloud")
    cloud_path = None
    synthetic = None
    if "path" in cloud:
        cloud_path = str(cloud["path"])
        if base_dir is not None and not Path(cloud_path).is_absolute():
            cloud_path = str(Path(base_dir) / cloud_path)
    if "synthetic" in cloud:
        synth = cloud["synthetic"]
        _require_keys(synth, ("n", "d", "half_width"), "cloud.synthetic")
        try:
            synthetic = SyntheticCloudSpec(**synth)
        except TypeError as exc:
            raise ParseError(f"bad cloud.synthetic section: {exc}") from None

    corruption_kind, cells = _cells_from_section(data.get("corruption", {}))

    icp_section = dict(data.get("icp", {}))
    _require_keys(
        icp_section,
        ("max_iterations", "relative_tolerance", "cost_floor_scale", "allow_reflections"),
        "icp",
    )
    icp_params = IcpParams(**icp_section)

    output = data.get("output", {})
    _require_keys(output, ("timings",), "output")

    score_sample = data.get("score_sample")
    if score_sample in (0, None):
        score_sample = None
    else:
        score_sample = int(score_sample)
        if score_sample < 1:
            raise ParseError("score_sample must be positive (or 0 for the full cloud)")

    return ExperimentConfig(
        seed=int(data["seed"]),
        kind=data.get("kind", "batch"),
        trials=int(data.get("trials", 100)),
        group=data.get("group", "ref"),
        success_threshold=float(data.get("success_threshold", 0.05)),
        score_sample=score_sample,
        cloud_path=cloud_path,
        synthetic=synthetic,
        corruption_kind=corruption_kind,
        cells=cells,
        icp_params=icp_params,
        timings=bool(output.get("timings", False)),
    )


def config_from_file(path) -> ExperimentConfig:
    """Load a toml or json experiment config; see config_from_dict."""
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ParseError(f"cannot read config: {exc.strerror or exc}", path=path) from exc
    if p.suffix.lower() == ".json":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid json: {exc.msg}", path=path, line=exc.lineno) from None
    elif p.suffix.lower() == ".toml":
        try:
            data = tomllib.loads(text)
        except tomllib.TOMLDecodeError as exc:
            raise ParseError(f"invalid toml: {exc}", path=path) from None
    else:
        raise ParseError("config must be a .toml or .json file", path=path)
    if not isinstance(data, dict):
        raise ParseError("config root must be a table/object", path=path)
    return config_from_dict(data, base_dir=p.parent)


def config_to_dict(config: ExperimentConfig) -> dict:
    """Plain round-trippable dict echoed into every report."""
    if config.cloud_path is not None:
        cloud = {"path": config.cloud_path}
    else:
        cloud = {"synthetic": dataclasses.asdict(config.synthetic)}
    corruption = {"kind": config.corruption_kind}
    if config.corruption_kind == "superpose":
        corruption["cells"] = [dataclasses.asdict(c) for c in config.cells]
    elif config.corruption_kind != "none":
        field = f"{config.corruption_kind}_sigma"
        if config.corruption_kind == "occlusion":
            field = "occlusion_alpha"
        corruption["grid"] = [getattr(c, field) for c in config.cells]
    return {
        "kind": config.kind,
        "trials": config.trials,
        "seed": config.seed,
        "group": config.group,
        "success_threshold": config.success_threshold,
        "score_sample": config.score_sample,
        "cloud": cloud,
        "corruption": corruption,
        "icp": dataclasses.asdict(config.icp_params),
        "output": {"timings": config.timings},
    }


def _resolve_cloud(config: ExperimentConfig) -> PointCloud:
    if config.cloud_path is not None:
        return load_cloud(config.cloud_path)
    spec = config.synthetic
    return random_cloud(spec.n, spec.d, spec.half_width, Rng(config.seed).child("cloud"))


def _run_trial(
    source: PointCloud, spec: CorruptionSpec, rng: Rng, config: ExperimentConfig, with_init: bool
) -> TrialRecord:
    """One scene: draw truth, corrupt, register (or identity-init ICP), score."""
    scene = random_scene(source, rng.child("scene"))
    if not spec.is_clean:
        scene = corrupt_scene(scene, spec, rng.child("corrupt"))
    if with_init:
        t0 = time.perf_counter()
        init_result = ellipsoid_init(
            scene.source, scene.target, group=config.group, score_sample=config.score_sample
        )
        t1 = time.perf_counter()
        icp_result = run_icp(
            scene.source, scene.target, init=init_result.motion, params=config.icp_params
        )
        t2 = time.perf_counter()
        result = RegistrationResult(init_result, icp_result, init_result.motion)
        seconds_init = t1 - t0
    else:
        identity = RigidMotion.identity(source.d)
        t1 = time.perf_counter()
        icp_result = run_icp(scene.source, scene.target, init=identity, params=config.icp_params)
        t2 = time.perf_counter()
        result = RegistrationResult(None, icp_result, identity)
        seconds_init = 0.0
    record = evaluate(scene, result, threshold=config.success_threshold)
    return dataclasses.replace(record, seconds_init=seconds_init, seconds_icp=t2 - t1)


def _aggregate(records) -> CellStats:
    mean = {}
    median = {}
    for field in METRIC_FIELDS:
        values = [getattr(r, field) for r in records if getattr(r, field) is not None]
        mean[field] = float(np.mean(values)) if values else math.nan
        median[field] = float(np.median(values)) if values else math.nan
    return CellStats(
        n_trials=len(records),
        tau=success_rate(records),
        mean=mean,
        median=median,
        mean_seconds=float(np.mean([r.seconds_init + r.seconds_icp for r in records])),
    )


def run_batch(config: ExperimentConfig) -> BatchReport:
    """Run every (cell, trial) pair once with initialized registration."""
    source = _resolve_cloud(config)
    cells = []
    for c, spec in enumerate(config.cells):
        records = tuple(
            _run_trial(source, spec, Rng(config.seed).child("cell", c, "trial", t), config, True)
            for t in range(config.trials)
        )
        cells.append(CellReport(parameters=spec, stats=_aggregate(records), records=records))
    return BatchReport(
        kind="batch", seed=config.seed, config=config_to_dict(config), cells=tuple(cells)
    )


def compare_no_init(config: ExperimentConfig) -> BatchReport:
    """Run every scene twice: initialized registration vs identity-started ICP.

    Both arms replay the identical scene (same sub-seed), so the report
    isolates exactly what initialization contributes.
    """
    source = _resolve_cloud(config)
    cells = []
    for c, spec in enumerate(config.cells):
        with_init = []
        identity = []
        for t in range(config.trials):
            rng = Rng(config.seed).child("cell", c, "trial", t)
            with_init.append(_run_trial(source, spec, rng, config, True))
            identity.append(_run_trial(source, spec, rng, config, False))
        cells.append(
            CellReport(
                parameters=spec,
                stats=_aggregate(with_init),
                records=tuple(with_init),
                identity_stats=_aggregate(identity),
                identity_records=tuple(identity),
            )
        )
    return BatchReport(
        kind="compare_no_init",
        seed=config.seed,
        config=config_to_dict(config),
        cells=tuple(cells),
    )


_CSV_COLUMNS = (
    "multiplicative_sigma",
    "additive_sigma",
    "occlusion_alpha",
    "n_trials",
    "tau",
    "mean_nu",
    "median_nu",
    "mean_delta",
    "median_delta",
    "mean_delta_spec",
    "median_delta_spec",
    "mean_delta_o",
    "median_delta_o",
    "mean_delta_h",
    "median_delta_h",
    "mean_delta_icp",
    "median_delta_icp",
    "mean_delta_icp_o",
    "median_delta_icp_o",
    "mean_seconds",
)


def _fmt(value) -> str:
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return "nan"
    return format(float(value), ".17g")


def _csv_row(parameters: CorruptionSpec, stats: CellStats, timings: bool) -> list:
    row = [
        _fmt(parameters.multiplicative_sigma),
        _fmt(parameters.additive_sigma),
        _fmt(parameters.occlusion_alpha),
        str(stats.n_trials),
        _fmt(stats.tau),
    ]
    for field in METRIC_FIELDS:
        row.append(_fmt(stats.mean[field]))
        row.append(_fmt(stats.median[field]))
    # timings are nondeterministic; leave the column empty unless asked for
    row.append(_fmt(stats.mean_seconds) if timings else "")
    return row


def save_report_csv(report: BatchReport, path, timings: bool = False) -> None:
    """Per-cell aggregate table; paired runs add a sibling *_identity.csv."""
    path = Path(path)

    def write(rows, target):
        with open(target, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(_CSV_COLUMNS)
            writer.writerows(rows)

    write([_csv_row(c.parameters, c.stats, timings) for c in report.cells], path)
    if any(c.identity_stats is not None for c in report.cells):
        write(
            [
                _csv_row(c.parameters, c.identity_stats, timings)
                for c in report.cells
                if c.identity_stats is not None
            ],
            path.with_name(path.stem + "_identity" + path.suffix),
        )


def _clean_float(value):
    if value is None:
        return None
    value = float(value)
    return None if math.isnan(value) else value


def _record_dict(record: TrialRecord, timings: bool) -> dict:
    out = {field: _clean_float(getattr(record, field)) for field in METRIC_FIELDS}
    out["success"] = record.success
    if timings:
        out["seconds_init"] = record.seconds_init
        out["seconds_icp"] = record.seconds_icp
    return out


def _stats_dict(stats: CellStats, records, timings: bool) -> dict:
    return {
        "n_trials": stats.n_trials,
        "tau": stats.tau,
        "mean": {k: _clean_float(v) for k, v in stats.mean.items()},
        "median": {k: _clean_float(v) for k, v in stats.median.items()},
        "mean_seconds": stats.mean_seconds if timings else None,
        "records": [_record_dict(r, timings) for r in records],
    }


def save_report_json(report: BatchReport, path, timings: bool = False) -> None:
    """Full report: config echo, per-cell aggregates, and per-trial records."""
    cells = []
    for cell in report.cells:
        entry = {"parameters": dataclasses.asdict(cell.parameters)}
        entry.update(_stats_dict(cell.stats, cell.records, timings))
        if cell.identity_stats is not None:
            entry["identity"] = _stats_dict(
                cell.identity_stats, cell.identity_records, timings
            )
        cells.append(entry)
    payload = {
        "schema_version": report.schema_version,
        "generator": {"name": "ellipsoid-icp", "version": report.version},
        "kind": report.kind,
        "seed": report.seed,
        "config": report.config,
        "cells": cells,
    }
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def save_plotdata(report: BatchReport, out_dir) -> None:
    """Per-figure series: corruption magnitude on x, one metric on y."""
    out_dir = Path(out_dir)
    series = (
        ("success_vs_nu", "tau", lambda s: s.tau),
        ("delta_spec_vs_nu", "delta_spec", lambda s: s.mean["delta_spec"]),
        ("delta_o_vs_nu", "delta_o", lambda s: s.mean["delta_o"]),
    )
    arms = [("", lambda c: c.stats)]
    if any(c.identity_stats is not None for c in report.cells):
        arms.append(("_identity", lambda c: c.identity_stats))
    for suffix, pick in arms:
        for name, column, extract in series:
            with open(out_dir / f"{name}{suffix}.csv", "w", newline="") as fh:
                writer = csv.writer(fh)
                writer.writerow(["nu", column])
                for cell in report.cells:
                    stats = pick(cell)
                    writer.writerow([_fmt(stats.mean["nu"]), _fmt(extract(stats))])


def run_experiment(config: ExperimentConfig, out_dir) -> BatchReport:
    """Run the configured experiment and write report.csv/json plus plot data."""
    report = compare_no_init(config) if config.kind == "compare_no_init" else run_batch(config)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    save_report_csv(report, out_dir / "report.csv", timings=config.timings)
    save_report_json(report, out_dir / "report.json", timings=config.timings)
    save_plotdata(report, out_dir)
    return report
