"""End-to-end run: load or simulate a cohort, scan for under-performing
subpopulations, sweep augmentation fractions, run the baseline protocols,
and write every artifact plus a hash-validated manifest.

Artifacts carrying metric values are pure functions of (data, config, master
seed) and rerun byte-identically at any worker count; the manifest also
records wall-clock timings and is therefore excluded from that guarantee.
"""

from __future__ import annotations

import hashlib
import json
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path

from .data import Dataset, Schema, load_dataset, partition_by_pm, preprocess
from .errors import ArtifactError, ConfigError, PipelineIntegrityError, SweepError
from .gan import GanConfig
from .metrics import METRIC_NAMES
from .pipeline import (
    CtganBackend,
    OracleBackend,
    SweepConfig,
    build_protocol_splits,
    identify_underperforming,
    run_baseline_comparison,
    run_sweep,
)
from .predict import PredictorConfig
from .report import emit_report
from .results import AuditEntry, LeakageReport, SweepResult
from .simulate import SimConfig, simulate_cohort

logger = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.json"
MANIFEST_FORMAT_VERSION = 1

#: Artifacts that are pure functions of (data, config, master seed): two runs
#: with the same inputs must produce these byte-identically.
METRIC_ARTIFACTS = (
    "partition.json",
    "identify.json",
    "sweep_result.json",
    "comparison.json",
    "leakage_audit.json",
    "curves.csv",
    "comparison.csv",
    "comparison.txt",
    "report.txt",
)

VALID_BACKENDS = ("ctgan", "oracle")


@dataclass(frozen=True)
class RunConfig:
    """Everything one end-to-end run needs; loadable from a JSON document."""

    out_dir: str
    dataset_path: str | None = None
    schema_path: str | None = None
    sim_config: SimConfig | None = None
    use_case: str = "cohort"
    sweep: SweepConfig = field(default_factory=SweepConfig)
    gan: GanConfig = field(default_factory=GanConfig)
    predictor: PredictorConfig = field(default_factory=PredictorConfig)
    backend: str = "ctgan"
    metrics: tuple[str, ...] = ("rocauc",)
    plots: bool = False
    workers: int = 1

    def __post_init__(self):
        have_file = self.dataset_path is not None or self.schema_path is not None
        if have_file and (self.dataset_path is None or self.schema_path is None):
            raise ConfigError("dataset_path and schema_path must be given together")
        if have_file and self.sim_config is not None:
            raise ConfigError("give either dataset_path+schema_path or a simulator config, not both")
        if not have_file and self.sim_config is None:
            raise ConfigError("a data source is required: dataset_path+schema_path or a simulator config")
        if self.backend not in VALID_BACKENDS:
            raise ConfigError(f"unknown generator backend {self.backend!r}; expected one of {VALID_BACKENDS}")
        if self.backend == "oracle" and self.sim_config is None:
            raise ConfigError("the oracle generator backend requires a simulator config")
        unknown = [m for m in self.metrics if m not in METRIC_NAMES]
        if unknown:
            raise ConfigError(f"unknown metrics {unknown}; expected a subset of {METRIC_NAMES}")
        if not self.metrics:
            raise ConfigError("metrics must be nonempty")
        if self.workers < 1:
            raise ConfigError(f"workers must be >= 1, got {self.workers}")

    def to_dict(self) -> dict:
        return {
            "out_dir": self.out_dir,
            "dataset_path": self.dataset_path,
            "schema_path": self.schema_path,
            "simulate": None if self.sim_config is None else self.sim_config.to_dict(),
            "use_case": self.use_case,
            "sweep": self.sweep.to_dict(),
            "gan": self.gan.to_dict(),
            "predictor": self.predictor.to_dict(),
            "backend": self.backend,
            "metrics": list(self.metrics),
            "plots": self.plots,
            "workers": self.workers,
        }

    _KEYS = (
        "out_dir", "dataset_path", "schema_path", "simulate", "use_case",
        "sweep", "gan", "predictor", "backend", "metrics", "plots", "workers",
    )

    @classmethod
    def from_dict(cls, doc: dict) -> "RunConfig":
        if not isinstance(doc, dict):
            raise ConfigError(f"run config must be an object, got {type(doc).__name__}")
        unknown = sorted(set(doc) - set(cls._KEYS))
        if unknown:
            raise ConfigError(f"unknown run-config keys {unknown}; expected a subset of {list(cls._KEYS)}")
        if "out_dir" not in doc:
            raise ConfigError("run config needs an out_dir")
        sim = doc.get("simulate")
        try:
            return cls(
                out_dir=str(doc["out_dir"]),
                dataset_path=None if doc.get("dataset_path") is None else str(doc["dataset_path"]),
                schema_path=None if doc.get("schema_path") is None else str(doc["schema_path"]),
                sim_config=None if sim is None else SimConfig.from_dict(sim),
                use_case=str(doc.get("use_case", "cohort")),
                sweep=SweepConfig.from_dict(doc.get("sweep", {})),
                gan=GanConfig.from_dict(doc.get("gan", {})),
                predictor=PredictorConfig.from_dict(doc.get("predictor", {})),
                backend=str(doc.get("backend", "ctgan")),
                metrics=tuple(str(m) for m in doc.get("metrics", ("rocauc",))),
                plots=bool(doc.get("plots", False)),
                workers=int(doc.get("workers", 1)),
            )
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"malformed run config: {exc}") from exc

    @classmethod
    def from_json_file(cls, path) -> "RunConfig":
        try:
            doc = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read run config {path}: {exc}") from exc
        return cls.from_dict(doc)


def _sha256_file(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


def _load_input(cfg: RunConfig) -> Dataset:
    if cfg.sim_config is not None:
        return simulate_cohort(cfg.sim_config)
    schema = Schema.from_json_file(cfg.schema_path)
    return load_dataset(cfg.dataset_path, schema)


def write_manifest(out: Path, doc: dict, artifact_paths: list[Path]) -> None:
    doc = dict(doc)
    doc["artifacts"] = {
        p.relative_to(out).as_posix(): {"sha256": _sha256_file(p), "bytes": p.stat().st_size}
        for p in sorted(set(artifact_paths))
    }
    (out / MANIFEST_NAME).write_text(
        json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def verify_manifest(results_dir: str | Path) -> dict:
    """Check that every artifact the manifest references exists and hash-matches."""
    results = Path(results_dir)
    path = results / MANIFEST_NAME
    if not path.exists():
        raise ArtifactError(f"no {MANIFEST_NAME} in {results}")
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ArtifactError(f"corrupt manifest {path}: {exc}") from exc
    for rel, meta in doc.get("artifacts", {}).items():
        p = results / rel
        if not p.exists():
            raise ArtifactError(f"manifest references missing artifact {rel}")
        digest = _sha256_file(p)
        if digest != meta["sha256"]:
            raise ArtifactError(
                f"artifact {rel} does not hash-validate: manifest {meta['sha256'][:12]}..., "
                f"file {digest[:12]}..."
            )
    return doc


def run_end_to_end(cfg: RunConfig) -> dict:
    """Execute the whole protocol and write artifacts + manifest under out_dir.

    Returns the manifest document. A sweep in which more than half the points
    failed still writes every artifact (status "partial") and then re-raises,
    so callers can map it to a distinct exit status.
    """
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    timings: dict[str, float] = {}
    artifacts: list[Path] = []

    def stage(name: str):
        return _StageTimer(name, timings)

    with stage("load"):
        raw = _load_input(cfg)
    with stage("preprocess"):
        d = preprocess(raw)
        partition = partition_by_pm(d, cfg.sweep.excluded_pms)
        splits = build_protocol_splits(partition, cfg.sweep.master_seed)

    partition_doc = {
        "sp_sizes": {sp: partition.subsets[sp].n for sp in sorted(partition.subsets)},
        "sp_train_sizes": {sp: splits.sp_splits[sp].train.n for sp in sorted(partition.subsets)},
        "sp_test_sizes": {sp: splits.sp_splits[sp].test.n for sp in sorted(partition.subsets)},
        "excluded_pms": list(partition.excluded),
        "n_excluded_rows": 0 if partition.excluded_rows is None else partition.excluded_rows.n,
        "n_rows": d.n,
    }
    p = out / "partition.json"
    p.write_text(json.dumps(partition_doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    artifacts.append(p)

    audit: list[AuditEntry] = []

    with stage("identify"):
        identify = identify_underperforming(
            d, partition, cfg.sweep, cfg.predictor, splits=splits, audit=audit
        )
    identify.save(out / "identify.json")
    artifacts.append(out / "identify.json")

    targets = identify.flagged
    sweep: SweepResult | None = None
    sweep_error: SweepError | None = None
    if targets:
        if cfg.backend == "oracle":
            backend = OracleBackend(cfg.sim_config)
        else:
            backend = CtganBackend(cfg.gan)
        with stage("sweep"):
            try:
                sweep = run_sweep(
                    d, targets, cfg.sweep,
                    pred_cfg=cfg.predictor, backend=backend, workers=cfg.workers,
                    partition=partition, splits=splits, audit=audit,
                )
            except SweepError as exc:
                sweep = exc.partial_result
                sweep_error = exc
                logger.warning("sweep exceeded the failure threshold: %s", exc)
        if sweep is not None:
            sweep.save(out / "sweep_result.json")
            artifacts.append(out / "sweep_result.json")

    with stage("baselines"):
        comparison = run_baseline_comparison(
            d, targets, cfg.sweep, cfg.predictor, sweep,
            partition=partition, splits=splits, use_case=cfg.use_case, audit=audit,
        )
    comparison.save(out / "comparison.json")
    artifacts.append(out / "comparison.json")

    leakage = LeakageReport(entries=tuple(audit))
    leakage.save(out / "leakage_audit.json")
    artifacts.append(out / "leakage_audit.json")

    status = "ok"
    if sweep_error is not None:
        status = "partial"
    if not leakage.ok:
        status = "leakage-detected"

    manifest_doc = {
        "format_version": MANIFEST_FORMAT_VERSION,
        "status": status,
        "use_case": cfg.use_case,
        "config": cfg.to_dict(),
        "schema": d.schema.to_dict(),
        "dataset_content_hash": d.content_hash(),
        "targets": list(targets),
        "no_targets_found": not targets,
        "n_sweep_failed": 0 if sweep is None else sweep.n_failed,
        "leakage_ok": leakage.ok,
        "timings_sec": {k: round(v, 3) for k, v in timings.items()},
    }
    write_manifest(out, manifest_doc, artifacts)

    with stage("report"):
        report_paths = emit_report(out, metrics=cfg.metrics, plots=cfg.plots)
    manifest_doc["timings_sec"] = {k: round(v, 3) for k, v in timings.items()}
    write_manifest(out, manifest_doc, artifacts + report_paths)

    if not leakage.ok:
        raise PipelineIntegrityError(
            "leakage audit failed; see leakage_audit.json for the violating contexts"
        )
    if sweep_error is not None:
        raise sweep_error
    return verify_manifest(out)


class _StageTimer:
    def __init__(self, name: str, sink: dict[str, float]):
        self.name = name
        self.sink = sink

    def __enter__(self):
        self.t0 = time.monotonic()
        return self

    def __exit__(self, *exc):
        self.sink[self.name] = self.sink.get(self.name, 0.0) + time.monotonic() - self.t0
        return False
