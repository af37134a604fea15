"""Serializable result records: sweeps, identification, comparisons, leakage audit.

Everything here round-trips through JSON with stable key ordering, so two
runs with the same inputs produce byte-identical artifacts. Wall-clock
timings deliberately live elsewhere (the manifest), never in these records.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ArtifactError, PipelineIntegrityError
from .metrics import MetricReport


def _dump_json(doc: dict) -> str:
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def _load_json(path) -> dict:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ArtifactError(f"cannot read artifact {path}: {exc}") from exc


def _report_or_none(doc) -> MetricReport | None:
    return MetricReport.from_dict(doc) if doc is not None else None


@dataclass(frozen=True)
class SweepPoint:
    """Outcome of one (subpopulation, fraction) cell of the sweep."""

    sp: str
    fraction: float
    n_synthetic: int
    n_real_train: int
    seeds: dict[str, int]
    status: str  # "ok" | "failed"
    sp_model: MetricReport | None = None
    fullpop_model: MetricReport | None = None
    fullpop_model_sp_test: MetricReport | None = None
    error: str | None = None

    def __post_init__(self):
        if self.status not in ("ok", "failed"):
            raise PipelineIntegrityError(f"bad sweep point status {self.status!r}")
        if self.status == "ok" and (self.sp_model is None or self.fullpop_model is None):
            raise PipelineIntegrityError(
                f"ok sweep point ({self.sp}, {self.fraction}) lacks metric reports"
            )
        if self.status == "failed" and not self.error:
            raise PipelineIntegrityError(
                f"failed sweep point ({self.sp}, {self.fraction}) lacks an error message"
            )

    def to_dict(self) -> dict:
        return {
            "sp": self.sp,
            "fraction": self.fraction,
            "n_synthetic": self.n_synthetic,
            "n_real_train": self.n_real_train,
            "seeds": {k: self.seeds[k] for k in sorted(self.seeds)},
            "status": self.status,
            "sp_model": self.sp_model.to_dict() if self.sp_model else None,
            "fullpop_model": self.fullpop_model.to_dict() if self.fullpop_model else None,
            "fullpop_model_sp_test": (
                self.fullpop_model_sp_test.to_dict() if self.fullpop_model_sp_test else None
            ),
            "error": self.error,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "SweepPoint":
        return cls(
            sp=doc["sp"],
            fraction=float(doc["fraction"]),
            n_synthetic=int(doc["n_synthetic"]),
            n_real_train=int(doc["n_real_train"]),
            seeds={k: int(v) for k, v in doc["seeds"].items()},
            status=doc["status"],
            sp_model=_report_or_none(doc.get("sp_model")),
            fullpop_model=_report_or_none(doc.get("fullpop_model")),
            fullpop_model_sp_test=_report_or_none(doc.get("fullpop_model_sp_test")),
            error=doc.get("error"),
        )


@dataclass(frozen=True)
class SweepResult:
    """All sweep points plus the context needed to re-verify them."""

    sps: tuple[str, ...]
    fractions: tuple[float, ...]
    master_seed: int
    generator_backend: str
    points: tuple[SweepPoint, ...]
    sp_train_sizes: dict[str, int] = field(default_factory=dict)
    sp_test_sizes: dict[str, int] = field(default_factory=dict)

    def point(self, sp: str, fraction: float) -> SweepPoint:
        for p in self.points:
            if p.sp == sp and p.fraction == fraction:
                return p
        raise PipelineIntegrityError(f"no sweep point for ({sp!r}, {fraction})")

    @property
    def n_failed(self) -> int:
        return sum(1 for p in self.points if p.status == "failed")

    def to_dict(self) -> dict:
        return {
            "sps": list(self.sps),
            "fractions": list(self.fractions),
            "master_seed": self.master_seed,
            "generator_backend": self.generator_backend,
            "sp_train_sizes": {k: self.sp_train_sizes[k] for k in sorted(self.sp_train_sizes)},
            "sp_test_sizes": {k: self.sp_test_sizes[k] for k in sorted(self.sp_test_sizes)},
            "points": [p.to_dict() for p in self.points],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "SweepResult":
        return cls(
            sps=tuple(doc["sps"]),
            fractions=tuple(float(f) for f in doc["fractions"]),
            master_seed=int(doc["master_seed"]),
            generator_backend=doc["generator_backend"],
            sp_train_sizes={k: int(v) for k, v in doc.get("sp_train_sizes", {}).items()},
            sp_test_sizes={k: int(v) for k, v in doc.get("sp_test_sizes", {}).items()},
            points=tuple(SweepPoint.from_dict(p) for p in doc["points"]),
        )

    def to_json(self) -> str:
        return _dump_json(self.to_dict())

    def save(self, path) -> None:
        Path(path).write_text(self.to_json(), encoding="utf-8")

    @classmethod
    def load(cls, path) -> "SweepResult":
        return cls.from_dict(_load_json(path))


@dataclass(frozen=True)
class IdentifyResult:
    """Baseline scores and the under-performing subpopulations they imply."""

    metric: str
    margin: float
    full_population_score: float
    sp_scores: dict[str, float]
    flagged: tuple[str, ...]
    unassessable: tuple[str, ...]

    def to_dict(self) -> dict:
        return {
            "metric": self.metric,
            "margin": self.margin,
            "full_population_score": self.full_population_score,
            "sp_scores": {k: self.sp_scores[k] for k in sorted(self.sp_scores)},
            "flagged": list(self.flagged),
            "unassessable": list(self.unassessable),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "IdentifyResult":
        return cls(
            metric=doc["metric"],
            margin=float(doc["margin"]),
            full_population_score=float(doc["full_population_score"]),
            sp_scores={k: float(v) for k, v in doc["sp_scores"].items()},
            flagged=tuple(doc["flagged"]),
            unassessable=tuple(doc["unassessable"]),
        )

    def to_json(self) -> str:
        return _dump_json(self.to_dict())

    def save(self, path) -> None:
        Path(path).write_text(self.to_json(), encoding="utf-8")

    @classmethod
    def load(cls, path) -> "IdentifyResult":
        return cls.from_dict(_load_json(path))


@dataclass(frozen=True)
class ComparisonRow:
    sp: str
    n_test: int
    smote: float | None
    rus: float | None
    vanilla: float | None
    ensemble_gan: float | None
    selected_fraction: float | None
    notes: dict[str, str] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "sp": self.sp,
            "n_test": self.n_test,
            "smote": self.smote,
            "rus": self.rus,
            "vanilla": self.vanilla,
            "ensemble_gan": self.ensemble_gan,
            "selected_fraction": self.selected_fraction,
            "notes": {k: self.notes[k] for k in sorted(self.notes)},
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "ComparisonRow":
        return cls(
            sp=doc["sp"],
            n_test=int(doc["n_test"]),
            smote=doc.get("smote"),
            rus=doc.get("rus"),
            vanilla=doc.get("vanilla"),
            ensemble_gan=doc.get("ensemble_gan"),
            selected_fraction=doc.get("selected_fraction"),
            notes=dict(doc.get("notes", {})),
        )


@dataclass(frozen=True)
class ComparisonTable:
    """Per-subpopulation baseline scores, rows ordered by test-set size descending."""

    use_case: str
    metric: str
    rows: tuple[ComparisonRow, ...]

    def to_dict(self) -> dict:
        return {
            "use_case": self.use_case,
            "metric": self.metric,
            "rows": [r.to_dict() for r in self.rows],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "ComparisonTable":
        return cls(
            use_case=doc["use_case"],
            metric=doc["metric"],
            rows=tuple(ComparisonRow.from_dict(r) for r in doc["rows"]),
        )

    def to_json(self) -> str:
        return _dump_json(self.to_dict())

    def save(self, path) -> None:
        Path(path).write_text(self.to_json(), encoding="utf-8")

    @classmethod
    def load(cls, path) -> "ComparisonTable":
        return cls.from_dict(_load_json(path))


@dataclass(frozen=True)
class AuditEntry:
    """One trained artifact's training rows against the rows it must never see."""

    context: str
    used_row_ids: frozenset[str]
    forbidden_row_ids: frozenset[str]

    @property
    def violations(self) -> tuple[str, ...]:
        return tuple(sorted(self.used_row_ids & self.forbidden_row_ids))

    def to_dict(self) -> dict:
        return {
            "context": self.context,
            "n_used": len(self.used_row_ids),
            "n_forbidden": len(self.forbidden_row_ids),
            "violations": list(self.violations),
        }


@dataclass(frozen=True)
class LeakageReport:
    entries: tuple[AuditEntry, ...]

    @property
    def ok(self) -> bool:
        return all(not e.violations for e in self.entries)

    def to_dict(self) -> dict:
        return {
            "ok": self.ok,
            "n_entries": len(self.entries),
            "entries": [e.to_dict() for e in sorted(self.entries, key=lambda e: e.context)],
        }

    def to_json(self) -> str:
        return _dump_json(self.to_dict())

    def save(self, path) -> None:
        Path(path).write_text(self.to_json(), encoding="utf-8")
