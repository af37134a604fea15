"""Orchestration: identify under-performing subpopulations, sweep augmentation
fractions with per-subpopulation generators, and run the baseline protocols.

Every random decision draws from a seed derived as a pure function of the
master seed and the task's identity (subpopulation, fraction, stage), so
results are independent of worker count and scheduling order. Every model
fit contributes a leakage-audit entry pairing the rows it consumed with the
rows it must never see.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .data import (
    Dataset,
    SplitPair,
    SubpopulationPartition,
    concat_datasets,
    encode_like,
    partition_by_pm,
    round_half_up,
    stratified_split,
)
from .errors import (
    ConfigError,
    GansembleError,
    PipelineIntegrityError,
    SchemaError,
    SelectionError,
    SweepError,
)
from .gan import GanConfig, GeneratorModel, fit_generator, generate
from .metrics import MetricReport, metric_suite
from .predict import PredictorConfig, TrainedModel, predict_scores, train_classifier
from .results import (
    AuditEntry,
    ComparisonRow,
    ComparisonTable,
    IdentifyResult,
    SweepPoint,
    SweepResult,
)
from .seeding import derive_seed
from .simulate import SimConfig, oracle_sample

logger = logging.getLogger(__name__)

TRAIN_FRACTION = 0.65

#: Augmentation grid: 0 to 1000 percent of the subpopulation training size.
DEFAULT_FRACTIONS = (
    0.0, 0.05, 0.10, 0.15, 0.20, 0.25, 0.30, 0.35, 0.40, 0.45,
    0.50, 0.60, 0.70, 0.80, 0.90, 1.0, 1.5, 2.0, 5.0, 10.0,
)


@dataclass(frozen=True)
class SweepConfig:
    fractions: tuple[float, ...] = DEFAULT_FRACTIONS
    master_seed: int = 0
    excluded_pms: tuple[str, ...] = ()
    underperformance_margin: float = 0.0

    def __post_init__(self):
        if not self.fractions:
            raise ConfigError("fractions must be nonempty")
        if any(f < 0 for f in self.fractions):
            raise ConfigError(f"fractions must be >= 0, got {self.fractions}")
        ordered = tuple(sorted(set(float(f) for f in self.fractions)))
        if len(ordered) != len(self.fractions):
            raise ConfigError(f"fractions must be unique, got {self.fractions}")
        if 0.0 not in ordered:
            raise ConfigError("the 0 fraction (no augmentation) must always be swept")
        object.__setattr__(self, "fractions", ordered)
        if self.underperformance_margin < 0:
            raise ConfigError(
                f"underperformance_margin must be >= 0, got {self.underperformance_margin}"
            )

    def to_dict(self) -> dict:
        return {
            "fractions": list(self.fractions),
            "master_seed": self.master_seed,
            "excluded_pms": list(self.excluded_pms),
            "underperformance_margin": self.underperformance_margin,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "SweepConfig":
        try:
            return cls(
                fractions=tuple(float(f) for f in doc.get("fractions", DEFAULT_FRACTIONS)),
                master_seed=int(doc.get("master_seed", 0)),
                excluded_pms=tuple(str(p) for p in doc.get("excluded_pms", ())),
                underperformance_margin=float(doc.get("underperformance_margin", 0.0)),
            )
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"malformed sweep config: {exc}") from exc


@dataclass(frozen=True)
class ProtocolSplits:
    """The main experimental split: per-SP 65/35 by outcome, plus their union."""

    sp_splits: dict[str, SplitPair]
    excluded_split: SplitPair | None
    full_train: Dataset
    full_test: Dataset

    def forbidden_ids(self) -> frozenset[str]:
        """Row ids no model fitted under this protocol may ever train on."""
        return self.full_test.all_row_ids()


def build_protocol_splits(
    partition: SubpopulationPartition,
    master_seed: int,
    train_fraction: float = TRAIN_FRACTION,
) -> ProtocolSplits:
    """Split each subpopulation independently, stratified by outcome.

    Excluded-PM rows get their own split so the full-population model still
    trains and tests on them. The full train/test sets are the unions, in
    sorted subpopulation order.
    """
    if not partition.subsets:
        raise ConfigError("partition contains no subpopulations")
    sp_splits: dict[str, SplitPair] = {}
    for sp in sorted(partition.subsets):
        d = partition.subsets[sp]
        label_col = d.schema.label_column
        sp_splits[sp] = stratified_split(
            d, train_fraction, label_col, derive_seed(master_seed, "split", sp)
        )
    excluded_split = None
    if partition.excluded_rows is not None:
        d = partition.excluded_rows
        excluded_split = stratified_split(
            d,
            train_fraction,
            d.schema.label_column,
            derive_seed(master_seed, "split", "__excluded__"),
        )
    train_parts = [sp_splits[sp].train for sp in sorted(sp_splits)]
    test_parts = [sp_splits[sp].test for sp in sorted(sp_splits)]
    if excluded_split is not None:
        train_parts.append(excluded_split.train)
        test_parts.append(excluded_split.test)
    full_train = concat_datasets(train_parts, provenance="full|train")
    full_test = concat_datasets(test_parts, provenance="full|test")
    return ProtocolSplits(
        sp_splits=sp_splits,
        excluded_split=excluded_split,
        full_train=full_train,
        full_test=full_test,
    )


# ---------------------------------------------------------------------------
# generator backends
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FittedGenerator:
    """A fitted synthetic-row source bound to one subpopulation's training rows."""

    backend: str
    sp: str
    fingerprint: str
    train_row_ids: frozenset[str]
    model: object
    _sampler: object = field(repr=False)

    def sample(self, n: int, seed: int) -> Dataset:
        return self._sampler(n, seed)


class CtganBackend:
    """Default generator: the conditional tabular GAN."""

    name = "ctgan"

    def __init__(self, gan_cfg: GanConfig):
        self.gan_cfg = gan_cfg

    def fit(self, train_sp: Dataset, seed: int) -> FittedGenerator:
        model = fit_generator(train_sp, self.gan_cfg.with_seed(seed))
        return FittedGenerator(
            backend=self.name,
            sp=model.sp_label,
            fingerprint=model.schema_fingerprint,
            train_row_ids=model.train_row_ids,
            model=model,
            _sampler=lambda n, s: generate(model, n, s),
        )

    @staticmethod
    def wrap(model: GeneratorModel) -> FittedGenerator:
        """Adapt an already-fitted (for example loaded) generator model."""
        return FittedGenerator(
            backend=CtganBackend.name,
            sp=model.sp_label,
            fingerprint=model.schema_fingerprint,
            train_row_ids=model.train_row_ids,
            model=model,
            _sampler=lambda n, s: generate(model, n, s),
        )


class OracleBackend:
    """Cheating generator: samples the simulator's true subpopulation distribution.

    Isolates pipeline correctness from generator quality; only valid when the
    dataset came from the paired simulation config.
    """

    name = "oracle"

    def __init__(self, sim_cfg: SimConfig):
        self.sim_cfg = sim_cfg

    def fit(self, train_sp: Dataset, seed: int) -> FittedGenerator:
        pm_col = train_sp.schema.pm_column
        pm_values = set(train_sp.decode_column(pm_col))
        if len(pm_values) != 1:
            raise ConfigError(
                f"oracle backend needs a single-subpopulation training set, got {sorted(pm_values)}"
            )
        pm = pm_values.pop()
        sim_cfg = self.sim_cfg

        def sample(n: int, s: int) -> Dataset:
            return encode_like(oracle_sample(sim_cfg, pm, n, s), train_sp)

        return FittedGenerator(
            backend=self.name,
            sp=pm,
            fingerprint=train_sp.fingerprint(),
            train_row_ids=train_sp.all_row_ids(),
            model=None,
            _sampler=sample,
        )


# ---------------------------------------------------------------------------
# operations
# ---------------------------------------------------------------------------

def augment_training_set(
    train_sp: Dataset, gen: FittedGenerator, fraction: float, seed: int
) -> Dataset:
    """Real training rows plus round(fraction * n) synthetic rows appended.

    Fraction 0 returns the training set unchanged (the identical object, so
    the no-augmentation sweep point is the vanilla baseline by construction).
    """
    if fraction < 0:
        raise ConfigError(f"augmentation fraction must be >= 0, got {fraction}")
    n_synth = round_half_up(fraction * train_sp.n)
    if n_synth == 0:
        return train_sp
    synth = gen.sample(n_synth, seed)
    if synth.fingerprint() != train_sp.fingerprint():
        raise SchemaError(
            f"generator for {gen.sp!r} produced rows with a different schema fingerprint"
        )
    return concat_datasets(
        [train_sp, synth],
        provenance=f"{train_sp.provenance}+synthetic[{gen.backend}:{fraction}]",
    )


def _evaluate(model: TrainedModel, test: Dataset) -> MetricReport:
    labels = test.df[test.schema.label_column].to_numpy(dtype=np.int64)
    return metric_suite(labels, predict_scores(model, test))


def _vanilla_seed(master_seed: int, sp: str) -> int:
    # Shared by identify, the 0-fraction sweep point, and the vanilla baseline:
    # all three are the same model by construction.
    return derive_seed(master_seed, "fit", "sp", sp, 0.0)


def identify_underperforming(
    d: Dataset,
    partition: SubpopulationPartition,
    cfg: SweepConfig,
    pred_cfg: PredictorConfig,
    splits: ProtocolSplits | None = None,
    audit: list[AuditEntry] | None = None,
) -> IdentifyResult:
    """Flag subpopulations whose baseline test ROCAUC trails the full population's.

    Strict inequality against (full score - margin). A subpopulation whose
    baseline cannot be scored (single-class training or test side) is
    reported unassessable and excluded from flagging, with a warning.
    """
    d.require_encoded("identify_underperforming")
    if splits is None:
        splits = build_protocol_splits(partition, cfg.master_seed)
    forbidden = splits.forbidden_ids()

    full_model = train_classifier(
        splits.full_train,
        pred_cfg.with_seed(derive_seed(cfg.master_seed, "fit", "full-baseline")),
    )
    if audit is not None:
        audit.append(AuditEntry(
            context="identify:full-baseline",
            used_row_ids=splits.full_train.all_row_ids(),
            forbidden_row_ids=forbidden,
        ))
    full_score = _evaluate(full_model, splits.full_test)["rocauc"]

    sp_scores: dict[str, float] = {}
    unassessable: list[str] = []
    for sp in sorted(splits.sp_splits):
        pair = splits.sp_splits[sp]
        try:
            model = train_classifier(
                pair.train, pred_cfg.with_seed(_vanilla_seed(cfg.master_seed, sp))
            )
            if audit is not None:
                audit.append(AuditEntry(
                    context=f"identify:sp-baseline:{sp}",
                    used_row_ids=pair.train.all_row_ids(),
                    forbidden_row_ids=forbidden,
                ))
            sp_scores[sp] = _evaluate(model, pair.test)["rocauc"]
        except GansembleError as exc:
            logger.warning("SP %r is unassessable: %s", sp, exc)
            unassessable.append(sp)

    flagged = tuple(
        sp for sp in sorted(sp_scores)
        if sp_scores[sp] < full_score - cfg.underperformance_margin
    )
    return IdentifyResult(
        metric="rocauc",
        margin=cfg.underperformance_margin,
        full_population_score=full_score,
        sp_scores=sp_scores,
        flagged=flagged,
        unassessable=tuple(unassessable),
    )


def _run_sweep_point(
    sp: str,
    fraction: float,
    gen: FittedGenerator | None,
    gen_error: str | None,
    splits: ProtocolSplits,
    cfg: SweepConfig,
    pred_cfg: PredictorConfig,
    audit: list[AuditEntry] | None,
) -> SweepPoint:
    pair = splits.sp_splits[sp]
    seeds = {
        "generate": derive_seed(cfg.master_seed, "gen", sp, fraction),
        "fit_sp": derive_seed(cfg.master_seed, "fit", "sp", sp, fraction),
        "fit_full": derive_seed(cfg.master_seed, "fit", "full", sp, fraction),
    }
    n_synth_target = round_half_up(fraction * pair.train.n)
    base = dict(
        sp=sp,
        fraction=fraction,
        n_real_train=pair.train.n,
        seeds=seeds,
    )
    if n_synth_target > 0 and gen is None:
        return SweepPoint(
            status="failed", n_synthetic=0,
            error=gen_error or "generator unavailable", **base,
        )
    forbidden = splits.forbidden_ids()
    try:
        if n_synth_target > 0:
            augmented = augment_training_set(pair.train, gen, fraction, seeds["generate"])
            synth = augmented.subset(
                range(pair.train.n, augmented.n),
                provenance=f"{augmented.provenance}|synthetic-only",
            )
        else:
            augmented = pair.train
            synth = None

        sp_model = train_classifier(augmented, pred_cfg.with_seed(seeds["fit_sp"]))
        if audit is not None:
            audit.append(AuditEntry(
                context=f"sweep:sp-model:{sp}:{fraction}",
                used_row_ids=augmented.all_row_ids(),
                forbidden_row_ids=forbidden,
            ))
        sp_report = _evaluate(sp_model, pair.test)

        if synth is None:
            full_train_aug = splits.full_train
        else:
            full_train_aug = concat_datasets(
                [splits.full_train, synth],
                provenance=f"full|train+synthetic[{sp}:{fraction}]",
            )
        full_model = train_classifier(full_train_aug, pred_cfg.with_seed(seeds["fit_full"]))
        if audit is not None:
            audit.append(AuditEntry(
                context=f"sweep:fullpop-model:{sp}:{fraction}",
                used_row_ids=full_train_aug.all_row_ids(),
                forbidden_row_ids=forbidden,
            ))
        full_report = _evaluate(full_model, splits.full_test)
        full_sp_report = _evaluate(full_model, pair.test)

        return SweepPoint(
            status="ok",
            n_synthetic=0 if synth is None else synth.n,
            sp_model=sp_report,
            fullpop_model=full_report,
            fullpop_model_sp_test=full_sp_report,
            **base,
        )
    except GansembleError as exc:
        return SweepPoint(
            status="failed",
            n_synthetic=n_synth_target,
            error=f"{type(exc).__name__}: {exc}",
            **base,
        )


def run_sweep(
    d: Dataset,
    targets: list[str] | tuple[str, ...],
    cfg: SweepConfig,
    gan_cfg: GanConfig | None = None,
    pred_cfg: PredictorConfig | None = None,
    *,
    backend=None,
    workers: int = 1,
    partition: SubpopulationPartition | None = None,
    splits: ProtocolSplits | None = None,
    audit: list[AuditEntry] | None = None,
    fitted_generators: dict[str, FittedGenerator] | None = None,
) -> SweepResult:
    """Evaluate every (target SP, fraction) cell of the augmentation sweep.

    One generator is fitted per target SP (unless supplied), then each cell
    trains an SP-scope model on the augmented SP training set and a
    full-population model on the full training set plus the same synthetic
    rows. A failed cell is recorded and the sweep continues; more than half
    failing raises a sweep error that still carries the partial result.
    """
    d.require_encoded("run_sweep")
    if not targets:
        raise ConfigError("run_sweep needs at least one target subpopulation")
    targets = tuple(sorted(set(targets)))
    if pred_cfg is None:
        pred_cfg = PredictorConfig()
    if backend is None:
        backend = CtganBackend(gan_cfg if gan_cfg is not None else GanConfig())
    if partition is None:
        partition = partition_by_pm(d, cfg.excluded_pms)
    missing = [sp for sp in targets if sp not in partition.subsets]
    if missing:
        raise ConfigError(f"target subpopulations not in the partition: {missing}")
    if splits is None:
        splits = build_protocol_splits(partition, cfg.master_seed)
    workers = max(1, int(workers))

    def sp_needs_generator(sp: str) -> bool:
        n = splits.sp_splits[sp].train.n
        return any(round_half_up(f * n) > 0 for f in cfg.fractions)

    generators: dict[str, FittedGenerator | None] = dict(fitted_generators or {})
    gen_errors: dict[str, str | None] = {sp: None for sp in targets}
    needed = [sp for sp in targets if sp_needs_generator(sp)]

    if needed:
        to_fit = [sp for sp in needed if sp not in generators]

        def fit_one(sp: str):
            seed = derive_seed(cfg.master_seed, "gan", sp)
            return backend.fit(splits.sp_splits[sp].train, seed)

        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = {sp: pool.submit(fit_one, sp) for sp in to_fit}
            for sp in to_fit:
                try:
                    generators[sp] = futures[sp].result()
                except GansembleError as exc:
                    generators[sp] = None
                    gen_errors[sp] = f"{type(exc).__name__}: {exc}"
                    logger.warning("generator fit failed for SP %r: %s", sp, exc)
        if audit is not None:
            forbidden = splits.forbidden_ids()
            for sp in needed:
                gen = generators.get(sp)
                if gen is not None:
                    audit.append(AuditEntry(
                        context=f"sweep:generator:{sp}",
                        used_row_ids=gen.train_row_ids,
                        forbidden_row_ids=forbidden,
                    ))

    tasks = [(sp, fraction) for sp in targets for fraction in cfg.fractions]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = {
            (sp, fraction): pool.submit(
                _run_sweep_point,
                sp, fraction, generators.get(sp), gen_errors.get(sp),
                splits, cfg, pred_cfg, audit,
            )
            for sp, fraction in tasks
        }
        points = {key: futures[key].result() for key in futures}

    ordered = tuple(points[(sp, fraction)] for sp in targets for fraction in cfg.fractions)
    result = SweepResult(
        sps=targets,
        fractions=cfg.fractions,
        master_seed=cfg.master_seed,
        generator_backend=backend.name,
        points=ordered,
        sp_train_sizes={sp: splits.sp_splits[sp].train.n for sp in targets},
        sp_test_sizes={sp: splits.sp_splits[sp].test.n for sp in targets},
    )
    if result.n_failed * 2 > len(result.points):
        raise SweepError(
            f"{result.n_failed} of {len(result.points)} sweep points failed",
            partial_result=result,
        )
    return result


def select_best_fraction(sweep: SweepResult, sp: str) -> tuple[float, MetricReport]:
    """The fraction whose SP-model test ROCAUC is highest; ties pick the smallest."""
    if sp not in sweep.sps:
        raise SelectionError(f"subpopulation {sp!r} was not swept")
    ok_points = [p for p in sweep.points if p.sp == sp and p.status == "ok"]
    if not ok_points:
        raise SelectionError(f"every sweep point failed for subpopulation {sp!r}")
    best_score = max(p.sp_model["rocauc"] for p in ok_points)
    best = min(
        (p for p in ok_points if p.sp_model["rocauc"] == best_score),
        key=lambda p: p.fraction,
    )
    return best.fraction, best.sp_model


def run_baseline_comparison(
    d: Dataset,
    targets: tuple[str, ...],
    cfg: SweepConfig,
    pred_cfg: PredictorConfig,
    sweep: SweepResult | None,
    *,
    partition: SubpopulationPartition | None = None,
    splits: ProtocolSplits | None = None,
    use_case: str = "cohort",
    audit: list[AuditEntry] | None = None,
) -> ComparisonTable:
    """Score every subpopulation under SMOTE, RUS, vanilla, and the sweep's best.

    SMOTE: one 65/35 split of the full data stratified by the population
    marker, oversampling on the training side with the marker as the class,
    then per-SP models. RUS: undersample the full data first (marker as
    class), then split each SP 65/35 by outcome. Vanilla: the main protocol's
    SP model with no synthetic rows. The GAN column reports the best swept
    fraction for target SPs and the vanilla score (fraction 0) otherwise.
    """
    d.require_encoded("run_baseline_comparison")
    if pred_cfg is None:
        pred_cfg = PredictorConfig()
    if partition is None:
        partition = partition_by_pm(d, cfg.excluded_pms)
    if splits is None:
        splits = build_protocol_splits(partition, cfg.master_seed)
    targets = tuple(sorted(set(targets)))
    pm_col = d.schema.pm_column

    sps = sorted(partition.subsets)

    # --- vanilla: main-protocol SP models without augmentation
    vanilla: dict[str, float | None] = {}
    vanilla_notes: dict[str, str] = {}
    for sp in sps:
        pair = splits.sp_splits[sp]
        recorded = None
        if sweep is not None and sp in sweep.sps:
            point = sweep.point(sp, 0.0)
            if point.status == "ok":
                recorded = point.sp_model["rocauc"]
        if recorded is not None:
            vanilla[sp] = recorded
            continue
        try:
            model = train_classifier(
                pair.train, pred_cfg.with_seed(_vanilla_seed(cfg.master_seed, sp))
            )
            if audit is not None:
                audit.append(AuditEntry(
                    context=f"vanilla:sp-model:{sp}",
                    used_row_ids=pair.train.all_row_ids(),
                    forbidden_row_ids=splits.forbidden_ids(),
                ))
            vanilla[sp] = _evaluate(model, pair.test)["rocauc"]
        except GansembleError as exc:
            vanilla[sp] = None
            vanilla_notes[sp] = f"{type(exc).__name__}: {exc}"

    # --- SMOTE protocol
    smote: dict[str, float | None] = {sp: None for sp in sps}
    smote_notes: dict[str, str] = {}
    try:
        from .resample import smote_oversample

        smote_split = stratified_split(
            d, TRAIN_FRACTION, pm_col, derive_seed(cfg.master_seed, "smote", "split")
        )
        smote_train, _ = smote_oversample(
            smote_split.train, pm_col, seed=derive_seed(cfg.master_seed, "smote", "sample")
        )
        smote_train_pm = smote_train.decode_column(pm_col)
        smote_test_pm = smote_split.test.decode_column(pm_col)
        for sp in sps:
            try:
                train_sp = smote_train.subset(
                    np.flatnonzero(smote_train_pm == sp),
                    provenance=f"smote|train|{sp}",
                )
                test_sp = smote_split.test.subset(
                    np.flatnonzero(smote_test_pm == sp),
                    provenance=f"smote|test|{sp}",
                )
                model = train_classifier(
                    train_sp,
                    pred_cfg.with_seed(derive_seed(cfg.master_seed, "smote", "fit", sp)),
                )
                if audit is not None:
                    audit.append(AuditEntry(
                        context=f"smote:sp-model:{sp}",
                        used_row_ids=train_sp.all_row_ids(),
                        forbidden_row_ids=smote_split.test.all_row_ids(),
                    ))
                smote[sp] = _evaluate(model, test_sp)["rocauc"]
            except GansembleError as exc:
                smote_notes[sp] = f"{type(exc).__name__}: {exc}"
    except GansembleError as exc:
        for sp in sps:
            smote_notes[sp] = f"{type(exc).__name__}: {exc}"

    # --- RUS protocol
    rus: dict[str, float | None] = {sp: None for sp in sps}
    rus_notes: dict[str, str] = {}
    try:
        from .resample import random_undersample

        rus_data, _ = random_undersample(
            d, pm_col, "all", seed=derive_seed(cfg.master_seed, "rus", "sample")
        )
        rus_pm = rus_data.decode_column(pm_col)
        for sp in sps:
            try:
                sp_rows = rus_data.subset(
                    np.flatnonzero(rus_pm == sp), provenance=f"rus|{sp}"
                )
                pair = stratified_split(
                    sp_rows,
                    TRAIN_FRACTION,
                    d.schema.label_column,
                    derive_seed(cfg.master_seed, "rus", "split", sp),
                )
                model = train_classifier(
                    pair.train,
                    pred_cfg.with_seed(derive_seed(cfg.master_seed, "rus", "fit", sp)),
                )
                if audit is not None:
                    audit.append(AuditEntry(
                        context=f"rus:sp-model:{sp}",
                        used_row_ids=pair.train.all_row_ids(),
                        forbidden_row_ids=pair.test.all_row_ids(),
                    ))
                rus[sp] = _evaluate(model, pair.test)["rocauc"]
            except GansembleError as exc:
                rus_notes[sp] = f"{type(exc).__name__}: {exc}"
    except GansembleError as exc:
        for sp in sps:
            rus_notes[sp] = f"{type(exc).__name__}: {exc}"

    # --- ensemble-GAN: best swept fraction for targets, vanilla otherwise
    rows = []
    for sp in sps:
        notes = {}
        if sp in vanilla_notes:
            notes["vanilla"] = vanilla_notes[sp]
        if sp in smote_notes:
            notes["smote"] = smote_notes[sp]
        if sp in rus_notes:
            notes["rus"] = rus_notes[sp]
        ensemble_gan: float | None
        selected_fraction: float | None
        if sweep is not None and sp in sweep.sps:
            try:
                selected_fraction, report = select_best_fraction(sweep, sp)
                ensemble_gan = report["rocauc"]
            except SelectionError as exc:
                ensemble_gan, selected_fraction = None, None
                notes["ensemble_gan"] = f"SelectionError: {exc}"
        else:
            ensemble_gan = vanilla[sp]
            selected_fraction = 0.0 if vanilla[sp] is not None else None
            if vanilla[sp] is None:
                notes["ensemble_gan"] = "vanilla baseline unavailable"
        rows.append(ComparisonRow(
            sp=sp,
            n_test=splits.sp_splits[sp].test.n,
            smote=smote[sp],
            rus=rus[sp],
            vanilla=vanilla[sp],
            ensemble_gan=ensemble_gan,
            selected_fraction=selected_fraction,
            notes=notes,
        ))
    rows.sort(key=lambda r: (-r.n_test, r.sp))
    return ComparisonTable(use_case=use_case, metric="rocauc", rows=tuple(rows))


def build_leakage_report(audit: list[AuditEntry]):
    from .results import LeakageReport

    return LeakageReport(entries=tuple(audit))


def verify_no_leakage(audit: list[AuditEntry]) -> None:
    report = build_leakage_report(audit)
    if not report.ok:
        bad = {e.context: e.violations for e in report.entries if e.violations}
        raise PipelineIntegrityError(f"test rows leaked into training: {bad}")
