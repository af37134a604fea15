import json
import warnings

from gansemble.data import partition_by_pm, preprocess
from gansemble.pipeline import (
    OracleBackend,
    SweepConfig,
    augment_training_set,
    build_protocol_splits,
    identify_underperforming,
    run_baseline_comparison,
    run_sweep,
    select_best_fraction,
    verify_no_leakage,
)
from gansemble.predict import PredictorConfig
from gansemble.results import AuditEntry, LeakageReport
from gansemble.simulate import CategoricalSpec, SimConfig, SubpopSpec, simulate_cohort

cfg = SimConfig(
    n_continuous=3,
    subpops=(
        SubpopSpec("big", 600, (0.0, 0.0, 0.0), (1.0, 1.0, 1.0)),
        SubpopSpec("small", 60, (0.8, -0.5, 0.3), (1.2, 0.8, 1.0)),
    ),
    concept_weights=(1.2, -0.8, 0.5),
    concept_bias=0.1,
    categorical_specs=(
        CategoricalSpec(3, {"big": (0.5, 0.3, 0.2), "small": (0.2, 0.3, 0.5)}),
    ),
    noise_scale=1.0,
    seed=7,
)
raw = simulate_cohort(cfg)
d = preprocess(raw)
part = partition_by_pm(d, ())
sw = SweepConfig(fractions=(0.0, 0.5, 1.0, 5.0), master_seed=11)
pred = PredictorConfig(kind="logistic", seed=0)
splits = build_protocol_splits(part, sw.master_seed)

audit: list[AuditEntry] = []
ident = identify_underperforming(d, part, sw, pred, splits=splits, audit=audit)
print("identify:", ident.full_population_score, ident.sp_scores, "flagged:", ident.flagged)

targets = list(ident.flagged) or ["small"]
backend = OracleBackend(cfg)

res1 = run_sweep(d, targets, sw, pred_cfg=pred, backend=backend, workers=1,
                 partition=part, splits=splits, audit=audit)
res4 = run_sweep(d, targets, sw, pred_cfg=pred, backend=backend, workers=4,
                 partition=part, splits=splits)
j1 = json.dumps(res1.to_dict(), sort_keys=True)
j4 = json.dumps(res4.to_dict(), sort_keys=True)
assert j1 == j4, "sweep result differs across worker counts"
print("worker-count determinism: OK")

for p in res1.points:
    print(f"  {p.sp} f={p.fraction} n_synth={p.n_synthetic} status={p.status} "
          f"sp_auc={p.sp_model['rocauc'] if p.sp_model else None}")

frac, rep = select_best_fraction(res1, targets[0])
print("best fraction:", frac, "auc:", rep["rocauc"])

# fraction-0 sweep point must equal the identify-time SP baseline exactly
sp0 = res1.point(targets[0], 0.0)
assert sp0.sp_model["rocauc"] == ident.sp_scores[targets[0]], (
    sp0.sp_model["rocauc"], ident.sp_scores[targets[0]])
print("0-fraction == identify baseline: OK")

# augment at fraction 0 returns the identical object
gen = backend.fit(splits.sp_splits[targets[0]].train, 123)
tr = splits.sp_splits[targets[0]].train
assert augment_training_set(tr, gen, 0.0, 99) is tr
print("fraction-0 identity: OK")

table = run_baseline_comparison(d, tuple(targets), sw, pred, res1,
                                partition=part, splits=splits,
                                use_case="smoke", audit=audit)
for r in table.rows:
    print(f"  row {r.sp}: n={r.n_test} smote={r.smote} rus={r.rus} "
          f"vanilla={r.vanilla} gan={r.ensemble_gan} frac={r.selected_fraction} notes={r.notes}")
assert [r.sp for r in table.rows] == sorted(part.subsets, key=lambda s: (-splits.sp_splits[s].test.n, s))

verify_no_leakage(audit)
rep = LeakageReport(entries=tuple(audit))
print("leakage audit:", "OK" if rep.ok else "VIOLATIONS", "entries:", len(rep.entries))

# rerun everything from scratch: byte-identical sweep JSON
audit2: list[AuditEntry] = []
splits2 = build_protocol_splits(partition_by_pm(preprocess(simulate_cohort(cfg)), ()), sw.master_seed)
res_re = run_sweep(preprocess(simulate_cohort(cfg)), targets, sw, pred_cfg=pred,
                   backend=OracleBackend(cfg), workers=2, splits=splits2)
assert json.dumps(res_re.to_dict(), sort_keys=True) == j1
print("full-rerun determinism: OK")
print("ALL PIPELINE SMOKE TESTS PASSED")
