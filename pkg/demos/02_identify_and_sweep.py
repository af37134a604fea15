"""Find an under-performing subpopulation, then buy its score back with
synthetic training rows.

Story line:
  1. simulate a cohort where one small subpopulation (SP) drags behind,
  2. scan per-SP baselines against the full-population baseline,
  3. for each flagged SP, sweep how many synthetic rows to add to its
     training set (as a fraction of its real training size),
  4. compare the best swept model against SMOTE / undersampling / no-synthetic
     baselines in one table.

The generator here is the simulator itself ("oracle" backend): it samples
fresh rows from the SP's true distribution, so the demo isolates what the
pipeline does from how well a learned generator fits. Swap in the GAN backend
(see demo 03) for the learned version.

Run:  python3 demos/02_identify_and_sweep.py
"""

from gansemble.data import partition_by_pm, preprocess
from gansemble.pipeline import (
    OracleBackend,
    SweepConfig,
    build_protocol_splits,
    identify_underperforming,
    run_baseline_comparison,
    run_sweep,
    select_best_fraction,
)
from gansemble.predict import PredictorConfig
from gansemble.report import render_comparison_table, render_identify, render_sweep_report
from gansemble.simulate import SimConfig, SubpopSpec, simulate_cohort

cfg = SimConfig(
    n_continuous=2,
    subpops=(
        SubpopSpec("majority", 2000, (0.0, 0.0), (1.0, 1.0)),
        SubpopSpec("minority", 80, (1.0, -1.0), (1.3, 0.7)),
    ),
    concept_weights=(1.2, -0.9),
    concept_bias=0.0,
    noise_scale=1.0,
    seed=1003,
)
d = preprocess(simulate_cohort(cfg))

# Per-SP 65/35 train/test splits, stratified by outcome; models are always
# evaluated on rows their training never saw.
partition = partition_by_pm(d, excluded=())
sweep_cfg = SweepConfig(fractions=(0.0, 0.25, 0.5, 1.0, 2.0, 5.0), master_seed=3)
splits = build_protocol_splits(partition, sweep_cfg.master_seed)
predictor = PredictorConfig()  # gradient-boosted trees

print("=== step 1: which SPs under-perform the full-population baseline? ===")
scan = identify_underperforming(d, partition, sweep_cfg, predictor, splits=splits)
print(render_identify(scan))

print("=== step 2: sweep synthetic-row fractions for the flagged SPs ===")
sweep = run_sweep(
    d, list(scan.flagged), sweep_cfg, pred_cfg=predictor,
    backend=OracleBackend(cfg), partition=partition, splits=splits,
)
print(render_sweep_report(sweep))

for sp in scan.flagged:
    best, report = select_best_fraction(sweep, sp)
    print(
        f"best fraction for {sp}: {best * 100:g}% of its real training size "
        f"(test ROCAUC {report['rocauc']:.3f})"
    )

print("\n=== step 3: how does that stack up against resampling baselines? ===")
table = run_baseline_comparison(
    d, list(scan.flagged), sweep_cfg, predictor, sweep,
    partition=partition, splits=splits, use_case="demo-cohort",
)
print(render_comparison_table(table))
