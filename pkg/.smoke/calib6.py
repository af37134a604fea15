"""Calibration for the oracle-generator improvement criterion."""
import time

import numpy as np

from gansemble.data import partition_by_pm, preprocess
from gansemble.pipeline import OracleBackend, SweepConfig, build_protocol_splits, run_sweep
from gansemble.predict import PredictorConfig
from gansemble.simulate import SimConfig, SubpopSpec, bayes_auc, simulate_cohort


def make_cfg(sim_seed: int) -> SimConfig:
    return SimConfig(
        n_continuous=4,
        subpops=(
            SubpopSpec("majority", 2000, (0.0, 0.0, 0.0, 0.0), (1.0, 1.0, 1.0, 1.0)),
            SubpopSpec("minority", 80, (1.0, -1.0, 0.5, -0.5), (1.3, 0.7, 1.2, 0.8)),
        ),
        concept_weights=(0.9, -0.7, 0.5, -0.4),
        concept_bias=0.0,
        noise_scale=1.0,
        seed=sim_seed,
    )


def replicate(rep: int) -> tuple[float, float]:
    cfg = make_cfg(1000 + rep)
    d = preprocess(simulate_cohort(cfg))
    part = partition_by_pm(d, ())
    sw = SweepConfig(fractions=(0.0, 5.0), master_seed=rep)
    splits = build_protocol_splits(part, sw.master_seed)
    res = run_sweep(
        d, ["minority"], sw, pred_cfg=PredictorConfig(),
        backend=OracleBackend(cfg), workers=1, partition=part, splits=splits,
    )
    return (res.point("minority", 0.0).sp_model["rocauc"],
            res.point("minority", 5.0).sp_model["rocauc"])


t0 = time.monotonic()
bayes = bayes_auc(make_cfg(0), "minority", 100_000, seed=99)
print(f"bayes_auc(minority, 1e5) = {bayes:.4f}  [{time.monotonic()-t0:.1f}s]")

base, aug = [], []
for rep in range(10):
    t0 = time.monotonic()
    b, a = replicate(rep)
    base.append(b)
    aug.append(a)
    print(f"rep {rep}: base={b:.4f} aug={a:.4f} delta={a-b:+.4f}  [{time.monotonic()-t0:.1f}s]")

mb, ma = float(np.mean(base)), float(np.mean(aug))
print(f"\nmean base={mb:.4f} mean aug={ma:.4f} improvement={ma-mb:+.4f}")
print(f"|mean aug - bayes| = {abs(ma - bayes):.4f}")
print(f"improvement >= 0.02: {ma - mb >= 0.02}")
print(f"within 0.05 of bayes: {abs(ma - bayes) <= 0.05}")
