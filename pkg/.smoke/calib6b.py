"""Criterion-6 calibration: cohort recipe variants vs the fixed thresholds."""
import sys
import time

import numpy as np

from gansemble.data import partition_by_pm, preprocess
from gansemble.pipeline import OracleBackend, SweepConfig, build_protocol_splits, run_sweep
from gansemble.predict import PredictorConfig
from gansemble.simulate import SimConfig, SubpopSpec, bayes_auc, simulate_cohort

VARIANTS = {
    # name: (n_cont, min_means, min_spreads, weights, bias, noise)
    "A": (2, (1.0, -1.0), (1.3, 0.7), (1.2, -0.9), 0.0, 1.0),
    "B": (4, (1.0, -1.0, 0.5, -0.5), (1.3, 0.7, 1.2, 0.8), (0.9, -0.7, 0.5, -0.4), 0.0, 0.6),
    "C": (2, (1.0, -1.0), (1.3, 0.7), (1.5, -1.2), 0.0, 0.8),
    "D": (3, (1.0, -1.0, 0.5), (1.2, 0.8, 1.0), (1.0, -0.8, 0.6), 0.0, 1.0),
}


def make_cfg(variant: str, sim_seed: int) -> SimConfig:
    n, mm, ms, w, b, noise = VARIANTS[variant]
    return SimConfig(
        n_continuous=n,
        subpops=(
            SubpopSpec("majority", 2000, tuple(0.0 for _ in range(n)), tuple(1.0 for _ in range(n))),
            SubpopSpec("minority", 80, mm, ms),
        ),
        concept_weights=w,
        concept_bias=b,
        noise_scale=noise,
        seed=sim_seed,
    )


def replicate(variant: str, rep: int, kind: str) -> tuple[float, float]:
    cfg = make_cfg(variant, 1000 + rep)
    d = preprocess(simulate_cohort(cfg))
    part = partition_by_pm(d, ())
    sw = SweepConfig(fractions=(0.0, 5.0), master_seed=rep)
    splits = build_protocol_splits(part, sw.master_seed)
    res = run_sweep(
        d, ["minority"], sw, pred_cfg=PredictorConfig(kind=kind),
        backend=OracleBackend(cfg), workers=1, partition=part, splits=splits,
    )
    return (res.point("minority", 0.0).sp_model["rocauc"],
            res.point("minority", 5.0).sp_model["rocauc"])


for spec in sys.argv[1:]:
    variant, kind = spec.split(":")
    t0 = time.monotonic()
    bayes = bayes_auc(make_cfg(variant, 0), "minority", 100_000, seed=99)
    base, aug = [], []
    for rep in range(10):
        b, a = replicate(variant, rep, kind)
        base.append(b)
        aug.append(a)
    mb, ma = float(np.mean(base)), float(np.mean(aug))
    ok1 = ma - mb >= 0.02
    ok2 = abs(ma - bayes) <= 0.05
    print(f"{variant}/{kind}: bayes={bayes:.4f} base={mb:.4f} aug={ma:.4f} "
          f"improve={ma-mb:+.4f}({'OK' if ok1 else 'FAIL'}) "
          f"gap={abs(ma-bayes):.4f}({'OK' if ok2 else 'FAIL'}) "
          f"[{time.monotonic()-t0:.0f}s]")
