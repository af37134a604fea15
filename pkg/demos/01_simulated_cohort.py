"""Draw a synthetic patient-style cohort and measure its difficulty ceiling.

The simulator builds a tabular cohort from per-subpopulation Gaussian feature
distributions plus a shared logistic concept for the binary outcome. Because
the concept is known in closed form, the simulator can also report the Bayes
ROCAUC — the score an ideal predictor would reach — which turns every
downstream experiment into one with a known answer.

Run:  python3 demos/01_simulated_cohort.py
"""

import numpy as np

from gansemble.data import preprocess
from gansemble.simulate import (
    CategoricalSpec,
    SimConfig,
    SubpopSpec,
    bayes_auc,
    oracle_sample,
    simulate_cohort,
)

cfg = SimConfig(
    n_continuous=2,
    subpops=(
        # name, rows, per-feature means, per-feature spreads
        SubpopSpec("majority", 1000, (0.0, 0.0), (1.0, 1.0)),
        SubpopSpec("minority", 60, (1.0, -1.0), (1.3, 0.7)),
    ),
    concept_weights=(1.2, -0.9),
    concept_bias=0.0,
    categorical_specs=(
        # one 3-level categorical with different level frequencies per SP
        CategoricalSpec(3, {"majority": (0.5, 0.3, 0.2), "minority": (0.2, 0.3, 0.5)}),
    ),
    noise_scale=1.0,
    seed=7,
)

cohort = simulate_cohort(cfg)
print(f"cohort: {cohort.n} rows, columns {list(cohort.schema.names)}")

encoded = preprocess(cohort)
outcome = encoded.decode_column("outcome")
group = encoded.decode_column("group")
print(f"outcome prevalence: {np.mean(outcome == 'pos'):.3f}")
for sp in ("majority", "minority"):
    mask = group == sp
    print(f"  {sp}: {mask.sum()} rows, prevalence {np.mean(outcome[mask] == 'pos'):.3f}")

# The performance ceiling per subpopulation: ROCAUC of the true concept
# probability, estimated by Monte Carlo from the simulator's own distribution.
for sp in ("majority", "minority"):
    ceiling = bayes_auc(cfg, sp, n_mc=50_000, seed=1)
    print(f"Bayes ROCAUC ceiling for {sp}: {ceiling:.3f}")

# The simulator can also act as a generator that samples fresh rows from the
# true distribution of one subpopulation — the reference point any learned
# generator is trying to approach.
fresh = oracle_sample(cfg, "minority", n=5, seed=2)
print("\nfive fresh minority rows from the true distribution:")
print(fresh.df.to_string(index=False))
