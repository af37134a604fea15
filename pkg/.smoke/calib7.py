"""Calibration for the GAN-fidelity criterion: epochs/config vs TV and W1."""
import sys
import time

import numpy as np
from scipy.stats import wasserstein_distance

from gansemble.data import preprocess
from gansemble.gan import GanConfig, fit_generator, generate
from gansemble.simulate import CategoricalSpec, SimConfig, SubpopSpec, simulate_cohort


def toy_cohort(seed=424):
    cfg = SimConfig(
        n_continuous=2,
        subpops=(
            SubpopSpec("a", 250, (-2.0, 1.0), (0.5, 0.7)),
            SubpopSpec("b", 250, (2.0, 5.0), (0.5, 0.7)),
        ),
        concept_weights=(0.8, -0.5),
        concept_bias=0.2,
        categorical_specs=(
            CategoricalSpec(3, {"a": (0.6, 0.3, 0.1), "b": (0.15, 0.35, 0.5)}),
        ),
        noise_scale=1.0,
        seed=seed,
    )
    return preprocess(simulate_cohort(cfg))


def fidelity(train, gen):
    out = {}
    for col in train.schema.categorical_columns:
        cats = train.categories(col)
        t = train.df[col].to_numpy()
        g = gen.df[col].to_numpy()
        tf = np.array([(t == i).mean() for i in range(len(cats))])
        gf = np.array([(g == i).mean() for i in range(len(cats))])
        out[f"tv:{col}"] = 0.5 * np.abs(tf - gf).sum()
    for col in train.schema.continuous_columns:
        t = train.df[col].to_numpy(float)
        g = gen.df[col].to_numpy(float)
        out[f"w1n:{col}"] = wasserstein_distance(t, g) / t.std()
    return out


def run(epochs, dis_lr, hidden, seed):
    train = toy_cohort()
    cfg = GanConfig(epochs=epochs, batch_size=50, dis_lr=dis_lr,
                    hidden_dim=hidden, seed=seed)
    t0 = time.monotonic()
    model = fit_generator(train, cfg)
    t_fit = time.monotonic() - t0
    t0 = time.monotonic()
    sample = generate(model, 10_000, seed=seed + 1)
    t_gen = time.monotonic() - t0
    f = fidelity(train, sample)
    losses = np.array(model.loss_trace)
    print(f"epochs={epochs} dis_lr={dis_lr} hidden={hidden} seed={seed}: "
          f"fit {t_fit:.1f}s gen {t_gen:.1f}s; "
          + " ".join(f"{k}={v:.3f}" for k, v in sorted(f.items()))
          + f"; d_loss[last]={losses[-1,2]:.3f} g_loss[last]={losses[-1,3]:.3f} "
          f"finite={model.loss_trace_finite()}")
    return f


if __name__ == "__main__":
    for spec in sys.argv[1:]:
        epochs, dis_lr, hidden, seed = spec.split(":")
        run(int(epochs), float(dis_lr), int(hidden), int(seed))
