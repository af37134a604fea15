import json

from gansemble.data import partition_by_pm, preprocess
from gansemble.gan import GanConfig
from gansemble.pipeline import CtganBackend, SweepConfig, build_protocol_splits, run_sweep
from gansemble.predict import PredictorConfig
from gansemble.results import AuditEntry
from gansemble.simulate import CategoricalSpec, SimConfig, SubpopSpec, simulate_cohort

cfg = SimConfig(
    n_continuous=2,
    subpops=(
        SubpopSpec("a", 160, (0.0, 0.0), (1.0, 1.0)),
        SubpopSpec("b", 80, (0.8, -0.5), (1.2, 0.8)),
    ),
    concept_weights=(1.2, -0.8),
    categorical_specs=(CategoricalSpec(3, {"a": (0.5, 0.3, 0.2), "b": (0.2, 0.3, 0.5)}),),
    noise_scale=1.0,
    seed=3,
)
d = preprocess(simulate_cohort(cfg))
part = partition_by_pm(d, ())
sw = SweepConfig(fractions=(0.0, 1.0), master_seed=5)
pred = PredictorConfig(kind="logistic")
gan = GanConfig(epochs=2, batch_size=20, hidden_dim=32, latent_dim=16, mixture_modes=3, pac=5)
splits = build_protocol_splits(part, sw.master_seed)

audit: list[AuditEntry] = []
r1 = run_sweep(d, ["b"], sw, gan_cfg=gan, pred_cfg=pred, workers=2,
               partition=part, splits=splits, audit=audit)
r2 = run_sweep(d, ["b"], sw, gan_cfg=gan, pred_cfg=pred, workers=1,
               partition=part, splits=splits)
assert json.dumps(r1.to_dict(), sort_keys=True) == json.dumps(r2.to_dict(), sort_keys=True)
for p in r1.points:
    print(f"{p.sp} f={p.fraction} n_synth={p.n_synthetic} status={p.status} "
          f"auc={p.sp_model['rocauc'] if p.sp_model else p.error}")
print("backend:", r1.generator_backend)
ctx = [a.context for a in audit]
assert "sweep:generator:b" in ctx
print("CTGAN BACKEND SWEEP OK")
