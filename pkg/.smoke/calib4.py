"""Determinism-criterion calibration: does the toy run flag a target, and how
long do two end-to-end runs take at different worker counts?"""
import json
import sys
import time
from pathlib import Path

sys.path.insert(0, "tests")
from helpers import small_sim_config

from gansemble.runner import METRIC_ARTIFACTS, RunConfig, run_end_to_end

root = Path(".smoke/c4")
for sim_seed, master in [(7, 3), (9, 0), (11, 1)]:
    t0 = time.monotonic()
    manifests = []
    for tag, workers in (("w1", 1), ("w3", 3)):
        out = root / f"s{sim_seed}m{master}_{tag}"
        cfg = RunConfig(
            out_dir=str(out),
            sim_config=small_sim_config(seed=sim_seed, sizes=(300, 60)),
            sweep__unused=None,
        ) if False else RunConfig.from_dict({
            "out_dir": str(out),
            "simulate": small_sim_config(seed=sim_seed, sizes=(300, 60)).to_dict(),
            "sweep": {"fractions": [0.0, 0.5, 1.0], "master_seed": master},
            "backend": "oracle",
        })
        manifests.append(run_end_to_end(cfg))
    a = root / f"s{sim_seed}m{master}_w1"
    b = root / f"s{sim_seed}m{master}_w3"
    same = all(
        (a / name).read_bytes() == (b / name).read_bytes()
        for name in METRIC_ARTIFACTS
        if (a / name).exists() or (b / name).exists()
    )
    present = [n for n in METRIC_ARTIFACTS if (a / n).exists()]
    print(
        f"sim={sim_seed} master={master}: targets={manifests[0]['targets']} "
        f"identical={same} artifacts={len(present)}/{len(METRIC_ARTIFACTS)} "
        f"[{time.monotonic() - t0:.0f}s]"
    )
