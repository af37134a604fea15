import filecmp
import json
import shutil
import subprocess
import sys
from pathlib import Path

from gansemble.runner import METRIC_ARTIFACTS, RunConfig, run_end_to_end, verify_manifest

BASE = Path("/tmp/smoke_runner")
shutil.rmtree(BASE, ignore_errors=True)
BASE.mkdir(parents=True)

sim = {
    "n_continuous": 3,
    "subpops": [
        {"pm_value": "big", "size": 400, "feature_means": [0, 0, 0], "feature_spreads": [1, 1, 1]},
        {"pm_value": "small", "size": 60, "feature_means": [0.8, -0.5, 0.3],
         "feature_spreads": [1.2, 0.8, 1.0]},
    ],
    "concept_weights": [1.2, -0.8, 0.5],
    "concept_bias": 0.1,
    "categorical_specs": [
        {"levels": 3, "probs": {"big": [0.5, 0.3, 0.2], "small": [0.2, 0.3, 0.5]}}
    ],
    "noise_scale": 1.0,
    "seed": 21,
}
run_doc = {
    "out_dir": str(BASE / "run1"),
    "simulate": sim,
    "use_case": "toy",
    "sweep": {"fractions": [0.0, 0.5, 2.0], "master_seed": 17,
              "underperformance_margin": -1.0},
    "predictor": {"kind": "logistic"},
    "backend": "oracle",
    "metrics": ["rocauc"],
    "plots": True,
    "workers": 2,
}
# margin -1 must be rejected
try:
    RunConfig.from_dict(run_doc)
    raise AssertionError("negative margin accepted")
except Exception as exc:
    assert type(exc).__name__ == "ConfigError", exc
run_doc["sweep"]["underperformance_margin"] = 0.0

cfg = RunConfig.from_dict(run_doc)
manifest = run_end_to_end(cfg)
print("status:", manifest["status"], "targets:", manifest["targets"])
verify_manifest(BASE / "run1")
print("manifest hash-validates: OK")

out1 = BASE / "run1"
for name in METRIC_ARTIFACTS:
    present = (out1 / name).exists()
    print(f"  {name}: {'present' if present else 'MISSING'}")
plots = sorted((out1 / "plots").glob("*.png"))
print("plots:", [p.name for p in plots])
report = (out1 / "report.txt").read_text()
print("--- report.txt ---")
print(report)

# rerun with different worker count -> byte-identical metric artifacts
run_doc2 = dict(run_doc)
run_doc2["out_dir"] = str(BASE / "run2")
run_doc2["workers"] = 5
run_end_to_end(RunConfig.from_dict(run_doc2))
for name in METRIC_ARTIFACTS:
    a, b = out1 / name, BASE / "run2" / name
    if a.exists() != b.exists():
        raise AssertionError(f"{name} presence differs")
    if a.exists():
        assert filecmp.cmp(a, b, shallow=False), f"{name} differs between runs"
print("byte-identical metric artifacts across worker counts: OK")

# CLI end-to-end over the same config
cli_dir = BASE / "cli"
cli_dir.mkdir()
(cli_dir / "sim.json").write_text(json.dumps(sim))
run_doc3 = dict(run_doc)
run_doc3["out_dir"] = str(cli_dir / "run")
run_doc3["plots"] = False
(cli_dir / "run.json").write_text(json.dumps(run_doc3))

def cli(*argv):
    return subprocess.run([sys.executable, "-m", "gansemble.cli", *argv],
                          capture_output=True, text=True)

r = cli("simulate", "--config", str(cli_dir / "sim.json"), "--out", str(cli_dir / "cohort"))
assert r.returncode == 0, r.stderr
r = cli("preprocess", "--data", str(cli_dir / "cohort/cohort.csv"),
        "--schema", str(cli_dir / "cohort/schema.json"), "--out", str(cli_dir / "enc"))
assert r.returncode == 0, r.stderr
r = cli("split", "--data", str(cli_dir / "enc/encoded.csv"),
        "--schema", str(cli_dir / "cohort/schema.json"),
        "--codes", str(cli_dir / "enc/codes.json"),
        "--seed", "17", "--out", str(cli_dir))
assert r.returncode == 0, r.stderr
r = cli("identify", "--data", str(cli_dir / "enc/encoded.csv"),
        "--schema", str(cli_dir / "cohort/schema.json"),
        "--codes", str(cli_dir / "enc/codes.json"),
        "--seed", "17", "--predictor-kind", "logistic",
        "--out", str(cli_dir / "identify.json"))
assert r.returncode == 0, r.stderr
print(r.stdout)
r = cli("run", "--config", str(cli_dir / "run.json"))
assert r.returncode == 0, r.stderr + r.stdout
print(r.stdout)
r = cli("compare", "--table", str(cli_dir / "run/comparison.json"))
assert r.returncode == 0, r.stderr
print(r.stdout)
r = cli("report", "--results", str(cli_dir / "run"), "--out", str(cli_dir / "rerender"))
assert r.returncode == 0, r.stderr
# re-rendered report identical to the run's
assert (cli_dir / "rerender/report.txt").read_text() == (cli_dir / "run/report.txt").read_text()
print("report re-render identical: OK")

# CLI error paths
r = cli("run", "--config", str(cli_dir / "missing.json"))
assert r.returncode == 2, (r.returncode, r.stderr)
bad = dict(run_doc3); bad["backend"] = "bogus"
(cli_dir / "bad.json").write_text(json.dumps(bad))
r = cli("run", "--config", str(cli_dir / "bad.json"))
assert r.returncode == 2, (r.returncode, r.stderr)
print("CLI exit codes (config errors -> 2): OK")
print("ALL RUNNER+CLI SMOKE TESTS PASSED")
