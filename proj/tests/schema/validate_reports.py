#!/usr/bin/env python3
# Copyright 2026 The LGNSDE Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Runs every subcommand on a small config and validates the reports.

JSON reports are checked against schemas/*.schema.json, CSV reports against
their documented headers. Exits 77 (ctest skip) when jsonschema is missing.
"""

import argparse
import csv
import json
import pathlib
import shutil
import subprocess
import sys

try:
    import jsonschema
except ImportError:
    print("jsonschema not installed; skipping")
    sys.exit(77)

CONFIG = """\
sbm_classes = 3
sbm_nodes_per_class = 10
sbm_p_in = 0.4
sbm_feature_dim = 6
hidden = 8
steps = 8
mc_samples = 4
epochs = 8
seed = 4
verify_paths = 1000
verify_trials = 5
verify_lipschitz_samples = 100
gradcheck_seeds = 3
"""

# report file -> schema file
JSON_REPORTS = {
    "generate.json": "generate.schema.json",
    "train.json": "run.schema.json",
    "ood.json": "run.schema.json",
    "eval.json": "eval.schema.json",
    "checkpoint.json": "checkpoint.schema.json",
    "verify.json": "verify.schema.json",
    "verify_variance.json": "verify_variance.schema.json",
    "verify_perturbation.json": "verify_perturbation.schema.json",
    "gradcheck.json": "gradcheck.schema.json",
    "splits.json": "splits.schema.json",
}

CSV_HEADERS = {
    "train_log.csv": ["member", "epoch", "train_loss", "kl", "val_accuracy", "val_nll"],
    "timing.csv": ["member", "epoch", "wall_seconds"],
    "entropy.csv": None,  # depends on the run, checked below
    "ood_entropy.csv": ["bin_left", "bin_right", "in_distribution", "ood"],
    "verify_variance.csv": ["t", "var_latent", "var_latent_se", "measured", "bound", "pass",
                            "diffusion_bound", "diffusion_pass"],
    "verify_perturbation.csv": ["t", "measured", "bound", "pass"],
    "gradcheck.csv": ["seed", "entries", "max_rel_error", "max_abs_error", "worst_parameter"],
}


def run(cli, command, config, out):
    res = subprocess.run([cli, command, "--config", str(config), "--out", str(out)],
                         capture_output=True, text=True, check=False)
    if res.returncode != 0:
        raise SystemExit(f"{command} exited {res.returncode}: {res.stderr}")


def check_csv(path, failures):
    with open(path, newline="") as f:
        rows = list(csv.reader(f))
    header = rows[0]
    expected = CSV_HEADERS.get(path.name)
    if path.name == "entropy.csv":
        expected = ["bin_left", "bin_right", "correct", "incorrect"]
        if header[2:] == ["in_distribution", "ood"]:
            expected = ["bin_left", "bin_right", "in_distribution", "ood"]
    elif path.name == "predictions.csv":
        fixed = ["node", "label", "is_ood", "predicted", "correct", "confidence", "entropy"]
        expected = fixed + [f"p{c}" for c in range(len(header) - len(fixed))]
    if expected is not None and header != expected:
        failures.append(f"{path}: header {header} != {expected}")
    for i, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            failures.append(f"{path}:{i}: {len(row)} fields, header has {len(header)}")


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--cli", required=True)
    ap.add_argument("--schemas", required=True, type=pathlib.Path)
    ap.add_argument("--work", required=True, type=pathlib.Path)
    args = ap.parse_args()

    shutil.rmtree(args.work, ignore_errors=True)
    args.work.mkdir(parents=True)
    config = args.work / "run.cfg"
    config.write_text(CONFIG)
    ood_config = args.work / "ood.cfg"
    ood_config.write_text(CONFIG + "ood_class = 1\n")
    eval_config = args.work / "eval.cfg"
    eval_config.write_text(CONFIG + "checkpoint = train/checkpoint.json\n")

    for command, cfg in [("generate", config), ("train", config), ("eval", eval_config),
                         ("ood", ood_config), ("verify", config), ("gradcheck", config)]:
        run(args.cli, command, cfg, args.work / command)

    failures = []
    seen = set()
    for path in sorted(args.work.rglob("*")):
        if path.suffix == ".json":
            schema_name = JSON_REPORTS.get(path.name)
            if schema_name is None:
                failures.append(f"{path}: no schema for this report")
                continue
            schema = json.loads((args.schemas / schema_name).read_text())
            jsonschema.Draft7Validator.check_schema(schema)
            errors = list(jsonschema.Draft7Validator(schema).iter_errors(json.loads(path.read_text())))
            failures.extend(f"{path}: {e.message} at {list(e.path)}" for e in errors)
            seen.add(path.name)
        elif path.suffix == ".csv":
            check_csv(path, failures)
            seen.add(path.name)

    missing = set(JSON_REPORTS) - seen
    if missing:
        failures.append(f"reports never produced: {sorted(missing)}")
    for f in failures:
        print("FAIL", f)
    print(f"{len(seen)} report kinds checked, {len(failures)} problems")
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
