#!/usr/bin/env python3
"""Regenerate the bundled sample CSVs by running small seeded experiments.

Run from the repository root: python plots/sample_data/regenerate.py
"""

import json
import shutil
import sys
from pathlib import Path

from steinflow.cli import main

HERE = Path(__file__).parent


def run(cfg, out_name):
    out_dir = HERE / "_tmp" / out_name
    cfg = dict(cfg, output_dir=str(out_dir))
    path = HERE / "_tmp" / f"{out_name}.json"
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(cfg))
    if main(["run", str(path)]) != 0:
        raise SystemExit(f"run failed for {out_name}")
    return out_dir


def base(d, variant, seed=0, **extra):
    cfg = {
        "target": {"kind": "gaussian", "d": d},
        "variant": variant,
        "n_particles": 60,
        "seed": seed,
        "kernel": {"family": "squared_exponential"},
    }
    cfg.update(extra)
    return cfg


def main_():
    transport = run(base(2, "stein_transport", n_steps=30, **{"lambda": 1e-2}),
                    "gaussian_d2_transport")
    svgd = run(base(2, "svgd", svgd_steps=60, adjust_optimizer="adagrad",
                    adagrad={"learning_rate": 0.1}), "gaussian_d2_svgd")
    shutil.copy(transport / "diagnostics.csv", HERE / "gaussian_d2_transport.csv")
    shutil.copy(svgd / "diagnostics.csv", HERE / "gaussian_d2_svgd.csv")
    shutil.copy(transport / "particles_final.csv", HERE / "gaussian_d2_particles.csv")

    for d in (2, 5, 10):
        out = run(base(d, "adjusted", n_steps=40, n_adjust=5, dt_adjust=0.1,
                       adjust_optimizer="plain", ksd_every=0, **{"lambda": 1e-2}),
                  f"gaussian_d{d}_adjusted")
        shutil.copy(out / "diagnostics.csv", HERE / f"gaussian_d{d}_adjusted.csv")

    logistic = run({
        "target": {"kind": "logistic",
                   "dataset_path": str(Path("configs/data/synthetic_logistic.csv").resolve()),
                   "bias": True},
        "variant": "adjusted", "n_particles": 40, "seed": 0,
        "n_steps": 25, "lambda": 1e-2, "n_adjust": 1, "dt_adjust": 0.01,
        "adjust_optimizer": "plain",
        "kernel": {"family": "squared_exponential"},
    }, "logistic_synthetic")
    shutil.copy(logistic / "diagnostics.csv", HERE / "logistic_synthetic.csv")
    shutil.rmtree(HERE / "_tmp")
    print("sample data regenerated")


if __name__ == "__main__":
    sys.exit(main_())
