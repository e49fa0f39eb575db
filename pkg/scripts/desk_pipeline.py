"""Run the full desk pipeline and print the metrics table.

    python scripts/desk_pipeline.py --config configs/desk.yaml --out runs/desk --force
"""
import argparse
import time

from bezdistill.config import load_config
from bezdistill.desk import run_desk

if __name__ == "__main__":
    p = argparse.ArgumentParser()
    p.add_argument("--config", default="configs/desk.yaml")
    p.add_argument("--out")
    p.add_argument("--seed", type=int)
    p.add_argument("--force", action="store_true")
    a = p.parse_args()
    cfg = load_config(a.config)
    if a.seed is not None:
        cfg = cfg.with_seed(a.seed)
    t0 = time.perf_counter()
    art = run_desk(cfg, a.out, a.force)
    print(art["eval.metrics_text"].read_text())
    print(f"wall time {time.perf_counter() - t0:.1f}s; outputs in {art['eval.metrics'].parent}")
