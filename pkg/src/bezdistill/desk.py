"""End-to-end desk experiment built from the CLI commands.

1-rectified flow on fresh independent pairs -> reflow -> 2-rectified flow
-> reflow -> one-step students (plain distill, bezier2, bezier3, all guided
by the 2-rectified flow) -> eval + plots.
"""
from __future__ import annotations

from dataclasses import replace
from pathlib import Path

from .cli import run
from .config import ExperimentConfig
from .pipeline import Objective


def bezier_objective(cfg: ExperimentConfig, kind: str) -> Objective:
    o = cfg.objective
    if o.kind == kind:
        return o
    return Objective(kind, scale_mode=o.scale_mode, eval_mode=o.eval_mode)


def run_desk(cfg: ExperimentConfig, out: str | Path | None = None, force: bool = False) -> dict[str, Path]:
    out = Path(out if out is not None else cfg.out)
    art: dict[str, Path] = {}

    def step(tag: str, command: str, config=cfg, **kw) -> dict[str, Path]:
        paths = run(command, config, out, force=force, **kw)
        art.update({f"{tag}.{k}": v for k, v in paths.items()})
        return paths

    rf1 = step("rf1", "train")["weights"]
    c1 = step("reflow1", "reflow", teachers=[str(rf1)])["coupling"]
    rf2 = step("rf2", "train", coupling=str(c1))["weights"]
    c2 = step("reflow2", "reflow", teachers=[str(rf2)])["coupling"]
    students = [step("distill", "distill", coupling=str(c2))["weights"]]
    for kind in ("bezier2", "bezier3"):
        bcfg = replace(cfg, objective=bezier_objective(cfg, kind))
        students.append(step(kind, "bezier-distill", config=bcfg, coupling=str(c2), teachers=[str(rf2)])["weights"])
    step("eval", "eval", teachers=[str(rf1), str(rf2)], students=[str(s) for s in students])
    step("plot", "plot", teachers=[str(rf1), str(rf2)], students=[str(s) for s in students])
    return art
