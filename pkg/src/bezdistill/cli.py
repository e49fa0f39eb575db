"""Command-line harness.

    bezdistill <command> --config PATH [--seed N] [--out DIR]
               [--teacher PATH ...] [--student PATH ...] [--coupling PATH] [--force]

Commands: train, reflow, distill, bezier-distill, eval, plot.
"""
from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .archive import read_archive, save_weights
from .config import ExperimentConfig, load_config
from .csvio import write_csv
from .datasets import derive_seed, sample
from .errors import BezdistillError, ConfigError, UsageError
from .field import SolverSpec, VelocityField, integrate
from .metrics import MetricsReport, crossing_count, endpoint_mse, straightness, transport_cost, w2_exact
from .pipeline import (CouplingPair, GuidedCoupling, Objective, read_coupling_csv, reflow_pairs, train,
                       write_coupling_csv)
from .plotting import scatter_svg, trajectory_svg

COMMANDS = ("train", "reflow", "distill", "bezier-distill", "eval", "plot")


class _Outputs:
    """Collects output paths and refuses to clobber existing files."""

    def __init__(self, out: Path, force: bool):
        self.out, self.force = out, force
        self.paths: dict[str, Path] = {}

    def claim(self, key: str, name: str) -> Path:
        p = self.out / name
        if p.exists() and not self.force:
            raise UsageError(f"refusing to overwrite {p} (pass --force)")
        self.paths[key] = p
        return p


def _comment(cfg: ExperimentConfig) -> str:
    return f"config_digest={cfg.digest()} seed={cfg.seed}"


def _write_losses(path: Path, losses: np.ndarray, cfg: ExperimentConfig) -> None:
    write_csv(path, ["step", "loss"], ((i, float(v)) for i, v in enumerate(losses)), _comment(cfg))


def _provenance(cfg: ExperimentConfig, objective: str, level: int, steps: int, source: str) -> dict:
    return {"config_digest": cfg.digest(), "seed": cfg.seed, "steps": steps,
            "level": level, "objective": objective, "coupling": source}


def _load_coupling(path: str | None) -> CouplingPair | GuidedCoupling:
    if not path:
        raise UsageError("this command needs a coupling file (--coupling or data.coupling)")
    return read_coupling_csv(path)


def _fresh_pairs(cfg: ExperimentConfig):
    def draw(rng: np.random.Generator, n: int) -> CouplingPair:
        s = int(rng.integers(2**62))
        return CouplingPair(sample(cfg.pi0, n, s), sample(cfg.pi1, n, derive_seed(s, "pi1")))
    return draw


def cmd_train(cfg, outs, teachers, students, coupling_path):
    if coupling_path:
        coupling = _load_coupling(coupling_path)
        if isinstance(coupling, GuidedCoupling):
            coupling = coupling.base
        data, level, source = coupling, coupling.level + 1, coupling.describe()
    else:
        data, level, source = _fresh_pairs(cfg), 1, "independent(fresh)"
    w = outs.claim("weights", f"rf_k{level}.weights")
    lc = outs.claim("loss", f"rf_k{level}_loss.csv")
    field, losses = train(cfg.train, Objective("rectified_flow"), data, label=f"{level}-rectified-flow")
    save_weights(field, w, _provenance(cfg, "rectified_flow", level, cfg.train.total_steps, source))
    _write_losses(lc, losses, cfg)


def cmd_reflow(cfg, outs, teachers, students, coupling_path):
    if len(teachers) != 1:
        raise UsageError("reflow needs exactly one --teacher")
    teacher, prov = read_archive(teachers[0])
    level = int(prov.get("level", cfg.reflow_level))
    path = outs.claim("coupling", f"coupling_k{level}.csv")
    x0 = sample(cfg.pi0, cfg.data.n_pairs, derive_seed(cfg.seed, f"reflow-{level}"))
    coupling = reflow_pairs(teacher, x0, cfg.solver, level)
    write_coupling_csv(path, coupling, f"teacher={teacher.label}\n" + _comment(cfg))


def _distill(cfg, outs, objective: Objective, teachers, coupling_path):
    coupling = _load_coupling(coupling_path)
    base = coupling.base if isinstance(coupling, GuidedCoupling) else coupling
    level = base.level
    name = objective.kind
    w = outs.claim("weights", f"{name}_k{level}.weights")
    lc = outs.claim("loss", f"{name}_k{level}_loss.csv")
    fields = [read_archive(p)[0] for p in teachers]
    if objective.n_guides == 0:
        coupling, fields = base, []
    elif isinstance(coupling, GuidedCoupling):
        fields = []
    field, losses = train(cfg.train, objective, coupling, teachers=fields, label=f"{name}(k={level})")
    save_weights(field, w, _provenance(cfg, name, level, cfg.train.total_steps, base.describe()))
    _write_losses(lc, losses, cfg)


def cmd_distill(cfg, outs, teachers, students, coupling_path):
    _distill(cfg, outs, Objective("distill"), [], coupling_path)


def cmd_bezier_distill(cfg, outs, teachers, students, coupling_path):
    if cfg.objective.kind not in ("bezier2", "bezier3"):
        raise ConfigError(f"objective.kind must be bezier2 or bezier3 for bezier-distill, got {cfg.objective.kind}")
    _distill(cfg, outs, cfg.objective, teachers, coupling_path)


def _eval_batches(cfg: ExperimentConfig) -> tuple[np.ndarray, np.ndarray]:
    x0 = sample(cfg.pi0, cfg.data.n_eval, derive_seed(cfg.seed, "eval"))
    target = sample(cfg.pi1, cfg.data.n_eval, derive_seed(cfg.seed, "eval-target"))
    return x0, target


def evaluate(cfg: ExperimentConfig, teachers: Sequence[str], students: Sequence[str]) -> list[MetricsReport]:
    """Teachers are sampled with the configured solver; students both in one
    step and with the solver. ``endpoint_mse`` is measured against the first
    teacher's solver endpoint, or the field's own when no teacher is given."""
    if not teachers and not students:
        raise UsageError("eval needs at least one --student or --teacher")
    x0, target = _eval_batches(cfg)
    one_step = SolverSpec("euler", 1)
    loaded_t = [read_archive(p) for p in teachers]
    loaded_s = [read_archive(p) for p in students]
    reference = integrate(loaded_t[0][0], x0, cfg.solver).endpoint if loaded_t else None

    def report(field: VelocityField, prov: dict, traj, sampler: str, ref) -> MetricsReport:
        y = traj.endpoint
        sub = replace(traj, states=traj.states[:, : cfg.data.n_crossing])
        crossings = crossing_count(sub) if y.shape[1] == 2 else -1
        return MetricsReport(
            label=field.label, objective=str(prov.get("objective", "?")), level=int(prov.get("level", -1)),
            seed=cfg.seed, solver=cfg.solver.describe(), sampler=sampler,
            transport_cost=transport_cost((x0, y)), straightness=straightness(traj),
            w2_to_target=w2_exact(y, target), crossing_count=crossings,
            endpoint_mse=endpoint_mse(y, ref),
        )

    rows = []
    for field, prov in loaded_t:
        traj = integrate(field, x0, cfg.solver)
        rows.append(report(field, prov, traj, cfg.solver.describe(), reference if reference is not None else traj.endpoint))
    for field, prov in loaded_s:
        multi = integrate(field, x0, cfg.solver)
        ref = reference if reference is not None else multi.endpoint
        rows.append(report(field, prov, integrate(field, x0, one_step), "onestep", ref))
        rows.append(report(field, prov, multi, cfg.solver.describe(), ref))
    return rows


def cmd_eval(cfg, outs, teachers, students, coupling_path):
    csv_path = outs.claim("metrics", "metrics.csv")
    txt_path = outs.claim("metrics_text", "metrics.txt")
    rows = evaluate(cfg, teachers, students)
    write_csv(csv_path, MetricsReport.columns(), (r.row() for r in rows), _comment(cfg))
    txt_path.write_text("\n\n".join(r.to_text() for r in rows) + "\n")


def cmd_plot(cfg, outs, teachers, students, coupling_path):
    if not teachers and not students:
        raise UsageError("plot needs at least one --student or --teacher")
    x0, target = _eval_batches(cfg)
    n = cfg.data.n_crossing
    for path, is_student in [(p, False) for p in teachers] + [(p, True) for p in students]:
        field, _ = read_archive(path)
        stem = Path(path).stem
        sc = outs.claim(f"scatter_{stem}", f"scatter_{stem}.svg")
        tr = outs.claim(f"traj_{stem}", f"traj_{stem}.svg")
        traj = integrate(field, x0, cfg.solver)
        gen = integrate(field, x0, SolverSpec("euler", 1)).endpoint if is_student else traj.endpoint
        how = "one step" if is_student else cfg.solver.describe()
        scatter_svg(sc, gen, target, f"{field.label} ({how}) vs target")
        trajectory_svg(tr, traj.states[:, :n], traj.times, f"{field.label} trajectories, {cfg.solver.describe()}")


_HANDLERS = {
    "train": cmd_train,
    "reflow": cmd_reflow,
    "distill": cmd_distill,
    "bezier-distill": cmd_bezier_distill,
    "eval": cmd_eval,
    "plot": cmd_plot,
}


def run(command: str, config: ExperimentConfig, out: str | Path | None = None,
        teachers: Sequence[str] = (), students: Sequence[str] = (),
        coupling: str | None = None, force: bool = False) -> dict[str, Path]:
    """Execute one command; returns the written artifacts by name."""
    if command not in _HANDLERS:
        raise UsageError(f"unknown command {command!r}; expected one of {', '.join(COMMANDS)}")
    out_dir = Path(out if out is not None else config.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    outs = _Outputs(out_dir, force)
    teachers = list(teachers) or list(config.teachers)
    _HANDLERS[command](config, outs, teachers, list(students), coupling or config.data.coupling)
    return outs.paths


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="bezdistill", description="Rectified-flow and Bezier distillation harness")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", required=True, help="YAML experiment config")
    p.add_argument("--seed", type=int, help="override the config seed")
    p.add_argument("--out", help="output directory (default: config 'out')")
    p.add_argument("--teacher", action="extend", nargs="+", default=[], metavar="PATH", help="teacher weight file(s)")
    p.add_argument("--student", action="extend", nargs="+", default=[], metavar="PATH",
                   help="student weight file(s) for eval/plot")
    p.add_argument("--coupling", metavar="PATH", help="coupling CSV (overrides data.coupling)")
    p.add_argument("--force", action="store_true", help="overwrite existing outputs")
    return p


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg = cfg.with_seed(args.seed)
        paths = run(args.command, cfg, args.out, args.teacher, args.student, args.coupling, args.force)
    except (BezdistillError, OSError) as exc:
        print(f"bezdistill {args.command}: error: {exc}", file=sys.stderr)
        return 1
    for name, path in paths.items():
        print(f"{name}: {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
