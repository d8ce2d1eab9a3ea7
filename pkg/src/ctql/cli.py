"""Command-line driver: ``ctql {train,eval,compare,export,analyze-tutor}``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import harness as H
from .config import MODES, ExperimentConfig, load_config
from .core_rl import QTable
from .discretization import GRIDS
from .errors import ConfigError, FingerprintMismatch, SimulationDivergence

log = logging.getLogger("ctql")


def _config(args: argparse.Namespace, trials_field: str | None) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    changes = {}
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.mode is not None:
        changes["mode"] = args.mode
    if args.grid is not None:
        changes["grid"] = args.grid
    if args.trials is not None and trials_field:
        changes[trials_field] = args.trials
    return cfg.with_(**changes) if changes else cfg


def _progress(kind: str, n: int, result) -> None:
    t = "-" if result.settling_time_s is None else f"{result.settling_time_s:.2f} s"
    log.info("%s trial %d: success=%s t_s=%s tutor=%.3f", kind, n, result.success, t, result.tutor_fraction())


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, indent=2) + "\n")


def _write_trial_files(out: Path, cfg: ExperimentConfig, result, title: str) -> None:
    H.export_trajectories(result, out / "trajectories.csv", decimation=cfg.record_stride)
    H.plot_radial(result, out / "radial_plot.svg", cfg.env.rho_g, cfg.env.Ts, title)


def cmd_train(args, out: Path) -> int:
    cfg = _config(args, "n_training_trials")
    table, tlog = H.run_training(cfg, _progress)
    table.save(out / "qtable.bin")
    _write_json(out / "summary.json", {"config": cfg.to_dict(), "training": tlog.to_dict(), "nnz": table.nnz()})
    print(f"trained {cfg.n_training_trials} trial(s), {table.nnz()} nonzero entries -> {out / 'qtable.bin'}")
    return 0


def cmd_eval(args, out: Path) -> int:
    cfg = _config(args, "n_eval_trials")
    if args.qtable:
        table = QTable.load(args.qtable, expected_fingerprint=cfg.make_grid().fingerprint, dense=cfg.dense_table)
        tlog = None
    else:
        table, tlog = H.run_training(cfg, _progress)
        table.save(out / "qtable.bin")
    summary = H.run_evaluation(cfg, table, _progress)
    payload = {"config": cfg.to_dict(), "evaluation": summary.to_dict()}
    if tlog is not None:
        payload["training"] = tlog.to_dict()
    _write_json(out / "summary.json", payload)
    if summary.results:
        _write_trial_files(out, cfg, summary.results[0], f"{cfg.mode}, {cfg.grid} grid, evaluation trial 0")
    t = summary.mean_settling_time_s
    print(f"{cfg.mode} {cfg.grid}: success {100 * summary.success_rate:.0f}% "
          f"mean t_s {'-' if t is None else f'{t:.2f} s'}")
    return 0


def cmd_compare(args, out: Path) -> int:
    cfg = _config(args, "n_eval_trials")
    modes = [args.mode] if args.mode else ["CT", "QL", "CTQL"]
    grids = [args.grid] if args.grid else ["coarse", "fine"]
    report = H.compare_modes(cfg.with_(mode="CTQL"), modes=modes, grids=grids, long_run=args.long_run, progress=_progress)
    _write_json(out / "summary.json", {"config": cfg.to_dict(), **report.to_dict()})
    print(report.to_text())
    return 0


def cmd_export(args, out: Path) -> int:
    cfg = _config(args, "n_training_trials")
    table, _ = H.run_training(cfg, _progress)
    summary = H.run_evaluation(cfg.with_(n_eval_trials=1), table, _progress)
    result = summary.results[0]
    H.export_trajectories(result, out / "trajectories.csv", decimation=args.decimation or cfg.record_stride)
    H.plot_radial(result, out / "radial_plot.svg", cfg.env.rho_g, cfg.env.Ts, f"{cfg.mode}, {cfg.grid} grid")
    table.save(out / "qtable.bin")
    _write_json(out / "summary.json", {"config": cfg.to_dict(), "evaluation": summary.to_dict()})
    print(f"wrote {out / 'trajectories.csv'} and {out / 'radial_plot.svg'}")
    return 0


def cmd_analyze_tutor(args, out: Path) -> int:
    cfg = _config(args, None)
    analysis = H.analyze_tutor(cfg)
    print(analysis.to_text())
    return 0 if analysis.stable and analysis.converged_at_s is not None else 1


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="INI config file")
    common.add_argument("--seed", type=int, help="master seed (non-negative)")
    common.add_argument("--mode", choices=MODES)
    common.add_argument("--grid", choices=sorted(GRIDS))
    common.add_argument("--out", type=Path, default=Path("."), help="output directory")
    common.add_argument("--trials", type=int, help="training trials (train, export) or evaluation trials (eval, compare)")
    common.add_argument("-v", "--verbose", action="store_true", help="log every trial")

    p = argparse.ArgumentParser(prog="ctql", description="Control-tutored Q-learning for herding.")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("train", parents=[common], help="train a Q-table and save qtable.bin")
    ev = sub.add_parser("eval", parents=[common], help="evaluate a (trained or loaded) Q-table")
    ev.add_argument("--qtable", type=Path, help="evaluate this table instead of training one first")
    cmp_ = sub.add_parser("compare", parents=[common], help="CT / QL / CTQL comparison table")
    cmp_.add_argument("--long-run", action="store_true", help="train QL for 5000 trials")
    ex = sub.add_parser("export", parents=[common], help="export one trial's trajectories and radial plot")
    ex.add_argument("--decimation", type=int, help="steps between CSV samples (default: record_stride)")
    sub.add_parser("analyze-tutor", parents=[common], help="closed-loop eigenvalues and ideal-model check")
    return p


COMMANDS = {
    "train": cmd_train,
    "eval": cmd_eval,
    "compare": cmd_compare,
    "export": cmd_export,
    "analyze-tutor": cmd_analyze_tutor,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    if args.seed is not None and args.seed < 0:
        print("error: --seed must be non-negative", file=sys.stderr)
        return 2
    out = args.out
    try:
        out.mkdir(parents=True, exist_ok=True)
        return COMMANDS[args.command](args, out)
    except (ConfigError, FingerprintMismatch, SimulationDivergence, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
