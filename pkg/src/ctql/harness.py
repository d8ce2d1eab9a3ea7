"""Seeded training and evaluation campaigns, mode comparison and exports.

Every trial draws from its own random substreams, keyed by the master seed,
the campaign phase (training or evaluation) and the trial index, so adding
trials or changing exploration never perturbs another trial's environment.
"""

from __future__ import annotations

import csv
import json
import math
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Iterable

import numpy as np

from .config import ExperimentConfig
from .core_rl import PolicyBranch, QTable
from .environment import TWO_PI, WorldState, resample_noise
from .errors import FingerprintMismatch, SimulationDivergence
from .trial import TrialResult, TrialRng, run_trial
from .tutor import closed_loop_eigenvalues, simulate_ideal_loop

TRAIN = 0
EVAL = 1

# target start radius range for seeded initial conditions (m)
START_RADIUS = (15.0, 30.0)


def trial_rng(cfg: ExperimentConfig, phase: int, n: int) -> TrialRng:
    return TrialRng.from_seed(cfg.seed, (phase, n), cfg.n_targets, cfg.n_herders)


def initial_world(cfg: ExperimentConfig, phase: int, n: int, rng: TrialRng | None = None) -> WorldState:
    """Random start: targets at radius U[15, 30] with uniform bearing.

    Each herder starts U[rho_hat, rho_hat + 2] away from a target, in a uniform
    direction. With one herder and one target that target is the only choice;
    otherwise herder ``j`` is placed next to a uniformly drawn target.
    """
    ic = np.random.default_rng([cfg.seed, phase, n, 0])
    targets = []
    for _ in range(cfg.n_targets):
        r = ic.uniform(*START_RADIUS)
        a = ic.uniform(0.0, TWO_PI)
        targets.append((r * math.cos(a), r * math.sin(a)))
    rho_hat = cfg.tutor.rho_hat_tau
    herders = []
    for _ in range(cfg.n_herders):
        i = 0 if cfg.n_targets == 1 else int(ic.integers(cfg.n_targets))
        d = ic.uniform(rho_hat, rho_hat + 2.0)
        b = ic.uniform(0.0, TWO_PI)
        herders.append((targets[i][0] + d * math.cos(b), targets[i][1] + d * math.sin(b)))
    rng = rng or trial_rng(cfg, phase, n)
    noise = [resample_noise(g, cfg.env.beta_max) for g in rng.noise]
    return WorldState(targets, herders, noise)


def new_table(cfg: ExperimentConfig) -> QTable:
    g = cfg.make_grid()
    return QTable(g.n_states, g.n_actions, g.fingerprint, dense=cfg.dense_table)


def _run(cfg: ExperimentConfig, table: QTable, phase: int, n: int) -> TrialResult:
    rng = trial_rng(cfg, phase, n)
    world = initial_world(cfg, phase, n, rng)
    try:
        _, result = run_trial(world, cfg.mode, table, cfg, rng)
    except SimulationDivergence as exc:
        kind = "training" if phase == TRAIN else "evaluation"
        raise SimulationDivergence(f"{kind} trial {n}: {exc}", step=exc.step) from exc
    return result


@dataclass
class TrainingLog:
    reward_sums: list[float] = field(default_factory=list)
    branch_counts: list[Counter] = field(default_factory=list)
    successes: list[bool] = field(default_factory=list)

    def tutor_fractions(self) -> list[float]:
        return [_tutor_fraction(c) for c in self.branch_counts]

    def to_dict(self) -> dict[str, Any]:
        return {
            "reward_sums": self.reward_sums,
            "successes": self.successes,
            "tutor_fractions": self.tutor_fractions(),
            "branch_counts": [_counts_dict(c) for c in self.branch_counts],
        }


def _tutor_fraction(c: Counter) -> float:
    n = sum(c.values())
    if n == 0:
        return 0.0
    return (c[PolicyBranch.TUTOR_NEAREST] + c[PolicyBranch.TUTOR_RANDOM]) / n


def _counts_dict(c: Counter) -> dict[str, int]:
    return {b.value: int(c[b]) for b in PolicyBranch}


Progress = Callable[[str, int, TrialResult], None]


def run_training(cfg: ExperimentConfig, progress: Progress | None = None) -> tuple[QTable, TrainingLog]:
    """Run ``cfg.n_training_trials`` trials in sequence on one shared table."""
    table = new_table(cfg)
    log = TrainingLog()
    for n in range(cfg.n_training_trials):
        result = _run(cfg, table, TRAIN, n)
        log.reward_sums.append(result.reward_sum)
        log.branch_counts.append(result.branch_counts)
        log.successes.append(result.success)
        if progress:
            progress("train", n, result)
    return table, log


@dataclass
class CampaignSummary:
    mode: str
    grid: str
    n_eval_trials: int
    success_rate: float
    mean_settling_time_s: float | None
    results: list[TrialResult] = field(default_factory=list, repr=False)

    @property
    def branch_counts(self) -> Counter:
        total: Counter = Counter()
        for r in self.results:
            total.update(r.branch_counts)
        return total

    def mean_tutor_fraction(self) -> float:
        if not self.results:
            return 0.0
        return float(np.mean([r.tutor_fraction() for r in self.results]))

    def to_dict(self) -> dict[str, Any]:
        return {
            "mode": self.mode,
            "grid": self.grid,
            "n_eval_trials": self.n_eval_trials,
            "success_rate": self.success_rate,
            "mean_settling_time_s": self.mean_settling_time_s,
            "mean_tutor_fraction": self.mean_tutor_fraction(),
            "branch_counts": _counts_dict(self.branch_counts),
            "trials": [
                {
                    "success": r.success,
                    "settling_time_s": r.settling_time_s,
                    "final_target_r": [float(x) for x in r.target_r[-1]],
                    "reward_sum": r.reward_sum,
                    "tutor_fraction": r.tutor_fraction(),
                }
                for r in self.results
            ],
        }


def summarize(cfg: ExperimentConfig, results: list[TrialResult]) -> CampaignSummary:
    times = [r.settling_time_s for r in results if r.success]
    return CampaignSummary(
        mode=cfg.mode,
        grid=cfg.grid,
        n_eval_trials=len(results),
        success_rate=len(times) / len(results) if results else 0.0,
        mean_settling_time_s=float(np.mean(times)) if times else None,
        results=results,
    )


def run_evaluation(cfg: ExperimentConfig, table: QTable, progress: Progress | None = None) -> CampaignSummary:
    """Evaluate ``table`` on ``cfg.n_eval_trials`` fresh starts.

    Learning stays on during evaluation, but every trial starts from its own
    copy of ``table``, so trials are independent and the input is untouched.
    """
    grid = cfg.make_grid()
    if table.fingerprint != grid.fingerprint:
        raise FingerprintMismatch(
            f"Q-table fingerprint {table.fingerprint[:12]!r} does not match grid {cfg.grid!r}"
        )
    results = []
    for n in range(cfg.n_eval_trials):
        results.append(_run(cfg, table.copy(), EVAL, n))
        if progress:
            progress("eval", n, results[-1])
    return summarize(cfg, results)


def campaign(cfg: ExperimentConfig, progress: Progress | None = None) -> tuple[QTable, TrainingLog, CampaignSummary]:
    table, log = run_training(cfg, progress)
    return table, log, run_evaluation(cfg, table, progress)


def training_budget(mode: str, cfg: ExperimentConfig, long_run: bool = False) -> int:
    """Training trials used for ``mode`` in a comparison."""
    if mode == "CT":
        return 0
    if mode == "QL":
        return 5000 if long_run else cfg.ql_training_trials
    return cfg.n_training_trials


@dataclass
class ComparisonReport:
    rows: list[dict[str, Any]]

    def to_dict(self) -> dict[str, Any]:
        return {"rows": self.rows}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def to_text(self) -> str:
        head = ("mode", "grid", "train", "success", "mean t_s (s)", "tutor frac")
        lines = [head]
        for r in self.rows:
            t = r["mean_settling_time_s"]
            lines.append((
                r["mode"],
                r["grid"],
                str(r["n_training_trials"]),
                f"{100 * r['success_rate']:.0f}%",
                "-" if t is None else f"{t:.1f}",
                f"{r['mean_tutor_fraction']:.3f}" if r["mode"] == "CTQL" else "-",
            ))
        widths = [max(len(line[c]) for line in lines) for c in range(len(head))]
        return "\n".join("  ".join(v.ljust(w) for v, w in zip(line, widths)).rstrip() for line in lines)


def compare_modes(
    cfg_base: ExperimentConfig,
    modes: Iterable[str] = ("CT", "QL", "CTQL"),
    grids: Iterable[str] = ("coarse", "fine"),
    long_run: bool = False,
    progress: Progress | None = None,
) -> ComparisonReport:
    """One campaign per mode and grid, all sharing the base seed."""
    rows = []
    for grid in grids:
        for mode in modes:
            cfg = cfg_base.with_(mode=mode, grid=grid)
            cfg = cfg.with_(n_training_trials=training_budget(mode, cfg, long_run))
            _, _, summary = campaign(cfg, progress)
            row = summary.to_dict()
            row.pop("trials")
            row["n_training_trials"] = cfg.n_training_trials
            rows.append(row)
    return ComparisonReport(rows)


CSV_HEADER = ("t", "agent_kind", "agent_id", "x", "y", "r")


def export_trajectories(result: TrialResult | None, path: str | Path, decimation: int = 100) -> Path:
    """Write sampled positions as CSV, targets first then herders at each time.

    ``decimation`` counts integration steps and must be a multiple of the
    stride the trial was recorded with. ``None`` writes the header only.
    """
    path = Path(path)
    if decimation < 1:
        raise ValueError("decimation must be at least 1")
    rows = []
    if result is not None and len(result.record_t):
        stride = result.record_stride
        if decimation % stride:
            raise ValueError(f"decimation {decimation} is not a multiple of the recording stride {stride}")
        every = decimation // stride
        for m in range(0, len(result.record_t), every):
            t = float(result.record_t[m])
            for kind, xy in (("target", result.target_xy[m]), ("herder", result.herder_xy[m])):
                for idx, (x, y) in enumerate(xy):
                    rows.append((f"{t:.6g}", kind, idx, repr(float(x)), repr(float(y)), repr(math.hypot(x, y))))
    try:
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(CSV_HEADER)
            writer.writerows(rows)
    except OSError as exc:
        raise OSError(f"cannot write trajectories to {path}: {exc}") from exc
    return path


def plot_radial(result: TrialResult, path: str | Path, rho_g: float, Ts: float, title: str = "") -> Path:
    """SVG of every agent's distance from the goal against time."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    path = Path(path)
    t = np.arange(result.target_r.shape[0]) * Ts
    # a few thousand points per curve is plenty for a figure
    step = max(1, len(t) // 5000)
    fig, ax = plt.subplots(figsize=(7, 3.5))
    for i in range(result.target_r.shape[1]):
        ax.plot(t[::step], result.target_r[::step, i], color="tab:blue", lw=1, label="target" if i == 0 else None)
    for j in range(result.herder_r.shape[1]):
        ax.plot(t[::step], result.herder_r[::step, j], color="tab:red", lw=1, ls="--", label="herder" if j == 0 else None)
    ax.axhline(rho_g, color="k", lw=1, ls=":", label="goal radius")
    ax.set_xlabel("t (s)")
    ax.set_ylabel("distance from goal (m)")
    if title:
        ax.set_title(title)
    ax.legend(loc="upper right")
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)
    return path


@dataclass
class TutorAnalysis:
    k_i: float
    k_p: float
    eigenvalues: tuple[complex, complex]
    stable: bool
    initial_norm: float
    final_norm: float
    converged_at_s: float | None

    def to_text(self) -> str:
        ev = ", ".join(f"{e.real:.4f}" if abs(e.imag) < 1e-12 else f"{e:.4f}" for e in self.eigenvalues)
        conv = "never" if self.converged_at_s is None else f"{self.converged_at_s:.2f} s"
        return "\n".join([
            f"closed-loop eigenvalues (k_i={self.k_i:g}, k_p={self.k_p:g}): {ev}",
            f"asymptotically stable: {'yes' if self.stable else 'no'}",
            f"ideal loop |x_tau|: {self.initial_norm:.3g} -> {self.final_norm:.3g} m, below 1e-2 after {conv}",
        ])


def analyze_tutor(cfg: ExperimentConfig, start_norm: float = 30.0, duration: float = 100.0) -> TutorAnalysis:
    p = cfg.tutor
    ev = closed_loop_eigenvalues(p.k_i, p.k_p)
    x_tau0 = (start_norm, 0.0)
    x_h0 = (start_norm + 0.5 * p.rho_hat_tau, 0.0)
    trace = simulate_ideal_loop(x_tau0, x_h0, p, duration=duration, dt=cfg.env.Ts)
    below = np.flatnonzero(trace < 1e-2)
    return TutorAnalysis(
        k_i=p.k_i,
        k_p=p.k_p,
        eigenvalues=ev,
        stable=all(e.real < 0 for e in ev),
        initial_norm=float(trace[0]),
        final_norm=float(trace[-1]),
        converged_at_s=float(below[0] * cfg.env.Ts) if below.size else None,
    )
