"""End-to-end acceptance checks, one test per criterion.

Each test prints a ``criterion N: PASS|FAIL`` line; the lines are repeated in
the terminal summary. Run alone with ``pytest tests/test_acceptance.py -s``.
"""
import math
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest

from ctql import harness as H
from ctql.config import ExperimentConfig
from ctql.tutor import closed_loop_eigenvalues, simulate_ideal_loop

pytestmark = pytest.mark.slow
TESTS = Path(__file__).parent


def fmt_t(t):
    return "-" if t is None else f"{t:.1f} s"


def test_criterion_1_ct_baseline_fails(report_criterion):
    cfg = ExperimentConfig(mode="CT", n_eval_trials=20)
    t0 = time.perf_counter()
    summary = H.run_evaluation(cfg, H.new_table(cfg))
    elapsed = time.perf_counter() - t0
    # the target ends up outside the true influence radius of its herder
    final_sep = [math.dist(r.target_xy[-1, 0], r.herder_xy[-1, 0]) for r in summary.results]
    escaped = sum(d > cfg.env.rho_tau for d in final_sep)
    ok = summary.success_rate == 0.0 and escaped == 20 and elapsed < 60
    report_criterion(1, ok, f"CT success {100 * summary.success_rate:.0f}%, "
                     f"escaped {escaped}/20 (min final separation {min(final_sep):.1f} m), {elapsed:.0f} s")
    assert ok


@pytest.mark.parametrize("grid", ["fine", "coarse"])
def test_criterion_2_ctql_succeeds(grid, report_criterion):
    cfg = ExperimentConfig(mode="CTQL", grid=grid, n_training_trials=2, n_eval_trials=20)
    t0 = time.perf_counter()
    _, _, summary = H.campaign(cfg)
    elapsed = time.perf_counter() - t0
    t_s = summary.mean_settling_time_s
    ok = summary.success_rate >= 0.9 and t_s is not None and 5.0 <= t_s <= 60.0
    report_criterion(2, ok, f"CTQL {grid}: success {100 * summary.success_rate:.0f}% (need >= 90%), "
                     f"mean t_s {fmt_t(t_s)} (need 5-60 s), tutor fraction "
                     f"{summary.mean_tutor_fraction():.3f}, {elapsed:.0f} s")
    assert ok


def test_criterion_3_ql_fine_grid_fails(report_criterion):
    cfg = ExperimentConfig(mode="QL", grid="fine", n_training_trials=50, n_eval_trials=20)
    t0 = time.perf_counter()
    _, _, summary = H.campaign(cfg)
    elapsed = time.perf_counter() - t0
    ok = summary.success_rate <= 0.10
    report_criterion(3, ok, f"QL fine after 50 trials: success {100 * summary.success_rate:.0f}% "
                     f"(need <= 10%), {elapsed:.0f} s")
    assert ok


def test_criterion_4_tutor_stability(report_criterion):
    ev = sorted(e.real for e in closed_loop_eigenvalues(2.0, 0.1))
    eig_ok = abs(ev[0] + 0.8873) < 1e-4 and abs(ev[1] + 0.1127) < 1e-4
    trace = simulate_ideal_loop((30.0, 0.0), (30.5, 0.0), ExperimentConfig().tutor, duration=100.0, dt=1e-3)
    below = np.flatnonzero(trace < 1e-2)
    loop_ok = trace[0] == 30.0 and below.size > 0
    ok = eig_ok and loop_ok
    when = f"{below[0] * 1e-3:.1f} s" if below.size else "never"
    report_criterion(4, ok, f"eigenvalues {ev[0]:.4f}, {ev[1]:.4f}; ideal loop |x| 30 -> "
                     f"{trace[-1]:.2e} m, below 1e-2 at {when}")
    assert ok


def test_criterion_5_multi_agent(report_criterion):
    base = ExperimentConfig(mode="CTQL", n_herders=2, n_targets=15, n_training_trials=1, n_eval_trials=1)
    t0 = time.perf_counter()
    wins, inside = 0, []
    for seed in range(10):
        cfg = base.with_(seed=seed)
        table, _ = H.run_training(cfg.with_(trial_length_s=100.0))
        result = H.run_evaluation(cfg.with_(trial_length_s=500.0), table).results[0]
        wins += result.success
        inside.append(int((result.target_r[-1] < cfg.env.rho_g).sum()))
    elapsed = time.perf_counter() - t0
    ok = wins >= 7 and elapsed < 600
    report_criterion(5, ok, f"M=2 N=15: {wins}/10 runs contained (need >= 7), targets inside G at "
                     f"the end {inside}, {elapsed:.0f} s (limit 600 s)")
    assert ok


PROPERTY_TESTS = [
    "test_core_rl.py::TestQUpdate::test_hand_oracle_on_random_tuples",
    "test_environment.py::TestSaturate::test_norm_and_direction",
    "test_core_rl.py::TestSelectActionCtql::test_branch_predicate",
    "test_discretization.py::TestActions::test_matches_bruteforce_on_random_vectors",
    "test_discretization.py::TestActions::test_matches_bruteforce_property",
    "test_cooperation.py::TestSectors::test_partition_of_random_points",
    "test_discretization.py::TestEncode::test_total",
    "test_discretization.py::TestGrid::test_state_counts",
    "test_core_rl.py::TestPolicyQ::test_random_branch_frequency",
    "test_trial.py::test_bit_identical_reruns",
    "test_harness.py::TestEvaluation::test_campaign_is_reproducible",
]


def test_criterion_6_property_suites(report_criterion):
    ids = [str(TESTS / t) for t in PROPERTY_TESTS]
    proc = subprocess.run([sys.executable, "-m", "pytest", "-q", "-p", "no:cacheprovider", *ids],
                          capture_output=True, text=True)
    tail = proc.stdout.strip().splitlines()[-1] if proc.stdout.strip() else proc.stderr.strip()
    ok = proc.returncode == 0
    report_criterion(6, ok, f"{len(ids)} property tests: {tail}")
    assert ok, proc.stdout
