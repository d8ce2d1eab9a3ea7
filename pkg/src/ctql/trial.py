"""The CTQL switching policy and the per-trial learning loop."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .config import ExperimentConfig
from .cooperation import assign_sectors, compute_com, select_target
from .core_rl import PolicyBranch, QTable, policy_q, q_update
from .discretization import Grid, action_value, state_of
from .environment import Vec2, WorldState, initial_velocities, step_world
from .errors import FingerprintMismatch, SimulationDivergence
from .metrics import is_success, settling_time
from .reward import reward
from .tutor import policy_t, pursuit_control, tutor_control


def select_action_ctql(
    table: QTable,
    s: int,
    tutor_suggestion: Vec2,
    grid: Grid,
    eps: float,
    rng: np.random.Generator,
) -> tuple[int, PolicyBranch]:
    """Use the Q policy when some action in ``s`` has positive value, else the tutor."""
    if table.max_value(s) > 0.0:
        return policy_q(table, s, eps, rng)
    return policy_t(tutor_suggestion, grid, eps, rng)


@dataclass
class TrialRng:
    """Independent random streams for one trial."""

    noise: list[np.random.Generator]
    explore: list[np.random.Generator]

    @classmethod
    def from_seed(cls, seed: int, trial_key: tuple[int, ...], n_targets: int, n_herders: int) -> "TrialRng":
        return cls(
            noise=[np.random.default_rng([seed, *trial_key, 1, i]) for i in range(n_targets)],
            explore=[np.random.default_rng([seed, *trial_key, 2, j]) for j in range(n_herders)],
        )


@dataclass
class TrialResult:
    success: bool
    settling_time_s: float | None
    # (steps + 1, n) distances from the goal centre, sampled every Ts
    target_r: np.ndarray
    herder_r: np.ndarray
    # positions sampled every record_stride steps: (n_rec, n, 2), times (n_rec,)
    record_t: np.ndarray
    target_xy: np.ndarray
    herder_xy: np.ndarray
    branch_counts: Counter = field(default_factory=Counter)
    steps: int = 0
    record_stride: int = 1
    reward_sum: float = 0.0
    visited_states: set[int] = field(default_factory=set)

    @property
    def decision_steps(self) -> int:
        return sum(self.branch_counts.values())

    def tutor_fraction(self) -> float:
        n = self.decision_steps
        if n == 0:
            return 0.0
        tutor = self.branch_counts[PolicyBranch.TUTOR_NEAREST] + self.branch_counts[PolicyBranch.TUTOR_RANDOM]
        return tutor / n


def run_trial(
    world0: WorldState,
    mode: str,
    table: QTable,
    cfg: ExperimentConfig,
    rng: TrialRng,
    grid: Grid | None = None,
) -> tuple[QTable, TrialResult]:
    """Simulate one trial of ``cfg.trial_length_s`` seconds, learning in place.

    Every step, each herder picks its target (sector rule when there are
    several herders), pursues it at full speed while outside the estimated
    influence radius, and otherwise acts through the mode's policy. QL and
    CTQL then apply the Q update to the shared ``table`` in herder order.
    In CT mode pursuit only brings the herder into first contact, unless
    ``cfg.ct_pursuit_after_contact`` is set.
    """
    if mode not in ("QL", "CT", "CTQL"):
        raise ValueError(f"unknown mode {mode!r}")
    grid = grid or cfg.make_grid()
    if table.fingerprint and table.fingerprint != grid.fingerprint:
        raise FingerprintMismatch("Q-table was built for a different grid")
    if table.n_states != grid.n_states or table.n_actions != grid.n_actions:
        raise FingerprintMismatch("Q-table dimensions do not match the grid")
    env = cfg.env
    world0.validate(env.beta_max)
    w = world0.copy()
    if not any(w.target_vel):
        w.target_vel = initial_velocities(w, env)

    n_t, n_h = len(w.targets), len(w.herders)
    if len(rng.noise) != n_t or len(rng.explore) < n_h:
        raise ValueError("random streams do not match the agent counts")
    steps = cfg.n_steps
    stride = cfg.record_stride
    n_rec = steps // stride + 1
    target_r = np.empty((steps + 1, n_t))
    herder_r = np.empty((steps + 1, n_h))
    record_t = np.empty(n_rec)
    target_xy = np.empty((n_rec, n_t, 2))
    herder_xy = np.empty((n_rec, n_h, 2))

    rho_hat = cfg.tutor.rho_hat_tau
    v_h_max = env.v_h_max
    eps = cfg.learning.epsilon
    tutor_p = cfg.tutor
    x_g = env.x_g
    learn = mode != "CT"
    multi = n_h > 1
    sector_steps = max(1, round(cfg.sector_period_s / env.Ts))
    counts: Counter = Counter()
    visited: set[int] = set()
    reward_sum = 0.0
    assignment = None
    chasing: list[int | None] = [0 if not multi else None] * n_h

    gx, gy = x_g
    hypot = math.hypot

    def record(k: int, world: WorldState) -> list[float]:
        radii = [hypot(x - gx, y - gy) for x, y in world.targets]
        target_r[k] = radii
        herder_r[k] = [hypot(x - gx, y - gy) for x, y in world.herders]
        if k % stride == 0:
            m = k // stride
            record_t[m] = world.t
            target_xy[m] = world.targets
            herder_xy[m] = world.herders
        return radii

    hold_steps = max(1, round(cfg.decision_period_s / env.Ts))
    # per-herder action in progress: [target, state, action, x_tau at decision, steps left]
    held: list[list | None] = [None] * n_h
    # CT without re-pursuit: after first contact the herder follows the tutor law everywhere
    tutor_only = mode == "CT" and not cfg.ct_pursuit_after_contact
    engaged = [False] * n_h
    # (world step, target, state id) of the latest observation, reused by the next decision
    last_obs: list[tuple[int, int, int] | None] = [None] * n_h

    def finish(j: int, world: WorldState) -> None:
        nonlocal reward_sum
        i, s, a, x_start, _ = held[j]
        held[j] = None
        if not learn:
            return
        r = reward(x_start, world.targets[i], world.herders[j], cfg.reward, env)
        s_next = state_of(world.targets[i], world.herders[j], world.target_vel[i], x_g, grid)
        last_obs[j] = (world.k, i, s_next)
        q_update(table, s, a, r, s_next, cfg.learning)
        visited.add(s)
        reward_sum += r

    radii = record(0, w)
    for k in range(steps):
        if multi:
            if k % sector_steps == 0:
                assignment = assign_sectors(compute_com(w.targets), n_h, w.t)
                chasing = [None] * n_h
            sectors = assignment.sectors_of(w.targets, x_g)
            chasing = [select_target(j, w, assignment, chasing[j], env, sectors, radii) for j in range(n_h)]

        commands: list[Vec2] = []
        for j in range(n_h):
            i = chasing[j]
            h = held[j]
            if h is not None and h[0] != i:
                finish(j, w)
                h = None
            if i is None:
                commands.append((0.0, 0.0))
                continue
            x_tau = w.targets[i]
            x_h = w.herders[j]
            far = math.hypot(x_tau[0] - x_h[0], x_tau[1] - x_h[1]) > rho_hat
            if not far:
                engaged[j] = True
            if far and not (tutor_only and engaged[j]):
                if h is not None:
                    finish(j, w)
                commands.append(pursuit_control(x_tau, x_h, v_h_max))
                continue
            if h is not None:
                commands.append(action_value(h[2], grid))
                continue
            explore = rng.explore[j]
            if mode == "CT":
                s = -1
                a, branch = policy_t(tutor_control(x_tau, x_h, tutor_p), grid, eps, explore)
            else:
                cached = last_obs[j]
                if cached is not None and cached[0] == w.k and cached[1] == i:
                    s = cached[2]
                else:
                    s = state_of(x_tau, x_h, w.target_vel[i], x_g, grid)
            if mode == "QL":
                a, branch = policy_q(table, s, eps, explore)
            elif mode == "CTQL":
                a, branch = select_action_ctql(table, s, tutor_control(x_tau, x_h, tutor_p), grid, eps, explore)
            counts[branch] += 1
            commands.append(action_value(a, grid))
            held[j] = [i, s, a, x_tau, hold_steps]

        try:
            w_next = step_world(w, commands, env, rng.noise)
        except SimulationDivergence as exc:
            raise SimulationDivergence("simulation diverged", step=k) from exc

        for j in range(n_h):
            h = held[j]
            if h is not None:
                h[4] -= 1
                if h[4] <= 0:
                    finish(j, w_next)
        w = w_next
        radii = record(k + 1, w)
    for j in range(n_h):
        if held[j] is not None:
            finish(j, w)

    t_settle = settling_time(target_r, env.rho_g, steps * env.Ts)
    success = is_success(t_settle, steps * env.Ts)
    result = TrialResult(
        success=success,
        settling_time_s=t_settle if success else None,
        target_r=target_r,
        herder_r=herder_r,
        record_t=record_t,
        target_xy=target_xy,
        herder_xy=herder_xy,
        branch_counts=counts,
        steps=steps,
        record_stride=stride,
        reward_sum=reward_sum,
        visited_states=visited,
    )
    return table, result
