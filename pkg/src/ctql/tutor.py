"""Model-based control tutor for the herder.

The tutor assumes the crude target model ``v_tau = gamma_model * (x_tau - x_h)``
inside the estimated influence radius and applies the feedback law
``u = k_i * v_tau_estimate + k_p * x_tau``. The resulting velocity is snapped
onto the discrete action set (with epsilon exploration) by ``policy_t``.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .core_rl import PolicyBranch
from .discretization import Grid, nearest_action
from .environment import Vec2


@dataclass(frozen=True)
class TutorParams:
    k_i: float = 2.0
    k_p: float = 0.1
    gamma_model: float = 1.0
    rho_hat_tau: float = 1.0

    def __post_init__(self):
        if not self.k_i > 1:
            raise ValueError("k_i must exceed 1 for the closed loop to be stable")
        if not self.k_p > 0:
            raise ValueError("k_p must be positive")
        if not self.gamma_model > 0:
            raise ValueError("gamma_model must be positive")
        if not self.rho_hat_tau > 0:
            raise ValueError("rho_hat_tau must be positive")


def model_velocity_estimate(x_tau: Vec2, x_h: Vec2, p: TutorParams) -> Vec2:
    dx = x_tau[0] - x_h[0]
    dy = x_tau[1] - x_h[1]
    if math.hypot(dx, dy) < p.rho_hat_tau:
        return p.gamma_model * dx, p.gamma_model * dy
    return 0.0, 0.0


def tutor_control(x_tau: Vec2, x_h: Vec2, p: TutorParams) -> Vec2:
    vx, vy = model_velocity_estimate(x_tau, x_h, p)
    return p.k_i * vx + p.k_p * x_tau[0], p.k_i * vy + p.k_p * x_tau[1]


def policy_t(v: Vec2, grid: Grid, eps: float, rng: np.random.Generator) -> tuple[int, PolicyBranch]:
    """Snap the tutor's velocity onto the action set, or explore with probability ``eps``."""
    if rng.random() < eps:
        return int(rng.integers(grid.n_actions)), PolicyBranch.TUTOR_RANDOM
    return nearest_action(v, grid), PolicyBranch.TUTOR_NEAREST


def pursuit_control(x_tau: Vec2, x_h: Vec2, v_h_max: float) -> Vec2:
    """Full-speed velocity from the herder straight at the target."""
    dx = x_tau[0] - x_h[0]
    dy = x_tau[1] - x_h[1]
    d = math.hypot(dx, dy)
    if d == 0.0:
        return 0.0, 0.0
    return v_h_max * dx / d, v_h_max * dy / d


def closed_loop_eigenvalues(k_i: float, k_p: float) -> tuple[complex, complex]:
    """Roots of ``lam**2 - (1 - k_i) * lam + k_p`` (the ideal closed loop)."""
    b = -(1.0 - k_i)
    disc = cmath.sqrt(b * b - 4.0 * k_p)
    return (-b + disc) / 2.0, (-b - disc) / 2.0


def simulate_ideal_loop(
    x_tau0: Vec2,
    x_h0: Vec2,
    p: TutorParams,
    duration: float = 100.0,
    dt: float = 1e-3,
) -> np.ndarray:
    """Integrate the tutor's own model with coupling always on and no saturation.

    Returns the ``(n_steps + 1,)`` trace of ``||x_tau||``.
    """
    n = round(duration / dt)
    tx, ty = x_tau0
    hx, hy = x_h0
    g, ki, kp = p.gamma_model, p.k_i, p.k_p
    out = np.empty(n + 1)
    out[0] = math.hypot(tx, ty)
    for k in range(1, n + 1):
        vx = g * (tx - hx)
        vy = g * (ty - hy)
        hx += dt * (ki * vx + kp * tx)
        hy += dt * (ki * vy + kp * ty)
        tx += dt * vx
        ty += dt * vy
        out[k] = math.hypot(tx, ty)
    return out
