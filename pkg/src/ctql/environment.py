"""Planar target/herder plant.

Targets are repelled by herders within their influence radius (inverse-square
law) and diffuse randomly with a piecewise-constant velocity that is redrawn
every ``delta_t_noise`` seconds. Herders are kinematic: their velocity is the
commanded one, saturated at ``v_h_max``. Everything is integrated with explicit
Euler at the fixed step ``Ts``.

Vectors are plain ``(x, y)`` float tuples; the simulator works on scalars for
speed and avoids allocating numpy arrays per step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import SimulationDivergence

Vec2 = tuple[float, float]

TWO_PI = 2.0 * math.pi
# Denominator clamp for the collision singularity of the repulsion law.
MIN_SEPARATION = 1e-6


@dataclass(frozen=True)
class EnvParams:
    beta1: float = 1.0
    rho_tau: float = 3.0
    v_tau_max: float = 9.0
    v_h_max: float = 14.0
    beta_max: float = 1.8
    delta_t_noise: float = 1.0
    x_g: Vec2 = (0.0, 0.0)
    rho_g: float = 5.0
    Ts: float = 1e-3

    def __post_init__(self):
        for name in ("beta1", "rho_tau", "v_tau_max", "v_h_max", "delta_t_noise", "rho_g", "Ts"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")
        if self.beta_max < 0:
            raise ValueError("beta_max must be non-negative")
        if self.Ts >= self.delta_t_noise:
            raise ValueError("Ts must be much smaller than delta_t_noise")

    @property
    def noise_period_steps(self) -> int:
        """Number of integration steps between noise redraws."""
        return max(1, round(self.delta_t_noise / self.Ts))


@dataclass
class WorldState:
    """Positions of every agent, the targets' noise phases and the clock.

    ``target_vel`` holds the velocity each target moved with during the last
    step (it is what herders observe). ``k`` is the integer step counter; ``t``
    is always ``k * Ts``.
    """

    targets: list[Vec2]
    herders: list[Vec2]
    noise: list[tuple[float, float]]
    t: float = 0.0
    k: int = 0
    target_vel: list[Vec2] = field(default_factory=list)
    # cartesian form of ``noise``, filled on demand by ``noise_velocities``
    noise_vel: list[Vec2] | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if not self.target_vel:
            self.target_vel = [(0.0, 0.0)] * len(self.targets)

    def noise_velocities(self) -> list[Vec2]:
        if self.noise_vel is None:
            self.noise_vel = [(b * math.cos(th), b * math.sin(th)) for b, th in self.noise]
        return self.noise_vel

    def validate(self, beta_max: float = math.inf) -> None:
        if len(self.noise) != len(self.targets):
            raise ValueError("one noise phase per target is required")
        for x, y in (*self.targets, *self.herders):
            if not (math.isfinite(x) and math.isfinite(y)):
                raise ValueError("agent coordinates must be finite")
        for beta2, theta in self.noise:
            if not 0 <= beta2 <= beta_max or not 0 <= theta < TWO_PI:
                raise ValueError(f"invalid noise phase ({beta2}, {theta})")

    def copy(self) -> "WorldState":
        return WorldState(
            list(self.targets), list(self.herders), list(self.noise), self.t, self.k, list(self.target_vel)
        )


def norm(v: Vec2) -> float:
    return math.hypot(v[0], v[1])


def interaction_indicator(x_tau: Vec2, x_h: Vec2, rho: float) -> int:
    """1 when the two points are strictly closer than ``rho``, else 0."""
    return 1 if math.hypot(x_tau[0] - x_h[0], x_tau[1] - x_h[1]) < rho else 0


def herder_repulsion(x_tau: Vec2, herders: Sequence[Vec2], p: EnvParams) -> Vec2:
    """Summed inverse-square push on a target from every herder in range."""
    fx = fy = 0.0
    tx, ty = x_tau
    rho = p.rho_tau
    for hx, hy in herders:
        dx = tx - hx
        dy = ty - hy
        d = math.hypot(dx, dy)
        if d < rho:
            dc = d if d > MIN_SEPARATION else MIN_SEPARATION
            s = p.beta1 / (dc * dc * dc)
            fx += s * dx
            fy += s * dy
    return fx, fy


def resample_noise(rng: np.random.Generator, beta_max: float) -> tuple[float, float]:
    """Draw a fresh (speed, heading) pair for a target's random motion."""
    beta2 = float(rng.uniform(0.0, beta_max)) if beta_max > 0 else 0.0
    theta = float(rng.uniform(0.0, TWO_PI))
    if theta >= TWO_PI:
        theta = 0.0
    return beta2, theta


def saturate(v: Vec2, v_max: float) -> Vec2:
    """Clip the norm of ``v`` to ``v_max`` while keeping its direction."""
    n = math.hypot(v[0], v[1])
    if n < v_max:
        return v
    s = v_max / n
    return v[0] * s, v[1] * s


def target_velocity(x_tau: Vec2, noise: tuple[float, float], herders: Sequence[Vec2], p: EnvParams) -> Vec2:
    fx, fy = herder_repulsion(x_tau, herders, p)
    beta2, theta = noise
    return saturate((fx + beta2 * math.cos(theta), fy + beta2 * math.sin(theta)), p.v_tau_max)


def step_world(
    w: WorldState,
    herder_velocities: Sequence[Vec2],
    p: EnvParams,
    noise_rngs: Sequence[np.random.Generator],
) -> WorldState:
    """Advance the world by one explicit-Euler step of length ``Ts``.

    ``noise_rngs`` holds one generator per target; they are only consumed when
    the new clock value lands on a multiple of the noise period.
    """
    if len(herder_velocities) != len(w.herders):
        raise ValueError("need exactly one commanded velocity per herder")
    ts = p.Ts
    herders = w.herders
    rho = p.rho_tau
    beta1 = p.beta1
    vt_max = p.v_tau_max
    hypot = math.hypot
    targets = []
    tvel = []
    # same arithmetic as target_velocity, inlined because this is the hot loop
    free_noise = p.beta_max < vt_max
    acc = 0.0
    for (tx, ty), nv in zip(w.targets, w.noise_velocities()):
        fx = fy = 0.0
        pushed = False
        for hx, hy in herders:
            dx = tx - hx
            dy = ty - hy
            if dx >= rho or dx <= -rho or dy >= rho or dy <= -rho:
                continue
            d = hypot(dx, dy)
            if d < rho:
                dc = d if d > MIN_SEPARATION else MIN_SEPARATION
                s = beta1 / (dc * dc * dc)
                fx += s * dx
                fy += s * dy
                pushed = True
        vx, vy = nv
        if pushed or not free_noise:
            vx += fx
            vy += fy
            n = hypot(vx, vy)
            if n >= vt_max:
                vx *= vt_max / n
                vy *= vt_max / n
            nv = (vx, vy)
        tx += ts * vx
        ty += ts * vy
        acc += tx + ty
        targets.append((tx, ty))
        tvel.append(nv)
    new_herders = []
    vmax = p.v_h_max
    for (hx, hy), u in zip(herders, herder_velocities):
        ux, uy = saturate(u, vmax)
        hx += ts * ux
        hy += ts * uy
        acc += hx + hy
        new_herders.append((hx, hy))
    # a single non-finite coordinate makes the running sum non-finite
    if not math.isfinite(acc):
        raise SimulationDivergence("non-finite agent position", step=w.k)

    k = w.k + 1
    noise = w.noise
    noise_vel = w.noise_vel
    if k % p.noise_period_steps == 0:
        noise = [resample_noise(rng, p.beta_max) for rng in noise_rngs]
        noise_vel = None

    return WorldState(targets, new_herders, noise, k * ts, k, tvel, noise_vel)


def in_goal(x: Vec2, p: EnvParams) -> bool:
    return math.hypot(x[0] - p.x_g[0], x[1] - p.x_g[1]) < p.rho_g


def initial_velocities(w: WorldState, p: EnvParams) -> list[Vec2]:
    """Velocities the targets would move with from ``w`` (used before the first step)."""
    return [target_velocity(x, n, w.herders, p) for x, n in zip(w.targets, w.noise)]
