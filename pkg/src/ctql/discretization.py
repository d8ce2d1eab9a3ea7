"""State binning and action decoding for the herding Q-table.

States are half-open bins (floor indexing, clamped at the top of each range)
over five observed coordinates: herder-target distance, bearing of the
herder-to-target vector, the herder's angular offset from the target as seen
from the goal, and the target's speed and heading. Actions are concrete
herder velocities on a polar grid.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import astuple, dataclass, fields, replace
from functools import cached_property

import numpy as np

from .environment import TWO_PI, EnvParams, Vec2, WorldState


def _count(range_: float, step: float, name: str) -> int:
    if not step > 0 or not range_ > 0:
        raise ValueError(f"{name}: step and range must be positive")
    n = round(range_ / step)
    if n < 1 or not math.isclose(n * step, range_, rel_tol=1e-9):
        raise ValueError(f"{name}: range {range_} is not an integer multiple of step {step}")
    return n


@dataclass(frozen=True)
class Grid:
    d_step: float
    d_range: float
    rel_angle_step: float
    herder_angle_step: float
    herder_angle_range: float
    speed_step: float
    speed_range: float
    speed_angle_step: float
    action_mag_step: float
    action_mag_max: float
    action_angle_step: float

    def __post_init__(self):
        # touch the counts so a malformed grid fails at construction
        self.shape
        self.n_actions

    @cached_property
    def shape(self) -> tuple[int, int, int, int, int]:
        """Bin counts, distance first (fastest-varying in the state id)."""
        return (
            _count(self.d_range, self.d_step, "distance"),
            _count(TWO_PI, self.rel_angle_step, "relative angle"),
            _count(self.herder_angle_range, self.herder_angle_step, "herder angle"),
            _count(self.speed_range, self.speed_step, "target speed"),
            _count(TWO_PI, self.speed_angle_step, "target heading"),
        )

    @property
    def n_states(self) -> int:
        return math.prod(self.shape)

    @cached_property
    def n_magnitudes(self) -> int:
        return _count(self.action_mag_max, self.action_mag_step, "action magnitude") + 1

    @cached_property
    def n_angles(self) -> int:
        return _count(TWO_PI, self.action_angle_step, "action angle")

    @property
    def n_actions(self) -> int:
        return self.n_magnitudes * self.n_angles

    @cached_property
    def action_table(self) -> np.ndarray:
        """(n_actions, 2) array of decoded velocities."""
        a = np.arange(self.n_actions)
        mag = (a // self.n_angles) * self.action_mag_step
        ang = (a % self.n_angles) * self.action_angle_step
        return np.column_stack([mag * np.cos(ang), mag * np.sin(ang)])

    @cached_property
    def _action_list(self) -> list[Vec2]:
        return [(float(x), float(y)) for x, y in self.action_table]

    @cached_property
    def fingerprint(self) -> str:
        text = ",".join(f"{f.name}={v!r}" for f, v in zip(fields(self), astuple(self)))
        return hashlib.sha1(text.encode()).hexdigest()


def coarse_grid(rho_hat_tau: float = 1.0, v_h_max: float = 14.0) -> Grid:
    return Grid(
        d_step=rho_hat_tau / 6,
        d_range=rho_hat_tau,
        rel_angle_step=TWO_PI / 6,
        herder_angle_step=math.pi / 10,
        herder_angle_range=math.pi / 2,
        speed_step=v_h_max / 3,
        speed_range=v_h_max,
        speed_angle_step=TWO_PI / 4,
        action_mag_step=v_h_max / 10,
        action_mag_max=v_h_max,
        action_angle_step=TWO_PI / 20,
    )


def fine_grid(rho_hat_tau: float = 1.0, v_h_max: float = 14.0) -> Grid:
    return replace(
        coarse_grid(rho_hat_tau, v_h_max),
        d_step=rho_hat_tau / 10,
        rel_angle_step=TWO_PI / 10,
        speed_step=v_h_max / 50,
        speed_angle_step=TWO_PI / 20,
    )


GRIDS = {"coarse": coarse_grid, "fine": fine_grid}


@dataclass(frozen=True)
class Observation:
    rel_distance: float
    rel_angle: float
    herder_angle: float
    target_speed: float
    target_speed_angle: float


def wrap_angle(a: float) -> float:
    """Map an angle to [0, 2*pi)."""
    a = a % TWO_PI
    return 0.0 if a >= TWO_PI else a


def _bin(value: float, step: float, n: int) -> int:
    i = int(value / step)
    if i >= n:
        return n - 1
    return 0 if i < 0 else i


def encode_state(obs: Observation, g: Grid) -> int:
    nd, nra, nha, nsp, nsa = g.shape
    i_d = _bin(obs.rel_distance, g.d_step, nd)
    i_ra = _bin(wrap_angle(obs.rel_angle), g.rel_angle_step, nra)
    i_ha = _bin(obs.herder_angle, g.herder_angle_step, nha)
    i_sp = _bin(obs.target_speed, g.speed_step, nsp)
    i_sa = _bin(wrap_angle(obs.target_speed_angle), g.speed_angle_step, nsa)
    return i_d + nd * (i_ra + nra * (i_ha + nha * (i_sp + nsp * i_sa)))


def decode_state(s: int, g: Grid) -> tuple[int, int, int, int, int]:
    """Per-dimension bin indices of a state id (inverse of the mixed-radix code)."""
    if not 0 <= s < g.n_states:
        raise IndexError(f"state {s} out of range [0, {g.n_states})")
    out = []
    for n in g.shape:
        s, r = divmod(s, n)
        out.append(r)
    return tuple(out)


def action_value(a: int, g: Grid) -> Vec2:
    """Herder velocity for action ``a`` (magnitude index major, angle index minor)."""
    if not 0 <= a < g.n_actions:
        raise IndexError(f"action {a} out of range [0, {g.n_actions})")
    return g._action_list[a]


def nearest_action(v: Vec2, g: Grid) -> int:
    """Action whose velocity is closest to ``v``; ties go to the lowest id.

    For every magnitude the closest ray of the polar grid is the one nearest
    in angle, so only the two rays bracketing ``v`` (and the neighbouring
    magnitudes along them) can hold the minimiser.
    """
    vx, vy = v
    speed = math.hypot(vx, vy)
    n_ang = g.n_angles
    n_mag = g.n_magnitudes
    step = g.action_mag_step
    if speed == 0.0:
        return 0
    pos = wrap_angle(math.atan2(vy, vx)) / g.action_angle_step
    q0 = int(pos) % n_ang
    q1 = (q0 + 1) % n_ang
    table = g._action_list
    best_a = -1
    best_d = math.inf
    candidates = set()
    for q in (q0, q1):
        ang = q * g.action_angle_step
        proj = vx * math.cos(ang) + vy * math.sin(ang)
        m = int(proj // step) if proj > 0 else 0
        for mm in (m - 1, m, m + 1, m + 2):
            if mm <= 0:
                candidates.add(0)
            elif mm < n_mag:
                candidates.add(mm * n_ang + q)
            else:
                candidates.add((n_mag - 1) * n_ang + q)
    for a in sorted(candidates):
        ax, ay = table[a]
        d = (ax - vx) ** 2 + (ay - vy) ** 2
        if d < best_d:
            best_d = d
            best_a = a
    return best_a


def nearest_action_bruteforce(v: Vec2, g: Grid) -> int:
    """Exhaustive scan over the whole action set (reference implementation)."""
    vx, vy = v
    best_a, best_d = 0, math.inf
    for a, (ax, ay) in enumerate(g._action_list):
        d = (ax - vx) ** 2 + (ay - vy) ** 2
        if d < best_d:
            best_a, best_d = a, d
    return best_a


def _bearing(dx: float, dy: float) -> float:
    if dx == 0.0 and dy == 0.0:
        return 0.0
    return wrap_angle(math.atan2(dy, dx))


def observe_pair(x_tau: Vec2, x_h: Vec2, v_tau: Vec2, x_g: Vec2) -> Observation:
    dx = x_tau[0] - x_h[0]
    dy = x_tau[1] - x_h[1]
    bh = _bearing(x_h[0] - x_g[0], x_h[1] - x_g[1])
    bt = _bearing(x_tau[0] - x_g[0], x_tau[1] - x_g[1])
    gap = abs(bh - bt)
    if gap > math.pi:
        gap = TWO_PI - gap
    return Observation(
        rel_distance=math.hypot(dx, dy),
        rel_angle=_bearing(dx, dy),
        herder_angle=min(gap, math.pi / 2),
        target_speed=math.hypot(v_tau[0], v_tau[1]),
        target_speed_angle=_bearing(v_tau[0], v_tau[1]),
    )


def observe(world: WorldState, herder_index: int, target_index: int, p: EnvParams) -> Observation:
    return observe_pair(
        world.targets[target_index], world.herders[herder_index], world.target_vel[target_index], p.x_g
    )


def state_of(x_tau: Vec2, x_h: Vec2, v_tau: Vec2, x_g: Vec2, g: Grid) -> int:
    """``encode_state(observe_pair(...))`` in one pass; the learning loop's hot path."""
    nd, nra, nha, nsp, nsa = g.shape
    dx = x_tau[0] - x_h[0]
    dy = x_tau[1] - x_h[1]
    gap = abs(_bearing(x_h[0] - x_g[0], x_h[1] - x_g[1]) - _bearing(x_tau[0] - x_g[0], x_tau[1] - x_g[1]))
    if gap > math.pi:
        gap = TWO_PI - gap
    vx, vy = v_tau
    i_d = _bin(math.hypot(dx, dy), g.d_step, nd)
    i_ra = _bin(_bearing(dx, dy), g.rel_angle_step, nra)
    i_ha = _bin(min(gap, math.pi / 2), g.herder_angle_step, nha)
    i_sp = _bin(math.hypot(vx, vy), g.speed_step, nsp)
    i_sa = _bin(_bearing(vx, vy), g.speed_angle_step, nsa)
    return i_d + nd * (i_ra + nra * (i_ha + nha * (i_sp + nsp * i_sa)))
