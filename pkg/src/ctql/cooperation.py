"""Sector-based task allocation among several herders.

The plane is cut into ``M`` equal angular sectors about the goal, the first
one starting on the ray through the targets' centre of mass. Each herder
chases targets in its own sector, with a hysteresis rule that stops it from
flip-flopping between two targets at similar distance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .environment import TWO_PI, EnvParams, Vec2, WorldState


@dataclass(frozen=True)
class SectorAssignment:
    com: Vec2
    base_angle: float
    M: int
    created_at: float

    @property
    def width(self) -> float:
        return TWO_PI / self.M

    def sector_of(self, x: Vec2, center: Vec2 = (0.0, 0.0)) -> int:
        """Index of the sector containing point ``x``."""
        dx = x[0] - center[0]
        dy = x[1] - center[1]
        if dx == 0.0 and dy == 0.0:
            return 0
        rel = (math.atan2(dy, dx) - self.base_angle) % TWO_PI
        j = int(rel / self.width)
        return min(j, self.M - 1)

    def sectors_of(self, points: Sequence[Vec2], center: Vec2 = (0.0, 0.0)) -> list[int]:
        """``sector_of`` for many points at once."""
        cx, cy = center
        base, width, last = self.base_angle, self.width, self.M - 1
        atan2 = math.atan2
        out = []
        for x, y in points:
            dx = x - cx
            dy = y - cy
            if dx == 0.0 and dy == 0.0:
                out.append(0)
                continue
            j = int(((atan2(dy, dx) - base) % TWO_PI) / width)
            out.append(j if j < last else last)
        return out

    def bounds(self, j: int) -> tuple[float, float]:
        lo = self.base_angle + j * self.width
        return lo, lo + self.width


def compute_com(targets: Sequence[Vec2]) -> Vec2:
    if not targets:
        raise ValueError("centre of mass of an empty target set")
    n = len(targets)
    return sum(x for x, _ in targets) / n, sum(y for _, y in targets) / n


def assign_sectors(com: Vec2, M: int, t: float) -> SectorAssignment:
    if M < 1:
        raise ValueError("need at least one herder")
    if com == (0.0, 0.0):
        base = 0.0
    else:
        base = math.atan2(com[1], com[0]) % TWO_PI
    return SectorAssignment(com=com, base_angle=base, M=M, created_at=t)


def select_target(
    herder_j: int,
    world: WorldState,
    assign: SectorAssignment,
    current: int | None,
    p: EnvParams,
    sectors: Sequence[int] | None = None,
    radii: Sequence[float] | None = None,
) -> int | None:
    """Target herder ``herder_j`` should chase next.

    With no current target, the one in the sector farthest from the goal
    centre is picked. Otherwise the herder moves to a new farthest target only
    if its current target is farther from the goal than the two targets are
    from each other. ``None`` means the sector holds no targets.
    ``sectors`` and ``radii`` may carry precomputed per-target sector indices
    and distances from the goal centre.
    """
    gx, gy = p.x_g
    best, best_r = None, -1.0
    for i, x in enumerate(world.targets):
        sec = sectors[i] if sectors is not None else assign.sector_of(x, p.x_g)
        if sec != herder_j:
            continue
        r = radii[i] if radii is not None else math.hypot(x[0] - gx, x[1] - gy)
        if r > best_r:
            best, best_r = i, r
    if current is None:
        return best
    if best is None or best == current:
        return current
    xt = world.targets[current]
    xn = world.targets[best]
    r_cur = radii[current] if radii is not None else math.hypot(xt[0] - gx, xt[1] - gy)
    if r_cur > math.hypot(xt[0] - xn[0], xt[1] - xn[1]):
        return best
    return current
