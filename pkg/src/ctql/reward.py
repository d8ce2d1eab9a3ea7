"""Herding reward: target progress toward the goal plus a herder-placement term."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .environment import EnvParams, Vec2

SIGMA_VARIANTS = ("logistic", "paper_exact", "decreasing")
# |z| floor for the singular 1/(1 - exp(-z)) form
SIGMA_Z_MIN = 1e-6


@dataclass(frozen=True)
class RewardParams:
    k1: float = 1.0
    k2: float = 0.5
    k_bar: float = 100.0
    sigma_variant: str = "logistic"

    def __post_init__(self):
        if not (self.k1 >= 0 and self.k2 >= 0):
            raise ValueError("k1 and k2 must be non-negative")
        if not self.k_bar > 0:
            raise ValueError("k_bar must be positive")
        if self.sigma_variant not in SIGMA_VARIANTS:
            raise ValueError(f"sigma_variant must be one of {SIGMA_VARIANTS}")


def sigma(z: float, variant: str = "logistic") -> float:
    """Squashing function used by the herder-placement term.

    ``paper_exact`` is ``1 / (1 - exp(-z))``, singular at zero, so ``|z|`` is
    floored at ``SIGMA_Z_MIN``. ``logistic`` is the usual ``1 / (1 + exp(-z))``.
    Both are evaluated without overflow for large ``|z|``.
    """
    if variant == "logistic":
        if z >= 0:
            return 1.0 / (1.0 + math.exp(-z))
        e = math.exp(z)
        return e / (1.0 + e)
    if variant == "decreasing":
        return sigma(-z, "logistic")
    if variant == "paper_exact":
        if abs(z) < SIGMA_Z_MIN:
            z = math.copysign(SIGMA_Z_MIN, z) if z != 0 else SIGMA_Z_MIN
        if z > 0:
            return -1.0 / math.expm1(-z)
        # 1/(1 - e^{|z|}) = -e^{-|z|} / (1 - e^{-|z|})
        e = math.exp(z)
        return -e / (1.0 - e)
    raise ValueError(f"unknown sigma variant {variant!r}")


def r1(x_tau_k: Vec2, x_tau_k1: Vec2) -> float:
    """Decrease of the target's distance from the origin over one step."""
    return math.hypot(*x_tau_k) - math.hypot(*x_tau_k1)


def r2(x_h_k1: Vec2, rho_g: float, p: RewardParams) -> float:
    return sigma(p.k_bar * (math.hypot(*x_h_k1) - rho_g), p.sigma_variant) - 1.0


def reward(x_tau_k: Vec2, x_tau_k1: Vec2, x_h_k1: Vec2, p: RewardParams, env: EnvParams) -> float:
    return p.k1 * r1(x_tau_k, x_tau_k1) + p.k2 * r2(x_h_k1, env.rho_g, p)


def reward_bound(p: RewardParams, env: EnvParams) -> float:
    """Upper bound on the per-step ``|reward|``; unbounded for ``paper_exact``."""
    if p.sigma_variant == "paper_exact":
        return math.inf
    return p.k1 * env.v_tau_max * env.Ts + p.k2
