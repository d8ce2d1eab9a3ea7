"""Containment metrics computed from radial traces."""

from __future__ import annotations

import numpy as np

# Targets must still be inside the goal over the last CONTAINMENT_MARGIN_S
# seconds of a trial for it to count as a success.
CONTAINMENT_MARGIN_S = 5.0


def settling_time(radial_trace: np.ndarray, rho_g: float, trial_length: float) -> float | None:
    """Earliest time after which every agent in the trace stays strictly inside ``rho_g``.

    ``radial_trace`` is ``(n_samples,)`` or ``(n_samples, n_agents)``, sampled
    uniformly from ``t = 0`` to ``t = trial_length`` inclusive. Returns
    ``None`` when the last sample is not inside the goal.
    """
    r = np.asarray(radial_trace, dtype=float)
    if r.ndim == 1:
        r = r[:, None]
    if r.shape[0] == 0:
        return None
    outside = np.flatnonzero(~(r < rho_g).all(axis=1))
    if outside.size == 0:
        return 0.0
    last = int(outside[-1])
    dt = trial_length / max(r.shape[0] - 1, 1)
    if last == r.shape[0] - 1:
        return None
    return (last + 1) * dt


def is_success(t_settle: float | None, trial_length: float, margin: float = CONTAINMENT_MARGIN_S) -> bool:
    return t_settle is not None and t_settle <= trial_length - margin + 1e-9
