"""Tabular Q-learning: the Q-table, the update rule and the epsilon-greedy policy."""

from __future__ import annotations

import enum
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import FingerprintMismatch


@dataclass(frozen=True)
class LearningParams:
    alpha: float = 0.9
    gamma: float = 0.8
    epsilon: float = 0.03

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in [0, 1], got {self.alpha}")
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError(f"gamma must lie in [0, 1], got {self.gamma}")
        if not 0.0 < self.epsilon < 1.0:
            raise ValueError(f"epsilon must lie in (0, 1), got {self.epsilon}")


class PolicyBranch(enum.Enum):
    GREEDY_Q = "GreedyQ"
    RANDOM_Q = "RandomQ"
    TUTOR_NEAREST = "TutorNearest"
    TUTOR_RANDOM = "TutorRandom"


class QTable:
    """Q(s, a) with rows allocated on first write; unwritten entries read as 0.

    ``dense=True`` preallocates the full ``(n_states, n_actions)`` array, which
    is only sensible for small grids. Either way rows are numpy arrays and
    ``row(s)`` of a never-written state returns a shared read-only zero row.
    """

    def __init__(self, n_states: int, n_actions: int, fingerprint: str = "", dense: bool = False):
        if n_states <= 0 or n_actions <= 0:
            raise ValueError("table dimensions must be positive")
        self.n_states = n_states
        self.n_actions = n_actions
        self.fingerprint = fingerprint
        self.dense = dense
        self._zero = np.zeros(n_actions)
        self._zero.flags.writeable = False
        if dense:
            self._data = np.zeros((n_states, n_actions))
        self._rows: dict[int, np.ndarray] = {}
        # cached row maxima; any write path must keep this in sync or drop the entry
        self._max: dict[int, float] = {}

    def _check(self, s: int, a: int | None = None) -> None:
        if not 0 <= s < self.n_states:
            raise IndexError(f"state {s} out of range [0, {self.n_states})")
        if a is not None and not 0 <= a < self.n_actions:
            raise IndexError(f"action {a} out of range [0, {self.n_actions})")

    def row(self, s: int) -> np.ndarray:
        r = self._rows.get(s)
        if r is not None:
            return r
        if self.dense:
            return self._data[s]
        return self._zero

    def writable_row(self, s: int) -> np.ndarray:
        """Row ``s`` for in-place writes; do not hold on to it across other calls."""
        self._max.pop(s, None)
        r = self._rows.get(s)
        if r is None:
            r = self._data[s] if self.dense else np.zeros(self.n_actions)
            self._rows[s] = r
        return r

    def get(self, s: int, a: int) -> float:
        self._check(s, a)
        return float(self.row(s)[a])

    def set(self, s: int, a: int, value: float) -> None:
        self._check(s, a)
        self.writable_row(s)[a] = value

    def max_value(self, s: int) -> float:
        m = self._max.get(s)
        if m is None:
            m = self._max[s] = float(self.row(s).max())
        return m

    def visited_states(self) -> list[int]:
        """States that have had at least one entry written."""
        return sorted(self._rows)

    def items(self):
        """Yield ``(state, action, value)`` for every nonzero entry, in order."""
        for s in sorted(self._rows):
            r = self._rows[s]
            for a in np.flatnonzero(r):
                yield s, int(a), float(r[a])

    def nnz(self) -> int:
        return sum(int(np.count_nonzero(r)) for r in self._rows.values())

    def copy(self) -> "QTable":
        out = QTable(self.n_states, self.n_actions, self.fingerprint, self.dense)
        if self.dense:
            out._data[:] = self._data
            out._rows = {s: out._data[s] for s in self._rows}
        else:
            out._rows = {s: r.copy() for s, r in self._rows.items()}
        return out

    def __eq__(self, other) -> bool:
        if not isinstance(other, QTable):
            return NotImplemented
        return (
            self.n_states == other.n_states
            and self.n_actions == other.n_actions
            and self.fingerprint == other.fingerprint
            and list(self.items()) == list(other.items())
        )

    def save(self, path: str | Path) -> None:
        _write_qtable(self, Path(path))

    @classmethod
    def load(cls, path: str | Path, expected_fingerprint: str | None = None, dense: bool = False) -> "QTable":
        return _read_qtable(Path(path), expected_fingerprint, dense)


def q_update(table: QTable, s: int, a: int, r: float, s_next: int, p: LearningParams) -> QTable:
    """One temporal-difference step on ``Q(s, a)``, in place; returns ``table``."""
    table._check(s, a)
    table._check(s_next)
    if p.alpha == 0.0:
        return table
    target = r + p.gamma * table.max_value(s_next)
    old_max = table.max_value(s)
    row = table.writable_row(s)
    old = float(row[a])
    new = (1.0 - p.alpha) * old + p.alpha * target
    row[a] = new
    if new >= old_max:
        table._max[s] = new
    elif old < old_max:
        table._max[s] = old_max
    return table


def greedy_action(table: QTable, s: int) -> tuple[int, float]:
    """Maximising action of row ``s`` (lowest id on ties) with its value."""
    table._check(s)
    row = table.row(s)
    a = int(row.argmax())
    return a, float(row[a])


def policy_q(table: QTable, s: int, eps: float, rng: np.random.Generator) -> tuple[int, PolicyBranch]:
    if rng.random() < eps:
        return int(rng.integers(table.n_actions)), PolicyBranch.RANDOM_Q
    return greedy_action(table, s)[0], PolicyBranch.GREEDY_Q


# ---------------------------------------------------------------------------
# persistence

_MAGIC = b"CTQLQTB1"
_HEADER = struct.Struct("<8sQQ40sQ")
_ENTRY = np.dtype([("s", "<u8"), ("a", "<u4"), ("v", "<f8")])


def _write_qtable(table: QTable, path: Path) -> None:
    entries = np.array(list(table.items()), dtype=_ENTRY)
    fp = table.fingerprint.encode("ascii")
    if len(fp) > 40:
        raise ValueError("grid fingerprint longer than 40 bytes")
    try:
        with open(path, "wb") as fh:
            fh.write(_HEADER.pack(_MAGIC, table.n_states, table.n_actions, fp.ljust(40, b"\0"), len(entries)))
            fh.write(entries.tobytes())
    except OSError as exc:
        raise OSError(f"cannot write Q-table to {path}: {exc}") from exc


def _read_qtable(path: Path, expected_fingerprint: str | None, dense: bool) -> QTable:
    raw = path.read_bytes()
    if len(raw) < _HEADER.size:
        raise ValueError(f"{path}: truncated Q-table header")
    magic, n_states, n_actions, fp, count = _HEADER.unpack_from(raw)
    if magic != _MAGIC:
        raise ValueError(f"{path}: not a Q-table file")
    fp = fp.rstrip(b"\0").decode("ascii")
    if expected_fingerprint is not None and fp != expected_fingerprint:
        raise FingerprintMismatch(f"{path}: table grid {fp} does not match active grid {expected_fingerprint}")
    body = raw[_HEADER.size:]
    if len(body) != count * _ENTRY.itemsize:
        raise ValueError(f"{path}: expected {count} entries")
    entries = np.frombuffer(body, dtype=_ENTRY)
    table = QTable(n_states, n_actions, fp, dense)
    for s, a, v in entries:
        table.set(int(s), int(a), float(v))
    return table
