"""Experience replay: a sum-tree prioritized store and a uniform ring buffer."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any

import numpy as np


class InsufficientSamplesError(ValueError):
    """Raised when a batch is requested before enough experiences are stored."""


@dataclass(frozen=True)
class Experience:
    phi: np.ndarray
    phi_next: np.ndarray
    action: int
    reward: float

    def __post_init__(self):
        if np.shape(self.phi) != np.shape(self.phi_next):
            raise ValueError("phi and phi_next must share a shape")


@dataclass(frozen=True)
class ReplayConfig:
    capacity: int = 512
    batch_size: int = 10
    lam: float = 0.4
    priority_floor: float = 1e-4
    selection_mode: str = "proportional_stratified"
    full_priority_refresh: bool = False

    def __post_init__(self):
        if not 1 <= self.batch_size <= self.capacity:
            raise ValueError("need 1 <= batch_size <= capacity")
        if not 0.0 <= self.lam <= 1.0:
            raise ValueError("importance-sampling exponent must lie in [0, 1]")
        if not self.priority_floor > 0:
            raise ValueError("priority_floor must be positive")
        if self.selection_mode not in ("proportional_stratified", "top_m"):
            raise ValueError(f"unknown selection_mode {self.selection_mode!r}")


def _next_pow2(n: int) -> int:
    cap = 1
    while cap < n:
        cap *= 2
    return cap


class SumTree:
    """Array-backed binary tree whose internal nodes hold the sum of their children.

    Node 1 is the root; leaves live at ``capacity .. 2*capacity-1``. Data is a
    ring: once full, ``push`` overwrites the oldest slot.
    """

    def __init__(self, capacity: int, priority_floor: float = 1e-4):
        self.capacity = _next_pow2(max(1, int(capacity)))
        self.priority_floor = priority_floor
        self.nodes = np.zeros(2 * self.capacity, dtype=np.float64)
        self.data: list[Any] = [None] * self.capacity
        self.count = 0
        self.cursor = 0
        self.max_priority_seen = 1.0

    def __len__(self) -> int:
        return self.count

    @property
    def total(self) -> float:
        return float(self.nodes[1])

    def priority(self, leaf: int) -> float:
        return float(self.nodes[leaf + self.capacity])

    def leaf_priorities(self) -> np.ndarray:
        return self.nodes[self.capacity:self.capacity + self.count].copy()

    def _set(self, leaf: int, value: float) -> None:
        idx = leaf + self.capacity
        self.nodes[idx] = value
        idx //= 2
        while idx >= 1:
            # recompute rather than add a delta so rounding never accumulates
            self.nodes[idx] = self.nodes[2 * idx] + self.nodes[2 * idx + 1]
            idx //= 2

    def push(self, item: Any) -> int:
        leaf = self.cursor
        # new samples enter at the running max (1.0 until any update exceeds it)
        self.data[leaf] = item
        self._set(leaf, self.max_priority_seen)
        self.cursor = (self.cursor + 1) % self.capacity
        self.count = min(self.count + 1, self.capacity)
        return leaf

    def update(self, leaf: int, priority: float) -> None:
        if not 0 <= leaf < self.count:
            raise IndexError(f"leaf {leaf} is not occupied")
        p = max(float(priority), self.priority_floor)
        self._set(leaf, p)
        self.max_priority_seen = max(self.max_priority_seen, p)

    def find(self, point: float) -> int:
        """Leaf whose prefix-sum interval ``(lo, hi]`` contains ``point``."""
        idx = 1
        while idx < self.capacity:
            left = 2 * idx
            if point <= self.nodes[left]:
                idx = left
            else:
                point -= self.nodes[left]
                idx = left + 1
        leaf = idx - self.capacity
        if leaf >= self.count:
            # rounding pushed the walk into the empty tail
            leaf = self.count - 1
        return leaf

    def probability_of(self, leaf: int) -> float:
        if self.count == 0:
            raise InsufficientSamplesError("probability undefined for an empty tree")
        if not 0 <= leaf < self.count:
            raise IndexError(f"leaf {leaf} is not occupied")
        return self.priority(leaf) / self.total

    def check_invariant(self, atol: float = 1e-9) -> bool:
        internal = np.arange(1, self.capacity)
        diff = self.nodes[internal] - (self.nodes[2 * internal] + self.nodes[2 * internal + 1])
        return bool(np.all(np.abs(diff) <= atol))


def sample_batch(tree: SumTree, cfg: ReplayConfig, rng) -> list:
    """Draw ``cfg.batch_size`` entries as ``(leaf, experience, probability)`` triples."""
    m = cfg.batch_size
    if tree.count < m:
        raise InsufficientSamplesError(f"have {tree.count} samples, need {m}")
    total = tree.total
    if cfg.selection_mode == "top_m":
        prios = tree.leaf_priorities()
        # stable sort keeps the lower leaf first on ties
        leaves = np.argsort(-prios, kind="stable")[:m]
    else:
        segment = total / m
        leaves = []
        for i in range(m):
            lo = segment * i
            point = lo + rng.random() * segment
            leaves.append(tree.find(max(point, np.nextafter(lo, np.inf))))
    return [(int(leaf), tree.data[leaf], tree.priority(leaf) / total) for leaf in leaves]


def importance_weights(probs, count: int, lam: float) -> np.ndarray:
    """Importance-sampling weights ``(M P_i)^-lam``, scaled so the batch max is 1."""
    p = np.asarray(probs, dtype=np.float64)
    if np.any(p <= 0):
        raise ValueError("probabilities must be positive")
    raw = (count * p) ** (-lam)
    return raw / raw.max()


def update_priorities(tree: SumTree, leaves, td_errors) -> None:
    for leaf, psi in zip(leaves, td_errors):
        tree.update(int(leaf), abs(float(psi)))


class PrioritizedReplay:
    """Sum-tree replay with proportional (or top-M) selection."""

    prioritized = True

    def __init__(self, cfg: ReplayConfig):
        self.cfg = cfg
        self.tree = SumTree(cfg.capacity, cfg.priority_floor)

    def __len__(self) -> int:
        return self.tree.count

    def push(self, e: Experience) -> int:
        return self.tree.push(e)

    def sample(self, rng):
        """Returns ``(leaves, experiences, weights)``."""
        batch = sample_batch(self.tree, self.cfg, rng)
        leaves = [b[0] for b in batch]
        weights = importance_weights([b[2] for b in batch], self.cfg.batch_size, self.cfg.lam)
        return leaves, [b[1] for b in batch], weights

    def update(self, leaves, td_errors) -> None:
        update_priorities(self.tree, leaves, td_errors)

    def items(self):
        return list(enumerate(self.tree.data[: self.tree.count]))


class UniformReplay:
    """Plain ring buffer sampled uniformly with replacement; all weights are 1."""

    prioritized = False

    def __init__(self, cfg: ReplayConfig):
        self.cfg = cfg
        self.capacity = cfg.capacity
        self.data: list = []
        self.cursor = 0

    def __len__(self) -> int:
        return len(self.data)

    def push(self, e: Experience) -> int:
        leaf = self.cursor
        if len(self.data) < self.capacity:
            self.data.append(e)
        else:
            self.data[leaf] = e
        self.cursor = (self.cursor + 1) % self.capacity
        return leaf

    def sample(self, rng):
        m = self.cfg.batch_size
        if len(self.data) < m:
            raise InsufficientSamplesError(f"have {len(self.data)} samples, need {m}")
        leaves = [int(i) for i in rng.integers(len(self.data), size=m)]
        return leaves, [self.data[i] for i in leaves], np.ones(m)

    def update(self, leaves, td_errors) -> None:
        pass

    def items(self):
        return list(enumerate(self.data))
