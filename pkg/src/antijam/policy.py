"""Action selection: classic epsilon-greedy and the adaptive repeat-or-explore policy.

The repeat probability ``tau`` is driven by how far the latest utility sits
above or below the mean of the previous ``T`` utilities.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

REPEAT, EXPLORE, GREEDY = "repeat", "explore", "greedy"

_SQRT_2PI = math.sqrt(2.0 * math.pi)


@dataclass
class PolicyState:
    tau: float = 0.0
    epsilon: float = 0.3
    sigma1: float = 0.8
    sigma2: float = 85.0
    window: int = 5
    epsilon_decay: float = 0.995
    epsilon_min: float = 0.01
    positive_tau_exponent: bool = False
    utility_window: deque = field(default=None, repr=False)

    def __post_init__(self):
        if self.sigma1 <= 0 or self.sigma2 <= 0:
            raise ValueError("sigma1 and sigma2 must be positive")
        if self.window < 1:
            raise ValueError("utility window T must be >= 1")
        if not 0.0 <= self.tau <= 1.0:
            raise ValueError("tau must lie in [0, 1]")
        if not 0.0 <= self.epsilon_min <= self.epsilon <= 1.0:
            raise ValueError("need 0 <= epsilon_min <= epsilon <= 1")
        if not 0.0 < self.epsilon_decay <= 1.0:
            raise ValueError("epsilon_decay must lie in (0, 1]")
        if self.utility_window is None:
            self.utility_window = deque(maxlen=self.window)

    def record(self, utility: float) -> None:
        self.utility_window.append(float(utility))


def mean_recent_utility(state: PolicyState) -> Optional[float]:
    """Mean of the stored utilities, or None when nothing has been recorded yet."""
    if not state.utility_window:
        return None
    return sum(state.utility_window) / len(state.utility_window)


def tau_from_gap(gap: float, sigma1: float, sigma2: float, positive_exponent: bool = False) -> float:
    """Repeat probability as a Gaussian-like function of ``utility - threshold``.

    Above the threshold tau rises towards 1 as the gap grows; at or below it
    tau decays from its peak ``1/(sqrt(2 pi) sigma2)``. ``positive_exponent``
    flips the exponent's sign, which drives tau to 0 or 1 for all but tiny gaps.
    """
    sigma = sigma1 if gap > 0 else sigma2
    expo = gap * gap / (2.0 * sigma * sigma)
    if not positive_exponent:
        expo = -expo
    density = math.exp(expo) / (_SQRT_2PI * sigma) if expo < 700.0 else math.inf
    tau = 1.0 - density if gap > 0 else density
    return min(1.0, max(0.0, tau))


def update_tau(utility: float, state: PolicyState) -> float:
    """Refresh ``state.tau`` against the current threshold, then push ``utility``.

    With an empty window tau keeps its current value.
    """
    threshold = mean_recent_utility(state)
    if threshold is not None:
        state.tau = tau_from_gap(utility - threshold, state.sigma1, state.sigma2, state.positive_tau_exponent)
    state.record(utility)
    return state.tau


def argmax_lowest(values) -> int:
    # np.argmax already returns the first maximal index
    return int(np.argmax(values))


def epsilon_greedy(q_values, epsilon: float, rng):
    if rng.random() < epsilon:
        return int(rng.integers(len(q_values))), EXPLORE
    return argmax_lowest(q_values), GREEDY


def select_action(q_values, prev_action: Optional[int], state: PolicyState, rng):
    """Pick an index into ``q_values``; returns ``(index, branch)``.

    The repeat coin is only flipped when ``tau > 0`` and a previous action
    exists, so ``tau == 0`` consumes the random stream exactly like plain
    epsilon-greedy.
    """
    if len(q_values) < 1:
        raise ValueError("empty action set")
    if prev_action is not None and state.tau > 0.0 and rng.random() <= state.tau:
        return prev_action, REPEAT
    return epsilon_greedy(q_values, state.epsilon, rng)


def decay_epsilon(state: PolicyState) -> float:
    state.epsilon = max(state.epsilon * state.epsilon_decay, state.epsilon_min)
    return state.epsilon
