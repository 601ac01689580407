"""Wireless anti-jamming game: one sender, J scripted jammers, N shared channels.

SINR is kept in linear units everywhere in this module.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np


@dataclass(frozen=True)
class RadioParams:
    num_channels: int = 32
    sender_powers: tuple = (1.0, 5.0, 10.0)
    jammer_powers: tuple = (0.0, 4.0, 8.0, 10.0)
    h_s: float = 0.5
    h_j: tuple = (0.5, 0.5)
    beta: float = 1.0
    cost_retransmit: float = 1.0
    cost_power: float = 0.2
    # charge C_m once per jammer that blocks instead of once per slot
    retransmit_cost_per_jammer: bool = False

    def __post_init__(self):
        object.__setattr__(self, "sender_powers", tuple(float(p) for p in self.sender_powers))
        object.__setattr__(self, "jammer_powers", tuple(float(p) for p in self.jammer_powers))
        object.__setattr__(self, "h_j", tuple(float(h) for h in self.h_j))
        if self.num_channels < 1:
            raise ValueError("num_channels must be >= 1")
        for name in ("sender_powers", "jammer_powers"):
            levels = getattr(self, name)
            if not levels:
                raise ValueError(f"{name} must not be empty")
            if any(p < 0 for p in levels):
                raise ValueError(f"{name} must be non-negative")
            if any(b <= a for a, b in zip(levels, levels[1:])):
                raise ValueError(f"{name} must be strictly increasing")
        if self.h_s < 0 or any(h < 0 for h in self.h_j):
            raise ValueError("channel gains must be non-negative")
        if not self.beta > 0:
            raise ValueError("beta must be positive")
        if self.cost_retransmit < 0 or self.cost_power < 0:
            raise ValueError("costs must be non-negative")

    @property
    def num_jammers(self) -> int:
        return len(self.h_j)

    @property
    def num_powers(self) -> int:
        return len(self.sender_powers)

    @property
    def num_actions(self) -> int:
        return self.num_powers * self.num_channels

    @property
    def sinr_max(self) -> float:
        """Analytic ceiling of the SINR: full power, no interference."""
        return max(self.sender_powers) * self.h_s / self.beta

    def action_from_index(self, index: int) -> "SenderAction":
        # flat layout: power-major, channel-minor
        power_index, channel = divmod(int(index), self.num_channels)
        return SenderAction(channel, power_index)

    def action_index(self, action: "SenderAction") -> int:
        return action.power_index * self.num_channels + action.channel


@dataclass(frozen=True)
class SenderAction:
    channel: int
    power_index: int


@dataclass(frozen=True)
class JammerAction:
    channel: int
    power_index: int


@dataclass(frozen=True)
class SlotOutcome:
    sinr: float
    utility: float
    blocked: bool
    hit_flags: tuple


@dataclass
class JammerStrategy:
    """How a single jammer picks its channel and power each slot.

    ``kind`` is one of ``uniform_random``, ``sweep``, ``fixed`` or ``reactive``.
    A sweep jammer keeps its current channel in ``position`` and moves by
    ``stride`` before every slot.
    """

    kind: str = "uniform_random"
    stride: int = 1
    channel: int = 0
    power_index: int = 0
    follow_probability: float = 1.0
    position: int = 0

    KINDS = ("uniform_random", "sweep", "fixed", "reactive")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ValueError(f"unknown jammer strategy {self.kind!r}")
        if not 0.0 <= self.follow_probability <= 1.0:
            raise ValueError("follow_probability must lie in [0, 1]")

    @classmethod
    def uniform_random(cls) -> "JammerStrategy":
        return cls("uniform_random")

    @classmethod
    def sweep(cls, stride: int = 1, start: int = 0) -> "JammerStrategy":
        return cls("sweep", stride=stride, position=start)

    @classmethod
    def fixed(cls, channel: int, power_index: int) -> "JammerStrategy":
        return cls("fixed", channel=channel, power_index=power_index)

    @classmethod
    def reactive(cls, follow_probability: float) -> "JammerStrategy":
        return cls("reactive", follow_probability=follow_probability)

    def validate(self, params: RadioParams) -> None:
        n = params.num_channels
        if self.kind == "sweep" and not (1 <= self.stride < max(n, 2)):
            raise ValueError(f"sweep stride must lie in [1, {n})")
        if self.kind == "fixed":
            if not 0 <= self.channel < n:
                raise ValueError("fixed jammer channel out of range")
            if not 0 <= self.power_index < len(params.jammer_powers):
                raise ValueError("fixed jammer power_index out of range")


def _check_action(action: SenderAction, params: RadioParams) -> None:
    if not (0 <= action.channel < params.num_channels and 0 <= action.power_index < params.num_powers):
        raise ValueError(f"sender action out of range: {action}")


def compute_sinr(action: SenderAction, jam: Sequence[JammerAction], params: RadioParams) -> float:
    """Received SINR for one slot (linear ratio)."""
    interference = 0.0
    for j, ja in enumerate(jam):
        if ja.channel == action.channel:
            interference += params.jammer_powers[ja.power_index] * params.h_j[j]
    return params.sender_powers[action.power_index] * params.h_s / (params.beta + interference)


def hit_flags(action: SenderAction, jam: Sequence[JammerAction]) -> tuple:
    return tuple(ja.channel == action.channel for ja in jam)


def blocking_count(action: SenderAction, jam: Sequence[JammerAction], params: RadioParams) -> int:
    """Number of on-channel jammers transmitting at the top power level."""
    top = len(params.jammer_powers) - 1
    return sum(1 for ja in jam if ja.channel == action.channel and ja.power_index == top)


def compute_utility(
    sinr: float, action: SenderAction, jam: Sequence[JammerAction], params: RadioParams
) -> float:
    blocks = blocking_count(action, jam, params)
    if not params.retransmit_cost_per_jammer:
        blocks = min(blocks, 1)
    return sinr - params.cost_retransmit * blocks - params.cost_power * params.sender_powers[action.power_index]


def jammers_step(
    strategies: Sequence[JammerStrategy],
    prev_sender: Optional[SenderAction],
    rng: np.random.Generator,
    params: RadioParams,
) -> list:
    """Advance every jammer by one slot. Sweep strategies are mutated in place."""
    n = params.num_channels
    n_levels = len(params.jammer_powers)
    actions = []
    for strat in strategies:
        kind = strat.kind
        if kind == "fixed":
            actions.append(JammerAction(strat.channel, strat.power_index))
        elif kind == "sweep":
            strat.position = (strat.position + strat.stride) % n
            actions.append(JammerAction(strat.position, int(rng.integers(n_levels))))
        elif kind == "reactive" and prev_sender is not None and rng.random() < strat.follow_probability:
            actions.append(JammerAction(prev_sender.channel, n_levels - 1))
        else:
            # uniform_random, or reactive that did not follow
            ch = int(rng.integers(n))
            actions.append(JammerAction(ch, int(rng.integers(n_levels))))
    return actions


def evaluate_slot(action: SenderAction, jam: Sequence[JammerAction], params: RadioParams) -> SlotOutcome:
    sinr = compute_sinr(action, jam, params)
    return SlotOutcome(
        sinr=sinr,
        utility=compute_utility(sinr, action, jam, params),
        blocked=blocking_count(action, jam, params) > 0,
        hit_flags=hit_flags(action, jam),
    )


@dataclass
class AntiJamEnv:
    """Stateful wrapper that owns the jammer strategies and the random stream.

    ``blocked_state`` selects what the receiver feeds back after a blocked
    slot: ``"sinr"`` returns the interference-limited SINR, ``"zero"`` returns 0.
    """

    params: RadioParams
    strategies: list
    rng: np.random.Generator
    blocked_state: str = "sinr"
    last_action: Optional[SenderAction] = None
    last_jam: list = field(default_factory=list)

    def __post_init__(self):
        if len(self.strategies) != self.params.num_jammers:
            raise ValueError(
                f"need one strategy per jammer ({self.params.num_jammers}), got {len(self.strategies)}"
            )
        if self.blocked_state not in ("sinr", "zero"):
            raise ValueError("blocked_state must be 'sinr' or 'zero'")
        for s in self.strategies:
            s.validate(self.params)

    def step(self, action: SenderAction):
        """Play one slot; returns ``(outcome, next_state)``."""
        outcome, next_state, jam = env_step(
            action, self.strategies, self.params, self.rng, self.last_action, self.blocked_state
        )
        self.last_action = action
        self.last_jam = jam
        return outcome, next_state


def env_step(action, strategies, params, rng, prev_sender=None, blocked_state="sinr"):
    """Functional single-slot step: returns ``(outcome, next_state, jammer_actions)``."""
    _check_action(action, params)
    jam = jammers_step(strategies, prev_sender, rng, params)
    outcome = evaluate_slot(action, jam, params)
    next_state = 0.0 if (outcome.blocked and blocked_state == "zero") else outcome.sinr
    return outcome, next_state, jam
