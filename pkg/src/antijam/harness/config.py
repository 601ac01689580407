"""Experiment configuration and its flat ``key = value`` file format.

One key per line, ``#`` starts a comment, lists are comma-separated::

    # N=8 robustness study
    num_channels = 8
    sender_powers = 1, 5, 10
    jammers = uniform, sweep:3
    agent = pddqn
    policy = tau-eps

Jammer specs: ``uniform``, ``sweep:<stride>[:<start>]``,
``fixed:<channel>:<power_index>``, ``reactive:<follow_probability>``.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, fields
from typing import Optional

from ..agents import AgentConfig
from ..env import JammerStrategy, RadioParams
from ..policy import PolicyState
from ..replay import ReplayConfig

AGENT_NAMES = {"ql": "QL", "dqn": "DQN", "ddqn": "DDQN", "pddqn": "PDDQN"}
POLICY_NAMES = {"eps": "epsilon_greedy", "tau-eps": "tau_epsilon_greedy"}


class ConfigError(ValueError):
    """Raised with every validation problem found, one per line."""


@dataclass
class ExperimentConfig:
    name: str = ""
    # radio
    num_channels: int = 32
    sender_powers: tuple = (1.0, 5.0, 10.0)
    jammer_powers: tuple = (0.0, 4.0, 8.0, 10.0)
    h_s: float = 0.5
    h_j: tuple = (0.5, 0.5)
    beta: float = 1.0
    cost_retransmit: float = 1.0
    cost_power: float = 0.2
    retransmit_cost_per_jammer: bool = False
    blocked_state: str = "sinr"
    jammers: tuple = ("uniform", "uniform")
    # agent
    agent: str = "pddqn"
    policy: str = "tau-eps"
    gamma: float = 0.6
    window: int = 32
    sync_period: int = 10
    alpha: float = 0.1
    bins: int = 20
    net: str = "mlp"
    hidden: tuple = (64, 64)
    learning_rate: float = 1e-2
    initial_sinr: float = 0.0
    # replay
    replay_capacity: int = 512
    batch_size: int = 10
    lam: float = 0.4
    priority_floor: float = 1e-4
    selection_mode: str = "proportional_stratified"
    full_priority_refresh: bool = False
    # policy
    tau_init: float = 0.0
    tau_window: int = 5
    sigma1: float = 0.8
    sigma2: float = 85.0
    epsilon: float = 0.3
    epsilon_decay: float = 0.995
    epsilon_min: float = 0.01
    positive_tau_exponent: bool = False
    # run
    slots: int = 400
    seeds: tuple = (0,)
    out: str = "results"
    constant_power_index: Optional[int] = None
    smoothing_window: int = 20
    convergence_fraction: float = 0.9
    convergence_window: int = 100
    final_window: int = 100

    def label(self) -> str:
        return self.name or f"{self.agent}-{self.policy}"

    def with_overrides(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)

    # builders -------------------------------------------------------------

    def radio_params(self) -> RadioParams:
        return RadioParams(
            num_channels=self.num_channels,
            sender_powers=self.sender_powers,
            jammer_powers=self.jammer_powers,
            h_s=self.h_s,
            h_j=self.h_j,
            beta=self.beta,
            cost_retransmit=self.cost_retransmit,
            cost_power=self.cost_power,
            retransmit_cost_per_jammer=self.retransmit_cost_per_jammer,
        )

    def jammer_strategies(self) -> list:
        return [parse_jammer(spec) for spec in self.jammers]

    def agent_config(self) -> AgentConfig:
        return AgentConfig(
            kind=AGENT_NAMES[self.agent],
            policy_kind=POLICY_NAMES[self.policy],
            gamma=self.gamma,
            window=self.window,
            sync_period=self.sync_period,
            alpha=self.alpha,
            bins=self.bins,
            net=self.net,
            hidden=tuple(self.hidden),
            learning_rate=self.learning_rate,
            initial_sinr=self.initial_sinr,
            replay=ReplayConfig(
                capacity=self.replay_capacity,
                batch_size=self.batch_size,
                lam=self.lam,
                priority_floor=self.priority_floor,
                selection_mode=self.selection_mode,
                full_priority_refresh=self.full_priority_refresh,
            ),
        )

    def policy_state(self) -> PolicyState:
        return PolicyState(
            tau=self.tau_init,
            epsilon=self.epsilon,
            sigma1=self.sigma1,
            sigma2=self.sigma2,
            window=self.tau_window,
            epsilon_decay=self.epsilon_decay,
            epsilon_min=self.epsilon_min,
            positive_tau_exponent=self.positive_tau_exponent,
        )

    def validate(self) -> None:
        """Build every component once and report all failures together."""
        errors = []
        if self.agent not in AGENT_NAMES:
            errors.append(f"agent: expected one of {sorted(AGENT_NAMES)}, got {self.agent!r}")
        if self.policy not in POLICY_NAMES:
            errors.append(f"policy: expected one of {sorted(POLICY_NAMES)}, got {self.policy!r}")
        if len(self.jammers) != len(self.h_j):
            errors.append(f"jammers: {len(self.jammers)} strategies for {len(self.h_j)} jammer gains")
        if self.slots < self.window + 1:
            errors.append(f"slots: need at least window+1 = {self.window + 1}, got {self.slots}")
        if not self.seeds:
            errors.append("seeds: must not be empty")
        if min(self.smoothing_window, self.final_window, self.convergence_window) < 1:
            errors.append("smoothing_window, final_window and convergence_window must be >= 1")
        params = None
        for label, build in (
            ("radio", self.radio_params),
            ("policy", self.policy_state),
            ("jammers", self.jammer_strategies),
        ):
            try:
                out = build()
                if label == "radio":
                    params = out
            except (ValueError, KeyError) as exc:
                errors.append(f"{label}: {exc}")
        if self.agent in AGENT_NAMES and self.policy in POLICY_NAMES:
            try:
                self.agent_config()
            except ValueError as exc:
                errors.append(f"agent: {exc}")
        if params is not None:
            try:
                for s in self.jammer_strategies():
                    s.validate(params)
            except ValueError as exc:
                errors.append(f"jammers: {exc}")
            if self.constant_power_index is not None and not 0 <= self.constant_power_index < params.num_powers:
                errors.append(f"constant_power_index: out of range for {params.num_powers} power levels")
        if errors:
            raise ConfigError("invalid configuration:\n  " + "\n  ".join(errors))


def parse_jammer(spec: str) -> JammerStrategy:
    kind, *args = spec.strip().split(":")
    try:
        if kind in ("uniform", "uniform_random"):
            return JammerStrategy.uniform_random()
        if kind == "sweep":
            return JammerStrategy.sweep(int(args[0]) if args else 1, int(args[1]) if len(args) > 1 else 0)
        if kind == "fixed":
            return JammerStrategy.fixed(int(args[0]), int(args[1]))
        if kind == "reactive":
            return JammerStrategy.reactive(float(args[0]) if args else 1.0)
    except (IndexError, ValueError) as exc:
        raise ValueError(f"bad jammer spec {spec!r}: {exc}") from None
    raise ValueError(f"unknown jammer kind in {spec!r}")


_BOOL = {"true": True, "yes": True, "1": True, "on": True, "false": False, "no": False, "0": False, "off": False}
_FLOAT_LISTS = {"sender_powers", "jammer_powers", "h_j"}
_INT_LISTS = {"hidden", "seeds"}


def coerce(key: str, raw: str):
    """Convert a raw string to the type of field ``key``."""
    defaults = {f.name: f.default for f in fields(ExperimentConfig)}
    if key not in defaults:
        raise ConfigError(f"unknown config key {key!r}")
    raw = raw.strip()
    default = defaults[key]
    if key in _FLOAT_LISTS:
        return tuple(float(v) for v in raw.split(",") if v.strip())
    if key in _INT_LISTS:
        return tuple(int(v) for v in raw.split(",") if v.strip())
    if key == "jammers":
        return tuple(v.strip() for v in raw.split(",") if v.strip())
    if key == "constant_power_index":
        return None if raw.lower() in ("", "none") else int(raw)
    if isinstance(default, bool):
        if raw.lower() not in _BOOL:
            raise ConfigError(f"{key}: not a boolean: {raw!r}")
        return _BOOL[raw.lower()]
    if isinstance(default, int):
        return int(raw)
    if isinstance(default, float):
        return float(raw)
    return raw


def parse_config_text(text: str, base: Optional[ExperimentConfig] = None) -> ExperimentConfig:
    changes = {}
    errors = []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            errors.append(f"line {lineno}: expected 'key = value'")
            continue
        key, value = (part.strip() for part in line.split("=", 1))
        try:
            changes[key] = coerce(key, value)
        except (ConfigError, ValueError) as exc:
            errors.append(f"line {lineno}: {exc}")
    if errors:
        raise ConfigError("invalid config file:\n  " + "\n  ".join(errors))
    return dataclasses.replace(base or ExperimentConfig(), **changes)


def load_config(path, base: Optional[ExperimentConfig] = None) -> ExperimentConfig:
    with open(path) as fh:
        return parse_config_text(fh.read(), base)


def dump_config(cfg: ExperimentConfig) -> str:
    lines = []
    for f in fields(cfg):
        value = getattr(cfg, f.name)
        if isinstance(value, tuple):
            value = ", ".join(str(v) for v in value)
        elif isinstance(value, bool):
            value = str(value).lower()
        elif value is None:
            value = "none"
        lines.append(f"{f.name} = {value}")
    return "\n".join(lines) + "\n"
