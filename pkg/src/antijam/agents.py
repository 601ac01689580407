"""Value-based learners (tabular QL, DQN, DDQN, PDDQN) for the anti-jamming game.

Every agent follows the same slot loop: ``W`` uniformly random warm-up
slots, then policy-driven actions, one environment step, a utility-driven
repeat-probability update, and a learning update.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from . import nn
from .env import RadioParams, SenderAction, SlotOutcome
from .policy import PolicyState, decay_epsilon, select_action, update_tau
from .replay import Experience, PrioritizedReplay, ReplayConfig, UniformReplay

KINDS = ("QL", "DQN", "DDQN", "PDDQN")
POLICY_KINDS = ("epsilon_greedy", "tau_epsilon_greedy")
WARMUP = "warmup"


@dataclass
class AgentConfig:
    kind: str = "PDDQN"
    policy_kind: str = "tau_epsilon_greedy"
    gamma: float = 0.6
    window: int = 32
    sync_period: int = 10
    alpha: float = 0.1
    bins: int = 20
    net: str = "mlp"
    hidden: tuple = (64, 64)
    learning_rate: float = 1e-2
    replay: ReplayConfig = field(default_factory=ReplayConfig)
    # None derives prioritization from ``kind`` (PDDQN only)
    prioritized: Optional[bool] = None
    initial_sinr: float = 0.0

    def __post_init__(self):
        self.kind = self.kind.upper()
        if self.kind not in KINDS:
            raise ValueError(f"unknown agent kind {self.kind!r}")
        if self.policy_kind not in POLICY_KINDS:
            raise ValueError(f"unknown policy kind {self.policy_kind!r}")
        if not 0.0 <= self.gamma < 1.0:
            raise ValueError("gamma must lie in [0, 1)")
        if self.window < 1 or self.sync_period < 1:
            raise ValueError("window and sync_period must be >= 1")
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError("alpha must lie in (0, 1]")
        if self.bins < 1:
            raise ValueError("bins must be >= 1")
        if self.net not in ("mlp", "paper-cnn"):
            raise ValueError(f"unknown net preset {self.net!r}")

    @property
    def double(self) -> bool:
        return self.kind in ("DDQN", "PDDQN")

    @property
    def uses_priorities(self) -> bool:
        return self.kind == "PDDQN" if self.prioritized is None else self.prioritized


# -- state window ------------------------------------------------------------


class HistoryWindow:
    """The last ``W`` (state, action) pairs plus the current state."""

    def __init__(self, size: int, current: float = 0.0):
        self.size = size
        self.pairs: deque = deque(maxlen=size)
        self.current = float(current)

    @property
    def full(self) -> bool:
        return len(self.pairs) == self.size

    def advance(self, action: SenderAction, next_state: float) -> None:
        self.pairs.append((self.current, action.channel, action.power_index))
        self.current = float(next_state)


def build_phi(history: HistoryWindow, sinr_max: float, num_channels: int, num_powers: int) -> np.ndarray:
    """Encode the window as a ``(W+1, 3)`` matrix.

    Rows are ``[sinr/sinr_max, channel/(N-1), power/(S-1)]``; the last row
    holds the current state with -1 sentinels in the action columns.
    """
    if not history.full:
        raise ValueError(f"history holds {len(history.pairs)} of {history.size} pairs")
    ch_scale = 1.0 / (num_channels - 1) if num_channels > 1 else 0.0
    p_scale = 1.0 / (num_powers - 1) if num_powers > 1 else 0.0
    phi = np.empty((history.size + 1, 3))
    for i, (s, ch, p) in enumerate(history.pairs):
        phi[i] = (s / sinr_max, ch * ch_scale, p * p_scale)
    phi[-1] = (history.current / sinr_max, -1.0, -1.0)
    return phi


def cnn_image_shape(window: int) -> tuple:
    """Near-square image that holds the flattened window, row-major."""
    n = 3 * (window + 1)
    cols = math.ceil(math.sqrt(n))
    return (math.ceil(n / cols), cols)


def phi_to_input(phi: np.ndarray, net_kind: str) -> np.ndarray:
    if net_kind == "mlp":
        return phi.reshape(-1)
    rows, cols = cnn_image_shape(phi.shape[0] - 1)
    flat = np.zeros(rows * cols)
    flat[: phi.size] = phi.ravel()
    return flat.reshape(1, rows, cols)


def build_network(cfg: AgentConfig, num_actions: int, rng) -> nn.Network:
    if cfg.net == "mlp":
        return nn.mlp_preset(3 * (cfg.window + 1), num_actions, cfg.hidden, rng)
    return nn.conv_preset(cnn_image_shape(cfg.window), num_actions, rng)


# -- tabular pieces ----------------------------------------------------------


class QTable:
    """Dense ``(bins, actions)`` Q table over equal-width SINR bins."""

    def __init__(self, bins: int, num_actions: int, sinr_max: float):
        self.bins = bins
        self.sinr_max = sinr_max
        self.values = np.zeros((bins, num_actions))

    def state_bin(self, sinr: float) -> int:
        b = int(sinr / self.sinr_max * self.bins)
        return min(max(b, 0), self.bins - 1)


def tabular_update(table, s_bin: int, action: int, reward: float, s_next_bin: int, alpha: float, gamma: float, allowed=None) -> float:
    """One sample-based Bellman step on ``table`` (a QTable or a 2-D array)."""
    q = table.values if isinstance(table, QTable) else table
    nxt = q[s_next_bin] if allowed is None else q[s_next_bin, allowed]
    q[s_bin, action] = (1.0 - alpha) * q[s_bin, action] + alpha * (reward + gamma * nxt.max())
    return q[s_bin, action]


# -- deep pieces -------------------------------------------------------------


def _restrict(q: np.ndarray, allowed):
    return q if allowed is None else q[..., allowed]


def _expand(idx, allowed):
    return idx if allowed is None else np.asarray(allowed)[idx]


def compute_amax(q1, phi_next, allowed=None):
    """Greedy action of the online network at the successor input (lowest index on ties)."""
    q = _restrict(np.asarray(q1(phi_next)), allowed)
    return _expand(np.argmax(q, axis=-1), allowed)


def compute_target(double: bool, q1, q2, reward, gamma: float, phi_next, allowed=None):
    """Bootstrapped target ``u + gamma * Q2(phi', a*)``.

    Double estimators pick ``a*`` with ``q1`` and value it with ``q2``; the
    plain form takes the max of ``q2``. Works on one sample or a batch.
    """
    q2_next = np.asarray(q2(phi_next))
    if double:
        a_max = compute_amax(q1, phi_next, allowed)
        boot = np.take_along_axis(q2_next, np.asarray(a_max)[..., None], axis=-1)[..., 0]
    else:
        boot = _restrict(q2_next, allowed).max(axis=-1)
    return np.asarray(reward, dtype=np.float64) + gamma * boot


def td_error(target, q1, phi, action):
    q = np.asarray(q1(phi))
    return target - np.take_along_axis(q, np.asarray(action)[..., None], axis=-1)[..., 0]


def sync_target(q2: nn.Network, q1: nn.Network, slot: int, period: int) -> bool:
    """Copy ``q1`` into ``q2`` on slots 1, 1+f, 1+2f, ...; returns whether it fired."""
    if (slot - 1) % period == 0:
        nn.copy_from(q2, q1)
        return True
    return False


# -- agents ------------------------------------------------------------------


@dataclass
class StepRecord:
    slot: int
    action: SenderAction
    outcome: SlotOutcome
    jam: list
    tau: float
    epsilon: float
    branch: str
    loss: Optional[float] = None


class Agent:
    """Shared slot loop; subclasses provide Q estimates and learning."""

    def __init__(self, cfg: AgentConfig, params: RadioParams, policy: PolicyState, rng, allowed=None):
        self.cfg = cfg
        self.params = params
        self.policy = policy
        self.rng = rng
        self.allowed = np.arange(params.num_actions) if allowed is None else np.asarray(allowed, dtype=np.intp)
        self._allowed_pos = {int(a): i for i, a in enumerate(self.allowed)}
        self.history = HistoryWindow(cfg.window, cfg.initial_sinr)
        self.slot = 0
        self.prev_action: Optional[int] = None

    @property
    def restricted(self):
        return None if len(self.allowed) == self.params.num_actions else self.allowed

    def phi(self) -> np.ndarray:
        p = self.params
        return build_phi(self.history, p.sinr_max, p.num_channels, p.num_powers)

    def q_values(self) -> np.ndarray:
        raise NotImplementedError

    def choose(self):
        """Return ``(flat action index, branch)`` for the upcoming slot."""
        if self.slot + 1 <= self.cfg.window:
            return int(self.allowed[self.rng.integers(len(self.allowed))]), WARMUP
        q = self.q_values()[self.allowed]
        prev = None if self.prev_action is None else self._allowed_pos[self.prev_action]
        pos, branch = select_action(q, prev, self.policy, self.rng)
        return int(self.allowed[pos]), branch

    def observe(self, state: float, index: int, reward: float, next_state: float, phi, phi_next) -> Optional[float]:
        raise NotImplementedError

    def step(self, env) -> StepRecord:
        """Play one slot against ``env`` and learn from it."""
        tau, eps = self.policy.tau, self.policy.epsilon
        index, branch = self.choose()
        self.slot += 1
        k = self.slot
        action = self.params.action_from_index(index)
        outcome, next_state = env.step(action)
        post_warmup = k > self.cfg.window
        if post_warmup and self.cfg.policy_kind == "tau_epsilon_greedy":
            update_tau(outcome.utility, self.policy)
        else:
            self.policy.record(outcome.utility)
        phi = self.phi() if self.history.full else None
        state = self.history.current
        self.history.advance(action, next_state)
        phi_next = self.phi() if phi is not None else None
        loss = self.observe(state, index, outcome.utility, next_state, phi, phi_next)
        if post_warmup:
            decay_epsilon(self.policy)
        self.after_step(k)
        self.prev_action = index
        return StepRecord(k, action, outcome, list(env.last_jam), tau, eps, branch, loss)

    def after_step(self, slot: int) -> None:
        pass


class QLearningAgent(Agent):
    """Tabular Q-learning over discretized SINR states; learns on every slot."""

    def __init__(self, cfg, params, policy, rng, allowed=None):
        super().__init__(cfg, params, policy, rng, allowed)
        self.table = QTable(cfg.bins, params.num_actions, params.sinr_max)

    def q_values(self):
        return self.table.values[self.table.state_bin(self.history.current)]

    def observe(self, state, index, reward, next_state, phi, phi_next):
        t = self.table
        tabular_update(
            t, t.state_bin(state), index, reward, t.state_bin(next_state),
            self.cfg.alpha, self.cfg.gamma, self.restricted,
        )
        return None


class DeepQAgent(Agent):
    """DQN / DDQN / PDDQN sharing one implementation.

    ``cfg.double`` switches the target to the double estimator and
    ``cfg.uses_priorities`` swaps the uniform buffer for the sum tree.
    """

    def __init__(self, cfg, params, policy, rng, allowed=None, init_rng=None):
        super().__init__(cfg, params, policy, rng, allowed)
        init_rng = rng if init_rng is None else init_rng
        self.q1 = build_network(cfg, params.num_actions, init_rng)
        self.q2 = build_network(cfg, params.num_actions, init_rng)
        nn.copy_from(self.q2, self.q1)
        self.replay = PrioritizedReplay(cfg.replay) if cfg.uses_priorities else UniformReplay(cfg.replay)

    def to_input(self, phi):
        return phi_to_input(phi, self.cfg.net)

    def q_values(self):
        return self.q1(self.to_input(self.phi()))

    def observe(self, state, index, reward, next_state, phi, phi_next):
        if phi is None:
            return None
        self.replay.push(Experience(self.to_input(phi), self.to_input(phi_next), index, float(reward)))
        if len(self.replay) < self.cfg.replay.batch_size:
            return None
        return self.learn()

    def targets(self, batch):
        x_next = np.stack([e.phi_next for e in batch])
        rewards = np.array([e.reward for e in batch])
        return compute_target(self.cfg.double, self.q1, self.q2, rewards, self.cfg.gamma, x_next, self.restricted)

    def td_errors(self, batch):
        x = np.stack([e.phi for e in batch])
        actions = np.array([e.action for e in batch])
        return td_error(self.targets(batch), self.q1, x, actions)

    def learn(self) -> float:
        """One minibatch update of ``q1``; returns the weighted loss."""
        leaves, batch, weights = self.replay.sample(self.rng)
        x = np.stack([e.phi for e in batch])
        actions = np.array([e.action for e in batch])
        loss, grads, _ = nn.loss_and_grad(self.q1, x, actions, self.targets(batch), weights)
        nn.sgd_step(self.q1, grads, self.cfg.learning_rate)
        if self.replay.prioritized:
            if self.cfg.replay.full_priority_refresh:
                idx, items = zip(*self.replay.items())
                self.replay.update(idx, self.td_errors(list(items)))
            else:
                self.replay.update(leaves, self.td_errors(batch))
        return loss

    def after_step(self, slot):
        sync_target(self.q2, self.q1, slot, self.cfg.sync_period)


def make_agent(cfg: AgentConfig, params: RadioParams, policy: PolicyState, rng, allowed=None, init_rng=None) -> Agent:
    if cfg.kind == "QL":
        return QLearningAgent(cfg, params, policy, rng, allowed)
    return DeepQAgent(cfg, params, policy, rng, allowed, init_rng)


def constant_power_actions(params: RadioParams, power_index: int) -> np.ndarray:
    """Flat indices of every action that transmits at ``power_index``."""
    if not 0 <= power_index < params.num_powers:
        raise ValueError("constant power index out of range")
    return np.arange(params.num_channels) + power_index * params.num_channels


# -- checkpoints -------------------------------------------------------------
#
# Text header of ``# key value`` lines, then one parameter block per network
# (q1, q2) or a single block holding the Q table.

_CKPT_KEYS = ("kind", "slot", "tau", "epsilon", "prev_action", "max_priority_seen", "replay_count")


def save_checkpoint(agent: Agent, path) -> None:
    replay = getattr(agent, "replay", None)
    header = {
        "kind": agent.cfg.kind,
        "slot": agent.slot,
        "tau": float(agent.policy.tau).hex(),
        "epsilon": float(agent.policy.epsilon).hex(),
        "prev_action": -1 if agent.prev_action is None else agent.prev_action,
        "max_priority_seen": replay.tree.max_priority_seen.hex() if isinstance(replay, PrioritizedReplay) else "none",
        "replay_count": 0 if replay is None else len(replay),
    }
    with open(path, "w") as fh:
        for key in _CKPT_KEYS:
            fh.write(f"# {key} {header[key]}\n")
        if isinstance(agent, DeepQAgent):
            nn.write_params(agent.q1.params, fh)
            nn.write_params(agent.q2.params, fh)
        else:
            nn.write_params([agent.table.values], fh)


def load_checkpoint(agent: Agent, path) -> dict:
    """Restore network/table parameters and policy scalars; returns the header."""
    header = {}
    with open(path) as fh:
        pos = fh.tell()
        line = fh.readline()
        while line.startswith("#"):
            _, key, value = line.split(None, 2)
            header[key] = value.strip()
            pos = fh.tell()
            line = fh.readline()
        fh.seek(pos)
        if header.get("kind") != agent.cfg.kind:
            raise ValueError(f"checkpoint is for {header.get('kind')}, agent is {agent.cfg.kind}")
        if isinstance(agent, DeepQAgent):
            for net in (agent.q1, agent.q2):
                params = nn.read_params(fh)
                if [p.shape for p in params] != [p.shape for p in net.params]:
                    raise ValueError("checkpoint does not match the network architecture")
                for d, s in zip(net.params, params):
                    np.copyto(d, s)
        else:
            (values,) = nn.read_params(fh)
            np.copyto(agent.table.values, values)
    agent.slot = int(header["slot"])
    agent.policy.tau = float.fromhex(header["tau"])
    agent.policy.epsilon = float.fromhex(header["epsilon"])
    prev = int(header["prev_action"])
    agent.prev_action = None if prev < 0 else prev
    return header


def with_replay(cfg: AgentConfig, **changes) -> AgentConfig:
    return replace(cfg, replay=replace(cfg.replay, **changes))
