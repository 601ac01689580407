"""Anti-jamming wireless game with tabular and deep value-based learners."""

from .agents import AgentConfig, DeepQAgent, QLearningAgent, make_agent
from .env import AntiJamEnv, JammerAction, JammerStrategy, RadioParams, SenderAction, SlotOutcome
from .policy import PolicyState
from .replay import Experience, PrioritizedReplay, ReplayConfig, SumTree, UniformReplay

__version__ = "0.1.0"
