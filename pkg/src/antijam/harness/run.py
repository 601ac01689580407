"""Single seeded runs and the trace CSV format."""

from __future__ import annotations

import csv
import io
from dataclasses import astuple, dataclass, field
from pathlib import Path

import numpy as np

from ..agents import constant_power_actions, make_agent
from ..env import AntiJamEnv
from .config import ExperimentConfig

TRACE_COLUMNS = (
    "slot", "sinr", "utility", "tau", "epsilon", "channel", "power_index",
    "blocked", "branch", "jam_channels", "jam_powers",
)


@dataclass(frozen=True)
class TraceRow:
    slot: int
    sinr: float
    utility: float
    tau: float
    epsilon: float
    channel: int
    power_index: int
    blocked: bool
    branch: str
    jam_channels: tuple
    jam_powers: tuple


@dataclass
class RunTrace:
    rows: list = field(default_factory=list)
    sender_powers: tuple = ()
    label: str = ""
    seed: int = 0

    def __len__(self) -> int:
        return len(self.rows)

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.rows])

    @property
    def sinr(self) -> np.ndarray:
        return self.column("sinr")


def run_streams(seed: int):
    """Independent generators for the jammers, the agent and network init.

    Runs that share a seed see the same jammer stream and the same initial
    weights, which makes cross-config comparisons paired.
    """
    env_ss, agent_ss, init_ss = np.random.SeedSequence(seed).spawn(3)
    return np.random.default_rng(env_ss), np.random.default_rng(agent_ss), np.random.default_rng(init_ss)


def run(config: ExperimentConfig, seed: int) -> RunTrace:
    config.validate()
    params = config.radio_params()
    env_rng, agent_rng, init_rng = run_streams(seed)
    env = AntiJamEnv(params, config.jammer_strategies(), env_rng, config.blocked_state)
    allowed = None
    if config.constant_power_index is not None:
        allowed = constant_power_actions(params, config.constant_power_index)
    agent = make_agent(config.agent_config(), params, config.policy_state(), agent_rng, allowed, init_rng)
    trace = RunTrace(sender_powers=params.sender_powers, label=config.label(), seed=seed)
    for _ in range(config.slots):
        rec = agent.step(env)
        trace.rows.append(
            TraceRow(
                slot=rec.slot,
                sinr=rec.outcome.sinr,
                utility=rec.outcome.utility,
                tau=rec.tau,
                epsilon=rec.epsilon,
                channel=rec.action.channel,
                power_index=rec.action.power_index,
                blocked=rec.outcome.blocked,
                branch=rec.branch,
                jam_channels=tuple(j.channel for j in rec.jam),
                jam_powers=tuple(j.power_index for j in rec.jam),
            )
        )
    return trace


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, tuple):
        return ";".join(str(v) for v in value)
    return str(value)


def write_trace(trace: RunTrace, fh) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(TRACE_COLUMNS)
    for row in trace.rows:
        writer.writerow([_fmt(v) for v in astuple(row)])


def trace_to_csv(trace: RunTrace) -> str:
    buf = io.StringIO()
    write_trace(trace, buf)
    return buf.getvalue()


def _ints(text: str) -> tuple:
    return tuple(int(v) for v in text.split(";")) if text else ()


def read_trace(fh) -> RunTrace:
    reader = csv.reader(fh)
    header = tuple(next(reader))
    if header != TRACE_COLUMNS:
        raise ValueError(f"unexpected trace header {header}")
    trace = RunTrace()
    for rec in reader:
        trace.rows.append(
            TraceRow(
                slot=int(rec[0]),
                sinr=float(rec[1]),
                utility=float(rec[2]),
                tau=float(rec[3]),
                epsilon=float(rec[4]),
                channel=int(rec[5]),
                power_index=int(rec[6]),
                blocked=rec[7] == "true",
                branch=rec[8],
                jam_channels=_ints(rec[9]),
                jam_powers=_ints(rec[10]),
            )
        )
    return trace


def save_trace(trace: RunTrace, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        write_trace(trace, fh)
    return path


def load_trace(path) -> RunTrace:
    with open(path, newline="") as fh:
        return read_trace(fh)
