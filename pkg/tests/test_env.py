import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from antijam.env import (
    AntiJamEnv,
    JammerAction,
    JammerStrategy,
    RadioParams,
    SenderAction,
    compute_sinr,
    compute_utility,
    env_step,
    evaluate_slot,
    jammers_step,
)

DEFAULT = RadioParams()


def test_defaults_match_experiment_setup():
    p = DEFAULT
    assert p.num_channels == 32
    assert p.sender_powers == (1.0, 5.0, 10.0)
    assert p.jammer_powers == (0.0, 4.0, 8.0, 10.0)
    assert p.h_s == 0.5 and p.h_j == (0.5, 0.5)
    assert (p.beta, p.cost_retransmit, p.cost_power) == (1.0, 1.0, 0.2)
    assert p.num_actions == 96


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(num_channels=0),
        dict(sender_powers=(5.0, 1.0)),
        dict(jammer_powers=(0.0, 0.0, 4.0)),
        dict(beta=0.0),
        dict(h_j=(-0.1, 0.5)),
        dict(cost_power=-1.0),
    ],
)
def test_radio_params_reject_bad_values(kwargs):
    with pytest.raises(ValueError):
        RadioParams(**kwargs)


def test_action_index_roundtrip():
    for idx in range(DEFAULT.num_actions):
        assert DEFAULT.action_index(DEFAULT.action_from_index(idx)) == idx


class TestSinr:
    def test_one_jammer_on_channel(self):
        sinr = compute_sinr(SenderAction(3, 2), [JammerAction(3, 1), JammerAction(7, 3)], DEFAULT)
        assert sinr == pytest.approx(5 / 3, rel=1e-12)

    def test_no_interference(self):
        assert compute_sinr(SenderAction(0, 0), [JammerAction(1, 3), JammerAction(2, 3)], DEFAULT) == 0.5

    def test_both_jammers_full_power(self):
        sinr = compute_sinr(SenderAction(4, 2), [JammerAction(4, 3), JammerAction(4, 3)], DEFAULT)
        assert sinr == pytest.approx(5 / 11, rel=1e-12)


class TestUtility:
    def test_blocked_full_power(self):
        jam = [JammerAction(0, 3), JammerAction(5, 0)]
        act = SenderAction(0, 2)
        sinr = compute_sinr(act, jam, DEFAULT)
        assert sinr == pytest.approx(5 / 6)
        assert compute_utility(sinr, act, jam, DEFAULT) == pytest.approx(5 / 6 - 1 - 2, rel=1e-12)

    def test_unjammed_mid_power(self):
        act = SenderAction(0, 1)
        jam = [JammerAction(1, 3), JammerAction(2, 1)]
        assert compute_utility(compute_sinr(act, jam, DEFAULT), act, jam, DEFAULT) == pytest.approx(1.5)

    def test_zero_costs_give_sinr(self):
        p = RadioParams(cost_retransmit=0.0, cost_power=0.0)
        act = SenderAction(2, 2)
        jam = [JammerAction(2, 3), JammerAction(2, 2)]
        sinr = compute_sinr(act, jam, p)
        assert compute_utility(sinr, act, jam, p) == sinr

    def test_retransmit_cost_once_per_slot_by_default(self):
        act = SenderAction(1, 0)
        jam = [JammerAction(1, 3), JammerAction(1, 3)]
        sinr = compute_sinr(act, jam, DEFAULT)
        assert compute_utility(sinr, act, jam, DEFAULT) == pytest.approx(sinr - 1.0 - 0.2)
        per_jammer = RadioParams(retransmit_cost_per_jammer=True)
        assert compute_utility(sinr, act, jam, per_jammer) == pytest.approx(sinr - 2.0 - 0.2)


class TestJammers:
    def test_fixed(self):
        rng = np.random.default_rng(0)
        strat = [JammerStrategy.fixed(3, 2)]
        params = RadioParams(h_j=(0.5,))
        for _ in range(5):
            assert jammers_step(strat, None, rng, params) == [JammerAction(3, 2)]

    def test_sweep_wraps(self):
        params = RadioParams(num_channels=8, h_j=(0.5,))
        strat = [JammerStrategy.sweep(stride=1, start=5)]
        rng = np.random.default_rng(1)
        channels = [jammers_step(strat, None, rng, params)[0].channel for _ in range(4)]
        assert channels == [6, 7, 0, 1]

    def test_reactive_follows(self):
        params = RadioParams(h_j=(0.5,))
        strat = [JammerStrategy.reactive(1.0)]
        out = jammers_step(strat, SenderAction(4, 0), np.random.default_rng(2), params)
        assert out == [JammerAction(4, 3)]

    def test_reactive_without_history_is_uniform(self):
        params = RadioParams(h_j=(0.5,))
        out = jammers_step([JammerStrategy.reactive(1.0)], None, np.random.default_rng(2), params)
        assert 0 <= out[0].channel < params.num_channels

    def test_uniform_covers_everything(self):
        params = RadioParams(num_channels=4)
        rng = np.random.default_rng(3)
        seen = set()
        for _ in range(500):
            for ja in jammers_step([JammerStrategy.uniform_random()] * 2, None, rng, params):
                seen.add((ja.channel, ja.power_index))
        assert len(seen) == 16

    def test_bad_strategy(self):
        with pytest.raises(ValueError):
            JammerStrategy("teleport")
        with pytest.raises(ValueError):
            JammerStrategy.reactive(1.5)
        with pytest.raises(ValueError):
            JammerStrategy.sweep(stride=8).validate(RadioParams(num_channels=8))


class TestEnvStep:
    def test_off_channel_low_power(self):
        strat = [JammerStrategy.fixed(5, 3), JammerStrategy.fixed(6, 3)]
        outcome, nxt, _ = env_step(SenderAction(0, 0), strat, DEFAULT, np.random.default_rng(0))
        assert nxt == 0.5
        assert not outcome.blocked

    def test_blocked_slot(self):
        strat = [JammerStrategy.fixed(0, 3), JammerStrategy.fixed(6, 0)]
        outcome, _, _ = env_step(SenderAction(0, 2), strat, DEFAULT, np.random.default_rng(0))
        assert outcome.blocked
        assert outcome.hit_flags == (True, False)
        assert outcome.utility == pytest.approx(outcome.sinr - 1.0 - 2.0)

    def test_blocked_state_zero(self):
        strat = [JammerStrategy.fixed(0, 3), JammerStrategy.fixed(6, 0)]
        env = AntiJamEnv(DEFAULT, strat, np.random.default_rng(0), blocked_state="zero")
        _, nxt = env.step(SenderAction(0, 2))
        assert nxt == 0.0

    def test_rejects_bad_action(self):
        env = AntiJamEnv(DEFAULT, [JammerStrategy()] * 2, np.random.default_rng(0))
        with pytest.raises(ValueError):
            env.step(SenderAction(32, 0))

    def test_strategy_count_must_match(self):
        with pytest.raises(ValueError):
            AntiJamEnv(DEFAULT, [JammerStrategy()], np.random.default_rng(0))

    def test_seed_determinism(self):
        def trace(seed):
            env = AntiJamEnv(DEFAULT, [JammerStrategy(), JammerStrategy()], np.random.default_rng(seed))
            act_rng = np.random.default_rng(99)
            out = []
            for _ in range(200):
                a = SenderAction(int(act_rng.integers(32)), int(act_rng.integers(3)))
                o, s = env.step(a)
                out.append((o, s, tuple(env.last_jam)))
            return out

        assert trace(7) == trace(7)
        assert trace(7) != trace(8)


# -- properties ---------------------------------------------------------------

slot_inputs = st.tuples(
    st.integers(0, 7),
    st.integers(0, 2),
    st.lists(st.tuples(st.integers(0, 7), st.integers(0, 3)), min_size=2, max_size=2),
)
SMALL = RadioParams(num_channels=8)


@given(slot_inputs)
def test_sinr_monotone_in_sender_power(data):
    ch, p, jam = data
    jam = [JammerAction(*j) for j in jam]
    sinrs = [compute_sinr(SenderAction(ch, i), jam, SMALL) for i in range(3)]
    assert sinrs == sorted(sinrs)
    assert all(s >= 0 for s in sinrs)


@given(slot_inputs, st.integers(0, 3))
def test_extra_onchannel_jammer_never_helps(data, level):
    ch, p, jam = data
    params = RadioParams(num_channels=8, h_j=(0.5, 0.5, 0.5))
    base = [JammerAction(*j) for j in jam]
    before = compute_sinr(SenderAction(ch, p), base, params)
    after = compute_sinr(SenderAction(ch, p), base + [JammerAction(ch, level)], params)
    assert after <= before


@given(slot_inputs, st.floats(0, 5), st.floats(0, 5))
def test_utility_decomposition(data, cm, cs):
    ch, p, jam = data
    params = RadioParams(num_channels=8, cost_retransmit=cm, cost_power=cs)
    jam = [JammerAction(*j) for j in jam]
    act = SenderAction(ch, p)
    o = evaluate_slot(act, jam, params)
    recon = o.utility + cs * params.sender_powers[p] + (cm if o.blocked else 0.0)
    assert recon == pytest.approx(o.sinr, abs=1e-12)


def test_blocked_implies_top_power_hit():
    rng = np.random.default_rng(11)
    env = AntiJamEnv(SMALL, [JammerStrategy(), JammerStrategy()], rng)
    for _ in range(10_000):
        o, _ = env.step(SenderAction(int(rng.integers(8)), int(rng.integers(3))))
        top_hits = [hit and ja.power_index == 3 for hit, ja in zip(o.hit_flags, env.last_jam)]
        assert o.blocked == any(top_hits)
