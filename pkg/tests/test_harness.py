import io
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from antijam.env import JammerAction, SenderAction, compute_sinr, compute_utility
from antijam.harness import ConfigError, ExperimentConfig, compare, load_trace, power_study, run, save_trace
from antijam.harness.compare import format_table
from antijam.harness.config import dump_config, parse_config_text, parse_jammer
from antijam.harness.metrics import (
    average_power,
    convergence_slot,
    final_window_mean,
    moving_average,
    pooled_std,
    sign_test,
)
from antijam.harness.run import TRACE_COLUMNS, read_trace, trace_to_csv

QUICK = ExperimentConfig(num_channels=8, window=4, slots=40, batch_size=4, final_window=10, convergence_window=10)


class TestMovingAverage:
    def test_constant(self):
        np.testing.assert_array_equal(moving_average([3.0] * 6, 4), [3.0] * 6)

    def test_window_one(self):
        x = [1.0, -2.0, 5.5]
        np.testing.assert_array_equal(moving_average(x, 1), x)

    def test_two_points(self):
        np.testing.assert_array_equal(moving_average([0.0, 10.0], 2), [0.0, 5.0])

    def test_bad_window(self):
        with pytest.raises(ValueError):
            moving_average([1.0], 0)


def brute_convergence(x, fraction, window):
    smooth = [np.mean(x[max(0, i - window + 1) : i + 1]) for i in range(len(x))]
    threshold = fraction * np.mean(x[-window:])
    for t in range(len(x)):
        if all(v >= threshold for v in smooth[t:]):
            return t
    return None


class TestConvergence:
    def test_constant(self):
        assert convergence_slot([2.0] * 50, 0.9, 5) == 0

    def test_step(self):
        x = [0.0] * 100 + [1.0] * 100
        assert convergence_slot(x, 0.9, 1) == 100

    def test_never(self):
        # the threshold tracks a negative tail mean that the last point misses
        assert convergence_slot([-1.0, -1.0, -3.0], 0.9, 1) is None

    @given(st.lists(st.floats(-5, 5), min_size=1, max_size=60), st.integers(1, 15), st.floats(0.5, 1.0))
    def test_matches_brute_force(self, x, window, fraction):
        assert convergence_slot(x, fraction, window) == brute_convergence(np.array(x), fraction, window)


class TestPowerAndWindows:
    def test_constant_power(self):
        assert average_power([1] * 10, (1.0, 5.0, 10.0)) == 5.0

    def test_half_half(self):
        assert average_power([0, 2] * 5, (1.0, 5.0, 10.0)) == 5.5

    def test_final_window(self):
        assert final_window_mean(np.arange(10.0), 4) == 7.5


class TestStatistics:
    def test_sign_test_by_hand(self):
        wins, n, p = sign_test([2, 2, 2, 0, 1], [1, 1, 1, 1, 1])
        assert (wins, n) == (3, 4)
        assert p == pytest.approx(5 / 16)

    def test_sign_test_matches_binomial(self):
        from scipy.stats import binomtest

        rng = np.random.default_rng(0)
        a, b = rng.normal(size=20) + 0.3, rng.normal(size=20)
        wins, n, p = sign_test(a, b)
        assert p == pytest.approx(binomtest(wins, n, alternative="greater").pvalue, rel=1e-12)

    def test_all_ties(self):
        assert sign_test([1.0, 1.0], [1.0, 1.0]) == (0, 0, 1.0)

    def test_pooled_std(self):
        assert pooled_std([1, 2, 3], [2, 4, 6]) == pytest.approx(math.sqrt((1 + 4) / 2))


class TestConfig:
    def test_parse(self):
        cfg = parse_config_text(
            "# small study\nnum_channels = 8\nsender_powers = 1, 5\njammers = uniform, sweep:3:2\n"
            "agent = dqn  # trailing comment\nfull_priority_refresh = yes\nconstant_power_index = 1\n"
        )
        assert cfg.num_channels == 8 and cfg.sender_powers == (1.0, 5.0)
        assert cfg.jammers == ("uniform", "sweep:3:2") and cfg.agent == "dqn"
        assert cfg.full_priority_refresh is True and cfg.constant_power_index == 1

    def test_dump_round_trip(self):
        cfg = ExperimentConfig(name="x", seeds=(3, 4), hidden=(8,), constant_power_index=2, learning_rate=3e-3)
        assert parse_config_text(dump_config(cfg)) == cfg

    def test_file_errors_are_collected(self):
        with pytest.raises(ConfigError) as err:
            parse_config_text("no_equals_sign\nbogus_key = 1\nslots = many\n")
        msg = str(err.value)
        assert "line 1" in msg and "line 2" in msg and "line 3" in msg

    def test_validation_lists_everything(self):
        bad = ExperimentConfig(agent="sarsa", slots=3, seeds=(), beta=0.0, jammers=("uniform",))
        with pytest.raises(ConfigError) as err:
            bad.validate()
        msg = str(err.value)
        for word in ("agent", "slots", "seeds", "radio", "jammers"):
            assert word in msg

    def test_jammer_specs(self):
        assert parse_jammer("sweep:3:2").stride == 3
        assert parse_jammer("fixed:1:2").channel == 1
        assert parse_jammer("reactive:0.5").follow_probability == 0.5
        for bad in ("laser", "fixed:1", "reactive:x"):
            with pytest.raises(ValueError):
                parse_jammer(bad)

    def test_bad_constant_power(self):
        with pytest.raises(ConfigError):
            QUICK.with_overrides(constant_power_index=3).validate()


class TestRun:
    def test_length_and_columns(self):
        trace = run(QUICK, 0)
        assert len(trace) == 40
        assert trace_to_csv(trace).splitlines()[0] == ",".join(TRACE_COLUMNS)

    def test_warmup_boundary(self):
        trace = run(QUICK.with_overrides(slots=6, window=5), 0)
        assert list(trace.column("branch")[:5]) == ["warmup"] * 5
        assert trace.rows[5].branch != "warmup"
        with pytest.raises(ConfigError, match="slots"):
            run(QUICK.with_overrides(slots=5, window=5), 0)

    def test_deterministic(self):
        for agent in ("ql", "pddqn"):
            cfg = QUICK.with_overrides(agent=agent)
            assert trace_to_csv(run(cfg, 3)) == trace_to_csv(run(cfg, 3))
        assert trace_to_csv(run(QUICK, 3)) != trace_to_csv(run(QUICK, 4))

    def test_utility_audit(self):
        cfg = QUICK.with_overrides(slots=80)
        params = cfg.radio_params()
        for row in run(cfg, 1).rows:
            act = SenderAction(row.channel, row.power_index)
            jam = [JammerAction(c, p) for c, p in zip(row.jam_channels, row.jam_powers)]
            sinr = compute_sinr(act, jam, params)
            assert sinr == row.sinr
            assert compute_utility(sinr, act, jam, params) == row.utility

    def test_csv_round_trip(self, tmp_path):
        trace = run(QUICK.with_overrides(agent="ddqn"), 2)
        path = save_trace(trace, tmp_path / "t.csv")
        back = load_trace(path)
        assert back.rows == trace.rows
        assert trace_to_csv(back) == path.read_text()

    def test_bad_header(self):
        with pytest.raises(ValueError):
            read_trace(io.StringIO("a,b\n"))

    def test_invalid_config_before_work(self):
        with pytest.raises(ConfigError):
            run(QUICK.with_overrides(policy="softmax"), 0)


class TestCompare:
    def test_self_comparison(self, tmp_path):
        a = QUICK.with_overrides(name="a")
        b = QUICK.with_overrides(name="b")
        s1, s2 = compare([a, b], [0, 1], tmp_path)
        np.testing.assert_array_equal(s1.final_sinr, s2.final_sinr)
        np.testing.assert_array_equal(s1.curve, s2.curve)
        rows = (tmp_path / "summary.csv").read_text().splitlines()
        assert rows[1].split(",")[1:] == rows[2].split(",")[1:]
        assert len((tmp_path / "curves.csv").read_text().splitlines()) == 41
        assert "a" in format_table([s1, s2])

    def test_seed_order_invariant(self):
        cfgs = [QUICK.with_overrides(agent="ql"), QUICK]
        x = compare(cfgs, [2, 0, 1])
        y = compare(cfgs, [1, 2, 0])
        for s, t in zip(x, y):
            assert s.seeds == t.seeds == (0, 1, 2)
            np.testing.assert_array_equal(s.final_sinr, t.final_sinr)
            assert s.convergence == t.convergence

    def test_rejects_slot_mismatch(self):
        with pytest.raises(ValueError, match="slot"):
            compare([QUICK, QUICK.with_overrides(slots=50)], [0])

    def test_needs_two(self):
        with pytest.raises(ValueError):
            compare([QUICK], [0])

    def test_power_study(self, tmp_path):
        study = power_study(QUICK, [0, 1], tmp_path)
        assert set(study["constant"]) == {1.0, 5.0, 10.0}
        for watts, s in study["constant"].items():
            np.testing.assert_array_equal(s.avg_power, watts)
        assert study["variable"].name == "variable"
