import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nmps.controller import (
    RHO_SWEEP,
    HomeoState,
    Mode,
    SwitchState,
    homeo_step,
    select_mode,
    switch_rate,
    window_lengths,
)


def run_modes(rho, signal, steps, rng, **sw_kwargs):
    sw, h = SwitchState(**sw_kwargs), HomeoState(rho)
    modes, starts = [], []
    for t in range(steps):
        m, sw, h = select_mode(sw, h, signal(t), t, rng)
        modes.append(m)
        starts.append(sw.triggered)
    return modes, starts


class TestHomeostasis:
    @pytest.mark.parametrize("rho", RHO_SWEEP)
    def test_first_step_probability_is_rho(self, rho, rng):
        _, h, p = homeo_step(HomeoState(rho), 3.7, rng)
        assert p == pytest.approx(rho)
        assert h.t == 1

    def test_constant_signal_keeps_rate(self, rng):
        h = HomeoState(0.1)
        ps = []
        for _ in range(500):
            _, h, p = homeo_step(h, 2.0, rng)
            ps.append(p)
        assert np.allclose(ps, 0.1)

    def test_rho_one_always_triggers(self, rng):
        h = HomeoState(1.0)
        fired = []
        for x in rng.normal(size=200):
            t, h, _ = homeo_step(h, float(x), rng)
            fired.append(t)
        assert np.mean(fired) > 0.6

    def test_invalid_inputs(self, rng):
        with pytest.raises(ValueError):
            HomeoState(0.0)
        with pytest.raises(ValueError):
            HomeoState(1.5)
        with pytest.raises(ValueError):
            homeo_step(HomeoState(0.1), float("nan"), rng)

    @settings(max_examples=30, deadline=None)
    @given(seed=st.integers(0, 10_000), scale=st.floats(0.01, 100.0))
    def test_statistics_stay_valid(self, seed, scale):
        rng = np.random.default_rng(seed)
        h = HomeoState(0.01)
        for x in rng.exponential(scale, size=300):
            _, h, p = homeo_step(h, float(x), rng)
            assert 0.0 <= p <= 1.0
        assert h.second_moment >= 0 and h.transformed_mean > 0

    def test_rate_is_scale_free(self):
        rates = []
        for scale in (1e-3, 1e3):
            rng = np.random.default_rng(9)
            h, fired = HomeoState(0.1), 0
            for x in np.random.default_rng(1).exponential(1.0, size=20_000):
                t, h, _ = homeo_step(h, float(x) * scale, rng)
                fired += t
            rates.append(fired / 20_000)
        assert rates[0] == pytest.approx(rates[1], rel=0.15)


class TestSelectMode:
    def test_windows_are_exactly_duration(self, rng):
        modes, starts = run_modes(0.05, lambda t: float(rng.exponential()), 20_000, rng)
        explor = np.array([m is Mode.EXPLOR for m in modes])
        idx = np.flatnonzero(starts)
        assert len(idx) > 10
        # every window lasts exactly 100 steps unless the run ends first
        for i in idx:
            assert explor[i:i + 100].all()
        complete = [i for i in idx if i + 100 < len(modes)]
        assert all(not explor[i + 100] or starts[i + 100] for i in complete)
        # windows never overlap and no Explor step lies outside a window
        assert np.all(np.diff(idx) >= 100)
        assert explor.sum() == sum(min(100, len(modes) - i) for i in idx)

    def test_starting_window(self, rng):
        modes, starts = run_modes(0.01, lambda t: 1.0, 300, rng, starting_mode_steps=50)
        assert all(m is Mode.EXPLOR for m in modes[:50])
        assert not any(starts[:50])

    def test_missing_signal_exploits_without_advancing(self, rng):
        sw, h = SwitchState(), HomeoState(1.0)
        m, sw2, h2 = select_mode(sw, h, None, 0, rng)
        assert m is Mode.EXPLOIT and h2 == h

    def test_always_explore(self, rng):
        modes, starts = run_modes(0.01, lambda t: None, 250, rng, always_explore=True)
        assert all(m is Mode.EXPLOR for m in modes) and not any(starts)

    def test_state_validation(self):
        with pytest.raises(ValueError):
            SwitchState(explore_duration=0)
        with pytest.raises(ValueError):
            SwitchState(mode=Mode.EXPLOIT, explore_steps_remaining=3)

    def test_seeded_sequence_is_deterministic(self):
        out = []
        for _ in range(2):
            rng = np.random.default_rng(0)
            sig = np.random.default_rng(1).normal(size=3000)
            out.append(run_modes(0.01, lambda t: float(sig[t]), 3000, rng)[0])
        assert out[0] == out[1]


class TestSwitchRate:
    def test_examples(self):
        E, X = Mode.EXPLOIT, Mode.EXPLOR
        assert switch_rate([E, E, E, E]) == 0.0
        assert switch_rate([X, X, E, E]) == 0.25
        assert switch_rate([E, X, E, X]) == 0.5
        assert switch_rate([X, X], window_starts=[True, True]) == 1.0

    def test_empty(self):
        with pytest.raises(ValueError):
            switch_rate([])

    def test_window_lengths(self):
        E, X = "Exploit", "Explor"
        assert window_lengths([X, X, E, X, E, E, X, X, X]) == [2, 1, 3]
        assert window_lengths([]) == []
