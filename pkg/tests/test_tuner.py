"""RF canceller tuner tests: optimality, quantization, budgets, error paths."""

import numpy as np
import pytest

from fdsic import (
    ComplexSequence,
    ConfigError,
    SiChannel,
    TunerConfig,
    TuningError,
    VectorModulatorState,
    WaveformConfig,
    apply_si_channel,
    generate_tx,
    rfsic_path,
    tune,
)

FS = 61.44e6
STEP = 2.0**-13


def _probe(n=8192, seed=3):
    cfg = WaveformConfig(n_subcarriers=512, n_active=167, cp_len=36,
                         n_symbols=-(-n // 548), rng_seed=seed)
    x = generate_tx(cfg, FS)
    return ComplexSequence(x.samples[:n], FS)


def _objective_for(x, channel, probe_seed=77):
    si = apply_si_channel(x, channel)

    def objective(state):
        cancel = rfsic_path(x, state, rng_seed=probe_seed)
        power = np.mean(np.abs(si.samples + cancel.samples) ** 2)
        return 10 * np.log10(power) if power > 0 else -np.inf

    return objective, si


def _ls_residual_bound(x, si, delays):
    """Least-squares projection of the interference onto a single delayed
    copy of the reference, the analytic floor for one delay plus one gain."""
    best = np.inf
    for delay in delays:
        ref = np.zeros_like(x.samples)
        ref[delay:] = x.samples[: len(x.samples) - delay] if delay else x.samples
        gain = np.vdot(ref, si.samples) / np.vdot(ref, ref)
        best = min(best, float(np.mean(np.abs(si.samples - gain * ref) ** 2)))
    return 10 * np.log10(best)


def test_single_tap_channel_deep_suppression():
    """Single-tap leakage with the delay on the grid tunes to >= 60 dB below
    the untuned power, matching the closed-form optimum (the negated tap,
    snapped to the control grid) to within half a dB."""
    x = _probe()
    tap = 0.1 * np.exp(1j * 1.2)
    channel = SiChannel(((tap, 3),))
    objective, si = _objective_for(x, channel)
    start = VectorModulatorState.zero(STEP, 0, noise_power_db=-150.0)
    result = tune(objective, TunerConfig(max_evaluations=2000, delay_grid=(0, 1, 2, 3, 4)), start)
    untuned = objective(start)
    assert untuned - result.power_db >= 60.0
    optimum = start.at_delay(3).at_grid(round(-tap.real / STEP), round(-tap.imag / STEP))
    assert result.power_db <= objective(optimum) + 0.5
    assert result.state.delay_samples == 3


def test_zero_channel_returns_zero_gain():
    x = _probe(n=2048)
    zeros = ComplexSequence(np.zeros(2048, dtype=complex), FS)

    def objective(state):
        cancel = rfsic_path(x, state, rng_seed=5)
        power = np.mean(np.abs(zeros.samples + cancel.samples) ** 2)
        return 10 * np.log10(power) if power > 0 else -np.inf

    start = VectorModulatorState.zero(STEP, 0, noise_power_db=-np.inf)
    result = tune(objective, TunerConfig(max_evaluations=500, delay_grid=(0, 1)), start)
    assert result.state.gain == 0


def test_monotone_vs_zero_gain_baseline():
    rng = np.random.default_rng(1)
    x = _probe(n=4096, seed=8)
    for trial in range(4):
        gains = 0.03 * (rng.standard_normal(2) + 1j * rng.standard_normal(2))
        channel = SiChannel(((gains[0], int(rng.integers(0, 3))), (gains[1], 5)))
        objective, _ = _objective_for(x, channel, probe_seed=trial)
        start = VectorModulatorState.zero(STEP, 0, noise_power_db=-140.0)
        result = tune(objective, TunerConfig(max_evaluations=800, delay_grid=(0, 1, 2)), start)
        assert result.power_db <= objective(start) + 1e-9


def test_multipath_residual_hits_projection_bound():
    """With several leakage taps, one delay plus one complex gain cannot null
    everything; the tuner gets within 1 dB of the analytic floor."""
    x = _probe()
    channel = SiChannel(((0.08 * np.exp(0.4j), 2), (0.01 * np.exp(-1.9j), 4), (0.004j, 7)))
    objective, si = _objective_for(x, channel)
    start = VectorModulatorState.zero(STEP, 0, noise_power_db=-150.0)
    grid = (0, 1, 2, 3, 4)
    result = tune(objective, TunerConfig(max_evaluations=3000, delay_grid=grid), start)
    bound = _ls_residual_bound(x, si, grid)
    assert result.power_db <= bound + 1.0
    assert result.power_db >= bound - 0.1  # cannot beat the projection


def test_gains_stay_on_control_grid():
    x = _probe(n=2048)
    channel = SiChannel(((0.05 - 0.02j, 1),))
    objective, _ = _objective_for(x, channel)
    start = VectorModulatorState.zero(STEP, 0, noise_power_db=-140.0)
    result = tune(objective, TunerConfig(max_evaluations=400, delay_grid=(0, 1, 2)), start)
    for value in (result.state.gain_i, result.state.gain_q):
        assert value / STEP == pytest.approx(round(value / STEP), abs=1e-9)


def test_evaluation_budget_respected():
    x = _probe(n=2048)
    channel = SiChannel(((0.09, 2),))
    objective, _ = _objective_for(x, channel)
    start = VectorModulatorState.zero(STEP, 0, noise_power_db=-140.0)
    for budget in (1, 2, 10, 50):
        result = tune(objective, TunerConfig(max_evaluations=budget, delay_grid=(0, 1, 2, 3)), start)
        assert result.evaluations <= budget
        assert len(result.trace) == result.evaluations


def test_trace_records_evaluations():
    x = _probe(n=2048)
    channel = SiChannel(((0.05, 1),))
    objective, _ = _objective_for(x, channel)
    start = VectorModulatorState.zero(STEP, 0, noise_power_db=-140.0)
    result = tune(objective, TunerConfig(max_evaluations=300, delay_grid=(0, 1)), start)
    assert [e.index for e in result.trace] == list(range(result.evaluations))
    best_seen = min(e.power_db for e in result.trace)
    assert result.power_db == best_seen


def test_non_finite_objective_raises():
    def objective(state):
        return float("nan")

    start = VectorModulatorState.zero(STEP, 0)
    with pytest.raises(TuningError):
        tune(objective, TunerConfig(max_evaluations=10, delay_grid=(0,)), start)


def test_invalid_config_rejected():
    with pytest.raises(ConfigError):
        TunerConfig(min_step=0.5, initial_step=0.25)
    with pytest.raises(ConfigError):
        TunerConfig(max_evaluations=0)
    with pytest.raises(ConfigError):
        TunerConfig(delay_grid=())
    with pytest.raises(ConfigError):
        TunerConfig(delay_grid=(-1,))
