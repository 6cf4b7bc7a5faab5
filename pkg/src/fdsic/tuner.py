"""Derivative-free tuning of the RF canceller's two quantized control values.

The physical control surface is two DC voltages and a scalar residual-power
readout, so the tuner is a quantized coordinate descent over the I/Q gain
grid, repeated for each candidate fixed delay. The zero-gain setting is
always evaluated first: switching the canceller path off is the fallback, and
the result is never worse than it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .analog import VectorModulatorState
from .errors import ConfigError, TuningError


@dataclass(frozen=True)
class TunerConfig:
    """Descent schedule and measurement budget for the canceller tuner."""

    initial_step: float = 0.25
    min_step: float = 2.0**-13
    max_evaluations: int = 4000
    probe_len: int = 8192
    delay_grid: tuple[int, ...] = (0, 1, 2, 3, 4)

    def __post_init__(self):
        if not 0 < self.min_step <= self.initial_step:
            raise ConfigError(
                f"need 0 < min_step <= initial_step, got {self.min_step}, {self.initial_step}"
            )
        if self.max_evaluations < 1:
            raise ConfigError(f"max_evaluations must be >= 1, got {self.max_evaluations}")
        if self.probe_len < 1:
            raise ConfigError(f"probe_len must be >= 1, got {self.probe_len}")
        if len(self.delay_grid) == 0 or any(d < 0 for d in self.delay_grid):
            raise ConfigError(f"delay_grid needs nonnegative entries, got {self.delay_grid}")


@dataclass(frozen=True)
class TuneEvaluation:
    """One objective measurement in the tuning trace."""

    index: int
    delay_samples: int
    gain_i: float
    gain_q: float
    power_db: float


@dataclass
class TuneResult:
    """Best state found, its measured power, and the full evaluation trace."""

    state: VectorModulatorState
    power_db: float
    evaluations: int
    trace: list[TuneEvaluation]


def tune(objective, cfg: TunerConfig, start: VectorModulatorState) -> TuneResult:
    """Minimize residual power over the quantized (delay, gain_i, gain_q) grid.

    ``objective`` maps a VectorModulatorState to residual power in dB and
    must be deterministic for a fixed state (the harness pins noise seeds per
    probe). Descent per delay: probe +/- step on each gain axis, accept
    improvements, halve the step when no axis improves, stop at min_step.
    The returned state never measures worse than the zero-gain baseline or
    the start state, and its gains are exact multiples of the control step.
    """
    quantum = start.control_step
    step_units = max(1, round(cfg.initial_step / quantum))
    min_units = max(1, round(cfg.min_step / quantum))
    trace: list[TuneEvaluation] = []
    cache: dict[tuple[int, int, int], float] = {}

    def evaluate(state: VectorModulatorState) -> float:
        key = (
            state.delay_samples,
            round(state.gain_i / quantum),
            round(state.gain_q / quantum),
        )
        if key in cache:
            return cache[key]
        if len(trace) >= cfg.max_evaluations:
            raise _BudgetExhausted
        power = float(objective(state))
        if np.isnan(power) or power == np.inf:
            raise TuningError(f"objective returned non-finite power {power} at {state}")
        trace.append(
            TuneEvaluation(len(trace), state.delay_samples, state.gain_i, state.gain_q, power)
        )
        cache[key] = power
        return power

    best_state = start.at_delay(cfg.delay_grid[0]).at_grid(0, 0)
    try:
        best_power = evaluate(best_state)  # zero-gain baseline
        start_power = evaluate(start)
        if start_power < best_power:
            best_state, best_power = start, start_power

        for delay in cfg.delay_grid:
            if start.delay_samples == delay:
                si, sq = round(start.gain_i / quantum), round(start.gain_q / quantum)
            else:
                si, sq = 0, 0
            here = start.at_delay(delay).at_grid(si, sq)
            here_power = evaluate(here)
            units = step_units
            while units >= min_units:
                improved = False
                for axis in (0, 1):
                    for sign in (1, -1):
                        ci = si + sign * units if axis == 0 else si
                        cq = sq + sign * units if axis == 1 else sq
                        if (ci * quantum) ** 2 + (cq * quantum) ** 2 > 1.0:
                            continue  # passive path, gain magnitude capped at 1
                        cand = here.at_grid(ci, cq)
                        power = evaluate(cand)
                        if power < here_power:
                            si, sq, here_power = ci, cq, power
                            improved = True
                if not improved:
                    units //= 2
            if here_power < best_power:
                best_state, best_power = here.at_grid(si, sq), here_power
    except _BudgetExhausted:
        pass

    return TuneResult(state=best_state, power_db=best_power, evaluations=len(trace), trace=trace)


class _BudgetExhausted(Exception):
    pass
