"""Embedded structural invariant suite, runnable from the CLI without pytest.

Fast sanity checks of the simulator's structural properties: zero-in/zero-out,
oracle equivalences on small instances, quantization and budget invariants,
and byte-identical reruns under fixed seeds.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np

from .analog import (
    PaModel,
    SiChannel,
    VectorModulatorState,
    apply_si_channel,
    pa_amplify,
    rfsic_path,
)
from .basis import BasisConfig, basis_generate, whiten, whitening_from_covariance
from .canceller import cancel_stream
from .config import default_config
from .dcd import DcdParams, OpCounters, dcd_solve
from .errors import SimulationError
from .experiments import run_rfsic_showcase, write_report, write_tuner_csv
from .sequence import ComplexSequence
from .tuner import TunerConfig, tune
from .waveform import WaveformConfig, generate_tx

_FS = 61.44e6


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str


def _zero_in_zero_out() -> CheckResult:
    zeros = ComplexSequence(np.zeros(512, dtype=complex), _FS)
    pa_out = pa_amplify(zeros, PaModel.default())
    ch_out = apply_si_channel(zeros, SiChannel(((0.5, 1), (0.1j, 3)), ((0.2, 2),)))
    vm = VectorModulatorState(2, 0.25, -0.125, 2.0**-13)
    vm_out = rfsic_path(zeros, vm, rng_seed=1)
    worst = max(np.max(np.abs(s.samples)) for s in (pa_out, ch_out, vm_out))
    return CheckResult("zero-in-zero-out", worst == 0.0, f"worst |out| = {worst:g}")


def _fir_oracle() -> CheckResult:
    rng = np.random.default_rng(3)
    x = rng.standard_normal(256) + 1j * rng.standard_normal(256)
    taps = ((0.8 + 0.1j, 0), (-0.3, 2), (0.05j, 7))
    out = apply_si_channel(ComplexSequence(x, _FS), SiChannel(taps)).samples
    brute = np.zeros_like(x)
    for n in range(x.size):
        for g, d in taps:
            if n - d >= 0:
                brute[n] += g * x[n - d]
    err = float(np.max(np.abs(out - brute)))
    return CheckResult("fir-convolution-oracle", err < 1e-12, f"max |diff| = {err:.2e}")


def _feedback_comb() -> CheckResult:
    g, d = 0.5 + 0.1j, 5
    ch = SiChannel(((1.0, 0),), ((g, d),))
    impulse = np.zeros(64, dtype=complex)
    impulse[0] = 1.0
    out = apply_si_channel(ComplexSequence(impulse, _FS), ch).samples
    expect = np.zeros_like(impulse)
    k = 0
    while k * d < impulse.size:
        expect[k * d] = g**k
        k += 1
    err = float(np.max(np.abs(out - expect)))
    return CheckResult("feedback-geometric-comb", err < 1e-12, f"max |diff| = {err:.2e}")


def _feedback_bounded() -> CheckResult:
    rng = np.random.default_rng(11)
    x = (rng.standard_normal(1_000_000) + 1j * rng.standard_normal(1_000_000)) / np.sqrt(2)
    ch = SiChannel(((1.0, 0),), ((0.55, 3), (0.35j, 7)))
    out = apply_si_channel(ComplexSequence(x, _FS), ch).samples
    power = float(np.mean(np.abs(out) ** 2))
    # gain bound for the loop: 1 / (1 - sum|h_fb|)^2 on amplitude
    bound = (1.0 / (1.0 - 0.9)) ** 2
    ok = np.isfinite(power) and power < bound
    return CheckResult("feedback-power-bounded", ok, f"power = {power:.3f}, bound {bound:.0f}")


def _regressor_shift() -> CheckResult:
    cfg = BasisConfig(nonlinearity_order=5, memory_depth=6)
    rng = np.random.default_rng(4)
    x = rng.standard_normal(200) + 1j * rng.standard_normal(200)
    phi = basis_generate(ComplexSequence(x, _FS), cfg)
    p = cfg.n_terms
    u_prev = np.zeros(cfg.n_coefficients, dtype=complex)
    worst = 0.0
    for i in range(phi.shape[0]):
        u = np.concatenate((phi[i], u_prev[:-p]))
        if i:
            worst = max(worst, float(np.max(np.abs(u[p:] - u_prev[: u.size - p]))))
        u_prev = u
    return CheckResult("regressor-shift-structure", worst == 0.0, f"max |shift diff| = {worst:g}")


def _dcd_dyadic() -> CheckResult:
    rng = np.random.default_rng(9)
    params = DcdParams(amplitude=1.0, bit_depth=12, max_updates=40)
    quantum = params.step_quantum
    worst = 0.0
    for _ in range(20):
        n = 6
        b = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        mat = b @ b.conj().T / n + np.eye(n)
        rhs = mat @ (0.3 * (rng.standard_normal(n) + 1j * rng.standard_normal(n)))
        dh, _ = dcd_solve(mat, rhs, params)
        grid = np.concatenate([dh.real, dh.imag]) / quantum
        worst = max(worst, float(np.max(np.abs(grid - np.round(grid)))))
    return CheckResult("dcd-dyadic-quantization", worst == 0.0, f"max grid offset = {worst:g}")


def _dcd_budget() -> CheckResult:
    rng = np.random.default_rng(10)
    params = DcdParams(amplitude=1.0, bit_depth=15, max_updates=16)
    ok = True
    worst = 0
    for _ in range(20):
        n = 8
        b = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        mat = b @ b.conj().T / n + np.eye(n)
        rhs = mat @ (0.3 * (rng.standard_normal(n) + 1j * rng.standard_normal(n)))
        counters = OpCounters()
        dcd_solve(mat, rhs, params, counters)
        bound = params.addition_bound(2 * n)
        ok &= counters.step_mults[4] == 0 and counters.step_adds[4] <= bound
        worst = max(worst, counters.step_adds[4])
    return CheckResult("dcd-budget", bool(ok), f"worst adds {worst} (bound {bound})")


def _tuner_monotone() -> CheckResult:
    rng = np.random.default_rng(12)
    x = generate_tx(WaveformConfig(n_subcarriers=256, n_active=84, cp_len=16, n_symbols=8), _FS)
    ok = True
    details = []
    for trial in range(3):
        g = 0.05 * (rng.standard_normal() + 1j * rng.standard_normal())
        ch = SiChannel(((g, trial),))
        si = apply_si_channel(x, ch)

        def objective(state):
            cancel = rfsic_path(x, state, rng_seed=77)
            return 10 * np.log10(np.mean(np.abs(si.samples + cancel.samples) ** 2) + 1e-30)

        start = VectorModulatorState.zero(2.0**-13, 0, -120.0)
        result = tune(objective, TunerConfig(max_evaluations=600, delay_grid=(0, 1, 2)), start)
        baseline = objective(start)
        ok &= result.power_db <= baseline + 1e-9
        steps = (result.state.gain_i / 2.0**-13, result.state.gain_q / 2.0**-13)
        ok &= abs(steps[0] - round(steps[0])) < 1e-9 and abs(steps[1] - round(steps[1])) < 1e-9
        details.append(f"{baseline - result.power_db:.1f} dB")
    return CheckResult("tuner-monotone-quantized", bool(ok), "improvements: " + ", ".join(details))


def _byte_identical_rerun() -> CheckResult:
    cfg = default_config().with_samples(8192)
    blobs = []
    for _ in range(2):
        result = run_rfsic_showcase(cfg)
        buf = io.StringIO()
        buf.write(result.report.render())
        for name in sorted(result.psd):
            freqs, power = result.psd[name]
            buf.write(name + "".join(f"{f:.3f}:{p:.6f};" for f, p in zip(freqs, power)))
        for entry in result.tuning.trace:
            buf.write(f"{entry.index},{entry.delay_samples},{entry.gain_i!r},{entry.gain_q!r},{entry.power_db!r};")
        blobs.append(buf.getvalue())
    same = blobs[0] == blobs[1]
    return CheckResult("byte-identical-rerun", same, f"{len(blobs[0])} chars compared")


def _whitening_identity() -> CheckResult:
    rng = np.random.default_rng(15)
    a = rng.standard_normal((5, 5)) + 1j * rng.standard_normal((5, 5))
    cov = a @ a.conj().T + 1e-3 * np.eye(5)
    t = whitening_from_covariance(cov)
    ident = t.transform @ cov @ t.transform.conj().T
    err = float(np.max(np.abs(ident - np.eye(5))))
    return CheckResult("whitening-identity", err < 1e-10, f"max |T Y T^H - I| = {err:.2e}")


ALL_CHECKS = (
    _zero_in_zero_out,
    _fir_oracle,
    _feedback_comb,
    _feedback_bounded,
    _regressor_shift,
    _dcd_dyadic,
    _dcd_budget,
    _whitening_identity,
    _tuner_monotone,
    _byte_identical_rerun,
)


def run_selftest(verbose: bool = True) -> list[CheckResult]:
    results = []
    for check in ALL_CHECKS:
        try:
            result = check()
        except SimulationError as exc:
            result = CheckResult(check.__name__.strip("_"), False, f"raised {exc!r}")
        results.append(result)
        if verbose:
            status = "PASS" if result.passed else "FAIL"
            print(f"[{status}] {result.name}: {result.detail}")
    return results
