"""Showcase experiments: RF-only, digital-only, and the combined budget run.

Each runner builds the signal chain from an ExperimentConfig, measures the
per-stage powers, and returns a CancellationReport plus the PSD and residual
traces. Analog stage powers are taken before the converter; the digital
residual is measured on the second half of the stream, past adaptation.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .analog import (
    ReceiverConfig,
    apply_si_channel,
    combine_at_lna,
    pa_amplify,
    receive,
    rfsic_path,
)
from .basis import BasisConfig
from .canceller import CancellationResult, cancel_stream, convergence_sample
from .config import ExperimentConfig, config_to_mapping
from .dcd import OpCounters
from .errors import ConfigError
from .measure import band_power_db, measure_power, power_db_to_dbm, psd_estimate
from .rls import per_sample_counts
from .sequence import ComplexSequence
from .tuner import TuneResult, tune
from .waveform import generate_soi, generate_tx

# Headroom between the strongest I/Q excursion and the converter rail when
# the receiver gain is auto-ranged (emulates adapting the receiver gain).
_AGC_HEADROOM = 1.25

_TRANSIENT_FRACTION = 0.5


@dataclass
class StagePower:
    name: str
    power_db: float


@dataclass
class CancellationReport:
    """Per-stage powers and cancellation figures for one experiment."""

    stages: list[StagePower]
    full_scale_dbm: float
    clip_count: int = 0
    convergence_index: int = -1
    soi_power_db: float | None = None
    soi_margin_db: float | None = None
    counters: OpCounters | None = None
    closed_form_counts: dict[str, str] = field(default_factory=dict)

    @property
    def cancellations(self) -> list[tuple[str, float]]:
        out = []
        for prev, cur in zip(self.stages, self.stages[1:]):
            out.append((cur.name, prev.power_db - cur.power_db))
        return out

    @property
    def total_cancellation_db(self) -> float:
        return self.stages[0].power_db - self.stages[-1].power_db

    def stage(self, name: str) -> float:
        for entry in self.stages:
            if entry.name == name:
                return entry.power_db
        raise KeyError(name)

    def cancellation(self, name: str) -> float:
        for stage_name, value in self.cancellations:
            if stage_name == name:
                return value
        raise KeyError(name)

    def to_key_values(self) -> dict[str, str]:
        out: dict[str, str] = {}
        for entry in self.stages:
            out[f"stage_power_dbfs.{entry.name}"] = _fmt_db(entry.power_db)
            out[f"stage_power_dbm.{entry.name}"] = _fmt_db(
                power_db_to_dbm(entry.power_db, self.full_scale_dbm)
            )
        for name, value in self.cancellations:
            out[f"cancellation_db.{name}"] = _fmt_db(value)
        out["cancellation_db.total"] = _fmt_db(self.total_cancellation_db)
        out["clip_count"] = str(self.clip_count)
        out["convergence_sample"] = str(self.convergence_index)
        if self.soi_power_db is not None:
            out["soi_power_dbfs"] = _fmt_db(self.soi_power_db)
        if self.soi_margin_db is not None:
            out["soi_margin_db"] = _fmt_db(self.soi_margin_db)
        if self.counters is not None:
            out["counters.real_mults"] = str(self.counters.real_mults)
            out["counters.real_adds"] = str(self.counters.real_adds)
            for step in sorted(self.counters.step_mults):
                out[f"counters.step{step}.real_mults"] = str(self.counters.step_mults[step])
                out[f"counters.step{step}.real_adds"] = str(self.counters.step_adds[step])
        out.update(self.closed_form_counts)
        return out

    def render(self) -> str:
        return "\n".join(f"{k} = {v}" for k, v in self.to_key_values().items()) + "\n"


def _fmt_db(value: float) -> str:
    if value == -np.inf:
        return "-inf"  # below measurement floor
    return f"{value:.2f}"


@dataclass
class ShowcaseResult:
    report: CancellationReport
    psd: dict[str, tuple[np.ndarray, np.ndarray]]
    residual_trace: np.ndarray | None = None
    tuning: TuneResult | None = None
    cancellation: CancellationResult | None = None


def _tx_chain(cfg: ExperimentConfig):
    x = generate_tx(cfg.waveform, cfg.sample_rate_hz)
    x = x.like(x.samples[: cfg.n_samples])
    y_pa = pa_amplify(x, cfg.pa)
    si = apply_si_channel(y_pa, cfg.channel)
    return x, y_pa, si


def _tune_rfsic(cfg: ExperimentConfig, y_pa: ComplexSequence, si: ComplexSequence) -> TuneResult:
    probe_len = min(cfg.rfsic.tuner.probe_len, len(si))
    si_probe = si.samples[:probe_len]
    y_probe = y_pa.like(y_pa.samples[:probe_len])

    def objective(state) -> float:
        cancel = rfsic_path(y_probe, state, cfg.seeds.vm_probe)
        residual = si_probe + cancel.samples
        power = float(np.mean(np.abs(residual) ** 2))
        return 10.0 * np.log10(power) if power > 0 else -np.inf

    return tune(objective, cfg.rfsic.tuner, cfg.rfsic.start_state())


def _receiver_for(cfg: ExperimentConfig, analog: ComplexSequence) -> ReceiverConfig:
    if not cfg.rx_auto_scale:
        return cfg.rx
    peak = max(
        float(np.max(np.abs(analog.samples.real))),
        float(np.max(np.abs(analog.samples.imag))),
    )
    if peak == 0.0:
        peak = 1.0
    return replace(cfg.rx, adc_full_scale=peak * _AGC_HEADROOM)


def _skip(n: int) -> int:
    return int(n * _TRANSIENT_FRACTION)


def _closed_form_counts(basis: BasisConfig) -> dict[str, str]:
    """Per-sample closed forms under both term-count readings: the generated
    basis block versus the full order ladder."""
    out: dict[str, str] = {}
    generated = per_sample_counts(basis.memory_depth, basis.n_terms)
    full_ladder = per_sample_counts(basis.memory_depth, basis.nonlinearity_order)
    for label, table in (("generated_terms", generated), ("all_orders", full_ladder)):
        mults = sum(m for m, _ in table.values())
        adds = sum(a for _, a in table.values())
        out[f"counters.per_sample.{label}.real_mults"] = str(mults)
        out[f"counters.per_sample.{label}.real_adds"] = str(adds)
    return out


def run_rfsic_showcase(cfg: ExperimentConfig) -> ShowcaseResult:
    """RF cancellation only: tune the vector modulator, report the analog stages."""
    if not cfg.rfsic.enabled:
        raise ConfigError("rfsic showcase needs rfsic.enabled = true")
    x, y_pa, si = _tx_chain(cfg)
    tuning = _tune_rfsic(cfg, y_pa, si)
    cancel = rfsic_path(y_pa, tuning.state, cfg.seeds.vm_noise)
    after_rfsic = si.like(si.samples + cancel.samples)

    report = CancellationReport(
        stages=[
            StagePower("tx_after_pa", measure_power(y_pa)),
            StagePower("si_after_circulator", measure_power(si)),
            StagePower("si_after_rfsic", measure_power(after_rfsic)),
        ],
        full_scale_dbm=cfg.full_scale_dbm,
    )
    psd = {
        "tx_after_pa": psd_estimate(y_pa),
        "si_after_circulator": psd_estimate(si),
        "si_after_rfsic": psd_estimate(after_rfsic),
    }
    return ShowcaseResult(report=report, psd=psd, tuning=tuning)


def run_dsic_showcase(cfg: ExperimentConfig) -> ShowcaseResult:
    """Digital cancellation only: canceller path off, transmit attenuated to
    keep the converter out of saturation, adaptive canceller on."""
    if not cfg.dsic.enabled:
        raise ConfigError("dsic showcase needs dsic.enabled = true")
    x, y_pa, _ = _tx_chain(cfg)
    atten = 10.0 ** (-cfg.dsic_attenuation_db / 20.0)
    y_att = y_pa.like(y_pa.samples * atten)
    si = apply_si_channel(y_att, cfg.channel)

    rx_cfg = _receiver_for(cfg, si)
    digital, clips = receive(si, rx_cfg, cfg.seeds.rx_noise)
    result = cancel_stream(
        digital,
        x,
        cfg.dsic.basis,
        forgetting=cfg.dsic.forgetting_factor,
        regularization=cfg.dsic.regularization,
        dcd=cfg.dsic.dcd,
        n_cov=cfg.dsic.n_cov,
    )
    skip = _skip(cfg.n_samples)
    report = CancellationReport(
        stages=[
            StagePower("tx_after_pa", measure_power(y_pa)),
            StagePower("dsic_input", measure_power(digital)),
            StagePower("si_after_dsic", measure_power(result.residual, skip=skip)),
        ],
        full_scale_dbm=cfg.full_scale_dbm,
        clip_count=clips,
        convergence_index=convergence_sample(result.residual_power),
        counters=result.counters,
        closed_form_counts=_closed_form_counts(cfg.dsic.basis),
    )
    psd = {
        "tx_after_pa": psd_estimate(y_pa),
        "dsic_input": psd_estimate(digital),
        "si_after_dsic": psd_estimate(result.residual),
    }
    return ShowcaseResult(
        report=report,
        psd=psd,
        residual_trace=result.residual_power,
        cancellation=result,
    )


def run_combined_showcase(cfg: ExperimentConfig) -> ShowcaseResult:
    """Full chain: RF canceller tuned and frozen, SoI received during
    transmission, digital canceller adapting on the digitized stream."""
    if not (cfg.rfsic.enabled and cfg.dsic.enabled):
        raise ConfigError("combined showcase needs both cancellers enabled")
    x, y_pa, si = _tx_chain(cfg)
    tuning = _tune_rfsic(cfg, y_pa, si)
    cancel = rfsic_path(y_pa, tuning.state, cfg.seeds.vm_noise)
    after_rfsic = si.like(si.samples + cancel.samples)

    if cfg.soi.enabled:
        soi = generate_soi(cfg.soi.waveform, cfg.sample_rate_hz, cfg.soi.power_db)
        soi = soi.like(soi.samples[: cfg.n_samples])
    else:
        soi = si.like(np.zeros(cfg.n_samples, dtype=np.complex128))
    lna_input = combine_at_lna(after_rfsic, si.like(np.zeros_like(si.samples)), soi)

    rx_cfg = _receiver_for(cfg, lna_input)
    digital, clips = receive(lna_input, rx_cfg, cfg.seeds.rx_noise)
    result = cancel_stream(
        digital,
        x,
        cfg.dsic.basis,
        forgetting=cfg.dsic.forgetting_factor,
        regularization=cfg.dsic.regularization,
        dcd=cfg.dsic.dcd,
        n_cov=cfg.dsic.n_cov,
    )

    # Residual SI excludes the SoI so the stage figure mirrors a measurement
    # made without a far-end transmitter.
    residual_si = result.residual.samples - soi.samples
    residual_si_power = np.abs(residual_si) ** 2
    skip = _skip(cfg.n_samples)
    after_dsic_db = 10.0 * np.log10(np.mean(residual_si_power[skip:]))

    soi_power_db = measure_power(soi) if cfg.soi.enabled else None
    soi_margin_db = None
    if cfg.soi.enabled:
        bw = cfg.soi.waveform.occupied_bandwidth_hz / 2.0
        freqs, soi_psd = psd_estimate(soi)
        _, res_psd = psd_estimate(soi.like(residual_si))
        soi_band = band_power_db(freqs, soi_psd, -bw, bw)
        res_band = band_power_db(freqs, res_psd, -bw, bw)
        soi_margin_db = soi_band - res_band

    report = CancellationReport(
        stages=[
            StagePower("tx_after_pa", measure_power(y_pa)),
            StagePower("si_after_circulator", measure_power(si)),
            StagePower("si_after_rfsic", measure_power(after_rfsic)),
            StagePower("si_after_dsic", after_dsic_db),
        ],
        full_scale_dbm=cfg.full_scale_dbm,
        clip_count=clips,
        convergence_index=convergence_sample(residual_si_power),
        soi_power_db=soi_power_db,
        soi_margin_db=soi_margin_db,
        counters=result.counters,
        closed_form_counts=_closed_form_counts(cfg.dsic.basis),
    )
    psd = {
        "tx_after_pa": psd_estimate(y_pa),
        "si_after_circulator": psd_estimate(si),
        "si_after_rfsic": psd_estimate(after_rfsic),
        "after_dsic": psd_estimate(result.residual),
        "residual_si": psd_estimate(soi.like(residual_si)),
    }
    return ShowcaseResult(
        report=report,
        psd=psd,
        residual_trace=residual_si_power,
        tuning=tuning,
        cancellation=result,
    )


# --- sweep -------------------------------------------------------------------

@dataclass(frozen=True)
class SweepGrid:
    forgetting_factors: tuple[float, ...] = (0.999, 0.9995)
    nonlinearity_orders: tuple[int, ...] = (1, 5)
    memory_depths: tuple[int, ...] = (8, 12)
    max_updates: tuple[int, ...] = (8,)

    def cells(self) -> list[tuple[float, int, int, int]]:
        return [
            (lam, order, depth, updates)
            for lam in self.forgetting_factors
            for order in self.nonlinearity_orders
            for depth in self.memory_depths
            for updates in self.max_updates
        ]


def _sweep_cell(args) -> dict[str, str]:
    cfg, lam, order, depth, updates = args
    cell_cfg = replace(
        cfg,
        dsic=replace(
            cfg.dsic,
            basis=replace(cfg.dsic.basis, nonlinearity_order=order, memory_depth=depth),
            forgetting_factor=lam,
            dcd=replace(cfg.dsic.dcd, max_updates=updates),
        ),
    )
    result = run_dsic_showcase(cell_cfg)
    report = result.report
    return {
        "forgetting_factor": repr(lam),
        "nonlinearity_order": str(order),
        "memory_depth": str(depth),
        "dcd_max_updates": str(updates),
        "si_after_dsic_dbfs": _fmt_db(report.stage("si_after_dsic")),
        "dsic_cancellation_db": _fmt_db(report.cancellation("si_after_dsic")),
        "convergence_sample": str(report.convergence_index),
        "real_mults": str(report.counters.real_mults),
        "real_adds": str(report.counters.real_adds),
    }


def run_sweep(cfg: ExperimentConfig, grid: SweepGrid, jobs: int = 1) -> list[dict[str, str]]:
    """Digital-canceller parameter sweep; cells are independent runs."""
    tasks = [(cfg, *cell) for cell in grid.cells()]
    if jobs <= 1:
        return [_sweep_cell(task) for task in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_sweep_cell, tasks))


# --- persistence --------------------------------------------------------------

def write_report(path, report: CancellationReport) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(report.render())


def write_psd_csv(path, freqs_hz: np.ndarray, power_db: np.ndarray) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("freq_hz,power_db\n")
        for f, p in zip(freqs_hz, power_db):
            fh.write(f"{f:.3f},{_fmt_db(float(p))}\n")


def write_trace_csv(path, residual_power: np.ndarray) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("sample_index,residual_power_db\n")
        with np.errstate(divide="ignore"):
            power_db = 10.0 * np.log10(residual_power)
        for i, p in enumerate(power_db):
            fh.write(f"{i},{_fmt_db(float(p))}\n")


def write_tuner_csv(path, tuning: TuneResult) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("evaluation,delay_samples,gain_i,gain_q,power_db\n")
        for entry in tuning.trace:
            fh.write(
                f"{entry.index},{entry.delay_samples},{entry.gain_i!r},"
                f"{entry.gain_q!r},{_fmt_db(entry.power_db)}\n"
            )


def write_sweep_csv(path, rows: list[dict[str, str]]) -> None:
    if not rows:
        raise ConfigError("sweep produced no rows")
    header = list(rows[0].keys())
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(row[k] for k in header) + "\n")


def write_outputs(out_dir, result: ShowcaseResult, cfg: ExperimentConfig) -> None:
    """Write the report, PSD tables, and traces for a showcase run."""
    os.makedirs(out_dir, exist_ok=True)
    write_report(os.path.join(out_dir, "report.txt"), result.report)
    with open(os.path.join(out_dir, "config_used.cfg"), "w", encoding="utf-8", newline="\n") as fh:
        for key, value in config_to_mapping(cfg).items():
            fh.write(f"{key} = {value}\n")
    for name, (freqs, power_db) in result.psd.items():
        write_psd_csv(os.path.join(out_dir, f"psd_{name}.csv"), freqs, power_db)
    if result.residual_trace is not None:
        write_trace_csv(os.path.join(out_dir, "residual_trace.csv"), result.residual_trace)
    if result.tuning is not None:
        write_tuner_csv(os.path.join(out_dir, "tuner_trace.csv"), result.tuning)
