"""Experiment configuration: typed sub-configs, defaults, and the flat
key-value config file format (dotted section keys, ``#`` comments).

The file format is deliberately diff-friendly so experiment provenance can
live next to results. ``format_config(parse_config(text))`` is stable, and
the shipped default config round-trips byte for byte.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .analog import PaModel, ReceiverConfig, SiChannel, VectorModulatorState, circulator_leakage_default
from .basis import BasisConfig
from .dcd import DcdParams
from .errors import ConfigError
from .tuner import TunerConfig
from .waveform import WaveformConfig

# Control grid of the two vector-modulator voltages (13-bit over +/-1).
DEFAULT_CONTROL_STEP = 2.0**-13


@dataclass(frozen=True)
class SeedConfig:
    """One seed per independent noise source; probes and the reported run
    use different canceller-path noise so the tuner optimizes a frozen
    surface but is scored on a fresh realization."""

    tx: int = 11
    soi: int = 12
    vm_probe: int = 13
    vm_noise: int = 14
    rx_noise: int = 15

    def offset(self, base: int) -> "SeedConfig":
        return SeedConfig(*(base + k for k in range(5)))


@dataclass(frozen=True)
class RfsicConfig:
    enabled: bool = True
    delay_samples: int = 0
    control_step: float = DEFAULT_CONTROL_STEP
    noise_power_db: float = -108.0
    tuner: TunerConfig = field(default_factory=TunerConfig)

    def start_state(self) -> VectorModulatorState:
        return VectorModulatorState.zero(
            self.control_step, self.delay_samples, self.noise_power_db
        )


@dataclass(frozen=True)
class DsicConfig:
    enabled: bool = True
    basis: BasisConfig = field(default_factory=BasisConfig)
    forgetting_factor: float = 0.9995
    regularization: float = 0.01
    dcd: DcdParams = field(default_factory=DcdParams)
    n_cov: int = 4096


@dataclass(frozen=True)
class SoiConfig:
    enabled: bool = True
    waveform: WaveformConfig = field(
        default_factory=lambda: WaveformConfig(n_active=167, occupied_bandwidth_hz=10e6)
    )
    power_db: float = -82.0


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything one showcase run needs, seeds included."""

    sample_rate_hz: float = 61.44e6
    n_samples: int = 131072
    full_scale_dbm: float = 20.0
    waveform: WaveformConfig = field(default_factory=WaveformConfig)
    pa: PaModel = field(default_factory=PaModel.default)
    channel: SiChannel = field(default_factory=circulator_leakage_default)
    rfsic: RfsicConfig = field(default_factory=RfsicConfig)
    rx: ReceiverConfig = field(default_factory=ReceiverConfig)
    rx_auto_scale: bool = True
    dsic: DsicConfig = field(default_factory=DsicConfig)
    dsic_attenuation_db: float = 30.0
    soi: SoiConfig = field(default_factory=SoiConfig)
    seeds: SeedConfig = field(default_factory=SeedConfig)

    def __post_init__(self):
        if self.n_samples < 1:
            raise ConfigError(f"n_samples must be positive, got {self.n_samples}")
        if self.waveform.n_samples < self.n_samples:
            raise ConfigError(
                f"waveform supplies {self.waveform.n_samples} samples, need {self.n_samples}"
            )
        if self.dsic.enabled and self.n_samples < self.dsic.n_cov:
            raise ConfigError(
                f"n_samples {self.n_samples} below covariance training block {self.dsic.n_cov}"
            )

    def with_seed_base(self, base: int) -> "ExperimentConfig":
        cfg = replace(self, seeds=self.seeds.offset(base))
        return replace(
            cfg,
            waveform=cfg.waveform.with_seed(cfg.seeds.tx),
            soi=replace(cfg.soi, waveform=cfg.soi.waveform.with_seed(cfg.seeds.soi)),
        )

    def with_samples(self, n_samples: int) -> "ExperimentConfig":
        wf = self.waveform
        need = math.ceil(n_samples / wf.samples_per_symbol)
        if wf.n_symbols < need:
            wf = replace(wf, n_symbols=need)
        soi_wf = self.soi.waveform
        need_soi = math.ceil(n_samples / soi_wf.samples_per_symbol)
        if soi_wf.n_symbols < need_soi:
            soi_wf = replace(soi_wf, n_symbols=need_soi)
        return replace(
            self,
            n_samples=n_samples,
            waveform=wf,
            soi=replace(self.soi, waveform=soi_wf),
        )


def default_config() -> ExperimentConfig:
    """The shipped leakage-budget configuration (also configs/table2.cfg)."""
    return ExperimentConfig()


# --- flat key-value serialization -------------------------------------------

def parse_config_text(text: str) -> dict[str, str]:
    """Parse ``key = value`` lines with ``#`` comments into a flat mapping."""
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key or not value:
            raise ConfigError(f"line {lineno}: empty key or value in {raw!r}")
        if key in out:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        out[key] = value
    return out


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        if value == -np.inf:
            return "-inf"
        return repr(value)
    if isinstance(value, complex):
        return _fmt_complex(value)
    return str(value)


def _fmt_complex(value: complex) -> str:
    sign = "+" if value.imag >= 0 else "-"
    return f"{repr(value.real)}{sign}{repr(abs(value.imag))}j"


def _parse_bool(value: str) -> bool:
    low = value.lower()
    if low in ("true", "1", "yes", "on"):
        return True
    if low in ("false", "0", "no", "off"):
        return False
    raise ConfigError(f"expected a boolean, got {value!r}")


def _parse_int_list(value: str) -> tuple[int, ...]:
    return tuple(int(tok) for tok in value.split(",") if tok.strip())


def config_to_mapping(cfg: ExperimentConfig) -> dict[str, str]:
    """Flatten an ExperimentConfig into the dotted-key text mapping."""
    out: dict[str, str] = {}
    out["sample_rate_hz"] = _fmt(cfg.sample_rate_hz)
    out["n_samples"] = _fmt(cfg.n_samples)
    out["full_scale_dbm"] = _fmt(cfg.full_scale_dbm)

    wf = cfg.waveform
    for name in ("n_subcarriers", "n_active", "cp_len", "n_symbols"):
        out[f"waveform.{name}"] = _fmt(getattr(wf, name))
    out["waveform.occupied_bandwidth_hz"] = _fmt(wf.occupied_bandwidth_hz)

    for (p, m), c in sorted(cfg.pa.to_terms().items()):
        out[f"pa.coef.{p}.{m}"] = _fmt_complex(c)

    for i, (g, d) in enumerate(cfg.channel.forward_taps):
        out[f"channel.forward.{i}.delay"] = _fmt(d)
        out[f"channel.forward.{i}.gain"] = _fmt_complex(g)
    for i, (g, d) in enumerate(cfg.channel.feedback_taps):
        out[f"channel.feedback.{i}.delay"] = _fmt(d)
        out[f"channel.feedback.{i}.gain"] = _fmt_complex(g)

    out["rfsic.enabled"] = _fmt(cfg.rfsic.enabled)
    out["rfsic.delay_samples"] = _fmt(cfg.rfsic.delay_samples)
    out["rfsic.control_step"] = _fmt(cfg.rfsic.control_step)
    out["rfsic.noise_power_db"] = _fmt(cfg.rfsic.noise_power_db)
    tn = cfg.rfsic.tuner
    out["tuner.initial_step"] = _fmt(tn.initial_step)
    out["tuner.min_step"] = _fmt(tn.min_step)
    out["tuner.max_evaluations"] = _fmt(tn.max_evaluations)
    out["tuner.probe_len"] = _fmt(tn.probe_len)
    out["tuner.delay_grid"] = ",".join(str(d) for d in tn.delay_grid)

    out["rx.noise_floor_db"] = _fmt(cfg.rx.noise_floor_db)
    out["rx.adc_bits"] = _fmt(cfg.rx.adc_bits)
    out["rx.adc_full_scale"] = "auto" if cfg.rx_auto_scale else _fmt(cfg.rx.adc_full_scale)

    ds = cfg.dsic
    out["dsic.enabled"] = _fmt(ds.enabled)
    out["dsic.nonlinearity_order"] = _fmt(ds.basis.nonlinearity_order)
    out["dsic.memory_depth"] = _fmt(ds.basis.memory_depth)
    out["dsic.include_even_orders"] = _fmt(ds.basis.include_even_orders)
    out["dsic.forgetting_factor"] = _fmt(ds.forgetting_factor)
    out["dsic.regularization"] = _fmt(ds.regularization)
    out["dsic.dcd_amplitude"] = _fmt(ds.dcd.amplitude)
    out["dsic.dcd_bit_depth"] = _fmt(ds.dcd.bit_depth)
    out["dsic.dcd_max_updates"] = _fmt(ds.dcd.max_updates)
    out["dsic.n_cov"] = _fmt(ds.n_cov)
    out["dsic.attenuation_db"] = _fmt(cfg.dsic_attenuation_db)

    out["soi.enabled"] = _fmt(cfg.soi.enabled)
    out["soi.power_db"] = _fmt(cfg.soi.power_db)
    swf = cfg.soi.waveform
    for name in ("n_subcarriers", "n_active", "cp_len", "n_symbols"):
        out[f"soi.waveform.{name}"] = _fmt(getattr(swf, name))
    out["soi.waveform.occupied_bandwidth_hz"] = _fmt(swf.occupied_bandwidth_hz)

    for name in ("tx", "soi", "vm_probe", "vm_noise", "rx_noise"):
        out[f"seeds.{name}"] = _fmt(getattr(cfg.seeds, name))
    return out


def config_from_mapping(mapping: dict[str, str]) -> ExperimentConfig:
    """Build an ExperimentConfig from a flat mapping, defaulting absent keys."""
    base = default_config()
    todo = dict(mapping)

    def take(key: str, conv, fallback):
        if key in todo:
            raw = todo.pop(key)
            try:
                return conv(raw)
            except (ValueError, TypeError) as exc:
                raise ConfigError(f"bad value for {key}: {raw!r} ({exc})") from exc
        return fallback

    sample_rate = take("sample_rate_hz", float, base.sample_rate_hz)
    n_samples = take("n_samples", int, base.n_samples)
    full_scale_dbm = take("full_scale_dbm", float, base.full_scale_dbm)

    seeds = SeedConfig(
        tx=take("seeds.tx", int, base.seeds.tx),
        soi=take("seeds.soi", int, base.seeds.soi),
        vm_probe=take("seeds.vm_probe", int, base.seeds.vm_probe),
        vm_noise=take("seeds.vm_noise", int, base.seeds.vm_noise),
        rx_noise=take("seeds.rx_noise", int, base.seeds.rx_noise),
    )

    wf = WaveformConfig(
        n_subcarriers=take("waveform.n_subcarriers", int, base.waveform.n_subcarriers),
        n_active=take("waveform.n_active", int, base.waveform.n_active),
        cp_len=take("waveform.cp_len", int, base.waveform.cp_len),
        n_symbols=take("waveform.n_symbols", int, base.waveform.n_symbols),
        occupied_bandwidth_hz=take(
            "waveform.occupied_bandwidth_hz", float, base.waveform.occupied_bandwidth_hz
        ),
        rng_seed=seeds.tx,
    )

    pa_terms: dict[tuple[int, int], complex] = {}
    for key in [k for k in todo if k.startswith("pa.coef.")]:
        parts = key.split(".")
        if len(parts) != 4:
            raise ConfigError(f"bad PA coefficient key {key!r}, expected pa.coef.<order>.<tap>")
        pa_terms[(int(parts[2]), int(parts[3]))] = complex(todo.pop(key))
    pa = PaModel.from_terms(pa_terms) if pa_terms else base.pa

    def collect_taps(prefix: str) -> tuple[tuple[complex, int], ...] | None:
        keys = [k for k in todo if k.startswith(prefix)]
        if not keys:
            return None
        indices = sorted({int(k.split(".")[2]) for k in keys})
        taps = []
        for i in indices:
            delay = int(todo.pop(f"{prefix}{i}.delay"))
            gain = complex(todo.pop(f"{prefix}{i}.gain"))
            taps.append((gain, delay))
        return tuple(taps)

    fwd = collect_taps("channel.forward.")
    fb = collect_taps("channel.feedback.")
    if fwd is None and fb is None:
        channel = base.channel
    else:
        channel = SiChannel(
            forward_taps=fwd if fwd is not None else base.channel.forward_taps,
            feedback_taps=fb if fb is not None else (),
        )

    tuner = TunerConfig(
        initial_step=take("tuner.initial_step", float, base.rfsic.tuner.initial_step),
        min_step=take("tuner.min_step", float, base.rfsic.tuner.min_step),
        max_evaluations=take("tuner.max_evaluations", int, base.rfsic.tuner.max_evaluations),
        probe_len=take("tuner.probe_len", int, base.rfsic.tuner.probe_len),
        delay_grid=take("tuner.delay_grid", _parse_int_list, base.rfsic.tuner.delay_grid),
    )
    rfsic = RfsicConfig(
        enabled=take("rfsic.enabled", _parse_bool, base.rfsic.enabled),
        delay_samples=take("rfsic.delay_samples", int, base.rfsic.delay_samples),
        control_step=take("rfsic.control_step", float, base.rfsic.control_step),
        noise_power_db=take("rfsic.noise_power_db", float, base.rfsic.noise_power_db),
        tuner=tuner,
    )

    fs_raw = todo.pop("rx.adc_full_scale", "auto" if base.rx_auto_scale else str(base.rx.adc_full_scale))
    rx_auto = fs_raw.strip().lower() == "auto"
    rx = ReceiverConfig(
        noise_floor_db=take("rx.noise_floor_db", float, base.rx.noise_floor_db),
        adc_bits=take("rx.adc_bits", int, base.rx.adc_bits),
        adc_full_scale=1.0 if rx_auto else float(fs_raw),
    )

    dsic = DsicConfig(
        enabled=take("dsic.enabled", _parse_bool, base.dsic.enabled),
        basis=BasisConfig(
            nonlinearity_order=take("dsic.nonlinearity_order", int, base.dsic.basis.nonlinearity_order),
            memory_depth=take("dsic.memory_depth", int, base.dsic.basis.memory_depth),
            include_even_orders=take(
                "dsic.include_even_orders", _parse_bool, base.dsic.basis.include_even_orders
            ),
        ),
        forgetting_factor=take("dsic.forgetting_factor", float, base.dsic.forgetting_factor),
        regularization=take("dsic.regularization", float, base.dsic.regularization),
        dcd=DcdParams(
            amplitude=take("dsic.dcd_amplitude", float, base.dsic.dcd.amplitude),
            bit_depth=take("dsic.dcd_bit_depth", int, base.dsic.dcd.bit_depth),
            max_updates=take("dsic.dcd_max_updates", int, base.dsic.dcd.max_updates),
        ),
        n_cov=take("dsic.n_cov", int, base.dsic.n_cov),
    )
    dsic_attenuation_db = take("dsic.attenuation_db", float, base.dsic_attenuation_db)

    soi_wf = WaveformConfig(
        n_subcarriers=take("soi.waveform.n_subcarriers", int, base.soi.waveform.n_subcarriers),
        n_active=take("soi.waveform.n_active", int, base.soi.waveform.n_active),
        cp_len=take("soi.waveform.cp_len", int, base.soi.waveform.cp_len),
        n_symbols=take("soi.waveform.n_symbols", int, base.soi.waveform.n_symbols),
        occupied_bandwidth_hz=take(
            "soi.waveform.occupied_bandwidth_hz", float, base.soi.waveform.occupied_bandwidth_hz
        ),
        rng_seed=seeds.soi,
    )
    soi = SoiConfig(
        enabled=take("soi.enabled", _parse_bool, base.soi.enabled),
        waveform=soi_wf,
        power_db=take("soi.power_db", float, base.soi.power_db),
    )

    if todo:
        unknown = ", ".join(sorted(todo))
        raise ConfigError(f"unknown config keys: {unknown}")

    return ExperimentConfig(
        sample_rate_hz=sample_rate,
        n_samples=n_samples,
        full_scale_dbm=full_scale_dbm,
        waveform=wf,
        pa=pa,
        channel=channel,
        rfsic=rfsic,
        rx=rx,
        rx_auto_scale=rx_auto,
        dsic=dsic,
        dsic_attenuation_db=dsic_attenuation_db,
        soi=soi,
        seeds=seeds,
    )


def format_config(cfg: ExperimentConfig) -> str:
    lines = [f"{key} = {value}" for key, value in config_to_mapping(cfg).items()]
    return "\n".join(lines) + "\n"


def load_config(path) -> ExperimentConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return config_from_mapping(parse_config_text(fh.read()))


def save_config(cfg: ExperimentConfig, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(format_config(cfg))
