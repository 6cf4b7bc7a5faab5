"""Seeded CP-OFDM baseband generation for the transmit signal and the SoI.

QPSK on the active subcarriers, inverse-DFT synthesis, cyclic prefix, then a
containment lowpass so the spectrum actually stays inside the configured
occupied band: plain rectangular-pulse OFDM shoulders sit only ~20 dB down,
far short of the 30 dB containment target.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy import signal as sps

from .errors import ConfigError
from .sequence import ComplexSequence

_QPSK = np.array([1 + 1j, 1 - 1j, -1 + 1j, -1 - 1j]) / np.sqrt(2.0)

# Containment filter: stopband starts this fraction of the half-bandwidth past
# the band edge (floored at a few subcarrier spacings so small FFT sizes keep a
# short filter), with at least this much attenuation. No filtering near full
# occupancy.
_TRANSITION_FRACTION = 0.08
_MIN_TRANSITION_SPACINGS = 4.0
_STOPBAND_DB = 60.0
_FILTER_SKIP_OCCUPANCY = 0.95


@dataclass(frozen=True)
class WaveformConfig:
    """Multicarrier waveform parameters.

    ``n_active`` subcarriers are placed symmetrically around (and excluding)
    DC, so the occupied bandwidth is ``n_active / n_subcarriers`` of the
    sample rate. ``for_bandwidth`` keeps the two representations consistent.
    """

    n_subcarriers: int = 1024
    n_active: int = 333
    cp_len: int = 72
    n_symbols: int = 120
    occupied_bandwidth_hz: float = 20e6
    rng_seed: int = 1

    @classmethod
    def for_bandwidth(
        cls,
        occupied_bandwidth_hz: float,
        sample_rate_hz: float,
        n_subcarriers: int = 1024,
        cp_len: int = 72,
        n_symbols: int = 120,
        rng_seed: int = 1,
    ) -> "WaveformConfig":
        """Config whose active-carrier count matches the requested bandwidth."""
        if not 0 < occupied_bandwidth_hz <= sample_rate_hz:
            raise ConfigError(
                f"occupied bandwidth {occupied_bandwidth_hz} must lie in (0, {sample_rate_hz}]"
            )
        spacing = sample_rate_hz / n_subcarriers
        n_active = int(round(occupied_bandwidth_hz / spacing))
        n_active = max(1, min(n_active, n_subcarriers - 1))
        return cls(
            n_subcarriers=n_subcarriers,
            n_active=n_active,
            cp_len=cp_len,
            n_symbols=n_symbols,
            occupied_bandwidth_hz=occupied_bandwidth_hz,
            rng_seed=rng_seed,
        )

    def with_seed(self, rng_seed: int) -> "WaveformConfig":
        return replace(self, rng_seed=rng_seed)

    @property
    def samples_per_symbol(self) -> int:
        return self.n_subcarriers + self.cp_len

    @property
    def n_samples(self) -> int:
        return self.n_symbols * self.samples_per_symbol

    def validate(self, sample_rate_hz: float) -> None:
        if self.n_subcarriers < 2:
            raise ConfigError(f"n_subcarriers must be >= 2, got {self.n_subcarriers}")
        if not 1 <= self.n_active <= self.n_subcarriers - 1:
            raise ConfigError(
                f"n_active must be in [1, {self.n_subcarriers - 1}], got {self.n_active}"
            )
        if self.cp_len < 0:
            raise ConfigError(f"cp_len must be nonnegative, got {self.cp_len}")
        if self.n_symbols < 1:
            raise ConfigError(f"n_symbols must be positive, got {self.n_symbols}")
        if sample_rate_hz <= 0:
            raise ConfigError(f"sample rate must be positive, got {sample_rate_hz}")
        if not 0 < self.occupied_bandwidth_hz <= sample_rate_hz:
            raise ConfigError(
                f"occupied bandwidth {self.occupied_bandwidth_hz} exceeds sample rate {sample_rate_hz}"
            )


def _active_bins(n_subcarriers: int, n_active: int) -> np.ndarray:
    """FFT bin indices of the active carriers, split around DC (DC unused)."""
    n_pos = (n_active + 1) // 2
    n_neg = n_active - n_pos
    pos = np.arange(1, n_pos + 1)
    neg = np.arange(-n_neg, 0)
    return np.concatenate([pos, neg]) % n_subcarriers


def _containment_filter(config: WaveformConfig, sample_rate_hz: float) -> np.ndarray | None:
    half_bw = config.occupied_bandwidth_hz / 2.0
    if config.occupied_bandwidth_hz >= _FILTER_SKIP_OCCUPANCY * sample_rate_hz:
        return None
    spacing = sample_rate_hz / config.n_subcarriers
    transition = max(half_bw * _TRANSITION_FRACTION, _MIN_TRANSITION_SPACINGS * spacing)
    transition = min(transition, sample_rate_hz / 2.0 - half_bw)
    if transition <= 0:
        return None
    numtaps, beta = sps.kaiserord(_STOPBAND_DB, transition / (sample_rate_hz / 2.0))
    numtaps |= 1  # symmetric linear-phase filter
    return sps.firwin(
        numtaps, half_bw + transition / 2.0, window=("kaiser", beta), fs=sample_rate_hz
    )


def _synthesize(config: WaveformConfig, sample_rate_hz: float) -> np.ndarray:
    """IFFT symbols with cyclic prefix, then the containment lowpass."""
    nfft, cp = config.n_subcarriers, config.cp_len
    rng = np.random.default_rng(config.rng_seed)
    symbols = _QPSK[rng.integers(0, 4, size=(config.n_symbols, config.n_active))]

    grid = np.zeros((config.n_symbols, nfft), dtype=np.complex128)
    grid[:, _active_bins(nfft, config.n_active)] = symbols
    blocks = np.fft.ifft(grid, axis=1)
    with_cp = np.concatenate([blocks[:, nfft - cp :], blocks], axis=1) if cp else blocks
    out = with_cp.reshape(-1)

    taps = _containment_filter(config, sample_rate_hz)
    if taps is not None:
        # zero-phase trim keeps symbol boundaries roughly in place
        full = sps.fftconvolve(out, taps.astype(np.complex128), mode="full")
        delay = (taps.size - 1) // 2
        out = full[delay : delay + out.size]
    return out


def generate_tx(config: WaveformConfig, sample_rate_hz: float) -> ComplexSequence:
    """Deterministic transmit waveform, peak-normalized to full scale."""
    config.validate(sample_rate_hz)
    x = _synthesize(config, sample_rate_hz)
    x /= np.max(np.abs(x))
    return ComplexSequence(x, sample_rate_hz)


def generate_soi(config: WaveformConfig, sample_rate_hz: float, power_db: float) -> ComplexSequence:
    """Signal-of-interest waveform scaled to the requested mean power in dBFS."""
    config.validate(sample_rate_hz)
    if not np.isfinite(power_db):
        raise ConfigError(f"SoI power must be finite, got {power_db}")
    x = _synthesize(config, sample_rate_hz)
    rms = np.sqrt(np.mean(np.abs(x) ** 2))
    x *= 10.0 ** (power_db / 20.0) / rms
    peak = np.max(np.abs(x))
    if peak > 1.0:
        raise ConfigError(
            f"requested SoI power {power_db:.1f} dBFS leaves no headroom (peak {peak:.3g} > 1)"
        )
    return ComplexSequence(x, sample_rate_hz)
