"""Power and spectrum measurements used by tests and the experiment harness."""

from __future__ import annotations

import numpy as np
from scipy import signal as sps

from .errors import ConfigError
from .sequence import ComplexSequence


def measure_power(seq: ComplexSequence, skip: int = 0) -> float:
    """Mean power in dB (dBFS) over the samples after ``skip``.

    All-zero input returns ``-inf``, the below-measurement-floor sentinel.
    """
    if skip < 0 or skip >= len(seq):
        raise ConfigError(f"skip {skip} leaves no samples to measure (length {len(seq)})")
    p = float(np.mean(np.abs(seq.samples[skip:]) ** 2))
    if p == 0.0:
        return -np.inf
    return 10.0 * np.log10(p)


def psd_estimate(
    seq: ComplexSequence, nfft: int = 1024, overlap_fraction: float = 0.5
) -> tuple[np.ndarray, np.ndarray]:
    """Averaged Hann-windowed periodogram of a complex baseband sequence.

    Returns ``(freqs_hz, power_db)`` centered at 0 Hz. Entries are per-bin
    powers, so the linear bin powers sum to the sequence's mean power
    (Parseval, within the estimator's leakage).
    """
    if nfft < 2:
        raise ConfigError(f"nfft must be >= 2, got {nfft}")
    if nfft > len(seq):
        raise ConfigError(f"nfft {nfft} larger than sequence length {len(seq)}")
    if not 0.0 <= overlap_fraction < 1.0:
        raise ConfigError(f"overlap fraction must be in [0, 1), got {overlap_fraction}")
    fs = seq.sample_rate_hz
    freqs, pxx = sps.welch(
        seq.samples,
        fs=fs,
        window="hann",
        nperseg=nfft,
        noverlap=int(nfft * overlap_fraction),
        detrend=False,
        return_onesided=False,
        scaling="density",
    )
    freqs = np.fft.fftshift(freqs)
    bin_power = np.fft.fftshift(pxx) * (fs / nfft)
    with np.errstate(divide="ignore"):
        power_db = 10.0 * np.log10(bin_power)
    return freqs, power_db


def band_power_db(freqs_hz: np.ndarray, power_db: np.ndarray, f_lo: float, f_hi: float) -> float:
    """Total power in dB of the PSD bins with center frequency in [f_lo, f_hi]."""
    mask = (freqs_hz >= f_lo) & (freqs_hz <= f_hi)
    if not np.any(mask):
        raise ConfigError(f"no PSD bins inside [{f_lo}, {f_hi}] Hz")
    linear = 10.0 ** (power_db[mask] / 10.0)
    total = float(np.sum(linear))
    if total == 0.0:
        return -np.inf
    return 10.0 * np.log10(total)


def power_db_to_dbm(power_db: float, full_scale_dbm: float) -> float:
    """Map a dBFS power onto absolute dBm via the configured full-scale anchor."""
    return power_db + full_scale_dbm
