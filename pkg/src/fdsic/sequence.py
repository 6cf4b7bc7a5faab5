"""Complex baseband sample sequences, the carrier type for every signal path."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError


@dataclass
class ComplexSequence:
    """A finite run of complex baseband samples at a fixed sample rate.

    Samples are dimensionless; 1.0 is digital full scale, so powers read
    directly in dBFS. Generators peak-normalize to full scale, downstream
    stages may exceed it (the ADC model is where clipping happens).
    """

    samples: np.ndarray
    sample_rate_hz: float

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.complex128)
        if self.samples.ndim != 1 or self.samples.size < 1:
            raise ConfigError("a sequence needs at least one sample in a 1-D array")
        if not (np.all(np.isfinite(self.samples.real)) and np.all(np.isfinite(self.samples.imag))):
            raise ConfigError("sequence contains NaN or Inf samples")
        if not (self.sample_rate_hz > 0 and np.isfinite(self.sample_rate_hz)):
            raise ConfigError(f"sample rate must be positive and finite, got {self.sample_rate_hz}")

    def __len__(self) -> int:
        return self.samples.size

    @property
    def peak(self) -> float:
        """Largest sample magnitude."""
        return float(np.max(np.abs(self.samples)))

    def like(self, samples: np.ndarray) -> "ComplexSequence":
        """New sequence on the same sample grid."""
        return ComplexSequence(samples, self.sample_rate_hz)

    def delayed(self, n_samples: int) -> "ComplexSequence":
        """Shift right by ``n_samples`` (zero-filled head, same length)."""
        if n_samples < 0:
            raise ConfigError("delay must be nonnegative")
        if n_samples == 0:
            return self.like(self.samples.copy())
        out = np.zeros_like(self.samples)
        if n_samples < self.samples.size:
            out[n_samples:] = self.samples[:-n_samples]
        return self.like(out)


def require_same_grid(*seqs: ComplexSequence) -> None:
    """Raise unless all sequences share length and sample rate."""
    first = seqs[0]
    for other in seqs[1:]:
        if len(other) != len(first):
            raise ValueError(f"length mismatch: {len(first)} vs {len(other)}")
        if other.sample_rate_hz != first.sample_rate_hz:
            raise ValueError(
                f"sample rate mismatch: {first.sample_rate_hz} vs {other.sample_rate_hz}"
            )


def complex_awgn(n: int, power_db: float, rng_seed: int) -> np.ndarray:
    """Seeded circular complex Gaussian noise at the given mean power in dB.

    ``power_db = -inf`` yields exact zeros.
    """
    if power_db == -np.inf:
        return np.zeros(n, dtype=np.complex128)
    rng = np.random.default_rng(rng_seed)
    sigma = 10.0 ** (power_db / 20.0) / np.sqrt(2.0)
    return sigma * (rng.standard_normal(n) + 1j * rng.standard_normal(n))
