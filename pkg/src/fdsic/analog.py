"""Analog front-end simulation: PA nonlinearity, leakage channel, RF canceller
injection, LNA summing junction, and the quantizing receiver.

Everything is complex baseband with integer-sample delays. Channel and PA
models are plain tap sets that serialize to the harness config file.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy import signal as sps

from .errors import ConfigError
from .sequence import ComplexSequence, complex_awgn, require_same_grid

_GAIN_GRID_TOL = 1e-6


@dataclass(frozen=True)
class PaModel:
    """Parallel Hammerstein power amplifier.

    ``taps[k, m]`` is the coefficient of ``x[n-m] * |x[n-m]|**(orders[k]-1)``.
    Orders are odd: the even-order products of a real passband nonlinearity
    fall out of band at baseband.
    """

    taps: np.ndarray
    orders: tuple[int, ...] = (1, 3, 5)

    def __post_init__(self):
        taps = np.atleast_2d(np.asarray(self.taps, dtype=np.complex128))
        object.__setattr__(self, "taps", taps)
        if taps.shape[0] != len(self.orders):
            raise ConfigError(
                f"PA taps have {taps.shape[0]} rows but {len(self.orders)} orders"
            )
        if list(self.orders) != sorted(set(self.orders)) or any(
            p < 1 or p % 2 == 0 for p in self.orders
        ):
            raise ConfigError(f"PA orders must be distinct odd positives, got {self.orders}")
        if 1 not in self.orders or self.taps[self.orders.index(1), 0] == 0:
            raise ConfigError("PA model needs a nonzero linear gain (order-1 tap at m=0)")

    @property
    def memory_depth(self) -> int:
        return self.taps.shape[1]

    @classmethod
    def from_terms(cls, terms: dict[tuple[int, int], complex]) -> "PaModel":
        """Build from a {(order, memory_tap): coefficient} mapping."""
        if not terms:
            raise ConfigError("PA model needs at least one term")
        orders = tuple(sorted({p for p, _ in terms}))
        depth = max(m for _, m in terms) + 1
        taps = np.zeros((len(orders), depth), dtype=np.complex128)
        for (p, m), c in terms.items():
            if m < 0:
                raise ConfigError(f"PA memory tap must be nonnegative, got {m}")
            taps[orders.index(p), m] = c
        return cls(taps, orders)

    def to_terms(self) -> dict[tuple[int, int], complex]:
        return {
            (p, m): complex(self.taps[k, m])
            for k, p in enumerate(self.orders)
            for m in range(self.memory_depth)
            if self.taps[k, m] != 0
        }

    @classmethod
    def default(cls) -> "PaModel":
        """Mildly nonlinear PA: distortion terms 25-35 dB below the linear term
        at the default drive level. Configuration, not a measured device."""
        return cls.from_terms(
            {
                (1, 0): 1.0,
                (3, 0): 0.03 * np.exp(1j * 0.1),
                (3, 1): 0.01,
                (5, 0): 0.005,
            }
        )


def pa_amplify(x: ComplexSequence, pa: PaModel) -> ComplexSequence:
    """Apply the Hammerstein PA model (zero-padded at the stream start)."""
    out = np.zeros(len(x), dtype=np.complex128)
    for k, p in enumerate(pa.orders):
        branch = x.samples * np.abs(x.samples) ** (p - 1)
        out += sps.lfilter(pa.taps[k], [1.0], branch)
    return x.like(out)


@dataclass(frozen=True)
class SiChannel:
    """Tap-delay-line leakage channel with a weak two-way feedback path.

    ``forward_taps`` couple the PA output toward the LNA; ``feedback_taps``
    re-circulate the LNA input (receiver/transmitter return loss). Feedback
    delays are >= 1 so the recursion is causal, and the feedback gain sum
    stays below one for stability.
    """

    forward_taps: tuple[tuple[complex, int], ...]
    feedback_taps: tuple[tuple[complex, int], ...] = ()

    def __post_init__(self):
        fwd = tuple((complex(g), int(d)) for g, d in self.forward_taps)
        fb = tuple((complex(g), int(d)) for g, d in self.feedback_taps)
        object.__setattr__(self, "forward_taps", fwd)
        object.__setattr__(self, "feedback_taps", fb)
        if not fwd:
            raise ConfigError("channel needs at least one forward tap")
        if any(d < 0 for _, d in fwd):
            raise ConfigError("forward delays must be nonnegative")
        if any(d < 1 for _, d in fb):
            raise ConfigError("feedback delays must be >= 1 (no delay-free loop)")
        fb_sum = sum(abs(g) for g, _ in fb)
        if fb_sum >= 1.0:
            raise ConfigError(f"unstable channel: feedback gain magnitudes sum to {fb_sum:.3f}")
        if fb and max(abs(g) for g, _ in fb) >= max(abs(g) for g, _ in fwd):
            raise ConfigError("feedback taps must stay weaker than the strongest forward tap")

    def transfer_coefficients(self) -> tuple[np.ndarray, np.ndarray]:
        """(numerator, denominator) of the equivalent rational filter."""
        b = np.zeros(max(d for _, d in self.forward_taps) + 1, dtype=np.complex128)
        for g, d in self.forward_taps:
            b[d] += g
        a = np.zeros(max((d for _, d in self.feedback_taps), default=0) + 1, dtype=np.complex128)
        a[0] = 1.0
        for g, d in self.feedback_taps:
            a[d] -= g
        return b, a

    def frequency_response(self, freqs_hz: np.ndarray, sample_rate_hz: float) -> np.ndarray:
        b, a = self.transfer_coefficients()
        w = 2.0 * np.pi * np.asarray(freqs_hz) / sample_rate_hz
        _, h = sps.freqz(b, a, worN=w)
        return h


def apply_si_channel(y_pa: ComplexSequence, ch: SiChannel) -> ComplexSequence:
    """Run the leakage channel recursion y[n] = sum(fwd) + sum(feedback of y)."""
    b, a = ch.transfer_coefficients()
    return y_pa.like(sps.lfilter(b, a, y_pa.samples))


@dataclass(frozen=True)
class VectorModulatorState:
    """RF canceller setting: fixed delay plus a quantized complex gain.

    The two gain components emulate the digital board's DC control voltages,
    so each must sit on the ``control_step`` grid. ``noise_power_db`` is the
    mean power of the noise the injection path adds.
    """

    delay_samples: int
    gain_i: float
    gain_q: float
    control_step: float
    noise_power_db: float = -np.inf

    def __post_init__(self):
        if self.delay_samples < 0:
            raise ConfigError(f"delay must be nonnegative, got {self.delay_samples}")
        if self.control_step <= 0:
            raise ConfigError(f"control step must be positive, got {self.control_step}")
        for name, g in (("gain_i", self.gain_i), ("gain_q", self.gain_q)):
            if abs(g / self.control_step - round(g / self.control_step)) > _GAIN_GRID_TOL:
                raise ConfigError(f"{name}={g} is not a multiple of control_step={self.control_step}")
        if abs(self.gain) > 1.0 + 1e-12:
            raise ConfigError(f"canceller path is passive: |gain|={abs(self.gain):.4f} > 1")

    @property
    def gain(self) -> complex:
        return self.gain_i + 1j * self.gain_q

    @classmethod
    def zero(
        cls, control_step: float, delay_samples: int = 0, noise_power_db: float = -np.inf
    ) -> "VectorModulatorState":
        return cls(delay_samples, 0.0, 0.0, control_step, noise_power_db)

    def at_grid(self, steps_i: int, steps_q: int) -> "VectorModulatorState":
        """Same modulator with gains at integer grid coordinates."""
        return replace(
            self, gain_i=steps_i * self.control_step, gain_q=steps_q * self.control_step
        )

    def at_delay(self, delay_samples: int) -> "VectorModulatorState":
        return replace(self, delay_samples=delay_samples)


def rfsic_path(y_pa: ComplexSequence, vm: VectorModulatorState, rng_seed: int) -> ComplexSequence:
    """Canceller injection: delayed, complex-weighted PA sample plus path noise."""
    out = vm.gain * y_pa.delayed(vm.delay_samples).samples
    out += complex_awgn(len(y_pa), vm.noise_power_db, rng_seed)
    return y_pa.like(out)


def combine_at_lna(
    si: ComplexSequence, cancel: ComplexSequence, soi: ComplexSequence
) -> ComplexSequence:
    """Summing junction in front of the LNA."""
    require_same_grid(si, cancel, soi)
    return si.like(si.samples + cancel.samples + soi.samples)


@dataclass(frozen=True)
class ReceiverConfig:
    """Receiver noise floor and ADC quantization."""

    noise_floor_db: float = -104.0
    adc_bits: int = 12
    adc_full_scale: float = 1.0

    def __post_init__(self):
        if self.adc_bits < 1:
            raise ConfigError(f"adc_bits must be >= 1, got {self.adc_bits}")
        if not self.adc_full_scale > 0:
            raise ConfigError(f"adc_full_scale must be positive, got {self.adc_full_scale}")


def _quantize_uniform(values: np.ndarray, bits: int, full_scale: float) -> tuple[np.ndarray, np.ndarray]:
    """Uniform two's-complement quantizer over [-full_scale, full_scale).

    Round-to-nearest onto levels k * delta with a true zero code, like a real
    converter; exact zero stays zero and quantized values are fixed points.
    Returns (quantized, clipped mask)."""
    delta = 2.0 * full_scale / 2**bits
    codes = np.round(values / delta)
    lo, hi = -(2 ** (bits - 1)), 2 ** (bits - 1) - 1
    clipped = (codes < lo) | (codes > hi)
    codes = np.clip(codes, lo, hi)
    return codes * delta, clipped


def receive(
    y_lna: ComplexSequence, rx: ReceiverConfig, rng_seed: int
) -> tuple[ComplexSequence, int]:
    """Receiver noise followed by independent I/Q quantization.

    Returns the digitized sequence and the number of samples whose I or Q
    component clipped at the converter rails.
    """
    noisy = y_lna.samples + complex_awgn(len(y_lna), rx.noise_floor_db, rng_seed)
    q_i, clip_i = _quantize_uniform(noisy.real, rx.adc_bits, rx.adc_full_scale)
    q_q, clip_q = _quantize_uniform(noisy.imag, rx.adc_bits, rx.adc_full_scale)
    return y_lna.like(q_i + 1j * q_q), int(np.count_nonzero(clip_i | clip_q))


def circulator_leakage_default() -> SiChannel:
    """Default circulator-plus-antenna-emulation leakage model.

    One dominant path near -20 dB, a few weak scatter taps that put roughly
    1 dB of ripple on the in-band response, and a weak two-way feedback tap.
    The secondary taps are sized so a single delayed complex gain can take
    about 36 dB off the total leakage, leaving the rest to the digital stage.
    """
    return SiChannel(
        forward_taps=(
            (0.09520 * np.exp(1j * 0.40), 2),
            (10.5e-4 * np.exp(1j * 2.10), 5),
            (9.4e-4 * np.exp(-1j * 1.35), 7),
            (8.4e-4 * np.exp(1j * 0.55), 9),
        ),
        feedback_taps=((0.0120 * np.exp(-1j * 0.8), 4),),
    )
