"""Dichotomous coordinate descent: a multiplication-free inner solver.

The complex system R dh = beta is expanded into interleaved real/imaginary
coordinates and solved by leading-element coordinate descent with bit-halved
dyadic steps. Every solution component is an integer multiple of
``amplitude / 2**bit_depth``. Step scaling is by powers of two, which counts
as a shift in the operation model, so the solver performs zero counted real
multiplications; comparisons count as additions.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError

RLS_STEP_NAMES = {
    1: "correlation update",
    2: "prior error",
    3: "solver right-hand side",
    4: "dcd solve",
    5: "coefficient update",
}


@dataclass(frozen=True)
class DcdParams:
    """Solver knobs: update amplitude range H, bit depth, and update budget.

    ``amplitude`` bounds the per-solve movement of any one coordinate and
    sets the dyadic grid; ``bit_depth`` is how many times the step halves;
    ``max_updates`` caps successful coordinate updates per solve.
    """

    amplitude: float = 0.0625
    bit_depth: int = 15
    max_updates: int = 8

    def __post_init__(self):
        if not self.amplitude > 0:
            raise ConfigError(f"amplitude must be positive, got {self.amplitude}")
        if self.bit_depth < 1:
            raise ConfigError(f"bit_depth must be >= 1, got {self.bit_depth}")
        if self.max_updates < 1:
            raise ConfigError(f"max_updates must be >= 1, got {self.max_updates}")

    @property
    def step_quantum(self) -> float:
        """Smallest step, amplitude / 2**bit_depth; the solution grid spacing."""
        return self.amplitude / 2**self.bit_depth

    def addition_bound(self, n_real: int) -> int:
        """Worst-case counted additions for one solve of real dimension ``n_real``."""
        return n_real * (2 * self.max_updates + self.bit_depth - 1) + self.max_updates


@dataclass
class OpCounters:
    """Running totals of modeled real multiplications and additions.

    Counts follow the adaptive filter's per-step arithmetic model (argmax and
    threshold comparisons inside the solver count as additions; dyadic
    scalings count as shifts and are free). Totals never decrease.
    """

    step_mults: dict[int, int] = field(default_factory=lambda: {k: 0 for k in RLS_STEP_NAMES})
    step_adds: dict[int, int] = field(default_factory=lambda: {k: 0 for k in RLS_STEP_NAMES})

    @property
    def real_mults(self) -> int:
        return sum(self.step_mults.values())

    @property
    def real_adds(self) -> int:
        return sum(self.step_adds.values())

    def charge(self, step: int, mults: int, adds: int) -> None:
        if mults < 0 or adds < 0:
            raise ValueError("operation counts are nonnegative")
        self.step_mults[step] += mults
        self.step_adds[step] += adds

    def summary(self) -> str:
        lines = ["step  operation              real x       real +"]
        for k, name in RLS_STEP_NAMES.items():
            lines.append(f"{k:>4}  {name:<20} {self.step_mults[k]:>12} {self.step_adds[k]:>12}")
        lines.append(f"      {'total':<20} {self.real_mults:>12} {self.real_adds:>12}")
        return "\n".join(lines)


def _real_expand(matrix: np.ndarray, vector: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Interleave Re/Im coordinates of a Hermitian system into a real one."""
    n = matrix.shape[0]
    a = np.empty((2 * n, 2 * n))
    a[0::2, 0::2] = matrix.real
    a[0::2, 1::2] = -matrix.imag
    a[1::2, 0::2] = matrix.imag
    a[1::2, 1::2] = matrix.real
    b = np.empty(2 * n)
    b[0::2] = vector.real
    b[1::2] = vector.imag
    return a, b


def dcd_solve(
    matrix: np.ndarray,
    rhs: np.ndarray,
    params: DcdParams,
    counters: OpCounters | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Approximately solve the Hermitian system ``matrix @ dh = rhs``.

    Returns ``(dh, residual)`` with ``residual = rhs - matrix @ dh`` tracked
    incrementally. Worst case (zero diagonal headroom or exhausted bits) is
    ``dh = 0, residual = rhs``.
    """
    matrix = np.asarray(matrix, dtype=np.complex128)
    rhs = np.asarray(rhs, dtype=np.complex128)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise ValueError(f"matrix must be square, got shape {matrix.shape}")
    if rhs.shape != (matrix.shape[0],):
        raise ValueError(f"rhs shape {rhs.shape} does not match matrix {matrix.shape}")

    a, r = _real_expand(matrix, rhs)
    n_real = r.size
    diag = a.diagonal().copy()
    dh = np.zeros(n_real)
    adds = 0
    updates = 0
    step = params.amplitude / 2.0
    bits_left = params.bit_depth - 1

    while updates < params.max_updates:
        k = int(np.argmax(np.abs(r)))
        adds += n_real - 1  # leading-element search comparisons
        passed = False
        while True:
            adds += 1  # threshold comparison
            if abs(r[k]) > 0.5 * step * diag[k]:
                passed = True
                break
            if bits_left == 0:
                break
            step *= 0.5  # exact binary scaling, a shift in the op model
            bits_left -= 1
        if not passed:
            break
        direction = step if r[k] > 0 else -step
        dh[k] += direction
        adds += 1
        r -= direction * a[:, k]  # shift-scaled column, one add per entry
        adds += n_real
        updates += 1

    if counters is not None:
        counters.charge(4, 0, adds)

    residual = r[0::2] + 1j * r[1::2]
    return dh[0::2] + 1j * dh[1::2], residual
