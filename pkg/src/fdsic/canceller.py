"""End-to-end digital cancellation stream: basis, whitening, per-sample RLS."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .basis import (
    BasisConfig,
    WhiteningTransform,
    basis_generate,
    estimate_covariance,
    whiten,
    whitening_from_covariance,
)
from .dcd import DcdParams, OpCounters
from .errors import ConfigError
from .rls import RlsState, rls_step
from .sequence import ComplexSequence, require_same_grid


@dataclass
class CancellationResult:
    """Output of one digital-cancellation run.

    ``residual`` is the post-cancellation stream, ``residual_power`` its
    per-sample linear power trace. ``coefficients`` are de-whitened back to
    the raw basis, shape (memory_depth, n_terms), in the plain-multiplication
    convention so entry (m, k) compares directly with a generating tap on
    basis order k at delay m.
    """

    residual: ComplexSequence
    residual_power: np.ndarray
    counters: OpCounters
    coefficients: np.ndarray
    whitening: WhiteningTransform
    state: RlsState


def cancel_stream(
    rx: ComplexSequence,
    x: ComplexSequence,
    cfg: BasisConfig,
    forgetting: float = 0.9995,
    regularization: float = 0.01,
    dcd: DcdParams = DcdParams(),
    n_cov: int = 4096,
    full_update: bool = False,
) -> CancellationResult:
    """Cancel the transmit-correlated component of ``rx`` sample by sample.

    The first ``n_cov`` samples train the basis covariance for the whitening
    transform; adaptation then runs over the whole stream. ``rx`` and ``x``
    must be time aligned (transmit and receive share one sample clock).
    """
    require_same_grid(rx, x)
    if n_cov < 1 or n_cov > len(x):
        raise ConfigError(f"n_cov must be in [1, {len(x)}], got {n_cov}")

    phi = basis_generate(x, cfg)
    covariance = estimate_covariance(phi, n_cov)
    transform = whitening_from_covariance(covariance)
    phi_white = whiten(phi, transform)

    p = cfg.n_terms
    state = RlsState.initial(
        n_terms=p,
        memory_depth=cfg.memory_depth,
        forgetting=forgetting,
        regularization=regularization,
        full_update=full_update,
    )
    counters = OpCounters()
    n = len(rx)
    residual = np.empty(n, dtype=np.complex128)
    u = np.zeros(cfg.n_coefficients, dtype=np.complex128)
    observed = rx.samples
    for i in range(n):
        u = np.concatenate((phi_white[i], u[:-p]))
        residual[i] = rls_step(state, phi_white[i], u, observed[i], dcd, counters)

    # conjugate: the filter applies h via a Hermitian product, generator taps
    # multiply the basis directly
    coeffs = np.conj(
        transform.dewhiten_coefficients(state.coefficients.reshape(cfg.memory_depth, p).T).T
    )
    return CancellationResult(
        residual=rx.like(residual),
        residual_power=np.abs(residual) ** 2,
        counters=counters,
        coefficients=coeffs,
        whitening=transform,
        state=state,
    )


def convergence_sample(residual_power: np.ndarray, window: int = 1024, margin_db: float = 1.0) -> int:
    """First sample where the trailing-mean residual power settles.

    Settled means the ``window``-sample trailing mean is within ``margin_db``
    of the mean over the final tenth of the stream. Returns -1 if the trace
    never settles or is shorter than the window.
    """
    n = residual_power.size
    if n < window or n < 10:
        return -1
    final = float(np.mean(residual_power[-max(n // 10, 1) :]))
    if final <= 0.0:
        return 0
    csum = np.concatenate(([0.0], np.cumsum(residual_power)))
    trailing = (csum[window:] - csum[:-window]) / window
    ratio = 10.0 ** (margin_db / 10.0)
    settled = np.nonzero((trailing <= final * ratio) & (trailing >= final / ratio))[0]
    if settled.size == 0:
        return -1
    return int(settled[0] + window - 1)
