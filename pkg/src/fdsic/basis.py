"""Nonlinear basis generation and Cholesky pre-whitening for the digital canceller.

The basis functions across nonlinearity orders are strongly correlated and
span orders of magnitude in variance, which stalls adaptive estimation.
Whitening with the inverse Cholesky factor of their covariance makes the
streamed basis uncorrelated with unit variance before the adaptive stage.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import ConfigError, NumericalError
from .sequence import ComplexSequence

DEFAULT_DIAGONAL_LOADING = 1e-8


@dataclass(frozen=True)
class BasisConfig:
    """Nonlinearity order and memory depth of the canceller model.

    Odd orders 1, 3, ..., ``nonlinearity_order`` are generated by default;
    ``include_even_orders`` switches to the full 1..P ladder for conformance
    experiments.
    """

    nonlinearity_order: int = 5
    memory_depth: int = 12
    include_even_orders: bool = False

    def __post_init__(self):
        if self.nonlinearity_order < 1:
            raise ConfigError(f"nonlinearity order must be >= 1, got {self.nonlinearity_order}")
        if self.memory_depth < 1:
            raise ConfigError(f"memory depth must be >= 1, got {self.memory_depth}")

    @property
    def orders(self) -> tuple[int, ...]:
        step = 1 if self.include_even_orders else 2
        return tuple(range(1, self.nonlinearity_order + 1, step))

    @property
    def n_terms(self) -> int:
        return len(self.orders)

    @property
    def n_coefficients(self) -> int:
        return self.memory_depth * self.n_terms


def basis_generate(x: ComplexSequence | np.ndarray, cfg: BasisConfig) -> np.ndarray:
    """Instantaneous basis stream, shape (n_samples, n_terms).

    Row n holds x[n] * |x[n]|**(p-1) for each configured order p; the first
    column is x itself.
    """
    samples = x.samples if isinstance(x, ComplexSequence) else np.asarray(x, dtype=np.complex128)
    mag = np.abs(samples)
    out = np.empty((samples.size, cfg.n_terms), dtype=np.complex128)
    for k, p in enumerate(cfg.orders):
        out[:, k] = samples if p == 1 else samples * mag ** (p - 1)
    return out


def estimate_covariance(
    basis: np.ndarray, n_cov: int, loading: float = DEFAULT_DIAGONAL_LOADING
) -> np.ndarray:
    """Sample covariance of the first ``n_cov`` basis vectors plus diagonal loading.

    Loading is ``loading * trace / n_terms``, enough to keep the Cholesky
    factorization well posed without disturbing the whitened statistics.
    """
    if n_cov < 1:
        raise ConfigError(f"n_cov must be >= 1, got {n_cov}")
    if basis.shape[0] < n_cov:
        raise ConfigError(f"need {n_cov} samples for covariance, have {basis.shape[0]}")
    block = basis[:n_cov]
    cov = block.T @ block.conj() / n_cov
    cov = 0.5 * (cov + cov.conj().T)
    eps = loading * np.real(np.trace(cov)) / cov.shape[0]
    return cov + eps * np.eye(cov.shape[0])


@dataclass(frozen=True)
class WhiteningTransform:
    """Cholesky whitening: covariance = L L^H and transform = L^-1."""

    covariance: np.ndarray
    cholesky: np.ndarray
    transform: np.ndarray

    @property
    def n_terms(self) -> int:
        return self.transform.shape[0]

    def dewhiten_coefficients(self, coeffs: np.ndarray) -> np.ndarray:
        """Map coefficients acting on the whitened basis back to the raw basis.

        An estimate h applied as h^H (T phi) equals (T^H h)^H phi, so the
        physically comparable coefficient set is T^H h.
        """
        return self.transform.conj().T @ coeffs


def whitening_from_covariance(covariance: np.ndarray) -> WhiteningTransform:
    """Lower Cholesky factor with positive diagonal and its forward-substituted inverse."""
    cov = np.asarray(covariance, dtype=np.complex128)
    if cov.ndim != 2 or cov.shape[0] != cov.shape[1]:
        raise ConfigError(f"covariance must be square, got shape {cov.shape}")
    try:
        lower = scipy.linalg.cholesky(cov, lower=True)
    except scipy.linalg.LinAlgError as exc:
        pivot = getattr(exc, "args", ("",))[0]
        raise NumericalError(f"covariance is not positive definite: {pivot}") from exc
    transform = scipy.linalg.solve_triangular(
        lower, np.eye(cov.shape[0], dtype=np.complex128), lower=True
    )
    return WhiteningTransform(covariance=cov, cholesky=lower, transform=transform)


def whiten(phi: np.ndarray, transform: WhiteningTransform | np.ndarray) -> np.ndarray:
    """Apply the whitening matrix to one basis vector or a whole (N, P) stream."""
    t = transform.transform if isinstance(transform, WhiteningTransform) else transform
    phi = np.asarray(phi)
    if phi.shape[-1] != t.shape[1]:
        raise ValueError(f"basis dimension {phi.shape[-1]} does not match transform {t.shape}")
    if phi.ndim == 1:
        return t @ phi
    return phi @ t.T


def build_regressor(history: list[np.ndarray] | np.ndarray) -> np.ndarray:
    """Stack the last M whitened basis vectors, newest first, into one vector.

    ``history[0]`` is the current sample's basis vector. Callers zero-pad at
    the stream start. Consecutive regressors share all but the leading block:
    u[n][P:] == u[n-1][:-P].
    """
    arr = np.asarray(history, dtype=np.complex128)
    if arr.ndim != 2:
        raise ValueError(f"history must stack M basis vectors, got shape {arr.shape}")
    return arr.reshape(-1)
