"""Adaptive filter core tests: step semantics, counters, convergence."""

import numpy as np
import pytest

from fdsic import ConfigError, DcdParams, OpCounters, RlsState, regenerate_si, rls_step
from fdsic.rls import per_sample_counts


def _drive(state, stream, observations, dcd, counters):
    """Feed a whitened basis stream through the filter, newest-first stacking."""
    p = state.n_terms
    u = np.zeros(state.n_coefficients, dtype=complex)
    errors = np.empty(len(observations), dtype=complex)
    for i, (phi, y) in enumerate(zip(stream, observations)):
        u = np.concatenate((phi, u[:-p]))
        errors[i] = rls_step(state, phi, u, y, dcd, counters)
    return errors


def _linear_stream(rng, n, n_terms, depth, h_true):
    stream = (rng.standard_normal((n, n_terms)) + 1j * rng.standard_normal((n, n_terms))) / np.sqrt(2)
    u = np.zeros(n_terms * depth, dtype=complex)
    obs = np.empty(n, dtype=complex)
    for i in range(n):
        u = np.concatenate((stream[i], u[:-n_terms]))
        obs[i] = np.vdot(h_true, u)
    return stream, obs


class TestStateValidation:
    def test_forgetting_range_enforced(self):
        with pytest.raises(ConfigError):
            RlsState.initial(3, 4, forgetting=0.2)
        with pytest.raises(ConfigError):
            RlsState.initial(3, 4, forgetting=1.0001)

    def test_regularization_range_enforced(self):
        with pytest.raises(ConfigError):
            RlsState.initial(3, 4, regularization=0.0)
        with pytest.raises(ConfigError):
            RlsState.initial(3, 4, regularization=1.0)

    def test_initial_state_shape(self):
        state = RlsState.initial(3, 4, regularization=0.05)
        assert state.coefficients.shape == (12,)
        assert np.allclose(state.correlation, 0.05 * np.eye(12))
        assert np.all(state.solver_residual == 0)


class TestStepSemantics:
    def test_zero_input_stream_keeps_coefficients(self):
        """Zero basis input: coefficients hold, correlation decays, the
        residual sample equals the observation."""
        state = RlsState.initial(2, 3, forgetting=0.9)
        counters = OpCounters()
        phi = np.zeros(2, dtype=complex)
        u = np.zeros(6, dtype=complex)
        corr_before = state.correlation.copy()
        z = rls_step(state, phi, u, 0.7 - 0.2j, DcdParams(), counters)
        assert z == pytest.approx(0.7 - 0.2j)
        assert np.all(state.coefficients == 0)
        assert np.all(state.solver_residual == 0)
        assert np.allclose(np.diag(state.correlation)[2:], 0.9 * np.diag(corr_before)[2:])

    def test_correlation_stays_hermitian(self):
        rng = np.random.default_rng(1)
        state = RlsState.initial(3, 4)
        counters = OpCounters()
        stream = (rng.standard_normal((50, 3)) + 1j * rng.standard_normal((50, 3)))
        _drive(state, stream, rng.standard_normal(50).astype(complex), DcdParams(), counters)
        corr = state.correlation
        assert np.allclose(corr, corr.conj().T, atol=1e-12)

    def test_dimension_mismatch_rejected(self):
        state = RlsState.initial(2, 2)
        with pytest.raises(ValueError):
            rls_step(state, np.zeros(3, dtype=complex), np.zeros(4, dtype=complex), 0j,
                     DcdParams(), OpCounters())

    def test_non_finite_observation_raises(self):
        from fdsic import NumericalError

        state = RlsState.initial(2, 2)
        with pytest.raises(NumericalError, match="step 2"):
            rls_step(state, np.zeros(2, dtype=complex), np.zeros(4, dtype=complex),
                     complex(np.nan, 0), DcdParams(), OpCounters())


class TestCounters:
    @pytest.mark.parametrize("depth,n_terms", [(4, 3), (8, 3), (8, 5)])
    def test_per_step_counter_equality(self, depth, n_terms):
        """Steps 1, 2, 3, 5 charge exactly their closed forms each sample."""
        rng = np.random.default_rng(2)
        n_steps = 40
        state = RlsState.initial(n_terms, depth)
        counters = OpCounters()
        stream = (rng.standard_normal((n_steps, n_terms))
                  + 1j * rng.standard_normal((n_steps, n_terms)))
        obs = (rng.standard_normal(n_steps) + 1j * rng.standard_normal(n_steps))
        _drive(state, stream, obs, DcdParams(), counters)

        expected = per_sample_counts(depth, n_terms)
        for step, (mults, adds) in expected.items():
            assert counters.step_mults[step] == n_steps * mults
            assert counters.step_adds[step] == n_steps * adds

        n = depth * n_terms
        fixed_mults = 6 * n_terms * n + 10 * n
        fixed_adds = 4 * n_terms * n + 8 * n + 2
        assert counters.real_mults == n_steps * fixed_mults + counters.step_mults[4]
        assert counters.real_adds == n_steps * fixed_adds + counters.step_adds[4]
        assert counters.step_mults[4] == 0

    def test_full_update_mode_charges_full_matrix(self):
        state = RlsState.initial(2, 3, full_update=True)
        counters = OpCounters()
        phi = np.ones(2, dtype=complex)
        u = np.ones(6, dtype=complex)
        rls_step(state, phi, u, 1.0 + 0j, DcdParams(), counters)
        assert counters.step_mults[1] == 6 * 6 * 6
        assert counters.step_adds[1] == 4 * 6 * 6


class TestConvergence:
    def test_noiseless_linear_identification(self):
        """Noiseless linear system: coefficients recovered to 1e-3 and the
        residual falls to the solver grid."""
        rng = np.random.default_rng(3)
        depth, n_terms = 4, 1
        h_true = np.array([0.5 - 0.2j, 0.3 + 0.1j, -0.15j, 0.05], dtype=complex)
        stream, obs = _linear_stream(rng, 3000, n_terms, depth, h_true)
        state = RlsState.initial(n_terms, depth, forgetting=0.9995)
        dcd = DcdParams(amplitude=1.0, bit_depth=15, max_updates=8)
        errors = _drive(state, stream, obs, dcd, OpCounters())
        assert np.linalg.norm(state.coefficients - h_true) < 1e-3
        tail = np.mean(np.abs(errors[-500:]) ** 2)
        assert tail < 1e-6

    def test_matches_exact_solver_oracle(self):
        """Same data through the coordinate-descent filter and an exact
        inner solve: residual power drops 40 dB within 5000 samples for both,
        and the two land within a few dB of each other."""
        rng = np.random.default_rng(4)
        depth, n_terms = 4, 1
        h_true = np.array([0.4 + 0.1j, -0.25, 0.1j, 0.02 - 0.05j], dtype=complex)
        stream, obs = _linear_stream(rng, 5000, n_terms, depth, h_true)

        state = RlsState.initial(n_terms, depth, forgetting=0.9995)
        dcd = DcdParams(amplitude=1.0, bit_depth=15, max_updates=8)
        errors = _drive(state, stream, obs, dcd, OpCounters())

        # independent oracle: identical recursion, direct matrix solve
        lam, alpha = 0.9995, 0.01
        n = depth * n_terms
        corr = alpha * np.eye(n, dtype=complex)
        h = np.zeros(n, dtype=complex)
        resid_vec = np.zeros(n, dtype=complex)
        u = np.zeros(n, dtype=complex)
        oracle_errors = np.empty(len(obs), dtype=complex)
        for i in range(len(obs)):
            u = np.concatenate((stream[i], u[:-n_terms]))
            corr = lam * corr + np.outer(u, u.conj())
            z = obs[i] - np.vdot(h, u)
            rhs = lam * resid_vec + np.conj(z) * u
            delta = np.linalg.solve(corr, rhs)
            resid_vec = rhs - corr @ delta
            h = h + delta
            oracle_errors[i] = z

        first = np.mean(np.abs(errors[:50]) ** 2)
        for err in (errors, oracle_errors):
            tail = np.mean(np.abs(err[-1000:]) ** 2)
            assert 10 * np.log10(first / tail) >= 40.0
        # the bounded solver tracks the exact one until its dyadic grid floor
        mid_dcd = 10 * np.log10(np.mean(np.abs(errors[100:300]) ** 2))
        mid_oracle = 10 * np.log10(np.mean(np.abs(oracle_errors[100:300]) ** 2))
        assert mid_dcd <= mid_oracle + 5.0
        grid = DcdParams(amplitude=1.0, bit_depth=15, max_updates=8).step_quantum
        assert np.linalg.norm(state.coefficients - h_true) < 4 * grid * np.sqrt(depth)


class TestRegenerate:
    def test_zero_coefficients(self):
        assert regenerate_si(np.zeros(4, dtype=complex), np.ones(4, dtype=complex)) == 0

    def test_unit_coordinate_conjugate_convention(self):
        h = np.zeros(4, dtype=complex)
        h[2] = 1.0 + 1.0j
        u = np.arange(4, dtype=complex)
        assert regenerate_si(h, u) == pytest.approx(np.conj(1.0 + 1.0j) * 2.0)

    def test_matches_elementwise_sum(self):
        rng = np.random.default_rng(5)
        h = rng.standard_normal(8) + 1j * rng.standard_normal(8)
        u = rng.standard_normal(8) + 1j * rng.standard_normal(8)
        brute = sum(np.conj(hk) * uk for hk, uk in zip(h, u))
        assert regenerate_si(h, u) == pytest.approx(brute, abs=1e-12)

    def test_shape_mismatch_rejected(self):
        with pytest.raises(ValueError):
            regenerate_si(np.zeros(3, dtype=complex), np.zeros(4, dtype=complex))
