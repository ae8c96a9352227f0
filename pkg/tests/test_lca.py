"""Graded sparse-coding dynamics: threshold, energy, convergence, traces."""

import csv

import numpy as np
import pytest

from lcalearn.dictionary import Dictionary, InputDims, analyze, init_random, synthesize
from lcalearn.errors import NumericError
from lcalearn.lca import (
    LcaParams,
    MembraneState,
    energy,
    run_inference,
    soft_threshold,
    write_trace_csv,
)


def orthonormal_pair():
    """Two exactly orthonormal elements in R^4."""
    elements = np.zeros((2, 4))
    elements[0, 0] = 1.0
    elements[1, 1] = 1.0
    return Dictionary(elements, InputDims(2, 2))


class TestSoftThreshold:
    def test_below_threshold_is_zero(self):
        np.testing.assert_array_equal(
            soft_threshold(np.array([0.2, -5.0, 0.5]), 0.5), [0.0, 0.0, 0.0]
        )

    def test_above_threshold_shifts_down(self):
        np.testing.assert_allclose(
            soft_threshold(np.array([1.5, 0.8]), 0.5), [1.0, 0.3], atol=1e-12
        )

    def test_zero_lambda_is_positive_part(self):
        u = np.array([-1.0, 0.0, 2.0])
        np.testing.assert_array_equal(soft_threshold(u, 0.0), [0.0, 0.0, 2.0])

    def test_threshold_is_strict(self):
        assert soft_threshold(np.array([0.5]), 0.5)[0] == 0.0


class TestParams:
    def test_rejects_bad_values(self):
        with pytest.raises(ValueError):
            LcaParams(lam=-0.1, dt=1.0, tau=10.0, steps=5)
        with pytest.raises(ValueError):
            LcaParams(lam=0.1, dt=0.0, tau=10.0, steps=5)
        with pytest.raises(ValueError):
            LcaParams(lam=0.1, dt=20.0, tau=10.0, steps=5)
        with pytest.raises(ValueError):
            LcaParams(lam=0.1, dt=1.0, tau=10.0, steps=0)


class TestConvergence:
    def test_scalar_identity_converges_to_input(self):
        """One element, lambda=0: membrane relaxes to the input value."""
        d = Dictionary(np.array([[1.0]]), InputDims(1, 1))
        params = LcaParams(lam=0.0, dt=1.0, tau=10.0, steps=400)
        result = run_inference(d, np.array([0.8]), params)
        np.testing.assert_allclose(result.state.u, [0.8], atol=1e-9)
        np.testing.assert_allclose(result.code, [0.8], atol=1e-9)

    def test_orthonormal_closed_form(self):
        """Input e0 + 0.1 e1 at lambda=0.3 -> code (0.7, 0)."""
        d = orthonormal_pair()
        x = d.elements[0] + 0.1 * d.elements[1]
        params = LcaParams(lam=0.3, dt=1.0, tau=10.0, steps=800)
        result = run_inference(d, x, params)
        np.testing.assert_allclose(result.code, [0.7, 0.0], atol=1e-3)

    def test_exact_representation_zero_lambda_reconstructs(self):
        """Input synthesized from a code is recovered with zero residual."""
        d = init_random(2, 6, InputDims(2, 2))
        target = np.array([0.0, 0.9, 0.0, 0.4, 0.0, 0.0])
        x = synthesize(d, target)
        params = LcaParams(lam=0.0, dt=1.0, tau=10.0, steps=30000)
        result = run_inference(d, x, params, early_stop=1e-13)
        recon = synthesize(d, result.code)
        np.testing.assert_allclose(recon, x, atol=1e-6)

    def test_zero_input_stays_at_rest(self):
        d = init_random(1, 5, InputDims(2, 2))
        params = LcaParams(lam=0.2, dt=1.0, tau=10.0, steps=50)
        result = run_inference(d, np.zeros(4), params)
        np.testing.assert_array_equal(result.state.u, np.zeros(5))
        np.testing.assert_array_equal(result.code, np.zeros(5))


class TestEnergyDescent:
    def test_energy_nonincreasing_on_random_instances(self):
        """With a small step ratio the cost descends along the trajectory."""
        rng = np.random.default_rng(0)
        for trial in range(10):
            n = int(rng.integers(2, 30))
            dims = InputDims(int(rng.integers(2, 6)), int(rng.integers(2, 6)))
            d = init_random(trial, n, dims)
            x = rng.normal(size=dims.size)
            params = LcaParams(lam=0.1, dt=0.1, tau=10.0, steps=300)
            result = run_inference(d, x, params, record_codes=True)
            energies = [energy(d, x, c, params.lam) for c in result.codes]
            diffs = np.diff(energies)
            assert energies[-1] <= energies[0] + 1e-12
            assert (diffs <= 1e-9).mean() >= 0.95


class TestFixedPoint:
    def test_early_stop_satisfies_balance_identity(self):
        """When updates vanish, u = a + analyze(input - synthesize(a))."""
        rng = np.random.default_rng(5)
        d = init_random(2, 12, InputDims(3, 3))
        x = rng.normal(size=9)
        params = LcaParams(lam=0.2, dt=1.0, tau=10.0, steps=100000)
        result = run_inference(d, x, params, early_stop=1e-9)
        a = result.code
        balance = a + analyze(d, x - synthesize(d, a))
        assert float(np.abs(result.state.u - balance).max()) < 1e-6

    def test_early_stop_truncates_recorded_codes(self):
        d = Dictionary(np.array([[1.0]]), InputDims(1, 1))
        params = LcaParams(lam=0.0, dt=1.0, tau=2.0, steps=10000)
        result = run_inference(d, np.array([1.0]), params, early_stop=1e-12, record_codes=True)
        assert result.codes.shape[0] < 10000


class TestBookkeeping:
    def test_half_mean_matches_recorded_codes(self):
        rng = np.random.default_rng(2)
        d = init_random(3, 6, InputDims(2, 2))
        x = rng.normal(size=4)
        params = LcaParams(lam=0.1, dt=1.0, tau=10.0, steps=9)
        result = run_inference(d, x, params, record_codes=True)
        np.testing.assert_allclose(
            result.half_mean, result.codes[9 // 2 :].mean(axis=0), atol=1e-12
        )

    def test_warm_start_continues_trajectory(self):
        d = init_random(1, 4, InputDims(2, 2))
        x = np.array([0.5, -0.2, 0.1, 0.3])
        params_full = LcaParams(lam=0.1, dt=1.0, tau=10.0, steps=20)
        params_half = LcaParams(lam=0.1, dt=1.0, tau=10.0, steps=10)
        full = run_inference(d, x, params_full)
        first = run_inference(d, x, params_half)
        second = run_inference(d, x, params_half, initial_state=first.state)
        np.testing.assert_array_equal(second.state.u, full.state.u)
        assert second.state.step_index == 20

    def test_state_shape_mismatch_rejected(self):
        d = init_random(0, 4, InputDims(2, 2))
        params = LcaParams(lam=0.1, dt=1.0, tau=10.0, steps=5)
        with pytest.raises(ValueError):
            run_inference(d, np.zeros(4), params, initial_state=MembraneState.zeros(3))

    def test_nonfinite_input_raises_with_step_context(self):
        d = init_random(0, 4, InputDims(2, 2))
        params = LcaParams(lam=0.1, dt=1.0, tau=10.0, steps=5)
        x = np.array([np.inf, 0.0, 0.0, 0.0])
        with pytest.raises(NumericError, match="step"):
            run_inference(d, x, params)

    def test_trace_csv_layout(self, tmp_path):
        d = init_random(0, 4, InputDims(2, 2))
        params = LcaParams(lam=0.1, dt=1.0, tau=10.0, steps=7)
        result = run_inference(d, np.array([0.5, 0.5, -0.5, 0.2]), params, record_trace=True)
        path = tmp_path / "trace.csv"
        write_trace_csv(path, result.trace)
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["step", "energy", "active", "du_inf"]
        assert len(rows) == 8
        energies = [float(r[1]) for r in rows[1:]]
        assert energies[-1] <= energies[0]


class TestEnergy:
    def test_perfect_reconstruction_zero_lambda(self):
        d = orthonormal_pair()
        code = np.array([0.3, 0.7])
        x = synthesize(d, code)
        assert energy(d, x, code, 0.0) == pytest.approx(0.0, abs=1e-15)

    def test_known_value(self):
        d = orthonormal_pair()
        code = np.array([1.0, 0.0])
        x = np.zeros(4)
        # residual norm^2 = 1, so cost = 0.5 + lam * 1
        assert energy(d, x, code, 0.25) == pytest.approx(0.75, abs=1e-12)
