import math

import numpy as np
import pytest

from sqrl.circuits import ZERO, Gate, QubitState, apply_gate, rotation_block, run_circuit
from sqrl.errors import ConfigError
from sqrl.noise import (
    EXACT,
    NoiseModel,
    run_circuit_bloch,
    run_circuit_noisy,
    sample_expectation,
    sample_z_estimates,
)

from oracles import random_instance


class TestSampleExpectation:
    def test_zero_state_deterministic(self):
        rng = np.random.default_rng(0)
        for shots in (1, 10, 1000):
            assert sample_expectation(ZERO, shots, rng) == 1.0

    def test_single_shot_is_plus_minus_one(self):
        rng = np.random.default_rng(1)
        plus = apply_gate(ZERO, Gate("h"))
        draws = {sample_expectation(plus, 1, rng) for _ in range(50)}
        assert draws <= {-1.0, 1.0}
        assert len(draws) == 2

    def test_large_sample_concentrates(self):
        # binomial 3-sigma bound at z=0: sigma = 1/sqrt(shots)
        plus = apply_gate(ZERO, Gate("h"))
        shots = 10**6
        hits = 0
        trials = 100
        for seed in range(trials):
            rng = np.random.default_rng(seed)
            if abs(sample_expectation(plus, shots, rng)) < 0.005:
                hits += 1
        assert hits >= trials * 0.99

    def test_zero_shots_rejected(self):
        with pytest.raises(ValueError):
            sample_expectation(ZERO, 0, np.random.default_rng(0))
        with pytest.raises(ValueError):
            NoiseModel(shots=0)

    def test_unbiased(self):
        # empirical mean over 10^4 estimates within 4 sigma of the exact value
        state = apply_gate(ZERO, Gate("ry", angle=1.1))
        z = state.z_expectation
        shots = 64
        reps = 10**4
        rng = np.random.default_rng(42)
        est = [sample_expectation(state, shots, rng) for _ in range(reps)]
        sigma_mean = math.sqrt((1 - z * z) / shots) / math.sqrt(reps)
        assert abs(np.mean(est) - z) < 4 * sigma_mean


class TestNoiseModel:
    def test_identity_channel(self):
        assert EXACT.is_exact
        rng = np.random.default_rng(5)
        spec = rotation_block(4)
        x = rng.normal(size=4)
        th = rng.uniform(0, 2 * np.pi, size=4)
        exact = run_circuit(spec, x, th)
        noisy = run_circuit_noisy(spec, x, th, EXACT, rng)
        assert np.array_equal(noisy, exact)

    def test_validation(self):
        with pytest.raises(ConfigError):
            NoiseModel(p_readout=0.6)
        with pytest.raises(ConfigError):
            NoiseModel(p_gate=-0.1)

    def test_full_readout_randomization(self):
        # p_readout = 0.5 gives mean 0 whatever the state
        rng = np.random.default_rng(6)
        model = NoiseModel(p_readout=0.5, shots=1000)
        est = [sample_z_estimates(np.array([1.0]), model, rng)[0] for _ in range(2000)]
        se = 1.0 / math.sqrt(1000 * 2000)
        assert abs(np.mean(est)) < 4 * se

    def test_readout_scales_mean_at_table_rate(self):
        # reported machine readout error 1.16e-2: mean = (1-2p) z within 3 sigma
        p = 0.0116
        state = apply_gate(ZERO, Gate("ry", angle=0.8))
        z = state.z_expectation
        shots = 10**6
        rng = np.random.default_rng(7)
        model = NoiseModel(p_readout=p, shots=shots)
        est = sample_z_estimates(np.array([z]), model, rng)[0]
        want = (1 - 2 * p) * z
        p1r = (1 - want) / 2
        sigma = 2 * math.sqrt(p1r * (1 - p1r) / shots)
        assert abs(est - want) < 3 * sigma

    def test_readout_zero_matches_plain_sampling(self):
        state = apply_gate(ZERO, Gate("ry", angle=0.8))
        model = NoiseModel(shots=4096)
        a = sample_z_estimates(np.array([state.z_expectation]), model,
                               np.random.default_rng(8))[0]
        b = sample_expectation(state, 4096, np.random.default_rng(8))
        assert a == b


class TestBlochPath:
    def test_matches_amplitudes_without_noise(self):
        rng = np.random.default_rng(9)
        for _ in range(100):
            spec, x, th = random_instance(rng)
            amp = run_circuit(spec, x, th)
            bloch = run_circuit_bloch(spec, x, th, p_gate=0.0)
            assert np.allclose(amp, bloch, atol=1e-12)

    def test_depolarizing_shrinks_towards_zero(self):
        spec = rotation_block(2)
        x = np.array([0.3, -0.4])
        th = np.array([0.5, 1.2])
        clean = run_circuit_bloch(spec, x, th, p_gate=0.0)
        noisy = run_circuit_bloch(spec, x, th, p_gate=0.05)
        # 4 gates per qubit: |0> pole shrinks by (1-p)^4 along every path
        assert np.allclose(noisy, clean * 0.95**4, atol=1e-12)

    def test_full_depolarizing_kills_signal(self):
        spec = rotation_block(2)
        out = run_circuit_bloch(spec, np.ones(2), np.ones(2), p_gate=1.0)
        assert np.allclose(out, 0.0, atol=1e-15)
