import numpy as np
import pytest

from qdenoise.channels import ChannelParams, NoiseModel
from qdenoise.circuits import DenoiserSpec, GateList, TrotterSpec, build_trotter
from qdenoise.optimizer import (
    OptimizerConfig,
    epsilon,
    epsilon_gradient,
    flatten_params,
    optimize,
    unflatten_params,
)
from qdenoise.pauli import unitary_superop, vectorized_identity
from test_channels import random_channel_params

# Exact baseline cost with no denoiser at L=6, m_trot=16, t=1, p=0.01,
# recorded from the first trusted evaluation of this build.
L6_BASELINE_EPSILON = 0.16126793


def identity_denoiser(L, depth, p=0.0):
    layers = tuple(ChannelParams() for _ in range(2 * depth))
    return DenoiserSpec(L=L, depth=depth, layers=layers, noise=NoiseModel(p))


def random_denoiser(L, depth, p, rng):
    layers = tuple(random_channel_params(rng, eta1=float(rng.uniform(-0.4, 0.4)))
                   for _ in range(2 * depth))
    return DenoiserSpec(L=L, depth=depth, layers=layers, noise=NoiseModel(p))


class TestEpsilon:
    def test_zero_for_perfect_match(self):
        spec = TrotterSpec(L=2, t=0.5, m_trot=2, noise=NoiseModel(0.0))
        target = build_trotter(spec, noisy=False)
        noisy = build_trotter(spec, noisy=True)
        assert epsilon(target, identity_denoiser(2, 1), noisy) < 1e-28

    def test_completely_depolarized_closed_form(self, rng):
        # ||C||^2 = 4^L, ||D||^2 = 1, overlap 1  ->  eps = 1 - 4^-L
        from qdenoise.channels import depolarizing_channel
        from test_pauli import random_unitary

        L = 2
        target = unitary_superop(random_unitary(4, rng))
        noisy = GateList(L, ((depolarizing_channel(NoiseModel(15 / 16)), (0, 1)),))
        value = epsilon(target, identity_denoiser(L, 0), noisy)
        assert value == pytest.approx(1.0 - 4.0 ** (-L), abs=1e-12)

    def test_l6_baseline_regression_anchor(self, denoisers):
        base = denoisers.baseline(6, 1.0, 16, 0.01)
        assert base == pytest.approx(L6_BASELINE_EPSILON, abs=1e-7)
        assert base > 0.1

    def test_accepts_dense_matrices(self, rng):
        spec = TrotterSpec(L=2, t=0.4, m_trot=2, noise=NoiseModel(0.02))
        from qdenoise.circuits import compose

        target = build_trotter(spec, noisy=False)
        noisy = build_trotter(spec, noisy=True)
        d = random_denoiser(2, 1, 0.02, rng)
        via_gates = epsilon(target, d, noisy)
        via_dense = epsilon(compose(target), d, compose(noisy))
        assert via_gates == pytest.approx(via_dense, rel=1e-12)


class TestEpsilonGradient:
    def test_stationary_at_noiseless_identity_optimum(self):
        L = 2
        target = GateList(L, ())
        noisy = GateList(L, ())
        _, grad = epsilon_gradient(target, identity_denoiser(L, 1), noisy)
        assert np.linalg.norm(grad) < 1e-10

    @pytest.mark.parametrize("L,depth", [(2, 1), (3, 2)])
    def test_finite_difference_agreement(self, L, depth, rng):
        noise = NoiseModel(0.01)
        spec = TrotterSpec(L=L, t=0.7, m_trot=4, noise=noise)
        target = build_trotter(spec, noisy=False)
        noisy = build_trotter(spec, noisy=True)
        d = random_denoiser(L, depth, 0.01, rng)
        x = flatten_params(d.layers)
        value, grad = epsilon_gradient(target, d, noisy)
        assert value > 0
        h = 1e-5
        fd = np.empty_like(x)
        for k in range(x.size):
            xp, xm = x.copy(), x.copy()
            xp[k] += h
            xm[k] -= h
            fd[k] = (
                epsilon(target, DenoiserSpec(L, depth, unflatten_params(xp), noise), noisy)
                - epsilon(target, DenoiserSpec(L, depth, unflatten_params(xm), noise), noisy)
            ) / (2 * h)
        scale = max(np.abs(fd).max(), 1e-12)
        assert np.abs(fd - grad).max() / scale < 1e-5

    def test_eta_component_secant_check(self, rng):
        # shifting one half-layer's eta1 changes eps linearly to O(delta^2)
        L, depth = 2, 1
        noise = NoiseModel(0.02)
        spec = TrotterSpec(L=L, t=0.5, m_trot=2, noise=noise)
        target = build_trotter(spec, noisy=False)
        noisy = build_trotter(spec, noisy=True)
        d = random_denoiser(L, depth, 0.02, rng)
        x = flatten_params(d.layers)
        _, grad = epsilon_gradient(target, d, noisy)
        for delta in (1e-2, 1e-3):
            xs = x.copy()
            xs[0] += delta
            shifted = epsilon(target, DenoiserSpec(L, depth, unflatten_params(xs), noise), noisy)
            base = epsilon(target, d, noisy)
            secant = (shifted - base) / delta
            assert abs(secant - grad[0]) < 10.0 * delta


class TestOptimize:
    def test_noiseless_problem_converges_immediately(self):
        spec = TrotterSpec(L=2, t=0.5, m_trot=2, noise=NoiseModel(0.0))
        target = build_trotter(spec, noisy=False)
        noisy = build_trotter(spec, noisy=True)
        config = OptimizerConfig(max_iters=150, seed=1, plateau_patience=100)
        report = optimize(target, noisy, 1, NoiseModel(0.0), config)
        assert report.final_epsilon < 1e-6
        assert report.epsilon_trace[0] < 1e-2  # near-identity init is near-optimal

    def test_same_seed_reproduces_trace_bitwise(self):
        spec = TrotterSpec(L=2, t=0.6, m_trot=2, noise=NoiseModel(0.02))
        target = build_trotter(spec, noisy=False)
        noisy = build_trotter(spec, noisy=True)
        config = OptimizerConfig(max_iters=40, seed=7)
        r1 = optimize(target, noisy, 1, NoiseModel(0.02), config)
        r2 = optimize(target, noisy, 1, NoiseModel(0.02), config)
        assert r1.epsilon_trace == r2.epsilon_trace
        assert r1.grad_norm_trace == r2.grad_norm_trace
        assert np.array_equal(
            flatten_params(r1.best_params.layers), flatten_params(r2.best_params.layers)
        )

    def test_best_so_far_trace_monotone(self):
        spec = TrotterSpec(L=2, t=0.8, m_trot=2, noise=NoiseModel(0.03))
        target = build_trotter(spec, noisy=False)
        noisy = build_trotter(spec, noisy=True)
        config = OptimizerConfig(max_iters=120, seed=3)
        report = optimize(target, noisy, 1, NoiseModel(0.03), config)
        best = np.minimum.accumulate(report.epsilon_trace)
        assert np.all(np.diff(best) <= 0)
        assert report.final_epsilon <= report.epsilon_trace[0]

    def test_trace_constraint_is_structural(self):
        spec = TrotterSpec(L=2, t=0.5, m_trot=2, noise=NoiseModel(0.02))
        target = build_trotter(spec, noisy=False)
        noisy = build_trotter(spec, noisy=True)
        config = OptimizerConfig(max_iters=60, seed=5)
        report = optimize(target, noisy, 1, NoiseModel(0.02), config)
        tvec = vectorized_identity(2)
        from qdenoise.circuits import build_denoiser, compose

        s = compose(build_denoiser(report.best_params))
        assert np.abs(tvec @ s - tvec).max() < 1e-12
        for ch in report.best_params.layers:
            assert ch.eta0 == 1.0 - ch.eta1

    def test_restarts_keep_best(self):
        spec = TrotterSpec(L=2, t=0.7, m_trot=2, noise=NoiseModel(0.05))
        target = build_trotter(spec, noisy=False)
        noisy = build_trotter(spec, noisy=True)
        single = optimize(target, noisy, 1, NoiseModel(0.05),
                          OptimizerConfig(max_iters=50, seed=11))
        multi = optimize(target, noisy, 1, NoiseModel(0.05),
                         OptimizerConfig(max_iters=50, seed=11, restarts=3))
        assert multi.final_epsilon <= single.final_epsilon + 1e-15

    def test_depth_zero_rejected(self):
        spec = TrotterSpec(L=2, t=0.5, m_trot=2, noise=NoiseModel(0.0))
        gates = build_trotter(spec)
        with pytest.raises(ValueError):
            optimize(gates, gates, 0, NoiseModel(0.0))


class TestParameterVector:
    def test_roundtrip(self, rng):
        layers = tuple(random_channel_params(rng) for _ in range(4))
        assert unflatten_params(flatten_params(layers)) == layers

    def test_bad_length_rejected(self):
        with pytest.raises(ValueError):
            unflatten_params(np.zeros(16))
