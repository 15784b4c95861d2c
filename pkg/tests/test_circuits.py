import numpy as np
import pytest
import scipy.linalg as sla

from qdenoise.channels import ChannelParams, NoiseModel
from qdenoise.circuits import (
    DenoiserSpec,
    GateList,
    TrotterSpec,
    apply,
    bonds_for_layer,
    build_denoiser,
    build_trotter,
    compose,
    even_bonds,
    heisenberg_hamiltonian,
    odd_bonds,
    stack,
)
from qdenoise.pauli import (
    embed_local,
    embed_superop,
    kraus_superop,
    pauli_matrix,
    unitary_superop,
    vec,
    vectorized_identity,
)
from test_channels import random_channel_params


def exact_superop(L, t):
    return unitary_superop(sla.expm(-1j * t * heisenberg_hamiltonian(L)))


class TestBonds:
    def test_even_and_odd_cover_periodic_chain(self):
        assert even_bonds(6) == [(0, 1), (2, 3), (4, 5)]
        assert odd_bonds(6) == [(1, 2), (3, 4), (5, 0)]

    def test_odd_length_skips_wrap(self):
        assert even_bonds(3) == [(0, 1)]
        assert odd_bonds(3) == [(1, 2)]


class TestBuildTrotter:
    def test_zero_time_composes_to_identity(self):
        spec = TrotterSpec(L=4, t=0.0, m_trot=3, noise=NoiseModel(0.0))
        s = compose(build_trotter(spec, noisy=False))
        assert np.abs(s - np.eye(4**4)).max() < 1e-12

    def test_half_layer_count_paper_shape(self):
        # 17 half layers of 3 gates each for L=6, m_trot=16
        spec = TrotterSpec(L=6, t=1.0, m_trot=16, noise=NoiseModel(0.01))
        assert len(build_trotter(spec)) == 17 * 3 == 51

    @pytest.mark.parametrize("L,m", [(2, 1), (4, 2), (4, 5), (6, 8)])
    def test_gate_count_formula(self, L, m):
        spec = TrotterSpec(L=L, t=0.7, m_trot=m, noise=NoiseModel(0.0))
        assert len(build_trotter(spec)) == (m + 1) * (L // 2)

    def test_second_order_convergence_to_exact_evolution(self):
        L, t = 4, 0.3
        exact = exact_superop(L, t)
        dists = []
        for m in (2, 4, 8):
            spec = TrotterSpec(L=L, t=t, m_trot=m, noise=NoiseModel(0.0))
            s = compose(build_trotter(spec, noisy=False))
            dists.append(np.linalg.norm(s - exact))
        for a, b in zip(dists, dists[1:]):
            assert 4.0 * 0.8 < a / b < 4.0 * 1.2

    def test_noiseless_supercircuit_is_unitary(self):
        spec = TrotterSpec(L=4, t=0.9, m_trot=4, noise=NoiseModel(0.0))
        s = compose(build_trotter(spec, noisy=False))
        assert np.abs(s.conj().T @ s - np.eye(4**4)).max() < 1e-10

    def test_noisy_gates_left_multiplied_by_depolarizing(self):
        from qdenoise.channels import depolarizing_pair_superop

        spec = TrotterSpec(L=2, t=0.4, m_trot=2, noise=NoiseModel(0.05))
        clean = build_trotter(spec, noisy=False)
        noisy = build_trotter(spec, noisy=True)
        n2 = depolarizing_pair_superop(0.05)
        for (op_c, _), (op_n, _) in zip(clean.placements, noisy.placements):
            assert np.abs(op_n - n2 @ op_c).max() < 1e-13


class TestBuildDenoiser:
    def test_identity_channels_give_identity_supercircuit(self):
        spec = DenoiserSpec(L=4, depth=1, layers=(ChannelParams(), ChannelParams()),
                            noise=NoiseModel(0.0))
        s = compose(build_denoiser(spec))
        assert np.abs(s - np.eye(4**4)).max() < 1e-12

    def test_placement_counts_and_channel_sharing(self, rng):
        layers = tuple(random_channel_params(rng) for _ in range(4))
        spec = DenoiserSpec(L=4, depth=2, layers=layers, noise=NoiseModel(0.01))
        gates = build_denoiser(spec)
        assert len(gates) == 4 * 2  # 4 half layers x L/2 gates
        # gates within one half layer share one channel matrix
        for layer in range(4):
            ops = [op for op, _ in gates.placements[2 * layer : 2 * layer + 2]]
            assert np.array_equal(ops[0], ops[1])

    def test_translation_by_two_sites_maps_gate_list_to_itself(self, rng):
        L = 6
        layers = tuple(random_channel_params(rng) for _ in range(2))
        gates = build_denoiser(DenoiserSpec(L=L, depth=1, layers=layers, noise=NoiseModel(0.01)))
        shifted = {
            (tuple((s + 2) % L for s in sites), op.tobytes())
            for op, sites in gates.placements
        }
        original = {(sites, op.tobytes()) for op, sites in gates.placements}
        assert shifted == original

    def test_layer_channel_count_enforced(self):
        with pytest.raises(ValueError):
            DenoiserSpec(L=4, depth=2, layers=(ChannelParams(),), noise=NoiseModel(0.0))


class TestCompose:
    def test_empty_list_is_identity(self):
        assert np.array_equal(compose(GateList(2, ())), np.eye(16))

    def test_singleton_equals_embedded_superop(self):
        op = unitary_superop(np.kron(pauli_matrix(1), np.eye(2)))
        sx1q = unitary_superop(pauli_matrix(1))
        gates = GateList(2, ((sx1q, (0,)),))
        assert np.allclose(compose(gates), op, atol=1e-14)

    def test_two_overlapping_noisy_gates_match_basis_evolution_oracle(self, rng):
        # evolve every |i><j| basis operator with explicit Kraus conjugation
        L = 3
        p = 0.06
        u1 = sla.expm(-1j * 0.3 * heisenberg_hamiltonian(2))
        u2 = sla.expm(-1j * 0.5 * heisenberg_hamiltonian(2))
        from qdenoise.channels import _depolarizing_pair_kraus

        nk = _depolarizing_pair_kraus(p)
        gates = GateList(
            L,
            (
                (kraus_superop([k @ u1 for k in nk]), (0, 1)),
                (kraus_superop([k @ u2 for k in nk]), (1, 2)),
            ),
        )
        s = compose(gates)
        k1 = [embed_local(k @ u1, 0, L) for k in nk]
        k2 = [embed_local(k @ u2, 1, L) for k in nk]
        dim = 2**L
        for col in rng.choice(dim * dim, size=6, replace=False):
            i, j = divmod(int(col), dim)
            rho = np.zeros((dim, dim), dtype=complex)
            rho[i, j] = 1.0
            stage = sum(k @ rho @ k.conj().T for k in k1)
            stage = sum(k @ stage @ k.conj().T for k in k2)
            assert np.abs(s[:, col] - vec(stage)).max() < 1e-12

    def test_dimension_cap(self):
        with pytest.raises(ValueError):
            compose(GateList(7, ()))


class TestApply:
    def test_identity_gates_leave_vector_unchanged(self, rng):
        v = rng.standard_normal(4**3)
        gates = GateList(3, ((np.eye(16, dtype=complex), (0, 1)),))
        assert np.allclose(apply(gates, v), v)

    def test_matches_compose_on_random_gate_list(self, rng):
        L = 4
        placements = []
        for layer in range(3):
            params = random_channel_params(rng, eta1=float(rng.uniform(-0.4, 0.4)))
            from qdenoise.channels import denoiser_channel

            op = denoiser_channel(params, NoiseModel(0.02))
            for bond in bonds_for_layer(layer, L):
                placements.append((op, bond))
        gates = GateList(L, tuple(placements))
        v = rng.standard_normal(4**L) + 1j * rng.standard_normal(4**L)
        assert np.abs(apply(gates, v) - compose(gates) @ v).max() < 1e-10

    def test_trace_component_preserved_by_trace_preserving_list(self, rng):
        spec = TrotterSpec(L=4, t=0.8, m_trot=3, noise=NoiseModel(0.02))
        gates = build_trotter(spec)
        rho = rng.standard_normal((16, 16)) + 1j * rng.standard_normal((16, 16))
        rho = rho @ rho.conj().T
        v = apply(gates, vec(rho))
        tvec = vectorized_identity(4)
        assert abs(tvec @ v - np.trace(rho)) < 1e-10


class TestStack:
    def test_single_copy_unchanged(self):
        gates = GateList(2, ((np.eye(16, dtype=complex), (0, 1)),))
        assert stack(gates, 1) == gates

    def test_identity_stacks_to_identity(self):
        gates = GateList(2, ((np.eye(16, dtype=complex), (0, 1)),))
        assert np.allclose(compose(stack(gates, 2)), np.eye(16))

    def test_composition_equals_matrix_power(self, rng):
        spec = TrotterSpec(L=4, t=0.6, m_trot=2, noise=NoiseModel(0.03))
        gates = build_trotter(spec)
        single = compose(gates)
        assert np.abs(compose(stack(gates, 3)) - np.linalg.matrix_power(single, 3)).max() < 1e-10

    def test_invalid_count(self):
        with pytest.raises(ValueError):
            stack(GateList(2, ()), 0)
