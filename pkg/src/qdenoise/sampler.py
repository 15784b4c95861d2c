"""Quasiprobability sampling of denoiser realizations.

Each denoiser gate contributes one Bernoulli draw: the unitary branch with
probability ``|eta0| / gamma_g`` or the measure-and-prepare branch with
probability ``|eta1| / gamma_g``.  A shot carries the product of the signs
of the drawn coefficients, and the estimator rescales by the total overhead
``gamma = prod_g gamma_g``, so the shot average reproduces the exact
denoised expectation value.  Shots are simulated at the vectorized-operator
level: only the branch choice is random, gate noise stays inside the
applied channels.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channels import denoiser_channel_terms
from .circuits import DenoiserSpec, GateList, bonds_for_layer
from .pauli import apply_superop, vec_expectation


@dataclass(frozen=True)
class QuasiDistribution:
    """Per-gate branch probabilities, signs and overheads of a denoiser."""

    p_unitary: np.ndarray      # probability of the unitary branch, per gate
    signs: np.ndarray          # (n_gates, 2) signs of (eta0, eta1)
    gamma_per_gate: np.ndarray
    gamma: float
    bonds: tuple[tuple[int, int], ...]
    layer_of_gate: tuple[int, ...]


@dataclass(frozen=True)
class ShotRecord:
    """One sampled denoiser realization."""

    branches: tuple[int, ...]
    sign: int
    value: float = float("nan")


@dataclass(frozen=True)
class EstimatorResult:
    mean: float
    standard_error: float
    n_shots: int
    gamma: float
    hoeffding_bound: int


def hoeffding_samples(gamma: float, delta: float, omega: float) -> int:
    """Shot count sufficient for error ``delta`` at probability ``1 - omega``."""
    if delta <= 0:
        raise ValueError("delta must be positive")
    if not 0.0 < omega < 1.0:
        raise ValueError("omega must lie in (0, 1)")
    return math.ceil(2.0 * gamma**2 / delta**2 * math.log(2.0 / omega))


def quasi_distribution(spec: DenoiserSpec) -> QuasiDistribution:
    """Branch statistics for every gate of ``build_denoiser(spec)`` in order."""
    p_unitary, signs, gammas, bonds, layer_of_gate = [], [], [], [], []
    for layer, params in enumerate(spec.layers):
        g = abs(params.eta0) + abs(params.eta1)
        for bond in bonds_for_layer(layer, spec.L):
            p_unitary.append(abs(params.eta0) / g)
            signs.append((int(np.sign(params.eta0)) or 1, int(np.sign(params.eta1)) or 1))
            gammas.append(g)
            bonds.append(bond)
            layer_of_gate.append(layer)
    gammas = np.asarray(gammas, dtype=float)
    return QuasiDistribution(
        p_unitary=np.asarray(p_unitary, dtype=float),
        signs=np.asarray(signs, dtype=int),
        gamma_per_gate=gammas,
        gamma=float(np.prod(gammas)) if len(gammas) else 1.0,
        bonds=tuple(bonds),
        layer_of_gate=tuple(layer_of_gate),
    )


def sample_denoiser(spec: DenoiserSpec, rng) -> ShotRecord:
    """Draw branch choices and the accumulated sign for one shot."""
    if isinstance(rng, (int, np.integer)):
        rng = np.random.default_rng(rng)
    dist = quasi_distribution(spec)
    return _draw(dist, rng)


def _draw(dist: QuasiDistribution, rng) -> ShotRecord:
    u = rng.random(len(dist.p_unitary))
    branches = (u >= dist.p_unitary).astype(int)  # 0: unitary, 1: measurement
    sign = 1
    for g, b in enumerate(branches):
        sign *= dist.signs[g, b]
    return ShotRecord(branches=tuple(int(b) for b in branches), sign=int(sign))


def branch_superops(spec: DenoiserSpec) -> list[tuple[np.ndarray, np.ndarray]]:
    """Per half layer, the noisy (unitary, measurement) branch channels."""
    return [denoiser_channel_terms(params, spec.noise) for params in spec.layers]


def run_shots(
    trotter: GateList,
    spec: DenoiserSpec,
    observable: np.ndarray,
    initial_state: np.ndarray,
    n_shots: int,
    seed: int = 0,
    delta: float = 0.05,
    omega: float = 0.1,
) -> EstimatorResult:
    """Monte Carlo estimate of the denoised observable from signed shots.

    Applies the noisy circuit once (it is deterministic), then per shot a
    sampled denoiser realization, and averages ``gamma * sign * <O>``.
    """
    if n_shots < 1:
        raise ValueError("n_shots must be >= 1 (empty budget)")
    L = spec.L
    rng = np.random.default_rng(seed)
    dist = quasi_distribution(spec)
    branches_ops = branch_superops(spec)
    base = np.asarray(initial_state, dtype=complex)
    for op, sites in trotter.placements:
        base = apply_superop(op, base, sites, L)
    values = np.empty(n_shots)
    for shot in range(n_shots):
        record = _draw(dist, rng)
        v = base
        for g, branch in enumerate(record.branches):
            op = branches_ops[dist.layer_of_gate[g]][branch]
            v = apply_superop(op, v, dist.bonds[g], L)
        raw = vec_expectation(observable, v)
        value = dist.gamma * record.sign * raw.real
        if not np.isfinite(value):
            raise FloatingPointError(f"non-finite observable at shot {shot}")
        values[shot] = value
    mean = float(values.mean())
    sdev = float(values.std(ddof=1)) if n_shots > 1 else 0.0
    return EstimatorResult(
        mean=mean,
        standard_error=sdev / math.sqrt(n_shots),
        n_shots=n_shots,
        gamma=dist.gamma,
        hoeffding_bound=hoeffding_samples(dist.gamma, delta, omega),
    )
