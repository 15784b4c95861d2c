"""Brickwall supercircuits: noisy Trotter evolution and denoiser layers.

A :class:`GateList` is an ordered sequence of (superoperator, sites)
placements; application order is list order, so composing produces the
matrix product with later gates multiplying from the left.  Even half
layers act on bonds (0,1), (2,3), ...; odd half layers on (1,2), (3,4),
..., (L-1,0), the wrap bond appearing only for even ``L``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .channels import ChannelParams, NoiseModel, denoiser_channel, depolarizing_pair_superop
from .pauli import COMPOSE_MAX_SITES, apply_superop, check_sites, pauli_matrix, unitary_superop


class Placement(NamedTuple):
    op: np.ndarray
    sites: tuple[int, ...]


@dataclass(frozen=True)
class GateList:
    """Ordered gate placements on an ``L``-site chain."""

    L: int
    placements: tuple[Placement, ...]

    def __len__(self) -> int:
        return len(self.placements)

    def __add__(self, other: "GateList") -> "GateList":
        if other.L != self.L:
            raise ValueError("cannot concatenate gate lists of different sizes")
        return GateList(self.L, self.placements + other.placements)


@dataclass(frozen=True)
class TrotterSpec:
    """Second-order Trotter circuit of the Heisenberg chain with PBC."""

    L: int
    t: float
    m_trot: int
    noise: NoiseModel = field(default_factory=NoiseModel)
    couplings: tuple[float, float, float] = (1.0, 1.0, 1.0)

    def __post_init__(self):
        check_sites(self.L)
        if self.m_trot < 1:
            raise ValueError(f"m_trot must be >= 1, got {self.m_trot}")


@dataclass(frozen=True)
class DenoiserSpec:
    """Denoiser of depth ``M``: one shared channel per half brickwall layer."""

    L: int
    depth: int
    layers: tuple[ChannelParams, ...]
    noise: NoiseModel = field(default_factory=NoiseModel)

    def __post_init__(self):
        check_sites(self.L)
        if self.depth < 0:
            raise ValueError("denoiser depth must be >= 0")
        if len(self.layers) != 2 * self.depth:
            raise ValueError(
                f"denoiser of depth {self.depth} needs {2 * self.depth} channels, "
                f"got {len(self.layers)}"
            )

    @property
    def gamma(self) -> float:
        """Total sampling overhead, the product of all per-gate overheads."""
        from .channels import gamma_of

        per_layer = len(even_bonds(self.L))
        out = 1.0
        for ch in self.layers:
            out *= gamma_of(ch) ** per_layer
        return out


def even_bonds(L: int) -> list[tuple[int, int]]:
    return [(s, s + 1) for s in range(0, L - 1, 2)]


def odd_bonds(L: int) -> list[tuple[int, int]]:
    bonds = [(s, s + 1) for s in range(1, L - 1, 2)]
    if L % 2 == 0:
        bonds.append((L - 1, 0))
    return bonds


def bonds_for_layer(layer_index: int, L: int) -> list[tuple[int, int]]:
    return even_bonds(L) if layer_index % 2 == 0 else odd_bonds(L)


def heisenberg_bond(couplings=(1.0, 1.0, 1.0)) -> np.ndarray:
    """Two-site bond Hamiltonian ``Jx XX + Jy YY + Jz ZZ``."""
    out = np.zeros((4, 4), dtype=complex)
    for j, alpha in zip(couplings, (1, 2, 3)):
        s = pauli_matrix(alpha)
        out += j * np.kron(s, s)
    return out


def heisenberg_hamiltonian(L: int, couplings=(1.0, 1.0, 1.0)) -> np.ndarray:
    """Full PBC chain Hamiltonian (used by exact-evolution cross-checks)."""
    from .pauli import embed_local

    h_bond = heisenberg_bond(couplings)
    out = np.zeros((2**L, 2**L), dtype=complex)
    for s in range(L):
        out += embed_local(h_bond, s, L)
    return out


def bond_gate(couplings, dt: float) -> np.ndarray:
    """``exp(-i dt h_bond)`` via the eigendecomposition of the bond term."""
    w, v = np.linalg.eigh(heisenberg_bond(couplings))
    return (v * np.exp(-1j * dt * w)) @ v.conj().T


def build_trotter(spec: TrotterSpec, noisy: bool = True) -> GateList:
    """Second-order Trotter supercircuit as a gate list.

    Layout: a half-step layer on even bonds, ``m_trot - 1`` alternating
    full-step half layers, and a closing half-step layer, so the sequence is
    a palindrome for even ``m_trot``.  The half step is ``t / m_trot`` and
    the full step twice that, which makes the composition converge to the
    exact evolution superoperator for time ``t`` at second order.
    """
    half = spec.t / spec.m_trot
    noise_op = depolarizing_pair_superop(spec.noise.p) if noisy else None
    placements: list[Placement] = []
    gate_cache: dict[float, np.ndarray] = {}
    for layer in range(spec.m_trot + 1):
        dt = half if layer in (0, spec.m_trot) else 2.0 * half
        if dt not in gate_cache:
            op = unitary_superop(bond_gate(spec.couplings, dt))
            gate_cache[dt] = noise_op @ op if noisy else op
        op = gate_cache[dt]
        for bond in bonds_for_layer(layer, spec.L):
            placements.append(Placement(op, bond))
    return GateList(spec.L, tuple(placements))


def build_denoiser(spec: DenoiserSpec) -> GateList:
    """Denoiser supercircuit: ``2 M`` half layers of shared noisy channels."""
    placements: list[Placement] = []
    for layer, params in enumerate(spec.layers):
        op = denoiser_channel(params, spec.noise)
        for bond in bonds_for_layer(layer, spec.L):
            placements.append(Placement(op, bond))
    return GateList(spec.L, tuple(placements))


def apply(gates: GateList, v: np.ndarray) -> np.ndarray:
    """Apply every gate in order to vectorized operators (vector or columns)."""
    out = np.asarray(v, dtype=complex)
    for op, sites in gates.placements:
        out = apply_superop(op, out, sites, gates.L)
    return out


def compose(gates: GateList, L: int | None = None) -> np.ndarray:
    """Dense ``4**L`` matrix product of the embedded gates (later = left)."""
    L = gates.L if L is None else L
    if L != gates.L:
        raise ValueError(f"gate list is for L={gates.L}, not L={L}")
    if L > COMPOSE_MAX_SITES:
        raise ValueError(f"dense composition limited to L <= {COMPOSE_MAX_SITES}")
    return apply(gates, np.eye(4**L, dtype=complex))


def stack(gates: GateList, n: int) -> GateList:
    """Concatenate ``n`` copies, approximating evolution to ``n`` times the time."""
    if n < 1:
        raise ValueError(f"stacking count must be >= 1, got {n}")
    return GateList(gates.L, gates.placements * n)
