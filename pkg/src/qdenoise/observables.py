"""Exact benchmark observables evaluated by vector application.

All three quantities act on infinite-temperature or product initial data and
are evaluated right-to-left by applying circuits to vectorized operators, so
they work up to ``L ~ 10`` without dense supermatrices.  Circuits may be
given as :class:`GateList` or as precomposed dense superoperators.

Spin convention: ``sigma_z |0> = +|0>``; the domain wall state puts sites
``1 .. L/2`` (1-based) in ``|1>`` and the rest in ``|0>``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .circuits import GateList
from .pauli import apply_superop, embed_local, pauli_matrix, unitary_superop, vec, vec_expectation

IMAG_TOLERANCE = 1e-10


@dataclass(frozen=True)
class ObservableSpec:
    """One observable request, as consumed by the command-line layer."""

    kind: str
    i: int = 0
    j: int = 0
    n_stack: int = 1

    def __post_init__(self):
        if self.kind not in ("two_point_zz", "otoc", "domain_wall_magnetization"):
            raise ValueError(f"unknown observable kind {self.kind!r}")
        if self.n_stack < 1:
            raise ValueError("stacking count must be >= 1")


def _apply_circuit(circuit, v: np.ndarray, L: int) -> np.ndarray:
    if circuit is None:
        return v
    if isinstance(circuit, GateList):
        if circuit.L != L:
            raise ValueError(f"circuit is for L={circuit.L}, expected {L}")
        for op, sites in circuit.placements:
            v = apply_superop(op, v, sites, L)
        return v
    return np.asarray(circuit) @ v


def _sigma_z(site: int, L: int) -> np.ndarray:
    return embed_local(pauli_matrix(3), site, L)


def two_point_zz(circuit, i: int, j: int, L: int) -> float:
    """Infinite-temperature correlator ``tr(sz_i S[sz_j]) / 2**L``."""
    v = vec(_sigma_z(j, L).astype(complex))
    v = _apply_circuit(circuit, v, L)
    value = vec_expectation(_sigma_z(i, L), v) / 2**L
    if abs(value.imag) > IMAG_TOLERANCE:
        raise FloatingPointError(
            f"imaginary residue {value.imag:.2e} exceeds {IMAG_TOLERANCE}"
        )
    return float(value.real)


def otoc(forward, backward, i: int, j: int, L: int) -> float:
    """Out-of-time-ordered correlator with explicit forward/backward circuits.

    ``backward`` must implement the evolution for the reversed time; the
    conjugation by ``sz_i`` in between is applied as a one-site superoperator.
    """
    v = vec(_sigma_z(j, L).astype(complex))
    v = _apply_circuit(forward, v, L)
    conj = unitary_superop(pauli_matrix(3))
    v = apply_superop(conj, v, (i,), L)
    v = _apply_circuit(backward, v, L)
    value = vec_expectation(_sigma_z(j, L), v) / 2**L
    return float(value.real)


def domain_wall_index(L: int) -> int:
    """Computational-basis index of the domain wall product state."""
    idx = 0
    for site in range(L // 2):
        idx |= 1 << (L - 1 - site)
    return idx


def domain_wall_signs(L: int) -> np.ndarray:
    """Alternating prefactors ``(-1)**floor(2 i / L)`` for 1-based sites."""
    return np.array([(-1.0) ** ((2 * i) // L) for i in range(1, L + 1)])


def domain_wall_magnetization(circuit, L: int, n_stack: int = 1) -> float:
    """Signed magnetization after evolving the periodic domain wall state."""
    if L % 2:
        raise ValueError("domain wall magnetization needs an even chain")
    dim = 2**L
    idx = domain_wall_index(L)
    v = np.zeros(dim * dim, dtype=complex)
    v[idx * dim + idx] = 1.0
    for _ in range(n_stack):
        v = _apply_circuit(circuit, v, L)
    signs = domain_wall_signs(L)
    total = 0.0
    for site in range(L):
        total += signs[site] * vec_expectation(_sigma_z(site, L), v).real
    return float(total)
