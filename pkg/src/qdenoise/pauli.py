"""Pauli algebra, operator vectorization, and dense superoperators.

Conventions used throughout the package:

* Site 0 is the leftmost (most significant) tensor factor, so an operator
  on sites ``(0, 1)`` of an ``L``-site chain is ``kron(op, eye(2**(L-2)))``.
* Operators are vectorized row-major: component ``(i, j)`` of ``rho`` maps to
  index ``i * 2**L + j``.  With this convention the channel
  ``rho -> G rho Gdag`` has the superoperator matrix ``kron(G, G.conj())``.
* A superoperator is trace preserving iff the dual of the vectorized
  identity is a left fixed point, ``vec(1)^T S = vec(1)^T``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_PAULIS = (
    np.eye(2, dtype=complex),
    np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex),
    np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex),
    np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex),
)

# Full dense composition is restricted to matrices of dimension 4**L with
# L <= COMPOSE_MAX_SITES; beyond that only vector application is offered.
COMPOSE_MAX_SITES = 6


def pauli_matrix(alpha: int) -> np.ndarray:
    """Return the single-qubit Pauli matrix for index ``alpha`` in {0,1,2,3}."""
    if alpha not in (0, 1, 2, 3):
        raise ValueError(f"Pauli index must be in 0..3, got {alpha}")
    return _PAULIS[alpha].copy()


def check_sites(L: int) -> int:
    """Validate a chain length.  Even lengths pair all sites under PBC."""
    if L < 2:
        raise ValueError(f"chain length must be >= 2, got {L}")
    return L


def cyclic_shift(L: int, shift: int = 1) -> np.ndarray:
    """Permutation matrix moving the content of site ``s`` to ``s + shift``."""
    dim = 2**L
    perm = np.zeros(dim, dtype=np.int64)
    for x in range(dim):
        bits = [(x >> (L - 1 - s)) & 1 for s in range(L)]
        y = 0
        for s in range(L):
            y |= bits[(s - shift) % L] << (L - 1 - s)
        perm[x] = y
    p = np.zeros((dim, dim), dtype=complex)
    p[perm, np.arange(dim)] = 1.0
    return p


def embed_local(op: np.ndarray, site: int, L: int) -> np.ndarray:
    """Embed a k-qubit operator at ``site`` into an L-qubit operator.

    Placements that run past the last site wrap around periodically; the
    wrap is realized by conjugating the site-0 embedding with an explicit
    cyclic shift so that straight and wrapped placements share a code path.
    """
    dim = op.shape[0]
    k = int(round(np.log2(dim)))
    if 2**k != dim or op.shape != (dim, dim):
        raise ValueError("operator must be square with power-of-two dimension")
    if not 0 <= site < L or k > L:
        raise ValueError(f"site {site} with {k}-qubit operator does not fit L={L}")
    base = np.kron(op, np.eye(2 ** (L - k), dtype=complex))
    if site == 0:
        return base
    shift = cyclic_shift(L, site)
    return shift @ base @ shift.conj().T


def vec(mat: np.ndarray) -> np.ndarray:
    """Row-major vectorization of a square operator."""
    return np.asarray(mat).reshape(-1)


def unvec(v: np.ndarray) -> np.ndarray:
    """Inverse of :func:`vec`."""
    v = np.asarray(v)
    dim = int(round(np.sqrt(v.size)))
    return v.reshape(dim, dim)


def vectorized_identity(L: int) -> np.ndarray:
    """``|1>>``, the vectorized identity operator on ``L`` qubits."""
    return vec(np.eye(2**L, dtype=complex))


def vec_expectation(obs: np.ndarray, v: np.ndarray) -> complex:
    """``trace(obs @ rho)`` for a vectorized operator ``v = |rho>>``."""
    rho = unvec(v)
    return np.einsum("ij,ji->", obs, rho)


def unitary_superop(G: np.ndarray) -> np.ndarray:
    """Superoperator of the conjugation ``rho -> G rho Gdag``."""
    G = np.asarray(G, dtype=complex)
    if G.ndim != 2 or G.shape[0] != G.shape[1]:
        raise ValueError("G must be a square matrix")
    return np.kron(G, G.conj())


def kraus_superop(kraus_ops) -> np.ndarray:
    """Superoperator ``sum_l kron(K_l, K_l.conj())`` of a Kraus decomposition."""
    ops = [np.asarray(k, dtype=complex) for k in kraus_ops]
    if not ops:
        raise ValueError("need at least one Kraus operator")
    dim = ops[0].shape
    if any(k.shape != dim for k in ops):
        raise ValueError("Kraus operators must share one shape")
    out = np.zeros((dim[0] * dim[0], dim[1] * dim[1]), dtype=complex)
    for k in ops:
        out += np.kron(k, k.conj())
    return out


@dataclass(frozen=True)
class ChoiState:
    """Reshaped superoperator (process matrix) and its trace normalization."""

    chi: np.ndarray
    norm: float

    @property
    def normalized(self) -> np.ndarray:
        return self.chi / self.norm


def choi_reshape(S: np.ndarray) -> ChoiState:
    """Reshape a superoperator into its Choi (process) matrix.

    Row-major index transposition: ``chi[(a,b),(c,d)] = S[(a,c),(b,d)]``.
    Applying the same transposition twice recovers ``S`` exactly.  For a
    trace-preserving superoperator the normalization is ``2**L``.
    """
    S = np.asarray(S)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise ValueError("superoperator must be a square matrix")
    dim = int(round(np.sqrt(S.shape[0])))
    if dim * dim != S.shape[0]:
        raise ValueError("superoperator dimension must be a perfect square")
    chi = S.reshape(dim, dim, dim, dim).transpose(0, 2, 1, 3).reshape(S.shape)
    norm = float(np.trace(chi).real)
    return ChoiState(chi=chi, norm=norm)


def apply_superop(op: np.ndarray, arr: np.ndarray, sites, L: int) -> np.ndarray:
    """Apply a k-site gate superoperator to vectorized operators.

    ``arr`` is one vectorized operator of length ``4**L`` or a batch of them
    as columns, shape ``(4**L, n)``.  ``op`` is ``(4**k, 4**k)`` indexed by
    the local row/column bits of the listed ``sites`` (in the given order).
    The full ``4**L`` matrix is never materialized.
    """
    op = np.asarray(op)
    arr = np.asarray(arr)
    sites = tuple(sites)
    k = len(sites)
    if op.shape != (4**k, 4**k):
        raise ValueError(f"gate for {k} sites must be {4**k} x {4**k}")
    single = arr.ndim == 1
    cols = 1 if single else arr.shape[1]
    if arr.shape[0] != 4**L:
        raise ValueError(f"array of length {arr.shape[0]} does not match L={L}")
    t = arr.reshape((2,) * (2 * L) + (cols,))
    axes = [s for s in sites] + [L + s for s in sites]
    op_t = op.reshape((2,) * (4 * k))
    out = np.tensordot(op_t, t, axes=(list(range(2 * k, 4 * k)), axes))
    out = np.moveaxis(out, range(2 * k), axes)
    out = out.reshape(4**L, cols)
    return out[:, 0] if single else out


def embed_superop(op: np.ndarray, sites, L: int) -> np.ndarray:
    """Dense ``4**L`` matrix of a k-site gate superoperator at ``sites``."""
    if L > COMPOSE_MAX_SITES:
        raise ValueError(
            f"dense embedding limited to L <= {COMPOSE_MAX_SITES}, got L={L}"
        )
    return apply_superop(op, np.eye(4**L, dtype=complex), sites, L)
