"""Two-qubit channel constructors: depolarizing noise and the denoiser ansatz.

A denoiser channel is the noise-dressed, trace-preserving combination

    G = N . (eta0 * U + eta1 * M (x) M),       eta0 + eta1 = 1,

of a ZZ-dressed two-qubit unitary channel ``U`` (7 angles) and a correlated
pair of one-qubit measure-and-prepare channels ``M`` (9 angles).  ``eta1`` is
the free coefficient; ``eta0`` is derived so the trace constraint holds
exactly.  The coefficients may leave ``[0, 1]``, in which case the channel is
trace preserving but not completely positive (a quasiprobability channel).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .pauli import kraus_superop, pauli_matrix, unitary_superop

# Depolarizing strength beyond which the channel stops being CPTP.
MAX_DEPOLARIZING_P = 15.0 / 16.0

#: number of independent real parameters of one denoiser channel
CHANNEL_PARAM_COUNT = 17

_SZ = pauli_matrix(3)
_SY = pauli_matrix(2)


@dataclass(frozen=True)
class UnitaryParams:
    """ZZ angle plus two ZYZ Euler-angle triples dressing the bond."""

    alpha: float = 0.0
    kappa_a: tuple[float, float, float] = (0.0, 0.0, 0.0)
    kappa_c: tuple[float, float, float] = (0.0, 0.0, 0.0)


@dataclass(frozen=True)
class MeasurePrepParams:
    """Euler-angle triples for the prepared states and the measurement basis."""

    kappa_1: tuple[float, float, float] = (0.0, 0.0, 0.0)
    kappa_2: tuple[float, float, float] = (0.0, 0.0, 0.0)
    kappa_3: tuple[float, float, float] = (0.0, 0.0, 0.0)


@dataclass(frozen=True)
class ChannelParams:
    """All 17 real parameters of one denoiser channel; ``eta0`` is derived."""

    eta1: float = 0.0
    unitary: UnitaryParams = field(default_factory=UnitaryParams)
    measure: MeasurePrepParams = field(default_factory=MeasurePrepParams)

    @property
    def eta0(self) -> float:
        return 1.0 - self.eta1

    def to_vector(self) -> np.ndarray:
        """Flatten to the canonical 17-vector.

        Order: ``eta1, alpha, kappa_a[3], kappa_c[3], kappa_1[3], kappa_2[3],
        kappa_3[3]``.
        """
        u, m = self.unitary, self.measure
        return np.array(
            [self.eta1, u.alpha, *u.kappa_a, *u.kappa_c,
             *m.kappa_1, *m.kappa_2, *m.kappa_3]
        )

    @staticmethod
    def from_vector(x) -> "ChannelParams":
        x = np.asarray(x, dtype=float)
        if x.shape != (CHANNEL_PARAM_COUNT,):
            raise ValueError(f"channel parameter vector must have length {CHANNEL_PARAM_COUNT}")
        return ChannelParams(
            eta1=float(x[0]),
            unitary=UnitaryParams(alpha=float(x[1]), kappa_a=tuple(x[2:5]), kappa_c=tuple(x[5:8])),
            measure=MeasurePrepParams(
                kappa_1=tuple(x[8:11]), kappa_2=tuple(x[11:14]), kappa_3=tuple(x[14:17])
            ),
        )


@dataclass(frozen=True)
class NoiseModel:
    """Uniform two-qubit depolarizing noise of strength ``p``."""

    p: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.p <= MAX_DEPOLARIZING_P:
            raise ValueError(f"depolarizing p must lie in [0, 15/16], got {self.p}")


def _rz(theta: float) -> np.ndarray:
    h = theta / 2.0
    return np.array([[np.exp(-1j * h), 0.0], [0.0, np.exp(1j * h)]])


def _ry(theta: float) -> np.ndarray:
    c, s = np.cos(theta / 2.0), np.sin(theta / 2.0)
    return np.array([[c, -s], [s, c]], dtype=complex)


def one_qubit_unitary(kappa) -> np.ndarray:
    """General one-qubit unitary ``Rz(k1) Ry(k2) Rz(k3)`` (global phase dropped)."""
    k1, k2, k3 = kappa
    return _rz(k1) @ _ry(k2) @ _rz(k3)


def _one_qubit_unitary_grads(kappa):
    """Value and the three partial derivatives of :func:`one_qubit_unitary`."""
    k1, k2, k3 = kappa
    a, b, c = _rz(k1), _ry(k2), _rz(k3)
    gz = -0.5j * _SZ
    gy = -0.5j * _SY
    v = a @ b @ c
    return v, [gz @ v, a @ gy @ b @ c, v @ gz]


def _zz_rotation(alpha: float) -> np.ndarray:
    phase = np.exp(-1j * alpha)
    return np.diag([phase, phase.conj(), phase.conj(), phase])


def zz_dressed_unitary(params: UnitaryParams) -> np.ndarray:
    """Bond-symmetric two-qubit gate ``(A x A) exp(-i alpha ZZ) (C x C)``."""
    a = one_qubit_unitary(params.kappa_a)
    c = one_qubit_unitary(params.kappa_c)
    return np.kron(a, a) @ _zz_rotation(params.alpha) @ np.kron(c, c)


def measure_prepare_kraus(params: MeasurePrepParams) -> list[np.ndarray]:
    """Kraus pair of the measure-and-conditionally-prepare channel.

    Measurement in the orthonormal basis ``{V(k3)|0>, V(k3)|1>}``; outcome 0
    prepares ``V(k1)|0>``, outcome 1 prepares ``V(k2)|0>``.
    """
    psi = one_qubit_unitary(params.kappa_3)
    psi1 = one_qubit_unitary(params.kappa_1)[:, 0]
    psi2 = one_qubit_unitary(params.kappa_2)[:, 0]
    k1 = np.outer(psi1, psi[:, 0].conj())
    k2 = np.outer(psi2, psi[:, 1].conj())
    return [k1, k2]


def measure_prepare_channel(params: MeasurePrepParams) -> np.ndarray:
    """One-qubit superoperator of the measure-and-prepare channel (CPTP)."""
    return kraus_superop(measure_prepare_kraus(params))


def _measure_pair_kraus(params: MeasurePrepParams) -> list[np.ndarray]:
    """Kraus set of the correlated two-qubit measurement ``M (x) M``."""
    ks = measure_prepare_kraus(params)
    return [np.kron(ka, kb) for ka in ks for kb in ks]


def _pauli_pair_superops():
    out = []
    for a in range(4):
        for b in range(4):
            out.append(unitary_superop(np.kron(pauli_matrix(a), pauli_matrix(b))))
    return out


_PAULI_PAIR_SUPEROPS = _pauli_pair_superops()


def depolarizing_pair_superop(p: float) -> np.ndarray:
    """The 16x16 two-qubit depolarizing superoperator.

    ``(1 - 16p/15) * Id + (p/15) * sum over all 16 Pauli-pair conjugations``,
    i.e. identity with weight ``1 - p`` plus the 15 non-identity conjugations
    with weight ``p/15`` each.
    """
    out = (1.0 - 16.0 * p / 15.0) * np.eye(16, dtype=complex)
    for s in _PAULI_PAIR_SUPEROPS:
        out += (p / 15.0) * s
    return out


def _depolarizing_pair_kraus(p: float) -> list[np.ndarray]:
    ops = []
    for a in range(4):
        for b in range(4):
            w = 1.0 - p if (a, b) == (0, 0) else p / 15.0
            if w > 0.0:
                ops.append(np.sqrt(w) * np.kron(pauli_matrix(a), pauli_matrix(b)))
    return ops


def _embedded_kraus_superop(kraus_2q, site: int, L: int) -> np.ndarray:
    from .pauli import embed_local

    return kraus_superop([embed_local(k, site, L) for k in kraus_2q])


def depolarizing_channel(noise: NoiseModel, L: int = 2, site: int = 0) -> np.ndarray:
    """Depolarizing channel on the bond ``(site, site+1 mod L)``.

    With the default ``L=2`` this is the bare 16x16 bond superoperator used
    by the circuit builders; for larger ``L`` the dense embedded matrix is
    returned.
    """
    if L == 2 and site == 0:
        return depolarizing_pair_superop(noise.p)
    return _embedded_kraus_superop(_depolarizing_pair_kraus(noise.p), site, L)


def denoiser_channel_terms(params: ChannelParams, noise: NoiseModel):
    """The two noisy CPTP branches ``N.U`` and ``N.(M x M)`` as 16x16 matrices."""
    n2 = depolarizing_pair_superop(noise.p)
    nu = n2 @ unitary_superop(zz_dressed_unitary(params.unitary))
    nmm = n2 @ kraus_superop(_measure_pair_kraus(params.measure))
    return nu, nmm


def denoiser_channel(
    params: ChannelParams, noise: NoiseModel, L: int = 2, site: int = 0
) -> np.ndarray:
    """Full denoiser channel ``N . (eta0 U + eta1 M x M)`` on one bond."""
    if L == 2 and site == 0:
        nu, nmm = denoiser_channel_terms(params, noise)
        return params.eta0 * nu + params.eta1 * nmm
    nkraus = _depolarizing_pair_kraus(noise.p)
    u = zz_dressed_unitary(params.unitary)
    mm = _measure_pair_kraus(params.measure)
    nu = _embedded_kraus_superop([nk @ u for nk in nkraus], site, L)
    nmm = _embedded_kraus_superop([nk @ m for nk in nkraus for m in mm], site, L)
    return params.eta0 * nu + params.eta1 * nmm


def gamma_of(params: ChannelParams) -> float:
    """Sampling overhead ``|eta0| + |eta1|`` of one channel."""
    return abs(params.eta0) + abs(params.eta1)


def channel_with_gradients(params: ChannelParams, noise: NoiseModel):
    """Denoiser channel and its 17 parameter derivatives.

    Returns ``(G, dG)`` with ``G`` the 16x16 channel matrix and ``dG`` of
    shape ``(17, 16, 16)`` ordered as :meth:`ChannelParams.to_vector`.
    Derivatives are analytic (product rule through the rotation factors),
    which keeps them exact for the finite-difference contract of the
    optimizer.
    """
    n2 = depolarizing_pair_superop(noise.p)
    eta1 = params.eta1
    eta0 = params.eta0

    # unitary branch
    up = params.unitary
    a, da = _one_qubit_unitary_grads(up.kappa_a)
    c, dc = _one_qubit_unitary_grads(up.kappa_c)
    zz = _zz_rotation(up.alpha)
    aa, cc = np.kron(a, a), np.kron(c, c)
    u = aa @ zz @ cc
    du = [np.kron(a, a) @ (-1j * np.diag([1.0, -1.0, -1.0, 1.0])) @ zz @ cc]
    du.extend((np.kron(d, a) + np.kron(a, d)) @ zz @ cc for d in da)
    du.extend(aa @ zz @ (np.kron(d, c) + np.kron(c, d)) for d in dc)
    su = np.kron(u, u.conj())
    dsu = [np.kron(d, u.conj()) + np.kron(u, d.conj()) for d in du]

    # measurement branch
    mp = params.measure
    v1, dv1 = _one_qubit_unitary_grads(mp.kappa_1)
    v2, dv2 = _one_qubit_unitary_grads(mp.kappa_2)
    v3, dv3 = _one_qubit_unitary_grads(mp.kappa_3)
    psi, psibar = v3[:, 0], v3[:, 1]
    k = [np.outer(v1[:, 0], psi.conj()), np.outer(v2[:, 0], psibar.conj())]
    # dk[m][which kraus] for the 9 measurement angles
    dk = []
    for d in dv1:
        dk.append([np.outer(d[:, 0], psi.conj()), np.zeros((2, 2), dtype=complex)])
    for d in dv2:
        dk.append([np.zeros((2, 2), dtype=complex), np.outer(d[:, 0], psibar.conj())])
    for d in dv3:
        dk.append(
            [np.outer(v1[:, 0], d[:, 0].conj()), np.outer(v2[:, 0], d[:, 1].conj())]
        )
    pair = [np.kron(k[x], k[y]) for x in (0, 1) for y in (0, 1)]
    dpair = [
        [np.kron(dks[x], k[y]) + np.kron(k[x], dks[y]) for x in (0, 1) for y in (0, 1)]
        for dks in dk
    ]
    mm = np.zeros((16, 16), dtype=complex)
    for w in pair:
        mm += np.kron(w, w.conj())
    dmm = []
    for dws in dpair:
        d = np.zeros((16, 16), dtype=complex)
        for w, dw in zip(pair, dws):
            d += np.kron(dw, w.conj()) + np.kron(w, dw.conj())
        dmm.append(d)

    g = n2 @ (eta0 * su + eta1 * mm)
    dg = np.empty((CHANNEL_PARAM_COUNT, 16, 16), dtype=complex)
    dg[0] = n2 @ (mm - su)
    for i, d in enumerate(dsu):
        dg[1 + i] = eta0 * (n2 @ d)
    for i, d in enumerate(dmm):
        dg[8 + i] = eta1 * (n2 @ d)
    return g, dg
