"""Spectral and entropic supercircuit diagnostics.

Eigenvalue clouds quantify how far a channel sits from unitarity (unitary
spectra lie on the unit circle, dissipation pulls them inward, a denoiser
pushes them back out).  Entropies are computed on the normalized Choi state;
for intentionally unphysical denoisers the negative part of the spectrum is
clipped and reported separately.  All logarithms are natural.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .pauli import choi_reshape

CHOI_HERMITICITY_TOL = 1e-8


@dataclass(frozen=True)
class SpectrumReport:
    eigenvalues: np.ndarray            # sorted by modulus, descending
    mean_unit_circle_deviation: float  # mean of | |lambda| - 1 |
    spectral_radius: float


@dataclass(frozen=True)
class UnitCircleComparison:
    noisy_deviation: float
    denoiser_deviation: float
    denoised_deviation: float
    denoiser_spectral_radius: float
    denoiser_outside_unit_circle: bool
    denoised_improves: bool


@dataclass(frozen=True)
class EntropyReport:
    full_choi_entropy: float
    half_chain_entropy: float
    clipped_weight: float = 0.0


def spectrum(S: np.ndarray) -> SpectrumReport:
    """Full non-Hermitian eigenvalue report of a dense superoperator."""
    values = np.linalg.eigvals(np.asarray(S))
    order = np.argsort(-np.abs(values), kind="stable")
    values = values[order]
    deviations = np.abs(np.abs(values) - 1.0)
    return SpectrumReport(
        eigenvalues=values,
        mean_unit_circle_deviation=float(deviations.mean()),
        spectral_radius=float(np.abs(values[0])),
    )


def unit_circle_metrics(
    noisy: SpectrumReport, denoiser: SpectrumReport, denoised: SpectrumReport
) -> UnitCircleComparison:
    """Compare how far each spectrum deviates from the unit circle."""
    return UnitCircleComparison(
        noisy_deviation=noisy.mean_unit_circle_deviation,
        denoiser_deviation=denoiser.mean_unit_circle_deviation,
        denoised_deviation=denoised.mean_unit_circle_deviation,
        denoiser_spectral_radius=denoiser.spectral_radius,
        denoiser_outside_unit_circle=denoiser.spectral_radius > 1.0,
        denoised_improves=denoised.mean_unit_circle_deviation
        < noisy.mean_unit_circle_deviation,
    )


def _entropy_of_spectrum(w: np.ndarray) -> tuple[float, float]:
    """Entropy of the positive part (renormalized) and the clipped weight."""
    clipped = float(-w[w < 0.0].sum())
    pos = w[w > 0.0]
    pos = pos / pos.sum()
    return float(-(pos * np.log(pos)).sum()), clipped


def channel_entropy(S: np.ndarray, cut: int | None = None) -> EntropyReport:
    """Choi-state entropies of a supercircuit.

    ``cut`` is the number of leading sites in the half-chain reduction (both
    Choi legs of a site stay on the same side); default ``L // 2``.
    """
    S = np.asarray(S)
    state = choi_reshape(S)
    psi = state.normalized
    herm_defect = np.abs(psi - psi.conj().T).max()
    if herm_defect > CHOI_HERMITICITY_TOL:
        raise ValueError(
            f"Choi matrix is not Hermitian (defect {herm_defect:.2e}); "
            "input is not a trace-preserving supercircuit"
        )
    psi = 0.5 * (psi + psi.conj().T)
    dim = int(round(np.sqrt(S.shape[0])))
    L = int(round(np.log2(dim)))
    if cut is None:
        cut = L // 2
    if not 0 < cut < L:
        raise ValueError(f"cut must lie strictly inside the chain, got {cut}")

    full_entropy, clipped = _entropy_of_spectrum(np.linalg.eigvalsh(psi))

    # reduce onto the first `cut` sites, keeping output and input legs paired
    da, db = 2**cut, 2 ** (L - cut)
    t = psi.reshape(da, db, da, db, da, db, da, db)
    reduced = np.einsum("ixjykxly->ijkl", t).reshape(da * da, da * da)
    half_entropy, _ = _entropy_of_spectrum(np.linalg.eigvalsh(reduced))
    return EntropyReport(
        full_choi_entropy=full_entropy,
        half_chain_entropy=half_entropy,
        clipped_weight=clipped,
    )
