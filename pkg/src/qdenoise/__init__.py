"""Quasiprobability denoisers for noisy Trotter supercircuits.

The package simulates spin-1/2 chain dynamics at the quantum-channel level:
noisy second-order Trotter circuits become dense superoperators acting on
vectorized density matrices, and a compressed brickwall "denoiser" of
quasiprobability-weighted channels is optimized to cancel the accumulated
gate noise.  Verification spans exact superoperator evaluation, signed
Monte Carlo resampling, and spectral/entropic diagnostics.
"""

__version__ = "0.1.0"

from .analysis import EntropyReport, SpectrumReport, channel_entropy, spectrum, unit_circle_metrics
from .channels import (
    ChannelParams,
    MeasurePrepParams,
    NoiseModel,
    UnitaryParams,
    denoiser_channel,
    depolarizing_channel,
    gamma_of,
    measure_prepare_channel,
    one_qubit_unitary,
    zz_dressed_unitary,
)
from .circuits import (
    DenoiserSpec,
    GateList,
    TrotterSpec,
    apply,
    build_denoiser,
    build_trotter,
    compose,
    stack,
)
from .observables import domain_wall_magnetization, otoc, two_point_zz
from .optimizer import (
    OptimizationReport,
    OptimizerConfig,
    epsilon,
    epsilon_gradient,
    optimize,
)
from .pauli import (
    ChoiState,
    choi_reshape,
    embed_local,
    kraus_superop,
    pauli_matrix,
    unitary_superop,
    vec,
    vec_expectation,
    vectorized_identity,
    unvec,
)
from .sampler import (
    EstimatorResult,
    QuasiDistribution,
    ShotRecord,
    hoeffding_samples,
    run_shots,
    sample_denoiser,
)
