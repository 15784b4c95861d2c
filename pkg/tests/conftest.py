"""Shared fixtures, including session-cached optimized denoisers.

The expensive artifacts (optimized denoisers at L=6 and the exact L=6
baseline cost) are produced once per session through a caching factory so
the acceptance suite and module tests share them.
"""

import numpy as np
import pytest

from qdenoise import NoiseModel, OptimizerConfig, TrotterSpec, build_trotter
from qdenoise.circuits import DenoiserSpec
from qdenoise.optimizer import epsilon, optimize


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


class DenoiserFactory:
    """Session cache of optimized denoisers keyed by their full setting."""

    def __init__(self):
        self._cache = {}

    def circuits(self, L, t, m_trot, p):
        key = ("circ", L, t, m_trot, p)
        if key not in self._cache:
            spec = TrotterSpec(L=L, t=t, m_trot=m_trot, noise=NoiseModel(p))
            self._cache[key] = (
                spec,
                build_trotter(spec, noisy=False),
                build_trotter(spec, noisy=True),
            )
        return self._cache[key]

    def baseline(self, L, t, m_trot, p):
        key = ("base", L, t, m_trot, p)
        if key not in self._cache:
            _, target, noisy = self.circuits(L, t, m_trot, p)
            empty = DenoiserSpec(L=L, depth=0, layers=(), noise=NoiseModel(p))
            self._cache[key] = epsilon(target, empty, noisy)
        return self._cache[key]

    def optimized(self, L, t, m_trot, p, depth, max_iters, seed=0, patience=150):
        key = ("opt", L, t, m_trot, p, depth, max_iters, seed, patience)
        if key not in self._cache:
            _, target, noisy = self.circuits(L, t, m_trot, p)
            config = OptimizerConfig(
                max_iters=max_iters, seed=seed, plateau_patience=patience
            )
            self._cache[key] = optimize(target, noisy, depth, NoiseModel(p), config)
        return self._cache[key]


_FACTORY = DenoiserFactory()


@pytest.fixture(scope="session")
def denoisers():
    return _FACTORY
