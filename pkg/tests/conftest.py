"""Shared helpers for the test suite: seeded instance and vector factories."""

import pytest

from quadround import (GaussianSampler, QuadraticMap, SimplexVector,
                       precondition)
from quadround.instances import random_map, random_witness


def make_map(seed: int, n: int, k: int, condition_cap: float = 100.0) -> QuadraticMap:
    return random_map(GaussianSampler(seed), n, k, condition_cap)


def make_simplex(seed: int, k: int) -> SimplexVector:
    z = GaussianSampler(seed).normals((k,)) ** 2 + 1e-9
    return SimplexVector(z / z.sum())


def make_preconditioned(seed: int, n: int, k: int, condition_cap: float = 100.0):
    """A preconditioned random instance plus a transported random witness."""
    qmap = make_map(seed, n, k, condition_cap)
    prec = precondition(qmap)
    witness_orig = random_witness(GaussianSampler(seed + 77), qmap)
    X_hat = prec.push_witness(witness_orig)
    return prec, X_hat


@pytest.fixture
def sampler():
    return GaussianSampler(20259)
