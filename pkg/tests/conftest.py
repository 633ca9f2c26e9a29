"""Shared helpers for the test suite.

Random inputs are always drawn from seeded generators so every run sees the
same cases; helpers that build operators return spec objects, not matrices.
"""

import numpy as np
import pytest

from shadowlab import operators as ops


def haar_unitary(rng, d):
    """Haar-distributed unitary via QR with the phase convention fixed."""
    z = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_hyperbolic_dense(rng, d, spread=(0.2, 0.8, 1.25, 5.0)):
    """Dense spec with spectrum bounded away from the unit circle."""
    lo1, hi1, lo2, hi2 = spread
    n_stable = int(rng.integers(0, d + 1))
    mods = np.concatenate(
        [
            rng.uniform(lo1, hi1, size=n_stable),
            rng.uniform(lo2, hi2, size=d - n_stable),
        ]
    )
    phases = np.exp(2j * np.pi * rng.uniform(size=d))
    lam = mods * phases
    v = haar_unitary(rng, d)
    # mild non-normality keeps conditioning tame but exercises dense paths
    w = np.eye(d) + 0.3 * rng.standard_normal((d, d))
    m = v @ w
    a = m @ np.diag(lam) @ np.linalg.inv(m)
    return ops.Dense(a), lam


def random_unit(rng, d):
    v = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    return v / np.linalg.norm(v)


def strictly_lower_nilpotent(rng, m, scale=1.0):
    """Strictly lower-triangular m x m matrix; S^m = 0 holds exactly."""
    s = np.zeros((m, m), dtype=complex)
    for i in range(1, m):
        s[i, :i] = scale * (
            rng.standard_normal(i) + 1j * rng.standard_normal(i)
        )
    return s


def unimodular(rng):
    return complex(np.exp(2j * np.pi * rng.uniform()))


@pytest.fixture
def rng():
    return np.random.default_rng(20260816)
