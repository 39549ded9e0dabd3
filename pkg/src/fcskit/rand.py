"""Seeded random instances used by tests, benchmarks and oracle comparisons."""

from __future__ import annotations

import numpy as np


def generator(seed: int) -> np.random.Generator:
    """The package-wide PRNG: PCG64 with an explicit integer seed."""
    return np.random.Generator(np.random.PCG64(int(seed)))


def unit_disk(rng: np.random.Generator, shape) -> np.ndarray:
    """Complex samples uniform on the closed unit disk."""
    r = np.sqrt(rng.uniform(0.0, 1.0, size=shape))
    phi = rng.uniform(0.0, 2.0 * np.pi, size=shape)
    return r * np.exp(1j * phi)


def haar_unitary(rng: np.random.Generator, n: int) -> np.ndarray:
    """Haar-distributed n x n unitary via QR of a Ginibre matrix."""
    z = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return np.ascontiguousarray(q * (d / np.abs(d)))


def orthonormal_rows(rng: np.random.Generator, k: int, n: int) -> np.ndarray:
    """k orthonormal row vectors of length n (k <= n)."""
    if k > n:
        raise ValueError("cannot draw more orthonormal vectors than the dimension")
    return np.ascontiguousarray(haar_unitary(rng, n)[:k, :])
