import numpy as np
import pytest

from bq.qmat import ComplexMatrix, DensityMatrix


def rand_unitary(rng, d):
    """Haar-distributed unitary via QR of a complex Gaussian matrix."""
    z = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def rand_pure(rng, dims):
    d = int(np.prod(dims))
    v = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    v /= np.linalg.norm(v)
    return DensityMatrix.from_array(np.outer(v, v.conj()), dims)


def rand_density(rng, dims):
    """Full-rank random state: GG*/tr on the total space."""
    d = int(np.prod(dims))
    g = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    m = g @ g.conj().T
    m /= np.trace(m).real
    return DensityMatrix.from_array(m, dims)


def rand_hermitian(rng, d):
    g = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    return (g + g.conj().T) / 2


def trace_distance(a, b):
    w = np.linalg.eigvalsh(a - b)
    return 0.5 * float(np.abs(w).sum())


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
