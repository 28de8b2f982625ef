"""
Seeded random problem instances for tests, demos and synthetic configs.

Every generator takes a :class:`numpy.random.Generator` so that a seed
fixes the instance bit for bit.
"""

import numpy as np

from .filter_bank import FilterBank
from .moments import SpectrumInput

__all__ = [
    "random_bank",
    "random_pd",
    "random_ma_polynomial",
    "random_trig_density",
    "random_stable_factor",
]


def _cnormal(rng, shape, complex_):
    X = rng.standard_normal(shape)
    if complex_:
        X = X + 1j * rng.standard_normal(shape)
    return X


def random_bank(rng, n, m, rho=(0.3, 0.85), complex_=True):
    """
    Random filter bank with spectral radius of ``A`` drawn from ``rho``.

    ``A`` is a Gaussian matrix rescaled to the drawn radius and ``B`` is
    Gaussian; both are almost surely valid, and a draw failing validation
    is replaced.
    """
    while True:
        A = _cnormal(rng, (n, n), complex_)
        r = rng.uniform(*rho)
        A *= r / np.max(np.abs(np.linalg.eigvals(A)))
        B = _cnormal(rng, (n, m), complex_)
        try:
            return FilterBank(A, B)
        except ValueError:
            continue


def random_pd(rng, n, floor=0.2, complex_=True):
    """Hermitian positive definite ``X X^* / n + floor I``."""
    X = _cnormal(rng, (n, n), complex_)
    H = X @ X.conj().T / n + floor * np.eye(n)
    return (H + H.conj().T) / 2


def random_ma_polynomial(rng, m, degree, lead=2.0, scale=0.5, complex_=True):
    """
    Coefficients ``N_0..N_degree`` with ``N_0 = lead I`` and Gaussian
    ``N_k`` scaled by ``scale``.

    With ``lead`` above the sum of the norms of the other coefficients the
    polynomial has no zeros on the circle; that is not enforced here.
    """
    coeffs = [lead * np.eye(m, dtype=complex)]
    coeffs += [scale * _cnormal(rng, (m, m), complex_) for _ in range(degree)]
    return np.array(coeffs)


def random_trig_density(rng, m, degree=2, complex_=True):
    """
    Positive definite trigonometric polynomial density ``N N^*`` as a
    :class:`SpectrumInput` in polynomial form.

    The leading coefficient dominates the others in norm, so ``N`` has no
    zeros on the circle and the density is coercive.
    """
    tail = [0.5 * _cnormal(rng, (m, m), complex_) for _ in range(degree)]
    lead = 1.0 + sum(np.linalg.norm(N, 2) for N in tail)
    return SpectrumInput.from_polynomial(np.array([lead * np.eye(m)] + tail))


def random_stable_factor(rng, m, order=2, complex_=True):
    """
    Random stable ``(A, B, C, D)`` realization of an ``m x m`` factor
    ``S(z) = C (zI - A)^{-1} B + D``.
    """
    A = _cnormal(rng, (order, order), complex_)
    A *= rng.uniform(0.2, 0.8) / np.max(np.abs(np.linalg.eigvals(A)))
    return (
        A,
        _cnormal(rng, (order, m), complex_),
        _cnormal(rng, (m, order), complex_),
        _cnormal(rng, (m, m), complex_),
    )
