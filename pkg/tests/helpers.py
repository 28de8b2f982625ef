"""Independent oracles and small utilities shared by the test modules."""

import numpy as np


def random_hermitian(rng, n):
    X = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return (X + X.conj().T) / 2


def random_hpd(rng, n):
    M = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return M.conj().T @ M + np.eye(n)


def popov(bank, Lam, theta):
    """``G^* Lambda G`` at one angle, by a direct solve."""
    n = bank.n
    G = np.linalg.solve(np.exp(1j * theta) * np.eye(n) - bank.A, bank.B)
    return G.conj().T @ Lam @ G


def scalar_factor_by_roots(q):
    """
    Outer factor of a positive scalar Laurent polynomial by root finding.

    ``q = [q_0, q_1, ..., q_p]`` describes
    ``Q(z) = q_0 + sum_k (q_k z^{-k} + conj(q_k) z^k)``. Returns the
    coefficients ``d_0 > 0, d_1, ..., d_p`` of ``D(z) = sum_k d_k z^{-k}``
    with ``|D|^2 = Q`` on the circle and all zeros of ``D`` inside the
    unit disk.
    """
    q = np.asarray(q, dtype=complex)
    p = len(q) - 1
    if p == 0:
        return np.array([np.sqrt(q[0].real)])
    # z^p Q(z) as an ordinary polynomial, highest power first
    poly = np.concatenate([np.conj(q[::-1][:-1]), [q[0]], q[1:]])
    roots = np.roots(poly)
    inside = roots[np.argsort(np.abs(roots))][:p]
    # D(z) = d0 prod (1 - r z^{-1}); fix |d0| from Q at z = 1
    monic = np.poly(inside)
    q_at_1 = q[0].real + 2 * np.sum(q[1:].real)
    d0 = np.sqrt(q_at_1 / np.abs(np.sum(monic)) ** 2)
    return d0 * monic


def stein_range_residual(bank, X):
    """
    Distance of ``X - A X A^*`` from ``{B H + H^* B^*}``, relative to
    ``||X||``; zero exactly when ``X`` lies in the range of the moment map.
    """
    A, B = bank.A, bank.B
    n, m = B.shape
    R = X - A @ X @ A.conj().T
    cols = []
    for i in range(m):
        for j in range(n):
            for val in (1.0, 1j):
                H = np.zeros((m, n), dtype=complex)
                H[i, j] = val
                M = B @ H + H.conj().T @ B.conj().T
                cols.append(np.concatenate([M.real.ravel(), M.imag.ravel()]))
    Mat = np.array(cols).T
    rhs = np.concatenate([R.real.ravel(), R.imag.ravel()])
    sol, *_ = np.linalg.lstsq(Mat, rhs, rcond=None)
    return np.linalg.norm(Mat @ sol - rhs) / max(np.linalg.norm(X), 1e-300)
