"""
Dense complex Hermitian matrix helpers.

Hermitian matrices are plain ``numpy`` arrays of shape ``(n, n)``; the
functions here validate, factor and embed them. The real-coordinate
embedding maps the n x n Hermitian matrices isometrically (Frobenius inner
product) onto R^(n^2).
"""

import numpy as np

from .exceptions import (
    ConvergenceFailure,
    DimensionMismatch,
    NotHermitian,
    NotPositiveDefinite,
    NotPSD,
)

__all__ = [
    "HERMITIAN_TOL",
    "hermitian",
    "herm",
    "cholesky_right",
    "cholesky_right_lower",
    "eig_hermitian",
    "psd_sqrt",
    "to_real_coords",
    "from_real_coords",
    "frobenius_inner",
    "spectral_radius",
]

HERMITIAN_TOL = 1e-12


def herm(X):
    """Hermitian part ``(X + X^*) / 2`` (no validation)."""
    X = np.asarray(X)
    return 0.5 * (X + X.conj().swapaxes(-1, -2))


def hermitian(X, tol=HERMITIAN_TOL):
    """
    Validate ``X`` as an n x n Hermitian matrix and return a symmetrized copy.

    Parameters
    ----------
    X : array_like
        Square complex (or real) matrix.
    tol : float, default=1e-12
        Largest tolerated absolute entry of ``X - X^*``.

    Returns
    -------
    H : numpy.ndarray
        complex128 array with ``H == H^*`` exactly.

    Raises
    ------
    DimensionMismatch
        If ``X`` is not square.
    NotHermitian
        If ``X`` differs from its conjugate transpose by more than ``tol``.
    """
    X = np.array(X, dtype=complex)
    if X.ndim != 2 or X.shape[0] != X.shape[1] or X.shape[0] == 0:
        raise DimensionMismatch(f"expected a non-empty square matrix, got shape {X.shape}")
    gap = np.max(np.abs(X - X.conj().T))
    if gap > tol:
        raise NotHermitian(f"matrix is not Hermitian (max |X - X*| = {gap:.3e})")
    return herm(X)


def cholesky_right(H, tol=0.0):
    """
    Right Cholesky factor: upper-triangular ``L`` with ``L^* L = H``.

    The diagonal of ``L`` is real and positive.

    Raises
    ------
    NotPositiveDefinite
        If a pivot (squared diagonal entry of ``L``) is ``<= tol`` or the
        factorization breaks down.
    """
    H = hermitian(H)
    try:
        lower = np.linalg.cholesky(H)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite("matrix is not positive definite") from exc
    pivots = np.abs(np.diag(lower)) ** 2
    if np.any(pivots <= tol):
        raise NotPositiveDefinite(f"Cholesky pivot {pivots.min():.3e} <= tol {tol:.3e}")
    return np.triu(lower.conj().T)


def cholesky_right_lower(H, tol=0.0):
    """
    Lower-triangular ``L`` with ``L^* L = H`` and real positive diagonal.

    Obtained from :func:`cholesky_right` of the index-reversed matrix.
    """
    H = hermitian(H)
    return cholesky_right(H[::-1, ::-1], tol)[::-1, ::-1].copy()


def eig_hermitian(H):
    """Ascending eigenvalues and unitary eigenvector columns of ``H``."""
    H = hermitian(H)
    try:
        w, V = np.linalg.eigh(H)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceFailure("Hermitian eigensolver did not converge") from exc
    return w, V


def psd_sqrt(H):
    """
    Principal square root of a positive semidefinite Hermitian matrix.

    Eigenvalues in ``[-1e-12 ||H||, 0)`` are treated as round-off and clamped
    to zero; anything more negative raises :class:`NotPSD`.
    """
    w, V = eig_hermitian(H)
    scale = np.linalg.norm(H, 2) if w.size else 0.0
    if w.size and w[0] < -1e-12 * scale:
        raise NotPSD(f"matrix has eigenvalue {w[0]:.3e} < 0")
    w = np.clip(w, 0.0, None)
    return herm((V * np.sqrt(w)) @ V.conj().T)


def _offdiag_index(n):
    return np.triu_indices(n, 1)


def to_real_coords(H):
    """
    Isometric real coordinates of a Hermitian matrix.

    Layout: the ``n`` diagonal entries, then ``sqrt(2) * Re`` of the strict
    upper triangle (row-major), then ``sqrt(2) * Im`` of the same entries.
    """
    H = hermitian(H)
    iu = _offdiag_index(H.shape[0])
    s2 = np.sqrt(2.0)
    return np.concatenate([H.diagonal().real, s2 * H[iu].real, s2 * H[iu].imag])


def from_real_coords(v, n=None):
    """Inverse of :func:`to_real_coords`."""
    v = np.asarray(v, dtype=float)
    if v.ndim != 1:
        raise DimensionMismatch("real coordinates must be a 1-D vector")
    if n is None:
        n = int(round(np.sqrt(v.size)))
    if n * n != v.size:
        raise DimensionMismatch(f"{v.size} coordinates do not describe a {n} x {n} Hermitian matrix")
    iu = _offdiag_index(n)
    k = iu[0].size
    H = np.zeros((n, n), dtype=complex)
    H[np.diag_indices(n)] = v[:n]
    upper = (v[n:n + k] + 1j * v[n + k:]) / np.sqrt(2.0)
    H[iu] = upper
    H[iu[1], iu[0]] = upper.conj()
    return H


def frobenius_inner(X, Y):
    """Real Frobenius inner product ``Re tr(X^* Y)``."""
    return float(np.real(np.vdot(X, Y)))


def spectral_radius(M):
    M = np.asarray(M)
    if M.size == 0:
        return 0.0
    return float(np.max(np.abs(np.linalg.eigvals(M))))
