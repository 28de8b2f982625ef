"""
Covariance extension: the companion-form filter bank, block-Toeplitz
covariance data, polynomial spectral factors and ARMA models.
"""

from dataclasses import dataclass

import numpy as np

from .estimator import EstimationOptions, Status, homotopy_solve
from .exceptions import (
    DegreeMismatch,
    DimensionMismatch,
    Infeasible,
    NormalizationFailure,
    NotCompanionForm,
    NotHermitian,
)
from .filter_bank import CircleGrid, covext_bank, covext_shape
from .linalg import HERMITIAN_TOL, herm, spectral_radius
from .moments import SpectrumInput
from .riccati import spectral_factor

__all__ = [
    "CovSequence",
    "MatrixPolynomial",
    "CovextResult",
    "ARMAModel",
    "toeplitz_assemble",
    "covs_from_spectrum",
    "sample_covariances",
    "extract_polynomial_factor",
    "covext_solve",
    "arma_from_solution",
]


@dataclass(frozen=True, eq=False)
class CovSequence:
    """Covariance lags ``C_0..C_p`` (``C_k = E y(t+k) y(t)^*``), shape ``(p+1, m, m)``."""

    blocks: np.ndarray

    def __post_init__(self):
        C = np.array(self.blocks, dtype=complex)
        if C.ndim == 1:
            C = C[:, None, None]
        if C.ndim != 3 or C.shape[1] != C.shape[2] or C.shape[0] < 1:
            raise DimensionMismatch(f"covariance blocks must have shape (p+1, m, m), got {C.shape}")
        if np.max(np.abs(C[0] - C[0].conj().T)) > HERMITIAN_TOL:
            raise NotHermitian("C_0 must be Hermitian")
        C[0] = herm(C[0])
        C.setflags(write=False)
        object.__setattr__(self, "blocks", C)

    @property
    def m(self):
        return self.blocks.shape[1]

    @property
    def p(self):
        return self.blocks.shape[0] - 1

    def toeplitz(self):
        return toeplitz_assemble(self)

    def is_positive_definite(self):
        return bool(np.linalg.eigvalsh(self.toeplitz())[0] > 0)


def toeplitz_assemble(seq):
    """Block-Toeplitz ``Sigma`` with block ``(i, j)`` equal to ``C_{i-j}`` (``C_{j-i}^*`` above)."""
    m, p = seq.m, seq.p
    n = m * (p + 1)
    Sigma = np.empty((n, n), dtype=complex)
    for i in range(p + 1):
        for j in range(p + 1):
            blk = seq.blocks[i - j] if i >= j else seq.blocks[j - i].conj().T
            Sigma[i * m:(i + 1) * m, j * m:(j + 1) * m] = blk
    return Sigma


def covs_from_spectrum(Phi, grid, p):
    """Lags ``C_k = int e^{jk theta} Phi(e^{j theta})``, ``k = 0..p``, by quadrature."""
    if isinstance(Phi, SpectrumInput):
        Phi = Phi.samples(grid)
    Phi = np.asarray(Phi)
    if Phi.ndim == 1:
        Phi = Phi[:, None, None]
    z = grid.z
    blocks = np.array([grid.average(z[:, None, None] ** k * Phi) for k in range(p + 1)])
    blocks[0] = herm(blocks[0])
    return CovSequence(blocks)


def sample_covariances(y, p):
    """
    Biased sample lags ``C_k = (1/T) sum_t y(t+k) y(t)^*`` of a time series.

    ``y`` has shape ``(T, m)`` and its sample mean is removed first. The
    biased ``1/T`` normalization keeps the block-Toeplitz matrix positive
    semidefinite.
    """
    y = np.asarray(y)
    if y.ndim == 1:
        y = y[:, None]
    T = y.shape[0]
    if T <= p:
        raise DimensionMismatch(f"need more than p={p} samples, got {T}")
    y = y - y.mean(axis=0)
    return CovSequence(np.array([y[k:].T @ y[:T - k].conj() / T for k in range(p + 1)]))


@dataclass(frozen=True, eq=False)
class MatrixPolynomial:
    """``D(z) = sum_k D_k z^{-k}``; ``coeffs`` has shape ``(p+1, m, m)``."""

    coeffs: np.ndarray

    def __post_init__(self):
        D = np.array(self.coeffs, dtype=complex)
        if D.ndim == 1:
            D = D[:, None, None]
        if D.ndim != 3 or D.shape[1] != D.shape[2]:
            raise DimensionMismatch(f"coefficients must have shape (p+1, m, m), got {D.shape}")
        D.setflags(write=False)
        object.__setattr__(self, "coeffs", D)

    @property
    def degree(self):
        return self.coeffs.shape[0] - 1

    @property
    def m(self):
        return self.coeffs.shape[1]

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        powers = z[..., None] ** -np.arange(self.degree + 1)
        return np.tensordot(powers, self.coeffs, axes=(-1, 0))

    def grid_values(self, grid):
        return self(grid.z)

    def roots(self):
        """Roots of ``det D(z)``: eigenvalues of the block companion matrix."""
        p, m = self.degree, self.m
        if p == 0:
            return np.zeros(0, dtype=complex)
        D0_inv = np.linalg.inv(self.coeffs[0])
        comp = np.zeros((p * m, p * m), dtype=complex)
        comp[:m, :] = -np.hstack([D0_inv @ Dk for Dk in self.coeffs[1:]])
        comp[m:, :-m] = np.eye((p - 1) * m)
        return np.linalg.eigvals(comp)

    def is_schur(self):
        """True when ``D_0`` is invertible and every root of ``det D`` lies in the open unit disk."""
        if abs(np.linalg.det(self.coeffs[0])) == 0.0:
            return False
        r = self.roots()
        return bool(r.size == 0 or np.max(np.abs(r)) < 1.0)

    def is_normalized(self, tol=1e-12):
        """``D_0`` lower triangular with real positive diagonal."""
        D0 = self.coeffs[0]
        d = np.diag(D0)
        return bool(
            np.max(np.abs(np.triu(D0, 1)), initial=0.0) <= tol * max(1.0, np.abs(D0).max())
            and np.all(np.abs(d.imag) <= tol * np.abs(d))
            and np.all(d.real > 0)
        )


def extract_polynomial_factor(bank, sf, grid=None, check=True):
    """
    Read the polynomial factor ``D(z)`` off a spectral factor of a
    companion-form bank.

    ``W(z) = L + sum_{k>=1} C_w A^{k-1} B z^{-k}`` terminates at ``k = p``
    because ``A`` is nilpotent, so ``D = W`` coefficient by coefficient.
    Companion banks factor with a lower-triangular ``L``, which puts ``D_0``
    in the normalized form directly. Rotating an upper-triangular ``L`` by
    a constant unitary instead would keep ``D^* D`` but change
    ``D^{-1} Psi D^{-*}`` for matrix-valued ``Psi``.

    Raises
    ------
    NotCompanionForm
        If ``bank`` is not a companion-form bank.
    NormalizationFailure
        If ``sf`` does not use the lower-triangular normalization, or the
        polynomial does not reproduce ``W`` or is not Schur.
    """
    shape = covext_shape(bank)
    if shape is None:
        raise NotCompanionForm("bank is not of covariance-extension companion form")
    if not sf.lower:
        raise NormalizationFailure("spectral factor must use the lower-triangular normalization")
    m, p = shape
    coeffs = [sf.L]
    X = bank.B
    for _ in range(p):
        coeffs.append(sf.C_w @ X)
        X = bank.A @ X
    D = MatrixPolynomial(np.array(coeffs))
    if check:
        grid = grid or CircleGrid()
        W = sf.w_grid(grid)
        Dg = D.grid_values(grid)
        err = np.max(np.linalg.norm(Dg - W, axis=(1, 2)) / np.linalg.norm(W, axis=(1, 2)))
        if err > 1e-10 or not D.is_normalized() or not D.is_schur():
            raise NormalizationFailure(f"polynomial factor check failed (grid mismatch {err:.2e})")
    return D


@dataclass(frozen=True, eq=False)
class CovextResult:
    """
    Covariance-extension outcome: the Schur factor ``D``, the estimator
    result, the lags recomputed from ``Phi = D^{-1} Psi D^{-*}`` and their
    largest block deviation from the input.
    """

    D: MatrixPolynomial
    result: object
    recovered: CovSequence = None
    max_deviation: float = float("nan")
    refined_deviation: float = float("nan")


def _implied_spectrum(D, Psi, grid):
    Dg_inv = np.linalg.inv(D.grid_values(grid))
    return herm(Dg_inv @ Psi.samples(grid) @ Dg_inv.conj().transpose(0, 2, 1))


def covext_solve(seq, Psi=None, opts=None):
    """
    Find a Schur polynomial ``D`` such that ``D^{-1} Psi D^{-*}`` has lags
    ``seq.blocks``.

    Raises
    ------
    Infeasible
        If the block-Toeplitz matrix of ``seq`` is not positive definite.
    """
    opts = opts or EstimationOptions()
    if not seq.is_positive_definite():
        raise Infeasible("block-Toeplitz covariance matrix is not positive definite")
    bank = covext_bank(seq.m, seq.p)
    if Psi is None:
        Psi = SpectrumInput.identity(seq.m)
    result = homotopy_solve(bank, seq.toeplitz(), Psi, opts)
    if result.lam is None or result.status is Status.INFEASIBLE:
        return CovextResult(None, result)
    grid = opts.grid
    try:
        sf = spectral_factor(bank, result.lam, grid)
        D = extract_polynomial_factor(bank, sf, grid)
    except Exception:
        return CovextResult(None, result)
    recovered = covs_from_spectrum(_implied_spectrum(D, Psi, grid), grid, seq.p)
    dev = float(np.max(np.abs(recovered.blocks - seq.blocks)))
    refined = float("nan")
    if opts.verify_refined and Psi.kind != "grid_samples":
        fine = grid.refined(2)
        rec_fine = covs_from_spectrum(_implied_spectrum(D, Psi, fine), fine, seq.p)
        refined = float(np.max(np.abs(rec_fine.blocks - seq.blocks)))
    return CovextResult(D, result, recovered, dev, refined)


@dataclass(frozen=True, eq=False)
class ARMAModel:
    """``sum_k ar[k] y(t-k) = sum_k ma[k] w(t-k)`` with unit-variance white ``w``."""

    ar: MatrixPolynomial
    ma: MatrixPolynomial

    def spectrum(self, grid):
        """``D^{-1} N N^* D^{-*}`` on the grid."""
        Di = np.linalg.inv(self.ar.grid_values(grid))
        H = Di @ self.ma.grid_values(grid)
        return herm(H @ H.conj().transpose(0, 2, 1))


def arma_from_solution(D, N):
    """
    ARMA model with autoregressive part ``D`` and moving-average part ``N``.

    ``N`` (a :class:`MatrixPolynomial` or coefficient array) is zero padded to
    the degree of ``D``.

    Raises
    ------
    DegreeMismatch
        If ``N`` has higher degree than ``D`` or a different size.
    """
    if not isinstance(N, MatrixPolynomial):
        N = MatrixPolynomial(N)
    if N.m != D.m:
        raise DegreeMismatch(f"MA part is {N.m} x {N.m}, AR part is {D.m} x {D.m}")
    if N.degree > D.degree:
        raise DegreeMismatch(f"MA degree {N.degree} exceeds AR degree {D.degree}")
    ma = np.zeros_like(D.coeffs)
    ma[: N.degree + 1] = N.coeffs
    return ARMAModel(D, MatrixPolynomial(ma))
