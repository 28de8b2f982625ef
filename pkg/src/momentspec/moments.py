"""
The generalized moment operator ``Gamma: Phi -> int G Phi G^*`` and the
geometry of its range.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .exceptions import (
    DimensionMismatch,
    DimensionMismatchWithTheory,
    GridMismatch,
    NotPositiveDefinite,
    NotStable,
)
from .filter_bank import CircleGrid, covext_bank, evaluate_grid
from .linalg import from_real_coords, herm, hermitian, spectral_radius, to_real_coords

__all__ = [
    "SpectrumInput",
    "RangeGammaBasis",
    "Feasibility",
    "gamma",
    "stein_solve",
    "gamma_exact",
    "range_basis",
    "feasibility",
    "project_range",
]

FEASIBILITY_RTOL = 1e-8
RANGE_RANK_RTOL = 1e-10


@dataclass(frozen=True, eq=False)
class SpectrumInput:
    """
    A spectral density on the unit circle with values in the m x m
    positive definite matrices.

    Three representations are supported:

    ``constant``
        ``data`` is a single Hermitian matrix.
    ``grid_samples``
        ``data`` is an ``(N, m, m)`` array of samples on a :class:`CircleGrid`
        of size ``N``.
    ``rational_factor``
        ``data`` is ``(A, B, C, D)``, a stable realization of
        ``N(z) = C (zI - A)^{-1} B + D`` with ``Psi = N N^*``.

    Use the ``constant``, ``from_samples``, ``from_factor`` and
    ``from_polynomial`` constructors rather than the raw initializer.
    """

    kind: str
    data: object
    m: int

    @classmethod
    def constant(cls, C):
        C = hermitian(np.atleast_2d(C))
        if np.linalg.eigvalsh(C)[0] <= 0:
            raise NotPositiveDefinite("constant density must be positive definite")
        C.setflags(write=False)
        return cls("constant", C, C.shape[0])

    @classmethod
    def identity(cls, m):
        return cls.constant(np.eye(m))

    @classmethod
    def from_samples(cls, samples, check=True):
        samples = np.array(samples, dtype=complex)
        if samples.ndim == 1:
            samples = samples[:, None, None]
        if samples.ndim != 3 or samples.shape[1] != samples.shape[2]:
            raise DimensionMismatch(f"samples must have shape (N, m, m), got {samples.shape}")
        CircleGrid(samples.shape[0])
        gap = np.max(np.abs(samples - samples.conj().transpose(0, 2, 1)))
        if gap > 1e-12 * max(1.0, np.max(np.abs(samples))):
            raise DimensionMismatch("density samples are not Hermitian")
        samples = herm(samples)
        if check and np.min(np.linalg.eigvalsh(samples)[:, 0]) <= 0:
            raise NotPositiveDefinite("density is not positive definite on the grid")
        samples.setflags(write=False)
        return cls("grid_samples", samples, samples.shape[1])

    @classmethod
    def from_factor(cls, A, B, C, D):
        A = np.atleast_2d(np.array(A, dtype=complex))
        D = np.atleast_2d(np.array(D, dtype=complex))
        m = D.shape[0]
        if D.shape != (m, m):
            raise DimensionMismatch(f"factor must be square m x m, got D of shape {D.shape}")
        k = A.shape[0] if A.size else 0
        A = A.reshape(k, k)
        B = np.array(B, dtype=complex).reshape(k, m)
        C = np.array(C, dtype=complex).reshape(m, k)
        if spectral_radius(A) >= 1.0:
            raise NotStable("factor realization is not Schur stable")
        for M in (A, B, C, D):
            M.setflags(write=False)
        return cls("rational_factor", (A, B, C, D), m)

    @classmethod
    def from_polynomial(cls, coeffs):
        """``Psi = N N^*`` for the matrix polynomial ``N(z) = sum_k N_k z^{-k}``."""
        coeffs = np.array(coeffs, dtype=complex)
        if coeffs.ndim == 1:
            coeffs = coeffs[:, None, None]
        q, m = coeffs.shape[0] - 1, coeffs.shape[1]
        if q == 0:
            return cls.from_factor(np.zeros((0, 0)), np.zeros((0, m)), np.zeros((m, 0)), coeffs[0])
        shift = covext_bank(m, q - 1)
        C = np.hstack(coeffs[:0:-1])
        return cls.from_factor(shift.A, shift.B, C, coeffs[0])

    def factor_samples(self, grid):
        """``N(e^{j theta})`` on the grid (rational factors only)."""
        A, B, C, D = self.data
        if A.shape[0] == 0:
            return np.broadcast_to(D, (grid.size,) + D.shape).copy()
        zI_A = grid.z[:, None, None] * np.eye(A.shape[0]) - A
        return D + C @ np.linalg.solve(zI_A, np.broadcast_to(B, (grid.size,) + B.shape))

    def samples(self, grid):
        """Density values on ``grid`` as an ``(N, m, m)`` array."""
        if self.kind == "constant":
            return np.broadcast_to(self.data, (grid.size, self.m, self.m))
        if self.kind == "grid_samples":
            if self.data.shape[0] != grid.size:
                raise GridMismatch(
                    f"density sampled on {self.data.shape[0]} points, grid has {grid.size}"
                )
            return self.data
        Nz = self.factor_samples(grid)
        if np.min(np.abs(np.linalg.det(Nz))) < 1e-12:
            raise NotPositiveDefinite("rational factor is singular on the unit circle")
        return herm(Nz @ Nz.conj().transpose(0, 2, 1))

    def is_identity(self):
        return self.kind == "constant" and np.array_equal(self.data, np.eye(self.m))


def _as_samples(Phi, grid):
    if isinstance(Phi, SpectrumInput):
        return Phi.samples(grid)
    Phi = np.asarray(Phi)
    if Phi.ndim == 1:
        Phi = Phi[:, None, None]
    if Phi.ndim == 2:
        return np.broadcast_to(Phi, (grid.size,) + Phi.shape)
    if Phi.shape[0] != grid.size:
        raise GridMismatch(f"density sampled on {Phi.shape[0]} points, grid has {grid.size}")
    return Phi


def sandwich_average(left, middle, right=None):
    """Grid average of ``left @ middle @ right^*`` as one matrix product."""
    if right is None:
        right = left
    N, n, _ = left.shape
    LM = left @ middle
    k = LM.shape[2]
    lhs = LM.transpose(1, 0, 2).reshape(n, N * k)
    rhs = right.transpose(1, 0, 2).reshape(right.shape[1], N * k)
    return (lhs @ rhs.conj().T) / N


def gamma(bank, Phi, grid):
    """
    Moment operator ``int G Phi G^*`` by the trapezoid rule on ``grid``.

    ``Phi`` may be a :class:`SpectrumInput`, an ``(N, m, m)`` sample array or
    a constant ``m x m`` matrix. Constant densities skip the grid and use
    the Stein equation ``X = A X A^* + B Phi B^*``.
    """
    if isinstance(Phi, SpectrumInput) and Phi.kind == "constant":
        return stein_solve(bank.A, bank.B @ Phi.data @ bank.B.conj().T)
    samples = _as_samples(Phi, grid)
    if samples.shape[1] != bank.m:
        raise DimensionMismatch(f"density is {samples.shape[1]} x {samples.shape[1]}, bank has m={bank.m}")
    G = evaluate_grid(bank, grid)
    return herm(sandwich_average(G, samples))


def stein_solve(M, Q):
    """
    Solve the Stein equation ``X = M X M^* + Q`` for Schur stable ``M``.

    Raises
    ------
    NotStable
        If the spectral radius of ``M`` is not below one.
    """
    M = np.atleast_2d(np.asarray(M, dtype=complex))
    Q = np.atleast_2d(np.asarray(Q, dtype=complex))
    if M.shape != Q.shape or M.shape[0] != M.shape[1]:
        raise DimensionMismatch(f"M {M.shape} and Q {Q.shape} must be square of equal size")
    if spectral_radius(M) >= 1.0:
        raise NotStable("Stein equation requires a Schur stable matrix")
    X = scipy.linalg.solve_discrete_lyapunov(M, Q, method="direct" if M.shape[0] <= 20 else "bilinear")
    return herm(X)


def gamma_exact(bank, factor):
    """
    ``int G S S^* G^*`` in closed form for a stable rational ``S``.

    ``factor`` is either a :class:`SpectrumInput` of kind ``constant`` or
    ``rational_factor``, or a tuple ``(A_s, B_s, C_s, D_s)``. The cascade
    ``G S`` has realization ``([A, B C_s; 0, A_s], [B D_s; B_s], [I 0])``,
    so the integral is the leading block of its controllability Gramian.
    """
    if isinstance(factor, SpectrumInput):
        if factor.kind == "constant":
            S = scipy.linalg.cholesky(factor.data, lower=True)
            return stein_solve(bank.A, bank.B @ S @ S.conj().T @ bank.B.conj().T)
        if factor.kind != "rational_factor":
            raise DimensionMismatch("gamma_exact needs a rational or constant factor")
        factor = factor.data
    As, Bs, Cs, Ds = (np.atleast_2d(np.asarray(x, dtype=complex)) for x in factor)
    n, m = bank.n, bank.m
    if Ds.shape[0] != m:
        raise DimensionMismatch(f"factor has {Ds.shape[0]} outputs, bank has m={m}")
    k = As.shape[0] if As.size else 0
    As = As.reshape(k, k)
    Bs = Bs.reshape(k, Ds.shape[1])
    Cs = Cs.reshape(m, k)
    if spectral_radius(As) >= 1.0:
        raise NotStable("factor realization is not Schur stable")
    Ac = np.block([[bank.A, bank.B @ Cs], [np.zeros((k, n)), As]])
    Bc = np.vstack([bank.B @ Ds, Bs])
    X = stein_solve(Ac, Bc @ Bc.conj().T)
    return herm(X[:n, :n])


@dataclass(frozen=True, eq=False)
class RangeGammaBasis:
    """
    Orthonormal basis of ``Range Gamma`` in real coordinates.

    ``vectors`` has shape ``(d, n^2)``; rows are orthonormal.
    """

    vectors: np.ndarray
    n: int
    singular_values: np.ndarray

    @property
    def dim(self):
        return self.vectors.shape[0]

    def matrices(self):
        return np.array([from_real_coords(v, self.n) for v in self.vectors])

    def coords(self, H):
        """Coefficients of the projection of ``H`` on the basis."""
        return self.vectors @ to_real_coords(H)

    def from_coords(self, c):
        return from_real_coords(self.vectors.T @ np.asarray(c, dtype=float), self.n)

    def project(self, H):
        return self.from_coords(self.coords(H))


def range_basis(bank, grid=None, max_degree=None):
    """
    Orthonormal basis of ``Range Gamma``.

    ``Gamma`` is applied to the trigonometric polynomials ``E e^{jk theta}``,
    ``k = 0..2n``, ``E`` over the elementary complex ``m x m`` matrices, and
    the Hermitian parts ``X + X^*`` of the images are orthonormalized by an
    SVD in real coordinates.

    Since ``int z^k G E G^* = A^k int G E G^*``, the images form a block
    Krylov sequence; it is orthonormalized block by block (Arnoldi style)
    so that the decay of ``A^k`` does not blur the numerical rank.

    Raises
    ------
    DimensionMismatchWithTheory
        If the numerical rank differs from ``m (2n - m)``.
    """
    grid = grid or CircleGrid()
    n, m = bank.n, bank.m
    degree = 2 * n if max_degree is None else max_degree
    key = ("range", grid.size, degree)
    cached = bank._cache.get(key)
    if cached is not None:
        return cached
    G = evaluate_grid(bank, grid)
    # columns: vec(int G E_ab G^*) for every elementary E_ab
    X0 = np.einsum("tia,tjb->ijab", G, G.conj(), optimize=True) / grid.size
    block = X0.reshape(n * n, m * m)
    krylov = _orth_columns(block, np.linalg.norm(block, 2))
    new = krylov
    a_norm = max(np.linalg.norm(bank.A, 2), np.finfo(float).tiny)
    for _ in range(degree):
        if not new.shape[1]:
            break
        W = (bank.A @ new.T.reshape(-1, n, n)).reshape(-1, n * n).T
        for _ in range(2):
            W = W - krylov @ (krylov.conj().T @ W)
        new = _orth_columns(W, a_norm)
        krylov = np.hstack([krylov, new])
    images = []
    for col in krylov.T:
        Y = col.reshape(n, n)
        for c in (1.0, 1j):
            images.append(to_real_coords(herm(c * Y) * 2.0))
    _, s, Vt = np.linalg.svd(np.array(images), full_matrices=False)
    rank = int(np.sum(s > RANGE_RANK_RTOL * s[0]))
    expected = m * (2 * n - m)
    if rank != expected:
        raise DimensionMismatchWithTheory(
            f"computed rank of Range Gamma is {rank}, theory gives m(2n-m) = {expected}"
        )
    basis = RangeGammaBasis(Vt[:rank].copy(), n, s)
    basis.vectors.setflags(write=False)
    bank._cache[key] = basis
    return basis


def _orth_columns(M, scale):
    U, s, _ = np.linalg.svd(M, full_matrices=False)
    return U[:, s > RANGE_RANK_RTOL * scale]


def project_range(H, basis):
    """Orthogonal (Frobenius) projection of ``H`` onto ``Range Gamma``."""
    return basis.project(H)


@dataclass(frozen=True)
class Feasibility:
    in_range: bool
    range_residual: float
    positive_definite: bool

    @property
    def feasible(self):
        return self.in_range and self.positive_definite


def feasibility(Sigma, basis):
    """
    Check ``Sigma`` against ``Range_+ Gamma``.

    ``range_residual`` is ``||Sigma - P Sigma||_F / ||Sigma||_F`` with ``P``
    the projection onto ``Range Gamma`` (zero for ``Sigma = 0``).
    """
    Sigma = hermitian(Sigma)
    if Sigma.shape[0] != basis.n:
        raise DimensionMismatch(f"Sigma is {Sigma.shape[0]} x {Sigma.shape[0]}, expected n={basis.n}")
    norm = np.linalg.norm(Sigma)
    if norm == 0.0:
        return Feasibility(True, 0.0, False)
    resid = float(np.linalg.norm(Sigma - basis.project(Sigma)) / norm)
    pd = bool(np.linalg.eigvalsh(Sigma)[0] > 0)
    return Feasibility(resid <= FEASIBILITY_RTOL, resid, pd)
