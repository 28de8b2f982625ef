"""
Filter banks ``G(z) = (zI - A)^{-1} B`` and uniform grids on the unit circle.
"""

from dataclasses import dataclass, field

import numpy as np

from .exceptions import DimensionMismatch, GridMismatch, NotReachable, NotSchurStable, RankDeficientB
from .linalg import spectral_radius

__all__ = ["CircleGrid", "FilterBank", "new_bank", "covext_bank", "evaluate", "evaluate_grid", "resolvent_grid"]

DEFAULT_GRID_SIZE = 2048
RANK_RTOL = 1e-10


@dataclass(frozen=True)
class CircleGrid:
    """
    Uniform grid ``theta_k = -pi + 2 pi k / N`` with weight ``1/N`` per point.

    Averaging over the grid is the trapezoid rule for the normalized measure
    ``d theta / 2 pi``; it is exact on trigonometric polynomials of degree
    below ``N / 2``.
    """

    size: int = DEFAULT_GRID_SIZE

    def __post_init__(self):
        N = int(self.size)
        if N < 2 or N & (N - 1):
            raise ValueError(f"grid size must be a power of two >= 2, got {self.size}")
        object.__setattr__(self, "size", N)

    @property
    def theta(self):
        return -np.pi + 2.0 * np.pi * np.arange(self.size) / self.size

    @property
    def z(self):
        return np.exp(1j * self.theta)

    def average(self, samples):
        """Quadrature of grid samples (leading axis indexes the grid)."""
        samples = np.asarray(samples)
        if samples.shape[0] != self.size:
            raise GridMismatch(f"expected {self.size} samples, got {samples.shape[0]}")
        return samples.mean(axis=0)

    def refined(self, factor=2):
        return CircleGrid(self.size * factor)


def _rank(M):
    s = np.linalg.svd(M, compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.sum(s > RANK_RTOL * s[0]))


def _orth(M, scale):
    U, s, _ = np.linalg.svd(M, full_matrices=False)
    return U[:, s > RANK_RTOL * scale]


def _reachable_dim(A, B):
    # Staircase form of the controllability matrix: each Krylov block is
    # orthonormalized against the span so far, so tiny A^k B never swamps the
    # rank decision the way the raw matrix [B, AB, ..., A^{n-1}B] does.
    n = A.shape[0]
    basis = _orth(B, np.linalg.norm(B, 2))
    new = basis
    a_norm = max(np.linalg.norm(A, 2), np.finfo(float).tiny)
    while basis.shape[1] < n and new.shape[1]:
        W = A @ new
        for _ in range(2):
            W = W - basis @ (basis.conj().T @ W)
        new = _orth(W, a_norm)
        basis = np.hstack([basis, new])
    return basis.shape[1]


@dataclass(frozen=True, eq=False)
class FilterBank:
    """
    Bank of filters ``G(z) = (zI - A)^{-1} B`` with ``A`` Schur stable,
    ``B`` of full column rank and ``(A, B)`` reachable.

    Construction validates all three assumptions. Grid evaluations are
    cached per grid size.

    ``factor_form`` fixes the triangular shape of the constant term ``L``
    of spectral factors of ``G^* Lambda G``: ``"upper"`` (right Cholesky)
    or ``"lower"``.
    """

    A: np.ndarray
    B: np.ndarray
    kind: str = "explicit"
    factor_form: str = "upper"
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        A = np.array(self.A, dtype=complex)
        B = np.array(self.B, dtype=complex)
        if B.ndim == 1:
            B = B[:, None]
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise DimensionMismatch(f"A must be square, got shape {A.shape}")
        if B.ndim != 2 or B.shape[0] != A.shape[0]:
            raise DimensionMismatch(f"B must have {A.shape[0]} rows, got shape {B.shape}")
        if self.factor_form not in ("upper", "lower"):
            raise ValueError(f"factor_form must be 'upper' or 'lower', got {self.factor_form!r}")
        n, m = B.shape
        if m < 1 or n < m:
            raise DimensionMismatch(f"need n >= m >= 1, got n={n}, m={m}")
        rho = spectral_radius(A)
        if rho >= 1.0:
            raise NotSchurStable(f"A is not Schur stable: spectral radius {rho:.6g} >= 1")
        if _rank(B) < m:
            raise RankDeficientB(f"B does not have full column rank {m}")
        if _reachable_dim(A, B) < n:
            raise NotReachable("(A, B) is not reachable: controllability matrix rank < n")
        A.setflags(write=False)
        B.setflags(write=False)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)

    @property
    def n(self):
        return self.A.shape[0]

    @property
    def m(self):
        return self.B.shape[1]

    def __call__(self, theta):
        return evaluate(self, theta)

    def grid_values(self, grid):
        return evaluate_grid(self, grid)


def new_bank(A, B):
    """Validated :class:`FilterBank` from explicit ``A`` and ``B``."""
    return FilterBank(A, B)


def covext_bank(m, p):
    """
    Companion-form bank of the covariance extension problem.

    ``A`` is the ``(p+1) x (p+1)`` block shift with identity blocks on the
    super-diagonal and ``B = [0; ...; 0; I_m]``, so that
    ``G(z) = [z^{-p-1} I; ...; z^{-1} I]``. Its spectral factors use a
    lower-triangular constant term, the normalization of the polynomial
    factor ``D(z)``.
    """
    if m < 1 or p < 0:
        raise ValueError(f"need m >= 1 and p >= 0, got m={m}, p={p}")
    n = m * (p + 1)
    A = np.eye(n, k=m, dtype=complex)
    B = np.zeros((n, m), dtype=complex)
    B[-m:, :] = np.eye(m)
    return FilterBank(A, B, kind="covext", factor_form="lower")


def evaluate(bank, theta):
    """``G(e^{j theta}) = (e^{j theta} I - A)^{-1} B``."""
    zI_A = np.exp(1j * theta) * np.eye(bank.n) - bank.A
    return np.linalg.solve(zI_A, bank.B)


def evaluate_grid(bank, grid):
    """
    ``G`` at every grid point, shape ``(N, n, m)``.

    The result is cached on the bank and returned read-only.
    """
    key = ("G", grid.size)
    values = bank._cache.get(key)
    if values is None:
        zI_A = grid.z[:, None, None] * np.eye(bank.n) - bank.A
        values = np.linalg.solve(zI_A, np.broadcast_to(bank.B, (grid.size, bank.n, bank.m)))
        values.setflags(write=False)
        bank._cache[key] = values
    return values


def covext_shape(bank):
    """``(m, p)`` if ``bank`` is exactly a companion-form bank, else ``None``."""
    n, m = bank.n, bank.m
    if n % m:
        return None
    p = n // m - 1
    ref = covext_bank(m, p)
    if np.array_equal(bank.A, ref.A) and np.array_equal(bank.B, ref.B):
        return m, p
    return None


def resolvent_grid(M, R, grid, max_cond=1e4):
    """
    ``(e^{j theta} I - M)^{-1} R`` at every grid point, shape ``(N, n, k)``.

    Uses the eigendecomposition of ``M`` when its eigenvector matrix has
    condition number below ``max_cond`` and batched LU solves otherwise.
    """
    n = M.shape[0]
    if n and max_cond:
        d, V = np.linalg.eig(M)
        if np.linalg.cond(V) < max_cond:
            VR = np.linalg.solve(V, R)
            return (V[None] / (grid.z[:, None] - d[None, :])[:, None, :]) @ VR
    zI_M = grid.z[:, None, None] * np.eye(n) - M
    return np.linalg.solve(zI_M, np.broadcast_to(R, (grid.size,) + R.shape))
