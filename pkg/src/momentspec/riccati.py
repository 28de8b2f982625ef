"""
Stabilizing DARE solution and minimum-phase spectral factor of ``G^* Lambda G``.

For ``Lambda`` with ``G^* Lambda G > 0`` on the unit circle, ``P`` solves

    P = A^* P A - A^* P B (B^* P B)^{-1} B^* P A + Lambda

with ``A - B (B^* P B)^{-1} B^* P A`` Schur stable, ``L`` is the right
Cholesky factor of ``B^* P B`` and

    W(z) = L^{-*} B^* P A (zI - A)^{-1} B + L

satisfies ``W^* W = G^* Lambda G`` with ``W`` and ``W^{-1}`` stable.
"""

import logging
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .exceptions import NotAdmissible, NotPositiveDefinite, SolverDivergence
from .filter_bank import CircleGrid, evaluate_grid
from .linalg import cholesky_right, cholesky_right_lower, herm, hermitian, spectral_radius

__all__ = [
    "Admissibility",
    "SpectralFactor",
    "lambda_admissible",
    "dare_residual",
    "dare_stabilizing",
    "spectral_factor",
    "eval_w",
    "eval_w_inv",
]

logger = logging.getLogger(__name__)

DARE_TOL = 1e-12
DARE_MAX_STEPS = 200


@dataclass(frozen=True)
class Admissibility:
    admissible: bool
    min_eig: float


def popov_samples(bank, Lam, grid):
    """``G^* Lambda G`` on the grid, shape ``(N, m, m)``."""
    G = evaluate_grid(bank, grid)
    return herm(G.conj().transpose(0, 2, 1) @ Lam @ G)


def lambda_admissible(bank, Lam, grid=None, margin=0.0):
    """
    Grid test of ``G^* Lambda G > 0`` on the unit circle.

    ``min_eig`` is the smallest eigenvalue of ``G^* Lambda G`` over the grid;
    ``admissible`` requires ``min_eig > margin``.
    """
    grid = grid or CircleGrid()
    Lam = hermitian(Lam)
    min_eig = float(np.min(np.linalg.eigvalsh(popov_samples(bank, Lam, grid))[:, 0]))
    return Admissibility(min_eig > margin, min_eig)


def dare_residual(bank, Lam, P):
    """``P - A^*PA + A^*PB (B^*PB)^{-1} B^*PA - Lambda``."""
    A, B = bank.A, bank.B
    PA = P @ A
    BPA = B.conj().T @ PA
    BPB = B.conj().T @ P @ B
    return P - A.conj().T @ PA + BPA.conj().T @ np.linalg.solve(BPB, BPA) - Lam


def _doubling(A, G, H, tol=DARE_TOL, max_steps=DARE_MAX_STEPS):
    # Structure-preserving doubling for X = A^* X (I + G X)^{-1} A + H.
    n = A.shape[0]
    eye = np.eye(n)
    for _ in range(max_steps):
        W = eye + G @ H
        try:
            WiA = np.linalg.solve(W, A)
            WiG = np.linalg.solve(W, G)
        except np.linalg.LinAlgError:
            return None
        if not (np.all(np.isfinite(WiA)) and np.all(np.isfinite(WiG))):
            return None
        H_next = herm(H + A.conj().T @ H @ WiA)
        G = herm(G + A @ WiG @ A.conj().T)
        A = A @ WiA
        step = np.linalg.norm(H_next - H)
        H = H_next
        if step <= tol * max(np.linalg.norm(H), 1.0):
            return H
    return None


def _closed_loop(bank, P):
    A, B = bank.A, bank.B
    BPB = B.conj().T @ P @ B
    return A - B @ np.linalg.solve(BPB, B.conj().T @ P @ A)


def _accept(bank, Lam, P):
    if P is None or not np.all(np.isfinite(P)):
        return False
    BPB = herm(bank.B.conj().T @ P @ bank.B)
    if np.linalg.eigvalsh(BPB)[0] <= 0:
        return False
    if spectral_radius(_closed_loop(bank, P)) >= 1.0:
        return False
    res = np.linalg.norm(dare_residual(bank, Lam, P))
    return res <= 1e-10 * max(np.linalg.norm(Lam), 1.0)


def dare_stabilizing(bank, Lam, grid=None, check=True):
    """
    Stabilizing solution ``P`` of the DARE with zero input weight.

    The DARE has no ``R`` term, so it is shifted by ``X0 = c I``
    (``c = ||Lambda||_2``): ``X = P - X0`` solves a DARE with weights
    ``Q = Lambda - X0 + A^* X0 A``, ``S = A^* X0 B`` and ``R = B^* X0 B > 0``,
    and the same closed loop. That DARE is solved by doubling, with the
    generalized-eigenvalue (deflating subspace) method as a fallback.

    Raises
    ------
    NotAdmissible
        If ``check`` and ``G^* Lambda G`` is not positive definite on the grid.
    SolverDivergence
        If neither method yields a stabilizing solution with ``B^*PB > 0``.
    """
    Lam = hermitian(Lam)
    if check:
        adm = lambda_admissible(bank, Lam, grid)
        if not adm.admissible:
            raise NotAdmissible(f"G* Lambda G is not positive definite (min eigenvalue {adm.min_eig:.3e})")
    A, B = bank.A, bank.B
    n = bank.n
    c = np.linalg.norm(Lam, 2) or 1.0
    X0 = c * np.eye(n)
    BB = B.conj().T @ B
    Pi_perp = np.eye(n) - B @ np.linalg.solve(BB, B.conj().T)
    # the cross term S = c A^* B is eliminated in closed form
    A_t = Pi_perp @ A
    H = herm(Lam - X0 + c * A.conj().T @ Pi_perp @ A)
    G = herm(B @ np.linalg.solve(BB, B.conj().T)) / c
    X = _doubling(A_t, G, H)
    P = None if X is None else herm(X + X0)
    if not _accept(bank, Lam, P):
        logger.debug("doubling did not converge to the stabilizing solution; using deflating subspace")
        try:
            X = scipy.linalg.solve_discrete_are(
                A, B, herm(Lam - X0 + A.conj().T @ X0 @ A), c * BB, s=A.conj().T @ X0 @ B
            )
            P = herm(X + X0)
        except (ValueError, np.linalg.LinAlgError) as exc:
            raise SolverDivergence(f"DARE solvers failed: {exc}") from exc
        if not _accept(bank, Lam, P):
            raise SolverDivergence("no stabilizing DARE solution with B*PB > 0 was found")
    return P


@dataclass(frozen=True, eq=False)
class SpectralFactor:
    """
    State-space data of the minimum-phase factor ``W(z) = C_w (zI - A)^{-1} B + L``.

    ``A_cl = A - B L^{-1} C_w`` is the (stable) state matrix of ``W^{-1}``.
    """

    P: np.ndarray
    L: np.ndarray
    C_w: np.ndarray
    A_cl: np.ndarray
    bank: object
    Lam: np.ndarray

    def w(self, theta):
        return eval_w(self, theta)

    def w_inv(self, theta):
        return eval_w_inv(self, theta)

    @property
    def lower(self):
        return self.bank.factor_form == "lower"

    def solve_l(self, X):
        """``L^{-1} X``."""
        return scipy.linalg.solve_triangular(self.L, X, lower=self.lower)

    def solve_lh(self, X):
        """``L^{-*} X``."""
        return scipy.linalg.solve_triangular(self.L, X, lower=self.lower, trans="C")

    def w_grid(self, grid):
        """``W(e^{j theta})`` on the grid, shape ``(N, m, m)``."""
        return self.L + self.C_w @ evaluate_grid(self.bank, grid)

    def w_inv_grid(self, grid):
        """``W(e^{j theta})^{-1}`` on the grid via the inverse realization."""
        n, m = self.bank.n, self.bank.m
        L_inv = self.solve_l(np.eye(m))
        BL = self.bank.B @ L_inv
        zI_A = grid.z[:, None, None] * np.eye(n) - self.A_cl
        X = np.linalg.solve(zI_A, np.broadcast_to(BL, (grid.size, n, m)))
        return L_inv - L_inv @ self.C_w @ X


def spectral_factor(bank, Lam, grid=None, check=True):
    """Minimum-phase right spectral factor of ``G^* Lambda G``."""
    Lam = hermitian(Lam)
    P = dare_stabilizing(bank, Lam, grid, check=check)
    A, B = bank.A, bank.B
    lower = bank.factor_form == "lower"
    L = (cholesky_right_lower if lower else cholesky_right)(herm(B.conj().T @ P @ B))
    C_w = scipy.linalg.solve_triangular(L, B.conj().T @ P @ A, lower=lower, trans="C")
    A_cl = A - B @ scipy.linalg.solve_triangular(L, C_w, lower=lower)
    if spectral_radius(A_cl) >= 1.0:
        raise SolverDivergence("closed loop of the spectral factor is not stable")
    for M in (P, L, C_w, A_cl, Lam):
        M.setflags(write=False)
    return SpectralFactor(P, L, C_w, A_cl, bank, Lam)


def eval_w(sf, theta):
    """``W(e^{j theta})``."""
    n = sf.bank.n
    return sf.L + sf.C_w @ np.linalg.solve(np.exp(1j * theta) * np.eye(n) - sf.bank.A, sf.bank.B)


def eval_w_inv(sf, theta):
    """``W(e^{j theta})^{-1} = L^{-1} - L^{-1} C_w (zI - A_cl)^{-1} B L^{-1}``."""
    n, m = sf.bank.n, sf.bank.m
    L_inv = sf.solve_l(np.eye(m))
    X = np.linalg.solve(np.exp(1j * theta) * np.eye(n) - sf.A_cl, sf.bank.B @ L_inv)
    return L_inv - L_inv @ sf.C_w @ X
