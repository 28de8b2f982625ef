"""
Solvers for the constrained spectral estimation problem: find ``Lambda``
with ``G^* Lambda G > 0`` on the unit circle such that

    Phi_Lambda = W_Lambda^{-1} Psi W_Lambda^{-*}

satisfies ``int G Phi_Lambda G^* = Sigma``.

``maxent_solve`` handles ``Psi = I`` by Newton's method on a convex dual;
``homotopy_solve`` continues that solution along the prior blend
``t Psi + (1 - t) I`` using the multiplicative fixed-point iteration

    Lambda_{k+1} = Lambda_k^{1/2} omega(Lambda_k) Lambda_k^{1/2}

on the problem normalized to ``Sigma = I``.
"""

import enum
import logging
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.linalg

from .exceptions import (
    Infeasible,
    MaxIterations,
    NotAdmissible,
    NotPositiveDefinite,
    NotPSD,
    SolverDivergence,
)
from .filter_bank import CircleGrid, FilterBank, evaluate_grid, resolvent_grid
from .linalg import eig_hermitian, herm, hermitian, psd_sqrt
from .moments import SpectrumInput, feasibility, gamma, range_basis, sandwich_average
from .riccati import lambda_admissible, popov_samples, spectral_factor

__all__ = [
    "Status",
    "EstimationOptions",
    "TraceRecord",
    "EstimationResult",
    "phi_lambda",
    "omega",
    "omega_tilde",
    "homotopy_density",
    "fixed_point_step",
    "normalize_problem",
    "maxent_solve",
    "homotopy_solve",
    "moment_residual",
]

logger = logging.getLogger(__name__)


class Status(str, enum.Enum):
    CONVERGED = "Converged"
    MAX_ITERATIONS = "MaxIterations"
    HOMOTOPY_STUCK = "HomotopyStuck"
    INFEASIBLE = "Infeasible"


@dataclass(frozen=True)
class EstimationOptions:
    """
    Solver settings.

    ``tol_fp`` bounds the relative fixed-point increment
    ``||Lambda_{k+1} - Lambda_k||_F / ||Lambda_k||_F``; ``tol_mom`` bounds
    the relative moment residual ``||Gamma(Phi) - Sigma||_F / ||Sigma||_F``.
    The homotopy starts with step ``dt_init``, halves it on failure and
    gives up below ``dt_min``. When the fixed-point iteration contracts so
    slowly that more than ``fp_patience`` further steps would be needed,
    the stage switches to a Newton corrector.
    """

    grid_size: int = 2048
    tol_fp: float = 1e-9
    tol_mom: float = 1e-6
    max_iter: int = 5000
    dt_init: float = 0.1
    dt_min: float = 1e-4
    divergence_window: int = 50
    admissibility_margin: float = 0.0
    newton_max_iter: int = 100
    fp_patience: int = 1000
    verify_refined: bool = True

    def __post_init__(self):
        if min(self.tol_fp, self.tol_mom, self.dt_min) <= 0:
            raise ValueError("tolerances must be positive")
        if not self.dt_min < self.dt_init <= 1.0:
            raise ValueError("need 0 < dt_min < dt_init <= 1")
        if min(self.max_iter, self.newton_max_iter, self.divergence_window, self.fp_patience) < 1:
            raise ValueError("iteration limits must be positive")
        CircleGrid(self.grid_size)

    @property
    def grid(self):
        return CircleGrid(self.grid_size)


@dataclass(frozen=True)
class TraceRecord:
    t: float
    k: int
    step_norm: float
    residual: float

    def as_dict(self):
        return {"t": self.t, "k": self.k, "step_norm": self.step_norm, "residual": self.residual}


@dataclass(frozen=True, eq=False)
class EstimationResult:
    """
    Outcome of a solve.

    ``lam`` is the solution projected onto ``Range Gamma``; ``lam_psd`` is a
    positive definite matrix with the same ``G^* Lambda G`` (the iterate the
    fixed-point method actually carries), when one is available.
    ``refined_residual`` repeats the moment check on a grid twice as fine.
    """

    status: Status
    lam: np.ndarray = None
    moment_residual: float = float("nan")
    phi: np.ndarray = None
    trace: tuple = ()
    grid: CircleGrid = None
    lam_psd: np.ndarray = None
    refined_residual: float = float("nan")
    t_reached: float = 0.0
    message: str = ""

    @property
    def converged(self):
        return self.status is Status.CONVERGED


def _psi_samples(Psi, grid, m):
    if Psi is None:
        return np.broadcast_to(np.eye(m), (grid.size, m, m))
    if isinstance(Psi, SpectrumInput):
        return Psi.samples(grid)
    return SpectrumInput.from_samples(Psi).samples(grid)


def phi_lambda(bank, Lam, Psi, grid, sf=None):
    """
    ``W^{-1} Psi W^{-*}`` on the grid, shape ``(N, m, m)``.

    Raises
    ------
    NotAdmissible
        If ``G^* Lambda G`` is not positive definite on the grid.
    """
    if sf is None:
        sf = spectral_factor(bank, Lam, grid)
    Wi = sf.w_inv_grid(grid)
    return herm(Wi @ _psi_samples(Psi, grid, bank.m) @ Wi.conj().transpose(0, 2, 1))


def omega(bank, Lam, Psi, grid, sf=None):
    """``int G Phi_Lambda G^*``."""
    if sf is None:
        sf = spectral_factor(bank, Lam, grid)
    GWi = evaluate_grid(bank, grid) @ sf.w_inv_grid(grid)
    return herm(sandwich_average(GWi, _psi_samples(Psi, grid, bank.m)))


def omega_tilde(bank, Lam, grid):
    """``int G (G^* Lambda G)^{-1} G^*`` (the ``Psi = I`` case, no factorization)."""
    Q = popov_samples(bank, hermitian(Lam), grid)
    if np.min(np.linalg.eigvalsh(Q)[:, 0]) <= 0:
        raise NotAdmissible("G* Lambda G is not positive definite on the grid")
    G = evaluate_grid(bank, grid)
    Qi = herm(np.linalg.inv(Q))
    return herm(sandwich_average(G, Qi))


def moment_residual(bank, Lam, Psi, Sigma, grid):
    """Relative moment mismatch ``||omega(Lambda) - Sigma||_F / ||Sigma||_F``."""
    return float(np.linalg.norm(omega(bank, Lam, Psi, grid) - Sigma) / np.linalg.norm(Sigma))


def homotopy_density(Psi, t, grid):
    """Prior blend ``t Psi + (1 - t) I``; constant ``I`` at ``t = 0``, ``Psi`` at ``t = 1``."""
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"t must lie in [0, 1], got {t}")
    m = Psi.m
    if t == 0.0:
        return SpectrumInput.identity(m)
    if t == 1.0:
        return Psi
    if Psi.kind == "constant":
        return SpectrumInput.constant(t * Psi.data + (1.0 - t) * np.eye(m))
    return SpectrumInput.from_samples(t * Psi.samples(grid) + (1.0 - t) * np.eye(m), check=False)


def _shaped_filter(bank, sf, grid):
    # G W^{-1} = (zI - A_cl)^{-1} B L^{-1} (push-through identity)
    L_inv = sf.solve_l(np.eye(bank.m))
    return resolvent_grid(sf.A_cl, bank.B @ L_inv, grid)


def _fp_update(bank, Lam, psi_samples, grid):
    # a successful stabilizing factorization certifies G^* Lambda G = W^* W > 0
    sf = spectral_factor(bank, Lam, grid, check=False)
    Om = herm(sandwich_average(_shaped_filter(bank, sf, grid), psi_samples))
    root = psd_sqrt(Lam)
    return herm(root @ Om @ root), Om


def fixed_point_step(bank, Lam, Psi, grid):
    """
    One step ``Lambda^{1/2} omega(Lambda) Lambda^{1/2}`` of the fixed-point map.

    The problem is assumed normalized to ``Sigma = I``, so fixed points with
    ``Lambda > 0`` are exactly the solutions ``omega(Lambda) = I``. The
    update is returned unprojected: it stays positive semidefinite, whereas
    its projection onto ``Range Gamma`` (same ``G^* Lambda G``) in general
    does not.

    Raises
    ------
    NotAdmissible
        If ``Lambda`` is not admissible.
    NotPSD
        If ``Lambda`` is not positive semidefinite.
    """
    Lam = hermitian(Lam)
    new, _ = _fp_update(bank, Lam, _psi_samples(Psi, grid, bank.m), grid)
    return new


class BackMap:
    """
    Congruence linking a problem to its ``Sigma = I`` normalization.

    With ``T = Sigma^{-1/2}`` the normalized bank is ``(T A T^{-1}, T B)``
    and ``G'^* Lambda' G' = G^* (T^* Lambda' T) G``.
    """

    def __init__(self, T, T_inv):
        self.T = T
        self.T_inv = T_inv

    def __call__(self, Lam_n):
        return herm(self.T.conj().T @ Lam_n @ self.T)

    def forward(self, Lam):
        return herm(self.T_inv.conj().T @ Lam @ self.T_inv)


def normalize_problem(bank, Sigma):
    """
    Change state coordinates so the moment constraint becomes ``Gamma'(Phi) = I``.

    Returns
    -------
    bank_n : FilterBank
        ``(T A T^{-1}, T B)`` with ``T = Sigma^{-1/2}``.
    back_map : BackMap
        Maps a normalized solution ``Lambda'`` to ``T^* Lambda' T``.
    """
    Sigma = hermitian(Sigma)
    w, V = eig_hermitian(Sigma)
    if w[0] <= 0:
        raise NotPositiveDefinite("Sigma must be positive definite")
    T = herm((V / np.sqrt(w)) @ V.conj().T)
    T_inv = herm((V * np.sqrt(w)) @ V.conj().T)
    if np.array_equal(Sigma, np.eye(bank.n)):
        return bank, BackMap(np.eye(bank.n), np.eye(bank.n))
    bank_n = FilterBank(T @ bank.A @ T_inv, T @ bank.B, kind="normalized", factor_form=bank.factor_form)
    return bank_n, BackMap(T, T_inv)


def _dual_value(Lam, Sigma, Q):
    logdet = np.sum(np.log(np.linalg.eigvalsh(Q)), axis=1)
    return float(np.real(np.vdot(Lam, Sigma)) - logdet.mean())


def maxent_solve(bank, Sigma, opts=None, grid=None, basis=None, t_label=0.0, check=True):
    """
    Solve ``int G (G^* Lambda G)^{-1} G^* = Sigma`` for ``Lambda`` in ``Range Gamma``.

    Damped Newton on the strictly convex function
    ``J(Lambda) = <Lambda, Sigma> - int log det(G^* Lambda G)`` whose
    gradient is ``Sigma - omega_tilde(Lambda)``, with backtracking that keeps
    iterates admissible.

    ``check=False`` skips the feasibility test, for callers that certified
    ``Sigma`` before a change of coordinates. After normalizing a badly
    conditioned ``Sigma`` the basis of ``Range Gamma`` carries errors of
    order ``eps cond(Sigma)^{1/2}`` and the test would reject a feasible
    problem.

    Raises
    ------
    Infeasible
        If ``Sigma`` is not in ``Range_+ Gamma``.
    MaxIterations
        If Newton's method does not reach ``opts.tol_mom``.
    """
    opts = opts or EstimationOptions()
    grid = grid or opts.grid
    Sigma = hermitian(Sigma)
    basis = basis or range_basis(bank, grid)
    feas = feasibility(Sigma, basis) if check else None
    if check and not feas.feasible:
        raise Infeasible(
            f"Sigma not in Range_+ Gamma (range residual {feas.range_residual:.2e}, "
            f"positive definite: {feas.positive_definite})"
        )
    G = evaluate_grid(bank, grid)
    Gh = G.conj().transpose(0, 2, 1)
    mats = basis.matrices()
    # K[i] = G^* B_i G on the grid
    K = np.einsum("tai,dab,tbj->dtij", G.conj(), mats, G, optimize=True)
    sig_norm = np.linalg.norm(Sigma)
    sig_c = basis.coords(Sigma)

    c = basis.coords(np.eye(bank.n) / bank.n)
    Lam = basis.from_coords(c)
    scale = bank.m / np.real(np.vdot(Lam, Sigma))
    c = c * scale
    Lam = Lam * scale

    Q = herm(Gh @ Lam @ G)
    J = _dual_value(Lam, Sigma, Q)
    trace = []
    target = min(opts.tol_mom, 1e-12)
    for k in range(opts.newton_max_iter + 1):
        Qi = herm(np.linalg.inv(Q))
        Om = herm(sandwich_average(G, Qi))
        resid = float(np.linalg.norm(Om - Sigma) / sig_norm)
        grad = sig_c - basis.coords(Om)
        trace.append((k, resid))
        if resid <= target:
            break
        if k == opts.newton_max_iter:
            break
        QiK = Qi[None] @ K
        hess = np.real(np.einsum("dtij,etji->de", QiK, QiK, optimize=True)) / grid.size
        step = -scipy.linalg.solve(hess, grad, assume_a="pos")
        slope = float(grad @ step)
        if -slope < 1e-28 * max(1.0, abs(J)):
            break
        alpha = 1.0
        while alpha > 1e-12:
            c_try = c + alpha * step
            Lam_try = basis.from_coords(c_try)
            Q_try = herm(Gh @ Lam_try @ G)
            if np.min(np.linalg.eigvalsh(Q_try)[:, 0]) > 0:
                J_try = _dual_value(Lam_try, Sigma, Q_try)
                if J_try <= J + 1e-4 * alpha * slope or alpha == 1.0 and resid < 1e-6:
                    break
            alpha *= 0.5
        else:
            break
        c, Lam, Q, J = c_try, Lam_try, Q_try, J_try
    records = tuple(TraceRecord(t_label, k, float("nan"), r) for k, r in trace)
    resid = trace[-1][1]
    if resid > opts.tol_mom:
        raise MaxIterations(f"Newton stopped at relative moment residual {resid:.3e}")
    phi = herm(np.linalg.inv(Q))
    return EstimationResult(
        Status.CONVERGED,
        lam=Lam,
        moment_residual=resid,
        phi=phi,
        trace=records,
        grid=grid,
        lam_psd=Lam if np.linalg.eigvalsh(Lam)[0] > 0 else None,
        t_reached=0.0,
    )


def _pd_representative(bank, Lam, grid):
    # V = L^{-*} B^* P gives z V G = W, so V^* V has the same G^* Lambda G;
    # a multiple of I restores full rank without moving far from it.
    sf = spectral_factor(bank, Lam, grid)
    V = sf.solve_lh(bank.B.conj().T @ sf.P)
    R = herm(V.conj().T @ V)
    return herm(R + 0.1 * np.linalg.norm(R, 2) / bank.n * np.eye(bank.n))


class _StageFailure(Exception):
    pass


class _FixedPointStall(_StageFailure):
    def __init__(self, msg, last):
        super().__init__(msg)
        self.last = last


def _correct(bank, Lam, psi_samples, grid, opts, t, trace, final):
    """Fixed-point iterations at fixed ``t``; returns the converged iterate."""
    n = bank.n
    eye = np.eye(n)
    rising = 0
    prev_resid = np.inf
    steps = []
    for k in range(opts.max_iter):
        try:
            new, Om = _fp_update(bank, Lam, psi_samples, grid)
        except (NotAdmissible, NotPSD, SolverDivergence, NotPositiveDefinite) as exc:
            raise _StageFailure(str(exc)) from exc
        resid = float(np.linalg.norm(Om - eye) / np.sqrt(n))
        step = float(np.linalg.norm(new - Lam) / np.linalg.norm(Lam))
        trace.append(TraceRecord(t, k, step, resid))
        if not np.all(np.isfinite(new)):
            raise _StageFailure("non-finite iterate")
        rising = rising + 1 if resid > prev_resid else 0
        if rising >= opts.divergence_window:
            raise _StageFailure(f"moment residual grew for {rising} consecutive steps")
        prev_resid = resid
        if step <= opts.tol_fp and (not final or resid <= opts.tol_mom):
            return Lam if step == 0.0 else new
        steps.append(step)
        if len(steps) > 50:
            rate = (steps[-1] / steps[-21]) ** (1.0 / 20.0)
            needed = np.inf if rate >= 1.0 else np.log(opts.tol_fp / step) / np.log(rate)
            if needed > min(opts.fp_patience, opts.max_iter - k):
                raise _FixedPointStall(f"fixed-point contraction rate {rate:.4f} at t={t:.6g}", new)
        Lam = new
    raise _StageFailure(f"no convergence within {opts.max_iter} iterations")


def _omega_or_fail(bank, Lam, psi_samples, grid):
    try:
        sf = spectral_factor(bank, Lam, grid, check=False)
    except (SolverDivergence, NotPositiveDefinite) as exc:
        raise NotAdmissible(str(exc)) from exc
    return herm(sandwich_average(_shaped_filter(bank, sf, grid), psi_samples))


def _newton_correct(bank, Lam, psi_samples, grid, basis, opts, t, trace):
    """
    Newton iterations on ``omega_t(Lambda) = I`` in ``Range Gamma``
    coordinates, with a forward-difference Jacobian and backtracking on
    the residual norm.
    """
    n = bank.n
    eye = np.eye(n)
    mats = basis.matrices()
    target = min(1e-3 * opts.tol_mom, 1e-9)
    c = basis.coords(Lam)
    Lam = basis.from_coords(c)
    try:
        F = basis.coords(_omega_or_fail(bank, Lam, psi_samples, grid) - eye)
    except NotAdmissible as exc:
        raise _StageFailure(str(exc)) from exc
    fnorm = np.linalg.norm(F)
    for k in range(opts.newton_max_iter):
        resid = fnorm / np.sqrt(n)
        if resid <= target:
            return Lam
        h = 1e-7 * max(1.0, np.linalg.norm(c))
        J = np.empty((c.size, c.size))
        try:
            for i in range(c.size):
                J[:, i] = (basis.coords(_omega_or_fail(bank, Lam + h * mats[i], psi_samples, grid) - eye) - F) / h
            delta = -np.linalg.solve(J, F)
        except (NotAdmissible, np.linalg.LinAlgError) as exc:
            raise _StageFailure(f"Newton corrector failed: {exc}") from exc
        alpha = 1.0
        while alpha >= 1e-6:
            c_try = c + alpha * delta
            Lam_try = basis.from_coords(c_try)
            try:
                F_try = basis.coords(_omega_or_fail(bank, Lam_try, psi_samples, grid) - eye)
            except NotAdmissible:
                alpha *= 0.5
                continue
            if np.linalg.norm(F_try) < (1.0 - 1e-4 * alpha) * fnorm:
                break
            alpha *= 0.5
        else:
            raise _StageFailure(f"Newton line search failed at t={t:.6g}")
        step = float(np.linalg.norm(Lam_try - Lam) / np.linalg.norm(Lam))
        c, Lam, F = c_try, Lam_try, F_try
        fnorm = np.linalg.norm(F)
        trace.append(TraceRecord(t, k, step, float(fnorm / np.sqrt(n))))
    if fnorm / np.sqrt(n) <= target:
        return Lam
    raise _StageFailure(f"Newton corrector did not converge at t={t:.6g}")


def homotopy_solve(bank, Sigma, Psi=None, opts=None):
    """
    Solve the estimation problem for prior ``Psi`` by homotopy continuation.

    Stage ``t = 0`` is :func:`maxent_solve`. ``t`` then advances towards 1;
    at each ``t`` fixed-point iterations for the prior ``t Psi + (1-t) I``
    run from the previous solution until the relative increment is below
    ``opts.tol_fp``. If the iteration stalls, this and all later stages use
    a Newton corrector in ``Range Gamma`` coordinates instead. A failed
    stage (lost admissibility, divergence or iteration cap) halves the step; a step below ``opts.dt_min`` ends the
    run as ``HomotopyStuck``.

    Failures are reported through :attr:`EstimationResult.status`, never
    raised.
    """
    opts = opts or EstimationOptions()
    grid = opts.grid
    try:
        Sigma = hermitian(Sigma)
        basis = range_basis(bank, grid)
        feas = feasibility(Sigma, basis)
    except Exception as exc:  # malformed input is reported, not raised
        return EstimationResult(Status.INFEASIBLE, grid=grid, message=str(exc))
    if not feas.feasible:
        return EstimationResult(
            Status.INFEASIBLE,
            grid=grid,
            message=f"range residual {feas.range_residual:.2e}, positive definite {feas.positive_definite}",
        )
    if Psi is None:
        Psi = SpectrumInput.identity(bank.m)
    bank_n, back = normalize_problem(bank, Sigma)
    basis_n = range_basis(bank_n, grid)
    eye = np.eye(bank.n)
    trace = []
    try:
        # feasibility was certified on the original Sigma
        anchor = maxent_solve(bank_n, eye, opts, grid, basis_n, check=False)
    except MaxIterations as exc:
        cond = np.linalg.cond(Sigma)
        return EstimationResult(
            Status.MAX_ITERATIONS, grid=grid, trace=tuple(trace), message=f"{exc} (cond(Sigma) = {cond:.1e})"
        )
    trace.extend(anchor.trace)

    if Psi.is_identity():
        Lam_n = anchor.lam
        Lam_pd = anchor.lam_psd
    else:
        psi_grid = Psi.samples(grid)
        Lam_n = anchor.lam
        Lam_pd = anchor.lam_psd if anchor.lam_psd is not None else _pd_representative(bank_n, anchor.lam, grid)
        newton = False
        t, dt = 0.0, opts.dt_init
        while t < 1.0:
            t_next = min(1.0, t + dt)
            blend = t_next * psi_grid + (1.0 - t_next) * np.eye(bank.m)
            stage_trace = []
            try:
                if not newton:
                    try:
                        Lam_pd = _correct(bank_n, Lam_pd, blend, grid, opts, t_next, stage_trace, t_next == 1.0)
                        Lam_n = basis_n.project(Lam_pd)
                    except _FixedPointStall as stall:
                        logger.debug("%s; switching to Newton corrector", stall)
                        newton = True
                        start = basis_n.project(stall.last)
                        try:
                            _omega_or_fail(bank_n, start, blend, grid)
                        except NotAdmissible:
                            start = Lam_n
                        Lam_n = _newton_correct(bank_n, start, blend, grid, basis_n, opts, t_next, stage_trace)
                        Lam_pd = Lam_n if np.linalg.eigvalsh(Lam_n)[0] > 0 else None
                else:
                    Lam_n = _newton_correct(bank_n, Lam_n, blend, grid, basis_n, opts, t_next, stage_trace)
                    Lam_pd = Lam_n if np.linalg.eigvalsh(Lam_n)[0] > 0 else None
                t = t_next
                dt = 2.0 * dt
            except _StageFailure as exc:
                logger.debug("homotopy stage t=%.6g failed: %s", t_next, exc)
                dt *= 0.5
            trace.extend(stage_trace)
            if dt < opts.dt_min:
                return EstimationResult(
                    Status.HOMOTOPY_STUCK,
                    lam=basis.project(back(Lam_n)),
                    grid=grid,
                    trace=tuple(trace),
                    lam_psd=None if Lam_pd is None else back(Lam_pd),
                    t_reached=t,
                    message=f"step size fell below {opts.dt_min} at t={t:.6g}",
                )

    Lam = basis.project(back(Lam_n))
    Lam_psd = None if Lam_pd is None else back(Lam_pd)
    return _finish(bank, Lam, Lam_psd, Psi, Sigma, grid, opts, tuple(trace))


def _finish(bank, Lam, Lam_psd, Psi, Sigma, grid, opts, trace):
    sig_norm = np.linalg.norm(Sigma)
    try:
        sf = spectral_factor(bank, Lam, grid)
        phi = phi_lambda(bank, Lam, Psi, grid, sf)
        resid = float(np.linalg.norm(gamma(bank, phi, grid) - Sigma) / sig_norm)
        refined = float("nan")
        if opts.verify_refined:
            fine = grid.refined(2)
            if Psi.kind == "grid_samples":
                # a sampled prior is only known on its own grid
                refined = resid
            else:
                refined = float(
                    np.linalg.norm(gamma(bank, phi_lambda(bank, Lam, Psi, fine), fine) - Sigma) / sig_norm
                )
        admissible = lambda_admissible(bank, Lam, grid, opts.admissibility_margin).admissible
    except (NotAdmissible, SolverDivergence, NotPositiveDefinite) as exc:
        return EstimationResult(Status.MAX_ITERATIONS, lam=Lam, grid=grid, trace=trace, t_reached=1.0, message=str(exc))
    ok = admissible and resid <= opts.tol_mom and (np.isnan(refined) or refined <= opts.tol_mom)
    return EstimationResult(
        Status.CONVERGED if ok else Status.MAX_ITERATIONS,
        lam=Lam,
        moment_residual=resid,
        phi=phi,
        trace=trace,
        grid=grid,
        lam_psd=Lam_psd,
        refined_residual=refined,
        t_reached=1.0,
        message="" if ok else "final moment check failed",
    )
