import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from helpers import random_hermitian, random_hpd, stein_range_residual
from momentspec import (
    CircleGrid,
    SpectrumInput,
    covext_bank,
    feasibility,
    gamma,
    gamma_exact,
    new_bank,
    project_range,
    range_basis,
)
from momentspec.exceptions import (
    DimensionMismatch,
    DimensionMismatchWithTheory,
    GridMismatch,
    NotPositiveDefinite,
    NotStable,
)
from momentspec.linalg import to_real_coords
from momentspec.moments import stein_solve
from momentspec.synth import random_bank, random_stable_factor, random_trig_density

seeds = st.integers(0, 2**32 - 1)


def test_gamma_examples(grid):
    assert np.isclose(gamma(covext_bank(1, 0), np.ones(grid.size), grid)[0, 0], 1.0)
    Phi = 1.0 + np.cos(grid.theta)
    assert np.allclose(gamma(covext_bank(1, 1), Phi, grid), [[1, 0.5], [0.5, 1]], atol=1e-14)


def test_gamma_trivial_bank_is_plain_average(grid, rng):
    bank = new_bank(np.zeros((2, 2)), np.eye(2))
    Psi = random_trig_density(rng, 2)
    S = Psi.samples(grid)
    assert np.allclose(gamma(bank, Psi, grid), S.mean(axis=0), atol=1e-12)


def test_gamma_constant_fast_path_matches_quadrature(grid, rng):
    bank = random_bank(rng, 5, 2)
    C = random_hpd(rng, 2)
    fast = gamma(bank, SpectrumInput.constant(C), grid)
    slow = gamma(bank, np.broadcast_to(C, (grid.size, 2, 2)), grid)
    assert np.linalg.norm(fast - slow) <= 1e-12 * np.linalg.norm(slow)


def test_gamma_grid_mismatch(grid):
    with pytest.raises(GridMismatch):
        gamma(covext_bank(1, 0), np.ones(16), grid)
    with pytest.raises(DimensionMismatch):
        gamma(covext_bank(1, 0), np.ones((grid.size, 2, 2)), grid)


@given(seeds, st.integers(1, 3), st.integers(0, 4))
def test_gamma_matches_stein_oracle(seed, m, extra):
    rng = np.random.default_rng(seed)
    grid = CircleGrid(2048)
    bank = random_bank(rng, m + extra, m)
    S = random_stable_factor(rng, m)
    Psi = SpectrumInput.from_factor(*S)
    exact = gamma_exact(bank, S)
    quad = gamma(bank, Psi, grid)
    assert np.linalg.norm(quad - exact) <= 1e-10 * np.linalg.norm(exact)
    assert np.min(np.linalg.eigvalsh(quad)) > 0


@given(seeds, st.floats(0, 3), st.floats(0, 3))
def test_gamma_linearity(seed, a, b):
    rng = np.random.default_rng(seed)
    grid = CircleGrid(256)
    bank = random_bank(rng, 4, 2)
    P1 = random_trig_density(rng, 2).samples(grid)
    P2 = random_trig_density(rng, 2).samples(grid)
    lhs = gamma(bank, a * P1 + b * P2, grid)
    rhs = a * gamma(bank, P1, grid) + b * gamma(bank, P2, grid)
    assert np.linalg.norm(lhs - rhs) <= 1e-12 * max(1.0, np.linalg.norm(rhs))


def test_covext_gamma_is_fourier_toeplitz(grid, rng):
    m, p = 2, 2
    Psi = random_trig_density(rng, m)
    samples = Psi.samples(grid)
    Sig = gamma(covext_bank(m, p), Psi, grid)
    z = grid.z[:, None, None]
    for i in range(p + 1):
        for j in range(p + 1):
            C = np.mean(z ** (i - j) * samples, axis=0)
            assert np.allclose(Sig[i * m : (i + 1) * m, j * m : (j + 1) * m], C, atol=1e-12)


def test_stein_examples(rng):
    Q = random_hpd(rng, 3)
    assert np.allclose(stein_solve(np.zeros((3, 3)), Q), Q)
    assert np.isclose(stein_solve([[0.5]], [[1.0]])[0, 0], 4.0 / 3.0)
    M = rng.standard_normal((6, 6))
    M *= 0.9 / np.max(np.abs(np.linalg.eigvals(M)))
    X = stein_solve(M, np.eye(6))
    assert np.linalg.norm(X - M @ X @ M.conj().T - np.eye(6)) <= 1e-12 * np.sqrt(6)
    assert np.min(np.linalg.eigvalsh(X)) > 0
    with pytest.raises(NotStable):
        stein_solve([[1.5]], [[1.0]])


def test_gamma_exact_examples(rng):
    assert np.isclose(gamma_exact(covext_bank(1, 0), SpectrumInput.identity(1))[0, 0], 1.0)
    bank = random_bank(rng, 4, 2)
    X = gamma_exact(bank, SpectrumInput.identity(2))
    assert np.allclose(X, stein_solve(bank.A, bank.B @ bank.B.conj().T))
    assert np.isclose(gamma_exact(new_bank([[0.5]], [[1.0]]), SpectrumInput.identity(1))[0, 0], 4 / 3)


@pytest.mark.parametrize("m, p, d", [(1, 1, 3), (2, 1, 12), (1, 3, 7), (2, 2, 20)])
def test_range_dimension_covext(m, p, d):
    assert range_basis(covext_bank(m, p)).dim == d


def test_range_covext_is_toeplitz():
    basis = range_basis(covext_bank(1, 1))
    for X in basis.matrices():
        assert np.isclose(X[0, 0], X[1, 1])


def test_range_square_b_is_everything(rng):
    bank = new_bank(0.3 * rng.standard_normal((3, 3)), rng.standard_normal((3, 3)))
    assert range_basis(bank).dim == 9


@given(seeds, st.integers(1, 3), st.integers(0, 5))
def test_range_basis_properties(seed, m, extra):
    rng = np.random.default_rng(seed)
    bank = random_bank(rng, m + extra, m)
    basis = range_basis(bank, CircleGrid(512))
    n = bank.n
    assert basis.dim == m * (2 * n - m)
    V = basis.vectors
    assert np.allclose(V @ V.T, np.eye(basis.dim), atol=1e-12)
    # independent characterization: X - A X A^* = B H + H^* B^*
    for X in basis.matrices()[:: max(1, basis.dim // 6)]:
        assert stein_range_residual(bank, X) <= 1e-9


def test_range_rank_shortfall_raises():
    with pytest.raises(DimensionMismatchWithTheory):
        range_basis(covext_bank(1, 3), max_degree=0)


def test_feasibility_examples(grid, rng):
    bank = covext_bank(1, 1)
    basis = range_basis(bank, grid)
    ok = feasibility(gamma(bank, random_trig_density(rng, 1), grid), basis)
    assert ok.in_range and ok.positive_definite and ok.feasible
    bad = feasibility(np.diag([1.0, 2.0]), basis)
    assert not bad.in_range
    assert np.isclose(bad.range_residual, (1 / np.sqrt(2)) / np.sqrt(5))
    zero = feasibility(np.zeros((2, 2)), basis)
    assert zero.in_range and not zero.positive_definite


@given(seeds)
def test_projection_properties(seed):
    rng = np.random.default_rng(seed)
    bank = random_bank(rng, 5, 2)
    basis = range_basis(bank, CircleGrid(512))
    H = random_hermitian(rng, 5)
    P = project_range(H, basis)
    assert np.allclose(project_range(P, basis), P, atol=1e-12)
    assert np.linalg.norm(P) <= np.linalg.norm(H) * (1 + 1e-12)
    R = to_real_coords(H - P)
    assert np.max(np.abs(basis.vectors @ R)) <= 1e-12 * max(1.0, np.linalg.norm(H))
    perp = H - P
    assert np.linalg.norm(project_range(perp, basis)) <= 1e-12 * max(1.0, np.linalg.norm(H))


def test_spectrum_input_validation(grid):
    with pytest.raises(NotPositiveDefinite):
        SpectrumInput.constant(np.diag([1.0, -1.0]))
    with pytest.raises(NotPositiveDefinite):
        SpectrumInput.from_samples(np.cos(grid.theta))
    with pytest.raises(NotStable):
        SpectrumInput.from_factor([[1.2]], [[1.0]], [[1.0]], [[1.0]])
    with pytest.raises(GridMismatch):
        SpectrumInput.from_samples(np.ones(64)).samples(grid)


def test_polynomial_density_samples(grid):
    Psi = SpectrumInput.from_polynomial([2.0, 0.5])
    expected = np.abs(2.0 + 0.5 / grid.z) ** 2
    assert np.allclose(Psi.samples(grid)[:, 0, 0], expected, atol=1e-13)
