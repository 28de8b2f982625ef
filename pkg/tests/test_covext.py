import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from helpers import scalar_factor_by_roots
from momentspec import (
    CircleGrid,
    CovSequence,
    EstimationOptions,
    MatrixPolynomial,
    SpectrumInput,
    Status,
    arma_from_solution,
    covext_bank,
    covext_solve,
    covs_from_spectrum,
    extract_polynomial_factor,
    gamma,
    new_bank,
    sample_covariances,
    spectral_factor,
    toeplitz_assemble,
)
from momentspec.exceptions import (
    DegreeMismatch,
    DimensionMismatch,
    Infeasible,
    NormalizationFailure,
    NotCompanionForm,
    NotHermitian,
)
from momentspec.filter_bank import FilterBank
from momentspec.synth import random_ma_polynomial, random_pd, random_stable_factor, random_trig_density

seeds = st.integers(0, 2**32 - 1)


def test_toeplitz_examples(rng):
    assert np.allclose(toeplitz_assemble(CovSequence([1.0, 0.5])), [[1, 0.5], [0.5, 1]])
    C0 = random_pd(rng, 2)
    T = CovSequence(np.array([C0, np.zeros((2, 2)), np.zeros((2, 2))])).toeplitz()
    assert np.allclose(T, np.kron(np.eye(3), C0))
    C1 = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
    T = CovSequence(np.array([C0, C1])).toeplitz()
    assert np.allclose(T, T.conj().T)
    assert np.allclose(T[2:, :2], C1) and np.allclose(T[:2, 2:], C1.conj().T)


def test_cov_sequence_validation():
    with pytest.raises(NotHermitian):
        CovSequence(np.array([[[1.0, 1.0], [0.0, 1.0]]]))
    with pytest.raises(DimensionMismatch):
        CovSequence(np.ones((2, 2, 3)))
    assert not CovSequence([1.0, 1.5]).is_positive_definite()


def test_covs_from_spectrum_examples(grid):
    white = covs_from_spectrum(np.ones(grid.size), grid, 2)
    assert np.allclose(white.blocks[:, 0, 0], [1, 0, 0], atol=1e-15)
    cos = covs_from_spectrum(1 + np.cos(grid.theta), grid, 1)
    assert np.allclose(cos.blocks[:, 0, 0], [1, 0.5], atol=1e-15)


@given(seeds, st.integers(1, 2), st.integers(0, 3))
def test_toeplitz_matches_gamma(seed, m, p):
    rng = np.random.default_rng(seed)
    grid = CircleGrid(512)
    Phi = random_trig_density(rng, m)
    seq = covs_from_spectrum(Phi, grid, p)
    Sig = gamma(covext_bank(m, p), Phi, grid)
    assert np.linalg.norm(seq.toeplitz() - Sig) <= 1e-10 * np.linalg.norm(Sig)


def test_sample_covariances_biased(rng):
    y = rng.standard_normal((50, 2))
    seq = sample_covariances(y, 2)
    yc = y - y.mean(axis=0)
    C1 = sum(np.outer(yc[t + 1], yc[t]) for t in range(49)) / 50
    assert np.allclose(seq.blocks[1], C1)
    assert np.min(np.linalg.eigvalsh(seq.toeplitz())) >= -1e-12
    with pytest.raises(DimensionMismatch):
        sample_covariances(y[:2], 2)


def test_polynomial_roots_and_schur():
    assert MatrixPolynomial([1.0, -0.5]).is_schur()
    assert not MatrixPolynomial([1.0, -2.0]).is_schur()
    D = MatrixPolynomial([1.0, -0.9, 0.2])
    assert np.allclose(np.sort(D.roots().real), [0.4, 0.5])
    z = np.exp(0.3j)
    assert np.isclose(D(z)[0, 0], 1 - 0.9 / z + 0.2 / z**2)
    assert MatrixPolynomial([[[2.0, 0.0], [1.0 + 1j, 1.0]]]).is_normalized()
    assert not MatrixPolynomial([[[2.0, 1.0], [0.0, 1.0]]]).is_normalized()


def test_extract_constant_factor(rng, grid):
    bank = covext_bank(2, 0)
    sf = spectral_factor(bank, random_pd(rng, 2), grid)
    D = extract_polynomial_factor(bank, sf, grid)
    assert D.degree == 0 and np.allclose(D.coeffs[0], sf.L)


@pytest.mark.parametrize("p", [1, 2, 3])
def test_extract_scalar_matches_root_factorization(rng, grid, p):
    bank = covext_bank(1, p)
    Lam = random_pd(rng, p + 1)
    sf = spectral_factor(bank, Lam, grid)
    D = extract_polynomial_factor(bank, sf, grid)
    # the z^{-k} coefficient of G* Lambda G sums the k-th subdiagonal of Lambda
    q = [np.sum(np.diagonal(Lam, offset=-k)) for k in range(p + 1)]
    oracle = scalar_factor_by_roots(q)
    assert np.max(np.abs(D.coeffs[:, 0, 0] - oracle)) <= 1e-8
    assert D.is_schur()


def test_extract_matrix_factor(rng, grid):
    bank = covext_bank(2, 1)
    Lam = random_pd(rng, 4)
    D = extract_polynomial_factor(bank, spectral_factor(bank, Lam, grid), grid)
    Dg = D.grid_values(grid)
    G = bank.grid_values(grid)
    Q = G.conj().transpose(0, 2, 1) @ Lam @ G
    assert np.allclose(Dg.conj().transpose(0, 2, 1) @ Dg, Q, atol=1e-8)
    assert D.is_normalized() and D.is_schur()


def test_extract_errors(rng, grid):
    explicit = new_bank([[0.5]], [[1.0]])
    with pytest.raises(NotCompanionForm):
        extract_polynomial_factor(explicit, spectral_factor(explicit, np.eye(1), grid))
    ref = covext_bank(2, 1)
    upper = FilterBank(ref.A, ref.B)
    with pytest.raises(NormalizationFailure):
        extract_polynomial_factor(upper, spectral_factor(upper, random_pd(rng, 4), grid))


def test_covext_scalar_p0(grid):
    Psi = SpectrumInput.from_polynomial([1.0, 0.5])
    res = covext_solve(CovSequence([1.0]), Psi)
    assert res.result.status is Status.CONVERGED
    assert np.isclose(res.D.coeffs[0, 0, 0], np.sqrt(1.25), rtol=1e-10)
    assert res.max_deviation <= 1e-12


def test_covext_maxent(rng, grid):
    seq = covs_from_spectrum(random_trig_density(rng, 2), grid, 2)
    res = covext_solve(seq)
    assert res.result.status is Status.CONVERGED
    assert res.max_deviation <= 1e-6 and res.refined_deviation <= 1e-6
    assert res.D.is_schur() and res.D.is_normalized()


def test_covext_self_consistent_prior(rng, grid):
    m, p = 2, 2
    Psi = SpectrumInput.from_factor(*random_stable_factor(rng, m))
    seq = covs_from_spectrum(Psi, grid, p)
    res = covext_solve(seq, Psi)
    assert res.result.status is Status.CONVERGED
    assert res.max_deviation <= 1e-6
    # the prior itself solves the problem with D = I up to normalization
    assert res.D.is_schur()


def test_covext_infeasible():
    with pytest.raises(Infeasible):
        covext_solve(CovSequence([1.0, 1.5]))


def test_arma_white(rng, grid):
    res = covext_solve(CovSequence(np.array([random_pd(rng, 2)])))
    model = arma_from_solution(res.D, np.eye(2)[None])
    assert model.ar.degree == 0 and model.ma.degree == 0
    assert np.allclose(model.spectrum(grid), res.result.phi, atol=1e-8)


@pytest.mark.parametrize("m, p", [(1, 2), (2, 1)])
def test_arma_spectrum_matches_solution(rng, grid, m, p):
    N = random_ma_polynomial(rng, m, 1)
    Psi = SpectrumInput.from_polynomial(N)
    seq = covs_from_spectrum(random_trig_density(rng, m), grid, p)
    res = covext_solve(seq, Psi)
    assert res.result.status is Status.CONVERGED
    model = arma_from_solution(res.D, N)
    assert model.ma.degree == p
    spec = model.spectrum(grid)
    assert np.max(np.abs(spec - res.result.phi)) <= 1e-8 * np.max(np.abs(spec))
    again = covs_from_spectrum(spec, grid, p)
    assert np.max(np.abs(again.blocks - seq.blocks)) <= 1e-6


def test_arma_degree_checks():
    D = MatrixPolynomial([1.0, -0.5])
    with pytest.raises(DegreeMismatch):
        arma_from_solution(D, [1.0, 0.1, 0.1])
    with pytest.raises(DegreeMismatch):
        arma_from_solution(D, np.eye(2)[None])
