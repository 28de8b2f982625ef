import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from momentspec import CircleGrid, FilterBank, covext_bank, evaluate, evaluate_grid, new_bank
from momentspec.exceptions import (
    DimensionMismatch,
    GridMismatch,
    InvalidFilterBank,
    NotReachable,
    NotSchurStable,
    RankDeficientB,
)
from momentspec.filter_bank import covext_shape, resolvent_grid
from momentspec.synth import random_bank


def test_identity_bank_is_valid():
    bank = new_bank(np.zeros((2, 2)), np.eye(2))
    assert (bank.n, bank.m) == (2, 2)
    assert np.allclose(evaluate(bank, 0.0), np.eye(2))


def test_unstable_rejected():
    with pytest.raises(NotSchurStable):
        new_bank(np.diag([1.1, 0.2]), np.ones((2, 1)))


def test_rank_deficient_b_rejected():
    with pytest.raises(RankDeficientB):
        new_bank(np.diag([0.5, 0.2]), np.array([[1.0, 2.0], [2.0, 4.0]]))


def test_unreachable_rejected():
    with pytest.raises(NotReachable):
        new_bank(np.diag([0.5, 0.2]), np.array([[1.0], [0.0]]))
    # errors name the violated assumption and share a base class
    with pytest.raises(InvalidFilterBank, match="reachable"):
        new_bank(np.diag([0.5, 0.5]), np.array([[1.0], [1.0]]))


def test_shape_checks():
    with pytest.raises(DimensionMismatch):
        new_bank(np.zeros((2, 3)), np.ones((2, 1)))
    with pytest.raises(DimensionMismatch):
        new_bank(np.zeros((2, 2)), np.ones((3, 1)))
    with pytest.raises(DimensionMismatch):
        new_bank(np.zeros((1, 1)), np.ones((1, 2)))


def test_scalar_evaluation():
    bank = new_bank([[0.5]], [[1.0]])
    assert np.isclose(evaluate(bank, np.pi)[0, 0], -2.0 / 3.0)


@pytest.mark.parametrize("m, p", [(1, 0), (2, 1), (1, 2), (3, 2)])
def test_covext_bank_matches_stacked_powers(m, p):
    bank = covext_bank(m, p)
    assert bank.n == m * (p + 1) and covext_shape(bank) == (m, p)
    rng = np.random.default_rng(m * 10 + p)
    for theta in rng.uniform(-np.pi, np.pi, 32):
        z = np.exp(1j * theta)
        expected = np.vstack([z ** (-(p + 1 - i)) * np.eye(m) for i in range(p + 1)])
        assert np.allclose(evaluate(bank, theta), expected, atol=1e-12, rtol=0)


def test_covext_small_cases():
    bank = covext_bank(1, 0)
    assert np.array_equal(bank.A, [[0]]) and np.array_equal(bank.B, [[1]])
    assert covext_shape(new_bank(np.zeros((2, 2)), np.eye(2))) == (2, 0)
    assert covext_shape(new_bank([[0.5]], [[1.0]])) is None


def test_grid_quadrature_exactness():
    grid = CircleGrid(64)
    for k in range(-31, 32):
        avg = grid.average(np.exp(1j * k * grid.theta))
        assert abs(avg - (1.0 if k == 0 else 0.0)) <= 1e-14


def test_grid_validation():
    with pytest.raises(ValueError):
        CircleGrid(100)
    g = CircleGrid(8)
    assert np.isclose(g.theta[0], -np.pi) and g.theta[-1] < np.pi
    assert g.refined(2).size == 16
    with pytest.raises(GridMismatch):
        g.average(np.zeros(4))


@given(st.integers(0, 2**32 - 1), st.integers(1, 3), st.integers(0, 5))
def test_grid_values_match_pointwise(seed, m, extra):
    rng = np.random.default_rng(seed)
    bank = random_bank(rng, m + extra, m)
    grid = CircleGrid(64)
    Gv = evaluate_grid(bank, grid)
    assert not Gv.flags.writeable
    for k in rng.integers(0, 64, 4):
        assert np.allclose(Gv[k], evaluate(bank, grid.theta[k]), atol=1e-12)
    # full column rank on the circle
    assert np.min(np.linalg.svd(Gv, compute_uv=False)[:, -1]) > 0


def test_resolvent_paths_agree(rng):
    M = rng.standard_normal((5, 5)) * 0.2
    R = rng.standard_normal((5, 2))
    grid = CircleGrid(32)
    a = resolvent_grid(M, R, grid)
    b = resolvent_grid(M, R, grid, max_cond=0.0)
    assert np.allclose(a, b, atol=1e-12)


def test_bank_is_immutable():
    bank = covext_bank(1, 1)
    with pytest.raises(ValueError):
        bank.A[0, 0] = 1.0
    with pytest.raises(Exception):
        bank.A = np.zeros((2, 2))


def test_factor_form_validated():
    with pytest.raises(ValueError):
        FilterBank(np.zeros((1, 1)), np.ones((1, 1)), factor_form="middle")
    assert covext_bank(2, 1).factor_form == "lower"
