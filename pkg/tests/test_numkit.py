import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from pwapid import numkit
from pwapid.errors import DimensionMismatch, UnstableMatrix

from frozen import SCALAR_DARE_P
from oracles import lyapunov_series, riccati_recursion, spectral_radius, svd_rank


# ------------------------------------------------------------------ DARE

def test_scalar_dare_matches_closed_form():
    P = numkit.solve_dare([[0.5]], [[1.0]], [[1.0]], [[1.0]])
    assert P[0, 0] == pytest.approx(SCALAR_DARE_P, abs=1e-12)


def test_dare_with_zero_dynamics_returns_q():
    P = numkit.solve_dare(np.zeros((3, 3)), np.eye(3), np.eye(3), np.eye(3))
    np.testing.assert_allclose(P, np.eye(3), atol=1e-12)


def test_dare_agrees_with_riccati_recursion(cstr):
    model, _ = cstr
    Q, R = np.eye(2), 0.3 * np.eye(2)
    P = numkit.solve_dare(model.A, model.B, Q, R)
    np.testing.assert_allclose(P, riccati_recursion(model.A, model.B, Q, R), rtol=1e-9)


def test_dare_residual_symmetry_and_psd(cstr):
    model, _ = cstr
    Q, R = np.diag([2.0, 0.5]), np.eye(2)
    P = numkit.solve_dare(model.A, model.B, Q, R)
    res = numkit.dare_residual(model.A, model.B, Q, R, P)
    assert np.linalg.norm(res) <= 1e-9 * (1 + np.linalg.norm(P))
    assert np.abs(P - P.T).max() <= 1e-12
    assert np.linalg.eigvalsh(P)[0] >= -1e-10


def test_dare_rejects_bad_shapes():
    with pytest.raises(DimensionMismatch):
        numkit.solve_dare(np.eye(2), np.ones((3, 1)), np.eye(2), np.eye(1))


def test_lqr_gain_sign_convention():
    A, B = np.array([[1.2]]), np.array([[1.0]])
    K, P = numkit.lqr_gain(A, B, [[1.0]], [[1.0]])
    # u = -K x stabilizes
    assert abs(A[0, 0] - B[0, 0] * K[0, 0]) < 1


# ------------------------------------------------------------------ dlyap

def test_dlyap_zero_dynamics():
    W = np.array([[2.0, 0.3], [0.3, 1.0]])
    np.testing.assert_allclose(numkit.solve_dlyap(np.zeros((2, 2)), W), W)


def test_dlyap_scalar_geometric_series():
    assert numkit.solve_dlyap([[0.5]], [[1.0]])[0, 0] == pytest.approx(4 / 3, abs=1e-14)


def test_dlyap_diagonal():
    P = numkit.solve_dlyap(np.diag([0.9, 0.1]), np.eye(2))
    np.testing.assert_allclose(P, np.diag([1 / 0.19, 1 / 0.99]), rtol=1e-12)


def test_dlyap_rejects_unstable():
    with pytest.raises(UnstableMatrix):
        numkit.solve_dlyap(np.eye(2) * 1.01, np.eye(2))


def _stable(rng, n, radius=0.95):
    A = rng.normal(size=(n, n))
    return A * radius / max(abs(np.linalg.eigvals(A)))


def test_dlyap_residual_random(rng):
    for _ in range(500):
        n = int(rng.integers(1, 7))
        A = _stable(rng, n)
        L = rng.normal(size=(n, n))
        W = L @ L.T
        P = numkit.solve_dlyap(A, W)
        res = np.linalg.norm(A.T @ P @ A - P + W)
        assert res <= 1e-10 * (1 + np.linalg.norm(P))


def test_dlyap_agrees_with_series(rng):
    A = _stable(rng, 4, 0.8)
    W = np.eye(4)
    np.testing.assert_allclose(numkit.solve_dlyap(A, W), lyapunov_series(A, W), rtol=1e-9)


# ------------------------------------------------------------------ Schur test

def test_is_schur_trivial_cases():
    assert numkit.is_schur(0.5 * np.eye(3))
    assert not numkit.is_schur(np.eye(2))


def test_is_schur_matches_gelfand_oracle(rng):
    disagreements = 0
    for _ in range(500):
        n = int(rng.integers(1, 6))
        A = rng.normal(size=(n, n)) * rng.uniform(0.1, 0.8)
        rho = spectral_radius(A)
        if abs(rho - 1) < 1e-6:
            continue
        disagreements += numkit.is_schur(A) != (rho < 1)
    assert disagreements == 0


# ------------------------------------------------------------------ rank

def test_rank_trivial():
    assert numkit.rank_with_tol(np.eye(3), 1e-9).rank == 3
    assert numkit.rank_with_tol(np.zeros((2, 4)), 1e-9).rank == 0


def test_rank_of_reactor_tracking_matrix(cstr):
    model, _ = cstr
    M = np.block([[model.A - np.eye(2), model.B], [np.array([[1.0, 0.0]]), np.zeros((1, 2))]])
    rep = numkit.rank_with_tol(M)
    assert rep.rank == 3 == svd_rank(M)
    assert rep.singular_gap == np.inf


def test_rank_reports_gap():
    M = np.diag([1.0, 1e-12])
    rep = numkit.rank_with_tol(M, 1e-9)
    assert rep.rank == 1 and rep.singular_gap == pytest.approx(1e12)


def test_rank_rejects_nonpositive_tol():
    with pytest.raises(ValueError):
        numkit.rank_with_tol(np.eye(2), 0.0)


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 6), st.integers(1, 6), st.integers(0, 6), st.integers(0, 2 ** 31 - 1))
def test_rank_invariances(rows, cols, r, seed):
    rng = np.random.default_rng(seed)
    r = min(r, rows, cols)
    M = rng.normal(size=(rows, r)) @ rng.normal(size=(r, cols))
    base = numkit.rank_with_tol(M).rank
    assert base == svd_rank(M)
    assert numkit.rank_with_tol(M[rng.permutation(rows)]).rank == base
    T = rng.normal(size=(rows, rows))
    while np.linalg.cond(T) >= 1e3:
        T = rng.normal(size=(rows, rows))
    assert numkit.rank_with_tol(T @ M).rank == base


@settings(max_examples=100, deadline=None)
@given(arrays(float, (3, 3), elements=st.floats(-2, 2)))
def test_sym_is_symmetric(M):
    S = numkit.sym(M)
    np.testing.assert_array_equal(S, S.T)
