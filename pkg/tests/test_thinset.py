import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from schurkit.blockmat import col_norm, row_norm
from schurkit.thinset import (
    SEMICIRCLE_F_MEAN,
    WIGNER_SCALE,
    AllocationMatrix,
    SolverOptions,
    WitnessMatrix,
    empirical_f_mean,
    maximize_objective,
    objective,
    objective_gradient,
    realize_optimizers,
    run_witness_experiment,
    sample_integer_symmetric,
    schatten1,
    schur_trace,
    sign_witness,
    trial_rng,
    upper_bound,
    wigner_normalize,
)

from oracles import grid_max_n2, objective_loops


def rand_sym(rng, n):
    S = rng.standard_normal((n, n))
    return (S + S.T) / 2


def rand_alloc(rng, n, mass=1.0):
    return rng.dirichlet(np.ones(n), size=n).T * mass


# -- types --------------------------------------------------------------------------

def test_allocation_invariants():
    AllocationMatrix([[0.5, 1.0], [0.5, 0.0]])
    with pytest.raises(ValueError):
        AllocationMatrix([[0.6, 0.0], [0.5, 0.0]])
    with pytest.raises(ValueError):
        AllocationMatrix([[-0.1, 0.0], [0.5, 0.0]])


def test_witness_invariants(rng):
    T = rand_sym(rng, 4)
    W = WitnessMatrix(T)
    assert W.schatten1 == pytest.approx(np.abs(np.linalg.eigvalsh(T)).sum(), rel=1e-12)
    assert W.normalized().schatten1 == pytest.approx(1.0, rel=1e-12)
    with pytest.raises(ValueError):
        WitnessMatrix([[0.0, 1.0], [2.0, 0.0]])


def test_solver_options_validated():
    with pytest.raises(ValueError):
        SolverOptions(max_iterations=0)
    with pytest.raises(ValueError):
        SolverOptions(shrink=1.5)


# -- objective ------------------------------------------------------------------------

def test_objective_constant_matrix_at_midpoint():
    assert objective(np.ones((3, 3)), np.full((3, 3), 1 / 3)) == pytest.approx(3.0, abs=1e-14)


def test_objective_single_term():
    T = np.zeros((3, 3)); T[0, 0] = 1
    b = np.zeros((3, 3)); b[0, 0] = 1
    assert objective(T, b) == 1.0


def test_objective_matches_direct_summation(rng):
    for _ in range(10):
        T = rng.standard_normal((2, 2))
        b = rand_alloc(rng, 2)
        assert abs(objective(T, b) - objective_loops(T, b)) <= 1e-14


def test_objective_uses_transposed_entries():
    T = np.array([[0.0, 1.0], [0.0, 0.0]])  # t_01 = 1 only
    b = np.zeros((2, 2)); b[1, 0] = 1.0     # row 1 picks up t_01^2
    assert objective(T, b) == 1.0
    b = np.zeros((2, 2)); b[0, 1] = 1.0
    assert objective(T, b) == 0.0


def test_objective_dimension_mismatch():
    with pytest.raises(ValueError):
        objective(np.ones((2, 2)), np.ones((3, 3)) / 3)


def test_concavity(rng):
    for _ in range(50):
        n = int(rng.integers(2, 6))
        T = rand_sym(rng, n)
        b1, b2 = rand_alloc(rng, n), rand_alloc(rng, n, rng.uniform(0, 1))
        th = rng.uniform(0.01, 0.99)
        lhs = objective(T, th * b1 + (1 - th) * b2)
        assert lhs >= th * objective(T, b1) + (1 - th) * objective(T, b2) - 1e-12


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), c=st.floats(-1e3, 1e3, allow_nan=False))
def test_objective_scaling(seed, c):
    rng = np.random.default_rng(seed)
    T = rand_sym(rng, 4)
    b = rand_alloc(rng, 4)
    base = objective(T, b)
    assert abs(objective(c * T, b) - abs(c) * base) <= 1e-12 * max(1.0, abs(c) * base)


def test_gradient_matches_central_differences(rng):
    for _ in range(20):
        n = int(rng.integers(2, 5))
        T = rand_sym(rng, n)
        b = rand_alloc(rng, n) * 0.8 + 0.05
        g = objective_gradient(T, b)
        fd = np.zeros_like(b)
        for i in range(n):
            for j in range(n):
                e = np.zeros_like(b); e[i, j] = 1e-6
                fd[i, j] = (objective(T, b + e) - objective(T, b - e)) / 2e-6
        assert np.abs(g - fd).max() <= 1e-5 * np.abs(fd).max()


def test_constant_matrix_midpoint_is_stationary():
    for n in (2, 3, 5):
        g = objective_gradient(np.ones((n, n)), np.full((n, n), 1 / n))
        # feasible directions keep column sums fixed: project out column means
        assert np.abs(g - g.mean(axis=0)).max() <= 1e-10


# -- solver ---------------------------------------------------------------------------

def test_solver_constant_matrix(backend):
    res = maximize_objective(np.ones((4, 4)), SolverOptions(backend=backend))
    assert res.value == pytest.approx(4.0, abs=1e-8)
    assert res.converged
    np.testing.assert_allclose(res.allocation.entries, 0.25, atol=1e-6)


def test_solver_scaled_identity(backend):
    n = 5
    res = maximize_objective(np.eye(n) / n, SolverOptions(backend=backend))
    assert res.value == pytest.approx(1.0, abs=1e-8)
    np.testing.assert_allclose(np.diag(res.allocation.entries), 1.0, atol=1e-8)


def test_solver_matches_grid_search_n2(rng, backend):
    for _ in range(10):
        T = rand_sym(rng, 2)
        res = maximize_objective(T, SolverOptions(backend=backend))
        assert abs(res.value - grid_max_n2(T)) <= 1e-4
        assert res.value <= upper_bound(T) + 1e-9


def test_solver_history_monotone(rng, backend):
    for n in (3, 8, 20):
        res = maximize_objective(rand_sym(rng, n), SolverOptions(backend=backend))
        assert np.all(np.diff(res.history) >= 0)
        assert res.history[-1] == pytest.approx(res.value, rel=1e-12)


def test_solver_reports_nonconvergence(rng):
    res = maximize_objective(rand_sym(rng, 20), SolverOptions(max_iterations=2))
    assert not res.converged
    assert res.iterations == 2
    assert res.value > 0


def test_solver_result_feasible(rng):
    res = maximize_objective(rand_sym(rng, 12))
    b = res.allocation.entries
    assert b.min() >= 0
    assert b.sum(axis=0).max() <= 1 + 1e-12


# -- realization ----------------------------------------------------------------------

def test_realize_constant_matrix():
    n = 3
    R, C = realize_optimizers(np.ones((n, n)), np.full((n, n), 1 / n))
    np.testing.assert_allclose(C.entries, 1 / math.sqrt(n))
    np.testing.assert_allclose(R.entries, 1 / math.sqrt(n))
    assert schur_trace(R, C, np.ones((n, n))) == pytest.approx(n)


def test_realize_zero_allocation():
    R, C = realize_optimizers(np.ones((3, 3)), np.zeros((3, 3)))
    assert not R.entries.any() and not C.entries.any()


def test_realize_reproduces_objective(rng):
    for _ in range(20):
        n = int(rng.integers(2, 6))
        T = rand_sym(rng, n)
        b = rand_alloc(rng, n, rng.uniform(0.2, 1.0))
        R, C = realize_optimizers(T, b)
        tr = schur_trace(R, C, T)
        assert abs(tr - objective(T, b)) <= 1e-12
        assert row_norm(R.as_blocks()) <= 1 + 1e-12
        assert col_norm(C.as_blocks()) <= 1 + 1e-12


def test_duality_sandwich(rng):
    for n in (2, 3, 6, 10):
        T = rand_sym(rng, n)
        res = maximize_objective(T)
        R, C = realize_optimizers(T, res.allocation)
        assert abs(schur_trace(R, C, T) - res.value) <= 1e-10
        assert res.value <= upper_bound(T) + 1e-9


def test_upper_bound_examples(rng):
    assert upper_bound(np.ones((3, 3))) == 3.0
    assert upper_bound(np.zeros((4, 4))) == 0.0
    T = rand_sym(rng, 5)
    assert maximize_objective(T).value <= upper_bound(T) + 1e-9


# -- random witnesses ---------------------------------------------------------------------

def test_sample_symmetric_and_bounded():
    SN = sample_integer_symmetric(30, np.random.default_rng(3))
    np.testing.assert_array_equal(SN, SN.T)
    assert SN.min() >= -99 and SN.max() <= 99
    np.testing.assert_array_equal((2 * SN) % 1, 0)


def test_sample_deterministic():
    a = sample_integer_symmetric(7, trial_rng(7, 11))
    b = sample_integer_symmetric(7, trial_rng(7, 11))
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, sample_integer_symmetric(7, trial_rng(7, 12)))


def test_sample_moments():
    rng = np.random.default_rng(7)
    iu = np.triu_indices(8, 1)
    off, diag = [], []
    for _ in range(100_000):
        SN = sample_integer_symmetric(8, rng)
        off.append(SN[iu])
        diag.append(np.diag(SN))
    off, diag = np.concatenate(off), np.concatenate(diag)
    # Var((X + Y) / 2) = 3300 / 2 for independent X, Y uniform on -99..99
    assert abs(off.mean()) < 0.5
    assert abs(off.var() / 1650 - 1) < 0.02
    assert abs(diag.var() / 3300 - 1) < 0.02


def test_wigner_normalize():
    SN = sample_integer_symmetric(10, np.random.default_rng(1))
    X = wigner_normalize(SN, 10)
    np.testing.assert_allclose(X * WIGNER_SCALE * math.sqrt(10), SN, rtol=1e-15)
    np.testing.assert_allclose(wigner_normalize(np.array([[33.0]]), 1), [[33.0 / math.sqrt(1650)]])
    assert WIGNER_SCALE == pytest.approx(40.62, abs=5e-3)


def test_wigner_second_moment():
    rng = np.random.default_rng(2)
    n = 16
    vals = np.concatenate([wigner_normalize(sample_integer_symmetric(n, rng), n)[np.triu_indices(n, 1)]
                           for _ in range(3000)])
    assert abs((vals ** 2).mean() * n - 1) < 0.02


def test_schatten1_examples(rng):
    assert schatten1(np.eye(4)) == pytest.approx(4.0)
    assert schatten1(np.diag([3.0, -4.0])) == pytest.approx(7.0)
    T = rand_sym(rng, 9)
    sv = np.linalg.svd(T, compute_uv=False).sum()
    assert abs(schatten1(T) - sv) <= 1e-10 * sv


def test_empirical_f_mean_examples():
    assert empirical_f_mean(np.zeros((3, 3))) == 0.0
    assert empirical_f_mean(np.diag([3.0, -3.0])) == 2.0
    assert empirical_f_mean(np.diag([0.5, -1.0])) == 0.75


def test_empirical_f_mean_near_semicircle():
    hits = 0
    for seed in range(10):
        X = wigner_normalize(sample_integer_symmetric(200, trial_rng(200, seed)), 200)
        hits += abs(empirical_f_mean(X) - SEMICIRCLE_F_MEAN) < 0.05
    assert hits >= 9


def test_semicircle_reference_value():
    from scipy.integrate import quad
    inner, _ = quad(lambda t: t * np.sqrt(4 - t * t) / math.pi, 0, 2)
    assert inner == pytest.approx(SEMICIRCLE_F_MEAN, abs=1e-10)


def test_sign_witness_examples():
    np.testing.assert_allclose(sign_witness(np.diag([0.5, -0.5])), np.diag([1.0, -1.0]))
    X = np.random.default_rng(0).standard_normal((4, 2))
    T = X @ X.T  # PSD, rank 2
    S = sign_witness(T)
    assert np.trace(S @ T) == pytest.approx(np.trace(T))
    np.testing.assert_allclose(S @ X, X, atol=1e-12)


def test_sign_witness_zero_eigenvalue_is_nonpositive():
    np.testing.assert_allclose(sign_witness(np.diag([1.0, 0.0])), np.diag([1.0, -1.0]))


def test_sign_witness_identity(rng):
    for _ in range(20):
        T = rand_sym(rng, int(rng.integers(1, 12)))
        s1 = schatten1(T)
        assert abs(np.trace(sign_witness(T) @ T) - s1) <= 1e-10 * s1


# -- experiment ---------------------------------------------------------------------------

def test_run_witness_experiment_recomputes_from_scratch():
    rep = run_witness_experiment(2, 17)
    rng = np.random.default_rng(np.random.SeedSequence([17, 2]))
    N = rng.integers(-99, 100, size=(2, 2))
    SN = (N + N.T) / 2
    s1 = np.linalg.svd(SN, compute_uv=False).sum()
    T = SN / s1
    best = grid_max_n2(T)
    lam = np.linalg.eigvals(SN / (math.sqrt(1650) * math.sqrt(2))).real
    assert rep.schatten1_raw == pytest.approx(s1, abs=1e-8)
    assert rep.max_value == pytest.approx(best, abs=1e-8)
    assert rep.max_times_sqrt_n == pytest.approx(best * math.sqrt(2), abs=1e-8)
    assert rep.upper_bound_check == pytest.approx(2 * np.abs(T).max(), abs=1e-8)
    assert rep.bound_99n_over_s1 == pytest.approx(99 * 2 / s1, abs=1e-8)
    assert rep.semicircle_f_mean == pytest.approx(np.minimum(np.abs(lam), 2).mean(), abs=1e-8)
    assert rep.converged
    assert rep.max_value <= rep.upper_bound_check + 1e-9


def test_run_witness_experiment_deterministic():
    assert run_witness_experiment(6, 3) == run_witness_experiment(6, 3)


def test_run_witness_experiment_rejects_n1():
    with pytest.raises(ValueError):
        run_witness_experiment(1, 0)


def test_support_at_most_2n():
    for seed in range(5):
        rep = run_witness_experiment(12, seed)
        assert 0 < rep.support_count <= 2 * 12
