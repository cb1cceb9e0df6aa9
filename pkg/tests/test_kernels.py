"""The numba and numpy kernels must agree, and both must match brute force."""
import numpy as np
import pytest

from schurkit import _kernels
from schurkit.thinset import SolverOptions, maximize_objective, sample_integer_symmetric, schatten1

needs_numba = pytest.mark.skipif(not _kernels.HAVE_NUMBA, reason="numba not installed")


def simplex_projection_qp(y):
    """Reference projection by bisection on the KKT multiplier."""
    lo, hi = y.min() - 1.0, y.max()
    for _ in range(200):
        mid = (lo + hi) / 2
        if np.maximum(y - mid, 0).sum() > 1:
            lo = mid
        else:
            hi = mid
    return np.maximum(y - (lo + hi) / 2, 0)


def test_projection_matches_bisection(rng, backend):
    project = _kernels.kernels(backend)[0]
    for n in (1, 2, 5, 17):
        Y = rng.standard_normal((n, n)) * 3
        P = project(Y)
        ref = np.column_stack([simplex_projection_qp(Y[:, j]) for j in range(n)])
        np.testing.assert_allclose(P, ref, atol=1e-12)
        np.testing.assert_allclose(P.sum(axis=0), 1.0, atol=1e-12)


def test_projection_fixes_simplex_points(rng, backend):
    project = _kernels.kernels(backend)[0]
    b = rng.dirichlet(np.ones(6), size=6).T
    np.testing.assert_allclose(project(b), b, atol=1e-15)


@needs_numba
def test_backends_agree(rng):
    npk = _kernels.kernels("numpy")
    nbk = _kernels.kernels("numba")
    w = rng.random((9, 9)) ** 2
    b = rng.dirichlet(np.ones(9), size=9).T
    np.testing.assert_allclose(npk[0](w), nbk[0](w), atol=1e-15)
    assert npk[1](w, b) == pytest.approx(nbk[1](w, b), rel=1e-14)
    np.testing.assert_allclose(npk[2](w, b, 1e-18), nbk[2](w, b, 1e-18), rtol=1e-14)


@needs_numba
@pytest.mark.parametrize("n", [3, 10, 30])
def test_solver_backends_agree(n):
    SN = sample_integer_symmetric(n, np.random.default_rng(n))
    T = SN / schatten1(SN)
    a = maximize_objective(T, SolverOptions(backend="numpy"))
    b = maximize_objective(T, SolverOptions(backend="numba"))
    assert a.value == pytest.approx(b.value, rel=1e-10)


def test_unknown_backend():
    with pytest.raises(ValueError):
        _kernels.kernels("fortran")


def test_env_flag_selects_numpy(monkeypatch):
    import importlib
    monkeypatch.setenv("SCHURKIT_NO_NUMBA", "1")
    mod = importlib.reload(_kernels)
    try:
        assert mod.BACKEND == "numpy"
        assert mod.ascent is mod.ascent_np
    finally:
        monkeypatch.delenv("SCHURKIT_NO_NUMBA")
        importlib.reload(_kernels)


def test_benchmark_script_runs(capsys):
    import importlib.util
    from pathlib import Path
    path = Path(__file__).resolve().parents[1] / "benchmarks" / "bench_kernels.py"
    spec = importlib.util.spec_from_file_location("bench_kernels", path)
    mod = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(mod)
    mod.main(["--repeat", "1", "--dims", "4"])
    assert "solve" in capsys.readouterr().out
