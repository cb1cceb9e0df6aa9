"""Maximizing ``|tr((R ∘ C) T)|`` over row/column contractive factors.

For a fixed ``T`` the supremum over ``||R||_r <= 1, ||C||_c <= 1`` equals the
maximum of the concave function::

    F(b) = sum_i sqrt(sum_j b_ij |t_ji|^2)

over nonnegative ``b`` with column sums at most one.  This module evaluates
and maximizes ``F``, turns a maximizer back into ``(R, C)``, and provides the
random symmetric witnesses (entries uniform on the integers -99..99) together
with the Schatten-1 and semicircle statistics used to judge them.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Any

import numpy as np

from . import _kernels
from .blockmat import ScalarMatrix

#: standard deviation of an off-diagonal entry of (N + N^T)/2, sqrt(3300 / 2)
WIGNER_SCALE = math.sqrt(1650.0)
#: integral of min(|t|, 2) against the semicircle law on [-2, 2]
SEMICIRCLE_F_MEAN = 8.0 / (3.0 * math.pi)
#: entries of N are uniform on -ENTRY_BOUND..ENTRY_BOUND
ENTRY_BOUND = 99
SUPPORT_THRESHOLD = 1e-8


@dataclass(frozen=True, eq=False)
class AllocationMatrix:
    """Nonnegative ``n x n`` matrix with column sums at most one."""

    entries: np.ndarray

    def __init__(self, entries: Any, tol: float = 1e-12):
        b = np.array(entries, dtype=float)
        if b.ndim != 2 or b.shape[0] != b.shape[1] or b.shape[0] == 0:
            raise ValueError(f"allocation must be a non-empty square matrix, got {b.shape}")
        if not np.all(np.isfinite(b)) or b.min() < 0:
            raise ValueError("allocation entries must be finite and nonnegative")
        if b.sum(axis=0).max() > 1 + tol:
            raise ValueError(f"column sum {b.sum(axis=0).max():.15g} exceeds 1")
        b.setflags(write=False)
        object.__setattr__(self, "entries", b)

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    @classmethod
    def uniform(cls, n: int) -> AllocationMatrix:
        return cls(np.full((n, n), 1.0 / n))


@dataclass(frozen=True, eq=False)
class WitnessMatrix:
    """Real symmetric witness ``T`` and its Schatten-1 norm."""

    entries: np.ndarray
    schatten1: float

    def __init__(self, entries: Any):
        T = np.array(entries, dtype=float)
        if T.ndim != 2 or T.shape[0] != T.shape[1] or T.shape[0] == 0:
            raise ValueError(f"witness must be a non-empty square matrix, got {T.shape}")
        if not np.all(np.isfinite(T)):
            raise ValueError("witness contains NaN or Inf")
        if not np.array_equal(T, T.T):
            raise ValueError("witness must be exactly symmetric")
        T.setflags(write=False)
        object.__setattr__(self, "entries", T)
        object.__setattr__(self, "schatten1", schatten1(T))

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    def normalized(self) -> WitnessMatrix:
        """``T / ||T||_1``."""
        if self.schatten1 == 0:
            raise ValueError("cannot normalize the zero matrix")
        return WitnessMatrix(self.entries / self.schatten1)


@dataclass(frozen=True)
class SolverOptions:
    max_iterations: int = 10000
    relative_improvement_tolerance: float = 1e-12
    gradient_floor: float = 1e-18
    initial_step: float = 1.0
    shrink: float = 0.5
    sufficient_increase: float = 1e-4
    min_step: float = 1e-20
    backend: str | None = None

    def __post_init__(self):
        for name in ("max_iterations", "relative_improvement_tolerance", "gradient_floor",
                     "initial_step", "sufficient_increase", "min_step"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not 0 < self.shrink < 1:
            raise ValueError("shrink must lie in (0, 1)")


@dataclass(frozen=True, eq=False)
class SolverResult:
    allocation: AllocationMatrix
    value: float
    iterations: int
    converged: bool
    history: np.ndarray


def _entries(T: WitnessMatrix | np.ndarray) -> np.ndarray:
    return T.entries if isinstance(T, (WitnessMatrix, ScalarMatrix)) else np.asarray(T)


def _weights(T) -> np.ndarray:
    # w[i, j] = |t_ji|^2
    return np.ascontiguousarray(np.abs(_entries(T).T) ** 2, dtype=float)


def _alloc(b) -> np.ndarray:
    return b.entries if isinstance(b, AllocationMatrix) else np.asarray(b, dtype=float)


def objective(T: WitnessMatrix | np.ndarray, b: AllocationMatrix | np.ndarray) -> float:
    """``sum_i sqrt(sum_j b_ij |t_ji|^2)``."""
    w, bb = _weights(T), _alloc(b)
    if w.shape != bb.shape:
        raise ValueError(f"dimension mismatch: T is {w.shape}, b is {bb.shape}")
    return float(np.sqrt((w * bb).sum(axis=1)).sum())


def objective_gradient(T, b, floor: float = 1e-18) -> np.ndarray:
    """Partial derivatives ``|t_ji|^2 / (2 sqrt(sum_k b_ik |t_ki|^2 + floor))``."""
    w, bb = _weights(T), _alloc(b)
    if w.shape != bb.shape:
        raise ValueError(f"dimension mismatch: T is {w.shape}, b is {bb.shape}")
    rows = (w * bb).sum(axis=1)
    return w / (2.0 * np.sqrt(rows + floor))[:, None]


def maximize_objective(T: WitnessMatrix | np.ndarray,
                       opts: SolverOptions | None = None) -> SolverResult:
    """Projected gradient ascent for the allocation problem.

    Starts from ``b_ij = 1/n`` and keeps every column on the unit simplex
    (the objective is nondecreasing in each ``b_ij``, so the column-sum
    constraints are active at a maximizer).  Each iteration normalizes the
    gradient by its max-abs entry and backtracks from ``initial_step`` until
    the Armijo sufficient-increase test passes.  Stops when the relative gain
    of an accepted step drops below the tolerance, when no step passes, or
    after ``max_iterations`` (then ``converged`` is False).
    """
    opts = opts or SolverOptions()
    w = _weights(T)
    n = w.shape[0]
    ascent = _kernels.kernels(opts.backend)[3]
    b, f, it, conv, hist = ascent(
        w, np.full((n, n), 1.0 / n), opts.max_iterations,
        opts.relative_improvement_tolerance, opts.gradient_floor,
        opts.initial_step, opts.shrink, opts.sufficient_increase, opts.min_step)
    # the simplex projection can overshoot sum 1 by a few ulps
    b = np.clip(b, 0.0, None)
    b = b / np.maximum(b.sum(axis=0), 1.0)
    return SolverResult(AllocationMatrix(b), objective(T, b), int(it), bool(conv), hist)


def realize_optimizers(T, b) -> tuple[ScalarMatrix, ScalarMatrix]:
    """Factors ``(R, C)`` with ``tr((R ∘ C) T) = objective(T, b)``.

    ``C = sqrt(b)`` entrywise; row ``i`` of ``R`` is the normalized conjugate
    of ``(c_ij t_ji)_j``, or zero when that vector vanishes.
    """
    t = _entries(T)
    C = np.sqrt(_alloc(b)).astype(np.complex128)
    Z = C * t.T
    norms = np.linalg.norm(Z, axis=1)
    R = np.zeros_like(Z)
    nz = norms > 0
    R[nz] = Z[nz].conj() / norms[nz, None]
    return ScalarMatrix(R), ScalarMatrix(C)


def schur_trace(R: ScalarMatrix, C: ScalarMatrix, T) -> complex:
    """``tr((R ∘ C) T)``."""
    return complex(np.trace((R.entries * C.entries) @ _entries(T)))


def upper_bound(T) -> float:
    """``n * max |t_ij|``, an upper bound for the supremum."""
    t = _entries(T)
    return float(t.shape[0] * np.abs(t).max())


# -- random witnesses -----------------------------------------------------------

def sample_integer_symmetric(n: int, rng: np.random.Generator) -> np.ndarray:
    """``(N + N^T) / 2`` with ``N`` uniform on the integers ``-99..99``."""
    if n < 1:
        raise ValueError("n must be positive")
    N = rng.integers(-ENTRY_BOUND, ENTRY_BOUND + 1, size=(n, n))
    return (N + N.T) / 2.0


def wigner_normalize(SN: np.ndarray, n: int | None = None) -> np.ndarray:
    SN = np.asarray(SN, dtype=float)
    n = SN.shape[0] if n is None else n
    return SN / (WIGNER_SCALE * math.sqrt(n))


def schatten1(T: np.ndarray) -> float:
    """Sum of absolute eigenvalues of a symmetric matrix."""
    return float(np.abs(np.linalg.eigvalsh(_entries(T))).sum())


def empirical_f_mean(X: np.ndarray) -> float:
    """Mean of ``min(|lambda|, 2)`` over the eigenvalues of ``X``."""
    lam = np.linalg.eigvalsh(np.asarray(X, dtype=float))
    return float(np.minimum(np.abs(lam), 2.0).mean())


def sign_witness(T: np.ndarray) -> np.ndarray:
    """``2E - I`` with ``E`` the range projection of the positive part of ``T``.

    Eigenvalues within ``1e-12 * ||T||`` of zero count as nonpositive.
    """
    T = np.asarray(_entries(T), dtype=float)
    lam, Q = np.linalg.eigh(T)
    cut = 1e-12 * (np.abs(lam).max() if lam.size else 0.0)
    P = Q[:, lam > cut]
    E = P @ P.T
    return 2.0 * E - np.eye(T.shape[0])


def trial_rng(n: int, seed: int) -> np.random.Generator:
    """Independent generator for the trial ``(n, seed)``."""
    return np.random.default_rng(np.random.SeedSequence([seed, n]))


@dataclass(frozen=True)
class ExperimentReport:
    n: int
    seed: int
    schatten1_raw: float
    max_value: float
    max_times_sqrt_n: float
    upper_bound_check: float
    bound_99n_over_s1: float
    semicircle_f_mean: float
    support_count: int
    solver_iterations: int
    converged: bool

    def to_dict(self) -> dict:
        return asdict(self)


def run_witness_experiment(n: int, seed: int,
                           opts: SolverOptions | None = None) -> ExperimentReport:
    """Sample ``SN``, normalize to ``||T||_1 = 1`` and maximize the allocation objective."""
    if n < 2:
        raise ValueError("n must be at least 2")
    SN = sample_integer_symmetric(n, trial_rng(n, seed))
    s1 = schatten1(SN)
    T = SN / s1
    res = maximize_objective(T, opts)
    return ExperimentReport(
        n=n,
        seed=seed,
        schatten1_raw=s1,
        max_value=res.value,
        max_times_sqrt_n=res.value * math.sqrt(n),
        upper_bound_check=upper_bound(T),
        bound_99n_over_s1=ENTRY_BOUND * n / s1,
        semicircle_f_mean=empirical_f_mean(wigner_normalize(SN, n)),
        support_count=int(np.count_nonzero(res.allocation.entries > SUPPORT_THRESHOLD)),
        solver_iterations=res.iterations,
        converged=res.converged,
    )
