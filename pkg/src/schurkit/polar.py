"""Row/column polar decompositions and the factorization of Schur products.

For a row bounded ``A`` and column bounded ``B`` the block Schur product
factors as::

    A □ B = diag(AA*)^(1/2) · (V □ W) · diag(B*B)^(1/2)

where every row of ``V`` and every column of ``W`` is a partial isometry, so
``V □ W`` is a contraction.  The same holds for ⊠ with the outer factors
Kronecker-expanded by identities.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from .blockmat import (
    TAU_PSD,
    BlockDiagonal,
    BlockMatrix,
    col_norm,
    diag_col_gram,
    diag_row_gram,
    flatten,
    operator_norm,
    row_norm,
    schur_product,
    schur_tensor_product,
)

Mode = Literal["schur", "tensor"]

#: tolerances shared by the decomposition invariants
CONTRACTION_TOL = 1e-9
RECONSTRUCTION_TOL = 1e-9
PARTIAL_ISOMETRY_TOL = 1e-9
NORM_TOL = 1e-10


def psd_sqrt(M: np.ndarray, tol: float = TAU_PSD) -> np.ndarray:
    """Unique PSD square root of a Hermitian PSD matrix.

    Eigenvalues in ``[-tol * ||M||, 0)`` are clamped to zero; anything more
    negative raises ``ValueError``, as does a non-Hermitian input.
    """
    M = np.asarray(M, dtype=np.complex128)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {M.shape}")
    if M.size == 0:
        return M.copy()
    scale = max(np.linalg.norm(M, 2), np.finfo(float).tiny)
    if np.linalg.norm(M - M.conj().T) > tol * max(scale, 1.0):
        raise ValueError("matrix is not Hermitian")
    lam, Q = np.linalg.eigh((M + M.conj().T) / 2)
    if lam[0] < -tol * scale:
        raise ValueError(f"matrix has a negative eigenvalue {lam[0]:.3e}")
    root = (Q * np.sqrt(np.clip(lam, 0.0, None))) @ Q.conj().T
    return (root + root.conj().T) / 2


@dataclass(frozen=True, eq=False)
class PolarPair:
    gram_sqrt: np.ndarray
    isometry_part: np.ndarray
    rank_tolerance_used: float


def right_polar(row: np.ndarray) -> PolarPair:
    """Polar decomposition to the right, ``row = (row row*)^(1/2) V``.

    ``V`` is built from the SVD ``row = U S W*`` as ``U D W*`` with ``D``
    keeping the singular values above ``max(h, m) * eps * s_max``; for a zero
    row both factors are zero.
    """
    row = np.asarray(row, dtype=np.complex128)
    h, m = row.shape
    U, s, Wh = np.linalg.svd(row, full_matrices=False)
    smax = s[0] if s.size else 0.0
    tol = max(h, m) * np.finfo(float).eps * smax
    keep = s > tol
    V = U[:, keep] @ Wh[keep, :]
    G = (U * s) @ U.conj().T
    G = (G + G.conj().T) / 2
    return PolarPair(G, V, float(tol))


def left_polar(col: np.ndarray) -> PolarPair:
    """Polar decomposition to the left, ``col = W (col* col)^(1/2)``.

    ``isometry_part`` holds ``W`` and ``gram_sqrt`` the right-hand factor.
    """
    p = right_polar(np.asarray(col, dtype=np.complex128).conj().T)
    return PolarPair(p.gram_sqrt, p.isometry_part.conj().T, p.rank_tolerance_used)


def partial_isometry_residual(P: np.ndarray) -> float:
    """``||P P* P - P||_F``."""
    return float(np.linalg.norm(P @ P.conj().T @ P - P))


def row_polar_factor(A: BlockMatrix) -> tuple[BlockDiagonal, BlockMatrix]:
    """Split ``A = D V`` with ``D = diag(AA*)^(1/2)`` and partial-isometry rows in ``V``."""
    D = BlockDiagonal([psd_sqrt(G) for G in diag_row_gram(A).blocks])
    rows = [right_polar(A.row(i)).isometry_part for i in range(len(A.row_dims))]
    V = BlockMatrix.from_dense(np.vstack(rows), A.row_dims, A.col_dims)
    return D, V


def col_polar_factor(B: BlockMatrix) -> tuple[BlockMatrix, BlockDiagonal]:
    """Split ``B = W D`` with ``D = diag(B*B)^(1/2)`` and partial-isometry columns in ``W``."""
    D = BlockDiagonal([psd_sqrt(G) for G in diag_col_gram(B).blocks])
    cols = [left_polar(B.col(j)).isometry_part for j in range(len(B.col_dims))]
    W = BlockMatrix.from_dense(np.hstack(cols), B.row_dims, B.col_dims)
    return W, D


@dataclass(frozen=True, eq=False)
class SchurDecomposition:
    """``product = left · middle · right`` with ``middle`` a contraction."""

    left: BlockDiagonal
    middle: BlockMatrix
    right: BlockDiagonal
    middle_norm: float
    reconstruction_error: float
    reconstruction_error_rel: float
    mode: Mode
    row_isometry: BlockMatrix = field(repr=False)
    col_isometry: BlockMatrix = field(repr=False)

    def diagnostics(self) -> dict:
        res = max(max_row_residual(self.row_isometry), max_col_residual(self.col_isometry))
        return {
            "middle_norm": self.middle_norm,
            "reconstruction_error_abs": self.reconstruction_error,
            "reconstruction_error_rel": self.reconstruction_error_rel,
            "max_partial_isometry_residual": res,
        }


def max_row_residual(V: BlockMatrix) -> float:
    return max(partial_isometry_residual(V.row(i)) for i in range(len(V.row_dims)))


def max_col_residual(W: BlockMatrix) -> float:
    return max(partial_isometry_residual(W.col(j)) for j in range(len(W.col_dims)))


def _reconstruction(product: np.ndarray, left: BlockDiagonal, middle: BlockMatrix,
                    right: BlockDiagonal) -> tuple[float, float]:
    err = float(np.linalg.norm(product - left.to_dense() @ flatten(middle) @ right.to_dense()))
    return err, err / (1.0 + float(np.linalg.norm(product)))


def _kron_identity(D: BlockDiagonal, dims: tuple[int, ...], side: str) -> BlockDiagonal:
    if side == "left":
        return BlockDiagonal([np.kron(b, np.eye(d)) for b, d in zip(D.blocks, dims)], check=False)
    return BlockDiagonal([np.kron(np.eye(d), b) for b, d in zip(D.blocks, dims)], check=False)


def decompose_schur(A: BlockMatrix, B: BlockMatrix) -> SchurDecomposition:
    """Factor ``A □ B`` as ``diag(AA*)^(1/2) (V □ W) diag(B*B)^(1/2)``."""
    product = flatten(schur_product(A, B))
    left, V = row_polar_factor(A)
    W, right = col_polar_factor(B)
    middle = schur_product(V, W)
    err, rel = _reconstruction(product, left, middle, right)
    return SchurDecomposition(left, middle, right, operator_norm(flatten(middle)),
                              err, rel, "schur", V, W)


def decompose_schur_tensor(A: BlockMatrix, B: BlockMatrix) -> SchurDecomposition:
    """Factor ``A ⊠ B`` as ``(diag(AA*)^(1/2) ⊠ I_L) (V ⊠ W) (I_E ⊠ diag(B*B)^(1/2))``."""
    product = flatten(schur_tensor_product(A, B))
    D_A, V = row_polar_factor(A)
    W, D_B = col_polar_factor(B)
    left = _kron_identity(D_A, B.row_dims, "left")
    right = _kron_identity(D_B, A.col_dims, "right")
    middle = schur_tensor_product(V, W)
    err, rel = _reconstruction(product, left, middle, right)
    return SchurDecomposition(left, middle, right, operator_norm(flatten(middle)),
                              err, rel, "tensor", V, W)


@dataclass(frozen=True)
class Check:
    name: str
    value: float
    threshold: float
    passed: bool


@dataclass(frozen=True)
class DiagnosticReport:
    checks: tuple[Check, ...]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def __getitem__(self, name: str) -> Check:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)


def _psd_violation(D: BlockDiagonal) -> float:
    worst = 0.0
    for b in D.blocks:
        scale = max(np.linalg.norm(b, 2), 1.0)
        herm = np.linalg.norm(b - b.conj().T) / scale
        neg = max(-np.linalg.eigvalsh((b + b.conj().T) / 2)[0], 0.0) / scale
        worst = max(worst, herm, neg)
    return float(worst)


def verify_decomposition(dec: SchurDecomposition, A: BlockMatrix, B: BlockMatrix,
                         mode: Mode | None = None) -> DiagnosticReport:
    """Recompute every invariant of ``dec`` from scratch against ``(A, B)``."""
    mode = mode or dec.mode
    prod = schur_product(A, B) if mode == "schur" else schur_tensor_product(A, B)
    P = flatten(prod)
    _, rel = _reconstruction(P, dec.left, dec.middle, dec.right)
    mnorm = operator_norm(flatten(dec.middle))
    V, W = dec.row_isometry, dec.col_isometry
    checks = [
        Check("reconstruction", rel, RECONSTRUCTION_TOL, rel <= RECONSTRUCTION_TOL),
        Check("contraction", mnorm, 1 + CONTRACTION_TOL, mnorm <= 1 + CONTRACTION_TOL),
        Check("row_partial_isometry", max_row_residual(V), PARTIAL_ISOMETRY_TOL,
              max_row_residual(V) <= PARTIAL_ISOMETRY_TOL),
        Check("col_partial_isometry", max_col_residual(W), PARTIAL_ISOMETRY_TOL,
              max_col_residual(W) <= PARTIAL_ISOMETRY_TOL),
        Check("row_norm_V", row_norm(V), 1 + NORM_TOL, row_norm(V) <= 1 + NORM_TOL),
        Check("col_norm_W", col_norm(W), 1 + NORM_TOL, col_norm(W) <= 1 + NORM_TOL),
        Check("left_psd", _psd_violation(dec.left), TAU_PSD, _psd_violation(dec.left) <= TAU_PSD),
        Check("right_psd", _psd_violation(dec.right), TAU_PSD,
              _psd_violation(dec.right) <= TAU_PSD),
    ]
    return DiagnosticReport(tuple(checks))
