"""Finite block matrices, the two block Schur products and row/column norms.

A :class:`BlockMatrix` is a grid of dense complex blocks; block ``(i, j)``
maps a space of dimension ``col_dims[j]`` into one of dimension
``row_dims[i]``.  Two entrywise products are provided:

* :func:`schur_product` -- ``(A □ B)_ij = A_ij @ B_ij`` (uniform square blocks)
* :func:`schur_tensor_product` -- ``(A ⊠ B)_ij = kron(A_ij, B_ij)`` (any dims)

All containers are immutable; every function here is pure.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Any, Sequence

import numpy as np

#: relative tolerance for Hermitian / PSD checks on diagonal blocks
TAU_PSD = 1e-10


class ShapeMismatchError(ValueError):
    """Raised when two block matrices cannot be combined.

    ``index`` holds the first offending grid position, or ``None`` when the
    grids themselves disagree.
    """

    def __init__(self, message: str, index: tuple[int, int] | None = None):
        super().__init__(message)
        self.index = index


class NonUniformBlocksError(ValueError):
    """Raised when □ is applied to blocks that are not all the same square size."""


def _as_block(x: Any) -> np.ndarray:
    a = np.array(x, dtype=np.complex128)
    if a.ndim == 0:
        a = a.reshape(1, 1)
    if a.ndim != 2:
        raise ValueError(f"block must be 2-D, got ndim={a.ndim}")
    if not np.all(np.isfinite(a)):
        raise ValueError("block contains NaN or Inf")
    a.setflags(write=False)
    return a


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=np.complex128)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class BlockMatrix:
    row_dims: tuple[int, ...]
    col_dims: tuple[int, ...]
    blocks: tuple[tuple[np.ndarray, ...], ...]

    def __init__(self, blocks: Sequence[Sequence[Any]]):
        grid = tuple(tuple(_as_block(b) for b in row) for row in blocks)
        if not grid or not grid[0]:
            raise ValueError("block grid must be non-empty")
        ncols = len(grid[0])
        for i, row in enumerate(grid):
            if len(row) != ncols:
                raise ValueError(f"ragged grid: row {i} has {len(row)} blocks, expected {ncols}")
        row_dims = tuple(row[0].shape[0] for row in grid)
        col_dims = tuple(b.shape[1] for b in grid[0])
        for i, row in enumerate(grid):
            for j, b in enumerate(row):
                if b.shape != (row_dims[i], col_dims[j]):
                    raise ValueError(
                        f"block ({i},{j}) has shape {b.shape}, "
                        f"expected {(row_dims[i], col_dims[j])}"
                    )
        if min(row_dims) < 1 or min(col_dims) < 1:
            raise ValueError("block dimensions must be positive")
        object.__setattr__(self, "row_dims", row_dims)
        object.__setattr__(self, "col_dims", col_dims)
        object.__setattr__(self, "blocks", grid)

    @property
    def grid_shape(self) -> tuple[int, int]:
        return len(self.row_dims), len(self.col_dims)

    @property
    def shape(self) -> tuple[int, int]:
        """Shape of the flattened dense matrix."""
        return sum(self.row_dims), sum(self.col_dims)

    def __getitem__(self, ij: tuple[int, int]) -> np.ndarray:
        i, j = ij
        return self.blocks[i][j]

    def row(self, i: int) -> np.ndarray:
        """Row ``i`` as one dense ``row_dims[i] x sum(col_dims)`` matrix."""
        return np.hstack(self.blocks[i])

    def col(self, j: int) -> np.ndarray:
        """Column ``j`` as one dense ``sum(row_dims) x col_dims[j]`` matrix."""
        return np.vstack([row[j] for row in self.blocks])

    def adjoint(self) -> BlockMatrix:
        """Blockwise adjoint-transpose: ``(A*)_ji = (A_ij)^H``."""
        m, n = self.grid_shape
        return BlockMatrix([[self.blocks[i][j].conj().T for i in range(m)] for j in range(n)])

    def is_uniform(self) -> bool:
        dims = set(self.row_dims) | set(self.col_dims)
        return len(dims) == 1

    def __repr__(self) -> str:
        return f"BlockMatrix(row_dims={self.row_dims}, col_dims={self.col_dims})"

    # -- construction helpers -------------------------------------------------

    @classmethod
    def from_dense(cls, M: Any, row_dims: Sequence[int], col_dims: Sequence[int]) -> BlockMatrix:
        """Split a dense matrix into blocks; inverse of :func:`flatten`."""
        M = np.asarray(M)
        if M.shape != (sum(row_dims), sum(col_dims)):
            raise ValueError(f"dense shape {M.shape} does not match dims {row_dims} x {col_dims}")
        r = np.cumsum([0, *row_dims])
        c = np.cumsum([0, *col_dims])
        return cls([[M[r[i]:r[i + 1], c[j]:c[j + 1]] for j in range(len(col_dims))]
                    for i in range(len(row_dims))])

    @classmethod
    def identity(cls, n: int, h: int) -> BlockMatrix:
        """``n x n`` grid with ``I_h`` on the diagonal and zeros elsewhere."""
        return cls.from_dense(np.eye(n * h), [h] * n, [h] * n)

    @classmethod
    def random(cls, rng: np.random.Generator, row_dims: Sequence[int],
               col_dims: Sequence[int], complex_: bool = True) -> BlockMatrix:
        shape = (sum(row_dims), sum(col_dims))
        M = rng.standard_normal(shape)
        if complex_:
            M = M + 1j * rng.standard_normal(shape)
        return cls.from_dense(M, row_dims, col_dims)


@dataclass(frozen=True, eq=False)
class ScalarMatrix:
    """Dense complex matrix used as a Schur multiplier or witness."""

    entries: np.ndarray

    def __init__(self, entries: Any):
        a = np.array(entries, dtype=np.complex128)
        if a.ndim != 2 or 0 in a.shape:
            raise ValueError(f"scalar matrix must be a non-empty 2-D array, got shape {a.shape}")
        if not np.all(np.isfinite(a)):
            raise ValueError("scalar matrix contains NaN or Inf")
        a.setflags(write=False)
        object.__setattr__(self, "entries", a)

    @property
    def rows(self) -> int:
        return self.entries.shape[0]

    @property
    def cols(self) -> int:
        return self.entries.shape[1]

    def as_blocks(self) -> BlockMatrix:
        """Embed as a grid of ``1 x 1`` blocks."""
        return BlockMatrix.from_dense(self.entries, [1] * self.rows, [1] * self.cols)


@dataclass(frozen=True, eq=False)
class BlockDiagonal:
    """Block-diagonal operator with square Hermitian PSD blocks."""

    dims: tuple[int, ...]
    blocks: tuple[np.ndarray, ...]

    def __init__(self, blocks: Sequence[Any], check: bool = True):
        bl = tuple(_as_block(b) for b in blocks)
        if not bl:
            raise ValueError("block diagonal must have at least one block")
        for i, b in enumerate(bl):
            if b.shape[0] != b.shape[1]:
                raise ValueError(f"diagonal block {i} is not square: {b.shape}")
            if check:
                _check_psd(b, f"diagonal block {i}")
        object.__setattr__(self, "dims", tuple(b.shape[0] for b in bl))
        object.__setattr__(self, "blocks", bl)

    def to_dense(self) -> np.ndarray:
        n = sum(self.dims)
        out = np.zeros((n, n), dtype=np.complex128)
        k = 0
        for b, d in zip(self.blocks, self.dims):
            out[k:k + d, k:k + d] = b
            k += d
        return out

    def to_block_matrix(self) -> BlockMatrix:
        return BlockMatrix.from_dense(self.to_dense(), self.dims, self.dims)

    def norm(self) -> float:
        return max(operator_norm(b) for b in self.blocks)

    def __repr__(self) -> str:
        return f"BlockDiagonal(dims={self.dims})"


def _check_psd(M: np.ndarray, what: str, tol: float = TAU_PSD) -> None:
    scale = max(np.linalg.norm(M, 2), 1.0) if M.size else 1.0
    if np.linalg.norm(M - M.conj().T) > tol * scale:
        raise ValueError(f"{what} is not Hermitian")
    lam = np.linalg.eigvalsh((M + M.conj().T) / 2)
    if lam.size and lam.min() < -tol * scale:
        raise ValueError(f"{what} is not positive semidefinite (min eigenvalue {lam.min():.3e})")


# -- products -----------------------------------------------------------------

def _check_grids(A: BlockMatrix, B: BlockMatrix) -> None:
    if A.grid_shape != B.grid_shape:
        raise ShapeMismatchError(f"grid shapes differ: {A.grid_shape} vs {B.grid_shape}")


def schur_product(A: BlockMatrix, B: BlockMatrix) -> BlockMatrix:
    """Block Schur product ``(A □ B)_ij = A_ij B_ij``.

    Requires every block of both factors to be ``h x h`` for one fixed ``h``.
    """
    _check_grids(A, B)
    m, n = A.grid_shape
    for i in range(m):
        for j in range(n):
            if A.col_dims[j] != B.row_dims[i]:
                raise ShapeMismatchError(
                    f"block ({i},{j}): A has {A.col_dims[j]} columns but B has "
                    f"{B.row_dims[i]} rows", (i, j))
    if not (A.is_uniform() and B.is_uniform() and A.row_dims[0] == B.row_dims[0]):
        raise NonUniformBlocksError("□ requires all blocks to share one square size")
    return BlockMatrix([[A.blocks[i][j] @ B.blocks[i][j] for j in range(n)] for i in range(m)])


def schur_tensor_product(A: BlockMatrix, B: BlockMatrix) -> BlockMatrix:
    """Block Schur tensor product ``(A ⊠ B)_ij = A_ij ⊗ B_ij``."""
    _check_grids(A, B)
    m, n = A.grid_shape
    return BlockMatrix([[np.kron(A.blocks[i][j], B.blocks[i][j]) for j in range(n)]
                        for i in range(m)])


def _as_scalar(S: ScalarMatrix | Any) -> ScalarMatrix:
    return S if isinstance(S, ScalarMatrix) else ScalarMatrix(S)


def scalar_schur_action(S: ScalarMatrix | Any, B: BlockMatrix) -> BlockMatrix:
    """Schur multiplier action ``(s_ij B_ij)``."""
    S = _as_scalar(S)
    if S.entries.shape != B.grid_shape:
        raise ShapeMismatchError(f"multiplier shape {S.entries.shape} != grid {B.grid_shape}")
    m, n = B.grid_shape
    return BlockMatrix([[S.entries[i, j] * B.blocks[i][j] for j in range(n)] for i in range(m)])


def build_commutator_multiplier(lambdas: Sequence[float]) -> ScalarMatrix:
    """Multiplier ``s_ij = lambda_i - lambda_j``.

    Acting with it on the block decomposition of ``b`` with respect to the
    spectral projections of ``D = diag(lambda_i I)`` gives ``Db - bD``.
    """
    lam = np.asarray(lambdas, dtype=float)
    if lam.ndim != 1 or lam.size == 0:
        raise ValueError("lambdas must be a non-empty 1-D sequence")
    return ScalarMatrix(lam[:, None] - lam[None, :])


# -- norms --------------------------------------------------------------------

def operator_norm(M: Any) -> float:
    """Largest singular value; 0 for an empty matrix."""
    M = np.asarray(M)
    if M.size == 0:
        return 0.0
    return float(np.linalg.norm(M, 2))


def flatten(A: BlockMatrix) -> np.ndarray:
    """Assemble the blocks into one dense matrix in index order."""
    return np.block([list(row) for row in A.blocks])


def _gram_sum(terms: list[np.ndarray]) -> np.ndarray:
    G = sum(terms[1:], terms[0].copy())
    return (G + G.conj().T) / 2


def diag_row_gram(A: BlockMatrix) -> BlockDiagonal:
    """Diagonal of ``A A*``: block ``i`` is ``sum_j A_ij A_ij^H``."""
    return BlockDiagonal([_gram_sum([a @ a.conj().T for a in row]) for row in A.blocks],
                         check=False)


def diag_col_gram(B: BlockMatrix) -> BlockDiagonal:
    """Diagonal of ``B* B``: block ``j`` is ``sum_i B_ij^H B_ij``."""
    m, n = B.grid_shape
    return BlockDiagonal([_gram_sum([B.blocks[i][j].conj().T @ B.blocks[i][j] for i in range(m)])
                          for j in range(n)], check=False)


def _max_sqrt_eig(G: BlockDiagonal) -> float:
    top = max(np.linalg.eigvalsh(b)[-1] for b in G.blocks)
    return float(np.sqrt(max(top, 0.0)))


def row_norm(A: BlockMatrix) -> float:
    """``max_i ||sum_j A_ij A_ij^H||^(1/2)``."""
    return _max_sqrt_eig(diag_row_gram(A))


def col_norm(B: BlockMatrix) -> float:
    """``max_j ||sum_i B_ij^H B_ij||^(1/2)``."""
    return _max_sqrt_eig(diag_col_gram(B))


# -- JSON ---------------------------------------------------------------------

def _encode_block(b: np.ndarray) -> list:
    return [[[float(z.real), float(z.imag)] for z in r] for r in b]


def _decode_block(rows: list) -> np.ndarray:
    a = np.array(rows, dtype=float)
    if a.ndim != 3 or a.shape[-1] != 2:
        raise ValueError("block entries must be [re, im] pairs")
    return a[..., 0] + 1j * a[..., 1]


def block_matrix_to_dict(A: BlockMatrix) -> dict:
    return {
        "row_dims": list(A.row_dims),
        "col_dims": list(A.col_dims),
        "blocks": [[_encode_block(b) for b in row] for row in A.blocks],
    }


def block_matrix_from_dict(d: dict) -> BlockMatrix:
    try:
        A = BlockMatrix([[_decode_block(b) for b in row] for row in d["blocks"]])
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed block matrix document: {exc}") from exc
    for key, dims in (("row_dims", A.row_dims), ("col_dims", A.col_dims)):
        if key in d and tuple(d[key]) != dims:
            raise ValueError(f"{key} {d[key]} disagrees with block shapes {list(dims)}")
    return A


def scalar_matrix_to_dict(S: ScalarMatrix) -> dict:
    return block_matrix_to_dict(S.as_blocks())


def scalar_matrix_from_dict(d: dict) -> ScalarMatrix:
    A = block_matrix_from_dict(d)
    if set(A.row_dims) | set(A.col_dims) != {1}:
        raise ValueError("scalar matrix document must have 1x1 blocks")
    return ScalarMatrix(flatten(A))


def dumps(A: BlockMatrix | ScalarMatrix) -> str:
    if isinstance(A, ScalarMatrix):
        return json.dumps(scalar_matrix_to_dict(A))
    return json.dumps(block_matrix_to_dict(A))


def loads(s: str) -> BlockMatrix:
    return block_matrix_from_dict(json.loads(s))
