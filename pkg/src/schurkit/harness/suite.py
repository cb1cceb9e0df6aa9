"""Randomized invariant suite run by ``schurkit verify``.

Every check draws fresh random inputs per (size, trial) and records the worst
measured value against its threshold.  ``perturb`` scales the middle factor of
every decomposition by ``1 + perturb`` to demonstrate that the checks bite.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from ..blockmat import (
    BlockMatrix,
    ScalarMatrix,
    col_norm,
    diag_col_gram,
    diag_row_gram,
    flatten,
    operator_norm,
    row_norm,
    scalar_schur_action,
    schur_product,
    schur_tensor_product,
)
from ..polar import (
    CONTRACTION_TOL,
    PARTIAL_ISOMETRY_TOL,
    RECONSTRUCTION_TOL,
    SchurDecomposition,
    decompose_schur,
    decompose_schur_tensor,
    max_col_residual,
    max_row_residual,
)
from ..thinset import (
    SolverOptions,
    maximize_objective,
    objective,
    objective_gradient,
    realize_optimizers,
    schatten1,
    schur_trace,
    sign_witness,
    upper_bound,
)


@dataclass
class Outcome:
    name: str
    worst: float
    threshold: float
    passed: bool = True
    cases: int = 0

    def add(self, value: float, ok: bool) -> None:
        self.cases += 1
        self.passed = self.passed and bool(ok)
        self.worst = max(self.worst, float(value))


def _cplx(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def _uniform_pair(rng, n, h, degenerate=False):
    A = BlockMatrix.random(rng, [h] * n, [h] * n)
    B = BlockMatrix.random(rng, [h] * n, [h] * n)
    if degenerate:
        a, b = flatten(A), flatten(B)
        a[:h, :] = 0
        b[:, -h:] = 0
        A = BlockMatrix.from_dense(a, A.row_dims, A.col_dims)
        B = BlockMatrix.from_dense(b, B.row_dims, B.col_dims)
    return A, B


def _tensor_pair(rng, n, hmax):
    f, e, l, k = (rng.integers(1, hmax + 1, size=n).tolist() for _ in range(4))
    return BlockMatrix.random(rng, f, e), BlockMatrix.random(rng, l, k)


def _perturbed(dec: SchurDecomposition, eps: float) -> SchurDecomposition:
    if not eps:
        return dec
    m = flatten(dec.middle) * (1 + eps)
    middle = BlockMatrix.from_dense(m, dec.middle.row_dims, dec.middle.col_dims)
    return replace(dec, middle=middle, middle_norm=operator_norm(m))


def _decomposition_checks(out, tag, A, B, dec, product):
    L, M, R = dec.left.to_dense(), flatten(dec.middle), dec.right.to_dense()
    rel = np.linalg.norm(product - L @ M @ R) / (1 + np.linalg.norm(product))
    out[f"{tag}_reconstruction"].add(rel, rel <= RECONSTRUCTION_TOL)
    mn = operator_norm(M)
    out[f"{tag}_contraction"].add(mn, mn <= 1 + CONTRACTION_TOL)
    res = max(max_row_residual(dec.row_isometry), max_col_residual(dec.col_isometry))
    out[f"{tag}_partial_isometry"].add(res, res <= PARTIAL_ISOMETRY_TOL)
    nv = max(row_norm(dec.row_isometry), col_norm(dec.col_isometry))
    out[f"{tag}_isometry_norms"].add(nv, nv <= 1 + 1e-10)


def run_suite(sizes=(1, 2, 3, 4), trials: int = 3, seed: int = 0,
              perturb: float = 0.0) -> list[Outcome]:
    names = {
        "livshits": 1e-10, "horn_mathias": 1e-10, "thbst_vector_bound": 1e-10,
        "scalar_action_isometry": 1e-10, "bilinearity": 1e-12, "row_norm_vs_gram": 1e-12,
        "schur_reconstruction": RECONSTRUCTION_TOL, "schur_contraction": 1 + CONTRACTION_TOL,
        "schur_partial_isometry": PARTIAL_ISOMETRY_TOL, "schur_isometry_norms": 1 + 1e-10,
        "tensor_reconstruction": RECONSTRUCTION_TOL, "tensor_contraction": 1 + CONTRACTION_TOL,
        "tensor_partial_isometry": PARTIAL_ISOMETRY_TOL, "tensor_isometry_norms": 1 + 1e-10,
        "degenerate_reconstruction": RECONSTRUCTION_TOL,
        "degenerate_contraction": 1 + CONTRACTION_TOL,
        "degenerate_partial_isometry": PARTIAL_ISOMETRY_TOL,
        "degenerate_isometry_norms": 1 + 1e-10,
        "scale_covariance": 1e-9, "bilinear_bound": 1e-10,
        "duality_sandwich": 1e-10, "concavity": 1e-12, "monotone_solver": 0.0,
        "gradient_check": 1e-5, "stationary_point": 1e-10, "sign_witness": 1e-10,
        "objective_scaling": 1e-12,
    }
    out = {k: Outcome(k, float("-inf"), v) for k, v in names.items()}
    rng = np.random.default_rng(seed)
    checks: list[Callable] = [_blockmat_checks, _polar_checks, _thinset_checks]
    for n in sizes:
        for t in range(trials):
            h = 1 + (t % 3)
            for check in checks:
                check(out, rng, n, h, perturb)
    return list(out.values())


def _blockmat_checks(out, rng, n, h, perturb):
    A, B = _uniform_pair(rng, n, h)
    bound = row_norm(A) * col_norm(B)
    v = operator_norm(flatten(schur_product(A, B))) - bound
    out["livshits"].add(v, v <= 1e-10)

    At, Bt = _tensor_pair(rng, n, 3)
    P = flatten(schur_tensor_product(At, Bt))
    v = operator_norm(P) - row_norm(At) * col_norm(Bt)
    out["horn_mathias"].add(v, v <= 1e-10)

    # (diag(AA*)^(1/2) ⊗ I_L) Γ and (I_E ⊗ diag(B*B)^(1/2)) Ξ via quadratic forms
    Ga, Gb = diag_row_gram(At), diag_col_gram(Bt)
    for _ in range(3):
        xi = _cplx(rng, P.shape[1]); xi /= np.linalg.norm(xi)
        gam = _cplx(rng, P.shape[0]); gam /= np.linalg.norm(gam)
        lhs = abs(np.vdot(gam, P @ xi))
        qa = qb = 0.0
        r = 0
        for i, G in enumerate(Ga.blocks):
            d = G.shape[0] * Bt.row_dims[i]
            qa += np.vdot(gam[r:r + d], np.kron(G, np.eye(Bt.row_dims[i])) @ gam[r:r + d]).real
            r += d
        c = 0
        for j, G in enumerate(Gb.blocks):
            d = At.col_dims[j] * G.shape[0]
            qb += np.vdot(xi[c:c + d], np.kron(np.eye(At.col_dims[j]), G) @ xi[c:c + d]).real
            c += d
        v = lhs - math.sqrt(max(qa, 0)) * math.sqrt(max(qb, 0))
        out["thbst_vector_bound"].add(v, v <= 1e-10)

    S = ScalarMatrix(_cplx(rng, n, n))
    a = operator_norm(flatten(scalar_schur_action(S, A)))
    b = operator_norm(flatten(schur_tensor_product(S.as_blocks(), A)))
    v = abs(a - b)
    out["scalar_action_isometry"].add(v, v <= 1e-10 * max(1.0, a))

    A2 = BlockMatrix.random(rng, A.row_dims, A.col_dims)
    c = complex(rng.standard_normal(), rng.standard_normal())
    comb = BlockMatrix.from_dense(c * flatten(A) + flatten(A2), A.row_dims, A.col_dims)
    for prod in (schur_product, schur_tensor_product):
        lhs = flatten(prod(comb, B))
        rhs = c * flatten(prod(A, B)) + flatten(prod(A2, B))
        v = np.linalg.norm(lhs - rhs) / max(1.0, np.linalg.norm(rhs))
        out["bilinearity"].add(v, v <= 1e-12)

    top = max(operator_norm(G) for G in diag_row_gram(A).blocks)
    v = abs(row_norm(A) ** 2 - top) / max(1.0, top)
    out["row_norm_vs_gram"].add(v, v <= 1e-12)


def _polar_checks(out, rng, n, h, perturb):
    A, B = _uniform_pair(rng, n, h)
    dec = _perturbed(decompose_schur(A, B), perturb)
    _decomposition_checks(out, "schur", A, B, dec, flatten(schur_product(A, B)))

    At, Bt = _tensor_pair(rng, n, 3)
    dec_t = _perturbed(decompose_schur_tensor(At, Bt), perturb)
    _decomposition_checks(out, "tensor", At, Bt, dec_t, flatten(schur_tensor_product(At, Bt)))

    Ad, Bd = _uniform_pair(rng, n, h, degenerate=True)
    dec_d = _perturbed(decompose_schur(Ad, Bd), perturb)
    _decomposition_checks(out, "degenerate", Ad, Bd, dec_d, flatten(schur_product(Ad, Bd)))

    c = float(rng.uniform(0.1, 10.0))
    cA = BlockMatrix.from_dense(c * flatten(A), A.row_dims, A.col_dims)
    dec_c = decompose_schur(cA, B)
    base = decompose_schur(A, B)
    v = max(np.linalg.norm(dec_c.left.to_dense() - c * base.left.to_dense())
            / (c * max(1.0, np.linalg.norm(base.left.to_dense()))),
            np.linalg.norm(flatten(dec_c.middle) - flatten(base.middle)))
    out["scale_covariance"].add(v, v <= 1e-9)

    P = flatten(schur_product(A, B))
    L, R = dec.left.to_dense(), dec.right.to_dense()
    for _ in range(3):
        xi = _cplx(rng, P.shape[1]); xi /= np.linalg.norm(xi)
        gam = _cplx(rng, P.shape[0]); gam /= np.linalg.norm(gam)
        v = abs(np.vdot(gam, P @ xi)) - np.linalg.norm(L @ gam) * np.linalg.norm(R @ xi)
        out["bilinear_bound"].add(v, v <= 1e-10)


def _thinset_checks(out, rng, n, h, perturb):
    m = n + 1
    S = rng.standard_normal((m, m))
    T = (S + S.T) / 2
    res = maximize_objective(T, SolverOptions())
    R, C = realize_optimizers(T, res.allocation)
    v = abs(schur_trace(R, C, T) - res.value)
    ok = (v <= 1e-10 and res.value <= upper_bound(T) + 1e-9
          and row_norm(R.as_blocks()) <= 1 + 1e-10 and col_norm(C.as_blocks()) <= 1 + 1e-10)
    out["duality_sandwich"].add(v, ok)

    b1 = rng.dirichlet(np.ones(m), size=m).T
    b2 = rng.dirichlet(np.ones(m), size=m).T
    th = float(rng.uniform(0.05, 0.95))
    v = th * objective(T, b1) + (1 - th) * objective(T, b2) - objective(T, th * b1 + (1 - th) * b2)
    out["concavity"].add(v, v <= 1e-12)

    drops = np.diff(res.history)
    v = float(-drops.min()) if drops.size else 0.0
    out["monotone_solver"].add(v, v <= 0.0)

    b = rng.dirichlet(np.ones(m), size=m).T * 0.9 + 0.01
    g = objective_gradient(T, b)
    fd = np.empty_like(b)
    for i in range(m):
        for j in range(m):
            e = np.zeros_like(b); e[i, j] = 1e-6
            fd[i, j] = (objective(T, b + e) - objective(T, b - e)) / 2e-6
    v = np.abs(g - fd).max() / max(np.abs(fd).max(), 1e-300)
    out["gradient_check"].add(v, v <= 1e-5)

    ones = np.ones((m, m))
    b0 = np.full((m, m), 1.0 / m)
    g0 = objective_gradient(ones, b0)
    proj = g0 - g0.mean(axis=0, keepdims=True)
    v = float(np.abs(proj).max())
    out["stationary_point"].add(v, v <= 1e-10)

    s1 = schatten1(T)
    v = abs(np.trace(sign_witness(T) @ T) - s1) / max(s1, 1e-300)
    out["sign_witness"].add(v, v <= 1e-10)

    c = float(rng.uniform(-5, 5))
    base = objective(T, b)
    v = abs(objective(c * T, b) - abs(c) * base) / max(1.0, abs(c) * base)
    out["objective_scaling"].add(v, v <= 1e-12)


def format_table(outcomes: list[Outcome]) -> str:
    width = max(len(o.name) for o in outcomes)
    lines = [f"{'check':<{width}}  {'worst':>12}  {'threshold':>12}  cases  result"]
    for o in outcomes:
        lines.append(f"{o.name:<{width}}  {o.worst:12.3e}  {o.threshold:12.3e}  {o.cases:5d}  "
                     f"{'PASS' if o.passed else 'FAIL'}")
    return "\n".join(lines) + "\n"
