"""Batch orchestration: trial fan-out, deterministic aggregation, file formats."""
from __future__ import annotations

import csv
import io
import json
import math
import os
import statistics
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, Sequence, TypeVar

import numpy as np

from ..blockmat import BlockDiagonal, BlockMatrix, block_matrix_from_dict, block_matrix_to_dict
from ..polar import SchurDecomposition
from ..thinset import (
    SEMICIRCLE_F_MEAN,
    ExperimentReport,
    SolverOptions,
    empirical_f_mean,
    run_witness_experiment,
    sample_integer_symmetric,
    trial_rng,
    wigner_normalize,
)

T = TypeVar("T")

DEFAULT_THINSET_DIMS = (2, 4, 8, 16, 32, 50)
HIST_LO, HIST_HI, HIST_WIDTH = -2.5, 2.5, 0.05
HIST_BINS = int(round((HIST_HI - HIST_LO) / HIST_WIDTH))

CSV_COLUMNS = ("n", "seed", "schatten1_raw", "max_value", "max_times_sqrt_n",
               "bound_99n_over_s1", "semicircle_f_mean", "support_count", "iterations",
               "converged")


def worker_count(ntasks: int) -> int:
    cap = os.environ.get("SCHURKIT_THREADS")
    limit = int(cap) if cap else (os.cpu_count() or 1)
    return max(1, min(limit, ntasks))


def run_pool(fn: Callable[..., T], tasks: Sequence[tuple]) -> list[T]:
    """Map ``fn`` over argument tuples on a bounded thread pool, keeping task order."""
    if not tasks:
        return []
    with ThreadPoolExecutor(max_workers=worker_count(len(tasks))) as pool:
        return list(pool.map(lambda args: fn(*args), tasks))


def parse_seeds(spec: str) -> list[int]:
    """``"a..b"`` (inclusive) or a single integer."""
    if ".." in spec:
        lo, hi = spec.split("..", 1)
        a, b = int(lo), int(hi)
        if b < a:
            raise ValueError(f"empty seed range {spec!r}")
        return list(range(a, b + 1))
    return [int(spec)]


# -- thin-set experiment --------------------------------------------------------

def run_thinset(dims: Iterable[int], seeds: Sequence[int],
                opts: SolverOptions | None = None) -> list[ExperimentReport]:
    tasks = sorted({(n, s) for n in dims for s in seeds})
    return run_pool(lambda n, s: run_witness_experiment(n, s, opts), tasks)


def report_row(r: ExperimentReport) -> dict:
    return {
        "n": r.n,
        "seed": r.seed,
        "schatten1_raw": r.schatten1_raw,
        "max_value": r.max_value,
        "max_times_sqrt_n": r.max_times_sqrt_n,
        "upper_bound_check": r.upper_bound_check,
        "bound_99n_over_s1": r.bound_99n_over_s1,
        "semicircle_f_mean": r.semicircle_f_mean,
        "support_count": r.support_count,
        "iterations": r.solver_iterations,
        "converged": r.converged,
    }


def summarize_thinset(rows: Sequence[dict]) -> list[dict]:
    """Per-``n`` median / max of value*sqrt(n) and the fractions below 3 and 2.5."""
    out = []
    for n in sorted({r["n"] for r in rows}):
        vals = [r["max_times_sqrt_n"] for r in rows if r["n"] == n]
        out.append({
            "n": n,
            "trials": len(vals),
            "median_max_times_sqrt_n": statistics.median(vals),
            "max_max_times_sqrt_n": max(vals),
            "fraction_below_3": sum(v < 3 for v in vals) / len(vals),
            "fraction_below_2_5": sum(v < 2.5 for v in vals) / len(vals),
            "all_converged": all(r["converged"] for r in rows if r["n"] == n),
        })
    return out


def thinset_rows_to_csv(rows: Sequence[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in rows:
        w.writerow([repr(r[c]) if isinstance(r[c], float) else r[c] for c in CSV_COLUMNS])
    return buf.getvalue()


def thinset_summary_text(summary: Sequence[dict]) -> str:
    lines = []
    for s in summary:
        lines.append(
            f"n={s['n']:>4} trials={s['trials']:>3}  median max*sqrt(n)={s['median_max_times_sqrt_n']:.4f}"
            f"  max={s['max_max_times_sqrt_n']:.4f}  <3: {100 * s['fraction_below_3']:.0f}%"
            f"  <2.5: {100 * s['fraction_below_2_5']:.0f}%"
            f"  converged: {'yes' if s['all_converged'] else 'NO'}")
        lines.append(f"       value*sqrt(n) = {s['max_max_times_sqrt_n']:.4f} (worst) vs theoretical 3")
    return "\n".join(lines) + "\n"


# -- semicircle -------------------------------------------------------------------

def eigen_histogram(lam: np.ndarray) -> np.ndarray:
    """Counts on ``[-2.5, 2.5]`` in bins of width 0.05; outliers go to the edge bins."""
    edges = np.linspace(HIST_LO, HIST_HI, HIST_BINS + 1)
    counts, _ = np.histogram(np.clip(lam, HIST_LO, HIST_HI), bins=edges)
    return counts


def semicircle_trial(n: int, seed: int) -> dict:
    X = wigner_normalize(sample_integer_symmetric(n, trial_rng(n, seed)), n)
    lam = np.linalg.eigvalsh(X)
    f = empirical_f_mean(X)
    return {
        "n": n,
        "seed": seed,
        "f_mean": f,
        "reference": SEMICIRCLE_F_MEAN,
        "deviation": abs(f - SEMICIRCLE_F_MEAN),
        "hist_lo": HIST_LO,
        "bin_width": HIST_WIDTH,
        "counts": eigen_histogram(lam).tolist(),
    }


def run_semicircle(dims: Iterable[int], seeds: Sequence[int]) -> list[dict]:
    tasks = sorted({(n, s) for n in dims for s in seeds})
    return run_pool(semicircle_trial, tasks)


def summarize_semicircle(rows: Sequence[dict], tol: float = 0.05) -> list[dict]:
    out = []
    for n in sorted({r["n"] for r in rows}):
        devs = [r["deviation"] for r in rows if r["n"] == n]
        fm = [r["f_mean"] for r in rows if r["n"] == n]
        out.append({
            "n": n,
            "trials": len(devs),
            "mean_f_mean": math.fsum(fm) / len(fm),
            "reference": SEMICIRCLE_F_MEAN,
            "fraction_within_tol": sum(d < tol for d in devs) / len(devs),
        })
    return out


def semicircle_text(rows: Sequence[dict], summary: Sequence[dict]) -> str:
    lines = []
    for s in summary:
        lines.append(f"n={s['n']:>4} trials={s['trials']:>3}  <L_X, f> mean={s['mean_f_mean']:.5f}"
                     f"  reference 8/(3pi)={s['reference']:.5f}"
                     f"  within 0.05: {100 * s['fraction_within_tol']:.0f}%")
        first = next(r for r in rows if r["n"] == s["n"])
        peak = max(first["counts"]) or 1
        for k, c in enumerate(first["counts"]):
            lo = HIST_LO + k * HIST_WIDTH
            if c:
                lines.append(f"  {lo:+.2f} {'#' * max(1, round(40 * c / peak))} {c}")
    return "\n".join(lines) + "\n"


def semicircle_csv(rows: Sequence[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("n", "seed", "bin_lo", "bin_hi", "count"))
    for r in rows:
        for k, c in enumerate(r["counts"]):
            lo = round(HIST_LO + k * HIST_WIDTH, 10)
            w.writerow((r["n"], r["seed"], lo, round(lo + HIST_WIDTH, 10), c))
    return buf.getvalue()


# -- decomposition I/O ------------------------------------------------------------

def diagonal_to_dict(D: BlockDiagonal) -> dict:
    return block_matrix_to_dict(D.to_block_matrix())


def decomposition_to_dict(dec: SchurDecomposition, checks: dict | None = None) -> dict:
    out = {
        "mode": dec.mode,
        "left": diagonal_to_dict(dec.left),
        "middle": block_matrix_to_dict(dec.middle),
        "right": diagonal_to_dict(dec.right),
        "diagnostics": dec.diagnostics(),
    }
    if checks is not None:
        out["checks"] = checks
    return out


def read_pair(docs: Sequence[object]) -> tuple[BlockMatrix, BlockMatrix]:
    """Accept ``[A, B]``, ``{"A": ..., "B": ...}`` or two separate documents."""
    if len(docs) == 1:
        d = docs[0]
        if isinstance(d, list) and len(d) == 2:
            docs = d
        elif isinstance(d, dict) and "A" in d and "B" in d:
            docs = [d["A"], d["B"]]
        else:
            raise ValueError("expected a pair of block matrices")
    if len(docs) != 2:
        raise ValueError(f"expected two block matrices, got {len(docs)}")
    return block_matrix_from_dict(docs[0]), block_matrix_from_dict(docs[1])


def random_pair(n: int, h: int, seed: int, tensor: bool) -> tuple[BlockMatrix, BlockMatrix]:
    """Synthetic complex inputs: uniform ``h x h`` blocks, or dims in ``1..h`` for ⊠."""
    rng = np.random.default_rng(seed)
    if not tensor:
        return (BlockMatrix.random(rng, [h] * n, [h] * n),
                BlockMatrix.random(rng, [h] * n, [h] * n))
    f, e, l, k = (rng.integers(1, h + 1, size=n).tolist() for _ in range(4))
    return BlockMatrix.random(rng, f, e), BlockMatrix.random(rng, l, k)


def jsonl(rows: Iterable[dict]) -> str:
    return "".join(json.dumps(r) + "\n" for r in rows)
