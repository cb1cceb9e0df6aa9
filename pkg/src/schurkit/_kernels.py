"""Hot loops of the allocation solver, in a numba and a pure-numpy flavour.

The numba kernels are used when numba imports and ``SCHURKIT_NO_NUMBA`` is
unset (or ``0``).  Both flavours implement the same arithmetic; the test-suite
runs them against each other.

Notation: ``w[i, j] = |t_ji|^2`` are the objective weights and ``b`` is the
allocation matrix whose columns live on the unit simplex.
"""
from __future__ import annotations

import os

import numpy as np

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

_DISABLED = os.environ.get("SCHURKIT_NO_NUMBA", "0").strip().lower() not in ("", "0", "false")
HAVE_NUMBA = numba is not None
BACKEND = "numba" if HAVE_NUMBA and not _DISABLED else "numpy"


# -- pure numpy ---------------------------------------------------------------

def _bb_step(s, y, gmax, fallback):
    """Barzilai-Borwein trial step, in units of the max-abs-normalized gradient.

    For ascent on a concave function ``<s, y> < 0``; otherwise fall back.
    """
    sy = np.sum(s * y)
    if not sy < 0.0:
        return fallback
    return min(max(gmax * np.sum(s * s) / -sy, 1e-10), 1e10)


def project_columns_np(Y: np.ndarray) -> np.ndarray:
    """Euclidean projection of every column onto ``{x >= 0, sum(x) = 1}``."""
    n = Y.shape[0]
    U = -np.sort(-Y, axis=0)
    css = np.cumsum(U, axis=0) - 1.0
    ind = np.arange(1, n + 1, dtype=Y.dtype)[:, None]
    rho = np.count_nonzero(U - css / ind > 0, axis=0) - 1
    cols = np.arange(Y.shape[1])
    theta = css[rho, cols] / (rho + 1)
    return np.maximum(Y - theta, 0.0)


def objective_np(w: np.ndarray, b: np.ndarray) -> float:
    return float(np.sqrt((w * b).sum(axis=1)).sum())


def gradient_np(w: np.ndarray, b: np.ndarray, floor: float) -> np.ndarray:
    rows = (w * b).sum(axis=1)
    return w / (2.0 * np.sqrt(rows + floor))[:, None]


def ascent_np(w, b0, max_iter, tol, floor, step0, shrink, armijo, min_step):
    b = project_columns_np(b0)
    f = objective_np(w, b)
    g = gradient_np(w, b, floor)
    trial = step0
    hist = [f]
    converged = False
    it = 0
    while it < max_iter:
        it += 1
        gmax = np.abs(g).max()
        if gmax == 0.0:
            converged = True
            break
        d = g / gmax
        t = trial
        accepted = False
        while t >= min_step:
            cand = project_columns_np(b + t * d)
            fc = objective_np(w, cand)
            if fc >= f + armijo * float((g * (cand - b)).sum()):
                accepted = True
                break
            t *= shrink
        if not accepted:
            converged = True
            break
        gc = gradient_np(w, cand, floor)
        trial = _bb_step(cand - b, gc - g, np.abs(gc).max(), step0)
        gain = fc - f
        b, f, g = cand, fc, gc
        hist.append(f)
        if gain <= tol * max(abs(f), 1e-300):
            converged = True
            break
    return b, f, it, converged, np.array(hist)


# -- numba --------------------------------------------------------------------

def _project_columns_loop(Y):
    n, m = Y.shape
    out = np.empty_like(Y)
    for j in range(m):
        u = np.sort(Y[:, j])[::-1]
        css = 0.0
        theta = 0.0
        for k in range(n):
            css += u[k]
            t = (css - 1.0) / (k + 1)
            if u[k] - t > 0:
                theta = t
        for i in range(n):
            v = Y[i, j] - theta
            out[i, j] = v if v > 0.0 else 0.0
    return out


def _objective_loop(w, b):
    n, m = w.shape
    total = 0.0
    for i in range(n):
        s = 0.0
        for j in range(m):
            s += w[i, j] * b[i, j]
        total += np.sqrt(s)
    return total


def _gradient_loop(w, b, floor):
    n, m = w.shape
    g = np.empty_like(w)
    for i in range(n):
        s = 0.0
        for j in range(m):
            s += w[i, j] * b[i, j]
        inv = 1.0 / (2.0 * np.sqrt(s + floor))
        for j in range(m):
            g[i, j] = w[i, j] * inv
    return g


if HAVE_NUMBA:
    _jit = numba.njit(cache=True, nogil=True)
    project_columns_nb = _jit(_project_columns_loop)
    bb_step_nb = _jit(_bb_step)
    objective_nb = _jit(_objective_loop)
    gradient_nb = _jit(_gradient_loop)

    @numba.njit(cache=True, nogil=True)
    def ascent_nb(w, b0, max_iter, tol, floor, step0, shrink, armijo, min_step):
        b = project_columns_nb(b0)
        f = objective_nb(w, b)
        g = gradient_nb(w, b, floor)
        trial = step0
        hist = np.empty(max_iter + 1)
        hist[0] = f
        nacc = 1
        converged = False
        it = 0
        while it < max_iter:
            it += 1
            gmax = np.abs(g).max()
            if gmax == 0.0:
                converged = True
                break
            d = g / gmax
            t = trial
            accepted = False
            cand = b
            fc = f
            while t >= min_step:
                cand = project_columns_nb(b + t * d)
                fc = objective_nb(w, cand)
                if fc >= f + armijo * np.sum(g * (cand - b)):
                    accepted = True
                    break
                t *= shrink
            if not accepted:
                converged = True
                break
            gc = gradient_nb(w, cand, floor)
            trial = bb_step_nb(cand - b, gc - g, np.abs(gc).max(), step0)
            gain = fc - f
            b = cand
            f = fc
            g = gc
            hist[nacc] = f
            nacc += 1
            if gain <= tol * max(abs(f), 1e-300):
                converged = True
                break
        return b, f, it, converged, hist[:nacc].copy()
else:  # pragma: no cover
    project_columns_nb = objective_nb = gradient_nb = ascent_nb = None


_TABLE = {
    "numpy": (project_columns_np, objective_np, gradient_np, ascent_np),
    "numba": (project_columns_nb, objective_nb, gradient_nb, ascent_nb),
}


def kernels(backend: str | None = None):
    """Return ``(project_columns, objective, gradient, ascent)`` for a backend."""
    backend = backend or BACKEND
    if backend == "numba" and not HAVE_NUMBA:
        raise RuntimeError("numba backend requested but numba is not installed")
    if backend not in _TABLE:
        raise ValueError(f"unknown backend {backend!r}")
    return _TABLE[backend]


project_columns, objective_kernel, gradient_kernel, ascent = kernels()
